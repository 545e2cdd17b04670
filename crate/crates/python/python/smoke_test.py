"""Smoke test for the dcopula_py extension.

Uses an installed module if there is one, otherwise the library built by
`cargo build -p dcopula-py` in the workspace target directory.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys


def load():
    try:
        import dcopula_py

        return dcopula_py
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[3]
    for profile in ("release", "debug"):
        lib = root / "target" / profile / "libdcopula_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("dcopula_py", str(lib))
            spec = importlib.util.spec_from_file_location("dcopula_py", str(lib), loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("dcopula_py not found; run `cargo build -p dcopula-py` first")


def close(a, b, tol):
    return all(abs(x - y) <= tol for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def main():
    dc = load()

    lin = dc.JointPmf.from_counts([[26, 1], [5, 18]])
    w = lin.odds_ratios()[0][0]
    assert abs(w - 93.6) < 1e-9, w
    cop, diag = lin.copula()
    assert diag["class"] == "A" and diag["margin_error"] <= 1e-12
    assert abs(cop.upsilon() - 0.8126) < 5e-4
    table = cop.couple([0.475, 0.525], [0.603, 0.397])
    assert close(table.values(), [[0.462, 0.013], [0.141, 0.383]], 1e-3)

    graubard = dc.JointPmf.from_counts([[17066, 14464, 788, 126, 37], [48, 38, 5, 1, 1]])
    cop, _ = graubard.copula()
    assert abs(cop.upsilon() - 0.358) < 1e-3
    assert cop.confetti_svg().count("<circle") == 17

    assert dc.bernoulli_copula(math.inf).values() == [[0.5, 0.0], [0.0, 0.5]]
    assert close(dc.goodman_copula(3, 3, 1.0).values(), [[1 / 9] * 3] * 3, 1e-15)
    geo = dc.geometric_copula(3, 0.0)
    assert abs(geo.upsilon() + 0.5) < 1e-10
    assert dc.discretize_copula("gaussian:rho=-0.8", 5, 5).shape == (5, 5)
    grid = dc.poisson_copula_grid(0.0, 8)
    assert all(abs(h - 1) < 1e-6 for row in grid for h in row)

    blocked = dc.JointPmf([[0, 0, 0.2], [0, 0, 0.2], [0.2, 0.2, 0.2]])
    assert blocked.classify() == "C"
    try:
        blocked.copula()
    except dc.InfeasibleError:
        pass
    else:
        raise AssertionError("class C must raise")
    try:
        dc.JointPmf([[0.5, 0.5], [0.5]])
    except dc.DcopulaError:
        pass
    else:
        raise AssertionError("ragged rows must raise")

    print("smoke test passed")


if __name__ == "__main__":
    main()
