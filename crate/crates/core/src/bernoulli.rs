//! Closed forms for 2x2 tables.
//!
//! A 2x2 table `[[p00, p01], [p10, p11]]` has a single odds ratio
//! `omega = p00 p11 / (p01 p10)`, which determines its copula pmf.

use std::fmt;

use ndarray::{array, Array2};

use crate::error::{Error, Result};
use crate::pmf::JointPmf;

/// Odds ratio in `[0, inf]`, with infinity represented explicitly.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtendedOddsRatio(f64);

impl ExtendedOddsRatio {
    pub const ZERO: Self = Self(0.0);
    pub const ONE: Self = Self(1.0);
    pub const INFINITY: Self = Self(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Domain(format!("odds ratio must lie in [0, inf], got {value}")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1 / omega`, mapping 0 and infinity onto each other.
    pub fn recip(self) -> Self {
        Self(1.0 / self.0)
    }
}

impl fmt::Display for ExtendedOddsRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for ExtendedOddsRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(Self::INFINITY),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("'{t}' is not an odds ratio")))
                .and_then(Self::new),
        }
    }
}

fn require_2x2(p: &JointPmf) -> Result<()> {
    if p.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            left: (2, 2),
            right: p.shape(),
        });
    }
    Ok(())
}

/// `p00 p11 / (p01 p10)`, with `0` for a null numerator and infinity for a
/// null denominator.
pub fn odds_ratio(p: &JointPmf) -> Result<ExtendedOddsRatio> {
    require_2x2(p)?;
    let num = p.get(0, 0) * p.get(1, 1);
    let den = p.get(0, 1) * p.get(1, 0);
    // positive margins rule out 0/0
    Ok(ExtendedOddsRatio(if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }))
}

/// Yule's colligation coefficient `(sqrt(omega) - 1) / (sqrt(omega) + 1)`.
pub fn upsilon_from_omega(omega: ExtendedOddsRatio) -> f64 {
    if omega.is_infinite() {
        return 1.0;
    }
    let r = omega.0.sqrt();
    (r - 1.0) / (r + 1.0)
}

/// The unique 2x2 copula pmf with odds ratio `omega`.
///
/// Diagonal cells hold `sqrt(omega) / (2 (1 + sqrt(omega)))` and off-diagonal
/// cells `1 / (2 (1 + sqrt(omega)))`.
pub fn bernoulli_copula(omega: ExtendedOddsRatio) -> JointPmf {
    let off = if omega.is_infinite() {
        0.0
    } else {
        0.5 / (1.0 + omega.0.sqrt())
    };
    let diag = 0.5 - off;
    JointPmf::from_array_unchecked(array![[diag, off], [off, diag]])
}

/// The 2x2 table with odds ratio `omega`, `P(X = 1) = pi_x` and
/// `P(Y = 1) = pi_y`.
pub fn reconstruct(omega: ExtendedOddsRatio, pi_x: f64, pi_y: f64) -> Result<JointPmf> {
    for (name, v) in [("pi_x", pi_x), ("pi_y", pi_y)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Domain(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    let w = omega.value();
    if w == 0.0 || w.is_infinite() {
        let p11 = p11_from_omega(omega, pi_x, pi_y);
        let p10 = (pi_x - p11).max(0.0);
        let p01 = (pi_y - p11).max(0.0);
        let p00 = (1.0 - pi_x - pi_y + p11).max(0.0);
        return Ok(JointPmf::from_array_unchecked(array![[p00, p01], [p10, p11]]));
    }
    // Relabeling a category turns every cell into the (1, 1) cell of a table
    // with odds ratio omega or 1/omega, so each cell is solved directly
    // instead of being obtained by subtraction.
    let inv = omega.recip();
    let p11 = p11_from_omega(omega, pi_x, pi_y);
    let p10 = p11_from_omega(inv, pi_x, 1.0 - pi_y);
    let p01 = p11_from_omega(inv, 1.0 - pi_x, pi_y);
    let p00 = p11_from_omega(omega, 1.0 - pi_x, 1.0 - pi_y);
    Ok(JointPmf::from_array_unchecked(array![[p00, p01], [p10, p11]]))
}

/// Root of `(omega - 1) p^2 - (1 + (omega - 1)(pi_x + pi_y)) p + omega pi_x pi_y = 0`
/// lying in the feasible interval.
fn p11_from_omega(omega: ExtendedOddsRatio, pi_x: f64, pi_y: f64) -> f64 {
    let w = omega.0;
    if w == 0.0 {
        return (pi_x + pi_y - 1.0).max(0.0);
    }
    if w.is_infinite() {
        return pi_x.min(pi_y);
    }
    let a = w - 1.0;
    let sum = pi_x + pi_y;
    let b = (1.0 - sum) + w * sum;
    let c = w * pi_x * pi_y;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    if b >= 0.0 {
        2.0 * c / (b + disc)
    } else {
        // only reachable with a < 0, where both terms share a sign
        (b - disc) / (2.0 * a)
    }
}

/// Kendall's tau-b of a 2x2 table.
pub fn tau_b_2x2(p: &JointPmf) -> Result<f64> {
    require_2x2(p)?;
    let r = p.row_sums();
    let c = p.col_sums();
    Ok((p.get(0, 0) - r[0] * c[0]) / (r[0] * c[0] * r[1] * c[1]).sqrt())
}

/// Entrywise product of two tables, renormalized.
pub fn perturb(p: &JointPmf, q: &JointPmf) -> Result<JointPmf> {
    if p.shape() != q.shape() {
        return Err(Error::DimensionMismatch {
            left: p.shape(),
            right: q.shape(),
        });
    }
    let prod: Array2<f64> = p.values() * q.values();
    let total = prod.sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("entrywise product has zero mass".into()));
    }
    JointPmf::new(prod.mapv(|v| v / total))
        .map_err(|e| Error::Degenerate(format!("perturbed table is not a pmf: {e}")))
}

/// The table whose perturbation multiplies row 1 by `phi`.
pub fn row_distortion_pmf(phi: f64) -> Result<JointPmf> {
    check_factor(phi)?;
    let z = 2.0 * (1.0 + phi);
    Ok(JointPmf::from_array_unchecked(array![[1.0 / z, 1.0 / z], [phi / z, phi / z]]))
}

/// The table whose perturbation multiplies column 1 by `psi`.
pub fn col_distortion_pmf(psi: f64) -> Result<JointPmf> {
    check_factor(psi)?;
    let z = 2.0 * (1.0 + psi);
    Ok(JointPmf::from_array_unchecked(array![[1.0 / z, psi / z], [1.0 / z, psi / z]]))
}

fn check_factor(f: f64) -> Result<()> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::Domain(format!("distortion factor must be positive, got {f}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::apply_marginal_distortion;

    fn om(v: f64) -> ExtendedOddsRatio {
        ExtendedOddsRatio::new(v).unwrap()
    }

    #[test]
    fn lin_example() {
        let p = JointPmf::from_rows(&[[0.52, 0.02], [0.10, 0.36]]).unwrap();
        let w = odds_ratio(&p).unwrap();
        assert!((w.value() - 93.6).abs() < 1e-12);
        assert!((upsilon_from_omega(w) - 0.813).abs() < 5e-4);
        let c = bernoulli_copula(w);
        assert!((c.get(0, 0) - 0.453).abs() < 5e-4);
        assert!((c.get(1, 0) - 0.047).abs() < 5e-4);
    }

    #[test]
    fn boundary_odds() {
        let m = JointPmf::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert!(odds_ratio(&m).unwrap().is_infinite());
        assert_eq!(upsilon_from_omega(ExtendedOddsRatio::ZERO), -1.0);
        assert_eq!(upsilon_from_omega(ExtendedOddsRatio::ONE), 0.0);
        assert_eq!(upsilon_from_omega(ExtendedOddsRatio::INFINITY), 1.0);
        assert_eq!(
            bernoulli_copula(ExtendedOddsRatio::ZERO).values(),
            &array![[0.0, 0.5], [0.5, 0.0]]
        );
        assert_eq!(
            bernoulli_copula(ExtendedOddsRatio::INFINITY).values(),
            &array![[0.5, 0.0], [0.0, 0.5]]
        );
        assert!(bernoulli_copula(ExtendedOddsRatio::ONE).values().iter().all(|v| *v == 0.25));
    }

    #[test]
    fn reconstruct_lin() {
        let p = reconstruct(om(93.6), 0.397, 0.525).unwrap();
        assert!((p.get(1, 1) - 0.383).abs() < 1e-3);
        assert!((p.get(0, 0) - 0.462).abs() < 1e-3);
        assert!((p.get(1, 0) - 0.013).abs() < 1e-3);
        assert!((p.get(0, 1) - 0.141).abs() < 1e-3);
        assert!((odds_ratio(&p).unwrap().value() - 93.6).abs() < 1e-8);
    }

    #[test]
    fn reconstruct_degenerate() {
        let p = reconstruct(ExtendedOddsRatio::ZERO, 0.3, 0.4).unwrap();
        let expect = array![[0.3, 0.4], [0.3, 0.0]];
        for (a, b) in p.values().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        let q = reconstruct(ExtendedOddsRatio::ZERO, 0.7, 0.6).unwrap();
        assert!((q.get(0, 0)).abs() < 1e-15);
        assert!((q.get(1, 1) - 0.3).abs() < 1e-15);
        let r = reconstruct(ExtendedOddsRatio::INFINITY, 0.3, 0.4).unwrap();
        assert!((r.get(1, 0)).abs() < 1e-15);
        assert!((r.get(1, 1) - 0.3).abs() < 1e-15);
        assert!((r.get(0, 1) - 0.1).abs() < 1e-15);
        let i = reconstruct(ExtendedOddsRatio::ONE, 0.3, 0.4).unwrap();
        assert!((i.get(1, 1) - 0.12).abs() < 1e-15);
        assert!(reconstruct(ExtendedOddsRatio::ONE, 0.0, 0.4).is_err());
        assert!(reconstruct(ExtendedOddsRatio::ONE, 0.5, 1.0).is_err());
    }

    #[test]
    fn reconstruct_extreme_omega_is_accurate() {
        for &(w, px, py) in &[(1e8, 0.3, 0.6), (1e-8, 0.7, 0.8), (1e8, 0.9, 0.95), (0.001, 0.99, 0.99)] {
            let p = reconstruct(om(w), px, py).unwrap();
            let got = p.get(0, 0) * p.get(1, 1) / (p.get(0, 1) * p.get(1, 0));
            assert!((got / w - 1.0).abs() < 1e-7, "omega {w}: {got}");
            let m = p.margins();
            assert!((m.rows()[1] - px).abs() < 1e-12);
            assert!((m.cols()[1] - py).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_b_equals_upsilon_on_copulas() {
        for w in [0.0, 0.01, 0.5, 1.0, 3.0, 93.6, 1e6, f64::INFINITY] {
            let c = bernoulli_copula(om(w));
            let t = tau_b_2x2(&c).unwrap();
            assert!((t - upsilon_from_omega(om(w))).abs() < 1e-12, "omega {w}");
        }
        let prod = JointPmf::from_rows(&[[0.12, 0.28], [0.18, 0.42]]).unwrap();
        assert!(tau_b_2x2(&prod).unwrap().abs() < 1e-15);
    }

    #[test]
    fn perturbation_identities() {
        let p = JointPmf::from_rows(&[[0.1, 0.2], [0.3, 0.4]]).unwrap();
        let q = JointPmf::from_rows(&[[0.4, 0.1], [0.25, 0.25]]).unwrap();
        let neutral = bernoulli_copula(ExtendedOddsRatio::ONE);
        assert!(perturb(&p, &neutral).unwrap().max_abs_diff(&p).unwrap() < 1e-15);
        let pq = perturb(&p, &q).unwrap();
        let qp = perturb(&q, &p).unwrap();
        assert!(pq.max_abs_diff(&qp).unwrap() < 1e-15);
        let (phi, psi) = (3.0, 0.2);
        let lhs = perturb(
            &perturb(&row_distortion_pmf(phi).unwrap(), &p).unwrap(),
            &col_distortion_pmf(psi).unwrap(),
        )
        .unwrap();
        let rhs = apply_marginal_distortion(&p, &[1.0, phi], &[1.0, psi]).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-14);
        let w = bernoulli_copula(ExtendedOddsRatio::ZERO);
        let m = bernoulli_copula(ExtendedOddsRatio::INFINITY);
        assert!(matches!(perturb(&w, &m), Err(Error::Degenerate(_))));
    }

    #[test]
    fn parse_odds() {
        assert!("inf".parse::<ExtendedOddsRatio>().unwrap().is_infinite());
        assert_eq!("2.5".parse::<ExtendedOddsRatio>().unwrap().value(), 2.5);
        assert!("-1".parse::<ExtendedOddsRatio>().is_err());
        assert_eq!(om(0.0).recip(), ExtendedOddsRatio::INFINITY);
    }
}
