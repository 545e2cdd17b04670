//! Copulas of distributions on `N x N`, approximated by truncation.
//!
//! A pair `(X, Y)` on the nonnegative integers is replaced by
//! `(min(X, N-1), min(Y, N-1))`. The copula pmf of the truncated pair, drawn
//! on an `N x N` grid with cell area `1/N^2`, approximates a copula density.

use ndarray::Array2;
use statrs::distribution::{Discrete, Poisson};

use crate::bernoulli::ExtendedOddsRatio;
use crate::dependence::yule_upsilon;
use crate::error::{Error, Result};
use crate::families::truncated_geometric_copula;
use crate::pmf::{JointPmf, MarginPair};
use crate::scaling::{copula_pmf, couple, IpfOptions};

/// Copula-density heights on an `N x N` grid.
///
/// Cell `(u, v)` holds `N^2` times the copula pmf mass of that cell, the
/// average density over `[u/N, (u+1)/N) x [v/N, (v+1)/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    heights: Array2<f64>,
}

impl DensityGrid {
    /// Scales a square copula pmf to densities.
    pub fn from_copula(cop: &JointPmf) -> Result<Self> {
        let (r, s) = cop.shape();
        if r != s {
            return Err(Error::DimensionMismatch {
                left: (r, r),
                right: (r, s),
            });
        }
        let scale = (r * r) as f64;
        Ok(Self {
            heights: cop.values().mapv(|p| p * scale),
        })
    }

    pub fn n(&self) -> usize {
        self.heights.nrows()
    }

    pub fn heights(&self) -> &Array2<f64> {
        &self.heights
    }

    /// The copula pmf behind the grid.
    pub fn to_copula(&self) -> JointPmf {
        let scale = (self.n() * self.n()) as f64;
        JointPmf::from_array_unchecked(self.heights.mapv(|h| h / scale))
    }

    /// `(1/N^2) * sum of heights`, one for every valid grid.
    pub fn integral(&self) -> f64 {
        self.heights.sum() / (self.n() * self.n()) as f64
    }

    /// Plotting position `((u+1)/(N+1), (v+1)/(N+1))` of cell `(u, v)`.
    pub fn cell_center(&self, u: usize, v: usize) -> (f64, f64) {
        let d = (self.n() + 1) as f64;
        ((u + 1) as f64 / d, (v + 1) as f64 / d)
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().copied().fold(0.0, f64::max)
    }
}

fn poisson(lambda: f64) -> Result<Poisson> {
    Poisson::new(lambda).map_err(|e| Error::Param(format!("poisson rate {lambda}: {e}")))
}

/// `ln P(Z >= k)` for `Z ~ Poisson(lambda)`, accurate deep in the tail.
fn ln_upper_tail(dist: &Poisson, lambda: f64, k: i64) -> f64 {
    if k <= 0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    // P(Z >= k) = P(Z = k) * sum_j lambda^j k! / (k + j)!
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 1u64;
    while term > 1e-17 * sum && j < 100_000 {
        term *= lambda / (k + j) as f64;
        sum += term;
        j += 1;
    }
    dist.ln_pmf(k) + sum.ln()
}

fn ln_point(dist: &Poisson, lambda: f64, k: i64) -> f64 {
    if k < 0 {
        f64::NEG_INFINITY
    } else if lambda == 0.0 {
        if k == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        dist.ln_pmf(k as u64)
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Log masses of the truncated bivariate Poisson on `N x N`.
fn bivariate_poisson_ln_pmf(l10: f64, l01: f64, l11: f64, n: usize) -> Result<Array2<f64>> {
    for (name, v, min) in [("lambda10", l10, f64::MIN_POSITIVE), ("lambda01", l01, f64::MIN_POSITIVE), ("lambda11", l11, 0.0)] {
        if !(v.is_finite() && v >= min) {
            return Err(Error::Param(format!("{name} out of range: {v}")));
        }
    }
    if n < 2 {
        return Err(Error::TooSmall { rows: n, cols: n });
    }
    let d10 = poisson(l10)?;
    let d01 = poisson(l01)?;
    // statrs rejects a zero rate; the common shock is then identically 0
    let d11 = poisson(l11.max(f64::MIN_POSITIVE))?;
    let z11 = |i: i64| ln_point(&d11, l11, i);
    let last = (n - 1) as i64;
    let out = Array2::from_shape_fn((n, n), |(x, y)| {
        let (x, y) = (x as i64, y as i64);
        match (x == last, y == last) {
            (false, false) => log_sum_exp(
                (0..=x.min(y)).map(|i| z11(i) + ln_point(&d10, l10, x - i) + ln_point(&d01, l01, y - i)),
            ),
            // X >= last: Z10 >= last - i
            (true, false) => log_sum_exp(
                (0..=y).map(|i| z11(i) + ln_point(&d01, l01, y - i) + ln_upper_tail(&d10, l10, last - i)),
            ),
            (false, true) => log_sum_exp(
                (0..=x).map(|i| z11(i) + ln_point(&d10, l10, x - i) + ln_upper_tail(&d01, l01, last - i)),
            ),
            (true, true) => log_sum_exp(
                (0..last)
                    .map(|i| z11(i) + ln_upper_tail(&d10, l10, last - i) + ln_upper_tail(&d01, l01, last - i))
                    .chain(std::iter::once(ln_upper_tail(&d11, l11, last))),
            ),
        }
    });
    Ok(out)
}

/// Truncated bivariate Poisson `(Z10 + Z11, Z01 + Z11)` with independent
/// Poisson components; the last row and column collect the tails.
pub fn bivariate_poisson_pmf(l10: f64, l01: f64, l11: f64, n: usize) -> Result<JointPmf> {
    let ln = bivariate_poisson_ln_pmf(l10, l01, l11, n)?;
    let values = ln.mapv(f64::exp);
    let total = values.sum();
    JointPmf::from_weights(values.mapv(|v| v / total))
}

/// Poisson(`lambda`) probabilities on `{0, ..., N-1}` with the tail folded
/// into the last cell.
pub fn truncated_poisson(lambda: f64, n: usize) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Param(format!("poisson rate must be positive, got {lambda}")));
    }
    if n < 2 {
        return Err(Error::TooSmall { rows: n, cols: 1 });
    }
    let d = poisson(lambda)?;
    let mut p: Vec<f64> = (0..n - 1).map(|k| d.ln_pmf(k as u64).exp()).collect();
    p.push(ln_upper_tail(&d, lambda, (n - 1) as i64).exp());
    Ok(p)
}

/// Smallest `N` with `P(Z > N - 1) < epsilon` for `Z ~ Poisson(lambda)`.
pub fn poisson_truncation_level(lambda: f64, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Param(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let d = poisson(lambda)?;
    let mut n = 2usize;
    while ln_upper_tail(&d, lambda, n as i64) >= epsilon.ln() {
        n += 1;
    }
    Ok(n)
}

/// Copula-density grid of the bivariate Poisson with `lambda10 = lambda01 = 1`
/// and `lambda11 = omega`.
///
/// `omega` is the only parameter the dependence structure depends on. The
/// truncation level is `N`, raised if needed until both marginal tails beyond
/// it hold less than `epsilon`.
pub fn poisson_copula_grid(omega: f64, n: usize, epsilon: f64, opts: &IpfOptions) -> Result<DensityGrid> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::Param(format!("omega must be finite and nonnegative, got {omega}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1e-6) {
        return Err(Error::Param(format!("epsilon must lie in (0, 1e-6], got {epsilon}")));
    }
    let level = n.max(poisson_truncation_level(1.0 + omega, epsilon)?);
    let ln = bivariate_poisson_ln_pmf(1.0, 1.0, omega, level)?;
    let seed = balance_log_weights(ln, 200);
    let (cop, _) = copula_pmf(&JointPmf::from_weights(seed)?, opts)?;
    DensityGrid::from_copula(&cop)
}

/// Coarse uniform-margin balancing in log scale, so that exponentiating does
/// not underflow the far tail.
fn balance_log_weights(mut ln: Array2<f64>, sweeps: usize) -> Array2<f64> {
    let (r, s) = ln.dim();
    let (lr, ls) = (-(r as f64).ln(), -(s as f64).ln());
    for _ in 0..sweeps {
        let mut worst = 0.0f64;
        for mut row in ln.outer_iter_mut() {
            let shift = lr - log_sum_exp(row.iter().copied());
            worst = worst.max(shift.abs());
            row.mapv_inplace(|v| v + shift);
        }
        for mut col in ln.columns_mut() {
            let shift = ls - log_sum_exp(col.iter().copied());
            worst = worst.max(shift.abs());
            col.mapv_inplace(|v| v + shift);
        }
        if worst < 1e-3 {
            break;
        }
    }
    ln.mapv(f64::exp)
}

/// `|Υ(2N) - Υ(N)|` for the Poisson copula pmf, a self-convergence check of
/// the truncation.
pub fn poisson_truncation_drift(omega: f64, n: usize, epsilon: f64, opts: &IpfOptions) -> Result<f64> {
    let a = yule_upsilon(&poisson_copula_grid(omega, n, epsilon, opts)?.to_copula())?;
    let b = yule_upsilon(&poisson_copula_grid(omega, 2 * n, epsilon, opts)?.to_copula())?;
    Ok((b - a).abs())
}

/// Copula-density grid of the standard truncated Geometric(N) family.
pub fn geometric_copula_grid(omega: ExtendedOddsRatio, n: usize, opts: &IpfOptions) -> Result<DensityGrid> {
    DensityGrid::from_copula(&truncated_geometric_copula(n, omega, opts)?)
}

/// Gives an `N x N` copula pmf two truncated countable margins.
pub fn couple_countable_margins(
    margin_x: &[f64],
    margin_y: &[f64],
    copula: &JointPmf,
    opts: &IpfOptions,
) -> Result<JointPmf> {
    let targets = MarginPair::normalized(margin_x.to_vec(), margin_y.to_vec())?;
    if targets.shape() != copula.shape() {
        return Err(Error::DimensionMismatch {
            left: copula.shape(),
            right: targets.shape(),
        });
    }
    Ok(couple(copula, &targets, opts)?.0)
}
