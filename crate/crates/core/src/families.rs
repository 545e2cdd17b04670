//! Parametric copula pmfs.
//!
//! Two routes lead to a discrete copula pmf. A continuous copula can be
//! evaluated on a regular grid ([`discretize_copula`]). Alternatively a
//! bivariate discrete family (Binomial, truncated Geometric, Goodman) is
//! reduced to its odds-ratio matrix and rescaled to uniform margins.
//!
//! At the boundary values 0 and infinity of a family parameter the rescaled
//! tables are defined as limits; see [`boundary_limit_copula`].

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::factorial::{ln_factorial, multinomial};

use crate::bernoulli::{bernoulli_copula, ExtendedOddsRatio};
use crate::error::{Error, Result};
use crate::pmf::JointPmf;
use crate::quadrature::integrate;
use crate::scaling::{boundary_limit_copula, copula_pmf, IpfOptions};

/// Accuracy of the correlation integral behind the Gaussian copula.
const GAUSSIAN_TOL: f64 = 1e-12;
/// Accuracy of the conditional integral behind the Student copula.
const STUDENT_TOL: f64 = 1e-10;
/// Negative cell masses above this are rounding and get clamped to zero.
const NEGATIVE_SLACK: f64 = 1e-9;

/// A continuous bivariate copula with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuousCopula {
    Independence,
    /// Farlie-Gumbel-Morgenstern, `theta` in `[-1, 1]`.
    Fgm { theta: f64 },
    /// `theta >= -1`, `theta != 0`.
    Clayton { theta: f64 },
    /// `theta >= 1`.
    Gumbel { theta: f64 },
    /// `theta != 0`.
    Frank { theta: f64 },
    /// `rho` in `(-1, 1)`.
    Gaussian { rho: f64 },
    /// `rho` in `(-1, 1)`, `df > 0`.
    Student { rho: f64, df: f64 },
}

impl ContinuousCopula {
    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Param(msg));
        match *self {
            ContinuousCopula::Independence => Ok(()),
            ContinuousCopula::Fgm { theta } if !(-1.0..=1.0).contains(&theta) => {
                bad(format!("fgm theta must lie in [-1, 1], got {theta}"))
            }
            ContinuousCopula::Clayton { theta } if !(theta >= -1.0 && theta != 0.0 && theta.is_finite()) => {
                bad(format!("clayton theta must be >= -1 and nonzero, got {theta}"))
            }
            ContinuousCopula::Gumbel { theta } if !(theta >= 1.0 && theta.is_finite()) => {
                bad(format!("gumbel theta must be >= 1, got {theta}"))
            }
            ContinuousCopula::Frank { theta } if !(theta != 0.0 && theta.is_finite()) => {
                bad(format!("frank theta must be finite and nonzero, got {theta}"))
            }
            ContinuousCopula::Gaussian { rho } if !(rho > -1.0 && rho < 1.0) => {
                bad(format!("gaussian rho must lie in (-1, 1), got {rho}"))
            }
            ContinuousCopula::Student { rho, df } if !(rho > -1.0 && rho < 1.0 && df > 0.0 && df.is_finite()) => {
                bad(format!("student needs rho in (-1, 1) and df > 0, got rho={rho}, df={df}"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ContinuousCopula::Independence => "independence",
            ContinuousCopula::Fgm { .. } => "fgm",
            ContinuousCopula::Clayton { .. } => "clayton",
            ContinuousCopula::Gumbel { .. } => "gumbel",
            ContinuousCopula::Frank { .. } => "frank",
            ContinuousCopula::Gaussian { .. } => "gaussian",
            ContinuousCopula::Student { .. } => "student",
        }
    }

    /// `C(u, v)`; arguments are clamped to `[0, 1]`.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.cdf_unchecked(u, v))
    }

    fn cdf_unchecked(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        if u == 1.0 {
            return v;
        }
        if v == 1.0 {
            return u;
        }
        let c = match *self {
            ContinuousCopula::Independence => u * v,
            ContinuousCopula::Fgm { theta } => u * v * (1.0 + theta * (1.0 - u) * (1.0 - v)),
            ContinuousCopula::Clayton { theta } => {
                let base = u.powf(-theta) + v.powf(-theta) - 1.0;
                if base <= 0.0 {
                    0.0
                } else {
                    base.powf(-1.0 / theta)
                }
            }
            ContinuousCopula::Gumbel { theta } => {
                let s = (-u.ln()).powf(theta) + (-v.ln()).powf(theta);
                (-s.powf(1.0 / theta)).exp()
            }
            ContinuousCopula::Frank { theta } => {
                let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
                -(num / (-theta).exp_m1()).ln_1p() / theta
            }
            ContinuousCopula::Gaussian { rho } => gaussian_cdf(u, v, rho),
            ContinuousCopula::Student { rho, df } => student_cdf(u, v, rho, df),
        };
        c.clamp(0.0, u.min(v))
    }
}

impl fmt::Display for ContinuousCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ContinuousCopula::Independence => f.write_str("independence"),
            ContinuousCopula::Fgm { theta }
            | ContinuousCopula::Clayton { theta }
            | ContinuousCopula::Gumbel { theta }
            | ContinuousCopula::Frank { theta } => write!(f, "{}:theta={theta}", self.name()),
            ContinuousCopula::Gaussian { rho } => write!(f, "gaussian:rho={rho}"),
            ContinuousCopula::Student { rho, df } => write!(f, "student:rho={rho},df={df}"),
        }
    }
}

impl FromStr for ContinuousCopula {
    type Err = Error;

    /// Parses specs such as `clayton:theta=-0.8` or `student:rho=0.5,df=4`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let mut theta = None;
        let mut rho = None;
        let mut df = None;
        for kv in params.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Param(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Param(format!("'{v}' is not a number")))?;
            match k.trim() {
                "theta" => theta = Some(v),
                "rho" => rho = Some(v),
                "df" | "nu" => df = Some(v),
                other => return Err(Error::Param(format!("unknown parameter '{other}'"))),
            }
        }
        let need = |p: Option<f64>, what: &str| {
            p.ok_or_else(|| Error::Param(format!("{name} needs {what}=")))
        };
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "independence" | "product" => ContinuousCopula::Independence,
            "fgm" => ContinuousCopula::Fgm { theta: need(theta, "theta")? },
            "clayton" => ContinuousCopula::Clayton { theta: need(theta, "theta")? },
            "gumbel" => ContinuousCopula::Gumbel { theta: need(theta, "theta")? },
            "frank" => ContinuousCopula::Frank { theta: need(theta, "theta")? },
            "gaussian" | "normal" => ContinuousCopula::Gaussian { rho: need(rho, "rho")? },
            "student" | "t" => ContinuousCopula::Student {
                rho: need(rho, "rho")?,
                df: need(df, "df")?,
            },
            other => return Err(Error::Param(format!("unknown copula family '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Bivariate normal probability `P(Z1 <= h, Z2 <= k)` at the normal quantiles
/// of `u` and `v`, by integrating the density derivative along the
/// correlation.
fn gaussian_cdf(u: f64, v: f64, rho: f64) -> f64 {
    let n = std_normal();
    let h = n.inverse_cdf(u);
    let k = n.inverse_cdf(v);
    let integrand = |r: f64| {
        let q = 1.0 - r * r;
        (-(h * h - 2.0 * r * h * k + k * k) / (2.0 * q)).exp() / q.sqrt()
    };
    u * v + integrate(integrand, 0.0, rho, GAUSSIAN_TOL) / (2.0 * std::f64::consts::PI)
}

/// Bivariate t probability at the t quantiles of `u` and `v`.
///
/// Given `X = x`, the second coordinate is a scaled t variable with `df + 1`
/// degrees of freedom, so `C(u, v)` is the integral over `s` in `(0, u)` of
/// `P(V <= v | U = s)`.
fn student_cdf(u: f64, v: f64, rho: f64, df: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df).expect("validated df");
    let t1 = StudentsT::new(0.0, 1.0, df + 1.0).expect("validated df");
    let k = t.inverse_cdf(v);
    let conditional = |s: f64| {
        let x = t.inverse_cdf(s);
        let scale = ((1.0 - rho * rho) * (df + x * x) / (df + 1.0)).sqrt();
        t1.cdf((k - rho * x) / scale)
    };
    integrate(conditional, 0.0, u, STUDENT_TOL)
}

/// Cell masses of a continuous copula on the regular `R x S` grid.
pub fn discretize_copula(spec: &ContinuousCopula, rows: usize, cols: usize) -> Result<JointPmf> {
    spec.validate()?;
    if rows < 2 || cols < 2 {
        return Err(Error::TooSmall { rows, cols });
    }
    let grid = Array2::from_shape_fn((rows + 1, cols + 1), |(i, j)| {
        spec.cdf_unchecked(i as f64 / rows as f64, j as f64 / cols as f64)
    });
    let mut cells = Array2::zeros((rows, cols));
    for u in 0..rows {
        for v in 0..cols {
            let m = grid[[u + 1, v + 1]] - grid[[u, v + 1]] - grid[[u + 1, v]] + grid[[u, v]];
            if m < -NEGATIVE_SLACK {
                return Err(Error::Degenerate(format!(
                    "{spec} gives negative mass {m} in cell ({u}, {v})"
                )));
            }
            cells[[u, v]] = m.max(0.0);
        }
    }
    JointPmf::new(cells)
}

/// Discrete Farlie-Gumbel-Morgenstern copula pmf.
pub fn fgm_pmf(theta: f64, rows: usize, cols: usize) -> Result<JointPmf> {
    ContinuousCopula::Fgm { theta }.validate()?;
    if rows < 2 || cols < 2 {
        return Err(Error::TooSmall { rows, cols });
    }
    let (r, s) = (rows as f64, cols as f64);
    let values = Array2::from_shape_fn((rows, cols), |(u, v)| {
        let a = 1.0 - (2 * u + 1) as f64 / r;
        let b = 1.0 - (2 * v + 1) as f64 / s;
        (1.0 + theta * a * b) / (r * s)
    });
    JointPmf::new(values)
}

/// Multinomial coefficient `n! / (k! (x-k)! (y-k)! (n-x-y+k)!)`.
fn multinomial_term(n: usize, x: usize, y: usize, k: usize) -> f64 {
    let parts = [k as u64, (x - k) as u64, (y - k) as u64, (n + k - x - y) as u64];
    if n <= 30 {
        multinomial(n as u64, &parts)
    } else {
        ln_multinomial(n, &parts).exp()
    }
}

fn ln_multinomial(n: usize, parts: &[u64]) -> f64 {
    parts
        .iter()
        .fold(ln_factorial(n as u64), |acc, p| acc - ln_factorial(*p))
}

fn k_range(n: usize, x: usize, y: usize) -> std::ops::RangeInclusive<usize> {
    (x + y).saturating_sub(n)..=x.min(y)
}

/// Distribution of the componentwise sums of `n` independent draws from a
/// 2x2 table.
pub fn bivariate_binomial_pmf(n: usize, p2: &JointPmf) -> Result<JointPmf> {
    if n == 0 {
        return Err(Error::Param("n must be at least 1".into()));
    }
    if p2.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            left: (2, 2),
            right: p2.shape(),
        });
    }
    let (p00, p01, p10, p11) = (p2.get(0, 0), p2.get(0, 1), p2.get(1, 0), p2.get(1, 1));
    let values = Array2::from_shape_fn((n + 1, n + 1), |(x, y)| {
        k_range(n, x, y)
            .map(|k| {
                let e = [(n + k - x - y) as i32, (x - k) as i32, (y - k) as i32, k as i32];
                let mono = p00.powi(e[0]) * p10.powi(e[1]) * p01.powi(e[2]) * p11.powi(e[3]);
                if mono == 0.0 {
                    0.0
                } else {
                    multinomial_term(n, x, y, k) * mono
                }
            })
            .sum::<f64>()
    });
    let total = values.sum();
    JointPmf::new(values.mapv(|v| v / total))
}

/// Coefficient of `omega^k` in the odds ratio `omega_xy` of the Binomial(n)
/// family, in log scale.
fn ln_binomial_odds_coeff(n: usize, x: usize, y: usize, k: usize) -> f64 {
    let parts = [k as u64, (x - k) as u64, (y - k) as u64, (n + k - x - y) as u64];
    ln_multinomial(n, &parts)
        - ln_multinomial(n, &[x as u64, (n - x) as u64])
        - ln_multinomial(n, &[y as u64, (n - y) as u64])
}

/// Odds-ratio matrix of the Binomial(n) family at a finite positive `omega`.
pub fn binomial_odds_matrix(n: usize, omega: f64) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::Param("n must be at least 1".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Param(format!("omega must be finite and positive, got {omega}")));
    }
    let lw = omega.ln();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = (i + 1, j + 1);
        let terms: Vec<f64> = k_range(n, x, y)
            .map(|k| ln_binomial_odds_coeff(n, x, y, k) + k as f64 * lw)
            .collect();
        log_sum_exp(&terms).exp()
    }))
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Normalizes a positive weight table given in log scale and scales it to
/// uniform margins.
fn copula_from_log_weights(log_w: &Array2<f64>, opts: &IpfOptions) -> Result<JointPmf> {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = log_w.mapv(|l| (l - m).exp());
    Ok(copula_pmf(&JointPmf::from_weights(w)?, opts)?.0)
}

/// Copula pmf of the Binomial(n) family with Bernoulli odds ratio `omega`.
pub fn binomial_copula(n: usize, omega: ExtendedOddsRatio, opts: &IpfOptions) -> Result<JointPmf> {
    if n == 0 {
        return Err(Error::Param("n must be at least 1".into()));
    }
    let w = omega.value();
    let size = n + 1;
    if w == 0.0 || w.is_infinite() {
        // leading term: k = kmin as omega -> 0, k = kmax as omega -> inf
        let mut k = Array2::zeros((size, size));
        let mut e = Array2::zeros((size, size));
        for x in 0..size {
            for y in 0..size {
                let ks = k_range(n, x, y);
                let kk = if w == 0.0 { *ks.start() } else { *ks.end() };
                k[[x, y]] = ln_binomial_odds_coeff(n, x, y, kk).exp();
                e[[x, y]] = if w == 0.0 { kk as i64 } else { -(kk as i64) };
            }
        }
        return Ok(boundary_limit_copula(&k, &e, opts)?.0);
    }
    let lw = w.ln();
    let log_w = Array2::from_shape_fn((size, size), |(x, y)| {
        let terms: Vec<f64> = k_range(n, x, y)
            .map(|k| ln_binomial_odds_coeff(n, x, y, k) + k as f64 * lw)
            .collect();
        log_sum_exp(&terms)
    });
    copula_from_log_weights(&log_w, opts)
}

/// Exponents `(i, j, m)` of the cell `(x, y)` of the truncated Geometric pmf
/// written as `diag^i * off^j * margin^m`, where `diag` stands for `p00` or
/// `p11`, `off` for `p01` or `p10` and `margin` for a marginal probability.
fn geometric_cell_exponents(n: usize, x: usize, y: usize) -> (u32, u32, u32) {
    let last = n - 1;
    let (x32, y32, n32) = (x as u32, y as u32, n as u32);
    match (x == last, y == last) {
        (true, true) => (n32 - 1, 0, 0),
        (true, false) => (y32, 1, n32 - y32 - 2),
        (false, true) => (x32, 1, n32 - x32 - 2),
        (false, false) if x == y => (x32 + 1, 0, 0),
        (false, false) if x < y => (x32, 1, y32 - x32),
        (false, false) => (y32, 1, x32 - y32),
    }
}

/// The Geometric pair `(min(X, N-1), min(Y, N-1))` built from a 2x2 table.
///
/// `X` and `Y` count the trials before the first 1 in each coordinate of
/// repeated independent draws from `p2`.
pub fn truncated_geometric_pmf(n: usize, p2: &JointPmf) -> Result<JointPmf> {
    if n < 2 {
        return Err(Error::TooSmall { rows: n, cols: n });
    }
    if p2.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            left: (2, 2),
            right: p2.shape(),
        });
    }
    let (p00, p01, p10, p11) = (p2.get(0, 0), p2.get(0, 1), p2.get(1, 0), p2.get(1, 1));
    if p00 >= 1.0 {
        return Err(Error::Degenerate("p00 = 1 gives an infinite waiting time".into()));
    }
    let (row0, row1) = (p00 + p01, p10 + p11);
    let (col0, col1) = (p00 + p10, p01 + p11);
    let last = n - 1;
    let pw = |b: f64, e: usize| b.powi(e as i32);
    let values = Array2::from_shape_fn((n, n), |(x, y)| match (x == last, y == last) {
        (true, true) => pw(p00, last),
        (true, false) => pw(p00, y) * p01 * pw(row0, n - y - 2),
        (false, true) => pw(p00, x) * p10 * pw(col0, n - x - 2),
        (false, false) if x == y => pw(p00, x) * p11,
        (false, false) if x < y => pw(p00, x) * p10 * pw(col0, y - x - 1) * col1,
        (false, false) => pw(p00, y) * p01 * pw(row0, x - y - 1) * row1,
    });
    let total = values.sum();
    JointPmf::from_weights(values.mapv(|v| v / total))
}

/// Copula pmf of the standard truncated Geometric(N) family, whose base
/// table is the 2x2 copula pmf with odds ratio `omega`.
pub fn truncated_geometric_copula(
    n: usize,
    omega: ExtendedOddsRatio,
    opts: &IpfOptions,
) -> Result<JointPmf> {
    if n < 2 {
        return Err(Error::TooSmall { rows: n, cols: n });
    }
    let w = omega.value();
    if w == 0.0 || w.is_infinite() {
        // diag ~ sqrt(omega)/2 as omega -> 0 and off ~ 1/(2 sqrt(omega)) as
        // omega -> inf; everything else tends to 1/2
        let mut k = Array2::zeros((n, n));
        let mut e = Array2::zeros((n, n));
        for x in 0..n {
            for y in 0..n {
                let (i, j, m) = geometric_cell_exponents(n, x, y);
                k[[x, y]] = 0.5f64.powi((i + j + m) as i32);
                e[[x, y]] = if w == 0.0 { i as i64 } else { j as i64 };
            }
        }
        return Ok(boundary_limit_copula(&k, &e, opts)?.0);
    }
    let base = truncated_geometric_pmf(n, &bernoulli_copula(omega))?;
    Ok(copula_pmf(&base, opts)?.0)
}

/// Goodman `R x S` copula pmf, whose local odds ratios all equal `theta`.
pub fn goodman_copula(rows: usize, cols: usize, theta: ExtendedOddsRatio, opts: &IpfOptions) -> Result<JointPmf> {
    if rows < 2 || cols < 2 {
        return Err(Error::TooSmall { rows, cols });
    }
    let t = theta.value();
    if t == 0.0 || t.is_infinite() {
        let k = Array2::from_elem((rows, cols), 1.0);
        let sign = if t == 0.0 { 1 } else { -1 };
        let e = Array2::from_shape_fn((rows, cols), |(x, y)| sign * (x * y) as i64);
        return Ok(boundary_limit_copula(&k, &e, opts)?.0);
    }
    let lt = t.ln();
    let log_w = Array2::from_shape_fn((rows, cols), |(x, y)| (x * y) as f64 * lt);
    copula_from_log_weights(&log_w, opts)
}
