//! Margin-free dependence summaries of `R x S` tables.

use ndarray::Array2;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::pmf::JointPmf;

/// Margin deviation accepted by [`yule_upsilon`].
pub const COPULA_TOLERANCE: f64 = 1e-9;

/// The `(R-1) x (S-1)` matrix of odds ratios anchored at cell `(0, 0)`.
///
/// Entry `(x-1, y-1)` holds `p00 pxy / (p0y px0)`. A `None` entry marks a 0/0
/// ratio, which is left undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct OddsRatioMatrix {
    entries: Array2<Option<f64>>,
}

impl OddsRatioMatrix {
    pub fn new(entries: Array2<Option<f64>>) -> Self {
        Self { entries }
    }

    /// A matrix with every entry defined.
    pub fn from_values(values: Array2<f64>) -> Self {
        Self {
            entries: values.mapv(Some),
        }
    }

    pub fn entries(&self) -> &Array2<Option<f64>> {
        &self.entries
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.dim()
    }

    /// Entry for the 2x2 sub-table on rows `{0, x}` and columns `{0, y}`,
    /// with `x, y >= 1`.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.entries[[x - 1, y - 1]]
    }

    pub fn undefined_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_none()).count()
    }

    /// Compares two matrices entrywise with relative tolerance `tol`.
    ///
    /// Undefined entries match anything. Returns whether all entries agree
    /// and how many comparisons were waived because of undefined entries.
    pub fn approx_eq(&self, other: &OddsRatioMatrix, tol: f64) -> Result<(bool, usize)> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut waived = 0;
        let mut equal = true;
        for (a, b) in self.entries.iter().zip(other.entries.iter()) {
            match (a, b) {
                (Some(a), Some(b)) => equal &= odds_close(*a, *b, tol),
                _ => waived += 1,
            }
        }
        Ok((equal, waived))
    }

    /// JSON rows with `"inf"` for infinite and `null` for undefined entries.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries
                .outer_iter()
                .map(|row| Value::Array(row.iter().map(|e| odds_to_json(*e)).collect()))
                .collect(),
        )
    }
}

fn odds_close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Serializes one odds ratio with the `"inf"` / `null` sentinels.
pub fn odds_to_json(e: Option<f64>) -> Value {
    match e {
        None => Value::Null,
        Some(v) if v.is_infinite() => Value::String("inf".into()),
        Some(v) => serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number),
    }
}

/// Ratio with the conventions `0/pos = 0`, `pos/0 = inf`, `0/0 = undefined`.
pub(crate) fn extended_ratio(num: f64, den: f64) -> Option<f64> {
    match (num > 0.0, den > 0.0) {
        (false, false) => None,
        (true, false) => Some(f64::INFINITY),
        (false, true) => Some(0.0),
        (true, true) => Some(num / den),
    }
}

/// Odds-ratio matrix of a table.
pub fn odds_ratio_matrix(p: &JointPmf) -> OddsRatioMatrix {
    let v = p.values();
    let (r, s) = p.shape();
    let entries = Array2::from_shape_fn((r - 1, s - 1), |(i, j)| {
        let (x, y) = (i + 1, j + 1);
        extended_ratio(v[[0, 0]] * v[[x, y]], v[[0, y]] * v[[x, 0]])
    });
    OddsRatioMatrix { entries }
}

/// Pads an odds-ratio matrix with a leading row and column of ones.
///
/// The result has the same odds ratios as the input; normalizing it to unit
/// mass gives a pmf in the corresponding class.
pub fn completed_odds_matrix(omega: &OddsRatioMatrix) -> Result<Array2<f64>> {
    let (r, s) = omega.shape();
    let mut out = Array2::from_elem((r + 1, s + 1), 1.0);
    for ((i, j), e) in omega.entries.indexed_iter() {
        out[[i + 1, j + 1]] = e.ok_or(Error::UndefinedEntry { row: i + 1, col: j + 1 })?;
    }
    Ok(out)
}

/// Pearson correlation of the category indices under a copula pmf.
///
/// For a 2x2 copula this is Yule's colligation coefficient. The value is
/// exactly `1` on the diagonal Fréchet bound, `-1` on the anti-diagonal one and
/// `0` for the independence copula. For `R != S` the attainable range is
/// strictly inside `(-1, 1)`.
pub fn yule_upsilon(cop: &JointPmf) -> Result<f64> {
    let deviation = cop.uniform_margin_deviation();
    if deviation > COPULA_TOLERANCE {
        return Err(Error::NotACopula { deviation });
    }
    let (r, s) = cop.shape();
    let v = cop.values();
    let a = centered_scores(r);
    let b = centered_scores(s);
    let rows = cop.row_sums();
    let cols = cop.col_sums();
    let cov = paired_moment(&a, &b, |x, y| v[[x, y]]);
    let var_a = paired_moment(&a, &a, |x, y| if x == y { rows[x] } else { 0.0 });
    let var_b = paired_moment(&b, &b, |x, y| if x == y { cols[x] } else { 0.0 });
    Ok(cov / (var_a * var_b).sqrt())
}

/// Doubled centered scores `2u - (n-1)`, exact in floating point.
fn centered_scores(n: usize) -> Vec<f64> {
    (0..n).map(|u| (2 * u) as f64 - (n - 1) as f64).collect()
}

/// `sum_{x,y} a_x b_y m(x,y)` with each row summed over mirrored column pairs,
/// so antisymmetric contributions cancel exactly.
fn paired_moment(a: &[f64], b: &[f64], m: impl Fn(usize, usize) -> f64) -> f64 {
    let s = b.len();
    let mut total = 0.0;
    for (x, ax) in a.iter().enumerate() {
        let mut row = 0.0;
        for y in 0..s / 2 {
            row += b[y] * (m(x, y) - m(x, s - 1 - y));
        }
        total += ax * row;
    }
    total
}

/// Yule's Υ by the direct moment formula, without exact cancellation.
pub fn yule_upsilon_direct(cop: &JointPmf) -> Result<f64> {
    let deviation = cop.uniform_margin_deviation();
    if deviation > COPULA_TOLERANCE {
        return Err(Error::NotACopula { deviation });
    }
    let (r, s) = cop.shape();
    let (rf, sf) = (r as f64, s as f64);
    let mut moment = 0.0;
    for ((u, v), p) in cop.values().indexed_iter() {
        moment += (u * v) as f64 * p;
    }
    let scale = 3.0 * ((rf - 1.0) * (sf - 1.0) / ((rf + 1.0) * (sf + 1.0))).sqrt();
    Ok(scale * (4.0 / ((rf - 1.0) * (sf - 1.0)) * moment - 1.0))
}

/// Pearson correlation of `(X, Y)` with integer category values.
///
/// Unlike [`yule_upsilon`] this works for arbitrary margins.
pub fn pearson_correlation(p: &JointPmf) -> f64 {
    let rows = p.row_sums();
    let cols = p.col_sums();
    let mx: f64 = rows.iter().enumerate().map(|(x, m)| x as f64 * m).sum();
    let my: f64 = cols.iter().enumerate().map(|(y, m)| y as f64 * m).sum();
    let vx: f64 = rows
        .iter()
        .enumerate()
        .map(|(x, m)| (x as f64 - mx).powi(2) * m)
        .sum();
    let vy: f64 = cols
        .iter()
        .enumerate()
        .map(|(y, m)| (y as f64 - my).powi(2) * m)
        .sum();
    let mut cov = 0.0;
    for ((x, y), q) in p.values().indexed_iter() {
        cov += (x as f64 - mx) * (y as f64 - my) * q;
    }
    cov / (vx * vy).sqrt()
}

/// The diagonal and anti-diagonal `R x R` copula pmfs with mass `1/R` per cell.
pub fn frechet_bounds(r: usize) -> Result<(JointPmf, JointPmf)> {
    if r < 2 {
        return Err(Error::TooSmall { rows: r, cols: r });
    }
    let w = 1.0 / r as f64;
    let upper = Array2::from_shape_fn((r, r), |(x, y)| if x == y { w } else { 0.0 });
    let lower = Array2::from_shape_fn((r, r), |(x, y)| if x + y == r - 1 { w } else { 0.0 });
    Ok((
        JointPmf::from_array_unchecked(upper),
        JointPmf::from_array_unchecked(lower),
    ))
}
