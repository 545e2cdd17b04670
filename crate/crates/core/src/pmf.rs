//! Bivariate probability tables, their margins and support patterns.
//!
//! Rows index the first variable `X` and columns the second variable `Y`, so
//! entry `(x, y)` of a [`JointPmf`] is `P(X = x, Y = y)`. The same convention
//! holds for every CSV table read or written by this crate.

use std::fmt;

use ndarray::{Array1, Array2, Axis as NdAxis};
use serde::{Deserialize, Serialize};

use crate::error::{Axis, Error, Result};

/// Absolute tolerance on the total mass of a table.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A finite `R x S` probability table with strictly positive margins.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    values: Array2<f64>,
}

impl JointPmf {
    /// Validates `values` as a probability table.
    ///
    /// Entries must be finite and nonnegative, sum to one within
    /// [`MASS_TOLERANCE`], and every row and column must carry positive mass.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        check_shape(&values)?;
        check_entries(&values)?;
        let total = values.sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Validation(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        check_margins(&values)?;
        Ok(Self { values })
    }

    /// Normalizes nonnegative weights by their grand total.
    pub fn from_weights(weights: Array2<f64>) -> Result<Self> {
        check_shape(&weights)?;
        check_entries(&weights)?;
        check_margins(&weights)?;
        let total = weights.sum();
        if !total.is_finite() {
            return Err(Error::Validation("weights overflow".into()));
        }
        let values = weights.mapv(|w| w / total);
        Ok(Self { values })
    }

    /// Builds a table from nested rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(rows_to_array(rows)?)
    }

    /// The product table `rows ⊗ cols`.
    pub fn independent(margins: &MarginPair) -> Self {
        let (r, c) = (margins.rows(), margins.cols());
        let values = Array2::from_shape_fn((r.len(), c.len()), |(x, y)| r[x] * c[y]);
        Self { values }
    }

    /// The `R x S` independence copula pmf, `1/(RS)` everywhere.
    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::TooSmall { rows, cols });
        }
        let v = 1.0 / (rows * cols) as f64;
        Ok(Self {
            values: Array2::from_elem((rows, cols), v),
        })
    }

    /// Wraps a table already known to be valid.
    pub(crate) fn from_array_unchecked(values: Array2<f64>) -> Self {
        debug_assert!(values.iter().all(|v| *v >= 0.0));
        Self { values }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[[x, y]]
    }

    /// Row-major nested vectors, convenient for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.outer_iter().map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self {
            values: self.values.t().to_owned(),
        }
    }

    pub fn row_sums(&self) -> Array1<f64> {
        self.values.sum_axis(NdAxis(1))
    }

    pub fn col_sums(&self) -> Array1<f64> {
        self.values.sum_axis(NdAxis(0))
    }

    pub fn margins(&self) -> MarginPair {
        MarginPair {
            rows: self.row_sums(),
            cols: self.col_sums(),
        }
    }

    /// Cells whose mass exceeds `zero_threshold`.
    pub fn support(&self, zero_threshold: f64) -> SupportPattern {
        SupportPattern {
            mask: self.values.mapv(|v| v > zero_threshold),
        }
    }

    /// True when every row sums to `1/R` and every column to `1/S` within `tol`.
    pub fn is_copula_pmf(&self, tol: f64) -> bool {
        self.uniform_margin_deviation() <= tol
    }

    /// Largest absolute deviation of the margins from the discrete uniform ones.
    pub fn uniform_margin_deviation(&self) -> f64 {
        let (r, s) = self.shape();
        let row_dev = self
            .row_sums()
            .iter()
            .map(|m| (m - 1.0 / r as f64).abs())
            .fold(0.0, f64::max);
        let col_dev = self
            .col_sums()
            .iter()
            .map(|m| (m - 1.0 / s as f64).abs())
            .fold(0.0, f64::max);
        row_dev.max(col_dev)
    }

    /// Largest absolute entrywise difference between two tables of equal shape.
    pub fn max_abs_diff(&self, other: &JointPmf) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl fmt::Display for JointPmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.values.outer_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "{}", cells.join("  "))?;
        }
        Ok(())
    }
}

/// Normalizes a table of observed counts by its grand total.
pub fn from_counts(counts: &Array2<f64>) -> Result<JointPmf> {
    check_shape(counts)?;
    check_entries(counts)?;
    let total = counts.sum();
    if total <= 0.0 {
        return Err(Error::EmptyTable);
    }
    check_margins(counts)?;
    Ok(JointPmf {
        values: counts.mapv(|c| c / total),
    })
}

/// Row and column marginal distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginPair {
    rows: Array1<f64>,
    cols: Array1<f64>,
}

impl MarginPair {
    /// Both vectors must be strictly positive and sum to one within
    /// [`MASS_TOLERANCE`].
    pub fn new(rows: Vec<f64>, cols: Vec<f64>) -> Result<Self> {
        check_margin_vector(&rows, Axis::Row)?;
        check_margin_vector(&cols, Axis::Column)?;
        Ok(Self {
            rows: Array1::from(rows),
            cols: Array1::from(cols),
        })
    }

    /// Rescales positive weights to unit mass.
    pub fn normalized(rows: Vec<f64>, cols: Vec<f64>) -> Result<Self> {
        let norm = |v: Vec<f64>| {
            let t: f64 = v.iter().sum();
            v.into_iter().map(|w| w / t).collect::<Vec<_>>()
        };
        for (v, axis) in [(&rows, Axis::Row), (&cols, Axis::Column)] {
            if let Some(i) = v.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(Error::ZeroMargin { axis, index: i });
            }
        }
        Self::new(norm(rows), norm(cols))
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self {
            rows: Array1::from_elem(rows, 1.0 / rows as f64),
            cols: Array1::from_elem(cols, 1.0 / cols as f64),
        }
    }

    pub fn rows(&self) -> &Array1<f64> {
        &self.rows
    }

    pub fn cols(&self) -> &Array1<f64> {
        &self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }
}

fn check_margin_vector(v: &[f64], axis: Axis) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::Validation(format!(
            "{axis} margin needs at least two categories"
        )));
    }
    if let Some(i) = v.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::ZeroMargin { axis, index: i });
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Validation(format!(
            "{axis} margin sums to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Boolean layout of the positive cells of a table.
///
/// Null rectangles (row set × column set carrying no mass) are never
/// enumerated; feasibility questions about them go through
/// [`crate::scaling::classify_existence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportPattern {
    mask: Array2<bool>,
}

impl SupportPattern {
    pub fn new(mask: Array2<bool>) -> Result<Self> {
        let (r, s) = mask.dim();
        if r < 2 || s < 2 {
            return Err(Error::TooSmall { rows: r, cols: s });
        }
        for (x, row) in mask.outer_iter().enumerate() {
            if !row.iter().any(|b| *b) {
                return Err(Error::ZeroMargin {
                    axis: Axis::Row,
                    index: x,
                });
            }
        }
        for (y, col) in mask.axis_iter(NdAxis(1)).enumerate() {
            if !col.iter().any(|b| *b) {
                return Err(Error::ZeroMargin {
                    axis: Axis::Column,
                    index: y,
                });
            }
        }
        Ok(Self { mask })
    }

    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let s = rows.first().map_or(0, |row| row.as_ref().len());
        if rows.iter().any(|row| row.as_ref().len() != s) {
            return Err(Error::Validation("ragged mask".into()));
        }
        let flat: Vec<bool> = rows.iter().flat_map(|row| row.as_ref().to_vec()).collect();
        let mask = Array2::from_shape_vec((r, s), flat)
            .map_err(|e| Error::Validation(e.to_string()))?;
        Self::new(mask)
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            mask: Array2::from_elem((rows, cols), true),
        }
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mask.dim()
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[[x, y]]
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|b| *b)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    /// Connected components of the bipartite row/column graph whose edges are
    /// the support cells, as `(rows, cols)` index lists.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let (r, s) = self.shape();
        // nodes 0..r are rows, r..r+s are columns
        let mut label = vec![usize::MAX; r + s];
        let mut out = Vec::new();
        for start in 0..r + s {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            label[start] = id;
            let (mut rows, mut cols) = (Vec::new(), Vec::new());
            while let Some(node) = stack.pop() {
                if node < r {
                    rows.push(node);
                    for y in 0..s {
                        if self.mask[[node, y]] && label[r + y] == usize::MAX {
                            label[r + y] = id;
                            stack.push(r + y);
                        }
                    }
                } else {
                    let y = node - r;
                    cols.push(y);
                    for x in 0..r {
                        if self.mask[[x, y]] && label[x] == usize::MAX {
                            label[x] = id;
                            stack.push(x);
                        }
                    }
                }
            }
            rows.sort_unstable();
            cols.sort_unstable();
            out.push((rows, cols));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }
}

/// Input flavour for [`parse_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableFormat {
    /// Nonnegative counts; any positive total.
    Counts,
    /// Probabilities summing to one within `1e-9`; renormalized on read.
    Probs,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counts" | "csv_counts" => Ok(TableFormat::Counts),
            "probs" | "csv_probs" => Ok(TableFormat::Probs),
            other => Err(Error::Validation(format!("unknown table format '{other}'"))),
        }
    }
}

/// Parses comma-separated numeric rows into a matrix.
///
/// Blank lines and lines starting with `#` are skipped. Rows must all have the
/// same length.
pub fn parse_table(text: &str, format: TableFormat) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("'{cell}' is not finite"),
                });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} cells, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    let mut table = rows_to_array(&rows)?;
    if let Some(v) = table.iter().find(|v| **v < 0.0) {
        return Err(Error::Validation(format!("negative entry {v}")));
    }
    if format == TableFormat::Probs {
        let total = table.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "probabilities sum to {total}, expected 1 within 1e-9"
            )));
        }
        table.mapv_inplace(|v| v / total);
    }
    Ok(table)
}

/// Renders a matrix as CSV with 17 significant digits.
pub fn write_table(values: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in values.outer_iter() {
        let cells: Vec<String> = row.iter().map(|v| format_g17(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Formats a float with 17 significant digits.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{v:.16e}");
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{}", trim_zeros(mantissa), e),
            None => s,
        }
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn rows_to_array<R: AsRef<[f64]>>(rows: &[R]) -> Result<Array2<f64>> {
    let r = rows.len();
    let s = rows.first().map_or(0, |row| row.as_ref().len());
    if rows.iter().any(|row| row.as_ref().len() != s) {
        return Err(Error::Validation("ragged rows".into()));
    }
    let flat: Vec<f64> = rows.iter().flat_map(|row| row.as_ref().to_vec()).collect();
    Array2::from_shape_vec((r, s), flat).map_err(|e| Error::Validation(e.to_string()))
}

fn check_shape(values: &Array2<f64>) -> Result<()> {
    let (r, s) = values.dim();
    if r < 2 || s < 2 {
        return Err(Error::TooSmall { rows: r, cols: s });
    }
    Ok(())
}

fn check_entries(values: &Array2<f64>) -> Result<()> {
    match values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(v) => Err(Error::Validation(format!(
            "entries must be finite and nonnegative, found {v}"
        ))),
        None => Ok(()),
    }
}

fn check_margins(values: &Array2<f64>) -> Result<()> {
    if let Some(x) = values.sum_axis(NdAxis(1)).iter().position(|m| *m <= 0.0) {
        return Err(Error::ZeroMargin {
            axis: Axis::Row,
            index: x,
        });
    }
    if let Some(y) = values.sum_axis(NdAxis(0)).iter().position(|m| *m <= 0.0) {
        return Err(Error::ZeroMargin {
            axis: Axis::Column,
            index: y,
        });
    }
    Ok(())
}
