//! Iterated proportional fitting and the existence theory behind it.
//!
//! [`classify_existence`] decides, for a support pattern and target margins,
//! whether a table with that support (or a sub-support) can carry the
//! margins. [`ipf_fit`] then alternately rescales rows and columns. Rescaling
//! never changes the odds-ratio matrix on the surviving support, so the fitted
//! table lies in the same class as the input.

use std::fmt;

use ndarray::{Array1, Array2, Axis as NdAxis};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::dependence::odds_ratio_matrix;
use crate::error::{Error, Result};
use crate::flow::{min_cost_transport, FlowNetwork};
use crate::pmf::{JointPmf, MarginPair, SupportPattern};

/// Flows below this are treated as zero when looking for forced zeros.
const FLOW_EPS: f64 = 1e-12;
/// Max-flow deficit that marks a pattern as infeasible.
const FEASIBILITY_EPS: f64 = 1e-12;

/// Outcome of the existence check for a support and target margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeasibilityTag {
    /// Unique fit with the full support.
    A,
    /// Unique fit with the full support; the support splits into blocks.
    B1,
    /// A fit exists but some support cells must vanish.
    B2,
    /// No table with this support carries the margins.
    C,
}

impl fmt::Display for FeasibilityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeasibilityTag::A => "A",
            FeasibilityTag::B1 => "B1",
            FeasibilityTag::B2 => "B2",
            FeasibilityTag::C => "C",
        };
        f.write_str(s)
    }
}

impl Serialize for FeasibilityTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Classification result with its witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityClass {
    pub tag: FeasibilityTag,
    /// Support cells that vanish in every fit, row-major. Empty unless `B2`.
    pub forced_zeros: Vec<(usize, usize)>,
    /// Null rectangles `(rows, cols)` that certify the tag. For `C` this is a
    /// rectangle carrying too much target mass, for `B2` one per forced zero,
    /// for `B1` one per support block.
    pub tight_rectangles: Vec<(Vec<usize>, Vec<usize>)>,
}

impl FeasibilityClass {
    fn plain(tag: FeasibilityTag) -> Self {
        Self {
            tag,
            forced_zeros: Vec::new(),
            tight_rectangles: Vec::new(),
        }
    }
}

/// Decides the existence class of `(support, targets)` by max-flow.
///
/// Rows and columns form a bipartite network with source capacities equal to
/// the row targets, sink capacities equal to the column targets and unbounded
/// arcs on support cells. The pattern is infeasible when the max-flow falls
/// short of one. A support cell is forced to zero when no feasible flow can
/// route mass through it, which holds exactly when the cell lies on no cycle
/// of the residual graph.
pub fn classify_existence(support: &SupportPattern, targets: &MarginPair) -> Result<FeasibilityClass> {
    let (r, s) = support.shape();
    if targets.shape() != (r, s) {
        return Err(Error::DimensionMismatch {
            left: (r, s),
            right: targets.shape(),
        });
    }
    let source = r + s;
    let sink = r + s + 1;
    let mut net = FlowNetwork::new(r + s + 2);
    for (x, t) in targets.rows().iter().enumerate() {
        net.add_edge(source, x, *t);
    }
    for (y, t) in targets.cols().iter().enumerate() {
        net.add_edge(r + y, sink, *t);
    }
    let mut cells = Vec::new();
    for x in 0..r {
        for y in 0..s {
            if support.get(x, y) {
                cells.push(((x, y), net.add_edge(x, r + y, f64::INFINITY)));
            }
        }
    }
    let total_row: f64 = targets.rows().sum();
    let value = net.max_flow(source, sink);
    if value < total_row - FEASIBILITY_EPS {
        let reach = net.reachable_from(source);
        let rows: Vec<usize> = (0..r).filter(|x| reach[*x]).collect();
        let cols: Vec<usize> = (0..s).filter(|y| !reach[r + y]).collect();
        return Ok(FeasibilityClass {
            tag: FeasibilityTag::C,
            forced_zeros: Vec::new(),
            tight_rectangles: vec![(rows, cols)],
        });
    }

    // Residual graph on rows and columns: x -> y for every support cell,
    // y -> x where the flow is positive.
    let n = r + s;
    let mut adj = vec![Vec::new(); n];
    for &((x, y), e) in &cells {
        adj[x].push(r + y);
        if net.flow(e) > FLOW_EPS {
            adj[r + y].push(x);
        }
    }
    let mut forced = Vec::new();
    let mut rects = Vec::new();
    let mut reach_cache: Vec<Option<Vec<bool>>> = vec![None; s];
    for &((x, y), _) in &cells {
        let reach = reach_cache[y].get_or_insert_with(|| reachable(&adj, r + y));
        if !reach[x] {
            forced.push((x, y));
            let rows: Vec<usize> = (0..r).filter(|i| reach[*i]).collect();
            let cols: Vec<usize> = (0..s).filter(|j| !reach[r + j]).collect();
            rects.push((rows, cols));
        }
    }
    if !forced.is_empty() {
        return Ok(FeasibilityClass {
            tag: FeasibilityTag::B2,
            forced_zeros: forced,
            tight_rectangles: rects,
        });
    }
    let components = support.components();
    if components.len() > 1 {
        let rects = components
            .into_iter()
            .map(|(rows, cols)| {
                let rest: Vec<usize> = (0..s).filter(|y| !cols.contains(y)).collect();
                (rows, rest)
            })
            .collect();
        return Ok(FeasibilityClass {
            tag: FeasibilityTag::B1,
            forced_zeros: Vec::new(),
            tight_rectangles: rects,
        });
    }
    Ok(FeasibilityClass::plain(FeasibilityTag::A))
}

fn reachable(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Which margin is rescaled first within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    RowsFirst,
    ColumnsFirst,
}

/// Tuning knobs for [`ipf_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct IpfOptions {
    /// Stop once the largest absolute margin deviation is at most this.
    pub tol: f64,
    /// Sweep budget for classes `A` and `B1`.
    pub max_iter: usize,
    /// Sweep budget when forced zeros are present.
    pub b2_max_iter: usize,
    pub order: SweepOrder,
}

impl Default for IpfOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
            b2_max_iter: 10_000_000,
            order: SweepOrder::RowsFirst,
        }
    }
}

impl IpfOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Validation(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.b2_max_iter == 0 {
            return Err(Error::Validation("iteration budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// What happened during a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDiagnostics {
    /// Completed sweeps; each sweep rescales rows and columns once.
    pub iterations: usize,
    /// Largest absolute deviation of the achieved margins from the targets.
    pub margin_error: f64,
    pub classification: FeasibilityClass,
    /// Geometric mean of the last ten sweep-to-sweep error ratios, capped at 1.
    pub rate: Option<f64>,
    /// Human-readable notes, not serialized.
    pub warnings: Vec<String>,
}

impl ScalingDiagnostics {
    pub fn to_json(&self) -> Value {
        json!({
            "iterations": self.iterations,
            "margin_error": self.margin_error,
            "class": self.classification.tag.to_string(),
            "rate": self.rate,
            "forced_zeros": self
                .classification
                .forced_zeros
                .iter()
                .map(|(x, y)| json!([x, y]))
                .collect::<Vec<_>>(),
        })
    }
}

impl Serialize for ScalingDiagnostics {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Per-sweep error trace of a fit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorTrace {
    /// Largest absolute margin deviation after each sweep.
    pub max_abs: Vec<f64>,
    /// Summed absolute margin deviation after each sweep.
    pub l1: Vec<f64>,
}

/// Rescales `p` towards margins `targets`.
///
/// Cells forced to zero by the target margins are cleared before the first
/// sweep. At least one sweep is always performed.
pub fn ipf_fit(
    p: &JointPmf,
    targets: &MarginPair,
    opts: &IpfOptions,
) -> Result<(JointPmf, ScalingDiagnostics)> {
    ipf_fit_traced(p, targets, opts).map(|(q, d, _)| (q, d))
}

/// [`ipf_fit`] that also returns the per-sweep errors.
pub fn ipf_fit_traced(
    p: &JointPmf,
    targets: &MarginPair,
    opts: &IpfOptions,
) -> Result<(JointPmf, ScalingDiagnostics, ErrorTrace)> {
    opts.validate()?;
    let class = classify_existence(&p.support(0.0), targets)?;
    if class.tag == FeasibilityTag::C {
        return Err(Error::Infeasible(Box::new(class)));
    }
    let mut q = p.values().clone();
    let budget = if class.tag == FeasibilityTag::B2 {
        for &(x, y) in &class.forced_zeros {
            q[[x, y]] = 0.0;
        }
        opts.b2_max_iter
    } else {
        opts.max_iter
    };
    let rows = targets.rows();
    let cols = targets.cols();
    let mut trace = ErrorTrace::default();
    let mut iterations = 0;
    let mut error = f64::INFINITY;
    while iterations < budget {
        match opts.order {
            SweepOrder::RowsFirst => {
                scale_rows(&mut q, rows);
                scale_cols(&mut q, cols);
            }
            SweepOrder::ColumnsFirst => {
                scale_cols(&mut q, cols);
                scale_rows(&mut q, rows);
            }
        }
        iterations += 1;
        let (max_abs, l1) = margin_errors(&q, targets);
        trace.max_abs.push(max_abs);
        trace.l1.push(l1);
        error = max_abs;
        if error <= opts.tol {
            break;
        }
    }
    let rate = rate_estimate(&trace.max_abs);
    let mut warnings = Vec::new();
    if class.tag == FeasibilityTag::B2 {
        warnings.push(format!(
            "{} support cell(s) forced to zero before scaling",
            class.forced_zeros.len()
        ));
    }
    if rate.is_some_and(|r| r > 0.99) {
        warnings.push("sub-geometric convergence".into());
    }
    let diagnostics = ScalingDiagnostics {
        iterations,
        margin_error: error,
        classification: class,
        rate,
        warnings,
    };
    if !(error <= opts.tol) {
        return Err(Error::NonConvergence(Box::new(diagnostics)));
    }
    let total = q.sum();
    q.mapv_inplace(|v| v / total);
    Ok((JointPmf::from_array_unchecked(q), diagnostics, trace))
}

fn scale_rows(q: &mut Array2<f64>, targets: &Array1<f64>) {
    for (mut row, t) in q.outer_iter_mut().zip(targets.iter()) {
        let sum: f64 = row.sum();
        if sum > 0.0 {
            let f = t / sum;
            row.mapv_inplace(|v| v * f);
        }
    }
}

fn scale_cols(q: &mut Array2<f64>, targets: &Array1<f64>) {
    for (mut col, t) in q.axis_iter_mut(NdAxis(1)).zip(targets.iter()) {
        let sum: f64 = col.sum();
        if sum > 0.0 {
            let f = t / sum;
            col.mapv_inplace(|v| v * f);
        }
    }
}

/// Largest and summed absolute margin deviations of a table.
fn margin_errors(q: &Array2<f64>, targets: &MarginPair) -> (f64, f64) {
    let mut max_abs = 0.0f64;
    let mut l1 = 0.0;
    for (sum, t) in q.sum_axis(NdAxis(1)).iter().zip(targets.rows().iter()) {
        let d = (sum - t).abs();
        max_abs = max_abs.max(d);
        l1 += d;
    }
    for (sum, t) in q.sum_axis(NdAxis(0)).iter().zip(targets.cols().iter()) {
        let d = (sum - t).abs();
        max_abs = max_abs.max(d);
        l1 += d;
    }
    (max_abs, l1)
}

/// Summed absolute deviation of the margins of `p` from `targets`.
pub fn margin_l1_error(p: &JointPmf, targets: &MarginPair) -> f64 {
    margin_errors(p.values(), targets).1
}

fn rate_estimate(errors: &[f64]) -> Option<f64> {
    if errors.len() < 11 {
        return None;
    }
    let window = &errors[errors.len() - 11..];
    if window.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let log_sum: f64 = window.windows(2).map(|w| (w[1] / w[0]).ln()).sum();
    Some((log_sum / 10.0).exp().min(1.0))
}

/// The copula pmf of `p`: its rescaling to uniform margins.
pub fn copula_pmf(p: &JointPmf, opts: &IpfOptions) -> Result<(JointPmf, ScalingDiagnostics)> {
    let (r, s) = p.shape();
    ipf_fit(p, &MarginPair::uniform(r, s), opts)
}

/// Gives a copula pmf the requested margins.
pub fn couple(
    copula: &JointPmf,
    targets: &MarginPair,
    opts: &IpfOptions,
) -> Result<(JointPmf, ScalingDiagnostics)> {
    let deviation = copula.uniform_margin_deviation();
    if deviation > crate::dependence::COPULA_TOLERANCE.max(opts.tol) {
        return Err(Error::NotACopula { deviation });
    }
    ipf_fit(copula, targets, opts)
}

/// Multiplies row `x` by `row_factors[x]` and column `y` by `col_factors[y]`,
/// then renormalizes.
pub fn apply_marginal_distortion(
    p: &JointPmf,
    row_factors: &[f64],
    col_factors: &[f64],
) -> Result<JointPmf> {
    let (r, s) = p.shape();
    if row_factors.len() != r || col_factors.len() != s {
        return Err(Error::DimensionMismatch {
            left: (r, s),
            right: (row_factors.len(), col_factors.len()),
        });
    }
    if let Some(f) = row_factors
        .iter()
        .chain(col_factors)
        .find(|f| !(f.is_finite() && **f > 0.0))
    {
        return Err(Error::Domain(format!("distortion factors must be positive, got {f}")));
    }
    let scaled = Array2::from_shape_fn((r, s), |(x, y)| {
        row_factors[x] * p.get(x, y) * col_factors[y]
    });
    let total = scaled.sum();
    Ok(JointPmf::from_array_unchecked(scaled.mapv(|v| v / total)))
}

/// True when the two tables have the same support and matching odds ratios.
pub fn same_nucleus(p1: &JointPmf, p2: &JointPmf, tol: f64) -> Result<bool> {
    if p1.shape() != p2.shape() {
        return Err(Error::DimensionMismatch {
            left: p1.shape(),
            right: p2.shape(),
        });
    }
    if p1.support(0.0) != p2.support(0.0) {
        return Ok(false);
    }
    let (equal, _) = odds_ratio_matrix(p1).approx_eq(&odds_ratio_matrix(p2), tol)?;
    Ok(equal)
}

/// Limit copula of a one-parameter table family as the parameter tends to a
/// boundary of its range.
///
/// Each cell is asymptotically `weights[x][y] * s^exponents[x][y]` as `s -> 0`;
/// cells with zero weight are absent. Scaling such a table to uniform margins
/// concentrates, in the limit, on the cells used by some optimal plan of the
/// transportation problem with costs `exponents`; within that face the
/// leading weights are rescaled as usual.
pub fn boundary_limit_copula(
    weights: &Array2<f64>,
    exponents: &Array2<i64>,
    opts: &IpfOptions,
) -> Result<(JointPmf, ScalingDiagnostics)> {
    let (r, s) = weights.dim();
    if exponents.dim() != (r, s) {
        return Err(Error::DimensionMismatch {
            left: (r, s),
            right: exponents.dim(),
        });
    }
    let cost: Vec<Vec<Option<i64>>> = (0..r)
        .map(|x| {
            (0..s)
                .map(|y| (weights[[x, y]] > 0.0).then_some(exponents[[x, y]]))
                .collect()
        })
        .collect();
    let g = gcd(r, s);
    let supply = vec![(s / g) as i64; r];
    let demand = vec![(r / g) as i64; s];
    let Some(plan) = min_cost_transport(&cost, &supply, &demand) else {
        let support = SupportPattern::new(weights.mapv(|w| w > 0.0))?;
        let class = classify_existence(&support, &MarginPair::uniform(r, s))?;
        return Err(Error::Infeasible(Box::new(class)));
    };
    let tight = Array2::from_shape_fn((r, s), |(x, y)| match cost[x][y] {
        Some(c) => c + plan.row_potential[x] - plan.col_potential[y] == 0,
        None => false,
    });
    let seed = Array2::from_shape_fn((r, s), |(x, y)| {
        if tight[[x, y]] {
            weights[[x, y]]
        } else {
            0.0
        }
    });
    copula_pmf(&JointPmf::from_weights(seed)?, opts)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
