//! Fixtures and closed-form oracles shared by the integration tests.
#![allow(dead_code)]

use dcopula::pmf::{from_counts, JointPmf, SupportPattern};
use ndarray::{array, Array2};

/// Complete cases of the Lin malpractice data (2x2 counts).
pub fn lin_counts() -> Array2<f64> {
    array![[26.0, 1.0], [5.0, 18.0]]
}

pub fn lin_pmf() -> JointPmf {
    from_counts(&lin_counts()).unwrap()
}

/// Malformation (rows) by maternal alcohol consumption (columns).
pub fn graubard_counts() -> Array2<f64> {
    array![
        [17066.0, 14464.0, 788.0, 126.0, 37.0],
        [48.0, 38.0, 5.0, 1.0, 1.0]
    ]
}

pub fn graubard_pmf() -> JointPmf {
    from_counts(&graubard_counts()).unwrap()
}

/// Copula pmf of the Graubard table as printed (3 decimals).
pub fn graubard_printed_copula() -> Array2<f64> {
    array![
        [0.137, 0.140, 0.098, 0.087, 0.037],
        [0.063, 0.060, 0.102, 0.113, 0.163]
    ]
}

pub fn max_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// 2x2 copula pmf with odds ratio `w`, straight from the quadratic.
pub fn bernoulli_closed_form(w: f64) -> Array2<f64> {
    let d = if w == 0.0 {
        0.0
    } else if w.is_infinite() {
        0.5
    } else if w == 1.0 {
        0.25
    } else {
        // p11 = p00 = d and p10 = p01 = 1/2 - d with d^2 = w (1/2 - d)^2
        let s = w.sqrt();
        s / (2.0 * (1.0 + s))
    };
    array![[d, 0.5 - d], [0.5 - d, d]]
}

/// Binomial(2) copula pmf.
pub fn binomial2_closed_form(w: f64) -> Array2<f64> {
    let s = (w * (w + 2.0) * (2.0 * w + 1.0)).sqrt();
    let d = w * w + w + 1.0 + s;
    let q = (w - 1.0).powi(2);
    let corner = w * (w + 1.0) / d;
    let anti = (w + 1.0) / d;
    let edge = (s - 3.0 * w) / q;
    let mid = (w * w + 4.0 * w + 1.0 - 2.0 * s) / q;
    array![[corner, edge, anti], [edge, mid, edge], [anti, edge, corner]] / 3.0
}

/// Yule's coefficient of the Binomial(2) copula.
pub fn binomial2_upsilon(w: f64) -> f64 {
    let s = (w * (w + 2.0) * (2.0 * w + 1.0)).sqrt();
    (w * w - 1.0) / (w * w + w + 1.0 + s)
}

/// Truncated Geometric(3) copula pmf.
pub fn geometric3_closed_form(w: f64) -> Array2<f64> {
    let r = (8.0 * w + 1.0).sqrt();
    let e = 2.0 * w + r + 1.0;
    let sw = w.sqrt();
    let a = 2.0 * w / e;
    let b = (r + 1.0) / (2.0 * e);
    let c = sw * (r + 1.0).powi(2) / (4.0 * (sw + 1.0) * e);
    let d = (4.0 * w - 1.0 - r) / (4.0 * (sw - 1.0) * (sw + 1.0).powi(2));
    array![[a, b, b], [b, c, d], [b, d, c]] / 3.0
}

/// Goodman 3x3 copula pmf, all local odds ratios `t`.
pub fn goodman33_closed_form(t: f64) -> Array2<f64> {
    let g = 4.0 * t * t + t + 4.0;
    let q = (t * g).sqrt();
    let f = t * (2.0 * t - 1.0) + 2.0 + q;
    let corner = 2.0 * t * t / f;
    let edge = 2.0 * t.sqrt() / (3.0 * t.sqrt() + g.sqrt());
    let anti = 2.0 / f;
    let center = (t * t + t + 1.0 - q) / (t - 1.0).powi(2);
    array![[corner, edge, anti], [edge, center, edge], [anti, edge, corner]] / 3.0
}

/// Existence class for uniform targets, by brute force over null
/// rectangles. Returns the tag name and the sorted forced zeros.
pub fn rectangle_oracle(mask: &Array2<bool>) -> (&'static str, Vec<(usize, usize)>) {
    let (r, s) = mask.dim();
    let mut tight = Vec::new();
    for rows in 1u32..(1 << r) {
        for cols in 1u32..(1 << s) {
            let null = (0..r).all(|x| {
                rows & (1 << x) == 0 || (0..s).all(|y| cols & (1 << y) == 0 || !mask[[x, y]])
            });
            if !null {
                continue;
            }
            // |I|/R + |J|/S against 1, scaled by R*S
            let weight = rows.count_ones() as usize * s + cols.count_ones() as usize * r;
            if weight > r * s {
                return ("C", Vec::new());
            }
            if weight == r * s {
                tight.push((rows, cols));
            }
        }
    }
    let mut forced = Vec::new();
    for x in 0..r {
        for y in 0..s {
            let hit = tight
                .iter()
                .any(|&(rows, cols)| rows & (1 << x) == 0 && cols & (1 << y) == 0);
            if mask[[x, y]] && hit {
                forced.push((x, y));
            }
        }
    }
    if !forced.is_empty() {
        return ("B2", forced);
    }
    let support = SupportPattern::new(mask.clone()).unwrap();
    if support.is_connected() {
        ("A", forced)
    } else {
        ("B1", forced)
    }
}

/// Masks of shape `r x s` with at most `max_zeros` zeros and no empty line.
pub fn masks(r: usize, s: usize, max_zeros: usize) -> Vec<Array2<bool>> {
    let n = r * s;
    let mut out = Vec::new();
    for bits in 0u32..(1 << n) {
        if bits.count_ones() as usize > max_zeros {
            continue;
        }
        let mask = Array2::from_shape_fn((r, s), |(x, y)| bits & (1 << (x * s + y)) == 0);
        let empty_row = mask.rows().into_iter().any(|row| row.iter().all(|v| !v));
        let empty_col = mask.columns().into_iter().any(|col| col.iter().all(|v| !v));
        if !empty_row && !empty_col {
            out.push(mask);
        }
    }
    out
}
