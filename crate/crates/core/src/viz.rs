//! Deterministic figure output: confetti plots as SVG, heat maps as PPM.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::infinite::DensityGrid;
use crate::pmf::JointPmf;

pub type Rgb = [u8; 3];

/// Drawing options for [`confetti_svg`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfettiOptions {
    /// Side of one table cell in pixels.
    pub cell_size: f64,
    /// Fill for the smallest and largest probabilities.
    pub ramp: (Rgb, Rgb),
    /// Draw the margins as black dots in a bottom and a right gutter.
    pub show_margins: bool,
    /// A dot covering its whole cell has probability `1 / dot_area_scale`.
    pub dot_area_scale: f64,
}

impl Default for ConfettiOptions {
    fn default() -> Self {
        Self {
            cell_size: 40.0,
            ramp: ([211, 211, 211], [139, 0, 0]),
            show_margins: true,
            dot_area_scale: 1.0,
        }
    }
}

impl ConfettiOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::Param(format!("cell size must be positive, got {}", self.cell_size)));
        }
        if !(self.dot_area_scale > 0.0 && self.dot_area_scale.is_finite()) {
            return Err(Error::Param(format!(
                "dot area scale must be positive, got {}",
                self.dot_area_scale
            )));
        }
        Ok(())
    }

    /// Radius of the dot for probability `p`, so that areas are proportional
    /// to probabilities.
    pub fn radius(&self, p: f64) -> f64 {
        (self.dot_area_scale * p).sqrt() * self.cell_size / 2.0
    }
}

fn lerp(ramp: (Rgb, Rgb), t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    let mut out = [0u8; 3];
    for k in 0..3 {
        let (a, b) = (ramp.0[k] as f64, ramp.1[k] as f64);
        out[k] = (a + (b - a) * t).round() as u8;
    }
    out
}

fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Confetti plot of a pmf: one dot per cell, row `x` drawn from the top.
///
/// Dot area is proportional to probability and the fill runs along the ramp
/// with `p / max p`. Zero cells get a 1 pixel outline circle so structural
/// zeros stay visible.
pub fn confetti_svg(p: &JointPmf, opts: &ConfettiOptions) -> Result<String> {
    opts.validate()?;
    let (r, s) = p.shape();
    let c = opts.cell_size;
    let gutter = if opts.show_margins { 1 } else { 0 };
    let (width, height) = ((s + gutter) as f64 * c, (r + gutter) as f64 * c);
    let max = p.values().iter().copied().fold(0.0, f64::max);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#).unwrap();
    for x in 0..r {
        for y in 0..s {
            let (cx, cy) = ((y as f64 + 0.5) * c, (x as f64 + 0.5) * c);
            let v = p.get(x, y);
            if v > 0.0 {
                let fill = hex(lerp(opts.ramp, v / max));
                writeln!(
                    svg,
                    r#"<circle class="cell" cx="{cx}" cy="{cy}" r="{}" fill="{fill}"/>"#,
                    opts.radius(v)
                )
                .unwrap();
            } else {
                writeln!(
                    svg,
                    r#"<circle class="cell zero" cx="{cx}" cy="{cy}" r="1" fill="none" stroke="black" stroke-width="0.5"/>"#
                )
                .unwrap();
            }
        }
    }
    if opts.show_margins {
        let m = p.margins();
        // row margins in the right gutter, column margins along the bottom
        for (x, &v) in m.rows().iter().enumerate() {
            let (cx, cy) = ((s as f64 + 0.5) * c, (x as f64 + 0.5) * c);
            writeln!(svg, r#"<circle class="margin" cx="{cx}" cy="{cy}" r="{}" fill="black"/>"#, opts.radius(v)).unwrap();
        }
        for (y, &v) in m.cols().iter().enumerate() {
            let (cx, cy) = ((y as f64 + 0.5) * c, (r as f64 + 0.5) * c);
            writeln!(svg, r#"<circle class="margin" cx="{cx}" cy="{cy}" r="{}" fill="black"/>"#, opts.radius(v)).unwrap();
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Black, red, yellow, white.
fn hot(t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0) * 3.0;
    let ch = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    [ch(t), ch(t - 1.0), ch(t - 2.0)]
}

/// Binary P6 heat map with one pixel per grid cell, row `u` from the top.
///
/// Pixel intensity follows `(height / max)^gamma` on a black to white "hot"
/// ramp, so brighter always means higher.
pub fn heatmap_ppm(grid: &DensityGrid, gamma: f64) -> Result<Vec<u8>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Param(format!("gamma must be positive, got {gamma}")));
    }
    let n = grid.n();
    let max = grid.max_height();
    let mut out = format!("P6\n{n} {n}\n255\n").into_bytes();
    out.reserve(3 * n * n);
    for &h in grid.heights().iter() {
        let t = if max > 0.0 { (h / max).powf(gamma) } else { 0.0 };
        out.extend_from_slice(&hot(t));
    }
    Ok(out)
}

/// Grid heights as whitespace-separated text, one row per line.
pub fn grid_to_text(grid: &DensityGrid) -> String {
    let mut s = String::new();
    for row in grid.heights().outer_iter() {
        let line: Vec<String> = row.iter().map(|&v| crate::pmf::format_g17(v)).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hot_ramp_is_monotone() {
        let mut last = 0u32;
        for k in 0..=300 {
            let c = hot(k as f64 / 300.0);
            let sum = c.iter().map(|&v| v as u32).sum::<u32>();
            assert!(sum >= last);
            last = sum;
        }
        assert_eq!(hot(0.0), [0, 0, 0]);
        assert_eq!(hot(1.0), [255, 255, 255]);
    }

    #[test]
    fn ramp_ends() {
        let o = ConfettiOptions::default();
        assert_eq!(lerp(o.ramp, 0.0), o.ramp.0);
        assert_eq!(lerp(o.ramp, 1.0), o.ramp.1);
        assert_eq!(hex([139, 0, 0]), "#8b0000");
    }

    #[test]
    fn bad_options() {
        let p = JointPmf::uniform(2, 2).unwrap();
        let o = ConfettiOptions { cell_size: 0.0, ..Default::default() };
        assert!(confetti_svg(&p, &o).is_err());
        let o = ConfettiOptions { dot_area_scale: -1.0, ..Default::default() };
        assert!(confetti_svg(&p, &o).is_err());
    }
}
