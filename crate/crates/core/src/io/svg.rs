//! Minimal SVG line charts: a band polygon, a mean polyline, optional data
//! dots, and plain axes. Plotting is a convenience output, never
//! load-bearing for the numerics.

use std::fmt::Write as _;

use crate::analysis::Band;
use crate::kalman::ComponentSeries;

pub struct PlotConfig {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "time (h)".into(),
            y_label: "value".into(),
            width: 800.0,
            height: 500.0,
        }
    }
}

const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(cfg: &PlotConfig, xs: &[f64], ys: &[f64]) -> Self {
        let (mut x0, mut x1) = min_max(xs);
        let (mut y0, mut y1) = min_max(ys);
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad_y = 0.05 * (y1 - y0);
        Self { x0, x1, y0: y0 - pad_y, y1: y1 + pad_y, w: cfg.width, h: cfg.height }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (self.w - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        self.h - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (self.h - MARGIN_T - MARGIN_B)
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        if x.is_finite() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if !lo.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn header(out: &mut String, cfg: &PlotConfig) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        cfg.width, cfg.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !cfg.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="15">{}</text>"#,
            cfg.width / 2.0,
            xml_escape(&cfg.title)
        );
    }
}

fn axes(out: &mut String, cfg: &PlotConfig, f: &Frame) {
    let (bx, by) = (f.px(f.x0), f.py(f.y0));
    let (tx, ty) = (f.px(f.x1), f.py(f.y1));
    let _ = writeln!(out, r#"<line x1="{bx}" y1="{by}" x2="{tx}" y2="{by}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{bx}" y1="{by}" x2="{bx}" y2="{ty}" stroke="black"/>"#);
    for i in 0..=4 {
        let xv = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let yv = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(out, r#"<line x1="{px}" y1="{by}" x2="{px}" y2="{}" stroke="black"/>"#, by + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#,
            by + 20.0,
            fmt(xv)
        );
        let _ = writeln!(out, r#"<line x1="{}" y1="{py}" x2="{bx}" y2="{py}" stroke="black"/>"#, bx - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            bx - 8.0,
            py + 4.0,
            fmt(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (bx + tx) / 2.0,
        cfg.height - 12.0,
        xml_escape(&cfg.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (by + ty) / 2.0,
        (by + ty) / 2.0,
        xml_escape(&cfg.y_label)
    );
}

fn band_polygon(out: &mut String, f: &Frame, times: &[f64], lower: &[f64], upper: &[f64]) {
    let mut pts = String::new();
    for (t, u) in times.iter().zip(upper) {
        let _ = write!(pts, "{},{} ", fmt(f.px(*t)), fmt(f.py(*u)));
    }
    for (t, l) in times.iter().zip(lower).rev() {
        let _ = write!(pts, "{},{} ", fmt(f.px(*t)), fmt(f.py(*l)));
    }
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##,
        pts.trim_end()
    );
}

fn polyline(out: &mut String, f: &Frame, times: &[f64], values: &[f64], color: &str) {
    let mut pts = String::new();
    for (t, v) in times.iter().zip(values) {
        let _ = write!(pts, "{},{} ", fmt(f.px(*t)), fmt(f.py(*v)));
    }
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
        pts.trim_end()
    );
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Component curve with its band and optional observed points.
pub fn plot_component(
    cfg: &PlotConfig,
    mean: &ComponentSeries,
    band: &Band,
    points: &[(f64, f64)],
) -> String {
    let mut ys: Vec<f64> = Vec::new();
    ys.extend(&band.lower);
    ys.extend(&band.upper);
    ys.extend(&mean.estimates);
    ys.extend(points.iter().map(|p| p.1));
    let mut xs: Vec<f64> = mean.times.clone();
    xs.extend(points.iter().map(|p| p.0));
    let f = Frame::new(cfg, &xs, &ys);

    let mut out = String::new();
    header(&mut out, cfg);
    band_polygon(&mut out, &f, &band.times, &band.lower, &band.upper);
    polyline(&mut out, &f, &mean.times, &mean.estimates, "#1f6fb4");
    for (t, y) in points {
        let _ = writeln!(
            out,
            r##"<circle cx="{}" cy="{}" r="2" fill="#444444"/>"##,
            fmt(f.px(*t)),
            fmt(f.py(*y))
        );
    }
    axes(&mut out, cfg, &f);
    out.push_str("</svg>\n");
    out
}

/// Difference curve with band and a zero reference line.
pub fn plot_difference(cfg: &PlotConfig, diff: &ComponentSeries, band: &Band) -> String {
    let mut ys: Vec<f64> = Vec::new();
    ys.extend(&band.lower);
    ys.extend(&band.upper);
    ys.push(0.0);
    let f = Frame::new(cfg, &diff.times, &ys);

    let mut out = String::new();
    header(&mut out, cfg);
    band_polygon(&mut out, &f, &band.times, &band.lower, &band.upper);
    let y0 = f.py(0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{y0}" x2="{}" y2="{y0}" stroke="#999999" stroke-dasharray="4 3"/>"##,
        f.px(f.x0),
        f.px(f.x1)
    );
    polyline(&mut out, &f, &diff.times, &diff.estimates, "#b2452c");
    axes(&mut out, cfg, &f);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_svg() {
        let mean = ComponentSeries {
            times: vec![0.0, 1.0, 2.0],
            estimates: vec![1.0, 2.0, 2.5],
            variances: vec![0.1, 0.05, 0.1],
        };
        let band = crate::analysis::confidence_band(&mean, 0.95).unwrap();
        let svg = plot_component(&PlotConfig::default(), &mean, &band, &[(0.0, 1.1)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polygon"));
        assert!(svg.contains("<polyline"));
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn plots_are_deterministic() {
        let mean = ComponentSeries {
            times: vec![0.0, 1.0],
            estimates: vec![0.0, 1.0],
            variances: vec![0.0, 0.0],
        };
        let band = crate::analysis::confidence_band(&mean, 0.95).unwrap();
        let a = plot_component(&PlotConfig::default(), &mean, &band, &[]);
        let b = plot_component(&PlotConfig::default(), &mean, &band, &[]);
        assert_eq!(a, b);
    }
}
