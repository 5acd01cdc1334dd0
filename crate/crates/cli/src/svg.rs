//! Minimal static SVG plots: XY charts and a bond-current map.

use std::fmt::Write;

use fqh_core::observables::CurrentField;
use fqh_core::Lattice;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Symmetric error bars, one per point.
    pub errors: Option<Vec<f64>>,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, style: Style::Line, errors: None }
    }

    pub fn markers(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, style: Style::Markers, errors: None }
    }

    pub fn with_errors(mut self, e: Vec<f64>) -> Self {
        self.errors = Some(e);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn push(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round tick spacing of 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn render(chart: &Chart) -> String {
    let (x0, x1) = bounds(chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(chart.series.iter().flat_map(|s| {
        let e = s.errors.clone().unwrap_or_else(|| vec![0.0; s.points.len()]);
        s.points.iter().zip(e).flat_map(|(p, e)| [p.1 - e, p.1 + e]).collect::<Vec<_>>()
    }));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(&chart.title));
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, label(t));
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, label(t));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, escape(&chart.x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );

    for (k, s) in chart.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).copied().collect();
        match s.style {
            Style::Line => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            }
            Style::Markers => {
                for (x, y) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(*x), sy(*y));
                }
            }
        }
        if let Some(errs) = &s.errors {
            for ((x, y), e) in s.points.iter().zip(errs) {
                let _ = writeln!(
                    out,
                    r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                    sx(*x),
                    sy(y - e),
                    sy(y + e)
                );
            }
        }
        let ly = TOP + 10.0 + 16.0 * k as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(out, r#"<rect x="{lx}" y="{}" width="12" height="4" fill="{color}"/>"#, ly - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 18.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// Bond currents drawn as arrows between sites, width proportional to `|j|`; one panel
/// per field, side by side.
pub fn render_currents(lattice: &Lattice, panels: &[(String, &CurrentField)]) -> String {
    let cell = 90.0;
    let margin = 60.0;
    let pw = margin * 2.0 + cell * (lattice.lx() - 1) as f64;
    let w = pw * panels.len().max(1) as f64;
    let h = margin * 2.0 + cell * (lattice.ly() - 1) as f64 + 20.0;

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r##"<defs><marker id="head" markerWidth="6" markerHeight="6" refX="3" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#d62728"/></marker></defs>"##);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (k, (title, field)) in panels.iter().enumerate() {
        let x0 = pw * k as f64;
        let pos = |s: usize| {
            let (x, y) = lattice.coords(s);
            (x0 + margin + cell * x as f64, h - margin - cell * y as f64)
        };
        let jmax = field.values().iter().fold(0.0f64, |m, j| m.max(j.abs())).max(1e-300);
        let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, x0 + pw / 2.0, escape(title));
        for (b, j) in lattice.bonds().iter().zip(field.values()) {
            let ((ax, ay), (bx, by)) = (pos(b.a), pos(b.b));
            let _ = writeln!(out, r##"<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke="#cccccc"/>"##);
            if j.abs() < 1e-3 * jmax {
                continue;
            }
            let ((fx, fy), (tx, ty)) = if *j > 0.0 { ((ax, ay), (bx, by)) } else { ((bx, by), (ax, ay)) };
            let (sx, sy) = (fx + 0.25 * (tx - fx), fy + 0.25 * (ty - fy));
            let (ex, ey) = (fx + 0.7 * (tx - fx), fy + 0.7 * (ty - fy));
            let width = 0.5 + 4.0 * j.abs() / jmax;
            let _ = writeln!(
                out,
                r##"<line x1="{sx:.2}" y1="{sy:.2}" x2="{ex:.2}" y2="{ey:.2}" stroke="#d62728" stroke-width="{width:.2}" marker-end="url(#head)"/>"##
            );
        }
        for s in 0..lattice.num_sites() {
            let (x, y) = pos(s);
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="6" fill="black"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">max |j| = {} photons/us</text>"#,
            x0 + pw / 2.0,
            h - 12.0,
            label(jmax)
        );
    }
    out.push_str("</svg>\n");
    out
}
