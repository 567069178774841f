use std::fmt::Write as _;
use std::path::Path;

use super::{CurveSeries, ReportingError, Scale};

pub const SVG_WIDTH: f64 = 960.0;
pub const SVG_HEIGHT: f64 = 540.0;

const LEFT: f64 = 90.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Maps a data value into axis space; `None` when it cannot be drawn.
fn to_axis(v: f64, scale: Scale) -> Option<f64> {
    match scale {
        Scale::Linear => Some(v),
        Scale::Log if v > 0.0 => Some(v.log10()),
        Scale::Log => None,
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    scale: Scale,
}

impl Axis {
    fn new(vals: &[f64], scale: Scale) -> Self {
        let mut lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, scale }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in axis space with labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => {
                let a = self.lo.floor() as i64;
                let b = self.hi.ceil() as i64;
                let step = ((b - a) / 8).max(1);
                (a..=b)
                    .step_by(step as usize)
                    .map(|e| e as f64)
                    .filter(|&e| e >= self.lo - 1e-9 && e <= self.hi + 1e-9)
                    .map(|e| (e, format!("1e{}", e as i64)))
                    .collect()
            }
            Scale::Linear => {
                let span = self.hi - self.lo;
                let raw = span / 5.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0]
                    .iter()
                    .map(|m| m * mag)
                    .find(|s| *s >= raw)
                    .unwrap_or(10.0 * mag);
                let start = (self.lo / step).ceil() as i64;
                let end = (self.hi / step).floor() as i64;
                (start..=end)
                    .map(|k| {
                        let v = k as f64 * step;
                        (v, tick_label(v, step))
                    })
                    .collect()
            }
        }
    }
}

fn tick_label(v: f64, step: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1e5 || v.abs() < 1e-3 {
        return format!("{v:.1e}");
    }
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{v:.decimals$}")
}

/// Renders a standalone 960x540 line chart.
pub fn svg_string(series: &[CurveSeries], title: &str) -> Result<String, ReportingError> {
    if series.is_empty() {
        return Err(ReportingError::InvalidSeries {
            name: "<none>".into(),
            reason: "at least one series is required".into(),
        });
    }
    if let Some(s) = series.iter().find(|s| s.points.len() < 2) {
        return Err(ReportingError::InvalidSeries {
            name: s.name.clone(),
            reason: "at least two points are required".into(),
        });
    }
    let x_scale = series[0].x_scale;
    let y_scale = series[0].y_scale;

    let mut warnings = Vec::new();
    let mut drawn: Vec<Vec<(f64, f64)>> = Vec::with_capacity(series.len());
    for s in series {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter_map(|&(x, y)| Some((to_axis(x, x_scale)?, to_axis(y, y_scale)?)))
            .collect();
        let clipped = s.points.len() - pts.len();
        if clipped > 0 {
            warnings.push(format!(
                "warning: {} point(s) of '{}' clipped (non-positive on log axis)",
                clipped, s.name
            ));
        }
        drawn.push(pts);
    }
    let xs: Vec<f64> = drawn.iter().flatten().map(|p| p.0).collect();
    let ys: Vec<f64> = drawn.iter().flatten().map(|p| p.1).collect();
    let ax = Axis::new(&xs, x_scale);
    let ay = Axis::new(&ys, y_scale);

    let pw = SVG_WIDTH - LEFT - RIGHT;
    let ph = SVG_HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + ax.frac(v) * pw;
    let py = |v: f64| TOP + (1.0 - ay.frac(v)) * ph;

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = SVG_WIDTH,
        h = SVG_HEIGHT
    );
    let _ = writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        o,
        r#"<text x="{:.1}" y="28" font-size="16" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        o,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let _ = writeln!(o, r##"<g class="ticks" stroke="#dddddd">"##);
    for (v, _) in ax.ticks() {
        let _ = writeln!(
            o,
            r#"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{y2}"/>"#,
            x = px(v),
            y2 = TOP + ph
        );
    }
    for (v, _) in ay.ticks() {
        let _ = writeln!(
            o,
            r#"<line x1="{LEFT}" y1="{y:.2}" x2="{x2}" y2="{y:.2}"/>"#,
            y = py(v),
            x2 = LEFT + pw
        );
    }
    let _ = writeln!(o, "</g>");
    for (v, label) in ax.ticks() {
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(v),
            TOP + ph + 18.0,
            xml_escape(&label)
        );
    }
    for (v, label) in ay.ticks() {
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py(v) + 4.0,
            xml_escape(&label)
        );
    }
    let _ = writeln!(
        o,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        SVG_HEIGHT - 30.0,
        xml_escape(&series[0].x_label)
    );
    let _ = writeln!(
        o,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        xml_escape(&series[0].y_label)
    );

    for (i, pts) in drawn.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for (x, y) in pts {
            let _ = write!(path, "{:.2},{:.2} ", px(*x), py(*y));
        }
        let _ = writeln!(
            o,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.trim_end()
        );
    }

    let _ = writeln!(o, r#"<g class="legend">"#);
    for (i, s) in series.iter().enumerate() {
        let y = TOP + 14.0 + 20.0 * i as f64;
        let x = LEFT + pw + 16.0;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            o,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="3"/>"#,
            x + 24.0
        );
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}">{}</text>"#,
            x + 30.0,
            y + 4.0,
            xml_escape(&s.name)
        );
    }
    let _ = writeln!(o, "</g>");

    for (i, w) in warnings.iter().enumerate() {
        let _ = writeln!(
            o,
            r##"<text class="warning" x="{LEFT}" y="{:.1}" fill="#b00000">{}</text>"##,
            SVG_HEIGHT - 8.0 - 14.0 * (warnings.len() - 1 - i) as f64,
            xml_escape(w)
        );
    }
    o.push_str("</svg>\n");
    Ok(o)
}

pub fn write_svg_chart(series: &[CurveSeries], path: &Path, title: &str) -> Result<(), ReportingError> {
    let s = svg_string(series, title)?;
    std::fs::write(path, s).map_err(|e| ReportingError::io(path, e))
}
