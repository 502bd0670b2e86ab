//! Static SVG line charts.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            series: Vec::new(),
        }
    }
}

struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(scale: Scale, values: impl Iterator<Item = f64>) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = match scale {
                Scale::Linear => v,
                Scale::Log if v > 0.0 => v.log10(),
                Scale::Log => continue,
            };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-300 {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
            lo -= pad;
            hi += pad;
        }
        if scale == Scale::Log {
            lo = lo.floor();
            hi = hi.ceil().max(lo + 1.0);
        }
        Some(Axis { scale, lo, hi })
    }

    fn map(&self, v: f64) -> Option<f64> {
        let v = match self.scale {
            Scale::Linear => v,
            Scale::Log if v > 0.0 => v.log10(),
            Scale::Log => return None,
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    /// `(fraction, label)` pairs.
    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => {
                let stride = ((self.hi - self.lo) / 6.0).ceil().max(1.0) as i32;
                (self.lo as i32..=self.hi as i32)
                    .step_by(stride as usize)
                    .map(|e| ((e as f64 - self.lo) / (self.hi - self.lo), format!("1e{e}")))
                    .collect()
            }
            Scale::Linear => {
                let raw = (self.hi - self.lo) / 5.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
                let mut out = Vec::new();
                let mut v = (self.lo / step).ceil() * step;
                while v <= self.hi + 1e-9 * step {
                    out.push(((v - self.lo) / (self.hi - self.lo), format!("{}", (v / step).round() * step)));
                    v += step;
                }
                out
            }
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Draws `chart` at vertical offset `y0`.
fn draw(out: &mut String, chart: &Chart, y0: f64) {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let _ = writeln!(out, r#"<g transform="translate(0,{y0})">"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        esc(&chart.title)
    );
    let _ = writeln!(out, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    let xs = Axis::fit(chart.x_scale, chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = Axis::fit(chart.y_scale, chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let (Some(xa), Some(ya)) = (xs, ys) else {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">no data</text></g>"#, LEFT + pw / 2.0, TOP + ph / 2.0);
        return;
    };
    for (f, label) in xa.ticks() {
        let x = LEFT + f * pw;
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, TOP, TOP + ph);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-size="11">{label}</text>"#, TOP + ph + 16.0);
    }
    for (f, label) in ya.ticks() {
        let y = TOP + (1.0 - f) * ph;
        let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        LEFT + pw / 2.0,
        H - 10.0,
        esc(&chart.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle" font-size="12">{}</text>"#,
        TOP + ph / 2.0,
        esc(&chart.y_label)
    );
    for (i, s) in chart.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for &(x, y) in &s.points {
            match (xa.map(x), ya.map(y)) {
                (Some(fx), Some(fy)) => {
                    let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, LEFT + fx * pw, TOP + (1.0 - fy) * ph);
                    pen_up = false;
                }
                _ => pen_up = true,
            }
        }
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, d.trim_end());
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 22.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11">{}</text>"#, lx + 28.0, ly + 4.0, esc(&s.label));
    }
    out.push_str("</g>\n");
}

/// Charts stacked vertically in one document.
pub fn render(charts: &[Chart]) -> String {
    let height = H * charts.len().max(1) as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{height}\" viewBox=\"0 0 {W} {height}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, c) in charts.iter().enumerate() {
        draw(&mut out, c, H * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series_and_legend() {
        let mut c = Chart::new("t < 0", "t", "x");
        c.series.push(Series::new("a", (0..10).map(|k| (k as f64, (k * k) as f64)).collect()));
        c.series.push(Series::new("x", vec![(0.0, 1.0), (9.0, 2.0)]).dashed());
        let svg = render(&[c]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("t &lt; 0"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn log_axis_skips_non_positive() {
        let mut c = Chart::new("gap", "t", "|a-x|");
        c.y_scale = Scale::Log;
        c.series.push(Series::new("a", vec![(0.0, 1e-3), (1.0, 0.0), (2.0, 1e-1)]));
        let svg = render(&[c]);
        let path = svg.lines().find(|l| l.starts_with("<path")).unwrap();
        assert_eq!(path.matches('M').count(), 2);
        assert!(svg.contains("1e-3") && svg.contains("1e-1"));
        let empty = Chart::new("none", "t", "y");
        assert!(render(&[empty]).contains("no data"));
    }
}
