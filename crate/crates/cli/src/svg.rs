//! Minimal standalone SVG line plots. Every series is also written into the
//! file as a comment block of `x,y` rows, so a figure can be re-read without
//! parsing the drawing.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dash: Option<&'static str>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Free-form lines written as a comment at the top of the file.
    pub provenance: Vec<String>,
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
            if hi <= lo {
                hi = lo + 1.0;
            }
        } else {
            if hi <= lo {
                let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
                (lo, hi) = (lo - pad, hi + pad);
            }
            let step = nice_step(hi - lo);
            lo = (lo / step).floor() * step;
            hi = (hi / step).ceil() * step;
        }
        Axis { log, lo, hi }
    }

    /// Position in `[0, 1]`, or `None` if the value cannot be drawn.
    fn unit(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let stride = ((b - a) / 8).max(1);
            (a..=b)
                .filter(|k| (k - a) % stride == 0)
                .map(|k| (10f64.powi(k), format!("1e{k}")))
                .collect()
        } else {
            let step = nice_step(self.hi - self.lo);
            let n = ((self.hi - self.lo) / step).round() as i64;
            (0..=n)
                .map(|i| {
                    let v = self.lo + i as f64 * step;
                    let v = if v.abs() < 1e-12 * step { 0.0 } else { v };
                    (v, trim_number(v, step))
                })
                .collect()
        }
    }
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn trim_number(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

/// XML comments may not contain `--`.
fn comment_safe(s: &str) -> String {
    let mut out = s.replace("--", "- -");
    while out.contains("--") {
        out = out.replace("--", "- -");
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn render(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let xa = Axis::fit(all().map(|p| p.0), self.log_x);
        let ya = Axis::fit(all().map(|p| p.1), self.log_y);
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let px = |u: f64| LEFT + u * pw;
        let py = |u: f64| TOP + (1.0 - u) * ph;

        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        for line in &self.provenance {
            let _ = writeln!(out, "<!-- {} -->", comment_safe(line));
        }
        for s in &self.series {
            let _ = writeln!(out, "<!-- data: {}", comment_safe(&s.label));
            let _ = writeln!(out, "x,y");
            for (x, y) in &s.points {
                let _ = writeln!(out, "{x:e},{y:e}");
            }
            let _ = writeln!(out, "-->");
        }
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );

        for (v, label) in xa.ticks() {
            let Some(u) = xa.unit(v) else { continue };
            let x = px(u);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{TOP}" stroke="#dddddd"/>"##,
                TOP + ph
            );
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                TOP + ph + 16.0
            );
        }
        for (v, label) in ya.ticks() {
            let Some(u) = ya.unit(v) else { continue };
            let y = py(u);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
                LEFT + pw
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for s in &self.series {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter_map(|&(x, y)| Some(format!("{:.2},{:.2}", px(xa.unit(x)?), py(ya.unit(y)?))))
                .collect();
            let dash = s.dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.6"{dash} points="{}"/>"#,
                s.color,
                pts.join(" ")
            );
        }

        let lx = LEFT + pw - 190.0;
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="184" height="{:.2}" fill="white" fill-opacity="0.85" stroke="#bbbbbb"/>"##,
            lx - 6.0,
            TOP + 6.0,
            16.0 * self.series.len() as f64 + 6.0
        );
        for (i, s) in self.series.iter().enumerate() {
            let y = TOP + 16.0 + 16.0 * i as f64;
            let dash = s.dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="1.6"{dash}/>"#,
                lx + 26.0,
                s.color
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 32.0,
                y + 4.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Read back the data blocks written by [`Plot::render`].
#[cfg(test)]
pub fn embedded_series(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    let mut lines = svg.lines();
    while let Some(line) = lines.next() {
        let Some(label) = line.strip_prefix("<!-- data: ") else { continue };
        let mut pts = Vec::new();
        for row in lines.by_ref() {
            if row == "-->" {
                break;
            }
            if let Some((x, y)) = row.split_once(',') {
                if let (Ok(x), Ok(y)) = (x.parse(), y.parse()) {
                    pts.push((x, y));
                }
            }
        }
        out.push((label.to_string(), pts));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(log: bool) -> Plot {
        Plot {
            title: "t < 1 & more".into(),
            x_label: "t".into(),
            y_label: "y".into(),
            log_x: log,
            log_y: log,
            series: vec![Series {
                label: "a--b".into(),
                points: vec![(0.0, 1.0), (0.5, 2.0), (1.0, 4.0)],
                color: "black",
                dash: Some("4 2"),
            }],
            provenance: vec!["made -- here".into()],
        }
    }

    #[test]
    fn data_round_trips_through_comments() {
        let svg = plot(false).render();
        let series = embedded_series(&svg);
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].1, vec![(0.0, 1.0), (0.5, 2.0), (1.0, 4.0)]);
        assert!(svg.contains("&lt; 1 &amp; more"));
    }

    #[test]
    fn comments_never_hold_double_dash() {
        let svg = plot(false).render();
        for chunk in svg.split("<!--").skip(1) {
            let body = chunk.split("-->").next().unwrap();
            assert!(!body.contains("--"), "{body}");
        }
    }

    #[test]
    fn log_axes_skip_non_positive_points() {
        let svg = plot(true).render();
        let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(poly.matches(',').count(), 2);
        assert!(svg.contains(">1e0<"));
    }

    #[test]
    fn linear_ticks_are_round() {
        let a = Axis::fit([0.13, 0.97].into_iter(), false);
        assert_eq!((a.lo, a.hi), (0.0, 1.0));
        let labels: Vec<String> = a.ticks().into_iter().map(|t| t.1).collect();
        assert_eq!(labels, ["0.0", "0.2", "0.4", "0.6", "0.8", "1.0"]);
    }
}
