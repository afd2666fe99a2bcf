//! Minimal SVG line and bar charts on a fixed 800×500 canvas.

use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One curve, optionally with a shaded `(x, lo, hi)` band.
#[derive(Debug, Clone, Default)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub band: Vec<(f64, f64, f64)>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
            if hi <= lo {
                hi = lo + 1.0;
            }
        } else if hi <= lo {
            hi = lo + 1.0;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.max(1e-300).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            (self.lo as i32..=self.hi as i32)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            (0..=5)
                .map(|k| {
                    let v = self.lo + (self.hi - self.lo) * k as f64 / 5.0;
                    (v, format_tick(v))
                })
                .collect()
        }
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e5) {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n\
         <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        WIDTH / 2.0,
        escape(title),
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 15.0,
        escape(x_label),
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        escape(y_label),
    );
}

fn px(ax: &Axis, v: f64) -> f64 {
    LEFT + ax.frac(v) * (WIDTH - LEFT - RIGHT)
}

fn py(ay: &Axis, v: f64) -> f64 {
    HEIGHT - BOTTOM - ay.frac(v) * (HEIGHT - TOP - BOTTOM)
}

fn frame(out: &mut String, ax: &Axis, ay: &Axis) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    for (v, label) in ax.ticks() {
        let x = px(ax, v);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"black\"/><text x=\"{x:.2}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            y0 + 5.0,
            y0 + 18.0
        );
    }
    for (v, label) in ay.ticks() {
        let y = py(ay, v);
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
}

/// Line chart; with `log_log` both axes are decimal-log scaled.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_log: bool) -> String {
    let xs = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0).chain(s.band.iter().map(|b| b.0)));
    let ax = Axis::new(xs, log_log);
    let ys = series.iter().flat_map(|s| {
        s.points
            .iter()
            .map(|p| p.1)
            .chain(s.band.iter().flat_map(|b| [b.1, b.2]))
    });
    let ay = Axis::new(ys, log_log);
    let mut out = String::new();
    header(&mut out, title, x_label, y_label);
    frame(&mut out, &ax, &ay);
    for (k, s) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        if !s.band.is_empty() {
            let upper = s
                .band
                .iter()
                .map(|b| format!("{:.2},{:.2}", px(&ax, b.0), py(&ay, b.2)));
            let lower = s
                .band
                .iter()
                .rev()
                .map(|b| format!("{:.2},{:.2}", px(&ax, b.0), py(&ay, b.1)));
            let pts: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                out,
                "<polygon points=\"{}\" fill=\"{colour}\" fill-opacity=\"0.2\" stroke=\"none\"/>",
                pts.join(" ")
            );
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| !log_log || (p.0 > 0.0 && p.1 > 0.0))
            .map(|p| format!("{:.2},{:.2}", px(&ax, p.0), py(&ay, p.1)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{colour}\">{}</text>",
            LEFT + 10.0,
            TOP + 16.0 + 16.0 * k as f64,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart on `[0, 1]` with an optional dashed reference level.
pub fn bar_plot(title: &str, y_label: &str, bars: &[(String, f64)], reference: Option<f64>) -> String {
    let ax = Axis {
        lo: 0.0,
        hi: bars.len().max(1) as f64,
        log: false,
    };
    let ay = Axis {
        lo: 0.0,
        hi: 1.0,
        log: false,
    };
    let mut out = String::new();
    header(&mut out, title, "", y_label);
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for (v, label) in ay.ticks() {
        let y = py(&ay, v);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            LEFT - 8.0,
            y + 4.0
        );
    }
    for (k, (label, value)) in bars.iter().enumerate() {
        let x0 = px(&ax, k as f64 + 0.2);
        let x1 = px(&ax, k as f64 + 0.8);
        let y = py(&ay, value.clamp(0.0, 1.0));
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{} ({value:.3})</text>",
            x1 - x0,
            HEIGHT - BOTTOM - y,
            COLOURS[k % COLOURS.len()],
            (x0 + x1) / 2.0,
            HEIGHT - BOTTOM + 18.0,
            escape(label)
        );
    }
    if let Some(r) = reference {
        let y = py(&ay, r);
        let _ = writeln!(
            out,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.1}\" y2=\"{y:.2}\" stroke=\"black\" stroke-dasharray=\"6 4\"/>",
            WIDTH - RIGHT
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = Series {
            label: "mean <Reg>".into(),
            points: vec![(1.0, 0.0), (2.0, 1.0), (3.0, 4.0)],
            band: vec![(1.0, 0.0, 0.5), (2.0, 0.5, 1.5), (3.0, 3.0, 5.0)],
        };
        let svg = line_plot("regret", "t", "Reg(t)", &[s], false);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("width=\"800\" height=\"500\""));
        assert!(svg.contains("&lt;Reg&gt;"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }

    #[test]
    fn log_axes_use_decades() {
        let s = Series {
            label: "x".into(),
            points: vec![(1000.0, 20.0), (8000.0, 90.0)],
            band: vec![],
        };
        let svg = line_plot("sweep", "T", "Reg", &[s], true);
        assert!(svg.contains(">1e3<") && svg.contains(">1e4<"));
        assert!(svg.contains(">1e1<") && svg.contains(">1e2<"));
    }

    #[test]
    fn bar_plot_has_reference() {
        let svg = bar_plot("coverage", "frequency", &[("covered".into(), 0.99)], Some(0.95));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("covered (0.990)"));
    }
}
