//! A minimal SVG writer: axes, polylines and bars.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str, x_label: &str, y_label: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0, MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    out
}

struct Axis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

fn tick_label(out: &mut String, x: f64, y: f64, anchor: &str, text: &str) {
    let _ = writeln!(out, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{text}</text>"#);
}

/// Log-log plot of positive points, one polyline with markers per series.
pub fn loglog_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut out = header(title, &format!("{x_label} (log scale)"), &format!("{y_label} (log scale)"));
    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    if !points.is_empty() {
        let bound = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| {
            points.iter().map(pick).fold(init, f)
        };
        let xs = Axis::new(
            bound(f64::min, f64::INFINITY, |p| p.0),
            bound(f64::max, f64::NEG_INFINITY, |p| p.0),
            MARGIN + 10.0,
            WIDTH - MARGIN,
        );
        let ys = Axis::new(
            bound(f64::min, f64::INFINITY, |p| p.1).floor(),
            bound(f64::max, f64::NEG_INFINITY, |p| p.1).ceil(),
            HEIGHT - MARGIN,
            MARGIN,
        );
        let mut decade = ys.lo;
        while decade <= ys.hi {
            tick_label(&mut out, MARGIN - 5.0, ys.map(decade) + 4.0, "end", &format!("1e{decade}"));
            decade += 1.0;
        }
        for (i, s) in series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let mapped: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
                .map(|(x, y)| (xs.map(x.log10()), ys.map(y.log10())))
                .collect();
            let path: Vec<String> = mapped.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
            for ((x, y), (raw_x, _)) in mapped.iter().zip(&s.points) {
                let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                tick_label(&mut out, *x, HEIGHT - MARGIN + 16.0, "middle", &format!("{raw_x}"));
            }
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                WIDTH - MARGIN - 120.0,
                MARGIN + 16.0 * i as f64,
                escape(&s.label)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Histogram with `bins` equal bins over the range of all samples; groups are
/// drawn as side-by-side bars in each bin.
pub fn histogram(title: &str, x_label: &str, groups: &[(String, Vec<f64>)], bins: usize) -> String {
    let mut out = header(title, x_label, "count");
    let all: Vec<f64> = groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    if !all.is_empty() {
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let xs = Axis::new(lo, hi, MARGIN + 10.0, WIDTH - MARGIN);
        let width = (xs.hi - xs.lo) / bins as f64;
        let counts: Vec<Vec<usize>> = groups
            .iter()
            .map(|(_, values)| {
                let mut c = vec![0; bins];
                for &v in values {
                    let b = (((v - xs.lo) / width) as usize).min(bins - 1);
                    c[b] += 1;
                }
                c
            })
            .collect();
        let top = counts.iter().flatten().copied().max().unwrap_or(1).max(1);
        let ys = Axis::new(0.0, top as f64, HEIGHT - MARGIN, MARGIN);
        tick_label(&mut out, MARGIN - 5.0, ys.map(top as f64) + 4.0, "end", &top.to_string());
        tick_label(&mut out, MARGIN - 5.0, ys.map(0.0) + 4.0, "end", "0");
        tick_label(&mut out, xs.map(xs.lo), HEIGHT - MARGIN + 16.0, "middle", &format!("{:.3}", xs.lo));
        tick_label(&mut out, xs.map(xs.hi), HEIGHT - MARGIN + 16.0, "middle", &format!("{:.3}", xs.hi));
        let slot = (xs.map(xs.lo + width) - xs.map(xs.lo)) / groups.len() as f64;
        for (g, ((label, _), c)) in groups.iter().zip(&counts).enumerate() {
            let color = COLORS[g % COLORS.len()];
            for (b, &count) in c.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let x = xs.map(xs.lo + b as f64 * width) + g as f64 * slot;
                let y = ys.map(count as f64);
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.8"/>"#,
                    slot,
                    ys.map(0.0) - y
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                WIDTH - MARGIN - 120.0,
                MARGIN + 16.0 * g as f64,
                escape(label)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_well_formed() {
        let series = [Series {
            label: "a<b".into(),
            points: vec![(16.0, 1e-2), (32.0, 2.5e-3), (64.0, 6.25e-4)],
        }];
        let svg = loglog_plot("errors", "N", "eps", &series);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("a&lt;b"));
        let hist = histogram("t", "t", &[("N = 8".into(), vec![0.9, 1.0, 1.0, 1.1])], 4);
        assert!(hist.contains("<rect x"));
        assert_eq!(histogram("t", "t", &[], 4).matches("<rect").count(), 1);
    }
}
