//! Minimal static SVG line plots for the plot-data files.

use std::fmt::Write;

pub struct Axis {
    pub label: &'static str,
    pub log: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
        return (a..=b)
            .map(f64::from)
            .filter(|t| *t >= lo - 1e-9 && *t <= hi + 1e-9)
            .collect();
    }
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn label(t: f64, log: bool) -> String {
    if log {
        format!("1e{}", t as i32)
    } else {
        format!("{t:.3}")
    }
}

/// Renders one polyline; points with non-positive coordinates on a log axis are dropped.
pub fn line_plot(title: &str, x: Axis, y: Axis, points: &[(f64, f64)]) -> String {
    let tf = |v: f64, log: bool| if log { v.log10() } else { v };
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(a, b)| {
            (!x.log || *a > 0.0) && (!y.log || *b > 0.0) && a.is_finite() && b.is_finite()
        })
        .map(|&(a, b)| (tf(a, x.log), tf(b, y.log)))
        .collect();
    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let span = |sel: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(sel).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(|p| p.0);
    let (y0, y1) = span(|p| p.1);
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = write!(
        svg,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for t in ticks(x0, x1, x.log) {
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(t),
            H - PAD + 18.0,
            label(t, x.log)
        );
    }
    for t in ticks(y0, y1, y.log) {
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            PAD - 6.0,
            sy(t) + 4.0,
            label(t, y.log)
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        x.label
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        y.label
    );
    svg.push_str(r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.5" points=""##);
    for (a, b) in &pts {
        let _ = write!(svg, "{:.2},{:.2} ", sx(*a), sy(*b));
    }
    svg.push_str("\"/></svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_a_polyline_and_skips_nonpositive_log_points() {
        let s = line_plot(
            "g",
            Axis {
                label: "delta",
                log: true,
            },
            Axis {
                label: "g",
                log: true,
            },
            &[(0.0, 1.0), (0.01, 1e-3), (0.1, 1e-2)],
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<polyline").count(), 1);
        let empty = line_plot(
            "e",
            Axis {
                label: "x",
                log: false,
            },
            Axis {
                label: "y",
                log: false,
            },
            &[],
        );
        assert!(!empty.contains("polyline"));
    }
}
