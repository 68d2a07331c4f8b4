//! Minimal SVG line plots: axes box, polylines, corner labels. CSV is the
//! authoritative output; these are quick-look figures only.

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

const COLORS: [&str; 6] = ["#1f6f8b", "#d1495b", "#66a182", "#edae49", "#8d5a97", "#555555"];
const W: f64 = 860.0;
const H: f64 = 520.0;
const MARGIN: f64 = 60.0;

pub fn line_plot(title: &str, series: &[Series<'_>]) -> String {
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in s.points {
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if !x_lo.is_finite() || x_hi <= x_lo {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    if !y_lo.is_finite() || y_hi <= y_lo {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    let pad = 0.03 * (y_hi - y_lo);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);

    let sx = (W - 2.0 * MARGIN) / (x_hi - x_lo);
    let sy = (H - 2.0 * MARGIN) / (y_hi - y_lo);
    let px = |x: f64| MARGIN + (x - x_lo) * sx;
    let py = |y: f64| H - MARGIN - (y - y_lo) * sy;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#222\" stroke-width=\"1\"/>\n",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"{MARGIN}\" y=\"28\" font-family=\"monospace\" font-size=\"15\">{}</text>\n",
        escape(title)
    ));
    // corner tick labels
    let ticks = [
        (MARGIN, H - MARGIN + 18.0, format!("{x_lo:.4}"), "start"),
        (W - MARGIN, H - MARGIN + 18.0, format!("{x_hi:.4}"), "end"),
        (MARGIN - 6.0, H - MARGIN, format!("{y_lo:.4}"), "end"),
        (MARGIN - 6.0, MARGIN + 6.0, format!("{y_hi:.4}"), "end"),
    ];
    for (x, y, label, anchor) in ticks {
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"{anchor}\">{label}</text>\n"
        ));
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut path = String::new();
        for &(x, y) in s.points {
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            if path.is_empty() {
                path.push_str(&format!("M {:.2} {:.2}", px(x), py(y)));
            } else {
                path.push_str(&format!(" L {:.2} {:.2}", px(x), py(y)));
            }
        }
        out.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" fill=\"{color}\">{}</text>\n",
            MARGIN + 10.0,
            MARGIN + 20.0 + 16.0 * i as f64,
            escape(s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
