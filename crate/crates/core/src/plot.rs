//! Minimal native SVG line plots for sweep results (no plotting deps).

use crate::analysis::SweepResult;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 72.0;
const MR: f64 = 24.0;
const MT: f64 = 32.0;
const MB: f64 = 56.0;

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 100.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Render SNR-vs-noise-std curves, one series per scale.
pub fn sweep_svg(result: &SweepResult) -> String {
    // group summary points by scale, preserving parameter order
    let mut scales: Vec<f64> = result.summaries.iter().map(|s| s.scale).collect();
    scales.dedup();
    scales.sort_by(|a, b| b.total_cmp(a));
    scales.dedup();

    let xs: Vec<f64> = result.summaries.iter().map(|s| s.empirical_sigma_m).collect();
    let ys: Vec<f64> = result.summaries.iter().map(|s| s.snr_db_mean).collect();
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);

    let px = |x: f64| ML + (x - x_lo) / (x_hi - x_lo) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{} sweep: SNR vs noise std</text>\n",
        ML,
        result.model
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    for t in ticks(x_lo, x_hi, 5) {
        let x = px(t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{0}\" x2=\"{x}\" y2=\"{1}\" stroke=\"black\"/>\n\
             <text x=\"{x}\" y=\"{2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{3}</text>\n",
            H - MB,
            H - MB + 5.0,
            H - MB + 18.0,
            fmt_tick(t)
        ));
    }
    for t in ticks(y_lo, y_hi, 5) {
        let y = py(t);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{y}\" x2=\"{ML}\" y2=\"{y}\" stroke=\"black\"/>\n\
             <text x=\"{1}\" y=\"{2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{3}</text>\n",
            ML - 5.0,
            ML - 8.0,
            y + 4.0,
            fmt_tick(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">empirical noise std [m]</text>\n",
        (ML + W - MR) / 2.0,
        H - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">SNR [dB]</text>\n",
        (MT + H - MB) / 2.0
    ));

    for (si, &scale) in scales.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let pts: Vec<String> = result
            .summaries
            .iter()
            .filter(|s| s.scale == scale)
            .map(|s| format!("{:.2},{:.2}", px(s.empirical_sigma_m), py(s.snr_db_mean)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            pts.join(" ")
        ));
        for p in &pts {
            let mut it = p.split(',');
            let (x, y) = (it.next().unwrap(), it.next().unwrap());
            svg.push_str(&format!(
                "<circle cx=\"{x}\" cy=\"{y}\" r=\"2.5\" fill=\"{color}\"/>\n"
            ));
        }
        let ly = MT + 16.0 * si as f64 + 8.0;
        svg.push_str(&format!(
            "<rect x=\"{0}\" y=\"{ly}\" width=\"12\" height=\"3\" fill=\"{color}\"/>\n\
             <text x=\"{1}\" y=\"{2}\" font-family=\"sans-serif\" font-size=\"11\">scale {scale}</text>\n",
            W - MR - 110.0,
            W - MR - 92.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}
