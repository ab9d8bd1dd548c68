//! Minimal static SVG renderer for cumulative error distribution curves.

/// Plot `(threshold, fraction)` pairs as a polyline with axes and ticks.
/// Thresholds map onto the x axis from 0 to their maximum, fractions onto
/// the y axis from 0 to 1.
pub fn ced_svg(ced: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 50.0;
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let x_max = ced
        .iter()
        .map(|&(t, _)| t)
        .fold(0.0_f64, f64::max)
        .max(1e-12);

    let x_of = |t: f64| LEFT + plot_w * (t / x_max);
    let y_of = |f: f64| TOP + plot_h * (1.0 - f);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));

    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let x = x_of(frac * x_max);
        let y = y_of(frac);
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\n",
            TOP,
            TOP + plot_h
        ));
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            LEFT,
            LEFT + plot_w
        ));
        s.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{:.3}</text>\n",
            TOP + plot_h + 18.0,
            frac * x_max
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{frac:.1}</text>\n",
            LEFT - 6.0,
            y + 4.0
        ));
    }

    s.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"black\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">\
         normalized error</text>\n",
        LEFT + plot_w / 2.0,
        H - 12.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.1})\">fraction of images</text>\n",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    ));

    if !ced.is_empty() {
        let pts: Vec<String> = ced
            .iter()
            .map(|&(t, frac)| format!("{:.2},{:.2}", x_of(t), y_of(frac)))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
    }
    s.push_str("</svg>\n");
    s
}
