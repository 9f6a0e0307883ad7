//! Standalone SVG 1.1 scatter plots with a logarithmic y axis and an
//! optional fitted line. Output depends only on the inputs.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

pub struct LogPlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// `(x, y)` with `y > 0`; other points are skipped.
    pub points: &'a [(f64, f64)],
    /// `log10 y = a + b x` drawn over `[x0, x1]`.
    pub line: Option<(f64, f64, f64, f64)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(plot: &LogPlot) -> String {
    let pts: Vec<(f64, f64)> =
        plot.points.iter().filter(|(x, y)| x.is_finite() && *y > 0.0 && y.is_finite()).map(|(x, y)| (*x, y.log10())).collect();
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    if let Some((a, b, x0, x1)) = plot.line {
        xs.extend([x0, x1]);
        ys.extend([a + b * x0, a + b * x1]);
    }
    let (mut xmin, mut xmax) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
    let (mut ymin, mut ymax) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(*y), hi.max(*y)));
    if !xmin.is_finite() {
        (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
    }
    if xmax - xmin < 1e-12 {
        xmin -= 0.5;
        xmax += 0.5;
    }
    ymin = ymin.floor();
    ymax = ymax.ceil();
    if ymax - ymin < 1.0 {
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - ymin) / (ymax - ymin) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        esc(plot.title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let xv = xmin + (xmax - xmin) * f64::from(k) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.3}</text>"#,
            sx(xv),
            y0 + 16.0,
            xv
        );
    }
    let mut e = ymin;
    let step = ((ymax - ymin) / 8.0).ceil().max(1.0);
    while e <= ymax + 1e-9 {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">1e{}</text>"#,
            x0 - 6.0,
            sy(e) + 4.0,
            e as i64
        );
        e += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0,
        esc(plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        esc(plot.y_label)
    );
    for (x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue"/>"#, sx(*x), sy(*y));
    }
    if let Some((a, b, lo, hi)) = plot.line {
        let _ = writeln!(
            s,
            r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="1.5"/>"#,
            sx(lo),
            sy(a + b * lo),
            sx(hi),
            sy(a + b * hi)
        );
    }
    s.push_str("</svg>\n");
    s
}
