//! Minimal SVG rendering of empirical CDFs.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Step plot of one or more ECDFs on a shared `[0, x_max] × [0, 1]` frame.
pub fn ecdf_svg(title: &str, series: &[(&str, &[(f64, f64)])]) -> String {
    let x_max = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.0))
        .fold(1.0_f64, f64::max);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * pw;
    let sy = |y: f64| TOP + (1.0 - y) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="16" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, escape(title));
    // axes and ticks
    let _ = writeln!(
        s,
        r#"<path d="M{:.1},{:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        LEFT,
        TOP,
        TOP + ph,
        LEFT + pw
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (x, y) = (sx(f * x_max), sy(f));
        let _ = writeln!(s, r#"<path d="M{x:.1},{:.1} v5 M{LEFT:.1},{y:.1} h-5" stroke="black"/>"#, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#, TOP + ph + 18.0, f * x_max);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{f:.2}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">End utility</text>"#, LEFT + pw / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Cumulative fraction</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = format!("M{:.2},{:.2}", sx(0.0), sy(0.0));
        let mut prev = 0.0;
        for &(x, y) in pts.iter() {
            let _ = write!(d, " H{:.2} V{:.2}", sx(x), sy(y));
            prev = y;
        }
        let _ = write!(d, " H{:.2}", sx(x_max));
        debug_assert!(pts.is_empty() || prev == 1.0);
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        let ly = TOP + 12.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(s, r#"<path d="M{lx:.1},{ly:.1} h18" stroke="{color}" stroke-width="2"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 24.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
