//! Single-curve SVG plot: trend against log10(c), reversed regime shaded.

use std::fmt::Write;

use crate::analyze::Curve;

const W: f64 = 640.0;
const H: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 44.0;

struct Scale {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Scale {
    fn x(&self, c: f64) -> f64 {
        LEFT + (c.log10() - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn y(&self, t: f64) -> f64 {
        H - BOTTOM - (t - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(curve: &Curve) -> String {
    let (cmin, cmax) = match (curve.points.first(), curve.points.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => (1e-8, 1e8),
    };
    let (mut lo, mut hi) = curve.points.iter().fold((0.0f64, 0.0f64), |(l, h), p| (l.min(p.1), h.max(p.1)));
    if hi - lo == 0.0 {
        lo = -1.0;
        hi = 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let x1 = if cmax > cmin { cmax.log10() } else { cmin.log10() + 1.0 };
    let sc = Scale { x0: cmin.log10(), x1, y0: lo - pad, y1: hi + pad };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&curve.title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);

    for iv in curve.regime.intervals() {
        let a = iv.lo.value().max(cmin);
        let b = iv.hi.as_ref().map_or(cmax, |h| h.value()).min(cmax);
        if b <= a {
            continue;
        }
        let (xa, xb) = (sc.x(a), sc.x(b));
        let _ = writeln!(
            s,
            r##"<rect class="regime" x="{xa:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="#e15759" fill-opacity="0.25"/>"##,
            xb - xa,
            H - TOP - BOTTOM
        );
    }

    // Axes, zero line and decade ticks.
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    let y0 = sc.y(0.0);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        W - RIGHT
    );
    let (d0, d1) = (sc.x0.ceil() as i32, sc.x1.floor() as i32);
    let step = ((d1 - d0) / 8).max(1);
    for d in (d0..=d1).step_by(step as usize) {
        let x = sc.x(10f64.powi(d));
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, H - BOTTOM + 16.0);
    }
    for t in [sc.y0 + pad, 0.0, sc.y1 - pad] {
        let y = sc.y(t);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.3}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">c (log scale)</text>"#, (LEFT + W - RIGHT) / 2.0, H - 8.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">trend</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0
    );
    let _ = writeln!(s, r#"<text x="{LEFT}" y="20" font-size="13">{}</text>"#, escape(&curve.title));

    let pts: Vec<String> = curve.points.iter().map(|(c, t)| format!("{:.2},{:.2}", sc.x(*c), sc.y(*t))).collect();
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#4e79a7" stroke-width="1.5" points="{}"/>"##, pts.join(" "));

    for x in curve.crossings.iter().filter(|x| x.c >= cmin && x.c <= cmax) {
        let px = sc.x(x.c);
        let _ = writeln!(
            s,
            r#"<line class="crossing" x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="black" stroke-dasharray="2 2"/>"#,
            H - BOTTOM
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">c = {}</text>"#, px + 4.0, TOP + 14.0, escape(&x.label));
    }
    s.push_str("</svg>\n");
    s
}
