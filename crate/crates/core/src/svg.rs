//! SVG rendering of packings, y pointing up.

use std::fmt::Write as _;

use crate::geometry::Rect;
use crate::packing::{packing_height, Packing};
use crate::scalar::Scalar;

const SCALE: f64 = 400.0;
const MARGIN: f64 = 10.0;

fn px(v: &Scalar) -> f64 {
    v.to_f64() * SCALE
}

/// Strip outline, squares with id labels, and optional hatched regions
/// (for example hole cells). Identical inputs give identical bytes.
pub fn render_svg(p: &Packing, overlay: &[Rect]) -> String {
    let top = overlay.iter().map(|r| r.ys.hi.clone()).fold(packing_height(p), Scalar::max);
    let h = px(&top).max(SCALE * 0.25);
    let (w_total, h_total) = (SCALE + 2.0 * MARGIN, h + 2.0 * MARGIN);
    let y_of = |y: f64| MARGIN + h - y;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w_total:.3}" height="{h_total:.3}" viewBox="0 0 {w_total:.3} {h_total:.3}">"#
    );
    let _ = writeln!(
        s,
        r##"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" stroke="#c0392b" stroke-width="2"/></pattern></defs>"##
    );
    let _ = writeln!(
        s,
        r##"<path d="M {x0:.3} {yt:.3} L {x0:.3} {yb:.3} L {x1:.3} {yb:.3} L {x1:.3} {yt:.3}" fill="none" stroke="#000" stroke-width="1.5"/>"##,
        x0 = MARGIN,
        x1 = MARGIN + SCALE,
        yt = MARGIN,
        yb = MARGIN + h
    );
    for pl in p.placements() {
        let (x, y, a) = (px(&pl.x), px(&pl.y), px(pl.side()));
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="{a:.3}" height="{a:.3}" fill="#aec6e8" stroke="#1f3b5c" stroke-width="0.8"/>"##,
            MARGIN + x,
            y_of(y + a)
        );
        let font = (a * 0.4).clamp(4.0, 14.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="{font:.3}" font-family="monospace" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            MARGIN + x + a / 2.0,
            y_of(y + a / 2.0),
            pl.item.id
        );
    }
    for r in overlay {
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="url(#hatch)" stroke="#c0392b" stroke-width="0.5"/>"##,
            MARGIN + px(&r.xs.lo),
            y_of(px(&r.ys.hi)),
            px(&r.width()),
            px(&r.height())
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bottomleft::bl_run;
    use crate::packing::items_from_sides;
    use crate::scalar::q;

    #[test]
    fn empty_packing_draws_the_outline_only() {
        let s = render_svg(&Packing::new(), &[]);
        assert_eq!(s.matches("<path").count(), 1);
        assert_eq!(s.matches("<rect").count(), 0);
    }

    #[test]
    fn three_squares_and_an_overlay() {
        let p = bl_run(&items_from_sides(&[q(1, 2), q(1, 2), q(3, 5)]).unwrap()).unwrap();
        let s = render_svg(&p, &[]);
        assert_eq!(s.matches("<rect").count(), 3);
        assert_eq!(s, render_svg(&p, &[]));
        // The first square sits on the floor at the left wall.
        assert!(s.contains(r#"<rect x="10.000" y="250.000" width="200.000" height="200.000""#), "{s}");
        let hole = Rect::new(q(3, 5), q(1, 1), q(1, 2), q(11, 10));
        assert_eq!(render_svg(&p, &[hole]).matches("url(#hatch)").count(), 1);
    }
}
