//! Deterministic SVG export of curves and meshes.
//!
//! Coordinates are written with 9 significant digits and the y axis is
//! flipped so the picture has the usual mathematical orientation.

use std::fmt::Write;

use crate::geometry::{Point2, PolygonalCurve, TriMesh};

/// Formats `x` with 9 significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).clamp(0, 40) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

struct Frame {
    lo: Point2,
    hi: Point2,
}

impl Frame {
    fn fit(points: &[Point2]) -> Frame {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let m = 0.05 * span;
        Frame {
            lo: Point2::new(lo.x - m, lo.y - m),
            hi: Point2::new(hi.x + m, hi.y + m),
        }
    }

    fn header(&self, out: &mut String) {
        let (w, h) = (self.hi.x - self.lo.x, self.hi.y - self.lo.y);
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}" width="800" height="{}">"#,
            fmt_sig(self.lo.x),
            fmt_sig(-self.hi.y),
            fmt_sig(w),
            fmt_sig(h),
            fmt_sig((800.0 * h / w).round()),
        );
    }

    fn stroke(&self) -> String {
        fmt_sig(2e-3 * (self.hi.x - self.lo.x).max(self.hi.y - self.lo.y))
    }
}

fn pt(p: Point2) -> String {
    format!("{},{}", fmt_sig(p.x), fmt_sig(-p.y))
}

/// Closed polyline of the curve.
pub fn curve_svg(curve: &PolygonalCurve) -> String {
    let frame = Frame::fit(curve.vertices());
    let mut out = String::new();
    frame.header(&mut out);
    let points: Vec<String> = curve.vertices().iter().map(|&p| pt(p)).collect();
    let _ = writeln!(
        out,
        r#"<polygon points="{}" fill="none" stroke="black" stroke-width="{}"/>"#,
        points.join(" "),
        frame.stroke()
    );
    out.push_str("</svg>\n");
    out
}

/// Triangle edges; with `sign` given, triangles are filled by the sign of
/// the nodal mean (eigenvector sign pattern).
pub fn mesh_svg(mesh: &TriMesh, sign: Option<&[f64]>) -> String {
    let frame = Frame::fit(&mesh.nodes);
    let mut out = String::new();
    frame.header(&mut out);
    let stroke = frame.stroke();
    let _ = writeln!(out, r#"<g stroke="black" stroke-width="{stroke}" stroke-linejoin="round">"#);
    for t in &mesh.triangles {
        let fill = match sign {
            Some(u) => {
                if t.iter().map(|&i| u[i]).sum::<f64>() >= 0.0 {
                    "#d95f02"
                } else {
                    "#1b9e77"
                }
            }
            None => "none",
        };
        let _ = writeln!(
            out,
            r#"<polygon class="tri" points="{} {} {}" fill="{fill}"/>"#,
            pt(mesh.nodes[t[0]]),
            pt(mesh.nodes[t[1]]),
            pt(mesh.nodes[t[2]])
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
