//! SVG overlays of interpretations on their image.
//!
//! Output is a pure function of its inputs: coordinates are printed with a
//! fixed precision and components are drawn in name order.

use std::fmt::Write;

use base64::Engine;

use crate::fullimage::{DetectedConfiguration, GlobalInterpretation};
use crate::geometry::Pixel;
use crate::image::Image;
use crate::model::Interpretation;
use crate::primitives::Primitive;
use crate::scalar::Scalar;

/// Screen pixels per image pixel.
pub const ZOOM: usize = 8;

const PALETTE: [&str; 8] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, img: &Image) {
    let (w, h) = img.dims();
    let png = base64::engine::general_purpose::STANDARD.encode(img.to_png_bytes());
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {w} {h}">"#,
        w * ZOOM,
        h * ZOOM
    );
    let _ = writeln!(
        out,
        r#"<image x="0" y="0" width="{w}" height="{h}" style="image-rendering:pixelated" href="data:image/png;base64,{png}"/>"#
    );
}

/// Horizontal runs of a row-major sorted pixel list as one path.
fn mask_path(pixels: &[Pixel]) -> String {
    let mut sorted = pixels.to_vec();
    sorted.sort_by_key(|p| (p.y, p.x));
    let mut d = String::new();
    let mut i = 0;
    while i < sorted.len() {
        let start = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j].y == start.y && sorted[j].x == sorted[j - 1].x + 1 {
            j += 1;
        }
        let _ = write!(d, "M{} {}h{}v1h-{}z", start.x, start.y, j - i, j - i);
        i = j;
    }
    d
}

fn primitive_svg<T: Scalar>(out: &mut String, p: &Primitive<T>, col: &str) {
    // point coordinates refer to pixel centres
    let c = |v: T| num(v.as_f64() + 0.5);
    match p {
        Primitive::Region(r) => {
            let _ = writeln!(out, r#"<path d="{}" fill="{col}" fill-opacity="0.35" stroke="none"/>"#, mask_path(&r.pixels));
        }
        Primitive::Contour(k) => {
            let pts: Vec<String> = k.points.iter().map(|q| format!("{},{}", c(q.x), c(q.y))).collect();
            let tag = if k.closed { "polygon" } else { "polyline" };
            let _ = writeln!(
                out,
                r#"<{tag} points="{}" fill="none" stroke="{col}" stroke-width="0.4" stroke-linejoin="round"/>"#,
                pts.join(" ")
            );
        }
        Primitive::Point(q) => {
            let _ = writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="0.6" fill="none" stroke="{col}" stroke-width="0.3"/>"#,
                c(q.position.x),
                c(q.position.y)
            );
        }
    }
}

/// Overlay of one interpretation: regions as translucent fills, contours as
/// polylines and points as circle markers.
pub fn svg_interpretation<T: Scalar>(img: &Image, interp: &Interpretation<T>) -> String {
    let mut out = String::new();
    header(&mut out, img);
    for (i, (name, p)) in interp.assignment.iter().enumerate() {
        let Some(p) = p else { continue };
        let _ = writeln!(out, r#"<g id="{}">"#, escape(name));
        primitive_svg(&mut out, p, color(i));
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Overlay of a full-image scan: detection windows as dashed boxes and the
/// combined claims, each region claim drawn as its merged mask.
pub fn svg_scan<T: Scalar>(img: &Image, dets: &[DetectedConfiguration<T>], global: &GlobalInterpretation<T>) -> String {
    let mut out = String::new();
    header(&mut out, img);
    out.push_str("<g id=\"windows\">\n");
    for d in dets {
        let (x, y, w, h) = d.window;
        let _ = writeln!(
            out,
            r##"<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="none" stroke="#ffe119" stroke-width="0.5" stroke-dasharray="2 1"><title>{}</title></rect>"##,
            num(d.score.as_f64())
        );
    }
    out.push_str("</g>\n");
    for (i, (name, claims)) in global.components.iter().enumerate() {
        let _ = writeln!(out, r#"<g id="{}">"#, escape(name));
        for claim in claims {
            match &claim.primitive {
                Primitive::Region(_) => {
                    let _ = writeln!(
                        out,
                        r#"<path d="{}" fill="{}" fill-opacity="0.35" stroke="none"/>"#,
                        mask_path(&claim.mask),
                        color(i)
                    );
                }
                p => primitive_svg(&mut out, p, color(i)),
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::primitives::{Contour, Region};

    #[test]
    fn runs_merge_adjacent_pixels() {
        let px = [Pixel::new(1, 0), Pixel::new(2, 0), Pixel::new(4, 0), Pixel::new(0, 1)];
        assert_eq!(mask_path(&px), "M1 0h2v1h-2zM4 0h1v1h-1zM0 1h1v1h-1z");
    }

    #[test]
    fn numbers_are_trimmed() {
        assert_eq!(num(3.0), "3");
        assert_eq!(num(2.5), "2.5");
        assert_eq!(num(1.005), "1");
        assert_eq!(num(-0.001), "0");
    }

    #[test]
    fn interpretation_overlay_is_deterministic() {
        let img = Image::from_fn(6, 5, |x, y| (x * 40 + y) as u8);
        let region = Region::<f64>::from_pixels(vec![Pixel::new(1, 1), Pixel::new(2, 1)], (6, 5), None);
        let contour = Contour {
            points: vec![Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)],
            mean_strength: 1.0,
            closed: false,
        };
        let interp = Interpretation {
            assignment: [
                ("a".to_string(), Some(Primitive::Region(region))),
                ("b".to_string(), Some(Primitive::Contour(contour))),
                ("c".to_string(), None),
            ]
            .into_iter()
            .collect(),
            score: 1.0,
            feature_vector: vec![],
        };
        let s = svg_interpretation(&img, &interp);
        assert_eq!(s, svg_interpretation(&img, &interp));
        assert!(s.starts_with("<svg "));
        assert!(s.contains(r##"<path d="M1 1h2v1h-2z" fill="#e6194b""##));
        assert!(s.contains(r##"<polyline points="0.5,0.5 3.5,4.5" fill="none" stroke="#3cb44b""##));
        assert!(!s.contains(r#"id="c""#));
        assert!(s.ends_with("</svg>\n"));
    }
}
