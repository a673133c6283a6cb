mod common;

use common::rect;
use minconf::evaluation::{jaccard_correspondence, rasterize, summarize};
use minconf::geometry::Point2;
use minconf::model::Assignment;
use minconf::primitives::{Contour, Primitive};
use proptest::prelude::*;

const DIMS: (usize, usize) = (32, 32);

fn arb_primitive() -> impl Strategy<Value = Primitive<f64>> {
    prop_oneof![
        (0u32..20, 0u32..20, 1u32..8, 1u32..8).prop_map(|(x, y, w, h)| Primitive::Region(rect(x, y, w, h, DIMS))),
        proptest::collection::vec((2u32..24, 2u32..24), 2..5).prop_map(|pts| {
            Primitive::Contour(Contour {
                points: pts.into_iter().map(|(x, y)| Point2::new(x as f64, y as f64)).collect(),
                mean_strength: 1.0,
                closed: false,
            })
        }),
    ]
}

fn arb_assignment() -> impl Strategy<Value = Assignment<f64>> {
    proptest::collection::vec(proptest::option::weighted(0.8, arb_primitive()), 3).prop_map(|v| {
        v.into_iter().enumerate().map(|(i, p)| (format!("c{i}"), p)).collect()
    })
}

fn shifted(a: &Assignment<f64>, dx: i64, dy: i64) -> Assignment<f64> {
    a.iter().map(|(k, p)| (k.clone(), p.as_ref().map(|p| p.translated(dx, dy, DIMS)))).collect()
}

proptest! {
    #[test]
    fn values_lie_in_unit_interval_and_are_symmetric(a in arb_assignment(), b in arb_assignment()) {
        if let (Ok(ab), Ok(ba)) = (jaccard_correspondence(&a, &b, DIMS), jaccard_correspondence(&b, &a, DIMS)) {
            for (k, v) in &ab.per_component {
                prop_assert!((0.0..=1.0).contains(v));
                if let Some(w) = ba.per_component.get(k) {
                    prop_assert_eq!(v, w);
                }
            }
        }
    }

    #[test]
    fn one_iff_masks_identical(p in arb_primitive(), q in arb_primitive()) {
        let a: Assignment<f64> = [("c".to_string(), Some(p.clone()))].into_iter().collect();
        let b: Assignment<f64> = [("c".to_string(), Some(q.clone()))].into_iter().collect();
        let j = jaccard_correspondence(&a, &b, DIMS).unwrap().mean_jaccard;
        prop_assert_eq!(j == 1.0, rasterize(&p, DIMS) == rasterize(&q, DIMS));
    }

    #[test]
    fn translation_leaves_values_unchanged(a in arb_assignment(), b in arb_assignment(), dx in 0i64..4, dy in 0i64..4) {
        // geometry (dilated) stays below pixel 28, so shifts of up to 3 stay in frame
        let r0 = jaccard_correspondence(&a, &b, DIMS);
        let r1 = jaccard_correspondence(&shifted(&a, dx, dy), &shifted(&b, dx, dy), DIMS);
        match (r0, r1) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.per_component, y.per_component),
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
    }
}

#[test]
fn summary_averages_images() {
    let a: Assignment<f64> = [("r".to_string(), Some(Primitive::Region(rect(0, 0, 10, 10, DIMS))))].into_iter().collect();
    let b: Assignment<f64> = [("r".to_string(), Some(Primitive::Region(rect(5, 0, 10, 10, DIMS))))].into_iter().collect();
    let r1 = jaccard_correspondence(&a, &a, DIMS).unwrap();
    let r2 = jaccard_correspondence(&a, &b, DIMS).unwrap();
    let s = summarize([&r1, &r2]);
    assert_eq!(s.images, 2);
    assert!((s.mean_jaccard - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-15);
    assert_eq!(r2.matched_components, 0);
    assert_eq!(r1.matched_components, 1);
}
