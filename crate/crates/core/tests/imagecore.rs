use minconf::error::PgmError;
use minconf::image::{descendants, reduce, reduced_len, Image, ReductionKind, ReductionStep};
use proptest::prelude::*;

fn arb_image(max: usize) -> impl Strategy<Value = Image> {
    (2..=max, 2..=max).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h).prop_map(move |d| Image::new(w, h, d).unwrap())
    })
}

/// Whether a reduction at `factor` is legal: at least 2x2 and, below
/// factor 1, strictly smaller.
fn legal(w: usize, h: usize, factor: f64) -> bool {
    let (cw, ch) = (reduced_len(w, factor), reduced_len(h, factor));
    cw >= 2 && ch >= 2 && (factor >= 1.0 || (cw, ch) != (w, h))
}

const CROPS: [ReductionKind; 4] = [
    ReductionKind::CropTopLeft,
    ReductionKind::CropTopRight,
    ReductionKind::CropBottomLeft,
    ReductionKind::CropBottomRight,
];

proptest! {
    #[test]
    fn pgm_round_trip_is_bit_exact(img in arb_image(40)) {
        let back = Image::from_pgm_bytes(&img.to_pgm_bytes(Some("x"))).unwrap();
        prop_assert_eq!(back, img);
    }

    #[test]
    fn crops_are_shifted_subwindows(img in arb_image(40), factor in 0.3f64..1.0) {
        let (w, h) = img.dims();
        let (cw, ch) = (reduced_len(w, factor), reduced_len(h, factor));
        prop_assume!(legal(w, h, factor));
        for kind in CROPS {
            let c = reduce(&img, ReductionStep::new(kind, factor)).unwrap();
            prop_assert_eq!(c.dims(), (cw, ch));
            let ox = if matches!(kind, ReductionKind::CropTopRight | ReductionKind::CropBottomRight) { w - cw } else { 0 };
            let oy = if matches!(kind, ReductionKind::CropBottomLeft | ReductionKind::CropBottomRight) { h - ch } else { 0 };
            for y in 0..ch {
                for x in 0..cw {
                    prop_assert_eq!(c.get(x, y), img.get(x + ox, y + oy));
                }
            }
        }
    }

    #[test]
    fn resolution_keeps_mean_within_one_level(img in arb_image(40), factor in 0.3f64..1.0) {
        let (w, h) = img.dims();
        prop_assume!(legal(w, h, factor));
        let r = reduce(&img, ReductionStep::new(ReductionKind::Resolution, factor)).unwrap();
        prop_assert!((r.mean() - img.mean()).abs() <= 1.0, "{} vs {}", r.mean(), img.mean());
    }

    #[test]
    fn descendants_all_or_nothing(img in arb_image(12), factor in 0.05f64..1.0) {
        match descendants(&img, factor) {
            Ok(d) => {
                prop_assert_eq!(d.len(), 5);
                let kinds: Vec<ReductionKind> = d.iter().map(|(s, _)| s.kind).collect();
                prop_assert_eq!(&kinds[..4], &CROPS[..]);
                prop_assert_eq!(kinds[4], ReductionKind::Resolution);
            }
            Err(_) => {
                let (w, h) = img.dims();
                prop_assert!(!legal(w, h, factor));
            }
        }
    }
}

#[test]
fn ten_by_ten_top_left_crop() {
    let img = Image::from_fn(10, 10, |x, y| (y * 10 + x) as u8);
    let c = reduce(&img, ReductionStep::new(ReductionKind::CropTopLeft, 0.8)).unwrap();
    assert_eq!(c, img.crop(0, 0, 8, 8));
}

#[test]
fn files_round_trip_and_errors_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::from_fn(7, 3, |x, y| (x * 30 + y) as u8);
    let path = dir.path().join("a.pgm");
    img.save_pgm(&path).unwrap();
    assert_eq!(minconf::image::load_pgm(&path).unwrap(), img);
    assert!(matches!(minconf::image::load_pgm(dir.path().join("none.pgm")), Err(PgmError::Missing(_))));
    std::fs::write(&path, b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
    assert!(matches!(minconf::image::load_pgm(&path), Err(PgmError::Unsupported(_))));
    std::fs::write(&path, b"P5\n2 2\n255\n\x00\x01").unwrap();
    assert!(matches!(minconf::image::load_pgm(&path), Err(PgmError::Truncated { expected: 4, actual: 2 })));
    std::fs::write(&path, b"P5\n2 2\n65535\n\x00\x01\x00\x01").unwrap();
    assert!(matches!(minconf::image::load_pgm(&path), Err(PgmError::MaxVal(65535))));
}
