mod common;

use minconf::learning::ground_gold;
use minconf::model::hug;
use minconf::primitives::{extract_primitives, ExtractParams};
use minconf::synthgen::{
    box_iou, corpus, generate, generate_scene, mask_distance, read_corpus, write_corpus, Label, BACKGROUND, NEGATIVE_GAP,
};

#[test]
fn generation_is_bit_reproducible() {
    for seed in [0, 1, 99, u64::MAX] {
        for label in [Label::Positive, Label::Negative] {
            let a = generate::<f64>(seed, label, (30, 30)).unwrap();
            let b = generate::<f64>(seed, label, (30, 30)).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn too_small_dims_are_rejected() {
    assert!(generate::<f64>(1, Label::Positive, (23, 30)).is_err());
    assert!(generate::<f64>(1, Label::Positive, (24, 24)).is_ok());
}

#[test]
fn label_follows_palm_distance() {
    for seed in 0..60 {
        for label in [Label::Positive, Label::Negative] {
            let s = generate::<f64>(seed, label, (30, 30)).unwrap();
            let palm = &s.gold_region(hug::PALM).unwrap().pixels;
            let torso = &s.gold_region(hug::TORSO_2).unwrap().pixels;
            let d = mask_distance(palm, torso);
            match label {
                Label::Positive => assert!(d <= 1.0, "seed {seed}: {d}"),
                Label::Negative => assert!(d >= NEGATIVE_GAP, "seed {seed}: {d}"),
            }
        }
    }
}

#[test]
fn gold_is_grounded_for_nearly_all_samples() {
    let samples = corpus::<f64>(300, 100, (30, 30)).unwrap();
    let grounded = samples
        .iter()
        .filter(|s| {
            let prims = extract_primitives::<f64>(&s.image, &ExtractParams::default());
            let g = ground_gold(&s.gold, &prims);
            g.complete()
        })
        .count();
    assert!(grounded >= 95, "{grounded}/100");
}

#[test]
fn corpus_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let samples = corpus::<f64>(4, 6, (30, 30)).unwrap();
    let manifest = write_corpus(dir.path(), &samples).unwrap();
    assert_eq!(manifest.samples.len(), 6);
    let back = read_corpus::<f64>(dir.path()).unwrap();
    assert_eq!(back, samples);
}

#[test]
fn empty_scene_is_background() {
    let s = generate_scene::<f64>(3, 0, (120, 120)).unwrap();
    assert!(s.planted.is_empty());
    assert!((s.image.mean() - BACKGROUND as f64).abs() < 1.0);
    assert!(s.image.data().iter().all(|&v| (v as i32 - BACKGROUND as i32).abs() <= 30));
}

#[test]
fn planted_glyphs_are_disjoint_and_visible() {
    for seed in 0..20 {
        let s = generate_scene::<f64>(seed, 2, (120, 120)).unwrap();
        assert_eq!(s.planted.len(), 2);
        assert_eq!(box_iou(s.planted[0].bbox, s.planted[1].bbox), 0.0);
        for p in &s.planted {
            let (x0, y0, w, h) = p.bbox;
            let dark = (y0..y0 + h)
                .flat_map(|y| (x0..x0 + w).map(move |x| (x, y)))
                .filter(|&(x, y)| (s.image.get(x, y) as i32) < BACKGROUND as i32 - 60)
                .count();
            assert!(dark > 50, "seed {seed}: {dark} glyph pixels");
            for g in p.gold.values().flatten() {
                assert!(g.point_set().iter().all(|q| q.in_bounds((120, 120))));
            }
        }
    }
}

#[test]
fn crowded_scene_fails_to_place() {
    assert!(generate_scene::<f64>(1, 40, (60, 60)).is_err());
}
