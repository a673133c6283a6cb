mod common;

use common::random_instance;
use minconf::error::SearchError;
use minconf::model::hug_structure;
use minconf::primitives::ExtractParams;
use minconf::search::{build_candidates, interpret_beam, interpret_beam_indexed, interpret_exact, interpret_exact_indexed, interpret_image, SearchParams};
use minconf::synthgen::{generate, Label};
use proptest::prelude::*;

#[test]
fn wide_beam_equals_exact_on_random_instances() {
    for seed in 0..40 {
        let (model, table) = random_instance(seed);
        let exact = interpret_exact_indexed(&model, &table, 1_000_000);
        let width = table.product() as usize;
        let beam = interpret_beam_indexed(&model, &table, width.max(1));
        match (exact, beam) {
            (Ok(e), Ok(b)) => {
                assert_eq!(e.indices, b.indices, "seed {seed}");
                assert_eq!(e.interpretation.score.to_bits(), b.interpretation.score.to_bits(), "seed {seed}");
            }
            (Err(e), Err(b)) => assert_eq!(e, b),
            (e, b) => panic!("seed {seed}: exact {e:?} vs beam {b:?}"),
        }
    }
}

#[test]
fn exact_score_is_the_model_score() {
    for seed in 100..120 {
        let (model, table) = random_instance(seed);
        let Ok(i) = interpret_exact(&model, &table, 1_000_000) else { continue };
        let rescored = model.score(&i.assignment).unwrap();
        assert!((rescored.score - i.score).abs() < 1e-12);
        assert_eq!(rescored.feature_vector, i.feature_vector);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beam_score_never_drops_with_width(seed in any::<u64>()) {
        let (model, table) = random_instance(seed);
        let mut last = f64::NEG_INFINITY;
        for w in [1usize, 2, 5, 20, 10_000] {
            if let Ok(i) = interpret_beam(&model, &table, w) {
                prop_assert!(i.score >= last, "width {}: {} < {}", w, i.score, last);
                last = i.score;
            }
        }
    }

    #[test]
    fn beam_never_beats_exact(seed in any::<u64>()) {
        let (model, table) = random_instance(seed);
        if let (Ok(e), Ok(b)) = (interpret_exact(&model, &table, 1_000_000), interpret_beam(&model, &table, 3)) {
            prop_assert!(b.score <= e.score);
        }
    }
}

#[test]
fn zero_parameters_are_rejected() {
    let (model, table) = random_instance(1);
    assert_eq!(interpret_beam(&model, &table, 0), Err(SearchError::ZeroBeam));
    let prims = minconf::primitives::PrimitiveSet::<f64> {
        points: vec![],
        contours: vec![],
        regions: vec![],
        source_dims: (30, 30),
    };
    assert_eq!(build_candidates(&model, &prims, 0), Err(SearchError::ZeroCandidates));
}

#[test]
fn single_precision_pipeline_agrees_with_double() {
    // zero weights: both precisions must pick the first distinct candidates
    let g32 = generate::<f32>(11, Label::Positive, (30, 30)).unwrap();
    let g64 = generate::<f64>(11, Label::Positive, (30, 30)).unwrap();
    assert_eq!(g32.image, g64.image);
    let p = SearchParams::default();
    let (prims32, _, o32) = interpret_image(&hug_structure::<f32>(), &g32.image, &ExtractParams::default(), &p).unwrap();
    let (prims64, _, o64) = interpret_image(&hug_structure::<f64>(), &g64.image, &ExtractParams::default(), &p).unwrap();
    assert_eq!(prims32.contours.len(), prims64.contours.len());
    assert_eq!(prims32.regions.len(), prims64.regions.len());
    assert_eq!(o32.indices, o64.indices);
}
