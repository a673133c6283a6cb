//! Shared fixtures for integration tests.
#![allow(dead_code)]

use minconf::geometry::{Pixel, Point2};
use minconf::model::{ComponentSpec, InterpretationModel, RelationSpec};
use minconf::primitives::{Contour, PrimitiveKind, PrimitiveSet, Region};
use minconf::relations::RelationKind;
use minconf::search::{build_candidates, CandidateTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FRAME: (usize, usize) = (30, 30);

pub fn rect(x0: u32, y0: u32, w: u32, h: u32, frame: (usize, usize)) -> Region<f64> {
    let px = (y0..y0 + h).flat_map(|y| (x0..x0 + w).map(move |x| Pixel::new(x, y))).collect();
    Region::from_pixels(px, frame, None)
}

fn random_contour(rng: &mut ChaCha8Rng) -> Contour<f64> {
    let n = rng.random_range(2..=6);
    let mut p = Point2::new(rng.random_range(2.0..28.0f64).round(), rng.random_range(2.0..28.0f64).round());
    let mut points = vec![p];
    for _ in 1..n {
        p = Point2::new(
            (p.x + rng.random_range(-4.0..4.0f64)).round().clamp(0.0, 29.0),
            (p.y + rng.random_range(-4.0..4.0f64)).round().clamp(0.0, 29.0),
        );
        points.push(p);
    }
    Contour {
        points,
        mean_strength: rng.random_range(10.0..90.0),
        closed: false,
    }
}

fn random_region(rng: &mut ChaCha8Rng) -> Region<f64> {
    let w = rng.random_range(2..=8);
    let h = rng.random_range(2..=8);
    rect(rng.random_range(0..30 - w), rng.random_range(0..30 - h), w, h, FRAME)
}

/// A random model over at most 4 components with random weights, and its
/// candidate table of at most 6 candidates per component.
pub fn random_instance(seed: u64) -> (InterpretationModel<f64>, CandidateTable<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let kinds: Vec<PrimitiveKind> = (0..n)
        .map(|_| if rng.random_bool(0.5) { PrimitiveKind::Contour } else { PrimitiveKind::Region })
        .collect();
    let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let components: Vec<ComponentSpec> = names
        .iter()
        .zip(&kinds)
        .map(|(name, &k)| {
            if rng.random_bool(0.25) {
                ComponentSpec::optional(name, k)
            } else {
                ComponentSpec::required(name, k)
            }
        })
        .collect();
    let mut relations = Vec::new();
    for i in 0..n {
        if rng.random_bool(0.5) {
            relations.push(RelationSpec::new(RelationKind::Exists, &[&names[i]]));
        }
        if kinds[i] == PrimitiveKind::Region && rng.random_bool(0.5) {
            relations.push(RelationSpec::new(RelationKind::Shape, &[&names[i]]));
        }
        for j in 0..n {
            if i == j || !rng.random_bool(0.4) {
                continue;
            }
            let options: Vec<RelationKind> = [RelationKind::Touch, RelationKind::Relpos, RelationKind::Continuity, RelationKind::Bounds]
                .into_iter()
                .filter(|r| r.accepts(&[kinds[i], kinds[j]]))
                .collect();
            let r = options[rng.random_range(0..options.len())];
            relations.push(RelationSpec::new(r, &[&names[i], &names[j]]));
        }
    }
    if relations.is_empty() {
        relations.push(RelationSpec::new(RelationKind::Exists, &[&names[0]]));
    }
    let mut model = InterpretationModel::new("random", components, relations);
    for w in &mut model.weights {
        *w = rng.random_range(-1.0..1.0);
    }
    let optional: Vec<String> = model.components.iter().filter(|c| c.optional).map(|c| c.name.clone()).collect();
    for name in optional {
        model.null_penalties.insert(name, rng.random_range(0.0..1.0));
    }
    let prims = PrimitiveSet {
        points: vec![],
        contours: (0..6).map(|_| random_contour(&mut rng)).collect(),
        regions: (0..6).map(|_| random_region(&mut rng)).collect(),
        source_dims: FRAME,
    };
    let table = build_candidates(&model, &prims, 5).expect("every kind has candidates");
    (model, table)
}

/// The hug model trained on the 200 corpus samples from base seed 0 with default
/// parameters, threshold calibrated. Trained once per test binary.
pub fn trained_hug() -> &'static InterpretationModel<f64> {
    use minconf::learning::{calibrate_threshold, prepare_all, train_structured, TrainParams, TrainingExample};
    use minconf::primitives::ExtractParams;
    use minconf::search::SearchParams;
    static MODEL: std::sync::OnceLock<InterpretationModel<f64>> = std::sync::OnceLock::new();
    MODEL.get_or_init(|| {
        let ex: Vec<TrainingExample<f64>> = minconf::synthgen::corpus::<f64>(0, 200, FRAME)
            .unwrap()
            .into_iter()
            .map(Into::into)
            .collect();
        let prepared = prepare_all(&ex, &ExtractParams::default());
        let sp = SearchParams::default();
        let mut m = train_structured(&minconf::model::hug_structure(), &prepared, &TrainParams::default(), &sp).unwrap();
        m.threshold = calibrate_threshold(&m, &prepared, &sp);
        m
    })
}
