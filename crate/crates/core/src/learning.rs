//! Grounding gold annotations, averaged structured perceptron training,
//! threshold calibration, ablation and recognition drop.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::LearningError;
use crate::geometry::{point_polyline_dist, BitMask};
use crate::image::Image;
use crate::model::{Assignment, Interpretation, InterpretationModel};
use crate::primitives::{extract_primitives, ExtractParams, Primitive, PrimitiveKind, PrimitiveSet};
use crate::scalar::Scalar;
use crate::search::{build_candidates, interpret_table, SearchParams};
use crate::synthgen::Label;

/// Regions below this IoU with their gold mask are left unmatched.
pub const REGION_IOU_FLOOR: f64 = 0.3;
/// Contours and points farther than this (pixels) are left unmatched.
pub const DISTANCE_FLOOR: f64 = 3.0;

/// How one gold component was grounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundMatch {
    /// Index into the primitive set's list of the component's kind.
    pub source: Option<usize>,
    /// IoU for regions, distance for contours and points.
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundedGold<T> {
    pub assignment: Assignment<T>,
    pub matches: BTreeMap<String, GroundMatch>,
}

impl<T: Scalar> GroundedGold<T> {
    /// True when every non-null gold component found a primitive.
    pub fn complete(&self) -> bool {
        self.matches.values().all(|m| m.source.is_some())
    }
}

fn region_mask<T: Scalar>(p: &Primitive<T>, dims: (usize, usize)) -> BitMask {
    match p {
        Primitive::Region(r) => BitMask::from_pixels(dims.0, dims.1, &r.pixels),
        other => crate::evaluation::rasterize(other, dims),
    }
}

/// Mean distance from the points of `a` to polyline `b`, averaged with the
/// reverse direction.
pub fn symmetric_mean_distance<T: Scalar>(a: &[crate::geometry::Point2<T>], b: &[crate::geometry::Point2<T>]) -> f64 {
    let one_way = |from: &[crate::geometry::Point2<T>], to: &[crate::geometry::Point2<T>]| {
        if from.is_empty() || to.is_empty() {
            return f64::INFINITY;
        }
        from.iter().map(|&p| point_polyline_dist(p, to).as_f64()).sum::<f64>() / from.len() as f64
    };
    0.5 * (one_way(a, b) + one_way(b, a))
}

/// Map gold geometry onto the extracted primitive of the same kind that
/// overlaps it best. Pairs are taken best first and a primitive grounds at
/// most one component; ties keep the earlier component, then primitive.
pub fn ground_gold<T: Scalar>(gold: &Assignment<T>, prims: &PrimitiveSet<T>) -> GroundedGold<T> {
    let dims = prims.source_dims;
    // (badness, component, primitive index, quality); lower badness is better
    let mut pairs: Vec<(f64, &String, usize, f64)> = Vec::new();
    let mut pools = BTreeMap::new();
    for (name, g) in gold {
        let Some(g) = g else { continue };
        let pool = pools.entry(g.kind()).or_insert_with(|| prims.of_kind(g.kind()));
        match g.kind() {
            PrimitiveKind::Region => {
                let gm = region_mask(g, dims);
                for (i, p) in pool.iter().enumerate() {
                    let iou = gm.iou(&region_mask(p, dims));
                    if iou >= REGION_IOU_FLOOR {
                        pairs.push((-iou, name, i, iou));
                    }
                }
            }
            PrimitiveKind::Contour => {
                let gp = g.point_set();
                for (i, p) in pool.iter().enumerate() {
                    let d = symmetric_mean_distance(&gp, &p.point_set());
                    if d <= DISTANCE_FLOOR {
                        pairs.push((d, name, i, d));
                    }
                }
            }
            PrimitiveKind::Point => {
                let gc = g.centroid();
                for (i, p) in pool.iter().enumerate() {
                    let d = gc.dist(p.centroid()).as_f64();
                    if d <= DISTANCE_FLOOR {
                        pairs.push((d, name, i, d));
                    }
                }
            }
        }
    }
    // best pairs first; each primitive grounds at most one component
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)).then(a.2.cmp(&b.2)));
    let mut chosen: BTreeMap<&String, (usize, f64)> = BTreeMap::new();
    let mut used = std::collections::BTreeSet::new();
    for (_, name, i, q) in pairs {
        let kind = gold[name].as_ref().map(|g| g.kind());
        if chosen.contains_key(name) || used.contains(&(kind, i)) {
            continue;
        }
        chosen.insert(name, (i, q));
        used.insert((kind, i));
    }
    let mut assignment = Assignment::new();
    let mut matches = BTreeMap::new();
    for (name, g) in gold {
        let Some(g) = g else {
            assignment.insert(name.clone(), None);
            continue;
        };
        let best = chosen.get(name).copied();
        matches.insert(
            name.clone(),
            GroundMatch {
                source: best.map(|b| b.0),
                quality: best.map_or(f64::NAN, |b| b.1),
            },
        );
        assignment.insert(name.clone(), best.map(|(i, _)| pools[&g.kind()][i].clone()));
    }
    GroundedGold { assignment, matches }
}

/// An annotated image for one model class.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample<T> {
    pub image: Image,
    pub gold: Assignment<T>,
    pub label: Label,
}

impl<T: Scalar> From<crate::synthgen::GlyphSample<T>> for TrainingExample<T> {
    fn from(s: crate::synthgen::GlyphSample<T>) -> Self {
        Self {
            image: s.image,
            gold: s.gold,
            label: s.label,
        }
    }
}

/// An example with its primitives extracted and gold grounded once.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedExample<T> {
    pub prims: PrimitiveSet<T>,
    pub grounded: GroundedGold<T>,
    pub label: Label,
}

impl<T: Scalar> PreparedExample<T> {
    pub fn new(ex: &TrainingExample<T>, extract: &ExtractParams) -> Self {
        let prims = extract_primitives(&ex.image, extract);
        let grounded = ground_gold(&ex.gold, &prims);
        Self {
            prims,
            grounded,
            label: ex.label,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.prims.source_dims
    }

    /// Positive with every gold component grounded.
    pub fn usable_positive(&self) -> bool {
        self.label.is_positive() && self.grounded.complete()
    }

    pub fn interpret(&self, model: &InterpretationModel<T>, params: &SearchParams) -> Result<Interpretation<T>, crate::error::SearchError> {
        let table = build_candidates(model, &self.prims, params.k)?;
        Ok(interpret_table(model, &table, params)?.interpretation)
    }
}

pub fn prepare_all<T: Scalar>(examples: &[TrainingExample<T>], extract: &ExtractParams) -> Vec<PreparedExample<T>> {
    examples.iter().map(|e| PreparedExample::new(e, extract)).collect()
}

/// Full gold assignment over the model's components (missing ones null).
fn gold_for<T: Scalar>(model: &InterpretationModel<T>, g: &GroundedGold<T>) -> Assignment<T> {
    model
        .components
        .iter()
        .map(|c| (c.name.clone(), g.assignment.get(&c.name).cloned().flatten()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub epochs: usize,
    pub averaging: bool,
    /// Shuffle example order each epoch with this seed.
    pub shuffle_seed: Option<u64>,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 20,
            averaging: true,
            shuffle_seed: None,
        }
    }
}

/// One perceptron step, exposed for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord<T> {
    pub example: usize,
    pub updated: bool,
    /// `w · (φ(gold) − φ(ŷ))` before and after the step.
    pub margin_before: T,
    pub margin_after: T,
    /// `‖φ(gold) − φ(ŷ)‖²`.
    pub step_norm2: T,
}

/// Structured perceptron over prepared examples. The averaged weights are
/// the mean of `w` after every example step.
#[derive(Debug, Clone)]
pub struct Trainer<'a, T> {
    base: InterpretationModel<T>,
    examples: Vec<&'a PreparedExample<T>>,
    golds: Vec<Assignment<T>>,
    gold_features: Vec<Vec<T>>,
    search: SearchParams,
    weights: Vec<T>,
    sum: Vec<T>,
    steps: usize,
    epochs_run: usize,
    shuffle: Option<rand_chacha::ChaCha20Rng>,
    pub updates: usize,
}

impl<'a, T: Scalar> Trainer<'a, T> {
    /// Uses the positives whose gold is fully grounded; weights start at zero.
    pub fn new(
        model: &InterpretationModel<T>,
        examples: &'a [PreparedExample<T>],
        search: SearchParams,
        shuffle_seed: Option<u64>,
    ) -> Result<Self, LearningError> {
        use rand::SeedableRng;
        let examples: Vec<&PreparedExample<T>> = examples.iter().filter(|e| e.usable_positive()).collect();
        if examples.is_empty() {
            return Err(LearningError::NoGroundedPositives);
        }
        let golds: Vec<Assignment<T>> = examples.iter().map(|e| gold_for(model, &e.grounded)).collect();
        let gold_features = golds
            .iter()
            .map(|g| model.feature_vector(g))
            .collect::<Result<Vec<_>, _>>()?;
        let dim = model.feature_dim();
        Ok(Self {
            base: model.clone(),
            examples,
            golds,
            gold_features,
            search,
            weights: vec![T::zero(); dim],
            sum: vec![T::zero(); dim],
            steps: 0,
            epochs_run: 0,
            shuffle: shuffle_seed.map(rand_chacha::ChaCha20Rng::seed_from_u64),
            updates: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    fn with_weights(&self, w: Vec<T>) -> InterpretationModel<T> {
        let mut m = self.base.clone();
        m.weights = w;
        m
    }

    /// Model with the current (last) weights.
    pub fn current_model(&self) -> InterpretationModel<T> {
        self.with_weights(self.weights.clone())
    }

    pub fn averaged_model(&self) -> InterpretationModel<T> {
        if self.steps == 0 {
            return self.current_model();
        }
        let n = T::from_usize_lossy(self.steps);
        self.with_weights(self.sum.iter().map(|&s| s / n).collect())
    }

    fn step(&mut self, i: usize) -> Result<UpdateRecord<T>, LearningError> {
        let model = self.current_model();
        let pred = self.examples[i].interpret(&model, &self.search)?;
        let gf = &self.gold_features[i];
        let diff: Vec<T> = gf.iter().zip(&pred.feature_vector).map(|(&g, &p)| g - p).collect();
        let dot = |w: &[T]| w.iter().zip(&diff).fold(T::zero(), |a, (&w, &d)| a + w * d);
        let margin_before = dot(&self.weights);
        let step_norm2 = diff.iter().fold(T::zero(), |a, &d| a + d * d);
        let updated = *gf != pred.feature_vector;
        if updated {
            for (w, d) in self.weights.iter_mut().zip(&diff) {
                *w += *d;
            }
            self.updates += 1;
        }
        for (s, w) in self.sum.iter_mut().zip(&self.weights) {
            *s += *w;
        }
        self.steps += 1;
        Ok(UpdateRecord {
            example: i,
            updated,
            margin_before,
            margin_after: dot(&self.weights),
            step_norm2,
        })
    }

    /// One pass over the examples in order (or a seeded shuffle).
    pub fn run_epoch(&mut self) -> Result<Vec<UpdateRecord<T>>, LearningError> {
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        if let Some(rng) = self.shuffle.as_mut() {
            use rand::seq::SliceRandom;
            order.shuffle(rng);
        }
        let mut log = Vec::with_capacity(order.len());
        for i in order {
            log.push(self.step(i)?);
        }
        self.epochs_run += 1;
        Ok(log)
    }

    /// Fraction of training examples whose predicted assignment equals the
    /// grounded gold under `model`.
    pub fn exact_match_rate(&self, model: &InterpretationModel<T>) -> Result<f64, LearningError> {
        let mut hits = 0;
        for (e, g) in self.examples.iter().zip(&self.golds) {
            if e.interpret(model, &self.search)?.assignment == *g {
                hits += 1;
            }
        }
        Ok(hits as f64 / self.examples.len() as f64)
    }
}

/// Averaged (or plain) structured perceptron. Weights start at zero and
/// only fully grounded positives are used.
pub fn train_structured<T: Scalar>(
    model: &InterpretationModel<T>,
    examples: &[PreparedExample<T>],
    params: &TrainParams,
    search: &SearchParams,
) -> Result<InterpretationModel<T>, LearningError> {
    let mut t = Trainer::new(model, examples, search.clone(), params.shuffle_seed)?;
    for _ in 0..params.epochs {
        t.run_epoch()?;
    }
    let mut out = if params.averaging { t.averaged_model() } else { t.current_model() };
    out.threshold = None;
    Ok(out)
}

/// Interpretation score, or `None` when the image cannot be interpreted.
pub fn score_of<T: Scalar>(model: &InterpretationModel<T>, e: &PreparedExample<T>, search: &SearchParams) -> Option<T> {
    e.interpret(model, search).ok().map(|i| i.score)
}

/// Midpoint of the mean positive and mean negative scores. Examples that
/// cannot be interpreted are left out of the means.
pub fn calibrate_threshold<T: Scalar>(model: &InterpretationModel<T>, examples: &[PreparedExample<T>], search: &SearchParams) -> Option<T> {
    let scores: Vec<Option<T>> = examples.par_iter().map(|e| score_of(model, e, search)).collect();
    let (mut sp, mut np, mut sn, mut nn) = (T::zero(), 0usize, T::zero(), 0usize);
    for (e, s) in examples.iter().zip(scores) {
        if let Some(s) = s {
            if e.label.is_positive() {
                sp += s;
                np += 1;
            } else {
                sn += s;
                nn += 1;
            }
        }
    }
    if np == 0 || nn == 0 {
        return None;
    }
    let mp = sp / T::from_usize_lossy(np);
    let mn = sn / T::from_usize_lossy(nn);
    Some((mp + mn) * T::lit(0.5))
}

/// Mean Jaccard over grounded positives and classification tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEvaluation {
    pub mean_jaccard: f64,
    pub jaccard_examples: usize,
    pub exact_matches: usize,
    pub classification: crate::evaluation::Confusion,
}

impl SetEvaluation {
    pub fn accuracy(&self) -> f64 {
        self.classification.accuracy()
    }
}

/// Outcome of interpreting one prepared example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ExampleOutcome<T> {
    /// `None` when the image could not be interpreted.
    pub prediction: Option<Interpretation<T>>,
    pub predicted_positive: bool,
    /// Jaccard against the grounded gold; positives only.
    pub jaccard: Option<crate::evaluation::EvalResult>,
    /// Prediction equals the grounded gold (positives only).
    pub exact: bool,
}

/// Interpret every example (concurrently) and compare with its gold.
/// Output order follows the input.
pub fn evaluate_examples<T: Scalar>(
    model: &InterpretationModel<T>,
    examples: &[PreparedExample<T>],
    search: &SearchParams,
) -> Vec<ExampleOutcome<T>> {
    examples
        .par_iter()
        .map(|e| {
            let prediction = e.interpret(model, search).ok();
            let predicted_positive = prediction.as_ref().is_some_and(|p| model.is_positive(p.score));
            let (mut jaccard, mut exact) = (None, false);
            if e.label.is_positive() {
                let gold = gold_for(model, &e.grounded);
                let empty = Assignment::new();
                let pa = prediction.as_ref().map_or(&empty, |p| &p.assignment);
                jaccard = crate::evaluation::jaccard_correspondence(pa, &gold, e.dims()).ok();
                exact = prediction.as_ref().is_some_and(|p| p.assignment == gold);
            }
            ExampleOutcome {
                prediction,
                predicted_positive,
                jaccard,
                exact,
            }
        })
        .collect()
}

/// Evaluate on prepared examples: Jaccard against the grounded gold on
/// positives, and classification with the model threshold (an image that
/// cannot be interpreted counts as negative).
pub fn evaluate_set<T: Scalar>(model: &InterpretationModel<T>, examples: &[PreparedExample<T>], search: &SearchParams) -> SetEvaluation {
    let outcomes = evaluate_examples(model, examples, search);
    let mut conf = crate::evaluation::Confusion::default();
    let mut jac = 0.0;
    let mut nj = 0;
    let mut exact = 0;
    for (e, o) in examples.iter().zip(&outcomes) {
        conf.record(o.predicted_positive, e.label.is_positive());
        if let Some(r) = &o.jaccard {
            jac += r.mean_jaccard;
            nj += 1;
        }
        exact += o.exact as usize;
    }
    SetEvaluation {
        mean_jaccard: if nj == 0 { 0.0 } else { jac / nj as f64 },
        jaccard_examples: nj,
        exact_matches: exact,
        classification: conf,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    InterpretationJaccard,
    ClassificationAccuracy,
}

impl MetricKind {
    pub fn id(self) -> &'static str {
        match self {
            MetricKind::InterpretationJaccard => "interpretation_jaccard",
            MetricKind::ClassificationAccuracy => "classification_accuracy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub relation: String,
    pub index: usize,
    pub metric: MetricKind,
    pub baseline: f64,
    pub ablated: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub entries: Vec<AblationEntry>,
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("relation,metric,baseline,ablated,delta\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "\"{}\",{},{:.6},{:.6},{:.6}",
                e.relation,
                e.metric.id(),
                e.baseline,
                e.ablated,
                e.delta
            );
        }
        out
    }
}

/// Re-evaluate with one relation's weight block zeroed; no retraining and
/// the threshold is kept.
pub fn ablate_feature<T: Scalar>(
    model: &InterpretationModel<T>,
    baseline: &SetEvaluation,
    examples: &[PreparedExample<T>],
    relation: usize,
    search: &SearchParams,
) -> Result<Vec<AblationEntry>, LearningError> {
    if relation >= model.relations.len() {
        return Err(LearningError::RelationIndex {
            index: relation,
            len: model.relations.len(),
        });
    }
    let ablated = evaluate_set(&model.with_block_zeroed(relation), examples, search);
    let label = model.relations[relation].label();
    let entry = |metric, b: f64, a: f64| AblationEntry {
        relation: label.clone(),
        index: relation,
        metric,
        baseline: b,
        ablated: a,
        delta: b - a,
    };
    Ok(vec![
        entry(MetricKind::InterpretationJaccard, baseline.mean_jaccard, ablated.mean_jaccard),
        entry(MetricKind::ClassificationAccuracy, baseline.accuracy(), ablated.accuracy()),
    ])
}

/// Ablation by retraining: the relation is removed from the structure, the
/// model is trained from scratch on `train` and its threshold recalibrated,
/// then both are evaluated on `eval`. `baseline` is the full model, already
/// trained and calibrated.
pub fn ablate_feature_retrained<T: Scalar>(
    baseline: &InterpretationModel<T>,
    train: &[PreparedExample<T>],
    eval: &[PreparedExample<T>],
    relation: usize,
    params: &TrainParams,
    search: &SearchParams,
) -> Result<Vec<AblationEntry>, LearningError> {
    if relation >= baseline.relations.len() {
        return Err(LearningError::RelationIndex {
            index: relation,
            len: baseline.relations.len(),
        });
    }
    let mut reduced = train_structured(&baseline.without_relation(relation), train, params, search)?;
    reduced.threshold = calibrate_threshold(&reduced, train, search);
    let base = evaluate_set(baseline, eval, search);
    let ablated = evaluate_set(&reduced, eval, search);
    let label = baseline.relations[relation].label();
    let entry = |metric, b: f64, a: f64| AblationEntry {
        relation: label.clone(),
        index: relation,
        metric,
        baseline: b,
        ablated: a,
        delta: b - a,
    };
    Ok(vec![
        entry(MetricKind::InterpretationJaccard, base.mean_jaccard, ablated.mean_jaccard),
        entry(MetricKind::ClassificationAccuracy, base.accuracy(), ablated.accuracy()),
    ])
}

/// Ablation of every relation in turn.
pub fn ablation_report<T: Scalar>(
    model: &InterpretationModel<T>,
    examples: &[PreparedExample<T>],
    search: &SearchParams,
) -> Result<AblationReport, LearningError> {
    let baseline = evaluate_set(model, examples, search);
    let mut entries = Vec::new();
    for r in 0..model.relations.len() {
        entries.extend(ablate_feature(model, &baseline, examples, r, search)?);
    }
    Ok(AblationReport { entries })
}

/// Per-relation share of a recognition drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RelationAttribution<T> {
    pub relation: String,
    /// `φ(min) − φ(sub)` on the relation's block.
    pub feature_delta: Vec<T>,
    /// The block's weighted share, `w · (φ(min) − φ(sub))`.
    pub contribution: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RecognitionDrop<T> {
    /// `-inf` when the image could not be interpreted.
    pub score_min: T,
    pub score_sub: T,
    pub drop: T,
    pub min_uninterpretable: bool,
    pub sub_uninterpretable: bool,
    pub null_penalty_delta: T,
    /// Empty when either side could not be interpreted.
    pub attribution: Vec<RelationAttribution<T>>,
}

impl<T: Scalar> RecognitionDrop<T> {
    /// Relation with the largest positive contribution.
    pub fn top_relation(&self) -> Option<&RelationAttribution<T>> {
        self.attribution
            .iter()
            .filter(|a| a.contribution > T::zero())
            .max_by(|a, b| crate::scalar::cmp_scores(a.contribution, b.contribution))
    }
}

/// Interpret a minimal image and one of its descendants and compare.
pub fn recognition_drop<T: Scalar>(
    model: &InterpretationModel<T>,
    minimal: &Image,
    subminimal: &Image,
    extract: &ExtractParams,
    search: &SearchParams,
) -> RecognitionDrop<T> {
    let run = |img: &Image| {
        crate::search::interpret_image(model, img, extract, search)
            .ok()
            .map(|(_, _, o)| o.interpretation)
    };
    let (a, b) = (run(minimal), run(subminimal));
    let ninf = T::neg_infinity();
    let pen = |i: &Interpretation<T>| model.total_null_penalty(|n| i.assignment.get(n).is_none_or(|p| p.is_none()));
    match (&a, &b) {
        (Some(a), Some(b)) => {
            let attribution = model
                .relations
                .iter()
                .enumerate()
                .map(|(r, spec)| {
                    let range = model.block_range(r);
                    let feature_delta: Vec<T> = range.clone().map(|k| a.feature_vector[k] - b.feature_vector[k]).collect();
                    let contribution = range
                        .zip(&feature_delta)
                        .fold(T::zero(), |acc, (k, d)| acc + model.weights[k] * *d);
                    RelationAttribution {
                        relation: spec.label(),
                        feature_delta,
                        contribution,
                    }
                })
                .collect();
            RecognitionDrop {
                score_min: a.score,
                score_sub: b.score,
                drop: a.score - b.score,
                min_uninterpretable: false,
                sub_uninterpretable: false,
                null_penalty_delta: pen(a) - pen(b),
                attribution,
            }
        }
        _ => {
            let sa = a.as_ref().map_or(ninf, |i| i.score);
            let sb = b.as_ref().map_or(ninf, |i| i.score);
            RecognitionDrop {
                score_min: sa,
                score_sub: sb,
                drop: if a.is_some() { T::infinity() } else { T::nan() },
                min_uninterpretable: a.is_none(),
                sub_uninterpretable: b.is_none(),
                null_penalty_delta: T::zero(),
                attribution: Vec::new(),
            }
        }
    }
}
