//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! The run always exits 0 so that a failing criterion is reported rather
//! than hidden behind a red test run; set `ACCEPTANCE_STRICT=1` to exit 1
//! when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use minconf::evaluation::jaccard_correspondence;
use minconf::fullimage::{combine, scan, ScanParams};
use minconf::image::{descendants, reduce, reduced_len, ReductionKind, ReductionStep};
use minconf::learning::{
    ablate_feature, calibrate_threshold, evaluate_set, prepare_all, recognition_drop, train_structured, PreparedExample,
    TrainParams, Trainer, TrainingExample,
};
use minconf::model::{hug, hug_structure, Assignment, InterpretationModel};
use minconf::primitives::{ExtractParams, Primitive};
use minconf::search::{interpret_beam_indexed, interpret_exact_indexed, SearchParams};
use minconf::synthgen::{box_iou, corpus, generate, generate_scene, Label};

type Model = InterpretationModel<f64>;

const DIMS: (usize, usize) = (30, 30);
/// Training corpora for the end-to-end criteria: disjoint 200-sample ranges.
const TRAIN_BASES: [u64; 5] = [0, 1000, 2000, 3000, 4000];
const TEST_BASE: u64 = 5000;
const TOUCH: &str = "touch(palm-region,torso-region-2)";
const DECOY: &str = "exists(torso-region-1)";

struct Report {
    results: Vec<(u32, bool)>,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: impl AsRef<str>) {
        println!("{} [{id:>2}] {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
        self.results.push((id, pass));
    }
}

fn prepared(base: u64, n: usize) -> Vec<PreparedExample<f64>> {
    let ex: Vec<TrainingExample<f64>> = corpus::<f64>(base, n, DIMS).unwrap().into_iter().map(Into::into).collect();
    prepare_all(&ex, &ExtractParams::default())
}

fn train(examples: &[PreparedExample<f64>]) -> Model {
    let sp = SearchParams::default();
    let mut m = train_structured(&hug_structure(), examples, &TrainParams::default(), &sp).unwrap();
    m.threshold = calibrate_threshold(&m, examples, &sp);
    m
}

fn relation_index(m: &Model, label: &str) -> usize {
    m.relations.iter().position(|r| r.label() == label).expect("relation in shipped structure")
}

fn oracle_and_monotonicity(r: &mut Report) {
    let (mut same, mut violations, mut failures) = (0, 0, 0);
    let mut search_time = 0.0;
    for seed in 0..100 {
        let (model, table) = common::random_instance(seed);
        let t = Instant::now();
        let exact = interpret_exact_indexed(&model, &table, u128::MAX);
        let beam = interpret_beam_indexed(&model, &table, table.product() as usize);
        search_time += t.elapsed().as_secs_f64();
        match (&exact, &beam) {
            (Ok(e), Ok(b)) if e.indices == b.indices && e.interpretation.score.to_bits() == b.interpretation.score.to_bits() => same += 1,
            (Err(e), Err(b)) if e == b => same += 1,
            _ => failures += 1,
        }
        let mut last = f64::NEG_INFINITY;
        for w in [1, 2, 5, 20, usize::MAX] {
            let s = interpret_beam_indexed(&model, &table, w).map_or(f64::NEG_INFINITY, |o| o.interpretation.score);
            if s < last {
                violations += 1;
            }
            last = last.max(s);
        }
    }
    r.line(
        2,
        "oracle equivalence",
        same == 100 && search_time < 5.0,
        format!("{same}/100 identical to exact ({failures} differ), search time {search_time:.2} s (limit 5 s)"),
    );
    r.line(
        3,
        "beam monotonicity",
        violations == 0,
        format!("{violations} violations over widths 1, 2, 5, 20, inf on 100 instances"),
    );
}

fn perceptron_learning(r: &mut Report) {
    let t = Instant::now();
    let ex: Vec<TrainingExample<f64>> = (0..200)
        .map(|i| generate::<f64>(10_000 + i, Label::Positive, DIMS).unwrap().into())
        .collect();
    let prepared = prepare_all(&ex, &ExtractParams::default());
    let mut trainer = Trainer::new(&hug_structure::<f64>(), &prepared, SearchParams::default(), None).unwrap();
    let mut reached = None;
    let mut rate = 0.0;
    for epoch in 1..=20 {
        trainer.run_epoch().unwrap();
        rate = trainer.exact_match_rate(&trainer.averaged_model()).unwrap();
        if rate == 1.0 {
            reached = Some(epoch);
            break;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let grounded = trainer.len();
    r.line(
        4,
        "perceptron learning",
        reached.is_some() && grounded == prepared.len() && secs < 60.0,
        format!(
            "exact match {rate:.3} on {grounded}/200 grounded positives{}, {secs:.1} s (limit 60 s)",
            reached.map_or(" not reached in 20 epochs".to_string(), |e| format!(" after epoch {e}"))
        ),
    );
}

/// Returns the model trained on the first base, used by later criteria.
fn end_to_end(r: &mut Report, test: &[PreparedExample<f64>]) -> Model {
    let sp = SearchParams::default();
    let mut first = None;
    let mut parts = Vec::new();
    let mut all = true;
    for base in TRAIN_BASES {
        let m = train(&prepared(base, 200));
        let ev = evaluate_set(&m, test, &sp);
        let ok = ev.mean_jaccard >= 0.80 && ev.accuracy() >= 0.95;
        all &= ok;
        parts.push(format!("base {base}: jaccard {:.3} acc {:.2}", ev.mean_jaccard, ev.accuracy()));
        first.get_or_insert(m);
    }
    r.line(
        5,
        "end-to-end quality",
        all,
        format!("{} (need jaccard >= 0.80 and acc >= 0.95 for every base)", parts.join("; ")),
    );
    first.unwrap()
}

fn ablation(r: &mut Report, m: &Model, test: &[PreparedExample<f64>]) {
    let sp = SearchParams::default();
    let base = evaluate_set(m, test, &sp);
    let acc_delta = |label: &str| {
        ablate_feature(m, &base, test, relation_index(m, label), &sp)
            .unwrap()
            .into_iter()
            .find(|e| e.metric == minconf::learning::MetricKind::ClassificationAccuracy)
            .unwrap()
            .delta
    };
    let touch = acc_delta(TOUCH);
    let decoy = acc_delta(DECOY);
    r.line(
        6,
        "ablation causality",
        touch >= 0.20 && decoy.abs() <= 0.05,
        format!("accuracy {:.2}; touch drop {touch:.2} (need >= 0.20), decoy change {decoy:.2} (need <= 0.05)", base.accuracy()),
    );
}

fn recognition(r: &mut Report, m: &Model) {
    let ex = ExtractParams::default();
    let sp = SearchParams::default();
    let (cw, ch) = (reduced_len(DIMS.0, 0.8), reduced_len(DIMS.1, 0.8));
    let (mut n, mut below, mut top_touch, mut min_positive) = (0, 0, 0, 0);
    let mut seed = 20_000;
    while n < 100 {
        let g = generate::<f64>(seed, Label::Positive, DIMS).unwrap();
        seed += 1;
        let palm = &g.gold_region(hug::PALM).unwrap().pixels;
        // no glyph's palm lies wholly in the cropped band; require most of it there
        let removed = palm.iter().filter(|p| p.x as usize >= cw || p.y as usize >= ch).count();
        if 2 * removed < palm.len() {
            continue;
        }
        n += 1;
        let sub = reduce(&g.image, ReductionStep::new(ReductionKind::CropTopLeft, 0.8)).unwrap();
        let d = recognition_drop(m, &g.image, &sub, &ex, &sp);
        if !d.min_uninterpretable && m.is_positive(d.score_min) {
            min_positive += 1;
        }
        if d.sub_uninterpretable || !m.is_positive(d.score_sub) {
            below += 1;
        }
        if d.top_relation().is_some_and(|a| a.relation == TOUCH) {
            top_touch += 1;
        }
    }
    r.line(
        7,
        "recognition drop",
        below >= 90 && top_touch >= 80,
        format!(
            "{below}/100 below threshold after the crop (need 90), touch largest in {top_touch}/100 (need 80); {min_positive}/100 full glyphs above threshold; crop removes >= half the palm; seeds 20000..{seed}"
        ),
    );
}

fn jaccard_exactness(r: &mut Report) {
    let one = |p: Primitive<f64>| -> Assignment<f64> { [("r".to_string(), Some(p))].into_iter().collect() };
    let a = one(Primitive::Region(common::rect(0, 0, 10, 10, (40, 40))));
    let b = one(Primitive::Region(common::rect(5, 0, 10, 10, (40, 40))));
    let c = one(Primitive::Region(common::rect(20, 20, 10, 10, (40, 40))));
    let same = jaccard_correspondence(&a, &a, (40, 40)).unwrap().mean_jaccard;
    let disjoint = jaccard_correspondence(&a, &c, (40, 40)).unwrap().mean_jaccard;
    let half = jaccard_correspondence(&a, &b, (40, 40)).unwrap();
    let ratio = half.overlaps["r"].ratio();
    let exact_third = *ratio.numer() == 1 && *ratio.denom() == 3 && (half.mean_jaccard - 1.0 / 3.0).abs() < 1e-12;
    r.line(
        8,
        "jaccard exactness",
        same == 1.0 && disjoint == 0.0 && exact_third,
        format!("identical {same}, disjoint {disjoint}, half overlap {}/{}", ratio.numer(), ratio.denom()),
    );
}

fn full_image(r: &mut Report, m: &Model) {
    let params = ScanParams::default();
    let ex = ExtractParams::default();
    let sp = SearchParams::default();
    let (mut planted, mut hits, mut fp) = (0, 0, 0);
    let (mut comps, mut comps_ok, mut det_comps, mut det_comps_ok) = (0, 0, 0, 0);
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let scene = generate_scene::<f64>(seed, 2, (120, 120)).unwrap();
        let t = Instant::now();
        let result = scan(&scene.image, std::slice::from_ref(m), &params, &ex, &sp);
        let global = combine(&result.detections, scene.image.dims(), params.merge_iou);
        worst = worst.max(t.elapsed().as_secs_f64());
        fp += result
            .detections
            .iter()
            .filter(|d| scene.planted.iter().all(|p| box_iou(d.window, p.bbox) < 0.5))
            .count();
        for p in &scene.planted {
            planted += 1;
            let detected = result.detections.iter().any(|d| box_iou(d.window, p.bbox) >= 0.5);
            hits += detected as usize;
            let (x0, y0, w, h) = p.bbox;
            let inside = |c: &minconf::fullimage::GlobalClaim<f64>| {
                let n = c.mask.len().max(1) as f64;
                let cx = c.mask.iter().map(|q| q.x as f64).sum::<f64>() / n;
                let cy = c.mask.iter().map(|q| q.y as f64).sum::<f64>() / n;
                cx >= x0 as f64 && cx < (x0 + w) as f64 && cy >= y0 as f64 && cy < (y0 + h) as f64
            };
            for (name, g) in &p.gold {
                if g.is_none() {
                    continue;
                }
                let claims = global.components.get(name).map_or(0, |v| v.iter().filter(|c| inside(c)).count());
                comps += 1;
                comps_ok += (claims == 1) as usize;
                if detected {
                    det_comps += 1;
                    det_comps_ok += (claims == 1) as usize;
                }
            }
        }
    }
    let recall = hits as f64 / planted as f64;
    let fp_rate = fp as f64 / 50.0;
    r.line(
        9,
        "full-image scan",
        recall >= 0.90 && fp_rate <= 0.2 && det_comps_ok == det_comps && worst < 2.0,
        format!(
            "detected {hits}/{planted} ({:.0}%, need 90%), {fp_rate:.2} FP/scene (limit 0.2), one claim for {det_comps_ok}/{det_comps} components of detected glyphs ({comps_ok}/{comps} of all planted), worst scene {worst:.2} s (limit 2 s)",
            recall * 100.0
        ),
    );
}

fn reduction(r: &mut Report) {
    let img = generate::<f64>(1, Label::Positive, DIMS).unwrap().image;
    let kids = descendants(&img, 0.8).unwrap();
    let sizes_ok = kids.len() == 5 && kids.iter().all(|(_, k)| k.dims() == (24, 24));
    let mut crops_exact = 0;
    for (step, k) in &kids {
        let (ox, oy) = match step.kind {
            ReductionKind::CropTopLeft => (0, 0),
            ReductionKind::CropTopRight => (6, 0),
            ReductionKind::CropBottomLeft => (0, 6),
            ReductionKind::CropBottomRight => (6, 6),
            ReductionKind::Resolution => continue,
        };
        let expected: Vec<u8> = (oy..oy + 24).flat_map(|y| img.data()[y * 30 + ox..y * 30 + ox + 24].to_vec()).collect();
        crops_exact += (k.data() == expected.as_slice()) as usize;
    }
    r.line(
        10,
        "reduction exactness",
        sizes_ok && crops_exact == 4,
        format!("{} descendants, all 24x24: {sizes_ok}; {crops_exact}/4 crops byte-identical", kids.len()),
    );
}

fn run_pipeline(dir: &Path) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_minconf");
    let steps: [&[&str]; 6] = [
        &["gen", "--n", "60", "--seed", "7", "--scenes", "1", "--out-dir", "corpus"],
        &["gen", "--n", "20", "--seed", "500", "--out-dir", "heldout"],
        &["train", "--corpus", "corpus", "--out-dir", "model"],
        &["eval", "--corpus", "heldout", "--model", "model/model.json", "--out-dir", "eval"],
        &["scan", "corpus/scenes/scene_0000.pgm", "--model", "model/model.json", "--render", "--out-dir", "scan"],
        &["interpret", "corpus/images/00000.pgm", "--model", "model/model.json", "--render", "--out-dir", "interp"],
    ];
    for args in steps {
        let out = Command::new(bin).args(args).current_dir(dir).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{} exited {:?}", args[0], out.status.code()));
        }
    }
    Ok(())
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism(r: &mut Report) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let runs = run_pipeline(a.path()).and_then(|_| run_pipeline(b.path()));
    let (fa, fb) = (files(a.path()), files(b.path()));
    let svgs = fa.keys().filter(|p| p.extension().is_some_and(|e| e == "svg")).count();
    let identical = fa == fb;
    let differing: Vec<String> = fa
        .iter()
        .filter(|(p, v)| fb.get(*p) != Some(*v))
        .map(|(p, _)| p.display().to_string())
        .collect();
    r.line(
        11,
        "determinism",
        runs.is_ok() && identical && svgs == 2,
        match runs {
            Ok(()) => format!("{} files compared, {svgs} SVG overlays, differing: {}", fa.len(), if differing.is_empty() { "none".to_string() } else { differing.join(", ") }),
            Err(e) => format!("pipeline failed: {e}"),
        },
    );
}

fn main() {
    let mut r = Report { results: Vec::new() };
    let start = Instant::now();
    println!("INFO [ 1] agreement with human annotations: needs annotation data that is not available here; not evaluated");
    oracle_and_monotonicity(&mut r);
    perceptron_learning(&mut r);
    let test = prepared(TEST_BASE, 100);
    let model = end_to_end(&mut r, &test);
    ablation(&mut r, &model, &test);
    recognition(&mut r, &model);
    jaccard_exactness(&mut r);
    full_image(&mut r, &model);
    reduction(&mut r);
    determinism(&mut r);
    r.results.sort();
    let passed = r.results.iter().filter(|(_, p)| *p).count();
    println!("acceptance: {passed}/{} criteria pass ({:.0} s)", r.results.len(), start.elapsed().as_secs_f64());
    if passed < r.results.len() && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
