//! `minconf` command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use minconf::config::RunConfig;
use minconf::error::{ModelError, SearchError};
use minconf::evaluation::{jaccard_correspondence, results_csv, summarize, Confusion, EvalResult};
use minconf::fullimage::{combine, refine, scan, DetectedConfiguration, GlobalInterpretation};
use minconf::image::{descendants, load_pgm, Image};
use minconf::learning::{
    ablate_feature, ablate_feature_retrained, calibrate_threshold, evaluate_examples, evaluate_set, prepare_all,
    train_structured, AblationReport, PreparedExample, TrainingExample,
};
use minconf::model::{Interpretation, InterpretationModel};
use minconf::primitives::extract_primitives;
use minconf::search::{build_candidates, interpret_table};
use minconf::synthgen::{corpus, generate_scene, read_corpus, write_corpus, GoldFile, Manifest, MANIFEST_FILE};
use minconf::Real;

#[derive(Parser)]
#[command(name = "minconf", version, about = "Interpret minimal image configurations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags accepted by every command. Parameter overrides take precedence
/// over the config file, which takes precedence over built-in defaults.
#[derive(Args)]
struct Common {
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON run configuration; missing keys keep their defaults [default: built-in defaults]
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving all outputs
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Candidates kept per component [default: 8]
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Beam width [default: 50]
    #[arg(long, global = true)]
    beam_width: Option<usize>,
    /// Largest assignment space searched exactly [default: 1000000]
    #[arg(long, global = true)]
    exact_limit: Option<u128>,
    /// Training epochs [default: 20]
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Scan stride in pixels [default: 6]
    #[arg(long, global = true)]
    stride: Option<usize>,
    /// Comma-separated scan scales [default: 1,0.75,0.5]
    #[arg(long, global = true, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    /// Reduction factor [default: 0.8]
    #[arg(long, global = true)]
    factor: Option<f64>,
    /// Gradient magnitude threshold for extraction [default: 20]
    #[arg(long, global = true)]
    mag_threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Interpret one image with a trained model
    Interpret {
        /// PGM image
        image: PathBuf,
        /// Model file
        #[arg(long)]
        model: PathBuf,
        /// Also write an SVG overlay
        #[arg(long, default_value_t = false)]
        render: bool,
    },
    /// Train the hug model on a corpus and calibrate its threshold
    Train {
        /// Corpus directory (with manifest.json)
        #[arg(long)]
        corpus: PathBuf,
        /// Shuffle example order each epoch using --seed
        #[arg(long, default_value_t = false)]
        shuffle: bool,
    },
    /// Jaccard correspondence and classification on a corpus
    Eval {
        /// Corpus directory holding gold annotations
        #[arg(long)]
        corpus: PathBuf,
        /// Model to interpret the corpus images with
        #[arg(long, required_unless_present = "predictions")]
        model: Option<PathBuf>,
        /// Directory of precomputed interpretations or gold files, one per
        /// sample, named like the corpus gold files
        #[arg(long, conflicts_with = "model")]
        predictions: Option<PathBuf>,
    },
    /// Per-relation ablation report
    Ablate {
        /// Evaluation corpus
        #[arg(long)]
        corpus: PathBuf,
        /// Trained model
        #[arg(long)]
        model: PathBuf,
        /// Retrain without the relation instead of zeroing its weights
        #[arg(long, default_value_t = false, requires = "train_corpus")]
        retrain: bool,
        /// Training corpus for --retrain
        #[arg(long)]
        train_corpus: Option<PathBuf>,
        /// Only this relation (index or label) [default: every relation]
        #[arg(long)]
        relation: Option<String>,
    },
    /// Write the five reduced descendants of an image
    Reduce {
        /// PGM image
        image: PathBuf,
    },
    /// Detect, interpret and combine configurations in a full image
    Scan {
        /// PGM image
        image: PathBuf,
        /// Model file; repeat for several models
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        /// Re-interpret detections at full resolution [default: config value, false]
        #[arg(long, default_value_t = false)]
        refine: bool,
        /// Also write an SVG overlay
        #[arg(long, default_value_t = false)]
        render: bool,
    },
    /// Generate a synthetic glyph corpus
    Gen {
        /// Number of glyphs, alternating positive and negative
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Number of full scenes to generate as well
        #[arg(long, default_value_t = 0)]
        scenes: usize,
    },
}

/// Failure with its exit status.
enum Failure {
    Usage(String),
    Uninterpretable(String),
    Io(String),
    InvalidModel(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Uninterpretable(_) => 2,
            Failure::Io(_) => 3,
            Failure::InvalidModel(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Uninterpretable(m) | Failure::Io(m) | Failure::InvalidModel(m) => m,
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn io<E: std::fmt::Display>(what: impl AsRef<Path>) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Io(format!("{}: {e}", what.as_ref().display()))
}

fn search_failure(e: SearchError) -> Failure {
    match e {
        SearchError::Model(m) => Failure::InvalidModel(m.to_string()),
        e @ (SearchError::Uninterpretable { .. } | SearchError::NoDistinctAssignment) => Failure::Uninterpretable(e.to_string()),
        e => Failure::Usage(e.to_string()),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Outcome {
    fs::write(path, contents).map_err(io(path))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load_model(path: &Path) -> Outcome<InterpretationModel<Real>> {
    // a missing or unreadable file is an I/O error, bad contents an invalid model
    let text = fs::read_to_string(path).map_err(io(path))?;
    InterpretationModel::from_json(&text).map_err(|e: ModelError| Failure::InvalidModel(format!("{}: {e}", path.display())))
}

fn load_image(path: &Path) -> Outcome<Image> {
    load_pgm(path).map_err(io(path))
}

fn load_corpus(dir: &Path) -> Outcome<(Manifest, Vec<TrainingExample<Real>>)> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(io(&mpath))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(io(&mpath))?;
    let samples = read_corpus::<Real>(dir).map_err(io(dir))?;
    Ok((manifest, samples.into_iter().map(Into::into).collect()))
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn resolve_config(c: &Common) -> Outcome<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            minconf::config::ConfigError::Io(..) => Failure::Io(e.to_string()),
            e => Failure::Usage(e.to_string()),
        })?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.k {
        cfg.search.k = v;
    }
    if let Some(v) = c.beam_width {
        cfg.search.beam_width = v;
    }
    if let Some(v) = c.exact_limit {
        cfg.search.exact_limit = v;
    }
    if let Some(v) = c.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = c.stride {
        cfg.scan.stride = v;
    }
    if let Some(v) = &c.scales {
        cfg.scan.scales = v.clone();
    }
    if let Some(v) = c.factor {
        cfg.reduction.factor = v;
    }
    if let Some(v) = c.mag_threshold {
        cfg.extract.mag_threshold = v;
    }
    cfg.check().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct InterpretOutput<'a> {
    image: String,
    class_label: &'a str,
    positive: bool,
    threshold: Option<Real>,
    #[serde(flatten)]
    interpretation: &'a Interpretation<Real>,
}

fn cmd_interpret(cfg: &RunConfig, out: &Path, image: &Path, model: &Path, render: bool) -> Outcome {
    let model = load_model(model)?;
    let img = load_image(image)?;
    let prims = extract_primitives::<Real>(&img, &cfg.extract);
    let table = build_candidates(&model, &prims, cfg.search.k).map_err(search_failure)?;
    let interp = interpret_table(&model, &table, &cfg.search).map_err(search_failure)?.interpretation;
    let name = stem(image);
    let doc = InterpretOutput {
        image: image.display().to_string(),
        class_label: &model.class_label,
        positive: model.is_positive(interp.score),
        threshold: model.threshold,
        interpretation: &interp,
    };
    write(&out.join(format!("{name}.interpretation.json")), to_json(&doc))?;
    if render {
        write(&out.join(format!("{name}.interpretation.svg")), minconf::render::svg_interpretation(&img, &interp))?;
    }
    println!("{name}: score {:.6} ({})", interp.score, if doc.positive { "positive" } else { "negative" });
    Ok(())
}

#[derive(Serialize)]
struct TrainReport {
    examples: usize,
    usable_positives: usize,
    epochs: usize,
    threshold: Option<Real>,
    training_exact_match: f64,
    training_accuracy: f64,
    training_mean_jaccard: f64,
}

fn cmd_train(cfg: &RunConfig, seed: u64, out: &Path, corpus_dir: &Path, shuffle: bool) -> Outcome {
    let (_, examples) = load_corpus(corpus_dir)?;
    let prepared = prepare_all(&examples, &cfg.extract);
    let mut params = cfg.train;
    if shuffle {
        params.shuffle_seed = Some(seed);
    }
    let structure = cfg.hug_structure::<Real>();
    let mut model = train_structured(&structure, &prepared, &params, &cfg.search).map_err(|e| Failure::Usage(e.to_string()))?;
    model.threshold = calibrate_threshold(&model, &prepared, &cfg.search);
    let eval = evaluate_set(&model, &prepared, &cfg.search);
    let usable = prepared.iter().filter(|e| e.usable_positive()).count();
    let report = TrainReport {
        examples: prepared.len(),
        usable_positives: usable,
        epochs: params.epochs,
        threshold: model.threshold,
        training_exact_match: if usable == 0 { 0.0 } else { eval.exact_matches as f64 / usable as f64 },
        training_accuracy: eval.accuracy(),
        training_mean_jaccard: eval.mean_jaccard,
    };
    write(&out.join("model.json"), model.to_json())?;
    write(&out.join("train_report.json"), to_json(&report))?;
    println!(
        "trained on {} examples: exact match {:.4}, accuracy {:.4}",
        report.examples, report.training_exact_match, report.training_accuracy
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    images: usize,
    evaluated: usize,
    mean_jaccard: f64,
    per_component_mean: BTreeMap<String, f64>,
    classification: Option<Confusion>,
    accuracy: Option<f64>,
}

fn read_prediction(path: &Path) -> Outcome<minconf::Assignment> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    if let Ok(i) = serde_json::from_str::<Interpretation<Real>>(&text) {
        return Ok(i.assignment);
    }
    serde_json::from_str::<GoldFile<Real>>(&text)
        .map(|g| g.gold)
        .map_err(|e| Failure::Io(format!("{}: not an interpretation or gold file: {e}", path.display())))
}

fn cmd_eval(cfg: &RunConfig, out: &Path, corpus_dir: &Path, model: Option<&Path>, predictions: Option<&Path>) -> Outcome {
    let (manifest, examples) = load_corpus(corpus_dir)?;
    let names: Vec<String> = manifest.samples.iter().map(|e| stem(&e.image)).collect();
    let mut rows: Vec<(String, EvalResult)> = Vec::new();
    let mut classification = None;
    let components: Vec<String>;
    if let Some(dir) = predictions {
        for ((name, entry), ex) in names.iter().zip(&manifest.samples).zip(&examples) {
            let pred = read_prediction(&dir.join(entry.gold.file_name().unwrap_or_default()))?;
            if let Ok(r) = jaccard_correspondence(&pred, &ex.gold, ex.image.dims()) {
                rows.push((name.clone(), r));
            }
        }
        let mut set: Vec<String> = examples.iter().flat_map(|e| e.gold.keys().cloned()).collect();
        set.sort();
        set.dedup();
        components = set;
    } else {
        let model = load_model(model.expect("clap requires --model or --predictions"))?;
        let prepared: Vec<PreparedExample<Real>> = prepare_all(&examples, &cfg.extract);
        let outcomes = evaluate_examples(&model, &prepared, &cfg.search);
        let mut conf = Confusion::default();
        for ((name, ex), o) in names.iter().zip(&prepared).zip(outcomes) {
            conf.record(o.predicted_positive, ex.label.is_positive());
            if let Some(mut r) = o.jaccard {
                let mut c = Confusion::default();
                c.record(o.predicted_positive, true);
                r.classification = Some(c);
                rows.push((name.clone(), r));
            }
        }
        classification = Some(conf);
        components = model.components.iter().map(|c| c.name.clone()).collect();
    }
    let summary = summarize(rows.iter().map(|(_, r)| r));
    let report = EvalReport {
        images: examples.len(),
        evaluated: summary.images,
        mean_jaccard: summary.mean_jaccard,
        per_component_mean: summary.per_component_mean,
        accuracy: classification.as_ref().map(Confusion::accuracy),
        classification,
    };
    let cols: Vec<&str> = components.iter().map(String::as_str).collect();
    write(&out.join("eval.csv"), results_csv(&rows, &cols))?;
    write(&out.join("eval_summary.json"), to_json(&report))?;
    match report.accuracy {
        Some(a) => println!("mean jaccard {:.4} over {} images, accuracy {:.4}", report.mean_jaccard, report.evaluated, a),
        None => println!("mean jaccard {:.4} over {} images", report.mean_jaccard, report.evaluated),
    }
    Ok(())
}

fn relation_indices(model: &InterpretationModel<Real>, pick: Option<&str>) -> Outcome<Vec<usize>> {
    let Some(pick) = pick else {
        return Ok((0..model.relations.len()).collect());
    };
    if let Ok(i) = pick.parse::<usize>() {
        if i < model.relations.len() {
            return Ok(vec![i]);
        }
    }
    model
        .relations
        .iter()
        .position(|r| r.label() == pick)
        .map(|i| vec![i])
        .ok_or_else(|| Failure::Usage(format!("no relation {pick:?} in model")))
}

fn cmd_ablate(
    cfg: &RunConfig,
    out: &Path,
    corpus_dir: &Path,
    model: &Path,
    train_corpus: Option<&Path>,
    relation: Option<&str>,
) -> Outcome {
    let model = load_model(model)?;
    let (_, examples) = load_corpus(corpus_dir)?;
    let prepared = prepare_all(&examples, &cfg.extract);
    let which = relation_indices(&model, relation)?;
    let mut report = AblationReport::default();
    let fail = |e: minconf::error::LearningError| Failure::Usage(e.to_string());
    match train_corpus {
        Some(dir) => {
            let (_, train) = load_corpus(dir)?;
            let train = prepare_all(&train, &cfg.extract);
            for r in which {
                report.entries.extend(ablate_feature_retrained(&model, &train, &prepared, r, &cfg.train, &cfg.search).map_err(fail)?);
            }
        }
        None => {
            let baseline = evaluate_set(&model, &prepared, &cfg.search);
            for r in which {
                report.entries.extend(ablate_feature(&model, &baseline, &prepared, r, &cfg.search).map_err(fail)?);
            }
        }
    }
    write(&out.join("ablation.csv"), report.to_csv())?;
    print!("{}", report.to_csv());
    Ok(())
}

fn cmd_reduce(cfg: &RunConfig, out: &Path, image: &Path) -> Outcome {
    let img = load_image(image)?;
    let name = stem(image);
    let kids = descendants(&img, cfg.reduction.factor).map_err(|e| Failure::Usage(e.to_string()))?;
    for (step, child) in kids {
        let path = out.join(format!("{name}_{}.pgm", step.kind.slug()));
        child.save_pgm(&path).map_err(io(&path))?;
        println!("{} {}x{}", path.display(), child.width(), child.height());
    }
    Ok(())
}

#[derive(Serialize)]
struct ScanOutput<'a> {
    image: String,
    windows_examined: usize,
    windows_interpretable: usize,
    too_small: bool,
    detections: &'a [DetectedConfiguration<Real>],
    global: &'a GlobalInterpretation<Real>,
}

fn cmd_scan(cfg: &RunConfig, out: &Path, image: &Path, models: &[PathBuf], refine_flag: bool, render: bool) -> Outcome {
    let models = models.iter().map(|p| load_model(p)).collect::<Outcome<Vec<_>>>()?;
    let img = load_image(image)?;
    let result = scan(&img, &models, &cfg.scan, &cfg.extract, &cfg.search);
    if result.too_small {
        eprintln!("warning: image is smaller than the scan window at every scale");
    }
    let mut dets = result.detections.clone();
    if refine_flag || cfg.refine {
        dets = dets.iter().map(|d| refine(d, &models[d.model], &img, &cfg.extract, &cfg.search)).collect();
    }
    let global = combine(&dets, img.dims(), cfg.scan.merge_iou);
    let name = stem(image);
    let doc = ScanOutput {
        image: image.display().to_string(),
        windows_examined: result.windows_examined,
        windows_interpretable: result.windows_interpretable,
        too_small: result.too_small,
        detections: &dets,
        global: &global,
    };
    write(&out.join(format!("{name}.scan.json")), to_json(&doc))?;
    if render {
        write(&out.join(format!("{name}.scan.svg")), minconf::render::svg_scan(&img, &dets, &global))?;
    }
    println!("{name}: {} detections, {} claims", dets.len(), global.claim_count());
    Ok(())
}

fn cmd_gen(cfg: &RunConfig, seed: u64, out: &Path, n: usize, scenes: usize) -> Outcome {
    let samples = corpus::<Real>(seed, n, cfg.synth.dims).map_err(|e| Failure::Usage(e.to_string()))?;
    write_corpus(out, &samples).map_err(io(out))?;
    if scenes > 0 {
        let dir = out.join("scenes");
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        for i in 0..scenes {
            let s = seed.wrapping_add(i as u64);
            let scene = generate_scene::<Real>(s, cfg.synth.scene_glyphs, cfg.synth.scene_dims)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let base = dir.join(format!("scene_{i:04}"));
            let pgm = base.with_extension("pgm");
            scene.image.save_pgm(&pgm).map_err(io(&pgm))?;
            write(&base.with_extension("json"), to_json(&scene.planted))?;
        }
    }
    let mut summary = String::new();
    let _ = write!(summary, "{} glyphs", samples.len());
    if scenes > 0 {
        let _ = write!(summary, ", {scenes} scenes");
    }
    println!("wrote {summary} to {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let cfg = resolve_config(&cli.common)?;
    let out = &cli.common.out_dir;
    fs::create_dir_all(out).map_err(io(out))?;
    match &cli.cmd {
        Cmd::Interpret { image, model, render } => cmd_interpret(&cfg, out, image, model, *render),
        Cmd::Train { corpus, shuffle } => cmd_train(&cfg, cli.common.seed, out, corpus, *shuffle),
        Cmd::Eval { corpus, model, predictions } => cmd_eval(&cfg, out, corpus, model.as_deref(), predictions.as_deref()),
        Cmd::Ablate {
            corpus,
            model,
            retrain,
            train_corpus,
            relation,
        } => cmd_ablate(
            &cfg,
            out,
            corpus,
            model,
            train_corpus.as_deref().filter(|_| *retrain),
            relation.as_deref(),
        ),
        Cmd::Reduce { image } => cmd_reduce(&cfg, out, image),
        Cmd::Scan {
            image,
            model,
            refine,
            render,
        } => cmd_scan(&cfg, out, image, model, *refine, *render),
        Cmd::Gen { n, scenes } => cmd_gen(&cfg, cli.common.seed, out, *n, *scenes),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
