use std::path::Path;
use std::process::{Command, Output};

fn minconf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minconf")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> Option<i32> {
    o.status.code()
}

fn trained(dir: &Path) {
    assert!(minconf(dir, &["gen", "--n", "30", "--out-dir", "corpus"]).status.success());
    assert!(minconf(dir, &["train", "--corpus", "corpus", "--epochs", "3", "--out-dir", "model"]).status.success());
}

#[test]
fn help_lists_defaults() {
    let o = minconf(Path::new("."), &["--help"]);
    assert_eq!(code(&o), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for d in ["[default: 8]", "[default: 50]", "[default: 1000000]", "[default: 6]", "[default: 1,0.75,0.5]", "[default: 0.8]"] {
        assert!(text.contains(d), "missing {d}");
    }
}

#[test]
fn reduce_writes_five_descendants() {
    let dir = tempfile::tempdir().unwrap();
    assert!(minconf(dir.path(), &["gen", "--n", "2", "--out-dir", "c"]).status.success());
    assert!(minconf(dir.path(), &["reduce", "c/images/00000.pgm", "--out-dir", "r"]).status.success());
    let mut names: Vec<String> = std::fs::read_dir(dir.path().join("r"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["00000_crop-bl.pgm", "00000_crop-br.pgm", "00000_crop-tl.pgm", "00000_crop-tr.pgm", "00000_resolution.pgm"]);
    for n in names {
        let img = minconf::Image::from_pgm_bytes(&std::fs::read(dir.path().join("r").join(n)).unwrap()).unwrap();
        assert_eq!(img.dims(), (24, 24));
    }
}

#[test]
fn gen_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        assert!(minconf(dir.path(), &["gen", "--n", "6", "--seed", "3", "--out-dir", out]).status.success());
    }
    assert!(minconf(dir.path(), &["gen", "--n", "6", "--seed", "4", "--out-dir", "c"]).status.success());
    let read = |d: &str| std::fs::read(dir.path().join(d).join("images/00000.pgm")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&minconf(dir.path(), &["frobnicate"])), Some(1));
    assert_eq!(code(&minconf(dir.path(), &["--k", "0", "gen", "--n", "2"])), Some(1));
    std::fs::write(dir.path().join("cfg.json"), r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(code(&minconf(dir.path(), &["--config", "cfg.json", "gen", "--n", "2"])), Some(1));
}

#[test]
fn missing_and_malformed_files_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&minconf(dir.path(), &["reduce", "absent.pgm"])), Some(3));
    std::fs::write(dir.path().join("bad.pgm"), b"P5 3 3 255\n").unwrap();
    assert_eq!(code(&minconf(dir.path(), &["reduce", "bad.pgm"])), Some(3));
}

#[test]
fn interpret_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    trained(d);

    let o = minconf(d, &["interpret", "corpus/images/00000.pgm", "--model", "model/model.json", "--out-dir", "i"]);
    assert_eq!(code(&o), Some(0));
    let out: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("i/00000.interpretation.json")).unwrap()).unwrap();
    assert!(out.is_object());

    minconf::Image::new(30, 30, vec![128; 900]).unwrap().save_pgm(d.join("blank.pgm")).unwrap();
    assert_eq!(code(&minconf(d, &["interpret", "blank.pgm", "--model", "model/model.json"])), Some(2));

    let mut model: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("model/model.json")).unwrap()).unwrap();
    model["weights"].as_array_mut().unwrap().pop();
    std::fs::write(d.join("broken.json"), serde_json::to_vec(&model).unwrap()).unwrap();
    assert_eq!(code(&minconf(d, &["interpret", "corpus/images/00000.pgm", "--model", "broken.json"])), Some(4));
}

#[test]
fn eval_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    trained(d);
    assert!(minconf(d, &["gen", "--n", "10", "--seed", "900", "--out-dir", "held"]).status.success());
    assert!(minconf(d, &["eval", "--corpus", "held", "--model", "model/model.json", "--out-dir", "e"]).status.success());
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("e/eval_summary.json")).unwrap()).unwrap();
    assert!(summary.is_object());
    let csv = std::fs::read_to_string(d.join("e/eval.csv")).unwrap();
    // one row per positive: Jaccard is only defined where gold geometry is the class
    assert_eq!(csv.lines().count(), 1 + 5);
}
