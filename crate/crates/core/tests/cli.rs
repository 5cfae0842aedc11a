//! End-to-end runs of the `dune` command line inside temporary directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dune::cli::run;

const SMALL_CONFIG: &str = r#"
[model]
depth = 2
widths = [4, 8, 16]

[train]
max_epochs = 2
patience = 1
learning_rate = 0.003
"#;

fn dune(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec![
        "dune".to_string(),
        "--out".into(),
        out.display().to_string(),
        "--log-level".into(),
        "warn".into(),
    ];
    argv.extend(args.iter().map(|s| s.to_string()));
    run(argv)
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

/// synth, train and score into `out`.
fn pipeline(out: &Path) {
    let config = out.join("small.toml");
    fs::create_dir_all(out).unwrap();
    fs::write(&config, SMALL_CONFIG).unwrap();
    let config = config.display().to_string();
    assert_eq!(
        dune(out, &["--seed", "7", "synth", "--grid", "16x32", "--years", "42"]),
        0
    );
    assert_eq!(
        dune(out, &["--config", &config, "--seed", "7", "train", "--mode", "monthly"]),
        0
    );
    assert_eq!(dune(out, &["--config", &config, "score", "--mode", "monthly"]), 0);
}

#[test]
fn synth_train_score_and_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(&a);

    let score = a.join("score/monthly");
    for f in ["scores.csv", "summary.json", "table.md"] {
        assert!(score.join(f).is_file(), "missing {f}");
    }
    let table = fs::read_to_string(score.join("table.md")).unwrap();
    for method in ["dune", "climatology", "persist_prior_step", "persist_prior_year", "mlr"] {
        assert!(table.contains(method), "{method} absent from table");
    }
    let train = a.join("train/monthly-w1");
    for f in ["checkpoint.dckpt", "train_log.jsonl", "history.json", "experiment.json"] {
        assert!(train.join(f).is_file(), "missing {f}");
    }
    assert!(score.join("manifest.json").is_file() && train.join("manifest.json").is_file());

    pipeline(&b);
    for rel in [
        "score/monthly/scores.csv",
        "score/monthly/table.md",
        "train/monthly-w1/history.json",
    ] {
        assert_eq!(
            fs::read(a.join(rel)).unwrap(),
            fs::read(b.join(rel)).unwrap(),
            "{rel} differs"
        );
    }
    // The run manifests record argv, which names the output directory.
    let numeric = |dir: &Path| {
        let mut files = snapshot(dir);
        files.retain(|p, _| p.file_name().is_some_and(|n| n != "manifest.json"));
        files
    };
    assert_eq!(numeric(&a.join("data")), numeric(&b.join("data")));
}

#[test]
fn scoring_leaves_inputs_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(
        dune(out, &["--seed", "3", "synth", "--grid", "16x32", "--years", "42"]),
        0
    );
    let before = snapshot(&out.join("data"));
    assert_eq!(
        dune(
            out,
            &[
                "baseline",
                "--mode",
                "monthly",
                "--kind",
                "climatology,persist_prior_step"
            ]
        ),
        0
    );
    assert_eq!(
        dune(out, &["score", "--mode", "monthly", "--baselines", "climatology"]),
        0
    );
    assert_eq!(before, snapshot(&out.join("data")));
    assert!(out.join("baseline/monthly/persist_prior_step").is_dir());
}

#[test]
fn help_and_bad_flags() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(dune(tmp.path(), &["score", "--help"]), 0);
    assert_eq!(dune(tmp.path(), &["score", "--no-such-flag"]), 1);
    assert_ne!(dune(tmp.path(), &["train", "--window", "5"]), 0);

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[model]\ndepth = \"deep\"\n").unwrap();
    assert_eq!(
        dune(tmp.path(), &["--config", bad.to_str().unwrap(), "model-summary"]),
        1
    );
    assert_ne!(
        dune(
            tmp.path(),
            &["score", "--data", tmp.path().join("absent").to_str().unwrap()]
        ),
        0
    );
}

#[test]
fn model_summary_counts_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(dune(tmp.path(), &["model-summary", "--full-scale"]), 0);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("model-summary/summary.json")).unwrap()).unwrap();
    assert!(summary["parameters"].as_u64().unwrap() > 0);
}
