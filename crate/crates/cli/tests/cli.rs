use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn sempath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sempath"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sempath(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// The documented command sequence, run inside `dir`.
fn pipeline(dir: &Path) -> String {
    let fx = fixtures();
    let cfg = fx.join("experiment.toml");
    let rules = fx.join("rules.tsv");
    let c = ["--quiet", "--config", p(&cfg)];
    let run = |rest: &[&str]| ok(&[&c[..], rest].concat());

    run(&["ingest", p(&fx.join("human")), "--rules", p(&rules), "--out", p(&dir.join("human"))]);
    run(&["ingest", p(&fx.join("bot")), "--rules", p(&rules), "--out", p(&dir.join("bot"))]);
    run(&["embed", p(&dir.join("human/corpus.tok")), "--out", p(&dir.join("emb.tsv"))]);
    for side in ["human", "bot"] {
        run(&[
            "build",
            p(&dir.join(format!("{side}/corpus.tok"))),
            p(&dir.join("emb.tsv")),
            "--out",
            p(&dir.join(format!("{side}.ngds"))),
        ]);
    }
    run(&[
        "tune",
        p(&dir.join("human.ngds")),
        "--grid-out",
        p(&dir.join("grid.csv")),
        "--best-out",
        p(&dir.join("best.toml")),
        "--clustering-out",
        p(&dir.join("human.csv")),
    ]);
    ok(&[
        "--quiet",
        "--config",
        p(&dir.join("best.toml")),
        "cluster",
        p(&dir.join("bot.ngds")),
        "--out",
        p(&dir.join("bot.csv")),
    ]);
    run(&["subset", p(&dir.join("bot.ngds")), "--out", p(&dir.join("subset.json"))]);
    run(&["project", p(&dir.join("human.ngds")), p(&dir.join("human.csv")), "--out", p(&dir.join("proj.csv"))]);
    run(&[
        "compare",
        p(&dir.join("human.ngds")),
        p(&dir.join("human.csv")),
        p(&dir.join("bot.ngds")),
        p(&dir.join("bot.csv")),
        "--out",
        p(&dir.join("report.json")),
    ])
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn pipeline_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let summary = pipeline(a.path());
    assert_eq!(summary, pipeline(b.path()));

    let (before, after) = summary.trim().split_once('-').expect("B-A summary");
    let (before, after): (usize, usize) = (before.parse().unwrap(), after.parse().unwrap());
    assert!(after <= before && before <= 8);

    let fa = artifacts(a.path());
    let fb = artifacts(b.path());
    assert_eq!(fa.len(), 16);
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na != "report.json" {
            assert!(ba == bb, "{na} differs between runs");
        }
    }
    // the report records input paths, which differ between the two runs
    let strip = |bytes: &[u8]| -> String {
        String::from_utf8_lossy(bytes)
            .lines()
            .filter(|l| !l.contains("provenance"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let report = |files: &[(String, Vec<u8>)]| files.iter().find(|(n, _)| n == "report.json").unwrap().1.clone();
    assert_eq!(strip(&report(&fa)), strip(&report(&fb)));

    let manifest = fs::read_to_string(a.path().join("human/manifest.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 13);
    let emb = fs::read_to_string(a.path().join("emb.tsv")).unwrap();
    assert!(emb.starts_with("R=8 method=cbow\n"));
    let grid = fs::read_to_string(a.path().join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 4);
    let proj = fs::read_to_string(a.path().join("proj.csv")).unwrap();
    assert!(proj.starts_with("x,y,label\n"));
}

#[test]
fn ingest_three_files() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    for (name, text) in [("c.txt", "one two"), ("a.txt", "The DOG runs"), ("b.txt", "x")] {
        fs::write(src.path().join(name), text).unwrap();
    }
    let stdout = ok(&["ingest", p(src.path()), "--out", p(out.path())]);
    assert_eq!(stdout.trim(), "texts=3 avg_words=2 total_words=6 vocabulary=6");
    let manifest = fs::read_to_string(out.path().join("manifest.tsv")).unwrap();
    assert_eq!(manifest, "id\ttokens\na\t3\nb\t1\nc\t2\n");
    let corpus = fs::read_to_string(out.path().join("corpus.tok")).unwrap();
    assert!(corpus.contains("a\tthe dog runs\n"));
}

#[test]
fn svd_embedding_header() {
    let out = tempfile::tempdir().unwrap();
    ok(&["--quiet", "ingest", p(&fixtures().join("human")), "--out", p(out.path())]);
    let emb = out.path().join("svd.tsv");
    ok(&["embed", p(&out.path().join("corpus.tok")), "--method", "svd", "-R", "8", "--out", p(&emb)]);
    let text = fs::read_to_string(&emb).unwrap();
    assert!(text.starts_with("R=8 method=svd\n"));
}

fn fails_with(args: &[&str], needle: &str) {
    let out = sempath(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(needle), "stderr was {stderr:?}");
    assert_eq!(stderr.trim_end().lines().count(), 1, "diagnostic should be one line: {stderr:?}");
}

#[test]
fn missing_directory() {
    let out = tempfile::tempdir().unwrap();
    fails_with(
        &["ingest", "/definitely/not/here", "--out", p(out.path())],
        "/definitely/not/here",
    );
}

#[test]
fn empty_directory() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    fails_with(&["ingest", p(src.path()), "--out", p(&out.path().join("o"))], "no documents");
}

#[test]
fn unknown_method() {
    let out = tempfile::tempdir().unwrap();
    ok(&["--quiet", "ingest", p(&fixtures().join("human")), "--out", p(out.path())]);
    fails_with(
        &[
            "embed",
            p(&out.path().join("corpus.tok")),
            "--method",
            "glove",
            "--out",
            p(&out.path().join("e.tsv")),
        ],
        "unknown embedding method",
    );
}

#[test]
fn bad_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "nonsense = 3\n").unwrap();
    fails_with(&["--config", p(&cfg), "version"], "nonsense");
}

#[test]
fn version_prints() {
    assert!(ok(&["version"]).starts_with("sempath "));
}
