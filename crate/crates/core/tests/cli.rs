mod common;

use std::path::Path;

use angiosim::dataset::{verify_dataset, DatasetManifest};
use angiosim::report::{DivergenceReport, CSV_HEADER};
use angiosim::stats::{FloorResult, Metric};
use common::{angiosim, dir_contents};

fn code(args: &[&str]) -> i32 {
    angiosim(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    let out = s(&out);
    assert_eq!(code(&["generate", "--count", "3", "--out", out]), 2);
    assert_eq!(
        code(&["generate", "--preset", "sim99", "--count", "3", "--out", out]),
        2
    );
    assert_eq!(
        code(&["generate", "--preset", "sim27", "--count", "0", "--out", out]),
        2
    );
    assert_eq!(
        code(&["generate", "--preset", "sim27", "--config", "x.txt", "--count", "1", "--out", out]),
        2
    );
    assert_eq!(
        code(&[
            "evaluate",
            "--ref",
            "a",
            "--cand",
            "b",
            "--metrics",
            "fid",
            "--out",
            "r.json"
        ]),
        2
    );
    assert_eq!(
        code(&[
            "floor", "--preset", "sim27", "--n", "50", "--reps", "1", "--metric", "js", "--out",
            out
        ]),
        2
    );
    assert_eq!(code(&["frobnicate"]), 2);
    assert!(!Path::new(out).exists());
}

#[test]
fn help_and_version_exit_with_0() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["generate", "--help"]), 0);
}

#[test]
fn runtime_errors_exit_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing");
    let csv = tmp.path().join("t.csv");
    assert_eq!(
        code(&["estimate", "--in", s(&missing), "--out", s(&csv)]),
        1
    );
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&["estimate", "--in", s(&empty), "--out", s(&csv)]), 1);
    let bad_config = tmp.path().join("bad.txt");
    std::fs::write(&bad_config, "t0 = banana\n").unwrap();
    let out = tmp.path().join("d");
    assert_eq!(
        code(&[
            "generate",
            "--config",
            s(&bad_config),
            "--count",
            "1",
            "--out",
            s(&out)
        ]),
        1
    );
    let nothing = tmp.path().join("*.json");
    assert_eq!(
        code(&["report", "--runs", s(&nothing), "--out", s(&csv)]),
        1
    );
}

#[test]
fn thread_cap_is_validated() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_angiosim"))
        .args(["report", "--runs", "none.json", "--out", "x.csv"])
        .env("ANGIOSIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_writes_a_valid_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    assert_eq!(
        code(&[
            "generate",
            "--preset",
            "sim23",
            "--count",
            "12",
            "--seed",
            "4",
            "--out",
            s(&dir)
        ]),
        0
    );
    let manifest = verify_dataset(&dir).unwrap();
    assert_eq!(manifest.entries.len(), 12);
    assert_eq!(manifest.master_seed, 4);
    let files = dir_contents(&dir);
    assert_eq!(files.len(), 14);
    let image = files
        .iter()
        .find(|(name, _)| name == "img_000000.pgm")
        .unwrap();
    assert!(image.1.starts_with(b"P5\n256 256\n255\n"));

    // A config file reproduces the preset exactly.
    let copy = tmp.path().join("copy");
    let config = dir.join("config.txt");
    assert_eq!(
        code(&[
            "generate",
            "--config",
            s(&config),
            "--count",
            "12",
            "--seed",
            "4",
            "--out",
            s(&copy)
        ]),
        0
    );
    assert_eq!(dir_contents(&dir), dir_contents(&copy));
}

#[test]
fn perturbation_changes_the_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(
        code(&[
            "generate",
            "--preset",
            "sim33",
            "--count",
            "2",
            "--out",
            s(&a)
        ]),
        0
    );
    assert_eq!(
        code(&[
            "generate",
            "--preset",
            "sim33",
            "--count",
            "2",
            "--perturb",
            "t0=-6",
            "--out",
            s(&b)
        ]),
        0
    );
    let (ma, mb) = (
        DatasetManifest::load(&a).unwrap(),
        DatasetManifest::load(&b).unwrap(),
    );
    assert_ne!(ma.config_digest, mb.config_digest);
    let config = std::fs::read_to_string(b.join("config.txt")).unwrap();
    assert!(
        config.lines().any(|l| l.replace(' ', "") == "t0=27"),
        "{config}"
    );
}

#[test]
fn full_flow_with_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name);
    let (r, c) = (p("ref"), p("cand"));
    assert_eq!(
        code(&[
            "generate",
            "--preset",
            "sim27",
            "--count",
            "120",
            "--seed",
            "1",
            "--out",
            s(&r)
        ]),
        0
    );
    assert_eq!(
        code(&[
            "generate",
            "--preset",
            "sim27",
            "--count",
            "120",
            "--seed",
            "2",
            "--out",
            s(&c)
        ]),
        0
    );

    assert_eq!(
        code(&["estimate", "--in", s(&r), "--out", s(&p("t.csv"))]),
        0
    );
    let csv = std::fs::read_to_string(p("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("filename,thickness_px,valid"));
    assert_eq!(lines.clone().count(), 120);
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 3);
        assert!(f[1].parse::<f64>().unwrap() >= 0.0);
        assert!(f[2] == "true" || f[2] == "false");
    }

    let floor = p("floor.json");
    assert_eq!(
        code(&[
            "floor",
            "--preset",
            "sim27",
            "--n",
            "100",
            "--reps",
            "2",
            "--metric",
            "kl",
            "--out",
            s(&floor)
        ]),
        0
    );
    let f: FloorResult = serde_json::from_str(&std::fs::read_to_string(&floor).unwrap()).unwrap();
    assert_eq!(
        (f.metric, f.n, f.replicates, f.values.len()),
        (Metric::Kl, 100, 2, 2)
    );

    let rep = p("runs/eval.json");
    let args = [
        "evaluate",
        "--ref",
        s(&r),
        "--cand",
        s(&c),
        "--out",
        s(&rep),
        "--floor-from",
        s(&floor),
    ];
    assert_eq!(code(&args), 0);
    let report = DivergenceReport::load(&rep).unwrap();
    assert_eq!((report.n_ref, report.n_cand), (120, 120));
    assert!(report.kl_nats.is_some() && report.js_nats.is_some() && report.frechet_sq.is_some());
    assert_eq!(report.run_label, "cand");
    assert!(report.above_floor.is_some());
    let row_csv = std::fs::read_to_string(p("runs/eval.csv")).unwrap();
    assert!(row_csv.starts_with(CSV_HEADER));

    let js_only = p("runs/js.json");
    let args = [
        "evaluate",
        "--ref",
        s(&r),
        "--cand",
        s(&c),
        "--metrics",
        "js",
        "--label",
        "js-only",
        "--out",
        s(&js_only),
    ];
    assert_eq!(code(&args), 0);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&js_only).unwrap()).unwrap();
    assert!(json.get("kl_nats").is_none() && json.get("js_nats").is_some());

    let pattern = p("runs/*.json");
    assert_eq!(
        code(&["report", "--runs", s(&pattern), "--out", s(&p("table.csv"))]),
        0
    );
    let table = std::fs::read_to_string(p("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], CSV_HEADER);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("cand,") && rows[2].starts_with("js-only,"));
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name);
    for d in ["a", "b"] {
        let out = p(d);
        assert_eq!(
            code(&[
                "generate",
                "--preset",
                "sim33",
                "--count",
                "30",
                "--seed",
                "8",
                "--out",
                s(&out)
            ]),
            0
        );
    }
    assert_eq!(dir_contents(&p("a")), dir_contents(&p("b")));

    for f in ["f1.json", "f2.json"] {
        let out = p(f);
        assert_eq!(
            code(&[
                "floor",
                "--preset",
                "sim33",
                "--n",
                "100",
                "--reps",
                "2",
                "--metric",
                "js",
                "--seed",
                "3",
                "--out",
                s(&out)
            ]),
            0
        );
    }
    assert_eq!(
        std::fs::read(p("f1.json")).unwrap(),
        std::fs::read(p("f2.json")).unwrap()
    );

    let cand = p("c");
    assert_eq!(
        code(&[
            "generate",
            "--preset",
            "sim27",
            "--count",
            "30",
            "--seed",
            "9",
            "--out",
            s(&cand)
        ]),
        0
    );
    let reference = p("a");
    for e in ["e1", "e2"] {
        let out = p(&format!("{e}/r.json"));
        let args = [
            "evaluate",
            "--ref",
            s(&reference),
            "--cand",
            s(&cand),
            "--out",
            s(&out),
        ];
        assert_eq!(code(&args), 0);
    }
    assert_eq!(dir_contents(&p("e1")), dir_contents(&p("e2")));
}
