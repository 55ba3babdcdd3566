use std::path::Path;
use std::process::{Command, Output};

use prae::abduction::PosteriorDump;
use prae::generator::PuzzleInstance;
use prae::harness::{solve, verify_manifest, SolveOptions, SweepReport, MANIFEST_FILE};

fn prae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prae"))
        .args(args)
        .env("RPM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_writes_instances_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = prae(&["generate", "--config", "Center", "--count", "10", "--seed", "0", "--out", out]);
    assert!(o.status.success(), "{o:?}");
    let first = files(dir.path());
    assert_eq!(first.iter().filter(|(n, _)| n.ends_with(".rpm.json")).count(), 10);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 10);

    let o = prae(&["generate", "--config", "Center", "--count", "10", "--seed", "0", "--out", out]);
    assert!(o.status.success());
    assert_eq!(files(dir.path()), first);
    assert!(verify_manifest(dir.path()).unwrap().is_empty());

    let victim = dir.path().join("Center_000003.rpm.json");
    let mut text = std::fs::read_to_string(&victim).unwrap();
    text.push(' ');
    std::fs::write(&victim, text).unwrap();
    assert_eq!(verify_manifest(dir.path()).unwrap(), vec![victim]);
}

#[test]
fn manifest_digest_tracks_content() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let gen = |dir: &Path, seed: &str| {
        assert!(prae(&["generate", "--config", "L-R", "--count", "3", "--seed", seed, "--out", dir.to_str().unwrap()])
            .status
            .success());
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.join(MANIFEST_FILE)).unwrap()).unwrap();
        m["sha256"].as_str().unwrap().to_string()
    };
    assert_eq!(gen(a.path(), "5"), gen(b.path(), "5"));
    assert_ne!(gen(a.path(), "5"), gen(c.path(), "6"));
}

#[test]
fn solve_reports_answer_and_posteriors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(prae(&["generate", "--config", "2x2Grid", "--count", "1", "--seed", "7", "--out", out]).status.success());
    let file = dir.path().join("2x2Grid_000007.rpm.json");
    let o = prae(&["solve", file.to_str().unwrap(), "--dump-posterior", "--render", "--out", out]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["correct"], true);
    assert_eq!(v["chosen"], v["answer_index"]);

    let inst = PuzzleInstance::load(&file).unwrap();
    let sol = solve(&inst, &SolveOptions::default()).unwrap();
    let dumped: Vec<PosteriorDump> = serde_json::from_value(v["posteriors"].clone()).unwrap();
    assert_eq!(dumped, sol.posterior_dump());

    let pgm = std::fs::read(dir.path().join("2x2Grid_000007.answer.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n160 160\n255\n"));
    assert!(dir.path().join("2x2Grid_000007.answer.svg").exists());
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(prae(&["generate", "--config", "O-IG", "--count", "1", "--seed", "2", "--out", out]).status.success());
    let file = dir.path().join("O-IG_000002.rpm.json");
    let f = file.to_str().unwrap();
    let args = ["solve", f, "--epsilon", "0.2", "--mode", "sample", "--seed", "4", "--dump-posterior"];
    assert_eq!(prae(&args).stdout, prae(&args).stdout);
}

#[test]
fn exit_codes() {
    let o = prae(&["solve"]);
    assert_eq!(o.status.code(), Some(1));
    let o = prae(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = prae(&["--help"]);
    assert_eq!(o.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rpm.json");
    std::fs::write(&bad, "{\"schema_version\": 1,\n \"config\": \"Center\",\n \"seed\": \"x\"}").unwrap();
    let o = prae(&["solve", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");

    let o = prae(&["solve", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    assert!(prae(&["generate", "--config", "Center", "--count", "1", "--out", dir.path().to_str().unwrap()]).status.success());
    let good = dir.path().join("Center_000000.rpm.json");
    let o = prae(&["solve", good.to_str().unwrap(), "--epsilon", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = prae(&[
            "sweep", "--config", "Center,L-R", "--epsilon", "0,0.1,0.3", "--count", "20", "--out", p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{o:?}");
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let report = SweepReport::from_csv(&text).unwrap();
    assert_eq!(report.rows.len(), 6);
    assert!(report.rows.iter().filter(|r| r.epsilon == 0.0).all(|r| r.answer_accuracy == 1.0));
}

#[test]
fn render_and_oracle_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(prae(&["generate", "--config", "3x3Grid", "--count", "1", "--out", out]).status.success());
    let file = dir.path().join("3x3Grid_000000.rpm.json");
    let panels = dir.path().join("panels");
    let o = prae(&["render", file.to_str().unwrap(), "--out", panels.to_str().unwrap(), "--rotation-seed", "3"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(std::fs::read_dir(&panels).unwrap().count(), 32);

    let o = prae(&["oracle-check", "--config", "U-D,O-IC", "--count", "20"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("U-D: 20/20 exact"));
}
