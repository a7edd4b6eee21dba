use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ifsdyn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn ifsdyn")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn report(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report.json");
    serde_json::from_str(&text).expect("valid JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_status_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out = s(&out);
    let ns = write(
        tmp.path(),
        "ns.txt",
        "moebius lambda=0.7 pole=0\nmoebius lambda=0.6 pole=0.3\n",
    );
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--help"], 0),
        (vec!["--version"], 0),
        (vec!["frobnicate"], 1),
        (vec!["construct", "--bogus", "1"], 1),
        (vec!["construct", "--kappa", "abc"], 1),
        // kappa outside (3/4, 1) fails validation
        (vec!["construct", "--kappa", "0.5", "--resolution", "64", "--out", out], 1),
        (vec!["construct", "--resolution", "8", "--out", out], 1),
        (vec!["minimality", "--system", "/nonexistent/sys.txt", "--out", out], 1),
        // attractor iteration cut short
        (vec!["construct", "--resolution", "128", "--max-iter", "1", "--out", out], 2),
        // word budget exhausted
        (
            vec![
                "minimality", "--system", s(&ns), "--resolution", "4096", "--epsilon", "0.001", "--max-word-len", "60",
                "--samples", "1", "--budget", "100", "--out", out,
            ],
            2,
        ),
        (vec!["construct", "--resolution", "128", "--out", out], 0),
    ];
    for (args, expected) in cases {
        assert_eq!(code(&args), expected, "ifsdyn {}", args.join(" "));
    }
}

#[test]
fn construct_reports_a_verified_cover() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = run(&[
        "construct", "--kappa", "0.76", "--theta", "179", "--delta", "1", "--resolution", "1024", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["cover_verified"], true);
    assert_eq!(r["absorbing_verified"], true);
    assert_eq!(r["resolution"], 1024);
    for key in ["kappa", "theta", "delta", "k", "iterations", "final_hausdorff", "generator", "seed"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    for f in ["attractor.pgm", "attractor.csv", "system.txt"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn affine_system_has_unit_distortion() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = write(
        tmp.path(),
        "aff.txt",
        "affine kappa=0.5 theta=0 anchor=0,0\naffine kappa=0.5 theta=90 anchor=1,0\n",
    );
    let out = tmp.path().join("d");
    let o = run(&[
        "distortion", "--system", s(&sys), "--u-radius", "4", "--resolution", "256", "--words", "200", "--pairs", "50",
        "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["C"], 0.0);
    assert_eq!(r["L_H"], 1.0);
    assert_eq!(r["emp_min"], 1.0);
    assert_eq!(r["emp_max"], 1.0);
    assert_eq!(r["consistent"], true);
}

/// A 64×64 plain PGM with no cell set, written without the library.
fn empty_target(dir: &Path) -> PathBuf {
    let mut text = String::from("P2\n64 64\n1\n");
    for _ in 0..64 {
        text.push_str(&vec!["0"; 64].join(" "));
        text.push('\n');
    }
    write(dir, "empty.pgm", &text)
}

#[test]
fn packing_verify_half_radius_disk() {
    let tmp = tempfile::tempdir().unwrap();
    empty_target(tmp.path());
    let inst = write(
        tmp.path(),
        "inst.json",
        r#"{"ambient": {"cx": 0.5, "cy": 0.5, "r": 0.4}, "target": "empty.pgm", "family": [{"cx": 0.5, "cy": 0.5, "r": 0.2}]}"#,
    );
    let out = tmp.path().join("p");
    let o = run(&["packing", "verify", "--instance", s(&inst), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["feasible"], false);
    assert_eq!(r["cond3"], false);
    assert!(r["margin3"].as_f64().unwrap() < 0.0);
    let covered = r["covered_fraction"].as_f64().unwrap();
    assert!((covered - 0.25).abs() < 0.05, "covered {covered}");
}

#[test]
fn packing_greedy_writes_instance() {
    let tmp = tempfile::tempdir().unwrap();
    empty_target(tmp.path());
    let inst = write(
        tmp.path(),
        "inst.json",
        r#"{"ambient": {"cx": 0.5, "cy": 0.5, "r": 0.4}, "target": "empty.pgm", "family": []}"#,
    );
    let out = tmp.path().join("g");
    let o = run(&["packing", "greedy", "--instance", s(&inst), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["feasible"], true);
    // the written instance verifies to the same verdict
    let again = tmp.path().join("v");
    let o = run(&["packing", "verify", "--instance", s(&out.join("instance.json")), "--out", s(&again)]);
    assert!(o.status.success());
    assert_eq!(report(&again)["feasible"], true);
    assert!(out.join("disks.csv").exists());
}

#[test]
fn config_file_fills_unset_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.cfg", "# coarse run\nkappa = 0.8\nresolution = 128\nmax_iter = 400\n");
    let a = tmp.path().join("a");
    assert_eq!(code(&["construct", "--config", s(&cfg), "--out", s(&a)]), 0);
    assert_eq!(report(&a)["kappa"], 0.8);
    assert_eq!(report(&a)["resolution"], 128);
    let b = tmp.path().join("b");
    assert_eq!(code(&["construct", "--config", s(&cfg), "--kappa", "0.77", "--out", s(&b)]), 0);
    assert_eq!(report(&b)["kappa"], 0.77);
    let bad = write(tmp.path(), "bad.cfg", "kappa = 0.8\nwibble = 3\n");
    assert_eq!(code(&["construct", "--config", s(&bad), "--out", s(&b)]), 1);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for name in ["one", "two"] {
        let out = tmp.path().join(name);
        let o = run(&[
            "circle", "--resolution", "1024", "--epsilon", "0.02", "--max-word-len", "100", "--seed", "9",
            "--amplitudes", "0.001,0.01", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<Vec<u8>> = ["report.json", "sweep.csv", "system.txt"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        reports.push(files);
    }
    assert_eq!(reports[0], reports[1]);
    let r: Value = serde_json::from_slice(&reports[0][0]).unwrap();
    assert_eq!(r["generator"], "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)");
    assert_eq!(r["seed"], 9);
}

#[test]
fn ergodicity_finds_the_rational_rotation_candidate() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = write(tmp.path(), "r.txt", "rotation angle=0.3333333333333333\n");
    let out = tmp.path().join("e");
    let o = run(&["ergodicity", "--system", s(&sys), "--resolution", "1536", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["verdict"], "candidate invariant set found");
    assert_eq!(r["best_defect"], 0.0);
    assert!(out.join("candidate.pgm").exists());
}
