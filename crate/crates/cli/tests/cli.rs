use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pursuitlab::*;
use pursuitlab_cli::commands::render_recovery;
use pursuitlab_cli::experiment::OutputFormat;
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pursuitlab"))
        .args(args)
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn ric_on_orthonormal_fixture_is_zero() {
    for s in ["1", "2", "4"] {
        let out = run(&["ric", "--matrix", &fixture("orthonormal_4x4.csv"), "-s", s]);
        assert!(out.status.success());
        let v = json(&out);
        assert_eq!(v["value"], 0.0);
        assert_eq!(v["mode"], "exact");
    }
}

#[test]
fn ric_on_duplicated_column_is_one() {
    let out = run(&[
        "ric",
        "--matrix",
        &fixture("duplicated_column.csv"),
        "-s",
        "2",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["rip_holds"], false);
}

#[test]
fn ric_matches_golden_file() {
    let out = run(&[
        "ric",
        "--matrix",
        &fixture("gaussian_12x16_seed1216.csv"),
        "-s",
        "2",
    ]);
    assert!(out.status.success());
    let got = json(&out);
    let golden: Value = serde_json::from_str(
        &std::fs::read_to_string(fixtures().join("gaussian_12x16_seed1216_ric_s2.json")).unwrap(),
    )
    .unwrap();
    assert!((got["value"].as_f64().unwrap() - golden["value"].as_f64().unwrap()).abs() <= 1e-10);
    assert_eq!(got["witness"], golden["witness"]);
    assert_eq!(got["supports_examined"], golden["supports_examined"]);
}

#[test]
fn ric_budget_overflow_is_an_error() {
    let out = run(&[
        "ric",
        "--matrix",
        &fixture("gaussian_12x16_seed1216.csv"),
        "-s",
        "8",
        "--budget",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("12870") && err.contains("sampled"), "{err}");
}

#[test]
fn sampled_ric_is_below_exact() {
    let exact = json(&run(&[
        "ric",
        "--matrix",
        &fixture("gaussian_12x16_seed1216.csv"),
        "-s",
        "3",
    ]));
    let sampled = json(&run(&[
        "ric",
        "--matrix",
        &fixture("gaussian_12x16_seed1216.csv"),
        "-s",
        "3",
        "--mode",
        "sampled",
        "--trials",
        "50",
        "--seed",
        "4",
    ]));
    assert_eq!(sampled["mode"], "lower-bound");
    assert!(sampled["value"].as_f64().unwrap() <= exact["value"].as_f64().unwrap());
}

#[test]
fn zero_measurements_recover_zero() {
    let dir = tempfile::tempdir().unwrap();
    let y = dir.path().join("y.csv");
    std::fs::write(&y, pursuitlab_cli::formats::format_vector(&[0.0; 20])).unwrap();
    let out = run(&[
        "recover",
        "--matrix",
        &fixture("instance_20x40/matrix.csv"),
        "--measurements",
        y.to_str().unwrap(),
        "-s",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["estimate"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e.as_f64() == Some(0.0)));
    assert_eq!(v["support"].as_array().unwrap().len(), 0);
    assert_eq!(v["converged"], true);
}

#[test]
fn non_convergence_exits_with_two() {
    // almost-sparse noisy data never reaches the absolute residual threshold
    let out = run(&[
        "recover",
        "--matrix",
        &fixture("instance_20x40/matrix.csv"),
        "--measurements",
        &fixture("instance_20x40/measurements.csv"),
        "-s",
        "3",
        "--n-max",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["residual_history"].as_array().unwrap().len(), 5);
}

#[test]
fn trace_levels_control_output() {
    let base = [
        "recover",
        "--matrix",
        &fixture("instance_20x40/matrix.csv"),
        "--measurements",
        &fixture("instance_20x40/measurements.csv"),
        "-s",
        "3",
        "--n-max",
        "3",
    ];
    let with = |extra: &[&str]| json(&run(&[&base[..], extra].concat()));
    assert!(with(&["--trace", "none"]).get("iterations").is_none());
    let norms = with(&["--trace", "norms"]);
    assert!(norms["iterations"][0]["estimate"].is_null());
    let full = with(&["--trace", "full"]);
    assert_eq!(
        full["iterations"][0]["estimate"].as_array().unwrap().len(),
        40
    );
    let csv = run(&[&base[..], &["--format", "csv"]].concat());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("n,residual_norm,signal_error,tail_energy,support\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn malformed_files_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    std::fs::write(&m, "# dense 2 3\n1,2,3\n4,oops,6\n").unwrap();
    let y = dir.path().join("y.csv");
    std::fs::write(&y, "# vector 2\n1\n2\n").unwrap();
    let out = run(&[
        "recover",
        "--matrix",
        m.to_str().unwrap(),
        "--measurements",
        y.to_str().unwrap(),
        "-s",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3, field 2"), "{err}");
}

#[test]
fn dimension_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let y = dir.path().join("y.csv");
    std::fs::write(&y, "# vector 3\n1\n2\n3\n").unwrap();
    let out = run(&[
        "recover",
        "--matrix",
        &fixture("instance_20x40/matrix.csv"),
        "--measurements",
        y.to_str().unwrap(),
        "-s",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bounds_examples() {
    let out = run(&[
        "bounds", "--family", "sp", "--delta", "0.3063", "--format", "json",
    ]);
    let v = json(&out);
    assert!((v[0]["rho"].as_f64().unwrap() - 0.5).abs() < 1e-3);
    assert!((v[0]["tau"].as_f64().unwrap() - 13.1303).abs() < 5e-3);

    let v = json(&run(&[
        "bounds", "--family", "cosamp", "--delta", "0", "--format", "json",
    ]));
    assert_eq!(v[0]["rho"], 0.0);

    let v = json(&run(&[
        "bounds", "--solve", "rho=0.5", "--family", "sp-dm", "--format", "json",
    ]));
    assert!((v[0]["delta"].as_f64().unwrap() - 0.1397).abs() < 1e-4);

    let text = String::from_utf8(run(&["bounds", "--compare", "--delta", "0.2"]).stdout).unwrap();
    for family in ["sp ", "sp-tail", "sp-lbj", "sp-dm"] {
        assert!(text.contains(family), "{text}");
    }
    let csv =
        String::from_utf8(run(&["bounds", "--delta", "0.9", "--format", "csv"]).stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",false,"), "{csv}");

    assert_eq!(run(&["bounds", "--delta", "1.0"]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "--solve", "tau=3"]).status.code(), Some(1));
}

#[test]
fn gen_then_recover_equals_library() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&[
        "gen", "-m", "32", "-N", "64", "-s", "4", "--seed", "17", "--out", d,
    ]);
    assert!(out.status.success());
    let inst = make_instance(SignalKind::ExactSparse, 32, 64, 4, 0.0, 17).unwrap();
    assert_eq!(json(&out)["support"].as_array().unwrap().len(), 4);
    for (alg, name) in [(Algorithm::Sp, "sp"), (Algorithm::Cosamp, "cosamp")] {
        let cli = run(&[
            "recover",
            "--matrix",
            &format!("{d}/matrix.csv"),
            "--measurements",
            &format!("{d}/measurements.csv"),
            "-s",
            "4",
            "--algorithm",
            name,
        ]);
        let lib = recover(
            alg,
            &inst.phi,
            &inst.y,
            4,
            &StoppingRule::default(),
            TraceLevel::Norms,
            None,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(cli.stdout).unwrap(),
            render_recovery(&lib, TraceLevel::Norms, OutputFormat::Json).unwrap()
        );
        assert!(lib.estimate.sub(&inst.x).norm2() <= 1e-8);
    }
}

#[test]
fn near_isometry_gen_matches_experiment_draws() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&[
        "gen",
        "-m",
        "16",
        "-N",
        "16",
        "-s",
        "2",
        "--seed",
        "3",
        "--family",
        "near-isometry",
        "--perturbation",
        "0.17",
        "--out",
        d,
    ]);
    assert!(out.status.success());
    let phi = pursuitlab_cli::formats::read_matrix(&dir.path().join("matrix.csv")).unwrap();
    assert_eq!(phi, near_isometry_matrix(16, 16, 0.17, 3).unwrap());
}

/// Success counts per `m` in the frozen phase-transition sweep (N=64, s=4,
/// 100 trials, master seed 2024). `None` marks dimensions CoSaMP cannot run.
const SP_BASELINE: [usize; 7] = [3, 18, 65, 90, 98, 100, 100];
const COSAMP_BASELINE: [Option<usize>; 7] = [
    None,
    Some(21),
    Some(56),
    Some(89),
    Some(97),
    Some(99),
    Some(100),
];

#[test]
fn phase_transition_trend() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("pt.json");
    std::fs::write(
        &config,
        r#"{"experiment":"phase-transition","algorithms":["sp","cosamp"],
            "grid":{"m":[8,12,16,20,24,28,32],"N":[64],"s":[4],"noise_sigma":[0.0]},
            "trials_per_cell":100,"master_seed":2024}"#,
    )
    .unwrap();
    let out = run(&["experiment", config.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    let rate = |alg: &str| -> Vec<Option<usize>> {
        rows.iter()
            .filter(|r| r["algorithm"] == alg)
            .map(|r| {
                r["success_rate"]
                    .as_f64()
                    .map(|x| (x * 100.0).round() as usize)
            })
            .collect()
    };
    let sp = rate("sp");
    assert_eq!(sp, SP_BASELINE.map(Some).to_vec());
    assert_eq!(rate("cosamp"), COSAMP_BASELINE.to_vec());
    // non-decreasing in m up to sampling noise
    for w in sp.windows(2) {
        assert!(w[1].unwrap() + 5 >= w[0].unwrap());
    }
    assert_eq!(rows[1]["status"], "unsupported");
}

#[test]
fn experiment_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    let out_path = dir.path().join("nested/out.csv");
    std::fs::write(
        &config,
        format!(
            r#"{{"experiment":"convergence","algorithms":["sp"],"grid":{{"m":[16],"N":[32],"s":[2],"noise_sigma":[0.01]}},
                "trials_per_cell":1,"master_seed":7,"n_max":8,"output_path":{:?}}}"#,
            out_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let status = Command::new(env!("CARGO_BIN_EXE_pursuitlab"))
            .env("PURSUITLAB_THREADS", threads)
            .args(["experiment", config.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        files.push(std::fs::read_to_string(&out_path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert!(files[0].starts_with("schema_version,cell,algorithm,m,N,s,noise_sigma,trial,n,"));
    assert_eq!(files[0].lines().count(), 9);
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_pursuitlab"))
        .env("PURSUITLAB_THREADS", "zero")
        .args(["experiment", &fixture("audit_16x16_s2.json")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn archived_audit_table_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let mut config: Value = serde_json::from_str(
        &std::fs::read_to_string(fixtures().join("audit_16x16_s2.json")).unwrap(),
    )
    .unwrap();
    let detail = dir.path().join("detail.csv");
    config["detail_path"] = Value::from(detail.to_str().unwrap());
    let cfg = dir.path().join("audit.json");
    std::fs::write(&cfg, config.to_string()).unwrap();
    let summary = dir.path().join("summary.csv");
    let out = run(&[
        "experiment",
        cfg.to_str().unwrap(),
        "--output",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(
        read(&summary),
        read(&fixtures().join("audit_16x16_s2_summary.csv"))
    );
    assert_eq!(
        read(&detail),
        read(&fixtures().join("audit_16x16_s2_detail.csv"))
    );
    assert!(!read(&detail).contains(",false"));
}

#[test]
fn audit_cells_over_budget_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"audit","algorithms":["sp"],"grid":{"m":[20],"N":[40],"s":[4],"noise_sigma":[0]},
            "trials_per_cell":3,"ric_budget":1000}"#,
    )
    .unwrap();
    let out = run(&["experiment", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",skipped,"), "{text}");
}

#[test]
fn bounds_table_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"bounds-table","deltas":[0.1,0.2,0.3]}"#,
    )
    .unwrap();
    let out = run(&["experiment", cfg.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 3);
}

#[test]
fn missing_files_exit_with_one() {
    let out = run(&[
        "recover",
        "--matrix",
        "/nonexistent.csv",
        "--measurements",
        "/nonexistent.csv",
        "-s",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["experiment", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(1));
}
