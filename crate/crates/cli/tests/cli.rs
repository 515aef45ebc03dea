use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_purifylab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("PURIFYLAB_SEED")
        .output()
        .expect("spawn purifylab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

/// Header and data rows, comments dropped.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().expect("header").split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn validate_passes_at_defaults_and_lists_checks() {
    let o = run(&["validate", "--n", "4000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = table(&stdout(&o));
    assert_eq!(header, ["check", "expected", "observed", "tolerance", "passed"]);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["purity", "dep", "avg-ue", "pure-separable", "mp-mu", "orbit"]);
    assert!(rows.iter().all(|r| r[4] == "true"));
    assert!((num(&rows[0][1]) - 12.0 / 7.0).abs() < 1e-10);
}

#[test]
fn validate_dep_is_exact_at_small_n() {
    let o = run(&["validate", "--de", "3", "--n", "100", "--check", "dep"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = table(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert!((num(&rows[0][2]) - (4.0 - 1.0 / 3.0)).abs() < 1e-10);
    assert_eq!(rows[0][4], "true");
}

#[test]
fn failed_check_exits_one() {
    // Too few samples for a 3% second-moment match.
    let o = run(&["validate", "--de", "2", "--n", "20", "--check", "second-moment"]);
    assert_eq!(o.status.code(), Some(1));
    let (_, rows) = table(&stdout(&o));
    assert_eq!(rows[0][4], "false");
}

#[test]
fn usage_and_config_errors_exit_two() {
    for args in [
        &["sweep", "--de", "0..3"][..],
        &["sweep", "--de", "5..2"],
        &["validate", "--n", "1"],
        &["validate", "--check", "nonsense"],
        &["validate", "--de", "1..3"],
        &["sweep", "--strategies", "tomo:k=0"],
        &["sweep", "--strategies", "bogus"],
        &["spectrum", "--bins", "5"],
        &["tomo-scaling", "--k", "64,128"],
        &["validate", "--di", "0"],
        &["frobnicate"],
        &["validate", "--config", "/nonexistent/config.txt"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn sweep_rows_and_closed_forms() {
    let o = run(&["sweep", "--de", "1..25", "--n", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = table(&stdout(&o));
    assert_eq!(header, ["d_E", "strategy", "mean", "stderr", "closed_form", "n", "seed"]);
    assert_eq!(rows.len(), 100);
    for r in &rows {
        let d: f64 = num(&r[0]);
        if r[1] == "dep" {
            assert!((num(&r[2]) - (4.0 - 2.0 / (2.0 * d))).abs() < 1e-9);
            assert_eq!(num(&r[4]), num(&r[2]));
        }
        if r[1] == "avg-ue" && r[0] == "1" {
            assert!(num(&r[2]).abs() < 1e-10);
        }
        assert_eq!(r[5], "10");
        assert_eq!(r[6], "20240601");
    }
}

#[test]
fn seed_precedence_flag_over_config_over_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# sweep settings\nseed = 11\nn = 5\nde = 2\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(BIN);
        c.args(["sweep", "--strategies", "dep"]).args(extra).env_remove("PURIFYLAB_SEED");
        if let Some(e) = env {
            c.env("PURIFYLAB_SEED", e);
        }
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        table(&stdout(&o)).1[0][6].clone()
    };
    assert_eq!(seed_of(&["--config", cfg, "--seed", "3"], Some("5")), "3");
    assert_eq!(seed_of(&["--config", cfg], Some("5")), "11");
    assert_eq!(seed_of(&["--n", "4"], Some("5")), "5");
    assert_eq!(seed_of(&["--n", "4"], None), "20240601");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "seeed = 3\n").unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seeed"));
}

#[test]
fn header_echoes_configuration() {
    let o = run(&["sweep", "--de", "2", "--n", "6", "--strategies", "dep", "--seed", "9"]);
    let text = stdout(&o);
    let mut comments = text.lines().filter(|l| l.starts_with('#'));
    assert!(comments.next().unwrap().starts_with("# purifylab "));
    let echo = comments.next().unwrap();
    for kv in ["command=sweep", "di=2", "do=2", "de=2", "n=6", "seed=9", "strategies=dep", "format=csv"] {
        assert!(echo.contains(kv), "{echo}");
    }
}

#[test]
fn json_output_and_plot_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let o = run(&[
        "sweep",
        "--de",
        "1..3",
        "--n",
        "8",
        "--format",
        "json",
        "--plot",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0]["d_E"], 1);
    assert!(doc["config"].as_str().unwrap().contains("format=json"));
    let svg = fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 4);
}

#[test]
fn spectrum_histogram_columns() {
    let o = run(&["spectrum", "--n", "40", "--bins", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let (header, rows) = table(&text);
    assert_eq!(
        header,
        ["bin_lo", "bin_hi", "center", "empirical_density", "mp_density", "atom_weight"]
    );
    assert_eq!(rows.len(), 20);
    // Histogram integrates to the non-atomic mass.
    let mass: f64 = rows.iter().map(|r| num(&r[3]) * (num(&r[1]) - num(&r[0]))).sum();
    assert!((mass - 1.0).abs() < 1e-9);
    assert!(rows.iter().all(|r| num(&r[5]) == 0.0));
    assert!(text.contains("# ks_distance="));
}

#[test]
fn spectrum_atom_weight_and_unitary_spike() {
    // c = d_I d_O / d_E = 4 at (2,2,1): atom weight 3/4, the rest at d_O d_I = 4.
    let o = run(&["spectrum", "--di", "2", "--do", "2", "--de", "1", "--n", "30", "--bins", "10"]);
    let text = stdout(&o);
    let (_, rows) = table(&text);
    assert!(rows.iter().all(|r| (num(&r[5]) - 0.75).abs() < 1e-12));
    let occupied: Vec<&Vec<String>> = rows.iter().filter(|r| num(&r[3]) > 0.0).collect();
    assert_eq!(occupied.len(), 1);
    assert!(num(&occupied[0][0]) <= 4.0 && 4.0 < num(&occupied[0][1]));
    assert!(text.contains("# empirical_atom=0.75\n"));
}

#[test]
fn tomo_scaling_footer_and_exact_limit() {
    let o = run(&["tomo-scaling", "--n", "30", "--k", "64,256,1024"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let (header, rows) = table(&text);
    assert_eq!(header, ["k", "mean", "stderr"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3][0], "slope");
    assert!(num(&rows[3][1]) < 0.0);
    let exact = text
        .lines()
        .find_map(|l| l.strip_prefix("# exact_limit_error="))
        .expect("exact limit comment");
    assert!(num(exact) < 1e-6);
}

#[test]
fn fixtures_default_and_failure_modes() {
    let o = run(&["fixtures"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = table(&stdout(&o));
    assert_eq!(header, ["name", "source", "passed", "detail"]);
    assert!(rows.len() >= 10);

    let dir = tempfile::tempdir().unwrap();
    let wrong = dir.path().join("wrong.json");
    fs::write(
        &wrong,
        r#"[{"name": "wrong purity", "op": "avg_purity", "input": {"d_I": 2, "d_O": 2, "d_E": 4},
            "expected": 2.0, "tolerance": 1e-9, "source": "derived"}]"#,
    )
    .unwrap();
    assert_eq!(run(&["fixtures", wrong.to_str().unwrap()]).status.code(), Some(1));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{not json").unwrap();
    assert_eq!(run(&["fixtures", broken.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["fixtures", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn index_lists_topics() {
    let o = run(&["index", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().len() >= 20);
}
