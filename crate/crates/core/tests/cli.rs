use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wboot::cli::ExperimentConfig;

fn wboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wboot"))
        .args(args)
        .env_remove("BOOT_T_THREADS")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = rows[0].iter().position(|c| c == name).unwrap();
    rows[1..].iter().map(|r| r[i].clone()).collect()
}

fn dataset(dir: &Path, values: &[f64]) -> PathBuf {
    let path = dir.join("data.csv");
    fs::write(&path, values.iter().map(|v| format!("{v}\n")).collect::<String>()).unwrap();
    path
}

#[test]
fn help_exits_zero() {
    ok(&wboot(&["--help"]));
    ok(&wboot(&["interval", "--help"]));
}

#[test]
fn unknown_flag_is_config_error() {
    assert_eq!(wboot(&["clt", "--bogus"]).status.code(), Some(2));
}

#[test]
fn weights_check_columns_and_expected_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    ok(&wboot(&[
        "weights-check",
        "--n-grid",
        "10",
        "--reps",
        "100000",
        "--out",
        p(&out),
    ]));
    let rows = read_csv(&out);
    assert_eq!(
        rows[0],
        [
            "n",
            "m",
            "mean_Vn2",
            "expected_Vn2",
            "Mn_p50",
            "Mn_p90",
            "Mn_p99",
            "degenerate_count"
        ]
    );
    let expected: f64 = column(&rows, "expected_Vn2")[0].parse().unwrap();
    assert!((expected - 0.09).abs() < 1e-15);
    assert!(dir.path().join("w.moments.csv").is_file());
    assert!(dir.path().join("w.csv.manifest.json").is_file());
}

#[test]
fn weights_check_decay_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    ok(&wboot(&["weights-check", "--out", p(&out)]));
    let med: Vec<f64> = column(&read_csv(&out), "Mn_p50")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(med.len(), 3);
    assert!(med[0] > med[1] && med[1] > med[2], "{med:?}");
}

#[test]
fn zero_reps_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = wboot(&["weights-check", "--reps", "0", "--out", p(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`reps`"), "{}", stderr(&out));
}

#[test]
fn on_data_rejects_non_efron() {
    let dir = tempfile::tempdir().unwrap();
    let out = wboot(&[
        "clt",
        "--paradigm",
        "on-data",
        "--scheme",
        "gamma",
        "--statistic",
        "t_star_star_sn",
        "--out",
        p(&dir.path().join("c.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Efron"));
}

#[test]
fn clt_writes_realizations_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    ok(&wboot(&[
        "clt",
        "--n",
        "200",
        "--outer-reps",
        "5",
        "--inner-reps",
        "500",
        "--out",
        p(&out),
    ]));
    let rows = read_csv(&out);
    assert_eq!(rows[0], ["realization", "ks", "degenerate_count"]);
    assert_eq!(rows.len(), 6);
    let summary = fs::read_to_string(dir.path().join("c.summary.csv")).unwrap();
    assert!(
        summary.starts_with("paradigm,statistic,regime,n,m,outer_reps,inner_reps,median_ks,frac_above_2x_threshold")
    );
}

#[test]
fn interval_on_dataset_is_bit_exact_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (1..=20).map(f64::from).collect();
    let data = dataset(dir.path(), &values);
    let gen = format!("csv:{}", p(&data));
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&wboot(&[
            "interval",
            "--generator",
            &gen,
            "--kind",
            "2",
            "--B",
            "399",
            "--alpha",
            "0.95",
            "--seed",
            "17",
            "--out",
            p(&out),
        ]));
        fs::read(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    let rows: Vec<Vec<String>> = text.lines().map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(column(&rows, "l"), ["380"]);
    assert_eq!(column(&rows, "n"), ["20"]);
    let c: f64 = column(&rows, "C")[0].parse().unwrap();
    let lower: f64 = column(&rows, "mu_lower_bound")[0].parse().unwrap();
    let s_n = (399.0f64 / 12.0).sqrt();
    assert!((lower - (10.5 - c * s_n / 20f64.sqrt())).abs() < 1e-12);
}

#[test]
fn interval_two_sided() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), &[1.5, 2.0, 3.25, 0.5, 4.0, 2.5, 3.0, 1.0, 2.25, 3.5]);
    let out = dir.path().join("i.csv");
    ok(&wboot(&[
        "interval",
        "--generator",
        &format!("csv:{}", p(&data)),
        "--two-sided",
        "--out",
        p(&out),
    ]));
    let rows = read_csv(&dir.path().join("i.interval.csv"));
    assert_eq!(rows[0], ["kind", "level", "mu_lower", "mu_upper"]);
    let lo: f64 = rows[1][2].parse().unwrap();
    let hi: f64 = rows[1][3].parse().unwrap();
    assert!(lo < 2.35 && 2.35 < hi, "({lo}, {hi})");
}

#[test]
fn interval_dataset_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("h.csv");
    fs::write(&data, "x\n1\n4\n2\n8\n5\n").unwrap();
    let out = dir.path().join("i.csv");
    let gen = format!("csv:{}", p(&data));
    assert_eq!(
        wboot(&["interval", "--generator", &gen, "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
    ok(&wboot(&[
        "interval",
        "--generator",
        &gen,
        "--csv-header",
        "--out",
        p(&out),
    ]));
}

#[test]
fn infeasible_quantile_names_minimal_b() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), &[1.0, 2.0, 3.0, 5.0]);
    let gen = format!("csv:{}", p(&data));
    let out = wboot(&[
        "interval",
        "--generator",
        &gen,
        "--alpha",
        "0.01",
        "--B",
        "50",
        "--out",
        p(&dir.path().join("i.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("B >= 99"), "{}", stderr(&out));
    let out = wboot(&[
        "interval",
        "--generator",
        &gen,
        "--alpha",
        "0.5",
        "--B",
        "0",
        "--out",
        p(&dir.path().join("i.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degenerate_and_io_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), &[3.0, 3.0, 3.0]);
    let out = wboot(&[
        "interval",
        "--generator",
        &format!("csv:{}", p(&data)),
        "--out",
        p(&dir.path().join("i.csv")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = wboot(&[
        "interval",
        "--generator",
        "csv:/no/such/file.csv",
        "--out",
        p(&dir.path().join("i.csv")),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let out = wboot(&["fixed-n", "--out", "/no/such/dir/f.csv"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn fixed_n_flags_m_one_as_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    ok(&wboot(&["fixed-n", "--m-grid", "1,1000,100000", "--out", p(&out)]));
    let rows = read_csv(&out);
    assert_eq!(rows[0], ["m", "median_rel_error", "p90_rel_error", "degenerate_count"]);
    assert_eq!(rows[1], ["1", "1", "1", "100"]);
    let med: Vec<f64> = column(&rows, "median_rel_error")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(med[2] < med[1] && med[2] <= 0.05);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["degenerate_counts"]["constant_boot_samples"], 100);
}

#[test]
fn negligibility_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n.csv");
    ok(&wboot(&["negligibility", "--epsilon", "0.5,1e6", "--out", p(&out)]));
    let rows = read_csv(&out);
    assert_eq!(rows[0], ["epsilon", "probe_estimate"]);
    let est: Vec<f64> = column(&rows, "probe_estimate")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(est[0] <= 0.05);
    assert_eq!(est[1], 0.0);
    let vr = read_csv(&dir.path().join("n.variance_ratio.csv"));
    assert_eq!(vr[0], ["quantile", "deviation"]);

    let out = dir.path().join("t.csv");
    let run = wboot(&["negligibility", "--generator", "t:2", "--out", p(&out)]);
    ok(&run);
    assert!(!dir.path().join("t.variance_ratio.csv").exists());
    assert!(stderr(&run).contains("skipped"));
}

#[test]
fn config_file_sections_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "seed = 9\nreps = 150\n\n[coverage]\nn = 100\nB = 99\nkind = [1]\n\n[clt]\nn = 7\n",
    )
    .unwrap();
    let out = dir.path().join("cov.csv");
    ok(&wboot(&[
        "coverage",
        "--config",
        p(&cfg),
        "--reps",
        "120",
        "--out",
        p(&out),
    ]));
    let rows = read_csv(&out);
    assert_eq!(column(&rows, "kind"), ["1"]);
    assert_eq!(column(&rows, "n"), ["100"]);
    assert_eq!(column(&rows, "B"), ["99"]);
    assert_eq!(column(&rows, "repetitions"), ["120"]);
}

#[test]
fn bad_config_file_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "reps = \"many\"\n").unwrap();
    let out = wboot(&["coverage", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let out = wboot(&["coverage", "--config", p(&dir.path().join("missing.toml"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cov.csv");
    ok(&wboot(&[
        "coverage",
        "--n",
        "50",
        "--B",
        "39",
        "--reps",
        "100",
        "--seed",
        "3",
        "--out",
        p(&out),
    ]));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cov.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "coverage");
    assert_eq!(manifest["seed"], 3);
    assert!(manifest["started_at"].as_str().unwrap() <= manifest["finished_at"].as_str().unwrap());
    let text = manifest["config"].as_str().unwrap();
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(cfg.to_toml().unwrap(), text);

    // Feeding the echoed config back in reproduces the results.
    let echoed = dir.path().join("echo.toml");
    fs::write(&echoed, text).unwrap();
    let again = dir.path().join("again.csv");
    ok(&wboot(&["coverage", "--config", p(&echoed), "--out", p(&again)]));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn json_output_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let json = dir.path().join("f.json");
    ok(&wboot(&["fixed-n", "--out", p(&csv)]));
    ok(&wboot(&["fixed-n", "--format", "json", "--out", p(&json)]));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let rows = doc["tables"]["fixed_n"].as_array().unwrap();
    let csv_rows = read_csv(&csv);
    assert_eq!(rows.len(), csv_rows.len() - 1);
    let keys: Vec<&String> = rows[0].as_object().unwrap().keys().collect();
    assert_eq!(keys, csv_rows[0].iter().collect::<Vec<_>>());
    for (j, r) in rows.iter().zip(&csv_rows[1..]) {
        let med: f64 = r[1].parse().unwrap();
        assert_eq!(j["median_rel_error"].as_f64().unwrap(), med);
    }
}

#[test]
fn threads_env_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_wboot"))
            .args(["fixed-n", "--out", p(&out)])
            .env("BOOT_T_THREADS", v)
            .output()
            .unwrap()
    };
    ok(&run("2"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
    assert_eq!(run("lots").status.code(), Some(2));
    assert_eq!(run("0").status.code(), Some(2));
}
