//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails. Tolerances are fixed here and
//! never loosened to make a run pass.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wboot::cltlab::{run_conditioning_study, Paradigm, StudyConfig};
use wboot::diagnostics::{fixed_n_consistency, m_n_decay_study};
use wboot::exec::par_map;
use wboot::intervals::{coverage_experiment, order_index, BoundKind};
use wboot::sampling::{draw_efron_weights, draw_sample, PositiveLaw, Purpose};
use wboot::statcore::{boot_sample_variance, boot_t_statistics, center_weights, BootTriple};
use wboot::{BootstrapScheme, DataGenerator, MRule, Sample, Seed, Statistic, WeightVector};

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Verdict {
            ok,
            detail: detail.into(),
        }
    }
}

// Differences measured against max(|a|, |b|, 1): the statistics are
// standardized, so values near zero are compared on the unit scale.
fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Sample, WeightVector) {
    loop {
        let n = rng.random_range(2..50usize);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let w = if rng.random_bool(0.5) {
            let counts: Vec<u64> = (0..n).map(|_| rng.random_range(0..6u64)).collect();
            match WeightVector::from_counts(&counts) {
                Ok(w) => w,
                Err(_) => continue,
            }
        } else {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..5.0)).collect();
            WeightVector::from_reals(v).unwrap()
        };
        // Equal weights leave T* undefined (V_n^2 = 0).
        if center_weights(&w).map_or(true, |c| c.v_n_sq == 0.0) {
            continue;
        }
        // Two distinct support points make S*^2 genuinely positive.
        let support: Vec<f64> = x
            .iter()
            .zip(w.weights())
            .filter(|(_, &v)| v > 0.0)
            .map(|(&x, _)| x)
            .collect();
        if support.iter().any(|&a| a != support[0]) {
            return (Sample::new(x).unwrap(), w);
        }
    }
}

fn triple(s: &Sample, w: &WeightVector) -> BootTriple {
    boot_t_statistics(s, w).unwrap()
}

fn mapped(s: &Sample, f: impl Fn(f64) -> f64) -> Sample {
    Sample::new(s.values().iter().map(|&x| f(x)).collect()).unwrap()
}

fn u_statistic_variance(s: &Sample, w: &WeightVector) -> f64 {
    let (x, v, m) = (s.values(), w.weights(), w.total_mass());
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i != j {
                acc += v[i] * v[j] * (x[i] - x[j]).powi(2);
            }
        }
    }
    acc / (2.0 * m * m)
}

fn criterion_1() -> Verdict {
    const INSTANCES: usize = 1000;
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fail = |name| *failures.entry(name).or_default() += 1;
    for _ in 0..INSTANCES {
        let (s, w) = random_instance(&mut rng);
        let t = triple(&s, &w);
        let tss = t.t_star_star.unwrap();

        let c = rng.random_range(-1000.0..1000.0);
        let u = triple(&mapped(&s, |x| x + c), &w);
        if !(rel_close(t.t_star, u.t_star, TOL)
            && rel_close(tss, u.t_star_star.unwrap(), TOL)
            && rel_close(t.t_star_star_sn, u.t_star_star_sn, TOL))
        {
            fail("translation");
        }

        let k = rng.random_range(0.001..1000.0);
        let u = triple(&mapped(&s, |x| k * x), &w);
        if !(rel_close(t.t_star, u.t_star, TOL)
            && rel_close(tss, u.t_star_star.unwrap(), TOL)
            && rel_close(t.t_star_star_sn, u.t_star_star_sn, TOL))
        {
            fail("scale");
        }

        let u = triple(&mapped(&s, |x| -x), &w);
        if !(rel_close(t.t_star, -u.t_star, TOL)
            && rel_close(tss, -u.t_star_star.unwrap(), TOL)
            && rel_close(t.t_star_star_sn, -u.t_star_star_sn, TOL))
        {
            fail("sign");
        }

        let direct = boot_sample_variance(&s, &w).unwrap();
        let ustat = u_statistic_variance(&s, &w);
        if (direct - ustat).abs() > TOL * direct.abs().max(ustat.abs()) {
            fail("u-statistic");
        }

        let identity = t.boot_var.sqrt() / s.std_dev() * tss;
        if !rel_close(t.t_star_star_sn, identity, TOL) {
            fail("sn-identity");
        }
    }
    let total: usize = failures.values().sum();
    Verdict::new(
        total == 0,
        format!("{INSTANCES} instances x 5 invariants, tol {TOL:e}, failures {failures:?}"),
    )
}

struct Moments {
    mean: f64,
    var: f64,
    m4: f64,
    count: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let count = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / count;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / count;
    Moments { mean, var, m4, count }
}

fn criterion_2() -> Verdict {
    const DRAWS: usize = 100_000;
    let mut ok = true;
    let mut notes = Vec::new();
    for (cell, (n, m)) in [(10usize, 10u64), (100, 50), (50, 500)].into_iter().enumerate() {
        let seed = Seed::new(0xA2).experiment(cell as u64);
        let draws: Vec<(f64, f64)> = par_map(DRAWS, |r| {
            let w = draw_efron_weights(n, m, seed.replicate(r as u64).purpose(Purpose::Weights)).unwrap();
            // V_n^2 = 0 only if every count equals m/n; count it as 0.
            let v2 = center_weights(&w).map(|c| c.v_n_sq).unwrap_or(0.0);
            (w.weights()[0], v2)
        });
        let w1: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let v2: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let (p, mf) = (1.0 / n as f64, m as f64);
        let (w_mean, w_var, v_mean) = (mf * p, mf * p * (1.0 - p), (1.0 - p) / mf);
        let a = moments(&w1);
        let b = moments(&v2);
        let z_mean = (a.mean - w_mean) / (a.var / a.count).sqrt();
        let z_var = (a.var - w_var) / ((a.m4 - a.var * a.var) / a.count).sqrt();
        let z_v2 = (b.mean - v_mean) / (b.var / b.count).sqrt();
        let cell_ok = [z_mean, z_var, z_v2].iter().all(|z| z.abs() <= 4.0);
        ok &= cell_ok;
        notes.push(format!("(n={n},m={m}) z=[{z_mean:.2},{z_var:.2},{z_v2:.2}]"));
    }
    Verdict::new(ok, format!("{DRAWS} draws, |z| <= 4: {}", notes.join(" ")))
}

fn criterion_3() -> Verdict {
    const TOL: f64 = 1e-12;
    let s = Sample::new(vec![0.0, 1.0, 2.0]).unwrap();
    let w = WeightVector::from_counts(&[2, 1, 0]).unwrap();
    let t = triple(&s, &w);
    let tss = t.t_star_star.unwrap();
    let l = order_index(0.95, 99).unwrap();
    let ok = (t.t_star + 3f64.sqrt()).abs() <= TOL
        && (tss + 6f64.sqrt()).abs() <= TOL
        && (t.t_star_star_sn + 2f64.sqrt()).abs() <= TOL
        && (t.boot_var - 2.0 / 9.0).abs() <= TOL
        && l == 95;
    Verdict::new(
        ok,
        format!(
            "T*={:.15} T**={:.15} T**_Sn={:.15} S*^2={:.15} l={l}",
            t.t_star, tss, t.t_star_star_sn, t.boot_var
        ),
    )
}

fn criterion_4() -> Verdict {
    let grid = [100, 400, 1600];
    let mut ok = true;
    let mut notes = Vec::new();
    for (label, scheme) in [
        ("efron", BootstrapScheme::efron(MRule::Ratio(1.0))),
        (
            "gamma(4,1)",
            BootstrapScheme::IidPositive {
                law: PositiveLaw::Gamma { shape: 4.0, rate: 1.0 },
            },
        ),
    ] {
        let rows = m_n_decay_study(&scheme, &grid, 1000, Seed::new(0xA4)).unwrap();
        let med: Vec<f64> = rows.iter().map(|r| r.mn_p50).collect();
        ok &= med.windows(2).all(|p| p[1] < p[0]);
        notes.push(format!("{label} {med:.5?}"));
    }
    Verdict::new(ok, format!("median M_n over n={grid:?}: {}", notes.join(" ")))
}

fn study(
    paradigm: Paradigm,
    scheme: BootstrapScheme,
    generator: DataGenerator,
    statistic: Statistic,
    n: usize,
    seed: u64,
) -> f64 {
    let cfg = StudyConfig {
        paradigm,
        scheme,
        generator,
        statistic,
        n,
        outer_reps: 11,
        inner_reps: 2000,
        threshold: 0.05,
        seed: Seed::new(seed),
    };
    run_conditioning_study(&cfg).unwrap().median_ks
}

fn criterion_5() -> Verdict {
    let t_star = study(
        Paradigm::OnWeights,
        BootstrapScheme::efron(MRule::Ratio(1.0)),
        DataGenerator::exp_centered(),
        Statistic::TStar,
        500,
        0xA5,
    );
    let t_star_star = study(
        Paradigm::OnWeights,
        BootstrapScheme::efron(MRule::Fixed(5000)),
        DataGenerator::exp_centered(),
        Statistic::TStarStar,
        500,
        0xA5 + 1,
    );
    Verdict::new(
        t_star <= 0.05 && t_star_star <= 0.06,
        format!("median KS T*={t_star:.4} (<= 0.05), T**={t_star_star:.4} (<= 0.06)"),
    )
}

fn criterion_6() -> Verdict {
    let rule = MRule::NLogN(4.0);
    let m = rule.resample_size(200).unwrap();
    let t_star_star = study(
        Paradigm::OnData,
        BootstrapScheme::efron(rule),
        DataGenerator::standard_normal(),
        Statistic::TStarStar,
        200,
        0xA6,
    );
    let t_sn = study(
        Paradigm::OnData,
        BootstrapScheme::efron(MRule::Ratio(1.0)),
        DataGenerator::student_t(2.0).unwrap(),
        Statistic::TStarStarSn,
        2000,
        0xA6 + 1,
    );
    Verdict::new(
        m == 4239 && t_star_star <= 0.06 && t_sn <= 0.08,
        format!("m={m}; median KS T**={t_star_star:.4} (<= 0.06), T**_Sn on t(2)={t_sn:.4} (<= 0.08)"),
    )
}

fn criterion_7() -> Verdict {
    let s = draw_sample(
        &DataGenerator::standard_normal(),
        50,
        Seed::new(0xA7).purpose(Purpose::Data),
    )
    .unwrap();
    let rows = fixed_n_consistency(&s, &[1_000, 10_000, 100_000], 100, Seed::new(0xA7 + 1)).unwrap();
    let med: Vec<f64> = rows.iter().map(|r| r.median_rel_error).collect();
    let ok = med.windows(2).all(|p| p[1] < p[0]) && med[2] <= 0.05;
    Verdict::new(ok, format!("median |S*^2-S_n^2|/S_n^2 at m=1e3,1e4,1e5: {med:.5?}"))
}

fn criterion_8() -> Verdict {
    const Z: f64 = 1.6449;
    let run = |kind, generator: &DataGenerator, n, reps, seed| {
        coverage_experiment(
            generator,
            &BootstrapScheme::efron(MRule::Ratio(1.0)),
            kind,
            n,
            399,
            0.95,
            reps,
            Seed::new(seed),
        )
        .unwrap()
    };
    let normal = DataGenerator::standard_normal();
    let t2 = DataGenerator::student_t(2.0).unwrap();
    let results = [
        (run(BoundKind::TStar, &normal, 1000, 500, 0xA8), 0.03),
        (run(BoundKind::TStarStar, &normal, 1000, 500, 0xA8 + 1), 0.03),
        (run(BoundKind::TStarStarSn, &t2, 2000, 300, 0xA8 + 2), 0.04),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (r, tol) in &results {
        ok &= (r.empirical - 0.95).abs() <= *tol && (r.mean_quantile - Z).abs() <= 0.15;
        notes.push(format!(
            "kind {} coverage {:.3} (0.95 +- {tol}) mean C {:.4}",
            r.kind.index(),
            r.empirical,
            r.mean_quantile
        ));
    }
    Verdict::new(ok, notes.join("; "))
}

fn run_cli(args: &[&str], threads: usize, out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_wboot"))
        .args(args)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(out)
        .env_remove("BOOT_T_THREADS")
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "wboot {args:?} exited with {status}");
}

// Every result file of a run, manifest excluded (it records timestamps and
// the thread count).
fn result_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if !name.ends_with(".manifest.json") {
            files.insert(name, std::fs::read(&path).unwrap());
        }
    }
    files
}

fn criterion_9() -> Verdict {
    let data = tempfile::tempdir().unwrap();
    let csv = data.path().join("data.csv");
    std::fs::write(&csv, (1..=20).map(|i| format!("{i}\n")).collect::<String>()).unwrap();
    let csv_gen = format!("csv:{}", csv.display());
    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "weights",
            vec!["weights-check".into(), "--scheme".into(), "gamma".into()],
        ),
        (
            "clt",
            vec!["clt", "--n", "500", "--outer-reps", "3", "--inner-reps", "500"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "cltdata",
            vec![
                "clt",
                "--paradigm",
                "on-data",
                "--statistic",
                "t_star_star",
                "--generator",
                "normal",
                "--n",
                "200",
                "--m-rule",
                "nlogn:4",
                "--outer-reps",
                "3",
                "--inner-reps",
                "500",
                "--format",
                "json",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        ),
        (
            "neglig",
            vec!["negligibility", "--n", "500", "--reps", "500"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "bound",
            vec![
                "interval".into(),
                "--generator".into(),
                csv_gen,
                "--kind".into(),
                "1,2,3".into(),
                "--two-sided".into(),
            ],
        ),
        ("fixedn", vec!["fixed-n".into()]),
        (
            "coverage",
            vec!["coverage", "--n", "200", "--B", "99", "--reps", "100"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
    ];
    let mut outputs: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
    let dirs: Vec<tempfile::TempDir> = [1usize, 4, 1].iter().map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip([1usize, 4, 1]) {
        for (stem, args) in &runs {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let out: PathBuf = dir.path().join(format!("{stem}.out"));
            run_cli(&args, threads, &out);
        }
        outputs.push(result_files(dir.path()));
    }
    let identical = outputs[0] == outputs[1] && outputs[0] == outputs[2];
    let nonempty = outputs[0].len() >= runs.len() && outputs[0].values().all(|b| !b.is_empty());
    Verdict::new(
        identical && nonempty,
        format!(
            "{} result files from {} subcommand runs, threads 1 vs 4 vs 1 byte-identical: {identical}",
            outputs[0].len(),
            runs.len()
        ),
    )
}

type Criterion = (u8, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "statcore algebraic invariants", criterion_1),
        (2, "Efron weight-moment oracles", criterion_2),
        (3, "hand-computed fixtures", criterion_3),
        (4, "M_n decay", criterion_4),
        (5, "conditioning on weights", criterion_5),
        (6, "conditioning on data", criterion_6),
        (7, "fixed-n S*^2 consistency", criterion_7),
        (8, "bootstrap-t interval coverage", criterion_8),
        (9, "determinism across thread counts", criterion_9),
    ];
    let mut failed = 0;
    let start = Instant::now();
    for (id, title, f) in criteria {
        let t0 = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        failed += !verdict.ok as usize;
        println!(
            "[{}] criterion {id}: {title}: {} ({:.1}s)",
            if verdict.ok { "PASS" } else { "FAIL" },
            verdict.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of 9 criteria passed in {:.1}s",
        9 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
