//! One function per subcommand: resolved config in, tables out.

use crate::cltlab::{run_conditioning_study, StudyConfig};
use crate::diagnostics::{
    draw_nondegenerate, fixed_n_consistency, m_n_decay_study, negligibility_report, variance_ratio_probe,
};
use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::intervals::{bootstrap_replicates, coverage_experiment, mean_lower_bound, order_index};
use crate::sampling::{read_dataset_csv, BootstrapScheme, Purpose, SchemeTag, Seed};
use crate::statcore::Sample;

use super::config::{Command, DataSource, ExperimentConfig};
use super::output::{Cell, Outcome, Table};

pub fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.command {
        Command::WeightsCheck => weights_check(cfg),
        Command::Clt => clt(cfg),
        Command::Negligibility => negligibility(cfg),
        Command::Interval => interval(cfg),
        Command::FixedN => fixed_n(cfg),
        Command::Coverage => coverage(cfg),
    }
}

fn root_seed(cfg: &ExperimentConfig) -> Seed {
    Seed::new(cfg.seed()).experiment(cfg.command.experiment_label())
}

fn resample_cell(scheme: &BootstrapScheme, n: usize) -> Result<Cell> {
    Ok(scheme.resample_size(n)?.into())
}

// Exact first two moments of a single weight under the scheme.
fn weight_moments(scheme: &BootstrapScheme, n: usize) -> Result<(f64, f64)> {
    Ok(match scheme {
        BootstrapScheme::Efron { m_rule } => {
            let m = m_rule.resample_size(n)? as f64;
            let p = 1.0 / n as f64;
            (m * p, m * p * (1.0 - p))
        }
        BootstrapScheme::IidPositive { law } => (law.mean(), law.variance()),
    })
}

fn weights_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let scheme = cfg.scheme()?;
    let grid = cfg.n_grid()?;
    let reps = cfg.reps()?;
    let root = root_seed(cfg);
    let rows = m_n_decay_study(&scheme, &grid, reps, root.child(0))?;

    let mut decay = Table::new(
        "decay",
        &[
            "n",
            "m",
            "mean_Vn2",
            "expected_Vn2",
            "Mn_p50",
            "Mn_p90",
            "Mn_p99",
            "degenerate_count",
        ],
    );
    let mut moments = Table::new(
        "moments",
        &[
            "n",
            "m",
            "mean_w1",
            "expected_mean_w1",
            "var_w1",
            "expected_var_w1",
            "se_mean_w1",
            "se_Vn2",
        ],
    );
    let mut outcome = Outcome::default();
    let moment_seed = root.child(1);
    for (i, (row, &n)) in rows.iter().zip(&grid).enumerate() {
        decay.push(vec![
            n.into(),
            row.m.into(),
            row.mean_v_n_sq.into(),
            row.expected_v_n_sq.into(),
            row.mn_p50.into(),
            row.mn_p90.into(),
            row.mn_p99.into(),
            row.degenerate_count.into(),
        ]);
        *outcome.degenerate_counts.entry("weight_draws".into()).or_default() += row.degenerate_count as u64;

        let seed = moment_seed.child(i as u64);
        let firsts: Vec<Result<f64>> = par_map(reps, |r| {
            Ok(scheme
                .draw(n, seed.replicate(r as u64).purpose(Purpose::Weights))?
                .weights()[0])
        });
        let mut count = 0.0;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in firsts {
            let x = x?;
            count += 1.0;
            let d = x - mean;
            mean += d / count;
            m2 += d * (x - mean);
        }
        let var = if count > 1.0 { m2 / (count - 1.0) } else { 0.0 };
        let (em, ev) = weight_moments(&scheme, n)?;
        moments.push(vec![
            n.into(),
            row.m.into(),
            mean.into(),
            em.into(),
            var.into(),
            ev.into(),
            (ev / count).sqrt().into(),
            row.se_v_n_sq.into(),
        ]);
    }
    outcome.tables = vec![decay, moments];
    Ok(outcome)
}

fn clt(cfg: &ExperimentConfig) -> Result<Outcome> {
    let scheme = cfg.scheme()?;
    let n = cfg.n()?;
    let study_cfg = StudyConfig {
        paradigm: cfg.paradigm()?,
        scheme,
        generator: cfg.generator()?,
        statistic: cfg.statistic()?,
        n,
        outer_reps: cfg.outer_reps()?,
        inner_reps: cfg.inner_reps()?,
        threshold: cfg.threshold()?,
        seed: root_seed(cfg),
    };
    let study = run_conditioning_study(&study_cfg)?;

    let mut per = Table::new("realizations", &["realization", "ks", "degenerate_count"]);
    for (k, (ks, d)) in study
        .per_realization_ks
        .iter()
        .zip(&study.per_realization_degenerate)
        .enumerate()
    {
        per.push(vec![k.into(), (*ks).into(), (*d).into()]);
    }
    let mut summary = Table::new(
        "summary",
        &[
            "paradigm",
            "statistic",
            "regime",
            "n",
            "m",
            "outer_reps",
            "inner_reps",
            "median_ks",
            "frac_above_2x_threshold",
            "threshold",
            "degenerate_realizations",
        ],
    );
    summary.push(vec![
        study.paradigm.to_string().into(),
        study_cfg.statistic.name().into(),
        study.regime.clone().into(),
        n.into(),
        resample_cell(&scheme, n)?,
        study.outer_reps.into(),
        study.inner_reps.into(),
        study.median_ks.into(),
        study.frac_above_2x_threshold.into(),
        study.threshold.into(),
        study.degenerate_realizations().into(),
    ]);
    let mut outcome = Outcome {
        tables: vec![per, summary],
        ..Outcome::default()
    };
    outcome
        .degenerate_counts
        .insert("realizations".into(), study.degenerate_realizations() as u64);
    outcome.degenerate_counts.insert(
        "inner_replicates".into(),
        study.per_realization_degenerate.iter().map(|&d| d as u64).sum(),
    );
    Ok(outcome)
}

fn negligibility(cfg: &ExperimentConfig) -> Result<Outcome> {
    let scheme = cfg.scheme()?;
    let generator = cfg.generator()?;
    let n = cfg.n()?;
    let reps = cfg.reps()?;
    let mode = cfg.mode()?;
    let root = root_seed(cfg);
    let w = scheme.draw(n, root.child(0).purpose(Purpose::Weights))?;
    let report = negligibility_report(&w, &generator, &cfg.epsilon()?, reps, mode, root.child(1))?;

    let mut probe = Table::new("probe", &["epsilon", "probe_estimate"]);
    for (e, p) in report.epsilon_grid.iter().zip(&report.probe_estimates) {
        probe.push(vec![(*e).into(), (*p).into()]);
    }
    let mut outcome = Outcome::default();
    outcome
        .degenerate_counts
        .insert("probe_samples".into(), report.degenerate_count as u64);

    let mut deviations = None;
    let mut vr_degenerate = Cell::Missing;
    match variance_ratio_probe(&w, &generator, reps, root.child(2)) {
        Ok(vr) => {
            let deviations = deviations.insert(Table::new("variance_ratio", &["quantile", "deviation"]));
            for p in [0.5, 0.9, 0.99] {
                deviations.push(vec![p.into(), vr.deviation_quantile(p).into()]);
            }
            vr_degenerate = vr.degenerate_count.into();
            outcome
                .degenerate_counts
                .insert("variance_ratio_samples".into(), vr.degenerate_count as u64);
        }
        Err(Error::UnsupportedMode(msg)) => outcome.notes.push(format!("variance-ratio probe skipped: {msg}")),
        Err(e) => return Err(e),
    }

    let m_cell = match w.tag() {
        SchemeTag::Efron => Cell::Int(w.total_mass() as u64),
        SchemeTag::IidPositive => Cell::Float(w.total_mass()),
    };
    let mut summary = Table::new(
        "summary",
        &[
            "n",
            "m",
            "Mn",
            "Vn2",
            "expected_Vn2",
            "replicates_used",
            "degenerate_count",
            "variance_ratio_degenerate",
        ],
    );
    summary.push(vec![
        n.into(),
        m_cell,
        report.m_n_ratio.into(),
        report.v_n_sq.into(),
        report.expected_v_n_sq.into(),
        report.replicates_used.into(),
        report.degenerate_count.into(),
        vr_degenerate,
    ]);
    outcome.tables = [Some(probe), deviations, Some(summary)].into_iter().flatten().collect();
    Ok(outcome)
}

fn load_dataset(cfg: &ExperimentConfig, path: &std::path::Path) -> Result<Sample> {
    let values = read_dataset_csv(path, cfg.csv_header())?;
    if values.len() < 2 {
        return Err(Error::config(
            "generator",
            format!(
                "{}: dataset needs at least 2 values, found {}",
                path.display(),
                values.len()
            ),
        ));
    }
    let s = Sample::new(values)?;
    if s.is_degenerate() {
        return Err(Error::DegenerateSample(format!(
            "{}: all values are equal",
            path.display()
        )));
    }
    Ok(s)
}

fn interval(cfg: &ExperimentConfig) -> Result<Outcome> {
    let path = match cfg.data_source()? {
        DataSource::Csv(p) => p,
        DataSource::Generator(_) => return coverage(cfg),
    };
    let s = load_dataset(cfg, &path)?;
    let scheme = cfg.scheme()?;
    let b = cfg.b()?;
    let alpha = cfg.alpha()?;
    let levels: Vec<f64> = if cfg.two_sided() {
        vec![(1.0 - alpha) / 2.0, (1.0 + alpha) / 2.0]
    } else {
        vec![alpha]
    };
    for &a in &levels {
        order_index(a, b)?;
    }
    let root = root_seed(cfg);
    let mut bound = Table::new(
        "bound",
        &[
            "kind",
            "alpha",
            "B",
            "l",
            "C",
            "mean",
            "s_n",
            "n",
            "mu_lower_bound",
            "Mn_p50",
            "Mn_p90",
            "Mn_p99",
            "weight_redraws",
        ],
    );
    let mut two_sided = Table::new("interval", &["kind", "level", "mu_lower", "mu_upper"]);
    let mut outcome = Outcome::default();
    for kind in cfg.kinds()? {
        let reps = bootstrap_replicates(&s, &scheme, kind, b, root.child(kind.index() as u64))?;
        let mn = reps.mn_quantiles();
        let mut cs = Vec::new();
        for &a in &levels {
            let q = reps.quantile(a)?;
            cs.push(q.value);
            bound.push(vec![
                kind.index().into(),
                a.into(),
                b.into(),
                q.l.into(),
                q.value.into(),
                s.mean().into(),
                s.std_dev().into(),
                s.len().into(),
                mean_lower_bound(&s, q.value).into(),
                mn[0].into(),
                mn[1].into(),
                mn[2].into(),
                reps.redraws.into(),
            ]);
        }
        if let [lo, hi] = cs[..] {
            two_sided.push(vec![
                kind.index().into(),
                alpha.into(),
                mean_lower_bound(&s, hi).into(),
                mean_lower_bound(&s, lo).into(),
            ]);
        }
        *outcome.degenerate_counts.entry("weight_redraws".into()).or_default() += reps.redraws as u64;
    }
    outcome.tables.push(bound);
    if cfg.two_sided() {
        outcome.tables.push(two_sided);
    }
    Ok(outcome)
}

fn coverage(cfg: &ExperimentConfig) -> Result<Outcome> {
    let scheme = cfg.scheme()?;
    let generator = cfg.generator()?;
    let n = cfg.n()?;
    let b = cfg.b()?;
    let alpha = cfg.alpha()?;
    let reps = cfg.reps()?;
    let root = root_seed(cfg);
    let mut table = Table::new(
        "coverage",
        &[
            "kind",
            "n",
            "B",
            "nominal",
            "empirical",
            "repetitions",
            "mean_C",
            "z_alpha",
            "degenerate_samples",
            "weight_redraws",
        ],
    );
    let mut outcome = Outcome::default();
    for kind in cfg.kinds()? {
        let r = coverage_experiment(
            &generator,
            &scheme,
            kind,
            n,
            b,
            alpha,
            reps,
            root.child(kind.index() as u64),
        )?;
        table.push(vec![
            kind.index().into(),
            n.into(),
            b.into(),
            r.nominal.into(),
            r.empirical.into(),
            r.repetitions.into(),
            r.mean_quantile.into(),
            r.z_alpha.into(),
            r.degenerate_samples.into(),
            r.weight_redraws.into(),
        ]);
        *outcome.degenerate_counts.entry("samples".into()).or_default() += r.degenerate_samples as u64;
        *outcome.degenerate_counts.entry("weight_redraws".into()).or_default() += r.weight_redraws as u64;
    }
    outcome.tables.push(table);
    Ok(outcome)
}

fn fixed_n(cfg: &ExperimentConfig) -> Result<Outcome> {
    let root = root_seed(cfg);
    let s = match cfg.data_source()? {
        DataSource::Csv(p) => load_dataset(cfg, &p)?,
        DataSource::Generator(g) => draw_nondegenerate(&g, cfg.n()?, root.child(0).purpose(Purpose::Data))?
            .ok_or_else(|| Error::DegenerateSample(format!("{g} kept producing constant samples")))?,
    };
    let rows = fixed_n_consistency(&s, &cfg.m_grid()?, cfg.reps()?, root.child(1))?;
    let mut table = Table::new(
        "fixed_n",
        &["m", "median_rel_error", "p90_rel_error", "degenerate_count"],
    );
    let mut outcome = Outcome::default();
    for r in &rows {
        table.push(vec![
            r.m.into(),
            r.median_rel_error.into(),
            r.p90_rel_error.into(),
            r.degenerate_count.into(),
        ]);
        *outcome
            .degenerate_counts
            .entry("constant_boot_samples".into())
            .or_default() += r.degenerate_count as u64;
    }
    let mut sample = Table::new("sample", &["n", "mean", "s_n_sq"]);
    sample.push(vec![s.len().into(), s.mean().into(), s.variance().into()]);
    outcome.tables = vec![table, sample];
    Ok(outcome)
}
