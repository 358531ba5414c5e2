//! Experiment configuration: layered settings (file, then flags) resolved
//! into a fully specified, serializable [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cltlab::Paradigm;
use crate::diagnostics::ProbeMode;
use crate::error::{Error, Result};
use crate::intervals::BoundKind;
use crate::sampling::{parse_generator, parse_scheme, BootstrapScheme, DataGenerator, MRule};
use crate::statcore::Statistic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    WeightsCheck,
    Clt,
    Negligibility,
    Interval,
    FixedN,
    Coverage,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::WeightsCheck,
        Command::Clt,
        Command::Negligibility,
        Command::Interval,
        Command::FixedN,
        Command::Coverage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::WeightsCheck => "weights-check",
            Command::Clt => "clt",
            Command::Negligibility => "negligibility",
            Command::Interval => "interval",
            Command::FixedN => "fixed-n",
            Command::Coverage => "coverage",
        }
    }

    // Distinct experiment labels keep the random streams of different
    // subcommands apart under a shared root seed.
    pub(crate) fn experiment_label(self) -> u64 {
        match self {
            Command::WeightsCheck => 1,
            Command::Clt => 2,
            Command::Negligibility => 3,
            Command::Interval => 4,
            Command::FixedN => 5,
            Command::Coverage => 6,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::config("command", format!("unknown subcommand `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config("format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

/// One layer of settings. Every key is optional; later layers win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_header: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_reps: Option<usize>,
    #[serde(default, rename = "B", alias = "b", skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paradigm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_sided: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $over:ident; $($f:ident),* $(,)?) => {
        Settings { $($f: $over.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// Keys set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        let base = self;
        overlay!(base, over;
            seed, threads, out, format, scheme, m_rule, generator, csv_header, n, n_grid, m_grid,
            reps, inner_reps, outer_reps, b, alpha, epsilon, statistic, paradigm, mode, kind,
            threshold, two_sided)
    }

    fn defaults(cmd: Command) -> Settings {
        let mut s = Settings {
            seed: Some(1),
            format: Some(Format::Csv),
            ..Settings::default()
        };
        match cmd {
            Command::WeightsCheck => {
                s.scheme = Some("efron".into());
                s.m_rule = Some("ratio:1".into());
                s.n_grid = Some(vec![100, 400, 1600]);
                s.reps = Some(1000);
            }
            Command::Clt => {
                s.paradigm = Some("on-weights".into());
                s.scheme = Some("efron".into());
                s.m_rule = Some("ratio:1".into());
                s.generator = Some("exp-centered".into());
                s.statistic = Some("t_star".into());
                s.n = Some(500);
                s.outer_reps = Some(11);
                s.inner_reps = Some(2000);
                s.threshold = Some(0.05);
            }
            Command::Negligibility => {
                s.scheme = Some("efron".into());
                s.m_rule = Some("ratio:1".into());
                s.generator = Some("normal".into());
                s.n = Some(500);
                s.reps = Some(2000);
                s.epsilon = Some(vec![0.1, 0.25, 0.5, 1.0]);
                s.mode = Some("t_star".into());
            }
            Command::Interval | Command::Coverage => {
                s.scheme = Some("efron".into());
                s.m_rule = Some("ratio:1".into());
                s.generator = Some("normal".into());
                s.n = Some(1000);
                s.b = Some(399);
                s.alpha = Some(0.95);
                s.reps = Some(500);
                s.kind = Some(if cmd == Command::Coverage { vec![1, 2] } else { vec![2] });
                s.csv_header = Some(false);
                s.two_sided = Some(false);
            }
            Command::FixedN => {
                s.generator = Some("exp-centered".into());
                s.n = Some(50);
                s.m_grid = Some(vec![1_000, 10_000, 100_000]);
                s.reps = Some(100);
                s.csv_header = Some(false);
            }
        }
        s
    }
}

/// Parses a config file. Top-level keys apply to every subcommand; a table
/// named after a subcommand overrides them for that subcommand only.
pub fn parse_config_text(text: &str, cmd: Command) -> Result<Settings> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("config", e.message()))?;
    let mut top = toml::Table::new();
    let mut section = None;
    for (key, value) in table {
        match value {
            toml::Value::Table(t) => {
                let target: Command = key
                    .parse()
                    .map_err(|_| Error::config("config", format!("unknown section [{key}]")))?;
                if target == cmd {
                    section = Some(t);
                }
            }
            v if key == "command" => {
                if v.as_str() != Some(cmd.as_str()) {
                    return Err(Error::config(
                        "command",
                        format!("config is for `{}`, not `{cmd}`", v.as_str().unwrap_or("?")),
                    ));
                }
            }
            v => {
                top.insert(key, v);
            }
        }
    }
    let decode = |t: toml::Table| -> Result<Settings> {
        toml::Value::Table(t)
            .try_into::<Settings>()
            .map_err(|e| Error::config("config", e.message()))
    };
    let base = decode(top)?;
    Ok(match section {
        Some(t) => base.overlay(decode(t)?),
        None => base,
    })
}

pub fn read_config_file(path: &Path, cmd: Command) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text, cmd)
}

/// Where the data of a study comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    Generator(DataGenerator),
    Csv(PathBuf),
}

/// A fully resolved experiment: every key the subcommand reads is present.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub settings: Settings,
}

#[derive(Serialize, Deserialize)]
struct ConfigDoc {
    command: Command,
    #[serde(flatten)]
    sections: std::collections::BTreeMap<String, Settings>,
}

fn need<T: Clone>(v: &Option<T>, field: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::config(field, "missing"))
}

fn positive(v: usize, field: &str) -> Result<()> {
    if v == 0 {
        Err(Error::config(field, "must be >= 1"))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    /// Applies defaults, then `file`, then `flags`, and validates the result.
    pub fn resolve(command: Command, file: Option<Settings>, flags: Settings) -> Result<Self> {
        let mut settings = Settings::defaults(command);
        if let Some(f) = file {
            settings = settings.overlay(f);
        }
        settings = settings.overlay(flags);
        if settings.out.is_none() {
            let ext = settings.format.unwrap_or_default().extension();
            settings.out = Some(PathBuf::from(format!("{command}.{ext}")));
        }
        let cfg = ExperimentConfig { command, settings };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if let Some(t) = s.threads {
            positive(t, "threads")?;
        }
        for (v, f) in [
            (s.n, "n"),
            (s.reps, "reps"),
            (s.inner_reps, "inner_reps"),
            (s.outer_reps, "outer_reps"),
        ] {
            if let Some(v) = v {
                positive(v, f)?;
            }
        }
        if let Some(a) = s.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::config("alpha", format!("must lie in (0, 1), got {a}")));
            }
        }
        if let Some(t) = s.threshold {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config("threshold", format!("must be > 0, got {t}")));
            }
        }
        if let Some(g) = &s.n_grid {
            if g.is_empty() || g.contains(&0) {
                return Err(Error::config("n_grid", "must be non-empty with every n >= 1"));
            }
        }
        if let Some(g) = &s.m_grid {
            if g.is_empty() || g.contains(&0) {
                return Err(Error::config("m_grid", "must be non-empty with every m >= 1"));
            }
        }
        if let Some(k) = &s.kind {
            if k.is_empty() {
                return Err(Error::config("kind", "must name at least one kind"));
            }
            for &i in k {
                BoundKind::from_index(i).map_err(|e| Error::config("kind", e.to_string()))?;
            }
        }
        if s.scheme.is_some() {
            let scheme = self.scheme()?;
            let sizes: Vec<usize> = match (&s.n, &s.n_grid) {
                (Some(n), _) => vec![*n],
                (None, Some(g)) => g.clone(),
                _ => vec![],
            };
            for n in sizes {
                if let Some(m) = scheme
                    .resample_size(n)
                    .map_err(|e| Error::config("m_rule", e.to_string()))?
                {
                    if m == 0 {
                        return Err(Error::config("m_rule", format!("gives m = 0 at n = {n}")));
                    }
                }
            }
        }
        if s.generator.is_some() {
            if let DataSource::Csv(p) = self.data_source()? {
                if !p.is_file() {
                    return Err(Error::Io(format!("{}: dataset not found", p.display())));
                }
            }
        }
        if s.statistic.is_some() {
            self.statistic()?;
        }
        if s.paradigm.is_some() {
            self.paradigm()?;
        }
        if s.mode.is_some() {
            self.mode()?;
        }
        if let Some(e) = &s.epsilon {
            if e.is_empty() || e.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::config(
                    "epsilon",
                    "grid must be non-empty with every epsilon > 0",
                ));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.settings.seed.unwrap_or(1)
    }

    pub fn out(&self) -> PathBuf {
        self.settings
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(self.command.as_str()))
    }

    pub fn format(&self) -> Format {
        self.settings.format.unwrap_or_default()
    }

    pub fn m_rule(&self) -> Result<MRule> {
        need(&self.settings.m_rule, "m_rule")?.parse()
    }

    pub fn scheme(&self) -> Result<BootstrapScheme> {
        let rule = self.m_rule()?;
        parse_scheme(&need(&self.settings.scheme, "scheme")?, rule)
    }

    pub fn data_source(&self) -> Result<DataSource> {
        let g = need(&self.settings.generator, "generator")?;
        match g.trim().strip_prefix("csv:") {
            Some(p) if !p.is_empty() => Ok(DataSource::Csv(PathBuf::from(p))),
            Some(_) => Err(Error::config("generator", "csv: needs a path")),
            None => Ok(DataSource::Generator(parse_generator(&g)?)),
        }
    }

    /// The data law; a CSV dataset becomes its empirical distribution.
    pub fn generator(&self) -> Result<DataGenerator> {
        match self.data_source()? {
            DataSource::Generator(g) => Ok(g),
            DataSource::Csv(p) => DataGenerator::empirical(crate::sampling::read_dataset_csv(&p, self.csv_header())?),
        }
    }

    pub fn csv_header(&self) -> bool {
        self.settings.csv_header.unwrap_or(false)
    }

    pub fn statistic(&self) -> Result<Statistic> {
        need(&self.settings.statistic, "statistic")?
            .parse()
            .map_err(|e: Error| Error::config("statistic", e.to_string()))
    }

    pub fn paradigm(&self) -> Result<Paradigm> {
        need(&self.settings.paradigm, "paradigm")?
            .parse()
            .map_err(|e: Error| Error::config("paradigm", e.to_string()))
    }

    pub fn mode(&self) -> Result<ProbeMode> {
        need(&self.settings.mode, "mode")?
            .parse()
            .map_err(|e: Error| Error::config("mode", e.to_string()))
    }

    pub fn kinds(&self) -> Result<Vec<BoundKind>> {
        need(&self.settings.kind, "kind")?
            .into_iter()
            .map(BoundKind::from_index)
            .collect()
    }

    pub fn n(&self) -> Result<usize> {
        need(&self.settings.n, "n")
    }

    pub fn n_grid(&self) -> Result<Vec<usize>> {
        need(&self.settings.n_grid, "n_grid")
    }

    pub fn m_grid(&self) -> Result<Vec<u64>> {
        need(&self.settings.m_grid, "m_grid")
    }

    pub fn reps(&self) -> Result<usize> {
        need(&self.settings.reps, "reps")
    }

    pub fn inner_reps(&self) -> Result<usize> {
        need(&self.settings.inner_reps, "inner_reps")
    }

    pub fn outer_reps(&self) -> Result<usize> {
        need(&self.settings.outer_reps, "outer_reps")
    }

    pub fn b(&self) -> Result<usize> {
        need(&self.settings.b, "B")
    }

    pub fn alpha(&self) -> Result<f64> {
        need(&self.settings.alpha, "alpha")
    }

    pub fn epsilon(&self) -> Result<Vec<f64>> {
        need(&self.settings.epsilon, "epsilon")
    }

    pub fn threshold(&self) -> Result<f64> {
        need(&self.settings.threshold, "threshold")
    }

    pub fn two_sided(&self) -> bool {
        self.settings.two_sided.unwrap_or(false)
    }

    /// TOML with a `command` key and one section holding every setting.
    /// [`ExperimentConfig::from_toml`] reads it back unchanged.
    pub fn to_toml(&self) -> Result<String> {
        let doc = ConfigDoc {
            command: self.command,
            sections: [(self.command.as_str().to_string(), self.settings.clone())].into(),
        };
        toml::to_string(&doc).map_err(|e| Error::Invariant(format!("config serialization: {e}")))
    }

    /// Parses a document produced by [`ExperimentConfig::to_toml`].
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("config", e.message()))?;
        let command: Command = table
            .get("command")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::config("command", "missing"))?
            .parse()?;
        let settings = parse_config_text(text, command)?;
        let cfg = ExperimentConfig { command, settings };
        cfg.validate()?;
        Ok(cfg)
    }
}
