//! Pipeline configuration document (TOML) and its validation.
//!
//! ```toml
//! [simulation]
//! rho = 0.4          # required, no default
//! m = 1255
//! m_alt = 125
//! n = 43
//! delta = 1.0
//! replicates = 500
//!
//! [seeds]
//! training = 1
//! control = 2
//!
//! [equalize]
//! metric = "fdr"     # or "pfer"
//! a = 125.0          # defaults to m_alt
//!
//! [report]
//! pairs = []         # table rows to emit scatter data for
//! targets = [0.04]   # or rows whose training rate is nearest these values
//! min_count = 10
//!
//! [run]
//! workers = 8
//! output_dir = "out"
//! evaluation_set = "control"   # or "training"
//! ```

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

use crate::equalizer::{Metric, GRID_LEN};
use crate::simulator::SimulationConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub simulation: RawSimulation,
    #[serde(default)]
    pub seeds: RawSeeds,
    #[serde(default)]
    pub equalize: RawEqualize,
    #[serde(default)]
    pub report: RawReport,
    #[serde(default)]
    pub run: RawRun,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSimulation {
    pub m: Option<i64>,
    pub m_alt: Option<i64>,
    pub n: Option<i64>,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub replicates: Option<i64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSeeds {
    pub training: Option<u64>,
    pub control: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEqualize {
    pub metric: Option<String>,
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawReport {
    pub pairs: Option<Vec<i64>>,
    pub targets: Option<Vec<f64>>,
    pub min_count: Option<i64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRun {
    pub workers: Option<i64>,
    pub output_dir: Option<String>,
    pub evaluation_set: Option<String>,
}

pub const DEFAULT_TRAINING_SEED: u64 = 1;
pub const DEFAULT_CONTROL_SEED: u64 = 2;
pub const DEFAULT_MIN_COUNT: usize = 10;

/// Replicate collection the matched procedures are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvaluationSet {
    #[default]
    Control,
    Training,
}

impl EvaluationSet {
    pub fn name(self) -> &'static str {
        match self {
            EvaluationSet::Control => "control",
            EvaluationSet::Training => "training",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// `master_seed` is the training seed.
    pub simulation: SimulationConfig,
    pub metric: Metric,
    pub a: f64,
    pub training_seed: u64,
    pub control_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub scatter_pairs: Vec<usize>,
    pub scatter_targets: Vec<f64>,
    pub scatter_min_count: usize,
    pub workers: usize,
    pub evaluation_set: EvaluationSet,
}

impl PipelineConfig {
    pub fn training(&self) -> SimulationConfig {
        self.simulation.with_seed(self.training_seed)
    }

    pub fn control(&self) -> SimulationConfig {
        self.simulation.with_seed(self.control_seed)
    }

    pub fn evaluation(&self) -> SimulationConfig {
        match self.evaluation_set {
            EvaluationSet::Control => self.control(),
            EvaluationSet::Training => self.training(),
        }
    }

    /// Scatter targets, falling back to a per-metric default when no rows
    /// or targets were requested.
    pub fn effective_targets(&self) -> Vec<f64> {
        if self.scatter_pairs.is_empty() && self.scatter_targets.is_empty() {
            match self.metric {
                Metric::Fdr => vec![0.04],
                Metric::Pfer => vec![5.0],
            }
        } else {
            self.scatter_targets.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// Every problem found in a configuration document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    pub fn fields(&self) -> Vec<&str> {
        self.violations.iter().map(|v| v.field.as_str()).collect()
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a TOML configuration document.
pub fn parse_config(text: &str) -> Result<PipelineConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        violations: vec![Violation {
            field: "<document>".into(),
            message: e.message().to_string(),
        }],
    })?;
    validate_config(&raw)
}

#[derive(Default)]
struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }

    fn count(&mut self, field: &str, value: Option<i64>, default: usize, min: usize) -> usize {
        match value {
            None => default,
            Some(v) if v >= min as i64 => v as usize,
            Some(v) => {
                self.push(field, format!("must be at least {min}, got {v}"));
                default
            }
        }
    }
}

/// Applies defaults and checks every invariant, reporting all violations at once.
pub fn validate_config(raw: &RawConfig) -> Result<PipelineConfig, ConfigError> {
    let mut errs = Collector::default();
    let sim = &raw.simulation;

    let m = errs.count("simulation.m", sim.m, 1255, 1);
    let m_alt = errs.count("simulation.m_alt", sim.m_alt, 125, 1);
    if m_alt > m {
        errs.push(
            "simulation.m_alt",
            format!("must not exceed m = {m}, got {m_alt}"),
        );
    }
    let n = errs.count("simulation.n", sim.n, 43, 2);
    let replicates = errs.count("simulation.replicates", sim.replicates, 500, 1);
    let delta = sim.delta.unwrap_or(1.0);
    if !delta.is_finite() {
        errs.push("simulation.delta", format!("must be finite, got {delta}"));
    }
    let rho = match sim.rho {
        None => {
            errs.push("simulation.rho", "is required (0 for independent genes, e.g. 0.4 for correlated), legal range [0, 1)");
            0.0
        }
        Some(r) if (0.0..1.0).contains(&r) => r,
        Some(r) => {
            errs.push("simulation.rho", format!("must lie in [0, 1), got {r}"));
            0.0
        }
    };

    let training_seed = raw.seeds.training.unwrap_or(DEFAULT_TRAINING_SEED);
    let control_seed = raw.seeds.control.unwrap_or(DEFAULT_CONTROL_SEED);
    if training_seed == control_seed {
        errs.push(
            "seeds.control",
            format!("must differ from seeds.training ({training_seed})"),
        );
    }

    let metric = match raw.equalize.metric.as_deref() {
        None => Metric::Fdr,
        Some(s) => s.parse().unwrap_or_else(|_| {
            errs.push(
                "equalize.metric",
                format!("must be `fdr` or `pfer`, got `{s}`"),
            );
            Metric::Fdr
        }),
    };
    let a = raw.equalize.a.unwrap_or(m_alt as f64);
    if !(a > 0.0 && a.is_finite()) {
        errs.push(
            "equalize.a",
            format!("must be positive and finite, got {a}"),
        );
    }

    let mut scatter_pairs = Vec::new();
    for (k, &p) in raw.report.pairs.iter().flatten().enumerate() {
        if (0..GRID_LEN as i64).contains(&p) {
            scatter_pairs.push(p as usize);
        } else {
            errs.push(
                &format!("report.pairs[{k}]"),
                format!("must lie in [0, {GRID_LEN}), got {p}"),
            );
        }
    }
    let scatter_targets = raw.report.targets.clone().unwrap_or_default();
    for (k, t) in scatter_targets.iter().enumerate() {
        if !(t.is_finite() && *t >= 0.0) {
            errs.push(
                &format!("report.targets[{k}]"),
                format!("must be finite and non-negative, got {t}"),
            );
        }
    }
    let scatter_min_count = errs.count(
        "report.min_count",
        raw.report.min_count,
        DEFAULT_MIN_COUNT,
        1,
    );

    let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers = errs.count("run.workers", raw.run.workers, default_workers, 1);
    let evaluation_set = match raw.run.evaluation_set.as_deref() {
        None | Some("control") => EvaluationSet::Control,
        Some("training") => EvaluationSet::Training,
        Some(other) => {
            errs.push(
                "run.evaluation_set",
                format!("must be `control` or `training`, got `{other}`"),
            );
            EvaluationSet::Control
        }
    };

    if !errs.0.is_empty() {
        return Err(ConfigError { violations: errs.0 });
    }
    Ok(PipelineConfig {
        simulation: SimulationConfig {
            m,
            m_alt,
            n,
            delta,
            rho,
            replicates,
            master_seed: training_seed,
        },
        metric,
        a,
        training_seed,
        control_seed,
        output_dir: raw.run.output_dir.as_ref().map(PathBuf::from),
        scatter_pairs,
        scatter_targets,
        scatter_min_count,
        workers,
        evaluation_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_needs_rho() {
        let err = parse_config("").unwrap_err();
        assert_eq!(err.fields(), vec!["simulation.rho"]);
    }

    #[test]
    fn reference_defaults() {
        let cfg = parse_config("[simulation]\nrho = 0.0\n").unwrap();
        let s = &cfg.simulation;
        assert_eq!(
            (s.m, s.m_alt, s.n, s.delta, s.replicates),
            (1255, 125, 43, 1.0, 500)
        );
        assert_eq!(cfg.a, 125.0);
        assert_eq!(cfg.metric, Metric::Fdr);
        assert_ne!(cfg.training_seed, cfg.control_seed);
        assert_eq!(cfg.evaluation_set, EvaluationSet::Control);
        assert_eq!(cfg.scatter_min_count, 10);
        assert_eq!(cfg.effective_targets(), vec![0.04]);
    }

    #[test]
    fn a_follows_m_alt() {
        let cfg = parse_config("[simulation]\nrho = 0.4\nm_alt = 50\n").unwrap();
        assert_eq!(cfg.a, 50.0);
    }

    #[test]
    fn rho_out_of_range() {
        let err = parse_config("[simulation]\nrho = 1.2\n").unwrap_err();
        assert_eq!(err.fields(), vec!["simulation.rho"]);
        assert!(err.to_string().contains("[0, 1)"));
    }

    #[test]
    fn replicates_zero() {
        let err = parse_config("[simulation]\nrho = 0.0\nreplicates = 0\n").unwrap_err();
        assert_eq!(err.fields(), vec!["simulation.replicates"]);
    }

    #[test]
    fn all_violations_reported_together() {
        let doc = r#"
            [simulation]
            rho = -0.1
            m = 10
            m_alt = 20
            n = 1
            [seeds]
            training = 5
            control = 5
            [equalize]
            metric = "fwer"
            a = 0.0
            [report]
            pairs = [3, 280]
            min_count = 0
            [run]
            workers = 0
            evaluation_set = "holdout"
        "#;
        let err = parse_config(doc).unwrap_err();
        assert_eq!(
            err.fields(),
            vec![
                "simulation.m_alt",
                "simulation.n",
                "simulation.rho",
                "seeds.control",
                "equalize.metric",
                "equalize.a",
                "report.pairs[1]",
                "report.min_count",
                "run.workers",
                "run.evaluation_set",
            ]
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("[simulation]\nrho = 0.0\nsigma = 2\n").unwrap_err();
        assert_eq!(err.fields(), vec!["<document>"]);
    }

    #[test]
    fn explicit_settings() {
        let doc = r#"
            [simulation]
            rho = 0.4
            [equalize]
            metric = "pfer"
            [report]
            pairs = [10]
            [run]
            workers = 3
            output_dir = "x"
            evaluation_set = "training"
        "#;
        let cfg = parse_config(doc).unwrap();
        assert_eq!(cfg.metric, Metric::Pfer);
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.output_dir, Some(PathBuf::from("x")));
        assert_eq!(cfg.evaluation().master_seed, cfg.training_seed);
        assert!(cfg.effective_targets().is_empty());
    }
}
