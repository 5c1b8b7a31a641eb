//! Experiment configuration: JSON file, then command-line overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pwapprox_core::engines::linear_time_grid;
use pwapprox_core::spectral::SpectralGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Reconstruct,
    WalshConverge,
    Divergence,
    Lebesgue,
    Riesz,
    ExportKernel,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Reconstruct => "reconstruct",
            Experiment::WalshConverge => "walsh-converge",
            Experiment::Divergence => "divergence",
            Experiment::Lebesgue => "lebesgue",
            Experiment::Riesz => "riesz",
            Experiment::ExportKernel => "export-kernel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Equidistant,
    Kadec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    #[serde(default = "SequenceSpec::default_rule")]
    pub rule: Rule,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "SequenceSpec::default_window")]
    pub window: usize,
}

impl SequenceSpec {
    fn default_rule() -> Rule {
        Rule::Equidistant
    }

    fn default_window() -> usize {
        128
    }
}

impl Default for SequenceSpec {
    fn default() -> Self {
        Self {
            rule: Self::default_rule(),
            delta: 0.0,
            seed: 0,
            window: Self::default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemSpec {
    Identity,
    Hilbert,
    Lowpass { cutoff: f64 },
    Adversarial { omega: f64, t: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SignalSpec {
    Constant,
    Triangle {
        #[serde(default = "default_band")]
        band: f64,
    },
    Random {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_band")]
        band: f64,
    },
    Zero,
}

fn default_band() -> f64 {
    PI
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Sampling,
    Oversampled,
    Functional,
    WalshA,
    WalshB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementSpec {
    Walsh,
    FourierExponentials,
}

/// Either an explicit list of times or `{start, stop, points}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGridSpec {
    List(Vec<f64>),
    Linear {
        start: f64,
        stop: f64,
        points: usize,
    },
}

impl TimeGridSpec {
    pub fn times(&self) -> Vec<f64> {
        match self {
            TimeGridSpec::List(v) => v.clone(),
            TimeGridSpec::Linear { start, stop, points } => linear_time_grid(*start, *stop, *points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default = "ExperimentConfig::default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub sequence: SequenceSpec,
    #[serde(default = "ExperimentConfig::default_system")]
    pub system: SystemSpec,
    #[serde(default = "ExperimentConfig::default_signal")]
    pub signal: SignalSpec,
    #[serde(default = "ExperimentConfig::default_engine")]
    pub engine: EngineKind,
    #[serde(default = "ExperimentConfig::default_oversampling")]
    pub oversampling: f64,
    #[serde(default = "ExperimentConfig::default_measurement")]
    pub measurement: MeasurementSpec,
    #[serde(default)]
    pub stages: Vec<usize>,
    #[serde(default = "ExperimentConfig::default_t_grid")]
    pub t_grid: TimeGridSpec,
    /// Probe frequency of kernel diagnostics.
    #[serde(default)]
    pub omega: f64,
    /// Evaluation time of kernel diagnostics.
    #[serde(default)]
    pub t: f64,
    /// Band of the worst-case search.
    #[serde(default = "default_band")]
    pub sigma: f64,
    #[serde(default)]
    pub inclusive_limit: bool,
    #[serde(default)]
    pub exploratory: bool,
    #[serde(default = "ExperimentConfig::default_n_max")]
    pub n_max: usize,
    /// Also emit every (stage, t) cell, not only the per-stage worst.
    #[serde(default)]
    pub cells: bool,
    /// Also emit the Gram matrix in riesz runs.
    #[serde(default)]
    pub gram: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    fn default_grid() -> usize {
        SpectralGrid::DEFAULT_SIZE
    }

    fn default_system() -> SystemSpec {
        SystemSpec::Identity
    }

    fn default_signal() -> SignalSpec {
        SignalSpec::Triangle { band: PI }
    }

    fn default_engine() -> EngineKind {
        EngineKind::Sampling
    }

    fn default_oversampling() -> f64 {
        1.0
    }

    fn default_measurement() -> MeasurementSpec {
        MeasurementSpec::FourierExponentials
    }

    fn default_t_grid() -> TimeGridSpec {
        TimeGridSpec::Linear {
            start: -8.0,
            stop: 8.0,
            points: 257,
        }
    }

    fn default_n_max() -> usize {
        16
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Compact JSON of the resolved configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.grid).map_err(|e| anyhow::anyhow!("config key `grid`: {e}"))
    }

    /// Range checks that do not depend on the experiment kind.
    pub fn validate(&self) -> Result<()> {
        self.spectral_grid()?;
        let seq = &self.sequence;
        if seq.rule == Rule::Kadec && !(0.0..0.25).contains(&seq.delta) {
            bail!("config key `sequence.delta`: must lie in [0, 0.25), got {}", seq.delta);
        }
        if seq.rule == Rule::Equidistant && seq.delta != 0.0 {
            bail!("config key `sequence.delta`: only meaningful for the kadec rule");
        }
        match &self.system {
            SystemSpec::Lowpass { cutoff } if !(*cutoff > 0.0 && *cutoff <= PI) => {
                bail!("config key `system.cutoff`: must lie in (0, π], got {cutoff}")
            }
            SystemSpec::Adversarial { omega, t, n } => {
                check_omega("system.omega", *omega)?;
                if !t.is_finite() {
                    bail!("config key `system.t`: must be finite");
                }
                if *n > seq.window {
                    bail!("config key `system.n`: {n} exceeds sequence.window {}", seq.window);
                }
            }
            _ => {}
        }
        match &self.signal {
            SignalSpec::Triangle { band } | SignalSpec::Random { band, .. } if !(*band > 0.0 && *band <= PI) => {
                bail!("config key `signal.band`: must lie in (0, π], got {band}")
            }
            _ => {}
        }
        if !(self.oversampling >= 1.0 && self.oversampling.is_finite()) {
            bail!("config key `oversampling`: must be at least 1, got {}", self.oversampling);
        }
        check_omega("omega", self.omega)?;
        if !self.t.is_finite() {
            bail!("config key `t`: must be finite");
        }
        if !(self.sigma > 0.0 && self.sigma <= PI) {
            bail!("config key `sigma`: must lie in (0, π], got {}", self.sigma);
        }
        let times = self.t_grid.times();
        if times.is_empty() {
            bail!("config key `t_grid`: no evaluation times");
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            bail!("config key `t_grid`: times must be finite and strictly increasing");
        }
        Ok(())
    }

    /// The stage list, which must be non-empty.
    pub fn require_stages(&self) -> Result<&[usize]> {
        if self.stages.is_empty() {
            bail!("config key `stages`: empty stage list");
        }
        Ok(&self.stages)
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_json("{}").expect("defaults deserialize")
    }
}

fn check_omega(key: &str, omega: f64) -> Result<()> {
    if !(-PI..=PI).contains(&omega) {
        bail!("config key `{key}`: must lie in [-π, π], got {omega}");
    }
    Ok(())
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub inclusive_limit: bool,
    pub seed: Option<u64>,
}

impl Overrides {
    /// `--seed` replaces both the sequence seed and the random-signal seed.
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(grid) = self.grid {
            cfg.grid = grid;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        if self.inclusive_limit {
            cfg.inclusive_limit = true;
        }
        if let Some(seed) = self.seed {
            cfg.sequence.seed = seed;
            if let SignalSpec::Random { seed: s, .. } = &mut cfg.signal {
                *s = seed;
            }
        }
    }
}

/// Defaults, then the config file, then the overrides; the experiment kind
/// comes from the subcommand.
pub fn resolve(experiment: Experiment, file: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match file {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(declared) = cfg.experiment {
        if declared != experiment {
            bail!(
                "config key `experiment`: file declares `{}` but the subcommand is `{}`",
                declared.name(),
                experiment.name()
            );
        }
    }
    cfg.experiment = Some(experiment);
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentConfig::from_json(r#"{"grdi": 64}"#).unwrap_err();
        assert!(format!("{err:#}").contains("grdi"));
        let err = ExperimentConfig::from_json(r#"{"sequence": {"rule": "kadec", "dleta": 0.1}}"#).unwrap_err();
        assert!(format!("{err:#}").contains("dleta"));
    }

    #[test]
    fn nested_specs_parse() {
        let cfg = ExperimentConfig::from_json(
            r#"{"system": {"kind": "lowpass", "cutoff": 1.0},
                "signal": {"kind": "random", "seed": 4, "band": 2.0},
                "t_grid": [0.0, 0.5],
                "stages": [1, 2]}"#,
        )
        .unwrap();
        assert_eq!(cfg.system, SystemSpec::Lowpass { cutoff: 1.0 });
        assert_eq!(cfg.t_grid.times(), vec![0.0, 0.5]);
        cfg.validate().unwrap();
    }

    #[test]
    fn range_errors_name_the_key() {
        let cfg = ExperimentConfig {
            grid: 1000,
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("`grid`"));
        let mut cfg = ExperimentConfig::default();
        cfg.sequence.rule = Rule::Kadec;
        cfg.sequence.delta = 0.3;
        assert!(cfg.validate().unwrap_err().to_string().contains("`sequence.delta`"));
        let cfg = ExperimentConfig::default();
        assert!(cfg.require_stages().unwrap_err().to_string().contains("`stages`"));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = ExperimentConfig::default();
        Overrides {
            grid: Some(1024),
            seed: Some(9),
            inclusive_limit: true,
            ..Default::default()
        }
        .apply(&mut cfg);
        assert_eq!(cfg.grid, 1024);
        assert_eq!(cfg.sequence.seed, 9);
        assert!(cfg.inclusive_limit);
    }

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig::from_json(r#"{"stages": [4], "omega": 1.5}"#).unwrap();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
