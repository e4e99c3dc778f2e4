//! Experiment configuration: defaults, config-file settings and CLI flags.
//!
//! Resolution order is defaults, then the optional config file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use coopbeam_core::beamform::GainMode;
use coopbeam_core::chanmodel::exponential_r_for_level;
use coopbeam_core::outage::{BoundVariant, CorrelationScaling, DEFAULT_TRIALS};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "COOPBEAM_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    AlphaSweep,
    SnrSweep,
    CorrSweep,
    SinglePoint,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::AlphaSweep => "alpha_sweep",
            Experiment::SnrSweep => "snr_sweep",
            Experiment::CorrSweep => "corr_sweep",
            Experiment::SinglePoint => "single_point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainModeArg {
    Frobenius,
    Vector,
}

impl From<GainModeArg> for GainMode {
    fn from(v: GainModeArg) -> Self {
        match v {
            GainModeArg::Frobenius => GainMode::Frobenius,
            GainModeArg::Vector => GainMode::Vector,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVariantArg {
    Printed,
    ComplexConvention,
}

impl From<BoundVariantArg> for BoundVariant {
    fn from(v: BoundVariantArg) -> Self {
        match v {
            BoundVariantArg::Printed => BoundVariant::Printed,
            BoundVariantArg::ComplexConvention => BoundVariant::ComplexConvention,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrScalingArg {
    Literal,
    PowerPreserving,
}

impl From<CorrScalingArg> for CorrelationScaling {
    fn from(v: CorrScalingArg) -> Self {
        match v {
            CorrScalingArg::Literal => CorrelationScaling::Literal,
            CorrScalingArg::PowerPreserving => CorrelationScaling::PowerPreserving,
        }
    }
}

/// `lo:hi:step`, inclusive of `hi` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| tidy(self.lo + i as f64 * self.step)).collect()
    }
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(format!("expected lo:hi:step, got {s:?}"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
        let range = Range { lo: num(lo)?, hi: num(hi)?, step: num(step)? };
        if !(range.step > 0.0) || range.hi < range.lo {
            return Err(format!("range {s:?} needs step > 0 and hi >= lo"));
        }
        Ok(range)
    }
}

impl<'de> Deserialize<'de> for Range {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Snaps grid arithmetic like `0.2 + 3 * 0.05` onto the intended decimal.
fn tidy(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// Settings shared by the config file and the command line. Every field is
/// optional; unset fields fall through to the next layer.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Receive antennas at the fusion center.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// P_total / P_s.
    #[arg(long = "ratio-ptotal-ps", global = true)]
    pub ratio_ptotal_ps: Option<f64>,
    /// Beamforming-phase rate, bits/s/Hz.
    #[arg(long = "rtr", global = true)]
    #[serde(rename = "rtr")]
    pub r_tr: Option<f64>,
    /// Broadcast rate, bits/s/Hz.
    #[arg(long = "rbr", global = true)]
    #[serde(rename = "rbr")]
    pub r_br: Option<f64>,
    /// Broadcast-channel noise variance.
    #[arg(long = "sigma-nbr2", global = true)]
    pub sigma_nbr2: Option<f64>,
    /// Per-node broadcast power; derived from the alpha grid when unset.
    #[arg(long, global = true)]
    pub ps: Option<f64>,
    /// Explicit alpha values (comma separated).
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub alpha: Option<Vec<f64>>,
    /// Alpha grid as lo:hi:step.
    #[arg(long = "alpha-range", global = true)]
    pub alpha_range: Option<Range>,
    /// Explicit SNR values in dB (comma separated).
    #[arg(long = "snr-db", global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub snr_db: Option<Vec<f64>>,
    /// SNR grid in dB as lo:hi:step.
    #[arg(long = "snr-db-range", global = true, allow_hyphen_values = true)]
    pub snr_db_range: Option<Range>,
    /// Exponential-model correlation coefficients r (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    pub corr: Option<Vec<f64>>,
    /// Target correlation levels; converted to r for the exponential model.
    #[arg(long = "corr-level", global = true, value_delimiter = ',')]
    pub corr_level: Option<Vec<f64>>,
    #[arg(long = "corr-scaling", global = true)]
    pub corr_scaling: Option<CorrScalingArg>,
    /// Monte Carlo trials per grid point.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "gain-mode", global = true)]
    pub gain_mode: Option<GainModeArg>,
    #[arg(long = "bound-variant", global = true)]
    pub bound_variant: Option<BoundVariantArg>,
    /// Antennas on each side of the MIMO baseline.
    #[arg(long = "mimo-antennas", global = true)]
    pub mimo_antennas: Option<usize>,
    /// Drop the MIMO baseline series from the SNR sweep.
    #[arg(long = "no-baseline", global = true)]
    #[serde(skip)]
    pub no_baseline: bool,
    #[arg(skip)]
    pub baseline: Option<bool>,
    /// Worker threads for Monte Carlo trials.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output CSV path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set here win over `other`.
    pub fn or(self, other: Settings) -> Settings {
        Settings {
            m: self.m.or(other.m),
            ratio_ptotal_ps: self.ratio_ptotal_ps.or(other.ratio_ptotal_ps),
            r_tr: self.r_tr.or(other.r_tr),
            r_br: self.r_br.or(other.r_br),
            sigma_nbr2: self.sigma_nbr2.or(other.sigma_nbr2),
            ps: self.ps.or(other.ps),
            // An explicit list or range on this layer replaces both on the other.
            alpha: self.alpha.clone().or(if self.alpha_range.is_some() { None } else { other.alpha }),
            alpha_range: self.alpha_range.or(if self.alpha.is_some() { None } else { other.alpha_range }),
            snr_db: self.snr_db.clone().or(if self.snr_db_range.is_some() { None } else { other.snr_db }),
            snr_db_range: self.snr_db_range.or(if self.snr_db.is_some() { None } else { other.snr_db_range }),
            corr: self.corr.clone().or(if self.corr_level.is_some() { None } else { other.corr }),
            corr_level: self.corr_level.clone().or(if self.corr.is_some() { None } else { other.corr_level }),
            corr_scaling: self.corr_scaling.or(other.corr_scaling),
            trials: self.trials.or(other.trials),
            seed: self.seed.or(other.seed),
            gain_mode: self.gain_mode.or(other.gain_mode),
            bound_variant: self.bound_variant.or(other.bound_variant),
            mimo_antennas: self.mimo_antennas.or(other.mimo_antennas),
            no_baseline: false,
            baseline: if self.no_baseline { Some(false) } else { self.baseline.or(other.baseline) },
            workers: self.workers.or(other.workers),
            out: self.out.or(other.out),
        }
    }
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub m: usize,
    pub ratio_ptotal_ps: f64,
    pub r_br: f64,
    pub r_tr: f64,
    pub sigma_nbr2: f64,
    /// Explicit per-node broadcast power, if any.
    pub p_s: Option<f64>,
    pub alpha_grid: Vec<f64>,
    pub snr_db_grid: Vec<f64>,
    pub corr_r_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    #[serde(serialize_with = "ser_gain_mode")]
    pub gain_mode: GainMode,
    #[serde(serialize_with = "ser_bound_variant")]
    pub bound_variant: BoundVariant,
    #[serde(serialize_with = "ser_corr_scaling")]
    pub corr_scaling: CorrelationScaling,
    pub baseline: bool,
    pub mimo_antennas: usize,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
}

fn ser_gain_mode<S: serde::Serializer>(v: &GainMode, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(v.name())
}

fn ser_bound_variant<S: serde::Serializer>(v: &BoundVariant, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(v.name())
}

fn ser_corr_scaling<S: serde::Serializer>(v: &CorrelationScaling, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(v.name())
}

pub fn default_alpha_range() -> Vec<f64> {
    Range { lo: 0.2, hi: 0.8, step: 0.05 }.values()
}

pub fn default_snr_range() -> Vec<f64> {
    Range { lo: 2.0, hi: 12.0, step: 1.0 }.values()
}

impl ExperimentConfig {
    /// Defaults for each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let (alpha_grid, snr_db_grid) = match experiment {
            Experiment::AlphaSweep => (default_alpha_range(), default_snr_range()),
            Experiment::SnrSweep => (vec![0.2, 0.3, 0.4], default_snr_range()),
            Experiment::CorrSweep => (vec![0.3], default_snr_range()),
            Experiment::SinglePoint => (vec![0.4], vec![4.0]),
        };
        Self {
            experiment,
            m: 3,
            ratio_ptotal_ps: 15.0,
            r_br: 2.0,
            r_tr: 3.0,
            sigma_nbr2: 1.0,
            p_s: None,
            alpha_grid,
            snr_db_grid,
            corr_r_grid: vec![0.0, 0.25, 0.5, 0.75],
            trials: DEFAULT_TRIALS,
            seed: 1,
            gain_mode: GainMode::Frobenius,
            bound_variant: BoundVariant::Printed,
            corr_scaling: CorrelationScaling::PowerPreserving,
            baseline: true,
            mimo_antennas: 3,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            output_path: None,
        }
    }

    /// Applies `settings` over the experiment defaults and validates.
    pub fn resolve(experiment: Experiment, settings: Settings) -> Result<Self, HarnessError> {
        let mut cfg = Self::defaults(experiment);
        let s = settings;
        if let Some(v) = s.m {
            cfg.m = v;
        }
        if let Some(v) = s.ratio_ptotal_ps {
            cfg.ratio_ptotal_ps = v;
        }
        if let Some(v) = s.r_tr {
            cfg.r_tr = v;
        }
        if let Some(v) = s.r_br {
            cfg.r_br = v;
        }
        if let Some(v) = s.sigma_nbr2 {
            cfg.sigma_nbr2 = v;
        }
        cfg.p_s = s.ps.or(cfg.p_s);
        if let Some(v) = s.alpha {
            cfg.alpha_grid = v;
        } else if let Some(r) = s.alpha_range {
            cfg.alpha_grid = r.values();
        }
        if let Some(v) = s.snr_db {
            cfg.snr_db_grid = v;
        } else if let Some(r) = s.snr_db_range {
            cfg.snr_db_grid = r.values();
        }
        if let Some(v) = s.corr {
            cfg.corr_r_grid = v;
        } else if let Some(levels) = s.corr_level {
            cfg.corr_r_grid = levels.iter().map(|&l| exponential_r_for_level(cfg.m, l)).collect::<Result<_, _>>()?;
        }
        if let Some(v) = s.corr_scaling {
            cfg.corr_scaling = v.into();
        }
        if let Some(v) = s.trials {
            cfg.trials = v;
        }
        if let Some(v) = s.seed {
            cfg.seed = v;
        }
        if let Some(v) = s.gain_mode {
            cfg.gain_mode = v.into();
        }
        if let Some(v) = s.bound_variant {
            cfg.bound_variant = v.into();
        }
        if let Some(v) = s.mimo_antennas {
            cfg.mimo_antennas = v;
        }
        if s.no_baseline {
            cfg.baseline = false;
        } else if let Some(v) = s.baseline {
            cfg.baseline = v;
        }
        if let Some(v) = s.workers {
            cfg.workers = v;
        }
        cfg.output_path = s.out.or_else(|| {
            std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(format!("{}.csv", experiment.name())))
        });
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.m == 0 || self.mimo_antennas == 0 {
            return bad("antenna counts must be at least 1");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.ratio_ptotal_ps > 0.0) || !(self.r_br > 0.0) || !(self.sigma_nbr2 > 0.0) {
            return bad("ratio-ptotal-ps, rbr and sigma-nbr2 must be positive");
        }
        if !(self.r_tr >= 0.0) {
            return bad("rtr must be nonnegative");
        }
        if self.p_s.is_some_and(|p| !(p > 0.0)) {
            return bad("ps must be positive");
        }
        if self.alpha_grid.is_empty() || self.snr_db_grid.is_empty() {
            return bad("alpha and SNR grids must be nonempty");
        }
        if self.alpha_grid.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return bad("every alpha must lie in (0, 1)");
        }
        if self.snr_db_grid.iter().any(|s| !s.is_finite()) {
            return bad("SNR values must be finite");
        }
        if self.experiment == Experiment::CorrSweep {
            if self.corr_r_grid.is_empty() {
                return bad("correlation grid must be nonempty");
            }
            if self.corr_r_grid.iter().any(|r| !(0.0..1.0).contains(r)) {
                return bad("every correlation coefficient must lie in [0, 1)");
            }
        }
        if self.experiment == Experiment::SinglePoint && (self.alpha_grid.len() != 1 || self.snr_db_grid.len() != 1) {
            return bad("a single point needs exactly one alpha and one SNR");
        }
        Ok(())
    }
}
