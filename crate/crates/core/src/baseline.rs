//! Equal-power MIMO comparator.
//!
//! The baseline spends the same total power as the cooperative scheme,
//! split evenly over `n_tx` antennas, and is in outage when the open-loop
//! capacity `log2 det(I + p / (n_tx sigma^2) H H^H)` falls below the rate.

use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chanmodel::{draw_iid_rayleigh, ChannelMatrix};
use crate::exec::{Executor, Sequential};
use crate::outage::{monte_carlo_outage_on, OutageConfig, OutageEstimate};
use crate::powerplan::split;
use crate::rng::trial_rng;
use crate::{db_to_linear, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Total transmit power, equal to the compared scheme's `P_total`.
    pub p_mimo: f64,
    pub sigma_n2: f64,
    pub r_tr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl MimoConfig {
    /// 3x3 link with the default trial budget.
    pub fn new(p_mimo: f64, sigma_n2: f64, r_tr: f64) -> Self {
        Self { n_tx: 3, n_rx: 3, p_mimo, sigma_n2, r_tr, trials: crate::outage::DEFAULT_TRIALS, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.trials == 0 {
            return Err(Error::InvalidArgument("antenna and trial counts must be at least 1"));
        }
        if !(self.p_mimo > 0.0) || !(self.sigma_n2 > 0.0) {
            return Err(Error::InvalidArgument("powers must be positive"));
        }
        if !(self.r_tr >= 0.0) {
            return Err(Error::InvalidArgument("rate must be nonnegative"));
        }
        Ok(())
    }

    /// Per-antenna SNR `p / (n_tx sigma^2)`.
    pub fn snr_per_antenna(&self) -> f64 {
        self.p_mimo / (self.n_tx as f64 * self.sigma_n2)
    }
}

/// `log2 det(I + snr_per_antenna * H H^H)`.
pub fn mimo_capacity(h: &ChannelMatrix, snr_per_antenna: f64) -> f64 {
    let hm = h.as_matrix();
    let n = hm.nrows();
    let gram = DMatrix::<Complex64>::identity(n, n) + hm * hm.adjoint() * Complex64::new(snr_per_antenna, 0.0);
    libm::log2(gram.determinant().re)
}

/// Whether `h` is in outage under `cfg`. Capacity equal to the rate is not.
pub fn mimo_outage_for_channel(cfg: &MimoConfig, h: &ChannelMatrix) -> Result<bool> {
    cfg.validate()?;
    if h.shape() != (cfg.n_rx, cfg.n_tx) {
        return Err(Error::DimensionMismatch { expected: (cfg.n_rx, cfg.n_tx), found: h.shape() });
    }
    Ok(mimo_capacity(h, cfg.snr_per_antenna()) < cfg.r_tr)
}

pub fn count_mimo_outages(cfg: &MimoConfig, trials: Range<u64>) -> u64 {
    let snr = cfg.snr_per_antenna();
    trials
        .filter(|&t| {
            let h = draw_iid_rayleigh(cfg.n_rx, cfg.n_tx, &mut trial_rng(cfg.seed, t)).expect("validated dimensions");
            mimo_capacity(&h, snr) < cfg.r_tr
        })
        .count() as u64
}

pub fn mimo_outage(cfg: &MimoConfig) -> Result<OutageEstimate> {
    mimo_outage_on(cfg, &Sequential)
}

/// Monte Carlo capacity outage. The reported threshold is the rate itself.
pub fn mimo_outage_on<E: Executor + ?Sized>(cfg: &MimoConfig, exec: &E) -> Result<OutageEstimate> {
    cfg.validate()?;
    let outages = exec.count(cfg.trials, &|range| count_mimo_outages(cfg, range));
    Ok(OutageEstimate::from_counts(outages, cfg.trials, cfg.r_tr))
}

/// The cooperative scheme at a fixed split.
///
/// `base` carries `m`, `k`, rate, trials, seed and gain mode; `p2` and
/// `sigma_n2` are set per SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposedScheme {
    pub alpha: f64,
    pub base: OutageConfig,
}

impl ProposedScheme {
    /// Outage configuration at overall SNR `p_total / sigma^2 = snr_db`.
    pub fn at(&self, p_total: f64, snr_db: f64) -> Result<OutageConfig> {
        let alloc = split(p_total, self.alpha)?;
        Ok(OutageConfig { p2: alloc.p2, sigma_n2: p_total / db_to_linear(snr_db), ..self.base.clone() })
    }
}

/// The baseline at overall SNR `snr_db`, spending `p_total`.
pub fn mimo_at(template: &MimoConfig, p_total: f64, snr_db: f64) -> MimoConfig {
    MimoConfig { p_mimo: p_total, sigma_n2: p_total / db_to_linear(snr_db), ..*template }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub snr_db: f64,
    pub proposed: OutageEstimate,
    pub mimo: OutageEstimate,
}

pub fn compare_systems(
    snr_db_grid: &[f64],
    p_total: f64,
    proposed: &ProposedScheme,
    mimo: &MimoConfig,
) -> Result<Vec<ComparisonRow>> {
    compare_systems_on(snr_db_grid, p_total, proposed, mimo, &Sequential)
}

/// Paired outage estimates at each SNR, in ascending SNR. Both systems spend
/// `p_total`.
pub fn compare_systems_on<E: Executor + ?Sized>(
    snr_db_grid: &[f64],
    p_total: f64,
    proposed: &ProposedScheme,
    mimo: &MimoConfig,
    exec: &E,
) -> Result<Vec<ComparisonRow>> {
    let mut grid = snr_db_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.into_iter()
        .map(|snr_db| {
            let ours = monte_carlo_outage_on(&proposed.at(p_total, snr_db)?, exec)?;
            let theirs = mimo_outage_on(&mimo_at(mimo, p_total, snr_db), exec)?;
            Ok(ComparisonRow { snr_db, proposed: ours, mimo: theirs })
        })
        .collect()
}
