//! Outage threshold, Monte Carlo outage estimation and the incomplete-gamma
//! approximation.
//!
//! A block is in outage when `||H V_b||^2 < (2^R - 1) / (P2 / sigma^2)`,
//! i.e. when the received SNR cannot carry rate `R`. Ties count as success.
//!
//! Trial `t` draws, from its own stream, the channel (row by row, real part
//! then imaginary part), then the `k` amplitudes, then the `k` phases.

use core::ops::Range;

use crate::beamform::{draw_weights, GainMode};
use crate::chanmodel::{apply_correlation, draw_iid_rayleigh, CorrelationMatrix};
use crate::exec::{Executor, Sequential};
use crate::rng::trial_rng;
use crate::{Error, Result};

pub use crate::special::regularized_lower_gamma;

/// Trials per Monte Carlo point unless configured otherwise.
pub const DEFAULT_TRIALS: u64 = 100_000;

/// How a correlation matrix is applied inside the outage sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationScaling {
    /// `C H` as is. An exponential `C` also raises the average channel power.
    Literal,
    /// `s C H` with `s = sqrt(M) / ||C||_F`, so the average received power
    /// matches the uncorrelated channel and only the spatial structure changes.
    #[default]
    PowerPreserving,
}

impl CorrelationScaling {
    pub fn name(self) -> &'static str {
        match self {
            CorrelationScaling::Literal => "literal",
            CorrelationScaling::PowerPreserving => "power-preserving",
        }
    }
}

/// Which closed form to use for the analytical outage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundVariant {
    /// `P(MK/2, (2^R - 1) sigma^2 / (2 P2))`.
    #[default]
    Printed,
    /// `P(MK, (2^R - 1) sigma^2 / P2)`: `MK` unit-variance complex entries,
    /// i.e. `2MK` real dimensions of variance 1/2.
    ComplexConvention,
}

impl BoundVariant {
    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::Printed => "printed",
            BoundVariant::ComplexConvention => "complex-convention",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageConfig {
    /// Receive antennas.
    pub m: usize,
    /// Transmitting nodes.
    pub k: usize,
    /// Target rate in bits/s/Hz.
    pub r_tr: f64,
    /// Beamforming-phase power.
    pub p2: f64,
    pub sigma_n2: f64,
    pub trials: u64,
    pub seed: u64,
    pub gain_mode: GainMode,
    pub correlation: Option<CorrelationMatrix>,
    pub correlation_scaling: CorrelationScaling,
}

impl OutageConfig {
    pub fn new(m: usize, k: usize, r_tr: f64, p2: f64, sigma_n2: f64) -> Self {
        Self {
            m,
            k,
            r_tr,
            p2,
            sigma_n2,
            trials: DEFAULT_TRIALS,
            seed: 0,
            gain_mode: GainMode::default(),
            correlation: None,
            correlation_scaling: CorrelationScaling::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::InvalidArgument("m and k must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial"));
        }
        if let Some(c) = &self.correlation {
            if c.size() != self.m {
                return Err(Error::DimensionMismatch { expected: (self.m, self.m), found: (c.size(), c.size()) });
            }
        }
        outage_threshold(self.r_tr, self.p2, self.sigma_n2).map(|_| ())
    }

    pub fn threshold(&self) -> Result<f64> {
        outage_threshold(self.r_tr, self.p2, self.sigma_n2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub probability: f64,
    pub outages: u64,
    pub trials: u64,
    /// `sqrt(p (1 - p) / trials)`.
    pub std_error: f64,
    pub threshold: f64,
}

impl OutageEstimate {
    pub fn from_counts(outages: u64, trials: u64, threshold: f64) -> Self {
        assert!(trials > 0 && outages <= trials);
        let probability = outages as f64 / trials as f64;
        let std_error = libm::sqrt(probability * (1.0 - probability) / trials as f64);
        Self { probability, outages, trials, std_error, threshold }
    }
}

/// `(2^R - 1) sigma^2 / P2`.
pub fn outage_threshold(r_tr: f64, p2: f64, sigma_n2: f64) -> Result<f64> {
    if !(p2 > 0.0 && p2.is_finite()) || !(sigma_n2 > 0.0 && sigma_n2.is_finite()) {
        return Err(Error::InvalidArgument("powers must be positive and finite"));
    }
    if !(r_tr >= 0.0 && r_tr.is_finite()) {
        return Err(Error::InvalidArgument("rate must be nonnegative"));
    }
    Ok((libm::exp2(r_tr) - 1.0) * sigma_n2 / p2)
}

/// Whether rate `r_tr` fits under `log2(1 + snr)`.
pub fn shannon_achievable(r_tr: f64, snr: f64) -> bool {
    r_tr <= libm::log2(1.0 + snr)
}

/// Channel gain seen by trial `trial`. `cfg` must already be validated.
pub fn trial_gain(cfg: &OutageConfig, trial: u64) -> f64 {
    let mut rng = trial_rng(cfg.seed, trial);
    let h = draw_iid_rayleigh(cfg.m, cfg.k, &mut rng).expect("validated dimensions");
    let h = match &cfg.correlation {
        None => h,
        Some(c) => {
            let ch = apply_correlation(c, &h).expect("validated correlation size");
            match cfg.correlation_scaling {
                CorrelationScaling::Literal => ch,
                CorrelationScaling::PowerPreserving => ch.scaled(c.power_normalization()),
            }
        }
    };
    let w = draw_weights(cfg.k, &mut rng).expect("validated node count");
    cfg.gain_mode.gain(&h, &w).expect("matching dimensions")
}

/// Number of outages among the given trials.
pub fn count_outages(cfg: &OutageConfig, trials: Range<u64>, threshold: f64) -> u64 {
    trials.filter(|&t| trial_gain(cfg, t) < threshold).count() as u64
}

pub fn monte_carlo_outage(cfg: &OutageConfig) -> Result<OutageEstimate> {
    monte_carlo_outage_on(cfg, &Sequential)
}

/// Monte Carlo outage with trials dispatched through `exec`.
pub fn monte_carlo_outage_on<E: Executor + ?Sized>(cfg: &OutageConfig, exec: &E) -> Result<OutageEstimate> {
    cfg.validate()?;
    let threshold = cfg.threshold()?;
    let outages = exec.count(cfg.trials, &|range| count_outages(cfg, range, threshold));
    Ok(OutageEstimate::from_counts(outages, cfg.trials, threshold))
}

/// `P(MK/2, (2^R - 1) / (2 P2 / sigma^2))`.
pub fn analytical_outage(m: usize, k: usize, r_tr: f64, p2: f64, sigma_n2: f64) -> Result<f64> {
    analytical_outage_variant(BoundVariant::Printed, m, k, r_tr, p2, sigma_n2)
}

pub fn analytical_outage_variant(
    variant: BoundVariant,
    m: usize,
    k: usize,
    r_tr: f64,
    p2: f64,
    sigma_n2: f64,
) -> Result<f64> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidArgument("m and k must be at least 1"));
    }
    let threshold = outage_threshold(r_tr, p2, sigma_n2)?;
    let dims = (m * k) as f64;
    match variant {
        BoundVariant::Printed => regularized_lower_gamma(dims / 2.0, threshold / 2.0),
        BoundVariant::ComplexConvention => regularized_lower_gamma(dims, threshold),
    }
}
