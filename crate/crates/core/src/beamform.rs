//! Random beamforming weights, effective channel and MRC combining.
//!
//! The weight vector carries unit total power (`sum a_i^2 = 1`); the
//! beamforming-phase power `P2` enters only through [`received_snr`] and the
//! outage threshold.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::chanmodel::ChannelMatrix;
use crate::{Error, Result};

/// Gains at or below this are treated as a dead channel by [`mrc_reconstruct`].
pub const DEGENERATE_GAIN: f64 = 1e-15;

/// Per-node weights `a_i * exp(j * theta_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingWeights {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl BeamformingWeights {
    /// Normalizes `amplitudes` to unit power and wraps `phases` into `[0, 2pi)`.
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("need at least one weight"));
        }
        if amplitudes.len() != phases.len() {
            return Err(Error::DimensionMismatch { expected: (amplitudes.len(), 1), found: (phases.len(), 1) });
        }
        if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidArgument("amplitudes must be finite and nonnegative"));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("phases must be finite"));
        }
        let power: f64 = amplitudes.iter().map(|a| a * a).sum();
        if power == 0.0 {
            return Err(Error::DivisionByZero("all amplitudes are zero"));
        }
        let norm = libm::sqrt(power);
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(Self { amplitudes, phases })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn coefficient(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.amplitudes[i], self.phases[i])
    }

    pub fn coefficients(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.len()).map(|i| self.coefficient(i))
    }

    fn check_channel(&self, h: &ChannelMatrix) -> Result<()> {
        if h.cols() != self.len() {
            return Err(Error::DimensionMismatch { expected: (h.rows(), self.len()), found: h.shape() });
        }
        Ok(())
    }
}

fn wrap_phase(theta: f64) -> f64 {
    let wrapped = libm::fmod(theta, TAU);
    let wrapped = if wrapped < 0.0 { wrapped + TAU } else { wrapped };
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Draws `k` amplitudes from U(0, 1) and `k` phases from U[0, 2pi), in that
/// order, then normalizes the amplitudes.
pub fn draw_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<BeamformingWeights> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one weight"));
    }
    loop {
        let amplitudes: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let phases: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * TAU).collect();
        // All-zero amplitudes cannot be normalized; redraw.
        if amplitudes.iter().any(|&a| a > 0.0) {
            return BeamformingWeights::new(amplitudes, phases);
        }
    }
}

/// How the effective channel collapses to the scalar gain used for outage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    /// Squared Frobenius norm of `H V_b`: every node carries its own stream.
    #[default]
    Frobenius,
    /// `||H v||^2` with `v` the weight vector: all nodes carry one common symbol.
    Vector,
}

impl GainMode {
    pub fn gain(self, h: &ChannelMatrix, w: &BeamformingWeights) -> Result<f64> {
        match self {
            GainMode::Frobenius => channel_gain(h, w),
            GainMode::Vector => vector_gain(h, w),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GainMode::Frobenius => "frobenius",
            GainMode::Vector => "vector",
        }
    }
}

/// `H V_b`: column `i` of `H` scaled by `a_i exp(j theta_i)`.
pub fn effective_channel(h: &ChannelMatrix, w: &BeamformingWeights) -> Result<ChannelMatrix> {
    w.check_channel(h)?;
    let mut m = h.as_matrix().clone();
    for (i, coef) in w.coefficients().enumerate() {
        m.column_mut(i).iter_mut().for_each(|z| *z *= coef);
    }
    ChannelMatrix::from_matrix(m)
}

/// `||H V_b||_F^2 = sum_i a_i^2 ||h_i||^2`.
pub fn channel_gain(h: &ChannelMatrix, w: &BeamformingWeights) -> Result<f64> {
    w.check_channel(h)?;
    Ok(w.amplitudes.iter().enumerate().map(|(i, a)| a * a * h.column_norm_sqr(i)).sum())
}

/// `||H v||^2` where `v_i = a_i exp(j theta_i)`.
pub fn vector_gain(h: &ChannelMatrix, w: &BeamformingWeights) -> Result<f64> {
    w.check_channel(h)?;
    let coefs: Vec<Complex64> = w.coefficients().collect();
    let hm = h.as_matrix();
    Ok((0..h.rows()).map(|r| coefs.iter().enumerate().map(|(i, c)| hm[(r, i)] * c).sum::<Complex64>().norm_sqr()).sum())
}

/// `(p2 / sigma_n2) * gain`.
pub fn received_snr(gain: f64, p2: f64, sigma_n2: f64) -> Result<f64> {
    if !(p2 > 0.0) || !(sigma_n2 > 0.0) {
        return Err(Error::InvalidArgument("powers must be positive"));
    }
    if !(gain >= 0.0) {
        return Err(Error::InvalidArgument("gain must be nonnegative"));
    }
    Ok(p2 / sigma_n2 * gain)
}

/// `y = H V_b x + n`.
pub fn transmit(
    x: &[Complex64],
    h: &ChannelMatrix,
    w: &BeamformingWeights,
    noise: &[Complex64],
) -> Result<Vec<Complex64>> {
    w.check_channel(h)?;
    if x.len() != h.cols() {
        return Err(Error::DimensionMismatch { expected: (h.cols(), 1), found: (x.len(), 1) });
    }
    if noise.len() != h.rows() {
        return Err(Error::DimensionMismatch { expected: (h.rows(), 1), found: (noise.len(), 1) });
    }
    let hv = effective_channel(h, w)?;
    let hm = hv.as_matrix();
    Ok((0..h.rows())
        .map(|r| {
            let signal: Complex64 = x.iter().enumerate().map(|(i, xi)| hm[(r, i)] * xi).sum();
            signal + noise[r]
        })
        .collect())
}

/// Matched filter normalized by total gain: `(H V_b)^H y / ||H V_b||^2`.
///
/// Exact inversion only for a single stream; with several nodes this is the
/// literal expression without any equalization.
pub fn mrc_reconstruct(y: &[Complex64], h: &ChannelMatrix, w: &BeamformingWeights) -> Result<Vec<Complex64>> {
    w.check_channel(h)?;
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch { expected: (h.rows(), 1), found: (y.len(), 1) });
    }
    let hv = effective_channel(h, w)?;
    let gain = hv.norm_sqr();
    if gain <= DEGENERATE_GAIN {
        return Err(Error::DegenerateChannel);
    }
    let hm = hv.as_matrix();
    Ok((0..h.cols())
        .map(|i| {
            let matched: Complex64 = y.iter().enumerate().map(|(r, yr)| hm[(r, i)].conj() * yr).sum();
            matched / gain
        })
        .collect())
}

/// Everything the receiver sees for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionOutcome {
    pub received: Vec<Complex64>,
    pub gain: f64,
    pub reconstructed: Vec<Complex64>,
}

/// Sends `x` through the channel and reconstructs it with MRC.
pub fn simulate_block(
    x: &[Complex64],
    h: &ChannelMatrix,
    w: &BeamformingWeights,
    noise: &[Complex64],
) -> Result<TransmissionOutcome> {
    let received = transmit(x, h, w, noise)?;
    let gain = channel_gain(h, w)?;
    let reconstructed = mrc_reconstruct(&received, h, w)?;
    Ok(TransmissionOutcome { received, gain, reconstructed })
}
