//! Log-gamma and the regularized lower incomplete gamma function.

use core::f64::consts::PI;

use crate::{Error, Result};

const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(s)` for `s > 0`.
pub fn ln_gamma(s: f64) -> f64 {
    if s < 0.5 {
        // Reflection: Gamma(s) Gamma(1 - s) = pi / sin(pi s).
        return libm::log(PI / libm::sin(PI * s)) - ln_gamma(1.0 - s);
    }
    let z = s - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * libm::log(2.0 * PI) + (z + 0.5) * libm::log(t) - t + libm::log(acc)
}

/// `P(s, x) = gamma(s, x) / Gamma(s)`.
///
/// Series expansion below `x = s + 1`, Lentz continued fraction for the
/// complement above it.
pub fn regularized_lower_gamma(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument("gamma shape must be positive"));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument("gamma argument must be nonnegative"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let log_prefactor = -x + s * libm::log(x) - ln_gamma(s);
    let p = if x < s + 1.0 {
        lower_series(s, x, log_prefactor)?
    } else {
        1.0 - upper_continued_fraction(s, x, log_prefactor)?
    };
    Ok(p.clamp(0.0, 1.0))
}

// P(s, x) = e^{-x} x^s / Gamma(s) * sum_n x^n / (s (s+1) ... (s+n))
fn lower_series(s: f64, x: f64, log_prefactor: f64) -> Result<f64> {
    let mut denom = s;
    let mut term = 1.0 / s;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum * libm::exp(log_prefactor));
        }
    }
    Err(Error::ConvergenceFailure("incomplete gamma series"))
}

// Q(s, x) = e^{-x} x^s / Gamma(s) * 1 / (x + 1 - s - 1(1-s)/(x + 3 - s - ...))
fn upper_continued_fraction(s: f64, x: f64, log_prefactor: f64) -> Result<f64> {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(libm::exp(log_prefactor) * h);
        }
    }
    Err(Error::ConvergenceFailure("incomplete gamma continued fraction"))
}
