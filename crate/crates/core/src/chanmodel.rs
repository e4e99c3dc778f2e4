//! Rayleigh fading channels and receive-side correlation.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Smallest-to-largest eigenvalue ratio below which the condition number
/// is reported as saturated.
pub const CONDITION_FLOOR: f64 = 1e-12;

/// Value reported for a saturated condition number.
pub const CONDITION_SATURATED: f64 = 1.0 / CONDITION_FLOOR;

/// Complex `m x k` fading matrix: rows are receive antennas, columns are
/// transmitting nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    inner: DMatrix<Complex64>,
}

impl ChannelMatrix {
    pub fn zeros(m: usize, k: usize) -> Result<Self> {
        check_dims(m, k)?;
        Ok(Self { inner: DMatrix::zeros(m, k) })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_dims(n, n)?;
        Ok(Self { inner: DMatrix::identity(n, n) })
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(m: usize, k: usize, entries: &[Complex64]) -> Result<Self> {
        check_dims(m, k)?;
        if entries.len() != m * k {
            return Err(Error::InvalidArgument("entry count does not match m*k"));
        }
        Self::from_matrix(DMatrix::from_row_slice(m, k, entries))
    }

    pub fn from_matrix(inner: DMatrix<Complex64>) -> Result<Self> {
        check_dims(inner.nrows(), inner.ncols())?;
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("channel entries must be finite"));
        }
        Ok(Self { inner })
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.inner
    }

    /// Multiplies every entry by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { inner: self.inner.map(|z| z * factor) }
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn column_norm_sqr(&self, col: usize) -> f64 {
        self.inner.column(col).iter().map(|z| z.norm_sqr()).sum()
    }
}

fn check_dims(m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidArgument("matrix dimensions must be at least 1"));
    }
    Ok(())
}

/// One circularly-symmetric CN(0, 1) sample: real and imaginary parts each
/// have variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Draws an `m x k` matrix of iid CN(0, 1) entries, filled row by row.
pub fn draw_iid_rayleigh<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Result<ChannelMatrix> {
    check_dims(m, k)?;
    let entries: Vec<Complex64> = (0..m * k).map(|_| complex_gaussian(rng)).collect();
    Ok(ChannelMatrix { inner: DMatrix::from_row_slice(m, k, &entries) })
}

/// Real symmetric receive-correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    level: f64,
}

impl CorrelationMatrix {
    /// Validates symmetry, unit diagonal and positive semidefiniteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::InvalidArgument("correlation matrix must be square and nonempty"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("correlation entries must be finite"));
        }
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument("correlation matrix needs a unit diagonal"));
            }
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument("correlation matrix must be symmetric"));
                }
            }
        }
        let min_eig = entries.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * n as f64 {
            return Err(Error::InvalidArgument("correlation matrix must be positive semidefinite"));
        }
        let level = correlation_level(&entries)?;
        Ok(Self { entries, level })
    }

    pub fn identity(m: usize) -> Result<Self> {
        exponential_correlation(m, 0.0)
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Correlation level of the stored entries.
    pub fn level(&self) -> f64 {
        self.level
    }

    /// Factor `sqrt(m) / ||C||_F` that makes `E||s C h||^2 = m` for
    /// `h ~ CN(0, I)`. Exactly 1 for the identity.
    pub fn power_normalization(&self) -> f64 {
        let m = self.size() as f64;
        libm::sqrt(m) / libm::sqrt(self.entries.iter().map(|v| v * v).sum::<f64>())
    }
}

/// Exponential model `C[i][j] = r^|i-j|`.
pub fn exponential_correlation(m: usize, r: f64) -> Result<CorrelationMatrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("correlation size must be at least 1"));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidArgument("exponential correlation needs 0 <= r < 1"));
    }
    let entries = DMatrix::from_fn(m, m, |i, j| libm::pow(r, i.abs_diff(j) as f64));
    let level = correlation_level(&entries)?;
    Ok(CorrelationMatrix { entries, level })
}

/// `||C - diag(C)||_F / ||diag(C)||_F` for any square real matrix.
pub fn correlation_level(c: &DMatrix<f64>) -> Result<f64> {
    let n = c.nrows();
    if n == 0 || c.ncols() != n {
        return Err(Error::InvalidArgument("correlation level needs a square matrix"));
    }
    let mut diag = 0.0;
    let mut off = 0.0;
    for j in 0..n {
        for i in 0..n {
            let v = c[(i, j)];
            if i == j {
                diag += v * v;
            } else {
                off += v * v;
            }
        }
    }
    if diag == 0.0 {
        return Err(Error::DivisionByZero("diagonal of correlation matrix is zero"));
    }
    Ok(libm::sqrt(off) / libm::sqrt(diag))
}

/// Inverts [`exponential_correlation`]'s level: finds `r` with
/// `level(exponential_correlation(m, r)) == level`.
pub fn exponential_r_for_level(m: usize, level: f64) -> Result<f64> {
    if level == 0.0 {
        return Ok(0.0);
    }
    if m < 2 {
        return Err(Error::InvalidArgument("a 1x1 correlation matrix has level 0"));
    }
    // r -> 1 gives the all-ones matrix.
    let sup = libm::sqrt((m - 1) as f64);
    if !(level > 0.0 && level < sup) {
        return Err(Error::InvalidArgument("correlation level out of reach for this size"));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if exponential_correlation(m, mid)?.level() < level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Left-multiplies the channel by the correlation matrix: returns `C * H`.
pub fn apply_correlation(c: &CorrelationMatrix, h: &ChannelMatrix) -> Result<ChannelMatrix> {
    let (m, k) = h.shape();
    if c.size() != m {
        return Err(Error::DimensionMismatch { expected: (m, m), found: (c.size(), c.size()) });
    }
    let mut out = DMatrix::<Complex64>::zeros(m, k);
    for col in 0..k {
        for row in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                acc += h.inner[(j, col)] * c.entries[(row, j)];
            }
            out[(row, col)] = acc;
        }
    }
    Ok(ChannelMatrix { inner: out })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionDiagnostics {
    /// Eigenvalues of `H^H H`, descending and clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Largest over smallest eigenvalue, capped at [`CONDITION_SATURATED`].
    pub condition_number: f64,
    pub saturated: bool,
}

/// Eigen-spread of the Gram matrix `H^H H` of an effective channel.
pub fn condition_diagnostics(h_eff: &ChannelMatrix) -> ConditionDiagnostics {
    let gram = h_eff.inner.adjoint() * &h_eff.inner;
    let mut eigenvalues: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|&l| l.max(0.0)).collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let largest = eigenvalues[0];
    let smallest = *eigenvalues.last().unwrap_or(&0.0);
    let saturated = largest <= 0.0 || smallest < CONDITION_FLOOR * largest;
    let condition_number = if saturated { CONDITION_SATURATED } else { largest / smallest };
    ConditionDiagnostics { eigenvalues, condition_number, saturated }
}
