//! Gaussian-process regression over encoded configurations.
//!
//! The surrogate is a zero-mean GP with an isotropic Matérn 5/2 kernel on
//! Euclidean distance in the encoded `[0,1]^d` cube. Observation values are
//! standardized before fitting, the Gram matrix is Cholesky-factorized with
//! escalating jitter (duplicate configurations make it rank-deficient), and
//! kernel hyperparameters are tuned by log marginal likelihood over a fixed
//! coarse grid.

use thiserror::Error;

use crate::space::EncodedPoint;

/// Jitter escalation: start at 1e-10, multiply by 10 until the factorization
/// succeeds, give up past 1e-4.
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("lengthscale and signal variance must be positive, noise non-negative")]
    InvalidParams,
    #[error("point dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cannot fit a model with no observations")]
    NoObservations,
    #[error("observation value is not finite")]
    NonFiniteValue,
    #[error("kernel matrix is singular even at maximum jitter {JITTER_MAX:e}")]
    SingularKernel,
}

/// One evaluated configuration in encoded form.
#[derive(Debug, Clone)]
pub struct Observation {
    pub point: EncodedPoint,
    pub value: f64,
}

impl Observation {
    pub fn new(point: EncodedPoint, value: f64) -> Self {
        Self { point, value }
    }
}

/// Matérn 5/2 kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(
        lengthscale: f64,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        if lengthscale > 0.0 && signal_variance > 0.0 && noise_variance >= 0.0 {
            Ok(Self { lengthscale, signal_variance, noise_variance })
        } else {
            Err(GpError::InvalidParams)
        }
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { lengthscale: 1.0, signal_variance: 1.0, noise_variance: 1e-4 }
    }
}

/// k(a,b) = sigma^2 (1 + sqrt5 r/l + 5 r^2/(3 l^2)) exp(-sqrt5 r/l).
pub fn kernel_eval(
    params: &KernelParams,
    a: &EncodedPoint,
    b: &EncodedPoint,
) -> Result<f64, GpError> {
    if a.dim() != b.dim() {
        return Err(GpError::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(matern52(params, a.distance(b)))
}

fn matern52(params: &KernelParams, r: f64) -> f64 {
    let s = 5f64.sqrt() * r / params.lengthscale;
    params.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Fitted GP: factorized Gram matrix plus the standardization constants
/// needed to report predictions on the original value scale.
#[derive(Debug, Clone)]
pub struct GpModel {
    observations: Vec<Observation>,
    kernel: KernelParams,
    /// Lower-triangular Cholesky factor of K + (noise + jitter) I, row-major.
    factor: Vec<f64>,
    /// (K + (noise + jitter) I)^-1 y, on the standardized scale.
    alpha: Vec<f64>,
    jitter: f64,
    y_mean: f64,
    y_std: f64,
}

impl GpModel {
    /// The prior: no observations. Predictions fall back to mean 0 and the
    /// kernel's signal variance.
    pub fn prior(kernel: KernelParams) -> Self {
        Self {
            observations: Vec::new(),
            kernel,
            factor: Vec::new(),
            alpha: Vec::new(),
            jitter: 0.0,
            y_mean: 0.0,
            y_std: 1.0,
        }
    }

    pub fn fit(observations: Vec<Observation>, kernel: KernelParams) -> Result<Self, GpError> {
        Self::fit_with(observations, kernel, true)
    }

    /// `standardize = false` fits on the raw values (mean 0, std 1), which
    /// some invariants need in order to observe the GP's exact linearity.
    pub fn fit_with(
        observations: Vec<Observation>,
        kernel: KernelParams,
        standardize: bool,
    ) -> Result<Self, GpError> {
        let n = observations.len();
        if n == 0 {
            return Err(GpError::NoObservations);
        }
        let dim = observations[0].point.dim();
        for obs in &observations {
            if obs.point.dim() != dim {
                return Err(GpError::DimensionMismatch { expected: dim, actual: obs.point.dim() });
            }
            if !obs.value.is_finite() {
                return Err(GpError::NonFiniteValue);
            }
        }

        let (y_mean, y_std) =
            if standardize { standardization(&observations) } else { (0.0, 1.0) };
        let y: Vec<f64> = observations.iter().map(|o| (o.value - y_mean) / y_std).collect();

        let base = kernel_matrix(&kernel, &observations);
        let mut jitter = JITTER_START;
        loop {
            let mut k = base.clone();
            for i in 0..n {
                k[i * n + i] += kernel.noise_variance + jitter;
            }
            if let Some(factor) = cholesky(k, n) {
                let alpha = chol_solve(&factor, n, &y);
                return Ok(Self { observations, kernel, factor, alpha, jitter, y_mean, y_std });
            }
            jitter *= 10.0;
            if jitter > JITTER_MAX * (1.0 + 1e-12) {
                return Err(GpError::SingularKernel);
            }
        }
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    /// Largest observed (raw) value, if any.
    pub fn best_observed(&self) -> Option<f64> {
        self.observations.iter().map(|o| o.value).fold(None, |acc, v| match acc {
            Some(best) if best >= v => Some(best),
            _ => Some(v),
        })
    }

    /// Predictive mean and variance, variance clamped at zero from below.
    pub fn predict(&self, point: &EncodedPoint) -> Result<(f64, f64), GpError> {
        let (mean, var) = self.predict_raw(point)?;
        Ok((mean, var.max(0.0)))
    }

    /// Predictive mean and variance before the non-negativity clamp. The
    /// raw variance can dip a hair below zero (order 1e-12) from rounding.
    pub fn predict_raw(&self, point: &EncodedPoint) -> Result<(f64, f64), GpError> {
        let n = self.observations.len();
        if n == 0 {
            return Ok((self.y_mean, self.kernel.signal_variance * self.y_std * self.y_std));
        }
        if point.dim() != self.observations[0].point.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.observations[0].point.dim(),
                actual: point.dim(),
            });
        }
        let k_star: Vec<f64> = self
            .observations
            .iter()
            .map(|o| matern52(&self.kernel, point.distance(&o.point)))
            .collect();
        let mean_std: f64 = k_star.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        let v = solve_lower(&self.factor, n, &k_star);
        let var_std = self.kernel.signal_variance - v.iter().map(|x| x * x).sum::<f64>();
        Ok((self.y_mean + self.y_std * mean_std, var_std * self.y_std * self.y_std))
    }

    /// Log marginal likelihood of the standardized observations.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.observations.len();
        if n == 0 {
            return 0.0;
        }
        let y: Vec<f64> =
            self.observations.iter().map(|o| (o.value - self.y_mean) / self.y_std).collect();
        let data_fit: f64 = y.iter().zip(&self.alpha).map(|(y, a)| y * a).sum();
        let log_det: f64 = (0..n).map(|i| self.factor[i * n + i].ln()).sum();
        -0.5 * data_fit - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    /// The jitter level at which the factorization succeeded.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

/// Sample mean and standard deviation. Falls back to std 1 with fewer than
/// two observations or zero variance.
fn standardization(observations: &[Observation]) -> (f64, f64) {
    let n = observations.len();
    let mean = observations.iter().map(|o| o.value).sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 1.0);
    }
    let var = observations.iter().map(|o| (o.value - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var > 0.0 {
        (mean, var.sqrt())
    } else {
        (mean, 1.0)
    }
}

/// Gram matrix, computed once on the upper triangle and mirrored so that
/// K[i][j] and K[j][i] are bitwise identical.
fn kernel_matrix(params: &KernelParams, observations: &[Observation]) -> Vec<f64> {
    let n = observations.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = matern52(params, observations[i].point.distance(&observations[j].point));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// In-place lower Cholesky of a row-major symmetric matrix. `None` when a
/// pivot is not strictly positive.
fn cholesky(mut a: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let diag = diag.sqrt();
        a[j * n + j] = diag;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / diag;
        }
    }
    // Zero the strictly-upper part so the factor is exactly triangular.
    for i in 0..n {
        for j in i + 1..n {
            a[i * n + j] = 0.0;
        }
    }
    Some(a)
}

/// Solve L x = b.
fn solve_lower(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l[i * n + k] * x[k];
        }
        x[i] /= l[i * n + i];
    }
    x
}

/// Solve L^T x = b.
fn solve_lower_transpose(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= l[k * n + i] * x[k];
        }
        x[i] /= l[i * n + i];
    }
    x
}

/// Solve (L L^T) x = b.
fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    solve_lower_transpose(l, n, &solve_lower(l, n, b))
}

/// Tuning grids: signal variance is pinned to 1 (the sample variance of the
/// standardized values), so only lengthscale and noise are searched.
pub const LENGTHSCALE_GRID: [f64; 4] = [0.1, 0.3, 1.0, 3.0];
pub const NOISE_GRID: [f64; 3] = [1e-6, 1e-4, 1e-2];

/// Argmax of log marginal likelihood over the fixed grid, ties broken toward
/// larger lengthscale, then larger noise. Fewer than two observations return
/// the default parameters.
pub fn tune_kernel(observations: &[Observation]) -> Result<KernelParams, GpError> {
    if observations.len() < 2 {
        return Ok(KernelParams::default());
    }
    let mut best: Option<(f64, KernelParams)> = None;
    for &lengthscale in &LENGTHSCALE_GRID {
        for &noise_variance in &NOISE_GRID {
            let params = KernelParams { lengthscale, signal_variance: 1.0, noise_variance };
            let Ok(model) = GpModel::fit(observations.to_vec(), params) else {
                continue;
            };
            let lml = model.log_marginal_likelihood();
            // `>=` lets later grid points win exact ties; the loops ascend,
            // so that realizes the larger-lengthscale-then-larger-noise rule.
            if best.as_ref().is_none_or(|(b, _)| lml >= *b) {
                best = Some((lml, params));
            }
        }
    }
    best.map(|(_, p)| p).ok_or(GpError::SingularKernel)
}
