//! Exact GP regression with a squared-exponential kernel.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub signal_variance: f64,
    pub length_scale: f64,
    pub noise: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Self {
            signal_variance: 1.0,
            length_scale: 0.2,
            noise: 1e-4,
        }
    }
}

impl Kernel {
    /// Noise-free covariance between two inputs.
    pub fn cov(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        self.signal_variance * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("GP needs at least one training point")]
    NoData,
    #[error("inputs and targets differ in length ({inputs} vs {targets})")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("kernel matrix is not positive definite even with jitter {0:e}")]
    NotPositiveDefinite(f64),
}

pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct GpPosterior {
    kernel: Kernel,
    inputs: Vec<Vec<f64>>,
    /// Row-major lower Cholesky factor of `K + σ_n² I (+ jitter)`.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
}

/// In-place Cholesky of a row-major symmetric matrix; `false` if a pivot is
/// not positive.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    true
}

fn forward(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

fn backward(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Fits the posterior. The Cholesky is retried with jitter doubling from
/// [`JITTER_START`] up to [`JITTER_MAX`].
pub fn gp_fit(inputs: &[Vec<f64>], targets: &[f64], kernel: Kernel) -> Result<GpPosterior, GpError> {
    if inputs.is_empty() {
        return Err(GpError::NoData);
    }
    if inputs.len() != targets.len() {
        return Err(GpError::LengthMismatch {
            inputs: inputs.len(),
            targets: targets.len(),
        });
    }
    let n = inputs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let c = kernel.cov(&inputs[i], &inputs[j]);
            k[i * n + j] = c;
            k[j * n + i] = c;
        }
        k[i * n + i] += kernel.noise;
    }
    let mut jitter = 0.0;
    let chol = loop {
        let mut a = k.clone();
        for i in 0..n {
            a[i * n + i] += jitter;
        }
        if cholesky(&mut a, n) {
            break a;
        }
        jitter = if jitter == 0.0 { JITTER_START } else { jitter * 2.0 };
        if jitter > JITTER_MAX {
            return Err(GpError::NotPositiveDefinite(jitter / 2.0));
        }
    };
    let mut alpha = targets.to_vec();
    forward(&chol, n, &mut alpha);
    backward(&chol, n, &mut alpha);
    Ok(GpPosterior {
        kernel,
        inputs: inputs.to_vec(),
        chol,
        alpha,
        jitter,
    })
}

impl GpPosterior {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Jitter that was needed to factor the kernel matrix.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior mean and variance of the latent function; the variance is
    /// clipped at 0.
    pub fn predict_var(&self, x: &[f64]) -> (f64, f64) {
        let n = self.inputs.len();
        let mut ks: Vec<f64> = self.inputs.iter().map(|xi| self.kernel.cov(xi, x)).collect();
        let mean = ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        forward(&self.chol, n, &mut ks);
        let reduction: f64 = ks.iter().map(|v| v * v).sum();
        let var = self.kernel.signal_variance - reduction;
        debug_assert!(var >= -1e-9, "posterior variance {var}");
        (mean, var.max(0.0))
    }

    /// Posterior mean and standard deviation.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict_var(x);
        (m, v.sqrt())
    }
}
