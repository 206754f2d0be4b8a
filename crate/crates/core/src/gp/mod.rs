//! Exact Gaussian-process regression on unit-cube inputs.
//!
//! A [`PosteriorModel`] is immutable once fitted: it stores the Cholesky
//! factor of `K + (σ_n² + jitter) I` and the dual weights, and answers
//! posterior mean/std queries together with their input gradients.

mod hyper;
mod kernel;
mod mean;

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use hyper::{fit_hyperparameters, FittedModel, HyperSettings, Hyperparameters, NoisePolicy};
pub use kernel::{Kernel, KernelKind};
pub use mean::{Basis, MeanFunction, MeanKind};

use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// First jitter tried on the Gram diagonal.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter before a fit is declared singular.
pub const JITTER_MAX: f64 = 1e-4;
/// Standard deviations at or below this carry no gradient information.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub std: f64,
}

/// Input gradients of the posterior mean and standard deviation.
///
/// When the standard deviation collapses (training points of a noise-free
/// model) `std` is a zero vector and `std_defined` is false; callers must not
/// read it as a genuine stationary point.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGradient {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub std_defined: bool,
}

#[derive(Debug, Clone)]
pub struct PosteriorModel {
    kernel: Kernel,
    mean: MeanFunction,
    noise_variance: f64,
    jitter: f64,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    chol: Matrix,
    dual: Vec<f64>,
}

impl PosteriorModel {
    pub fn fit(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        kernel: Kernel,
        mean: MeanFunction,
        noise_variance: f64,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::validation("cannot fit a GP to zero observations"));
        }
        if inputs.len() != targets.len() {
            return Err(Error::validation("inputs and targets differ in length"));
        }
        kernel.validate()?;
        let dim = kernel.dim();
        mean.validate(dim)?;
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::validation("noise variance must be finite and non-negative"));
        }
        for x in &inputs {
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
            }
        }
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::validation("targets must be finite"));
        }
        if noise_variance == 0.0 {
            for (i, x) in inputs.iter().enumerate() {
                if inputs[..i].contains(x) {
                    return Err(Error::validation("duplicate training inputs require positive noise"));
                }
            }
        }
        let gram = gram_matrix(&kernel, &inputs, noise_variance);
        let (chol, jitter) = linalg::cholesky_with_jitter(&gram, JITTER_START, JITTER_MAX)
            .ok_or_else(|| Error::Fit("Gram matrix not positive definite after jitter escalation".to_string()))?;
        let residual: Vec<f64> = inputs.iter().zip(&targets).map(|(x, y)| y - mean.eval(x)).collect();
        let dual = linalg::cholesky_solve(&chol, &residual);
        Ok(PosteriorModel { kernel, mean, noise_variance, jitter, inputs, targets, chol, dual })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn mean_function(&self) -> &MeanFunction {
        &self.mean
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Diagonal jitter that made the Gram matrix factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn cholesky(&self) -> &Matrix {
        &self.chol
    }

    pub fn dual(&self) -> &[f64] {
        &self.dual
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    fn cross_cov(&self, x: &[f64]) -> Vec<f64> {
        self.inputs.iter().map(|xi| self.kernel.cov(x, xi)).collect()
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Prediction> {
        self.check_dim(x)?;
        let kx = self.cross_cov(x);
        let mean = self.mean.eval(x) + linalg::dot(&kx, &self.dual);
        let mut v = kx;
        linalg::solve_lower_in_place(&self.chol, &mut v);
        let var = (self.kernel.signal_variance - linalg::dot(&v, &v)).max(0.0);
        Ok(Prediction { mean, std: libm::sqrt(var) })
    }

    pub fn posterior_gradient(&self, x: &[f64]) -> Result<PosteriorGradient> {
        Ok(self.predict_with_gradient(x)?.1)
    }

    /// Posterior and its gradient in one pass.
    pub fn predict_with_gradient(&self, x: &[f64]) -> Result<(Prediction, PosteriorGradient)> {
        self.check_dim(x)?;
        let d = self.dim();
        let kx = self.cross_cov(x);
        let mean = self.mean.eval(x) + linalg::dot(&kx, &self.dual);
        // w = K⁻¹ k(X, x)
        let mut w = kx.clone();
        linalg::solve_lower_in_place(&self.chol, &mut w);
        let var = (self.kernel.signal_variance - linalg::dot(&w, &w)).max(0.0);
        linalg::solve_upper_transposed_in_place(&self.chol, &mut w);
        let std = libm::sqrt(var);

        let mut grad_mean = vec![0.0; d];
        self.mean.accumulate_gradient(x, &mut grad_mean);
        let mut grad_var = vec![0.0; d];
        for (i, xi) in self.inputs.iter().enumerate() {
            self.kernel.accumulate_grad_x(x, xi, self.dual[i], &mut grad_mean);
            self.kernel.accumulate_grad_x(x, xi, -2.0 * w[i], &mut grad_var);
        }
        let std_defined = std > STD_FLOOR;
        let grad_std = if std_defined {
            grad_var.iter().map(|g| g / (2.0 * std)).collect()
        } else {
            vec![0.0; d]
        };
        Ok((Prediction { mean, std }, PosteriorGradient { mean: grad_mean, std: grad_std, std_defined }))
    }

    /// Joint posterior mean vector and covariance matrix over `points`.
    pub fn joint_posterior(&self, points: &[Vec<f64>]) -> Result<(Vec<f64>, Matrix)> {
        let q = points.len();
        let mut means = Vec::with_capacity(q);
        let mut vs = Vec::with_capacity(q);
        for x in points {
            self.check_dim(x)?;
            let kx = self.cross_cov(x);
            means.push(self.mean.eval(x) + linalg::dot(&kx, &self.dual));
            let mut v = kx;
            linalg::solve_lower_in_place(&self.chol, &mut v);
            vs.push(v);
        }
        let cov = Matrix::from_fn(q, |i, j| self.kernel.cov(&points[i], &points[j]) - linalg::dot(&vs[i], &vs[j]));
        Ok((means, cov))
    }

    /// `−½ rᵀK⁻¹r − Σ log L_ii − (n/2) log 2π` with `r = y − m(X)`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let fit: f64 = self
            .inputs
            .iter()
            .zip(&self.targets)
            .zip(&self.dual)
            .map(|((x, y), a)| (y - self.mean.eval(x)) * a)
            .sum();
        let log_det: f64 = (0..n).map(|i| libm::log(self.chol[(i, i)])).sum();
        -0.5 * fit - log_det - 0.5 * n as f64 * libm::log(2.0 * PI)
    }
}

pub(crate) fn gram_matrix(kernel: &Kernel, inputs: &[Vec<f64>], noise_variance: f64) -> Matrix {
    let n = inputs.len();
    let mut k = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..i {
            let c = kernel.cov(&inputs[i], &inputs[j]);
            k[(i, j)] = c;
            k[(j, i)] = c;
        }
        k[(i, i)] = kernel.signal_variance + noise_variance;
    }
    k
}

/// Affine map putting targets on zero mean and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardization {
    pub offset: f64,
    pub scale: f64,
}

impl Standardization {
    /// Sample mean and (population) standard deviation; a degenerate spread
    /// keeps unit scale.
    pub fn from_targets(y: &[f64]) -> Self {
        if y.is_empty() {
            return Standardization { offset: 0.0, scale: 1.0 };
        }
        let n = y.len() as f64;
        let offset = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - offset) * (v - offset)).sum::<f64>() / n;
        let sd = libm::sqrt(var);
        let scale = if sd > 1e-12 * (1.0 + offset.abs()) { sd } else { 1.0 };
        Standardization { offset, scale }
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.offset) / self.scale
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.scale + self.offset
    }
}
