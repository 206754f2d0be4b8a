//! Type-II maximum likelihood for kernel hyperparameters.
//!
//! The search runs in log space over length-scales, signal variance and
//! (optionally) noise variance, using multi-start projected gradient ascent
//! on the log marginal likelihood.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{gram_matrix, Kernel, KernelKind, MeanFunction, MeanKind, PosteriorModel, JITTER_MAX, JITTER_START};
use crate::linalg::{self, Matrix};
use crate::optimizer::{projected_ascent, Armijo, AscentObjective};
use crate::sobol::Sobol;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePolicy {
    Fixed(f64),
    Fitted,
}

impl Default for NoisePolicy {
    fn default() -> Self {
        NoisePolicy::Fixed(1e-6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSettings {
    pub kernel: KernelKind,
    pub mean: MeanKind,
    pub noise: NoisePolicy,
    pub n_starts: usize,
    pub max_iters: usize,
    /// Bounds applied to every length-scale and variance being fitted.
    pub bounds: (f64, f64),
}

impl Default for HyperSettings {
    fn default() -> Self {
        HyperSettings {
            kernel: KernelKind::default(),
            mean: MeanKind::default(),
            noise: NoisePolicy::default(),
            n_starts: 8,
            max_iters: 60,
            bounds: (1e-3, 1e3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub kernel: Kernel,
    pub mean: MeanFunction,
    pub noise_variance: f64,
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: PosteriorModel,
    pub hyperparameters: Hyperparameters,
    pub log_marginal_likelihood: f64,
}

struct Lml<'a> {
    kind: KernelKind,
    dim: usize,
    inputs: &'a [Vec<f64>],
    residual: Vec<f64>,
    /// `(x_i,d − x_j,d)²` for `j < i`, row-major over pairs then dimensions.
    sq_diff: Vec<f64>,
    fixed_noise: Option<f64>,
}

impl Lml<'_> {
    fn unpack(&self, theta: &[f64]) -> (Kernel, f64) {
        let ls = theta[..self.dim].iter().map(|t| libm::exp(*t)).collect();
        let kernel = Kernel { kind: self.kind, length_scales: ls, signal_variance: libm::exp(theta[self.dim]) };
        let noise = self.fixed_noise.unwrap_or_else(|| libm::exp(theta[self.dim + 1]));
        (kernel, noise)
    }

    fn factor(&self, theta: &[f64]) -> Option<(Kernel, f64, Matrix, Vec<f64>, f64)> {
        if theta.iter().any(|t| !t.is_finite()) {
            return None;
        }
        let (kernel, noise) = self.unpack(theta);
        let gram = gram_matrix(&kernel, self.inputs, noise);
        let (l, _) = linalg::cholesky_with_jitter(&gram, JITTER_START, JITTER_MAX)?;
        let alpha = linalg::cholesky_solve(&l, &self.residual);
        let n = self.residual.len();
        let log_det: f64 = (0..n).map(|i| libm::log(l[(i, i)])).sum();
        let lml = -0.5 * linalg::dot(&self.residual, &alpha) - log_det - 0.5 * n as f64 * libm::log(2.0 * PI);
        Some((kernel, noise, l, alpha, lml))
    }
}

impl AscentObjective for Lml<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        self.factor(theta).map_or(f64::NAN, |f| f.4)
    }

    fn value_and_gradient(&self, theta: &[f64]) -> (f64, Option<Vec<f64>>) {
        let Some((kernel, noise, l, alpha, lml)) = self.factor(theta) else {
            return (f64::NAN, None);
        };
        let n = alpha.len();
        let d = self.dim;
        let kinv = linalg::cholesky_inverse(&l);
        let mut grad = vec![0.0; theta.len()];
        let mut pair = 0;
        for i in 0..n {
            for j in 0..i {
                let w = alpha[i] * alpha[j] - kinv[(i, j)];
                let sq = &self.sq_diff[pair * d..(pair + 1) * d];
                pair += 1;
                let mut r2 = 0.0;
                for (s, l) in sq.iter().zip(&kernel.length_scales) {
                    r2 += s / (l * l);
                }
                let (k, h) = kernel.profile(libm::sqrt(r2));
                // off-diagonal pairs appear twice in the trace
                for (g, (s, l)) in grad.iter_mut().zip(sq.iter().zip(&kernel.length_scales)) {
                    *g -= w * h * s / (l * l);
                }
                grad[d] += w * k;
            }
            let w = alpha[i] * alpha[i] - kinv[(i, i)];
            grad[d] += 0.5 * w * kernel.signal_variance;
            if self.fixed_noise.is_none() {
                grad[d + 1] += 0.5 * w * noise;
            }
        }
        (lml, Some(grad))
    }
}

/// Fits kernel and mean hyperparameters by maximizing the log marginal
/// likelihood from `settings.n_starts` Sobol' starts (plus `warm`, when given
/// and compatible). Deterministic for fixed inputs.
pub fn fit_hyperparameters(
    inputs: &[Vec<f64>],
    targets: &[f64],
    settings: &HyperSettings,
    warm: Option<&Hyperparameters>,
) -> Result<FittedModel> {
    if inputs.len() < 2 || inputs.len() != targets.len() {
        return Err(Error::validation("hyperparameter fitting needs at least two observations"));
    }
    let dim = inputs[0].len();
    if dim == 0 || inputs.iter().any(|x| x.len() != dim) {
        return Err(Error::validation("inconsistent input dimensions"));
    }
    let (lo, hi) = settings.bounds;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::validation("hyperparameter bounds must satisfy 0 < lo < hi"));
    }
    let mean = MeanFunction::estimate(settings.mean, inputs, targets);
    let residual: Vec<f64> = inputs.iter().zip(targets).map(|(x, y)| y - mean.eval(x)).collect();
    let fixed_noise = match settings.noise {
        NoisePolicy::Fixed(v) if v >= 0.0 && v.is_finite() => Some(v),
        NoisePolicy::Fixed(_) => return Err(Error::validation("fixed noise variance must be finite and >= 0")),
        NoisePolicy::Fitted => None,
    };
    let n = inputs.len();
    let mut sq_diff = Vec::with_capacity(n * (n - 1) / 2 * dim);
    for i in 0..n {
        for j in 0..i {
            sq_diff.extend(inputs[i].iter().zip(&inputs[j]).map(|(a, b)| (a - b) * (a - b)));
        }
    }
    let objective = Lml { kind: settings.kernel, dim, inputs, residual, sq_diff, fixed_noise };

    let n_params = dim + 1 + usize::from(fixed_noise.is_none());
    let (llo, lhi) = (libm::log(lo), libm::log(hi));
    let lower = vec![llo; n_params];
    let upper = vec![lhi; n_params];
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(settings.n_starts + 1);
    if let Some(w) = warm {
        if w.kernel.kind == settings.kernel && w.kernel.dim() == dim {
            let mut t: Vec<f64> = w.kernel.length_scales.iter().map(|l| libm::log(*l)).collect();
            t.push(libm::log(w.kernel.signal_variance));
            if fixed_noise.is_none() {
                t.push(libm::log(w.noise_variance.max(lo)));
            }
            starts.push(t);
        }
    }
    if n_params <= crate::sobol::MAX_DIM {
        let mut sobol = Sobol::starting_at(n_params, 1)?;
        for _ in 0..settings.n_starts {
            let u = sobol.next_point()?;
            starts.push(u.iter().map(|v| llo + v * (lhi - llo)).collect());
        }
    } else {
        starts.push(vec![0.0; n_params]);
    }

    let armijo = Armijo { initial_step: 1.0, ..Armijo::default() };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in &starts {
        let r = projected_ascent(&objective, start, &lower, &upper, settings.max_iters, &armijo, 1e-5);
        if r.value.is_finite() && best.as_ref().map_or(true, |(_, v)| r.value > *v) {
            best = Some((r.point, r.value));
        }
    }
    let (theta, _) = best.ok_or(Error::HyperparameterFit)?;
    let (kernel, noise) = objective.unpack(&theta);
    let model = PosteriorModel::fit(inputs.to_vec(), targets.to_vec(), kernel.clone(), mean.clone(), noise)?;
    let lml = model.log_marginal_likelihood();
    Ok(FittedModel { model, hyperparameters: Hyperparameters { kernel, mean, noise_variance: noise }, log_marginal_likelihood: lml })
}
