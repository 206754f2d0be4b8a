//! Acquisition functions on a fitted posterior, written for maximization.
//!
//! EI, PI and UCB come with closed-form input gradients built from the
//! posterior mean/std gradients. q-EI is estimated by Monte Carlo with
//! per-coordinate random streams, so adding a point to a candidate set reuses
//! the samples already drawn for the others.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::gp::PosteriorModel;
use crate::linalg::{self, Matrix};
use crate::normal;
use crate::optimizer::AscentObjective;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcquisitionKind {
    Ei,
    Pi,
    Ucb { kappa: f64 },
    /// Monte-Carlo q-EI; the sequential loop evaluates it with `q = 1`.
    QEi { q: usize, mc_samples: usize },
}

impl Default for AcquisitionKind {
    fn default() -> Self {
        AcquisitionKind::Ucb { kappa: 2.0 }
    }
}

impl AcquisitionKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AcquisitionKind::Ucb { kappa } if !(kappa >= 0.0 && kappa.is_finite()) => {
                Err(Error::validation("UCB kappa must be finite and non-negative"))
            }
            AcquisitionKind::QEi { q, mc_samples } if q == 0 || mc_samples == 0 => {
                Err(Error::validation("q-EI needs q >= 1 and mc_samples >= 1"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Maximize,
    Minimize,
}

impl Orientation {
    /// Multiplier taking objective values to the maximization scale.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Maximize => 1.0,
            Orientation::Minimize => -1.0,
        }
    }
}

/// Acquisition configured against one fitted model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Best observed value on the model's scale.
    pub incumbent: f64,
    pub seed: u64,
}

fn check(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::validation("acquisition inputs must not be NaN"));
    }
    Ok(())
}

/// Expected improvement `(μ − f*) Φ(z) + σ φ(z)`, `z = (μ − f*) / σ`.
pub fn ei(mu: f64, sigma: f64, f_best: f64) -> Result<f64> {
    check(&[mu, sigma, f_best])?;
    if sigma < 0.0 {
        return Err(Error::validation("standard deviation must be non-negative"));
    }
    let diff = mu - f_best;
    if sigma == 0.0 {
        return Ok(diff.max(0.0));
    }
    let z = diff / sigma;
    Ok((diff * normal::cdf(z) + sigma * normal::pdf(z)).max(0.0))
}

/// Probability of improvement `Φ((μ − f*) / σ)`.
pub fn pi(mu: f64, sigma: f64, f_best: f64) -> Result<f64> {
    check(&[mu, sigma, f_best])?;
    if sigma < 0.0 {
        return Err(Error::validation("standard deviation must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(if mu > f_best { 1.0 } else { 0.0 });
    }
    Ok(normal::cdf((mu - f_best) / sigma))
}

pub fn ucb(mu: f64, sigma: f64, kappa: f64) -> Result<f64> {
    check(&[mu, sigma, kappa])?;
    if kappa < 0.0 {
        return Err(Error::validation("kappa must be non-negative"));
    }
    Ok(mu + kappa * sigma)
}

/// Gradient of an acquisition at a point. `defined` is false where the
/// posterior std has collapsed; `values` is then all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct AcqGradient {
    pub values: Vec<f64>,
    pub defined: bool,
}

impl AcqGradient {
    fn flagged(dim: usize) -> Self {
        AcqGradient { values: alloc::vec![0.0; dim], defined: false }
    }
}

/// `∇EI = Φ(z) ∇μ + φ(z) ∇σ`.
pub fn ei_gradient(model: &PosteriorModel, x: &[f64], f_best: f64) -> Result<AcqGradient> {
    let (p, g) = model.predict_with_gradient(x)?;
    if !g.std_defined {
        return Ok(AcqGradient::flagged(x.len()));
    }
    let z = (p.mean - f_best) / p.std;
    let (cdf, pdf) = (normal::cdf(z), normal::pdf(z));
    let values = g.mean.iter().zip(&g.std).map(|(m, s)| cdf * m + pdf * s).collect();
    Ok(AcqGradient { values, defined: true })
}

/// `∇PI = φ(z) (∇μ − z ∇σ) / σ`.
pub fn pi_gradient(model: &PosteriorModel, x: &[f64], f_best: f64) -> Result<AcqGradient> {
    let (p, g) = model.predict_with_gradient(x)?;
    if !g.std_defined {
        return Ok(AcqGradient::flagged(x.len()));
    }
    let z = (p.mean - f_best) / p.std;
    let pdf = normal::pdf(z);
    let values = g.mean.iter().zip(&g.std).map(|(m, s)| pdf * (m - z * s) / p.std).collect();
    Ok(AcqGradient { values, defined: true })
}

/// `∇UCB = ∇μ + κ ∇σ`. With `κ = 0` the gradient is `∇μ` everywhere.
pub fn ucb_gradient(model: &PosteriorModel, x: &[f64], kappa: f64) -> Result<AcqGradient> {
    let (_, g) = model.predict_with_gradient(x)?;
    if kappa == 0.0 {
        return Ok(AcqGradient { values: g.mean, defined: true });
    }
    if !g.std_defined {
        return Ok(AcqGradient::flagged(x.len()));
    }
    let values = g.mean.iter().zip(&g.std).map(|(m, s)| m + kappa * s).collect();
    Ok(AcqGradient { values, defined: true })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `mc_samples` standard normals from stream `stream` of `seed` (Box–Muller).
fn normals(seed: u64, stream: u64, count: usize) -> Vec<f64> {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let u1 = 1.0 - (rng.next_u64() >> 11) as f64 * SCALE;
        let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let t = 2.0 * core::f64::consts::PI * u2;
        out.push(r * libm::cos(t));
        out.push(r * libm::sin(t));
    }
    out.truncate(count);
    out
}

/// Monte-Carlo q-EI `E[max(max_i f(x_i) − f*, 0)]` over the joint posterior
/// at `points`. Coordinate `i` always draws from random stream `i`, so the
/// estimate for a set is computed from the same samples as for any prefix.
pub fn qei_mc(model: &PosteriorModel, points: &[Vec<f64>], f_best: f64, mc_samples: usize, seed: u64) -> Result<McEstimate> {
    if points.is_empty() || mc_samples == 0 {
        return Err(Error::validation("q-EI needs at least one point and one sample"));
    }
    check(&[f_best])?;
    for p in points {
        if p.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::validation("q-EI points must lie in the unit cube"));
        }
    }
    let (means, cov) = model.joint_posterior(points)?;
    let (chol, _) = linalg::cholesky_with_jitter(&symmetrize(cov), 1e-10, 1e-6).ok_or(Error::QeiCovariance)?;
    let q = points.len();
    let z: Vec<Vec<f64>> = (0..q).map(|i| normals(seed, i as u64, mc_samples)).collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut y = alloc::vec![0.0; q];
    for s in 0..mc_samples {
        let mut best = f64::NEG_INFINITY;
        for i in 0..q {
            let row = chol.row(i);
            let mut v = means[i];
            for k in 0..=i {
                v += row[k] * z[k][s];
            }
            y[i] = v;
            best = best.max(v);
        }
        let imp = (best - f_best).max(0.0);
        sum += imp;
        sum_sq += imp * imp;
    }
    let m = mc_samples as f64;
    let mean = sum / m;
    let var = if mc_samples > 1 { ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate { value: mean, std_error: libm::sqrt(var / m) })
}

fn symmetrize(mut m: Matrix) -> Matrix {
    let n = m.size();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// An acquisition bound to a model, ready for [`crate::optimizer::maximize`].
pub struct AcquisitionSurface<'a> {
    pub model: &'a PosteriorModel,
    pub spec: AcquisitionSpec,
}

impl AcquisitionSurface<'_> {
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let f_best = self.spec.incumbent;
        match self.spec.kind {
            AcquisitionKind::QEi { mc_samples, .. } => {
                Ok(qei_mc(self.model, &[x.to_vec()], f_best, mc_samples, self.spec.seed)?.value)
            }
            kind => {
                let p = self.model.posterior(x)?;
                match kind {
                    AcquisitionKind::Ei => ei(p.mean, p.std, f_best),
                    AcquisitionKind::Pi => pi(p.mean, p.std, f_best),
                    AcquisitionKind::Ucb { kappa } => ucb(p.mean, p.std, kappa),
                    AcquisitionKind::QEi { .. } => unreachable!(),
                }
            }
        }
    }
}

impl AscentObjective for AcquisitionSurface<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x).unwrap_or(f64::NAN)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Option<Vec<f64>>) {
        let f_best = self.spec.incumbent;
        let Ok((p, g)) = self.model.predict_with_gradient(x) else {
            return (f64::NAN, None);
        };
        let z = if p.std > 0.0 { (p.mean - f_best) / p.std } else { 0.0 };
        let result = match self.spec.kind {
            AcquisitionKind::Ucb { kappa } => {
                let v = ucb(p.mean, p.std, kappa);
                let grad = (kappa == 0.0 || g.std_defined)
                    .then(|| g.mean.iter().zip(&g.std).map(|(m, s)| m + kappa * s).collect());
                v.map(|v| (v, grad))
            }
            AcquisitionKind::Ei => {
                let (cdf, pdf) = (normal::cdf(z), normal::pdf(z));
                let grad = g.std_defined.then(|| g.mean.iter().zip(&g.std).map(|(m, s)| cdf * m + pdf * s).collect());
                ei(p.mean, p.std, f_best).map(|v| (v, grad))
            }
            AcquisitionKind::Pi => {
                let pdf = normal::pdf(z);
                let grad =
                    g.std_defined.then(|| g.mean.iter().zip(&g.std).map(|(m, s)| pdf * (m - z * s) / p.std).collect());
                pi(p.mean, p.std, f_best).map(|v| (v, grad))
            }
            AcquisitionKind::QEi { .. } => Ok((self.value(x), None)),
        };
        result.unwrap_or((f64::NAN, None))
    }
}
