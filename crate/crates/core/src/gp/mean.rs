use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky_with_jitter, cholesky_solve, Matrix};
use crate::{Error, Result};

/// Polynomial features `Ψ_i(x)` for the parametric mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `x_1, ..., x_d`
    Linear,
    /// `x_1, ..., x_d, x_1², ..., x_d²`
    Quadratic,
}

impl Basis {
    pub fn len(self, dim: usize) -> usize {
        match self {
            Basis::Linear => dim,
            Basis::Quadratic => 2 * dim,
        }
    }

    fn features(self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(x);
        if self == Basis::Quadratic {
            out.extend(x.iter().map(|v| v * v));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    #[default]
    Constant,
    Parametric(Basis),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanFunction {
    Constant { value: f64 },
    /// `μ + Σ β_i Ψ_i(x)`
    Parametric { constant: f64, betas: Vec<f64>, basis: Basis },
}

impl MeanFunction {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            MeanFunction::Constant { value } if value.is_finite() => Ok(()),
            MeanFunction::Parametric { constant, betas, basis }
                if constant.is_finite() && betas.iter().all(|b| b.is_finite()) =>
            {
                if betas.len() == basis.len(dim) {
                    Ok(())
                } else {
                    Err(Error::validation("parametric mean: coefficient count does not match basis"))
                }
            }
            _ => Err(Error::validation("mean function coefficients must be finite")),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            MeanFunction::Constant { value } => *value,
            MeanFunction::Parametric { constant, betas, basis } => {
                let mut f = Vec::new();
                basis.features(x, &mut f);
                constant + f.iter().zip(betas).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    /// Adds `∇m(x)` to `out`.
    pub fn accumulate_gradient(&self, x: &[f64], out: &mut [f64]) {
        if let MeanFunction::Parametric { betas, basis, .. } = self {
            let d = x.len();
            for i in 0..d {
                out[i] += betas[i];
                if *basis == Basis::Quadratic {
                    out[i] += 2.0 * betas[d + i] * x[i];
                }
            }
        }
    }

    /// Least-squares estimate of the mean from data: the sample mean for
    /// [`MeanKind::Constant`], ordinary least squares on `[1, Ψ(x)]` for the
    /// parametric form (falling back to a constant when underdetermined).
    pub fn estimate(kind: MeanKind, inputs: &[Vec<f64>], targets: &[f64]) -> MeanFunction {
        let n = targets.len();
        let sample_mean = if n == 0 { 0.0 } else { targets.iter().sum::<f64>() / n as f64 };
        let MeanKind::Parametric(basis) = kind else {
            return MeanFunction::Constant { value: sample_mean };
        };
        let dim = inputs.first().map_or(0, Vec::len);
        let p = basis.len(dim) + 1;
        if n <= p {
            return MeanFunction::Constant { value: sample_mean };
        }
        let mut gram = Matrix::zeros(p);
        let mut rhs = vec![0.0; p];
        let mut row = Vec::with_capacity(p);
        let mut feats = Vec::new();
        for (x, &y) in inputs.iter().zip(targets) {
            basis.features(x, &mut feats);
            row.clear();
            row.push(1.0);
            row.extend_from_slice(&feats);
            for i in 0..p {
                rhs[i] += row[i] * y;
                for j in 0..p {
                    gram[(i, j)] += row[i] * row[j];
                }
            }
        }
        match cholesky_with_jitter(&gram, 1e-10, 1e-4) {
            Some((l, _)) => {
                let coef = cholesky_solve(&l, &rhs);
                MeanFunction::Parametric { constant: coef[0], betas: coef[1..].to_vec(), basis }
            }
            None => MeanFunction::Constant { value: sample_mean },
        }
    }
}
