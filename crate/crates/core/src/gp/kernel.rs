use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rbf,
    Matern12,
    Matern32,
    #[default]
    Matern52,
}

/// Stationary covariance with one length-scale per input dimension and a
/// signal variance (amplitude).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
}

impl Kernel {
    pub fn new(kind: KernelKind, length_scales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        let k = Kernel { kind, length_scales, signal_variance };
        k.validate()?;
        Ok(k)
    }

    pub fn isotropic(kind: KernelKind, dim: usize, length_scale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(kind, alloc::vec![length_scale; dim], signal_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_scales.is_empty() {
            return Err(Error::validation("kernel needs at least one length-scale"));
        }
        if self.length_scales.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::validation("length-scales must be positive and finite"));
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::validation("signal variance must be positive and finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    /// Checked covariance between two points.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        for p in [x, y] {
            if p.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
            }
        }
        Ok(self.cov(x, y))
    }

    pub(crate) fn scaled_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for ((a, b), l) in x.iter().zip(y).zip(&self.length_scales) {
            let t = (a - b) / l;
            r2 += t * t;
        }
        libm::sqrt(r2)
    }

    pub(crate) fn cov(&self, x: &[f64], y: &[f64]) -> f64 {
        self.profile(self.scaled_distance(x, y)).0
    }

    /// `(k(r), k'(r) / r)` for scaled distance `r`. The second term is what
    /// every input and length-scale derivative is built from; for the
    /// non-differentiable Matérn 1/2 it is taken as zero at `r = 0`.
    pub(crate) fn profile(&self, r: f64) -> (f64, f64) {
        let s = self.signal_variance;
        match self.kind {
            KernelKind::Rbf => {
                let k = s * libm::exp(-0.5 * r * r);
                (k, -k)
            }
            KernelKind::Matern12 => {
                let k = s * libm::exp(-r);
                (k, if r > 0.0 { -k / r } else { 0.0 })
            }
            KernelKind::Matern32 => {
                let e = libm::exp(-SQRT3 * r);
                (s * (1.0 + SQRT3 * r) * e, -3.0 * s * e)
            }
            KernelKind::Matern52 => {
                let e = libm::exp(-SQRT5 * r);
                let k = s * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * e;
                (k, -5.0 / 3.0 * s * (1.0 + SQRT5 * r) * e)
            }
        }
    }

    /// Adds `weight * ∂k(x, y)/∂x` to `out`.
    pub(crate) fn accumulate_grad_x(&self, x: &[f64], y: &[f64], weight: f64, out: &mut [f64]) {
        let r = self.scaled_distance(x, y);
        let (_, h) = self.profile(r);
        if h == 0.0 {
            return;
        }
        for (d, o) in out.iter_mut().enumerate() {
            let l = self.length_scales[d];
            *o += weight * h * (x[d] - y[d]) / (l * l);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn reference_values() {
        let rbf = Kernel::isotropic(KernelKind::Rbf, 2, 1.0, 1.0).unwrap();
        assert_eq!(rbf.eval(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 1.0);
        let v = rbf.eval(&[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert!((v - 0.606_530_659_712_633_4).abs() < 1e-15);
        let m12 = Kernel::isotropic(KernelKind::Matern12, 1, 1.0, 1.0).unwrap();
        assert!((m12.eval(&[0.0], &[1.0]).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        for kind in [KernelKind::Matern32, KernelKind::Matern52] {
            let k = Kernel::isotropic(kind, 3, 0.7, 2.5).unwrap();
            assert_eq!(k.eval(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]).unwrap(), 2.5);
        }
    }

    #[test]
    fn matern_closed_forms() {
        let r: f64 = 0.8;
        let m32 = Kernel::isotropic(KernelKind::Matern32, 1, 1.0, 1.0).unwrap();
        let m52 = Kernel::isotropic(KernelKind::Matern52, 1, 1.0, 1.0).unwrap();
        let s3 = 3f64.sqrt();
        let s5 = 5f64.sqrt();
        assert!((m32.cov(&[0.0], &[r]) - (1.0 + s3 * r) * (-s3 * r).exp()).abs() < 1e-15);
        assert!((m52.cov(&[0.0], &[r]) - (1.0 + s5 * r + 5.0 * r * r / 3.0) * (-s5 * r).exp()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_and_anisotropic() {
        let k = Kernel::new(KernelKind::Matern52, vec![0.2, 5.0], 1.3).unwrap();
        let (a, b) = ([0.1, 0.9], [0.4, 0.2]);
        assert_eq!(k.cov(&a, &b), k.cov(&b, &a));
        // the long length-scale makes the second coordinate nearly irrelevant
        assert!((k.cov(&a, &b) - k.cov(&[0.1, 0.9], &[0.4, 0.9])).abs() < 2e-2);
    }

    #[test]
    fn matern52_tracks_rbf_at_short_range() {
        for &d in &[0.0, 0.01, 0.03, 0.05] {
            let rbf = Kernel::isotropic(KernelKind::Rbf, 1, 1.0, 1.0).unwrap().cov(&[0.0], &[d]);
            let m52 = Kernel::isotropic(KernelKind::Matern52, 1, 1.0, 1.0).unwrap().cov(&[0.0], &[d]);
            assert!((rbf - m52).abs() <= 0.02 * rbf);
        }
    }

    #[test]
    fn input_gradient_matches_differences() {
        for kind in [KernelKind::Rbf, KernelKind::Matern12, KernelKind::Matern32, KernelKind::Matern52] {
            let k = Kernel::new(kind, vec![0.3, 0.7], 1.7).unwrap();
            let (x, y) = ([0.2, 0.6], [0.5, 0.1]);
            let mut g = [0.0; 2];
            k.accumulate_grad_x(&x, &y, 1.0, &mut g);
            for d in 0..2 {
                let h = 1e-6;
                let (mut xp, mut xm) = (x, x);
                xp[d] += h;
                xm[d] -= h;
                let fd = (k.cov(&xp, &y) - k.cov(&xm, &y)) / (2.0 * h);
                assert!((fd - g[d]).abs() < 1e-7, "{kind:?} d={d}: {fd} vs {}", g[d]);
            }
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(Kernel::new(KernelKind::Rbf, vec![], 1.0).is_err());
        assert!(Kernel::new(KernelKind::Rbf, vec![0.0], 1.0).is_err());
        assert!(Kernel::new(KernelKind::Rbf, vec![1.0], -1.0).is_err());
        let k = Kernel::isotropic(KernelKind::Rbf, 2, 1.0, 1.0).unwrap();
        assert!(k.eval(&[0.0], &[0.0, 1.0]).is_err());
    }
}
