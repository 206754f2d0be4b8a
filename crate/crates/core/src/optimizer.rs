//! Multi-start projected gradient ascent over boxes.
//!
//! [`maximize`] screens Sobol' points of the unit cube, starts an Armijo
//! backtracking ascent from the best few, and returns the best point seen
//! anywhere. [`projected_ascent`] is also used to fit GP hyperparameters in
//! log space.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::sobol::Sobol;
use crate::{Error, Result};

/// Function to be maximized. Non-finite values mark infeasible points.
pub trait AscentObjective {
    fn value(&self, x: &[f64]) -> f64;

    /// Value and gradient; `None` means the gradient carries no information
    /// at `x` and the ascent stops there.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Option<Vec<f64>>);
}

/// Adapter turning a pair of closures into an [`AscentObjective`].
pub struct FnObjective<F, G> {
    pub f: F,
    pub grad: G,
}

impl<F, G> AscentObjective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Option<Vec<f64>>) {
        ((self.f)(x), Some((self.grad)(x)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Armijo {
    pub initial_step: f64,
    pub backtrack: f64,
    pub slope: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Armijo { initial_step: 0.5, backtrack: 0.5, slope: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Sobol' screening points; `None` means `512 * dim`.
    pub n_candidates: Option<usize>,
    pub n_starts: usize,
    pub max_iters: usize,
    pub armijo: Armijo,
    pub grad_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings { n_candidates: None, n_starts: 8, max_iters: 100, armijo: Armijo::default(), grad_tol: 1e-6 }
    }
}

impl OptimizerSettings {
    pub fn candidates_for(&self, dim: usize) -> usize {
        self.n_candidates.unwrap_or(512 * dim)
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.armijo;
        if self.n_starts == 0 || self.max_iters == 0 || self.n_candidates == Some(0) {
            return Err(Error::validation("optimizer counts must be positive"));
        }
        if let Some(n) = self.n_candidates {
            if self.n_starts > n {
                return Err(Error::validation("n_starts cannot exceed n_candidates"));
            }
        }
        if !(a.initial_step > 0.0 && a.backtrack > 0.0 && a.backtrack < 1.0 && a.slope > 0.0 && a.slope < 1.0) {
            return Err(Error::validation("armijo parameters need step > 0 and backtrack, slope in (0, 1)"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::validation("grad_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    libm::sqrt(v.map(|x| x * x).sum())
}

/// Projected gradient ascent with Armijo backtracking inside `[lower, upper]`.
///
/// Accepted iterates never decrease the objective. The step that succeeded
/// is doubled for the next iteration (capped at `1e3 * initial_step`).
pub fn projected_ascent<F: AscentObjective + ?Sized>(
    f: &F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    max_iters: usize,
    armijo: &Armijo,
    grad_tol: f64,
) -> AscentResult {
    let mut x = start.to_vec();
    project(&mut x, lower, upper);
    let (mut fx, mut grad) = f.value_and_gradient(&x);
    let max_step = armijo.initial_step * 1e3;
    let mut step = armijo.initial_step;
    let mut iterations = 0;
    let mut trial = x.clone();
    while iterations < max_iters && fx.is_finite() {
        let Some(g) = grad.as_ref() else { break };
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        let pg = norm(x.iter().zip(g).zip(lower.iter().zip(upper)).map(|((xi, gi), (lo, hi))| (xi + gi).clamp(*lo, *hi) - xi));
        if pg <= grad_tol {
            break;
        }
        let mut accepted = false;
        while step > 1e-16 {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(g) {
                *t = xi + step * gi;
            }
            project(&mut trial, lower, upper);
            let decrease: f64 = trial.iter().zip(&x).zip(g).map(|((t, xi), gi)| gi * (t - xi)).sum();
            let ft = f.value(&trial);
            if ft.is_finite() && ft >= fx + armijo.slope * decrease {
                accepted = true;
                break;
            }
            step *= armijo.backtrack;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        let (ft, gt) = f.value_and_gradient(&trial);
        if !(ft.is_finite() && ft >= fx) {
            break;
        }
        core::mem::swap(&mut x, &mut trial);
        fx = ft;
        grad = gt;
        step = (step * 2.0).min(max_step);
    }
    AscentResult { point: x, value: fx, iterations }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Every finite screening point and ascent end point, best first.
    pub candidates: Vec<Candidate>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sobol' index at which screening for `seed` starts.
pub fn screening_offset(seed: u64) -> u64 {
    splitmix64(seed) % (1 << 24)
}

/// Approximate global maximizer of `f` over the unit cube `[0, 1]^dim`.
pub fn maximize<F: AscentObjective + ?Sized>(
    f: &F,
    settings: &OptimizerSettings,
    dim: usize,
    seed: u64,
) -> Result<Maximum> {
    settings.validate()?;
    let n = settings.candidates_for(dim);
    let mut sobol = Sobol::starting_at(dim, screening_offset(seed))?;
    let mut candidates = Vec::with_capacity(n + settings.n_starts);
    for _ in 0..n {
        let point = sobol.next_point()?;
        let value = f.value(&point);
        if value.is_finite() {
            candidates.push(Candidate { point, value });
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoFiniteCandidate);
    }
    sort_desc(&mut candidates);
    let lower = alloc::vec![0.0; dim];
    let upper = alloc::vec![1.0; dim];
    let starts = settings.n_starts.min(candidates.len());
    for i in 0..starts {
        let start = candidates[i].clone();
        let r = projected_ascent(f, &start.point, &lower, &upper, settings.max_iters, &settings.armijo, settings.grad_tol);
        if r.value.is_finite() && r.value >= start.value && r.point != start.point {
            candidates.push(Candidate { point: r.point, value: r.value });
        }
    }
    sort_desc(&mut candidates);
    let best = candidates[0].clone();
    Ok(Maximum { point: best.point, value: best.value, candidates })
}

fn sort_desc(c: &mut [Candidate]) {
    c.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap_or(core::cmp::Ordering::Equal));
}

/// Worst relative disagreement between `grad` and central differences of
/// `f` with step `h`, over `points`. For each point the error is
/// `max_i |g_i − fd_i| / max(max_i |g_i|, max_i |fd_i|)`.
pub fn gradient_check<F, G>(f: F, grad: G, points: &[Vec<f64>], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut worst: f64 = 0.0;
    for p in points {
        let g = grad(p);
        let mut x = p.clone();
        let mut abs_err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..p.len() {
            x[i] = p[i] + h;
            let fp = f(&x);
            x[i] = p[i] - h;
            let fm = f(&x);
            x[i] = p[i];
            let fd = (fp - fm) / (2.0 * h);
            abs_err = abs_err.max((g[i] - fd).abs());
            scale = scale.max(g[i].abs()).max(fd.abs());
        }
        if scale > 0.0 {
            worst = worst.max(abs_err / scale);
        }
    }
    worst
}
