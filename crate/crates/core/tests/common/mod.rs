#![allow(dead_code, clippy::needless_range_loop)]

use bayesopt_core::gp::{Kernel, KernelKind, MeanFunction, PosteriorModel};
use rand::rngs::StdRng;
use rand::Rng;

pub const KINDS: [KernelKind; 4] = [KernelKind::Rbf, KernelKind::Matern12, KernelKind::Matern32, KernelKind::Matern52];

/// Noise-free observations of a random smooth function: a sum of three
/// sinusoids with at most one period across the unit cube.
pub fn smooth_targets(rng: &mut StdRng, xs: &[Vec<f64>]) -> Vec<f64> {
    let d = xs[0].len();
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..3)
        .map(|_| {
            let w = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            (rng.random_range(-1.0..1.0), w, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    xs.iter()
        .map(|x| {
            terms
                .iter()
                .map(|(a, w, b)| a * (std::f64::consts::TAU * w.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + b).sin())
                .sum()
        })
        .collect()
}

pub struct Case {
    pub model: PosteriorModel,
    pub kind: KernelKind,
    pub ls: Vec<f64>,
    pub sf2: f64,
}

pub fn random_case(rng: &mut StdRng, noise: f64) -> Case {
    let d = rng.random_range(1..=4);
    random_case_in(rng, d, noise)
}

/// Random kernel and smooth data in dimension `d`.
pub fn random_case_in(rng: &mut StdRng, d: usize, noise: f64) -> Case {
    let n = rng.random_range(1..=12);
    let kind = KINDS[rng.random_range(0..4)];
    let ls: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..0.5)).collect();
    let sf2 = rng.random_range(0.5..2.0);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let ys = smooth_targets(rng, &xs);
    let kernel = Kernel::new(kind, ls.clone(), sf2).unwrap();
    let model = PosteriorModel::fit(xs, ys, kernel, MeanFunction::Constant { value: 0.0 }, noise).unwrap();
    Case { model, kind, ls, sf2 }
}

/// `max (|g − fd| − δ)⁺ / max(|g|, |fd|, 1e-6)`, where `fd` is a five-point
/// stencil with the step picked from `1e-2, 1e-2.5, …, 1e-7` as the one
/// whose estimate agrees best with the next smaller step, and `δ` is twice
/// that disagreement: the oracle cannot vouch for digits it does not resolve. A fixed step
/// cannot serve both regimes met here: near the data sigma carries ~1e-10
/// of roundoff (favouring long steps) while EI can vary on the scale of
/// sigma/|grad mu| (favouring short ones). The floor keeps exactly flat
/// directions from counting as failures.
pub fn fd_error(f: impl Fn(&[f64]) -> f64, g: &[f64], x: &[f64]) -> f64 {
    let mut err: f64 = 0.0;
    let mut scale: f64 = 1e-6;
    for i in 0..x.len() {
        let stencil = |h: f64| {
            let at = |t: f64| {
                let mut p = x.to_vec();
                p[i] += t * h;
                f(&p)
            };
            (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h)
        };
        let est: Vec<f64> = (0..=10).map(|k| stencil(10f64.powf(-2.0 - 0.5 * k as f64))).collect();
        // a step too short for f to change at all yields 0 == 0, which is
        // not agreement
        let spread = |k: usize| {
            if est[k] == 0.0 && est[k + 1] == 0.0 { f64::INFINITY } else { (est[k] - est[k + 1]).abs() }
        };
        let k = (0..10).min_by(|&a, &b| spread(a).total_cmp(&spread(b))).unwrap();
        let fd = if spread(k).is_finite() { est[k + 1] } else { 0.0 };
        err = err.max((g[i] - fd).abs() - 2.0 * (est[k] - fd).abs());
        scale = scale.max(g[i].abs()).max(fd.abs());
    }
    err / scale
}

/// Closed-form kernel values, written out independently of the library.
pub fn kernel_oracle(kind: KernelKind, ls: &[f64], sf2: f64, x: &[f64], y: &[f64]) -> f64 {
    let r = x.iter().zip(y).zip(ls).map(|((a, b), l)| ((a - b) / l).powi(2)).sum::<f64>().sqrt();
    match kind {
        KernelKind::Rbf => sf2 * (-0.5 * r * r).exp(),
        KernelKind::Matern12 => sf2 * (-r).exp(),
        KernelKind::Matern32 => sf2 * (1.0 + 3f64.sqrt() * r) * (-(3f64.sqrt()) * r).exp(),
        KernelKind::Matern52 => sf2 * (1.0 + 5f64.sqrt() * r + 5.0 * r * r / 3.0) * (-(5f64.sqrt()) * r).exp(),
    }
}

/// Solves `a x = b` by Gauss–Jordan elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

/// Posterior mean and variance from an explicit dense solve.
pub fn dense_posterior(c: &Case, x: &[f64]) -> (f64, f64) {
    let xs = c.model.inputs();
    let n = xs.len();
    let diag = c.model.noise_variance() + c.model.jitter();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| kernel_oracle(c.kind, &c.ls, c.sf2, &xs[i], &xs[j]) + if i == j { diag } else { 0.0 })
                .collect()
        })
        .collect();
    let kx: Vec<f64> = xs.iter().map(|xi| kernel_oracle(c.kind, &c.ls, c.sf2, x, xi)).collect();
    let alpha = dense_solve(k.clone(), c.model.targets().to_vec());
    let w = dense_solve(k, kx.clone());
    let mean = kx.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let var = c.sf2 - kx.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    (mean, var.max(0.0))
}

/// Joe–Kuo parameters `(s, a, m)` for dimensions 2..=6.
pub const PARAMS: [(u32, u32, &[u64]); 5] =
    [(1, 0, &[1]), (2, 1, &[1, 3]), (3, 1, &[1, 3, 1]), (3, 2, &[1, 1, 1]), (4, 1, &[1, 1, 3, 3])];

/// Direction integers through the m-space recurrence
/// `m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}`.
pub fn m_space_directions(s: u32, a: u32, m0: &[u64]) -> Vec<u64> {
    let s = s as usize;
    let mut m = m0.to_vec();
    for k in s..32 {
        let mut x = (m[k - s] << s) ^ m[k - s];
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= m[k - j] << j;
            }
        }
        m.push(x);
    }
    // v_k = m_k / 2^k in 32-bit fixed point.
    m.iter().enumerate().map(|(k, mk)| mk << (31 - k)).collect()
}

/// Point `n` directly from the Gray code of `n`, without the recurrence.
pub fn direct_point(v: &[u64], n: u64) -> u32 {
    let g = n ^ (n >> 1);
    (0..32).filter(|k| (g >> k) & 1 == 1).fold(0u64, |x, k| x ^ v[k]) as u32
}
