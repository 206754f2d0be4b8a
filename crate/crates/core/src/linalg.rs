//! Small dense linear algebra: row-major matrices, Cholesky factorization
//! and triangular solves. Sized for GP training sets of a few hundred points.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Order of the (square) matrix.
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += value;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular `L` with `L Lᵀ = a`, or `None` if `a` is not
/// numerically positive definite. Only the lower triangle of `a` is read.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.size();
    let mut l = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
            let dot: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
            let s = a[(i, j)] - dot;
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l.data[i * n + i] = libm::sqrt(s);
            } else {
                l.data[i * n + j] = s / l.data[j * n + j];
            }
        }
    }
    Some(l)
}

/// Factorizes `a + jitter·I`, escalating the jitter tenfold from `start`
/// until it exceeds `max`. Returns the factor and the jitter that worked.
pub fn cholesky_with_jitter(a: &Matrix, start: f64, max: f64) -> Option<(Matrix, f64)> {
    let mut jitter = start;
    while jitter <= max * (1.0 + 1e-9) {
        let mut m = a.clone();
        m.add_diagonal(jitter);
        if let Some(l) = cholesky(&m) {
            return Some((l, jitter));
        }
        jitter *= 10.0;
    }
    None
}

/// Solves `L x = b` in place.
pub fn solve_lower_in_place(l: &Matrix, b: &mut [f64]) {
    let n = l.size();
    for i in 0..n {
        let row = &l.data[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
        b[i] = (b[i] - s) / l.data[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
pub fn solve_upper_transposed_in_place(l: &Matrix, b: &mut [f64]) {
    let n = l.size();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l.data[k * n + i] * b[k];
        }
        b[i] = s / l.data[i * n + i];
    }
}

/// Solves `L Lᵀ x = b`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    solve_lower_in_place(l, &mut x);
    solve_upper_transposed_in_place(l, &mut x);
    x
}

/// `(L Lᵀ)⁻¹`, full symmetric matrix.
pub fn cholesky_inverse(l: &Matrix) -> Matrix {
    let n = l.size();
    // invert L column by column, then form L⁻ᵀ L⁻¹
    let mut linv = Matrix::zeros(n);
    for j in 0..n {
        linv.data[j * n + j] = 1.0 / l.data[j * n + j];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s += l.data[i * n + k] * linv.data[k * n + j];
            }
            linv.data[i * n + j] = -s / l.data[i * n + i];
        }
    }
    let mut inv = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..n {
                s += linv.data[k * n + i] * linv.data[k * n + j];
            }
            inv.data[i * n + j] = s;
            inv.data[j * n + i] = s;
        }
    }
    inv
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
