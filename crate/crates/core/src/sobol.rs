//! Sobol' low-discrepancy sequence in Gray-code order (Antonov–Saleev).
//!
//! Direction numbers are the first 22 dimensions of Joe & Kuo's
//! `new-joe-kuo-6.21201` table; dimension 1 is the van der Corput sequence.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Number of dimensions covered by the embedded direction table.
pub const MAX_DIM: usize = 22;

const BITS: usize = 32;

/// `(degree s, coefficient bits a, initial direction integers m_1..m_s)`
/// for dimensions 2..=22.
const JOE_KUO: [(u32, u32, &[u32]); MAX_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
    (7, 7, &[1, 1, 3, 13, 7, 35, 63]),
];

/// Direction integers `v_1..v_32` for one dimension, already shifted into
/// 32-bit fixed point.
fn directions(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim_index - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::SobolDimension(dim));
        }
        Ok(Sobol { directions: (0..dim).map(directions).collect(), state: vec![0; dim], index: 0 })
    }

    /// Generator positioned so that the next emitted point is point `index`.
    pub fn starting_at(dim: usize, index: u64) -> Result<Self> {
        let mut gen = Self::new(dim)?;
        gen.seek(index)?;
        Ok(gen)
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// Index of the next point to be emitted.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn seek(&mut self, index: u64) -> Result<()> {
        if index >= (1u64 << BITS) {
            return Err(Error::SequenceExhausted);
        }
        // the state after emitting point n-1 is the Gray-code combination of n-1
        let prev = index.saturating_sub(1);
        let gray = prev ^ (prev >> 1);
        for (x, v) in self.state.iter_mut().zip(&self.directions) {
            *x = (0..BITS).filter(|k| (gray >> k) & 1 == 1).fold(0, |acc, k| acc ^ v[k]);
        }
        self.index = index;
        Ok(())
    }

    fn advance(&mut self) -> Result<()> {
        if self.index >= (1u64 << BITS) - 1 {
            return Err(Error::SequenceExhausted);
        }
        if self.index > 0 {
            let c = (self.index - 1).trailing_ones() as usize;
            for (x, v) in self.state.iter_mut().zip(&self.directions) {
                *x ^= v[c];
            }
        }
        self.index += 1;
        Ok(())
    }

    /// Next point as raw 32-bit integers (coordinate = value / 2^32).
    pub fn next_raw(&mut self) -> Result<Vec<u32>> {
        self.advance()?;
        Ok(self.state.clone())
    }

    pub fn next_point(&mut self) -> Result<Vec<f64>> {
        const SCALE: f64 = 1.0 / 4_294_967_296.0;
        self.advance()?;
        Ok(self.state.iter().map(|&x| x as f64 * SCALE).collect())
    }

    pub fn generate(&mut self, n: usize) -> Result<Vec<Vec<f64>>> {
        (0..n).map(|_| self.next_point()).collect()
    }
}

/// Maximum absolute deviation between the empirical measure of `points` and
/// the volume, over all dyadic boxes `prod_i [j_i / 2^k_i, (j_i + 1) / 2^k_i)`
/// with `sum k_i <= floor(log2 n)` (capped at 12). Zero means every such box
/// holds exactly its share of points.
pub fn discrepancy_proxy(points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::validation("discrepancy proxy needs at least two points"));
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::validation("points must have at least one coordinate"));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        if p.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::validation("points must lie in the unit cube"));
        }
    }
    let n = points.len();
    let max_total = (usize::BITS - 1 - n.leading_zeros()).min(12) as usize;
    let mut levels = vec![0usize; dim];
    let mut worst: f64 = 0.0;
    let mut counts = Vec::new();
    loop {
        let total: usize = levels.iter().sum();
        if total <= max_total && total > 0 {
            let cells = 1usize << total;
            counts.clear();
            counts.resize(cells, 0u32);
            for p in points {
                let mut cell = 0usize;
                for (&u, &k) in p.iter().zip(&levels) {
                    let j = ((u * (1u64 << k) as f64) as usize).min((1 << k) - 1);
                    cell = (cell << k) | j;
                }
                counts[cell] += 1;
            }
            let volume = 1.0 / cells as f64;
            for &c in &counts {
                worst = worst.max((c as f64 / n as f64 - volume).abs());
            }
        }
        // odometer over level vectors with sum <= max_total
        let mut i = 0;
        loop {
            if i == dim {
                return Ok(worst);
            }
            levels[i] += 1;
            if levels.iter().sum::<usize>() <= max_total {
                break;
            }
            levels[i] = 0;
            i += 1;
        }
    }
}
