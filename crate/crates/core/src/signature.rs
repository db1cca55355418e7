//! Truncated tensor series and path signatures.
//!
//! Coefficients are stored densely, one vector per level, indexed by
//! [`Word::level_index`]. The signature of a piecewise-linear path is the
//! truncated product of the tensor exponentials of its increments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{norm, PiecewiseLinearPath};
use crate::words::Word;

/// Truncated map `Word -> R` over `d` letters up to depth `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorSeries {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
}

impl TensorSeries {
    pub fn zero(dim: usize, depth: usize) -> Self {
        let levels = (0..=depth).map(|k| vec![0.0; dim.pow(k as u32)]).collect();
        TensorSeries { dim, depth, levels }
    }

    /// The unit series: 1 on the empty word, 0 elsewhere.
    pub fn unit(dim: usize, depth: usize) -> Self {
        let mut s = TensorSeries::zero(dim, depth);
        s.levels[0][0] = 1.0;
        s
    }

    /// Truncated tensor exponential of a single vector: level `k` is `v^{⊗k} / k!`.
    pub fn exp_of(v: &[f64], depth: usize) -> Self {
        let dim = v.len();
        let mut levels = Vec::with_capacity(depth + 1);
        levels.push(vec![1.0]);
        for k in 1..=depth {
            let prev: &Vec<f64> = &levels[k - 1];
            let mut next = Vec::with_capacity(prev.len() * dim);
            for &p in prev {
                for &x in v {
                    next.push(p * x / k as f64);
                }
            }
            levels.push(next);
        }
        TensorSeries { dim, depth, levels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    /// Coefficient of `w`; zero beyond the truncation depth.
    pub fn coeff(&self, w: &Word) -> f64 {
        if w.len() > self.depth {
            return 0.0;
        }
        self.levels[w.len()][w.level_index(self.dim)]
    }

    pub fn set(&mut self, w: &Word, value: f64) {
        let i = w.level_index(self.dim);
        self.levels[w.len()][i] = value;
    }

    /// Iterates `(word, coefficient)` in length-then-lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        self.levels.iter().enumerate().flat_map(move |(k, lvl)| {
            lvl.iter()
                .enumerate()
                .map(move |(i, &c)| (Word::from_level_index(k, i, self.dim), c))
        })
    }

    /// Truncated tensor product `self ⊗ other`: `(a ⊗ b)_w = Σ_{w = uv} a_u b_v`.
    pub fn product(&self, other: &TensorSeries) -> Result<TensorSeries> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let depth = self.depth.min(other.depth);
        let mut out = TensorSeries::zero(self.dim, depth);
        for n in 0..=depth {
            let target = &mut out.levels[n];
            for i in 0..=n {
                let a = &self.levels[i];
                let b = &other.levels[n - i];
                let width = b.len();
                for (ia, &x) in a.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let row = &mut target[ia * width..(ia + 1) * width];
                    for (t, &y) in row.iter_mut().zip(b) {
                        *t += x * y;
                    }
                }
            }
        }
        Ok(out)
    }

    /// In-place right multiplication by `exp(v)`, without materialising the exponential.
    fn mul_exp_in_place(&mut self, v: &[f64]) {
        // Horner: level n of S ⊗ exp(v) is Σ_i S_i ⊗ v^{⊗(n-i)}/(n-i)!, built from the top down
        for n in (1..=self.depth).rev() {
            let mut acc = self.levels[0].clone();
            for i in 1..=n {
                let k = (n - i + 1) as f64;
                let mut next = Vec::with_capacity(acc.len() * self.dim);
                for &a in &acc {
                    for &x in v {
                        next.push(a * x / k);
                    }
                }
                for (nx, &s) in next.iter_mut().zip(&self.levels[i]) {
                    *nx += s;
                }
                acc = next;
            }
            self.levels[n] = acc;
        }
    }

    /// Inner product `Σ_w a_w b_w` over the common truncation.
    pub fn dot(&self, other: &TensorSeries) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    /// Largest coefficient deviation from `other`.
    pub fn max_abs_diff(&self, other: &TensorSeries) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Signature of a piecewise-linear path truncated at `depth`.
pub fn truncated_signature(path: &PiecewiseLinearPath, depth: usize) -> TensorSeries {
    let mut s = TensorSeries::unit(path.dim(), depth);
    for inc in path.increments() {
        s.mul_exp_in_place(inc);
    }
    s
}

/// A single signature coordinate `S^w(γ)`.
pub fn signature_coefficient(path: &PiecewiseLinearPath, w: &Word) -> Result<f64> {
    w.check_alphabet(path.dim())?;
    Ok(truncated_signature(path, w.len()).coeff(w))
}

/// Bound on `Σ_{|w| > depth} |S^w|²`-type tails through factorial decay:
/// `Σ_{n > depth} V^n / n!` with `V` the one-variation.
pub fn signature_tail_bound(path: &PiecewiseLinearPath, depth: usize) -> f64 {
    factorial_tail(path.one_variation(), depth)
}

/// `Σ_{n > depth} x^n / n!`.
pub(crate) fn factorial_tail(x: f64, depth: usize) -> f64 {
    let mut term = 1.0;
    for n in 1..=depth {
        term *= x / n as f64;
    }
    let mut sum = 0.0;
    for n in depth + 1..depth + 200 {
        term *= x / n as f64;
        sum += term;
        if term < 1e-300 || (term < sum * 1e-17 && n as f64 > x) {
            break;
        }
    }
    sum
}

/// Norm of a level: `(Σ_{|w| = k} S_w²)^{1/2}`.
pub fn level_norm(s: &TensorSeries, k: usize) -> f64 {
    norm(s.level(k))
}
