//! Piecewise-linear paths.
//!
//! Paths are always based at the origin: ingestion subtracts the first sample,
//! so absolute offsets are discarded and only increments are kept.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A based piecewise-linear path in `R^d`, stored as knots and per-segment increments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    dim: usize,
    knots: Vec<f64>,
    increments: Vec<Vec<f64>>,
}

impl PiecewiseLinearPath {
    /// Builds a path from explicit knots and increments. Zero increments are kept.
    pub fn new(dim: usize, knots: Vec<f64>, increments: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("path dimension must be at least 1"));
        }
        if knots.len() != increments.len() + 1 {
            return Err(Error::invalid(format!(
                "{} knots for {} increments",
                knots.len(),
                increments.len()
            )));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("knots must be finite"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("knots must be strictly increasing"));
        }
        for inc in &increments {
            if inc.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: inc.len(),
                });
            }
            if inc.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("increments must be finite"));
            }
        }
        Ok(PiecewiseLinearPath {
            dim,
            knots,
            increments,
        })
    }

    /// Path through the given increments on the uniform knots `0, 1, .., L`.
    pub fn from_increments(dim: usize, increments: Vec<Vec<f64>>) -> Result<Self> {
        let knots = (0..=increments.len()).map(|i| i as f64).collect();
        PiecewiseLinearPath::new(dim, knots, increments)
    }

    /// The path that never moves.
    pub fn constant(dim: usize) -> Self {
        PiecewiseLinearPath {
            dim,
            knots: vec![0.0],
            increments: Vec::new(),
        }
    }

    /// Straight line from the origin to `v` over `[0, 1]`.
    pub fn line(v: Vec<f64>) -> Self {
        let dim = v.len();
        PiecewiseLinearPath::new(dim, vec![0.0, 1.0], vec![v]).expect("valid line")
    }

    /// Ingests time-stamped samples, rebasing at the first point and dropping
    /// zero-length segments.
    pub fn from_samples(times: &[f64], points: &[Vec<f64>]) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::invalid(format!(
                "{} times for {} points",
                times.len(),
                points.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::invalid("a path needs at least 2 samples"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sample times must be strictly increasing"));
        }

        let mut knots = vec![times[0]];
        let mut increments = Vec::new();
        for i in 1..times.len() {
            let inc: Vec<f64> = (0..dim).map(|k| points[i][k] - points[i - 1][k]).collect();
            if inc.iter().all(|&x| x == 0.0) {
                // the next kept segment absorbs this interval
                continue;
            }
            knots.push(times[i]);
            increments.push(inc);
        }
        if increments.is_empty() {
            return Ok(PiecewiseLinearPath::constant(dim));
        }
        // a trailing degenerate interval stretches the last segment
        *knots.last_mut().unwrap() = *times.last().unwrap();
        PiecewiseLinearPath::new(dim, knots, increments)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn increments(&self) -> &[Vec<f64>] {
        &self.increments
    }

    /// Number of linear segments `L`.
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.knots[self.knots.len() - 1] - self.knots[0]
    }

    /// Points `γ_{t_0} = 0, γ_{t_1}, ..` at the knots.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.knots.len());
        let mut cur = vec![0.0; self.dim];
        out.push(cur.clone());
        for inc in &self.increments {
            for (c, x) in cur.iter_mut().zip(inc) {
                *c += x;
            }
            out.push(cur.clone());
        }
        out
    }

    /// Total increment `γ_T - γ_0`.
    pub fn displacement(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for inc in &self.increments {
            for (o, x) in out.iter_mut().zip(inc) {
                *o += x;
            }
        }
        out
    }

    /// `Σ_l ‖Δ_l‖`, the total one-variation.
    pub fn one_variation(&self) -> f64 {
        self.increments.iter().map(|inc| norm(inc)).sum()
    }

    /// `Σ_l Σ_ν |Δ_l^ν|`, the one-variation measured in the l1 norm.
    pub fn l1_variation(&self) -> f64 {
        self.increments
            .iter()
            .flat_map(|inc| inc.iter())
            .map(|x| x.abs())
            .sum()
    }

    /// Increments of `self` followed by those of `other`, reparameterised onto `[0, 1]`
    /// in proportion to the original durations.
    pub fn concatenate(&self, other: &PiecewiseLinearPath) -> Result<PiecewiseLinearPath> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut increments = self.increments.clone();
        increments.extend(other.increments.iter().cloned());
        if increments.is_empty() {
            return Ok(PiecewiseLinearPath::constant(self.dim));
        }
        let (da, db) = (self.duration(), other.duration());
        let total = da + db;
        let mut knots = Vec::with_capacity(increments.len() + 1);
        knots.push(0.0);
        for t in &self.knots[1..] {
            knots.push((t - self.knots[0]) / total);
        }
        for t in &other.knots[1..] {
            knots.push((da + t - other.knots[0]) / total);
        }
        *knots.last_mut().unwrap() = 1.0;
        PiecewiseLinearPath::new(self.dim, knots, increments)
    }

    /// The path run backwards: increments negated and in reverse order.
    pub fn reverse(&self) -> PiecewiseLinearPath {
        let t0 = self.knots[0];
        let tl = self.knots[self.knots.len() - 1];
        let knots = self.knots.iter().rev().map(|t| t0 + (tl - t)).collect();
        let increments = self
            .increments
            .iter()
            .rev()
            .map(|inc| inc.iter().map(|x| -x).collect())
            .collect();
        PiecewiseLinearPath {
            dim: self.dim,
            knots,
            increments,
        }
    }

    /// Splits segment `l` at fraction `frac` without changing the geometry.
    pub fn split_segment(&self, l: usize, frac: f64) -> Result<PiecewiseLinearPath> {
        if l >= self.len() || !(frac > 0.0 && frac < 1.0) {
            return Err(Error::invalid("split point outside the segment interior"));
        }
        let mut knots = self.knots.clone();
        let mut increments = self.increments.clone();
        let t = knots[l] + frac * (knots[l + 1] - knots[l]);
        knots.insert(l + 1, t);
        let whole = increments[l].clone();
        increments[l] = whole.iter().map(|x| x * frac).collect();
        increments.insert(l + 1, whole.iter().map(|x| x * (1.0 - frac)).collect());
        PiecewiseLinearPath::new(self.dim, knots, increments)
    }

    /// Refinement of the knots: every segment is cut into `ceil(duration / h)` equal
    /// cells. Returns the grid times and the increment over each cell.
    pub fn refine(&self, h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        assert!(h > 0.0, "grid spacing must be positive");
        let mut times = vec![self.knots[0]];
        let mut cells = Vec::new();
        for (l, inc) in self.increments.iter().enumerate() {
            let (a, b) = (self.knots[l], self.knots[l + 1]);
            let pieces = (((b - a) / h).ceil() as usize).max(1);
            let cell: Vec<f64> = inc.iter().map(|x| x / pieces as f64).collect();
            for p in 1..=pieces {
                times.push(a + (b - a) * p as f64 / pieces as f64);
                cells.push(cell.clone());
            }
        }
        (times, cells)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_rebased() {
        let p = PiecewiseLinearPath::from_samples(&[0.0, 1.0], &[vec![3.0], vec![4.0]]).unwrap();
        assert_eq!(p.increments(), &[vec![1.0]]);
        assert_eq!(p.points()[0], vec![0.0]);
    }

    #[test]
    fn two_dimensional_samples() {
        let p = PiecewiseLinearPath::from_samples(
            &[0.0, 1.0, 2.0],
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        )
        .unwrap();
        assert_eq!(p.increments(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn degenerate_segments_dropped() {
        let p = PiecewiseLinearPath::from_samples(
            &[0.0, 1.0, 2.0],
            &[vec![0.0], vec![0.0], vec![1.0]],
        )
        .unwrap();
        assert_eq!(p.increments(), &[vec![1.0]]);
        assert_eq!(p.knots(), &[0.0, 2.0]);

        let c = PiecewiseLinearPath::from_samples(&[0.0, 1.0], &[vec![2.0], vec![2.0]]).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.one_variation(), 0.0);
    }

    #[test]
    fn ingestion_errors() {
        assert!(PiecewiseLinearPath::from_samples(&[0.0], &[vec![0.0]]).is_err());
        assert!(
            PiecewiseLinearPath::from_samples(&[0.0, 0.0], &[vec![0.0], vec![1.0]]).is_err()
        );
        assert!(matches!(
            PiecewiseLinearPath::from_samples(&[0.0, 1.0], &[vec![0.0], vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn concatenate_and_reverse() {
        let a = PiecewiseLinearPath::line(vec![1.0]);
        let b = PiecewiseLinearPath::line(vec![2.0]);
        let ab = a.concatenate(&b).unwrap();
        assert_eq!(ab.increments(), &[vec![1.0], vec![2.0]]);
        assert_eq!(ab.knots(), &[0.0, 0.5, 1.0]);

        let two = PiecewiseLinearPath::from_increments(1, vec![vec![1.0], vec![2.0]]).unwrap();
        let three =
            PiecewiseLinearPath::from_increments(1, vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(two.concatenate(&three).unwrap().len(), 5);

        let r = PiecewiseLinearPath::line(vec![1.0, 2.0]).reverse();
        assert_eq!(r.increments(), &[vec![-1.0, -2.0]]);
        assert_eq!(three.reverse().reverse(), three);

        let e = PiecewiseLinearPath::line(vec![1.0, 2.0]);
        assert!(e.concatenate(&a).is_err());
    }

    #[test]
    fn variation() {
        assert_eq!(PiecewiseLinearPath::line(vec![3.0, 4.0]).one_variation(), 5.0);
        let p = PiecewiseLinearPath::from_increments(1, vec![vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(p.one_variation(), 2.0);
        let a = PiecewiseLinearPath::line(vec![3.0, 4.0]);
        let b = PiecewiseLinearPath::from_increments(2, vec![vec![1.0, 0.0], vec![0.0, -2.0]])
            .unwrap();
        let ab = a.concatenate(&b).unwrap();
        assert!((ab.one_variation() - (a.one_variation() + b.one_variation())).abs() < 1e-15);
    }

    #[test]
    fn refinement_includes_knots() {
        let p = PiecewiseLinearPath::new(1, vec![0.0, 0.3, 1.0], vec![vec![1.0], vec![2.0]])
            .unwrap();
        let (times, cells) = p.refine(0.25);
        assert!(times.iter().any(|&t| (t - 0.3).abs() < 1e-15));
        assert_eq!(times.len(), cells.len() + 1);
        let total: f64 = cells.iter().map(|c| c[0]).sum();
        assert!((total - 3.0).abs() < 1e-12);
    }
}
