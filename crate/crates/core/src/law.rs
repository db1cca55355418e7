//! Limiting non-commutative laws of matrix models.
//!
//! A potential `V = ½ Σ X_i² + Σ_j g_j X_{v_j}` determines a tracial law
//! `τ_V` through the Schwinger–Dyson relations. At the coefficient level these
//! read, for every word `w` and letter `k`,
//!
//! ```text
//! a_{wk} = Σ_{w = u k v} a_u a_v − Σ_j g_j Σ_{x ∈ D_k v_j} a_{w x}
//! ```
//!
//! with `a_∅ = 1`. [`solve_schwinger_dyson`] finds the truncated solution by a
//! damped fixed-point iteration started from the free semicircular law (the
//! `W = 0` solution). Words longer than the truncation degree count as zero.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{dot, PiecewiseLinearPath};
use crate::signature::{factorial_tail, truncated_signature};
use crate::words::{cyclic_derivative, level_offset, word_count, Word};

/// One interaction term `g · X_v` of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub word: Word,
    pub g: f64,
}

/// `V = ½ Σ_i X_i² + Σ_j g_j X_{v_j}`. The quadratic part is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub dim: usize,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
}

impl Potential {
    /// The Gaussian potential, whose limit law is `d` free semicircular variables.
    pub fn quadratic(dim: usize) -> Self {
        Potential {
            dim,
            couplings: Vec::new(),
        }
    }

    /// `½ X² + g X^degree` in one variable.
    pub fn single_variable(degree: usize, g: f64) -> Self {
        Potential {
            dim: 1,
            couplings: vec![Coupling {
                word: Word::repeat(1, degree),
                g,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > u8::MAX as usize {
            return Err(Error::invalid(format!("potential dimension {} out of range", self.dim)));
        }
        for c in &self.couplings {
            c.word.check_alphabet(self.dim)?;
            if c.word.is_empty() {
                return Err(Error::invalid("coupling words must be nonempty"));
            }
            if !c.g.is_finite() {
                return Err(Error::invalid("coupling constants must be finite"));
            }
        }
        Ok(())
    }

    /// True when every coupling word has even length, which forces odd moments to vanish.
    pub fn is_even(&self) -> bool {
        self.couplings.iter().all(|c| c.word.len() % 2 == 0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Potential = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

/// Controls for the damped fixed-point iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight `λ` of the update `a ← (1 − λ) a + λ F(a)`.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

/// Truncated coefficient table `a_w ≈ τ_V(X_w)` for `|w| <= max_degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct NcLaw {
    dim: usize,
    max_degree: usize,
    coeffs: Vec<f64>,
    pub tol: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl NcLaw {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `a_w`, zero beyond the truncation degree.
    pub fn coeff(&self, w: &Word) -> f64 {
        if w.len() > self.max_degree {
            return 0.0;
        }
        self.coeffs[w.global_index(self.dim)]
    }

    fn coeff_slice(&self, letters: &[u8]) -> f64 {
        if letters.len() > self.max_degree {
            return 0.0;
        }
        self.coeffs[slice_index(letters, self.dim)]
    }

    /// Overrides a coefficient; used to probe residual sensitivity.
    pub fn set_coeff(&mut self, w: &Word, value: f64) {
        let i = w.global_index(self.dim);
        self.coeffs[i] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        crate::words::all_words(self.dim, self.max_degree)
            .into_iter()
            .zip(self.coeffs.iter().copied())
    }

    /// Largest `R^{1/|w|}`-type growth rate `max_w |a_w|^{1/|w|}` of the table.
    pub fn growth_rate(&self) -> f64 {
        self.iter()
            .filter(|(w, _)| !w.is_empty())
            .map(|(w, a)| a.abs().powf(1.0 / w.len() as f64))
            .fold(0.0, f64::max)
    }

    pub fn to_export(&self) -> NcLawExport {
        NcLawExport {
            dim: self.dim,
            max_degree: self.max_degree,
            tol: self.tol,
            residual: self.residual,
            iterations: self.iterations,
            coeffs: self.iter().map(|(w, a)| (w.to_string(), a)).collect(),
        }
    }
}

/// Serialised form of a law: coefficients keyed by the JSON text of the word.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NcLawExport {
    pub dim: usize,
    pub max_degree: usize,
    pub tol: f64,
    pub residual: f64,
    pub iterations: usize,
    pub coeffs: BTreeMap<String, f64>,
}

fn slice_index(letters: &[u8], d: usize) -> usize {
    level_offset(d, letters.len())
        + letters
            .iter()
            .fold(0usize, |acc, &l| acc * d + (l as usize - 1))
}

/// The free semicircular law, computed in length order from the Gaussian
/// relations `a_{wk} = Σ_{w = u k v} a_u a_v`, which only involve shorter words.
pub fn semicircular_law(dim: usize, max_degree: usize) -> NcLaw {
    let total = word_count(dim, max_degree);
    let mut coeffs = vec![0.0; total];
    coeffs[0] = 1.0;
    let mut x = Vec::with_capacity(max_degree);
    for len in 1..=max_degree {
        // odd words vanish; skip the work
        if len % 2 == 1 {
            continue;
        }
        let level = dim.pow(len as u32);
        for i in 0..level {
            fill_letters(&mut x, len, i, dim);
            coeffs[level_offset(dim, len) + i] = split_sum(&coeffs, &x, dim);
        }
    }
    NcLaw {
        dim,
        max_degree,
        coeffs,
        tol: 0.0,
        residual: 0.0,
        iterations: 0,
    }
}

fn fill_letters(buf: &mut Vec<u8>, len: usize, mut index: usize, d: usize) {
    buf.clear();
    buf.resize(len, 0);
    for slot in buf.iter_mut().rev() {
        *slot = (index % d) as u8 + 1;
        index /= d;
    }
}

/// `Σ_{w = u k v} a_u a_v` where `x = w k`.
fn split_sum(coeffs: &[f64], x: &[u8], d: usize) -> f64 {
    let n = x.len();
    let k = x[n - 1];
    let w = &x[..n - 1];
    let mut acc = 0.0;
    for p in 0..w.len() {
        if w[p] == k {
            acc += coeffs[slice_index(&w[..p], d)] * coeffs[slice_index(&w[p + 1..], d)];
        }
    }
    acc
}

/// Precomputed `(g_j, D_k v_j)` per letter.
struct CyclicTerms {
    per_letter: Vec<Vec<(f64, Vec<u8>)>>,
}

impl CyclicTerms {
    fn new(v: &Potential) -> Self {
        let mut per_letter = vec![Vec::new(); v.dim];
        for c in &v.couplings {
            for k in 1..=v.dim as u8 {
                for word in cyclic_derivative(&c.word, k) {
                    per_letter[k as usize - 1].push((c.g, word.letters().to_vec()));
                }
            }
        }
        CyclicTerms { per_letter }
    }

    /// `Σ_j g_j Σ_{x ∈ D_k v_j} a_{w x}`, dropping words beyond `max_degree`.
    fn eval(&self, coeffs: &[f64], w: &[u8], k: u8, d: usize, max_degree: usize) -> f64 {
        let mut acc = 0.0;
        let mut buf = Vec::with_capacity(max_degree);
        for (g, tail) in &self.per_letter[k as usize - 1] {
            if w.len() + tail.len() > max_degree {
                continue;
            }
            buf.clear();
            buf.extend_from_slice(w);
            buf.extend_from_slice(tail);
            acc += g * coeffs[slice_index(&buf, d)];
        }
        acc
    }
}

/// One application of the Schwinger–Dyson map: returns `F(a)` on every word.
fn sd_map(coeffs: &[f64], terms: &CyclicTerms, d: usize, max_degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    let mut x = Vec::with_capacity(max_degree);
    for len in 1..=max_degree {
        let off = level_offset(d, len);
        for i in 0..d.pow(len as u32) {
            fill_letters(&mut x, len, i, d);
            let k = x[len - 1];
            out[off + i] = split_sum(coeffs, &x, d)
                - terms.eval(coeffs, &x[..len - 1], k, d, max_degree);
        }
    }
}

/// Solves the truncated Schwinger–Dyson system for `V` by damped fixed-point iteration.
///
/// Returns the last iterate once `max |F(a) − a| <= tol`; that quantity is the
/// law's recorded residual.
pub fn solve_schwinger_dyson(v: &Potential, max_degree: usize, opts: SolverOptions) -> Result<NcLaw> {
    v.validate()?;
    if max_degree < 2 {
        return Err(Error::invalid("max_degree must be at least 2"));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::invalid("damping must lie in (0, 1]"));
    }
    let d = v.dim;
    let terms = CyclicTerms::new(v);
    let mut law = semicircular_law(d, max_degree);
    let mut next = vec![0.0; law.coeffs.len()];
    let mut last_finite = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        sd_map(&law.coeffs, &terms, d, max_degree, &mut next);
        let residual = law
            .coeffs
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !residual.is_finite() || residual > 1e150 {
            return Err(Error::Diverged {
                iterations: iter,
                residual: last_finite,
            });
        }
        last_finite = residual;
        if residual <= opts.tol {
            law.tol = opts.tol;
            law.residual = residual;
            law.iterations = iter;
            return Ok(law);
        }
        for (a, f) in law.coeffs.iter_mut().zip(&next) {
            *a = (1.0 - opts.damping) * *a + opts.damping * f;
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: last_finite,
    })
}

/// `|Σ_{w = u k v} a_u a_v − a_{wk} − Σ_j g_j a_{w · D_k v_j}|`.
pub fn sd_residual(law: &NcLaw, v: &Potential, w: &Word, k: u8) -> Result<f64> {
    if w.len() + 1 > law.max_degree {
        return Err(Error::invalid("word too long for the law's truncation"));
    }
    w.check_alphabet(law.dim)?;
    if k == 0 || k as usize > law.dim {
        return Err(Error::invalid(format!("letter {k} outside [1, {}]", law.dim)));
    }
    let letters = w.letters();
    let mut split = 0.0;
    for p in 0..letters.len() {
        if letters[p] == k {
            split += law.coeff_slice(&letters[..p]) * law.coeff_slice(&letters[p + 1..]);
        }
    }
    let terms = CyclicTerms::new(v);
    let coupling = terms.eval(&law.coeffs, letters, k, law.dim, law.max_degree);
    Ok((split - law.coeff(&w.push(k)) - coupling).abs())
}

/// Largest residual over every in-range `(w, k)`.
pub fn max_sd_residual(law: &NcLaw, v: &Potential) -> f64 {
    let d = law.dim;
    let terms = CyclicTerms::new(v);
    let mut out = vec![0.0; law.coeffs.len()];
    sd_map(&law.coeffs, &terms, d, law.max_degree, &mut out);
    law.coeffs
        .iter()
        .zip(&out)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `⟨γ⟩ ≈ Σ_{|w| <= depth} i^{|w|} a_w S^w(γ)` with a factorial-decay tail bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Development {
    pub value: Complex64,
    pub tail_bound: f64,
}

pub fn limiting_development(law: &NcLaw, path: &PiecewiseLinearPath, depth: usize) -> Result<Development> {
    if depth > law.max_degree {
        return Err(Error::invalid(format!(
            "depth {depth} exceeds the law's degree {}",
            law.max_degree
        )));
    }
    if path.dim() != law.dim {
        return Err(Error::DimensionMismatch {
            expected: law.dim,
            found: path.dim(),
        });
    }
    let sig = truncated_signature(path, depth);
    let d = law.dim;
    let mut re = 0.0;
    let mut im = 0.0;
    for n in 0..=depth {
        let off = level_offset(d, n);
        let level = sig.level(n);
        let s: f64 = level
            .iter()
            .enumerate()
            .map(|(i, &x)| x * law.coeffs[off + i])
            .sum();
        // i^n cycles through 1, i, -1, -i
        match n % 4 {
            0 => re += s,
            1 => im += s,
            2 => re -= s,
            _ => im -= s,
        }
    }
    let rate = law.growth_rate().max(2.0);
    Ok(Development {
        value: Complex64::new(re, im),
        tail_bound: factorial_tail(rate * path.l1_variation(), depth),
    })
}

/// Coefficients `c_n = a_{1^n} / n!` of the loop operator series for a one-variable law.
pub fn loop_operator_series(law: &NcLaw, order: usize) -> Result<Vec<f64>> {
    if law.dim != 1 {
        return Err(Error::invalid("the loop operator series needs a one-variable law"));
    }
    if order > law.max_degree {
        return Err(Error::invalid("order exceeds the law's degree"));
    }
    let mut fact = 1.0;
    Ok((0..=order)
        .map(|n| {
            if n > 0 {
                fact *= n as f64;
            }
            law.coeffs[n] / fact
        })
        .collect())
}

/// Per-order residuals of `V'(d/dt) Ŵ = Ŵ ⋆ Ŵ` for a one-variable law, in series units.
///
/// The coefficient of `t^n` is `(a_{n+1} + Σ_j g_j p_j a_{n+p_j−1} − Σ_{i+j=n−1} a_i a_j) / n!`
/// where `p_j` is the degree of the `j`-th coupling. Orders whose terms reach past the
/// truncation are reported only through `order_max`.
pub fn loop_equation_residuals(law: &NcLaw, v: &Potential, order_max: usize) -> Result<Vec<f64>> {
    if law.dim != 1 || v.dim != 1 {
        return Err(Error::invalid("the loop equation is stated for one variable"));
    }
    if order_max + 1 > law.max_degree {
        return Err(Error::invalid("order exceeds the law's degree"));
    }
    let a = |n: usize| if n <= law.max_degree { law.coeffs[n] } else { 0.0 };
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(order_max + 1);
    for n in 0..=order_max {
        if n > 0 {
            fact *= n as f64;
        }
        let mut lhs = a(n + 1);
        for c in &v.couplings {
            let p = c.word.len();
            lhs += c.g * p as f64 * a(n + p - 1);
        }
        let conv: f64 = if n == 0 { 0.0 } else { (0..n).map(|i| a(i) * a(n - 1 - i)).sum() };
        out.push(((lhs - conv) / fact).abs());
    }
    Ok(out)
}

/// Grid solution of `k(s,t) = 1 − ∬_{s ≤ u ≤ v ≤ t} k(s,u) k(u,v) ⟨dγ_u, dγ_v⟩`.
#[derive(Clone, Debug)]
pub struct IntegralEquationSolution {
    times: Vec<f64>,
    table: Vec<f64>,
}

impl IntegralEquationSolution {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `k(t_a, t_b)` for grid indices `a <= b`.
    pub fn value(&self, a: usize, b: usize) -> f64 {
        assert!(a <= b, "the table covers s <= t only");
        self.table[a * self.times.len() + b]
    }

    /// `k(0, T)`.
    pub fn terminal(&self) -> f64 {
        self.value(0, self.times.len() - 1)
    }
}

/// Solves the GUE integral equation on a grid refining the path's knots with spacing `h`.
///
/// Both integrals use the trapezoidal rule on the grid; the increments of the path are
/// constant on every cell, so the scheme is second order in `h`. Terms carrying the unknown
/// value `k(s, t)` itself are solved implicitly at each step.
pub fn gue_integral_equation_solve(path: &PiecewiseLinearPath, h: f64) -> Result<IntegralEquationSolution> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::invalid("grid spacing must be positive"));
    }
    let (times, cells) = path.refine(h);
    let g = cells.len();
    let n = g + 1;
    let d = path.dim();
    let mut k = vec![0.0; n * n];
    let mut f = vec![0.0; n * n];
    let mut hv = vec![0.0; n * n * d];
    for a in 0..n {
        k[a * n + a] = 1.0;
    }
    let mut hk = vec![0.0; d];
    let mut unknown = vec![0.0; d];
    for span in 1..n {
        for a in 0..n - span {
            let b = a + span - 1; // extend (a, b) to (a, b + 1)
            let delta = &cells[b];
            hk.iter_mut().for_each(|x| *x = 0.0);
            for c in a..=b {
                let mut wgt = 0.0;
                // c == a carries the unknown k(a, b + 1) itself
                if c > a {
                    wgt += k[a * n + c] * k[c * n + b + 1];
                }
                if c < b {
                    wgt += k[a * n + c + 1] * k[(c + 1) * n + b + 1];
                }
                if wgt != 0.0 {
                    for (x, y) in hk.iter_mut().zip(&cells[c]) {
                        *x += 0.5 * wgt * y;
                    }
                }
            }
            // H(a, b + 1) = hk + k(a, b + 1) * unknown
            for (i, u) in unknown.iter_mut().enumerate() {
                *u = 0.5 * (cells[a][i] + delta[i]);
            }
            let hab = &hv[(a * n + b) * d..(a * n + b + 1) * d];
            let proj: f64 = hab.iter().zip(&hk).zip(delta).map(|((x, y), z)| (x + y) * z).sum();
            let val = (1.0 - f[a * n + b] - 0.5 * proj) / (1.0 + 0.5 * dot(&unknown, delta));
            k[a * n + b + 1] = val;
            f[a * n + b + 1] = 1.0 - val;
            let base = (a * n + b + 1) * d;
            for i in 0..d {
                hv[base + i] = hk[i] + val * unknown[i];
            }
        }
    }
    Ok(IntegralEquationSolution { times, table: k })
}
