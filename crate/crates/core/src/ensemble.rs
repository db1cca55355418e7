//! Finite-N GUE matrices, unitary path developments and the classical
//! Monte Carlo estimator of `E[tr U_γ]`.
//!
//! Traces are normalised: `tr = Tr / N`. Developments follow
//! `dU = i U A_ν dγ^ν`, so a concatenation develops to the ordered product
//! `U_{γ⋆σ} = U_γ U_σ`.

use faer::{c64, Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;
use crate::rng::{mean_stderr, pairwise_sum, SeedStream};
use crate::words::Word;

/// `d` Hermitian `N × N` matrices.
#[derive(Clone, Debug)]
pub struct HermitianTuple {
    n: usize,
    matrices: Vec<Mat<c64>>,
}

impl HermitianTuple {
    /// Wraps explicit matrices after checking they are square, equal-sized and Hermitian.
    pub fn new(matrices: Vec<Mat<c64>>) -> Result<Self> {
        let n = matrices.first().map(|m| m.nrows()).unwrap_or(0);
        if n == 0 {
            return Err(Error::invalid("need at least one nonempty matrix"));
        }
        for m in &matrices {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
            if hermitian_defect(m) > 1e-12 {
                return Err(Error::invalid("matrix is not Hermitian"));
            }
        }
        Ok(HermitianTuple { n, matrices })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, nu: usize) -> &Mat<c64> {
        &self.matrices[nu]
    }

    /// `Σ_ν x^ν A_ν`.
    pub fn combine(&self, x: &[f64]) -> Mat<c64> {
        let mut out = Mat::<c64>::zeros(self.n, self.n);
        for (a, &c) in self.matrices.iter().zip(x) {
            if c == 0.0 {
                continue;
            }
            for j in 0..self.n {
                for i in 0..self.n {
                    out[(i, j)] += a[(i, j)] * c;
                }
            }
        }
        out
    }

    /// Normalised trace of the word product `A_{w_1} ⋯ A_{w_k}`.
    pub fn word_trace(&self, w: &Word) -> Result<Complex64> {
        w.check_alphabet(self.count())?;
        let mut acc = Mat::<c64>::identity(self.n, self.n);
        for &l in w.letters() {
            acc = &acc * &self.matrices[l as usize - 1];
        }
        Ok(normalized_trace(&acc))
    }
}

/// Largest entry of `|A − A†|`.
pub fn hermitian_defect(m: &Mat<c64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry of `|U† U − I|`.
pub fn unitarity_defect(u: &Mat<c64>) -> f64 {
    let p = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for j in 0..p.ncols() {
        for i in 0..p.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub fn normalized_trace(m: &Mat<c64>) -> Complex64 {
    let n = m.nrows();
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..n {
        acc += m[(i, i)];
    }
    acc / n as f64
}

/// `d` independent GUE matrices with `E|a_ij|² = 1/N` off the diagonal and
/// real diagonal entries of variance `1/N`, so that `E[tr A²] = 1`.
pub fn sample_gue(n: usize, d: usize, seed: SeedStream) -> Result<HermitianTuple> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("GUE needs N >= 1 and d >= 1"));
    }
    let mut rng = seed.rng();
    let diag_sd = (1.0 / n as f64).sqrt();
    let off_sd = (0.5 / n as f64).sqrt();
    let matrices = (0..d)
        .map(|_| {
            let mut m = Mat::<c64>::zeros(n, n);
            for j in 0..n {
                let x: f64 = rng.sample(StandardNormal);
                m[(j, j)] = c64::new(diag_sd * x, 0.0);
                for i in 0..j {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let z = c64::new(off_sd * re, off_sd * im);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            m
        })
        .collect();
    Ok(HermitianTuple { n, matrices })
}

/// `exp(i H)` for Hermitian `H` through its eigendecomposition.
pub fn hermitian_exp_i(h: &Mat<c64>) -> Result<Mat<c64>> {
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::invalid(format!("eigendecomposition failed: {e:?}")))?;
    let u = eig.U();
    let s = eig.S().column_vector();
    let n = h.nrows();
    let mut scaled = u.to_owned();
    for j in 0..n {
        let phase = c64::from_polar(1.0, s[j].re);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(&scaled * u.adjoint())
}

fn check_dims(t: &HermitianTuple, path: &PiecewiseLinearPath) -> Result<()> {
    if t.count() != path.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.count(),
            found: path.dim(),
        });
    }
    Ok(())
}

/// `U_γ = Π_l exp(i Σ_ν Δ_l^ν A_ν)` in path order.
pub fn develop_exact(t: &HermitianTuple, path: &PiecewiseLinearPath) -> Result<Mat<c64>> {
    check_dims(t, path)?;
    let mut u = Mat::<c64>::identity(t.n, t.n);
    for inc in path.increments() {
        let step = hermitian_exp_i(&t.combine(inc))?;
        u = &u * &step;
    }
    Ok(u)
}

/// `Π_l (I + i Σ_ν Δ_l^ν A_ν / K)^K` in path order; the power is taken by repeated squaring.
pub fn develop_truncated(t: &HermitianTuple, path: &PiecewiseLinearPath, k: usize) -> Result<Mat<c64>> {
    check_dims(t, path)?;
    if k == 0 {
        return Err(Error::invalid("truncation order K must be at least 1"));
    }
    let n = t.n;
    let mut u = Mat::<c64>::identity(n, n);
    for inc in path.increments() {
        let mut base = t.combine(inc);
        for j in 0..n {
            for i in 0..n {
                base[(i, j)] = c64::new(0.0, 1.0) * base[(i, j)] / k as f64;
            }
            base[(j, j)] += c64::new(1.0, 0.0);
        }
        u = &u * &matrix_power(base, k);
    }
    Ok(u)
}

fn matrix_power(mut base: Mat<c64>, mut k: usize) -> Mat<c64> {
    let mut acc: Option<Mat<c64>> = None;
    while k > 0 {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => &a * &base,
            });
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    acc.expect("k >= 1")
}

/// Eigenvalues of a real symmetric tridiagonal matrix (implicit QL with Wilkinson shifts).
pub fn tridiagonal_eigenvalues(mut diag: Vec<f64>, off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1), "off-diagonal length must be n - 1");
    let mut e = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 200, "tridiagonal QL failed to converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
            let mut r = (g * g + 1.0).sqrt();
            g = diag[m] - diag[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    diag
}

/// Tridiagonal matrix `(diag, off)` from the β = 2 Hermite model, unitarily
/// equivalent in law to one GUE matrix with the normalisation of [`sample_gue`].
pub fn sample_gue_tridiagonal(n: usize, seed: SeedStream) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seed.rng();
    let scale = (1.0 / n as f64).sqrt();
    let diag: Vec<f64> = (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let dof = 2.0 * (n - k) as f64;
            let chi2 = ChiSquared::new(dof).expect("positive degrees of freedom");
            scale * (chi2.sample(&mut rng) / 2.0).sqrt()
        })
        .collect();
    (diag, off)
}

/// Spectrum of one GUE matrix at `O(N²)` cost.
pub fn sample_gue_spectrum(n: usize, seed: SeedStream) -> Vec<f64> {
    let (diag, off) = sample_gue_tridiagonal(n, seed);
    tridiagonal_eigenvalues(diag, &off)
}

const CONTOUR_NODES: usize = 128;

/// `Σ_λ f(λ)` over the eigenvalues of a symmetric tridiagonal matrix, for `f` entire,
/// by the trapezoid rule on an ellipse around the Gershgorin interval applied to
/// `f(z) tr (z - T)⁻¹`. Each node costs `O(N)`. `growth` bounds `|f(z)| ≤ e^{growth·|Im z|}`
/// up to polynomial factors; returns `None` when the contour would lose accuracy.
pub fn tridiagonal_trace_fn(
    diag: &[f64],
    off: &[f64],
    growth: f64,
    f: impl Fn(Complex64) -> Complex64,
) -> Option<Complex64> {
    let n = diag.len();
    if n == 0 {
        return Some(Complex64::new(0.0, 0.0));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    let centre = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(1e-3);
    // minor semi-axis of one unit keeps poles at a fixed distance
    let minor = 1.0_f64;
    if growth * (minor + 0.5) > 30.0 {
        return None;
    }
    let rho = {
        let t = minor / half;
        t + (t * t + 1.0).sqrt()
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..CONTOUR_NODES {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / CONTOUR_NODES as f64;
        let w = Complex64::from_polar(rho, theta);
        let z = centre + 0.5 * half * (w + 1.0 / w);
        let dz = 0.5 * half * (w - 1.0 / w);
        // tr (z - T)⁻¹ = Σ r_k'/r_k with r_k = p_k / p_{k-1}
        let mut q = Complex64::new(0.0, 0.0);
        let mut dr_prev = Complex64::new(0.0, 0.0);
        let mut resolvent = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let b2 = if k > 0 { off[k - 1] * off[k - 1] } else { 0.0 };
            let r = z - diag[k] - b2 * q;
            let dr = 1.0 + b2 * dr_prev * q * q;
            q = 1.0 / r;
            resolvent += dr * q;
            dr_prev = dr;
        }
        acc += f(z) * resolvent * dz;
    }
    Some(acc / CONTOUR_NODES as f64)
}

/// How a path is turned into a unitary inside the sampling routes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Development {
    /// `Π_l exp(i B_l)`, as in [`develop_exact`].
    #[default]
    Exact,
    /// `Π_l (I + i B_l / K)^K`, as in [`develop_truncated`].
    Truncated,
}

/// The scalar development at eigenvalue `λ` of a one-dimensional path.
fn scalar_development(path: &PiecewiseLinearPath, development: Development, k: usize, lambda: Complex64) -> Complex64 {
    match development {
        Development::Exact => (Complex64::i() * lambda * path.increments().iter().map(|inc| inc[0]).sum::<f64>()).exp(),
        Development::Truncated => {
            let kf = k as f64;
            path.increments()
                .iter()
                .map(|inc| (1.0 + Complex64::new(0.0, inc[0] / kf) * lambda).powu(k as u32))
                .product()
        }
    }
}

fn develop(t: &HermitianTuple, path: &PiecewiseLinearPath, development: Development, k: usize) -> Result<Mat<c64>> {
    match development {
        Development::Exact => develop_exact(t, path),
        Development::Truncated => develop_truncated(t, path, k),
    }
}

/// Monte Carlo parameters for Algorithm-2 style sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McParams {
    /// Matrix size `N`.
    pub n: usize,
    /// Number of independent draws `M`.
    pub m: usize,
    /// Truncation order `K` of `(I + iA/K)^K`.
    pub k: usize,
    pub seed: u64,
}

/// Which sampler backs [`classical_mc_estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum McRoute {
    /// Spectral sampling when the path is one-dimensional, dense matrices otherwise.
    #[default]
    Auto,
    /// Always draw dense GUE matrices.
    Dense,
}

/// Mean of `tr(U)` over independent draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DevelopmentResult {
    pub value: Complex64,
    pub stderr: f64,
    pub samples: usize,
    pub params: McParams,
}

#[derive(Serialize, Deserialize)]
struct DevelopmentResultJson {
    value_re: f64,
    value_im: f64,
    stderr: f64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    seed: u64,
}

impl DevelopmentResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(DevelopmentResultJson {
            value_re: self.value.re,
            value_im: self.value.im,
            stderr: self.stderr,
            n: self.params.n,
            m: self.params.m,
            k: self.params.k,
            seed: self.params.seed,
        })
        .expect("plain fields serialise")
    }
}

/// Reduces per-sample complex values into mean and standard error, in a fixed order.
pub(crate) fn summarize(values: &[Complex64]) -> (Complex64, f64) {
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    let (mr, sr) = mean_stderr(&re);
    let (mi, si) = mean_stderr(&im);
    (Complex64::new(mr, mi), (sr * sr + si * si).sqrt())
}

/// One draw of `tr U` for sample `index`.
pub fn mc_sample(
    path: &PiecewiseLinearPath,
    params: McParams,
    route: McRoute,
    development: Development,
    index: u64,
) -> Result<Complex64> {
    let seed = SeedStream::new(params.seed).child(index);
    if path.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if route == McRoute::Auto && path.dim() == 1 {
        // all generators are multiples of one matrix: only its spectrum matters
        let (diag, off) = sample_gue_tridiagonal(params.n, seed);
        let growth = path.one_variation();
        let f = |z: Complex64| scalar_development(path, development, params.k, z);
        if let Some(total) = tridiagonal_trace_fn(&diag, &off, growth, f) {
            return Ok(total / params.n as f64);
        }
        let spectrum = tridiagonal_eigenvalues(diag, &off);
        let terms: Vec<Complex64> = spectrum.iter().map(|&l| f(Complex64::new(l, 0.0))).collect();
        return Ok(ordered_mean(&terms, params.n as f64));
    }
    let t = sample_gue(params.n, path.dim(), seed)?;
    Ok(normalized_trace(&develop(&t, path, development, params.k)?))
}

/// Classical sampling estimate of `E[tr U_γ]`: mean and standard error of
/// `tr(develop_truncated)` over `M` independent GUE draws.
pub fn classical_mc_estimate(path: &PiecewiseLinearPath, params: McParams) -> Result<DevelopmentResult> {
    classical_mc_estimate_with(path, params, McRoute::Auto, Development::Truncated)
}

pub fn classical_mc_estimate_with(
    path: &PiecewiseLinearPath,
    params: McParams,
    route: McRoute,
    development: Development,
) -> Result<DevelopmentResult> {
    if params.m < 2 {
        return Err(Error::invalid("need at least 2 Monte Carlo samples"));
    }
    if params.n == 0 || params.k == 0 {
        return Err(Error::invalid("N and K must be positive"));
    }
    let values = (0..params.m as u64)
        .into_par_iter()
        .map(|i| mc_sample(path, params, route, development, i))
        .collect::<Result<Vec<_>>>()?;
    let (value, stderr) = summarize(&values);
    Ok(DevelopmentResult {
        value,
        stderr,
        samples: params.m,
        params,
    })
}

/// `E[tr(U_s U_t†)]` at finite N, estimated through the path `s ⋆ ←t`.
/// `params.k` is used only by [`Development::Truncated`].
pub fn finite_n_kernel(
    s: &PiecewiseLinearPath,
    t: &PiecewiseLinearPath,
    params: McParams,
    development: Development,
) -> Result<DevelopmentResult> {
    let joined = s.concatenate(&t.reverse())?;
    classical_mc_estimate_with(&joined, params, McRoute::Auto, development)
}

/// Kernel estimates `tr(U_i U_j†)` for all `i ≤ j` from common draws: each draw is one
/// GUE tuple developed along every path. Row `i` holds the entries `j ≥ i`.
pub fn classical_gram_shared(
    paths: &[PiecewiseLinearPath],
    params: McParams,
    development: Development,
) -> Result<Vec<Vec<DevelopmentResult>>> {
    if params.m < 2 {
        return Err(Error::invalid("need at least 2 Monte Carlo samples"));
    }
    if params.n == 0 || params.k == 0 {
        return Err(Error::invalid("N and K must be positive"));
    }
    let d = paths.first().map(|p| p.dim()).ok_or_else(|| Error::invalid("empty dataset"))?;
    if let Some(bad) = paths.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
    }
    let p = paths.len();
    let nf = params.n as f64;
    let per_sample = (0..params.m as u64)
        .into_par_iter()
        .map(|index| {
            let seed = SeedStream::new(params.seed).child(index);
            let mut out = Vec::with_capacity(p * (p + 1) / 2);
            if d == 1 {
                let spectrum = sample_gue_spectrum(params.n, seed);
                let f: Vec<Vec<Complex64>> = paths
                    .iter()
                    .map(|path| {
                        spectrum
                            .iter()
                            .map(|&l| scalar_development(path, development, params.k, Complex64::new(l, 0.0)))
                            .collect()
                    })
                    .collect();
                for i in 0..p {
                    for j in i..p {
                        let terms: Vec<Complex64> = f[i].iter().zip(&f[j]).map(|(a, b)| a * b.conj()).collect();
                        out.push(ordered_mean(&terms, nf));
                    }
                }
            } else {
                let t = sample_gue(params.n, d, seed)?;
                let us = paths
                    .iter()
                    .map(|path| develop(&t, path, development, params.k))
                    .collect::<Result<Vec<_>>>()?;
                for i in 0..p {
                    for j in i..p {
                        // tr(A B†) = Σ_ab A_ab conj(B_ab)
                        let mut terms = Vec::with_capacity(params.n * params.n);
                        for c in 0..params.n {
                            for r in 0..params.n {
                                terms.push(us[i][(r, c)] * us[j][(r, c)].conj());
                            }
                        }
                        out.push(ordered_mean(&terms, nf));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<Complex64>>>>()?;
    let mut rows = Vec::with_capacity(p);
    let mut idx = 0;
    for i in 0..p {
        let mut row = Vec::with_capacity(p - i);
        for _ in i..p {
            let values: Vec<Complex64> = per_sample.iter().map(|s| s[idx]).collect();
            let (value, stderr) = summarize(&values);
            row.push(DevelopmentResult { value, stderr, samples: params.m, params });
            idx += 1;
        }
        rows.push(row);
    }
    Ok(rows)
}

fn ordered_mean(terms: &[Complex64], n: f64) -> Complex64 {
    let re: Vec<f64> = terms.iter().map(|z| z.re).collect();
    let im: Vec<f64> = terms.iter().map(|z| z.im).collect();
    Complex64::new(pairwise_sum(&re) / n, pairwise_sum(&im) / n)
}

/// Sufficient `(M, N, K)` for an `(ε, δ)` guarantee of the classical sampler:
/// `M > 2 ε⁻² ln(2/δ)`, `N > e^{2Δ} / ε²`, `K > Δ e^{2Δ} / ε`.
pub fn classical_sufficient_params(one_variation: f64, epsilon: f64, delta: f64) -> Result<(usize, usize, usize)> {
    if !(epsilon > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("need epsilon > 0 and 0 < delta < 1"));
    }
    let m = strictly_above(2.0 / (epsilon * epsilon) * (2.0 / delta).ln());
    let growth = (2.0 * one_variation).exp();
    let n = strictly_above(growth / (epsilon * epsilon));
    let k = strictly_above(one_variation * growth / epsilon).max(1);
    Ok((m, n, k))
}

/// Smallest positive integer strictly greater than `x`.
pub(crate) fn strictly_above(x: f64) -> usize {
    if x < 0.0 {
        1
    } else {
        (x.floor() as usize + 1).max(1)
    }
}
