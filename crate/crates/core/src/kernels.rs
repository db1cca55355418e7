//! Signature kernels and GUE kernels, singly or as Gram matrices.
//!
//! The GUE kernel `k(s, t) = lim E tr(U_s U_t†)` is evaluated on the single
//! path `s ⋆ ←t` by one of four routes: the semicircular series, the
//! integral equation, finite-N Monte Carlo, or the simulated DQC1 circuit.

use std::io::Write;

use faer::{Mat, Side};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{classical_gram_shared, finite_n_kernel, Development, McParams};
use crate::error::{Error, Result};
use crate::law::{gue_integral_equation_solve, limiting_development, semicircular_law};
use crate::path::{dot, PiecewiseLinearPath};
use crate::qsim::{qsigker_gram_shared, qsigker_run, qsigker_run_auto, CircuitParams};
use crate::rng::SeedStream;
use crate::signature::truncated_signature;

/// Kernel method and its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum KernelMethod {
    /// Goursat finite differences; `h` is the cell width relative to each path's duration.
    SignaturePde { h: f64 },
    SignatureSeries { depth: usize },
    GueSeries { depth: usize },
    /// Integral equation on `s ⋆ ←t`, whose time axis is `[0, 1]`.
    GueIntegralEq { h: f64 },
    /// Finite-N sampling; `params.k` matters only for truncated developments.
    GueClassicalMc {
        params: McParams,
        #[serde(default)]
        development: Development,
    },
    GueQuantum { params: CircuitParams, shots: u64 },
    GueQuantumAuto { epsilon: f64, delta: f64, constant_c: f64, seed: u64 },
}

impl KernelMethod {
    pub fn name(&self) -> &'static str {
        match self {
            KernelMethod::SignaturePde { .. } => "signature-pde",
            KernelMethod::SignatureSeries { .. } => "signature-series",
            KernelMethod::GueSeries { .. } => "gue-series",
            KernelMethod::GueIntegralEq { .. } => "gue-integral-eq",
            KernelMethod::GueClassicalMc { .. } => "gue-classical-mc",
            KernelMethod::GueQuantum { .. } | KernelMethod::GueQuantumAuto { .. } => "gue-quantum",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            KernelMethod::GueClassicalMc { .. } | KernelMethod::GueQuantum { .. } | KernelMethod::GueQuantumAuto { .. }
        )
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            KernelMethod::SignaturePde { h } | KernelMethod::GueIntegralEq { h } => h > 0.0 && h <= 1.0,
            KernelMethod::GueClassicalMc { params: p, .. } => p.n > 0 && p.m >= 2 && p.k > 0,
            KernelMethod::GueQuantum { params, shots } => params.m > 0 && params.n > 0 && params.k > 0 && shots > 0,
            KernelMethod::GueQuantumAuto { epsilon, delta, constant_c, .. } => {
                epsilon > 0.0 && delta > 0.0 && delta < 1.0 && constant_c > 0.0
            }
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid parameters for {}", self.name())))
        }
    }

    /// The same method with its seed replaced.
    fn reseeded(&self, seed: u64) -> KernelMethod {
        match *self {
            KernelMethod::GueClassicalMc { params, development } => {
                KernelMethod::GueClassicalMc { params: McParams { seed, ..params }, development }
            }
            KernelMethod::GueQuantum { params, shots } => KernelMethod::GueQuantum {
                params: CircuitParams { seed, ..params },
                shots,
            },
            KernelMethod::GueQuantumAuto { epsilon, delta, constant_c, .. } => {
                KernelMethod::GueQuantumAuto { epsilon, delta, constant_c, seed }
            }
            other => other,
        }
    }

    fn seed(&self) -> u64 {
        match *self {
            KernelMethod::GueClassicalMc { params, .. } => params.seed,
            KernelMethod::GueQuantum { params, .. } => params.seed,
            KernelMethod::GueQuantumAuto { seed, .. } => seed,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub method: KernelMethod,
    /// Stochastic Gram entries share one stream of draws instead of one stream per entry.
    #[serde(default)]
    pub shared_samples: bool,
}

impl KernelConfig {
    pub fn new(method: KernelMethod) -> Self {
        KernelConfig { method, shared_samples: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    /// Method-specific parameters actually used (e.g. auto-selected sizes).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

impl KernelValue {
    fn exact(value: f64) -> Self {
        KernelValue { value, stderr: None, tail_bound: None, params: None }
    }
}

fn check_pair(s: &PiecewiseLinearPath, t: &PiecewiseLinearPath) -> Result<()> {
    if s.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: t.dim() });
    }
    Ok(())
}

/// Signature kernel `⟨S(s), S(t)⟩` from the Goursat problem
/// `∂²k/∂u∂v = k ⟨ṡ_u, ṫ_v⟩` with unit boundary values, solved on a grid that
/// refines both paths' knots.
pub fn signature_kernel_pde(s: &PiecewiseLinearPath, t: &PiecewiseLinearPath, h: f64) -> Result<f64> {
    check_pair(s, t)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("grid spacing must be positive"));
    }
    if s.is_empty() || t.is_empty() {
        return Ok(1.0);
    }
    let (_, xs) = s.refine(h * s.duration());
    let (_, ys) = t.refine(h * t.duration());
    let cols = ys.len() + 1;
    let mut prev = vec![1.0; cols];
    let mut next = vec![1.0; cols];
    for dx in &xs {
        next[0] = 1.0;
        for (j, dy) in ys.iter().enumerate() {
            let inc = dot(dx, dy);
            let inc2 = inc * inc / 12.0;
            next[j + 1] = (next[j] + prev[j + 1]) * (1.0 + 0.5 * inc + inc2) - prev[j] * (1.0 - inc2);
        }
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(prev[cols - 1])
}

/// `Σ_{|w| ≤ depth} S^w(s) S^w(t)` and the bound `Σ_{n > depth} (V_s V_t)^n / (n!)²`
/// on the omitted levels.
pub fn signature_kernel_series(s: &PiecewiseLinearPath, t: &PiecewiseLinearPath, depth: usize) -> Result<(f64, f64)> {
    check_pair(s, t)?;
    let value = truncated_signature(s, depth).dot(&truncated_signature(t, depth));
    let x = s.one_variation() * t.one_variation();
    let mut term = 1.0;
    for n in 1..=depth {
        term *= x / (n * n) as f64;
    }
    let mut tail = 0.0;
    for n in depth + 1..depth + 400 {
        term *= x / (n * n) as f64;
        tail += term;
        if term <= tail * 1e-17 || term < 1e-300 {
            break;
        }
    }
    Ok((value, tail))
}

/// Kernel value for one pair by the configured method.
pub fn kernel(s: &PiecewiseLinearPath, t: &PiecewiseLinearPath, method: &KernelMethod) -> Result<KernelValue> {
    check_pair(s, t)?;
    method.validate()?;
    match *method {
        KernelMethod::SignaturePde { h } => Ok(KernelValue::exact(signature_kernel_pde(s, t, h)?)),
        KernelMethod::SignatureSeries { depth } => {
            let (value, tail) = signature_kernel_series(s, t, depth)?;
            Ok(KernelValue { tail_bound: Some(tail), ..KernelValue::exact(value) })
        }
        _ => gue_kernel(s, t, method),
    }
}

/// GUE kernel `k(s, t)` evaluated on `s ⋆ ←t`.
pub fn gue_kernel(s: &PiecewiseLinearPath, t: &PiecewiseLinearPath, method: &KernelMethod) -> Result<KernelValue> {
    check_pair(s, t)?;
    method.validate()?;
    let joined = s.concatenate(&t.reverse())?;
    match *method {
        KernelMethod::GueSeries { depth } => {
            let law = semicircular_law(s.dim(), depth);
            let dev = limiting_development(&law, &joined, depth)?;
            Ok(KernelValue { tail_bound: Some(dev.tail_bound), ..KernelValue::exact(dev.value.re) })
        }
        KernelMethod::GueIntegralEq { h } => {
            // the marching scheme is not reflection-symmetric; averaging with the reversed
            // path (whose exact value is the same) makes k(s, t) = k(t, s) hold exactly
            let forward = gue_integral_equation_solve(&joined, h)?.terminal();
            let backward = gue_integral_equation_solve(&joined.reverse(), h)?.terminal();
            Ok(KernelValue::exact(0.5 * (forward + backward)))
        }
        KernelMethod::GueClassicalMc { params, development } => {
            let r = finite_n_kernel(s, t, params, development)?;
            let mut recorded = r.to_json();
            recorded["development"] = serde_json::to_value(development)?;
            Ok(KernelValue {
                value: r.value.re,
                stderr: Some(r.stderr),
                tail_bound: None,
                params: Some(recorded),
            })
        }
        KernelMethod::GueQuantum { params, shots } => {
            let out = qsigker_run(&joined, params, shots)?;
            Ok(quantum_value(out))
        }
        KernelMethod::GueQuantumAuto { epsilon, delta, constant_c, seed } => {
            let out = qsigker_run_auto(&joined, epsilon, delta, constant_c, seed)?;
            Ok(quantum_value(out))
        }
        KernelMethod::SignaturePde { .. } | KernelMethod::SignatureSeries { .. } => {
            Err(Error::invalid(format!("{} is not a GUE kernel method", method.name())))
        }
    }
}

fn quantum_value(out: crate::qsim::EstimatorOutput) -> KernelValue {
    KernelValue {
        value: out.value,
        stderr: Some(out.stderr()),
        tail_bound: None,
        params: Some(serde_json::to_value(&out).expect("estimator output serialises")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramResult {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<Vec<f64>>>,
    /// Smallest eigenvalue of the symmetrised matrix; PSD is diagnosed, never imposed.
    pub min_eigenvalue: f64,
}

impl GramResult {
    /// CSV with a header row of labels and one labelled row per path.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).map_err(csv_error)?;
        for (label, row) in self.labels.iter().zip(&self.matrix) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::parse("csv output", e.to_string())
}

/// Seed for Gram entry `(i, j)` derived from the top-level seed.
pub fn entry_seed(seed: u64, i: usize, j: usize) -> u64 {
    SeedStream::new(seed).child(i as u64).child(j as u64).rng().random()
}

/// Gram matrix over the upper triangle, mirrored to the lower one.
pub fn gram_matrix(labels: &[String], paths: &[PiecewiseLinearPath], cfg: &KernelConfig) -> Result<GramResult> {
    if paths.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    if labels.len() != paths.len() {
        return Err(Error::invalid("need one label per path"));
    }
    let d = paths[0].dim();
    if let Some(bad) = paths.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
    }
    cfg.method.validate()?;
    let p = paths.len();
    let upper: Vec<Vec<KernelValue>> = if cfg.shared_samples && cfg.method.is_stochastic() {
        shared_upper(paths, &cfg.method)?
    } else {
        let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
        let seed = cfg.method.seed();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| kernel(&paths[i], &paths[j], &cfg.method.reseeded(entry_seed(seed, i, j))))
            .collect::<Result<Vec<_>>>()?;
        let mut it = values.into_iter();
        (0..p).map(|i| (i..p).map(|_| it.next().expect("one value per pair")).collect()).collect()
    };
    let mut matrix = vec![vec![0.0; p]; p];
    let stochastic = cfg.method.is_stochastic();
    let mut stderr = vec![vec![0.0; p]; p];
    for i in 0..p {
        for (off, v) in upper[i].iter().enumerate() {
            let j = i + off;
            matrix[i][j] = v.value;
            matrix[j][i] = v.value;
            let se = v.stderr.unwrap_or(0.0);
            stderr[i][j] = se;
            stderr[j][i] = se;
        }
    }
    Ok(GramResult {
        labels: labels.to_vec(),
        min_eigenvalue: min_eigenvalue(&matrix)?,
        matrix,
        stderr: stochastic.then_some(stderr),
    })
}

fn shared_upper(paths: &[PiecewiseLinearPath], method: &KernelMethod) -> Result<Vec<Vec<KernelValue>>> {
    match *method {
        KernelMethod::GueClassicalMc { params, development } => Ok(classical_gram_shared(paths, params, development)?
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|r| KernelValue {
                        value: r.value.re,
                        stderr: Some(r.stderr),
                        tail_bound: None,
                        params: None,
                    })
                    .collect()
            })
            .collect()),
        KernelMethod::GueQuantum { params, shots } => Ok(qsigker_gram_shared(paths, params, shots)?
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|o| KernelValue { params: None, ..quantum_value(o) })
                    .collect()
            })
            .collect()),
        _ => Err(Error::invalid(format!("shared samples are not supported for {}", method.name()))),
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(matrix: &[Vec<f64>]) -> Result<f64> {
    let p = matrix.len();
    let m = Mat::<f64>::from_fn(p, p, |i, j| matrix[i][j]);
    let eig = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::invalid(format!("eigenvalue computation failed: {e:?}")))?;
    Ok(eig.first().copied().unwrap_or(0.0))
}
