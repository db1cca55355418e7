//! Statevector simulation of Trotterised Pauli-rotation circuits and the
//! one-clean-qubit (DQC1) trace estimator.
//!
//! A [`Circuit`] is applied gate by gate in list order, so its operator is
//! `G_last ⋯ G_first`. Circuits built from a path therefore represent
//! `U_{γ_L} ⋯ U_{γ_1}`, each segment factor a first-order Trotter product.

use std::io::{BufRead, Write};

use faer::{c64, Mat};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::strictly_above;
use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;
use crate::pauli::{sample_pauli_ensemble, PauliString, SparsePauliOperator};
use crate::rng::{pairwise_sum, SeedStream};

/// Default qubit cap for full-trace sweeps (`4^n` work).
pub const DEFAULT_TRACE_CAP: usize = 12;
/// Absolute statevector cap (`2^n` amplitudes).
pub const HARD_QUBIT_CAP: usize = 24;
/// Default qubit cap for density-matrix outputs.
pub const DEFAULT_DENSITY_CAP: usize = 6;

/// `P_s(θ) = exp(iθσ_s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    #[serde(rename = "s")]
    pub string: PauliString,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, string: PauliString, theta: f64) -> Result<()> {
        if string.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: string.n() });
        }
        if !string.is_hermitian() {
            return Err(Error::invalid(format!("rotation generator {string} is not Hermitian")));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("rotation angle must be finite"));
        }
        self.gates.push(Gate { string, theta });
        Ok(())
    }

    /// The circuit of `U†`: reversed gate order with negated angles.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n: self.n,
            gates: self
                .gates
                .iter()
                .rev()
                .map(|g| Gate { string: g.string.clone(), theta: -g.theta })
                .collect(),
        }
    }

    /// Writes one JSON object `{"s": ..., "theta": ...}` per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for g in &self.gates {
            serde_json::to_writer(&mut out, g)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads a circuit written by [`Circuit::write_jsonl`]; blank lines are skipped.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let g: Gate = serde_json::from_str(&line)
                .map_err(|e| Error::parse(format!("circuit line {}", i + 1), e.to_string()))?;
            let c = circuit.get_or_insert_with(|| Circuit::new(g.string.n()));
            c.push(g.string, g.theta)
                .map_err(|e| Error::parse(format!("circuit line {}", i + 1), e.to_string()))?;
        }
        circuit.ok_or_else(|| Error::parse("circuit", "no gates found"))
    }
}

/// Trotterised development circuit: for each segment `l`, `K` repetitions of the block
/// `[ν = 1..d, term i of ops_ν: P_{s_i}(Δ_l^ν c_i / K)]`. Zero angles are kept as gates.
pub fn build_trotter_circuit(path: &PiecewiseLinearPath, ops: &[SparsePauliOperator], k: usize) -> Result<Circuit> {
    if k == 0 {
        return Err(Error::invalid("Trotter steps K must be at least 1"));
    }
    if ops.len() != path.dim() {
        return Err(Error::DimensionMismatch { expected: path.dim(), found: ops.len() });
    }
    let n = ops.first().map(|o| o.n()).ok_or_else(|| Error::invalid("need at least one operator"))?;
    if let Some(bad) = ops.iter().find(|o| o.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.n() });
    }
    let mut c = Circuit::new(n);
    let per_block: usize = ops.iter().map(|o| o.terms().len()).sum();
    c.gates.reserve(path.len() * k * per_block);
    for inc in path.increments() {
        for _ in 0..k {
            for (nu, op) in ops.iter().enumerate() {
                for t in op.terms() {
                    c.push(t.string.clone(), inc[nu] * t.coeff / k as f64)?;
                }
            }
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

fn check_statevector(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("statevector needs at least one qubit"));
    }
    if n > HARD_QUBIT_CAP {
        return Err(Error::ResourceCap { what: "statevector qubits", requested: n, cap: HARD_QUBIT_CAP });
    }
    Ok(())
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Result<Self> {
        Statevector::basis(n, 0)
    }

    /// Computational basis state `|x⟩`, bit `q` of `x` being qubit `q`.
    pub fn basis(n: usize, x: u64) -> Result<Self> {
        check_statevector(n)?;
        let dim = 1usize << n;
        if x as usize >= dim {
            return Err(Error::invalid(format!("basis index {x} out of range for {n} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[x as usize] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n {
            return Err(Error::invalid("amplitude count must be a power of two"));
        }
        check_statevector(n)?;
        Ok(Statevector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `ψ ← cos θ ψ + i sin θ σ_s ψ`.
    pub fn rotate(&mut self, s: &PauliString, theta: f64) -> Result<()> {
        if s.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: s.n() });
        }
        if !s.is_hermitian() {
            return Err(Error::invalid(format!("rotation generator {s} is not Hermitian")));
        }
        self.rotate_unchecked(s, theta);
        Ok(())
    }

    fn rotate_unchecked(&mut self, s: &PauliString, theta: f64) {
        let (x, z) = (s.x_mask() as usize, s.z_mask() as usize);
        let (c, sn) = (theta.cos(), theta.sin());
        // σ|b⟩ = i^{k} (-1)^{|z ∧ b|} |b ⊕ x⟩ with k = phase + |x ∧ z|
        let k = s.phase().exponent() as u32 + (x & z).count_ones() + 1;
        let coupling = crate::pauli::Phase::from_exponent(k as i64).to_complex() * sn;
        let sign = |b: usize| if (z & b).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= Complex64::new(c, 0.0) + coupling * sign(b);
            }
            return;
        }
        let high = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for b in 0..self.amps.len() {
            if b & high != 0 {
                continue;
            }
            let b2 = b ^ x;
            let (a, a2) = (self.amps[b], self.amps[b2]);
            self.amps[b] = a * c + coupling * sign(b2) * a2;
            self.amps[b2] = a2 * c + coupling * sign(b) * a;
        }
    }

    pub fn apply(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: circuit.n });
        }
        for g in &circuit.gates {
            self.rotate_unchecked(&g.string, g.theta);
        }
        Ok(())
    }
}

/// Functional form of [`Statevector::rotate`].
pub fn apply_pauli_rotation(mut psi: Statevector, s: &PauliString, theta: f64) -> Result<Statevector> {
    psi.rotate(s, theta)?;
    Ok(psi)
}

/// Diagonal `⟨x|U|x⟩` for every basis state, by running the circuit on each.
pub fn circuit_diagonal(c: &Circuit, cap: usize) -> Result<Vec<Complex64>> {
    check_cap(c.n, cap)?;
    (0..1u64 << c.n)
        .into_par_iter()
        .map(|x| {
            let mut psi = Statevector::basis(c.n, x)?;
            psi.apply(c)?;
            Ok(psi.amps[x as usize])
        })
        .collect()
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    let cap = cap.min(HARD_QUBIT_CAP);
    if n > cap {
        return Err(Error::ResourceCap { what: "qubits", requested: n, cap });
    }
    check_statevector(n)
}

/// Normalised trace `2^{-n} Σ_x ⟨x|U|x⟩` with the default cap.
pub fn circuit_trace_exact(c: &Circuit) -> Result<Complex64> {
    circuit_trace_with_cap(c, DEFAULT_TRACE_CAP)
}

pub fn circuit_trace_with_cap(c: &Circuit, cap: usize) -> Result<Complex64> {
    let diag = circuit_diagonal(c, cap)?;
    let re: Vec<f64> = diag.iter().map(|z| z.re).collect();
    let im: Vec<f64> = diag.iter().map(|z| z.im).collect();
    let dim = diag.len() as f64;
    Ok(Complex64::new(pairwise_sum(&re) / dim, pairwise_sum(&im) / dim))
}

/// Probability that the clean qubit reads 1: `½(1 − Re tr U)`.
pub fn dqc1_probability(c: &Circuit) -> Result<f64> {
    Ok(outcome_probability(circuit_trace_exact(c)?))
}

fn outcome_probability(amplitude: Complex64) -> f64 {
    (0.5 * (1.0 - amplitude.re)).clamp(0.0, 1.0)
}

/// Dense `2^n × 2^n` unitary of the circuit, one column per basis state.
pub fn circuit_unitary(c: &Circuit) -> Result<Mat<c64>> {
    check_cap(c.n, crate::pauli::MAX_DENSE_QUBITS)?;
    let dim = 1usize << c.n;
    let cols = (0..dim as u64)
        .into_par_iter()
        .map(|x| {
            let mut psi = Statevector::basis(c.n, x)?;
            psi.apply(c)?;
            Ok(psi.amps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mat::from_fn(dim, dim, |i, j| cols[j][i]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Pauli strings per generator.
    pub m: usize,
    /// Qubits.
    pub n: usize,
    /// Trotter steps per segment.
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
}

/// Shot-count estimate `Q = 1 − 2T/M` of `Re tr U`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutput {
    pub value: f64,
    pub ones_count: u64,
    pub shots: u64,
    pub params: CircuitParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl EstimatorOutput {
    fn from_counts(ones: u64, shots: u64, params: CircuitParams) -> Self {
        EstimatorOutput {
            value: 1.0 - 2.0 * ones as f64 / shots as f64,
            ones_count: ones,
            shots,
            params,
            epsilon: None,
            delta: None,
        }
    }

    /// Binomial standard error of `Q`.
    pub fn stderr(&self) -> f64 {
        let p = self.ones_count as f64 / self.shots as f64;
        2.0 * (p * (1.0 - p) / self.shots as f64).sqrt()
    }
}

/// Shot-level DQC1 estimate for a fixed circuit: each shot prepares a uniformly random
/// basis state and measures the clean qubit with the exact interference probability.
pub fn dqc1_run(c: &Circuit, shots: u64, seed: u64) -> Result<EstimatorOutput> {
    if shots == 0 {
        return Err(Error::invalid("need at least one shot"));
    }
    let diag = circuit_diagonal(c, DEFAULT_TRACE_CAP)?;
    let root = SeedStream::new(seed);
    let ones = (0..shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.child(i).rng();
            let x = rng.random_range(0..diag.len());
            draw_outcome(&mut rng, diag[x]) as u64
        })
        .sum();
    Ok(EstimatorOutput::from_counts(ones, shots, CircuitParams { m: 0, n: c.n, k: 0, seed }))
}

fn draw_outcome(rng: &mut ChaCha8Rng, amplitude: Complex64) -> bool {
    rng.random::<f64>() < outcome_probability(amplitude)
}

/// Sufficient `(M, K, n, m)` for an `(ε, δ)` guarantee:
/// `M > 2ε⁻² ln(2/δ)`, `K > 3Δ²m/ε`, `n > max(6C/ε, log₂(6C/ε))`, `m = n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoParams {
    pub shots: u64,
    pub params: CircuitParams,
}

pub fn quantum_sufficient_params(
    one_variation: f64,
    epsilon: f64,
    delta: f64,
    constant_c: f64,
    seed: u64,
) -> Result<AutoParams> {
    if !(epsilon > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("need epsilon > 0 and 0 < delta < 1"));
    }
    if !(constant_c > 0.0 && constant_c.is_finite()) {
        return Err(Error::invalid("constant C must be positive"));
    }
    let shots = strictly_above(2.0 / (epsilon * epsilon) * (2.0 / delta).ln()) as u64;
    let ratio = 6.0 * constant_c / epsilon;
    let n = strictly_above(ratio.max(ratio.log2()));
    let m = n;
    let k = strictly_above(3.0 * one_variation * one_variation * m as f64 / epsilon);
    Ok(AutoParams { shots, params: CircuitParams { m, n, k, seed } })
}

/// Per-shot streams: one for the ensemble draw, one for the register state and outcome.
fn shot_streams(seed: u64, shot: u64) -> (SeedStream, ChaCha8Rng) {
    let s = SeedStream::new(seed).child(shot);
    (s.child(0), s.child(1).rng())
}

/// Estimator of `Re E tr U^Q_γ` with a fresh ensemble draw, register state and outcome per shot.
pub fn qsigker_run(path: &PiecewiseLinearPath, params: CircuitParams, shots: u64) -> Result<EstimatorOutput> {
    validate(params, shots)?;
    if path.is_empty() {
        return Ok(EstimatorOutput::from_counts(0, shots, params));
    }
    let ones = (0..shots)
        .into_par_iter()
        .map(|i| {
            let (ens, mut rng) = shot_streams(params.seed, i);
            let ops = sample_pauli_ensemble(params.n, params.m, path.dim(), ens)?;
            let circuit = build_trotter_circuit(path, &ops, params.k)?;
            let x = rng.random_range(0..1u64 << params.n);
            let mut psi = Statevector::basis(params.n, x)?;
            psi.apply(&circuit)?;
            Ok(draw_outcome(&mut rng, psi.amps[x as usize]) as u64)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(EstimatorOutput::from_counts(ones, shots, params))
}

/// [`qsigker_run`] with parameters from [`quantum_sufficient_params`].
pub fn qsigker_run_auto(
    path: &PiecewiseLinearPath,
    epsilon: f64,
    delta: f64,
    constant_c: f64,
    seed: u64,
) -> Result<EstimatorOutput> {
    let auto = quantum_sufficient_params(path.one_variation(), epsilon, delta, constant_c, seed)?;
    let mut out = qsigker_run(path, auto.params, auto.shots)?;
    out.epsilon = Some(epsilon);
    out.delta = Some(delta);
    Ok(out)
}

fn validate(params: CircuitParams, shots: u64) -> Result<()> {
    if params.m == 0 || params.k == 0 || shots == 0 {
        return Err(Error::invalid("m, K and shot count must be positive"));
    }
    check_statevector(params.n)
}

/// Kernel estimates `k(γ_i, γ_j)` for all `i ≤ j` from common shots: each shot draws one
/// ensemble and register state and runs the circuit of `γ_i ⋆ ←γ_j` for every pair.
/// Row `i` of the result holds the entries `j ≥ i`.
pub fn qsigker_gram_shared(
    paths: &[PiecewiseLinearPath],
    params: CircuitParams,
    shots: u64,
) -> Result<Vec<Vec<EstimatorOutput>>> {
    validate(params, shots)?;
    let d = paths.first().map(|p| p.dim()).ok_or_else(|| Error::invalid("empty dataset"))?;
    let reversed: Vec<PiecewiseLinearPath> = paths.iter().map(|p| p.reverse()).collect();
    let p = paths.len();
    let per_shot = (0..shots)
        .into_par_iter()
        .map(|i| {
            let (ens, mut rng) = shot_streams(params.seed, i);
            let ops = sample_pauli_ensemble(params.n, params.m, d, ens)?;
            let x = rng.random_range(0..1u64 << params.n);
            let start = Statevector::basis(params.n, x)?;
            // ⟨x|W(←γ_j) W(γ_i)|x⟩ = ⟨W(←γ_j)† x | W(γ_i) x⟩
            let mut fwd = Vec::with_capacity(p);
            let mut back = Vec::with_capacity(p);
            for (g, r) in paths.iter().zip(&reversed) {
                let mut a = start.clone();
                a.apply(&build_trotter_circuit(g, &ops, params.k)?)?;
                fwd.push(a);
                let mut b = start.clone();
                b.apply(&build_trotter_circuit(r, &ops, params.k)?.inverse())?;
                back.push(b);
            }
            let mut bits = Vec::with_capacity(p * (p + 1) / 2);
            for i in 0..p {
                for j in i..p {
                    bits.push(draw_outcome(&mut rng, back[j].inner(&fwd[i])));
                }
            }
            Ok(bits)
        })
        .collect::<Result<Vec<Vec<bool>>>>()?;
    let mut out = Vec::with_capacity(p);
    let mut idx = 0;
    for i in 0..p {
        let mut row = Vec::with_capacity(p - i);
        for _ in i..p {
            let ones = per_shot.iter().filter(|b| b[idx]).count() as u64;
            row.push(EstimatorOutput::from_counts(ones, shots, params));
            idx += 1;
        }
        out.push(row);
    }
    Ok(out)
}

/// Sample average of `U^Q|0…0⟩⟨0…0|U^Q†` over independent ensemble draws.
pub fn quantum_path_signature(path: &PiecewiseLinearPath, params: CircuitParams, samples: usize) -> Result<Mat<c64>> {
    quantum_path_signature_with_cap(path, params, samples, DEFAULT_DENSITY_CAP)
}

pub fn quantum_path_signature_with_cap(
    path: &PiecewiseLinearPath,
    params: CircuitParams,
    samples: usize,
    cap: usize,
) -> Result<Mat<c64>> {
    validate(params, samples as u64)?;
    check_cap(params.n, cap)?;
    let dim = 1usize << params.n;
    let states = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let (ens, _) = shot_streams(params.seed, i);
            let ops = sample_pauli_ensemble(params.n, params.m, path.dim(), ens)?;
            let mut psi = Statevector::zero(params.n)?;
            psi.apply(&build_trotter_circuit(path, &ops, params.k)?)?;
            Ok(psi.amps)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rho = Mat::<c64>::zeros(dim, dim);
    for amps in &states {
        for j in 0..dim {
            let cj = amps[j].conj();
            for i in 0..dim {
                rho[(i, j)] += amps[i] * cj;
            }
        }
    }
    let scale = 1.0 / samples as f64;
    for j in 0..dim {
        for i in 0..dim {
            rho[(i, j)] *= scale;
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{hermitian_exp_i, normalized_trace};

    fn s(lit: &str) -> PauliString {
        lit.parse().unwrap()
    }

    fn random_circuit(n: usize, gates: usize, seed: u64) -> Circuit {
        let mut rng = SeedStream::new(seed).rng();
        let mut c = Circuit::new(n);
        let letters = ['I', 'X', 'Y', 'Z'];
        for _ in 0..gates {
            let lit: String = (0..n).map(|_| letters[rng.random_range(0..4)]).collect();
            c.push(s(&lit), rng.random_range(-1.5..1.5)).unwrap();
        }
        c
    }

    #[test]
    fn rotation_basics() {
        let psi = Statevector::zero(1).unwrap();
        let out = apply_pauli_rotation(psi.clone(), &s("Z"), 0.7).unwrap();
        assert!((out.amplitudes()[0] - Complex64::from_polar(1.0, 0.7)).norm() < 1e-15);
        assert_eq!(apply_pauli_rotation(psi.clone(), &s("X"), 0.0).unwrap(), psi);
        assert!(apply_pauli_rotation(psi.clone(), &s("XX"), 0.1).is_err());
        assert!(apply_pauli_rotation(psi, &s("iX"), 0.1).is_err());
    }

    #[test]
    fn rotation_matches_dense_exponential() {
        let mut rng = SeedStream::new(4).rng();
        for lit in ["XYZ", "-YIY", "ZZI", "IXI", "III"] {
            let st = s(lit);
            let theta = 0.37;
            let amps: Vec<Complex64> = (0..8)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let amps: Vec<Complex64> = amps.iter().map(|a| a / norm).collect();
            let mut sigma = st.to_dense().unwrap();
            for j in 0..8 {
                for i in 0..8 {
                    sigma[(i, j)] *= theta;
                }
            }
            let u = hermitian_exp_i(&sigma).unwrap();
            let psi = apply_pauli_rotation(Statevector::from_amplitudes(amps.clone()).unwrap(), &st, theta).unwrap();
            for i in 0..8 {
                let want: Complex64 = (0..8).map(|j| u[(i, j)] * amps[j]).sum();
                assert!((psi.amplitudes()[i] - want).norm() < 1e-12, "{lit}");
            }
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn traces() {
        assert_eq!(circuit_trace_exact(&Circuit::new(3)).unwrap(), Complex64::new(1.0, 0.0));
        let mut c = Circuit::new(2);
        c.push(s("ZI"), 0.4).unwrap();
        assert!((circuit_trace_exact(&c).unwrap() - Complex64::new(0.4f64.cos(), 0.0)).norm() < 1e-15);

        let r = random_circuit(3, 20, 1);
        let mut both = r.clone();
        for g in r.inverse().gates() {
            both.push(g.string.clone(), g.theta).unwrap();
        }
        assert!((circuit_trace_exact(&both).unwrap() - 1.0).norm() < 1e-10);
        assert!(circuit_trace_exact(&Circuit::new(13)).is_err());
    }

    #[test]
    fn dqc1_probabilities() {
        assert_eq!(dqc1_probability(&Circuit::new(2)).unwrap(), 0.0);
        // exp(iπ/2 Z) = iZ, twice gives Z² · i² = −I
        let mut c = Circuit::new(2);
        c.push(s("ZI"), std::f64::consts::FRAC_PI_2).unwrap();
        c.push(s("ZI"), std::f64::consts::FRAC_PI_2).unwrap();
        assert!((dqc1_probability(&c).unwrap() - 1.0).abs() < 1e-12);
        let r = random_circuit(3, 15, 2);
        let u = circuit_unitary(&r).unwrap();
        let want = 0.5 * (1.0 - normalized_trace(&u).re);
        assert!((dqc1_probability(&r).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn trotter_circuit_shape() {
        let ops = sample_pauli_ensemble(3, 3, 2, SeedStream::new(1)).unwrap();
        let distinct: usize = ops.iter().map(|o| o.terms().len()).sum();
        let path = PiecewiseLinearPath::from_increments(2, vec![vec![0.1, 0.2], vec![0.0, 0.0]]).unwrap();
        let c = build_trotter_circuit(&path, &ops, 4).unwrap();
        assert_eq!(c.len(), 2 * 4 * distinct);
        assert!(c.gates()[c.len() / 2..].iter().all(|g| g.theta == 0.0));
        assert!(build_trotter_circuit(&path, &ops[..1], 4).is_err());

        let one = sample_pauli_ensemble(2, 1, 1, SeedStream::new(3)).unwrap();
        let c = build_trotter_circuit(&PiecewiseLinearPath::line(vec![0.8]), &one, 1).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.gates()[0].theta, 0.8 * one[0].terms()[0].coeff);
    }

    #[test]
    fn jsonl_round_trip() {
        let c = random_circuit(3, 6, 5);
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 6);
        let back = Circuit::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, c);
        assert_eq!(dqc1_probability(&back).unwrap(), dqc1_probability(&c).unwrap());
        assert!(Circuit::read_jsonl("{\"s\": \"XQ\", \"theta\": 1}\n".as_bytes()).is_err());
    }

    #[test]
    fn estimator_contracts() {
        let params = CircuitParams { m: 3, n: 3, k: 2, seed: 9 };
        let out = qsigker_run(&PiecewiseLinearPath::constant(1), params, 50).unwrap();
        assert_eq!((out.value, out.ones_count), (1.0, 0));
        let line = PiecewiseLinearPath::line(vec![1.0]);
        let a = qsigker_run(&line, params, 200).unwrap();
        assert_eq!(a, qsigker_run(&line, params, 200).unwrap());
        assert!((a.value - (1.0 - 2.0 * a.ones_count as f64 / 200.0)).abs() < 1e-15);
    }

    #[test]
    fn sufficient_parameters() {
        let auto = quantum_sufficient_params(1.0, 0.1, 0.05, 1.0, 0).unwrap();
        assert_eq!(auto.shots, 738);
        assert_eq!(auto.params.n, 61);
        assert_eq!(auto.params.m, 61);
        assert_eq!(auto.params.k, 1831);
        let small = quantum_sufficient_params(1.0, 0.1, 0.05, 0.1, 0).unwrap();
        assert_eq!(small.params.n, 7);
        assert!(qsigker_run_auto(&PiecewiseLinearPath::line(vec![1.0]), 0.1, 0.05, 1.0, 0).is_err());
    }

    #[test]
    fn quantum_signature_is_a_state() {
        let params = CircuitParams { m: 4, n: 3, k: 4, seed: 2 };
        let rho = quantum_path_signature(&PiecewiseLinearPath::constant(2), params, 5).unwrap();
        assert_eq!(rho[(0, 0)], Complex64::new(1.0, 0.0));
        let path = PiecewiseLinearPath::from_increments(2, vec![vec![0.6, -0.4], vec![0.3, 0.9]]).unwrap();
        let rho = quantum_path_signature(&path, params, 40).unwrap();
        let tr: Complex64 = (0..8).map(|i| rho[(i, i)]).sum();
        assert!((tr - 1.0).norm() < 1e-12);
        assert!(crate::ensemble::hermitian_defect(&rho) < 1e-12);
        let eig = rho.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        assert!(eig[0] >= -1e-10);
        assert!(quantum_path_signature(&path, CircuitParams { n: 7, ..params }, 2).is_err());
    }
}
