//! Pauli strings in the symplectic bit encoding, the random Pauli ensemble
//! and word-counting formulas used to bound its moments.
//!
//! Qubit `q` is letter `q` of the string literal and bit `q` of a
//! computational-basis index. Letters are encoded as `(x, z)` bit pairs:
//! `I = (0,0)`, `X = (1,0)`, `Z = (0,1)`, `Y = (1,1)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mean_stderr, SeedStream};
use crate::words::Word;

/// Largest supported qubit count (one machine word per bit-vector).
pub const MAX_QUBITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            PauliLetter::I => (false, false),
            PauliLetter::X => (true, false),
            PauliLetter::Y => (true, true),
            PauliLetter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliLetter::I,
            (true, false) => PauliLetter::X,
            (true, true) => PauliLetter::Y,
            (false, true) => PauliLetter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliLetter::I),
            'X' => Some(PauliLetter::X),
            'Y' => Some(PauliLetter::Y),
            'Z' => Some(PauliLetter::Z),
            _ => None,
        }
    }
}

/// Element of `{1, i, -1, -i}` stored as the exponent of `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    fn prefix(self) -> &'static str {
        ["", "i", "-", "-i"][self.0 as usize]
    }
}

/// Single-qubit product `a · b = phase · letter`.
pub fn pauli_mul(a: PauliLetter, b: PauliLetter) -> (Phase, PauliLetter) {
    let (ax, az) = a.bits();
    let (bx, bz) = b.bits();
    let s = PauliString::from_masks(1, ax as u64, az as u64, Phase::ONE)
        .mul(&PauliString::from_masks(1, bx as u64, bz as u64, Phase::ONE))
        .expect("equal lengths");
    (s.phase, s.letter(0))
}

/// `phase · σ_{w_0} ⊗ ⋯ ⊗ σ_{w_{n-1}}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(PauliString { n, x: 0, z: 0, phase: Phase::ONE })
    }

    pub fn from_letters(letters: &[PauliLetter], phase: Phase) -> Result<Self> {
        check_qubits(letters.len())?;
        let mut s = PauliString { n: letters.len(), x: 0, z: 0, phase };
        for (q, l) in letters.iter().enumerate() {
            let (bx, bz) = l.bits();
            s.x |= (bx as u64) << q;
            s.z |= (bz as u64) << q;
        }
        Ok(s)
    }

    fn from_masks(n: usize, x: u64, z: u64, phase: Phase) -> Self {
        PauliString { n, x, z, phase }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, q: usize) -> PauliLetter {
        PauliLetter::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn letters(&self) -> Vec<PauliLetter> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Hermitian exactly when the phase is real.
    pub fn is_hermitian(&self) -> bool {
        self.phase.0.is_multiple_of(2)
    }

    /// Same letters with phase `+1`.
    pub fn bare(&self) -> PauliString {
        PauliString { phase: Phase::ONE, ..self.clone() }
    }

    pub fn with_phase(&self, phase: Phase) -> PauliString {
        PauliString { phase, ..self.clone() }
    }

    /// Product `self · other` with exact phase.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let (px1, py1, pz1) = (x1 & !z1, x1 & z1, !x1 & z1);
        let (px2, py2, pz2) = (x2 & !z2, x2 & z2, !x2 & z2);
        // XY = iZ, YZ = iX, ZX = iY and the reversed orders carry -i
        let plus = ((px1 & py2) | (py1 & pz2) | (pz1 & px2)).count_ones() as i64;
        let minus = ((py1 & px2) | (pz1 & py2) | (px1 & pz2)).count_ones() as i64;
        let phase = self
            .phase
            .mul(other.phase)
            .mul(Phase::from_exponent(plus - minus));
        Ok(PauliString { n: self.n, x: x1 ^ x2, z: z1 ^ z2, phase })
    }

    /// `σ |b⟩ = amplitude · |b ⊕ x⟩`; returns `(b ⊕ x, amplitude)`.
    pub fn apply_to_basis(&self, b: u64) -> (u64, Complex64) {
        // Y = iXZ on each qubit
        let k = self.phase.0 as u32 + (self.x & self.z).count_ones() + 2 * (self.z & b).count_ones();
        (b ^ self.x, Phase::from_exponent(k as i64).to_complex())
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> Result<Mat<c64>> {
        check_dense(self.n)?;
        let dim = 1usize << self.n;
        let mut m = Mat::<c64>::zeros(dim, dim);
        for b in 0..dim as u64 {
            let (row, amp) = self.apply_to_basis(b);
            m[(row as usize, b as usize)] = amp;
        }
        Ok(m)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::invalid(format!("qubit count must be in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(())
}

/// Dense realisations are limited to 12 qubits.
pub const MAX_DENSE_QUBITS: usize = 12;

fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::ResourceCap { what: "dense qubits", requested: n, cap: MAX_DENSE_QUBITS });
    }
    Ok(())
}

/// Normalised trace: the phase if every letter is `I`, else 0.
pub fn string_trace(s: &PauliString) -> Complex64 {
    if s.is_identity() {
        s.phase.to_complex()
    } else {
        Complex64::new(0.0, 0.0)
    }
}

pub fn string_mul(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.mul(b)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.phase.prefix())?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `[-][i]LETTERS`, e.g. `-iXIZY`.
    fn from_str(s: &str) -> Result<Self> {
        let (neg, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let (imag, rest) = match rest.strip_prefix('i') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let letters = rest
            .chars()
            .map(|c| {
                PauliLetter::from_char(c)
                    .ok_or_else(|| Error::parse("pauli string", format!("unexpected character {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let phase = Phase::from_exponent(2 * neg as i64 + imag as i64);
        PauliString::from_letters(&letters, phase)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One `(coefficient, string)` term of a real combination of Pauli strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    #[serde(rename = "c")]
    pub coeff: f64,
    #[serde(rename = "s")]
    pub string: PauliString,
}

/// `Σ_i c_i σ_i` with real `c_i` and distinct phase-free strings, hence Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsePauliOperator {
    n: usize,
    terms: Vec<PauliTerm>,
}

impl SparsePauliOperator {
    /// Builds an operator, merging repeated strings in first-seen order.
    pub fn new(n: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        check_qubits(n)?;
        let mut merged: Vec<PauliTerm> = Vec::new();
        let mut slot: HashMap<(u64, u64), usize> = HashMap::new();
        for (c, s) in terms {
            if s.n != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.n });
            }
            if !s.is_hermitian() {
                return Err(Error::invalid(format!("term {s} has an imaginary phase")));
            }
            if !c.is_finite() {
                return Err(Error::invalid("coefficients must be finite"));
            }
            let c = if s.phase == Phase::MINUS_ONE { -c } else { c };
            match slot.get(&(s.x, s.z)) {
                Some(&i) => merged[i].coeff += c,
                None => {
                    slot.insert((s.x, s.z), merged.len());
                    merged.push(PauliTerm { coeff: c, string: s.bare() });
                }
            }
        }
        Ok(SparsePauliOperator { n, terms: merged })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Number of terms with a non-zero coefficient.
    pub fn nonzero_terms(&self) -> usize {
        self.terms.iter().filter(|t| t.coeff != 0.0).count()
    }

    pub fn to_dense(&self) -> Result<Mat<c64>> {
        check_dense(self.n)?;
        let dim = 1usize << self.n;
        let mut m = Mat::<c64>::zeros(dim, dim);
        for t in &self.terms {
            for b in 0..dim as u64 {
                let (row, amp) = t.string.apply_to_basis(b);
                m[(row as usize, b as usize)] += amp * t.coeff;
            }
        }
        Ok(m)
    }

    /// `[{"c": ..., "s": ...}, ...]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.terms).expect("terms serialise")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let terms: Vec<PauliTerm> = serde_json::from_value(value.clone())?;
        let n = terms
            .first()
            .map(|t| t.string.n)
            .ok_or_else(|| Error::invalid("operator needs at least one term"))?;
        SparsePauliOperator::new(n, terms.into_iter().map(|t| (t.coeff, t.string)))
    }
}

/// `d` independent draws of `m^{-1/2} Σ_{i ≤ m} r_i σ_i` with Rademacher `r_i`
/// and uniform strings; repeated strings are merged.
pub fn sample_pauli_ensemble(n: usize, m: usize, d: usize, seed: SeedStream) -> Result<Vec<SparsePauliOperator>> {
    check_qubits(n)?;
    if m == 0 {
        return Err(Error::invalid("need at least one Pauli string per operator"));
    }
    let mut rng = seed.rng();
    let scale = 1.0 / (m as f64).sqrt();
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    (0..d)
        .map(|_| {
            let terms: Vec<(f64, PauliString)> = (0..m)
                .map(|_| {
                    let x = rng.random::<u64>() & mask;
                    let z = rng.random::<u64>() & mask;
                    let sign = if rng.random::<bool>() { scale } else { -scale };
                    (sign, PauliString::from_masks(n, x, z, Phase::ONE))
                })
                .collect();
            SparsePauliOperator::new(n, terms)
        })
        .collect()
}

/// Number of words of length `2p` over `m` letters in which every letter occurs an even
/// number of times: `2^{-m} Σ_k C(m,k) (m − 2k)^{2p}`.
pub fn count_even_words(m: u32, p: u32) -> Result<BigUint> {
    if m == 0 || p == 0 {
        return Err(Error::invalid("count_even_words needs m >= 1 and p >= 1"));
    }
    let mut total = BigInt::from(0);
    for k in 0..=m {
        let base = BigInt::from(m as i64 - 2 * k as i64);
        total += BigInt::from(binomial(m, k)) * base.pow(2 * p);
    }
    let total = total.to_biguint().expect("sum of even powers is non-negative");
    Ok(total >> m as usize)
}

/// Number of words of length `2p` over `m` letters in which every occurring letter
/// occurs exactly twice: `C(m,p) (2p)! / 2^p`.
pub fn count_pair_words(m: u32, p: u32) -> Result<BigUint> {
    if m == 0 {
        return Err(Error::invalid("count_pair_words needs m >= 1"));
    }
    if p > m {
        return Ok(BigUint::from(0u32));
    }
    let fact: BigUint = (1..=2 * p as u64).map(BigUint::from).product();
    Ok((binomial(m, p) * fact) >> p as usize)
}

fn binomial(m: u32, k: u32) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(m - i) / BigUint::from(i + 1);
    }
    acc
}

/// Expands `A_{w_1} ⋯ A_{w_k}` into a map from phase-free strings to complex coefficients.
fn expand_product(ops: &[SparsePauliOperator], letters: &[u8]) -> HashMap<(u64, u64), Complex64> {
    let n = ops[0].n;
    let mut acc: HashMap<(u64, u64), Complex64> = HashMap::from([((0, 0), Complex64::new(1.0, 0.0))]);
    for &l in letters {
        let op = &ops[l as usize - 1];
        let mut next: HashMap<(u64, u64), Complex64> = HashMap::with_capacity(acc.len() * op.terms.len());
        for (&(x, z), &c) in &acc {
            let left = PauliString::from_masks(n, x, z, Phase::ONE);
            for t in &op.terms {
                let prod = left.mul(&t.string).expect("equal lengths");
                *next.entry((prod.x, prod.z)).or_default() += c * t.coeff * prod.phase.to_complex();
            }
        }
        acc = next;
    }
    acc
}

/// `tr(A_{w_1} ⋯ A_{w_k})` computed in the string algebra.
pub fn word_trace(ops: &[SparsePauliOperator], w: &Word) -> Result<Complex64> {
    if ops.is_empty() {
        return Err(Error::invalid("need at least one operator"));
    }
    w.check_alphabet(ops.len())?;
    let letters = w.letters();
    let (head, tail) = letters.split_at(letters.len() / 2);
    let left = expand_product(ops, head);
    let right = expand_product(ops, tail);
    // tr(σ_s σ_t) = δ_{st} for phase-free Hermitian strings
    let (small, large) = if left.len() <= right.len() { (&left, &right) } else { (&right, &left) };
    let mut keys: Vec<_> = small.keys().copied().collect();
    keys.sort_unstable();
    Ok(keys
        .iter()
        .filter_map(|k| large.get(k).map(|v| small[k] * v))
        .sum())
}

/// Monte Carlo mean and standard error of `Re tr(A_{w_1} ⋯ A_{w_k})` over ensemble draws.
pub fn ensemble_moment_estimate(n: usize, m: usize, w: &Word, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let d = w.letters().iter().copied().max().unwrap_or(1) as usize;
    let root = SeedStream::new(seed);
    let values = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let ops = sample_pauli_ensemble(n, m, d, root.child(i))?;
            Ok(word_trace(&ops, w)?.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_stderr(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use PauliLetter::*;

    fn s(lit: &str) -> PauliString {
        lit.parse().unwrap()
    }

    fn single(l: PauliLetter) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match l {
            I => [[one, o], [o, one]],
            X => [[o, one], [one, o]],
            Y => [[o, -i], [i, o]],
            Z => [[one, o], [o, -one]],
        }
    }

    #[test]
    fn multiplication_table_matches_matrices() {
        for a in PauliLetter::ALL {
            for b in PauliLetter::ALL {
                let (ma, mb) = (single(a), single(b));
                let mut prod = [[Complex64::new(0.0, 0.0); 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            prod[i][j] += ma[i][k] * mb[k][j];
                        }
                    }
                }
                let (ph, l) = pauli_mul(a, b);
                let ml = single(l);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((prod[i][j] - ph.to_complex() * ml[i][j]).norm() < 1e-15, "{a:?}{b:?}");
                    }
                }
            }
        }
        assert_eq!(pauli_mul(X, Y), (Phase::I, Z));
        assert_eq!(pauli_mul(I, Z), (Phase::ONE, Z));
        assert_eq!(pauli_mul(Y, Y), (Phase::ONE, I));
    }

    #[test]
    fn string_products() {
        let p = s("XI").mul(&s("YI")).unwrap();
        assert_eq!(p, s("iZI"));
        assert_eq!(s("YI").mul(&s("XI")).unwrap(), s("-iZI"));
        let q = s("XYZ").mul(&s("XYZ")).unwrap();
        assert!(q.is_identity() && q.phase() == Phase::ONE);
        assert!(s("XI").mul(&s("X")).is_err());
    }

    #[test]
    fn literal_round_trip() {
        for lit in ["XIZY", "iX", "-Z", "-iXIZY"] {
            assert_eq!(s(lit).to_string(), lit);
        }
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn traces() {
        assert_eq!(string_trace(&s("II")), Complex64::new(1.0, 0.0));
        assert_eq!(string_trace(&s("XI")), Complex64::new(0.0, 0.0));
        assert_eq!(string_trace(&s("-iII")), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn basis_action_matches_kronecker() {
        let st = s("-YXZ");
        let dense = st.to_dense().unwrap();
        // little-endian: qubit 0 is the least significant bit, so the Kronecker order is reversed
        let letters = st.letters();
        for r in 0..8 {
            for c in 0..8 {
                let mut v = Complex64::new(-1.0, 0.0);
                for (q, l) in letters.iter().enumerate() {
                    v *= single(*l)[(r >> q) & 1][(c >> q) & 1];
                }
                assert!((dense[(r, c)] - v).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn merging_and_hermiticity() {
        let op = SparsePauliOperator::new(2, vec![(0.5, s("XZ")), (0.25, s("XZ")), (1.0, s("-YI"))]).unwrap();
        assert_eq!(op.terms().len(), 2);
        assert_eq!(op.terms()[0].coeff, 0.75);
        assert_eq!(op.terms()[1].coeff, -1.0);
        assert!(crate::ensemble::hermitian_defect(&op.to_dense().unwrap()) < 1e-15);
        assert!(SparsePauliOperator::new(1, vec![(1.0, s("iX"))]).is_err());
        let json = op.to_json();
        assert_eq!(json[0]["s"], "XZ");
        assert_eq!(SparsePauliOperator::from_json(&json).unwrap(), op);
    }

    #[test]
    fn ensemble_shape() {
        let ops = sample_pauli_ensemble(1, 1, 3, SeedStream::new(1)).unwrap();
        assert_eq!(ops.len(), 3);
        for op in &ops {
            assert_eq!(op.terms().len(), 1);
            assert_eq!(op.terms()[0].coeff.abs(), 1.0);
        }
        let ops = sample_pauli_ensemble(10, 5, 1, SeedStream::new(2)).unwrap();
        assert!(ops[0].terms().iter().all(|t| t.string.n() == 10));
    }

    fn brute_counts(m: u32, p: u32) -> (u64, u64) {
        let len = 2 * p;
        let total = (m as u64).pow(len);
        let (mut even, mut pairs) = (0, 0);
        for mut code in 0..total {
            let mut counts = vec![0u32; m as usize];
            for _ in 0..len {
                counts[(code % m as u64) as usize] += 1;
                code /= m as u64;
            }
            if counts.iter().all(|c| c % 2 == 0) {
                even += 1;
            }
            if counts.iter().all(|&c| c == 0 || c == 2) {
                pairs += 1;
            }
        }
        (even, pairs)
    }

    #[test]
    fn counts_match_enumeration() {
        for m in 1..=4 {
            for p in 1..=3 {
                let (even, pairs) = brute_counts(m, p);
                assert_eq!(count_even_words(m, p).unwrap(), BigUint::from(even), "W({m},{p})");
                assert_eq!(count_pair_words(m, p).unwrap(), BigUint::from(pairs), "N({m},{p})");
            }
        }
        assert_eq!(count_even_words(2, 2).unwrap(), BigUint::from(8u32));
        assert_eq!(count_pair_words(2, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(count_pair_words(2, 3).unwrap(), BigUint::from(0u32));
        assert_eq!(count_pair_words(3, 0).unwrap(), BigUint::from(1u32));
        assert!(count_even_words(0, 1).is_err());
        // large arguments stay exact
        assert!(count_even_words(40, 30).unwrap().bits() > 64);
    }

    #[test]
    fn word_trace_matches_dense() {
        let ops = sample_pauli_ensemble(3, 5, 2, SeedStream::new(8)).unwrap();
        let dense: Vec<_> = ops.iter().map(|o| o.to_dense().unwrap()).collect();
        let tuple = crate::ensemble::HermitianTuple::new(dense).unwrap();
        for w in [vec![1u8, 2, 1, 2], vec![1, 1, 2], vec![2, 2, 2, 1, 1]] {
            let w = Word::from(w.as_slice());
            let a = word_trace(&ops, &w).unwrap();
            let b = tuple.word_trace(&w).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn moment_estimates() {
        // odd words vanish in mean; single draws can hit the identity string
        let (mean, se) = ensemble_moment_estimate(2, 4, &Word::from([1u8, 2, 1].as_slice()), 400, 3).unwrap();
        assert!(mean.abs() <= 4.0 * se + 1e-12, "{mean} {se}");
        let (mean, se) = ensemble_moment_estimate(20, 4, &Word::from([1u8, 2, 1].as_slice()), 50, 3).unwrap();
        assert_eq!((mean, se), (0.0, 0.0));
        let (mean, _) = ensemble_moment_estimate(64, 8, &Word::from([1u8, 1].as_slice()), 20, 3).unwrap();
        assert!((mean - 1.0).abs() < 1e-12);
    }
}
