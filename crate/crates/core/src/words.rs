//! Words over a finite alphabet `{1, .., d}` and the non-commutative calculus on them.
//!
//! A [`Word`] indexes both signature coordinates and non-commutative monomials
//! `X_w = X_{w_1} ... X_{w_k}`. Words order by length first and then
//! lexicographically, which gives every coefficient table a deterministic
//! iteration order.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite sequence of letters, each letter at least 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word, rejecting the letter 0.
    pub fn new(letters: Vec<u8>) -> Result<Self> {
        if letters.contains(&0) {
            return Err(Error::invalid("word letters start at 1"));
        }
        Ok(Word(letters))
    }

    /// Builds a word and checks every letter lies in `[1, d]`.
    pub fn with_alphabet(letters: Vec<u8>, d: usize) -> Result<Self> {
        let w = Word::new(letters)?;
        w.check_alphabet(d)?;
        Ok(w)
    }

    /// `letter` repeated `n` times.
    pub fn repeat(letter: u8, n: usize) -> Self {
        assert!(letter >= 1, "word letters start at 1");
        Word(vec![letter; n])
    }

    pub fn check_alphabet(&self, d: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l as usize > d || l == 0) {
            Some(l) => Err(Error::invalid(format!("letter {l} outside [1, {d}]"))),
            None => Ok(()),
        }
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `self` followed by a single letter.
    pub fn push(&self, letter: u8) -> Word {
        let mut v = self.0.clone();
        v.push(letter);
        Word(v)
    }

    /// Cyclic rotation moving the first `k` letters to the end.
    pub fn rotate(&self, k: usize) -> Word {
        if self.is_empty() {
            return self.clone();
        }
        let mut v = self.0.clone();
        v.rotate_left(k % self.len());
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Position of this word inside its length level, in base-`d` digits.
    pub fn level_index(&self, d: usize) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &l| acc * d + (l as usize - 1))
    }

    /// Position of this word in the length-then-lexicographic enumeration.
    pub fn global_index(&self, d: usize) -> usize {
        level_offset(d, self.len()) + self.level_index(d)
    }

    /// Inverse of [`Word::level_index`].
    pub fn from_level_index(len: usize, mut index: usize, d: usize) -> Word {
        let mut v = vec![0u8; len];
        for slot in v.iter_mut().rev() {
            *slot = (index % d) as u8 + 1;
            index /= d;
        }
        Word(v)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<&[u8]> for Word {
    fn from(letters: &[u8]) -> Self {
        Word::new(letters.to_vec()).expect("word letters start at 1")
    }
}

impl<const N: usize> From<[u8; N]> for Word {
    fn from(letters: [u8; N]) -> Self {
        Word::from(&letters[..])
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("]")
    }
}

/// Number of words of length `< len` over `d` letters.
pub fn level_offset(d: usize, len: usize) -> usize {
    if d == 1 {
        len
    } else {
        (d.pow(len as u32) - 1) / (d - 1)
    }
}

/// Number of words of length `<= max_len` over `d` letters.
pub fn word_count(d: usize, max_len: usize) -> usize {
    level_offset(d, max_len + 1)
}

/// An element `X_u ⊗ X_v` of the image of the free difference quotient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPair {
    pub left: Word,
    pub right: Word,
}

/// A pair partition of `{1, .., 2p}`; pairs are stored as `(a, b)` with `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pairing {
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    /// Validates that `pairs` partition `{1, .., 2p}` with `a < b` in each pair.
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = pairs.len() * 2;
        let mut seen = vec![false; n + 1];
        for &(a, b) in &pairs {
            if a == 0 || b > n || a >= b || seen[a] || seen[b] {
                return Err(Error::invalid(format!("({a}, {b}) breaks the pair partition")));
            }
            seen[a] = true;
            seen[b] = true;
        }
        pairs.sort_unstable();
        Ok(Pairing { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_noncrossing(&self) -> bool {
        self.pairs.iter().all(|&(a, b)| {
            self.pairs
                .iter()
                .all(|&(c, e)| !(a < c && c < b && b < e))
        })
    }
}

/// All words of length `0..=max_len`, in length-then-lexicographic order.
pub fn all_words(d: usize, max_len: usize) -> Vec<Word> {
    assert!(d >= 1, "alphabet must be nonempty");
    let mut out = Vec::with_capacity(word_count(d, max_len));
    for len in 0..=max_len {
        let level = d.pow(len as u32);
        out.extend((0..level).map(|i| Word::from_level_index(len, i, d)));
    }
    out
}

/// `∂_i X_w = Σ_{w = u i v} X_u ⊗ X_v`, one pair per occurrence of `i`, left to right.
pub fn free_difference_quotient(w: &Word, i: u8) -> Vec<WordPair> {
    let l = w.letters();
    l.iter()
        .enumerate()
        .filter(|&(_, &c)| c == i)
        .map(|(p, _)| WordPair {
            left: Word(l[..p].to_vec()),
            right: Word(l[p + 1..].to_vec()),
        })
        .collect()
}

/// `D_i X_w = Σ_{w = u i v} X_v X_u`.
pub fn cyclic_derivative(w: &Word, i: u8) -> Vec<Word> {
    free_difference_quotient(w, i)
        .into_iter()
        .map(|p| p.right.concat(&p.left))
        .collect()
}

/// Non-crossing pair partitions of `{1, .., n}`.
///
/// Built by pairing the first free point with every partner that leaves an
/// even number of points on both sides, so no crossing pairing is ever formed.
pub fn noncrossing_pairings(n: usize) -> Result<Vec<Pairing>> {
    if n % 2 == 1 {
        return Err(Error::OddPairing(n));
    }
    let raw = nc_range(1, n);
    Ok(raw.into_iter().map(|pairs| Pairing { pairs }).collect())
}

fn nc_range(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
    if lo > hi {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut partner = lo + 1;
    while partner <= hi {
        let inner = nc_range(lo + 1, partner - 1);
        let outer = nc_range(partner + 1, hi);
        for a in &inner {
            for b in &outer {
                let mut pairs = Vec::with_capacity(1 + a.len() + b.len());
                pairs.push((lo, partner));
                pairs.extend_from_slice(a);
                pairs.extend_from_slice(b);
                pairs.sort_unstable();
                out.push(pairs);
            }
        }
        partner += 2;
    }
    out
}

/// `n`-th Catalan number.
pub fn catalan(n: usize) -> u64 {
    // C_{k+1} = C_k * 2(2k+1) / (k+2), exact at every step
    let mut c: u64 = 1;
    for k in 0..n as u64 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

/// Joint moment `τ(X_w)` of free standard semicircular variables.
///
/// Counts the non-crossing pairings of the positions of `w` in which every
/// pair joins equal letters, via an interval recursion on the first position.
pub fn semicircular_moment(w: &Word) -> f64 {
    let l = w.letters();
    let n = l.len();
    if n % 2 == 1 {
        return 0.0;
    }
    // table[i][j]: matching pairings of l[i..j]
    let mut table = vec![vec![0u64; n + 1]; n + 1];
    for i in 0..=n {
        table[i][i] = 1;
    }
    for len in (2..=n).step_by(2) {
        for i in 0..=n - len {
            let j = i + len;
            let mut acc = 0u64;
            let mut k = i + 1;
            while k < j {
                if l[k] == l[i] {
                    acc += table[i + 1][k] * table[k + 1][j];
                }
                k += 2;
            }
            table[i][j] = acc;
        }
    }
    table[0][n] as f64
}
