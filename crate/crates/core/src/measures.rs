//! Probability measures on `Σ^k`, the large-deviations rate function and the
//! linear map from k-tuple measures to forbidden-word frequencies.

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rational::{ratio, Rational};
use crate::words::{Alphabet, ConstraintSpec, Word};

/// Max-norm shift defect below which a real-valued measure counts as shift-invariant.
pub const SHIFT_TOLERANCE: f64 = 1e-10;

/// A measure on `Σ^k`, weights in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KTupleMeasure {
    alphabet_size: usize,
    k: usize,
    weights: Vec<f64>,
}

impl KTupleMeasure {
    pub fn new(alphabet: Alphabet, k: usize, weights: Vec<f64>) -> Result<Self> {
        let expected = alphabet
            .count(k)
            .ok_or_else(|| input(format!("|Σ|^{k} overflows")))?;
        if weights.len() != expected {
            return Err(input(format!(
                "measure on Σ^{k} needs {expected} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < -1e-15) {
            return Err(input("measure weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(input(format!("measure weights sum to {total}, not 1")));
        }
        Ok(KTupleMeasure { alphabet_size: alphabet.size(), k, weights })
    }

    pub fn uniform(alphabet: Alphabet, k: usize) -> Self {
        let len = alphabet.count(k).expect("uniform measure size");
        KTupleMeasure { alphabet_size: alphabet.size(), k, weights: vec![1.0 / len as f64; len] }
    }

    pub fn point_mass(word: &Word, alphabet: Alphabet) -> Self {
        let len = alphabet.count(word.len()).expect("point mass size");
        let mut weights = vec![0.0; len];
        weights[word.index(&alphabet)] = 1.0;
        KTupleMeasure { alphabet_size: alphabet.size(), k: word.len(), weights }
    }

    /// Converts exact weights; their sum must be one.
    pub fn from_rationals(alphabet: Alphabet, k: usize, weights: &[Rational]) -> Result<Self> {
        let w = weights.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
        KTupleMeasure::new(alphabet, k, w)
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.alphabet_size).expect("validated alphabet")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, word: &Word) -> f64 {
        self.weights[word.index(&self.alphabet())]
    }

    /// Max-norm difference of the drop-last and drop-first marginals.
    pub fn shift_defect(&self) -> f64 {
        let (first, last) = two_marginals(&self.weights, self.alphabet_size);
        first
            .iter()
            .zip(&last)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_shift_invariant(&self) -> bool {
        self.shift_defect() <= SHIFT_TOLERANCE
    }

    pub fn max_distance(&self, other: &KTupleMeasure) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `(drop-last, drop-first)` marginals of a weight vector on `Σ^k`.
fn two_marginals<T: Clone + Zero + for<'a> std::ops::AddAssign<&'a T>>(
    weights: &[T],
    q: usize,
) -> (Vec<T>, Vec<T>) {
    let len = weights.len() / q;
    let mut first = vec![T::zero(); len];
    let mut last = vec![T::zero(); len];
    for (idx, w) in weights.iter().enumerate() {
        first[idx / q] += w;
        last[idx % len] += w;
    }
    (first, last)
}

/// Exact shift-invariance of rational weights on `Σ^k`.
pub fn is_shift_invariant_exact(weights: &[Rational], alphabet: &Alphabet) -> bool {
    let (first, last) = two_marginals(weights, alphabet.size());
    first == last
}

/// `ν₁(s₀..s_{k−2}) = Σ_σ ν(s₀..s_{k−2}σ)`.
pub fn marginal_first(nu: &KTupleMeasure) -> Result<KTupleMeasure> {
    if nu.k < 2 {
        return Err(input("first marginal needs k ≥ 2"));
    }
    let (first, _) = two_marginals(&nu.weights, nu.alphabet_size);
    Ok(KTupleMeasure { alphabet_size: nu.alphabet_size, k: nu.k - 1, weights: first })
}

/// `(μ⊗q)(i₁..i_k) = μ(i₁..i_{k−1})·q(i_k)`.
pub fn product_extend(mu: &KTupleMeasure, q: &[f64]) -> Result<KTupleMeasure> {
    if q.len() != mu.alphabet_size {
        return Err(input(format!(
            "symbol distribution has {} entries for alphabet of size {}",
            q.len(),
            mu.alphabet_size
        )));
    }
    let weights = mu
        .weights
        .iter()
        .flat_map(|m| q.iter().map(move |p| m * p))
        .collect();
    KTupleMeasure::new(mu.alphabet(), mu.k + 1, weights)
}

/// `H(ν | ν₁⊗q)` in bits; `+∞` for measures that are not shift-invariant.
pub fn rate_function(nu: &KTupleMeasure, q: &[f64]) -> Result<f64> {
    if q.len() != nu.alphabet_size {
        return Err(input("symbol distribution does not match the alphabet"));
    }
    if q.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
        return Err(input("symbol distribution must be strictly positive"));
    }
    if !nu.is_shift_invariant() {
        return Ok(f64::INFINITY);
    }
    let (first, _) = two_marginals(&nu.weights, nu.alphabet_size);
    let mut total = 0.0;
    for (idx, &w) in nu.weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let base = first[idx / nu.alphabet_size] * q[idx % nu.alphabet_size];
        if base <= 0.0 {
            return Ok(f64::INFINITY);
        }
        total += w * (w / base).log2();
    }
    Ok(total.max(0.0))
}

/// `log2|Σ| − I(ν)` for uniform `q`, i.e. the conditional entropy `H(ν) − H(ν₁)`.
pub fn entropy_rate(nu: &KTupleMeasure) -> f64 {
    let q = vec![1.0 / nu.alphabet_size as f64; nu.alphabet_size];
    let i = rate_function(nu, &q).expect("uniform q is valid");
    (nu.alphabet_size as f64).log2() - i
}

/// Rows indexed by forbidden words, columns by `Σ^k`; entry is 1 iff the
/// column word starts with the row word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    alphabet: Alphabet,
    k: usize,
    rows: Vec<Vec<usize>>,
}

impl ConstraintMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.alphabet.count(self.k).expect("validated size")
    }

    /// Column indices with a one in the given row.
    pub fn support(&self, row: usize) -> &[usize] {
        &self.rows[row]
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        u8::from(self.rows[row].binary_search(&col).is_ok())
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.num_rows())
            .map(|r| (0..self.num_cols()).map(|c| self.entry(r, c)).collect())
            .collect()
    }
}

pub fn build_constraint_matrix(spec: &ConstraintSpec) -> Result<ConstraintMatrix> {
    let words: Vec<Word> = spec.forbidden().iter().map(|c| c.word.clone()).collect();
    matrix_for_words(&words, *spec.alphabet())
}

/// Matrix for an arbitrary word list (reducedness not required), with
/// `k` the longest word length.
pub fn matrix_for_words(words: &[Word], alphabet: Alphabet) -> Result<ConstraintMatrix> {
    if words.is_empty() {
        return Err(input("forbidden set is empty"));
    }
    if words.iter().any(Word::is_empty) {
        return Err(input("forbidden words must be nonempty"));
    }
    let k = words.iter().map(Word::len).max().unwrap_or(1);
    alphabet.count(k).ok_or_else(|| input("|Σ|^k overflows"))?;
    let rows = words
        .iter()
        .map(|phi| {
            // columns starting with φ form one contiguous lexicographic block
            let block = alphabet.count(k - phi.len()).expect("fits");
            let start = phi.index(&alphabet) * block;
            (start..start + block).collect()
        })
        .collect();
    Ok(ConstraintMatrix { alphabet, k, rows })
}

/// `f(ν) = 𝓜ν`.
pub fn apply_f(m: &ConstraintMatrix, nu: &KTupleMeasure) -> Result<Vec<f64>> {
    if nu.k != m.k || nu.alphabet_size != m.alphabet.size() {
        return Err(input("measure does not match the constraint matrix"));
    }
    Ok(m.rows
        .iter()
        .map(|cols| cols.iter().map(|&c| nu.weights[c]).sum())
        .collect())
}

/// `f(ν) = 𝓜ν` on exact weights.
pub fn apply_f_exact(m: &ConstraintMatrix, weights: &[Rational]) -> Result<Vec<Rational>> {
    if weights.len() != m.num_cols() {
        return Err(input("weight vector does not match the constraint matrix"));
    }
    Ok(m.rows
        .iter()
        .map(|cols| cols.iter().fold(Rational::zero(), |acc, &c| acc + &weights[c]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    Linear,
    Cyclic,
}

/// Window counts of a sequence; weights are `count / n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    alphabet: Alphabet,
    k: usize,
    n: usize,
    counts: Vec<u64>,
}

impl EmpiricalDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn weights(&self) -> Vec<Rational> {
        self.counts
            .iter()
            .map(|&c| ratio(c as i64, self.n as i64))
            .collect()
    }

    pub fn to_measure(&self) -> KTupleMeasure {
        let weights = self.counts.iter().map(|&c| c as f64 / self.n as f64).collect();
        KTupleMeasure { alphabet_size: self.alphabet.size(), k: self.k, weights }
    }
}

/// Linear mode counts the `|S|−k+1` windows of `S`; cyclic mode counts all
/// `|S|` windows with wrap-around.
pub fn empirical_k_distribution(
    sequence: &Word,
    alphabet: &Alphabet,
    k: usize,
    mode: WindowMode,
) -> Result<EmpiricalDistribution> {
    if k == 0 {
        return Err(input("k must be positive"));
    }
    if sequence.len() < k {
        return Err(Error::Input(format!(
            "sequence of length {} shorter than k = {k}",
            sequence.len()
        )));
    }
    let s = sequence.symbols();
    if s.iter().any(|&c| c as usize >= alphabet.size()) {
        return Err(input("sequence symbol outside alphabet"));
    }
    let q = alphabet.size();
    let cols = alphabet.count(k).ok_or_else(|| input("|Σ|^k overflows"))?;
    let windows = match mode {
        WindowMode::Linear => s.len() - k + 1,
        WindowMode::Cyclic => s.len(),
    };
    let mut counts = vec![0u64; cols];
    for start in 0..windows {
        let idx = (0..k).fold(0usize, |acc, j| acc * q + s[(start + j) % s.len()] as usize);
        counts[idx] += 1;
    }
    Ok(EmpiricalDistribution { alphabet: *alphabet, k, n: windows, counts })
}
