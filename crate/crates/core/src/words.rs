//! Words over a finite alphabet, subword frequencies, and membership in
//! (weak, cyclic) semiconstrained systems.
//!
//! Every frequency here is an exact rational. Membership decisions never
//! touch floating point, so a frequency sitting exactly on its cap is
//! always admitted.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{input, Error, Result};
use crate::rational::{self, ratio, Rational};

/// Largest exhaustive scan, in bits of `|Σ|^n`.
pub const ENUMERATION_BUDGET_BITS: u32 = 26;

const SYMBOL_CHARS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(input(format!("alphabet size must be at least 2, got {size}")));
        }
        if size > 256 {
            return Err(input(format!("alphabet size {size} exceeds 256")));
        }
        Ok(Alphabet { size })
    }

    pub fn binary() -> Self {
        Alphabet { size: 2 }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `|Σ|^len`, or `None` on overflow.
    pub fn count(&self, len: usize) -> Option<usize> {
        self.size.checked_pow(u32::try_from(len).ok()?)
    }
}

/// A finite word. Symbols are `0..alphabet.size()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<u8>,
}

impl Word {
    pub fn new(symbols: Vec<u8>, alphabet: &Alphabet) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| s as usize >= alphabet.size()) {
            return Err(input(format!(
                "symbol {bad} outside alphabet of size {}",
                alphabet.size()
            )));
        }
        Ok(Word { symbols })
    }

    /// Parses a symbol string such as `"1101"`; symbols beyond 9 use `a..z`.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let symbols = text
            .trim()
            .bytes()
            .map(|c| {
                SYMBOL_CHARS
                    .iter()
                    .position(|&s| s == c.to_ascii_lowercase())
                    .map(|p| p as u8)
                    .ok_or_else(|| Error::Parse(format!("bad symbol {:?} in {text:?}", c as char)))
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(symbols, alphabet)
    }

    /// The word whose lexicographic rank among `Σ^len` is `index`.
    pub fn from_index(index: usize, len: usize, alphabet: &Alphabet) -> Self {
        let q = alphabet.size();
        let mut symbols = vec![0u8; len];
        let mut rest = index;
        for slot in symbols.iter_mut().rev() {
            *slot = (rest % q) as u8;
            rest /= q;
        }
        Word { symbols }
    }

    /// Lexicographic rank among words of the same length.
    pub fn index(&self, alphabet: &Alphabet) -> usize {
        self.symbols
            .iter()
            .fold(0usize, |acc, &s| acc * alphabet.size() + s as usize)
    }

    pub fn repeat(symbol: u8, len: usize) -> Self {
        Word { symbols: vec![symbol; len] }
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn window(&self, start: usize, len: usize) -> &[u8] {
        &self.symbols[start..start + len]
    }

    pub fn contains(&self, other: &Word) -> bool {
        other.len() <= self.len() && count_occurrences(other.symbols(), self.symbols()) > 0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.symbols {
            let c = SYMBOL_CHARS.get(s as usize).copied().unwrap_or(b'?');
            write!(f, "{}", c as char)?;
        }
        Ok(())
    }
}

pub(crate) fn count_occurrences(tau: &[u8], omega: &[u8]) -> usize {
    if tau.len() > omega.len() {
        return 0;
    }
    omega.windows(tau.len().max(1)).filter(|w| *w == tau).count()
}

pub(crate) fn count_cyclic_occurrences(tau: &[u8], omega: &[u8]) -> usize {
    let n = omega.len();
    (0..n)
        .filter(|&i| tau.iter().enumerate().all(|(j, &s)| omega[(i + j) % n] == s))
        .count()
}

/// Frequency of `tau` among the `|ω|−|τ|+1` windows of `omega`; zero when
/// `tau` is longer than `omega`.
pub fn subword_frequency(tau: &Word, omega: &Word) -> Rational {
    if tau.len() > omega.len() {
        return Rational::zero();
    }
    let windows = omega.len() - tau.len() + 1;
    ratio(count_occurrences(tau.symbols(), omega.symbols()) as i64, windows as i64)
}

/// Frequency of `tau` among the `|ω|` cyclic windows of `omega`.
pub fn cyclic_subword_frequency(tau: &Word, omega: &Word) -> Result<Rational> {
    if omega.is_empty() {
        return Err(input("cyclic frequency of an empty word"));
    }
    let hits = count_cyclic_occurrences(tau.symbols(), omega.symbols());
    Ok(ratio(hits as i64, omega.len() as i64))
}

/// An `n × … × n` array over an alphabet, stored in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubicArray {
    side: usize,
    dims: usize,
    cells: Vec<u8>,
}

impl CubicArray {
    pub fn new(side: usize, dims: usize, cells: Vec<u8>) -> Result<Self> {
        if dims == 0 || side == 0 {
            return Err(input("array must have positive side and dimension"));
        }
        let expected = side
            .checked_pow(dims as u32)
            .ok_or_else(|| input("array too large"))?;
        if cells.len() != expected {
            return Err(input(format!(
                "array with {} cells is not {side}^{dims}",
                cells.len()
            )));
        }
        Ok(CubicArray { side, dims, cells })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dims - 1 - axis) as u32)
    }

    /// Linear index of the cell reached from `cell` by `steps` moves along `axis`, cyclically.
    fn shifted(&self, cell: usize, axis: usize, steps: usize) -> usize {
        let stride = self.stride(axis);
        let coord = (cell / stride) % self.side;
        let moved = (coord + steps) % self.side;
        cell - coord * stride + moved * stride
    }
}

/// Cyclic frequency of `tau` along every axis of `array`, normalised by `n^D`
/// (not `D·n^D`), so the value can exceed one.
pub fn cyclic_frequency_ddim(tau: &Word, array: &CubicArray) -> Rational {
    let total = array.cells.len();
    let mut hits = 0usize;
    for axis in 0..array.dims {
        for cell in 0..total {
            let matched = tau
                .symbols()
                .iter()
                .enumerate()
                .all(|(j, &s)| array.cells[array.shifted(cell, axis, j)] == s);
            if matched {
                hits += 1;
            }
        }
    }
    ratio(hits as i64, total as i64)
}

/// True iff no word of the list has a proper subword that is also listed.
pub fn is_reduced(forbidden: &[Word]) -> bool {
    forbidden.iter().all(|w| {
        forbidden
            .iter()
            .all(|v| !(v.len() < w.len() && w.contains(v)))
    })
}

/// Additive slack `ξ(n) = a/n + b/√n` admitted by weak membership.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tolerance {
    #[serde(with = "rational::serde_str")]
    pub a: Rational,
    #[serde(with = "rational::serde_str", default = "Rational::zero")]
    pub b: Rational,
}

impl Tolerance {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if a.is_negative() || b.is_negative() {
            return Err(input("tolerance coefficients must be nonnegative"));
        }
        if a.is_zero() && b.is_zero() {
            return Err(input("tolerance must not vanish identically"));
        }
        Ok(Tolerance { a, b })
    }

    /// `a = 2|Σ|^{k−1}`, `b = 0`.
    pub fn default_for(alphabet: &Alphabet, k: usize) -> Self {
        let a = 2 * alphabet.size().pow(k.saturating_sub(1) as u32);
        Tolerance { a: rational::from_int(a as i64), b: Rational::zero() }
    }

    pub fn value(&self, n: usize) -> f64 {
        if n == 0 {
            return f64::INFINITY;
        }
        let n = n as f64;
        rational::to_f64(&self.a) / n + rational::to_f64(&self.b) / n.sqrt()
    }

    /// Exact test of `x ≤ c + ξ(n)`.
    pub fn admits(&self, x: &Rational, cap: &Rational, n: usize) -> bool {
        let slack = x - cap - &self.a / BigInt::from(n);
        if !slack.is_positive() {
            return true;
        }
        // slack ≤ b/√n  ⇔  slack² · n ≤ b²
        &slack * &slack * BigInt::from(n) <= &self.b * &self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Strict,
    Weak,
    Cyclic,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Mode::Strict),
            "weak" => Ok(Mode::Weak),
            "cyclic" => Ok(Mode::Cyclic),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Weak => "weak",
            Mode::Cyclic => "cyclic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub word: Word,
    pub cap: Rational,
}

/// A reduced forbidden set with frequency caps and a weak tolerance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSpec {
    alphabet: Alphabet,
    forbidden: Vec<Constraint>,
    tolerance: Tolerance,
}

impl ConstraintSpec {
    /// Validates the forbidden set; `tolerance = None` selects the default
    /// `ξ(n) = 2|Σ|^{k−1}/n`.
    pub fn new(
        alphabet: Alphabet,
        forbidden: Vec<Constraint>,
        tolerance: Option<Tolerance>,
    ) -> Result<Self> {
        if forbidden.is_empty() {
            return Err(input("forbidden set is empty"));
        }
        for c in &forbidden {
            if c.word.is_empty() {
                return Err(input("forbidden words must be nonempty"));
            }
            if c.word.symbols().iter().any(|&s| s as usize >= alphabet.size()) {
                return Err(input(format!("word {} outside alphabet", c.word)));
            }
            if !rational::is_unit_interval(&c.cap) {
                return Err(input(format!("cap of {} is outside [0,1]", c.word)));
            }
        }
        let words: Vec<Word> = forbidden.iter().map(|c| c.word.clone()).collect();
        for (i, w) in words.iter().enumerate() {
            if words[..i].contains(w) {
                return Err(input(format!("duplicate forbidden word {w}")));
            }
        }
        if !is_reduced(&words) {
            return Err(input("forbidden set is not reduced"));
        }
        let k = words.iter().map(Word::len).max().unwrap_or(1);
        let tolerance = match tolerance {
            Some(t) => Tolerance::new(t.a, t.b)?,
            None => Tolerance::default_for(&alphabet, k),
        };
        Ok(ConstraintSpec { alphabet, forbidden, tolerance })
    }

    /// The binary `(0,k,p)`-RLL system: forbidden word `1^{k+1}` capped at `p`.
    pub fn rll(k: usize, p: Rational) -> Result<Self> {
        let alphabet = Alphabet::binary();
        ConstraintSpec::new(
            alphabet,
            vec![Constraint { word: Word::repeat(1, k + 1), cap: p }],
            None,
        )
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn forbidden(&self) -> &[Constraint] {
        &self.forbidden
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tolerance
    }

    /// Longest forbidden word length.
    pub fn k(&self) -> usize {
        self.forbidden.iter().map(|c| c.word.len()).max().unwrap_or(1)
    }

    /// Largest admissible occurrence count of each forbidden word in a word
    /// of length `n`; `None` means unlimited.
    pub fn occurrence_limits(&self, n: usize, mode: Mode) -> Vec<Option<usize>> {
        self.forbidden
            .iter()
            .map(|c| {
                let windows = match mode {
                    Mode::Cyclic => n,
                    Mode::Strict | Mode::Weak => (n + 1).checked_sub(c.word.len()).unwrap_or(0),
                };
                if windows == 0 {
                    return None;
                }
                let ok = |count: usize| {
                    let freq = ratio(count as i64, windows as i64);
                    match mode {
                        Mode::Weak => self.tolerance.admits(&freq, &c.cap, n),
                        _ => freq <= c.cap,
                    }
                };
                if ok(windows) {
                    return None;
                }
                // largest count admitted; `ok` is monotone and ok(0) holds
                let (mut lo, mut hi) = (0usize, windows);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if ok(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(lo)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpecFile::from(self)).expect("spec serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpecFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("spec JSON: {e}")))?;
        file.try_into()
    }

    /// SHA-256 of the compact canonical JSON form.
    pub fn digest(&self) -> [u8; 32] {
        let canonical = serde_json::to_string(&SpecFile::from(self)).expect("spec serialises");
        Sha256::digest(canonical.as_bytes()).into()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecFile {
    alphabet_size: usize,
    forbidden: Vec<ConstraintFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<Tolerance>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConstraintFile {
    word: String,
    #[serde(with = "rational::serde_str")]
    cap: Rational,
}

impl From<&ConstraintSpec> for SpecFile {
    fn from(spec: &ConstraintSpec) -> Self {
        SpecFile {
            alphabet_size: spec.alphabet.size(),
            forbidden: spec
                .forbidden
                .iter()
                .map(|c| ConstraintFile { word: c.word.to_string(), cap: c.cap.clone() })
                .collect(),
            tolerance: Some(spec.tolerance.clone()),
        }
    }
}

impl TryFrom<SpecFile> for ConstraintSpec {
    type Error = Error;

    fn try_from(file: SpecFile) -> Result<Self> {
        let alphabet = Alphabet::new(file.alphabet_size)?;
        let forbidden = file
            .forbidden
            .into_iter()
            .map(|c| Ok(Constraint { word: Word::parse(&c.word, &alphabet)?, cap: c.cap }))
            .collect::<Result<Vec<_>>>()?;
        ConstraintSpec::new(alphabet, forbidden, file.tolerance)
    }
}

fn admitted(omega: &[u8], spec: &ConstraintSpec, limits: &[Option<usize>], mode: Mode) -> bool {
    spec.forbidden.iter().zip(limits).all(|(c, limit)| match limit {
        None => true,
        Some(max) => {
            let hits = match mode {
                Mode::Cyclic => count_cyclic_occurrences(c.word.symbols(), omega),
                _ => count_occurrences(c.word.symbols(), omega),
            };
            hits <= *max
        }
    })
}

/// Membership of `omega` in the strict, weak or cyclic system of `spec`.
pub fn member(omega: &Word, spec: &ConstraintSpec, mode: Mode) -> bool {
    if omega.is_empty() {
        return true;
    }
    let limits = spec.occurrence_limits(omega.len(), mode);
    admitted(omega.symbols(), spec, &limits, mode)
}

/// Fails with [`Error::Budget`] when `|Σ|^n` exceeds the scan budget.
pub fn check_enumeration_budget(alphabet: &Alphabet, n: usize) -> Result<()> {
    let q = alphabet.size();
    let bits = n as f64 * (q as f64).log2();
    if bits > ENUMERATION_BUDGET_BITS as f64 + 1e-9 {
        return Err(Error::Budget(format!(
            "{q}^{n} words exceeds 2^{ENUMERATION_BUDGET_BITS}"
        )));
    }
    Ok(())
}

/// Exact number of admissible words of length `n`, by exhaustive scan.
pub fn enumerate_count(spec: &ConstraintSpec, n: usize, mode: Mode) -> Result<u64> {
    let q = spec.alphabet.size();
    check_enumeration_budget(&spec.alphabet, n)?;
    if n == 0 {
        return Ok(1);
    }
    let limits = spec.occurrence_limits(n, mode);
    if limits.iter().all(Option::is_none) {
        return Ok((q as u64).pow(n as u32));
    }
    let mut word = vec![0u8; n];
    let mut count = 0u64;
    loop {
        if admitted(&word, spec, &limits, mode) {
            count += 1;
        }
        // odometer increment, last symbol fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(count);
            }
            pos -= 1;
            word[pos] += 1;
            if (word[pos] as usize) < q {
                break;
            }
            word[pos] = 0;
        }
    }
}

/// `(n, |B_{n−1}|, |B^cyc_n|, |B_{n+k}|)` for the `(0,k,p)`-RLL system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SandwichRow {
    pub n: usize,
    pub linear_shorter: u64,
    pub cyclic: u64,
    pub linear_longer: u64,
}

impl SandwichRow {
    pub fn holds(&self) -> bool {
        self.linear_shorter <= self.cyclic && self.cyclic <= self.linear_longer
    }
}

/// Counts `|B_{n−1}| ≤ |B^cyc_n| ≤ |B_{n+k}|` for `k+2 ≤ n ≤ n_max`.
pub fn cyclic_sandwich(k: usize, p: Rational, n_max: usize) -> Result<Vec<SandwichRow>> {
    let spec = ConstraintSpec::rll(k, p)?;
    (k + 2..=n_max)
        .map(|n| {
            Ok(SandwichRow {
                n,
                linear_shorter: enumerate_count(&spec, n - 1, Mode::Strict)?,
                cyclic: enumerate_count(&spec, n, Mode::Cyclic)?,
                linear_longer: enumerate_count(&spec, n + k, Mode::Strict)?,
            })
        })
        .collect()
}
