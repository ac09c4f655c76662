//! Binary arithmetic coding with 63-bit interval registers.
//!
//! Biasing runs the decoder on uniform bits to produce a Bernoulli(q)-looking
//! stream; unbiasing runs the encoder on that stream and reads the original
//! bits back off the exact lower end of the final interval.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{input, Error, Result};

const PRECISION: u32 = 63;
const HALF: u64 = 1 << 62;
const QUARTER: u64 = 1 << 61;
const TOP: u64 = (1 << PRECISION) - 1;
const PROB_BITS: u32 = 32;

/// Probability of symbol 0 in 32-bit fixed point, both symbols possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probability(u32);

impl Probability {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(input(format!("coding probability {q} must lie in (0, 1)")));
        }
        let scaled = (q * (1u64 << PROB_BITS) as f64).round();
        Ok(Probability(scaled.clamp(1.0, u32::MAX as f64) as u32))
    }

    pub fn fixed(&self) -> u32 {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 / (1u64 << PROB_BITS) as f64
    }
}

#[derive(Debug, Clone, Copy)]
enum Scale {
    Low,
    High,
    Middle,
}

/// Interval registers shared by both directions. The current interval is
/// `[low, high + 1)` in coordinates magnified by `2^shifts`.
#[derive(Debug, Clone)]
pub struct ArithmeticCoder {
    q: Probability,
    low: u64,
    high: u64,
    pending: u64,
    shifts: u64,
}

impl ArithmeticCoder {
    pub fn new(q: Probability) -> Self {
        ArithmeticCoder { q, low: 0, high: TOP, pending: 0, shifts: 0 }
    }

    fn split(&self) -> u64 {
        let range = (self.high - self.low + 1) as u128;
        let zero_part = ((range * self.q.0 as u128) >> PROB_BITS) as u64;
        debug_assert!(zero_part >= 1 && (zero_part as u128) < range);
        self.low + zero_part
    }

    fn narrow(&mut self, symbol: u8) {
        let split = self.split();
        if symbol == 0 {
            self.high = split - 1;
        } else {
            self.low = split;
        }
    }

    /// The next magnification step, if any.
    fn scale_step(&mut self) -> Option<Scale> {
        let kind = if self.high < HALF {
            Scale::Low
        } else if self.low >= HALF {
            self.low -= HALF;
            self.high -= HALF;
            Scale::High
        } else if self.low >= QUARTER && self.high < HALF + QUARTER {
            self.low -= QUARTER;
            self.high -= QUARTER;
            Scale::Middle
        } else {
            debug_assert!(self.high - self.low > QUARTER);
            return None;
        };
        self.low <<= 1;
        self.high = (self.high << 1) | 1;
        self.shifts += 1;
        Some(kind)
    }

    /// True when the interval is wider than `2^{−bits}`.
    pub fn wider_than(&self, bits: usize) -> bool {
        let width = (self.high - self.low + 1) as u128;
        let exponent = PRECISION as i128 + self.shifts as i128 - bits as i128;
        if exponent < 0 {
            true
        } else if exponent >= 64 {
            false
        } else {
            width > 1u128 << exponent
        }
    }
}

/// Output of [`bias`]: the symbols and whether the consumed input failed to
/// pin an interval of width at most `2^{−|η|}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Biased {
    pub symbols: Vec<u8>,
    pub coarse: bool,
}

/// Arithmetic-decodes `eta` (followed by an all-zero tail) into exactly
/// `target_len` symbols of a Bernoulli(q) source.
pub fn bias(eta: &[u8], q: Probability, target_len: usize) -> Biased {
    let mut bits = eta.iter().copied().chain(std::iter::repeat(0));
    let mut next_bit = move || bits.next().unwrap_or(0) as u64;
    let mut coder = ArithmeticCoder::new(q);
    let mut value = 0u64;
    for _ in 0..PRECISION {
        value = (value << 1) | next_bit();
    }
    let mut symbols = Vec::with_capacity(target_len);
    for _ in 0..target_len {
        let symbol = u8::from(value >= coder.split());
        coder.narrow(symbol);
        symbols.push(symbol);
        while let Some(kind) = coder.scale_step() {
            value -= match kind {
                Scale::Low => 0,
                Scale::High => HALF,
                Scale::Middle => QUARTER,
            };
            value = (value << 1) | next_bit();
        }
        debug_assert!(coder.low <= value && value <= coder.high);
    }
    Biased { symbols, coarse: coder.wider_than(eta.len()) }
}

/// Inverse of [`bias`]: arithmetic-encodes `symbols` and returns the
/// `out_len` bits `η` with `η·2^{−out_len}` the first such point at or above
/// the interval's lower end.
pub fn unbias(symbols: &[u8], q: Probability, out_len: usize) -> Result<Vec<u8>> {
    let mut coder = ArithmeticCoder::new(q);
    let mut emitted: Vec<u8> = Vec::with_capacity(symbols.len());
    for &symbol in symbols {
        if symbol > 1 {
            return Err(Error::Codec(format!("symbol {symbol} in a binary stream")));
        }
        coder.narrow(symbol);
        while let Some(kind) = coder.scale_step() {
            let bit = match kind {
                Scale::Low => 0,
                Scale::High => 1,
                Scale::Middle => {
                    coder.pending += 1;
                    continue;
                }
            };
            emitted.push(bit);
            emitted.extend(std::iter::repeat_n(1 - bit, coder.pending as usize));
            coder.pending = 0;
        }
    }
    // lower end ·2^{|emitted| + pending + 63}
    //   = emitted·2^{pending+63} + 2^{pending+62} − 2^{62} + low
    let pending = coder.pending as usize;
    let exponent = emitted.len() + pending + PRECISION as usize;
    let mut lower = bits_to_uint(&emitted) << (pending + PRECISION as usize);
    lower += (BigUint::one() << (pending + PRECISION as usize - 1)) - (BigUint::one() << (PRECISION - 1));
    lower += BigUint::from(coder.low);
    let eta = if exponent >= out_len {
        let drop = exponent - out_len;
        let floor = &lower >> drop;
        if (&floor << drop) == lower {
            floor
        } else {
            floor + 1u32
        }
    } else {
        lower << (out_len - exponent)
    };
    if eta.bits() > out_len as u64 {
        return Err(Error::Codec("biased stream does not determine the requested bits".into()));
    }
    Ok(uint_to_bits(&eta, out_len))
}

fn bits_to_uint(bits: &[u8]) -> BigUint {
    if bits.is_empty() {
        return BigUint::zero();
    }
    let pad = (8 - bits.len() % 8) % 8;
    let bytes = super::pack_bits(bits);
    BigUint::from_bytes_be(&bytes) >> pad
}

fn uint_to_bits(x: &BigUint, len: usize) -> Vec<u8> {
    (0..len).map(|i| u8::from(x.bit((len - 1 - i) as u64))).collect()
}
