//! Capacity-approaching encoder and decoder for binary constraint systems.
//!
//! Input bits are split into one block per state of the optimal Markov
//! chain, each block is biased towards that state's transition probability
//! with an arithmetic decoder, and the biased queues are emitted by walking
//! the De Bruijn graph: every transmitted bit is taken from the queue of the
//! current state and selects the next state.

mod arith;
mod simulate;

pub use arith::{bias, unbias, ArithmeticCoder, Biased, Probability};
pub use simulate::{simulate, simulate_plan, SimulationReport, TrialOutcome, WordStats};

use std::fmt;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::bounds::binary_entropy;
use crate::capacity::solve_capacity;
use crate::error::{input, Error, Result};
use crate::markov::{chain_from_measure, MarkovChain};
use crate::rational::{format_rational, ratio, to_f64, Rational};
use crate::words::{ConstraintSpec, Word};

pub const DEFAULT_EPSILON: (u32, u32) = (1, 10);

const CAPACITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// A biased block does not pin its input to a `2^{−n_i}` segment.
    E1,
    /// Information bits were left untransmitted.
    E2,
    /// A state was visited more often than its queue allows.
    E3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorEvent {
    pub kind: EventKind,
    pub state: Option<usize>,
    pub detail: String,
}

impl fmt::Display for ErrorEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(s) = self.state {
            write!(f, " at state {s}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// A finite bit sequence with a read cursor.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitStream {
    bits: Vec<u8>,
    cursor: usize,
}

impl BitStream {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(input("bit streams hold only 0 and 1"));
        }
        Ok(BitStream { bits, cursor: 0 })
    }

    /// The first `len` bits of `bytes`, most significant bit first.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(input(format!("{} bytes hold fewer than {len} bits", bytes.len())));
        }
        Ok(BitStream { bits: unpack_bits(bytes, len), cursor: 0 })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        pack_bits(&self.bits)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn read(&mut self) -> Option<u8> {
        let bit = self.bits.get(self.cursor).copied();
        self.cursor += usize::from(bit.is_some());
        bit
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.cursor
    }
}

pub(crate) fn pack_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << (7 - i))))
        .collect()
}

fn unpack_bits(bytes: &[u8], len: usize) -> Vec<u8> {
    (0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect()
}

/// Per-state share of the input and queue sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePlan {
    /// Probability of emitting 0 from this state.
    pub q: f64,
    pub entropy: f64,
    pub stationary: f64,
    /// `ñ_i = H(q_i)·v_i·n/C` before rounding.
    pub share: f64,
    /// `n_i`, the number of input bits carried by this state.
    pub info_len: usize,
    /// `⌈n_i/H(q_i) + n^{1/2+ε}⌉`; zero for forced states.
    pub biased_len: usize,
    /// The only symbol a zero-entropy state can emit.
    pub forced: Option<u8>,
    pub probability: Option<Probability>,
}

#[derive(Debug, Clone)]
pub struct EncoderPlan {
    spec: ConstraintSpec,
    n: usize,
    epsilon: (u32, u32),
    solved_capacity: f64,
    capacity: f64,
    chain: MarkovChain,
    states: Vec<StatePlan>,
    pad_len: usize,
    transmit_len: usize,
}

impl EncoderPlan {
    pub fn spec(&self) -> &ConstraintSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> (u32, u32) {
        self.epsilon
    }

    /// Entropy rate of the chain; the rate the lengths are computed from.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Optimum reported by the capacity solver.
    pub fn solved_capacity(&self) -> f64 {
        self.solved_capacity
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn states(&self) -> &[StatePlan] {
        &self.states
    }

    /// `⌈n^{1/2+2ε}⌉` padding bits appended to every queue.
    pub fn pad_len(&self) -> usize {
        self.pad_len
    }

    /// `⌈n/C + n^{1/2+2ε}⌉`.
    pub fn transmit_len(&self) -> usize {
        self.transmit_len
    }

    /// `n / transmit_len`.
    pub fn rate(&self) -> f64 {
        self.n as f64 / self.transmit_len as f64
    }

    /// Sha-256 over the spec digest, `n`, `ε` and the per-state lengths;
    /// equal on both ends iff the plans agree.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.spec.digest());
        h.update((self.n as u64).to_be_bytes());
        h.update(self.epsilon.0.to_be_bytes());
        h.update(self.epsilon.1.to_be_bytes());
        for s in &self.states {
            h.update((s.info_len as u64).to_be_bytes());
            h.update((s.biased_len as u64).to_be_bytes());
            h.update(s.probability.map_or(0, |p| p.fixed()).to_be_bytes());
        }
        h.finalize().into()
    }
}

fn epsilon_pair(epsilon: &Rational) -> Result<(u32, u32)> {
    if *epsilon <= Rational::zero() || *epsilon >= ratio(1, 4) {
        return Err(input(format!("epsilon {} must lie in (0, 1/4)", format_rational(epsilon))));
    }
    let num = epsilon.numer().to_u32();
    let den = epsilon.denom().to_u32();
    num.zip(den)
        .ok_or_else(|| input("epsilon numerator and denominator must fit in 32 bits"))
}

/// Plan from the capacity-achieving chain of `spec`.
pub fn make_plan(spec: &ConstraintSpec, n: usize, epsilon: &Rational) -> Result<EncoderPlan> {
    if spec.alphabet().size() != 2 {
        return Err(input("the encoder handles binary alphabets only"));
    }
    let solved = solve_capacity(spec, CAPACITY_TOL)?;
    if solved.capacity <= 0.0 {
        return Err(input("zero-capacity constraints carry no information"));
    }
    let chain = chain_from_measure(&solved.optimizer)?;
    plan_for_chain(spec, chain, solved.capacity, n, epsilon)
}

/// Plan from an explicit chain on the De Bruijn graph of order `k − 1`.
pub fn plan_for_chain(
    spec: &ConstraintSpec,
    chain: MarkovChain,
    solved_capacity: f64,
    n: usize,
    epsilon: &Rational,
) -> Result<EncoderPlan> {
    let eps_pair = epsilon_pair(epsilon)?;
    if n == 0 {
        return Err(input("input length must be positive"));
    }
    if chain.graph().alphabet().size() != 2 || chain.graph().order() + 1 != spec.k() {
        return Err(input("chain does not live on the system's binary De Bruijn graph"));
    }
    let capacity = chain.entropy_rate();
    if !(capacity > 0.0) {
        return Err(input("chain has zero entropy rate"));
    }
    let eps = to_f64(epsilon);
    let nf = n as f64;
    let f = nf.powf(0.5 + eps);
    let g = nf.powf(0.5 + 2.0 * eps);

    let num_states = chain.graph().num_vertices();
    let mut states: Vec<StatePlan> = (0..num_states)
        .map(|u| {
            let q = chain.edge_prob(u);
            let entropy = binary_entropy(q);
            let stationary = chain.stationary()[u];
            let forced = if q >= 1.0 {
                Some(0)
            } else if q <= 0.0 {
                Some(1)
            } else {
                None
            };
            Ok(StatePlan {
                q,
                entropy,
                stationary,
                share: entropy * stationary * nf / capacity,
                info_len: 0,
                biased_len: 0,
                forced,
                probability: forced.is_none().then(|| Probability::new(q)).transpose()?,
            })
        })
        .collect::<Result<_>>()?;

    let shares: Vec<f64> = states.iter().map(|s| s.share).collect();
    for (s, len) in states.iter_mut().zip(round_preserving_sum(&shares, n)) {
        s.info_len = len;
        if s.forced.is_none() {
            s.biased_len = (len as f64 / s.entropy + f).ceil() as usize;
        }
    }
    Ok(EncoderPlan {
        spec: spec.clone(),
        n,
        epsilon: eps_pair,
        solved_capacity,
        capacity,
        chain,
        states,
        pad_len: g.ceil() as usize,
        transmit_len: (nf / capacity + g).ceil() as usize,
    })
}

/// Sequential rounding: each prefix sum stays within one half of the real
/// prefix sum, and the total is exactly `n`.
fn round_preserving_sum(shares: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = shares.iter().sum();
    let scale = if total > 0.0 { n as f64 / total } else { 0.0 };
    let mut out = Vec::with_capacity(shares.len());
    let (mut exact, mut given) = (0.0f64, 0usize);
    for &s in shares {
        exact += s * scale;
        let target = (exact.round().max(0.0) as usize).clamp(given, n);
        out.push(target - given);
        given = target;
    }
    // floating-point shortfall goes to the largest share
    if given < n {
        let i = (0..shares.len())
            .max_by(|&a, &b| shares[a].total_cmp(&shares[b]))
            .expect("at least one state");
        out[i] += n - given;
    }
    out
}

/// Contiguous blocks `η_i` of lengths `n_i`, in state order.
pub fn partition(bits: &BitStream, plan: &EncoderPlan) -> Result<Vec<Vec<u8>>> {
    if bits.len() != plan.n {
        return Err(input(format!("input has {} bits, the plan expects {}", bits.len(), plan.n)));
    }
    let mut start = 0;
    Ok(plan
        .states
        .iter()
        .map(|s| {
            let block = bits.bits[start..start + s.info_len].to_vec();
            start += s.info_len;
            block
        })
        .collect())
}

/// Everything the walk observed, kept even when an event occurs.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub(crate) bits: Vec<u8>,
    pub(crate) events: Vec<ErrorEvent>,
}

pub(crate) fn run_encoder(input: &BitStream, plan: &EncoderPlan, pad_seed: u64) -> Result<Trace> {
    let blocks = partition(input, plan)?;
    let mut events = Vec::new();
    let mut queues: Vec<Vec<u8>> = Vec::with_capacity(plan.states.len());
    for (i, (state, block)) in plan.states.iter().zip(&blocks).enumerate() {
        let Some(p) = state.probability else {
            queues.push(Vec::new());
            continue;
        };
        let biased = bias(block, p, state.biased_len);
        if biased.coarse {
            events.push(ErrorEvent {
                kind: EventKind::E1,
                state: Some(i),
                detail: format!("{} symbols leave a segment wider than 2^-{}", state.biased_len, block.len()),
            });
        }
        let mut queue = biased.symbols;
        let mut rng = ChaCha8Rng::seed_from_u64(pad_seed);
        rng.set_stream(i as u64);
        queue.extend((0..plan.pad_len).map(|_| u8::from(rng.random_bool(1.0 - state.q))));
        queues.push(queue);
    }

    let graph = plan.chain.graph();
    let mut cursor = vec![0usize; queues.len()];
    let mut visits = vec![0usize; queues.len()];
    let mut bits = Vec::with_capacity(plan.transmit_len);
    let mut u = 0usize;
    while bits.len() < plan.transmit_len {
        visits[u] += 1;
        let a = match plan.states[u].forced {
            Some(a) => a,
            None => {
                let Some(&a) = queues[u].get(cursor[u]) else {
                    events.push(ErrorEvent {
                        kind: EventKind::E3,
                        state: Some(u),
                        detail: format!("queue of {} bits exhausted after {} sent bits", queues[u].len(), bits.len()),
                    });
                    return Ok(Trace { bits, events });
                };
                cursor[u] += 1;
                a
            }
        };
        bits.push(a);
        u = graph.step(u, a);
    }
    for (i, state) in plan.states.iter().enumerate() {
        let left = queues[i].len() - cursor[i];
        // the literal check: more than pad_len bits left over fails
        if state.forced.is_none() && left > plan.pad_len {
            events.push(ErrorEvent {
                kind: EventKind::E2,
                state: Some(i),
                detail: format!(
                    "{} visits leave {} of {} information bits unsent",
                    visits[i],
                    left - plan.pad_len,
                    state.biased_len
                ),
            });
        }
    }
    Ok(Trace { bits, events })
}

/// Transmitted word for `input`, or the first error event.
pub fn encode(input: &BitStream, plan: &EncoderPlan, pad_seed: u64) -> Result<BitStream> {
    let trace = run_encoder(input, plan, pad_seed)?;
    match trace.events.into_iter().next() {
        Some(event) => Err(Error::Event(event)),
        None => BitStream::new(trace.bits),
    }
}

/// Inverse of [`encode`] under the same plan.
pub fn decode(received: &BitStream, plan: &EncoderPlan) -> Result<BitStream> {
    if received.len() != plan.transmit_len {
        return Err(Error::Codec(format!(
            "received {} bits, the plan transmits {}",
            received.len(),
            plan.transmit_len
        )));
    }
    let graph = plan.chain.graph();
    let mut queues: Vec<Vec<u8>> = vec![Vec::new(); plan.states.len()];
    let mut u = 0usize;
    for &a in &received.bits {
        match plan.states[u].forced {
            Some(forced) if forced != a => {
                return Err(Error::Codec(format!("state {u} can only emit {forced}")));
            }
            Some(_) => {}
            None => queues[u].push(a),
        }
        u = graph.step(u, a);
    }
    let mut out = Vec::with_capacity(plan.n);
    for (i, (state, queue)) in plan.states.iter().zip(&queues).enumerate() {
        let Some(p) = state.probability else {
            continue;
        };
        if queue.len() < state.biased_len {
            return Err(Error::Codec(format!(
                "state {i} received {} of {} biased bits",
                queue.len(),
                state.biased_len
            )));
        }
        out.extend(unbias(&queue[..state.biased_len], p, state.info_len)?);
    }
    BitStream::new(out)
}

const MAGIC: &[u8; 4] = b"SCSC";
pub const FORMAT_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 8 + 4 + 4 + 32 + 8;

/// Encoded file: big-endian header, then the payload packed MSB first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedFile {
    pub n: u64,
    pub epsilon: (u32, u32),
    pub spec_digest: [u8; 32],
    pub pad_seed: u64,
    pub payload: Vec<u8>,
}

impl EncodedFile {
    pub fn new(plan: &EncoderPlan, pad_seed: u64, transmitted: &BitStream) -> Self {
        EncodedFile {
            n: plan.n as u64,
            epsilon: plan.epsilon,
            spec_digest: plan.spec.digest(),
            pad_seed,
            payload: transmitted.to_bytes(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&self.n.to_be_bytes());
        out.extend_from_slice(&self.epsilon.0.to_be_bytes());
        out.extend_from_slice(&self.epsilon.1.to_be_bytes());
        out.extend_from_slice(&self.spec_digest);
        out.extend_from_slice(&self.pad_seed.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Codec("not an encoded file".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(Error::Codec(format!("unsupported format version {}", bytes[4])));
        }
        let be64 = |at: usize| u64::from_be_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        let be32 = |at: usize| u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        Ok(EncodedFile {
            n: be64(5),
            epsilon: (be32(13), be32(17)),
            spec_digest: bytes[21..53].try_into().expect("32 bytes"),
            pad_seed: be64(53),
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }

    pub fn epsilon_rational(&self) -> Result<Rational> {
        if self.epsilon.1 == 0 {
            return Err(Error::Codec("zero epsilon denominator".into()));
        }
        Ok(ratio(self.epsilon.0 as i64, self.epsilon.1 as i64))
    }

    /// Rebuilds the plan from `spec` and checks it matches the header.
    pub fn plan(&self, spec: &ConstraintSpec) -> Result<EncoderPlan> {
        if spec.digest() != self.spec_digest {
            return Err(Error::Codec("constraint spec does not match the encoded file".into()));
        }
        let n = usize::try_from(self.n).map_err(|_| Error::Codec("n does not fit in memory".into()))?;
        make_plan(spec, n, &self.epsilon_rational()?)
    }

    pub fn transmitted(&self, plan: &EncoderPlan) -> Result<BitStream> {
        BitStream::from_bytes(&self.payload, plan.transmit_len)
            .map_err(|_| Error::Codec("payload shorter than the planned transmission".into()))
    }
}

/// `T(φ, x)` for every constrained word, as `f64`.
pub fn constraint_frequencies(spec: &ConstraintSpec, transmitted: &BitStream) -> Result<Vec<f64>> {
    let word = Word::new(transmitted.bits.clone(), spec.alphabet())?;
    Ok(spec
        .forbidden()
        .iter()
        .map(|c| to_f64(&crate::words::subword_frequency(&c.word, &word)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::KTupleMeasure;
    use crate::words::{Alphabet, Constraint};
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, proptest};

    fn rll(k: usize, p: &str) -> ConstraintSpec {
        ConstraintSpec::rll(k, crate::rational::parse_rational(p).unwrap()).unwrap()
    }

    fn random_input(seed: u64, n: usize) -> BitStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BitStream::new((0..n).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
    }

    #[test]
    fn bit_packing() {
        let s = BitStream::new(vec![1, 0, 1, 1, 0, 0, 0, 1, 1, 1]).unwrap();
        assert_eq!(s.to_bytes(), vec![0b1011_0001, 0b1100_0000]);
        assert_eq!(BitStream::from_bytes(&s.to_bytes(), 10).unwrap(), s);
        assert!(BitStream::from_bytes(&[0], 9).is_err());
        assert!(BitStream::new(vec![2]).is_err());
        let mut r = BitStream::new(vec![1, 0]).unwrap();
        assert_eq!((r.read(), r.read(), r.read(), r.remaining()), (Some(1), Some(0), None, 0));
    }

    #[test]
    fn sequential_rounding() {
        assert_eq!(round_preserving_sum(&[1000.0], 1000), vec![1000]);
        assert_eq!(round_preserving_sum(&[250.0; 4], 1000), vec![250; 4]);
        let parts = round_preserving_sum(&[1.0 / 3.0 * 10.0; 3], 10);
        assert_eq!(parts.iter().sum::<usize>(), 10);
        assert!(parts.iter().all(|&p| p == 3 || p == 4));
        assert_eq!(round_preserving_sum(&[0.0, 5.0, 0.0, 5.0], 10), vec![0, 5, 0, 5]);
    }

    proptest! {
        #[test]
        fn rounding_preserves_sum(shares in proptest::collection::vec(0.0f64..1.0, 1..16), n in 1usize..100_000) {
            let total: f64 = shares.iter().sum();
            prop_assume!(total > 1e-9);
            let exact: Vec<f64> = shares.iter().map(|s| s * n as f64 / total).collect();
            let parts = round_preserving_sum(&exact, n);
            prop_assert_eq!(parts.iter().sum::<usize>(), n);
            for (p, e) in parts.iter().zip(&exact) {
                prop_assert!((*p as f64 - e).abs() <= 1.0 + 1e-6);
            }
        }
    }

    #[test]
    fn redundant_spec_uses_uniform_chain() {
        let plan = make_plan(&rll(1, "1/4"), 1000, &ratio(1, 10)).unwrap();
        assert!((plan.capacity() - 1.0).abs() < 1e-12);
        assert_eq!(plan.states().len(), 2);
        for s in plan.states() {
            assert!((s.share - 500.0).abs() < 1e-9);
            assert_eq!(s.info_len, 500);
        }
        // n^{0.7} and n^{0.6} at n = 1000
        assert_eq!(plan.pad_len(), 126);
        assert_eq!(plan.transmit_len(), 1000 + 126);
        assert_eq!(plan.states()[0].biased_len, 500 + 64);
    }

    #[test]
    fn plan_is_deterministic() {
        let spec = rll(2, "1/20");
        let a = make_plan(&spec, 10_000, &ratio(1, 10)).unwrap();
        let b = make_plan(&spec, 10_000, &ratio(1, 10)).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.states().iter().map(|s| s.info_len).sum::<usize>(), 10_000);
        for s in a.states() {
            assert!((s.info_len as f64 - s.share).abs() < 1.0);
        }
        let nf = 10_000f64;
        assert_eq!(a.transmit_len(), (nf / a.capacity() + nf.powf(0.7)).ceil() as usize);
        assert!((a.capacity() - a.solved_capacity()).abs() < 1e-7);
    }

    #[test]
    fn plan_rejects_bad_arguments() {
        let spec = rll(2, "1/20");
        assert!(make_plan(&spec, 100, &ratio(1, 4)).is_err());
        assert!(make_plan(&spec, 100, &Rational::zero()).is_err());
        assert!(make_plan(&spec, 0, &ratio(1, 10)).is_err());
        assert!(make_plan(&rll(1, "0"), 100, &ratio(1, 10)).is_ok());
        let ternary_alphabet = Alphabet::new(3).unwrap();
        let zeros = Constraint { word: Word::parse("00", &ternary_alphabet).unwrap(), cap: ratio(1, 20) };
        let ternary = ConstraintSpec::new(ternary_alphabet, vec![zeros], None).unwrap();
        assert!(make_plan(&ternary, 100, &ratio(1, 10)).is_err());
    }

    #[test]
    fn partition_concatenates_to_input() {
        let plan = make_plan(&rll(2, "1/20"), 500, &ratio(1, 10)).unwrap();
        let input = random_input(3, 500);
        let blocks = partition(&input, &plan).unwrap();
        assert_eq!(blocks.concat(), input.bits());
        let mut start = 0;
        for (b, s) in blocks.iter().zip(plan.states()) {
            assert_eq!(b[..], input.bits()[start..start + s.info_len]);
            start += s.info_len;
        }
        assert!(partition(&random_input(3, 499), &plan).is_err());
    }

    #[test]
    fn redundant_roundtrip() {
        let plan = make_plan(&rll(1, "1/4"), 4096, &ratio(6, 25)).unwrap();
        for seed in 0..5 {
            let input = random_input(seed, 4096);
            let sent = encode(&input, &plan, seed).unwrap();
            assert_eq!(sent.len(), plan.transmit_len());
            assert_eq!(decode(&sent, &plan).unwrap(), input);
        }
    }

    #[test]
    fn large_cap_roundtrip_and_determinism() {
        // generous epsilon so every queue drains at moderate n
        let plan = make_plan(&rll(1, "1/5"), 1 << 14, &ratio(6, 25)).unwrap();
        let mut ok = 0;
        for seed in 0..10 {
            let input = random_input(seed, 1 << 14);
            if let Ok(sent) = encode(&input, &plan, 99) {
                ok += 1;
                assert_eq!(encode(&input, &plan, 99).unwrap(), sent);
                assert_eq!(decode(&sent, &plan).unwrap(), input);
            }
        }
        assert!(ok >= 8, "{ok} successes");
    }

    #[test]
    fn forced_states_emit_their_symbol() {
        // 11 never appears, so state 1 always emits 0
        let plan = make_plan(&rll(1, "0"), 2000, &ratio(1, 5)).unwrap();
        assert_eq!(plan.states()[1].forced, Some(0));
        assert_eq!(plan.states()[1].info_len, 0);
        let input = random_input(5, 2000);
        match encode(&input, &plan, 1) {
            Ok(sent) => {
                assert!(!sent.bits().windows(2).any(|w| w == [1, 1]));
                assert_eq!(decode(&sent, &plan).unwrap(), input);
            }
            Err(Error::Event(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn mismatched_plan_is_detected() {
        let spec = rll(1, "1/4");
        let plan = make_plan(&spec, 2048, &ratio(6, 25)).unwrap();
        let other = make_plan(&spec, 2048, &ratio(1, 5)).unwrap();
        let input = random_input(8, 2048);
        let sent = encode(&input, &plan, 0).unwrap();
        match decode(&sent, &other) {
            Ok(out) => assert_ne!(out, input),
            Err(Error::Codec(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn exhaustive_small_roundtrip() {
        // a single state is visited on every step, so only E1 can occur
        let plan = make_plan(&rll(0, "1/4"), 12, &ratio(6, 25)).unwrap();
        let mut ok = 0;
        for x in 0u32..1 << 12 {
            let input = BitStream::new((0..12).map(|i| ((x >> (11 - i)) & 1) as u8).collect()).unwrap();
            if let Ok(sent) = encode(&input, &plan, 17) {
                ok += 1;
                assert_eq!(decode(&sent, &plan).unwrap(), input);
            }
        }
        assert!(ok > 0);
    }

    #[test]
    fn file_format_roundtrip() {
        let spec = rll(1, "1/4");
        let plan = make_plan(&spec, 2000, &ratio(6, 25)).unwrap();
        let input = random_input(2, 2000);
        let sent = encode(&input, &plan, 42).unwrap();
        let file = EncodedFile::new(&plan, 42, &sent);
        let bytes = file.to_bytes();
        assert_eq!(&bytes[..5], b"SCSC\x01");
        assert_eq!(bytes[5..13], 2000u64.to_be_bytes());
        let back = EncodedFile::from_bytes(&bytes).unwrap();
        assert_eq!(back, file);
        let plan2 = back.plan(&spec).unwrap();
        assert_eq!(plan2.fingerprint(), plan.fingerprint());
        assert_eq!(decode(&back.transmitted(&plan2).unwrap(), &plan2).unwrap(), input);
        assert!(back.plan(&rll(1, "1/5")).is_err());
        assert!(EncodedFile::from_bytes(b"SCSD").is_err());
    }

    #[test]
    fn explicit_chain_plan() {
        let spec = rll(2, "1/4");
        let chain = chain_from_measure(&KTupleMeasure::uniform(Alphabet::binary(), 3)).unwrap();
        let plan = plan_for_chain(&spec, chain, 1.0, 1000, &ratio(1, 10)).unwrap();
        assert!(plan.states().iter().all(|s| s.info_len == 250));
    }
}
