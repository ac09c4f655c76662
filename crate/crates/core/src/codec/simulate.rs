//! Monte Carlo harness: seeded uniform inputs through encode and decode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{constraint_frequencies, decode, make_plan, run_encoder, BitStream, EncoderPlan, EventKind};
use crate::error::Result;
use crate::rational::{to_f64, Rational};
use crate::words::{member, Mode, Word};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    /// No error event occurred.
    pub success: bool,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    /// Decoding reproduced the input; only meaningful on success.
    pub roundtrip: bool,
    /// The walk sent all `transmit_len` bits (false only after E3).
    pub complete: bool,
    /// Transmitted word lies in the weak system at its own length.
    pub admitted: bool,
    /// `max_φ T(φ, x) − P(φ)` over the transmitted word.
    pub max_violation: f64,
    /// `T(φ, x)` per constrained word.
    pub frequencies: Vec<f64>,
}

/// Frequency statistics of one constrained word over completed
/// transmissions; `NaN` when there are none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordStats {
    pub word: String,
    pub cap: f64,
    /// `ξ(transmit_len)`.
    pub tolerance: f64,
    pub samples: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub n: usize,
    pub epsilon: (u32, u32),
    pub trials: usize,
    pub transmit_len: usize,
    pub rate: f64,
    pub solved_capacity: f64,
    pub successes: usize,
    pub success_rate: f64,
    pub e1: usize,
    pub e2: usize,
    pub e3: usize,
    pub roundtrip_failures: usize,
    /// Successful trials whose transmitted word is admitted.
    pub admitted: usize,
    pub words: Vec<WordStats>,
    pub outcomes: Vec<TrialOutcome>,
}

impl SimulationReport {
    /// One row per trial.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,success,e1,e2,e3,max_violation\n");
        for t in &self.outcomes {
            out.push_str(&format!(
                "{},{},{},{},{},{:.16e}\n",
                t.trial, t.success as u8, t.e1 as u8, t.e2 as u8, t.e3 as u8, t.max_violation
            ));
        }
        out
    }

    /// Fraction of successful trials whose word is admitted.
    pub fn admitted_fraction(&self) -> f64 {
        if self.successes == 0 {
            0.0
        } else {
            self.admitted as f64 / self.successes as f64
        }
    }
}

/// Input bits and padding seed of one trial; independent of scheduling.
fn trial_input(seed: u64, trial: usize, n: usize) -> (BitStream, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let bits = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
    (BitStream::new(bits).expect("binary"), rng.random())
}

fn run_trial(plan: &EncoderPlan, seed: u64, trial: usize) -> Result<TrialOutcome> {
    let (input, pad_seed) = trial_input(seed, trial, plan.n());
    let trace = run_encoder(&input, plan, pad_seed)?;
    let has = |kind| trace.events.iter().any(|e| e.kind == kind);
    let (e1, e2, e3) = (has(EventKind::E1), has(EventKind::E2), has(EventKind::E3));
    let success = !(e1 || e2 || e3);
    let sent = BitStream::new(trace.bits)?;
    let complete = sent.len() == plan.transmit_len();
    let roundtrip = success && decode(&sent, plan).is_ok_and(|out| out == input);
    let spec = plan.spec();
    let frequencies = constraint_frequencies(spec, &sent)?;
    let max_violation = spec
        .forbidden()
        .iter()
        .zip(&frequencies)
        .map(|(c, f)| f - to_f64(&c.cap))
        .fold(f64::NEG_INFINITY, f64::max);
    let admitted = member(&Word::new(sent.bits().to_vec(), spec.alphabet())?, spec, Mode::Weak);
    Ok(TrialOutcome { trial, success, e1, e2, e3, roundtrip, complete, admitted, max_violation, frequencies })
}

/// Runs `trials` seeded trials against a fixed plan, in parallel on the
/// current rayon pool.
pub fn simulate_plan(plan: &EncoderPlan, trials: usize, seed: u64) -> Result<SimulationReport> {
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(plan, seed, t))
        .collect::<Result<_>>()?;
    let count = |f: fn(&TrialOutcome) -> bool| outcomes.iter().filter(|t| f(t)).count();
    let successes = count(|t| t.success);
    let spec = plan.spec();
    let xi = spec.tolerance().value(plan.transmit_len());
    let words = spec
        .forbidden()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xs: Vec<f64> = outcomes.iter().filter(|t| t.complete).map(|t| t.frequencies[i]).collect();
            let m = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / m;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            WordStats {
                word: c.word.to_string(),
                cap: to_f64(&c.cap),
                tolerance: xi,
                samples: xs.len(),
                mean,
                std_dev: var.sqrt(),
                max: xs.iter().cloned().reduce(f64::max).unwrap_or(f64::NAN),
            }
        })
        .collect();
    Ok(SimulationReport {
        n: plan.n(),
        epsilon: plan.epsilon(),
        trials,
        transmit_len: plan.transmit_len(),
        rate: plan.rate(),
        solved_capacity: plan.solved_capacity(),
        successes,
        success_rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        e1: count(|t| t.e1),
        e2: count(|t| t.e2),
        e3: count(|t| t.e3),
        roundtrip_failures: count(|t| t.success && !t.roundtrip),
        admitted: count(|t| t.success && t.admitted),
        words,
        outcomes,
    })
}

pub fn simulate(
    spec: &crate::words::ConstraintSpec,
    n: usize,
    epsilon: &Rational,
    trials: usize,
    seed: u64,
) -> Result<SimulationReport> {
    simulate_plan(&make_plan(spec, n, epsilon)?, trials, seed)
}
