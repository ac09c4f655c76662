//! Closed-form capacity bounds for the binary `(0,k,p)`-RLL system, their
//! asymptotic constants, and D-dimensional extensions.

use std::f64::consts::{E, LOG2_E, PI};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::capacity::solve_capacity;
use crate::error::{input, Result};
use crate::rational::from_f64;
use crate::words::{cyclic_sandwich, ConstraintSpec, SandwichRow};

/// Largest cap for which the constraint on `1^{k+1}` binds: `2^{−(k+1)}`.
pub fn critical_p(k: usize) -> f64 {
    (-((k + 1) as f64)).exp2()
}

/// Mean and dependency sum for the count of `1^{k+1}` windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JansonParams {
    pub lambda: f64,
    pub delta: f64,
}

impl JansonParams {
    /// Length-`n` binary sequences: `λ = n/2^{k+1}`, `δ = 2 − 2^{−(k−1)}`.
    pub fn rll(k: usize, n: usize) -> Self {
        JansonParams {
            lambda: n as f64 * critical_p(k),
            delta: 2.0 - (-(k as f64 - 1.0)).exp2(),
        }
    }

    /// `n^D` arrays: `λ = D n^D / 2^{k+1}`, `δ` gains `(D−1)(k+1)² 2^{−k}`.
    pub fn rll_ddim(k: usize, n: usize, dims: usize) -> Self {
        let cells = (n as f64).powi(dims as i32);
        let kf = k as f64;
        JansonParams {
            lambda: dims as f64 * cells * critical_p(k),
            delta: 2.0 - (-(kf - 1.0)).exp2() + (dims as f64 - 1.0) * (kf + 1.0).powi(2) * (-kf).exp2(),
        }
    }

    pub fn tail(&self, eta: u64) -> Result<f64> {
        janson_tail(self.lambda, self.delta, eta)
    }
}

/// Janson's bound on `Pr[S ≤ η]`:
/// `(√(2π(η+1)) λ^η e^{−λ} / η!)^{1/(1+δ)}`, evaluated in log space.
pub fn janson_tail(lambda: f64, delta: f64, eta: u64) -> Result<f64> {
    if !(lambda > 0.0) || !(delta >= 0.0) {
        return Err(input("janson_tail needs λ > 0 and δ ≥ 0"));
    }
    let eta_f = eta as f64;
    if eta_f > lambda {
        return Err(input(format!("η = {eta} exceeds λ = {lambda}; the bound is vacuous")));
    }
    let log_term = 0.5 * (2.0 * PI * (eta_f + 1.0)).ln() + eta_f * lambda.ln() - lambda
        - ln_gamma(eta_f + 1.0);
    Ok((log_term / (1.0 + delta)).exp())
}

fn check_p(k: usize, p: f64, max: f64, allow_zero: bool) -> Result<()> {
    if k == 0 {
        return Err(input("k must be at least 1"));
    }
    let low_ok = if allow_zero { p >= 0.0 } else { p > 0.0 };
    if !(low_ok && p <= max * (1.0 + 1e-15)) {
        return Err(input(format!("p = {p} outside the admissible range for k = {k}")));
    }
    Ok(())
}

/// Upper bound on `C_{k,p}` for `0 < p ≤ 2^{−(k+1)}`.
pub fn upper_bound_capacity(k: usize, p: f64) -> Result<f64> {
    upper_bound_capacity_ddim(k, p, 1)
}

/// Upper bound for `D`-dimensional arrays, `0 < p ≤ D·2^{−(k+1)}`.
pub fn upper_bound_capacity_ddim(k: usize, p: f64, dims: usize) -> Result<f64> {
    if dims == 0 {
        return Err(input("dimension must be positive"));
    }
    let d = dims as f64;
    check_p(k, p, d * critical_p(k), false)?;
    let kf = k as f64;
    let numerator = d * LOG2_E * critical_p(k) + p * (kf + 1.0) - p * (d * E / p).log2();
    let denominator = 3.0 - (1.0 - kf).exp2() + (-kf).exp2() * (d - 1.0) * (kf + 1.0).powi(2);
    Ok(1.0 - numerator / denominator)
}

/// `z(k,t) = E[e^{−tS′_A} | I_A = 1]` in closed form,
/// `e^t (1 + (e^t − 1)/(2^k e^{(k+1)t}))² / (1 − 2e^t)²`.
pub fn z_function(k: usize, t: f64) -> f64 {
    let et = t.exp();
    // (e^t − 1) / (2^k e^{(k+1)t}) without overflow for large k or t
    let tail = (et - 1.0) * (-(k as f64) * std::f64::consts::LN_2 - (k as f64 + 1.0) * t).exp();
    et * (1.0 + tail).powi(2) / (1.0 - 2.0 * et).powi(2)
}

/// `Pr[S′_A = ℓ | I_A = 1]` for `ℓ = 1..=2k+1`.
pub fn overlap_distribution(k: usize) -> Vec<(usize, f64)> {
    (1..=2 * k + 1)
        .map(|l| {
            let weight = if l <= k {
                l as f64
            } else if l <= 2 * k {
                (2 * k + 4 - l) as f64
            } else {
                4.0
            };
            (l, weight * (-(l as f64 + 1.0)).exp2())
        })
        .collect()
}

/// `z(k,t)` as the finite sum `Σ_ℓ Pr[S′_A=ℓ | I_A=1] e^{−tℓ}`.
pub fn z_by_sum(k: usize, t: f64) -> f64 {
    overlap_distribution(k)
        .into_iter()
        .map(|(l, pr)| pr * (-t * l as f64).exp())
        .sum()
}

/// Refined lower bound on `1 − C_{k,p}`:
/// `max_{t∈[0,20]} (log2 e / 2^{k+1}) ∫₀ᵗ z(k,u) du − t p log2 e`.
pub fn refined_upper_gap(k: usize, p: f64) -> Result<f64> {
    check_p(k, p, critical_p(k), true)?;
    let scale = LOG2_E * critical_p(k);
    let objective = |t: f64| scale * integrate(|u| z_function(k, u), 0.0, t, 1e-10) - t * p * LOG2_E;
    // the objective is concave in t because z decreases, so golden-section
    // search finds the maximum; the endpoints are checked explicitly
    let (t_lo, t_hi) = (0.0, 20.0);
    let t_star = golden_max(&objective, t_lo, t_hi, 1e-9);
    let best = [t_lo, t_star, t_hi]
        .into_iter()
        .map(objective)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best.max(0.0))
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Adaptive Simpson quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f((a + b) / 2.0));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = (a + b) / 2.0;
    let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Asymptotic gap constant of the refined upper bound:
/// `1 − C_{k,p} ≥ b_lo(c)/2^{k+2}·(1+o(1))` along `p = c·2^{−(k+1)}`.
pub fn b_lo(c: f64) -> Result<f64> {
    check_c(c)?;
    if c == 0.0 {
        return Ok(LOG2_E);
    }
    let root = (1.0 + 8.0 * c).sqrt();
    Ok((3.0 - root) / 2.0 * LOG2_E - 2.0 * c * ((1.0 + 4.0 * c + root) / (8.0 * c)).log2())
}

/// Asymptotic gap constant of the lower bound: `(1+c)(1 − H(1/(1+c)))`.
pub fn b_up(c: f64) -> Result<f64> {
    check_c(c)?;
    Ok((1.0 + c) * (1.0 - binary_entropy(1.0 / (1.0 + c))))
}

fn check_c(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(input(format!("c = {c} outside [0,1]")));
    }
    Ok(())
}

pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    pub c: f64,
    pub b_lo: f64,
    pub b_up: f64,
}

impl AsymptoticConstants {
    pub fn at(c: f64) -> Result<Self> {
        Ok(AsymptoticConstants { c, b_lo: b_lo(c)?, b_up: b_up(c)? })
    }
}

/// `x log2(x / y)` with the `0·log 0 = 0` convention.
fn xlog(x: f64, ratio: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * ratio.log2()
    }
}

/// Lower bound on `C_{k,p}` from an explicit measure, `0 ≤ p ≤ 2^{−(k+1)}`.
pub fn lower_bound_capacity(k: usize, p: f64) -> Result<f64> {
    check_p(k, p, critical_p(k), true)?;
    let two_k = (k as f64).exp2();
    let two_k1 = 2.0 * two_k;
    let denom = 1.0 + 2.0 * p * (two_k - 1.0);
    let first = (1.0 - p) / (two_k1 - 1.0) * ((2.0 - 2.0 * p) / denom).log2();
    let second = xlog(p, 2.0 * p * (two_k1 - 1.0) / denom);
    let value = 1.0 - first - second;
    if p == critical_p(k) {
        // the explicit measure is uniform here
        return Ok(1.0);
    }
    Ok(value)
}

/// `1 + D·(C^{(1)}_{k,p/D} − 1)` for a supplied one-dimensional bound.
pub fn lower_bound_capacity_ddim<F>(k: usize, p: f64, dims: usize, one_dim_bound: F) -> Result<f64>
where
    F: Fn(usize, f64) -> Result<f64>,
{
    if dims == 0 {
        return Err(input("dimension must be positive"));
    }
    let d = dims as f64;
    check_p(k, p / d, critical_p(k), true)?;
    Ok(1.0 + d * (one_dim_bound(k, p / d)? - 1.0))
}

/// Counting sandwich `|B_{n−1}| ≤ |B^cyc_n| ≤ |B_{n+k}|` by enumeration.
pub fn cyclic_equivalence_check(k: usize, p: f64, n_max: usize) -> Result<Vec<SandwichRow>> {
    cyclic_sandwich(k, from_f64(p)?, n_max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub k: usize,
    pub p: f64,
    pub lower: f64,
    pub solved: f64,
    pub upper: f64,
    pub refined_upper_gap: f64,
}

/// Lower bound, solved capacity, upper bound and refined gap for one point.
pub fn bounds_row(k: usize, p: f64) -> Result<BoundsRow> {
    let spec = ConstraintSpec::rll(k, from_f64(p)?)?;
    Ok(BoundsRow {
        k,
        p,
        lower: lower_bound_capacity(k, p)?,
        solved: solve_capacity(&spec, 1e-9)?.capacity,
        upper: upper_bound_capacity(k, p)?,
        refined_upper_gap: refined_upper_gap(k, p)?,
    })
}
