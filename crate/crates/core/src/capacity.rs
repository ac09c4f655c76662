//! Capacity of a (weak) semiconstrained system as the value of a
//! relative-entropy program over shift-invariant k-tuple measures.
//!
//! The program maximises the conditional entropy `H(ν) − H(ν₁)` over
//! shift-invariant `ν` with `𝓜ν ≤ P`. It is solved through its Lagrangian
//! dual
//!
//! ```text
//!     g(λ) = log2 ρ(B_λ) + λ·P,    B_λ(e) = 2^{−(𝓜ᵀλ)_e},   λ ≥ 0,
//! ```
//!
//! where `B_λ` is the weighted De Bruijn adjacency of order `k−1` and `ρ` its
//! Perron root. The gradient is `P − 𝓜ν_λ`, with `ν_λ` the maximum-entropy
//! edge measure built from the Perron vectors, so the minimiser yields the
//! optimal measure directly.

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp;
use crate::measures::{build_constraint_matrix, entropy_rate, ConstraintMatrix, KTupleMeasure};
use crate::words::{enumerate_count, ConstraintSpec, Mode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Objective accuracy.
    pub tol: f64,
    /// Acceptance threshold on the reported KKT residual.
    pub kkt_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-9, kkt_tol: 1e-7, max_iterations: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityResult {
    /// Bits per symbol.
    pub capacity: f64,
    pub optimizer: KTupleMeasure,
    /// One multiplier per forbidden word; zero-capped words report 0.
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub feasible: bool,
    pub redundant: bool,
    pub iterations: usize,
}

/// True iff every cap is at least its uniform frequency `|Σ|^{−|φ|}`.
pub fn check_redundant(spec: &ConstraintSpec) -> bool {
    let q = spec.alphabet().size();
    spec.forbidden().iter().all(|c| {
        let uniform = crate::rational::Rational::new(
            1.into(),
            num_traits::pow(num_bigint::BigInt::from(q), c.word.len()),
        );
        c.cap >= uniform
    })
}

/// Phase-1 violation: the least `t ≥ 0` such that some shift-invariant `ν`
/// has `𝓜ν ≤ P + t`.
pub fn feasibility_violation(spec: &ConstraintSpec) -> Result<f64> {
    let program = Program::new(spec)?;
    lp::min_violation(&program.lp_view(&vec![true; program.num_edges()]))
        .map(|(t, _)| t)
}

pub fn feasible(spec: &ConstraintSpec) -> Result<bool> {
    Ok(feasibility_violation(spec)? <= FEASIBILITY_TOL)
}

const FEASIBILITY_TOL: f64 = 1e-9;
const ZERO_EDGE_TOL: f64 = 1e-9;

pub fn solve_capacity(spec: &ConstraintSpec, tol: f64) -> Result<CapacityResult> {
    solve_capacity_with(spec, &SolverOptions { tol, ..SolverOptions::default() })
}

pub fn solve_capacity_with(spec: &ConstraintSpec, options: &SolverOptions) -> Result<CapacityResult> {
    let program = Program::new(spec)?;
    let q = spec.alphabet().size();
    if check_redundant(spec) {
        return Ok(CapacityResult {
            capacity: (q as f64).log2(),
            optimizer: KTupleMeasure::uniform(*spec.alphabet(), program.k),
            multipliers: vec![0.0; program.caps.len()],
            kkt_residual: 0.0,
            feasible: true,
            redundant: true,
            iterations: 0,
        });
    }

    let violation = feasibility_violation(spec)?;
    if violation > FEASIBILITY_TOL {
        return Err(Error::Infeasible { violation });
    }
    let mut alive = program.direct_alive();
    for e in lp::forced_zero_edges(&program.lp_view(&alive), ZERO_EDGE_TOL)? {
        alive[e] = false;
    }

    let dual = Dual::new(&program, &alive);
    let outcome = dual.minimise(options)?;

    let mut weights = vec![0.0; program.num_edges()];
    for (slot, &e) in dual.edges.iter().enumerate() {
        weights[e] = outcome.eval.nu[slot];
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let optimizer = KTupleMeasure::new(*spec.alphabet(), program.k, weights)?;

    let mut multipliers = vec![0.0; program.caps.len()];
    for (slot, &row) in dual.rows.iter().enumerate() {
        multipliers[row] = outcome.lambda[slot];
    }
    let freq = crate::measures::apply_f(&program.matrix, &optimizer)?;
    let primal_infeasibility = freq
        .iter()
        .zip(&program.caps)
        .map(|(f, p)| (f - p).max(0.0))
        .fold(0.0, f64::max);
    let slackness = freq
        .iter()
        .zip(&program.caps)
        .zip(&multipliers)
        .map(|((f, p), l)| (l * (p - f)).abs())
        .fold(0.0, f64::max);
    let gap = (outcome.eval.value - entropy_rate(&optimizer)).abs();
    let kkt_residual = primal_infeasibility
        .max(slackness)
        .max(outcome.projected_gradient)
        .max(gap);
    if kkt_residual > options.kkt_tol {
        return Err(Error::NonConvergence { iterations: outcome.iterations, residual: kkt_residual });
    }
    Ok(CapacityResult {
        capacity: outcome.eval.value,
        optimizer,
        multipliers,
        kkt_residual,
        feasible: true,
        redundant: false,
        iterations: outcome.iterations,
    })
}

/// `(n, |B_n|, log2|B_n| / n, capacity)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub count: u64,
    pub growth: f64,
    pub capacity: f64,
}

/// Finite-length growth rates from enumeration beside the solved capacity.
pub fn capacity_vs_enumeration(
    spec: &ConstraintSpec,
    n_max: usize,
    mode: Mode,
) -> Result<Vec<GrowthRow>> {
    let capacity = solve_capacity(spec, 1e-9)?.capacity;
    (1..=n_max)
        .map(|n| {
            let count = enumerate_count(spec, n, mode)?;
            let growth = if count == 0 { f64::NEG_INFINITY } else { (count as f64).log2() / n as f64 };
            Ok(GrowthRow { n, count, growth, capacity })
        })
        .collect()
}

/// The program data: De Bruijn edges `Σ^k`, constraint rows and caps.
pub(crate) struct Program {
    pub(crate) k: usize,
    pub(crate) q: usize,
    pub(crate) num_vertices: usize,
    pub(crate) matrix: ConstraintMatrix,
    pub(crate) caps: Vec<f64>,
    zero_rows: Vec<bool>,
}

impl Program {
    pub(crate) fn new(spec: &ConstraintSpec) -> Result<Self> {
        let matrix = build_constraint_matrix(spec)?;
        let k = matrix.k();
        let q = spec.alphabet().size();
        let num_vertices = spec.alphabet().count(k - 1).expect("fits");
        let caps = spec
            .forbidden()
            .iter()
            .map(|c| c.cap.to_f64().unwrap_or(0.0))
            .collect();
        let zero_rows = spec.forbidden().iter().map(|c| c.cap == num_traits::Zero::zero()).collect();
        Ok(Program { k, q, num_vertices, matrix, caps, zero_rows })
    }

    pub(crate) fn num_edges(&self) -> usize {
        self.num_vertices * self.q
    }

    pub(crate) fn tail(&self, e: usize) -> usize {
        e / self.q
    }

    pub(crate) fn head(&self, e: usize) -> usize {
        e % self.num_vertices
    }

    /// Edges not killed by a zero cap.
    fn direct_alive(&self) -> Vec<bool> {
        let mut alive = vec![true; self.num_edges()];
        for (row, &zero) in self.zero_rows.iter().enumerate() {
            if zero {
                for &e in self.matrix.support(row) {
                    alive[e] = false;
                }
            }
        }
        alive
    }

    fn lp_view<'a>(&'a self, alive: &'a [bool]) -> lp::Polytope<'a> {
        lp::Polytope { program: self, alive }
    }
}

struct Eval {
    value: f64,
    grad: Vec<f64>,
    /// Edge measure on `Dual::edges`.
    nu: Vec<f64>,
}

struct Outcome {
    eval: Eval,
    lambda: Vec<f64>,
    projected_gradient: f64,
    iterations: usize,
}

/// The dual restricted to surviving edges and non-zero-capped rows.
struct Dual {
    /// Surviving edge indices into `Σ^k`.
    edges: Vec<usize>,
    tails: Vec<usize>,
    heads: Vec<usize>,
    /// Active constraint rows (indices into the forbidden list).
    rows: Vec<usize>,
    /// For each active row, the positions in `edges` it covers.
    row_edges: Vec<Vec<usize>>,
    caps: Vec<f64>,
    /// Strongly connected vertex sets that carry at least one cycle.
    components: Vec<Vec<usize>>,
    num_vertices: usize,
}

impl Dual {
    fn new(program: &Program, alive: &[bool]) -> Self {
        let edges: Vec<usize> = (0..program.num_edges()).filter(|&e| alive[e]).collect();
        let position: std::collections::HashMap<usize, usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let rows: Vec<usize> = (0..program.caps.len()).filter(|&r| !program.zero_rows[r]).collect();
        let row_edges = rows
            .iter()
            .map(|&r| {
                program
                    .matrix
                    .support(r)
                    .iter()
                    .filter_map(|e| position.get(e).copied())
                    .collect()
            })
            .collect();
        let caps = rows.iter().map(|&r| program.caps[r]).collect();
        let tails: Vec<usize> = edges.iter().map(|&e| program.tail(e)).collect();
        let heads: Vec<usize> = edges.iter().map(|&e| program.head(e)).collect();
        let components = cyclic_components(program.num_vertices, &tails, &heads);
        Dual { edges, tails, heads, rows, row_edges, caps, components, num_vertices: program.num_vertices }
    }

    fn evaluate(&self, lambda: &[f64]) -> Result<Eval> {
        let mut cost = vec![0.0; self.edges.len()];
        for (l, covered) in lambda.iter().zip(&self.row_edges) {
            for &slot in covered {
                cost[slot] += l;
            }
        }
        let weight: Vec<f64> = cost.iter().map(|c| (-c).exp2()).collect();

        let mut best: Option<(f64, Vec<f64>)> = None;
        for comp in &self.components {
            let (rho, nu) = self.component_measure(comp, &weight)?;
            if best.as_ref().is_none_or(|(r, _)| rho > *r) {
                best = Some((rho, nu));
            }
        }
        let (rho, nu) = best.ok_or_else(|| Error::Infeasible { violation: 1.0 })?;
        let value = rho.log2() + lambda.iter().zip(&self.caps).map(|(l, p)| l * p).sum::<f64>();
        let grad = self
            .row_edges
            .iter()
            .zip(&self.caps)
            .map(|(covered, p)| p - covered.iter().map(|&s| nu[s]).sum::<f64>())
            .collect();
        Ok(Eval { value, grad, nu })
    }

    /// Perron root of the component and the induced edge measure
    /// `ν(e) = l_u B_e r_w / (ρ · l·r)`.
    fn component_measure(&self, comp: &[usize], weight: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut local = vec![usize::MAX; self.num_vertices];
        for (i, &v) in comp.iter().enumerate() {
            local[v] = i;
        }
        let d = comp.len();
        let mut b = DMatrix::<f64>::zeros(d, d);
        for (slot, w) in weight.iter().enumerate() {
            let (u, v) = (local[self.tails[slot]], local[self.heads[slot]]);
            if u != usize::MAX && v != usize::MAX {
                b[(u, v)] += w;
            }
        }
        let (rho, left, right) = perron(&b)?;
        let norm = rho * left.dot(&right);
        let nu = weight
            .iter()
            .enumerate()
            .map(|(slot, w)| {
                let (u, v) = (local[self.tails[slot]], local[self.heads[slot]]);
                if u == usize::MAX || v == usize::MAX {
                    0.0
                } else {
                    left[u] * w * right[v] / norm
                }
            })
            .collect();
        Ok((rho, nu))
    }

    /// Projected Newton on `λ ≥ 0` with a finite-difference Hessian and
    /// Armijo backtracking.
    fn minimise(&self, options: &SolverOptions) -> Result<Outcome> {
        let dim = self.rows.len();
        let gtol = (options.tol.min(options.kkt_tol) * 1e-2).max(1e-13);
        let mut lambda = vec![0.0; dim];
        let mut eval = self.evaluate(&lambda)?;
        let mut iterations = 0;
        loop {
            let pg = projected_gradient(&lambda, &eval.grad);
            if pg <= gtol || dim == 0 {
                return Ok(Outcome { eval, lambda, projected_gradient: pg, iterations });
            }
            if iterations >= options.max_iterations {
                return Err(Error::NonConvergence { iterations, residual: pg });
            }
            iterations += 1;

            let free: Vec<usize> = (0..dim)
                .filter(|&i| !(lambda[i] <= 0.0 && eval.grad[i] > 0.0))
                .collect();
            let direction = match self.newton_direction(&lambda, &eval.grad, &free)? {
                Some(d) => d,
                None => eval.grad.iter().map(|g| -g).collect(),
            };
            match self.line_search(&lambda, &eval, &direction)? {
                Some((next, next_eval)) => {
                    lambda = next;
                    eval = next_eval;
                }
                None => {
                    // numerical floor reached: accept if within the KKT threshold
                    if pg <= options.kkt_tol {
                        return Ok(Outcome { eval, lambda, projected_gradient: pg, iterations });
                    }
                    let steepest: Vec<f64> = eval.grad.iter().map(|g| -g).collect();
                    match self.line_search(&lambda, &eval, &steepest)? {
                        Some((next, next_eval)) => {
                            lambda = next;
                            eval = next_eval;
                        }
                        None => {
                            return Err(Error::NonConvergence { iterations, residual: pg })
                        }
                    }
                }
            }
        }
    }

    fn newton_direction(&self, lambda: &[f64], grad: &[f64], free: &[usize]) -> Result<Option<Vec<f64>>> {
        let m = free.len();
        if m == 0 {
            return Ok(None);
        }
        let mut hess = DMatrix::<f64>::zeros(m, m);
        for (j, &fj) in free.iter().enumerate() {
            let h = 1e-6 * lambda[fj].abs().max(1.0);
            let mut plus = lambda.to_vec();
            plus[fj] += h;
            let mut minus = lambda.to_vec();
            minus[fj] -= h;
            let gp = self.evaluate(&plus)?.grad;
            let gm = self.evaluate(&minus)?.grad;
            for (i, &fi) in free.iter().enumerate() {
                hess[(i, j)] = (gp[fi] - gm[fi]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let rhs = DVector::from_iterator(m, free.iter().map(|&i| -grad[i]));
        let scale = hess.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
        let mut mu = 1e-12 * scale;
        for _ in 0..40 {
            let shifted = &hess + DMatrix::<f64>::identity(m, m) * mu;
            if let Some(chol) = shifted.cholesky() {
                let step = chol.solve(&rhs);
                let mut d = vec![0.0; lambda.len()];
                for (i, &fi) in free.iter().enumerate() {
                    d[fi] = step[i];
                }
                return Ok(Some(d));
            }
            mu = (mu * 10.0).max(1e-12);
        }
        Ok(None)
    }

    #[allow(clippy::type_complexity)]
    fn line_search(&self, lambda: &[f64], eval: &Eval, direction: &[f64]) -> Result<Option<(Vec<f64>, Eval)>> {
        let mut t = 1.0;
        while t > 1e-20 {
            let next: Vec<f64> = lambda
                .iter()
                .zip(direction)
                .map(|(l, d)| (l + t * d).max(0.0))
                .collect();
            let decrease: f64 = eval
                .grad
                .iter()
                .zip(next.iter().zip(lambda))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            if decrease < 0.0 {
                let candidate = self.evaluate(&next)?;
                if candidate.value <= eval.value + 1e-4 * decrease {
                    return Ok(Some((next, candidate)));
                }
            }
            t *= 0.5;
        }
        Ok(None)
    }
}

fn projected_gradient(lambda: &[f64], grad: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(grad)
        .map(|(l, g)| if *l <= 0.0 { g.min(0.0).abs() } else { g.abs() })
        .fold(0.0, f64::max)
}

/// Strongly connected components containing at least one edge.
fn cyclic_components(n: usize, tails: &[usize], heads: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n];
    let mut inc = vec![Vec::new(); n];
    for (&u, &v) in tails.iter().zip(heads) {
        out[u].push(v);
        inc[v].push(u);
    }
    let reach = |adj: &Vec<Vec<usize>>, s: usize| {
        let mut seen = vec![false; n];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    };
    let mut assigned = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if assigned[s] {
            continue;
        }
        let fwd = reach(&out, s);
        let bwd = reach(&inc, s);
        let comp: Vec<usize> = (0..n).filter(|&v| fwd[v] && bwd[v]).collect();
        comp.iter().for_each(|&v| assigned[v] = true);
        let has_cycle = tails
            .iter()
            .zip(heads)
            .any(|(&u, &v)| fwd[u] && bwd[u] && fwd[v] && bwd[v]);
        if has_cycle {
            comps.push(comp);
        }
    }
    comps
}

/// Perron root with positive left and right vectors of an irreducible
/// nonnegative matrix, by shifted inverse iteration kept above the root via
/// the Collatz–Wielandt bound.
pub(crate) fn perron(b: &DMatrix<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let right = perron_vector(b)?;
    let left = perron_vector(&b.transpose())?;
    let br = b * &right;
    let rho = left.dot(&br) / left.dot(&right);
    Ok((rho, left, right))
}

fn perron_vector(b: &DMatrix<f64>) -> Result<DVector<f64>> {
    let d = b.nrows();
    let mut x = DVector::<f64>::from_element(d, 1.0 / d as f64);
    for iteration in 0..200 {
        let bx = b * &x;
        let ratios = bx.iter().zip(x.iter()).map(|(a, b)| a / b);
        let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        if hi - lo <= 1e-15 * hi || hi == 0.0 {
            return Ok(x);
        }
        let sigma = hi * (1.0 + 1e-13) + f64::MIN_POSITIVE;
        let shifted = DMatrix::<f64>::identity(d, d) * sigma - b;
        let Some(next) = shifted.lu().solve(&x) else {
            return Err(Error::NonConvergence { iterations: iteration, residual: hi - lo });
        };
        let total: f64 = next.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NonConvergence { iterations: iteration, residual: hi - lo });
        }
        let next = next / total;
        if next.iter().any(|v| *v <= 0.0) {
            // floor tiny negative noise; the true vector is strictly positive
            x = next.map(|v| v.max(f64::MIN_POSITIVE));
        } else {
            x = next;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{parse_rational, ratio};
    use crate::words::{Alphabet, Constraint, Word};

    fn rll(k: usize, p: &str) -> ConstraintSpec {
        ConstraintSpec::rll(k, parse_rational(p).unwrap()).unwrap()
    }

    fn cap(k: usize, p: &str) -> f64 {
        solve_capacity(&rll(k, p), 1e-9).unwrap().capacity
    }

    #[test]
    fn golden_ratio_capacity() {
        let golden = ((1.0 + 5f64.sqrt()) / 2.0).log2();
        assert!((cap(1, "0") - golden).abs() < 1e-9);
    }

    #[test]
    fn tribonacci_capacity() {
        // log2 of the real root of x³ = x² + x + 1
        assert!((cap(2, "0") - 0.8791464216066382).abs() < 1e-9);
    }

    #[test]
    fn frozen_reference_capacities() {
        // reference values from an independent conic solver
        let cases = [
            (1, "0.02", 0.7857535539926398),
            (1, "0.05", 0.8595239754516776),
            (1, "0.1", 0.932273154073747),
            (2, "0.02", 0.9402283186370151),
            (2, "0.05", 0.9759350654490769),
            (3, "0.01", 0.9745851315164902),
            (4, "0.01", 0.9937291414666285),
        ];
        for (k, p, expected) in cases {
            let got = cap(k, p);
            assert!((got - expected).abs() < 1e-7, "k={k} p={p}: {got} vs {expected}");
        }
    }

    #[test]
    fn redundant_caps() {
        assert!(check_redundant(&rll(1, "1/4")));
        assert!(!check_redundant(&rll(1, "0.1")));
        let r = solve_capacity(&rll(2, "1/8"), 1e-9).unwrap();
        assert_eq!(r.capacity, 1.0);
        assert!(r.redundant);
    }

    fn two_words(a: &str, pa: &str, b: &str, pb: &str, q: usize) -> ConstraintSpec {
        let alphabet = Alphabet::new(q).unwrap();
        ConstraintSpec::new(
            alphabet,
            vec![
                Constraint { word: Word::parse(a, &alphabet).unwrap(), cap: parse_rational(pa).unwrap() },
                Constraint { word: Word::parse(b, &alphabet).unwrap(), cap: parse_rational(pb).unwrap() },
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn symbol_frequency_caps() {
        let s = two_words("0", "0.3", "1", "0.7", 2);
        assert!(feasible(&s).unwrap());
        let r = solve_capacity(&s, 1e-9).unwrap();
        assert!((r.capacity - 0.8812908992305664).abs() < 1e-7);
        let bad = two_words("0", "0.3", "1", "0.3", 2);
        assert!(!feasible(&bad).unwrap());
        match solve_capacity(&bad, 1e-9) {
            Err(Error::Infeasible { violation }) => assert!((violation - 0.2).abs() < 1e-9),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn zero_cap_is_feasible() {
        assert!(feasible(&rll(1, "0")).unwrap());
    }

    #[test]
    fn ternary_alphabet() {
        let alphabet = Alphabet::new(3).unwrap();
        let s = ConstraintSpec::new(
            alphabet,
            vec![Constraint { word: Word::parse("00", &alphabet).unwrap(), cap: ratio(1, 20) }],
            None,
        )
        .unwrap();
        let r = solve_capacity(&s, 1e-9).unwrap();
        assert!((r.capacity - 1.5612106527188854).abs() < 1e-7);
    }

    #[test]
    fn optimizer_certificate() {
        let r = solve_capacity(&rll(2, "0.05"), 1e-9).unwrap();
        assert!(r.optimizer.is_shift_invariant());
        let m = build_constraint_matrix(&rll(2, "0.05")).unwrap();
        let f = crate::measures::apply_f(&m, &r.optimizer).unwrap();
        assert!(f[0] <= 0.05 + 1e-9);
        assert!(r.kkt_residual < 1e-7);
        assert!(r.multipliers[0] > 0.0);
        assert!((entropy_rate(&r.optimizer) - r.capacity).abs() < 1e-8);
    }

    #[test]
    fn monotone_in_cap() {
        let grid: Vec<f64> = ["0", "0.01", "0.03", "0.06", "0.1", "0.2"].iter().map(|p| cap(1, p)).collect();
        assert!(grid.windows(2).all(|w| w[0] <= w[1] + 1e-10), "{grid:?}");
    }

    #[test]
    fn growth_rates_from_enumeration() {
        let rows = capacity_vs_enumeration(&rll(1, "0"), 10, Mode::Strict).unwrap();
        let last = rows.last().unwrap();
        assert_eq!(last.count, 144);
        assert!((last.growth - 144f64.log2() / 10.0).abs() < 1e-12);
        assert!(last.growth > last.capacity);
    }

    #[test]
    fn implicitly_forced_edges() {
        // with 11 excluded every 1 is followed by 0, so ν(10) = ν(01) ≥ 1/2;
        // capping "0" at 1/2 then forces ν(00) = 0 and only 0101… survives
        let s = two_words("0", "1/2", "11", "0", 2);
        let r = solve_capacity(&s, 1e-9).unwrap();
        assert!(r.capacity.abs() < 1e-9);
        assert!((r.optimizer.weights()[1] - 0.5).abs() < 1e-9);
    }
}
