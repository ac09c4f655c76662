//! De Bruijn graphs, Markov chains whose edge-stationary distribution is a
//! prescribed k-tuple measure, and stationary/mixing computations.

mod circulation;

pub use circulation::{
    effective_length, epsilon_adjust, find_directed_cycle, integer_round_circulation,
    realize_cyclic_sequence, round_measure_to_lattice, within_window, Circulation, Traversal,
    UnderlyingCycle,
};

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::measures::{KTupleMeasure, SHIFT_TOLERANCE};
use crate::words::{Alphabet, Word};

/// De Bruijn graph of order `m`: vertices `Σ^m`, and one edge `u → lchop(u·a)`
/// labelled `a` for every `(u, a)`, identified with the `(m+1)`-tuple `u·a`.
/// Order 0 is a single vertex carrying `|Σ|` self-loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeBruijnGraph {
    order: usize,
    alphabet: Alphabet,
    num_vertices: usize,
}

impl DeBruijnGraph {
    pub fn new(order: usize, alphabet: Alphabet) -> Result<Self> {
        let num_vertices = alphabet
            .count(order)
            .filter(|v| v.checked_mul(alphabet.size()).is_some())
            .ok_or_else(|| input(format!("De Bruijn graph of order {order} is too large")))?;
        Ok(DeBruijnGraph { order, alphabet, num_vertices })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_vertices * self.alphabet.size()
    }

    /// Edge index of `u·a`, which is also its lexicographic rank in `Σ^{m+1}`.
    pub fn edge(&self, u: usize, symbol: u8) -> usize {
        u * self.alphabet.size() + symbol as usize
    }

    pub fn tail(&self, e: usize) -> usize {
        e / self.alphabet.size()
    }

    pub fn head(&self, e: usize) -> usize {
        e % self.num_vertices
    }

    pub fn label(&self, e: usize) -> u8 {
        (e % self.alphabet.size()) as u8
    }

    /// `lchop(u·a)`.
    pub fn step(&self, u: usize, symbol: u8) -> usize {
        self.head(self.edge(u, symbol))
    }

    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = usize> {
        let q = self.alphabet.size();
        (u * q)..(u * q + q)
    }

    pub fn in_edges(&self, w: usize) -> impl Iterator<Item = usize> {
        let nv = self.num_vertices;
        (0..self.alphabet.size()).map(move |j| w + j * nv)
    }

    pub fn vertex_word(&self, v: usize) -> Word {
        Word::from_index(v, self.order, &self.alphabet)
    }

    pub fn edge_word(&self, e: usize) -> Word {
        Word::from_index(e, self.order + 1, &self.alphabet)
    }
}

pub fn build_debruijn(order: usize, alphabet: Alphabet) -> Result<DeBruijnGraph> {
    DeBruijnGraph::new(order, alphabet)
}

/// A chain on a De Bruijn graph: `probs[u][a]` is the probability of
/// emitting `a` (and moving along `u·a`) from state `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovChain {
    #[serde(skip)]
    graph: DeBruijnGraph,
    probs: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovChain {
    pub fn graph(&self) -> &DeBruijnGraph {
        &self.graph
    }

    pub fn symbol_probs(&self, u: usize) -> &[f64] {
        &self.probs[u]
    }

    /// `q_u`: probability of the 0-labelled edge out of `u`.
    pub fn edge_prob(&self, u: usize) -> f64 {
        self.probs[u][0]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Row-stochastic vertex transition matrix `A`.
    pub fn transition(&self) -> Vec<Vec<f64>> {
        let g = &self.graph;
        let mut a = vec![vec![0.0; g.num_vertices()]; g.num_vertices()];
        for (u, row) in a.iter_mut().enumerate() {
            for (s, p) in self.probs[u].iter().enumerate() {
                row[g.step(u, s as u8)] += p;
            }
        }
        a
    }

    /// `v_u · A(u, a)` for every edge `u·a`.
    pub fn edge_measure(&self) -> Vec<f64> {
        (0..self.graph.num_edges())
            .map(|e| {
                let u = self.graph.tail(e);
                self.stationary[u] * self.probs[u][self.graph.label(e) as usize]
            })
            .collect()
    }

    /// Entropy rate `Σ_u v_u H(A(u,·))` in bits.
    pub fn entropy_rate(&self) -> f64 {
        self.stationary
            .iter()
            .zip(&self.probs)
            .map(|(v, row)| v * row.iter().map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 }).sum::<f64>())
            .sum()
    }

    /// CSV edge list in lexicographic order, probabilities to 17 significant digits.
    pub fn to_csv(&self) -> String {
        let g = &self.graph;
        let mut out = String::from("edge,from,to,symbol,probability,edge_measure\n");
        let measure = self.edge_measure();
        for e in 0..g.num_edges() {
            let u = g.tail(e);
            out.push_str(&format!(
                "{},{},{},{},{:.16e},{:.16e}\n",
                g.edge_word(e),
                g.vertex_word(u),
                g.vertex_word(g.head(e)),
                g.label(e),
                self.probs[u][g.label(e) as usize],
                measure[e]
            ));
        }
        out
    }
}

/// Chain whose stationary edge distribution equals the shift-invariant
/// measure `p` on `Σ^k`. States with no mass get a deterministic transition
/// that leads back toward the support.
pub fn chain_from_measure(p: &KTupleMeasure) -> Result<MarkovChain> {
    let defect = p.shift_defect();
    if defect > SHIFT_TOLERANCE {
        return Err(Error::NotShiftInvariant { defect });
    }
    if p.k() == 0 {
        return Err(input("measure on the empty tuple"));
    }
    let graph = DeBruijnGraph::new(p.k() - 1, p.alphabet())?;
    let q = graph.alphabet().size();
    let nv = graph.num_vertices();
    let w = p.weights();
    let stationary: Vec<f64> = (0..nv).map(|u| graph.out_edges(u).map(|e| w[e]).sum()).collect();

    let toward_support = forced_symbols(&graph, &stationary);
    let probs = (0..nv)
        .map(|u| {
            if stationary[u] > 0.0 {
                graph.out_edges(u).map(|e| w[e] / stationary[u]).collect()
            } else {
                let mut row = vec![0.0; q];
                row[toward_support[u] as usize] = 1.0;
                row
            }
        })
        .collect();
    Ok(MarkovChain { graph, probs, stationary })
}

/// For each zero-mass vertex, the symbol of an edge on a shortest path to a
/// positive-mass vertex (smallest symbol on ties).
fn forced_symbols(graph: &DeBruijnGraph, mass: &[f64]) -> Vec<u8> {
    let nv = graph.num_vertices();
    let mut dist = vec![usize::MAX; nv];
    let mut queue = VecDeque::new();
    for v in 0..nv {
        if mass[v] > 0.0 {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(w) = queue.pop_front() {
        for e in graph.in_edges(w) {
            let u = graph.tail(e);
            if dist[u] == usize::MAX {
                dist[u] = dist[w] + 1;
                queue.push_back(u);
            }
        }
    }
    (0..nv)
        .map(|u| {
            (0..graph.alphabet().size() as u8)
                .min_by_key(|&a| dist[graph.step(u, a)])
                .unwrap_or(0)
        })
        .collect()
}

/// Stationary vector of a row-stochastic matrix whose positive-probability
/// graph has a single closed class.
pub fn stationary(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return Err(input("transition matrix must be square and nonempty"));
    }
    for row in a {
        let s: f64 = row.iter().sum();
        if row.iter().any(|&x| x < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(input("transition matrix rows must be probability vectors"));
        }
    }
    let classes = closed_classes(a);
    if classes.len() > 1 {
        return Err(Error::Reducible(classes[1].clone()));
    }
    let v = if n <= 2048 { direct_stationary(a) } else { None };
    let mut v = match v {
        Some(v) => v,
        None => power_stationary(a)?,
    };
    // one polishing step v ← vA, then renormalise
    let mut polished = vec![0.0; n];
    for (i, row) in a.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            polished[j] += v[i] * p;
        }
    }
    let total: f64 = polished.iter().map(|x| x.max(0.0)).sum();
    for (x, y) in v.iter_mut().zip(&polished) {
        *x = y.max(0.0) / total;
    }
    Ok(v)
}

fn direct_stationary(a: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    // solve vᵀ(A − I) = 0 with the last equation replaced by Σv = 1
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(j, i)] = a[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..n {
        m[(n - 1, i)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let v = m.lu().solve(&rhs)?;
    v.iter().all(|x| x.is_finite()).then(|| v.iter().copied().collect())
}

fn power_stationary(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; n];
        for (i, row) in a.iter().enumerate() {
            next[i] += 0.5 * v[i];
            for (j, &p) in row.iter().enumerate() {
                next[j] += 0.5 * v[i] * p;
            }
        }
        let change: f64 = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).sum();
        v = next;
        if change <= 1e-13 {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence { iterations: 1_000_000, residual: f64::NAN })
}

/// Closed communicating classes of the positive-probability graph, each sorted.
fn closed_classes(a: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = a.len();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(x) = stack.pop() {
                for (y, &p) in a[x].iter().enumerate() {
                    if p > 0.0 && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen
        })
        .collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut assigned = vec![false; n];
    for s in 0..n {
        if assigned[s] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&t| reach[s][t] && reach[t][s]).collect();
        class.iter().for_each(|&t| assigned[t] = true);
        // closed iff everything reachable from s reaches back
        if (0..n).all(|t| !reach[s][t] || reach[t][s]) {
            classes.push(class);
        }
    }
    classes
}

/// `max_u ‖A^t(u,·) − v‖_TV` for `t = 0..=steps`.
pub fn mixing_profile(chain: &MarkovChain, steps: usize) -> Vec<f64> {
    let a = chain.transition();
    let v = chain.stationary();
    let n = a.len();
    let mut power: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tv = |p: &Vec<Vec<f64>>| {
        p.iter()
            .map(|row| 0.5 * row.iter().zip(v).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut profile = vec![tv(&power)];
    for _ in 0..steps {
        let mut next = vec![vec![0.0; n]; n];
        for (i, row) in power.iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    for (j, &y) in a[k].iter().enumerate() {
                        next[i][j] += x * y;
                    }
                }
            }
        }
        power = next;
        profile.push(tv(&power));
    }
    profile
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::solve_capacity;
    use crate::rational::ratio;
    use crate::words::ConstraintSpec;

    fn bin() -> Alphabet {
        Alphabet::binary()
    }

    #[test]
    fn small_graphs() {
        let g = build_debruijn(1, bin()).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (2, 4));
        let words: Vec<String> = (0..4).map(|e| g.edge_word(e).to_string()).collect();
        assert_eq!(words, ["00", "01", "10", "11"]);
        let g = build_debruijn(2, bin()).unwrap();
        let e = g.edge(2, 1); // 10 ·1
        assert_eq!(g.edge_word(e).to_string(), "101");
        assert_eq!(g.vertex_word(g.head(e)).to_string(), "01");
    }

    #[test]
    fn degrees() {
        let g = build_debruijn(3, bin()).unwrap();
        for v in 0..g.num_vertices() {
            assert_eq!(g.out_edges(v).count(), 2);
            assert_eq!(g.in_edges(v).count(), 2);
            assert!(g.in_edges(v).all(|e| g.head(e) == v));
            assert!(g.out_edges(v).all(|e| g.tail(e) == v));
        }
    }

    #[test]
    fn uniform_chain() {
        let c = chain_from_measure(&KTupleMeasure::uniform(bin(), 3)).unwrap();
        assert!(c.stationary().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!((0..4).all(|u| c.edge_prob(u) == 0.5));
        assert!((c.entropy_rate() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chain_reproduces_optimal_measure() {
        let spec = ConstraintSpec::rll(2, ratio(1, 20)).unwrap();
        let nu = solve_capacity(&spec, 1e-9).unwrap().optimizer;
        let c = chain_from_measure(&nu).unwrap();
        let back = c.edge_measure();
        assert!(back.iter().zip(nu.weights()).all(|(a, b)| (a - b).abs() < 1e-10));
        let v = stationary(&c.transition()).unwrap();
        assert!(v.iter().zip(c.stationary()).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn zero_forced_edge_and_vertex() {
        let spec = ConstraintSpec::rll(1, ratio(0, 1)).unwrap();
        let nu = solve_capacity(&spec, 1e-9).unwrap().optimizer;
        let c = chain_from_measure(&nu).unwrap();
        assert_eq!(c.symbol_probs(1)[1], 0.0);
        // with 11 and 10 excluded vertex 1 carries no mass and is forced back to 0
        let point = KTupleMeasure::point_mass(&Word::parse("00", &bin()).unwrap(), bin());
        let c = chain_from_measure(&point).unwrap();
        assert_eq!(c.symbol_probs(1), &[1.0, 0.0]);
        assert_eq!(c.stationary(), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_non_shift_invariant() {
        let bad = KTupleMeasure::point_mass(&Word::parse("01", &bin()).unwrap(), bin());
        assert!(matches!(chain_from_measure(&bad), Err(Error::NotShiftInvariant { .. })));
    }

    #[test]
    fn two_state_closed_form() {
        let (a, b) = (0.3, 0.1);
        let v = stationary(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        assert!((v[0] - b / (a + b)).abs() < 1e-14);
        assert!((v[1] - a / (a + b)).abs() < 1e-14);
        let v = stationary(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reducible_is_reported() {
        match stationary(&[vec![1.0, 0.0], vec![0.0, 1.0]]) {
            Err(Error::Reducible(set)) => assert_eq!(set, vec![1]),
            other => panic!("{other:?}"),
        }
        // a transient state is fine
        let v = stationary(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(v, vec![0.0, 1.0]);
    }

    #[test]
    fn uniform_chain_synchronises() {
        let c = chain_from_measure(&KTupleMeasure::uniform(bin(), 4)).unwrap();
        let profile = mixing_profile(&c, 5);
        assert!(profile[3] < 1e-15);
        assert!(profile[2] > 0.1);
    }

    #[test]
    fn mixing_is_monotone_and_geometric() {
        let spec = ConstraintSpec::rll(2, ratio(1, 20)).unwrap();
        let c = chain_from_measure(&solve_capacity(&spec, 1e-9).unwrap().optimizer).unwrap();
        let profile = mixing_profile(&c, 60);
        assert!(profile.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        // geometric envelope down to the floating-point floor
        for t in 0..=20 {
            assert!(profile[t] <= 4.0 * 0.35f64.powi(t as i32), "{profile:?}");
        }
        assert!(profile[30] < 1e-14);
    }

    #[test]
    fn csv_export() {
        let spec = ConstraintSpec::rll(1, ratio(1, 10)).unwrap();
        let c = chain_from_measure(&solve_capacity(&spec, 1e-9).unwrap().optimizer).unwrap();
        let csv = c.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "edge,from,to,symbol,probability,edge_measure");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("11,1,1,1,"));
        let last: f64 = lines[4].rsplit(',').next().unwrap().parse().unwrap();
        assert!((last - 0.1).abs() < 1e-9);
    }
}
