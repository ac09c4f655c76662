//! Linear programs over the shift-invariant simplex: phase-1 feasibility and
//! detection of edges that every feasible measure leaves empty.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::capacity::Program;
use crate::error::{Error, Result};

/// Shift-invariant probability measures supported on the `alive` edges.
pub(crate) struct Polytope<'a> {
    pub(crate) program: &'a Program,
    pub(crate) alive: &'a [bool],
}

impl Polytope<'_> {
    fn edges(&self) -> Vec<usize> {
        (0..self.program.num_edges()).filter(|&e| self.alive[e]).collect()
    }

    /// Adds `Σν = 1` and flow conservation, skipping one redundant vertex
    /// equation per weakly connected component.
    fn add_simplex(&self, lp: &mut Problem, edges: &[usize], nu: &[Variable]) {
        let p = self.program;
        let n = p.num_vertices;
        lp.add_constraint(nu.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);

        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            parent[x] = r;
            r
        }
        let mut coeffs = vec![Vec::new(); n];
        for (i, &e) in edges.iter().enumerate() {
            let (u, w) = (p.tail(e), p.head(e));
            if u == w {
                continue;
            }
            coeffs[u].push((nu[i], -1.0));
            coeffs[w].push((nu[i], 1.0));
            let (ru, rw) = (find(&mut parent, u), find(&mut parent, w));
            parent[ru] = rw;
        }
        let mut skipped = vec![false; n];
        for (v, terms) in coeffs.into_iter().enumerate() {
            if terms.is_empty() {
                continue;
            }
            let root = find(&mut parent, v);
            if !skipped[root] {
                skipped[root] = true;
                continue;
            }
            lp.add_constraint(terms, ComparisonOp::Eq, 0.0);
        }
    }

    fn row_terms(&self, row: usize, position: &[Option<usize>], nu: &[Variable]) -> Vec<(Variable, f64)> {
        self.program
            .matrix
            .support(row)
            .iter()
            .filter_map(|&e| position[e].map(|i| (nu[i], 1.0)))
            .collect()
    }

    fn positions(&self, edges: &[usize]) -> Vec<Option<usize>> {
        let mut position = vec![None; self.program.num_edges()];
        for (i, &e) in edges.iter().enumerate() {
            position[e] = Some(i);
        }
        position
    }
}

fn solve(lp: &Problem) -> Result<Option<microlp::Solution>> {
    match lp.solve() {
        Ok(outcome) => outcome
            .into_solution()
            .map(Some)
            .map_err(|_| Error::NonConvergence { iterations: 0, residual: f64::NAN }),
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::Input(format!("linear program failed: {e}"))),
    }
}

/// Least uniform cap relaxation `t` making the polytope nonempty, with a
/// witness measure indexed like `Σ^k`.
pub(crate) fn min_violation(poly: &Polytope) -> Result<(f64, Vec<f64>)> {
    let edges = poly.edges();
    if edges.is_empty() {
        return Ok((f64::INFINITY, vec![0.0; poly.program.num_edges()]));
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let nu: Vec<Variable> = edges.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    poly.add_simplex(&mut lp, &edges, &nu);
    let position = poly.positions(&edges);
    for (row, &cap) in poly.program.caps.iter().enumerate() {
        let mut terms = poly.row_terms(row, &position, &nu);
        terms.push((t, -1.0));
        lp.add_constraint(terms, ComparisonOp::Le, cap);
    }
    let Some(sol) = solve(&lp)? else {
        return Ok((f64::INFINITY, vec![0.0; poly.program.num_edges()]));
    };
    let mut witness = vec![0.0; poly.program.num_edges()];
    for (i, &e) in edges.iter().enumerate() {
        witness[e] = sol.var_value(nu[i]).max(0.0);
    }
    Ok((sol.var_value(t).max(0.0), witness))
}

/// Alive edges carrying no weight in any feasible measure. Each round
/// maximises the total weight placed on not-yet-witnessed edges; edges that
/// receive weight are witnessed, and a round with zero optimum ends the search.
pub(crate) fn forced_zero_edges(poly: &Polytope, tol: f64) -> Result<Vec<usize>> {
    let edges = poly.edges();
    let position = poly.positions(&edges);
    let mut witnessed = vec![false; edges.len()];
    loop {
        let open: Vec<usize> = (0..edges.len()).filter(|&i| !witnessed[i]).collect();
        if open.is_empty() {
            return Ok(Vec::new());
        }
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let nu: Vec<Variable> = edges.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        poly.add_simplex(&mut lp, &edges, &nu);
        for (row, &cap) in poly.program.caps.iter().enumerate() {
            let terms = poly.row_terms(row, &position, &nu);
            if !terms.is_empty() {
                lp.add_constraint(terms, ComparisonOp::Le, cap + tol * 1e-3);
            }
        }
        let slack: Vec<Variable> = open.iter().map(|_| lp.add_var(1.0, (0.0, 1.0))).collect();
        for (&i, &s) in open.iter().zip(&slack) {
            lp.add_constraint([(s, 1.0), (nu[i], -1.0)], ComparisonOp::Le, 0.0);
        }
        let Some(sol) = solve(&lp)? else {
            return Ok(edges);
        };
        let mut progress = false;
        for &i in &open {
            if sol.var_value(nu[i]) > tol {
                witnessed[i] = true;
                progress = true;
            }
        }
        if sol.objective() <= tol || !progress {
            return Ok(open.into_iter().map(|i| edges[i]).collect());
        }
    }
}
