use rayon::prelude::*;

use super::{check_points, relax_topology, EmbeddedTree};
use crate::error::{Error, Result};
use crate::geom::{diameter, Point, ToleranceConfig};
use crate::scalar::Scalar;
use crate::topology::{enumerate_full_topologies, Topology, TopologyKey, DEFAULT_N_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub n_max: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { n_max: DEFAULT_N_MAX }
    }
}

#[derive(Debug, Clone)]
pub struct ExactSolution<T> {
    pub best: EmbeddedTree<T>,
    /// Distinct topologies reaching the minimum, one per distinct embedding.
    pub cominimal: Vec<Topology>,
    /// Topologies whose relaxation hit the iteration cap.
    pub unconverged: Vec<Topology>,
    pub relaxed: usize,
}

impl<T> ExactSolution<T> {
    pub fn all_converged(&self) -> bool {
        self.unconverged.is_empty()
    }
}

pub fn solve_exact<T: Scalar>(terminals: &[Point<T>], tol: &ToleranceConfig<T>) -> Result<ExactSolution<T>> {
    solve_exact_with(terminals, tol, &SolveOptions::default())
}

/// Exhaustive search over full topologies, relaxed in parallel.
pub fn solve_exact_with<T: Scalar>(
    terminals: &[Point<T>],
    tol: &ToleranceConfig<T>,
    opts: &SolveOptions,
) -> Result<ExactSolution<T>> {
    check_points(terminals)?;
    let n = terminals.len();
    if n < 2 || n > opts.n_max {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 2,
            max: opts.n_max,
        });
    }
    if n == 2 {
        let tree = EmbeddedTree::new(Topology::segment(), terminals.to_vec(), Vec::new())?;
        return Ok(ExactSolution {
            best: tree,
            cominimal: vec![Topology::segment()],
            unconverged: Vec::new(),
            relaxed: 1,
        });
    }
    let topologies = enumerate_full_topologies(n, opts.n_max)?;
    let mut relaxed: Vec<(TopologyKey, EmbeddedTree<T>)> = topologies
        .par_iter()
        .map(|t| relax_topology(terminals, t, tol).map(|tree| (t.canonical_key(), tree)))
        .collect::<Result<_>>()?;
    relaxed.sort_by(|a, b| a.0.cmp(&b.0));
    pick_minimum(relaxed, tol)
}

/// Chooses the shortest tree and collects ties; input must be sorted by key.
pub(crate) fn pick_minimum<T: Scalar>(
    relaxed: Vec<(TopologyKey, EmbeddedTree<T>)>,
    tol: &ToleranceConfig<T>,
) -> Result<ExactSolution<T>> {
    let count = relaxed.len();
    let unconverged = relaxed
        .iter()
        .filter(|(_, t)| !t.converged())
        .map(|(_, t)| t.topology().clone())
        .collect();
    let min_len = relaxed
        .iter()
        .map(|(_, t)| t.length())
        .fold(T::infinity(), |a, b| a.min(b));
    if !min_len.is_finite() {
        return Err(Error::Infeasible("no topology relaxed to a finite length".into()));
    }
    let tie = tol.eps_tie * min_len.max(T::min_positive_value());
    let mut ties: Vec<EmbeddedTree<T>> = relaxed
        .into_iter()
        .filter(|(_, t)| t.length() - min_len <= tie)
        .map(|(_, t)| t)
        .collect();
    let scale = diameter(ties[0].terminals());
    let merge_tol = tol.eps_tie.sqrt() * scale;
    let mut distinct: Vec<(EmbeddedTree<T>, Vec<(Point<T>, Point<T>)>)> = Vec::new();
    for tree in ties.drain(..) {
        let segs = contracted_segments(&tree, tol);
        if distinct.iter().any(|(_, s)| same_segments(s, &segs, merge_tol)) {
            continue;
        }
        distinct.push((tree, segs));
    }
    let cominimal = distinct.iter().map(|(t, _)| t.topology().clone()).collect();
    let best = distinct.swap_remove(0).0;
    Ok(ExactSolution {
        best,
        cominimal,
        unconverged,
        relaxed: count,
    })
}

fn contracted_segments<T: Scalar>(tree: &EmbeddedTree<T>, tol: &ToleranceConfig<T>) -> Vec<(Point<T>, Point<T>)> {
    let c = tree.contracted(tol);
    c.edges
        .iter()
        .map(|&(u, v)| (c.positions[u].clone(), c.positions[v].clone()))
        .collect()
}

fn same_segments<T: Scalar>(a: &[(Point<T>, Point<T>)], b: &[(Point<T>, Point<T>)], tol: T) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for (p, q) in a {
        for (j, (r, s)) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let direct = p.dist(r) <= tol && q.dist(s) <= tol;
            let flipped = p.dist(s) <= tol && q.dist(r) <= tol;
            if direct || flipped {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}
