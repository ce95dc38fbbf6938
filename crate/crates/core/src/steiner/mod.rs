//! Steiner trees with a fixed or searched topology.

mod ball;
mod exact;
pub(crate) mod relax;

pub use ball::{count_branching_in_ball, count_crossings, length_in_ball};
pub use exact::{solve_exact, solve_exact_with, ExactSolution, SolveOptions};

use crate::error::{Error, Result};
use crate::geom::{angle_between, diameter, Point, ToleranceConfig};
use crate::scalar::Scalar;
use crate::topology::Topology;

/// A topology with coordinates for its Steiner nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTree<T> {
    topology: Topology,
    terminals: Vec<Point<T>>,
    steiner: Vec<Point<T>>,
    length: T,
    converged: bool,
    iterations: usize,
}

impl<T: Scalar> EmbeddedTree<T> {
    /// Wraps given coordinates; the length is recomputed.
    pub fn new(topology: Topology, terminals: Vec<Point<T>>, steiner: Vec<Point<T>>) -> Result<Self> {
        check_points(&terminals)?;
        if terminals.len() != topology.n_terminals() {
            return Err(Error::InvalidTopology(format!(
                "{} terminals for a topology on {}",
                terminals.len(),
                topology.n_terminals()
            )));
        }
        if steiner.len() != topology.n_steiner() {
            return Err(Error::InvalidTopology(format!(
                "{} Steiner points for a topology with {}",
                steiner.len(),
                topology.n_steiner()
            )));
        }
        for s in &steiner {
            terminals[0].check_dim(s)?;
        }
        let mut tree = Self {
            topology,
            terminals,
            steiner,
            length: T::zero(),
            converged: true,
            iterations: 0,
        };
        tree.length = tree.edge_length_sum();
        Ok(tree)
    }

    pub(crate) fn from_parts(
        topology: Topology,
        terminals: Vec<Point<T>>,
        steiner: Vec<Point<T>>,
        length: T,
        converged: bool,
        iterations: usize,
    ) -> Self {
        Self {
            topology,
            terminals,
            steiner,
            length,
            converged,
            iterations,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn terminals(&self) -> &[Point<T>] {
        &self.terminals
    }

    pub fn steiner_points(&self) -> &[Point<T>] {
        &self.steiner
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn dim(&self) -> usize {
        self.terminals[0].dim()
    }

    /// Position of node `i` (terminal or Steiner).
    pub fn node(&self, i: usize) -> &Point<T> {
        let n = self.topology.n_terminals();
        if i < n {
            &self.terminals[i]
        } else {
            &self.steiner[i - n]
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (&Point<T>, &Point<T>)> + '_ {
        self.topology
            .edges()
            .iter()
            .map(move |&(u, v)| (self.node(u), self.node(v)))
    }

    pub fn edge_length_sum(&self) -> T {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }

    /// Diameter of the terminal set.
    pub fn diameter(&self) -> T {
        diameter(&self.terminals)
    }

    /// Merges nodes joined by edges shorter than `eps_len * diameter`.
    pub fn contracted(&self, tol: &ToleranceConfig<T>) -> ContractedTree<T> {
        let thr = tol.eps_len * self.diameter();
        let n_nodes = self.topology.n_nodes();
        let mut parent: Vec<usize> = (0..n_nodes).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut degenerate = Vec::new();
        for &(u, v) in self.topology.edges() {
            if self.node(u).dist(self.node(v)) <= thr {
                degenerate.push((u, v));
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                if ru != rv {
                    // keep the smaller index as root so terminals represent their group
                    let (lo, hi) = if ru < rv { (ru, rv) } else { (rv, ru) };
                    parent[hi] = lo;
                }
            }
        }
        let mut group_of = vec![usize::MAX; n_nodes];
        let mut positions = Vec::new();
        let mut is_terminal = Vec::new();
        for i in 0..n_nodes {
            let r = find(&mut parent, i);
            if group_of[r] == usize::MAX {
                group_of[r] = positions.len();
                positions.push(self.node(r).clone());
                is_terminal.push(self.topology.is_terminal(r));
            }
            group_of[i] = group_of[r];
        }
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &(u, v) in self.topology.edges() {
            let (a, b) = (group_of[u], group_of[v]);
            if a != b {
                let e = (a.min(b), a.max(b));
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
        ContractedTree {
            positions,
            is_terminal,
            edges,
            degenerate,
        }
    }
}

pub(crate) fn check_points<T: Scalar>(points: &[Point<T>]) -> Result<()> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidParameter {
            name: "terminals",
            reason: "empty point set".into(),
        });
    };
    for p in points {
        first.check_dim(p)?;
    }
    Ok(())
}

/// Tree after contracting degenerate edges.
#[derive(Debug, Clone)]
pub struct ContractedTree<T> {
    pub positions: Vec<Point<T>>,
    pub is_terminal: Vec<bool>,
    pub edges: Vec<(usize, usize)>,
    /// Original-index edges that were contracted.
    pub degenerate: Vec<(usize, usize)>,
}

impl<T: Scalar> ContractedTree<T> {
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.positions.len()];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Smallest angle between two edges sharing a vertex.
    pub fn min_angle(&self) -> Option<T> {
        let mut adj = vec![Vec::new(); self.positions.len()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut best: Option<T> = None;
        for (v, nb) in adj.iter().enumerate() {
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    let a = &self.positions[nb[i]] - &self.positions[v];
                    let b = &self.positions[nb[j]] - &self.positions[v];
                    let ang = angle_between(&a, &b);
                    best = Some(best.map_or(ang, |x: T| x.min(ang)));
                }
            }
        }
        best
    }

    pub fn is_tree(&self) -> bool {
        let n = self.positions.len();
        if self.edges.len() + 1 != n {
            return false;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }
}

/// Structural facts about an embedded tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeReport<T> {
    /// Smallest angle between adjacent edges after contraction; `None` when no vertex has two edges.
    pub min_angle: Option<T>,
    pub max_degree: usize,
    pub degenerate_edges: Vec<(usize, usize)>,
    pub is_tree: bool,
}

pub fn verify_tree<T: Scalar>(tree: &EmbeddedTree<T>, tol: &ToleranceConfig<T>) -> TreeReport<T> {
    let c = tree.contracted(tol);
    TreeReport {
        min_angle: c.min_angle(),
        max_degree: c.degrees().into_iter().max().unwrap_or(0),
        degenerate_edges: c.degenerate.clone(),
        is_tree: c.is_tree(),
    }
}

/// Relaxes Steiner coordinates for a fixed topology.
pub fn relax_topology<T: Scalar>(
    terminals: &[Point<T>],
    topology: &Topology,
    tol: &ToleranceConfig<T>,
) -> Result<EmbeddedTree<T>> {
    Ok(relax_topology_traced(terminals, topology, tol)?.0)
}

/// As [`relax_topology`], also returning the total length after every iteration.
pub fn relax_topology_traced<T: Scalar>(
    terminals: &[Point<T>],
    topology: &Topology,
    tol: &ToleranceConfig<T>,
) -> Result<(EmbeddedTree<T>, Vec<T>)> {
    check_points(terminals)?;
    if terminals.len() != topology.n_terminals() {
        return Err(Error::InvalidTopology(format!(
            "{} terminals for a topology on {}",
            terminals.len(),
            topology.n_terminals()
        )));
    }
    let adj = topology.adjacency();
    if adj[topology.n_terminals()..].iter().any(|nb| nb.len() != 3) {
        return Err(Error::InvalidTopology("Steiner nodes must have degree 3".into()));
    }
    let scale = diameter(terminals);
    let problem = relax::TreeProblem::new(topology, terminals, T::zero(), scale, tol.eps_len);
    let out = problem.solve();
    let tree = EmbeddedTree::from_parts(
        topology.clone(),
        terminals.to_vec(),
        out.steiner,
        out.length,
        out.converged,
        out.iterations,
    );
    Ok((tree, out.trace))
}

/// Largest norm of the sum of unit edge vectors at non-degenerate Steiner nodes.
pub fn stationarity_residual<T: Scalar>(tree: &EmbeddedTree<T>, tol: &ToleranceConfig<T>) -> T {
    let problem = relax::TreeProblem::new(&tree.topology, &tree.terminals, T::zero(), tree.diameter(), tol.eps_len);
    problem.residual(&tree.steiner)
}
