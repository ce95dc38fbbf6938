//! Full Steiner topologies over labeled terminals.
//!
//! Terminals are nodes `0..n`, Steiner nodes are `n..n + s`. A full topology
//! on `n >= 3` terminals has `n - 2` Steiner nodes of degree three and every
//! terminal is a leaf. The two-terminal case is the single edge `(0, 1)`.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Largest terminal count accepted by the enumerators unless overridden.
pub const DEFAULT_N_MAX: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topology {
    n_terminals: usize,
    n_steiner: usize,
    edges: Vec<(usize, usize)>,
}

/// Isomorphism class of a topology with terminal labels held fixed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopologyKey(String);

impl TopologyKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for TopologyKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl Topology {
    /// Builds a topology from an edge list and checks that it is a tree.
    ///
    /// Fullness is not required here; see [`Topology::is_full`].
    pub fn new(n_terminals: usize, n_steiner: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let t = Self {
            n_terminals,
            n_steiner,
            edges,
        };
        t.check_tree()?;
        Ok(t)
    }

    /// The single edge joining two terminals.
    pub fn segment() -> Self {
        Self {
            n_terminals: 2,
            n_steiner: 0,
            edges: vec![(0, 1)],
        }
    }

    /// One Steiner node joined to the three terminals.
    pub fn tripod() -> Self {
        Self {
            n_terminals: 3,
            n_steiner: 1,
            edges: vec![(0, 3), (1, 3), (2, 3)],
        }
    }

    #[inline]
    pub fn n_terminals(&self) -> usize {
        self.n_terminals
    }

    #[inline]
    pub fn n_steiner(&self) -> usize {
        self.n_steiner
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_terminals + self.n_steiner
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn is_terminal(&self, node: usize) -> bool {
        node < self.n_terminals
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_nodes()];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    fn check_tree(&self) -> Result<()> {
        let n = self.n_nodes();
        if n == 0 {
            return Err(Error::InvalidTopology("no nodes".into()));
        }
        if self.edges.len() + 1 != n {
            return Err(Error::InvalidTopology(format!(
                "{} edges for {} nodes",
                self.edges.len(),
                n
            )));
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
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidTopology(format!("bad edge ({u}, {v})")));
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return Err(Error::InvalidTopology("cycle".into()));
            }
            parent[ru] = rv;
        }
        Ok(())
    }

    /// Terminals are leaves and Steiner nodes have degree three.
    pub fn is_full(&self) -> bool {
        if self.n_terminals == 2 {
            return self.n_steiner == 0 && self.edges.len() == 1;
        }
        let deg = self.degrees();
        self.n_steiner + 2 == self.n_terminals
            && deg[..self.n_terminals].iter().all(|&d| d == 1)
            && deg[self.n_terminals..].iter().all(|&d| d == 3)
    }

    /// Splits edge `edge_idx` with a new Steiner node and hangs a new terminal on it.
    ///
    /// Terminal and Steiner indices are renumbered so that the result again has
    /// terminals `0..n + 1` followed by Steiner nodes.
    pub fn insert_terminal(&self, edge_idx: usize) -> Self {
        let n = self.n_terminals;
        let relabel = |v: usize| if v < n { v } else { v + 1 };
        let new_terminal = n;
        let new_steiner = n + 1 + self.n_steiner;
        let mut edges = Vec::with_capacity(self.edges.len() + 2);
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            let (u, v) = (relabel(u), relabel(v));
            if i == edge_idx {
                edges.push((u, new_steiner));
                edges.push((new_steiner, v));
            } else {
                edges.push((u, v));
            }
        }
        edges.push((new_terminal, new_steiner));
        Self {
            n_terminals: n + 1,
            n_steiner: self.n_steiner + 1,
            edges,
        }
    }

    /// AHU-style encoding rooted at terminal 0.
    pub fn canonical_key(&self) -> TopologyKey {
        let adj = self.adjacency();
        TopologyKey(self.encode(&adj, 0, usize::MAX))
    }

    fn encode(&self, adj: &[Vec<usize>], node: usize, parent: usize) -> String {
        let mut children: Vec<String> = adj[node]
            .iter()
            .filter(|&&c| c != parent)
            .map(|&c| self.encode(adj, c, node))
            .collect();
        children.sort_unstable();
        let mut out = String::new();
        if self.is_terminal(node) {
            out.push('t');
            out.push_str(&node.to_string());
        } else {
            out.push('s');
        }
        if !children.is_empty() {
            out.push('(');
            out.push_str(&children.join(","));
            out.push(')');
        }
        out
    }

    /// Returns a copy with Steiner nodes renumbered by `perm` (old index -> new index, both 0-based).
    pub fn permute_steiner(&self, perm: &[usize]) -> Self {
        let n = self.n_terminals;
        let map = |v: usize| if v < n { v } else { n + perm[v - n] };
        Self {
            n_terminals: n,
            n_steiner: self.n_steiner,
            edges: self.edges.iter().map(|&(u, v)| (map(u), map(v))).collect(),
        }
    }

    /// Returns a copy with terminals `a` and `b` exchanged.
    pub fn swap_terminals(&self, a: usize, b: usize) -> Self {
        let map = |v: usize| {
            if v == a {
                b
            } else if v == b {
                a
            } else {
                v
            }
        };
        Self {
            n_terminals: self.n_terminals,
            n_steiner: self.n_steiner,
            edges: self.edges.iter().map(|&(u, v)| (map(u), map(v))).collect(),
        }
    }
}

/// `(2n - 4)! / (2^(n-2) (n-2)!)`, the number of full topologies on `n` terminals.
pub fn count_full_topologies(n: usize) -> Result<BigUint> {
    if n < 3 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 3,
            max: usize::MAX,
        });
    }
    let factorial = |k: usize| (1..=k).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(i));
    let num = factorial(2 * n - 4);
    let den = (BigUint::from(1u32) << (n - 2)) * factorial(n - 2);
    Ok(num / den)
}

/// All full topologies on `n` labeled terminals, `3 <= n <= n_max`.
///
/// Terminal `k + 1` is hung on every edge of every topology on `k`
/// terminals, starting from the tripod. The output order is deterministic.
pub fn enumerate_full_topologies(n: usize, n_max: usize) -> Result<Vec<Topology>> {
    if n < 3 || n > n_max {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 3,
            max: n_max,
        });
    }
    let mut level = vec![Topology::tripod()];
    for _ in 3..n {
        level = level
            .iter()
            .flat_map(|t| (0..t.edges.len()).map(move |e| t.insert_terminal(e)))
            .collect();
    }
    Ok(level)
}

/// Caterpillar topology: Steiner nodes form a path and take terminals in index order.
///
/// Terminals 0 and 1 hang on the first Steiner node, `n - 2` and `n - 1` on the
/// last, and terminal `i` on Steiner node `i - 1` in between.
pub fn caterpillar(n: usize) -> Result<Topology> {
    if n < 3 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 3,
            max: usize::MAX,
        });
    }
    let s = |j: usize| n + j;
    let mut edges = vec![(0, s(0)), (1, s(0))];
    for i in 2..n - 1 {
        edges.push((i, s(i - 1)));
    }
    edges.push((n - 1, s(n - 3)));
    for j in 0..n - 3 {
        edges.push((s(j), s(j + 1)));
    }
    Topology::new(n, n - 2, edges)
}

/// Groups topologies by canonical key.
pub fn dedup_by_key(topologies: &[Topology]) -> BTreeMap<TopologyKey, usize> {
    let mut map = BTreeMap::new();
    for (i, t) in topologies.iter().enumerate() {
        map.entry(t.canonical_key()).or_insert(i);
    }
    map
}
