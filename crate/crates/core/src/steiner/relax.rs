//! Length minimization over Steiner coordinates for a fixed tree topology.
//!
//! The same engine serves Steiner trees (point terminals) and finite-set
//! distance minimizers (terminals are closed balls of radius `r`; the leaf
//! edge then measures the distance from its Steiner node to the ball).
//!
//! Three stages:
//! 1. Laplacian start: every Steiner node at the mean of its neighbours.
//! 2. Newton steps on the smoothed length `sum sqrt(|e|^2 + delta^2)` with
//!    `delta` shrunk geometrically; a step is kept only if the true length
//!    does not grow.
//! 3. Block-coordinate sweeps moving each Steiner node to the Fermat point of
//!    its three neighbours (point terminals only). These make degenerate
//!    edges collapse exactly.

use crate::geom::{fermat_unchecked, Point};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use crate::topology::Topology;

#[derive(Debug, Clone)]
pub(crate) struct RelaxOutput<T> {
    pub steiner: Vec<Point<T>>,
    pub length: T,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<T>,
}

pub(crate) struct TreeProblem<'a, T> {
    topo: &'a Topology,
    sites: &'a [Point<T>],
    radius: T,
    scale: T,
    dim: usize,
    eps_len: T,
    max_iters: usize,
}

impl<'a, T: Scalar> TreeProblem<'a, T> {
    pub fn new(topo: &'a Topology, sites: &'a [Point<T>], radius: T, scale: T, eps_len: T) -> Self {
        let scale = if scale > T::zero() { scale } else { T::one() };
        Self {
            topo,
            sites,
            radius,
            scale,
            dim: sites[0].dim(),
            eps_len,
            max_iters: 5000,
        }
    }

    fn n_vars(&self) -> usize {
        self.topo.n_steiner() * self.dim
    }

    fn steiner_index(&self, node: usize) -> Option<usize> {
        (!self.topo.is_terminal(node)).then(|| node - self.topo.n_terminals())
    }

    fn unpack(&self, x: &[T]) -> Vec<Point<T>> {
        x.chunks(self.dim)
            .map(|c| Point::from_vec_unchecked(c.to_vec()))
            .collect()
    }

    fn pack(&self, pts: &[Point<T>]) -> Vec<T> {
        pts.iter().flat_map(|p| p.coords().iter().copied()).collect()
    }

    /// Closest point of terminal `i`'s ball to `q`.
    pub fn attach(&self, i: usize, q: &Point<T>) -> Point<T> {
        let m = &self.sites[i];
        if self.radius <= T::zero() {
            return m.clone();
        }
        let d = q.dist(m);
        if d <= self.radius {
            q.clone()
        } else {
            m.lerp(q, self.radius / d)
        }
    }

    fn leaf_len(&self, i: usize, q: &Point<T>) -> T {
        let d = q.dist(&self.sites[i]);
        if self.radius <= T::zero() {
            d
        } else {
            (d - self.radius).max(T::zero())
        }
    }

    pub fn true_length(&self, steiner: &[Point<T>]) -> T {
        let n = self.topo.n_terminals();
        self.topo
            .edges()
            .iter()
            .map(|&(u, v)| match (u < n, v < n) {
                (true, true) => {
                    let d = self.sites[u].dist(&self.sites[v]);
                    (d - T::lit(2.0) * self.radius).max(T::zero())
                }
                (true, false) => self.leaf_len(u, &steiner[v - n]),
                (false, true) => self.leaf_len(v, &steiner[u - n]),
                (false, false) => steiner[u - n].dist(&steiner[v - n]),
            })
            .sum()
    }

    fn smoothed(&self, x: &[T], delta: T) -> T {
        let d = self.dim;
        let n = self.topo.n_terminals();
        let d2 = delta * delta;
        let mut total = T::zero();
        for &(u, v) in self.topo.edges() {
            match (self.steiner_index(u), self.steiner_index(v)) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    let mut s = d2;
                    for k in 0..d {
                        let e = x[a * d + k] - x[b * d + k];
                        s = s + e * e;
                    }
                    total = total + s.sqrt();
                }
                (Some(a), None) | (None, Some(a)) => {
                    let site = if u < n { u } else { v };
                    total = total + self.leaf_smoothed(&x[a * d..(a + 1) * d], site, delta).0;
                }
            }
        }
        total
    }

    /// Value, gradient coefficient and Hessian pieces for a leaf edge.
    ///
    /// Returns `(value, diff, rho, alpha, beta)` where the gradient is
    /// `alpha * diff / rho` and the Hessian is
    /// `beta * u u^T + alpha * (I - u u^T) / rho` with `u = diff / rho`.
    fn leaf_smoothed(&self, q: &[T], site: usize, delta: T) -> (T, Vec<T>, T, T, T) {
        let m = self.sites[site].coords();
        let diff: Vec<T> = q.iter().zip(m).map(|(&a, &b)| a - b).collect();
        let rho = (diff.iter().fold(T::zero(), |s, &e| s + e * e) + delta * delta).sqrt();
        if self.radius <= T::zero() {
            return (rho, diff, rho, T::one(), T::zero());
        }
        let x = rho - self.radius;
        let q2 = (x * x + delta * delta).sqrt();
        let half = T::lit(0.5);
        let value = (x + q2) * half;
        let alpha = (T::one() + x / q2) * half;
        let beta = delta * delta * half / (q2 * q2 * q2);
        (value, diff, rho, alpha, beta)
    }

    fn grad_hess(&self, x: &[T], delta: T) -> (Vec<T>, DenseMatrix<T>) {
        let d = self.dim;
        let n = self.topo.n_terminals();
        let nv = self.n_vars();
        let mut g = vec![T::zero(); nv];
        let mut h = DenseMatrix::zeros(nv);
        let d2 = delta * delta;
        for &(u, v) in self.topo.edges() {
            match (self.steiner_index(u), self.steiner_index(v)) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    let e: Vec<T> = (0..d).map(|k| x[a * d + k] - x[b * d + k]).collect();
                    let l = (e.iter().fold(d2, |s, &c| s + c * c)).sqrt();
                    for k in 0..d {
                        g[a * d + k] = g[a * d + k] + e[k] / l;
                        g[b * d + k] = g[b * d + k] - e[k] / l;
                    }
                    let l3 = l * l * l;
                    for i in 0..d {
                        for j in 0..d {
                            let mut blk = -e[i] * e[j] / l3;
                            if i == j {
                                blk = blk + T::one() / l;
                            }
                            h.add(a * d + i, a * d + j, blk);
                            h.add(b * d + i, b * d + j, blk);
                            h.add(a * d + i, b * d + j, -blk);
                            h.add(b * d + i, a * d + j, -blk);
                        }
                    }
                }
                (Some(a), None) | (None, Some(a)) => {
                    let site = if u < n { u } else { v };
                    let (_, diff, rho, alpha, beta) = self.leaf_smoothed(&x[a * d..(a + 1) * d], site, delta);
                    for k in 0..d {
                        g[a * d + k] = g[a * d + k] + alpha * diff[k] / rho;
                    }
                    for i in 0..d {
                        for j in 0..d {
                            let uu = diff[i] * diff[j] / (rho * rho);
                            let mut blk = beta * uu - alpha * uu / rho;
                            if i == j {
                                blk = blk + alpha / rho;
                            }
                            h.add(a * d + i, a * d + j, blk);
                        }
                    }
                }
            }
        }
        (g, h)
    }

    /// Each Steiner node at the average of its neighbours, terminals at their sites.
    fn laplacian_start(&self) -> Vec<T> {
        let d = self.dim;
        let nv = self.n_vars();
        let mut lap = DenseMatrix::zeros(nv);
        let mut rhs = vec![T::zero(); nv];
        for &(u, v) in self.topo.edges() {
            for (p, q) in [(u, v), (v, u)] {
                let Some(a) = self.steiner_index(p) else { continue };
                for k in 0..d {
                    lap.add(a * d + k, a * d + k, T::one());
                }
                match self.steiner_index(q) {
                    Some(b) => {
                        for k in 0..d {
                            lap.add(a * d + k, b * d + k, -T::one());
                        }
                    }
                    None => {
                        for k in 0..d {
                            rhs[a * d + k] = rhs[a * d + k] + self.sites[q][k];
                        }
                    }
                }
            }
        }
        lap.damped_solve(&rhs).unwrap_or_else(|| {
            let c = crate::geom::centroid(self.sites);
            (0..self.topo.n_steiner()).flat_map(|_| c.coords().to_vec()).collect()
        })
    }

    pub fn solve(&self) -> RelaxOutput<T> {
        self.solve_from(None)
    }

    pub fn solve_from(&self, start: Option<&[Point<T>]>) -> RelaxOutput<T> {
        if self.topo.n_steiner() == 0 {
            let length = self.true_length(&[]);
            return RelaxOutput {
                steiner: Vec::new(),
                length,
                iterations: 0,
                converged: true,
                trace: vec![length],
            };
        }
        let mut x = match start {
            Some(s) => self.pack(s),
            None => self.laplacian_start(),
        };
        let mut len = self.true_length(&self.unpack(&x));
        let mut trace = vec![len];
        let mut iterations = 0usize;

        let delta_min = self.eps_len * T::lit(1e-4) * self.scale;
        let mut rounds = 0;
        let mut residual;
        loop {
            let start_delta = if rounds == 0 {
                T::lit(1e-3) * self.scale
            } else {
                delta_min * T::lit(100.0)
            };
            self.newton_stage(&mut x, &mut len, &mut trace, &mut iterations, start_delta, delta_min);
            let mut steiner = self.unpack(&x);
            if self.radius <= T::zero() {
                self.fermat_sweeps(&mut steiner, &mut len, &mut trace, &mut iterations);
            }
            x = self.pack(&steiner);
            residual = self.residual(&steiner);
            rounds += 1;
            if residual <= T::lit(10.0) * self.eps_len || rounds >= 3 || iterations >= self.max_iters {
                break;
            }
        }
        let steiner = self.unpack(&x);
        let length = self.true_length(&steiner);
        let converged = length.is_finite() && residual <= T::lit(10.0) * self.eps_len;
        RelaxOutput {
            steiner,
            length,
            iterations,
            converged,
            trace,
        }
    }

    fn newton_stage(
        &self,
        x: &mut Vec<T>,
        len: &mut T,
        trace: &mut Vec<T>,
        iterations: &mut usize,
        start_delta: T,
        delta_min: T,
    ) {
        let mut delta = start_delta;
        loop {
            for _ in 0..60 {
                if *iterations >= self.max_iters {
                    return;
                }
                let (g, h) = self.grad_hess(x, delta);
                let neg: Vec<T> = g.iter().map(|&v| -v).collect();
                let Some(dir) = h.damped_solve(&neg) else { break };
                let slope: T = g.iter().zip(&dir).map(|(&a, &b)| a * b).sum();
                if !(slope < T::zero()) || !slope.is_finite() {
                    break;
                }
                let f0 = self.smoothed(x, delta);
                let mut t = T::one();
                let mut accepted = false;
                for _ in 0..40 {
                    let cand: Vec<T> = x.iter().zip(&dir).map(|(&a, &b)| a + t * b).collect();
                    let f1 = self.smoothed(&cand, delta);
                    if f1 <= f0 + T::lit(1e-4) * t * slope {
                        let l1 = self.true_length(&self.unpack(&cand));
                        if l1 <= *len {
                            *x = cand;
                            *len = l1;
                            trace.push(l1);
                            accepted = true;
                            break;
                        }
                    }
                    t = t * T::lit(0.5);
                }
                *iterations += 1;
                if !accepted || -slope <= delta * T::lit(1e-2) {
                    break;
                }
            }
            if delta <= delta_min {
                break;
            }
            delta = (delta * T::lit(0.1)).max(delta_min);
        }
    }

    fn neighbour_pos<'b>(&'b self, node: usize, steiner: &'b [Point<T>]) -> &'b Point<T> {
        match self.steiner_index(node) {
            Some(j) => &steiner[j],
            None => &self.sites[node],
        }
    }

    fn fermat_sweeps(&self, steiner: &mut [Point<T>], len: &mut T, trace: &mut Vec<T>, iterations: &mut usize) {
        let adj = self.topo.adjacency();
        let n = self.topo.n_terminals();
        for _ in 0..500 {
            if *iterations >= self.max_iters {
                break;
            }
            let mut max_move = T::zero();
            for j in 0..self.topo.n_steiner() {
                let nb = &adj[n + j];
                if nb.len() != 3 {
                    continue;
                }
                let (p0, p1, p2) = (
                    self.neighbour_pos(nb[0], steiner).clone(),
                    self.neighbour_pos(nb[1], steiner).clone(),
                    self.neighbour_pos(nb[2], steiner).clone(),
                );
                let local = |q: &Point<T>| q.dist(&p0) + q.dist(&p1) + q.dist(&p2);
                let cand = fermat_unchecked(&p0, &p1, &p2, self.eps_len);
                if local(&cand) <= local(&steiner[j]) {
                    max_move = max_move.max(cand.dist(&steiner[j]));
                    steiner[j] = cand;
                }
            }
            *iterations += 1;
            let l = self.true_length(steiner);
            if l <= *len {
                *len = l;
            }
            trace.push(*len);
            if max_move <= self.eps_len * self.scale {
                break;
            }
        }
    }

    /// Largest norm of the sum of unit edge vectors over Steiner nodes with no
    /// degenerate incident edge.
    pub fn residual(&self, steiner: &[Point<T>]) -> T {
        let adj = self.topo.adjacency();
        let n = self.topo.n_terminals();
        let thr = self.eps_len * self.scale;
        let mut worst = T::zero();
        'node: for (j, s) in steiner.iter().enumerate() {
            let mut sum = Point::origin(self.dim);
            for &nb in &adj[n + j] {
                let (vec, len) = match self.steiner_index(nb) {
                    Some(k) => {
                        let v = s - &steiner[k];
                        let l = v.norm();
                        (v, l)
                    }
                    None => {
                        let v = s - &self.sites[nb];
                        let l = self.leaf_len(nb, s);
                        (v, l)
                    }
                };
                if len <= thr {
                    continue 'node;
                }
                sum = sum.offset(&vec, T::one() / vec.norm());
            }
            worst = worst.max(sum.norm());
        }
        worst
    }
}
