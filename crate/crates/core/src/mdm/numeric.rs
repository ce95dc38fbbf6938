//! Quadratic-penalty solver for sampled compact sets.
//!
//! Minimizes `length + mu * sum max(0, dist(m, net) - r)^2` over vertex
//! positions with L-BFGS, raising `mu` between epochs and editing the graph
//! in between. A final restoration pass pushes edges onto any sample still
//! uncovered so the returned network is feasible.

use std::collections::VecDeque;

use super::index::SegmentIndex;
use super::{coverage_check, sample_compact, CompactSetDescriptor, MdmNetwork};
use crate::error::{invalid, Result};
use crate::geom::{angle_between, fermat_unchecked, Point, ToleranceConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct NumericConfig<T> {
    /// Boundary samples of `M`; defaults to `ceil(40 * diameter / r)`.
    pub density: Option<usize>,
    /// Initial penalty weight times the diameter of `M`.
    pub mu0: T,
    pub mu_growth: T,
    pub epochs: usize,
    pub iters_per_epoch: usize,
    pub memory: usize,
    pub topology_moves: bool,
}

impl<T: Scalar> Default for NumericConfig<T> {
    fn default() -> Self {
        Self {
            density: None,
            mu0: T::lit(10.0),
            mu_growth: T::lit(4.0),
            epochs: 12,
            iters_per_epoch: 400,
            memory: 8,
            topology_moves: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NumericOutcome<T> {
    pub network: MdmNetwork<T>,
    pub length: T,
    pub feasible: bool,
    /// Coverage defect against the solver's own samples.
    pub max_defect: T,
    pub epochs: usize,
    /// Penalized objective after every accepted step, one list per epoch.
    pub objective_trace: Vec<Vec<T>>,
    /// The initial network was feasible and nothing shorter was found.
    pub kept_init: bool,
}

pub fn solve_mdm_numeric<T: Scalar>(
    desc: &CompactSetDescriptor<T>,
    r: T,
    init: &MdmNetwork<T>,
    config: &NumericConfig<T>,
    tol: &ToleranceConfig<T>,
) -> Result<NumericOutcome<T>> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(invalid("r", "must be positive"));
    }
    let (components, _) = init.components_and_cycle();
    if components != 1 {
        return Err(invalid("init", "network must be connected"));
    }
    let density = config.density.unwrap_or_else(|| desc.default_density(r));
    let samples = sample_compact(desc, density)?;
    samples[0].check_dim(&init.vertices()[0])?;
    let diam = desc.diameter().max(r);

    let init_cov = coverage_check(init, &samples, r, tol)?;
    let mut state = Graph {
        dim: init.dim(),
        verts: init.vertices().to_vec(),
        edges: init.edges().to_vec(),
    };
    let mut mu = config.mu0 / diam;
    let mut traces = Vec::new();
    let mut epochs = 0;
    for epoch in 0..config.epochs {
        epochs = epoch + 1;
        let trace = lbfgs_epoch(&mut state, &samples, r, mu, config);
        traces.push(trace);
        let defect = state.max_defect(&samples, r);
        if defect <= tol.coverage_eps {
            break;
        }
        if config.topology_moves {
            state.merge_short(tol.eps_len * diam);
            state.insert_steiner(tol.eps_angle);
            state.split_at_violations(&samples, r, tol.coverage_eps);
        }
        mu = mu * config.mu_growth;
    }
    state.merge_short(tol.eps_len * diam);
    restore(&mut state, &samples, r, tol.coverage_eps);

    let network = MdmNetwork::from_parts(state.verts, state.edges);
    let cov = coverage_check(&network, &samples, r, tol)?;
    let length = network.length();
    if init_cov.covered && (!cov.covered || init.length() <= length + tol.eps_len * diam) {
        return Ok(NumericOutcome {
            length: init.length(),
            network: init.clone(),
            feasible: true,
            max_defect: init_cov.max_defect,
            epochs,
            objective_trace: traces,
            kept_init: true,
        });
    }
    Ok(NumericOutcome {
        network,
        length,
        feasible: cov.covered,
        max_defect: cov.max_defect,
        epochs,
        objective_trace: traces,
        kept_init: false,
    })
}

/// Pushes edges toward uncovered samples until every sample is within `r`.
pub(crate) fn restore_network<T: Scalar>(net: &MdmNetwork<T>, samples: &[Point<T>], r: T, slack: T) -> MdmNetwork<T> {
    let mut g = Graph {
        dim: net.dim(),
        verts: net.vertices().to_vec(),
        edges: net.edges().to_vec(),
    };
    restore(&mut g, samples, r, slack);
    MdmNetwork::from_parts(g.verts, g.edges)
}

struct Graph<T> {
    dim: usize,
    verts: Vec<Point<T>>,
    edges: Vec<(usize, usize)>,
}

/// Where a sample's nearest network point sits.
struct Nearest<T> {
    dist: T,
    /// Edge index and parameter along it, or `None` for an isolated vertex.
    edge: Option<(usize, T)>,
    point: Vec<T>,
}

fn nearest_flat<T: Scalar>(idx: &SegmentIndex<'_, T>, x: &[T], dim: usize, edges: &[(usize, usize)], m: &Point<T>) -> Nearest<T> {
    let mc = m.coords();
    let Some(hit) = idx.nearest(mc) else {
        let p = x[..dim].to_vec();
        let d = p.iter().zip(mc).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
        return Nearest {
            dist: d,
            edge: None,
            point: p,
        };
    };
    let (u, v) = edges[hit.edge];
    let point = (0..dim)
        .map(|i| x[u * dim + i] + hit.s * (x[v * dim + i] - x[u * dim + i]))
        .collect();
    Nearest {
        dist: hit.dist_sq.sqrt(),
        edge: Some((hit.edge, hit.s)),
        point,
    }
}

fn objective<T: Scalar>(
    x: &[T],
    dim: usize,
    edges: &[(usize, usize)],
    samples: &[Point<T>],
    r: T,
    mu: T,
    grad: &mut [T],
) -> T {
    grad.iter_mut().for_each(|g| *g = T::zero());
    let mut f = T::zero();
    for &(u, v) in edges {
        let mut l2 = T::zero();
        for i in 0..dim {
            let e = x[u * dim + i] - x[v * dim + i];
            l2 = l2 + e * e;
        }
        let l = l2.sqrt();
        f = f + l;
        if l > T::zero() {
            for i in 0..dim {
                let g = (x[u * dim + i] - x[v * dim + i]) / l;
                grad[u * dim + i] = grad[u * dim + i] + g;
                grad[v * dim + i] = grad[v * dim + i] - g;
            }
        }
    }
    let idx = SegmentIndex::new(x, dim, edges);
    for m in samples {
        let near = nearest_flat(&idx, x, dim, edges, m);
        let excess = near.dist - r;
        if excess <= T::zero() {
            continue;
        }
        f = f + mu * excess * excess;
        let coef = T::lit(2.0) * mu * excess / near.dist;
        let mc = m.coords();
        match near.edge {
            None => {
                for i in 0..dim {
                    grad[i] = grad[i] + coef * (near.point[i] - mc[i]);
                }
            }
            Some((k, s)) => {
                let (u, v) = edges[k];
                for i in 0..dim {
                    let g = coef * (near.point[i] - mc[i]);
                    grad[u * dim + i] = grad[u * dim + i] + (T::one() - s) * g;
                    grad[v * dim + i] = grad[v * dim + i] + s * g;
                }
            }
        }
    }
    f
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// One epoch of L-BFGS at fixed `mu`; only decreasing steps are taken.
fn lbfgs_epoch<T: Scalar>(g: &mut Graph<T>, samples: &[Point<T>], r: T, mu: T, config: &NumericConfig<T>) -> Vec<T> {
    let dim = g.dim;
    let mut x: Vec<T> = g.verts.iter().flat_map(|p| p.coords().iter().copied()).collect();
    let n = x.len();
    let mut grad = vec![T::zero(); n];
    let mut f = objective(&x, dim, &g.edges, samples, r, mu, &mut grad);
    let mut trace = vec![f];
    let mut hist: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::new();
    let mut new_grad = vec![T::zero(); n];
    for _ in 0..config.iters_per_epoch {
        // two-loop recursion
        let mut q: Vec<T> = grad.iter().map(|&v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = *rho * dot(s, &q);
            for i in 0..n {
                q[i] = q[i] - a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v = *v * gamma);
        } else {
            let gn = dot(&grad, &grad).sqrt();
            if gn > T::zero() {
                let scale = (T::lit(0.1) * r / gn).min(T::one());
                q.iter_mut().for_each(|v| *v = *v * scale);
            }
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = *rho * dot(y, &q);
            for i in 0..n {
                q[i] = q[i] + s[i] * (a - b);
            }
        }
        let mut slope = dot(&grad, &q);
        if !(slope < T::zero()) {
            hist.clear();
            q = grad.iter().map(|&v| -v).collect();
            slope = dot(&grad, &q);
            if !(slope < T::zero()) {
                break;
            }
        }
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<T> = x.iter().zip(&q).map(|(&a, &d)| a + t * d).collect();
            let fc = objective(&cand, dim, &g.edges, samples, r, mu, &mut new_grad);
            if fc <= f + T::lit(1e-4) * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t = t * T::lit(0.5);
        }
        let Some((cand, fc)) = accepted else {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            continue;
        };
        let s: Vec<T> = cand.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = new_grad.iter().zip(&grad).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            hist.push_back((s, y, T::one() / sy));
            if hist.len() > config.memory {
                hist.pop_front();
            }
        }
        let decrease = f - fc;
        x = cand;
        f = fc;
        std::mem::swap(&mut grad, &mut new_grad);
        trace.push(f);
        if decrease <= T::lit(1e-13) * f.abs().max(T::one()) {
            break;
        }
    }
    g.verts = x.chunks(dim).map(|c| Point::from_vec_unchecked(c.to_vec())).collect();
    trace
}

impl<T: Scalar> Graph<T> {
    fn flat(&self) -> Vec<T> {
        self.verts.iter().flat_map(|p| p.coords().iter().copied()).collect()
    }

    fn max_defect(&self, samples: &[Point<T>], r: T) -> T {
        let x = self.flat();
        let idx = SegmentIndex::new(&x, self.dim, &self.edges);
        samples
            .iter()
            .map(|m| nearest_flat(&idx, &x, self.dim, &self.edges, m).dist - r)
            .fold(T::neg_infinity(), T::max)
    }

    fn merge_short(&mut self, thr: T) {
        let net = MdmNetwork::from_parts(std::mem::take(&mut self.verts), std::mem::take(&mut self.edges));
        let c = net.contracted(thr);
        self.verts = c.vertices;
        self.edges = c.edges;
    }

    /// Where two edges meet at less than `2 pi / 3`, route them through a new
    /// vertex at the Fermat point of the corner and two points halfway along.
    fn insert_steiner(&mut self, eps_angle: T) {
        let limit = T::TAU() / T::lit(3.0) - eps_angle;
        let nv = self.verts.len();
        for v in 0..nv {
            let incident: Vec<usize> = (0..self.edges.len())
                .filter(|&k| self.edges[k].0 == v || self.edges[k].1 == v)
                .collect();
            let other = |k: usize, edges: &[(usize, usize)]| {
                let (a, b) = edges[k];
                if a == v {
                    b
                } else {
                    a
                }
            };
            let mut worst: Option<(T, usize, usize)> = None;
            for i in 0..incident.len() {
                for j in i + 1..incident.len() {
                    let a = &self.verts[other(incident[i], &self.edges)] - &self.verts[v];
                    let b = &self.verts[other(incident[j], &self.edges)] - &self.verts[v];
                    if a.norm() == T::zero() || b.norm() == T::zero() {
                        continue;
                    }
                    let ang = angle_between(&a, &b);
                    if ang < limit && worst.is_none_or(|w| ang < w.0) {
                        worst = Some((ang, incident[i], incident[j]));
                    }
                }
            }
            let Some((_, ei, ej)) = worst else { continue };
            let (a, b) = (other(ei, &self.edges), other(ej, &self.edges));
            let pv = self.verts[v].clone();
            let half = pv.dist(&self.verts[a]).min(pv.dist(&self.verts[b])) * T::lit(0.5);
            let ta = pv.lerp(&self.verts[a], half / pv.dist(&self.verts[a]));
            let tb = pv.lerp(&self.verts[b], half / pv.dist(&self.verts[b]));
            let s = fermat_unchecked(&pv, &ta, &tb, T::epsilon());
            if s.dist(&pv) == T::zero() {
                continue;
            }
            self.verts.push(s);
            let si = self.verts.len() - 1;
            self.edges[ei] = (si, a);
            self.edges[ej] = (si, b);
            self.edges.push((si, v));
        }
    }

    /// Splits an edge at the foot of its worst uncovered sample.
    fn split_at_violations(&mut self, samples: &[Point<T>], r: T, eps: T) {
        let x = self.flat();
        let mut worst: Vec<Option<(T, T)>> = vec![None; self.edges.len()];
        let idx = SegmentIndex::new(&x, self.dim, &self.edges);
        for m in samples {
            let near = nearest_flat(&idx, &x, self.dim, &self.edges, m);
            let excess = near.dist - r;
            if excess <= eps {
                continue;
            }
            if let Some((k, s)) = near.edge {
                if worst[k].is_none_or(|w| excess > w.0) {
                    worst[k] = Some((excess, s));
                }
            }
        }
        let lo = T::lit(0.05);
        let hi = T::one() - lo;
        for (k, w) in worst.into_iter().enumerate() {
            let Some((_, s)) = w else { continue };
            if s <= lo || s >= hi {
                continue;
            }
            let (u, v) = self.edges[k];
            let p = self.verts[u].lerp(&self.verts[v], s);
            self.verts.push(p);
            let new = self.verts.len() - 1;
            self.edges[k] = (u, new);
            self.edges.push((new, v));
        }
    }
}

/// Moves the nearest edge of each uncovered sample so that the sample ends
/// up at distance `r - slack / 4`.
fn restore<T: Scalar>(g: &mut Graph<T>, samples: &[Point<T>], r: T, slack: T) {
    let target = r - slack * T::lit(0.25);
    let dim = g.dim;
    for _ in 0..200 {
        let snapshot = g.flat();
        let idx = SegmentIndex::new(&snapshot, dim, &g.edges);
        let mut x = snapshot.clone();
        let mut moved = false;
        for m in samples {
            let near = nearest_flat(&idx, &snapshot, dim, &g.edges, m);
            if near.dist <= r {
                continue;
            }
            // earlier moves in this round may already have fixed the sample
            let near = match near.edge {
                Some((k, _)) => {
                    let one = [g.edges[k]];
                    let local = SegmentIndex::new(&x, dim, &one);
                    let n = nearest_flat(&local, &x, dim, &one, m);
                    Nearest {
                        edge: n.edge.map(|(_, s)| (k, s)),
                        ..n
                    }
                }
                None => Nearest {
                    dist: m.coords().iter().zip(&x[..dim]).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt(),
                    point: x[..dim].to_vec(),
                    edge: None,
                },
            };
            if near.dist <= r {
                continue;
            }
            moved = true;
            let delta = near.dist - target;
            let mc = m.coords();
            let unit: Vec<T> = (0..dim).map(|i| (mc[i] - near.point[i]) / near.dist).collect();
            match near.edge {
                None => {
                    for i in 0..dim {
                        x[i] = x[i] + delta * unit[i];
                    }
                }
                Some((k, s)) => {
                    let (u, v) = g.edges[k];
                    let w = (T::one() - s) * (T::one() - s) + s * s;
                    for i in 0..dim {
                        x[u * dim + i] = x[u * dim + i] + (T::one() - s) * delta * unit[i] / w;
                        x[v * dim + i] = x[v * dim + i] + s * delta * unit[i] / w;
                    }
                }
            }
        }
        g.verts = x.chunks(dim).map(|c| Point::from_vec_unchecked(c.to_vec())).collect();
        if !moved {
            break;
        }
    }
}
