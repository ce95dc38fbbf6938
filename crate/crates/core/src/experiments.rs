//! Instance generators, a heuristic solver for large inputs and the suite
//! runner that turns studies into CSV rows.

use std::collections::VecDeque;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::{angle_between, diameter, fermat_unchecked, Point, ToleranceConfig};
use crate::mst::{mst, restricted_tree};
use crate::scalar::Scalar;
use crate::steiner::{check_points, solve_exact, EmbeddedTree};
use crate::topology::Topology;

/// Axis-aligned box for uniform sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Region<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> Region<T> {
    pub fn unit_cube(d: usize) -> Self {
        Self {
            lo: vec![T::zero(); d],
            hi: vec![T::one(); d],
        }
    }

    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(crate::Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.len() < 2 {
            return Err(crate::Error::DimensionTooSmall {
                min: 2,
                found: lo.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite()) {
            return Err(invalid("region", "needs positive volume"));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> T {
        self.lo.iter().zip(&self.hi).fold(T::one(), |acc, (&a, &b)| acc * (b - a))
    }
}

/// `n` i.i.d. uniform points in `region` drawn from a ChaCha stream seeded with `seed`.
pub fn random_instance<T: Scalar>(region: &Region<T>, n: usize, seed: u64) -> Vec<Point<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c = region
                .lo
                .iter()
                .zip(&region.hi)
                .map(|(&a, &b)| a + (b - a) * T::lit(rng.gen::<f64>()))
                .collect();
            Point::from_vec_unchecked(c)
        })
        .collect()
}

fn lattice_in_square<T: Scalar>(a: T) -> Vec<Point<T>> {
    let h = a * T::lit(3.0).sqrt() * T::lit(0.5);
    let slack = T::lit(1e-12);
    let mut out = Vec::new();
    let mut j = 0usize;
    loop {
        let y = h * T::from_usize_lossy(j);
        if y > T::one() + slack {
            break;
        }
        let shift = if j % 2 == 1 { a * T::lit(0.5) } else { T::zero() };
        let mut i = 0usize;
        loop {
            let x = shift + a * T::from_usize_lossy(i);
            if x > T::one() + slack {
                break;
            }
            out.push(Point::xy(x, y));
            i += 1;
        }
        j += 1;
    }
    out
}

/// Triangular lattice clipped to the unit square with spacing tuned so the
/// point count is as close as possible to `n_target`.
pub fn hex_lattice_instance<T: Scalar>(n_target: usize) -> Result<Vec<Point<T>>> {
    if n_target < 3 {
        return Err(invalid("n_target", "must be at least 3"));
    }
    let target = n_target as f64;
    let a0 = (2.0 / (3f64.sqrt() * target)).sqrt();
    let mut best: Option<(usize, f64)> = None;
    for k in 0..=400 {
        let a = a0 * (0.7 + 0.6 * k as f64 / 400.0);
        let count = lattice_in_square::<f64>(a).len();
        let err = count.abs_diff(n_target);
        if best.is_none_or(|(e, _)| err < e) {
            best = Some((err, a));
        }
    }
    let (_, a) = best.expect("scan is non-empty");
    Ok(lattice_in_square(T::lit(a)))
}

/// `(0, 0), (1, sqrt 3), (2, 0), (3, sqrt 3), ...` truncated to `n` points.
pub fn zigzag_instance<T: Scalar>(n: usize) -> Result<Vec<Point<T>>> {
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    let s3 = T::lit(3.0).sqrt();
    Ok((0..n)
        .map(|i| Point::xy(T::from_usize_lossy(i), if i % 2 == 1 { s3 } else { T::zero() }))
        .collect())
}

/// Regular `n_gon` of circumradius 1 in the plane `x = 1` around `(1, 0, 0)`
/// together with its images under `p -> lambda^k p` for `k = 1..=k_max`.
/// `k_max = 0` gives the base polygon alone.
pub fn homothety_instance<T: Scalar>(n_gon: usize, lambda: T, k_max: usize) -> Result<Vec<Point<T>>> {
    if n_gon < 3 {
        return Err(invalid("n_gon", "must be at least 3"));
    }
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(invalid("lambda", "must lie in (0, 1)"));
    }
    let base: Vec<Point<T>> = (0..n_gon)
        .map(|i| {
            let a = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n_gon);
            Point::xyz(T::one(), a.cos(), a.sin())
        })
        .collect();
    let mut out = Vec::with_capacity(n_gon * (k_max + 1));
    let mut f = T::one();
    for _ in 0..=k_max {
        out.extend(base.iter().map(|p| p.scaled(f)));
        f = f * lambda;
    }
    Ok(out)
}

/// MST improved by Fermat insertions at sharp corners and local re-relaxation
/// of the inserted points, run to a fixed point. Never longer than the MST.
pub fn heuristic_steiner<T: Scalar>(points: &[Point<T>], tol: &ToleranceConfig<T>) -> Result<EmbeddedTree<T>> {
    check_points(points)?;
    let n = points.len();
    if n < 2 {
        return Err(invalid("points", "need at least two points"));
    }
    let m = mst(points)?;
    let scale = diameter(points);
    let gain_min = tol.eps_len * scale;
    let limit = T::TAU() / T::lit(3.0) - tol.eps_angle;
    let mut pos: Vec<Point<T>> = points.to_vec();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &m.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut corners: VecDeque<usize> = (0..n).collect();
    let mut queued = vec![true; n];
    let mut relax: VecDeque<usize> = VecDeque::new();
    let mut relax_queued: Vec<bool> = vec![false; n];

    loop {
        if let Some(s) = relax.pop_front() {
            relax_queued[s] = false;
            let nb = adj[s].clone();
            let f = fermat_unchecked(&pos[nb[0]], &pos[nb[1]], &pos[nb[2]], tol.eps_len);
            let before: T = nb.iter().map(|&w| pos[s].dist(&pos[w])).sum();
            let after: T = nb.iter().map(|&w| f.dist(&pos[w])).sum();
            if before - after > gain_min {
                pos[s] = f;
                for w in nb {
                    if w >= n {
                        if !relax_queued[w] {
                            relax_queued[w] = true;
                            relax.push_back(w);
                        }
                    } else if !queued[w] {
                        queued[w] = true;
                        corners.push_back(w);
                    }
                }
            }
            continue;
        }
        let Some(v) = corners.pop_front() else { break };
        queued[v] = false;
        let mut worst: Option<(T, usize, usize)> = None;
        for i in 0..adj[v].len() {
            for j in i + 1..adj[v].len() {
                let (a, b) = (adj[v][i], adj[v][j]);
                let ang = angle_between(&(&pos[a] - &pos[v]), &(&pos[b] - &pos[v]));
                if ang < limit && worst.is_none_or(|w| ang < w.0) {
                    worst = Some((ang, a, b));
                }
            }
        }
        let Some((_, a, b)) = worst else { continue };
        let f = fermat_unchecked(&pos[v], &pos[a], &pos[b], tol.eps_len);
        let before = pos[v].dist(&pos[a]) + pos[v].dist(&pos[b]);
        let after = f.dist(&pos[v]) + f.dist(&pos[a]) + f.dist(&pos[b]);
        if before - after <= gain_min || [v, a, b].iter().any(|&w| f.dist(&pos[w]) <= gain_min) {
            continue;
        }
        let s = pos.len();
        pos.push(f);
        for (x, y) in [(a, v), (b, v)] {
            let slot = adj[x].iter().position(|&w| w == y).expect("symmetric adjacency");
            adj[x][slot] = s;
        }
        adj[v].retain(|&w| w != a && w != b);
        adj[v].push(s);
        adj.push(vec![v, a, b]);
        queued.push(false);
        relax_queued.push(false);
        for w in [v, a, b] {
            if w >= n {
                if !relax_queued[w] {
                    relax_queued[w] = true;
                    relax.push_back(w);
                }
            } else if !queued[w] {
                queued[w] = true;
                corners.push_back(w);
            }
        }
    }

    let mut edges = Vec::with_capacity(pos.len() - 1);
    for (u, nb) in adj.iter().enumerate() {
        for &v in nb {
            if u < v {
                edges.push((u, v));
            }
        }
    }
    let topo = Topology::new(n, pos.len() - n, edges)?;
    let steiner = pos.split_off(n);
    EmbeddedTree::new(topo, pos, steiner)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub beta: f64,
    pub exponent: f64,
    pub r_squared: f64,
}

/// Least squares on `(ln N, ln L)`: `L ~ beta * N^exponent`.
pub fn fit_power_law(rows: &[(f64, f64)]) -> Result<PowerLaw> {
    if rows.iter().any(|&(n, l)| !(n > 0.0) || !(l > 0.0) || !n.is_finite() || !l.is_finite()) {
        return Err(invalid("rows", "sizes and lengths must be positive"));
    }
    let mut ns: Vec<f64> = rows.iter().map(|r| r.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 3 {
        return Err(invalid("rows", "need at least three distinct sizes"));
    }
    let k = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerLaw {
        beta: intercept.exp(),
        exponent: slope,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Heuristic,
    Restricted,
}

/// Generator families understood by [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Random {
        n: Vec<usize>,
        #[serde(default = "two")]
        d: usize,
        #[serde(default = "thirty_two")]
        reps: usize,
        #[serde(default)]
        seed: u64,
    },
    HexLattice {
        n: Vec<usize>,
    },
    Zigzag {
        n: Vec<usize>,
    },
    Homothety {
        n_gon: usize,
        #[serde(default = "default_lambdas")]
        lambda: Vec<f64>,
        k: usize,
    },
}

fn two() -> usize {
    2
}

fn thirty_two() -> usize {
    32
}

fn default_lambdas() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub generator: GeneratorSpec,
    /// Falls back to exact up to seven points and the heuristic beyond.
    #[serde(default)]
    pub solver: Option<SolverKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    #[serde(default)]
    pub studies: Vec<Study>,
    /// Record wall-clock times; off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

/// One CSV row. `norm` names the normalization used for `normalized`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub instance_id: String,
    pub generator: String,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub solver: SolverKind,
    pub length: f64,
    pub normalized: f64,
    pub norm: String,
    pub wall_time_ms: u64,
    /// Empty on success.
    pub error: String,
}

struct Job {
    instance_id: String,
    generator: String,
    seed: u64,
    solver: SolverKind,
    points: Result<Vec<Point<f64>>>,
    norm: Norm,
}

#[derive(Clone, Copy)]
enum Norm {
    Random,
    Area,
    Zigzag,
    Raw,
}

impl Norm {
    fn tag(self) -> &'static str {
        match self {
            Norm::Random => "L/N^((d-1)/d)",
            Norm::Area => "L/sqrt(N*area)",
            Norm::Zigzag => "L/(sqrt3*(N-1))",
            Norm::Raw => "L",
        }
    }

    fn apply(self, length: f64, n: usize, d: usize) -> f64 {
        let nf = n as f64;
        match self {
            Norm::Random => length / nf.powf((d as f64 - 1.0) / d as f64),
            Norm::Area => length / nf.sqrt(),
            Norm::Zigzag => length / (3f64.sqrt() * (nf - 1.0)),
            Norm::Raw => length,
        }
    }
}

fn jobs(study: &Study) -> Vec<Job> {
    let pick = |n: usize| study.solver.unwrap_or(if n <= 7 { SolverKind::Exact } else { SolverKind::Heuristic });
    let mut out = Vec::new();
    match &study.generator {
        GeneratorSpec::Random { n, d, reps, seed } => {
            for &nn in n {
                for rep in 0..*reps {
                    let s = seed.wrapping_add(rep as u64);
                    let points = if *d < 2 {
                        Err(crate::Error::DimensionTooSmall { min: 2, found: *d })
                    } else {
                        Ok(random_instance(&Region::unit_cube(*d), nn, s))
                    };
                    out.push(Job {
                        instance_id: format!("random-d{d}-n{nn:06}-s{s:020}"),
                        generator: format!("random(d={d},N={nn})"),
                        seed: s,
                        solver: pick(nn),
                        points,
                        norm: Norm::Random,
                    });
                }
            }
        }
        GeneratorSpec::HexLattice { n } => {
            for &nn in n {
                out.push(Job {
                    instance_id: format!("hex-n{nn:06}"),
                    generator: format!("hex_lattice(n_target={nn})"),
                    seed: 0,
                    solver: pick(nn),
                    points: hex_lattice_instance(nn),
                    norm: Norm::Area,
                });
            }
        }
        GeneratorSpec::Zigzag { n } => {
            for &nn in n {
                out.push(Job {
                    instance_id: format!("zigzag-n{nn:06}"),
                    generator: format!("zigzag(n={nn})"),
                    seed: 0,
                    solver: pick(nn),
                    points: zigzag_instance(nn),
                    norm: Norm::Zigzag,
                });
            }
        }
        GeneratorSpec::Homothety { n_gon, lambda, k } => {
            for &l in lambda {
                let nn = n_gon * (k + 1);
                out.push(Job {
                    instance_id: format!("homothety-g{n_gon:03}-k{k:03}-l{l}"),
                    generator: format!("homothety(n_gon={n_gon},lambda={l},K={k})"),
                    seed: 0,
                    solver: pick(nn),
                    points: homothety_instance(*n_gon, l, *k),
                    norm: Norm::Raw,
                });
            }
        }
    }
    out
}

fn solve_with(kind: SolverKind, points: &[Point<f64>], tol: &ToleranceConfig<f64>) -> Result<f64> {
    Ok(match kind {
        SolverKind::Exact => solve_exact(points, tol)?.best.length(),
        SolverKind::Heuristic => heuristic_steiner(points, tol)?.length(),
        SolverKind::Restricted => restricted_tree(points, tol)?.length(),
    })
}

/// Runs every study row by row. Rows execute in parallel; the result is
/// sorted by `instance_id`. A failing row keeps its place with `length = NaN`
/// and the error text.
pub fn run_suite(spec: &SuiteSpec, tol: &ToleranceConfig<f64>) -> Vec<ExperimentRun> {
    let all: Vec<Job> = spec.studies.iter().flat_map(jobs).collect();
    let mut rows: Vec<ExperimentRun> = all
        .into_par_iter()
        .map(|job| {
            let start = Instant::now();
            let (n, d) = match &job.points {
                Ok(p) => (p.len(), p.first().map_or(0, Point::dim)),
                Err(_) => (0, 0),
            };
            let solved = job.points.and_then(|p| solve_with(job.solver, &p, tol));
            let ms = if spec.timing { start.elapsed().as_millis() as u64 } else { 0 };
            let (length, normalized, error) = match solved {
                Ok(l) => (l, job.norm.apply(l, n, d), String::new()),
                Err(e) => (f64::NAN, f64::NAN, e.to_string()),
            };
            ExperimentRun {
                instance_id: job.instance_id,
                generator: job.generator,
                seed: job.seed,
                n,
                d,
                solver: job.solver,
                length,
                normalized,
                norm: job.norm.tag().to_string(),
                wall_time_ms: ms,
                error,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    rows
}

pub fn write_runs_csv<W: Write>(rows: &[ExperimentRun], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean length and its standard error for each `N`, in increasing `N`.
pub fn mean_by_size(rows: &[ExperimentRun]) -> Vec<(usize, f64, f64)> {
    let mut sizes: Vec<usize> = rows.iter().filter(|r| r.error.is_empty()).map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            let ls: Vec<f64> = rows.iter().filter(|r| r.n == n && r.error.is_empty()).map(|r| r.length).collect();
            let k = ls.len() as f64;
            let mean = ls.iter().sum::<f64>() / k;
            let var = if ls.len() > 1 {
                ls.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            (n, mean, (var / k).sqrt())
        })
        .collect()
}
