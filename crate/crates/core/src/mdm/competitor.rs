//! Non-horseshoe competitor for the stadium: a path along the lower side with
//! a branching point, a vertical stem and a second branching point whose two
//! arms cover the upper side.

use super::numeric::restore_network;
use super::{coverage_check, sample_compact, solve_mdm_numeric, CompactSetDescriptor, MdmNetwork, NumericConfig};
use crate::error::{invalid, Error, Result};
use crate::geom::{Point, ToleranceConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Competitor<T> {
    pub network: MdmNetwork<T>,
    pub length: T,
    /// Coverage defect against a dense sampling of the stadium.
    pub max_defect: T,
}

/// Builds a graph from polylines that share vertices by exact position.
struct Builder<T> {
    verts: Vec<Point<T>>,
    edges: Vec<(usize, usize)>,
}

impl<T: Scalar> Builder<T> {
    fn new() -> Self {
        Self {
            verts: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn vertex(&mut self, p: Point<T>) -> usize {
        if let Some(i) = self.verts.iter().position(|q| q.dist(&p) <= T::lit(1e-9)) {
            return i;
        }
        self.verts.push(p);
        self.verts.len() - 1
    }

    /// Adds the straight path `a -> b` cut into pieces of length at most `step`.
    fn line(&mut self, a: Point<T>, b: Point<T>, step: T) {
        let k = (a.dist(&b) / step).ceil().to_usize().unwrap_or(1).max(1);
        let mut prev = self.vertex(a.clone());
        for i in 1..=k {
            let p = a.lerp(&b, T::from_usize_lossy(i) / T::from_usize_lossy(k));
            let cur = self.vertex(p);
            if cur != prev {
                self.edges.push((prev, cur));
            }
            prev = cur;
        }
    }

    fn arc(&mut self, centre: (T, T), rho: T, from: T, to: T, step: T) {
        let k = ((to - from).abs() * rho / step).ceil().to_usize().unwrap_or(1).max(1);
        let at = |a: T| Point::xy(centre.0 + rho * a.cos(), centre.1 + rho * a.sin());
        let mut prev = self.vertex(at(from));
        for i in 1..=k {
            let a = from + (to - from) * T::from_usize_lossy(i) / T::from_usize_lossy(k);
            let cur = self.vertex(at(a));
            if cur != prev {
                self.edges.push((prev, cur));
            }
            prev = cur;
        }
    }

    fn build(self) -> MdmNetwork<T> {
        MdmNetwork::from_parts(self.verts, self.edges)
    }
}

/// Starting networks of the competitor family, parametrized by the width of
/// the upper region handed to the arms.
fn initial_networks<T: Scalar>(big_r: T, r: T, seg_len: T) -> Vec<MdmNetwork<T>> {
    let rho = big_r - r;
    let h = seg_len * T::lit(0.5);
    let step = r * T::lit(0.1);
    let pi = T::PI();
    let half_pi = T::FRAC_PI_2();
    let mut out = Vec::new();
    // the arms take over the upper side for |x| < w; hooks cover the rest
    for frac in [0.5, 1.0] {
        let w = h * T::lit(frac);
        let mut b = Builder::new();
        b.line(Point::xy(-h, -rho), Point::xy(h, -rho), step);
        b.arc((-h, T::zero()), rho, T::lit(1.5) * pi, half_pi, step);
        b.arc((h, T::zero()), rho, -half_pi, half_pi, step);
        if w < h {
            b.line(Point::xy(-h, rho), Point::xy(-w, rho), step);
            b.line(Point::xy(h, rho), Point::xy(w, rho), step);
        }
        add_y(&mut b, big_r, r, w.max(r * T::lit(0.5)), step);
        out.push(b.build());
    }
    // lower half of the parallel curve, arms over the whole upper half
    let mut b = Builder::new();
    b.arc((-h, T::zero()), rho, pi, T::lit(1.5) * pi, step);
    b.line(Point::xy(-h, -rho), Point::xy(h, -rho), step);
    b.arc((h, T::zero()), rho, -half_pi, T::zero(), step);
    add_y(&mut b, big_r, r, h + rho, step);
    out.push(b.build());
    out
}

/// Stem from `(0, -rho)` and two arms reaching out to `|x| = w`.
fn add_y<T: Scalar>(b: &mut Builder<T>, big_r: T, r: T, w: T, step: T) {
    let rho = big_r - r;
    let q = Point::xy(T::zero(), (big_r - r).min(rho * T::lit(0.5) + r * T::lit(0.1)));
    b.line(Point::xy(T::zero(), -rho), q.clone(), step);
    let reach = (w - r * T::lit(0.5)).max(r * T::lit(0.2));
    let top = big_r - r * T::lit(0.4);
    b.line(q.clone(), Point::xy(-reach, top), step);
    b.line(q, Point::xy(reach, top), step);
}

/// Best member of the competitor family found by the penalty solver.
pub fn stadium_competitor<T: Scalar>(big_r: T, r: T, seg_len: T, tol: &ToleranceConfig<T>) -> Result<Competitor<T>> {
    if !(r > T::zero()) || !(big_r > r) {
        return Err(Error::Infeasible(format!("need R > r > 0, got R = {big_r}, r = {r}")));
    }
    if !(seg_len >= T::zero()) {
        return Err(invalid("seg_len", "must be non-negative"));
    }
    let desc = CompactSetDescriptor::Stadium { radius: big_r, seg_len };
    let config = NumericConfig {
        density: Some(desc.default_density(r) * 2),
        iters_per_epoch: 250,
        ..NumericConfig::default()
    };
    let dense = sample_compact(&desc, (desc.default_density(r) * 32).max(4096))?;
    let gap = dense
        .iter()
        .zip(dense.iter().cycle().skip(1))
        .map(|(a, b)| a.dist(b))
        .fold(T::zero(), T::max);
    let mut best: Option<Competitor<T>> = None;
    for init in initial_networks(big_r, r, seg_len) {
        let out = solve_mdm_numeric(&desc, r, &init, &config, tol)?;
        // pulling every sample to within r - gap covers the arcs between them
        let network = restore_network(&out.network, &dense, r - gap, tol.coverage_eps);
        let cov = coverage_check(&network, &dense, r, tol)?;
        if !cov.covered {
            continue;
        }
        let length = network.length();
        if best.as_ref().is_none_or(|b| length < b.length) {
            best = Some(Competitor {
                network,
                length,
                max_defect: cov.max_defect,
            });
        }
    }
    best.ok_or_else(|| Error::Infeasible("no competitor reached coverage".into()))
}
