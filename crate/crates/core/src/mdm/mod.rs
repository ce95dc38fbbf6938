//! Maximal distance minimizers: shortest connected networks whose closed
//! `r`-neighbourhood contains a compact set `M`.

mod competitor;
mod finite;
mod horseshoe;
mod index;
mod numeric;

pub use competitor::{stadium_competitor, Competitor};
pub use finite::{solve_mdm_finite, FiniteMdm};
pub use horseshoe::{horseshoe_circle, horseshoe_stadium, Horseshoe};
pub use numeric::{solve_mdm_numeric, NumericConfig, NumericOutcome};

use crate::error::{invalid, Error, Result};
use crate::geom::{angle_between, diameter, Point, ToleranceConfig};
use crate::scalar::Scalar;

/// Parametric description of the compact set `M`.
///
/// Circles and stadiums live in the plane and are centred at the origin; the
/// stadium is the boundary of the `radius`-neighbourhood of the segment from
/// `(-seg_len / 2, 0)` to `(seg_len / 2, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CompactSetDescriptor<T> {
    Circle { radius: T },
    Stadium { radius: T, seg_len: T },
    Polygon(Vec<Point<T>>),
    Points(Vec<Point<T>>),
    Samples(Vec<Point<T>>),
}

impl<T: Scalar> CompactSetDescriptor<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        match self {
            Self::Circle { radius } => {
                if !positive(*radius) {
                    return Err(invalid("radius", "must be positive"));
                }
            }
            Self::Stadium { radius, seg_len } => {
                if !positive(*radius) {
                    return Err(invalid("radius", "must be positive"));
                }
                if !(*seg_len >= T::zero()) || !seg_len.is_finite() {
                    return Err(invalid("seg_len", "must be non-negative"));
                }
            }
            Self::Polygon(v) => {
                if v.len() < 3 {
                    return Err(invalid("polygon", "needs at least three vertices"));
                }
                crate::steiner::check_points(v)?;
            }
            Self::Points(v) | Self::Samples(v) => {
                if v.is_empty() {
                    return Err(invalid("points", "needs at least one point"));
                }
                crate::steiner::check_points(v)?;
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Circle { .. } | Self::Stadium { .. } => 2,
            Self::Polygon(v) | Self::Points(v) | Self::Samples(v) => v.first().map_or(2, Point::dim),
        }
    }

    pub fn diameter(&self) -> T {
        match self {
            Self::Circle { radius } => *radius + *radius,
            Self::Stadium { radius, seg_len } => *radius + *radius + *seg_len,
            Self::Polygon(v) | Self::Points(v) | Self::Samples(v) => diameter(v),
        }
    }

    /// `ceil(40 * diameter / r)` boundary samples, at least 8.
    pub fn default_density(&self, r: T) -> usize {
        let n = (T::lit(40.0) * self.diameter() / r).ceil().to_usize().unwrap_or(usize::MAX);
        n.clamp(8, 1 << 22)
    }
}

/// Deterministic arc-length-uniform samples of `M`; finite sets pass through.
///
/// Densities below 4 are rejected.
pub fn sample_compact<T: Scalar>(desc: &CompactSetDescriptor<T>, density: usize) -> Result<Vec<Point<T>>> {
    desc.validate()?;
    let needs_density = matches!(
        desc,
        CompactSetDescriptor::Circle { .. } | CompactSetDescriptor::Stadium { .. } | CompactSetDescriptor::Polygon(_)
    );
    if needs_density && density < 4 {
        return Err(invalid("density", format!("must be at least 4, got {density}")));
    }
    let frac = |k: usize| T::from_usize_lossy(k) / T::from_usize_lossy(density);
    Ok(match desc {
        CompactSetDescriptor::Circle { radius } => (0..density)
            .map(|k| {
                let a = T::TAU() * frac(k);
                Point::xy(*radius * a.cos(), *radius * a.sin())
            })
            .collect(),
        CompactSetDescriptor::Stadium { radius, seg_len } => {
            let total = T::lit(2.0) * *seg_len + T::TAU() * *radius;
            (0..density)
                .map(|k| stadium_point(*radius, *seg_len, total * frac(k)))
                .collect()
        }
        CompactSetDescriptor::Polygon(v) => {
            let n = v.len();
            let lens: Vec<T> = (0..n).map(|i| v[i].dist(&v[(i + 1) % n])).collect();
            let total: T = lens.iter().copied().sum();
            let mut out = Vec::with_capacity(density);
            let mut edge = 0;
            let mut start = T::zero();
            for k in 0..density {
                let s = total * frac(k);
                while edge + 1 < n && s >= start + lens[edge] {
                    start = start + lens[edge];
                    edge += 1;
                }
                let t = if lens[edge] > T::zero() {
                    ((s - start) / lens[edge]).min(T::one())
                } else {
                    T::zero()
                };
                out.push(v[edge].lerp(&v[(edge + 1) % n], t));
            }
            out
        }
        CompactSetDescriptor::Points(v) | CompactSetDescriptor::Samples(v) => v.clone(),
    })
}

/// Point at arc length `s` along the stadium, starting at the bottom-right
/// junction and running counter-clockwise.
fn stadium_point<T: Scalar>(radius: T, seg_len: T, s: T) -> Point<T> {
    let half = seg_len * T::lit(0.5);
    let arc = T::PI() * radius;
    if s < arc {
        let a = -T::FRAC_PI_2() + s / radius;
        Point::xy(half + radius * a.cos(), radius * a.sin())
    } else if s < arc + seg_len {
        Point::xy(half - (s - arc), radius)
    } else if s < arc + arc + seg_len {
        let a = T::FRAC_PI_2() + (s - arc - seg_len) / radius;
        Point::xy(-half + radius * a.cos(), radius * a.sin())
    } else {
        Point::xy(-half + (s - arc - arc - seg_len), -radius)
    }
}

/// Straight-edge network; may be a single vertex with no edges.
#[derive(Debug, Clone, PartialEq)]
pub struct MdmNetwork<T> {
    vertices: Vec<Point<T>>,
    edges: Vec<(usize, usize)>,
}

impl<T: Scalar> MdmNetwork<T> {
    pub fn new(vertices: Vec<Point<T>>, edges: Vec<(usize, usize)>) -> Result<Self> {
        crate::steiner::check_points(&vertices)?;
        for &(u, v) in &edges {
            if u >= vertices.len() || v >= vertices.len() || u == v {
                return Err(invalid("edges", format!("bad edge ({u}, {v})")));
            }
        }
        Ok(Self { vertices, edges })
    }

    pub(crate) fn from_parts(vertices: Vec<Point<T>>, edges: Vec<(usize, usize)>) -> Self {
        Self { vertices, edges }
    }

    pub fn point(p: Point<T>) -> Self {
        Self {
            vertices: vec![p],
            edges: Vec::new(),
        }
    }

    /// Open polyline through the given vertices.
    pub fn polyline(vertices: Vec<Point<T>>) -> Result<Self> {
        let edges = (1..vertices.len()).map(|i| (i - 1, i)).collect();
        Self::new(vertices, edges)
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn length(&self) -> T {
        self.edges
            .iter()
            .map(|&(u, v)| self.vertices[u].dist(&self.vertices[v]))
            .sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = (&Point<T>, &Point<T>)> + '_ {
        self.edges
            .iter()
            .map(move |&(u, v)| (&self.vertices[u], &self.vertices[v]))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Connected components and whether some edge closes a cycle.
    pub fn components_and_cycle(&self) -> (usize, bool) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut cycle = false;
        let mut comps = n;
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a == b {
                cycle = true;
            } else {
                parent[a] = b;
                comps -= 1;
            }
        }
        (comps, cycle)
    }

    /// Nearest point of the network to `p` and its distance.
    pub fn nearest(&self, p: &Point<T>) -> (T, Point<T>) {
        self.nearest_many(std::slice::from_ref(p)).pop().expect("one query")
    }

    fn flat(&self) -> Vec<T> {
        self.vertices.iter().flat_map(|p| p.coords().iter().copied()).collect()
    }

    /// `nearest` for a batch of points, sharing one spatial index.
    pub(crate) fn nearest_many(&self, ps: &[Point<T>]) -> Vec<(T, Point<T>)> {
        if self.edges.is_empty() {
            return ps
                .iter()
                .map(|p| {
                    self.vertices
                        .iter()
                        .map(|v| (v.dist(p), v.clone()))
                        .fold((T::infinity(), p.clone()), |a, b| if b.0 < a.0 { b } else { a })
                })
                .collect();
        }
        let x = self.flat();
        let idx = index::SegmentIndex::new(&x, self.dim(), &self.edges);
        ps.iter()
            .map(|p| {
                let hit = idx.nearest(p.coords()).expect("non-empty edge list");
                let (u, v) = self.edges[hit.edge];
                (hit.dist_sq.sqrt(), self.vertices[u].lerp(&self.vertices[v], hit.s))
            })
            .collect()
    }

    /// Drops degree-2 vertices whose two edges are both shorter than `min_len`.
    pub fn coarsened(&self, min_len: T) -> Self {
        let n = self.vertices.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut removed = vec![false; n];
        for v in 0..n {
            if adj[v].len() != 2 {
                continue;
            }
            let (a, b) = (adj[v][0], adj[v][1]);
            let p = &self.vertices[v];
            if a == b || p.dist(&self.vertices[a]) >= min_len || p.dist(&self.vertices[b]) >= min_len {
                continue;
            }
            if adj[a].contains(&b) {
                continue;
            }
            removed[v] = true;
            adj[v].clear();
            for (x, y) in [(a, b), (b, a)] {
                let slot = adj[x].iter().position(|&w| w == v).expect("symmetric adjacency");
                adj[x][slot] = y;
            }
        }
        let mut index = vec![usize::MAX; n];
        let mut vertices = Vec::new();
        for v in 0..n {
            if !removed[v] {
                index[v] = vertices.len();
                vertices.push(self.vertices[v].clone());
            }
        }
        let mut edges = Vec::new();
        for (u, nb) in adj.iter().enumerate() {
            for &v in nb {
                if u < v {
                    edges.push((index[u], index[v]));
                }
            }
        }
        Self { vertices, edges }
    }

    /// Merges vertices joined by edges no longer than `thr`.
    pub fn contracted(&self, thr: T) -> Self {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v) in &self.edges {
            if self.vertices[u].dist(&self.vertices[v]) <= thr {
                let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut index = vec![usize::MAX; n];
        let mut vertices = Vec::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            if index[root] == usize::MAX {
                index[root] = vertices.len();
                vertices.push(self.vertices[root].clone());
            }
            index[i] = index[root];
        }
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &(u, v) in &self.edges {
            let (a, b) = (index[u], index[v]);
            if a != b && !edges.contains(&(a.min(b), a.max(b))) {
                edges.push((a.min(b), a.max(b)));
            }
        }
        Self { vertices, edges }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport<T> {
    /// Largest `dist(m, network) - r` over the samples.
    pub max_defect: T,
    pub worst_point: Point<T>,
    pub covered: bool,
}

pub fn coverage_check<T: Scalar>(
    net: &MdmNetwork<T>,
    samples: &[Point<T>],
    r: T,
    tol: &ToleranceConfig<T>,
) -> Result<CoverageReport<T>> {
    if !(r > T::zero()) {
        return Err(invalid("r", "must be positive"));
    }
    let Some(first) = samples.first() else {
        return Err(invalid("samples", "empty sample set"));
    };
    first.check_dim(&net.vertices[0])?;
    let mut worst = (T::neg_infinity(), first.clone());
    for (m, near) in samples.iter().zip(net.nearest_many(samples)) {
        let d = near.0 - r;
        if d > worst.0 {
            worst = (d, m.clone());
        }
    }
    Ok(CoverageReport {
        max_defect: worst.0,
        worst_point: worst.1,
        covered: worst.0 <= tol.coverage_eps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergeticSet<T> {
    /// Pairs `(x, y)`: `x` on the network, witness `y` in `M` with `|xy|` close to `r`.
    pub points: Vec<(Point<T>, Point<T>)>,
}

/// Relative band `[r - band * r, r + coverage_eps]` used to detect energetic points.
pub const ENERGETIC_BAND: f64 = 1e-3;

pub fn energetic_points<T: Scalar>(
    net: &MdmNetwork<T>,
    samples: &[Point<T>],
    r: T,
    tol: &ToleranceConfig<T>,
) -> Result<EnergeticSet<T>> {
    if !(r > T::zero()) {
        return Err(invalid("r", "must be positive"));
    }
    let lo = r - T::lit(ENERGETIC_BAND) * r;
    let hi = r + tol.coverage_eps;
    let mut scale = diameter(samples).max(diameter(&net.vertices));
    if scale <= T::zero() {
        scale = r;
    }
    let merge = tol.eps_len * scale;
    let mut points: Vec<(Point<T>, Point<T>)> = Vec::new();
    for y in samples {
        first_dim(y, net)?;
    }
    for (y, (d, x)) in samples.iter().zip(net.nearest_many(samples)) {
        if d >= lo && d <= hi && !points.iter().any(|(p, _)| p.dist(&x) <= merge) {
            points.push((x, y.clone()));
        }
    }
    Ok(EnergeticSet { points })
}

fn first_dim<T: Scalar>(y: &Point<T>, net: &MdmNetwork<T>) -> Result<()> {
    if y.dim() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            found: y.dim(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdmReport<T> {
    pub has_cycle: bool,
    pub connected: bool,
    /// Edge count after contracting tiny edges and merging straight runs.
    pub segment_count: usize,
    /// `2 m - 3` when the number of points of a finite `M` is known.
    pub segment_bound: Option<usize>,
    pub within_bound: Option<bool>,
    /// Angles between adjacent edges at every vertex of degree at least 2.
    pub angles: Vec<T>,
}

impl<T: Scalar> MdmReport<T> {
    pub fn min_angle(&self) -> Option<T> {
        self.angles.iter().copied().reduce(T::min)
    }
}

pub fn verify_mdm<T: Scalar>(net: &MdmNetwork<T>, m_count: Option<usize>, tol: &ToleranceConfig<T>) -> MdmReport<T> {
    let scale = diameter(&net.vertices);
    let c = net.contracted(tol.eps_len * scale);
    let (comps, has_cycle) = c.components_and_cycle();
    let mut adj = vec![Vec::new(); c.vertices.len()];
    for &(u, v) in &c.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut angles = Vec::new();
    let mut straight = 0;
    for (v, nb) in adj.iter().enumerate() {
        let mut local = Vec::new();
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                let a = &c.vertices[nb[i]] - &c.vertices[v];
                let b = &c.vertices[nb[j]] - &c.vertices[v];
                local.push(angle_between(&a, &b));
            }
        }
        if nb.len() == 2 && local[0] >= T::PI() - tol.eps_angle {
            straight += 1;
        }
        angles.extend(local);
    }
    let segment_count = c.edges.len() - straight.min(c.edges.len());
    let segment_bound = m_count.map(|m| (2 * m).saturating_sub(3));
    MdmReport {
        has_cycle,
        connected: comps == 1,
        segment_count,
        segment_bound,
        within_bound: segment_bound.map(|b| segment_count <= b),
        angles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::xy(x, y)
    }

    #[test]
    fn circle_quarter_turns() {
        let s = sample_compact(&CompactSetDescriptor::Circle { radius: 1.0 }, 4).unwrap();
        let expect = [p(1.0, 0.0), p(0.0, 1.0), p(-1.0, 0.0), p(0.0, -1.0)];
        for (a, b) in s.iter().zip(&expect) {
            assert!(a.dist(b) < 1e-15);
        }
        assert!(sample_compact(&CompactSetDescriptor::Circle { radius: 1.0 }, 3).is_err());
    }

    #[test]
    fn points_pass_through() {
        let pts = vec![p(0.3, 0.4)];
        assert_eq!(sample_compact(&CompactSetDescriptor::Points(pts.clone()), 0).unwrap(), pts);
    }

    #[test]
    fn stadium_samples_are_at_unit_distance_from_core() {
        let desc = CompactSetDescriptor::Stadium {
            radius: 1.0,
            seg_len: 2.0,
        };
        let (a, b) = (p(-1.0, 0.0), p(1.0, 0.0));
        for n in [8, 37, 200] {
            let s = sample_compact(&desc, n).unwrap();
            assert_eq!(s.len(), n);
            for q in &s {
                assert!((crate::geom::seg_dist(q, &a, &b) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polygon_samples_lie_on_boundary() {
        let sq = vec![p(0.0, 0.0), p(2.0, 0.0), p(2.0, 2.0), p(0.0, 2.0)];
        let s = sample_compact(&CompactSetDescriptor::Polygon(sq), 16).unwrap();
        assert_eq!(s.len(), 16);
        assert!(s[2].dist(&p(1.0, 0.0)) < 1e-15);
        for q in &s {
            let on = q[0].abs() < 1e-12 || q[1].abs() < 1e-12 || (q[0] - 2.0).abs() < 1e-12 || (q[1] - 2.0).abs() < 1e-12;
            assert!(on);
        }
    }

    #[test]
    fn coverage_of_a_single_point() {
        let tol = ToleranceConfig::default();
        let net = MdmNetwork::point(p(0.0, 0.0));
        let m = sample_compact(&CompactSetDescriptor::Circle { radius: 2.0 }, 64).unwrap();
        let full = coverage_check(&net, &m, 2.0, &tol).unwrap();
        assert!(full.max_defect.abs() < 1e-15 && full.covered);
        let half = coverage_check(&net, &m, 1.0, &tol).unwrap();
        assert!((half.max_defect - 1.0).abs() < 1e-15);
        assert!(!half.covered);
    }

    #[test]
    fn segment_between_two_disks() {
        let tol = ToleranceConfig::default();
        let net = MdmNetwork::polyline(vec![p(0.5, 0.0), p(2.5, 0.0)]).unwrap();
        let m = [p(0.0, 0.0), p(3.0, 0.0)];
        let e = energetic_points(&net, &m, 0.5, &tol).unwrap();
        assert_eq!(e.points.len(), 2);
        let rep = verify_mdm(&net, Some(2), &tol);
        assert_eq!(rep.segment_count, 1);
        assert_eq!(rep.within_bound, Some(true));
        assert!(!rep.has_cycle && rep.connected);
    }

    #[test]
    fn collinear_runs_are_merged_and_cycles_flagged() {
        let tol = ToleranceConfig::default();
        let path = MdmNetwork::polyline(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(2.0, 1.0)]).unwrap();
        assert_eq!(verify_mdm(&path, None, &tol).segment_count, 2);
        let tri = MdmNetwork::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)], vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(verify_mdm(&tri, None, &tol).has_cycle);
    }

    #[test]
    fn network_validation() {
        assert!(MdmNetwork::new(vec![p(0.0, 0.0)], vec![(0, 1)]).is_err());
        assert!(MdmNetwork::<f64>::new(vec![], vec![]).is_err());
    }
}
