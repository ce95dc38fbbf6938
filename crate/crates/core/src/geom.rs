//! Vector geometry in arbitrary dimension with tolerance-aware helpers.

use std::ops::{Add, Index, Sub};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// A point of `R^d`, `d >= 2`, with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T> {
    coords: Vec<T>,
}

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionTooSmall {
                min: 2,
                found: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[T]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    /// Planar convenience constructor. Panics on non-finite input.
    pub fn xy(x: T, y: T) -> Self {
        Self::new(vec![x, y]).expect("finite planar coordinates")
    }

    pub fn xyz(x: T, y: T, z: T) -> Self {
        Self::new(vec![x, y, z]).expect("finite coordinates")
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![T::zero(); dim.max(2)],
        }
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<T>) -> Self {
        Self { coords }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// Euclidean distance without the dimension check.
    #[inline]
    pub fn dist(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
            .sqrt()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self::from_vec_unchecked(self.coords.iter().map(|&c| c * k).collect())
    }

    /// `self + k * dir`
    pub fn offset(&self, dir: &Self, k: T) -> Self {
        Self::from_vec_unchecked(
            self.coords
                .iter()
                .zip(&dir.coords)
                .map(|(&a, &b)| a + k * b)
                .collect(),
        )
    }

    /// Point at parameter `t` on the segment from `self` to `other`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        Self::from_vec_unchecked(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a + t * (b - a))
                .collect(),
        )
    }

    /// Unit vector, or `None` for a (near) zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self.scaled(T::one() / n))
        } else {
            None
        }
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Point<U> {
        Point::from_vec_unchecked(self.coords.iter().map(|c| U::lit(c.as_f64())).collect())
    }
}

impl<T> Index<usize> for Point<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

impl<T: Scalar> Sub for &Point<T> {
    type Output = Point<T>;
    fn sub(self, rhs: Self) -> Point<T> {
        debug_assert_eq!(self.dim(), rhs.dim());
        Point::from_vec_unchecked(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(&a, &b)| a - b)
                .collect(),
        )
    }
}

impl<T: Scalar> Add for &Point<T> {
    type Output = Point<T>;
    fn add(self, rhs: Self) -> Point<T> {
        debug_assert_eq!(self.dim(), rhs.dim());
        Point::from_vec_unchecked(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }
}

/// Tolerances used across the solvers.
///
/// `eps_len` and `eps_tie` are relative to the instance diameter, `eps_angle`
/// is in radians and `coverage_eps` is an absolute length slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig<T> {
    pub eps_len: T,
    pub eps_angle: T,
    pub eps_tie: T,
    pub coverage_eps: T,
}

impl<T: Scalar> ToleranceConfig<T> {
    pub fn new(eps_len: T, eps_angle: T, eps_tie: T, coverage_eps: T) -> Result<Self> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(eps_len) {
            return Err(invalid("eps_len", "must be strictly positive"));
        }
        if !positive(eps_angle) {
            return Err(invalid("eps_angle", "must be strictly positive"));
        }
        if !positive(eps_tie) {
            return Err(invalid("eps_tie", "must be strictly positive"));
        }
        if !positive(coverage_eps) {
            return Err(invalid("coverage_eps", "must be strictly positive"));
        }
        if eps_tie < eps_len {
            return Err(invalid("eps_tie", "must not be smaller than eps_len"));
        }
        Ok(Self {
            eps_len,
            eps_angle,
            eps_tie,
            coverage_eps,
        })
    }

    /// Looser profile for quick exploratory runs.
    pub fn loose() -> Self {
        let d = Self::default();
        Self {
            eps_len: d.eps_len * T::lit(1e3),
            eps_angle: d.eps_angle * T::lit(1e2),
            eps_tie: d.eps_tie * T::lit(1e2),
            coverage_eps: d.coverage_eps * T::lit(1e2),
        }
    }

    /// Tighter profile; only meaningful in double precision.
    pub fn strict() -> Self {
        let d = Self::default();
        let floor = T::epsilon() * T::lit(1e3);
        Self {
            eps_len: (d.eps_len * T::lit(1e-2)).max(floor),
            eps_angle: (d.eps_angle * T::lit(1e-1)).max(floor),
            eps_tie: (d.eps_tie * T::lit(1e-1)).max(floor * T::lit(10.0)),
            coverage_eps: (d.coverage_eps * T::lit(1e-1)).max(floor),
        }
    }
}

impl<T: Scalar> Default for ToleranceConfig<T> {
    /// `1e-9 / 1e-6 / 1e-7 / 1e-6` in double precision, widened to the
    /// machine epsilon of narrower types.
    fn default() -> Self {
        let eps = T::epsilon();
        let eps_len = T::lit(1e-9).max(eps * T::lit(1e3));
        Self {
            eps_len,
            eps_angle: T::lit(1e-6).max(eps.sqrt() * T::lit(10.0)),
            eps_tie: T::lit(1e-7).max(eps_len * T::lit(10.0)),
            coverage_eps: T::lit(1e-6).max(eps * T::lit(1e3)),
        }
    }
}

/// Euclidean distance between two points of the same dimension.
pub fn distance<T: Scalar>(a: &Point<T>, b: &Point<T>) -> Result<T> {
    a.check_dim(b)?;
    Ok(a.dist(b))
}

/// Angle at `v` between the rays `v -> a` and `v -> b`, in `[0, pi]`.
pub fn angle_at<T: Scalar>(v: &Point<T>, a: &Point<T>, b: &Point<T>) -> Result<T> {
    v.check_dim(a)?;
    v.check_dim(b)?;
    let da = a - v;
    let db = b - v;
    let (na, nb) = (da.norm(), db.norm());
    if na <= T::zero() || nb <= T::zero() {
        return Err(Error::DegenerateRay);
    }
    Ok(angle_between(&da, &db))
}

/// Angle between two non-zero vectors, robust near 0 and pi.
pub(crate) fn angle_between<T: Scalar>(u: &Point<T>, v: &Point<T>) -> T {
    // atan2(|u x v|, u.v) with |u x v|^2 = |u|^2|v|^2 - (u.v)^2 computed stably
    let (nu, nv) = (u.norm(), v.norm());
    let uu = u.scaled(T::one() / nu);
    let vv = v.scaled(T::one() / nv);
    let sum = (&uu + &vv).norm();
    let diff = (&uu - &vv).norm();
    T::lit(2.0) * diff.atan2(sum)
}

/// Closest point of the closed segment `[s0, s1]` to `p`, with its parameter.
pub fn closest_on_segment<T: Scalar>(p: &Point<T>, s0: &Point<T>, s1: &Point<T>) -> (T, Point<T>) {
    let d = s1 - s0;
    let len_sq = d.norm_sq();
    if len_sq <= T::zero() {
        return (T::zero(), s0.clone());
    }
    let t = ((p - s0).dot(&d) / len_sq).max(T::zero()).min(T::one());
    (t, s0.offset(&d, t))
}

/// Distance from `p` to the closed segment `[s0, s1]`.
pub fn dist_point_to_segment<T: Scalar>(p: &Point<T>, s0: &Point<T>, s1: &Point<T>) -> Result<T> {
    p.check_dim(s0)?;
    p.check_dim(s1)?;
    Ok(seg_dist(p, s0, s1))
}

/// Unchecked segment distance for hot loops.
#[inline]
pub(crate) fn seg_dist<T: Scalar>(p: &Point<T>, s0: &Point<T>, s1: &Point<T>) -> T {
    let dim = p.dim();
    let (pc, ac, bc) = (p.coords(), s0.coords(), s1.coords());
    let mut dd = T::zero();
    let mut pd = T::zero();
    for k in 0..dim {
        let e = bc[k] - ac[k];
        dd = dd + e * e;
        pd = pd + (pc[k] - ac[k]) * e;
    }
    let t = if dd > T::zero() {
        (pd / dd).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let mut acc = T::zero();
    for k in 0..dim {
        let q = ac[k] + t * (bc[k] - ac[k]);
        acc = acc + (pc[k] - q) * (pc[k] - q);
    }
    acc.sqrt()
}

/// Largest pairwise distance of a point set (zero for fewer than two points).
pub fn diameter<T: Scalar>(points: &[Point<T>]) -> T {
    let mut best = T::zero();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(a.dist(b));
        }
    }
    best
}

/// Diagonal of the axis-aligned bounding box; a cheap scale for large sets.
pub fn bbox_diagonal<T: Scalar>(points: &[Point<T>]) -> T {
    let Some(first) = points.first() else {
        return T::zero();
    };
    let dim = first.dim();
    let mut lo = first.coords().to_vec();
    let mut hi = lo.clone();
    for p in points {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    lo.iter()
        .zip(&hi)
        .fold(T::zero(), |acc, (&l, &h)| acc + (h - l) * (h - l))
        .sqrt()
}

pub fn centroid<T: Scalar>(points: &[Point<T>]) -> Point<T> {
    let dim = points[0].dim();
    let mut acc = vec![T::zero(); dim];
    for p in points {
        for (a, &c) in acc.iter_mut().zip(p.coords()) {
            *a = *a + c;
        }
    }
    let k = T::one() / T::from_usize_lossy(points.len());
    Point::from_vec_unchecked(acc.into_iter().map(|a| a * k).collect())
}

/// Point minimizing the total distance to `a`, `b`, `c`.
///
/// A vertex is returned when its angle is at least `2pi/3` (equivalently the
/// two unit vectors leaving it sum to a vector of norm at most one). Otherwise
/// the interior point is found by Weiszfeld iteration in the plane of the
/// triangle, finished with a few Newton steps.
pub fn fermat_point<T: Scalar>(
    a: &Point<T>,
    b: &Point<T>,
    c: &Point<T>,
    tol: &ToleranceConfig<T>,
) -> Result<Point<T>> {
    a.check_dim(b)?;
    a.check_dim(c)?;
    Ok(fermat_unchecked(a, b, c, tol.eps_len))
}

pub(crate) fn fermat_unchecked<T: Scalar>(a: &Point<T>, b: &Point<T>, c: &Point<T>, eps_len: T) -> Point<T> {
    let pts = [a, b, c];
    let scale = a.dist(b).max(a.dist(c)).max(b.dist(c));
    if scale <= T::zero() {
        return a.clone();
    }
    if let Some(v) = optimal_vertex(&pts) {
        return pts[v].clone();
    }

    // planar frame: a at the origin, b on the first axis
    let e1 = (b - a).scaled(T::one() / a.dist(b));
    let ac = c - a;
    let cx = ac.dot(&e1);
    let w = ac.offset(&e1, -cx);
    let cy = w.norm();
    let e2 = w.scaled(T::one() / cy);
    let planar = [
        [T::zero(), T::zero()],
        [a.dist(b), T::zero()],
        [cx, cy],
    ];
    let sum_dist = |x: [T; 2]| -> T {
        planar
            .iter()
            .map(|q| ((x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2)).sqrt())
            .sum()
    };

    let third = T::one() / T::lit(3.0);
    let start = [
        (planar[1][0] + planar[2][0]) * third,
        planar[2][1] * third,
    ];
    let mut x = start;
    let guard = eps_len * scale;
    for _ in 0..500 {
        let mut num = [T::zero(); 2];
        let mut den = T::zero();
        let mut near_vertex = None;
        for (i, q) in planar.iter().enumerate() {
            let d = ((x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2)).sqrt();
            if d <= guard {
                near_vertex = Some(i);
                break;
            }
            num[0] = num[0] + q[0] / d;
            num[1] = num[1] + q[1] / d;
            den = den + T::one() / d;
        }
        if let Some(i) = near_vertex {
            // vertex was already rejected as optimal; step back toward the centroid
            let q = planar[i];
            x = [
                q[0] + (start[0] - q[0]) * T::lit(1e-3),
                q[1] + (start[1] - q[1]) * T::lit(1e-3),
            ];
            continue;
        }
        let next = [num[0] / den, num[1] / den];
        let mv = ((next[0] - x[0]).powi(2) + (next[1] - x[1]).powi(2)).sqrt();
        x = next;
        if mv <= T::epsilon() * T::lit(64.0) * scale {
            break;
        }
    }

    // Newton polish on the planar objective
    for _ in 0..6 {
        let mut g = [T::zero(); 2];
        let mut h = [[T::zero(); 2]; 2];
        let mut ok = true;
        for q in &planar {
            let dx = x[0] - q[0];
            let dy = x[1] - q[1];
            let d = (dx * dx + dy * dy).sqrt();
            if d <= guard {
                ok = false;
                break;
            }
            let (ux, uy) = (dx / d, dy / d);
            g[0] = g[0] + ux;
            g[1] = g[1] + uy;
            h[0][0] = h[0][0] + (T::one() - ux * ux) / d;
            h[0][1] = h[0][1] - ux * uy / d;
            h[1][1] = h[1][1] + (T::one() - uy * uy) / d;
        }
        if !ok {
            break;
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        if !(det > T::zero()) {
            break;
        }
        let step = [
            (h[1][1] * g[0] - h[0][1] * g[1]) / det,
            (h[0][0] * g[1] - h[0][1] * g[0]) / det,
        ];
        let cand = [x[0] - step[0], x[1] - step[1]];
        if sum_dist(cand) <= sum_dist(x) {
            x = cand;
        } else {
            break;
        }
    }

    a.offset(&e1, x[0]).offset(&e2, x[1])
}

/// Index of a triangle vertex whose angle is at least 2pi/3, if any.
fn optimal_vertex<T: Scalar>(pts: &[&Point<T>; 3]) -> Option<usize> {
    for i in 0..3 {
        let v = pts[i];
        let o1 = pts[(i + 1) % 3];
        let o2 = pts[(i + 2) % 3];
        let (Some(u1), Some(u2)) = ((o1 - v).normalized(), (o2 - v).normalized()) else {
            // coincident pair: the shared point is optimal
            return Some(i);
        };
        if (&u1 + &u2).norm() <= T::one() + T::epsilon() * T::lit(4.0) {
            return Some(i);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::xy(x, y)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&p(0.0, 0.0), &p(0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(distance(&p(0.0, 0.0), &p(3.0, 4.0)).unwrap(), 5.0);
        let s3 = 3f64.sqrt();
        for i in 0..5 {
            let i = i as f64;
            let d = distance(&p(2.0 * i, 0.0), &p(2.0 * i + 1.0, s3)).unwrap();
            assert!((d - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn distance_rejects_mixed_dimensions() {
        let a = p(0.0, 0.0);
        let b = Point::xyz(0.0, 0.0, 1.0);
        assert_eq!(
            distance(&a, &b),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn point_validation() {
        assert!(Point::new(vec![1.0f64]).is_err());
        assert_eq!(Point::new(vec![1.0, f64::NAN]), Err(Error::NonFinite));
        assert_eq!(Point::new(vec![1.0, f64::INFINITY]), Err(Error::NonFinite));
    }

    #[test]
    fn angle_examples() {
        let o = p(0.0, 0.0);
        assert!((angle_at(&o, &p(1.0, 0.0), &p(0.0, 1.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((angle_at(&o, &p(1.0, 0.0), &p(-1.0, 0.0)).unwrap() - PI).abs() < 1e-15);
        let b = p((2.0 * PI / 3.0).cos(), (2.0 * PI / 3.0).sin());
        assert!((angle_at(&o, &p(1.0, 0.0), &b).unwrap() - 2.0 * PI / 3.0).abs() < 1e-15);
        assert_eq!(angle_at(&o, &o, &b), Err(Error::DegenerateRay));
    }

    #[test]
    fn fermat_of_equilateral_is_centroid() {
        let tol = ToleranceConfig::default();
        let s3 = 3f64.sqrt();
        let (a, b, c) = (p(0.0, 0.0), p(1.0, 0.0), p(0.5, s3 / 2.0));
        let f = fermat_point(&a, &b, &c, &tol).unwrap();
        assert!((f[0] - 0.5).abs() < 1e-14);
        assert!((f[1] - s3 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn fermat_returns_obtuse_vertex() {
        let tol = ToleranceConfig::default();
        // angle at c is about 127 degrees
        let (a, b, c) = (p(-1.0, 0.0), p(1.0, 0.0), p(0.0, 0.5));
        assert_eq!(fermat_point(&a, &b, &c, &tol).unwrap(), c);
        // collinear: middle point
        let m = p(0.3, 0.0);
        assert_eq!(fermat_point(&a, &m, &b, &tol).unwrap(), m);
        // coincident pair
        assert_eq!(fermat_point(&a, &a, &b, &tol).unwrap(), a);
    }

    /// Grid search oracle for the right isosceles triangle.
    #[test]
    fn fermat_right_triangle_matches_grid_oracle() {
        let tol = ToleranceConfig::default();
        let (a, b, c) = (p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0));
        let f = fermat_point(&a, &b, &c, &tol).unwrap();
        let total = |x: &Point<f64>| x.dist(&a) + x.dist(&b) + x.dist(&c);

        let mut best = (f64::INFINITY, p(0.0, 0.0));
        let n = 2000;
        for i in 0..=n {
            for j in 0..=n {
                let q = p(i as f64 / n as f64 * 0.5, j as f64 / n as f64 * 0.5);
                let t = total(&q);
                if t < best.0 {
                    best = (t, q);
                }
            }
        }
        // grid resolution 2.5e-4, so the minimizer is located to about that
        assert!(f.dist(&best.1) < 5e-4);
        assert!(total(&f) <= best.0 + 1e-12);
        // closed form sqrt(2 + sqrt 3) = (1 + sqrt 3) / sqrt 2
        let closed = (1.0 + 3f64.sqrt()) / 2f64.sqrt();
        assert!((total(&f) - closed).abs() < 1e-12);
        for (u, v) in [(&a, &b), (&b, &c), (&c, &a)] {
            let ang = angle_at(&f, u, v).unwrap();
            assert!((ang - 2.0 * PI / 3.0).abs() < tol.eps_angle);
        }
    }

    #[test]
    fn fermat_in_three_dimensions() {
        let tol = ToleranceConfig::default();
        let a = Point::xyz(1.0f64, 0.0, 0.0);
        let b = Point::xyz(0.0, 1.0, 0.0);
        let c = Point::xyz(0.0, 0.0, 1.0);
        let f = fermat_point(&a, &b, &c, &tol).unwrap();
        for k in 0..3 {
            assert!((f[k] - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fermat_single_precision() {
        let tol = ToleranceConfig::<f32>::default();
        let f = fermat_point(
            &Point::xy(0.0f32, 0.0),
            &Point::xy(1.0, 0.0),
            &Point::xy(0.0, 1.0),
            &tol,
        )
        .unwrap();
        let total: f32 = [(0.0f32, 0.0f32), (1.0, 0.0), (0.0, 1.0)]
            .iter()
            .map(|&(x, y)| f.dist(&Point::xy(x, y)))
            .sum();
        assert!((total - 1.931_851_6).abs() < 1e-5);
    }

    #[test]
    fn segment_distance_examples() {
        let (s0, s1) = (p(-1.0, 0.0), p(1.0, 0.0));
        assert_eq!(dist_point_to_segment(&p(0.0, 1.0), &s0, &s1).unwrap(), 1.0);
        assert_eq!(dist_point_to_segment(&p(0.25, 0.0), &s0, &s1).unwrap(), 0.0);
        let d = dist_point_to_segment(&p(2.0, 1.0), &s0, &s1).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        // degenerate segment
        assert_eq!(dist_point_to_segment(&p(3.0, 4.0), &p(0.0, 0.0), &p(0.0, 0.0)).unwrap(), 5.0);
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::new(1e-9, 1e-6, 1e-7, 1e-6).is_ok());
        assert!(ToleranceConfig::new(0.0, 1e-6, 1e-7, 1e-6).is_err());
        assert!(ToleranceConfig::new(1e-6, 1e-6, 1e-7, 1e-6).is_err());
        let d = ToleranceConfig::<f64>::default();
        assert_eq!(d.eps_len, 1e-9);
        assert_eq!(d.eps_tie, 1e-7);
    }
}
