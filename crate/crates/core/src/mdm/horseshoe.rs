//! Horseshoe networks: an arc parallel to `M` at distance `r`, opened by a gap
//! whose ends continue along tangent segments.

use super::{coverage_check, sample_compact, CompactSetDescriptor, MdmNetwork};
use crate::error::{invalid, Error, Result};
use crate::geom::{Point, ToleranceConfig};
use crate::scalar::Scalar;

/// Largest angular step of the circumscribed polygon standing in for an arc;
/// keeps its deviation from the arc below `1e-7` of the radius.
const ARC_STEP: f64 = 8.9e-4;
const GAP_GRID: usize = 2048;

#[derive(Debug, Clone)]
pub struct Horseshoe<T> {
    pub network: MdmNetwork<T>,
    pub length: T,
    /// Half-angle of the gap, measured at the centre of the gapped arc.
    pub half_gap: T,
    pub tangent_len: T,
}

fn check_radii<T: Scalar>(big_r: T, r: T) -> Result<()> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(invalid("r", "must be positive"));
    }
    if !(big_r > r) || !big_r.is_finite() {
        return Err(Error::Infeasible(format!("need R > r, got R = {big_r}, r = {r}")));
    }
    Ok(())
}

/// Shortest tangent segment covering the part of the circle of radius `big_r`
/// within `phi` of the gap centre (angle 0); `None` if no length suffices.
///
/// The requirement is maximized over a grid of angles and the best grid cell
/// is then refined by golden-section search.
fn tangent_len<T: Scalar>(big_r: T, r: T, phi: T, grid: usize) -> Option<T> {
    let rho = big_r - r;
    let ax = rho * phi.cos();
    let ay = rho * phi.sin();
    let (dx, dy) = (phi.sin(), -phi.cos());
    let need_at = |th: T| -> Option<T> {
        let (wx, wy) = (big_r * th.cos() - ax, big_r * th.sin() - ay);
        let proj = wx * dx + wy * dy;
        let perp_sq = (wx * wx + wy * wy - proj * proj).max(T::zero());
        // the gap edge itself sits at distance exactly r; allow for rounding
        if perp_sq > r * r * (T::one() + T::lit(1e-12)) {
            return None;
        }
        Some(proj - (r * r - perp_sq).max(T::zero()).sqrt())
    };
    let h = phi / T::from_usize_lossy(grid);
    let mut need = T::neg_infinity();
    let mut at = 0;
    for k in 0..=grid {
        let v = need_at(h * T::from_usize_lossy(k))?;
        if v > need {
            need = v;
            at = k;
        }
    }
    if h > T::zero() {
        let g = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
        let mut a = h * T::from_usize_lossy(at.saturating_sub(1));
        let mut b = h * T::from_usize_lossy((at + 1).min(grid));
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            let (fc, fd) = (need_at(c)?, need_at(d)?);
            need = need.max(fc).max(fd);
            if fc >= fd {
                b = d;
            } else {
                a = c;
            }
        }
    }
    Some(need.max(T::zero()))
}

fn gap_cost<T: Scalar>(big_r: T, r: T, phi: T) -> T {
    match tangent_len(big_r, r, phi, GAP_GRID / 8) {
        Some(l) => T::lit(2.0) * ((big_r - r) * (T::PI() - phi) + l),
        None => T::infinity(),
    }
}

/// Golden-section search for the half-gap on `[0, phi_max]`.
fn best_half_gap<T: Scalar>(big_r: T, r: T, phi_max: T) -> T {
    let mut hi = phi_max;
    if !gap_cost(big_r, r, hi).is_finite() {
        // shrink to the feasible part first
        let mut lo = T::zero();
        for _ in 0..80 {
            let mid = (lo + hi) * T::lit(0.5);
            if gap_cost(big_r, r, mid).is_finite() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi = lo;
    }
    let g = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut a = T::zero();
    let mut b = hi;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = gap_cost(big_r, r, c);
    let mut fd = gap_cost(big_r, r, d);
    for _ in 0..200 {
        if (b - a).abs() <= T::epsilon() * T::lit(16.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = gap_cost(big_r, r, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = gap_cost(big_r, r, d);
        }
    }
    let mid = (a + b) * T::lit(0.5);
    // the endpoints of the bracket are candidates too
    [T::zero(), mid, hi]
        .into_iter()
        .min_by(|x, y| gap_cost(big_r, r, *x).partial_cmp(&gap_cost(big_r, r, *y)).unwrap())
        .unwrap_or(mid)
}

/// Circumscribed polygon of the arc `[from, to]` around `centre`: tangent
/// point, corners, tangent point.
fn arc_polygon<T: Scalar>(centre: (T, T), rho: T, from: T, to: T) -> Vec<Point<T>> {
    let span = to - from;
    let k = (span / T::lit(ARC_STEP)).ceil().to_usize().unwrap_or(1).max(1);
    let step = span / T::from_usize_lossy(k);
    let corner = rho / (step * T::lit(0.5)).cos();
    let at = |rad: T, a: T| Point::xy(centre.0 + rad * a.cos(), centre.1 + rad * a.sin());
    let mut out = Vec::with_capacity(k + 2);
    out.push(at(rho, from));
    for i in 0..k {
        let a = from + step * (T::from_usize_lossy(i) + T::lit(0.5));
        out.push(at(corner, a));
    }
    out.push(at(rho, to));
    out
}

fn push_unique<T: Scalar>(path: &mut Vec<Point<T>>, pts: Vec<Point<T>>) {
    for p in pts {
        if path.last().is_none_or(|q| q.dist(&p) > T::zero()) {
            path.push(p);
        }
    }
}

/// Tangent endpoint leaving the arc at angle `phi` (upper) or `-phi` (lower).
fn tangent_end<T: Scalar>(centre: (T, T), rho: T, phi: T, len: T, upper: bool) -> Point<T> {
    let s = if upper { T::one() } else { -T::one() };
    let (ax, ay) = (centre.0 + rho * phi.cos(), centre.1 + s * rho * phi.sin());
    Point::xy(ax + len * phi.sin(), ay - s * len * phi.cos())
}

fn finish<T: Scalar>(
    path: Vec<Point<T>>,
    desc: &CompactSetDescriptor<T>,
    r: T,
    tol: &ToleranceConfig<T>,
    half_gap: T,
    tangent_len: T,
) -> Result<Horseshoe<T>> {
    let network = MdmNetwork::polyline(path)?;
    let density = (desc.default_density(r) * 8).max(4096);
    let samples = sample_compact(desc, density)?;
    let cov = coverage_check(&network, &samples, r, tol)?;
    if !cov.covered {
        return Err(Error::Infeasible(format!("horseshoe misses M by {}", cov.max_defect)));
    }
    Ok(Horseshoe {
        length: network.length(),
        network,
        half_gap,
        tangent_len,
    })
}

/// Optimal horseshoe for the circle of radius `big_r` about the origin, gap
/// centred on the positive x-axis.
pub fn horseshoe_circle<T: Scalar>(big_r: T, r: T, tol: &ToleranceConfig<T>) -> Result<Horseshoe<T>> {
    check_radii(big_r, r)?;
    let phi = best_half_gap(big_r, r, T::PI());
    circle_with_gap(big_r, r, phi, tol)
}

/// Horseshoe for the circle with a prescribed half-gap.
pub fn circle_with_gap<T: Scalar>(big_r: T, r: T, phi: T, tol: &ToleranceConfig<T>) -> Result<Horseshoe<T>> {
    check_radii(big_r, r)?;
    let rho = big_r - r;
    let len = tangent_len(big_r, r, phi, GAP_GRID).ok_or_else(|| Error::Infeasible("gap too wide".into()))?;
    let o = (T::zero(), T::zero());
    let mut path = Vec::new();
    if len > T::zero() {
        path.push(tangent_end(o, rho, phi, len, true));
    }
    push_unique(&mut path, arc_polygon(o, rho, phi, T::TAU() - phi));
    if len > T::zero() {
        path.push(tangent_end(o, rho, phi, len, false));
    }
    finish(path, &CompactSetDescriptor::Circle { radius: big_r }, r, tol, phi, len)
}

/// Horseshoe for the stadium: the inner parallel curve at distance `r` with
/// the gap on the right cap. Reduces to [`horseshoe_circle`] for `seg_len = 0`.
pub fn horseshoe_stadium<T: Scalar>(big_r: T, r: T, seg_len: T, tol: &ToleranceConfig<T>) -> Result<Horseshoe<T>> {
    check_radii(big_r, r)?;
    if !(seg_len >= T::zero()) || !seg_len.is_finite() {
        return Err(invalid("seg_len", "must be non-negative"));
    }
    if seg_len == T::zero() {
        return horseshoe_circle(big_r, r, tol);
    }
    let phi = best_half_gap(big_r, r, T::FRAC_PI_2());
    let rho = big_r - r;
    let len = tangent_len(big_r, r, phi, GAP_GRID).ok_or_else(|| Error::Infeasible("gap too wide".into()))?;
    let h = seg_len * T::lit(0.5);
    let right = (h, T::zero());
    let left = (-h, T::zero());
    let half_pi = T::FRAC_PI_2();
    let mut path = Vec::new();
    if len > T::zero() {
        path.push(tangent_end(right, rho, phi, len, true));
    }
    push_unique(&mut path, arc_polygon(right, rho, phi, half_pi));
    push_unique(&mut path, arc_polygon(left, rho, half_pi, half_pi * T::lit(3.0)));
    push_unique(&mut path, arc_polygon(right, rho, half_pi * T::lit(3.0), T::TAU() - phi));
    if len > T::zero() {
        path.push(tangent_end(right, rho, phi, len, false));
    }
    finish(path, &CompactSetDescriptor::Stadium { radius: big_r, seg_len }, r, tol, phi, len)
}
