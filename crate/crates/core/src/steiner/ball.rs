//! Measurements of a tree inside a ball `B_{t r}(x)`.

use super::EmbeddedTree;
use crate::error::{invalid, Error, Result};
use crate::geom::{Point, ToleranceConfig};
use crate::scalar::Scalar;

fn check_ball<T: Scalar>(x: &Point<T>, dim: usize, r: T, t: T) -> Result<()> {
    if x.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    if !(r > T::zero()) || !r.is_finite() {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    if !(t > T::zero() && t < T::one()) {
        return Err(invalid("t", format!("must lie in (0, 1), got {t}")));
    }
    Ok(())
}

/// Parameters `s` in which the line `a + s (b - a)` meets the sphere, if any.
fn sphere_params<T: Scalar>(a: &Point<T>, b: &Point<T>, x: &Point<T>, rho: T) -> Option<(T, T)> {
    let d = b - a;
    let w = a - x;
    let qa = d.norm_sq();
    if qa == T::zero() {
        return None;
    }
    let qb = w.dot(&d);
    let qc = w.norm_sq() - rho * rho;
    let disc = qb * qb - qa * qc;
    if disc < T::zero() {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-qb - sq) / qa, (-qb + sq) / qa))
}

/// Points where the sphere of radius `t r` about `x` meets the tree.
///
/// Shared crossing points (at a vertex) are counted once. Returns
/// [`Error::NearTangent`] when an edge grazes the sphere within
/// `coverage_eps` without a clean transversal crossing.
pub fn count_crossings<T: Scalar>(
    tree: &EmbeddedTree<T>,
    x: &Point<T>,
    r: T,
    t: T,
    tol: &ToleranceConfig<T>,
) -> Result<usize> {
    check_ball(x, tree.dim(), r, t)?;
    let rho = t * r;
    let merge = tol.eps_len * tree.diameter().max(rho);
    let mut hits: Vec<Point<T>> = Vec::new();
    let mut push = |p: Point<T>| {
        if !hits.iter().any(|h| h.dist(&p) <= merge) {
            hits.push(p);
        }
    };
    for (a, b) in tree.segments() {
        let len = a.dist(b);
        if len == T::zero() {
            continue;
        }
        let (s_near, near) = crate::geom::closest_on_segment(x, a, b);
        let dmin = near.dist(x);
        let interior = s_near > T::zero() && s_near < T::one();
        if interior && (dmin - rho).abs() <= tol.coverage_eps {
            return Err(Error::NearTangent);
        }
        let Some((s0, s1)) = sphere_params(a, b, x, rho) else { continue };
        for s in [s0, s1] {
            if s >= T::zero() && s <= T::one() {
                push(a.lerp(b, s));
            }
        }
    }
    Ok(hits.len())
}

/// Branching nodes (degree at least 3 after contraction) strictly inside `B_{t r}(x)`.
pub fn count_branching_in_ball<T: Scalar>(
    tree: &EmbeddedTree<T>,
    x: &Point<T>,
    r: T,
    t: T,
    tol: &ToleranceConfig<T>,
) -> Result<usize> {
    check_ball(x, tree.dim(), r, t)?;
    let rho = t * r;
    let c = tree.contracted(tol);
    Ok(c.degrees()
        .iter()
        .zip(&c.positions)
        .filter(|(&deg, p)| deg >= 3 && p.dist(x) < rho)
        .count())
}

/// Length of the tree inside the closed ball `B_{t r}(x)`, by exact clipping.
pub fn length_in_ball<T: Scalar>(tree: &EmbeddedTree<T>, x: &Point<T>, r: T, t: T) -> Result<T> {
    check_ball(x, tree.dim(), r, t)?;
    let rho = t * r;
    Ok(tree
        .segments()
        .map(|(a, b)| match sphere_params(a, b, x, rho) {
            Some((s0, s1)) => {
                let lo = s0.max(T::zero());
                let hi = s1.min(T::one());
                if hi > lo {
                    (hi - lo) * a.dist(b)
                } else {
                    T::zero()
                }
            }
            None => T::zero(),
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Topology;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::xy(x, y)
    }

    fn diameter_segment() -> EmbeddedTree<f64> {
        EmbeddedTree::new(Topology::segment(), vec![p(-2.0, 0.0), p(2.0, 0.0)], vec![]).unwrap()
    }

    #[test]
    fn segment_through_centre() {
        let tol = ToleranceConfig::default();
        let tree = diameter_segment();
        let o = p(0.0, 0.0);
        assert_eq!(count_crossings(&tree, &o, 2.0, 0.5, &tol).unwrap(), 2);
        assert!((length_in_ball(&tree, &o, 2.0, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(count_branching_in_ball(&tree, &o, 2.0, 0.5, &tol).unwrap(), 0);
    }

    #[test]
    fn tree_inside_or_away() {
        let tol = ToleranceConfig::default();
        let tree = diameter_segment();
        assert_eq!(count_crossings(&tree, &p(0.0, 0.0), 10.0, 0.5, &tol).unwrap(), 0);
        assert_eq!(count_crossings(&tree, &p(0.0, 9.0), 4.0, 0.5, &tol).unwrap(), 0);
        assert_eq!(length_in_ball(&tree, &p(0.0, 9.0), 4.0, 0.5).unwrap(), 0.0);
        assert_eq!(length_in_ball(&tree, &p(0.0, 0.0), 10.0, 0.5).unwrap(), 4.0);
    }

    #[test]
    fn tangent_edge_is_flagged() {
        let tol = ToleranceConfig::default();
        let tree = diameter_segment();
        let err = count_crossings(&tree, &p(0.0, 1.0), 2.0, 0.5, &tol).unwrap_err();
        assert_eq!(err, Error::NearTangent);
    }

    #[test]
    fn vertex_on_sphere_counts_once() {
        let tol = ToleranceConfig::default();
        let topo = Topology::tripod();
        let tree = EmbeddedTree::new(topo, vec![p(-1.0, 0.0), p(1.0, 0.0), p(0.0, 3.0)], vec![p(0.0, 0.0)]).unwrap();
        // circle of radius 1 about the origin passes through both bottom terminals
        assert_eq!(count_crossings(&tree, &p(0.0, 0.0), 2.0, 0.5, &tol).unwrap(), 3);
    }

    #[test]
    fn parameter_checks() {
        let tol = ToleranceConfig::default();
        let tree = diameter_segment();
        assert!(count_crossings(&tree, &p(0.0, 0.0), 1.0, 1.0, &tol).is_err());
        assert!(length_in_ball(&tree, &p(0.0, 0.0), -1.0, 0.5).is_err());
        assert!(count_branching_in_ball(&tree, &Point::xyz(0.0, 0.0, 0.0), 1.0, 0.5, &tol).is_err());
    }
}
