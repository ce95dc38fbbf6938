use rayon::prelude::*;

use super::MdmNetwork;
use crate::error::{invalid, Error, Result};
use crate::geom::{diameter, Point, ToleranceConfig};
use crate::scalar::Scalar;
use crate::steiner::check_points;
use crate::steiner::relax::TreeProblem;
use crate::topology::{enumerate_full_topologies, Topology, DEFAULT_N_MAX};

#[derive(Debug, Clone)]
pub struct FiniteMdm<T> {
    pub network: MdmNetwork<T>,
    pub length: T,
    /// Topology of the winning tree; `None` for one or two points.
    pub topology: Option<Topology>,
    pub converged: bool,
}

/// Shortest connected network meeting every closed ball `B_r(m_i)`.
///
/// Every full topology is relaxed with its terminals free on their balls;
/// overlapping balls need no special handling because leaf edges may shrink
/// to nothing. When all balls share a point the result is that single point.
pub fn solve_mdm_finite<T: Scalar>(points: &[Point<T>], r: T, tol: &ToleranceConfig<T>) -> Result<FiniteMdm<T>> {
    check_points(points)?;
    if !(r > T::zero()) || !r.is_finite() {
        return Err(invalid("r", "must be positive"));
    }
    let n = points.len();
    if n > DEFAULT_N_MAX {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 1,
            max: DEFAULT_N_MAX,
        });
    }
    if n == 1 {
        return Ok(FiniteMdm {
            network: MdmNetwork::point(points[0].clone()),
            length: T::zero(),
            topology: None,
            converged: true,
        });
    }
    if n == 2 {
        let (a, b) = (&points[0], &points[1]);
        let d = a.dist(b);
        let network = if d <= r + r {
            MdmNetwork::point(a.lerp(b, T::lit(0.5)))
        } else {
            MdmNetwork::polyline(vec![a.lerp(b, r / d), b.lerp(a, r / d)])?
        };
        return Ok(FiniteMdm {
            length: network.length(),
            network,
            topology: None,
            converged: true,
        });
    }
    let scale = diameter(points).max(r);
    let topologies = enumerate_full_topologies(n, DEFAULT_N_MAX)?;
    let mut runs: Vec<_> = topologies
        .par_iter()
        .map(|t| {
            let out = TreeProblem::new(t, points, r, scale, tol.eps_len).solve();
            (t.canonical_key(), t, out)
        })
        .collect();
    runs.sort_by(|a, b| a.0.cmp(&b.0));
    let (_, topo, out) = runs
        .into_iter()
        .fold(None, |best: Option<(_, _, crate::steiner::relax::RelaxOutput<T>)>, cand| match best {
            Some(b) if b.2.length <= cand.2.length => Some(b),
            _ => Some(cand),
        })
        .expect("at least one topology");
    let problem = TreeProblem::new(topo, points, r, scale, tol.eps_len);
    let mut vertices = out.steiner.clone();
    let mut edges = Vec::new();
    for &(u, v) in topo.edges() {
        let (term, st) = match (topo.is_terminal(u), topo.is_terminal(v)) {
            (false, false) => {
                edges.push((u - n, v - n));
                continue;
            }
            (true, false) => (u, v - n),
            (false, true) => (v, u - n),
            (true, true) => unreachable!("full topologies have no terminal-terminal edge"),
        };
        vertices.push(problem.attach(term, &out.steiner[st]));
        edges.push((st, vertices.len() - 1));
    }
    let network = MdmNetwork::from_parts(vertices, edges).contracted(tol.eps_len * scale);
    Ok(FiniteMdm {
        length: network.length(),
        network,
        topology: Some(topo.clone()),
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdm::{coverage_check, verify_mdm};

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::xy(x, y)
    }

    #[test]
    fn two_disjoint_disks() {
        let tol = ToleranceConfig::default();
        let sol = solve_mdm_finite(&[p(0.0, 0.0), p(3.0, 4.0)], 1.0, &tol).unwrap();
        assert!((sol.length - 3.0).abs() < 1e-15);
        assert!(sol.network.vertices()[0].dist(&p(0.6, 0.8)) < 1e-15);
    }

    #[test]
    fn overlapping_disks_need_no_network() {
        let tol = ToleranceConfig::default();
        let sol = solve_mdm_finite(&[p(0.0, 0.0), p(1.5, 0.0)], 1.0, &tol).unwrap();
        assert_eq!(sol.length, 0.0);
        assert!(sol.network.edges().is_empty());
    }

    #[test]
    fn triangle_arms_shrink_by_r() {
        let tol = ToleranceConfig::default();
        let t = [p(0.0, 0.0), p(1.0, 0.0), p(0.5, 3f64.sqrt() / 2.0)];
        let sol = solve_mdm_finite(&t, 0.1, &tol).unwrap();
        assert!((sol.length - (3f64.sqrt() - 0.3)).abs() < 1e-9, "{}", sol.length);
        assert!(sol.converged);
        let rep = verify_mdm(&sol.network, Some(3), &tol);
        assert_eq!(rep.segment_count, 3);
        assert!((rep.min_angle().unwrap() - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-6);
        assert!(coverage_check(&sol.network, &t, 0.1, &tol).unwrap().covered);
    }

    #[test]
    fn three_balls_with_common_point() {
        let tol = ToleranceConfig::default();
        let t = [p(0.0, 0.0), p(1.0, 0.0), p(0.5, 0.8)];
        let sol = solve_mdm_finite(&t, 0.7, &tol).unwrap();
        assert!(sol.length < 1e-9);
        assert!(coverage_check(&sol.network, &t, 0.7, &tol).unwrap().covered);
    }

    #[test]
    fn rejects_bad_radius() {
        let tol = ToleranceConfig::default();
        assert!(solve_mdm_finite(&[p(0.0, 0.0)], 0.0, &tol).is_err());
    }
}
