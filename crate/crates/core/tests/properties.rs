use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use stmdm::experiments::{heuristic_steiner, random_instance, run_suite, write_runs_csv, GeneratorSpec, Region, Study, SuiteSpec};
use stmdm::geom::{angle_at, dist_point_to_segment, distance, fermat_point};
use stmdm::mdm::{coverage_check, solve_mdm_finite, solve_mdm_numeric, verify_mdm, CompactSetDescriptor, MdmNetwork, NumericConfig};
use stmdm::mst::{mst, steiner_ratio};
use stmdm::steiner::{relax_topology_traced, solve_exact, stationarity_residual};
use stmdm::topology::{count_full_topologies, enumerate_full_topologies};
use stmdm::{Point64, Tolerance64, Topology};

fn pt() -> impl Strategy<Value = Point64> {
    (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y)| Point64::xy(x, y))
}

fn spread(points: &[Point64], min: f64) -> bool {
    points.iter().enumerate().all(|(i, p)| points[i + 1..].iter().all(|q| p.dist(q) > min))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn triangle_inequality(a in pt(), b in pt(), c in pt()) {
        let ab = distance(&a, &b).unwrap();
        let bc = distance(&b, &c).unwrap();
        let ac = distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn segment_distance_below_endpoints(p in pt(), a in pt(), b in pt()) {
        let d = dist_point_to_segment(&p, &a, &b).unwrap();
        prop_assert!(d <= p.dist(&a).min(p.dist(&b)) + 1e-12);
    }

    #[test]
    fn fermat_point_conditions(a in pt(), b in pt(), c in pt()) {
        prop_assume!(spread(&[a.clone(), b.clone(), c.clone()], 0.1));
        let tol = Tolerance64::default();
        let f = fermat_point(&a, &b, &c, &tol).unwrap();
        let total = |q: &Point64| q.dist(&a) + q.dist(&b) + q.dist(&c);
        for v in [&a, &b, &c] {
            prop_assert!(total(&f) <= total(v) + 1e-9);
        }
        let interior = [&a, &b, &c].iter().all(|v| f.dist(v) > 1e-6);
        if interior {
            for (u, v) in [(&a, &b), (&b, &c), (&c, &a)] {
                let ang = angle_at(&f, u, v).unwrap();
                prop_assert!((ang - 2.0 * PI / 3.0).abs() <= 1e-5, "{}", ang);
            }
        }
    }
}

#[test]
fn enumeration_matches_count_and_is_stable() {
    for n in 3..=8 {
        let all = enumerate_full_topologies(n, 9).unwrap();
        assert_eq!(count_full_topologies(n).unwrap(), all.len().into());
        for t in &all {
            assert!(t.is_full());
            assert_eq!(t.n_terminals(), n);
            assert_eq!(t.n_steiner(), n - 2);
            // rebuilding through the checked constructor re-runs the tree checks
            assert!(Topology::new(n, n - 2, t.edges().to_vec()).is_ok());
        }
        assert_eq!(all, enumerate_full_topologies(n, 9).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn relaxation_is_stationary_and_monotone(pts in prop::collection::vec(pt(), 3..=5), pick in 0usize..15) {
        prop_assume!(spread(&pts, 0.2));
        let tol = Tolerance64::default();
        let topos = enumerate_full_topologies(pts.len(), 9).unwrap();
        let topo = &topos[pick % topos.len()];
        let (tree, trace) = relax_topology_traced(&pts, topo, &tol).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        if tree.converged() {
            prop_assert!(stationarity_residual(&tree, &tol) <= 10.0 * tol.eps_len);
        }
    }

    #[test]
    fn exact_below_mst(pts in prop::collection::vec(pt(), 3..=5)) {
        prop_assume!(spread(&pts, 0.2));
        let tol = Tolerance64::default();
        let s = solve_exact(&pts, &tol).unwrap();
        let m = mst(&pts).unwrap().length;
        prop_assert!(s.best.length() <= m + 1e-9);
        prop_assert!(steiner_ratio(&pts, &tol).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn ratio_is_similarity_invariant(
        pts in prop::collection::vec(pt(), 3..=5),
        shift in pt(),
        angle in 0.0f64..(2.0 * PI),
        scale in 0.1f64..10.0,
    ) {
        prop_assume!(spread(&pts, 0.2));
        let tol = Tolerance64::default();
        let (s, c) = angle.sin_cos();
        let moved: Vec<Point64> = pts
            .iter()
            .map(|p| Point64::xy(scale * (c * p[0] - s * p[1]) + shift[0], scale * (s * p[0] + c * p[1]) + shift[1]))
            .collect();
        let a = steiner_ratio(&pts, &tol).unwrap();
        let b = steiner_ratio(&moved, &tol).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn heuristic_between_exact_and_mst(seed in 0u64..10_000, n in 3usize..=7) {
        let tol = Tolerance64::default();
        let pts = random_instance(&Region::<f64>::unit_cube(2), n, seed);
        let h = heuristic_steiner(&pts, &tol).unwrap().length();
        let m = mst(&pts).unwrap().length;
        let e = solve_exact(&pts, &tol).unwrap().best.length();
        prop_assert!(h <= m + 1e-12);
        prop_assert!(h >= e - 1e-9);
    }
}

/// Independent oracle: random Steiner positions for each full topology, the
/// best of which is polished by a shrinking random walk; the MST competes too.
fn brute_force(pts: &[Point64], samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut best = mst(pts).unwrap().length;
    let lo = (pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min));
    let hi = (pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max), pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max));
    let n = pts.len();
    let topos = enumerate_full_topologies(n, 9).unwrap();
    let per = samples / topos.len();
    for t in &topos {
        let len = |st: &[Point64]| -> f64 {
            let node = |i: usize| if i < n { &pts[i] } else { &st[i - n] };
            t.edges().iter().map(|&(u, v)| node(u).dist(node(v))).sum()
        };
        let mut top: (f64, Vec<Point64>) = (f64::INFINITY, Vec::new());
        for _ in 0..per {
            let st: Vec<Point64> = (0..n - 2)
                .map(|_| Point64::xy(rng.gen_range(lo.0..=hi.0), rng.gen_range(lo.1..=hi.1)))
                .collect();
            let l = len(&st);
            if l < top.0 {
                top = (l, st);
            }
        }
        let mut step = 0.05 * (hi.0 - lo.0).max(hi.1 - lo.1);
        let mut fails = 0;
        while step > 1e-10 {
            let cand: Vec<Point64> = top
                .1
                .iter()
                .map(|p| Point64::xy(p[0] + step * rng.gen_range(-1.0..1.0), p[1] + step * rng.gen_range(-1.0..1.0)))
                .collect();
            let l = len(&cand);
            if l < top.0 {
                top = (l, cand);
                fails = 0;
            } else {
                fails += 1;
                if fails == 100 {
                    step *= 0.5;
                    fails = 0;
                }
            }
        }
        best = best.min(top.0);
    }
    best
}

#[test]
fn exact_beats_random_search() {
    let tol = Tolerance64::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..4 {
        let n = 3 + case % 2;
        let pts = random_instance(&Region::<f64>::unit_cube(2), n, 100 + case as u64);
        let exact = solve_exact(&pts, &tol).unwrap().best.length();
        let oracle = brute_force(&pts, 1_000_000, &mut rng);
        let diam = stmdm::geom::diameter(&pts);
        assert!(exact <= oracle + 1e-9, "{exact} vs {oracle}");
        assert!(exact >= oracle - 1e-3 * diam, "{exact} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn finite_mdm_is_feasible_tree_with_wide_angles(pts in prop::collection::vec(pt(), 2..=5), r in 0.05f64..0.5) {
        prop_assume!(spread(&pts, 1.0));
        let tol = Tolerance64::default();
        let sol = solve_mdm_finite(&pts, r, &tol).unwrap();
        let cov = coverage_check(&sol.network, &pts, r, &tol).unwrap();
        prop_assert!(cov.covered, "defect {}", cov.max_defect);
        let rep = verify_mdm(&sol.network, Some(pts.len()), &tol);
        prop_assert!(!rep.has_cycle);
        prop_assert!(rep.connected);
        if sol.converged {
            if let Some(a) = rep.min_angle() {
                prop_assert!(a >= 2.0 * PI / 3.0 - 1e-5, "{}", a);
            }
        }
    }
}

#[test]
fn finite_mdm_shrinks_toward_steiner_tree() {
    let tol = Tolerance64::default();
    let tri = [Point64::xy(0.0, 0.0), Point64::xy(1.0, 0.0), Point64::xy(0.5, 3f64.sqrt() / 2.0)];
    let steiner = solve_exact(&tri, &tol).unwrap().best.length();
    let mut gaps = Vec::new();
    for r in [0.1, 0.05, 0.025] {
        let l = solve_mdm_finite(&tri, r, &tol).unwrap().length;
        gaps.push(((l + 3.0 * r - steiner).abs(), r));
    }
    let c = gaps.iter().map(|(g, r)| g / (r * r)).fold(0.0, f64::max);
    for (g, r) in gaps {
        assert!(g <= c * r * r + 1e-12);
    }
    assert!(c < 1.0);
}

#[test]
fn penalty_epochs_descend() {
    let tol = Tolerance64::default();
    let desc = CompactSetDescriptor::Circle { radius: 3.0 };
    let init = MdmNetwork::polyline(vec![Point64::xy(-1.0, -1.0), Point64::xy(1.0, -1.0), Point64::xy(1.0, 1.0)]).unwrap();
    let cfg = NumericConfig {
        iters_per_epoch: 60,
        ..NumericConfig::default()
    };
    let out = solve_mdm_numeric(&desc, 1.0, &init, &cfg, &tol).unwrap();
    for trace in &out.objective_trace {
        for w in trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
    let rep = verify_mdm(&out.network, None, &tol);
    // loops are allowed but must be reported
    let (_, cycle) = out.network.components_and_cycle();
    assert_eq!(rep.has_cycle, cycle);
}

#[test]
fn suite_is_deterministic() {
    let spec = SuiteSpec {
        studies: vec![Study {
            generator: GeneratorSpec::Random {
                n: vec![20, 40],
                d: 2,
                reps: 3,
                seed: 5,
            },
            solver: None,
        }],
        timing: false,
    };
    let tol = Tolerance64::default();
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_runs_csv(&run_suite(&spec, &tol), &mut a).unwrap();
    write_runs_csv(&run_suite(&spec, &tol), &mut b).unwrap();
    assert_eq!(a, b);
}
