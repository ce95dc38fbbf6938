//! Minimum spanning trees, Steiner ratios and the simplex / sausage generators.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geom::{centroid, Point, ToleranceConfig};
use crate::scalar::Scalar;
use crate::steiner::{check_points, relax_topology, solve_exact_with, EmbeddedTree, SolveOptions};
use crate::topology::caterpillar;

#[derive(Debug, Clone, PartialEq)]
pub struct MstResult<T> {
    pub edges: Vec<(usize, usize)>,
    pub length: T,
}

/// Prim's algorithm on the complete graph; ties go to the lower index.
pub fn mst<T: Scalar>(points: &[Point<T>]) -> Result<MstResult<T>> {
    check_points(points)?;
    let n = points.len();
    if n < 2 {
        return Err(invalid("points", "need at least two points"));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![T::infinity(); n];
    let mut parent = vec![0usize; n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = points[0].dist(&points[j]);
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut length = T::zero();
    for _ in 1..n {
        let mut pick = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (pick == usize::MAX || best[j] < best[pick]) {
                pick = j;
            }
        }
        in_tree[pick] = true;
        edges.push((parent[pick].min(pick), parent[pick].max(pick)));
        length = length + best[pick];
        for j in 0..n {
            if !in_tree[j] {
                let d = points[pick].dist(&points[j]);
                if d < best[j] {
                    best[j] = d;
                    parent[j] = pick;
                }
            }
        }
    }
    Ok(MstResult { edges, length })
}

/// Steiner tree length over MST length, with exact solving.
pub fn steiner_ratio<T: Scalar>(points: &[Point<T>], tol: &ToleranceConfig<T>) -> Result<T> {
    Ok(ratio_report(points, tol, &SolveOptions::default())?.ratio)
}

#[derive(Debug, Clone)]
pub struct RatioReport<T> {
    pub mst_length: T,
    pub steiner_length: T,
    pub ratio: T,
    /// True when only the caterpillar topology was relaxed, so the ratio is an upper bound.
    pub restricted: bool,
    pub tree: EmbeddedTree<T>,
}

/// Exact ratio when `n <= n_max - 2`, otherwise the caterpillar bound.
pub fn ratio_report<T: Scalar>(
    points: &[Point<T>],
    tol: &ToleranceConfig<T>,
    opts: &SolveOptions,
) -> Result<RatioReport<T>> {
    let m = mst(points)?;
    if m.length <= T::zero() {
        return Err(invalid("points", "all points coincide"));
    }
    let limit = opts.n_max.saturating_sub(2).max(2);
    let (tree, restricted) = if points.len() <= limit {
        (solve_exact_with(points, tol, opts)?.best, false)
    } else {
        (restricted_tree(points, tol)?, true)
    };
    Ok(RatioReport {
        mst_length: m.length,
        steiner_length: tree.length(),
        ratio: tree.length() / m.length,
        restricted,
        tree,
    })
}

/// Relaxes the caterpillar topology that takes the points in index order.
pub fn restricted_tree<T: Scalar>(points: &[Point<T>], tol: &ToleranceConfig<T>) -> Result<EmbeddedTree<T>> {
    if points.len() < 3 {
        return Ok(solve_exact_with(points, tol, &SolveOptions::default())?.best);
    }
    relax_topology(points, &caterpillar(points.len())?, tol)
}

/// Caterpillar-restricted ratio, an upper bound on the true ratio.
pub fn restricted_ratio<T: Scalar>(points: &[Point<T>], tol: &ToleranceConfig<T>) -> Result<T> {
    let m = mst(points)?;
    Ok(restricted_tree(points, tol)?.length() / m.length)
}

/// Vertices of the regular unit-edge simplex in `R^d`.
pub fn simplex_points<T: Scalar>(d: usize) -> Result<Vec<Point<T>>> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { min: 2, found: d });
    }
    let mut pts = vec![Point::origin(d)];
    for k in 1..=d {
        // circumradius of the regular simplex on k unit-spaced vertices
        let kf = T::from_usize_lossy(k);
        let circ_sq = (kf - T::one()) / (T::lit(2.0) * kf);
        let h = (T::one() - circ_sq).sqrt();
        let mut c = centroid(&pts).into_coords();
        c[k - 1] = h;
        pts.push(Point::from_vec_unchecked(c));
    }
    Ok(pts)
}

/// Face-to-face glued regular simplices: each new point mirrors the oldest
/// vertex of the last simplex through its opposite face.
pub fn sausage_points<T: Scalar>(d: usize, n: usize) -> Result<Vec<Point<T>>> {
    if !(2..=3).contains(&d) {
        return Err(Error::OutOfRange {
            what: "d",
            value: d,
            min: 2,
            max: 3,
        });
    }
    if n < d + 1 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: d + 1,
            max: usize::MAX,
        });
    }
    let mut pts = simplex_points(d)?;
    while pts.len() < n {
        let k = pts.len();
        let face = &pts[k - d..];
        let c = centroid(face);
        let oldest = &pts[k - d - 1];
        pts.push(c.offset(&(&c - oldest), T::one()));
    }
    Ok(pts)
}

/// One line of a ratio scan.
#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub instance_id: String,
    pub n: usize,
    pub d: usize,
    pub mst_length: f64,
    pub steiner_length: f64,
    pub ratio: f64,
    pub restricted: bool,
}

impl RatioRow {
    pub fn new<T: Scalar>(instance_id: impl Into<String>, points: &[Point<T>], report: &RatioReport<T>) -> Self {
        Self {
            instance_id: instance_id.into(),
            n: points.len(),
            d: points.first().map_or(0, Point::dim),
            mst_length: report.mst_length.as_f64(),
            steiner_length: report.steiner_length.as_f64(),
            ratio: report.ratio.as_f64(),
            restricted: report.restricted,
        }
    }
}

pub fn write_ratio_csv<W: Write>(rows: &[RatioRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::xy(x, y)
    }

    fn pairwise_unit(pts: &[Point<f64>]) {
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert!((pts[i].dist(&pts[j]) - 1.0).abs() < 1e-12, "{i} {j}");
            }
        }
    }

    #[test]
    fn mst_examples() {
        let two = mst(&[p(0.0, 0.0), p(1.0, 1.0)]).unwrap();
        assert_eq!(two.edges, vec![(0, 1)]);
        let tri = mst(&simplex_points::<f64>(2).unwrap()).unwrap();
        assert!((tri.length - 2.0).abs() < 1e-15);
        let sq = mst(&[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
        assert_eq!(sq.length, 3.0);
        // 3 is equally close to 0 and 2; the earlier parent wins
        assert_eq!(sq.edges, vec![(0, 1), (1, 2), (0, 3)]);
    }

    #[test]
    fn mst_allows_duplicates() {
        let m = mst(&[p(0.0, 0.0), p(0.0, 0.0), p(2.0, 0.0)]).unwrap();
        assert_eq!(m.length, 2.0);
        assert!(mst(&[p(0.0, 0.0)]).is_err());
    }

    #[test]
    fn mst_matches_kruskal_oracle() {
        let pts: Vec<_> = (0..12)
            .map(|i| {
                let f = i as f64;
                p((f * 1.7).sin() * 3.0, (f * 0.9).cos() * 2.0 + f * 0.1)
            })
            .collect();
        let mut pairs = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                pairs.push((pts[i].dist(&pts[j]), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut comp: Vec<usize> = (0..pts.len()).collect();
        let mut total = 0.0;
        for (d, i, j) in pairs {
            let (ci, cj) = (comp[i], comp[j]);
            if ci != cj {
                total += d;
                for c in comp.iter_mut() {
                    if *c == cj {
                        *c = ci;
                    }
                }
            }
        }
        assert!((mst(&pts).unwrap().length - total).abs() < 1e-12);
    }

    #[test]
    fn simplex_is_regular() {
        for d in 2..=6 {
            let s = simplex_points::<f64>(d).unwrap();
            assert_eq!(s.len(), d + 1);
            pairwise_unit(&s);
        }
        assert!(simplex_points::<f64>(1).is_err());
    }

    #[test]
    fn sausage_windows_are_regular() {
        let s = sausage_points::<f64>(3, 6).unwrap();
        assert_eq!(&s[..4], &simplex_points::<f64>(3).unwrap()[..]);
        for w in s.windows(4) {
            pairwise_unit(w);
        }
        let s2 = sausage_points::<f64>(2, 7).unwrap();
        for w in s2.windows(3) {
            pairwise_unit(w);
        }
        assert!(sausage_points::<f64>(4, 6).is_err());
        assert!(sausage_points::<f64>(3, 3).is_err());
    }

    #[test]
    fn planar_ratios() {
        let tol = ToleranceConfig::default();
        let tri = simplex_points::<f64>(2).unwrap();
        assert!((steiner_ratio(&tri, &tol).unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-9);
        assert_eq!(steiner_ratio(&[p(0.0, 0.0), p(2.0, 0.0)], &tol).unwrap(), 1.0);
        let sq = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        assert!((steiner_ratio(&sq, &tol).unwrap() - (1.0 + 3f64.sqrt()) / 3.0).abs() < 1e-9);
    }

    #[test]
    fn csv_header_and_rows() {
        let tol = ToleranceConfig::default();
        let tri = simplex_points::<f64>(2).unwrap();
        let rep = ratio_report(&tri, &tol, &SolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_ratio_csv(&[RatioRow::new("tri", &tri, &rep)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("instance_id,n,d,mst_length,steiner_length,ratio,restricted\n"));
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(&row[..3], &["tri", "3", "2"]);
        assert!((row[3].parse::<f64>().unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(row[6], "false");
    }
}
