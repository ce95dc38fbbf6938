//! Uniform grid over the first two coordinates for nearest-segment queries.

use crate::scalar::Scalar;

pub(crate) struct SegmentIndex<'a, T> {
    x: &'a [T],
    dim: usize,
    edges: &'a [(usize, usize)],
    origin: (T, T),
    cell: T,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

/// Closest point of the network: squared distance, edge and parameter.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hit<T> {
    pub dist_sq: T,
    pub edge: usize,
    pub s: T,
}

impl<'a, T: Scalar> SegmentIndex<'a, T> {
    /// `x` holds vertex coordinates back to back, `dim` per vertex.
    pub fn new(x: &'a [T], dim: usize, edges: &'a [(usize, usize)]) -> Self {
        let mut lo = (T::infinity(), T::infinity());
        let mut hi = (T::neg_infinity(), T::neg_infinity());
        for &(u, v) in edges {
            for w in [u, v] {
                let (px, py) = (x[w * dim], x[w * dim + 1]);
                lo = (lo.0.min(px), lo.1.min(py));
                hi = (hi.0.max(px), hi.1.max(py));
            }
        }
        if edges.is_empty() {
            lo = (T::zero(), T::zero());
            hi = lo;
        }
        let span = (hi.0 - lo.0).max(hi.1 - lo.1);
        let side = T::from_usize_lossy(edges.len().max(1)).sqrt();
        let mut cell = span / side;
        if !(cell > T::zero()) {
            cell = T::one();
        }
        let count = |w: T| (w / cell).floor().to_usize().unwrap_or(0) + 1;
        let (nx, ny) = (count(hi.0 - lo.0), count(hi.1 - lo.1));
        let mut cells = vec![Vec::new(); nx * ny];
        let mut idx = Self {
            x,
            dim,
            edges,
            origin: lo,
            cell,
            nx,
            ny,
            cells: Vec::new(),
        };
        for (k, &(u, v)) in edges.iter().enumerate() {
            let (ax, ay) = idx.cell_of(x[u * dim], x[u * dim + 1]);
            let (bx, by) = idx.cell_of(x[v * dim], x[v * dim + 1]);
            for i in ax.min(bx)..=ax.max(bx) {
                for j in ay.min(by)..=ay.max(by) {
                    cells[j * nx + i].push(k as u32);
                }
            }
        }
        idx.cells = cells;
        idx
    }

    fn cell_of(&self, px: T, py: T) -> (usize, usize) {
        let c = |p: T, o: T, n: usize| {
            let f = ((p - o) / self.cell).floor();
            if !(f > T::zero()) {
                0
            } else {
                f.to_usize().unwrap_or(n - 1).min(n - 1)
            }
        };
        (c(px, self.origin.0, self.nx), c(py, self.origin.1, self.ny))
    }

    fn seg(&self, k: usize, p: &[T]) -> (T, T) {
        let (u, v) = self.edges[k];
        let (a, b) = (&self.x[u * self.dim..(u + 1) * self.dim], &self.x[v * self.dim..(v + 1) * self.dim]);
        let mut dd = T::zero();
        let mut pd = T::zero();
        for i in 0..self.dim {
            let e = b[i] - a[i];
            dd = dd + e * e;
            pd = pd + (p[i] - a[i]) * e;
        }
        let s = if dd > T::zero() {
            (pd / dd).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        let mut acc = T::zero();
        for i in 0..self.dim {
            let q = a[i] + s * (b[i] - a[i]) - p[i];
            acc = acc + q * q;
        }
        (acc, s)
    }

    /// Nearest edge to `p`; `None` when there are no edges.
    pub fn nearest(&self, p: &[T]) -> Option<Hit<T>> {
        if self.edges.is_empty() {
            return None;
        }
        let (cx, cy) = self.cell_of(p[0], p[1]);
        let mut best = Hit {
            dist_sq: T::infinity(),
            edge: 0,
            s: T::zero(),
        };
        let reach = self.nx.max(self.ny);
        for k in 0..=reach {
            let (x0, x1) = (cx.saturating_sub(k), (cx + k).min(self.nx - 1));
            let (y0, y1) = (cy.saturating_sub(k), (cy + k).min(self.ny - 1));
            for j in y0..=y1 {
                for i in x0..=x1 {
                    let on_ring = i + k == cx || i == cx + k || j + k == cy || j == cy + k;
                    if !on_ring {
                        continue;
                    }
                    for &e in &self.cells[j * self.nx + i] {
                        let (d, s) = self.seg(e as usize, p);
                        if d < best.dist_sq || (d == best.dist_sq && (e as usize) < best.edge) {
                            best = Hit { dist_sq: d, edge: e as usize, s };
                        }
                    }
                }
            }
            // everything unvisited lies beyond one of the open sides
            let mut bound = T::infinity();
            if x0 > 0 {
                bound = bound.min(p[0] - (self.origin.0 + self.cell * T::from_usize_lossy(x0)));
            }
            if x1 + 1 < self.nx {
                bound = bound.min(self.origin.0 + self.cell * T::from_usize_lossy(x1 + 1) - p[0]);
            }
            if y0 > 0 {
                bound = bound.min(p[1] - (self.origin.1 + self.cell * T::from_usize_lossy(y0)));
            }
            if y1 + 1 < self.ny {
                bound = bound.min(self.origin.1 + self.cell * T::from_usize_lossy(y1 + 1) - p[1]);
            }
            if bound == T::infinity() {
                break;
            }
            if bound > T::zero() && best.dist_sq <= bound * bound {
                break;
            }
        }
        Some(best)
    }
}
