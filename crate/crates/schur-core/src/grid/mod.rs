//! Periodic structured grids on flat tori T^n (n = 2, 3, 4), the intrinsic
//! and embedded-hypersurface backend.
//!
//! A `GridManifold` carries a sampled metric field, its inverse and volume
//! density, and optionally the analytic data of a periodic embedding into
//! R^{n+1} (unit normal and second fundamental form). All derivatives of
//! embeddings are closed-form; finite differences enter only through the
//! intrinsic operators in `stencil`, `curvature`, and `operator`.

pub mod build;
pub mod curvature;
pub mod operator;
pub mod stencil;

use nalgebra::DMatrix;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Minimum samples per axis; order-6 stencils span 7 points.
pub const MIN_RESOLUTION: usize = 8;
/// Positivity floor for the smallest metric eigenvalue at any sample.
pub const METRIC_EIG_FLOOR: f64 = 1e-10;
/// Sources for the farthest-point-sampled diameter sweep.
const DIAMETER_SOURCES: usize = 8;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("dimension {0} not supported, expected 2, 3, or 4")]
    BadDimension(usize),
    #[error("resolution {res} per axis too coarse, stencils need at least {MIN_RESOLUTION}")]
    TooCoarse { res: usize },
    #[error("parameter {name} = {value} violates: {constraint}")]
    BadParameter { name: &'static str, value: f64, constraint: &'static str },
    #[error("metric loses positivity at sample {point}: min eigenvalue {min_eig:.3e}")]
    MetricNotPositive { point: usize, min_eig: f64 },
    #[error("operation needs an embedded hypersurface, geometry {0:?} is intrinsic")]
    NotEmbedded(String),
    #[error("Schouten tensor undefined for n = {0}; need n >= 3")]
    SchoutenUndefined(usize),
    #[error("field length {got} does not match grid size {want}")]
    FieldSize { got: usize, want: usize },
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
}

/// Uniform periodic lattice over [0, L_0) x ... x [0, L_{n-1}).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    res: Vec<usize>,
    len: Vec<f64>,
    h: Vec<f64>,
    strides: Vec<usize>,
    size: usize,
}

impl Grid {
    pub fn new(res: Vec<usize>, len: Vec<f64>) -> Result<Self, GridError> {
        let n = res.len();
        if !(2..=4).contains(&n) || len.len() != n {
            return Err(GridError::BadDimension(n));
        }
        for &r in &res {
            if r < MIN_RESOLUTION {
                return Err(GridError::TooCoarse { res: r });
            }
        }
        for &l in &len {
            if !(l > 0.0) || !l.is_finite() {
                return Err(GridError::BadParameter {
                    name: "period",
                    value: l,
                    constraint: "positive and finite",
                });
            }
        }
        let mut strides = vec![1usize; n];
        for i in 1..n {
            strides[i] = strides[i - 1] * res[i - 1];
        }
        let size = strides[n - 1] * res[n - 1];
        let h = res.iter().zip(&len).map(|(&r, &l)| l / r as f64).collect();
        Ok(Self { n, res, len, h, strides, size })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn lengths(&self) -> &[f64] {
        &self.len
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    /// Integer lattice coordinate of point `p` along `axis`.
    pub fn coord_index(&self, p: usize, axis: usize) -> usize {
        (p / self.strides[axis]) % self.res[axis]
    }

    /// Physical coordinate of point `p` along `axis`.
    pub fn coord(&self, p: usize, axis: usize) -> f64 {
        self.coord_index(p, axis) as f64 * self.h[axis]
    }

    /// Periodic shift of `p` by `k` lattice steps along `axis`.
    pub fn shift(&self, p: usize, axis: usize, k: isize) -> usize {
        let r = self.res[axis] as isize;
        let x = self.coord_index(p, axis) as isize;
        let nx = (x + k).rem_euclid(r);
        (p as isize + (nx - x) * self.strides[axis] as isize) as usize
    }
}

/// Symmetric-tensor field: n(n+1)/2 packed components per grid point,
/// point-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SymField {
    n: usize,
    m: usize,
    points: usize,
    comp: Vec<f64>,
}

/// Packed index of (i, j) with i <= j in an n x n symmetric matrix.
pub fn sym_idx(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

impl SymField {
    pub fn zeros(n: usize, points: usize) -> Self {
        let m = n * (n + 1) / 2;
        Self { n, m, points, comp: vec![0.0; m * points] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn get(&self, p: usize, i: usize, j: usize) -> f64 {
        self.comp[p * self.m + sym_idx(self.n, i, j)]
    }

    pub fn set(&mut self, p: usize, i: usize, j: usize, v: f64) {
        self.comp[p * self.m + sym_idx(self.n, i, j)] = v;
    }

    /// Packed components of point `p`.
    pub fn packed(&self, p: usize) -> &[f64] {
        &self.comp[p * self.m..(p + 1) * self.m]
    }

    pub fn packed_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.comp[p * self.m..(p + 1) * self.m]
    }

    /// Raw component vector, point-major; component c of point p sits at
    /// p * components() + c.
    pub fn raw(&self) -> &[f64] {
        &self.comp
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.comp
    }

    /// Full matrix at point `p`.
    pub fn mat(&self, p: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(p, i, j);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Store the symmetric part of `m` at point `p`.
    pub fn set_mat(&mut self, p: usize, m: &DMatrix<f64>) {
        for i in 0..self.n {
            for j in i..self.n {
                self.set(p, i, j, 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
    }

    /// Largest absolute component over all points.
    pub fn max_abs(&self) -> f64 {
        self.comp.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

/// Analytic data of a closed-form periodic embedding into R^{n+1}.
#[derive(Debug, Clone)]
pub struct EmbeddingData {
    /// Outward unit normal, n+1 components per point.
    pub normal: Vec<f64>,
    /// Covariant second fundamental form h_ij with respect to the outward
    /// normal; round spheres would carry h = g / rho.
    pub shape: SymField,
}

#[derive(Debug, Clone)]
pub struct GridManifold {
    pub grid: Grid,
    /// Catalog tag used in reports.
    pub name: String,
    /// Covariant metric g_ij per sample.
    pub metric: SymField,
    /// Inverse metric g^{ij} per sample.
    pub metric_inv: SymField,
    /// Volume density sqrt(det g) per sample.
    pub sqrt_det: Vec<f64>,
    pub embedding: Option<EmbeddingData>,
    /// Certified locally conformally flat by construction (conformal/flat
    /// catalog entries only).
    pub conformally_flat: bool,
}

impl GridManifold {
    /// Validate positivity and fill the derived metric fields. Inverse and
    /// determinant come from an eigendecomposition so the positivity
    /// certificate and the derived quantities agree.
    pub(crate) fn from_metric(
        grid: Grid,
        name: String,
        metric: SymField,
        embedding: Option<EmbeddingData>,
        conformally_flat: bool,
    ) -> Result<Self, GridError> {
        let n = grid.dim();
        let size = grid.size();
        let mut metric_inv = SymField::zeros(n, size);
        let mut sqrt_det = vec![0.0f64; size];
        for p in 0..size {
            let g = metric.mat(p);
            let eig = g.clone().symmetric_eigen();
            let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            if !(min_eig > METRIC_EIG_FLOOR) {
                return Err(GridError::MetricNotPositive { point: p, min_eig });
            }
            let det: f64 = eig.eigenvalues.iter().product();
            sqrt_det[p] = det.sqrt();
            let inv = g.try_inverse().expect("positive matrix is invertible");
            metric_inv.set_mat(p, &inv);
        }
        Ok(Self { grid, name, metric, metric_inv, sqrt_det, embedding, conformally_flat })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn size(&self) -> usize {
        self.grid.size()
    }

    /// Riemann-sum integral; on a periodic lattice this is the trapezoid
    /// rule, exact for lattice-constant integrands.
    pub fn integrate(&self, field: &[f64]) -> Result<f64, GridError> {
        if field.len() != self.size() {
            return Err(GridError::FieldSize { got: field.len(), want: self.size() });
        }
        let cell = self.grid.cell_volume();
        let mut acc = 0.0;
        for (f, s) in field.iter().zip(&self.sqrt_det) {
            acc += f * s * cell;
        }
        Ok(acc)
    }

    pub fn volume(&self) -> f64 {
        let cell = self.grid.cell_volume();
        self.sqrt_det.iter().map(|s| s * cell).sum()
    }

    pub fn mean(&self, field: &[f64]) -> Result<f64, GridError> {
        Ok(self.integrate(field)? / self.volume())
    }

    pub fn embedding(&self) -> Result<&EmbeddingData, GridError> {
        self.embedding.as_ref().ok_or_else(|| GridError::NotEmbedded(self.name.clone()))
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    point: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then(other.point.cmp(&self.point))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(gm: &GridManifold, source: usize) -> Vec<f64> {
    let size = gm.size();
    let n = gm.dim();
    let mut dist = vec![f64::INFINITY; size];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry { dist: 0.0, point: source });
    while let Some(HeapEntry { dist: d, point: p }) = heap.pop() {
        if d > dist[p] {
            continue;
        }
        for axis in 0..n {
            for step in [-1isize, 1] {
                let q = gm.grid.shift(p, axis, step);
                let edge = 0.5
                    * (gm.metric.get(p, axis, axis).sqrt() + gm.metric.get(q, axis, axis).sqrt())
                    * gm.grid.spacing()[axis];
                let nd = d + edge;
                if nd < dist[q] {
                    dist[q] = nd;
                    heap.push(HeapEntry { dist: nd, point: q });
                }
            }
        }
    }
    dist
}

/// Graph diameter along axis edges with metric edge lengths. Paths are
/// restricted to the lattice, so the value upper-bounds the Riemannian
/// diameter, which is the conservative direction for eigenvalue lower
/// bounds consuming it.
pub fn grid_diameter(gm: &GridManifold) -> f64 {
    let sources = DIAMETER_SOURCES.min(gm.size());
    let mut dist0 = dijkstra(gm, 0);
    let mut best = dist0.iter().cloned().fold(0.0f64, f64::max);
    let mut min_dist = dist0.clone();
    let mut picked = vec![0usize];
    for _ in 1..sources {
        let mut far = 0;
        let mut far_d = -1.0;
        for (i, &d) in min_dist.iter().enumerate() {
            if d > far_d {
                far_d = d;
                far = i;
            }
        }
        if picked.contains(&far) {
            break;
        }
        picked.push(far);
        dist0 = dijkstra(gm, far);
        best = best.max(dist0.iter().cloned().fold(0.0f64, f64::max));
        for (m, &d) in min_dist.iter_mut().zip(&dist0) {
            *m = m.min(d);
        }
    }
    best
}
