//! A geometry backend paired with everything the inequalities consume: the
//! weak Laplacian, its first nonzero eigenvalue, the diameter, the Ricci
//! lower bound, and sampled candidate tensors.
//!
//! Tensor samples are normalized into per-point orthonormal frames
//! (g^{-1/2} T g^{-1/2} on grids, native frames on meshes) so that traces,
//! norms, and deviators are plain Euclidean expressions downstream.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::{lambda_1, DiscreteOperator, EigenPair};
use crate::grid::build::{build_embedded, build_intrinsic, EmbeddedSpec, IntrinsicSpec};
use crate::grid::curvature::{
    covariant_divergence, curvature_pack, gradient, hypersurface_p_r, one_form_inner,
    one_form_norm_sq, schouten_sigma_k, CurvaturePack,
};
use crate::grid::operator::laplace_beltrami;
use crate::grid::stencil::Order;
use crate::grid::{grid_diameter, sym_idx, GridManifold, SymField};
use crate::mesh::generate::{ellipsoid, icosphere, perturbed_sphere};
use crate::mesh::geometry::mesh_diameter;
use crate::mesh::operator::cotan_operator;
use crate::mesh::{MeshGeometry, TriMesh};
use crate::tensor::{frame_from_covariant, MetricAtPoint, SymEndomorphism, SymTensorSample};

use super::{CFit, CSource, KConvention, VerifyError, C_FIT_GRAD_FLOOR};

/// Largest packed symmetric sample (n = 4).
const MAX_M: usize = 10;

/// Catalog of buildable geometries.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySpec {
    Intrinsic(IntrinsicSpec),
    Embedded(EmbeddedSpec),
    Icosphere { rho: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    PerturbedSphere { rho: f64, eps: f64, l: u32 },
}

impl GeometrySpec {
    pub fn is_mesh(&self) -> bool {
        matches!(
            self,
            GeometrySpec::Icosphere { .. }
                | GeometrySpec::Ellipsoid { .. }
                | GeometrySpec::PerturbedSphere { .. }
        )
    }

    pub fn name(&self) -> String {
        match self {
            GeometrySpec::Intrinsic(s) => s.name(),
            GeometrySpec::Embedded(s) => s.name(),
            GeometrySpec::Icosphere { rho } => format!("icosphere({rho})"),
            GeometrySpec::Ellipsoid { a, b, c } => format!("ellipsoid({a},{b},{c})"),
            GeometrySpec::PerturbedSphere { rho, eps, l } => {
                format!("perturbed_sphere({rho},{eps},l={l})")
            }
        }
    }
}

/// The discretization a domain runs on.
pub enum DomainBackend {
    Grid { manifold: GridManifold, pack: CurvaturePack },
    Mesh { mesh: TriMesh, geometry: MeshGeometry },
}

/// One verification site: a geometry with its operator, spectrum, diameter,
/// and curvature bounds, all computed at construction.
pub struct Domain {
    backend: DomainBackend,
    name: String,
    resolution: String,
    operator: DiscreteOperator,
    eigen: EigenPair,
    diameter: f64,
    /// Smallest Ricci eigenvalue over all samples; on meshes this is the
    /// Gauss curvature, since Ric = K_G g when n = 2.
    ric_min: f64,
}

fn res_string(res: &[usize]) -> String {
    if res.iter().all(|&r| r == res[0]) {
        format!("res={}", res[0])
    } else {
        let parts: Vec<String> = res.iter().map(|r| r.to_string()).collect();
        format!("res={}", parts.join("x"))
    }
}

impl Domain {
    /// Wrap a built grid manifold, sampling curvature and assembling the
    /// operator at the given stencil order.
    pub fn from_grid(manifold: GridManifold, order: Order) -> Result<Self, VerifyError> {
        let pack = curvature_pack(&manifold, order);
        let operator = laplace_beltrami(&manifold, order)?;
        let eigen = lambda_1(&operator)?;
        let diameter = grid_diameter(&manifold);
        let ric_min = grid_ric_min(&manifold, &pack)?;
        let name = manifold.name.clone();
        let resolution = res_string(manifold.grid.res());
        Ok(Self {
            backend: DomainBackend::Grid { manifold, pack },
            name,
            resolution,
            operator,
            eigen,
            diameter,
            ric_min,
        })
    }

    /// Wrap a triangle mesh, the n = 2 backend.
    pub fn from_mesh(mesh: TriMesh, name: String, resolution: String) -> Result<Self, VerifyError> {
        let geometry = MeshGeometry::new(&mesh)?;
        let operator = cotan_operator(&mesh, &geometry)?;
        let eigen = lambda_1(&operator)?;
        let diameter = mesh_diameter(&mesh)?;
        let ric_min = geometry
            .gauss_curvature
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            backend: DomainBackend::Mesh { mesh, geometry },
            name,
            resolution,
            operator,
            eigen,
            diameter,
            ric_min,
        })
    }

    /// Build from a catalog spec. `resolution` is the per-axis sample count
    /// on grids and the subdivision depth on meshes.
    pub fn build(spec: &GeometrySpec, resolution: usize) -> Result<Self, VerifyError> {
        let subdiv = || u32::try_from(resolution).unwrap_or(u32::MAX);
        match spec {
            GeometrySpec::Intrinsic(s) => {
                Self::from_grid(build_intrinsic(s, resolution)?, Order::Fourth)
            }
            GeometrySpec::Embedded(s) => {
                Self::from_grid(build_embedded(s, resolution)?, Order::Fourth)
            }
            GeometrySpec::Icosphere { rho } => Self::from_mesh(
                icosphere(*rho, subdiv())?,
                spec.name(),
                format!("subdiv={resolution}"),
            ),
            GeometrySpec::Ellipsoid { a, b, c } => Self::from_mesh(
                ellipsoid(*a, *b, *c, subdiv())?,
                spec.name(),
                format!("subdiv={resolution}"),
            ),
            GeometrySpec::PerturbedSphere { rho, eps, l } => Self::from_mesh(
                perturbed_sphere(*rho, *eps, *l, subdiv())?,
                spec.name(),
                format!("subdiv={resolution}"),
            ),
        }
    }

    pub fn n(&self) -> usize {
        match &self.backend {
            DomainBackend::Grid { manifold, .. } => manifold.dim(),
            DomainBackend::Mesh { .. } => 2,
        }
    }

    /// Number of samples (grid points or mesh vertices).
    pub fn size(&self) -> usize {
        self.operator.size()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn resolution(&self) -> &str {
        &self.resolution
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.operator
    }

    pub fn eigen(&self) -> &EigenPair {
        &self.eigen
    }

    pub fn lambda1(&self) -> f64 {
        self.eigen.lambda
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn ric_min(&self) -> f64 {
        self.ric_min
    }

    pub fn volume(&self) -> f64 {
        self.operator.mass_total()
    }

    /// Mass-weighted integral, summed in sample order.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        debug_assert_eq!(field.len(), self.size());
        self.operator
            .mass()
            .iter()
            .zip(field)
            .map(|(m, f)| m * f)
            .sum()
    }

    /// Mass-weighted mean.
    pub fn mean(&self, field: &[f64]) -> f64 {
        self.operator.mean(field)
    }

    /// Whether the metric is certified locally conformally flat by
    /// construction. Meshes carry no such certificate.
    pub fn conformally_flat(&self) -> bool {
        match &self.backend {
            DomainBackend::Grid { manifold, .. } => manifold.conformally_flat,
            DomainBackend::Mesh { .. } => false,
        }
    }

    pub fn grid(&self) -> Option<(&GridManifold, &CurvaturePack)> {
        match &self.backend {
            DomainBackend::Grid { manifold, pack } => Some((manifold, pack)),
            DomainBackend::Mesh { .. } => None,
        }
    }

    pub fn mesh(&self) -> Option<(&TriMesh, &MeshGeometry)> {
        match &self.backend {
            DomainBackend::Mesh { mesh, geometry } => Some((mesh, geometry)),
            DomainBackend::Grid { .. } => None,
        }
    }

    pub fn backend_name(&self) -> &'static str {
        match &self.backend {
            DomainBackend::Grid { .. } => "grid",
            DomainBackend::Mesh { .. } => "mesh",
        }
    }

    /// Sample a catalog tensor on this domain.
    pub fn tensor_field(&self, choice: TensorChoice) -> Result<TensorField, VerifyError> {
        match &self.backend {
            DomainBackend::Grid { manifold, pack } => match choice {
                TensorChoice::Metric => Ok(TensorField::Grid(manifold.metric.clone())),
                TensorChoice::Ricci => Ok(TensorField::Grid(pack.ric.clone())),
                TensorChoice::Shape => {
                    Ok(TensorField::Grid(manifold.embedding()?.shape.clone()))
                }
                TensorChoice::NewtonShape { r } => {
                    Ok(TensorField::Grid(hypersurface_p_r(manifold, r)?.1))
                }
                TensorChoice::NewtonSchouten { k } => {
                    Ok(TensorField::Grid(schouten_sigma_k(manifold, pack, k)?.1))
                }
            },
            DomainBackend::Mesh { geometry, .. } => {
                let size = geometry.shape.len();
                match choice {
                    TensorChoice::Metric => {
                        let id = SymEndomorphism::identity(2)?;
                        Ok(TensorField::Mesh(vec![id; size]))
                    }
                    TensorChoice::Ricci => {
                        let samples = geometry
                            .gauss_curvature
                            .iter()
                            .map(|&kg| {
                                SymEndomorphism::new(DMatrix::from_diagonal_element(2, 2, kg))
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(TensorField::Mesh(samples))
                    }
                    TensorChoice::Shape => Ok(TensorField::Mesh(geometry.shape.clone())),
                    TensorChoice::NewtonShape { r } => {
                        let samples = geometry
                            .shape
                            .iter()
                            .map(|a| crate::tensor::newton_transform(a, r))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(TensorField::Mesh(samples))
                    }
                    TensorChoice::NewtonSchouten { .. } => Err(VerifyError::Backend {
                        op: "Schouten Newton tensors (undefined for n = 2)",
                        need: "grid",
                        geometry: self.name.clone(),
                    }),
                }
            }
        }
    }
}

/// Catalog of tensors T the general statement can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorChoice {
    /// T = g: div g = 0 and B = n is constant, so c is indeterminate.
    Metric,
    /// T = Ric, B = R; the contracted Bianchi identity gives c = 1/2.
    Ricci,
    /// T = A, B = H; the Codazzi equation in space forms gives c = 1.
    Shape,
    /// T = P_r, the Newton tensor of the shape operator; divergence-free.
    NewtonShape { r: usize },
    /// T = T_k(S_g), the Newton tensor of the Schouten endomorphism;
    /// divergence-free when the metric is locally conformally flat.
    NewtonSchouten { k: usize },
}

impl TensorChoice {
    /// Divergence constant known analytically, when there is one.
    pub fn prescribed_c(self) -> Option<f64> {
        match self {
            TensorChoice::Metric => None,
            TensorChoice::Ricci => Some(0.5),
            TensorChoice::Shape => Some(1.0),
            TensorChoice::NewtonShape { .. } | TensorChoice::NewtonSchouten { .. } => Some(0.0),
        }
    }

    pub fn label(self) -> String {
        match self {
            TensorChoice::Metric => "metric".to_owned(),
            TensorChoice::Ricci => "ricci".to_owned(),
            TensorChoice::Shape => "shape".to_owned(),
            TensorChoice::NewtonShape { r } => format!("P_{r}"),
            TensorChoice::NewtonSchouten { k } => format!("T_{k}"),
        }
    }
}

/// A sampled symmetric (0,2) tensor field on one backend.
#[derive(Debug, Clone)]
pub enum TensorField {
    /// Covariant components per grid point.
    Grid(SymField),
    /// Endomorphisms in the per-vertex orthonormal frame.
    Mesh(Vec<SymEndomorphism>),
}

/// Frame components of T with its trace field, the common input of every
/// integrand downstream.
pub struct SampleStats {
    pub n: usize,
    /// Packed frame components, `n(n+1)/2` per sample in `sym_idx` order.
    pub frames: Vec<f64>,
    /// B = tr_g T per sample.
    pub b: Vec<f64>,
    /// Largest frame norm |T|_g over all samples.
    pub scale: f64,
}

pub(super) fn frame_norm_sq(n: usize, packed: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in i..n {
            let v = packed[sym_idx(n, i, j)];
            acc += if i == j { v * v } else { 2.0 * v * v };
        }
    }
    acc
}

struct PointStat {
    frame: [f64; MAX_M],
    b: f64,
    norm_sq: f64,
}

/// Convert a sampled field into per-sample frames.
pub fn sample_stats(domain: &Domain, field: &TensorField) -> Result<SampleStats, VerifyError> {
    match (&domain.backend, field) {
        (DomainBackend::Grid { manifold, .. }, TensorField::Grid(t)) => {
            let n = manifold.dim();
            let m = n * (n + 1) / 2;
            let size = manifold.size();
            if t.dim() != n || t.points() != size {
                return Err(VerifyError::Grid(crate::grid::GridError::FieldSize {
                    got: t.points(),
                    want: size,
                }));
            }
            let stats: Result<Vec<PointStat>, VerifyError> = (0..size)
                .into_par_iter()
                .map(|p| {
                    let g = MetricAtPoint::new(manifold.metric.mat(p))?;
                    let sample = SymTensorSample::new(t.mat(p))?;
                    let e = frame_from_covariant(&sample, &g)?;
                    let mat = e.matrix();
                    let mut frame = [0.0f64; MAX_M];
                    for i in 0..n {
                        for j in i..n {
                            frame[sym_idx(n, i, j)] = mat[(i, j)];
                        }
                    }
                    Ok(PointStat { frame, b: e.trace(), norm_sq: frame_norm_sq(n, &frame) })
                })
                .collect();
            let stats = stats?;
            let mut frames = vec![0.0f64; size * m];
            let mut b = vec![0.0f64; size];
            let mut max_sq = 0.0f64;
            for (p, s) in stats.iter().enumerate() {
                frames[p * m..(p + 1) * m].copy_from_slice(&s.frame[..m]);
                b[p] = s.b;
                max_sq = max_sq.max(s.norm_sq);
            }
            Ok(SampleStats { n, frames, b, scale: max_sq.sqrt() })
        }
        (DomainBackend::Mesh { geometry, .. }, TensorField::Mesh(samples)) => {
            let n = 2;
            let m = 3;
            let size = geometry.shape.len();
            if samples.len() != size {
                return Err(VerifyError::Grid(crate::grid::GridError::FieldSize {
                    got: samples.len(),
                    want: size,
                }));
            }
            let mut frames = vec![0.0f64; size * m];
            let mut b = vec![0.0f64; size];
            let mut max_sq = 0.0f64;
            for (p, e) in samples.iter().enumerate() {
                let mat = e.matrix();
                let slot = &mut frames[p * m..(p + 1) * m];
                for i in 0..n {
                    for j in i..n {
                        slot[sym_idx(n, i, j)] = mat[(i, j)];
                    }
                }
                b[p] = e.trace();
                max_sq = max_sq.max(frame_norm_sq(n, slot));
            }
            Ok(SampleStats { n, frames, b, scale: max_sq.sqrt() })
        }
        (DomainBackend::Grid { .. }, TensorField::Mesh(_)) => Err(VerifyError::Backend {
            op: "mesh tensor samples",
            need: "mesh",
            geometry: domain.name.clone(),
        }),
        (DomainBackend::Mesh { .. }, TensorField::Grid(_)) => Err(VerifyError::Backend {
            op: "grid tensor samples",
            need: "grid",
            geometry: domain.name.clone(),
        }),
    }
}

/// B = g^{ij} T_ij per point.
fn trace_field(gm: &GridManifold, t: &SymField) -> Vec<f64> {
    let n = gm.dim();
    let size = gm.size();
    let mut out = vec![0.0f64; size];
    out.par_iter_mut().enumerate().for_each(|(p, slot)| {
        let ginv = gm.metric_inv.packed(p);
        let tv = t.packed(p);
        let mut acc = 0.0;
        for i in 0..n {
            for j in i..n {
                let f = if i == j { 1.0 } else { 2.0 };
                acc += f * ginv[sym_idx(n, i, j)] * tv[sym_idx(n, i, j)];
            }
        }
        *slot = acc;
    });
    out
}

/// Divergence-constant fit against grad B on a grid, bypassed by a
/// prescribed c when one is known analytically.
///
/// The indeterminacy floor compares the RMS of |grad B|_g against the
/// largest covariant component of T: below `C_FIT_GRAD_FLOOR` of it, the
/// hypothesis div T = c grad B constrains no c and the fit reports
/// c = prescribed (or 0) with zero residual.
pub fn c_fit_grid(
    gm: &GridManifold,
    pack: &CurvaturePack,
    t: &SymField,
    prescribed: Option<f64>,
) -> Result<CFit, VerifyError> {
    let b = trace_field(gm, t);
    let div = covariant_divergence(gm, pack, t)?;
    let grad = gradient(gm, &b, pack.order)?;
    let div_sq = one_form_norm_sq(gm, &div)?;
    let grad_sq = one_form_norm_sq(gm, &grad)?;
    let i_div = gm.integrate(&div_sq)?;
    let i_grad = gm.integrate(&grad_sq)?;
    let volume = gm.volume();
    let rms_grad = (i_grad.max(0.0) / volume).sqrt();
    let floor = C_FIT_GRAD_FLOOR * t.max_abs();

    let (c, source) = match prescribed {
        Some(c) => (c, CSource::Prescribed),
        None if rms_grad <= floor => (0.0, CSource::Indeterminate),
        None => {
            let i_dg = gm.integrate(&one_form_inner(gm, &div, &grad)?)?;
            (i_dg / i_grad, CSource::Estimated)
        }
    };

    // Pointwise residual one-form, then its L^2 norm; expanding the square
    // from the three integrals would cancel catastrophically near zero.
    let n = gm.dim();
    let mut res = vec![0.0f64; div.len()];
    res.par_chunks_mut(n).enumerate().for_each(|(p, slot)| {
        for (a, v) in slot.iter_mut().enumerate() {
            *v = div[p * n + a] - c * grad[p * n + a];
        }
    });
    let i_res = gm.integrate(&one_form_norm_sq(gm, &res)?)?;
    let den = i_div.max(i_grad).sqrt();
    let residual = if den > 0.0 { (i_res.max(0.0)).sqrt() / den } else { 0.0 };
    Ok(CFit { c, residual: Some(residual), source })
}

/// Least-squares divergence-constant fit, c = <div T, grad B> / |grad B|^2
/// in L^2.
///
/// Meshes carry no discrete divergence: the fit succeeds there only in the
/// indeterminate case (B constant to roundoff), otherwise c must be
/// prescribed.
pub fn estimate_c(domain: &Domain, field: &TensorField) -> Result<CFit, VerifyError> {
    match (&domain.backend, field) {
        (DomainBackend::Grid { manifold, pack }, TensorField::Grid(t)) => {
            c_fit_grid(manifold, pack, t, None)
        }
        (DomainBackend::Mesh { .. }, TensorField::Mesh(_)) => {
            let stats = sample_stats(domain, field)?;
            let mean = domain.mean(&stats.b);
            let dev: Vec<f64> = stats.b.iter().map(|&v| (v - mean) * (v - mean)).collect();
            let variance = domain.integrate(&dev);
            let floor = C_FIT_GRAD_FLOOR * stats.scale;
            if (variance.max(0.0) / domain.volume()).sqrt() <= floor {
                Ok(CFit { c: 0.0, residual: Some(0.0), source: CSource::Indeterminate })
            } else {
                Err(VerifyError::CNotEstimable)
            }
        }
        _ => Err(VerifyError::Backend {
            op: "estimate_c",
            need: domain.backend_name(),
            geometry: domain.name.clone(),
        }),
    }
}

/// Record a prescribed divergence constant. On grids the residual against
/// the prescribed c is still measured; meshes leave it empty.
pub fn prescribe_c(domain: &Domain, field: &TensorField, c: f64) -> Result<CFit, VerifyError> {
    match (&domain.backend, field) {
        (DomainBackend::Grid { manifold, pack }, TensorField::Grid(t)) => {
            c_fit_grid(manifold, pack, t, Some(c))
        }
        (DomainBackend::Mesh { .. }, TensorField::Mesh(_)) => {
            Ok(CFit { c, residual: None, source: CSource::Prescribed })
        }
        _ => Err(VerifyError::Backend {
            op: "prescribe_c",
            need: domain.backend_name(),
            geometry: domain.name.clone(),
        }),
    }
}

/// Max-norm of |div T - c grad B|_g; `None` on meshes.
pub fn div_residual_max(
    domain: &Domain,
    field: &TensorField,
    c: f64,
) -> Result<Option<f64>, VerifyError> {
    let (manifold, pack) = match (&domain.backend, field) {
        (DomainBackend::Grid { manifold, pack }, TensorField::Grid(_)) => (manifold, pack),
        (DomainBackend::Mesh { .. }, TensorField::Mesh(_)) => return Ok(None),
        _ => {
            return Err(VerifyError::Backend {
                op: "div_residual_max",
                need: domain.backend_name(),
                geometry: domain.name.clone(),
            })
        }
    };
    let TensorField::Grid(t) = field else { unreachable!() };
    let b = trace_field(manifold, t);
    let div = covariant_divergence(manifold, pack, t)?;
    let grad = gradient(manifold, &b, pack.order)?;
    let n = manifold.dim();
    let mut res = vec![0.0f64; div.len()];
    res.par_chunks_mut(n).enumerate().for_each(|(p, slot)| {
        for (a, v) in slot.iter_mut().enumerate() {
            *v = div[p * n + a] - c * grad[p * n + a];
        }
    });
    let norms = one_form_norm_sq(manifold, &res)?;
    Ok(Some(norms.iter().copied().fold(0.0f64, f64::max).max(0.0).sqrt()))
}

/// Lower Ricci bound under the chosen convention: with m the smallest Ricci
/// eigenvalue over all samples, K = max(0, -m/(n-1)) under tensor-thm and
/// K = max(0, -m) under hypersurface-thm.
pub fn ricci_bound_k(domain: &Domain, convention: KConvention) -> f64 {
    let m = domain.ric_min();
    let n = domain.n() as f64;
    match convention {
        KConvention::TensorThm => (-m / (n - 1.0)).max(0.0),
        KConvention::HypersurfaceThm => (-m).max(0.0),
    }
}

fn grid_ric_min(gm: &GridManifold, pack: &CurvaturePack) -> Result<f64, VerifyError> {
    let size = gm.size();
    let mins: Result<Vec<f64>, VerifyError> = (0..size)
        .into_par_iter()
        .map(|p| {
            let g = MetricAtPoint::new(gm.metric.mat(p))?;
            let sample = SymTensorSample::new(pack.ric.mat(p))?;
            let e = frame_from_covariant(&sample, &g)?;
            let eig = e.matrix().clone().symmetric_eigen();
            Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
        })
        .collect();
    Ok(mins?.into_iter().fold(f64::INFINITY, f64::min))
}
