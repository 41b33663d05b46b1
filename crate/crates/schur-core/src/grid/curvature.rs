//! Curvature of a sampled metric: Christoffel symbols, Ricci and scalar
//! curvature, Schouten tensor, Newton transforms of Schouten and shape
//! tensors, covariant divergence, and the Hessian pieces of the Bochner
//! identity.
//!
//! Everything is computed pointwise from centered stencils on the metric
//! component fields. The Christoffel field is materialized once; Ricci uses
//! finite differences of that field, so the composition stays at the stencil
//! order and annihilates constant metrics exactly. Per-point work is
//! parallelized with every output slot written exactly once by a pure
//! function of read-only input, so results are bit-identical across runs and
//! thread counts.

use super::stencil::{d1_at, d1_at_strided, d2_at_strided, Order};
use super::{sym_idx, GridError, GridManifold, SymField};
use crate::tensor::{
    covariant_from_frame, frame_from_covariant, newton_chain, MetricAtPoint, SymTensorSample,
};
use nalgebra::DMatrix;
use rayon::prelude::*;

const MAX_N: usize = 4;
const MAX_M: usize = 10;

/// Curvature fields of one sampled metric at one stencil order.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub order: Order,
    /// Christoffel symbols, packed per point as k * m + sym_idx(i, j) for
    /// Gamma^k_{ij}.
    gamma: Vec<f64>,
    /// Ricci tensor, covariant components.
    pub ric: SymField,
    /// Scalar curvature.
    pub scalar: Vec<f64>,
    /// Schouten tensor (Ric - R g / (2(n-1))) / (n-2); absent for n = 2.
    pub schouten: Option<SymField>,
}

impl CurvaturePack {
    /// Gamma^k_{ij} at point `p`.
    pub fn gamma(&self, p: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.ric.dim();
        let m = n * (n + 1) / 2;
        self.gamma[p * n * m + k * m + sym_idx(n, i, j)]
    }
}

/// Unpack a symmetric packed slice into a full stack matrix.
#[inline]
fn unpack(n: usize, packed: &[f64]) -> [[f64; MAX_N]; MAX_N] {
    let mut out = [[0.0; MAX_N]; MAX_N];
    for i in 0..n {
        for j in i..n {
            let v = packed[sym_idx(n, i, j)];
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Christoffel symbols at point `p` into `out` (length n * m).
fn christoffel_at(gm: &GridManifold, w1: &[f64], p: usize, out: &mut [f64]) {
    let n = gm.dim();
    let m = n * (n + 1) / 2;
    let grid = &gm.grid;
    let h = grid.spacing();
    let raw = gm.metric.raw();
    let mut dg = [[0.0f64; MAX_M]; MAX_N];
    for (a, dga) in dg.iter_mut().enumerate().take(n) {
        for (c, slot) in dga.iter_mut().enumerate().take(m) {
            *slot = d1_at_strided(grid, raw, m, c, p, a, w1, h[a]);
        }
    }
    let ginv = unpack(n, gm.metric_inv.packed(p));
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    let term = dg[i][sym_idx(n, l, j)] + dg[j][sym_idx(n, l, i)]
                        - dg[l][sym_idx(n, i, j)];
                    acc += ginv[k][l] * term;
                }
                out[k * m + sym_idx(n, i, j)] = 0.5 * acc;
            }
        }
    }
}

/// Ricci tensor at point `p` from the materialized Christoffel field:
/// Ric_jk = d_i Gamma^i_jk - d_j Gamma^i_ik
///        + Gamma^i_il Gamma^l_jk - Gamma^i_jl Gamma^l_ik,
/// symmetrized to absorb the discrete asymmetry of the second term.
fn ricci_at(gm: &GridManifold, gamma: &[f64], w1: &[f64], p: usize, ric: &mut [f64]) {
    let n = gm.dim();
    let m = n * (n + 1) / 2;
    let nm = n * m;
    let grid = &gm.grid;
    let h = grid.spacing();
    let mut dgamma = [[[0.0f64; MAX_M]; MAX_N]; MAX_N];
    for a in 0..n {
        for k in 0..n {
            for c in 0..m {
                dgamma[a][k][c] = d1_at_strided(grid, gamma, nm, k * m + c, p, a, w1, h[a]);
            }
        }
    }
    let gam = &gamma[p * nm..(p + 1) * nm];
    let mut trace = [0.0f64; MAX_N];
    for (l, slot) in trace.iter_mut().enumerate().take(n) {
        for i in 0..n {
            *slot += gam[i * m + sym_idx(n, i, l)];
        }
    }
    let mut full = [[0.0f64; MAX_N]; MAX_N];
    for j in 0..n {
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += dgamma[i][i][sym_idx(n, j, k)];
                acc -= dgamma[j][i][sym_idx(n, i, k)];
            }
            for l in 0..n {
                acc += trace[l] * gam[l * m + sym_idx(n, j, k)];
                for i in 0..n {
                    acc -= gam[i * m + sym_idx(n, j, l)] * gam[l * m + sym_idx(n, i, k)];
                }
            }
            full[j][k] = acc;
        }
    }
    for j in 0..n {
        for k in j..n {
            ric[sym_idx(n, j, k)] = 0.5 * (full[j][k] + full[k][j]);
        }
    }
}

/// Compute all curvature fields of `gm` at stencil order `order`.
pub fn curvature_pack(gm: &GridManifold, order: Order) -> CurvaturePack {
    let n = gm.dim();
    let m = n * (n + 1) / 2;
    let nm = n * m;
    let size = gm.size();
    let w1 = order.d1_weights();

    let mut gamma = vec![0.0f64; size * nm];
    gamma
        .par_chunks_mut(nm)
        .enumerate()
        .for_each(|(p, out)| christoffel_at(gm, w1, p, out));

    let mut ric = SymField::zeros(n, size);
    ric.raw_mut()
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(p, out)| ricci_at(gm, &gamma, w1, p, out));

    let mut scalar = vec![0.0f64; size];
    scalar.par_iter_mut().enumerate().for_each(|(p, out)| {
        let ginv = gm.metric_inv.packed(p);
        let rc = ric.packed(p);
        let mut acc = 0.0;
        for i in 0..n {
            for j in i..n {
                let f = if i == j { 1.0 } else { 2.0 };
                acc += f * ginv[sym_idx(n, i, j)] * rc[sym_idx(n, i, j)];
            }
        }
        *out = acc;
    });

    let schouten = if n >= 3 {
        let mut s = SymField::zeros(n, size);
        s.raw_mut().par_chunks_mut(m).enumerate().for_each(|(p, out)| {
            let g = gm.metric.packed(p);
            let rc = ric.packed(p);
            let r = scalar[p];
            let c = r / (2.0 * (n as f64 - 1.0));
            let inv = 1.0 / (n as f64 - 2.0);
            for (slot, (rv, gv)) in out.iter_mut().zip(rc.iter().zip(g)) {
                *slot = (rv - c * gv) * inv;
            }
        });
        Some(s)
    } else {
        None
    };

    CurvaturePack { order, gamma, ric, scalar, schouten }
}

/// Per-point Newton data sigma_r and covariant P_r for a covariant symmetric
/// tensor field, via the orthonormal-frame representative at each sample.
fn newton_field(
    gm: &GridManifold,
    t: &SymField,
    r: usize,
) -> Result<(Vec<f64>, SymField), GridError> {
    let n = gm.dim();
    let size = gm.size();
    let results: Vec<Result<(f64, Vec<f64>), GridError>> = (0..size)
        .into_par_iter()
        .map(|p| {
            let g = MetricAtPoint::new(gm.metric.mat(p))?;
            let sample = SymTensorSample::new(t.mat(p))?;
            let frame = frame_from_covariant(&sample, &g)?;
            let (sigmas, p_frame) = newton_chain(&frame, r)?;
            let p_cov = covariant_from_frame(
                &crate::tensor::SymEndomorphism::new(p_frame)?,
                &g,
            )?;
            let mut packed = vec![0.0f64; n * (n + 1) / 2];
            for i in 0..n {
                for j in i..n {
                    packed[sym_idx(n, i, j)] = p_cov.components()[(i, j)];
                }
            }
            Ok((sigmas[r], packed))
        })
        .collect();
    let mut sigma = vec![0.0f64; size];
    let mut p_field = SymField::zeros(n, size);
    for (p, res) in results.into_iter().enumerate() {
        let (s, packed) = res?;
        sigma[p] = s;
        p_field.packed_mut(p).copy_from_slice(&packed);
    }
    Ok((sigma, p_field))
}

/// sigma_k(S_g) and covariant T_k(S_g) for the Schouten tensor; n >= 3.
pub fn schouten_sigma_k(
    gm: &GridManifold,
    pack: &CurvaturePack,
    k: usize,
) -> Result<(Vec<f64>, SymField), GridError> {
    let schouten = pack
        .schouten
        .as_ref()
        .ok_or(GridError::SchoutenUndefined(gm.dim()))?;
    newton_field(gm, schouten, k)
}

/// sigma_r(A) and covariant P_r(A) for the shape operator of an embedded
/// hypersurface.
pub fn hypersurface_p_r(
    gm: &GridManifold,
    r: usize,
) -> Result<(Vec<f64>, SymField), GridError> {
    let emb = gm.embedding()?;
    newton_field(gm, &emb.shape, r)
}

/// Covariant divergence (div T)_k = g^{ij} (d_i T_jk - Gamma^l_ij T_lk
/// - Gamma^l_ik T_jl), returned point-major with n components per point.
pub fn covariant_divergence(
    gm: &GridManifold,
    pack: &CurvaturePack,
    t: &SymField,
) -> Result<Vec<f64>, GridError> {
    let n = gm.dim();
    let size = gm.size();
    if t.dim() != n || t.points() != size {
        return Err(GridError::FieldSize { got: t.points(), want: size });
    }
    let m = n * (n + 1) / 2;
    let nm = n * m;
    let grid = &gm.grid;
    let h = grid.spacing();
    let w1 = pack.order.d1_weights();
    let raw = t.raw();
    let mut out = vec![0.0f64; size * n];
    out.par_chunks_mut(n).enumerate().for_each(|(p, slot)| {
        let ginv = unpack(n, gm.metric_inv.packed(p));
        let tv = unpack(n, t.packed(p));
        let gam = &pack.gamma[p * nm..(p + 1) * nm];
        let mut dt = [[[0.0f64; MAX_N]; MAX_N]; MAX_N];
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let v = d1_at_strided(grid, raw, m, sym_idx(n, j, k), p, i, w1, h[i]);
                    dt[i][j][k] = v;
                    dt[i][k][j] = v;
                }
            }
        }
        for (k, acc_slot) in slot.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let mut cov = dt[i][j][k];
                    for l in 0..n {
                        cov -= gam[l * m + sym_idx(n, i, j)] * tv[l][k];
                        cov -= gam[l * m + sym_idx(n, i, k)] * tv[j][l];
                    }
                    acc += ginv[i][j] * cov;
                }
            }
            *acc_slot = acc;
        }
    });
    Ok(out)
}

/// Coordinate gradient d_a f, point-major with n components per point.
pub fn gradient(
    gm: &GridManifold,
    field: &[f64],
    order: Order,
) -> Result<Vec<f64>, GridError> {
    let n = gm.dim();
    let size = gm.size();
    if field.len() != size {
        return Err(GridError::FieldSize { got: field.len(), want: size });
    }
    let grid = &gm.grid;
    let h = grid.spacing();
    let w1 = order.d1_weights();
    let mut out = vec![0.0f64; size * n];
    out.par_chunks_mut(n).enumerate().for_each(|(p, slot)| {
        for (a, v) in slot.iter_mut().enumerate() {
            *v = d1_at(grid, field, p, a, w1, h[a]);
        }
    });
    Ok(out)
}

/// Pointwise |omega|_g^2 = g^{ij} omega_i omega_j for a point-major one-form.
pub fn one_form_norm_sq(gm: &GridManifold, omega: &[f64]) -> Result<Vec<f64>, GridError> {
    let n = gm.dim();
    let size = gm.size();
    if omega.len() != size * n {
        return Err(GridError::FieldSize { got: omega.len(), want: size * n });
    }
    let mut out = vec![0.0f64; size];
    out.par_iter_mut().enumerate().for_each(|(p, slot)| {
        let ginv = unpack(n, gm.metric_inv.packed(p));
        let w = &omega[p * n..(p + 1) * n];
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += ginv[i][j] * w[i] * w[j];
            }
        }
        *slot = acc;
    });
    Ok(out)
}

/// Pointwise <a, b>_g = g^{ij} a_i b_j for two point-major one-forms.
pub fn one_form_inner(
    gm: &GridManifold,
    a: &[f64],
    b: &[f64],
) -> Result<Vec<f64>, GridError> {
    let n = gm.dim();
    let size = gm.size();
    if a.len() != size * n || b.len() != size * n {
        return Err(GridError::FieldSize { got: a.len().min(b.len()), want: size * n });
    }
    let mut out = vec![0.0f64; size];
    out.par_iter_mut().enumerate().for_each(|(p, slot)| {
        let ginv = unpack(n, gm.metric_inv.packed(p));
        let av = &a[p * n..(p + 1) * n];
        let bv = &b[p * n..(p + 1) * n];
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += ginv[i][j] * av[i] * bv[j];
            }
        }
        *slot = acc;
    });
    Ok(out)
}

/// Pointwise integrands of the Bochner identity
/// int |Hess f|^2 = int (Lap f)^2 - int Ric(grad f, grad f).
#[derive(Debug, Clone)]
pub struct BochnerTerms {
    pub hess_sq: Vec<f64>,
    pub lap_sq: Vec<f64>,
    pub ric_grad: Vec<f64>,
}

/// Hessian, Laplacian, and Ricci quadratic form of `f` at the order of
/// `pack`; the 1e-6-level identity checks need a sixth-order pack.
pub fn bochner_terms(
    gm: &GridManifold,
    pack: &CurvaturePack,
    f: &[f64],
) -> Result<BochnerTerms, GridError> {
    let n = gm.dim();
    let size = gm.size();
    if f.len() != size {
        return Err(GridError::FieldSize { got: f.len(), want: size });
    }
    let m = n * (n + 1) / 2;
    let nm = n * m;
    let grid = &gm.grid;
    let h = grid.spacing();
    let w1 = pack.order.d1_weights();
    let w2 = pack.order.d2_weights();
    let mut hess_sq = vec![0.0f64; size];
    let mut lap_sq = vec![0.0f64; size];
    let mut ric_grad = vec![0.0f64; size];
    hess_sq
        .par_iter_mut()
        .zip(lap_sq.par_iter_mut())
        .zip(ric_grad.par_iter_mut())
        .enumerate()
        .for_each(|(p, ((hs, ls), rg))| {
            let ginv = unpack(n, gm.metric_inv.packed(p));
            let ric = unpack(n, pack.ric.packed(p));
            let gam = &pack.gamma[p * nm..(p + 1) * nm];
            let mut df = [0.0f64; MAX_N];
            for (a, slot) in df.iter_mut().enumerate().take(n) {
                *slot = d1_at(grid, f, p, a, w1, h[a]);
            }
            let mut hess = [[0.0f64; MAX_N]; MAX_N];
            for a in 0..n {
                for b in a..n {
                    let mut v = d2_at_strided(grid, f, 1, 0, p, a, b, w1, w2, h[a], h[b]);
                    for l in 0..n {
                        v -= gam[l * m + sym_idx(n, a, b)] * df[l];
                    }
                    hess[a][b] = v;
                    hess[b][a] = v;
                }
            }
            // Raise one index: H^a_b = g^{ac} hess_cb.
            let mut raised = [[0.0f64; MAX_N]; MAX_N];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        raised[a][b] += ginv[a][c] * hess[c][b];
                    }
                }
            }
            let mut lap = 0.0;
            for a in 0..n {
                lap += raised[a][a];
            }
            let mut hsq = 0.0;
            for a in 0..n {
                for b in 0..n {
                    hsq += raised[a][b] * raised[b][a];
                }
            }
            let mut rg_acc = 0.0;
            let mut grad_up = [0.0f64; MAX_N];
            for a in 0..n {
                for b in 0..n {
                    grad_up[a] += ginv[a][b] * df[b];
                }
            }
            for a in 0..n {
                for b in 0..n {
                    rg_acc += ric[a][b] * grad_up[a] * grad_up[b];
                }
            }
            *hs = hsq;
            *ls = lap * lap;
            *rg = rg_acc;
        });
    Ok(BochnerTerms { hess_sq, lap_sq, ric_grad })
}

/// Max-norm of the contracted second Bianchi identity div Ric - d R / 2,
/// a direct measure of the discretization error in the curvature fields.
pub fn bianchi_residual(gm: &GridManifold, pack: &CurvaturePack) -> Result<Vec<f64>, GridError> {
    let div_ric = covariant_divergence(gm, pack, &pack.ric)?;
    let grad_r = gradient(gm, &pack.scalar, pack.order)?;
    Ok(div_ric
        .iter()
        .zip(&grad_r)
        .map(|(d, g)| d - 0.5 * g)
        .collect())
}

/// Max-norm of the Gauss-equation residual Ric - (H h - h g^{-1} h) on an
/// embedded hypersurface; the shape side is analytic, the Ricci side is
/// finite-differenced, so this measures pure discretization error.
pub fn gauss_residual(gm: &GridManifold, pack: &CurvaturePack) -> Result<f64, GridError> {
    let emb = gm.embedding()?;
    let n = gm.dim();
    let mut worst = 0.0f64;
    for p in 0..gm.size() {
        let g_inv = unpack(n, gm.metric_inv.packed(p));
        let h = unpack(n, emb.shape.packed(p));
        let ric = unpack(n, pack.ric.packed(p));
        let mut mean_h = 0.0;
        for i in 0..n {
            for j in 0..n {
                mean_h += g_inv[i][j] * h[i][j];
            }
        }
        // (h g^{-1} h)_jk
        for j in 0..n {
            for k in 0..n {
                let mut hgh = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        hgh += h[j][a] * g_inv[a][b] * h[b][k];
                    }
                }
                let res = ric[j][k] - (mean_h * h[j][k] - hgh);
                worst = worst.max(res.abs());
            }
        }
    }
    Ok(worst)
}

/// Max-norm residual of the pointwise identity
/// P_2 - (n-2) sigma_2 g / n = R g / n - Ric
/// on an embedded hypersurface; P_2 and sigma_2 come from the analytic shape
/// data, Ric and R from finite differences of the pullback metric.
pub fn p2_identity_residual(gm: &GridManifold, pack: &CurvaturePack) -> Result<f64, GridError> {
    let n = gm.dim();
    let nf = n as f64;
    let (sigma2, p2) = hypersurface_p_r(gm, 2)?;
    let mut worst = 0.0f64;
    for p in 0..gm.size() {
        let g = gm.metric.packed(p);
        let rc = pack.ric.packed(p);
        let p2p = p2.packed(p);
        let r = pack.scalar[p];
        for c in 0..n * (n + 1) / 2 {
            let lhs = p2p[c] - (nf - 2.0) * sigma2[p] / nf * g[c];
            let rhs = r / nf * g[c] - rc[c];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// Analytic conformal-curvature oracle for g = e^{2 phi} delta on a flat
/// background, used by the test suite and the convergence reports:
/// Ric = -(n-2)(Hess phi - d phi x d phi)
///       - (Lap phi + (n-2) |grad phi|^2) delta.
pub fn conformal_ricci_oracle(
    n: usize,
    phi_grad: &[f64],
    phi_hess: &[[f64; 4]; 4],
) -> DMatrix<f64> {
    let nf = n as f64;
    let mut lap = 0.0;
    let mut grad_sq = 0.0;
    for a in 0..n {
        lap += phi_hess[a][a];
        grad_sq += phi_grad[a] * phi_grad[a];
    }
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut v = -(nf - 2.0) * (phi_hess[a][b] - phi_grad[a] * phi_grad[b]);
            if a == b {
                v -= lap + (nf - 2.0) * grad_sq;
            }
            out[(a, b)] = v;
        }
    }
    out
}
