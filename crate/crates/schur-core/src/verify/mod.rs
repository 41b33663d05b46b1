//! Assembly and verification of the almost-Schur inequalities.
//!
//! The harness is layered. `domain` pairs a geometry backend (periodic grid
//! or triangle mesh) with its weak Laplacian, first nonzero eigenvalue,
//! diameter, and Ricci lower bound, and samples candidate tensors T.
//! `theorems` fits or prescribes the divergence constant c, reduces every
//! statement to three shared scalar integrals, and assembles the trace and
//! full-tensor forms with hypothesis flags attached. `report` defines the
//! serializable verdict with its CSV and JSON encodings, and `convergence`
//! reruns one job across resolutions to estimate convergence orders.
//!
//! Every inequality handled here has the shape
//!
//! ```text
//! (nc-1)^2 int (B - Bbar)^2        <= n(n-1)(1 + nK/lambda1) int |T - (B/n)g|^2
//! (nc-1)^2 int |T - (Bbar/n)g|^2   <= [(nc-1)^2 + (n-1)(1 + nK/lambda1)] int |T - (B/n)g|^2
//! ```
//!
//! for a symmetric (0,2) tensor T with trace B and div T = c grad B, where
//! -K bounds the Ricci curvature below. The hypersurface (T = P_r) and
//! k-scalar (T = T_k(S_g)) statements are instances with c = 0 whose printed
//! constants are algebraic collapses of the general ones; the collapse is
//! gated at assembly time rather than assumed.

pub mod convergence;
pub mod domain;
pub mod report;
pub mod theorems;

pub use convergence::{convergence_study, ConvergenceOrders, ConvergenceStudy, StudyPoint};
pub use domain::{
    div_residual_max, estimate_c, prescribe_c, ricci_bound_k, Domain, GeometrySpec,
    TensorChoice, TensorField,
};
pub use report::{
    assemble_sides, reports_to_csv, reports_to_json, Diagnostics, EquationForm,
    HypothesisFlags, InequalityReport, PoissonDiagnostics, StoredIntegrals, CSV_HEADER,
};
pub use theorems::{
    bochner_residual, run_theorem, verify_general_tensor, verify_hypersurface_r,
    verify_k_scalar, verify_perez_r1, TheoremJob,
};

use serde::Serialize;
use thiserror::Error;

use crate::elliptic::EllipticError;
use crate::grid::GridError;
use crate::mesh::generate::GenerateError;
use crate::mesh::MeshError;
use crate::tensor::TensorError;

/// Equality threshold factor: both sides at or below
/// `EQUALITY_FACTOR * scale^2 * volume` set the equality-case flag, where
/// `scale` is the largest frame norm |T|_g over all samples.
pub const EQUALITY_FACTOR: f64 = 1e-8;
/// Relative tolerance of the pointwise cross identity
/// |T - (Bbar/n)g|^2 = |T - (B/n)g|^2 + (B - Bbar)^2/n.
pub const CROSS_IDENTITY_TOL: f64 = 1e-10;
/// Largest accepted relative residual of the div T = c grad B fit.
pub const C_FIT_MAX_RESIDUAL: f64 = 0.05;
/// Gradient scale below which the c fit is indeterminate: when the RMS of
/// |grad B|_g falls under this fraction of the tensor scale, div T = c grad B
/// constrains no c.
pub const C_FIT_GRAD_FLOOR: f64 = 1e-12;
/// Relative tolerance of the c = 0 constant collapse
/// 1 + (n-1)(1 + nK/lambda1) = n[1 + (n-1)K/lambda1].
pub const COLLAPSE_TOL: f64 = 1e-12;
/// Relative tolerance of the r = 1 reduction equivalence: T = A with c = 1
/// and T = P_1 with c = 0 must produce identical sides.
pub const REDUCTION_TOL: f64 = 1e-12;
/// Relative tolerance of the recompute gate on stored reports.
pub const RECOMPUTE_TOL: f64 = 1e-12;
/// Discretization allowance on the ratio LHS/RHS at reference resolutions.
pub const EPS_DISC: f64 = 0.05;

/// Errors from domain construction and theorem assembly.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("{op} needs the {need} backend, but {geometry} provides the other")]
    Backend { op: &'static str, need: &'static str, geometry: String },
    #[error("{what} = {value} out of range, expected {lo}..={hi}")]
    OrderRange { what: &'static str, value: usize, lo: usize, hi: usize },
    #[error("{0} is not certified locally conformally flat, so div T_k = 0 cannot be assumed")]
    NotConformallyFlat(String),
    #[error("c cannot be estimated on the mesh backend (no discrete divergence); prescribe it")]
    CNotEstimable,
    #[error("consistency gate '{gate}' failed: defect {defect:.3e} exceeds {tol:.3e}")]
    ConsistencyGate { gate: &'static str, defect: f64, tol: f64 },
    #[error("parameter {name} = {value} rejected: {constraint}")]
    BadParameter { name: &'static str, value: f64, constraint: &'static str },
    #[error("need at least three strictly increasing resolutions, got {0:?}")]
    ResolutionList(Vec<usize>),
}

/// Which lower-Ricci-bound convention a statement uses.
///
/// The general tensor statement assumes "Ric >= -(n-1)K" while the
/// hypersurface and k-scalar statements assume "Ric >= -K", yet both printed
/// amplification factors read (1 + nK/lambda1). The two conventions
/// therefore produce different numbers on the same geometry; every report
/// names the one it used instead of silently picking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KConvention {
    TensorThm,
    HypersurfaceThm,
}

impl KConvention {
    /// Token used in CSV rows and config files.
    pub fn token(self) -> &'static str {
        match self {
            KConvention::TensorThm => "tensor-thm",
            KConvention::HypersurfaceThm => "hypersurface-thm",
        }
    }

    /// The hypothesis as printed, with K the reported value.
    pub fn hypothesis(self) -> &'static str {
        match self {
            KConvention::TensorThm => "Ric >= -(n-1)K",
            KConvention::HypersurfaceThm => "Ric >= -K",
        }
    }
}

/// Whether K enters as measured or is forced to zero, the nonnegative-Ricci
/// variants of each statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KMode {
    Measured,
    ForcedZero,
}

/// How the divergence constant c was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CSource {
    /// Least-squares fit of div T against c grad B.
    Estimated,
    /// Analytically known for the tensor choice, or supplied by the caller.
    Prescribed,
    /// grad B vanishes identically, so every c satisfies the hypothesis.
    Indeterminate,
}

/// Fitted or prescribed divergence constant with its relative residual.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CFit {
    pub c: f64,
    /// Relative L^2 mismatch of div T - c grad B; `None` when the backend
    /// has no discrete divergence (prescribed c on meshes).
    pub residual: Option<f64>,
    pub source: CSource,
}

impl CFit {
    /// Whether the div T = c grad B hypothesis is accepted.
    pub fn accepted(&self) -> bool {
        match self.source {
            CSource::Estimated => self.residual.is_some_and(|r| r <= C_FIT_MAX_RESIDUAL),
            CSource::Prescribed | CSource::Indeterminate => true,
        }
    }
}

/// Static description of one bundled statement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TheoremInfo {
    pub id: &'static str,
    /// Equation tags of the trace and full-tensor forms.
    pub equations: &'static [&'static str],
    pub convention: KConvention,
    pub k_mode: KMode,
    /// What the statement needs from the geometry and tensor.
    pub requires: &'static str,
}

const CATALOG: [TheoremInfo; 7] = [
    TheoremInfo {
        id: "thm-1.7",
        equations: &["ine-r1", "ine-r2"],
        convention: KConvention::TensorThm,
        k_mode: KMode::Measured,
        requires: "closed geometry, symmetric T with div T = c grad B",
    },
    TheoremInfo {
        id: "thm-1.8",
        equations: &["ine-r3", "ine-r4"],
        convention: KConvention::TensorThm,
        k_mode: KMode::ForcedZero,
        requires: "as thm-1.7, with Ric >= 0",
    },
    TheoremInfo {
        id: "thm-1.9",
        equations: &["ine-rm1", "ine-rm2"],
        convention: KConvention::HypersurfaceThm,
        k_mode: KMode::Measured,
        requires: "embedded hypersurface, T = P_r, 2 <= r <= n",
    },
    TheoremInfo {
        id: "thm-1.10",
        equations: &["ine-rm03", "ine-rm4"],
        convention: KConvention::HypersurfaceThm,
        k_mode: KMode::ForcedZero,
        requires: "as thm-1.9, with Ric >= 0",
    },
    TheoremInfo {
        id: "thm-1.11",
        equations: &["ine-ks1", "ine-ks2"],
        convention: KConvention::HypersurfaceThm,
        k_mode: KMode::Measured,
        requires: "locally conformally flat, n >= 3, T = T_k(S_g), 2 <= k <= n",
    },
    TheoremInfo {
        id: "thm-1.12",
        equations: &["ine-ks1", "ine-ks2"],
        convention: KConvention::HypersurfaceThm,
        k_mode: KMode::ForcedZero,
        requires: "as thm-1.11, with Ric >= 0",
    },
    TheoremInfo {
        id: "perez-r1",
        equations: &["ine-rm5"],
        convention: KConvention::HypersurfaceThm,
        k_mode: KMode::Measured,
        requires: "closed surface mesh, T = A (equivalently T = P_1)",
    },
];

/// Every verifiable statement bundled with the harness.
pub fn theorem_catalog() -> &'static [TheoremInfo] {
    &CATALOG
}

/// Catalog entry by id.
pub fn theorem_info(id: &str) -> Option<&'static TheoremInfo> {
    CATALOG.iter().find(|t| t.id == id)
}

/// The eigenvalue lower bound and the printed diameter constants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LiYauConstants {
    /// lambda1 >= alpha = 1 / ((n-1) d^2 exp[1 + sqrt(1 + 4(n-1)^2 K d^2)]),
    /// with K in the "Ric >= -(n-1)K" convention.
    pub alpha: f64,
    /// Printed trace-form constant
    /// C = (4n(n-1)/(n-2)^2) (1 + n(n-1) K d^2 exp[1 + sqrt(1 + 4(n-1)^2 K d^2)]);
    /// undefined for n = 2.
    pub c_printed: Option<f64>,
    /// Full-form constant implied by the cross identity: 1 + C/n.
    pub c_bar: Option<f64>,
}

fn li_yau_check_params(n: usize, k: f64, d: f64) -> Result<(), VerifyError> {
    if n < 2 {
        return Err(VerifyError::OrderRange { what: "n", value: n, lo: 2, hi: usize::MAX });
    }
    if !k.is_finite() || k < 0.0 {
        return Err(VerifyError::BadParameter {
            name: "K",
            value: k,
            constraint: "lower Ricci bound constant must be finite and >= 0",
        });
    }
    if !d.is_finite() || d <= 0.0 {
        return Err(VerifyError::BadParameter {
            name: "d",
            value: d,
            constraint: "diameter must be finite and > 0",
        });
    }
    Ok(())
}

/// exp[1 + sqrt(1 + 4(n-1)^2 K d^2)].
fn li_yau_exp_term(n: usize, k: f64, d: f64) -> f64 {
    let nf = n as f64;
    (1.0 + (1.0 + 4.0 * (nf - 1.0) * (nf - 1.0) * k * d * d).sqrt()).exp()
}

/// Diameter-only eigenvalue bound and the printed constant of the
/// diameter corollary (the c = 1/2 trace-form specialization).
pub fn li_yau_constants(n: usize, k: f64, d: f64) -> Result<LiYauConstants, VerifyError> {
    li_yau_check_params(n, k, d)?;
    let nf = n as f64;
    let e = li_yau_exp_term(n, k, d);
    let alpha = 1.0 / ((nf - 1.0) * d * d * e);
    let c_printed = (n >= 3).then(|| {
        4.0 * nf * (nf - 1.0) / ((nf - 2.0) * (nf - 2.0)) * (1.0 + nf * (nf - 1.0) * k * d * d * e)
    });
    let c_bar = c_printed.map(|c| 1.0 + c / nf);
    Ok(LiYauConstants { alpha, c_printed, c_bar })
}

/// Diameter constant for general c != 1/n:
/// n(n-1)/(nc-1)^2 (1 + n(n-1) K d^2 exp[1 + sqrt(1 + 4(n-1)^2 K d^2)]).
///
/// The printed constant is the c = 1/2 case of this expression although the
/// corollary is stated for every constant c != 1/n; callers that surface
/// this value should flag it as an interpretation.
pub fn li_yau_constant_general(n: usize, c: f64, k: f64, d: f64) -> Result<f64, VerifyError> {
    li_yau_check_params(n, k, d)?;
    let nf = n as f64;
    let p = nf * c - 1.0;
    if !p.is_finite() || p.abs() < 1e-12 {
        return Err(VerifyError::BadParameter {
            name: "c",
            value: c,
            constraint: "|nc - 1| >= 1e-12 required (c = 1/n has no diameter constant)",
        });
    }
    Ok(nf * (nf - 1.0) / (p * p) * (1.0 + nf * (nf - 1.0) * k * d * d * li_yau_exp_term(n, k, d)))
}

/// Outcome of checking alpha <= lambda1 on a built domain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LiYauCheck {
    /// Measured K under "Ric >= -(n-1)K".
    pub k: f64,
    /// Graph diameter of the discretization.
    pub diameter: f64,
    pub alpha: f64,
    pub lambda1: f64,
    /// lambda1 - alpha; nonnegative when the bound holds.
    pub slack: f64,
}

/// Check the diameter eigenvalue bound against the computed lambda1.
pub fn li_yau_check(domain: &Domain) -> Result<LiYauCheck, VerifyError> {
    let k = ricci_bound_k(domain, KConvention::TensorThm);
    let diameter = domain.diameter();
    let alpha = li_yau_constants(domain.n(), k, diameter)?.alpha;
    let lambda1 = domain.lambda1();
    Ok(LiYauCheck { k, diameter, alpha, lambda1, slack: lambda1 - alpha })
}
