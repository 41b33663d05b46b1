//! Assembly of the inequality reports.
//!
//! Every statement reduces to the same three integrals over the sampled
//! frames of T: the trace variance int (B - Bbar)^2, the deviator
//! int |T - (B/n)g|^2, and the mean-trace deviator int |T - (Bbar/n)g|^2.
//! The specialized statements (T = P_r, T = T_k, the r = 1 surface case)
//! dispatch through the same assembly after gating the algebraic identities
//! that relate their printed constants to the general ones, so a bug in the
//! specialization cannot silently diverge from the general machinery.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::elliptic::solve_poisson;
use crate::grid::curvature::{bochner_terms, curvature_pack};
use crate::grid::stencil::Order;
use crate::grid::sym_idx;

use super::domain::{
    estimate_c, frame_norm_sq, prescribe_c, ricci_bound_k, sample_stats, Domain, TensorChoice,
    TensorField,
};
use super::report::{
    assemble_sides, Diagnostics, EquationForm, HypothesisFlags, InequalityReport,
    PoissonDiagnostics, StoredIntegrals,
};
use super::{
    CFit, CSource, KConvention, KMode, VerifyError, COLLAPSE_TOL, CROSS_IDENTITY_TOL,
    EQUALITY_FACTOR, REDUCTION_TOL,
};

/// Report labels of one statement: theorem id plus the equation tags of the
/// trace and full-tensor forms.
#[derive(Clone, Copy)]
struct Labels {
    theorem: &'static str,
    trace_eq: &'static str,
    full_eq: &'static str,
}

/// Everything shared by the two forms of one statement on one geometry.
struct Assembly {
    n: usize,
    c: f64,
    k: f64,
    lambda1: f64,
    mean_b: f64,
    scale: f64,
    epsilon_eq: f64,
    integrals: StoredIntegrals,
    cross_defect: f64,
    hypothesis: HypothesisFlags,
    poisson: Option<PoissonDiagnostics>,
}

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn assemble(
    domain: &Domain,
    field: &TensorField,
    fit: &CFit,
    convention: KConvention,
    k_mode: KMode,
) -> Result<Assembly, VerifyError> {
    let stats = sample_stats(domain, field)?;
    let n = stats.n;
    let nf = n as f64;
    let m = n * (n + 1) / 2;
    let size = stats.b.len();
    let mean_b = domain.mean(&stats.b);
    let volume = domain.volume();
    let epsilon_eq = EQUALITY_FACTOR * stats.scale * stats.scale * volume;

    // Deviators are formed by subtracting the trace part inside the frame
    // before squaring; expanding |T|^2 - B^2/n would cancel catastrophically
    // exactly in the equality cases the flag must detect.
    let mut tr_sq = vec![0.0f64; size];
    let mut dev_sq = vec![0.0f64; size];
    let mut devbar_sq = vec![0.0f64; size];
    let mut buf = vec![0.0f64; m];
    let mut cross_defect = 0.0f64;
    let cross_floor = EQUALITY_FACTOR * stats.scale * stats.scale;
    for p in 0..size {
        let frame = &stats.frames[p * m..(p + 1) * m];
        let b = stats.b[p];
        let d = b - mean_b;
        tr_sq[p] = d * d;
        buf.copy_from_slice(frame);
        for i in 0..n {
            buf[sym_idx(n, i, i)] = frame[sym_idx(n, i, i)] - b / nf;
        }
        dev_sq[p] = frame_norm_sq(n, &buf);
        for i in 0..n {
            buf[sym_idx(n, i, i)] = frame[sym_idx(n, i, i)] - mean_b / nf;
        }
        devbar_sq[p] = frame_norm_sq(n, &buf);
        // Pointwise cross identity
        // |T - (Bbar/n)g|^2 = |T - (B/n)g|^2 + (B - Bbar)^2/n.
        let lhs = devbar_sq[p];
        let rhs = dev_sq[p] + tr_sq[p] / nf;
        let den = lhs.abs().max(rhs.abs()).max(cross_floor).max(f64::MIN_POSITIVE);
        cross_defect = cross_defect.max((lhs - rhs).abs() / den);
    }
    if cross_defect > CROSS_IDENTITY_TOL {
        return Err(VerifyError::ConsistencyGate {
            gate: "cross-identity",
            defect: cross_defect,
            tol: CROSS_IDENTITY_TOL,
        });
    }

    let integrals = StoredIntegrals {
        volume,
        trace_variance: domain.integrate(&tr_sq),
        deviator: domain.integrate(&dev_sq),
        deviator_mean_trace: domain.integrate(&devbar_sq),
    };

    let k = match k_mode {
        KMode::Measured => ricci_bound_k(domain, convention),
        KMode::ForcedZero => 0.0,
    };
    let ric_min = domain.ric_min();
    let ric_nonnegative = ric_min >= 0.0;
    let hypothesis = HypothesisFlags {
        ric_positive: ric_min > 0.0,
        ric_nonnegative,
        ric_min,
        c_source: fit.source,
        c_residual: fit.residual,
        c_accepted: fit.accepted(),
        satisfied: fit.accepted() && (k_mode == KMode::Measured || ric_nonnegative),
    };

    // Poisson step: solve for f with Lap f = B - Bbar and confirm the
    // Poincare bound int |grad f|^2 <= (1/lambda1) int (B - Bbar)^2, which
    // the discrete operator satisfies up to solver tolerance.
    let poisson = if integrals.trace_variance > epsilon_eq {
        let mut rhs: Vec<f64> = stats.b.iter().map(|&v| v - mean_b).collect();
        let drift = domain.mean(&rhs);
        for v in &mut rhs {
            *v -= drift;
        }
        let sol = solve_poisson(domain.operator(), &rhs)?;
        let dirichlet_energy = domain.operator().dirichlet_energy(&sol.f);
        let lambda1 = domain.lambda1();
        Some(PoissonDiagnostics {
            residual: sol.residual,
            iterations: sol.iterations,
            dirichlet_energy,
            poincare_bound: integrals.trace_variance / lambda1,
            slack: dirichlet_energy * lambda1 / integrals.trace_variance,
        })
    } else {
        None
    };

    Ok(Assembly {
        n,
        c: fit.c,
        k,
        lambda1: domain.lambda1(),
        mean_b,
        scale: stats.scale,
        epsilon_eq,
        integrals,
        cross_defect,
        hypothesis,
        poisson,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_report(
    domain: &Domain,
    labels: Labels,
    equation: &'static str,
    form: EquationForm,
    convention: KConvention,
    k_mode: KMode,
    asm: &Assembly,
    trivial: bool,
    div_residual: Option<f64>,
    timestamp_unix_ms: u64,
    wall_ms: u64,
) -> InequalityReport {
    let (lhs, rhs) = assemble_sides(form, asm.n, asm.c, asm.k, asm.lambda1, &asm.integrals);
    let ratio = (!trivial && rhs > asm.epsilon_eq).then(|| lhs / rhs);
    let equality = lhs <= asm.epsilon_eq && rhs <= asm.epsilon_eq;
    let rigidity_asserted = equality && asm.hypothesis.ric_positive && !trivial;
    InequalityReport {
        theorem: labels.theorem,
        equation,
        form,
        geometry: domain.name().to_owned(),
        resolution: domain.resolution().to_owned(),
        n: asm.n,
        c: asm.c,
        convention,
        k_mode,
        k: asm.k,
        lambda1: asm.lambda1,
        mean_b: asm.mean_b,
        lhs,
        rhs,
        ratio,
        equality,
        trivial,
        rigidity_asserted,
        epsilon_eq: asm.epsilon_eq,
        integrals: asm.integrals,
        hypothesis: asm.hypothesis,
        diagnostics: Diagnostics {
            timestamp_unix_ms,
            wall_ms,
            eigen_outer_iterations: domain.eigen().outer_iterations,
            eigen_cg_iterations: domain.eigen().cg_iterations,
            cross_identity_defect: asm.cross_defect,
            constant_collapse_defect: None,
            reduction_defect: None,
            div_residual,
            poisson: asm.poisson,
            scale: asm.scale,
        },
    }
}

/// Assemble the trace and full-tensor reports for one statement.
fn general_pair(
    domain: &Domain,
    field: &TensorField,
    fit: &CFit,
    convention: KConvention,
    k_mode: KMode,
    labels: Labels,
) -> Result<[InequalityReport; 2], VerifyError> {
    let start = Instant::now();
    let timestamp = unix_ms();
    let asm = assemble(domain, field, fit, convention, k_mode)?;
    let wall = start.elapsed().as_millis() as u64;
    let reports = [
        make_report(
            domain,
            labels,
            labels.trace_eq,
            EquationForm::Trace,
            convention,
            k_mode,
            &asm,
            false,
            fit.residual,
            timestamp,
            wall,
        ),
        make_report(
            domain,
            labels,
            labels.full_eq,
            EquationForm::FullTensor,
            convention,
            k_mode,
            &asm,
            false,
            fit.residual,
            timestamp,
            wall,
        ),
    ];
    for r in &reports {
        r.internal_gate()?;
    }
    Ok(reports)
}

/// Both-sides-zero report pair for the algebraically vanishing cases
/// (r = n or k = n, where the Newton tensor is identically zero).
fn trivial_pair(
    domain: &Domain,
    labels: Labels,
    convention: KConvention,
    k_mode: KMode,
) -> Result<[InequalityReport; 2], VerifyError> {
    let start = Instant::now();
    let timestamp = unix_ms();
    let k = match k_mode {
        KMode::Measured => ricci_bound_k(domain, convention),
        KMode::ForcedZero => 0.0,
    };
    let ric_min = domain.ric_min();
    let ric_nonnegative = ric_min >= 0.0;
    let asm = Assembly {
        n: domain.n(),
        c: 0.0,
        k,
        lambda1: domain.lambda1(),
        mean_b: 0.0,
        scale: 0.0,
        epsilon_eq: 0.0,
        integrals: StoredIntegrals {
            volume: domain.volume(),
            trace_variance: 0.0,
            deviator: 0.0,
            deviator_mean_trace: 0.0,
        },
        cross_defect: 0.0,
        hypothesis: HypothesisFlags {
            ric_positive: ric_min > 0.0,
            ric_nonnegative,
            ric_min,
            c_source: CSource::Prescribed,
            c_residual: None,
            c_accepted: true,
            satisfied: k_mode == KMode::Measured || ric_nonnegative,
        },
        poisson: None,
    };
    let wall = start.elapsed().as_millis() as u64;
    let reports = [
        make_report(
            domain,
            labels,
            labels.trace_eq,
            EquationForm::Trace,
            convention,
            k_mode,
            &asm,
            true,
            None,
            timestamp,
            wall,
        ),
        make_report(
            domain,
            labels,
            labels.full_eq,
            EquationForm::FullTensor,
            convention,
            k_mode,
            &asm,
            true,
            None,
            timestamp,
            wall,
        ),
    ];
    for r in &reports {
        r.internal_gate()?;
    }
    Ok(reports)
}

/// General tensor statement: T symmetric with div T = c grad B. `k_mode`
/// selects the measured-K statement or its nonnegative-Ricci variant, which
/// is the same inequality with K forced to zero.
pub fn verify_general_tensor(
    domain: &Domain,
    field: &TensorField,
    fit: &CFit,
    convention: KConvention,
    k_mode: KMode,
) -> Result<[InequalityReport; 2], VerifyError> {
    let labels = match k_mode {
        KMode::Measured => Labels { theorem: "thm-1.7", trace_eq: "ine-r1", full_eq: "ine-r2" },
        KMode::ForcedZero => Labels { theorem: "thm-1.8", trace_eq: "ine-r3", full_eq: "ine-r4" },
    };
    general_pair(domain, field, fit, convention, k_mode, labels)
}

/// Relative defect of the c = 0 constant collapse
/// 1 + (n-1)(1 + nK/lambda1) = n[1 + (n-1)K/lambda1], which must be exact
/// up to roundoff whenever both sides use the same K.
fn collapse_defect(n: usize, k: f64, lambda1: f64) -> f64 {
    let nf = n as f64;
    let general = 1.0 + (nf - 1.0) * (1.0 + nf * k / lambda1);
    let printed = nf * (1.0 + (nf - 1.0) * k / lambda1);
    (general - printed).abs() / printed.abs().max(1.0)
}

/// Newton-tensor statement on an embedded hypersurface: T = P_r, c = 0,
/// K under the "Ric >= -K" convention. r = n is trivially zero.
pub fn verify_hypersurface_r(
    domain: &Domain,
    r: usize,
    k_mode: KMode,
) -> Result<[InequalityReport; 2], VerifyError> {
    let n = domain.n();
    if !(2..=n).contains(&r) {
        return Err(VerifyError::OrderRange { what: "r", value: r, lo: 2, hi: n });
    }
    if let Some((manifold, _)) = domain.grid() {
        manifold.embedding()?;
    }
    let convention = KConvention::HypersurfaceThm;
    let labels = match k_mode {
        KMode::Measured => {
            Labels { theorem: "thm-1.9", trace_eq: "ine-rm1", full_eq: "ine-rm2" }
        }
        KMode::ForcedZero => {
            Labels { theorem: "thm-1.10", trace_eq: "ine-rm03", full_eq: "ine-rm4" }
        }
    };
    let k = match k_mode {
        KMode::Measured => ricci_bound_k(domain, convention),
        KMode::ForcedZero => 0.0,
    };
    let defect = collapse_defect(n, k, domain.lambda1());
    if defect > COLLAPSE_TOL {
        return Err(VerifyError::ConsistencyGate {
            gate: "constant-collapse",
            defect,
            tol: COLLAPSE_TOL,
        });
    }
    let mut reports = if r == n {
        trivial_pair(domain, labels, convention, k_mode)?
    } else {
        let field = domain.tensor_field(TensorChoice::NewtonShape { r })?;
        let fit = prescribe_c(domain, &field, 0.0)?;
        general_pair(domain, &field, &fit, convention, k_mode, labels)?
    };
    for rep in &mut reports {
        rep.diagnostics.constant_collapse_defect = Some(defect);
    }
    Ok(reports)
}

/// Surface (r = 1) statement. Verified twice, as T = A with c = 1 and as
/// T = P_1 with c = 0; both routes must produce identical sides because
/// P_1 = Hg - A swaps the principal curvatures, and the returned trace
/// report carries their largest relative spread.
pub fn verify_perez_r1(domain: &Domain) -> Result<InequalityReport, VerifyError> {
    if domain.mesh().is_none() {
        return Err(VerifyError::Backend {
            op: "verify_perez_r1",
            need: "mesh",
            geometry: domain.name().to_owned(),
        });
    }
    let convention = KConvention::HypersurfaceThm;
    let labels = Labels { theorem: "perez-r1", trace_eq: "ine-rm5", full_eq: "ine-rm6" };

    let shape = domain.tensor_field(TensorChoice::Shape)?;
    let fit_a = prescribe_c(domain, &shape, 1.0)?;
    let pair_a = general_pair(domain, &shape, &fit_a, convention, KMode::Measured, labels)?;

    let p1 = domain.tensor_field(TensorChoice::NewtonShape { r: 1 })?;
    let fit_p = prescribe_c(domain, &p1, 0.0)?;
    let pair_p = general_pair(domain, &p1, &fit_p, convention, KMode::Measured, labels)?;

    let eps = pair_a[0].epsilon_eq;
    let mut defect = 0.0f64;
    for (a, p) in pair_a.iter().zip(&pair_p) {
        for (va, vp) in [(a.lhs, p.lhs), (a.rhs, p.rhs)] {
            defect = defect.max((va - vp).abs() / va.abs().max(vp.abs()).max(eps));
        }
    }
    if defect > REDUCTION_TOL {
        return Err(VerifyError::ConsistencyGate {
            gate: "perez-reduction",
            defect,
            tol: REDUCTION_TOL,
        });
    }
    let [mut report, _] = pair_a;
    report.diagnostics.reduction_defect = Some(defect);
    Ok(report)
}

/// k-scalar statement on a certified locally conformally flat grid:
/// T = T_k(S_g), c = 0, K under the "Ric >= -K" convention as printed.
pub fn verify_k_scalar(
    domain: &Domain,
    k: usize,
    k_mode: KMode,
) -> Result<[InequalityReport; 2], VerifyError> {
    if domain.grid().is_none() {
        return Err(VerifyError::Backend {
            op: "verify_k_scalar",
            need: "grid",
            geometry: domain.name().to_owned(),
        });
    }
    let n = domain.n();
    if n < 3 {
        return Err(VerifyError::BadParameter {
            name: "n",
            value: n as f64,
            constraint: "the Schouten tensor needs n >= 3",
        });
    }
    if !domain.conformally_flat() {
        return Err(VerifyError::NotConformallyFlat(domain.name().to_owned()));
    }
    if !(2..=n).contains(&k) {
        return Err(VerifyError::OrderRange { what: "k", value: k, lo: 2, hi: n });
    }
    let convention = KConvention::HypersurfaceThm;
    let labels = match k_mode {
        KMode::Measured => {
            Labels { theorem: "thm-1.11", trace_eq: "ine-ks1", full_eq: "ine-ks2" }
        }
        KMode::ForcedZero => {
            Labels { theorem: "thm-1.12", trace_eq: "ine-ks1", full_eq: "ine-ks2" }
        }
    };
    if k == n {
        return trivial_pair(domain, labels, convention, k_mode);
    }
    let field = domain.tensor_field(TensorChoice::NewtonSchouten { k })?;
    let fit = prescribe_c(domain, &field, 0.0)?;
    general_pair(domain, &field, &fit, convention, k_mode, labels)
}

/// Relative residual of the integrated identity
/// int |Hess f|^2 = int (Lap f)^2 - int Ric(grad f, grad f) on a grid,
/// sampled with a sixth-order curvature pack.
pub fn bochner_residual(domain: &Domain, f: &[f64]) -> Result<f64, VerifyError> {
    let Some((manifold, _)) = domain.grid() else {
        return Err(VerifyError::Backend {
            op: "bochner_residual",
            need: "grid",
            geometry: domain.name().to_owned(),
        });
    };
    let pack = curvature_pack(manifold, Order::Sixth);
    let terms = bochner_terms(manifold, &pack, f)?;
    let ih = manifold.integrate(&terms.hess_sq)?;
    let il = manifold.integrate(&terms.lap_sq)?;
    let ir = manifold.integrate(&terms.ric_grad)?;
    let den = ih.abs().max(il.abs() + ir.abs());
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((ih - (il - ir)).abs() / den)
}

/// One dispatchable verification task.
#[derive(Debug, Clone, PartialEq)]
pub enum TheoremJob {
    /// General statement; `c` overrides the analytic prescription, and with
    /// neither available the constant is least-squares estimated.
    GeneralTensor {
        choice: TensorChoice,
        c: Option<f64>,
        convention: KConvention,
        k_mode: KMode,
    },
    Hypersurface { r: usize, k_mode: KMode },
    KScalar { k: usize, k_mode: KMode },
    Perez,
}

/// Run one job on a built domain.
pub fn run_theorem(domain: &Domain, job: &TheoremJob) -> Result<Vec<InequalityReport>, VerifyError> {
    match job {
        TheoremJob::GeneralTensor { choice, c, convention, k_mode } => {
            let field = domain.tensor_field(*choice)?;
            let fit = match c.or(choice.prescribed_c()) {
                Some(c) => prescribe_c(domain, &field, c)?,
                None => estimate_c(domain, &field)?,
            };
            Ok(verify_general_tensor(domain, &field, &fit, *convention, *k_mode)?.to_vec())
        }
        TheoremJob::Hypersurface { r, k_mode } => {
            Ok(verify_hypersurface_r(domain, *r, *k_mode)?.to_vec())
        }
        TheoremJob::KScalar { k, k_mode } => Ok(verify_k_scalar(domain, *k, *k_mode)?.to_vec()),
        TheoremJob::Perez => Ok(vec![verify_perez_r1(domain)?]),
    }
}
