//! Re-running one job across resolutions and estimating convergence orders.
//!
//! Orders are least-squares slopes of ln(error) against ln(h) with h = 1/res.
//! Residuals (divergence, contracted Bianchi) are measured directly; for
//! lambda1 and the inequality ratio the finest-level value stands in for the
//! continuum limit, so those orders use one fewer point and skew high.

use serde::Serialize;

use crate::grid::curvature::{bianchi_residual, one_form_norm_sq};

use super::domain::{div_residual_max, Domain, GeometrySpec, TensorField};
use super::report::InequalityReport;
use super::theorems::{run_theorem, TheoremJob};
use super::VerifyError;

/// Two ratios agreeing to within this relative spread count as stable to
/// three significant digits.
const RATIO_STABLE_REL: f64 = 5e-4;

/// One resolution level of a study.
#[derive(Debug, Clone, Serialize)]
pub struct StudyPoint {
    pub resolution: usize,
    pub lambda1: f64,
    /// Trace-form LHS/RHS, when the report defines it.
    pub ratio: Option<f64>,
    /// Max-norm of |div T - c grad B|_g; grid backends only.
    pub div_residual: Option<f64>,
    /// Max-norm of |div Ric - grad R/2|_g; grid backends only.
    pub curvature_residual: Option<f64>,
    pub reports: Vec<InequalityReport>,
}

/// Estimated orders; `None` when a quantity is missing or already at
/// roundoff on some level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceOrders {
    pub div_residual: Option<f64>,
    pub curvature_residual: Option<f64>,
    pub lambda1: Option<f64>,
    pub ratio: Option<f64>,
}

/// A job re-run over increasing resolutions.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub geometry: String,
    pub points: Vec<StudyPoint>,
    pub orders: ConvergenceOrders,
    /// Whether the two finest ratios agree to three significant digits.
    pub ratio_stable_3sig: Option<bool>,
}

/// Least-squares slope of ln(e) against ln(h); `None` unless at least two
/// pairs exist and every entry is positive and finite.
fn loglog_slope(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for &(h, e) in pairs {
        if !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite()) {
            return None;
        }
        xs.push(h.ln());
        ys.push(e.ln());
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let den = n * sxx - sx * sx;
    (den.abs() > 0.0).then(|| (n * sxy - sx * sy) / den)
}

/// The tensor whose divergence residual tracks the job, when the backend can
/// measure one. Trivial exponents (r = n, k = n) and mesh jobs have none.
fn job_field(domain: &Domain, job: &TheoremJob) -> Result<Option<TensorField>, VerifyError> {
    use super::domain::TensorChoice;
    let n = domain.n();
    let choice = match job {
        TheoremJob::GeneralTensor { choice, .. } => *choice,
        TheoremJob::Hypersurface { r, .. } if *r < n => TensorChoice::NewtonShape { r: *r },
        TheoremJob::KScalar { k, .. } if *k < n => TensorChoice::NewtonSchouten { k: *k },
        _ => return Ok(None),
    };
    if domain.grid().is_none() {
        return Ok(None);
    }
    Ok(Some(domain.tensor_field(choice)?))
}

fn max_one_form_norm(domain: &Domain, omega: &[f64]) -> Result<f64, VerifyError> {
    let (gm, _) = domain.grid().expect("caller checked the backend");
    let norms = one_form_norm_sq(gm, omega)?;
    Ok(norms.iter().copied().fold(0.0f64, f64::max).max(0.0).sqrt())
}

/// Run `job` on `spec` at every resolution and fit convergence orders.
pub fn convergence_study(
    spec: &GeometrySpec,
    job: &TheoremJob,
    resolutions: &[usize],
) -> Result<ConvergenceStudy, VerifyError> {
    if resolutions.len() < 3 || resolutions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VerifyError::ResolutionList(resolutions.to_vec()));
    }

    let mut points = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let domain = Domain::build(spec, res)?;
        let reports = run_theorem(&domain, job)?;
        let ratio = reports[0].ratio;
        let c = reports[0].c;
        let div_residual = match job_field(&domain, job)? {
            Some(field) => div_residual_max(&domain, &field, c)?,
            None => None,
        };
        let curvature_residual = match domain.grid() {
            Some((gm, pack)) => Some(max_one_form_norm(&domain, &bianchi_residual(gm, pack)?)?),
            None => None,
        };
        points.push(StudyPoint {
            resolution: res,
            lambda1: domain.lambda1(),
            ratio,
            div_residual,
            curvature_residual,
            reports,
        });
    }

    let h = |p: &StudyPoint| 1.0 / p.resolution as f64;
    let residual_order = |pick: fn(&StudyPoint) -> Option<f64>| {
        let pairs: Option<Vec<(f64, f64)>> =
            points.iter().map(|p| pick(p).map(|e| (h(p), e))).collect();
        pairs.and_then(|pairs| loglog_slope(&pairs))
    };
    // lambda1 and ratio converge to an unknown limit; difference against the
    // finest level over the remaining points.
    let proxy_order = |pick: fn(&StudyPoint) -> Option<f64>| {
        let last = pick(points.last().expect("at least three points"))?;
        let pairs: Option<Vec<(f64, f64)>> = points[..points.len() - 1]
            .iter()
            .map(|p| pick(p).map(|v| (h(p), (v - last).abs())))
            .collect();
        pairs.and_then(|pairs| loglog_slope(&pairs))
    };
    let orders = ConvergenceOrders {
        div_residual: residual_order(|p| p.div_residual),
        curvature_residual: residual_order(|p| p.curvature_residual),
        lambda1: proxy_order(|p| Some(p.lambda1)),
        ratio: proxy_order(|p| p.ratio),
    };

    let ratio_stable_3sig = match (points[points.len() - 2].ratio, points[points.len() - 1].ratio)
    {
        (Some(a), Some(b)) => {
            Some((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE) <= RATIO_STABLE_REL)
        }
        _ => None,
    };

    Ok(ConvergenceStudy { geometry: spec.name(), points, orders, ratio_stable_3sig })
}

#[cfg(test)]
mod tests {
    use super::super::{KConvention, KMode, TensorChoice};
    use super::*;
    use crate::grid::build::{EmbeddedSpec, IntrinsicSpec};

    #[test]
    fn resolution_lists_must_be_three_strictly_increasing() {
        let spec = GeometrySpec::Intrinsic(IntrinsicSpec::Flat { n: 3, len: 1.0 });
        let job = TheoremJob::KScalar { k: 2, k_mode: KMode::Measured };
        for bad in [&[8usize, 16] as &[usize], &[8, 8, 16], &[16, 8, 24], &[]] {
            assert!(matches!(
                convergence_study(&spec, &job, bad),
                Err(VerifyError::ResolutionList(_))
            ));
        }
    }

    #[test]
    fn flat_k_scalar_study_is_exactly_zero_at_every_level() {
        let spec = GeometrySpec::Intrinsic(IntrinsicSpec::Flat { n: 3, len: 1.0 });
        let job = TheoremJob::KScalar { k: 2, k_mode: KMode::Measured };
        // Resolutions start at 12: the lambda1 error is nonmonotone below.
        let study = convergence_study(&spec, &job, &[12, 16, 24]).unwrap();
        assert_eq!(study.points.len(), 3);
        for p in &study.points {
            assert_eq!(p.div_residual, Some(0.0));
            assert_eq!(p.curvature_residual, Some(0.0));
            assert_eq!(p.ratio, None);
        }
        // Exact zeros leave nothing to fit an order to.
        assert!(study.orders.div_residual.is_none());
        assert!(study.orders.curvature_residual.is_none());
        assert!(study.orders.ratio.is_none());
        assert!(study.ratio_stable_3sig.is_none());
        if let Some(order) = study.orders.lambda1 {
            assert!(order > 3.0, "lambda1 order = {order}");
        }
    }

    #[test]
    fn torus_ricci_study_reports_curvature_decay() {
        let spec = GeometrySpec::Embedded(EmbeddedSpec::Torus3 { r1: 2.0, r: 0.5 });
        let job = TheoremJob::GeneralTensor {
            choice: TensorChoice::Ricci,
            c: None,
            convention: KConvention::TensorThm,
            k_mode: KMode::Measured,
        };
        let study = convergence_study(&spec, &job, &[16, 24, 32]).unwrap();
        for w in study.points.windows(2) {
            assert!(
                w[1].curvature_residual.unwrap() < w[0].curvature_residual.unwrap(),
                "bianchi residual must shrink under refinement"
            );
        }
        let order = study.orders.curvature_residual.expect("positive residuals");
        assert!(order > 2.0, "curvature order = {order}");
        // Prefactor zero at n = 2, c = 1/2: the ratio is 0 at every level.
        assert_eq!(study.ratio_stable_3sig, Some(true));
    }

    #[test]
    fn mesh_studies_skip_grid_only_residuals() {
        let spec = GeometrySpec::Ellipsoid { a: 1.0, b: 1.0, c: 1.2 };
        let study = convergence_study(&spec, &TheoremJob::Perez, &[1, 2, 3]).unwrap();
        assert_eq!(study.points.len(), 3);
        for p in &study.points {
            assert!(p.div_residual.is_none());
            assert!(p.curvature_residual.is_none());
            assert!(p.lambda1 > 0.0);
            assert!(p.ratio.is_some());
        }
        assert!(study.orders.div_residual.is_none());
        assert_eq!(study.geometry, "ellipsoid(1,1,1.2)");
    }
}
