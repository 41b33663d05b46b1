//! End-to-end runs of the verification pipeline through the public API:
//! build a domain, run a theorem job, inspect the reports and their
//! serialized forms the way a consumer would.

use schur_core::grid::build::{ConformalPhi, EmbeddedSpec, IntrinsicSpec};
use schur_core::verify::{
    convergence_study, li_yau_check, reports_to_csv, reports_to_json, run_theorem, Domain,
    GeometrySpec, KConvention, KMode, TensorChoice, TheoremJob, CSV_HEADER,
};

fn ricci_job() -> TheoremJob {
    TheoremJob::GeneralTensor {
        choice: TensorChoice::Ricci,
        c: None,
        convention: KConvention::TensorThm,
        k_mode: KMode::Measured,
    }
}

#[test]
fn torus_ricci_reports_round_trip_through_both_formats() {
    let spec = GeometrySpec::Embedded(EmbeddedSpec::Torus3 { r1: 2.0, r: 0.5 });
    let domain = Domain::build(&spec, 16).unwrap();
    let reports = run_theorem(&domain, &ricci_job()).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.theorem, "thm-1.7");
        assert_eq!(r.geometry, "torus3(2,0.5)");
        assert_eq!(r.resolution, "res=16");
        // Surfaces have identically vanishing traceless Ricci, so the LHS
        // is exactly zero while the RHS carries the scalar variance.
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.ratio, Some(0.0));
        assert!((r.c - 0.5).abs() < 0.02, "c = {}", r.c);
        assert!(r.k > 0.0);
    }

    let csv = reports_to_csv(&reports);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 2);

    let json = reports_to_json(&reports).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    let arr = parsed.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    assert_eq!(arr[0]["theorem"], "thm-1.7");
    assert_eq!(arr[0]["equation"], "ine-r1");
    assert_eq!(arr[1]["equation"], "ine-r2");
    assert_eq!(arr[0]["hypothesis"]["satisfied"], true);
    assert!(arr[0]["diagnostics"]["cross_identity_defect"].as_f64().unwrap() < 1e-10);
}

#[test]
fn round_sphere_asserts_equality_and_rigidity() {
    let domain = Domain::build(&GeometrySpec::Icosphere { rho: 1.0 }, 4).unwrap();
    let report = run_theorem(&domain, &TheoremJob::Perez).unwrap().remove(0);
    assert_eq!(report.theorem, "perez-r1");
    assert!(report.equality, "lhs = {}, eps = {}", report.lhs, report.epsilon_eq);
    assert!(report.rigidity_asserted);
    assert!(!report.trivial);
    assert_eq!(report.c, 1.0);
    assert_eq!(report.k, 0.0, "round spheres have positive Ricci");
    assert_eq!(report.convention, KConvention::HypersurfaceThm);
    assert!(report.hypothesis.ric_positive);
}

#[test]
fn conformal_k_scalar_ratio_sits_inside_the_inequality() {
    let spec = GeometrySpec::Intrinsic(IntrinsicSpec::Conformal {
        n: 3,
        len: 1.0,
        phi: ConformalPhi::SinX,
        eps: 0.1,
    });
    let domain = Domain::build(&spec, 16).unwrap();
    let reports = run_theorem(&domain, &TheoremJob::KScalar { k: 2, k_mode: KMode::Measured }).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.theorem, "thm-1.11");
        let ratio = r.ratio.expect("a genuinely curved metric has rhs > eps");
        assert!(ratio > 0.0 && ratio < 1.0, "{} ratio = {ratio}", r.equation);
        assert!(r.hypothesis.satisfied);
        let div = r.diagnostics.div_residual.expect("grids record div T_k");
        assert!(div < 0.05, "div residual {div}");
    }
}

#[test]
fn li_yau_bound_sits_below_lambda1_on_all_backends() {
    let specs = [
        GeometrySpec::Intrinsic(IntrinsicSpec::Flat { n: 3, len: 1.0 }),
        GeometrySpec::Embedded(EmbeddedSpec::Torus3 { r1: 2.0, r: 0.5 }),
        GeometrySpec::Icosphere { rho: 1.0 },
    ];
    for spec in &specs {
        let resolution = if spec.is_mesh() { 3 } else { 12 };
        let domain = Domain::build(spec, resolution).unwrap();
        let check = li_yau_check(&domain).unwrap();
        assert!(check.alpha > 0.0);
        assert!(check.diameter > 0.0);
        assert!(
            check.slack >= 0.0,
            "{}: alpha = {} exceeds lambda1 = {}",
            domain.name(),
            check.alpha,
            check.lambda1
        );
    }
}

#[test]
fn convergence_study_is_json_serializable() {
    let spec = GeometrySpec::Embedded(EmbeddedSpec::Torus3 { r1: 2.0, r: 0.5 });
    let study = convergence_study(&spec, &ricci_job(), &[16, 24, 32]).unwrap();
    assert_eq!(study.geometry, "torus3(2,0.5)");
    assert_eq!(study.points.len(), 3);
    let json = serde_json::to_string_pretty(&study).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["points"].as_array().unwrap().len(), 3);
    assert!(parsed["orders"]["curvature_residual"].as_f64().unwrap() > 2.0);
}
