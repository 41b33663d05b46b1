//! Built-in sanity suite: Newton-transformation identities against an
//! eigendecomposition oracle, analytic micro-oracles for the discrete
//! operators, closed-form constants, and the pointwise variance identity.
//!
//! Each check owns its tolerance; a failure names the property and the worst
//! defect so a regression is identifiable from the exit message alone.

use nalgebra::DMatrix;

use schur_core::elliptic::lambda_1;
use schur_core::grid::build::{build_embedded, build_intrinsic, EmbeddedSpec, IntrinsicSpec};
use schur_core::grid::curvature::curvature_pack;
use schur_core::grid::operator::laplace_beltrami;
use schur_core::grid::stencil::Order;
use schur_core::mesh::generate::icosphere;
use schur_core::mesh::operator::cotan_operator;
use schur_core::mesh::MeshGeometry;
use schur_core::tensor::{newton_transform, SymEndomorphism};
use schur_core::verify::li_yau_constants;

/// xorshift64*: deterministic, seedable, good enough for test matrices.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform in [-1, 1).
    fn sym(&mut self) -> f64 {
        let unit = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * unit - 1.0
    }
}

fn random_symmetric(rng: &mut Rng, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.sym();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Elementary symmetric polynomials e_0..e_k of `vals` by the coefficient
/// recurrence.
fn elem_sym(vals: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; vals.len() + 1];
    e[0] = 1.0;
    for (count, &v) in vals.iter().enumerate() {
        for r in (1..=count + 1).rev() {
            e[r] += v * e[r - 1];
        }
    }
    e
}

const NEWTON_MATRICES: usize = 1000;
const NEWTON_TOL: f64 = 1e-10;

/// Runs `per_matrix` on 1000 seeded random symmetric matrices cycling
/// n through 2..=8, tracking the worst relative defect.
fn newton_sweep(
    per_matrix: impl Fn(&SymEndomorphism, &DMatrix<f64>, &[f64], f64) -> f64,
) -> Result<(), String> {
    let mut rng = Rng::new(0x5eed_cafe_f00d_0001);
    let mut worst = 0.0f64;
    let mut worst_at = (0usize, 0usize);
    for i in 0..NEWTON_MATRICES {
        let n = 2 + i % 7;
        let mat = random_symmetric(&mut rng, n);
        let scale = 1.0 + mat.norm();
        let a = SymEndomorphism::new(mat.clone()).map_err(|e| e.to_string())?;
        let eig = mat.clone().symmetric_eigen();
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let defect = per_matrix(&a, &eig.eigenvectors, &eigenvalues, scale);
        if defect > worst {
            worst = defect;
            worst_at = (n, i);
        }
    }
    if worst <= NEWTON_TOL {
        Ok(())
    } else {
        Err(format!(
            "worst relative defect {worst:.3e} at n={} (matrix {}), tol {NEWTON_TOL:.0e}",
            worst_at.0, worst_at.1
        ))
    }
}

fn check_trace_pr() -> Result<(), String> {
    newton_sweep(|a, _vecs, vals, scale| {
        let n = vals.len();
        let e = elem_sym(vals);
        let mut defect = 0.0f64;
        for r in 0..=n {
            let p = match newton_transform(a, r) {
                Ok(p) => p,
                Err(_) => return f64::INFINITY,
            };
            let want = (n - r) as f64 * e[r];
            let den = f64::max(want.abs(), scale.powi(r as i32));
            defect = defect.max((p.trace() - want).abs() / den);
        }
        defect
    })
}

fn check_trace_apr() -> Result<(), String> {
    newton_sweep(|a, _vecs, vals, scale| {
        let n = vals.len();
        let e = elem_sym(vals);
        let mut defect = 0.0f64;
        for r in 0..n {
            let p = match newton_transform(a, r) {
                Ok(p) => p,
                Err(_) => return f64::INFINITY,
            };
            let got = (a.matrix() * p.matrix()).trace();
            let want = (r + 1) as f64 * e[r + 1];
            let den = f64::max(want.abs(), scale.powi(r as i32 + 1));
            defect = defect.max((got - want).abs() / den);
        }
        defect
    })
}

fn check_pn_zero() -> Result<(), String> {
    newton_sweep(|a, _vecs, vals, scale| {
        let n = vals.len();
        let p = match newton_transform(a, n) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        p.matrix().amax() / scale.powi(n as i32)
    })
}

fn check_eigenvector_property() -> Result<(), String> {
    newton_sweep(|a, vecs, vals, scale| {
        let n = vals.len();
        let mut defect = 0.0f64;
        for r in 0..=n {
            let p = match newton_transform(a, r) {
                Ok(p) => p,
                Err(_) => return f64::INFINITY,
            };
            for i in 0..n {
                // sigma_r of the spectrum with eigenvalue i removed.
                let subset: Vec<f64> = vals
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &v)| v)
                    .collect();
                let sigma = elem_sym(&subset)[r.min(subset.len())];
                let sigma = if r <= subset.len() { sigma } else { 0.0 };
                let v = vecs.column(i);
                let residual = (p.matrix() * v - sigma * v).amax();
                let den = f64::max(sigma.abs(), scale.powi(r as i32));
                defect = defect.max(residual / den);
            }
        }
        defect
    })
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn check_sphere_lambda1() -> Result<(), String> {
    let mesh = icosphere(1.0, 4).map_err(|e| e.to_string())?;
    let geometry = MeshGeometry::new(&mesh).map_err(|e| e.to_string())?;
    let op = cotan_operator(&mesh, &geometry).map_err(|e| e.to_string())?;
    let pair = lambda_1(&op).map_err(|e| e.to_string())?;
    let err = rel_err(pair.lambda, 2.0);
    if err <= 0.01 {
        Ok(())
    } else {
        Err(format!("lambda1 = {:.6}, want 2.0 within 1% (off by {err:.2e})", pair.lambda))
    }
}

fn check_flat_torus_lambda1() -> Result<(), String> {
    let gm = build_intrinsic(&IntrinsicSpec::Flat { n: 2, len: 1.0 }, 64)
        .map_err(|e| e.to_string())?;
    let op = laplace_beltrami(&gm, Order::Fourth).map_err(|e| e.to_string())?;
    let pair = lambda_1(&op).map_err(|e| e.to_string())?;
    let want = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    let err = rel_err(pair.lambda, want);
    if err <= 0.001 {
        Ok(())
    } else {
        Err(format!("lambda1 = {:.8}, want 4 pi^2 within 0.1% (off by {err:.2e})", pair.lambda))
    }
}

fn check_torus_area() -> Result<(), String> {
    let gm = build_embedded(&EmbeddedSpec::Torus3 { r1: 2.0, r: 0.5 }, 32)
        .map_err(|e| e.to_string())?;
    // area(T^2 in R^3) = 4 pi^2 R1 r; periodic trapezoid sums integrate the
    // trigonometric-polynomial area element exactly.
    let want = 4.0 * std::f64::consts::PI * std::f64::consts::PI * 2.0 * 0.5;
    let err = rel_err(gm.volume(), want);
    if err <= 1e-10 {
        Ok(())
    } else {
        Err(format!("area = {:.12}, want 4 pi^2 R1 r (off by {err:.2e})", gm.volume()))
    }
}

fn check_flat_curvature() -> Result<(), String> {
    let gm = build_intrinsic(&IntrinsicSpec::Flat { n: 3, len: 1.0 }, 8)
        .map_err(|e| e.to_string())?;
    let pack = curvature_pack(&gm, Order::Fourth);
    let worst = pack.ric.max_abs();
    if worst == 0.0 {
        Ok(())
    } else {
        Err(format!("flat Ricci stencil leaked {worst:.3e}, want exact zero"))
    }
}

fn check_li_yau_c() -> Result<(), String> {
    let c = li_yau_constants(3, 0.0, std::f64::consts::PI)
        .map_err(|e| e.to_string())?
        .c_printed
        .ok_or("C should exist for n = 3")?;
    if c == 24.0 {
        Ok(())
    } else {
        Err(format!("C(3, 0) = {c}, want exactly 24"))
    }
}

fn check_li_yau_alpha() -> Result<(), String> {
    let d = std::f64::consts::PI;
    let alpha = li_yau_constants(3, 0.0, d).map_err(|e| e.to_string())?.alpha;
    // alpha(3, 0, d) = 1 / (2 d^2 e^2).
    let want = 1.0 / (2.0 * d * d * f64::exp(2.0));
    let err = rel_err(alpha, want);
    if err <= 1e-14 {
        Ok(())
    } else {
        Err(format!("alpha(3, 0, pi) = {alpha:.17}, want {want:.17} (off by {err:.2e})"))
    }
}

fn check_constant_collapse() -> Result<(), String> {
    let mut worst = 0.0f64;
    for n in 2..=8u32 {
        for &k in &[0.0, 0.7, 1.5] {
            for &lambda in &[0.3, 1.0, 2.0] {
                let nf = f64::from(n);
                let long = 1.0 + (nf - 1.0) * (1.0 + nf * k / lambda);
                let collapsed = nf * (1.0 + (nf - 1.0) * k / lambda);
                worst = worst.max((long - collapsed).abs() / collapsed);
            }
        }
    }
    if worst <= 1e-12 {
        Ok(())
    } else {
        Err(format!("collapse defect {worst:.3e}, want <= 1e-12"))
    }
}

fn check_variance_identity() -> Result<(), String> {
    // |T - (bbar/n) g|^2 = |T - (B/n) g|^2 + (B - bbar)^2 / n pointwise.
    let mut rng = Rng::new(0x5eed_cafe_f00d_0002);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let n = 2 + i % 7;
        let t = random_symmetric(&mut rng, n);
        let b = t.trace();
        let bbar = 3.0 * rng.sym();
        let nf = n as f64;
        let eye = DMatrix::<f64>::identity(n, n);
        let lhs = (&t - (bbar / nf) * &eye).norm_squared();
        let rhs = (&t - (b / nf) * &eye).norm_squared() + (b - bbar) * (b - bbar) / nf;
        let den = f64::max(lhs.abs(), 1.0);
        worst = worst.max((lhs - rhs).abs() / den);
    }
    if worst <= 1e-12 {
        Ok(())
    } else {
        Err(format!("identity defect {worst:.3e}, want <= 1e-12"))
    }
}

struct Check {
    group: &'static str,
    name: &'static str,
    run: fn() -> Result<(), String>,
}

fn all_checks() -> Vec<Check> {
    vec![
        Check { group: "newton", name: "tr(P_r)=(n-r)sigma_r", run: check_trace_pr },
        Check { group: "newton", name: "tr(A P_r)=(r+1)sigma_{r+1}", run: check_trace_apr },
        Check { group: "newton", name: "P_n=0", run: check_pn_zero },
        Check { group: "newton", name: "P_r eigenvector property", run: check_eigenvector_property },
        Check { group: "oracle", name: "lambda1(unit icosphere, subdiv 4) = 2 within 1%", run: check_sphere_lambda1 },
        Check { group: "oracle", name: "lambda1(flat T^2, 64^2) = 4 pi^2 within 0.1%", run: check_flat_torus_lambda1 },
        Check { group: "oracle", name: "area(torus3(2, 0.5)) = 4 pi^2 R1 r within 1e-10", run: check_torus_area },
        Check { group: "oracle", name: "flat metric has exactly zero Ricci", run: check_flat_curvature },
        Check { group: "constants", name: "C(3, 0) = 24 exactly", run: check_li_yau_c },
        Check { group: "constants", name: "alpha(3, 0, pi) = 1/(2 pi^2 e^2)", run: check_li_yau_alpha },
        Check { group: "identity", name: "amplification constant collapse", run: check_constant_collapse },
        Check { group: "identity", name: "pointwise variance split", run: check_variance_identity },
    ]
}

/// Run the suite, optionally restricted to checks whose group or name
/// contains `filter`. Exit 0 all pass, 1 any failure, 2 empty selection.
pub fn run_selftest(filter: Option<&str>) -> u8 {
    let checks = all_checks();
    let selected: Vec<&Check> = checks
        .iter()
        .filter(|c| filter.is_none_or(|f| c.group.contains(f) || c.name.contains(f)))
        .collect();
    if selected.is_empty() {
        eprintln!("no self-test matches filter '{}'", filter.unwrap_or_default());
        return 2;
    }
    let mut failed = 0usize;
    for check in &selected {
        match (check.run)() {
            Ok(()) => println!("PASS  {:10} {}", check.group, check.name),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {:10} {}: {msg}", check.group, check.name);
            }
        }
    }
    println!("self-test: {} passed, {failed} failed", selected.len() - failed);
    u8::from(failed > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elem_sym_matches_hand_expansion() {
        // (x-1)(x-2)(x-3): e1 = 6, e2 = 11, e3 = 6.
        let e = elem_sym(&[1.0, 2.0, 3.0]);
        assert_eq!(e, vec![1.0, 6.0, 11.0, 6.0]);
        assert_eq!(elem_sym(&[]), vec![1.0]);
    }

    #[test]
    fn rng_is_deterministic_and_in_range() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..100 {
            let x = a.sym();
            assert_eq!(x, b.sym());
            assert!((-1.0..1.0).contains(&x));
        }
    }

    #[test]
    fn newton_checks_pass_quickly() {
        check_trace_pr().unwrap();
        check_trace_apr().unwrap();
        check_pn_zero().unwrap();
        check_eigenvector_property().unwrap();
    }

    #[test]
    fn constant_checks_pass() {
        check_li_yau_c().unwrap();
        check_li_yau_alpha().unwrap();
        check_constant_collapse().unwrap();
        check_variance_identity().unwrap();
    }

    #[test]
    fn filtering_selects_by_group_or_name() {
        let checks = all_checks();
        let newton: Vec<_> = checks.iter().filter(|c| c.group.contains("newton")).collect();
        assert_eq!(newton.len(), 4);
        assert!(checks.iter().any(|c| c.name.contains("lambda1")));
        // The canonical mutation probe must keep its exact name.
        assert!(checks.iter().any(|c| c.name == "tr(P_r)=(n-r)sigma_r"));
    }
}
