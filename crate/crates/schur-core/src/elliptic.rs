//! Elliptic solves on discretized closed manifolds.
//!
//! A `DiscreteOperator` is a weak-form Laplacian: a symmetric positive
//! semidefinite stiffness matrix L with the constants in its kernel, plus a
//! diagonal lumped mass M. Sign convention is f' L f ~ integral |grad f|^2,
//! i.e. L discretizes -div grad; the Poisson routine solves L f = -M rhs so
//! that f plays the role of a solution of (Laplace f) = rhs with Laplace =
//! div grad.
//!
//! Both solvers are deterministic: fixed seeds, fixed reduction order, no
//! data-dependent branching beyond convergence tests.

use crate::sparse::CsrMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("stiffness matrix is not symmetric: defect {defect:.3e} > {tol:.3e}")]
    AsymmetricStiffness { defect: f64, tol: f64 },
    #[error("constants are not in the stiffness kernel: max row sum {defect:.3e} > {tol:.3e}")]
    ConstantNotInKernel { defect: f64, tol: f64 },
    #[error("mass weights must be positive and finite (entry {index} = {value})")]
    BadMass { index: usize, value: f64 },
    #[error("operator sparsity graph has {0} connected components; expected 1")]
    Disconnected(usize),
    #[error("size mismatch: operator has {expected} unknowns, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("right-hand side is not mean-zero: |mean| = {mean:.3e} exceeds {tol:.3e}")]
    RhsNotMeanZero { mean: f64, tol: f64 },
    #[error("conjugate gradient stalled after {iterations} iterations, relative residual {residual:.3e}")]
    CgDidNotConverge { iterations: usize, residual: f64 },
    #[error("first nonzero eigenvalue {0:.3e} is below 1e-10; discretization is disconnected or degenerate")]
    DegenerateSpectrum(f64),
}

/// Relative CG residual target.
pub const CG_TOL: f64 = 1e-10;
/// Relative change of successive Rayleigh quotients that stops the eigensolver.
pub const EIGEN_TOL: f64 = 1e-10;
/// Outer iteration cap for the eigensolver.
pub const EIGEN_MAX_OUTER: usize = 200;
/// Stiffness symmetry tolerance, relative to the largest entry.
pub const STIFFNESS_SYMMETRY_TOL: f64 = 1e-12;
/// Row-sum (kernel) tolerance, relative to the largest entry.
pub const KERNEL_TOL: f64 = 1e-10;
/// Relative mean-zero tolerance on Poisson right-hand sides.
pub const RHS_MEAN_TOL: f64 = 1e-8;

/// Weak Laplacian plus lumped mass on some discretization.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    mass_total: f64,
}

impl DiscreteOperator {
    pub fn new(stiffness: CsrMatrix, mass: Vec<f64>) -> Result<Self, EllipticError> {
        let n = stiffness.size();
        if mass.len() != n {
            return Err(EllipticError::SizeMismatch { expected: n, got: mass.len() });
        }
        for (i, &m) in mass.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(EllipticError::BadMass { index: i, value: m });
            }
        }
        let scale = stiffness.max_abs().max(1e-300);
        let sym = stiffness.symmetry_defect();
        if sym > STIFFNESS_SYMMETRY_TOL * scale {
            return Err(EllipticError::AsymmetricStiffness { defect: sym, tol: STIFFNESS_SYMMETRY_TOL * scale });
        }
        let kernel_defect = stiffness.row_sums().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if kernel_defect > KERNEL_TOL * scale {
            return Err(EllipticError::ConstantNotInKernel { defect: kernel_defect, tol: KERNEL_TOL * scale });
        }
        let components = stiffness.component_count();
        if components != 1 {
            return Err(EllipticError::Disconnected(components));
        }
        let mass_total = mass.iter().sum();
        Ok(Self { stiffness, mass, mass_total })
    }

    pub fn size(&self) -> usize {
        self.mass.len()
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_total(&self) -> f64 {
        self.mass_total
    }

    /// M-weighted mean, the discrete average of a function over the manifold.
    pub fn mean(&self, f: &[f64]) -> f64 {
        dot3(&self.mass, f) / self.mass_total
    }

    /// integral f g dV.
    pub fn m_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.mass).map(|((a, b), m)| a * b * m).sum()
    }

    /// integral |grad f|^2 dV = f' L f.
    pub fn dirichlet_energy(&self, f: &[f64]) -> f64 {
        let lf = self.stiffness.mul(f);
        dot(f, &lf)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot3(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn subtract_plain_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    /// Solution with M-weighted mean zero.
    pub f: Vec<f64>,
    /// Final relative residual of the linear system.
    pub residual: f64,
    pub iterations: usize,
}

/// Solve L f = -M rhs for the mean-zero potential of `rhs`.
///
/// `rhs` must have M-weighted mean zero (relative to its own size), which is
/// exactly the solvability condition of the singular system.
pub fn solve_poisson(op: &DiscreteOperator, rhs: &[f64]) -> Result<PoissonSolution, EllipticError> {
    if rhs.len() != op.size() {
        return Err(EllipticError::SizeMismatch { expected: op.size(), got: rhs.len() });
    }
    let rhs_scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mean = op.mean(rhs);
    if mean.abs() > RHS_MEAN_TOL * rhs_scale {
        return Err(EllipticError::RhsNotMeanZero { mean: mean.abs(), tol: RHS_MEAN_TOL * rhs_scale });
    }
    let b: Vec<f64> = rhs.iter().zip(op.mass()).map(|(r, m)| -r * m).collect();
    let (mut f, residual, iterations) = cg_mean_zero(op.stiffness(), &b)?;
    // The CG subspace is plain-mean-free; shift to the M-weighted gauge.
    let shift = op.mean(&f);
    for x in f.iter_mut() {
        *x -= shift;
    }
    Ok(PoissonSolution { f, residual, iterations })
}

/// Conjugate gradients on the singular consistent system L x = b, kept on the
/// orthogonal complement of the constants by projection at every step.
fn cg_mean_zero(l: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64, usize), EllipticError> {
    let n = l.size();
    let max_iters = 50 * (n as f64).sqrt().ceil() as usize;
    let mut b = b.to_vec();
    subtract_plain_mean(&mut b);
    let b_norm = dot(&b, &b).sqrt();
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0.0, 0));
    }
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs_old = dot(&r, &r);
    let mut lp = vec![0.0; n];
    for it in 1..=max_iters {
        l.mul_into(&p, &mut lp);
        subtract_plain_mean(&mut lp);
        let denom = dot(&p, &lp);
        if denom <= 0.0 {
            // Numerical loss of positivity on the constraint subspace.
            return Err(EllipticError::CgDidNotConverge { iterations: it, residual: rs_old.sqrt() / b_norm });
        }
        let alpha = rs_old / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * lp[i];
        }
        subtract_plain_mean(&mut r);
        let rs_new = dot(&r, &r);
        if rs_new.sqrt() <= CG_TOL * b_norm {
            subtract_plain_mean(&mut x);
            return Ok((x, rs_new.sqrt() / b_norm, it));
        }
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    Err(EllipticError::CgDidNotConverge { iterations: max_iters, residual: rs_old.sqrt() / b_norm })
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    /// Eigenfunction, M-normalized with M-weighted mean zero.
    pub phi: Vec<f64>,
    pub outer_iterations: usize,
    pub cg_iterations: usize,
}

/// Deterministic xorshift for reproducible start vectors.
struct XorShift64(u64);

impl XorShift64 {
    fn next_unit(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        // map to (-1, 1)
        (x >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}

/// First nonzero eigenvalue of L phi = lambda M phi.
///
/// Shift-invert iteration on a small block with Rayleigh-Ritz extraction; the
/// block absorbs the eigenvalue clusters that symmetric geometries produce
/// (a single inverse-iteration vector stagnates inside a degenerate cluster).
/// The constant mode is deflated by M-mean projection throughout.
pub fn lambda_1(op: &DiscreteOperator) -> Result<EigenPair, EllipticError> {
    let n = op.size();
    let block = 8.min(n.saturating_sub(2)).max(1);
    let mut rng = XorShift64(0x5eed_1234_abcd_0001);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.next_unit()).collect();
            project_m_mean(op, &mut v);
            v
        })
        .collect();
    m_orthonormalize(op, &mut basis, &mut rng);

    let mut lambda_prev = f64::INFINITY;
    let mut total_cg = 0usize;
    let mut ritz_values = vec![0.0f64; block];
    for outer in 1..=EIGEN_MAX_OUTER {
        // One shift-invert application per block vector.
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(block);
        for v in &basis {
            let b: Vec<f64> = v.iter().zip(op.mass()).map(|(x, m)| x * m).collect();
            let (mut y, _res, iters) = cg_mean_zero(op.stiffness(), &b)?;
            total_cg += iters;
            project_m_mean(op, &mut y);
            next.push(y);
        }
        m_orthonormalize(op, &mut next, &mut rng);

        // Rayleigh-Ritz on the M-orthonormal block.
        let h = rayleigh_matrix(op, &next);
        let eig = nalgebra::SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap().then(a.cmp(&b)));
        let mut rotated: Vec<Vec<f64>> = Vec::with_capacity(block);
        for &k in &order {
            let mut w = vec![0.0f64; n];
            for j in 0..block {
                let c = eig.eigenvectors[(j, k)];
                for i in 0..n {
                    w[i] += c * next[j][i];
                }
            }
            rotated.push(w);
        }
        for (slot, &k) in ritz_values.iter_mut().zip(order.iter()) {
            *slot = eig.eigenvalues[k];
        }
        basis = rotated;

        let lambda = ritz_values[0];
        if (lambda - lambda_prev).abs() <= EIGEN_TOL * lambda.abs().max(1e-300) {
            return finish_eigenpair(op, basis.swap_remove(0), outer, total_cg);
        }
        lambda_prev = lambda;
    }
    finish_eigenpair(op, basis.swap_remove(0), EIGEN_MAX_OUTER, total_cg)
}

fn finish_eigenpair(
    op: &DiscreteOperator,
    mut phi: Vec<f64>,
    outer: usize,
    total_cg: usize,
) -> Result<EigenPair, EllipticError> {
    project_m_mean(op, &mut phi);
    let norm = op.m_inner(&phi, &phi).sqrt();
    for x in phi.iter_mut() {
        *x /= norm;
    }
    // Fix an overall sign so results are reproducible across builds: make the
    // entry of largest magnitude positive.
    let mut idx = 0;
    let mut best = 0.0f64;
    for (i, &v) in phi.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = i;
        }
    }
    if phi[idx] < 0.0 {
        for x in phi.iter_mut() {
            *x = -*x;
        }
    }
    let lambda = op.dirichlet_energy(&phi) / op.m_inner(&phi, &phi);
    if lambda < 1e-10 {
        return Err(EllipticError::DegenerateSpectrum(lambda));
    }
    Ok(EigenPair { lambda, phi, outer_iterations: outer, cg_iterations: total_cg })
}

fn project_m_mean(op: &DiscreteOperator, v: &mut [f64]) {
    let mean = op.mean(v);
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Modified Gram-Schmidt in the M inner product, fixed order. Vectors that
/// collapse are replaced deterministically and re-orthogonalized.
fn m_orthonormalize(op: &DiscreteOperator, basis: &mut [Vec<f64>], rng: &mut XorShift64) {
    let k = basis.len();
    for j in 0..k {
        for attempt in 0..3 {
            for i in 0..j {
                let coeff = {
                    let (head, tail) = basis.split_at(j);
                    op.m_inner(&head[i], &tail[0])
                };
                let (head, tail) = basis.split_at_mut(j);
                for (x, y) in tail[0].iter_mut().zip(&head[i]) {
                    *x -= coeff * y;
                }
            }
            let norm = op.m_inner(&basis[j], &basis[j]).sqrt();
            if norm > 1e-12 {
                for x in basis[j].iter_mut() {
                    *x /= norm;
                }
                break;
            }
            // Deterministic restart for a collapsed direction.
            debug_assert!(attempt < 2, "orthonormalization failed to recover");
            for x in basis[j].iter_mut() {
                *x = rng.next_unit();
            }
            project_m_mean(op, &mut basis[j]);
        }
    }
}

fn rayleigh_matrix(op: &DiscreteOperator, basis: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    let k = basis.len();
    let mut h = nalgebra::DMatrix::zeros(k, k);
    let lv: Vec<Vec<f64>> = basis.iter().map(|v| op.stiffness().mul(v)).collect();
    for a in 0..k {
        for b in a..k {
            let val = dot(&basis[a], &lv[b]);
            h[(a, b)] = val;
            h[(b, a)] = val;
        }
    }
    h
}
