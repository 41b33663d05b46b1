//! Pointwise symmetric tensor algebra.
//!
//! Everything here operates on a single sample: a symmetric endomorphism (a
//! tensor with one index raised, expressed in an orthonormal frame), a metric
//! at a point, or covariant (2,0) components. Fields are just vectors of these
//! samples; the mesh and grid backends own the bookkeeping.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("matrix is not symmetric: |A - A^T| = {defect:.3e} exceeds {tol:.3e}")]
    NotSymmetric { defect: f64, tol: f64 },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("metric inverse check failed: |g g^-1 - I| = {0:.3e}")]
    BadInverse(f64),
    #[error("order r = {r} out of range for dimension {n}")]
    OrderOutOfRange { r: usize, n: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Relative symmetry defect accepted when wrapping a raw matrix.
pub const SYMMETRY_TOL: f64 = 1e-14;
/// Accepted defect of `g * g_inv` against the identity.
pub const INVERSE_TOL: f64 = 1e-12;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<usize, TensorError> {
    if m.nrows() != m.ncols() {
        return Err(TensorError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(TensorError::NonFinite);
    }
    Ok(m.nrows())
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<(), TensorError> {
    let scale = max_abs(m).max(1e-300);
    let defect = max_abs(&(m - m.transpose()));
    if defect > SYMMETRY_TOL * scale {
        return Err(TensorError::NotSymmetric { defect, tol: SYMMETRY_TOL * scale });
    }
    Ok(())
}

/// A self-adjoint endomorphism of the tangent space at one point, stored as a
/// symmetric matrix in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEndomorphism {
    n: usize,
    m: DMatrix<f64>,
}

impl SymEndomorphism {
    pub fn new(m: DMatrix<f64>) -> Result<Self, TensorError> {
        let n = check_square_finite(&m)?;
        if n < 2 {
            return Err(TensorError::DimensionTooSmall(n));
        }
        check_symmetric(&m)?;
        // Average away roundoff-scale asymmetry so downstream products stay clean.
        let m = (&m + m.transpose()) * 0.5;
        Ok(Self { n, m })
    }

    pub fn identity(n: usize) -> Result<Self, TensorError> {
        if n < 2 {
            return Err(TensorError::DimensionTooSmall(n));
        }
        Ok(Self { n, m: DMatrix::identity(n, n) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }
}

/// Riemannian metric at one point together with its inverse.
#[derive(Debug, Clone)]
pub struct MetricAtPoint {
    n: usize,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

impl MetricAtPoint {
    pub fn new(g: DMatrix<f64>) -> Result<Self, TensorError> {
        let n = check_square_finite(&g)?;
        if n < 2 {
            return Err(TensorError::DimensionTooSmall(n));
        }
        check_symmetric(&g)?;
        let g = (&g + g.transpose()) * 0.5;
        // Cholesky doubles as the positive-definiteness certificate.
        let chol = g.clone().cholesky().ok_or(TensorError::NotPositiveDefinite)?;
        let g_inv = chol.inverse();
        let defect = max_abs(&(&g * &g_inv - DMatrix::<f64>::identity(n, n)));
        if defect > INVERSE_TOL {
            return Err(TensorError::BadInverse(defect));
        }
        Ok(Self { n, g, g_inv })
    }

    pub fn euclidean(n: usize) -> Result<Self, TensorError> {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    /// Symmetric square root of g and its inverse, for moving tensors into an
    /// orthonormal frame. Eigenvalues are guaranteed positive by construction.
    pub fn sqrt_pair(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let eig = nalgebra::SymmetricEigen::new(self.g.clone());
        let mut s = DMatrix::zeros(self.n, self.n);
        let mut si = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let root = eig.eigenvalues[i].max(0.0).sqrt();
            s[(i, i)] = root;
            si[(i, i)] = 1.0 / root;
        }
        let q = &eig.eigenvectors;
        (q * s * q.transpose(), q * si * q.transpose())
    }
}

/// Covariant components T_ij of a symmetric (2,0) tensor at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorSample {
    n: usize,
    t: DMatrix<f64>,
}

impl SymTensorSample {
    pub fn new(t: DMatrix<f64>) -> Result<Self, TensorError> {
        let n = check_square_finite(&t)?;
        if n < 2 {
            return Err(TensorError::DimensionTooSmall(n));
        }
        check_symmetric(&t)?;
        let t = (&t + t.transpose()) * 0.5;
        Ok(Self { n, t })
    }

    pub fn zeros(n: usize) -> Result<Self, TensorError> {
        if n < 2 {
            return Err(TensorError::DimensionTooSmall(n));
        }
        Ok(Self { n, t: DMatrix::zeros(n, n) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.t
    }
}

/// sigma_r of a list of values, via the coefficient recurrence for
/// prod_i (t + v_i). Exact accumulation order, no subset enumeration.
pub fn elementary_symmetric(values: &[f64], r: usize) -> Result<f64, TensorError> {
    let n = values.len();
    if r > n {
        return Err(TensorError::OrderOutOfRange { r, n });
    }
    let mut coeff = vec![0.0f64; r + 1];
    coeff[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        let top = r.min(i + 1);
        for k in (1..=top).rev() {
            coeff[k] += v * coeff[k - 1];
        }
    }
    Ok(coeff[r])
}

/// sigma_r(A): r-th elementary symmetric function of the eigenvalues, computed
/// through the Newton transformation recursion. No eigendecomposition.
pub fn sigma_of(a: &SymEndomorphism, r: usize) -> Result<f64, TensorError> {
    if r > a.n {
        return Err(TensorError::OrderOutOfRange { r, n: a.n });
    }
    Ok(newton_chain(a, r)?.0[r])
}

/// P_r(A) from P_0 = I, P_r = sigma_r I - A P_{r-1}.
pub fn newton_transform(a: &SymEndomorphism, r: usize) -> Result<SymEndomorphism, TensorError> {
    if r > a.n {
        return Err(TensorError::OrderOutOfRange { r, n: a.n });
    }
    let (_, p) = newton_chain(a, r)?;
    SymEndomorphism::new(p)
}

/// All of sigma_0..sigma_r plus P_r in one pass.
///
/// The same recursion produces both: sigma_{k+1} = tr(A P_k) / (k+1), which is
/// the Faddeev-LeVerrier update for the characteristic coefficients.
pub fn newton_chain(a: &SymEndomorphism, r: usize) -> Result<(Vec<f64>, DMatrix<f64>), TensorError> {
    if r > a.n {
        return Err(TensorError::OrderOutOfRange { r, n: a.n });
    }
    let n = a.n;
    let mut sigmas = Vec::with_capacity(r + 1);
    sigmas.push(1.0);
    let mut p = DMatrix::<f64>::identity(n, n);
    for k in 0..r {
        let ap = &a.m * &p;
        let sigma_next = ap.trace() / (k as f64 + 1.0);
        sigmas.push(sigma_next);
        p = DMatrix::identity(n, n) * sigma_next - ap;
        // A and P_k commute, so the product is symmetric up to roundoff.
        p = (&p + p.transpose()) * 0.5;
    }
    Ok((sigmas, p))
}

/// g-trace of covariant components: g^{ij} T_ij.
pub fn trace(t: &SymTensorSample, g: &MetricAtPoint) -> Result<f64, TensorError> {
    if t.n != g.n {
        return Err(TensorError::DimensionMismatch(t.n, g.n));
    }
    Ok((g.g_inv() * &t.t).trace())
}

/// T - (tr_g T / n) g.
pub fn traceless_part(t: &SymTensorSample, g: &MetricAtPoint) -> Result<SymTensorSample, TensorError> {
    let b = trace(t, g)?;
    let n = t.n as f64;
    SymTensorSample::new(&t.t - g.g() * (b / n))
}

/// |T|_g^2 = g^{ik} g^{jl} T_ij T_kl.
pub fn norm_sq(t: &SymTensorSample, g: &MetricAtPoint) -> Result<f64, TensorError> {
    if t.n != g.n {
        return Err(TensorError::DimensionMismatch(t.n, g.n));
    }
    let raised = g.g_inv() * &t.t;
    Ok((&raised * &raised).trace())
}

/// <S, T>_g = g^{ik} g^{jl} S_ij T_kl.
pub fn inner(s: &SymTensorSample, t: &SymTensorSample, g: &MetricAtPoint) -> Result<f64, TensorError> {
    if s.n != t.n || s.n != g.n {
        return Err(TensorError::DimensionMismatch(s.n, t.n.max(g.n)));
    }
    Ok(((g.g_inv() * &s.t) * (g.g_inv() * &t.t)).trace())
}

/// Lower an endomorphism: T_ij = g_ik E^k_j. E must be g-self-adjoint for the
/// result to be symmetric; the constructor enforces that.
pub fn covariant_from_endo(e: &DMatrix<f64>, g: &MetricAtPoint) -> Result<SymTensorSample, TensorError> {
    if e.nrows() != g.n || e.ncols() != g.n {
        return Err(TensorError::DimensionMismatch(e.nrows(), g.n));
    }
    SymTensorSample::new(g.g() * e)
}

/// Raise one index: E^i_j = g^{ik} T_kj. Generally not a symmetric matrix.
pub fn endo_from_covariant(t: &SymTensorSample, g: &MetricAtPoint) -> Result<DMatrix<f64>, TensorError> {
    if t.n != g.n {
        return Err(TensorError::DimensionMismatch(t.n, g.n));
    }
    Ok(g.g_inv() * &t.t)
}

/// Express covariant components in an orthonormal frame:
/// g^{-1/2} T g^{-1/2}. Shares eigenvalues with the (1,1) form of T, so the
/// Newton machinery applies to the result directly.
pub fn frame_from_covariant(t: &SymTensorSample, g: &MetricAtPoint) -> Result<SymEndomorphism, TensorError> {
    if t.n != g.n {
        return Err(TensorError::DimensionMismatch(t.n, g.n));
    }
    let (_, si) = g.sqrt_pair();
    SymEndomorphism::new(&si * &t.t * &si)
}

/// Inverse of `frame_from_covariant`: T_ij = (g^{1/2} S g^{1/2})_ij.
pub fn covariant_from_frame(s: &SymEndomorphism, g: &MetricAtPoint) -> Result<SymTensorSample, TensorError> {
    if s.n != g.n {
        return Err(TensorError::DimensionMismatch(s.n, g.n));
    }
    let (sq, _) = g.sqrt_pair();
    SymTensorSample::new(&sq * &s.m * &sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    // ---- independent oracles -------------------------------------------------

    /// Subset-enumeration sigma_r. Exponential, test-only.
    fn sigma_oracle(values: &[f64], r: usize) -> f64 {
        let n = values.len();
        if r == 0 {
            return 1.0;
        }
        let mut total = 0.0;
        let mut idx: Vec<usize> = (0..r).collect();
        loop {
            total += idx.iter().map(|&i| values[i]).product::<f64>();
            // next r-combination of 0..n in lexicographic order
            let mut k = r;
            loop {
                if k == 0 {
                    return total;
                }
                k -= 1;
                if idx[k] != k + n - r {
                    idx[k] += 1;
                    for j in k + 1..r {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Eigendecomposition route for sigma_r(A), test-only.
    fn sigma_eig_oracle(a: &SymEndomorphism, r: usize) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(a.matrix().clone());
        sigma_oracle(eig.eigenvalues.as_slice(), r)
    }

    fn sym_from_entries(n: usize, entries: &[f64]) -> SymEndomorphism {
        let mut m = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                m[(i, j)] = entries[k];
                m[(j, i)] = entries[k];
                k += 1;
            }
        }
        SymEndomorphism::new(m).unwrap()
    }

    fn diag(values: &[f64]) -> SymEndomorphism {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = values[i];
        }
        SymEndomorphism::new(m).unwrap()
    }

    // ---- frozen examples -----------------------------------------------------

    #[test]
    fn sigma_of_small_list() {
        // (1, 2, 3): sigma_2 = 1*2 + 1*3 + 2*3 = 11
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 0).unwrap(), 1.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 3).unwrap(), 6.0);
        assert!(elementary_symmetric(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn newton_transform_of_sphere_shape_operator() {
        // A = (1/rho) I in dimension n: P_r = binom(n-1, r) rho^{-r} I.
        let n = 4;
        let rho = 2.0f64;
        let a = diag(&vec![1.0 / rho; n]);
        let binom = |n: usize, k: usize| -> f64 {
            let mut v = 1.0;
            for i in 0..k {
                v = v * (n - i) as f64 / (i + 1) as f64;
            }
            v
        };
        for r in 0..=n {
            let p = newton_transform(&a, r).unwrap();
            let expected = binom(n - 1, r) * rho.powi(-(r as i32));
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { expected } else { 0.0 };
                    assert!((p.matrix()[(i, j)] - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn p_n_vanishes_by_cayley_hamilton() {
        let a = sym_from_entries(3, &[2.0, -1.0, 0.5, 1.0, 0.25, -3.0]);
        let p = newton_transform(&a, 3).unwrap();
        let scale: f64 = a.matrix().iter().fold(0.0f64, |m, x| m.max(x.abs())).powi(3);
        assert!(p.matrix().iter().all(|x| x.abs() < 1e-12 * scale.max(1.0)));
    }

    #[test]
    fn trace_identities_on_fixed_matrix() {
        let a = sym_from_entries(4, &[1.0, 0.3, -0.2, 0.7, 2.0, 0.1, -0.4, -1.0, 0.6, 3.0]);
        let n = 4;
        for r in 0..n {
            let (sigmas, p) = newton_chain(&a, r).unwrap();
            // tr P_r = (n - r) sigma_r
            assert!((p.trace() - (n - r) as f64 * sigmas[r]).abs() < 1e-12);
            // tr(A P_r) = (r + 1) sigma_{r+1}
            let ap_trace = (a.matrix() * &p).trace();
            let sigma_next = sigma_of(&a, r + 1).unwrap();
            assert!((ap_trace - (r + 1) as f64 * sigma_next).abs() < 1e-11);
        }
    }

    #[test]
    fn traceless_part_examples() {
        let g = MetricAtPoint::euclidean(3).unwrap();
        // T = diag(2, 2, 2): traceless part vanishes.
        let t = SymTensorSample::new(DMatrix::identity(3, 3) * 2.0).unwrap();
        let tl = traceless_part(&t, &g).unwrap();
        assert!(tl.components().iter().all(|x| x.abs() < 1e-15));
        // Trace of the traceless part is zero for a non-trivial metric too.
        let mut gm = DMatrix::identity(3, 3);
        gm[(0, 0)] = 4.0;
        gm[(0, 1)] = 0.5;
        gm[(1, 0)] = 0.5;
        let g2 = MetricAtPoint::new(gm).unwrap();
        let t2 = sym_from_entries(3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0]);
        let t2 = SymTensorSample::new(t2.matrix().clone()).unwrap();
        let tl2 = traceless_part(&t2, &g2).unwrap();
        assert!(trace(&tl2, &g2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn norm_matches_frobenius_in_orthonormal_frame() {
        let g = MetricAtPoint::euclidean(2).unwrap();
        let t = SymTensorSample::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -1.0])).unwrap();
        // Frobenius^2 = 1 + 4 + 4 + 1 = 10.
        assert!((norm_sq(&t, &g).unwrap() - 10.0).abs() < 1e-14);
    }

    #[test]
    fn norm_and_trace_are_frame_invariant() {
        let mut gm = DMatrix::identity(3, 3);
        gm[(0, 0)] = 2.0;
        gm[(1, 1)] = 0.5;
        gm[(0, 2)] = 0.3;
        gm[(2, 0)] = 0.3;
        let g = MetricAtPoint::new(gm).unwrap();
        let t = SymTensorSample::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.2, -0.5, 0.2, 2.0, 0.0, -0.5, 0.0, -1.5],
        ))
        .unwrap();
        let framed = frame_from_covariant(&t, &g).unwrap();
        let frob: f64 = framed.matrix().iter().map(|x| x * x).sum();
        assert!((frob - norm_sq(&t, &g).unwrap()).abs() < 1e-12);
        assert!((framed.trace() - trace(&t, &g).unwrap()).abs() < 1e-12);
        // Round trip back to covariant components.
        let back = covariant_from_frame(&framed, &g).unwrap();
        let diff = (back.components() - t.components()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn conversion_round_trip_endomorphism() {
        let mut gm = DMatrix::identity(2, 2);
        gm[(0, 0)] = 3.0;
        gm[(0, 1)] = 0.6;
        gm[(1, 0)] = 0.6;
        let g = MetricAtPoint::new(gm).unwrap();
        let t = SymTensorSample::new(DMatrix::from_row_slice(2, 2, &[1.0, -0.4, -0.4, 2.0])).unwrap();
        let e = endo_from_covariant(&t, &g).unwrap();
        let back = covariant_from_endo(&e, &g).unwrap();
        let diff = (back.components() - t.components()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(diff < 1e-12);
        // g-trace of T equals the plain trace of the raised form.
        assert!((e.trace() - trace(&t, &g).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(SymEndomorphism::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])).is_err());
        assert!(SymEndomorphism::new(DMatrix::zeros(2, 3)).is_err());
        assert!(SymEndomorphism::new(DMatrix::identity(1, 1)).is_err());
        assert!(SymEndomorphism::new(DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0])).is_err());
        assert!(MetricAtPoint::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0])).is_err());
        let a = diag(&[1.0, 2.0, 3.0]);
        assert!(newton_transform(&a, 4).is_err());
        let g2 = MetricAtPoint::euclidean(2).unwrap();
        let t3 = SymTensorSample::zeros(3).unwrap();
        assert!(trace(&t3, &g2).is_err());
    }

    // ---- randomized invariants ----------------------------------------------

    fn arb_sym(n: usize) -> impl Strategy<Value = SymEndomorphism> {
        let len = n * (n + 1) / 2;
        proptest::collection::vec(-10.0f64..10.0, len)
            .prop_map(move |vals| sym_from_entries(n, &vals))
    }

    proptest! {
        #[test]
        fn sigma_matches_subset_oracle(vals in proptest::collection::vec(-5.0f64..5.0, 1..9), r in 0usize..9) {
            prop_assume!(r <= vals.len());
            let ours = elementary_symmetric(&vals, r).unwrap();
            let oracle = sigma_oracle(&vals, r);
            let scale = oracle.abs().max(1.0);
            prop_assert!((ours - oracle).abs() <= 1e-10 * scale);
        }

        #[test]
        fn sigma_of_matches_eigen_oracle(n in 2usize..6, seed in proptest::collection::vec(-5.0f64..5.0, 36), r in 0usize..6) {
            prop_assume!(r <= n);
            let a = sym_from_entries(n, &seed[..n * (n + 1) / 2]);
            let ours = sigma_of(&a, r).unwrap();
            let oracle = sigma_eig_oracle(&a, r);
            let scale = oracle.abs().max(1.0);
            prop_assert!((ours - oracle).abs() <= 1e-9 * scale);
        }

        #[test]
        fn newton_trace_identities(n in 2usize..7, seed in proptest::collection::vec(-3.0f64..3.0, 28)) {
            let a = sym_from_entries(n, &seed[..n * (n + 1) / 2]);
            let mut scale = 1.0f64;
            for r in 0..n {
                let (sigmas, p) = newton_chain(&a, r).unwrap();
                scale = scale.max(sigmas[r].abs());
                prop_assert!((p.trace() - (n - r) as f64 * sigmas[r]).abs() <= 1e-9 * scale);
            }
            // P_n = 0
            let (_, pn) = newton_chain(&a, n).unwrap();
            let a_scale = a.matrix().iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
            prop_assert!(pn.iter().all(|x| x.abs() <= 1e-8 * a_scale.powi(n as i32)));
        }

        #[test]
        fn eigenvector_property(seed in proptest::collection::vec(-4.0f64..4.0, 10), r in 0usize..4) {
            // P_r shares eigenvectors with A; its eigenvalue on v_i is
            // sigma_r of the remaining eigenvalues. Guard against
            // near-degenerate spectra where eigenvectors are unstable.
            let n = 4;
            let a = sym_from_entries(n, &seed);
            prop_assume!(r <= n);
            let eig = nalgebra::SymmetricEigen::new(a.matrix().clone());
            let mut etas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            etas.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let min_gap = etas.windows(2).map(|w| (w[1] - w[0]).abs()).fold(f64::INFINITY, f64::min);
            prop_assume!(min_gap > 1e-8);

            let p = newton_transform(&a, r).unwrap();
            for i in 0..n {
                let v: DVector<f64> = eig.eigenvectors.column(i).into();
                let rest: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| eig.eigenvalues[j]).collect();
                let expected = sigma_oracle(&rest, r);
                let diff = (p.matrix() * &v - &v * expected).norm();
                prop_assert!(diff <= 1e-9 * expected.abs().max(1.0));
            }
        }

        #[test]
        fn traceless_is_idempotent_and_traceless(seed in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let g = MetricAtPoint::euclidean(3).unwrap();
            let t = SymTensorSample::new(sym_from_entries(3, &seed).matrix().clone()).unwrap();
            let tl = traceless_part(&t, &g).unwrap();
            prop_assert!(trace(&tl, &g).unwrap().abs() < 1e-12);
            let tl2 = traceless_part(&tl, &g).unwrap();
            let diff = (tl2.components() - tl.components()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(diff < 1e-12);
        }

        #[test]
        fn norm_decomposition(seed in proptest::collection::vec(-5.0f64..5.0, 6)) {
            // |T|^2 = |traceless T|^2 + (tr_g T)^2 / n
            let g = MetricAtPoint::euclidean(3).unwrap();
            let t = SymTensorSample::new(sym_from_entries(3, &seed).matrix().clone()).unwrap();
            let tl = traceless_part(&t, &g).unwrap();
            let b = trace(&t, &g).unwrap();
            let lhs = norm_sq(&t, &g).unwrap();
            let rhs = norm_sq(&tl, &g).unwrap() + b * b / 3.0;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn sigma_chain_consistent_with_elementary_symmetric_of_eigenvalues() {
        // One deterministic cross-check of the full chain on a 6x6 sample.
        let a = sym_from_entries(
            6,
            &[
                1.2, 0.3, -0.7, 0.1, 0.0, 0.5, -2.0, 0.4, 0.2, -0.1, 3.0, 0.6, -0.3, 0.9, 0.8,
                -1.1, 0.05, 0.2, 2.5, -0.6, 0.7,
            ],
        );
        let eig = nalgebra::SymmetricEigen::new(a.matrix().clone());
        let etas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        for r in 0..=6 {
            let via_chain = sigma_of(&a, r).unwrap();
            let via_eigs = elementary_symmetric(&etas, r).unwrap();
            assert!((via_chain - via_eigs).abs() < 1e-9 * via_eigs.abs().max(1.0));
        }
    }
}
