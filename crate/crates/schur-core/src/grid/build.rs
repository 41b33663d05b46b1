//! Geometry catalog for the grid backend: intrinsic closed-form metrics and
//! periodic embedded hypersurfaces.
//!
//! Every entry is closed-form, so metric, normal, and second fundamental
//! form are sampled exactly; finite differences only ever touch intrinsic
//! quantities downstream. The conformal entries are certified locally
//! conformally flat by construction.

use super::{EmbeddingData, Grid, GridError, GridManifold, SymField};

/// Fixed catalog of conformal factors phi for g = e^{2 phi} delta. A closed
/// catalog (rather than arbitrary user formulas) keeps the analytic
/// curvature oracles in the test suite implementable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConformalPhi {
    /// phi = sin(2 pi x_0 / L)
    SinX,
    /// phi = sin(2 pi x_0 / L) cos(2 pi x_1 / L)
    SinCos,
    /// phi = sin(2 pi x_0 / L) cos(2 pi x_1 / L) sin(2 pi x_2 / L); needs n >= 3
    Triple,
}

impl ConformalPhi {
    pub fn tag(&self) -> &'static str {
        match self {
            ConformalPhi::SinX => "sinx",
            ConformalPhi::SinCos => "sincos",
            ConformalPhi::Triple => "triple",
        }
    }

    fn min_dim(&self) -> usize {
        match self {
            ConformalPhi::SinX => 2,
            ConformalPhi::SinCos => 2,
            ConformalPhi::Triple => 3,
        }
    }

    /// Factor values per axis and their first and second derivatives; the
    /// product structure makes phi and all its derivatives separable.
    fn axis_factors(&self, x: &[f64], len: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
        let w = 2.0 * std::f64::consts::PI / len;
        let mut val = [1.0; 4];
        let mut d1 = [0.0; 4];
        let mut d2 = [0.0; 4];
        let trig: &[bool] = match self {
            // true = sin, false = cos; axes beyond the list contribute 1.
            ConformalPhi::SinX => &[true],
            ConformalPhi::SinCos => &[true, false],
            ConformalPhi::Triple => &[true, false, true],
        };
        for (i, &is_sin) in trig.iter().take(x.len()).enumerate() {
            let t = w * x[i];
            if is_sin {
                val[i] = t.sin();
                d1[i] = w * t.cos();
                d2[i] = -w * w * t.sin();
            } else {
                val[i] = t.cos();
                d1[i] = -w * t.sin();
                d2[i] = -w * w * t.cos();
            }
        }
        (val, d1, d2)
    }

    pub fn value(&self, x: &[f64], len: f64) -> f64 {
        let (val, _, _) = self.axis_factors(x, len);
        val[..x.len()].iter().product()
    }

    /// Analytic gradient, for the conformal-curvature oracle in tests.
    pub fn grad(&self, x: &[f64], len: f64) -> [f64; 4] {
        let n = x.len();
        let (val, d1, _) = self.axis_factors(x, len);
        let mut out = [0.0; 4];
        for k in 0..n {
            let mut prod = d1[k];
            for i in 0..n {
                if i != k {
                    prod *= val[i];
                }
            }
            out[k] = prod;
        }
        out
    }

    /// Analytic Hessian, for the conformal-curvature oracle in tests.
    pub fn hess(&self, x: &[f64], len: f64) -> [[f64; 4]; 4] {
        let n = x.len();
        let (val, d1, d2) = self.axis_factors(x, len);
        let mut out = [[0.0; 4]; 4];
        for a in 0..n {
            for b in a..n {
                let mut prod = 1.0;
                for i in 0..n {
                    prod *= if i == a && i == b {
                        d2[i]
                    } else if i == a || i == b {
                        d1[i]
                    } else {
                        val[i]
                    };
                }
                out[a][b] = prod;
                out[b][a] = prod;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntrinsicSpec {
    /// Flat torus, all periods L.
    Flat { n: usize, len: f64 },
    /// g = e^{2 eps phi} delta with phi from the catalog; locally conformally
    /// flat for any amplitude, positivity never at risk.
    Conformal { n: usize, len: f64, phi: ConformalPhi, eps: f64 },
    /// Non-conformally-flat product: e^{2 eps phi(x0, x1)} (dx0^2 + dx1^2)
    /// plus one axis factor (1 + eps_i sin(2 pi x_i / L))^2 dx_i^2 per extra
    /// axis; phi = sin cos. Dimension is 2 + eps_axis.len().
    Product { len: f64, eps: f64, eps_axis: Vec<f64> },
}

impl IntrinsicSpec {
    pub fn dim(&self) -> usize {
        match self {
            IntrinsicSpec::Flat { n, .. } | IntrinsicSpec::Conformal { n, .. } => *n,
            IntrinsicSpec::Product { eps_axis, .. } => 2 + eps_axis.len(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            IntrinsicSpec::Flat { n, len } => format!("flat(n={n},L={len})"),
            IntrinsicSpec::Conformal { n, len, phi, eps } => {
                format!("conformal(n={n},L={len},{},eps={eps})", phi.tag())
            }
            IntrinsicSpec::Product { len, eps, eps_axis } => {
                let axes: Vec<String> = eps_axis.iter().map(|e| format!("{e}")).collect();
                format!("product(L={len},eps={eps},axes=[{}])", axes.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddedSpec {
    /// Torus of revolution in R^3: center radius r1, tube radius r.
    Torus3 { r1: f64, r: f64 },
    /// Torus spun into R^4 about a plane: the R^3 torus (r1, r) shifted to
    /// height d and rotated in the (x3, x4)-plane; needs d > r so the spun
    /// circle never degenerates.
    SpunTorus4 { r1: f64, r: f64, d: f64 },
}

impl EmbeddedSpec {
    pub fn dim(&self) -> usize {
        match self {
            EmbeddedSpec::Torus3 { .. } => 2,
            EmbeddedSpec::SpunTorus4 { .. } => 3,
        }
    }

    pub fn name(&self) -> String {
        match self {
            EmbeddedSpec::Torus3 { r1, r } => format!("torus3({r1},{r})"),
            EmbeddedSpec::SpunTorus4 { r1, r, d } => format!("spun_torus4({r1},{r},{d})"),
        }
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), GridError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(GridError::BadParameter { name, value, constraint: "positive and finite" });
    }
    Ok(())
}

/// Sample an intrinsic closed-form metric onto a uniform grid.
pub fn build_intrinsic(spec: &IntrinsicSpec, res: usize) -> Result<GridManifold, GridError> {
    let n = spec.dim();
    if !(2..=4).contains(&n) {
        return Err(GridError::BadDimension(n));
    }
    let (len, conformally_flat) = match spec {
        IntrinsicSpec::Flat { len, .. } => (*len, true),
        IntrinsicSpec::Conformal { len, phi, eps, .. } => {
            if n < phi.min_dim() {
                return Err(GridError::BadDimension(n));
            }
            if !eps.is_finite() {
                return Err(GridError::BadParameter {
                    name: "eps",
                    value: *eps,
                    constraint: "finite",
                });
            }
            (*len, true)
        }
        IntrinsicSpec::Product { len, eps, eps_axis } => {
            if !eps.is_finite() {
                return Err(GridError::BadParameter {
                    name: "eps",
                    value: *eps,
                    constraint: "finite",
                });
            }
            for &e in eps_axis {
                if !(e.abs() < 1.0) {
                    return Err(GridError::BadParameter {
                        name: "eps_axis",
                        value: e,
                        constraint: "|eps_axis| < 1 keeps the axis factor positive",
                    });
                }
            }
            (*len, false)
        }
    };
    check_positive("L", len)?;
    let grid = Grid::new(vec![res; n], vec![len; n])?;
    let mut metric = SymField::zeros(n, grid.size());
    let mut x = vec![0.0f64; n];
    for p in 0..grid.size() {
        for (axis, xi) in x.iter_mut().enumerate() {
            *xi = grid.coord(p, axis);
        }
        match spec {
            IntrinsicSpec::Flat { .. } => {
                for i in 0..n {
                    metric.set(p, i, i, 1.0);
                }
            }
            IntrinsicSpec::Conformal { phi, eps, .. } => {
                let factor = (2.0 * eps * phi.value(&x, len)).exp();
                for i in 0..n {
                    metric.set(p, i, i, factor);
                }
            }
            IntrinsicSpec::Product { eps, eps_axis, .. } => {
                let w = 2.0 * std::f64::consts::PI / len;
                let phi = eps * (w * x[0]).sin() * (w * x[1]).cos();
                let factor = (2.0 * phi).exp();
                metric.set(p, 0, 0, factor);
                metric.set(p, 1, 1, factor);
                for (extra, &e) in eps_axis.iter().enumerate() {
                    let axis = 2 + extra;
                    let a = 1.0 + e * (w * x[axis]).sin();
                    metric.set(p, axis, axis, a * a);
                }
            }
        }
    }
    GridManifold::from_metric(grid, spec.name(), metric, None, conformally_flat)
}

/// Sample a closed-form periodic embedding: pullback metric, outward unit
/// normal, and covariant second fundamental form h_ij = -<nu, dd Phi>, all
/// analytic.
pub fn build_embedded(spec: &EmbeddedSpec, res: usize) -> Result<GridManifold, GridError> {
    let n = spec.dim();
    let two_pi = 2.0 * std::f64::consts::PI;
    match spec {
        EmbeddedSpec::Torus3 { r1, r } => {
            check_positive("r1", *r1)?;
            check_positive("r", *r)?;
            if !(r1 > r) {
                return Err(GridError::BadParameter {
                    name: "r1",
                    value: *r1,
                    constraint: "r1 > r avoids self-intersection",
                });
            }
        }
        EmbeddedSpec::SpunTorus4 { r1, r, d } => {
            check_positive("r1", *r1)?;
            check_positive("r", *r)?;
            check_positive("d", *d)?;
            if !(r1 > r) {
                return Err(GridError::BadParameter {
                    name: "r1",
                    value: *r1,
                    constraint: "r1 > r avoids self-intersection",
                });
            }
            if !(d > r) {
                return Err(GridError::BadParameter {
                    name: "d",
                    value: *d,
                    constraint: "d > r keeps the spun profile in the open half-space",
                });
            }
        }
    }
    let grid = Grid::new(vec![res; n], vec![two_pi; n])?;
    let size = grid.size();
    let mut metric = SymField::zeros(n, size);
    let mut shape = SymField::zeros(n, size);
    let mut normal = vec![0.0f64; size * (n + 1)];
    for p in 0..size {
        match spec {
            EmbeddedSpec::Torus3 { r1, r } => {
                let u = grid.coord(p, 0);
                let v = grid.coord(p, 1);
                let rho1 = r1 + r * v.cos();
                metric.set(p, 0, 0, rho1 * rho1);
                metric.set(p, 1, 1, r * r);
                shape.set(p, 0, 0, rho1 * v.cos());
                shape.set(p, 1, 1, *r);
                let nu = [v.cos() * u.cos(), v.cos() * u.sin(), v.sin()];
                normal[p * 3..p * 3 + 3].copy_from_slice(&nu);
            }
            EmbeddedSpec::SpunTorus4 { r1, r, d } => {
                let u = grid.coord(p, 0);
                let v = grid.coord(p, 1);
                let w = grid.coord(p, 2);
                let rho1 = r1 + r * v.cos();
                let rho2 = d + r * v.sin();
                metric.set(p, 0, 0, rho1 * rho1);
                metric.set(p, 1, 1, r * r);
                metric.set(p, 2, 2, rho2 * rho2);
                shape.set(p, 0, 0, rho1 * v.cos());
                shape.set(p, 1, 1, *r);
                shape.set(p, 2, 2, rho2 * v.sin());
                let nu = [v.cos() * u.cos(), v.cos() * u.sin(), v.sin() * w.cos(), v.sin() * w.sin()];
                normal[p * 4..p * 4 + 4].copy_from_slice(&nu);
            }
        }
    }
    GridManifold::from_metric(
        grid,
        spec.name(),
        metric,
        Some(EmbeddingData { normal, shape }),
        false,
    )
}
