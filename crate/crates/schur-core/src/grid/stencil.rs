//! Central finite-difference stencils on periodic lattices.
//!
//! Application is in paired form, c_k (f[i+k] - f[i-k]) for first and
//! c_k (f[i+k] + f[i-k] - 2 f[i]) for second derivatives, so lattice-constant
//! fields are annihilated exactly, not just to roundoff. Flat metrics then
//! produce identically zero curvature.

use super::Grid;

/// Stencil accuracy order. Fourth is the default throughout curvature and
/// operator assembly; Sixth backs the Bochner diagnostics, whose 1e-6
/// residual budget the fourth-order symbol mismatch cannot meet; Second
/// exists for order-sensitivity tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Second,
    Fourth,
    Sixth,
}

impl Order {
    /// Off-center weights c_1..c_m of the first-derivative stencil, to be
    /// applied as sum_k c_k (f[i+k] - f[i-k]) / h.
    pub fn d1_weights(self) -> &'static [f64] {
        match self {
            Order::Second => &[0.5],
            Order::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            Order::Sixth => &[0.75, -0.15, 1.0 / 60.0],
        }
    }

    /// Off-center weights c_1..c_m of the second-derivative stencil, applied
    /// as sum_k c_k (f[i+k] + f[i-k] - 2 f[i]) / h^2.
    ///
    /// The paired form already subtracts the center, so the weights are the
    /// plain off-center coefficients; the usual center value is implied by
    /// the -2 f[i] in each pair.
    pub fn d2_weights(self) -> &'static [f64] {
        match self {
            Order::Second => &[1.0],
            Order::Fourth => &[4.0 / 3.0, -1.0 / 12.0],
            Order::Sixth => &[1.5, -0.15, 1.0 / 90.0],
        }
    }

    pub fn radius(self) -> usize {
        self.d1_weights().len()
    }
}

/// First derivative of a scalar field along `axis`.
pub fn d1(grid: &Grid, field: &[f64], axis: usize, order: Order) -> Vec<f64> {
    let mut out = vec![0.0; grid.size()];
    d1_into(grid, field, axis, order, &mut out);
    out
}

pub fn d1_into(grid: &Grid, field: &[f64], axis: usize, order: Order, out: &mut [f64]) {
    let w = order.d1_weights();
    let h = grid.spacing()[axis];
    for p in 0..grid.size() {
        out[p] = d1_at(grid, field, p, axis, w, h);
    }
}

/// Second derivative of a scalar field along `axis`.
pub fn d2(grid: &Grid, field: &[f64], axis: usize, order: Order) -> Vec<f64> {
    let w = order.d2_weights();
    let h2 = grid.spacing()[axis] * grid.spacing()[axis];
    let mut out = vec![0.0; grid.size()];
    for p in 0..grid.size() {
        out[p] = d2_at(grid, field, p, axis, w, h2);
    }
    out
}

/// Mixed second derivative as nested first derivatives; for ax1 == ax2 the
/// dedicated second-derivative stencil is used instead.
pub fn d1d1(grid: &Grid, field: &[f64], ax1: usize, ax2: usize, order: Order) -> Vec<f64> {
    if ax1 == ax2 {
        return d2(grid, field, ax1, order);
    }
    let inner = d1(grid, field, ax2, order);
    d1(grid, &inner, ax1, order)
}

/// Pointwise first derivative from precomputed weights; hot path for the
/// curvature sweeps.
#[inline]
pub fn d1_at(grid: &Grid, field: &[f64], p: usize, axis: usize, w: &[f64], h: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in w.iter().enumerate() {
        let s = (k + 1) as isize;
        acc += c * (field[grid.shift(p, axis, s)] - field[grid.shift(p, axis, -s)]);
    }
    acc / h
}

/// Pointwise second derivative from precomputed weights.
#[inline]
pub fn d2_at(grid: &Grid, field: &[f64], p: usize, axis: usize, w: &[f64], h2: f64) -> f64 {
    let center = field[p];
    let mut acc = 0.0;
    for (k, &c) in w.iter().enumerate() {
        let s = (k + 1) as isize;
        acc += c * (field[grid.shift(p, axis, s)] + field[grid.shift(p, axis, -s)] - 2.0 * center);
    }
    acc / h2
}

/// Strided variants for packed multi-component fields: component `c` of
/// point `p` lives at `p * m + c`.
#[inline]
pub fn d1_at_strided(
    grid: &Grid,
    raw: &[f64],
    m: usize,
    c: usize,
    p: usize,
    axis: usize,
    w: &[f64],
    h: f64,
) -> f64 {
    let mut acc = 0.0;
    for (k, &cw) in w.iter().enumerate() {
        let s = (k + 1) as isize;
        acc += cw * (raw[grid.shift(p, axis, s) * m + c] - raw[grid.shift(p, axis, -s) * m + c]);
    }
    acc / h
}

#[inline]
#[allow(clippy::too_many_arguments)]
pub fn d2_at_strided(
    grid: &Grid,
    raw: &[f64],
    m: usize,
    c: usize,
    p: usize,
    ax1: usize,
    ax2: usize,
    w1: &[f64],
    w2: &[f64],
    h1: f64,
    h2: f64,
) -> f64 {
    if ax1 == ax2 {
        let center = raw[p * m + c];
        let mut acc = 0.0;
        for (k, &cw) in w2.iter().enumerate() {
            let s = (k + 1) as isize;
            acc += cw
                * (raw[grid.shift(p, ax1, s) * m + c] + raw[grid.shift(p, ax1, -s) * m + c]
                    - 2.0 * center);
        }
        return acc / (h1 * h1);
    }
    // Nested paired first differences.
    let mut acc = 0.0;
    for (k1, &c1) in w1.iter().enumerate() {
        let s1 = (k1 + 1) as isize;
        let plus = grid.shift(p, ax1, s1);
        let minus = grid.shift(p, ax1, -s1);
        let mut inner = 0.0;
        for (k2, &c2) in w1.iter().enumerate() {
            let s2 = (k2 + 1) as isize;
            inner += c2
                * ((raw[grid.shift(plus, ax2, s2) * m + c] - raw[grid.shift(plus, ax2, -s2) * m + c])
                    - (raw[grid.shift(minus, ax2, s2) * m + c]
                        - raw[grid.shift(minus, ax2, -s2) * m + c]));
        }
        acc += c1 * inner;
    }
    acc / (h1 * h2)
}
