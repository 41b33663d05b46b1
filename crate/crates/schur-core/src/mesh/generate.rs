//! Built-in surface generators. All produce outward-oriented closed meshes.

use super::{MeshError, TriMesh};
use nalgebra::Vector3;
use std::collections::HashMap;

/// Refinement cap; level 7 is already 163,842 vertices.
pub const MAX_SUBDIV: u32 = 7;

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("subdivision level {0} exceeds the supported maximum {MAX_SUBDIV}")]
    SubdivisionTooDeep(u32),
    #[error("parameter {name} = {value} is out of range: {constraint}")]
    BadParameter { name: &'static str, value: f64, constraint: &'static str },
    #[error("torus sampling needs at least 8 cells per direction, got {nu} x {nv}")]
    TorusTooCoarse { nu: usize, nv: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Icosahedron with vertices at the two poles, so scaled spheres keep exact
/// polar sample points.
fn polar_icosahedron() -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let z = 1.0 / 5.0f64.sqrt();
    let r = 2.0 / 5.0f64.sqrt();
    let mut v = vec![Vector3::new(0.0, 0.0, 1.0)];
    for k in 0..5 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
        v.push(Vector3::new(r * a.cos(), r * a.sin(), z));
    }
    for k in 0..5 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0 + std::f64::consts::PI / 5.0;
        v.push(Vector3::new(r * a.cos(), r * a.sin(), -z));
    }
    v.push(Vector3::new(0.0, 0.0, -1.0));
    let u = |k: usize| 1 + k % 5;
    let l = |k: usize| 6 + k % 5;
    let mut f = Vec::with_capacity(20);
    for k in 0..5 {
        f.push([0, u(k), u(k + 1)]);
        f.push([u(k), l(k), u(k + 1)]);
        f.push([u(k + 1), l(k), l(k + 1)]);
        f.push([11, l(k + 1), l(k)]);
    }
    (v, f)
}

/// Loop-style 1-to-4 subdivision with new vertices pushed to the unit sphere.
fn subdivide_projected(
    vertices: &mut Vec<Vector3<f64>>,
    faces: &[[usize; 3]],
) -> Vec<[usize; 3]> {
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut out = Vec::with_capacity(faces.len() * 4);
    let mut mid = |a: usize, b: usize, vs: &mut Vec<Vector3<f64>>| -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = midpoint.get(&key) {
            return m;
        }
        let p = ((vs[a] + vs[b]) * 0.5).normalize();
        vs.push(p);
        let idx = vs.len() - 1;
        midpoint.insert(key, idx);
        idx
    };
    for f in faces {
        let [a, b, c] = *f;
        let ab = mid(a, b, vertices);
        let bc = mid(b, c, vertices);
        let ca = mid(c, a, vertices);
        out.push([a, ab, ca]);
        out.push([ab, b, bc]);
        out.push([ca, bc, c]);
        out.push([ab, bc, ca]);
    }
    out
}

fn unit_icosphere(subdiv: u32) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), GenerateError> {
    if subdiv > MAX_SUBDIV {
        return Err(GenerateError::SubdivisionTooDeep(subdiv));
    }
    let (mut v, mut f) = polar_icosahedron();
    for _ in 0..subdiv {
        f = subdivide_projected(&mut v, &f);
    }
    Ok((v, f))
}

/// Round sphere of radius `rho`, 10 * 4^subdiv + 2 vertices.
pub fn icosphere(rho: f64, subdiv: u32) -> Result<TriMesh, GenerateError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(GenerateError::BadParameter { name: "rho", value: rho, constraint: "positive and finite" });
    }
    let (v, f) = unit_icosphere(subdiv)?;
    Ok(TriMesh::new(v.into_iter().map(|p| p * rho).collect(), f)?)
}

/// Axis-aligned ellipsoid with semi-axes (a, b, c), built by scaling the unit
/// icosphere so that the pole and equator sample points are exact.
pub fn ellipsoid(a: f64, b: f64, c: f64, subdiv: u32) -> Result<TriMesh, GenerateError> {
    for (name, value) in [("a", a), ("b", b), ("c", c)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(GenerateError::BadParameter { name, value, constraint: "positive and finite" });
        }
    }
    let (v, f) = unit_icosphere(subdiv)?;
    let scaled = v.into_iter().map(|p| Vector3::new(a * p.x, b * p.y, c * p.z)).collect();
    Ok(TriMesh::new(scaled, f)?)
}

/// Torus of revolution: tube radius `r` around a circle of radius `r1`,
/// sampled on an nu x nv parameter grid.
pub fn torus(r1: f64, r: f64, nu: usize, nv: usize) -> Result<TriMesh, GenerateError> {
    if !(r > 0.0) || !(r1 > r) || !r1.is_finite() {
        return Err(GenerateError::BadParameter { name: "r1", value: r1, constraint: "r1 > r > 0" });
    }
    if nu < 8 || nv < 8 {
        return Err(GenerateError::TorusTooCoarse { nu, nv });
    }
    let mut v = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let w = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let ring = r1 + r * w.cos();
            v.push(Vector3::new(ring * u.cos(), ring * u.sin(), r * w.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut f = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            // (du x dv) points along the outward normal, so u-then-v order is CCW.
            f.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            f.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Ok(TriMesh::new(v, f)?)
}

/// Legendre polynomial P_l(x) by the three-term recurrence.
fn legendre(l: u32, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let mut pm = 1.0;
            let mut p = x;
            for k in 1..l {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0) * x * p - kf * pm) / (kf + 1.0);
                pm = p;
                p = next;
            }
            p
        }
    }
}

/// Sphere with a zonal harmonic radial perturbation:
/// radius(theta) = rho (1 + eps P_l(cos theta)). |eps| < 1 keeps it embedded.
pub fn perturbed_sphere(rho: f64, eps: f64, l: u32, subdiv: u32) -> Result<TriMesh, GenerateError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(GenerateError::BadParameter { name: "rho", value: rho, constraint: "positive and finite" });
    }
    if !(eps.abs() < 1.0) {
        return Err(GenerateError::BadParameter { name: "eps", value: eps, constraint: "|eps| < 1 (P_l is bounded by 1)" });
    }
    let (v, f) = unit_icosphere(subdiv)?;
    let displaced = v
        .into_iter()
        .map(|p| {
            let cos_theta = p.z.clamp(-1.0, 1.0);
            p * (rho * (1.0 + eps * legendre(l, cos_theta)))
        })
        .collect();
    Ok(TriMesh::new(displaced, f)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_follow_subdivision() {
        for (s, nv) in [(0u32, 12usize), (1, 42), (2, 162), (4, 2562)] {
            let m = icosphere(1.0, s).unwrap();
            assert_eq!(m.vertex_count(), nv, "subdiv {s}");
            assert_eq!(m.face_count(), 20usize << (2 * s));
            assert_eq!(m.euler_characteristic(), 2);
        }
    }

    #[test]
    fn icosphere_vertices_sit_on_the_sphere_with_polar_samples() {
        let rho = 2.5;
        let m = icosphere(rho, 3).unwrap();
        for v in m.vertices() {
            assert!((v.norm() - rho).abs() < 1e-12);
        }
        assert!(m.vertices().iter().any(|v| (v - Vector3::new(0.0, 0.0, rho)).norm() < 1e-12));
        assert!(m.vertices().iter().any(|v| (v - Vector3::new(0.0, 0.0, -rho)).norm() < 1e-12));
    }

    #[test]
    fn faces_are_outward_oriented() {
        let m = icosphere(1.0, 2).unwrap();
        for f in m.faces() {
            let [a, b, c] = *f;
            let p = m.vertices();
            let n = (p[b] - p[a]).cross(&(p[c] - p[a]));
            let centroid = (p[a] + p[b] + p[c]) / 3.0;
            assert!(n.dot(&centroid) > 0.0);
        }
    }

    #[test]
    fn torus_has_genus_one() {
        let m = torus(2.0, 0.5, 24, 12).unwrap();
        assert_eq!(m.vertex_count(), 24 * 12);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn torus_orientation_is_outward_at_outer_equator() {
        let m = torus(2.0, 0.5, 32, 16).unwrap();
        // Face containing vertex (i=0, j=0) at the outer equator: normal
        // should point away from the z axis.
        let f = m.faces()[0];
        let p = m.vertices();
        let n = (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]]));
        let radial = Vector3::new(p[f[0]].x, p[f[0]].y, 0.0);
        assert!(n.dot(&radial) > 0.0);
    }

    #[test]
    fn perturbed_sphere_radius_profile() {
        let m = perturbed_sphere(1.0, 0.3, 3, 2).unwrap();
        // P_3(cos theta) at the north pole is 1: radius = 1.3 there.
        let top = m
            .vertices()
            .iter()
            .max_by(|a, b| a.z.partial_cmp(&b.z).unwrap())
            .unwrap();
        assert!((top.norm() - 1.3).abs() < 1e-12);
        assert!(perturbed_sphere(1.0, 1.0, 3, 2).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(icosphere(-1.0, 2).is_err());
        assert!(icosphere(1.0, 9).is_err());
        assert!(torus(0.5, 2.0, 24, 12).is_err());
        assert!(torus(2.0, 0.5, 4, 12).is_err());
        assert!(ellipsoid(1.0, 0.0, 1.0, 2).is_err());
    }
}
