//! Weights `e^f`, the weighted vertex masses `dA_f`, and the scalar-field
//! utilities built on them (inner products, mean normals, radial cutoffs,
//! piecewise-linear gradients).

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;

use crate::error::{invalid, Result};
use crate::geometry::GeometryField;
use crate::mesh::{Point, SurfaceMesh};

/// A log-density `f` on the ambient space with its first two derivatives.
pub trait WeightField: Send + Sync + fmt::Debug {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
    fn hessian(&self, x: &Point) -> Matrix3<f64>;
}

/// `f(x) = shift - scale·|x|²`. With `scale = 1/4, shift = 0` this is the
/// Gaussian weight evaluated through the general code path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialQuadratic {
    pub scale: f64,
    pub shift: f64,
}

impl WeightField for RadialQuadratic {
    fn value(&self, x: &Point) -> f64 {
        self.shift - self.scale * x.norm_squared()
    }

    fn gradient(&self, x: &Point) -> Point {
        -2.0 * self.scale * x
    }

    fn hessian(&self, _x: &Point) -> Matrix3<f64> {
        Matrix3::identity() * (-2.0 * self.scale)
    }
}

#[derive(Debug, Clone, Default)]
pub enum WeightSpec {
    /// `f = -|x|²/4`.
    #[default]
    Gaussian,
    Custom(Arc<dyn WeightField>),
}

impl WeightSpec {
    pub fn custom(field: impl WeightField + 'static) -> Self {
        Self::Custom(Arc::new(field))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Custom(_) => "custom",
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            Self::Gaussian => -0.25 * x.norm_squared(),
            Self::Custom(w) => w.value(x),
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        match self {
            Self::Gaussian => -0.5 * x,
            Self::Custom(w) => w.gradient(x),
        }
    }

    pub fn hessian(&self, x: &Point) -> Matrix3<f64> {
        match self {
            Self::Gaussian => Matrix3::identity() * -0.5,
            Self::Custom(w) => w.hessian(x),
        }
    }

    /// `Hess_f(N, N)` at `x`. The Gaussian case is the constant `-1/2`.
    pub fn hessian_nn(&self, x: &Point, normal: &Point) -> f64 {
        match self {
            Self::Gaussian => -0.5,
            Self::Custom(w) => normal.dot(&(w.hessian(x) * normal)),
        }
    }
}

/// Per-vertex masses of `dA_f = e^f dA` under mass lumping.
#[derive(Debug, Clone)]
pub struct WeightedMeasure {
    /// `e^{f(x_v)}`.
    pub density: Vec<f64>,
    /// `e^{f(x_v)}·vertex_area(v)`.
    pub vertex_weight: Vec<f64>,
    pub total: f64,
}

impl WeightedMeasure {
    pub fn new(mesh: &SurfaceMesh, geom: &GeometryField, weight: &WeightSpec) -> Self {
        let density: Vec<f64> = mesh.vertices().iter().map(|x| weight.value(x).exp()).collect();
        let vertex_weight: Vec<f64> = density.iter().zip(&geom.vertex_area).map(|(d, a)| d * a).collect();
        let total = vertex_weight.iter().sum();
        Self { density, vertex_weight, total }
    }

    pub fn len(&self) -> usize {
        self.vertex_weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_weight.is_empty()
    }

    /// `⟨u, v⟩_μ = Σ u v m`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.vertex_weight).map(|((a, b), m)| a * b * m).sum()
    }

    /// `∫ u dA_μ`.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.vertex_weight).map(|(a, m)| a * m).sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Removes the μ-mean: `u - (⟨u,1⟩_μ / ⟨1,1⟩_μ)·1`.
    pub fn project_mean_zero(&self, u: &[f64]) -> Vec<f64> {
        if self.total <= 0.0 {
            return u.to_vec();
        }
        let mean = self.integrate(u) / self.total;
        u.iter().map(|a| a - mean).collect()
    }
}

/// `A_μ(Σ) = Σ_v e^{f(x_v)}·vertex_area(v)`.
pub fn weighted_area(mesh: &SurfaceMesh, geom: &GeometryField, weight: &WeightSpec) -> f64 {
    WeightedMeasure::new(mesh, geom, weight).total
}

pub fn weighted_inner(u: &[f64], v: &[f64], measure: &WeightedMeasure) -> f64 {
    measure.inner(u, v)
}

pub fn project_mean_zero(u: &[f64], measure: &WeightedMeasure) -> Vec<f64> {
    measure.project_mean_zero(u)
}

/// `N_φ = ∫φN dA_μ / ∫φ dA_μ`, or zero when `∫φ dA_μ = 0`.
pub fn mean_normal(geom: &GeometryField, measure: &WeightedMeasure, phi: &[f64]) -> Result<Point> {
    if phi.len() != measure.len() {
        return Err(invalid(format!("phi has {} entries, mesh has {} vertices", phi.len(), measure.len())));
    }
    if let Some(i) = phi.iter().position(|&p| !(p >= 0.0)) {
        return Err(invalid(format!("phi must be nonnegative, phi[{i}] = {}", phi[i])));
    }
    let mass = measure.integrate(phi);
    if mass == 0.0 {
        return Ok(Point::zeros());
    }
    let mut sum = Point::zeros();
    for ((p, m), n) in phi.iter().zip(&measure.vertex_weight).zip(&geom.normal) {
        sum += n * (p * m);
    }
    Ok(sum / mass)
}

/// Radial cutoff: 1 on `B_R`, linear down to 0 on `B_{2R}`, 0 outside.
pub fn cutoff_phi(r: f64, radius: f64) -> f64 {
    (2.0 - r / radius).clamp(0.0, 1.0)
}

/// [`cutoff_phi`] sampled at every vertex.
pub fn cutoff_phi_r(mesh: &SurfaceMesh, radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("cutoff radius must be positive, got {radius}")));
    }
    Ok(mesh.vertices().iter().map(|x| cutoff_phi(x.norm(), radius)).collect())
}

/// Gradients of the barycentric coordinate functions of face `f`, one per
/// face vertex.
pub fn barycentric_gradients(mesh: &SurfaceMesh, f: usize) -> [Point; 3] {
    let face = mesh.face(f);
    if let [a, b] = *face {
        let t = mesh.vertex(b) - mesh.vertex(a);
        let g = t / t.norm_squared();
        return [-g, g, Point::zeros()];
    }
    let (a, b, c) = (mesh.vertex(face[0]), mesh.vertex(face[1]), mesh.vertex(face[2]));
    let n = (b - a).cross(&(c - a));
    let twice_area_sq = n.norm_squared();
    // ∇λ_i = n × (opposite edge) / |n|², with n the unnormalized face normal.
    [n.cross(&(c - b)) / twice_area_sq, n.cross(&(a - c)) / twice_area_sq, n.cross(&(b - a)) / twice_area_sq]
}

/// Piecewise-constant gradient of the linear interpolant of `u`, per face.
pub fn face_gradients(mesh: &SurfaceMesh, u: &[f64]) -> Vec<Point> {
    (0..mesh.n_faces())
        .map(|f| {
            let grads = barycentric_gradients(mesh, f);
            mesh.face(f).iter().zip(&grads).map(|(&i, g)| g * u[i]).sum()
        })
        .collect()
}

/// Area-weighted average of the incident face gradients at each vertex.
pub fn vertex_gradients(mesh: &SurfaceMesh, u: &[f64]) -> Vec<Point> {
    let face_grad = face_gradients(mesh, u);
    let mut sum = vec![Point::zeros(); mesh.n_vertices()];
    let mut area = vec![0.0; mesh.n_vertices()];
    for (f, g) in face_grad.iter().enumerate() {
        let a = mesh.face_measure(f);
        for &i in mesh.face(f) {
            sum[i] += g * a;
            area[i] += a;
        }
    }
    sum.into_iter().zip(area).map(|(s, a)| s / a).collect()
}

/// Average of the vertex densities over each face, the per-element weight
/// used by the stiffness matrix.
pub fn face_density(mesh: &SurfaceMesh, measure: &WeightedMeasure) -> Vec<f64> {
    mesh.faces()
        .map(|face| face.iter().map(|&i| measure.density[i]).sum::<f64>() / face.len() as f64)
        .collect()
}

/// `∫|∇u|² dA_μ` with piecewise-linear `u` and per-face averaged density.
pub fn dirichlet_energy(mesh: &SurfaceMesh, measure: &WeightedMeasure, u: &[f64]) -> f64 {
    let w = face_density(mesh, measure);
    face_gradients(mesh, u)
        .iter()
        .enumerate()
        .map(|(f, g)| g.norm_squared() * mesh.face_measure(f) * w[f])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, SurfaceSpec};
    use crate::geometry::compute_geometry;

    #[test]
    fn gaussian_derivatives() {
        let x = Point::new(0.3, -1.2, 2.0);
        let w = WeightSpec::Gaussian;
        assert!((w.value(&x) + x.norm_squared() / 4.0).abs() < 1e-14);
        assert!((w.gradient(&x) + x / 2.0).norm() < 1e-14);
        assert!((w.hessian(&x) + Matrix3::identity() * 0.5).norm() < 1e-14);
        let q = RadialQuadratic { scale: 0.25, shift: 0.0 };
        assert_eq!(q.value(&x), w.value(&x));
        assert_eq!(q.gradient(&x), w.gradient(&x));
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff_phi(1.0, 2.0), 1.0);
        assert_eq!(cutoff_phi(3.0, 2.0), 0.5);
        assert_eq!(cutoff_phi(6.0, 2.0), 0.0);
        let m = generate(&SurfaceSpec::sphere(1.0, 1)).unwrap();
        assert!(cutoff_phi_r(&m, 0.0).is_err());
    }

    #[test]
    fn gradient_of_linear_function_is_exact_on_a_plane() {
        let m = generate(&SurfaceSpec::plane_disk(0.0, 3.0, 2)).unwrap();
        let u: Vec<f64> = m.vertices().iter().map(|p| 2.0 * p.x - p.y).collect();
        for g in face_gradients(&m, &u) {
            assert!((g - Point::new(2.0, -1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let m = generate(&SurfaceSpec::sphere(1.0, 2)).unwrap();
        let g = compute_geometry(&m);
        let mu = WeightedMeasure::new(&m, &g, &WeightSpec::Gaussian);
        let u: Vec<f64> = m.vertices().iter().map(|p| 1.0 + p.x * p.y + p.z).collect();
        let once = mu.project_mean_zero(&u);
        let twice = mu.project_mean_zero(&once);
        assert!(mu.integrate(&once).abs() < 1e-12 * mu.total);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(mu.project_mean_zero(&vec![1.0; u.len()]).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn mean_normal_rejects_negative_phi() {
        let m = generate(&SurfaceSpec::sphere(1.0, 1)).unwrap();
        let g = compute_geometry(&m);
        let mu = WeightedMeasure::new(&m, &g, &WeightSpec::Gaussian);
        let mut phi = vec![1.0; m.n_vertices()];
        phi[3] = -0.1;
        assert!(mean_normal(&g, &mu, &phi).is_err());
        assert_eq!(mean_normal(&g, &mu, &vec![0.0; m.n_vertices()]).unwrap(), Point::zeros());
    }
}
