//! Discrete extrinsic geometry: vertex normals, lumped areas, and the shape
//! operator from per-vertex quadric fits.
//!
//! Sign convention: `H = div N`, so a sphere of radius `R` with outward
//! normal has `H = n/R`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::measure::{WeightSpec, WeightedMeasure};
use crate::mesh::{Point, SurfaceMesh};

/// Fits whose design matrix has a larger condition number are flagged.
pub const MAX_FIT_CONDITION: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct GeometryField {
    pub normal: Vec<Point>,
    pub mean_curvature: Vec<f64>,
    /// `|A|²`, the squared norm of the second fundamental form.
    pub second_form_sq: Vec<f64>,
    /// Second fundamental form as an ambient symmetric matrix acting on
    /// tangent vectors, `A(X, Y) = Xᵀ·shape·Y`.
    pub shape: Vec<Matrix3<f64>>,
    /// `xᵀ = x - ⟨x,N⟩N`.
    pub tangential_position: Vec<Point>,
    /// Barycentric (lumped) area.
    pub vertex_area: Vec<f64>,
    /// Vertices whose curvature fit was ill-conditioned or underdetermined.
    pub flagged: Vec<usize>,
}

impl GeometryField {
    pub fn len(&self) -> usize {
        self.normal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normal.is_empty()
    }

    /// `⟨v, N⟩` at every vertex.
    pub fn normal_component(&self, v: &Point) -> Vec<f64> {
        self.normal.iter().map(|n| n.dot(v)).collect()
    }

    /// Area-weighted mean of `H`.
    pub fn mean_h(&self) -> f64 {
        let area: f64 = self.vertex_area.iter().sum();
        self.mean_curvature.iter().zip(&self.vertex_area).map(|(h, a)| h * a).sum::<f64>() / area
    }
}

struct Fit {
    normal: Point,
    h: f64,
    a2: f64,
    shape: Matrix3<f64>,
    ok: bool,
}

pub fn compute_geometry(mesh: &SurfaceMesh) -> GeometryField {
    let nv = mesh.n_vertices();
    let mut normal = vec![Point::zeros(); nv];
    let mut vertex_area = vec![0.0; nv];
    let share = 1.0 / (mesh.dim() + 1) as f64;
    for (f, face) in mesh.faces().enumerate() {
        let n = face_normal(mesh, face);
        let a = mesh.face_measure(f);
        for &i in face {
            normal[i] += n;
            vertex_area[i] += a * share;
        }
    }
    let mut degenerate = Vec::new();
    for (i, n) in normal.iter_mut().enumerate() {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        } else {
            degenerate.push(i);
            *n = Vector3::z();
        }
    }

    let neighbors = mesh.neighbors();
    let fits: Vec<Fit> = (0..nv)
        .into_par_iter()
        .map(|i| fit_vertex(mesh, &neighbors, &normal, i))
        .collect();

    let mut flagged: Vec<usize> = fits.iter().enumerate().filter(|(_, f)| !f.ok).map(|(i, _)| i).collect();
    flagged.extend(degenerate);
    for (n, f) in normal.iter_mut().zip(&fits) {
        *n = f.normal;
    }
    flagged.sort_unstable();
    flagged.dedup();

    let tangential_position = mesh
        .vertices()
        .iter()
        .zip(&normal)
        .map(|(x, n)| x - n * x.dot(n))
        .collect();
    GeometryField {
        mean_curvature: fits.iter().map(|f| f.h).collect(),
        second_form_sq: fits.iter().map(|f| f.a2).collect(),
        shape: fits.iter().map(|f| f.shape).collect(),
        normal,
        tangential_position,
        vertex_area,
        flagged,
    }
}

/// Unnormalized face normal, with length equal to the face measure times a
/// constant (2 for triangles, 1 for segments).
fn face_normal(mesh: &SurfaceMesh, face: &[usize]) -> Point {
    if let [a, b] = *face {
        let t = mesh.vertex(b) - mesh.vertex(a);
        return Point::new(t.y, -t.x, 0.0);
    }
    let (a, b, c) = (mesh.vertex(face[0]), mesh.vertex(face[1]), mesh.vertex(face[2]));
    (b - a).cross(&(c - a))
}

fn stencil(neighbors: &[Vec<usize>], i: usize, min_points: usize) -> Vec<usize> {
    let ring = &neighbors[i];
    if ring.len() >= min_points {
        return ring.clone();
    }
    let mut two: Vec<usize> = ring.iter().flat_map(|&j| neighbors[j].iter().copied()).chain(ring.iter().copied()).collect();
    two.sort_unstable();
    two.dedup();
    two.retain(|&j| j != i);
    two
}

fn tangent_frame(n: &Point) -> (Point, Point) {
    let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vector3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = n.cross(&axis).normalize();
    (e1, n.cross(&e1))
}

fn fit_vertex(mesh: &SurfaceMesh, neighbors: &[Vec<usize>], normal: &[Point], i: usize) -> Fit {
    let n = normal[i];
    let failed = Fit { normal: n, h: 0.0, a2: 0.0, shape: Matrix3::zeros(), ok: false };
    let p = mesh.vertex(i);
    if mesh.dim() == 1 {
        let t = Point::new(-n.y, n.x, 0.0);
        let pts = stencil(neighbors, i, 2);
        let local: Vec<(f64, f64)> = pts.iter().map(|&j| {
            let d = mesh.vertex(j) - p;
            (d.dot(&t), d.dot(&n))
        }).collect();
        let Some((coef, ok)) = solve_fit(&local.iter().map(|&(u, h)| (vec![u], h)).collect::<Vec<_>>(), 1) else {
            return failed;
        };
        let (a, d) = (coef[0], coef[1]);
        let w = (1.0 + d * d).sqrt();
        let kappa = -2.0 * a / (w * w * w);
        let tangent = (t + n * d) / w;
        return Fit { normal: (n - t * d) / w, h: kappa, a2: kappa * kappa, shape: tangent * tangent.transpose() * kappa, ok };
    }

    let (e1, e2) = tangent_frame(&n);
    let pts = stencil(neighbors, i, 6);
    let samples: Vec<(Vec<f64>, f64)> = pts
        .iter()
        .map(|&j| {
            let d = mesh.vertex(j) - p;
            (vec![d.dot(&e1), d.dot(&e2)], d.dot(&n))
        })
        .collect();
    let Some((coef, ok)) = solve_fit(&samples, 2) else {
        return failed;
    };
    let (a, b, c, d, e) = (coef[0], coef[1], coef[2], coef[3], coef[4]);
    let g = nalgebra::Vector2::new(d, e);
    let w = (1.0 + g.norm_squared()).sqrt();
    let hess = Matrix2::new(2.0 * a, b, b, 2.0 * c);
    let second = -hess / w;
    // Symmetrized shape operator G^{-1/2} II G^{-1/2}, G = I + g gᵀ.
    let metric = Matrix2::identity() + g * g.transpose();
    let eig = SymmetricEigen::new(metric);
    let inv_sqrt = eig.eigenvectors * Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * eig.eigenvectors.transpose();
    let s = inv_sqrt * second * inv_sqrt;
    // Orthonormal frame of the fitted tangent plane.
    let frame = nalgebra::Matrix3x2::from_columns(&[e1 + n * d, e2 + n * e]) * inv_sqrt;
    Fit {
        normal: (n - e1 * d - e2 * e) / w,
        h: s.trace(),
        a2: s.norm_squared(),
        shape: frame * s * frame.transpose(),
        ok,
    }
}

/// Least-squares quadric fit in `dim` tangent variables: the height is
/// modelled by all monomials of degree 1 and 2 (quadratic terms first).
/// Coordinates are scaled by their RMS distance for conditioning. Returns
/// the coefficients in unscaled units and whether the fit is well
/// conditioned, or `None` if underdetermined.
fn solve_fit(samples: &[(Vec<f64>, f64)], dim: usize) -> Option<(Vec<f64>, bool)> {
    let unknowns = if dim == 1 { 2 } else { 5 };
    if samples.len() < unknowns {
        return None;
    }
    let scale = (samples.iter().map(|(u, h)| u.iter().map(|x| x * x).sum::<f64>() + h * h).sum::<f64>()
        / samples.len() as f64)
        .sqrt();
    if scale == 0.0 {
        return None;
    }
    let rows = samples.len();
    let mut design = DMatrix::zeros(rows, unknowns);
    let mut rhs = DVector::zeros(rows);
    for (r, (u, h)) in samples.iter().enumerate() {
        let u: Vec<f64> = u.iter().map(|x| x / scale).collect();
        if dim == 1 {
            design[(r, 0)] = u[0] * u[0];
            design[(r, 1)] = u[0];
        } else {
            design[(r, 0)] = u[0] * u[0];
            design[(r, 1)] = u[0] * u[1];
            design[(r, 2)] = u[1] * u[1];
            design[(r, 3)] = u[0];
            design[(r, 4)] = u[1];
        }
        rhs[r] = h / scale;
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) {
        return None;
    }
    let ok = smax / smin <= MAX_FIT_CONDITION;
    let sol = svd.solve(&rhs, 0.0).ok()?;
    // Quadratic coefficients carry one inverse length; linear ones are
    // dimensionless.
    let quad = if dim == 1 { 1 } else { 3 };
    let coef = sol.iter().enumerate().map(|(k, &c)| if k < quad { c / scale } else { c }).collect();
    Some((coef, ok))
}

/// Estimates the constant `C` in `H = ⟨x,N⟩/2 + C` for the Gaussian weight,
/// or `H + ⟨∇f, N⟩ = C` in general: returns the `dA_μ`-weighted mean and
/// standard deviation of that quantity over interior vertices.
pub fn criticality_residual(mesh: &SurfaceMesh, geom: &GeometryField, weight: &WeightSpec) -> Result<(f64, f64)> {
    let measure = WeightedMeasure::new(mesh, geom, weight);
    let interior = mesh.interior_vertices();
    if interior.is_empty() {
        return Err(invalid("criticality needs at least one interior vertex"));
    }
    let q: Vec<f64> = interior
        .iter()
        .map(|&i| geom.mean_curvature[i] + weight.gradient(mesh.vertex(i)).dot(&geom.normal[i]))
        .collect();
    let m: Vec<f64> = interior.iter().map(|&i| measure.vertex_weight[i]).collect();
    let total: f64 = m.iter().sum();
    let mean = q.iter().zip(&m).map(|(a, w)| a * w).sum::<f64>() / total;
    let var = q.iter().zip(&m).map(|(a, w)| (a - mean).powi(2) * w).sum::<f64>() / total;
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, SurfaceSpec};

    #[test]
    fn plane_is_flat() {
        let m = generate(&SurfaceSpec::plane_disk(0.0, 8.0, 3)).unwrap();
        let g = compute_geometry(&m);
        assert!(g.flagged.is_empty());
        for i in 0..m.n_vertices() {
            assert!(g.mean_curvature[i].abs() < 1e-10);
            assert!(g.second_form_sq[i] < 1e-10);
            assert!((g.tangential_position[i] - m.vertex(i)).norm() < 1e-12);
            assert!((g.normal[i] - Point::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn circle_curvature() {
        let m = generate(&SurfaceSpec::circle(2.0, 4)).unwrap();
        let g = compute_geometry(&m);
        for &h in &g.mean_curvature {
            assert!((h - 0.5).abs() < 1e-3, "{h}");
        }
    }

    #[test]
    fn line_normal_points_up() {
        let m = generate(&SurfaceSpec::line(0.5, 3.0, 2)).unwrap();
        let g = compute_geometry(&m);
        for n in &g.normal {
            assert!((n - Point::y()).norm() < 1e-14);
        }
    }

    #[test]
    fn tangential_part_is_orthogonal() {
        let m = generate(&SurfaceSpec::offset_sphere(1.0, [0.3, 0.0, 0.1], 2)).unwrap();
        let g = compute_geometry(&m);
        for i in 0..m.n_vertices() {
            assert!((g.normal[i].norm() - 1.0).abs() < 1e-12);
            assert!(g.tangential_position[i].dot(&g.normal[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn sphere_shape_operator_is_isotropic() {
        let m = generate(&SurfaceSpec::sphere(2.0, 4)).unwrap();
        let g = compute_geometry(&m);
        for i in 0..m.n_vertices() {
            let expect = (Matrix3::identity() - g.normal[i] * g.normal[i].transpose()) * 0.5;
            assert!((g.shape[i] - expect).norm() < 5e-3, "vertex {i}");
        }
    }

    #[test]
    fn criticality_needs_interior() {
        let v = vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)];
        let m = SurfaceMesh::new(2, v, vec![0, 1, 2]).unwrap();
        let g = compute_geometry(&m);
        assert!(criticality_residual(&m, &g, &WeightSpec::Gaussian).is_err());
    }
}
