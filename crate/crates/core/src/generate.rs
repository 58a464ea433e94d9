//! Parametric generators for the critical-surface families and 1→4 / 1→2
//! refinement.
//!
//! Every generated mesh is built from a coarse base by `level` rounds of
//! [`refine`], projecting new vertices back onto the smooth surface. Hence
//! `refine(generate(spec at L)) == generate(spec at L + 1)` vertex for vertex.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mesh::{Point, SurfaceMesh};

/// Kind-specific parameters. Lengths are in the ambient Euclidean units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Hyperplane `x_{n+1} = offset` with unit normal `e_{n+1}`, cut to the
    /// Euclidean ball of radius `truncation` (the `2R` of the estimates).
    PlaneDisk { offset: f64, truncation: f64 },
    /// Round sphere `|x - center| = radius`, outward normal.
    Sphere { radius: f64, center: [f64; 3] },
    /// `S¹_radius × ℝ` along `e₃`, cut to `|x₃| ≤ half_length` (n = 2 only).
    Cylinder { radius: f64, half_length: f64 },
    /// Torus of revolution about `e₃` (n = 2 only). Not critical; used to
    /// exercise the detectors on a closed non-critical surface.
    Torus { major: f64, minor: f64 },
    /// Graph of `offset + amplitude·exp(-|p|²/(2 width²))` over the disk of
    /// Euclidean radius `truncation` (n = 2 only).
    Graph { offset: f64, amplitude: f64, width: f64, truncation: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    /// Intrinsic dimension n.
    pub dim: usize,
    pub shape: Shape,
    /// Number of refinement rounds applied to the base mesh.
    pub level: u32,
}

impl SurfaceSpec {
    pub fn sphere(radius: f64, level: u32) -> Self {
        Self { dim: 2, shape: Shape::Sphere { radius, center: [0.0; 3] }, level }
    }

    pub fn offset_sphere(radius: f64, center: [f64; 3], level: u32) -> Self {
        Self { dim: 2, shape: Shape::Sphere { radius, center }, level }
    }

    pub fn plane_disk(offset: f64, truncation: f64, level: u32) -> Self {
        Self { dim: 2, shape: Shape::PlaneDisk { offset, truncation }, level }
    }

    pub fn cylinder(radius: f64, half_length: f64, level: u32) -> Self {
        Self { dim: 2, shape: Shape::Cylinder { radius, half_length }, level }
    }

    pub fn torus(major: f64, minor: f64, level: u32) -> Self {
        Self { dim: 2, shape: Shape::Torus { major, minor }, level }
    }

    pub fn graph(offset: f64, amplitude: f64, width: f64, truncation: f64, level: u32) -> Self {
        Self { dim: 2, shape: Shape::Graph { offset, amplitude, width, truncation }, level }
    }

    pub fn circle(radius: f64, level: u32) -> Self {
        Self { dim: 1, shape: Shape::Sphere { radius, center: [0.0; 3] }, level }
    }

    pub fn line(offset: f64, truncation: f64, level: u32) -> Self {
        Self { dim: 1, shape: Shape::PlaneDisk { offset, truncation }, level }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            Shape::PlaneDisk { .. } => "plane_disk",
            Shape::Sphere { .. } => "sphere",
            Shape::Cylinder { .. } => "cylinder",
            Shape::Torus { .. } => "torus",
            Shape::Graph { .. } => "graph",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(invalid(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if self.level < 1 {
            return Err(invalid("level must be at least 1"));
        }
        if self.level > 9 {
            return Err(invalid(format!("level {} is too large (max 9)", self.level)));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite, got {v}")))
            }
        };
        match self.shape {
            Shape::PlaneDisk { offset, truncation } => {
                finite("offset", offset)?;
                positive("truncation", truncation)?;
                if offset.abs() >= truncation {
                    return Err(invalid(format!(
                        "truncation {truncation} must exceed |offset| = {}",
                        offset.abs()
                    )));
                }
            }
            Shape::Sphere { radius, center } => {
                positive("radius", radius)?;
                for c in center {
                    finite("center", c)?;
                }
                if self.dim == 1 && center[2] != 0.0 {
                    return Err(invalid("center z must be 0 for curves"));
                }
            }
            Shape::Cylinder { radius, half_length } => {
                self.require_surface()?;
                positive("radius", radius)?;
                positive("half_length", half_length)?;
            }
            Shape::Torus { major, minor } => {
                self.require_surface()?;
                positive("major", major)?;
                positive("minor", minor)?;
                if minor >= major {
                    return Err(invalid(format!("minor radius {minor} must be below major radius {major}")));
                }
            }
            Shape::Graph { offset, amplitude, width, truncation } => {
                self.require_surface()?;
                finite("offset", offset)?;
                finite("amplitude", amplitude)?;
                positive("width", width)?;
                positive("truncation", truncation)?;
                if offset.abs() >= truncation {
                    return Err(invalid("truncation must exceed |offset|"));
                }
            }
        }
        Ok(())
    }

    fn require_surface(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(invalid(format!("{} is only available for n = 2", self.kind_name())));
        }
        Ok(())
    }

    /// Radius of the in-plane disk for truncated planes and graphs.
    fn disk_radius(offset: f64, truncation: f64) -> f64 {
        (truncation * truncation - offset * offset).sqrt()
    }

    /// Projects a point (created by subdivision) back onto the smooth surface.
    fn project(&self, p: Point, on_boundary: bool) -> Point {
        match self.shape {
            Shape::Sphere { radius, center } => {
                let c = Point::from(center);
                let d = p - c;
                c + d * (radius / d.norm())
            }
            Shape::Cylinder { radius, .. } => {
                let r = p.x.hypot(p.y);
                Point::new(p.x * radius / r, p.y * radius / r, p.z)
            }
            Shape::Torus { major, minor } => {
                let r = p.x.hypot(p.y);
                let ring = Point::new(p.x * major / r, p.y * major / r, 0.0);
                let d = p - ring;
                ring + d * (minor / d.norm())
            }
            Shape::PlaneDisk { offset, truncation } => {
                if !on_boundary {
                    return p;
                }
                let rho = Self::disk_radius(offset, truncation);
                if self.dim == 1 {
                    return p;
                }
                let r = p.x.hypot(p.y);
                Point::new(p.x * rho / r, p.y * rho / r, p.z)
            }
            Shape::Graph { offset, amplitude, width, truncation } => {
                let (mut x, mut y) = (p.x, p.y);
                if on_boundary {
                    let rho = Self::disk_radius(offset, truncation);
                    let r = x.hypot(y);
                    x *= rho / r;
                    y *= rho / r;
                }
                let z = offset + amplitude * (-(x * x + y * y) / (2.0 * width * width)).exp();
                Point::new(x, y, z)
            }
        }
    }
}

/// Builds the mesh described by `spec`.
pub fn generate(spec: &SurfaceSpec) -> Result<SurfaceMesh> {
    spec.validate()?;
    let base = base_mesh(spec)?;
    let mut mesh = base.with_source(SurfaceSpec { level: 0, ..spec.clone() });
    for _ in 0..spec.level {
        mesh = refine(&mesh)?;
    }
    Ok(mesh)
}

/// Subdivides every triangle 1→4 (every segment 1→2) at edge midpoints.
/// Generated meshes have their new vertices projected back onto the smooth
/// surface; imported meshes keep the flat midpoints.
pub fn refine(mesh: &SurfaceMesh) -> Result<SurfaceMesh> {
    let mut vertices = mesh.vertices().to_vec();
    let mut faces = Vec::with_capacity(mesh.face_data().len() * 4);
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
            vertices.push(0.5 * (vertices[a] + vertices[b]));
            vertices.len() - 1
        })
    };
    for face in mesh.faces() {
        if let [a, b] = *face {
            let m = mid(a, b, &mut vertices);
            faces.extend_from_slice(&[a, m, m, b]);
        } else {
            let (a, b, c) = (face[0], face[1], face[2]);
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            faces.extend_from_slice(&[a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
        }
    }
    let flat = SurfaceMesh::new(mesh.dim(), vertices, faces)?;
    match mesh.source() {
        None => Ok(flat),
        Some(spec) => {
            let projected = flat
                .vertices()
                .iter()
                .enumerate()
                .map(|(i, &p)| if i < mesh.n_vertices() { p } else { spec.project(p, flat.is_boundary(i)) })
                .collect();
            let next = SurfaceSpec { level: spec.level + 1, ..spec.clone() };
            Ok(flat.with_vertices(projected)?.with_source(next))
        }
    }
}

fn base_mesh(spec: &SurfaceSpec) -> Result<SurfaceMesh> {
    match (spec.dim, &spec.shape) {
        (2, Shape::Sphere { radius, center }) => icosahedron(*radius, Point::from(*center)),
        (1, Shape::Sphere { radius, center }) => {
            let c = Point::from(*center);
            let n = 6;
            let vertices = (0..n)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / n as f64;
                    c + *radius * Point::new(t.cos(), t.sin(), 0.0)
                })
                .collect();
            let faces = (0..n).flat_map(|i| [i, (i + 1) % n]).collect();
            SurfaceMesh::new(1, vertices, faces)
        }
        (1, Shape::PlaneDisk { offset, truncation }) => {
            let rho = SurfaceSpec::disk_radius(*offset, *truncation);
            // Directed towards -x so that the rotated tangent is +e₂.
            let vertices = vec![Point::new(rho, *offset, 0.0), Point::new(0.0, *offset, 0.0), Point::new(-rho, *offset, 0.0)];
            SurfaceMesh::new(1, vertices, vec![0, 1, 1, 2])
        }
        (2, Shape::PlaneDisk { offset, truncation }) => hexagon(SurfaceSpec::disk_radius(*offset, *truncation), *offset),
        (2, Shape::Graph { offset, truncation, .. }) => {
            let disk = hexagon(SurfaceSpec::disk_radius(*offset, *truncation), 0.0)?;
            let lifted = disk.vertices().iter().map(|&p| spec.project(p, false)).collect();
            disk.with_vertices(lifted)
        }
        (2, Shape::Cylinder { radius, half_length }) => {
            let n_theta = 6;
            let spacing = radius * 2.0 * PI / n_theta as f64 * 3f64.sqrt() / 2.0;
            let rows = ((2.0 * half_length / spacing).round() as usize).max(1);
            staggered_lattice(n_theta, rows, false, |theta, s| {
                let z = -half_length + 2.0 * half_length * s;
                Point::new(radius * theta.cos(), radius * theta.sin(), z)
            })
        }
        (2, Shape::Torus { major, minor }) => {
            let rows = 6;
            let n_phi = (((major / minor) * rows as f64).round() as usize).max(3);
            staggered_lattice(n_phi, rows, true, |phi, s| {
                let psi = 2.0 * PI * s;
                let r = major + minor * psi.cos();
                Point::new(r * phi.cos(), r * phi.sin(), minor * psi.sin())
            })
        }
        _ => Err(invalid(format!("{} is not available for n = {}", spec.kind_name(), spec.dim))),
    }
}

/// Icosahedron with vertices at the poles, outward orientation.
fn icosahedron(radius: f64, center: Point) -> Result<SurfaceMesh> {
    let lat = (0.5f64).atan();
    let mut v = vec![Point::new(0.0, 0.0, 1.0)];
    for k in 0..5 {
        let t = 2.0 * PI * k as f64 / 5.0;
        v.push(Point::new(lat.cos() * t.cos(), lat.cos() * t.sin(), lat.sin()));
    }
    for k in 0..5 {
        let t = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        v.push(Point::new(lat.cos() * t.cos(), lat.cos() * t.sin(), -lat.sin()));
    }
    v.push(Point::new(0.0, 0.0, -1.0));
    let mut f = Vec::new();
    for k in 0..5 {
        let (u0, u1) = (1 + k, 1 + (k + 1) % 5);
        let (l0, l1) = (6 + k, 6 + (k + 1) % 5);
        f.extend_from_slice(&[0, u0, u1]);
        f.extend_from_slice(&[u0, l0, u1]);
        f.extend_from_slice(&[u1, l0, l1]);
        f.extend_from_slice(&[11, l1, l0]);
    }
    let vertices = v.into_iter().map(|p| center + radius * p).collect();
    SurfaceMesh::new(2, vertices, f)
}

/// Hexagonal fan at height `z`, upward normal.
fn hexagon(rho: f64, z: f64) -> Result<SurfaceMesh> {
    let mut v = vec![Point::new(0.0, 0.0, z)];
    for k in 0..6 {
        let t = PI * k as f64 / 3.0;
        v.push(Point::new(rho * t.cos(), rho * t.sin(), z));
    }
    let f = (0..6).flat_map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    SurfaceMesh::new(2, v, f)
}

/// Triangulated lattice on `[0, 2π) × [0, 1]` with odd rows shifted by half
/// a cell. `periodic_rows` wraps the second parameter (torus); otherwise the
/// first and last rows form the boundary. `map(angle, s)` embeds a lattice
/// point; the orientation is that of (∂angle, ∂s).
fn staggered_lattice(
    n_around: usize,
    rows: usize,
    periodic_rows: bool,
    map: impl Fn(f64, f64) -> Point,
) -> Result<SurfaceMesh> {
    let rows = if periodic_rows && rows % 2 == 1 { rows + 1 } else { rows };
    let n_rows = if periodic_rows { rows } else { rows + 1 };
    let step = 2.0 * PI / n_around as f64;
    let mut vertices = Vec::with_capacity(n_around * n_rows);
    for j in 0..n_rows {
        let shift = 0.5 * (j % 2) as f64;
        for i in 0..n_around {
            vertices.push(map((i as f64 + shift) * step, j as f64 / rows as f64));
        }
    }
    let id = |j: usize, i: usize| (j % n_rows) * n_around + i % n_around;
    let mut faces = Vec::with_capacity(6 * n_around * rows);
    for j in 0..rows {
        for i in 0..n_around {
            if j % 2 == 0 {
                faces.extend_from_slice(&[id(j, i), id(j, i + 1), id(j + 1, i)]);
                faces.extend_from_slice(&[id(j + 1, i), id(j, i + 1), id(j + 1, i + 1)]);
            } else {
                faces.extend_from_slice(&[id(j, i), id(j, i + 1), id(j + 1, i + 1)]);
                faces.extend_from_slice(&[id(j + 1, i), id(j, i), id(j + 1, i + 1)]);
            }
        }
    }
    SurfaceMesh::new(2, vertices, faces)
}
