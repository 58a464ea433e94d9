//! Integrals over the intersection of a mesh with an extrinsic Euclidean
//! ball `B_s(p)`.

use crate::mesh::{Point, SurfaceMesh};

/// Subdivision depth for faces cut by the sphere when integrating a
/// non-constant field.
const MAX_DEPTH: u32 = 5;

type Vec2 = nalgebra::Vector2<f64>;

/// Euclidean area (length, for curves) of `Σ ∩ B_s(center)`.
pub fn ball_area(mesh: &SurfaceMesh, center: &Point, s: f64) -> f64 {
    mesh.faces()
        .map(|face| {
            let pts: Vec<Point> = face.iter().map(|&i| *mesh.vertex(i)).collect();
            match pts.len() {
                2 => segment_integral(&pts[0], &pts[1], 1.0, 1.0, center, s),
                _ => triangle_ball_area(&pts[0], &pts[1], &pts[2], center, s),
            }
        })
        .sum()
}

/// `∫_{Σ∩B_s(center)} f dA` for the piecewise-linear interpolant of `f`.
pub fn ball_integral(mesh: &SurfaceMesh, f: &[f64], center: &Point, s: f64) -> f64 {
    mesh.faces()
        .map(|face| {
            let pts: Vec<Point> = face.iter().map(|&i| *mesh.vertex(i)).collect();
            let vals: Vec<f64> = face.iter().map(|&i| f[i]).collect();
            match pts.len() {
                2 => segment_integral(&pts[0], &pts[1], vals[0], vals[1], center, s),
                _ => triangle_integral([pts[0], pts[1], pts[2]], [vals[0], vals[1], vals[2]], center, s, MAX_DEPTH),
            }
        })
        .sum()
}

/// Vertices with `|x − center| ≤ s`.
pub fn vertices_in_ball(mesh: &SurfaceMesh, center: &Point, s: f64) -> Vec<usize> {
    (0..mesh.n_vertices()).filter(|&i| (mesh.vertex(i) - center).norm() <= s).collect()
}

fn segment_integral(a: &Point, b: &Point, fa: f64, fb: f64, p: &Point, s: f64) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return 0.0;
    }
    // |a + t d − p|² ≤ s²
    let w = a - p;
    let half_b = w.dot(&d) / len2;
    let c = (w.norm_squared() - s * s) / len2;
    let disc = half_b * half_b - c;
    if disc <= 0.0 {
        return 0.0;
    }
    let root = disc.sqrt();
    let t0 = (-half_b - root).max(0.0);
    let t1 = (-half_b + root).min(1.0);
    if t1 <= t0 {
        return 0.0;
    }
    let f = |t: f64| fa + (fb - fa) * t;
    len2.sqrt() * (t1 - t0) * 0.5 * (f(t0) + f(t1))
}

fn triangle_ball_area(a: &Point, b: &Point, c: &Point, p: &Point, s: f64) -> f64 {
    let n = (b - a).cross(&(c - a));
    let twice_area = n.norm();
    if twice_area == 0.0 {
        return 0.0;
    }
    let n = n / twice_area;
    let d = (p - a).dot(&n);
    if d.abs() >= s {
        return 0.0;
    }
    let rho = (s * s - d * d).sqrt();
    let q = p - n * d;
    let e1 = (b - a).normalize();
    let e2 = n.cross(&e1);
    let to2 = |x: &Point| Vec2::new((x - q).dot(&e1), (x - q).dot(&e2));
    let (a2, b2, c2) = (to2(a), to2(b), to2(c));
    let signed = disk_wedge(&a2, &b2, rho) + disk_wedge(&b2, &c2, rho) + disk_wedge(&c2, &a2, rho);
    signed.abs().min(0.5 * twice_area)
}

/// Signed area of `triangle(0, a, b) ∩ disk(0, r)`.
fn disk_wedge(a: &Vec2, b: &Vec2, r: f64) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let mut cuts = vec![0.0];
    if len2 > 0.0 {
        let half_b = a.dot(&d) / len2;
        let c = (a.norm_squared() - r * r) / len2;
        let disc = half_b * half_b - c;
        if disc > 0.0 {
            let root = disc.sqrt();
            for t in [-half_b - root, -half_b + root] {
                if t > 0.0 && t < 1.0 {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.push(1.0);
    cuts.windows(2)
        .map(|w| {
            let (u, v) = (a + d * w[0], a + d * w[1]);
            let mid = a + d * (0.5 * (w[0] + w[1]));
            if mid.norm_squared() <= r * r {
                0.5 * (u.x * v.y - u.y * v.x)
            } else {
                0.5 * r * r * (u.x * v.y - u.y * v.x).atan2(u.dot(&v))
            }
        })
        .sum()
}

fn triangle_integral(t: [Point; 3], f: [f64; 3], p: &Point, s: f64, depth: u32) -> f64 {
    let dist = t.map(|x| (x - p).norm());
    let area = 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm();
    let mean = (f[0] + f[1] + f[2]) / 3.0;
    if dist.iter().all(|&r| r <= s) {
        return area * mean;
    }
    let centroid = (t[0] + t[1] + t[2]) / 3.0;
    let reach = t.iter().map(|x| (x - centroid).norm()).fold(0.0, f64::max);
    if (centroid - p).norm() - reach > s {
        return 0.0;
    }
    if depth == 0 {
        return triangle_ball_area(&t[0], &t[1], &t[2], p, s) * mean;
    }
    let m = [(t[0] + t[1]) / 2.0, (t[1] + t[2]) / 2.0, (t[2] + t[0]) / 2.0];
    let g = [(f[0] + f[1]) / 2.0, (f[1] + f[2]) / 2.0, (f[2] + f[0]) / 2.0];
    triangle_integral([t[0], m[0], m[2]], [f[0], g[0], g[2]], p, s, depth - 1)
        + triangle_integral([m[0], t[1], m[1]], [g[0], f[1], g[1]], p, s, depth - 1)
        + triangle_integral([m[2], m[1], t[2]], [g[2], g[1], f[2]], p, s, depth - 1)
        + triangle_integral([m[0], m[1], m[2]], [g[0], g[1], g[2]], p, s, depth - 1)
}
