//! Closed-form reference values for planes, spheres and cylinders.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Eigenvalues closer to zero than this count as vanishing when locating
/// degenerate radii.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticCase {
    /// Hyperplane at signed distance `offset` from the origin, normal
    /// pointing away from it.
    Plane { n: usize, offset: f64 },
    /// Origin-centered sphere.
    Sphere { n: usize, radius: f64 },
    /// `S^k_R × ℝ^{n−k}` about the origin.
    Cylinder { n: usize, k: usize, radius: f64 },
}

impl AnalyticCase {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Plane { n, offset } => {
                check_dim(n)?;
                if !offset.is_finite() {
                    return Err(invalid("plane offset must be finite"));
                }
            }
            Self::Sphere { n, radius } => {
                check_dim(n)?;
                check_radius(radius)?;
            }
            Self::Cylinder { n, k, radius } => {
                check_dim(n)?;
                check_radius(radius)?;
                if k == 0 || k > n {
                    return Err(invalid(format!("cylinder factor dimension k={k} must be in 1..={n}")));
                }
            }
        }
        Ok(())
    }

    pub fn critical_constant(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Self::Plane { offset, .. } => -offset / 2.0,
            Self::Sphere { n, radius } => n as f64 / radius - radius / 2.0,
            Self::Cylinder { k, radius, .. } => k as f64 / radius - radius / 2.0,
        })
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("dimension n must be at least 1"));
    }
    Ok(())
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    // ω_n = π^{n/2} / Γ(n/2 + 1), via ω_0 = 1, ω_1 = 2, ω_n = 2π/n · ω_{n−2}.
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Level `k` of the plane spectrum: `((k−1)/2, C(k+n−1, n−1))`.
pub fn plane_spectrum(n: usize, k: usize) -> Result<(f64, usize)> {
    check_dim(n)?;
    Ok(((k as f64 - 1.0) / 2.0, binomial(k + n - 1, n - 1)))
}

/// Dimension of degree-`k` spherical harmonics on Sⁿ.
pub fn spherical_harmonic_dim(n: usize, k: usize) -> usize {
    if k == 0 {
        return 1;
    }
    // (2k+n−1)(k+n−2)! / (k!(n−1)!) = (2k+n−1)/k · C(k+n−2, k−1)
    (2 * k + n - 1) * binomial(k + n - 2, k - 1) / k
}

/// Level `k` of the sphere spectrum: `((k(k+n−1) − n)/R² − ½, multiplicity)`.
pub fn sphere_spectrum(n: usize, radius: f64, k: usize) -> Result<(f64, usize)> {
    check_dim(n)?;
    check_radius(radius)?;
    let kf = k as f64;
    let lambda = (kf * (kf + n as f64 - 1.0) - n as f64) / (radius * radius) - 0.5;
    Ok((lambda, spherical_harmonic_dim(n, k)))
}

/// Number of negative eigenvalues on mean-zero functions: levels `k ≥ 1`
/// with `λ_k < 0`.
pub fn sphere_index(n: usize, radius: f64) -> Result<usize> {
    let mut total = 0;
    for k in 1.. {
        let (lambda, mult) = sphere_spectrum(n, radius, k)?;
        if lambda.abs() <= DEGENERATE_TOL {
            return Err(Error::DegenerateRadius { level: k });
        }
        if lambda > 0.0 {
            break;
        }
        total += mult;
    }
    Ok(total)
}

/// The first `count` sphere eigenvalues (levels `k ≥ 1` when `constrained`),
/// each repeated by its multiplicity.
pub fn sphere_eigenvalues(n: usize, radius: f64, count: usize, constrained: bool) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut k = usize::from(constrained);
    while out.len() < count {
        let (lambda, mult) = sphere_spectrum(n, radius, k)?;
        out.extend(std::iter::repeat(lambda).take(mult.min(count - out.len())));
        k += 1;
    }
    Ok(out)
}

/// The first `count` plane eigenvalues, repeated by multiplicity.
pub fn plane_eigenvalues(n: usize, count: usize, constrained: bool) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut k = usize::from(constrained);
    while out.len() < count {
        let (lambda, mult) = plane_spectrum(n, k)?;
        out.extend(std::iter::repeat(lambda).take(mult.min(count - out.len())));
        k += 1;
    }
    Ok(out)
}

pub fn critical_constant(case: &AnalyticCase) -> Result<f64> {
    case.critical_constant()
}

/// `D = M + sqrt(M² + 2n)`: every critical hypersurface with `|C| ≤ M`
/// comes within distance `D` of the origin.
pub fn min_x_bound(n: usize, m: f64) -> Result<f64> {
    check_dim(n)?;
    if !(m >= 0.0 && m.is_finite()) {
        return Err(invalid(format!("M must be nonnegative, got {m}")));
    }
    Ok(m + (m * m + 2.0 * n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_levels() {
        assert_eq!(plane_spectrum(2, 0).unwrap(), (-0.5, 1));
        assert_eq!(plane_spectrum(2, 1).unwrap(), (0.0, 2));
        assert_eq!(plane_spectrum(2, 2).unwrap(), (0.5, 3));
        assert_eq!(plane_spectrum(3, 2).unwrap().1, 6);
    }

    #[test]
    fn sphere_levels() {
        assert_eq!(sphere_spectrum(2, 1.0, 0).unwrap(), (-2.5, 1));
        assert_eq!(sphere_spectrum(2, 1.0, 1).unwrap(), (-0.5, 3));
        assert_eq!(sphere_spectrum(2, 1.0, 2).unwrap(), (3.5, 5));
        // Circle harmonics come in pairs.
        assert_eq!(spherical_harmonic_dim(1, 3), 2);
        // Harmonics on S³ have dimension (k+1)².
        assert_eq!(spherical_harmonic_dim(3, 4), 25);
    }

    #[test]
    fn index_transitions() {
        assert_eq!(sphere_index(2, 1.0).unwrap(), 3);
        assert_eq!(sphere_index(2, 2.8).unwrap(), 3);
        assert_eq!(sphere_index(2, 3.0).unwrap(), 8);
        assert!(matches!(sphere_index(2, 8f64.sqrt()), Err(Error::DegenerateRadius { level: 2 })));
    }

    #[test]
    fn constants_and_bounds() {
        assert_eq!(AnalyticCase::Plane { n: 2, offset: 0.0 }.critical_constant().unwrap(), 0.0);
        assert_eq!(AnalyticCase::Sphere { n: 2, radius: 2.0 }.critical_constant().unwrap(), 0.0);
        assert_eq!(AnalyticCase::Cylinder { n: 2, k: 1, radius: 1.0 }.critical_constant().unwrap(), 0.5);
        assert_eq!(min_x_bound(2, 0.0).unwrap(), 2.0);
        assert_eq!(min_x_bound(2, 1.5).unwrap(), 4.0);
        assert!((min_x_bound(1, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(min_x_bound(2, -1.0).is_err());
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalue_lists() {
        assert_eq!(sphere_eigenvalues(2, 1.0, 9, true).unwrap(), vec![-0.5, -0.5, -0.5, 3.5, 3.5, 3.5, 3.5, 3.5, 9.5]);
        assert_eq!(plane_eigenvalues(2, 4, false).unwrap(), vec![-0.5, 0.0, 0.0, 0.5]);
    }
}
