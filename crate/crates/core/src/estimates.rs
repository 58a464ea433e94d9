//! Curvature estimates for stable critical surfaces, evaluated on meshes.
//!
//! Every check returns an [`EstimateReport`] oriented so that the inequality
//! holds iff `lhs ≤ rhs`. Checks whose hypotheses include stability take a
//! [`StabilityScreen`]; an unstable surface still gets both sides computed
//! but with `hypothesis_ok = false`.

use serde::{Deserialize, Serialize};

use crate::analytic::unit_ball_volume;
use crate::ball::{ball_area, ball_integral, vertices_in_ball};
use crate::cholesky::EnvelopeCholesky;
use crate::error::{invalid, Result};
use crate::geometry::{criticality_residual, GeometryField};
use crate::jacobi::{assemble, constrained_spectrum, Tolerances};
use crate::measure::{barycentric_gradients, cutoff_phi_r, dirichlet_energy, mean_normal, WeightSpec, WeightedMeasure};
use crate::mesh::SurfaceMesh;
use crate::sparse::CsrMatrix;

/// Relative slack when verifying `|H| ≤ M` and subsolution hypotheses on
/// discrete curvature.
pub const HYPOTHESIS_SLACK: f64 = 2e-2;

/// Criticality counts as verified when the residual is below this fraction of
/// `max(|C_hat|, 1)`.
pub const CRITICALITY_TOL: f64 = 2e-2;

/// Share of fit-flagged vertices above which curvature-derived estimates are
/// refused.
pub const MAX_FLAGGED_FRACTION: f64 = 1e-2;

/// Heat-smoothing time applied to `|A|²` before its Laplacian is taken.
/// Fit noise of size `ε` otherwise turns into Laplacian errors of order
/// `ε/h²`.
pub const SIMONS_SMOOTHING: f64 = 2e-2;

/// `B_n = 12(n+1)`.
pub fn b_n(n: usize) -> f64 {
    12.0 * (n + 1) as f64
}

/// `ε_M = ω_n e^{−(M+2+M²/2)} / 4`.
pub fn epsilon_m(n: usize, m: f64) -> f64 {
    unit_ball_volume(n) * (-(m + 2.0 + m * m / 2.0)).exp() / 4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub hypothesis_ok: bool,
    pub locus: Option<usize>,
}

impl EstimateReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, hypothesis_ok: bool, locus: Option<usize>) -> Self {
        Self { name: name.into(), lhs, rhs, margin: rhs - lhs, hypothesis_ok, locus }
    }

    pub fn holds(&self) -> bool {
        self.margin >= 0.0
    }
}

/// Criticality and constrained-stability verdict for a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityScreen {
    pub c_hat: f64,
    pub criticality_residual: f64,
    pub critical: bool,
    pub lambda_min: f64,
    pub tau_zero: f64,
    pub stable: bool,
}

impl StabilityScreen {
    pub fn run(mesh: &SurfaceMesh, geom: &GeometryField, weight: &WeightSpec, tol: &Tolerances) -> Result<Self> {
        let (c_hat, residual) = criticality_residual(mesh, geom, weight)?;
        let assembly = assemble(mesh, geom, weight)?;
        let spectrum = constrained_spectrum(&assembly, 1, true, tol)?;
        let lambda_min = spectrum.all_values().fold(f64::INFINITY, f64::min);
        let tau_zero = tol.zero * (1.0 + lambda_min.abs());
        Ok(Self {
            c_hat,
            criticality_residual: residual,
            critical: residual <= CRITICALITY_TOL * c_hat.abs().max(1.0),
            lambda_min,
            tau_zero,
            stable: lambda_min >= -tau_zero,
        })
    }

    pub fn passed(&self) -> bool {
        self.critical && self.stable
    }
}

fn check_field(name: &str, values: &[f64], mesh: &SurfaceMesh) -> Result<()> {
    if values.len() != mesh.n_vertices() {
        return Err(invalid(format!("{name} has {} entries, mesh has {} vertices", values.len(), mesh.n_vertices())));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(invalid(format!("{name}[{i}] is not finite")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_flagged(mesh: &SurfaceMesh, geom: &GeometryField) -> Result<()> {
    let fraction = geom.flagged.len() as f64 / mesh.n_vertices().max(1) as f64;
    if fraction > MAX_FLAGGED_FRACTION {
        return Err(invalid(format!(
            "{} of {} vertices have unreliable curvature fits",
            geom.flagged.len(),
            mesh.n_vertices()
        )));
    }
    Ok(())
}

/// Smallest radius of a boundary vertex, or infinity for closed meshes.
pub fn truncation_radius(mesh: &SurfaceMesh) -> f64 {
    (0..mesh.n_vertices())
        .filter(|&i| mesh.is_boundary(i))
        .map(|i| mesh.vertex(i).norm())
        .fold(f64::INFINITY, f64::min)
}

fn check_truncation(mesh: &SurfaceMesh, radius: f64) -> Result<()> {
    let t = truncation_radius(mesh);
    if t < radius * (1.0 - 1e-9) {
        return Err(invalid(format!("radius {radius} reaches the mesh boundary at |x| = {t}")));
    }
    Ok(())
}

/// `(A_μ(Σ∩B_R), A_μ(Σ∩(B_{2R}∖B_R)))` from lumped vertex masses.
fn ball_and_annulus(mesh: &SurfaceMesh, measure: &WeightedMeasure, radius: f64) -> (f64, f64) {
    let (inner, outer) = (radius * (1.0 + 1e-9), 2.0 * radius * (1.0 + 1e-9));
    let mut ball = 0.0;
    let mut annulus = 0.0;
    for (x, m) in mesh.vertices().iter().zip(&measure.vertex_weight) {
        let r = x.norm();
        if r <= inner {
            ball += m;
        } else if r <= outer {
            annulus += m;
        }
    }
    (ball, annulus)
}

/// Both sides of `∫φ²|N−N_φ|² + |N_φ|²∫φ²|A|² ≤ B_n∫|∇φ|²` (all against
/// `dA_μ`).
pub fn modified_stability_sides(
    mesh: &SurfaceMesh,
    geom: &GeometryField,
    weight: &WeightSpec,
    phi: &[f64],
    screen: &StabilityScreen,
) -> Result<EstimateReport> {
    check_field("phi", phi, mesh)?;
    if let Some(i) = phi.iter().position(|&p| p < 0.0) {
        return Err(invalid(format!("phi must be nonnegative, phi[{i}] = {}", phi[i])));
    }
    if phi.iter().all(|&p| p == 0.0) {
        return Err(invalid("phi vanishes identically"));
    }
    if let Some(i) = (0..mesh.n_vertices()).find(|&i| mesh.is_boundary(i) && phi[i] > 1e-12) {
        return Err(invalid(format!("phi must vanish on the boundary, phi[{i}] = {}", phi[i])));
    }
    let measure = WeightedMeasure::new(mesh, geom, weight);
    let n_phi = mean_normal(geom, &measure, phi)?;
    let mut spread = 0.0;
    let mut curvature = 0.0;
    for i in 0..mesh.n_vertices() {
        let w = phi[i] * phi[i] * measure.vertex_weight[i];
        spread += w * (geom.normal[i] - n_phi).norm_squared();
        curvature += w * geom.second_form_sq[i];
    }
    let lhs = spread + n_phi.norm_squared() * curvature;
    let rhs = b_n(mesh.dim()) * dirichlet_energy(mesh, &measure, phi);
    Ok(EstimateReport::new("modified_stability", lhs, rhs, screen.passed(), None))
}

/// `∫_{B_R∩Σ}|A|² dA_μ ≤ 2B_nR⁻²A_μ(Σ∩(B_{2R}∖B_R))`, applicable when the ball
/// mass dominates the right-hand side and the surface is stable.
pub fn integral_estimate_check(
    mesh: &SurfaceMesh,
    geom: &GeometryField,
    weight: &WeightSpec,
    radius: f64,
    screen: &StabilityScreen,
) -> Result<EstimateReport> {
    check_positive("R", radius)?;
    check_truncation(mesh, radius)?;
    let measure = WeightedMeasure::new(mesh, geom, weight);
    let (ball, annulus) = ball_and_annulus(mesh, &measure, radius);
    let rhs = 2.0 * b_n(mesh.dim()) / (radius * radius) * annulus;
    let inner = radius * (1.0 + 1e-9);
    let lhs: f64 = (0..mesh.n_vertices())
        .filter(|&i| mesh.vertex(i).norm() <= inner)
        .map(|i| geom.second_form_sq[i] * measure.vertex_weight[i])
        .sum();
    Ok(EstimateReport::new("integral_estimate", lhs, rhs, ball >= rhs && screen.passed(), None))
}

/// Unweighted cotangent stiffness and lumped area.
fn euclidean_operators(mesh: &SurfaceMesh, geom: &GeometryField) -> (CsrMatrix, Vec<f64>) {
    let mut triplets = Vec::new();
    for f in 0..mesh.n_faces() {
        let face = mesh.face(f);
        let grads = barycentric_gradients(mesh, f);
        let area = mesh.face_measure(f);
        for (a, &i) in face.iter().enumerate() {
            for (b, &j) in face.iter().enumerate() {
                triplets.push((i, j, area * grads[a].dot(&grads[b])));
            }
        }
    }
    let n = mesh.n_vertices();
    (CsrMatrix::from_triplets(n, n, triplets), geom.vertex_area.clone())
}

/// Cotangent Laplacian `Δu = −M⁻¹Ku` with lumped area, no weight.
pub fn euclidean_laplacian(mesh: &SurfaceMesh, geom: &GeometryField, u: &[f64]) -> Vec<f64> {
    let (k, mass) = euclidean_operators(mesh, geom);
    k.mul_vec(u).iter().zip(&mass).map(|(k, a)| -k / a).collect()
}

/// Laplacian of `u` after implicit heat smoothing for time `t`: solves
/// `(M + tK)ũ = Mu`, so `Δũ = (ũ − u)/t` exactly.
pub fn smoothed_laplacian(mesh: &SurfaceMesh, geom: &GeometryField, u: &[f64], t: f64) -> Result<Vec<f64>> {
    check_positive("smoothing time", t)?;
    let (k, mass) = euclidean_operators(mesh, geom);
    let system = CsrMatrix::diagonal(&mass).add_scaled(t, &k);
    let rhs: Vec<f64> = u.iter().zip(&mass).map(|(a, m)| a * m).collect();
    let smooth = EnvelopeCholesky::factor(&system)?.solve(&rhs);
    Ok(smooth.iter().zip(u).map(|(s, a)| (s - a) / t).collect())
}

/// Vertices whose whole one-ring is interior.
fn deep_interior(mesh: &SurfaceMesh) -> Vec<usize> {
    let neighbors = mesh.neighbors();
    (0..mesh.n_vertices())
        .filter(|&i| !mesh.is_boundary(i) && neighbors[i].iter().all(|&j| !mesh.is_boundary(j)))
        .collect()
}

/// `ρ = Δ|A|² + (|x|²/8)|A|² + (2+C²)|A|⁴`; reports `−min ρ` against
/// `τ_simons`.
pub fn simons_residual(mesh: &SurfaceMesh, geom: &GeometryField, c_hat: f64, tol: &Tolerances) -> Result<EstimateReport> {
    if mesh.dim() != 2 {
        return Err(invalid(format!("the Simons check needs a surface (n = 2), got n = {}", mesh.dim())));
    }
    check_flagged(mesh, geom)?;
    let a2 = &geom.second_form_sq;
    let lap = smoothed_laplacian(mesh, geom, a2, SIMONS_SMOOTHING)?;
    let k = 2.0 + c_hat * c_hat;
    let (locus, rho) = deep_interior(mesh)
        .into_iter()
        .map(|i| {
            let r2 = mesh.vertex(i).norm_squared();
            (i, lap[i] + r2 / 8.0 * a2[i] + k * a2[i] * a2[i])
        })
        .fold(None, |best: Option<(usize, f64)>, (i, r)| match best {
            Some((_, b)) if b <= r => best,
            _ => Some((i, r)),
        })
        .ok_or_else(|| invalid("the Simons check needs vertices away from the boundary"))?;
    Ok(EstimateReport::new("simons", -rho, tol.simons, true, Some(locus)))
}

fn check_ball(mesh: &SurfaceMesh, p: usize, s: f64) -> Result<()> {
    if p >= mesh.n_vertices() {
        return Err(invalid(format!("vertex {p} out of range")));
    }
    check_positive("s", s)?;
    let center = mesh.vertex(p);
    if let Some(b) = vertices_in_ball(mesh, center, s).into_iter().find(|&i| mesh.is_boundary(i)) {
        return Err(invalid(format!("ball of radius {s} about vertex {p} contains boundary vertex {b}")));
    }
    Ok(())
}

fn curvature_bounded(mesh: &SurfaceMesh, geom: &GeometryField, p: usize, t: f64, m: f64) -> bool {
    let limit = m + HYPOTHESIS_SLACK * m.max(1.0);
    vertices_in_ball(mesh, mesh.vertex(p), t).iter().all(|&i| geom.mean_curvature[i].abs() <= limit)
}

/// Smallest `λ ≥ 0` with `Δf ≥ −λt⁻²f` at the interior vertices of `B_t(p)`.
pub fn subsolution_lambda(mesh: &SurfaceMesh, geom: &GeometryField, p: usize, f: &[f64], t: f64) -> Result<f64> {
    check_field("f", f, mesh)?;
    check_positive("t", t)?;
    let lap = euclidean_laplacian(mesh, geom, f);
    let mut lambda: f64 = 0.0;
    for i in vertices_in_ball(mesh, mesh.vertex(p), t) {
        if mesh.is_boundary(i) {
            continue;
        }
        if f[i] > 0.0 {
            lambda = lambda.max(-t * t * lap[i] / f[i]);
        } else if lap[i] < 0.0 {
            return Err(invalid(format!("no finite lambda: f[{i}] = 0 with negative Laplacian")));
        }
    }
    Ok(lambda)
}

/// Mean value inequality `ω_n f(p) ≤ e^{(λ/2t + M)s} s⁻ⁿ ∫_{B_s(p)∩Σ} f dA`.
#[allow(clippy::too_many_arguments)]
pub fn mean_value_check(
    mesh: &SurfaceMesh,
    geom: &GeometryField,
    p: usize,
    f: &[f64],
    s: f64,
    t: f64,
    lambda: f64,
    m: f64,
) -> Result<EstimateReport> {
    check_field("f", f, mesh)?;
    check_ball(mesh, p, s)?;
    check_positive("t", t)?;
    if s > t {
        return Err(invalid(format!("s = {s} must not exceed t = {t}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) || !(m >= 0.0 && m.is_finite()) {
        return Err(invalid("lambda and M must be nonnegative"));
    }
    if let Some(i) = f.iter().position(|&v| v < 0.0) {
        return Err(invalid(format!("f must be nonnegative, f[{i}] = {}", f[i])));
    }
    let n = mesh.dim();
    let center = mesh.vertex(p);
    let lhs = unit_ball_volume(n) * f[p];
    let rhs = ((lambda / (2.0 * t) + m) * s).exp() * s.powi(-(n as i32)) * ball_integral(mesh, f, center, s);
    let required = subsolution_lambda(mesh, geom, p, f, t)?;
    let slack = HYPOTHESIS_SLACK * required.max(t * t);
    let hypothesis_ok = curvature_bounded(mesh, geom, p, t, m) && required <= lambda + slack;
    Ok(EstimateReport::new("mean_value", lhs, rhs, hypothesis_ok, Some(p)))
}

/// `ω_n e^{−Ms} sⁿ ≤ A(B_s(p)∩Σ)`.
pub fn area_lower_bound(mesh: &SurfaceMesh, geom: &GeometryField, p: usize, s: f64, m: f64) -> Result<EstimateReport> {
    check_ball(mesh, p, s)?;
    if !(m >= 0.0 && m.is_finite()) {
        return Err(invalid(format!("M must be nonnegative, got {m}")));
    }
    let n = mesh.dim();
    let lhs = unit_ball_volume(n) * (-m * s).exp() * s.powi(n as i32);
    let rhs = ball_area(mesh, mesh.vertex(p), s);
    Ok(EstimateReport::new("area_lower_bound", lhs, rhs, curvature_bounded(mesh, geom, p, s, m), Some(p)))
}

/// `sup_{B_{R/4}}|A|² ≤ 16R²e^{−γR²}` under the small-annulus hypothesis.
#[allow(clippy::too_many_arguments)]
pub fn pointwise_bound_report(
    mesh: &SurfaceMesh,
    geom: &GeometryField,
    weight: &WeightSpec,
    radius: f64,
    gamma: f64,
    m: f64,
    screen: &StabilityScreen,
) -> Result<EstimateReport> {
    if mesh.dim() != 2 {
        return Err(invalid(format!("the pointwise bound needs a surface (n = 2), got n = {}", mesh.dim())));
    }
    if !(radius > 1.0 && radius.is_finite()) {
        return Err(invalid(format!("R must exceed 1, got {radius}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) || !(m >= 0.0 && m.is_finite()) {
        return Err(invalid("gamma and M must be nonnegative"));
    }
    check_truncation(mesh, radius)?;
    let n = mesh.dim();
    let bn = b_n(n);
    let measure = WeightedMeasure::new(mesh, geom, weight);
    let (ball, annulus) = ball_and_annulus(mesh, &measure, radius);
    let r2 = radius * radius;
    let dominated = ball >= 2.0 * bn / r2 * annulus;
    let small = annulus < r2 / (2.0 * bn) * (-(1.0 / 16.0 + gamma) * r2).exp() * epsilon_m(n, m);
    let bounded_c = screen.c_hat.abs() <= m + HYPOTHESIS_SLACK * m.max(1.0);
    let quarter = radius / 4.0 * (1.0 + 1e-9);
    let (locus, lhs) = (0..mesh.n_vertices())
        .filter(|&i| mesh.vertex(i).norm() <= quarter)
        .map(|i| (i, geom.second_form_sq[i]))
        .fold((None, 0.0), |(bi, bv), (i, v)| if v > bv || bi.is_none() { (Some(i), v) } else { (bi, bv) });
    let rhs = 16.0 * r2 * (-gamma * r2).exp();
    let ok = dominated && small && bounded_c && screen.passed();
    Ok(EstimateReport::new("pointwise_bound", lhs, rhs, ok, locus))
}

/// Choi–Schoen conclusion `sup_{B_{r0}(x0)} (r0 − |y−x0|)²|A|²(y) ≤ δ`, which
/// is the statement for every `σ ∈ (0, r0]` at once. The hypothesis is
/// `∫_{B_{r0}(x0)}|A|² dA < δ ε_M` with `|C_hat| ≤ M`.
pub fn choi_schoen_report(
    mesh: &SurfaceMesh,
    geom: &GeometryField,
    x0: usize,
    r0: f64,
    delta: f64,
    m: f64,
    c_hat: f64,
) -> Result<EstimateReport> {
    if mesh.dim() != 2 {
        return Err(invalid(format!("the Choi-Schoen check needs a surface (n = 2), got n = {}", mesh.dim())));
    }
    check_ball(mesh, x0, r0)?;
    check_positive("delta", delta)?;
    if !(m >= 0.0 && m.is_finite()) {
        return Err(invalid(format!("M must be nonnegative, got {m}")));
    }
    let center = mesh.vertex(x0);
    let energy = ball_integral(mesh, &geom.second_form_sq, center, r0);
    let bounded_c = c_hat.abs() <= m + HYPOTHESIS_SLACK * m.max(1.0);
    let hypothesis_ok = bounded_c && energy < delta * epsilon_m(mesh.dim(), m);
    let (locus, lhs) = vertices_in_ball(mesh, center, r0)
        .into_iter()
        .map(|i| {
            let gap = r0 - (mesh.vertex(i) - center).norm();
            (i, gap * gap * geom.second_form_sq[i])
        })
        .fold((x0, 0.0), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(EstimateReport::new("choi_schoen", lhs, delta, hypothesis_ok, Some(locus)))
}

/// Parameters for [`battery`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    /// Ball radius `R` of the integral and pointwise estimates.
    pub radius: f64,
    pub gamma: f64,
    /// Curvature bound `M`.
    pub m: f64,
    /// Inner and outer radii of the mean value inequality.
    pub s: f64,
    pub t: f64,
    /// `None` picks the smallest admissible value.
    pub lambda: Option<f64>,
    pub delta: f64,
    pub r0: f64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self { radius: 4.0, gamma: 0.05, m: 2.0, s: 0.5, t: 0.5, lambda: None, delta: 1.0, r0: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEstimate {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryOutcome {
    pub screen: StabilityScreen,
    pub reports: Vec<EstimateReport>,
    pub skipped: Vec<SkippedEstimate>,
}

impl BatteryOutcome {
    /// Reports whose hypotheses held but whose inequality failed.
    pub fn violations(&self) -> impl Iterator<Item = &EstimateReport> {
        self.reports.iter().filter(|r| r.hypothesis_ok && !r.holds())
    }
}

/// Interior vertex nearest the origin; ties go to the lower index.
pub fn central_vertex(mesh: &SurfaceMesh) -> Option<usize> {
    mesh.interior_vertices()
        .into_iter()
        .min_by(|&a, &b| mesh.vertex(a).norm().total_cmp(&mesh.vertex(b).norm()))
}

/// Runs every estimate that applies to `mesh`. Estimates whose inputs are
/// rejected are listed in `skipped` with the reason.
pub fn battery(
    mesh: &SurfaceMesh,
    geom: &GeometryField,
    weight: &WeightSpec,
    params: &EstimateParams,
    tol: &Tolerances,
) -> Result<BatteryOutcome> {
    let screen = StabilityScreen::run(mesh, geom, weight, tol)?;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let mut record = |name: &str, r: Result<EstimateReport>| match r {
        Ok(rep) => reports.push(rep),
        Err(e) => skipped.push(SkippedEstimate { name: name.to_string(), reason: e.to_string() }),
    };
    let p = central_vertex(mesh).ok_or_else(|| invalid("mesh has no interior vertices"))?;
    let ones = vec![1.0; mesh.n_vertices()];

    let phi = cutoff_phi_r(mesh, params.radius)?;
    record("modified_stability", modified_stability_sides(mesh, geom, weight, &phi, &screen));
    record("integral_estimate", integral_estimate_check(mesh, geom, weight, params.radius, &screen));
    record("simons", simons_residual(mesh, geom, screen.c_hat, tol));
    let lambda = match params.lambda {
        Some(l) => Ok(l),
        None => subsolution_lambda(mesh, geom, p, &ones, params.t),
    };
    record("mean_value", lambda.and_then(|l| mean_value_check(mesh, geom, p, &ones, params.s, params.t, l, params.m)));
    record("area_lower_bound", area_lower_bound(mesh, geom, p, params.s, params.m));
    record(
        "pointwise_bound",
        pointwise_bound_report(mesh, geom, weight, params.radius, params.gamma, params.m, &screen),
    );
    record("choi_schoen", choi_schoen_report(mesh, geom, p, params.r0, params.delta, params.m, screen.c_hat));
    Ok(BatteryOutcome { screen, reports, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, SurfaceSpec};
    use crate::geometry::compute_geometry;
    use std::f64::consts::PI;

    fn fake_screen(passed: bool) -> StabilityScreen {
        StabilityScreen {
            c_hat: 0.0,
            criticality_residual: 0.0,
            critical: true,
            lambda_min: if passed { 0.0 } else { -1.0 },
            tau_zero: 1e-2,
            stable: passed,
        }
    }

    #[test]
    fn constants() {
        assert_eq!(b_n(2), 36.0);
        assert!((epsilon_m(2, 0.0) - PI * (-2f64).exp() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn margin_is_difference() {
        let r = EstimateReport::new("x", 0.1, 0.3, true, None);
        assert_eq!(r.margin, 0.3 - 0.1);
        assert!(r.holds());
    }

    #[test]
    fn plane_flat_estimates() {
        let mesh = generate(&SurfaceSpec::plane_disk(0.0, 4.0, 3)).unwrap();
        let geom = compute_geometry(&mesh);
        let w = WeightSpec::Gaussian;
        let phi = cutoff_phi_r(&mesh, 2.0).unwrap();
        let rep = modified_stability_sides(&mesh, &geom, &w, &phi, &fake_screen(true)).unwrap();
        assert!(rep.lhs < 1e-12 && rep.rhs > 0.0);
        let rep = integral_estimate_check(&mesh, &geom, &w, 2.0, &fake_screen(true)).unwrap();
        assert!(rep.lhs < 1e-12 && rep.holds());
        assert!(integral_estimate_check(&mesh, &geom, &w, 5.0, &fake_screen(true)).is_err());
        let rep = simons_residual(&mesh, &geom, 0.0, &Tolerances::default()).unwrap();
        assert!(rep.lhs.abs() < 1e-9 && rep.holds());
    }

    #[test]
    fn rejects_negative_phi() {
        let mesh = generate(&SurfaceSpec::sphere(1.0, 2)).unwrap();
        let geom = compute_geometry(&mesh);
        let mut phi = vec![1.0; mesh.n_vertices()];
        phi[3] = -0.5;
        assert!(modified_stability_sides(&mesh, &geom, &WeightSpec::Gaussian, &phi, &fake_screen(false)).is_err());
    }

    #[test]
    fn plane_mean_value_equality() {
        let mesh = generate(&SurfaceSpec::plane_disk(0.0, 4.0, 3)).unwrap();
        let geom = compute_geometry(&mesh);
        let p = central_vertex(&mesh).unwrap();
        let ones = vec![1.0; mesh.n_vertices()];
        let rep = mean_value_check(&mesh, &geom, p, &ones, 0.7, 0.7, 0.0, 0.0).unwrap();
        assert!(rep.hypothesis_ok);
        assert!(rep.margin.abs() < 1e-10 * PI, "{rep:?}");
        let rep = area_lower_bound(&mesh, &geom, p, 0.7, 0.0).unwrap();
        assert!(rep.margin.abs() < 1e-10);
        assert!(mean_value_check(&mesh, &geom, p, &ones, 0.8, 0.7, 0.0, 0.0).is_err());
        assert!(area_lower_bound(&mesh, &geom, p, 4.5, 0.0).is_err());
    }

    #[test]
    fn pointwise_rejects_small_radius() {
        let mesh = generate(&SurfaceSpec::plane_disk(0.0, 4.0, 2)).unwrap();
        let geom = compute_geometry(&mesh);
        assert!(pointwise_bound_report(&mesh, &geom, &WeightSpec::Gaussian, 1.0, 0.05, 0.0, &fake_screen(true)).is_err());
    }
}
