//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Reference values are computed here from
//! closed forms, independently of the library's `analytic` module.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use gausslab::estimates::{area_lower_bound, mean_value_check, simons_residual};
use gausslab::jacobi::{
    assemble, check_lphif, check_ortho_a, check_translation_eigen, constrained_spectrum, index, phi_v_test, splitting_kernel,
    OperatorAssembly, SpectrumResult, Tolerances,
};
use gausslab::measure::{RadialQuadratic, WeightSpec, WeightedMeasure};
use gausslab::{compute_geometry, criticality_residual, generate, GeometryField, Point, SurfaceMesh, SurfaceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

struct Surface {
    mesh: SurfaceMesh,
    geom: GeometryField,
    assembly: OperatorAssembly,
}

impl Surface {
    fn new(spec: SurfaceSpec) -> Self {
        let mesh = generate(&spec).expect("generate");
        let geom = compute_geometry(&mesh);
        let assembly = assemble(&mesh, &geom, &WeightSpec::Gaussian).expect("assemble");
        Self { mesh, geom, assembly }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `(k(k+1) − 2)/R² − ½` on the round 2-sphere, repeated `2k+1` times.
fn sphere_oracle(radius: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 1usize;
    while out.len() < count {
        let kf = k as f64;
        let value = (kf * (kf + 1.0) - 2.0) / (radius * radius) - 0.5;
        for _ in 0..(2 * k + 1) {
            out.push(value);
        }
        k += 1;
    }
    out.truncate(count);
    out
}

fn sphere_spectrum(spec: SurfaceSpec, k: usize, tol: &Tolerances) -> Result<(Surface, SpectrumResult), String> {
    let s = Surface::new(spec);
    let spectrum = constrained_spectrum(&s.assembly, k, true, tol).map_err(err)?;
    Ok((s, spectrum))
}

fn criterion_1(unit: &(Surface, SpectrumResult), elapsed: f64) -> Check {
    let (_, spectrum) = unit;
    let oracle = sphere_oracle(1.0, 9);
    let mut worst: f64 = 0.0;
    for (c, p) in spectrum.eigenvalues.iter().take(9).zip(&oracle) {
        worst = worst.max((c - p).abs() / p.abs());
    }
    ensure(worst <= 0.02, || format!("worst relative error {worst:.3e}"))?;
    let pattern = spectrum.pattern();
    ensure(pattern.len() >= 2 && pattern[..2] == [3, 5], || format!("cluster pattern {pattern:?}"))?;
    ensure(elapsed < 60.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("worst rel error {worst:.2e}, clusters {pattern:?}, {elapsed:.1} s"))
}

fn criterion_2(unit_index: usize, tol: &Tolerances) -> Check {
    let mut found = vec![(1.0, unit_index)];
    for radius in [2.0, 2.8, 3.0] {
        let (_, spectrum) = sphere_spectrum(SurfaceSpec::sphere(radius, 5), 12, tol)?;
        found.push((radius, index(&spectrum, tol).map_err(err)?.index));
    }
    for &(radius, idx) in &found {
        // Levels k ≥ 1 with k(k+1) − 2 < R²/2 are negative.
        let expected: usize = (1..10usize).filter(|&k| ((k * (k + 1) - 2) as f64) < radius * radius / 2.0).map(|k| 2 * k + 1).sum();
        ensure(idx == expected, || format!("R = {radius}: index {idx}, expected {expected}"))?;
    }
    Ok(format!("indices {found:?}"))
}

fn translation_series(spec: impl Fn(u32) -> SurfaceSpec, v: Point) -> Result<Vec<f64>, String> {
    (3..=5)
        .map(|l| {
            let s = Surface::new(spec(l));
            let check = check_translation_eigen(&s.assembly, &s.geom, &v);
            ensure(!check.exact_kernel, || "translation vanished".into())?;
            Ok(check.residual)
        })
        .collect()
}

fn criterion_3() -> Check {
    let sphere = translation_series(|l| SurfaceSpec::sphere(1.0, l), Point::new(0.3, -0.5, 0.8).normalize())?;
    let cylinder = translation_series(|l| SurfaceSpec::cylinder(1.0, 6.0, l), Point::x())?;
    for (name, series) in [("sphere", &sphere), ("cylinder", &cylinder)] {
        ensure(series[2] <= 5e-2, || format!("{name} L5 residual {:.3e}", series[2]))?;
        ensure(series.windows(2).all(|w| w[1] < w[0]), || format!("{name} residuals not decreasing: {series:?}"))?;
    }
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>().join(" ");
    Ok(format!("sphere [{}], cylinder [{}]", fmt(&sphere), fmt(&cylinder)))
}

fn criterion_4(plane: &Surface, tol: &Tolerances) -> Check {
    let lowest = constrained_spectrum(&plane.assembly, 1, false, tol).map_err(err)?.eigenvalues[0];
    ensure((lowest + 0.5).abs() <= 5e-2, || format!("lowest unconstrained eigenvalue {lowest}"))?;
    let spectrum = constrained_spectrum(&plane.assembly, 9, true, tol).map_err(err)?;
    let min = spectrum.all_values().fold(f64::INFINITY, f64::min);
    ensure(min >= -1e-2, || format!("constrained minimum {min}"))?;
    let idx = index(&spectrum, tol).map_err(err)?.index;
    ensure(idx == 0, || format!("index {idx}"))?;
    Ok(format!("lowest {lowest:.5}, constrained min {min:.2e}, index 0"))
}

fn criterion_5(unit: &Surface, plane: &Surface, cylinder: &Surface, tol: &Tolerances) -> Check {
    let w = WeightSpec::Gaussian;
    let cyl = splitting_kernel(&cylinder.mesh, &cylinder.geom, &w, tol);
    let gap = cyl.gap.unwrap_or(0.0);
    ensure(cyl.kernel_dim == 1 && gap >= 10.0, || format!("cylinder kernel {} gap {gap:e}", cyl.kernel_dim))?;
    let axis = cyl.axis_directions[0];
    ensure(axis[2].abs() > 1.0 - 1e-6, || format!("cylinder axis {axis:?}"))?;
    let pl = splitting_kernel(&plane.mesh, &plane.geom, &w, tol);
    ensure(pl.kernel_dim == 2, || format!("plane kernel {}", pl.kernel_dim))?;
    let sp = splitting_kernel(&unit.mesh, &unit.geom, &w, tol);
    ensure(sp.kernel_dim == 0, || format!("sphere kernel {}", sp.kernel_dim))?;
    Ok(format!("kernel dims 1 (gap {gap:.1e}), 2, 0"))
}

fn criterion_6(unit: &Surface) -> Check {
    let w = WeightSpec::Gaussian;
    let (c_hat, residual) = criticality_residual(&unit.mesh, &unit.geom, &w).map_err(err)?;
    let predicted = 2.0 / 1.0 - 1.0 / 2.0;
    ensure(residual / c_hat.abs() < 0.02, || format!("relative residual {}", residual / c_hat.abs()))?;
    ensure((c_hat - predicted).abs() / predicted < 0.02, || format!("C_hat {c_hat}"))?;
    let offset = generate(&SurfaceSpec::offset_sphere(1.0, [0.5, 0.0, 0.0], 5)).map_err(err)?;
    let og = compute_geometry(&offset);
    let (_, off_residual) = criticality_residual(&offset, &og, &w).map_err(err)?;
    ensure(off_residual > 0.1, || format!("offset residual {off_residual}"))?;
    Ok(format!("C_hat {c_hat:.5}, residual {residual:.2e}, offset residual {off_residual:.3}"))
}

fn bump(mesh: &SurfaceMesh, center: &Point, r: f64) -> Vec<f64> {
    mesh.vertices()
        .iter()
        .map(|x| {
            let t = 1.0 - (x - center).norm_squared() / (r * r);
            if t > 0.0 {
                t * t
            } else {
                0.0
            }
        })
        .collect()
}

fn identities(s: &Surface, rng: &mut ChaCha8Rng) -> Result<(f64, f64), String> {
    let measure = WeightedMeasure::new(&s.mesh, &s.geom, &WeightSpec::Gaussian);
    let (mut lphif, mut ortho): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let p = loop {
            let i = rng.gen_range(0..s.mesh.n_vertices());
            if s.mesh.vertex(i).z.abs() < 3.0 {
                break i;
            }
        };
        let r = rng.gen_range(0.4..0.9);
        let phi = bump(&s.mesh, s.mesh.vertex(p), r);
        ensure((0..s.mesh.n_vertices()).all(|i| !s.mesh.is_boundary(i) || phi[i] == 0.0), || "phi touches the boundary".into())?;
        let np = s.geom.normal[p];
        let v = loop {
            let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if v.norm() > 0.1 && v.normalize().dot(&np).abs() >= 0.5 {
                break v.normalize();
            }
        };
        let f = s.geom.normal_component(&v);
        lphif = lphif.max(check_lphif(&s.mesh, &s.assembly, &measure.density, &phi, &f).relative_error);
        ortho = ortho.max(check_ortho_a(&s.mesh, &s.geom, &measure, &phi, &v).relative_error);
    }
    Ok((lphif, ortho))
}

fn criterion_7(unit: &Surface, cylinder: &Surface) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e33a);
    let mut out = Vec::new();
    for (name, s) in [("sphere", unit), ("cylinder", cylinder)] {
        let (lphif, ortho) = identities(s, &mut rng)?;
        ensure(lphif <= 0.01, || format!("{name} Lphif error {lphif:.3e}"))?;
        ensure(ortho <= 0.02, || format!("{name} orthoA error {ortho:.3e}"))?;
        out.push(format!("{name} {lphif:.1e}/{ortho:.1e}"));
    }
    Ok(out.join(", "))
}

fn criterion_8(unit: &Surface, tol: &Tolerances) -> Check {
    let sphere = phi_v_test(&unit.mesh, &unit.geom, &unit.assembly, 4.0, tol).map_err(err)?;
    ensure(sphere.negative_definite(), || format!("sphere restricted eigenvalues {:?}", sphere.eigenvalues))?;
    // Boundary circle at |x| = 12, so the cutoff φ_6 vanishes there.
    let long = Surface::new(SurfaceSpec::cylinder(1.0, 143f64.sqrt(), 4));
    let cyl = phi_v_test(&long.mesh, &long.geom, &long.assembly, 6.0, tol).map_err(err)?;
    ensure(cyl.negative_definite(), || format!("cylinder restricted eigenvalues {:?}", cyl.eigenvalues))?;
    Ok(format!(
        "sphere max {:.3} (dim {}), cylinder max {:.3} (dim {})",
        sphere.eigenvalues.last().unwrap(),
        sphere.dimension,
        cyl.eigenvalues.last().unwrap(),
        cyl.dimension
    ))
}

fn nearest(mesh: &SurfaceMesh, target: &Point) -> usize {
    (0..mesh.n_vertices()).min_by(|&a, &b| (mesh.vertex(a) - target).norm().total_cmp(&(mesh.vertex(b) - target).norm())).unwrap()
}

fn criterion_9(unit: &Surface, plane: &Surface, cylinder: &Surface, tol: &Tolerances) -> Check {
    let w = WeightSpec::Gaussian;
    for (name, s) in [("sphere", unit), ("cylinder", cylinder), ("plane", plane)] {
        let (c_hat, _) = criticality_residual(&s.mesh, &s.geom, &w).map_err(err)?;
        let rep = simons_residual(&s.mesh, &s.geom, c_hat, tol).map_err(err)?;
        ensure(rep.holds(), || format!("{name} Simons lhs {} > {}", rep.lhs, rep.rhs))?;
    }
    let (s, m) = (0.5, 2.0);
    // Cap of the unit sphere cut by a Euclidean ball of radius s: height
    // s²/2, area 2π·height.
    let cap = 2.0 * PI * (s * s / 2.0);
    let p = nearest(&unit.mesh, &Point::z());
    let ones = vec![1.0; unit.mesh.n_vertices()];
    let mv = mean_value_check(&unit.mesh, &unit.geom, p, &ones, s, s, 0.0, m).map_err(err)?;
    let mv_rhs = (m * s).exp() * cap / (s * s);
    ensure(mv.hypothesis_ok && mv.holds(), || format!("mean value {mv:?}"))?;
    ensure((mv.rhs - mv_rhs).abs() / mv_rhs <= 0.02, || format!("mean value rhs {} vs {mv_rhs}", mv.rhs))?;
    let alb = area_lower_bound(&unit.mesh, &unit.geom, p, s, m).map_err(err)?;
    let alb_lhs = PI * (-m * s).exp() * s * s;
    ensure(alb.hypothesis_ok && alb.holds(), || format!("area bound {alb:?}"))?;
    ensure((alb.lhs - alb_lhs).abs() / alb_lhs <= 0.02, || format!("area bound lhs {}", alb.lhs))?;
    ensure((alb.rhs - cap).abs() / cap <= 0.02, || format!("cap area {} vs {cap}", alb.rhs))?;
    let q = nearest(&plane.mesh, &Point::zeros());
    let ones = vec![1.0; plane.mesh.n_vertices()];
    let flat = mean_value_check(&plane.mesh, &plane.geom, q, &ones, s, s, 0.0, 0.0).map_err(err)?;
    ensure(flat.margin.abs() <= 0.01 * flat.lhs, || format!("plane mean value margin {}", flat.margin))?;
    let flat_area = area_lower_bound(&plane.mesh, &plane.geom, q, s, 0.0).map_err(err)?;
    ensure(flat_area.margin.abs() <= 0.01 * flat_area.lhs, || format!("plane area margin {}", flat_area.margin))?;
    Ok(format!(
        "cap {:.4} vs lower bound {:.4}, mean value rhs {:.3}, plane margins {:.1e}/{:.1e}",
        alb.rhs, alb.lhs, mv.rhs, flat.margin, flat_area.margin
    ))
}

fn criterion_10() -> Check {
    let general = WeightSpec::custom(RadialQuadratic { scale: 0.25, shift: 0.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_entry: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for spec in [SurfaceSpec::sphere(1.0, 4), SurfaceSpec::cylinder(1.0, 6.0, 3), SurfaceSpec::plane_disk(0.5, 8.0, 4)] {
        let mesh = generate(&spec).map_err(err)?;
        let geom = compute_geometry(&mesh);
        let a = assemble(&mesh, &geom, &WeightSpec::Gaussian).map_err(err)?;
        let b = assemble(&mesh, &geom, &general).map_err(err)?;
        let scale = a.stiffness_full.triplets().iter().map(|t| t.2.abs()).fold(0.0, f64::max);
        let diff = a.stiffness_full.add_scaled(-1.0, &b.stiffness_full);
        let mut d = diff.triplets().iter().map(|t| t.2.abs()).fold(0.0, f64::max) / scale;
        for (x, y) in a.mass_full.iter().zip(&b.mass_full).chain(a.potential_full.iter().zip(&b.potential_full)) {
            d = d.max((x - y).abs() / x.abs().max(f64::MIN_POSITIVE));
        }
        worst_entry = worst_entry.max(d);
        let n = a.n_vertices();
        for _ in 0..5 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (quv, qvu) = (a.q(&u, &v), a.q(&v, &u));
            let size = a.q(&u, &u).abs().max(a.q(&v, &v).abs());
            worst_sym = worst_sym.max((quv - qvu).abs() / size);
        }
    }
    ensure(worst_entry <= 1e-12, || format!("general vs Gaussian assembly differ by {worst_entry:e}"))?;
    ensure(worst_sym <= 1e-12, || format!("Q asymmetry {worst_sym:e}"))?;
    Ok(format!("assembly difference {worst_entry:.1e}, Q asymmetry {worst_sym:.1e}"))
}

fn main() -> ExitCode {
    let tol = Tolerances::default();
    let start = Instant::now();
    let unit = sphere_spectrum(SurfaceSpec::sphere(1.0, 5), 12, &tol).expect("unit sphere spectrum");
    let elapsed = start.elapsed().as_secs_f64();
    let unit_index = index(&unit.1, &tol).map(|r| r.index).unwrap_or(usize::MAX);
    let plane = Surface::new(SurfaceSpec::plane_disk(0.0, 8.0, 5));
    let cylinder = Surface::new(SurfaceSpec::cylinder(1.0, 6.0, 5));

    let results: Vec<(&str, Check)> = vec![
        ("sphere spectrum", criterion_1(&unit, elapsed)),
        ("sphere index and transition", criterion_2(unit_index, &tol)),
        ("translation eigenfunction", criterion_3()),
        ("plane stability", criterion_4(&plane, &tol)),
        ("splitting detection", criterion_5(&unit.0, &plane, &cylinder, &tol)),
        ("criticality detector", criterion_6(&unit.0)),
        ("weighted integration identities", criterion_7(&unit.0, &cylinder)),
        ("phiV negative definiteness", criterion_8(&unit.0, &tol)),
        ("estimate battery", criterion_9(&unit.0, &plane, &cylinder, &tol)),
        ("general-weight consistency", criterion_10()),
    ];
    let mut failed = 0;
    for (i, (name, result)) in results.iter().enumerate() {
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
