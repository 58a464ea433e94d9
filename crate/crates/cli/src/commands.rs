//! The four subcommands as library functions.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use gausslab::analytic::{
    plane_eigenvalues, plane_spectrum, sphere_eigenvalues, sphere_index, sphere_spectrum, spherical_harmonic_dim,
};
use gausslab::estimates::battery;
use gausslab::jacobi::{assemble, check_translation_eigen, constrained_spectrum, index, phi_v_test, splitting_kernel, SpectrumResult};
use gausslab::{compute_geometry, criticality_residual, generate, AnalyticCase, Point, Shape, SurfaceMesh, SurfaceSpec};

use crate::config::AnalysisConfig;
use crate::report::{AnalyticComparison, ConvergenceRow, ConvergenceTable, Criticality, RunReport, TranslationRow};

/// Levels accepted by the convergence study.
pub const CONVERGENCE_LEVELS: RangeInclusive<u32> = 3..=7;

struct Timer {
    start: Instant,
    laps: BTreeMap<String, f64>,
}

impl Timer {
    fn new() -> Self {
        Self { start: Instant::now(), laps: BTreeMap::new() }
    }

    fn lap(&mut self, stage: &str) {
        self.laps.insert(stage.to_string(), self.start.elapsed().as_secs_f64());
        self.start = Instant::now();
    }
}

/// Closed forms available for a configured surface.
pub fn closed_form(spec: &SurfaceSpec) -> Option<AnalyticCase> {
    match spec.shape {
        Shape::Sphere { radius, center } if center == [0.0; 3] => Some(AnalyticCase::Sphere { n: spec.dim, radius }),
        Shape::PlaneDisk { offset, .. } => Some(AnalyticCase::Plane { n: spec.dim, offset }),
        Shape::Cylinder { radius, .. } => Some(AnalyticCase::Cylinder { n: spec.dim, k: spec.dim - 1, radius }),
        _ => None,
    }
}

pub fn cmd_gen(cfg: &AnalysisConfig) -> Result<SurfaceMesh> {
    Ok(generate(cfg.surface()?)?)
}

fn obtain_mesh(cfg: &AnalysisConfig, mesh: Option<SurfaceMesh>) -> Result<SurfaceMesh> {
    match mesh {
        Some(m) => Ok(m),
        None => generate(cfg.surface()?).context("generating surface"),
    }
}

fn relative(residual: f64, c_hat: f64) -> f64 {
    if c_hat == 0.0 {
        residual
    } else {
        residual / c_hat.abs()
    }
}

/// Multiplicities of the closed-form levels that fit entirely in `count`.
fn predicted_pattern(case: &AnalyticCase, count: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut used = 0;
    for k in 1.. {
        let mult = match *case {
            AnalyticCase::Sphere { n, .. } => spherical_harmonic_dim(n, k),
            AnalyticCase::Plane { n, .. } => match plane_spectrum(n, k) {
                Ok((_, m)) => m,
                Err(_) => break,
            },
            AnalyticCase::Cylinder { .. } => break,
        };
        if used + mult > count {
            break;
        }
        used += mult;
        out.push(mult);
    }
    out
}

fn compare_spectrum(label: &str, predicted: &[f64], computed: &[f64], tol: f64, out: &mut Vec<AnalyticComparison>) {
    for (i, (p, c)) in predicted.iter().zip(computed).enumerate() {
        out.push(AnalyticComparison::scalar(format!("{label}[{i}]"), *p, *c, tol));
    }
}

fn analytic_comparisons(
    case: &AnalyticCase,
    c_hat: f64,
    spectrum: Option<&SpectrumResult>,
    unconstrained: Option<&SpectrumResult>,
    computed_index: Option<usize>,
    tol: f64,
) -> Result<Vec<AnalyticComparison>> {
    let mut out = vec![AnalyticComparison::scalar("critical_constant", case.critical_constant()?, c_hat, tol)];
    let Some(spectrum) = spectrum else {
        return Ok(out);
    };
    let k = spectrum.eigenvalues.len();
    match *case {
        AnalyticCase::Sphere { n, radius } => {
            compare_spectrum("constrained_eigenvalue", &sphere_eigenvalues(n, radius, k, true)?, &spectrum.eigenvalues, tol, &mut out);
            if let (Ok(predicted), Some(computed)) = (sphere_index(n, radius), computed_index) {
                out.push(AnalyticComparison::exact("index", predicted, computed));
            }
            if let Some(u) = unconstrained {
                let predicted = sphere_eigenvalues(n, radius, u.eigenvalues.len(), false)?;
                compare_spectrum("unconstrained_eigenvalue", &predicted, &u.eigenvalues, tol, &mut out);
            }
        }
        AnalyticCase::Plane { n, .. } => {
            compare_spectrum("constrained_eigenvalue", &plane_eigenvalues(n, k, true)?, &spectrum.eigenvalues, tol, &mut out);
            if let Some(computed) = computed_index {
                out.push(AnalyticComparison::exact("index", 0, computed));
            }
            if let Some(u) = unconstrained {
                let predicted = plane_eigenvalues(n, u.eigenvalues.len(), false)?;
                compare_spectrum("unconstrained_eigenvalue", &predicted, &u.eigenvalues, tol, &mut out);
            }
        }
        AnalyticCase::Cylinder { .. } => {}
    }
    let computed_pattern = spectrum.pattern();
    for (i, (p, c)) in predicted_pattern(case, k).iter().zip(&computed_pattern).enumerate() {
        out.push(AnalyticComparison::exact(format!("cluster_multiplicity[{i}]"), *p, *c));
    }
    Ok(out)
}

fn axis(a: usize) -> Point {
    let mut e = Point::zeros();
    e[a] = 1.0;
    e
}

pub fn cmd_analyze(cfg: &AnalysisConfig, mesh: Option<SurfaceMesh>) -> Result<RunReport> {
    let mut timer = Timer::new();
    let mesh = obtain_mesh(cfg, mesh)?;
    timer.lap("mesh");
    let weight = cfg.weight.spec();
    let tol = &cfg.tolerances;
    let mut report = RunReport::new("analyze", cfg.clone(), &mesh);

    let geom = compute_geometry(&mesh);
    timer.lap("geometry");
    let (c_hat, residual) = criticality_residual(&mesh, &geom, &weight).context("criticality")?;
    report.criticality =
        Some(Criticality { c_hat, residual, relative_residual: relative(residual, c_hat), flagged_vertices: geom.flagged.len() });
    timer.lap("criticality");

    let assembly = assemble(&mesh, &geom, &weight).context("assemble")?;
    timer.lap("assemble");
    let available = assembly.n_unknowns().saturating_sub(1);
    let spectrum = constrained_spectrum(&assembly, cfg.eig_count.min(available), true, tol).context("constrained spectrum")?;
    let unconstrained = constrained_spectrum(&assembly, 3.min(assembly.n_unknowns()), false, tol).context("unconstrained spectrum")?;
    timer.lap("spectrum");
    let idx = index(&spectrum, tol).context("index")?;
    report.split = Some(splitting_kernel(&mesh, &geom, &weight, tol));
    report.phi_v = Some(phi_v_test(&mesh, &geom, &assembly, cfg.phi_v_radius, tol).context("phiV test")?);
    report.translation = (0..3)
        .map(|a| {
            let check = check_translation_eigen(&assembly, &geom, &axis(a));
            let mut direction = [0.0; 3];
            direction[a] = 1.0;
            TranslationRow { direction, residual: check.residual, exact_kernel: check.exact_kernel }
        })
        .collect();
    timer.lap("diagnostics");

    if let Some(case) = cfg.surface.as_ref().and_then(closed_form) {
        report.analytic =
            analytic_comparisons(&case, c_hat, Some(&spectrum), Some(&unconstrained), Some(idx.index), cfg.analytic_tolerance)?;
    }
    report.index = Some(idx);
    report.spectrum = Some(spectrum);
    report.unconstrained = Some(unconstrained);
    report.collect_failures();
    report.timings = timer.laps;
    Ok(report)
}

pub fn cmd_estimates(cfg: &AnalysisConfig, mesh: Option<SurfaceMesh>) -> Result<RunReport> {
    let mut timer = Timer::new();
    let mesh = obtain_mesh(cfg, mesh)?;
    timer.lap("mesh");
    let weight = cfg.weight.spec();
    let mut report = RunReport::new("estimates", cfg.clone(), &mesh);
    let geom = compute_geometry(&mesh);
    timer.lap("geometry");
    let outcome = battery(&mesh, &geom, &weight, &cfg.estimates, &cfg.tolerances).context("estimate battery")?;
    timer.lap("estimates");
    let c_hat = outcome.screen.c_hat;
    let residual = outcome.screen.criticality_residual;
    report.criticality =
        Some(Criticality { c_hat, residual, relative_residual: relative(residual, c_hat), flagged_vertices: geom.flagged.len() });
    if let Some(case) = cfg.surface.as_ref().and_then(closed_form) {
        report.analytic = analytic_comparisons(&case, c_hat, None, None, None, cfg.analytic_tolerance)?;
    }
    report.screen = Some(outcome.screen);
    report.estimates = outcome.reports;
    report.skipped_estimates = outcome.skipped;
    report.collect_failures();
    report.timings = timer.laps;
    Ok(report)
}

fn convergence_row(cfg: &AnalysisConfig, spec: &SurfaceSpec) -> Result<ConvergenceRow> {
    let start = Instant::now();
    let mesh = generate(spec)?;
    let weight = cfg.weight.spec();
    let tol = &cfg.tolerances;
    let geom = compute_geometry(&mesh);
    let (c_hat, residual) = criticality_residual(&mesh, &geom, &weight).context("criticality")?;
    let assembly = assemble(&mesh, &geom, &weight)?;
    let available = assembly.n_unknowns().saturating_sub(1);
    let spectrum = constrained_spectrum(&assembly, cfg.eig_count.min(available), true, tol)?;
    let idx = index(&spectrum, tol).ok().map(|r| r.index);
    let translation_residual = (0..3)
        .map(|a| check_translation_eigen(&assembly, &geom, &axis(a)))
        .find(|c| !c.exact_kernel)
        .map(|c| c.residual);
    let case = closed_form(spec);
    let (first_eigenvalue, first_error, max_rel_error) = match case {
        Some(AnalyticCase::Sphere { n, radius }) => {
            let (lambda1, _) = sphere_spectrum(n, radius, 1)?;
            let first = spectrum.multiplicities.first().map(|c| c.value);
            let cmp = analytic_comparisons(&case.unwrap(), c_hat, Some(&spectrum), None, None, cfg.analytic_tolerance)?;
            (first, first.map(|f| (f - lambda1).abs()), max_eigen_error(&cmp))
        }
        Some(AnalyticCase::Plane { .. }) => {
            let lowest = constrained_spectrum(&assembly, 1, false, tol)?.eigenvalues[0];
            let cmp = analytic_comparisons(&case.unwrap(), c_hat, Some(&spectrum), None, None, cfg.analytic_tolerance)?;
            (Some(lowest), Some((lowest + 0.5).abs()), max_eigen_error(&cmp))
        }
        _ => (spectrum.multiplicities.first().map(|c| c.value), None, None),
    };
    Ok(ConvergenceRow {
        level: spec.level,
        n_vertices: mesh.n_vertices(),
        first_eigenvalue,
        first_error,
        max_rel_error,
        index: idx,
        criticality_residual: Some(residual),
        translation_residual,
        seconds: start.elapsed().as_secs_f64(),
        status: "ok".to_string(),
    })
}

fn max_eigen_error(cmp: &[AnalyticComparison]) -> Option<f64> {
    cmp.iter()
        .filter(|c| c.quantity.starts_with("constrained_eigenvalue"))
        .map(|c| c.rel_error)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))))
}

/// Parses `A..B` (inclusive).
pub fn parse_levels(text: &str) -> Result<RangeInclusive<u32>> {
    let (a, b) = text.split_once("..").with_context(|| format!("levels `{text}` must look like A..B"))?;
    let (a, b): (u32, u32) = (a.trim().parse()?, b.trim_start_matches('=').trim().parse()?);
    if a > b {
        bail!("levels {a}..{b} are empty");
    }
    Ok(a..=b)
}

pub fn cmd_convergence(cfg: &AnalysisConfig, levels: RangeInclusive<u32>) -> Result<ConvergenceTable> {
    if !CONVERGENCE_LEVELS.contains(levels.start()) || !CONVERGENCE_LEVELS.contains(levels.end()) {
        bail!("levels {}..{} must lie within 3..7", levels.start(), levels.end());
    }
    let base = cfg.surface()?.clone();
    let mut rows = Vec::new();
    let mut hard_failures = Vec::new();
    for level in levels {
        let spec = SurfaceSpec { level, ..base.clone() };
        let start = Instant::now();
        match convergence_row(cfg, &spec) {
            Ok(row) => rows.push(row),
            Err(e) => {
                hard_failures.push(format!("level {level}: {e:#}"));
                rows.push(ConvergenceRow {
                    level,
                    n_vertices: 0,
                    first_eigenvalue: None,
                    first_error: None,
                    max_rel_error: None,
                    index: None,
                    criticality_residual: None,
                    translation_residual: None,
                    seconds: start.elapsed().as_secs_f64(),
                    status: format!("error: {e:#}"),
                });
            }
        }
    }
    if matches!(closed_form(&base), Some(AnalyticCase::Sphere { .. })) {
        let errors: Vec<(u32, f64)> = rows.iter().filter(|r| r.level >= 4).filter_map(|r| r.first_error.map(|e| (r.level, e))).collect();
        for w in errors.windows(2) {
            if w[1].1 > w[0].1 {
                hard_failures.push(format!("eigenvalue error grew from level {} ({:.3e}) to level {} ({:.3e})", w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
    }
    Ok(ConvergenceTable { rows, hard_failures })
}
