//! Machine-readable run reports.

use std::collections::BTreeMap;

use gausslab::estimates::{EstimateReport, SkippedEstimate, StabilityScreen};
use gausslab::jacobi::{IndexReport, PhiVReport, SpectrumResult, SplitReport};
use gausslab::SurfaceMesh;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub dim: usize,
    pub n_vertices: usize,
    pub n_faces: usize,
    pub n_interior: usize,
    pub closed: bool,
    pub mean_edge_length: f64,
    pub max_edge_length: f64,
}

impl MeshSummary {
    pub fn of(mesh: &SurfaceMesh) -> Self {
        Self {
            dim: mesh.dim(),
            n_vertices: mesh.n_vertices(),
            n_faces: mesh.n_faces(),
            n_interior: mesh.interior_vertices().len(),
            closed: mesh.is_closed(),
            mean_edge_length: mesh.mean_edge_length(),
            max_edge_length: mesh.max_edge_length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criticality {
    pub c_hat: f64,
    pub residual: f64,
    /// `residual / |c_hat|`, or the bare residual when `c_hat = 0`.
    pub relative_residual: f64,
    pub flagged_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationRow {
    pub direction: [f64; 3],
    pub residual: f64,
    pub exact_kernel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticComparison {
    pub quantity: String,
    pub predicted: f64,
    pub computed: f64,
    pub abs_error: f64,
    /// `abs_error / max(|predicted|, ½)`; exact comparisons report 0 or 1.
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AnalyticComparison {
    pub fn scalar(quantity: impl Into<String>, predicted: f64, computed: f64, tolerance: f64) -> Self {
        let abs_error = (computed - predicted).abs();
        let rel_error = abs_error / predicted.abs().max(0.5);
        Self { quantity: quantity.into(), predicted, computed, abs_error, rel_error, tolerance, pass: rel_error <= tolerance }
    }

    pub fn exact(quantity: impl Into<String>, predicted: usize, computed: usize) -> Self {
        let pass = predicted == computed;
        Self {
            quantity: quantity.into(),
            predicted: predicted as f64,
            computed: computed as f64,
            abs_error: (predicted as f64 - computed as f64).abs(),
            rel_error: if pass { 0.0 } else { 1.0 },
            tolerance: 0.0,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub config: AnalysisConfig,
    pub mesh: MeshSummary,
    pub criticality: Option<Criticality>,
    pub spectrum: Option<SpectrumResult>,
    pub unconstrained: Option<SpectrumResult>,
    pub index: Option<IndexReport>,
    pub split: Option<SplitReport>,
    pub phi_v: Option<PhiVReport>,
    pub translation: Vec<TranslationRow>,
    pub screen: Option<StabilityScreen>,
    pub estimates: Vec<EstimateReport>,
    pub skipped_estimates: Vec<SkippedEstimate>,
    pub analytic: Vec<AnalyticComparison>,
    /// Hard assertions that failed; the exit code is nonzero iff nonempty.
    pub hard_failures: Vec<String>,
    /// Wall-clock seconds per stage. The only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, config: AnalysisConfig, mesh: &SurfaceMesh) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            mesh: MeshSummary::of(mesh),
            criticality: None,
            spectrum: None,
            unconstrained: None,
            index: None,
            split: None,
            phi_v: None,
            translation: Vec::new(),
            screen: None,
            estimates: Vec::new(),
            skipped_estimates: Vec::new(),
            analytic: Vec::new(),
            hard_failures: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Records failed analytic comparisons and violated estimates.
    pub fn collect_failures(&mut self) {
        for c in &self.analytic {
            if !c.pass {
                self.hard_failures.push(format!(
                    "{}: predicted {}, computed {} (relative error {:.3e} > {:.3e})",
                    c.quantity, c.predicted, c.computed, c.rel_error, c.tolerance
                ));
            }
        }
        for e in &self.estimates {
            if e.hypothesis_ok && !e.holds() {
                self.hard_failures.push(format!("{}: lhs {} exceeds rhs {}", e.name, e.lhs, e.rhs));
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// One refinement level of a convergence study. Cells that do not apply are
/// left empty in the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub n_vertices: usize,
    /// Lowest constrained eigenvalue cluster (sphere) or lowest unconstrained
    /// eigenvalue (plane).
    pub first_eigenvalue: Option<f64>,
    pub first_error: Option<f64>,
    /// Largest relative error over the compared eigenvalues.
    pub max_rel_error: Option<f64>,
    pub index: Option<usize>,
    pub criticality_residual: Option<f64>,
    pub translation_residual: Option<f64>,
    pub seconds: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub hard_failures: Vec<String>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            writer.serialize(row)?;
        }
        Ok(String::from_utf8(writer.into_inner()?)?)
    }
}
