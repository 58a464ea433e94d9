//! The weighted stability form `Q(u,v) = ∫⟨∇u,∇v⟩ dA_f − ∫(|A|² − Hess_f(N,N)) u v dA_f`
//! and the Jacobi operator `L` it represents (`Q(u,u) = −∫ u L u dA_f`).
//!
//! Matrices are assembled on all vertices and, for meshes with boundary,
//! restricted to the interior (homogeneous Dirichlet conditions).
//! Eigenvalues follow `L u = −λ u`, so stability means constrained `λ ≥ 0`.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{smallest_eigenpairs, EigenOptions};
use crate::error::{invalid, Error, Result};
use crate::geometry::GeometryField;
use crate::measure::{barycentric_gradients, face_density, face_gradients, vertex_gradients, WeightSpec, WeightedMeasure};
use crate::mesh::{Point, SurfaceMesh};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative zero band: `τ_zero = zero·(1 + |λ_min|)`.
    pub zero: f64,
    /// Absolute gap below which neighboring eigenvalues form one cluster.
    pub cluster: f64,
    /// Relative singular-value threshold for the splitting kernel and for
    /// dropping dependent test functions.
    pub split: f64,
    /// Allowed negative part of the Simons residual.
    pub simons: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { zero: 1e-2, cluster: 5e-2, split: 1e-6, simons: 1e-2 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("zero", self.zero), ("cluster", self.cluster), ("split", self.split), ("simons", self.simons)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OperatorAssembly {
    /// Weighted stiffness on all vertices.
    pub stiffness_full: CsrMatrix,
    /// Lumped weighted mass on all vertices.
    pub mass_full: Vec<f64>,
    /// `(|A|² − Hess_f(N,N))·mass` on all vertices.
    pub potential_full: Vec<f64>,
    /// Global indices of the unknowns (interior vertices).
    pub interior: Vec<usize>,
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    pub potential: Vec<f64>,
}

impl OperatorAssembly {
    pub fn n_vertices(&self) -> usize {
        self.mass_full.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.interior.len()
    }

    /// `K = S − V` on the unknowns, so that `Q(u,v) = uᵀ K v`.
    pub fn form(&self) -> CsrMatrix {
        self.stiffness.add_scaled(-1.0, &CsrMatrix::diagonal(&self.potential))
    }

    /// `S − V` on all vertices.
    pub fn form_full(&self) -> CsrMatrix {
        self.stiffness_full.add_scaled(-1.0, &CsrMatrix::diagonal(&self.potential_full))
    }

    /// `Q(u, v)` for per-vertex fields; boundary values are ignored.
    pub fn q(&self, u: &[f64], v: &[f64]) -> f64 {
        let (u, v) = (self.restrict(u), self.restrict(v));
        let sv = self.stiffness.mul_vec(&v);
        u.iter().zip(&sv).zip(&v).zip(&self.potential).map(|(((a, s), b), p)| a * (s - p * b)).sum()
    }

    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&i| u[i]).collect()
    }

    /// Embeds unknowns into a per-vertex field, zero on the boundary.
    pub fn extend(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices()];
        for (&i, &x) in self.interior.iter().zip(u) {
            out[i] = x;
        }
        out
    }

    /// Shift making `K + σM` positive definite: `S` is semidefinite, so any
    /// `σ` above the largest `V_ii / M_ii` works.
    pub fn safe_shift(&self) -> f64 {
        self.potential.iter().zip(&self.mass).map(|(v, m)| v / m).fold(0.0, f64::max) + 1.0
    }
}

/// Per-element weighted stiffness (cotangent form scaled by the element's
/// mean vertex density), lumped mass, and potential.
pub fn assemble(mesh: &SurfaceMesh, geom: &GeometryField, weight: &WeightSpec) -> Result<OperatorAssembly> {
    let interior = mesh.interior_vertices();
    if interior.is_empty() {
        return Err(invalid("mesh has no interior vertices"));
    }
    let measure = WeightedMeasure::new(mesh, geom, weight);
    let density = face_density(mesh, &measure);
    let local: Vec<Vec<(usize, usize, f64)>> = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            let face = mesh.face(f);
            let grads = barycentric_gradients(mesh, f);
            let scale = mesh.face_measure(f) * density[f];
            let mut t = Vec::with_capacity(face.len() * face.len());
            for (a, &i) in face.iter().enumerate() {
                for (b, &j) in face.iter().enumerate() {
                    t.push((i, j, scale * grads[a].dot(&grads[b])));
                }
            }
            t
        })
        .collect();
    let n = mesh.n_vertices();
    let stiffness_full = CsrMatrix::from_triplets(n, n, local.into_iter().flatten().collect());
    let mass_full = measure.vertex_weight.clone();
    let potential_full: Vec<f64> = (0..n)
        .map(|i| (geom.second_form_sq[i] - weight.hessian_nn(mesh.vertex(i), &geom.normal[i])) * mass_full[i])
        .collect();
    let stiffness = stiffness_full.submatrix(&interior);
    let mass = interior.iter().map(|&i| mass_full[i]).collect();
    let potential = interior.iter().map(|&i| potential_full[i]).collect();
    Ok(OperatorAssembly { stiffness_full, mass_full, potential_full, interior, stiffness, mass, potential })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationCheck {
    pub residual: f64,
    /// `⟨v,N⟩` vanished, so the eigen-equation holds trivially.
    pub exact_kernel: bool,
}

/// Relative residual of `L⟨v,N⟩ = ½⟨v,N⟩` on the interior rows, in the
/// `M⁻¹` norm over the `M` norm.
pub fn check_translation_eigen(assembly: &OperatorAssembly, geom: &GeometryField, v: &Point) -> TranslationCheck {
    let u = geom.normal_component(v);
    let ku = assembly.form_full().mul_vec(&u);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut mass = 0.0;
    for &i in &assembly.interior {
        let m = assembly.mass_full[i];
        let r = ku[i] + 0.5 * m * u[i];
        num += r * r / m;
        den += u[i] * u[i] * m;
        mass += m;
    }
    if den.sqrt() <= 1e-8 * v.norm() * mass.sqrt() {
        return TranslationCheck { residual: 0.0, exact_kernel: true };
    }
    TranslationCheck { residual: (num / den).sqrt(), exact_kernel: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
    /// False when the cluster reaches the end of the computed window, so
    /// its multiplicity is only a lower bound.
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// The requested eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Extra eigenvalues computed beyond the request, used to close the
    /// last cluster and to bound the zero band.
    pub guard: Vec<f64>,
    /// Per-vertex eigenfunctions (zero on the boundary), `M`-orthonormal.
    #[serde(skip)]
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Clusters that start among the requested eigenvalues.
    pub multiplicities: Vec<Cluster>,
    pub residuals: Vec<f64>,
    pub constrained: bool,
}

impl SpectrumResult {
    pub fn all_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().chain(&self.guard).copied()
    }

    /// Multiplicity pattern of the complete clusters.
    pub fn pattern(&self) -> Vec<usize> {
        self.multiplicities.iter().filter(|c| c.complete).map(|c| c.multiplicity).collect()
    }
}

/// Groups an ascending list into clusters of consecutive gaps `≤ tol`.
pub fn cluster(values: &[f64], tol: f64) -> Vec<Cluster> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for &v in values {
        match out.last_mut() {
            Some((sum, count)) if v - prev <= tol => {
                *sum += v;
                *count += 1;
            }
            _ => out.push((v, 1)),
        }
        prev = v;
    }
    let last = out.len();
    out.into_iter()
        .enumerate()
        .map(|(k, (sum, count))| Cluster { value: sum / count as f64, multiplicity: count, complete: k + 1 < last })
        .collect()
}

/// The `k` smallest eigenvalues of `(S − V)u = λ M u`, optionally on the
/// `M`-orthogonal complement of the constants.
pub fn constrained_spectrum(assembly: &OperatorAssembly, k: usize, constrained: bool, tol: &Tolerances) -> Result<SpectrumResult> {
    let available = assembly.n_unknowns() - usize::from(constrained);
    if k == 0 || k > available {
        return Err(invalid(format!("eigenpair count {k} must be in 1..={available}")));
    }
    let mut opts = EigenOptions::new(k, assembly.safe_shift());
    opts.guard = (k / 2).max(4).min(available - k);
    if constrained {
        opts.constraint = Some(vec![1.0; assembly.n_unknowns()]);
    }
    let pairs = smallest_eigenpairs(&assembly.form(), &assembly.mass, &opts)?;
    let clusters = cluster(&pairs.values, tol.cluster);
    let mut start = 0;
    let mut multiplicities = Vec::new();
    for c in clusters {
        if start < k {
            multiplicities.push(c.clone());
        }
        start += c.multiplicity;
    }
    Ok(SpectrumResult {
        eigenvalues: pairs.values[..k].to_vec(),
        guard: pairs.values[k..].to_vec(),
        eigenfunctions: pairs.vectors[..k].iter().map(|x| assembly.extend(x)).collect(),
        multiplicities,
        residuals: pairs.residuals[..k].to_vec(),
        constrained,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub index: usize,
    pub zero_modes: usize,
    /// Smallest `|λ|` outside the zero band.
    pub spectral_gap: f64,
    pub tau_zero: f64,
    pub lambda_min: f64,
}

/// Counts negative constrained eigenvalues below `−τ_zero`. All computed
/// eigenvalues (including the guard window) take part.
pub fn index(spectrum: &SpectrumResult, tol: &Tolerances) -> Result<IndexReport> {
    if !spectrum.constrained {
        return Err(invalid("the index is defined on the constrained spectrum"));
    }
    let values: Vec<f64> = spectrum.all_values().collect();
    let lambda_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let largest = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau_zero = tol.zero * (1.0 + lambda_min.abs());
    if !(largest > tau_zero) {
        return Err(Error::IndexUndetermined { largest, tau_zero });
    }
    let index = values.iter().filter(|&&l| l < -tau_zero).count();
    let zero_modes = values.iter().filter(|&&l| l.abs() <= tau_zero).count();
    let spectral_gap = values.iter().map(|l| l.abs()).filter(|&a| a > tau_zero).fold(f64::INFINITY, f64::min);
    Ok(IndexReport { index, zero_modes, spectral_gap, tau_zero, lambda_min })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    /// `G_ab = ⟨⟨e_a,N⟩, ⟨e_b,N⟩⟩_μ` over the unknowns.
    pub gram: Vec<Vec<f64>>,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub kernel_dim: usize,
    /// Unit kernel directions in ambient coordinates.
    pub axis_directions: Vec<[f64; 3]>,
    /// Ratio of the smallest retained to the largest kernel singular value.
    pub gap: Option<f64>,
}

/// Numerical kernel of `v ↦ ⟨v,N⟩`. The Gram matrix is taken over the
/// interior vertices, where compactly supported variations live.
pub fn splitting_kernel(mesh: &SurfaceMesh, geom: &GeometryField, weight: &WeightSpec, tol: &Tolerances) -> SplitReport {
    let measure = WeightedMeasure::new(mesh, geom, weight);
    let d = mesh.ambient_dim();
    let mut gram: DMatrix<f64> = DMatrix::zeros(d, d);
    for i in mesh.interior_vertices() {
        let n = geom.normal[i];
        let m = measure.vertex_weight[i];
        for a in 0..d {
            for b in 0..d {
                gram[(a, b)] += n[a] * n[b] * m;
            }
        }
    }
    let eig = SymmetricEigen::new(gram.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let threshold = tol.split * singular_values[0];
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();
    let axis_directions = order[rank..]
        .iter()
        .map(|&i| {
            let c = eig.eigenvectors.column(i);
            let mut v = [0.0; 3];
            for a in 0..d {
                v[a] = c[a];
            }
            v
        })
        .collect();
    // Floor the kernel value at machine precision so the ratio stays finite.
    let floor = f64::EPSILON * singular_values[0];
    let gap = (rank > 0 && rank < d).then(|| singular_values[rank - 1] / singular_values[rank].max(floor));
    SplitReport {
        gram: (0..d).map(|a| (0..d).map(|b| gram[(a, b)]).collect()).collect(),
        singular_values,
        kernel_dim: d - rank,
        axis_directions,
        gap,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiVReport {
    pub cutoff_radius: f64,
    /// Dimension of `φ_R·span{1, ⟨e_a,N⟩}` after dropping dependent columns.
    pub dimension: usize,
    /// Eigenvalues of `Q` on that subspace relative to the `M`-Gram, ascending.
    pub eigenvalues: Vec<f64>,
}

impl PhiVReport {
    pub fn negative_definite(&self) -> bool {
        self.dimension > 0 && self.eigenvalues.iter().all(|&l| l < 0.0)
    }
}

/// Restricts `Q` to the cutoff translations `φ_R·{1, ⟨e_a,N⟩}`.
pub fn phi_v_test(mesh: &SurfaceMesh, geom: &GeometryField, assembly: &OperatorAssembly, radius: f64, tol: &Tolerances) -> Result<PhiVReport> {
    let phi = crate::measure::cutoff_phi_r(mesh, radius)?;
    let mut columns = vec![phi.clone()];
    for a in 0..mesh.ambient_dim() {
        let mut e = Point::zeros();
        e[a] = 1.0;
        columns.push(phi.iter().zip(geom.normal_component(&e)).map(|(p, u)| p * u).collect());
    }
    let columns: Vec<Vec<f64>> = columns.iter().map(|c| assembly.restrict(c)).collect();
    let k = assembly.form();
    let m = columns.len();
    let kc: Vec<Vec<f64>> = columns.iter().map(|c| k.mul_vec(c)).collect();
    let mut gram: DMatrix<f64> = DMatrix::zeros(m, m);
    let mut q = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            gram[(a, b)] = columns[a].iter().zip(&columns[b]).zip(&assembly.mass).map(|((x, y), w)| x * y * w).sum();
            q[(a, b)] = columns[a].iter().zip(&kc[b]).map(|(x, y)| x * y).sum();
        }
    }
    let q = (&q + q.transpose()) * 0.5;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..m).filter(|&i| top > 0.0 && eig.eigenvalues[i] > tol.split * top).collect();
    if keep.is_empty() {
        return Ok(PhiVReport { cutoff_radius: radius, dimension: 0, eigenvalues: vec![] });
    }
    let w = DMatrix::from_fn(m, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])] / eig.eigenvalues[keep[c]].sqrt());
    let reduced = w.transpose() * q * &w;
    let mut values: Vec<f64> = SymmetricEigen::new(reduced).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(PhiVReport { cutoff_radius: radius, dimension: keep.len(), eigenvalues: values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
}

/// Discrete form of `∫φf L(φf) = ∫φ²f Lf − ∫|∇φ|² f²` (all against `dA_μ`).
/// The error is relative to the total size of the Dirichlet and potential
/// parts of `Q(φf)`.
pub fn check_lphif(mesh: &SurfaceMesh, assembly: &OperatorAssembly, weight_density: &[f64], phi: &[f64], f: &[f64]) -> IdentityCheck {
    let pf: Vec<f64> = phi.iter().zip(f).map(|(a, b)| a * b).collect();
    let s = &assembly.stiffness_full;
    let dirichlet = s.bilinear(&pf, &pf);
    let potential: f64 = pf.iter().zip(&assembly.potential_full).map(|(u, p)| u * u * p).sum();
    let lhs = -(dirichlet - potential);
    let kf = assembly.form_full().mul_vec(f);
    let first: f64 = -phi.iter().zip(f).zip(&kf).map(|((p, a), k)| p * p * a * k).sum::<f64>();
    let grad_phi = face_gradients(mesh, phi);
    let second: f64 = mesh
        .faces()
        .enumerate()
        .map(|(t, face)| {
            let w = face.iter().map(|&i| weight_density[i]).sum::<f64>() / face.len() as f64;
            let f2 = face.iter().map(|&i| f[i] * f[i]).sum::<f64>() / face.len() as f64;
            mesh.face_measure(t) * w * grad_phi[t].norm_squared() * f2
        })
        .sum();
    let rhs = first - second;
    let scale = dirichlet.abs() + potential.abs();
    IdentityCheck { lhs, rhs, relative_error: (lhs - rhs).abs() / scale }
}

/// Discrete form of `∫φ²|A|²⟨v,N⟩ dA_μ = 2∫φ A(∇φ, vᵀ) dA_μ`, with the
/// vertex-averaged gradient contracted against the fitted shape operator.
pub fn check_ortho_a(mesh: &SurfaceMesh, geom: &GeometryField, measure: &WeightedMeasure, phi: &[f64], v: &Point) -> IdentityCheck {
    let grad = vertex_gradients(mesh, phi);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..mesh.n_vertices() {
        let n = geom.normal[i];
        let m = measure.vertex_weight[i];
        lhs += phi[i] * phi[i] * geom.second_form_sq[i] * v.dot(&n) * m;
        let vt = v - n * v.dot(&n);
        let a: &Matrix3<f64> = &geom.shape[i];
        rhs += 2.0 * phi[i] * grad[i].dot(&(a * vt)) * m;
    }
    IdentityCheck { lhs, rhs, relative_error: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()) }
}
