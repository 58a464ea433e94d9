//! Smallest eigenpairs of `K x = λ M x` with `K` symmetric (possibly
//! indefinite) and `M` diagonal positive, optionally restricted to the
//! `M`-orthogonal complement of one constraint vector `c` (`cᵀ M x = 0`).
//!
//! Large problems use a restarted block Krylov method on the shift-inverted
//! operator `(K + σM)⁻¹ M`, compressed to the constraint subspace, with
//! Rayleigh–Ritz on `K`. Small problems are solved densely.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cholesky::EnvelopeCholesky;
use crate::error::{invalid, Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub count: usize,
    /// Extra pairs computed past `count` to a looser tolerance, e.g. to
    /// close a cluster or bound a spectral window.
    pub guard: usize,
    pub guard_tol: f64,
    pub constraint: Option<Vec<f64>>,
    /// Initial shift σ; `K + σM` must be positive definite. It is doubled
    /// on factorization failure.
    pub shift: f64,
    /// Relative residual tolerance: `‖Kx − λMx‖_{M⁻¹} ≤ tol·max(|λ|, 1)`.
    pub tol: f64,
    pub max_cycles: usize,
    pub seed: u64,
    /// Problems with at most this many unknowns are solved densely.
    pub dense_limit: usize,
}

impl EigenOptions {
    pub fn new(count: usize, shift: f64) -> Self {
        Self { count, guard: 0, guard_tol: 1e-5, constraint: None, shift, tol: 1e-9, max_cycles: 200, seed: 0x5eed, dense_limit: 600 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Ascending; `count + guard` entries.
    pub values: Vec<f64>,
    /// `M`-orthonormal.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub cycles: usize,
}

pub fn smallest_eigenpairs(k: &CsrMatrix, mass: &[f64], opts: &EigenOptions) -> Result<EigenPairs> {
    let n = k.nrows();
    if mass.len() != n || k.ncols() != n {
        return Err(invalid("stiffness and mass dimensions differ"));
    }
    if let Some(i) = mass.iter().position(|&m| !(m > 0.0)) {
        return Err(invalid(format!("mass entry {i} is not positive")));
    }
    let available = n - usize::from(opts.constraint.is_some());
    let wanted = opts.count + opts.guard;
    if opts.count == 0 || wanted > available {
        return Err(invalid(format!(
            "requested {wanted} eigenpairs from a problem of dimension {available}"
        )));
    }
    let constraint = opts.constraint.as_ref().map(|c| Constraint::new(c, mass)).transpose()?;
    if n <= opts.dense_limit {
        return dense(k, mass, constraint.as_ref(), wanted);
    }
    let block = (wanted + (wanted / 2).max(6)).min(available);
    if 3 * block >= available / 2 {
        return dense(k, mass, constraint.as_ref(), wanted);
    }
    krylov(k, mass, constraint.as_ref(), opts, block)
}

struct Constraint {
    c: Vec<f64>,
    /// `M c`.
    mc: Vec<f64>,
    /// `cᵀ M c`.
    cmc: f64,
}

impl Constraint {
    fn new(c: &[f64], mass: &[f64]) -> Result<Self> {
        let mc: Vec<f64> = c.iter().zip(mass).map(|(a, m)| a * m).collect();
        let cmc: f64 = c.iter().zip(&mc).map(|(a, b)| a * b).sum();
        if !(cmc > 0.0) {
            return Err(invalid("constraint vector has zero mass norm"));
        }
        Ok(Self { c: c.to_vec(), mc, cmc })
    }

    /// `M`-orthogonal projection onto `{x : cᵀMx = 0}`.
    fn project(&self, x: &mut [f64]) {
        let a = dot(&self.mc, x) / self.cmc;
        for (xi, ci) in x.iter_mut().zip(&self.c) {
            *xi -= a * ci;
        }
    }

    /// Removes the `Mc` component of a residual so that it lies in the dual
    /// of the constraint subspace.
    fn project_residual(&self, r: &mut [f64], mass: &[f64]) {
        let a = dot(&self.c, r) / self.cmc;
        for ((ri, ci), m) in r.iter_mut().zip(&self.c).zip(mass) {
            *ri -= a * ci * m;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn m_dot(a: &[f64], b: &[f64], mass: &[f64]) -> f64 {
    a.iter().zip(b).zip(mass).map(|((x, y), m)| x * y * m).sum()
}

fn residual_norm(k: &CsrMatrix, mass: &[f64], constraint: Option<&Constraint>, lambda: f64, x: &[f64]) -> f64 {
    let mut r = k.mul_vec(x);
    for ((ri, xi), m) in r.iter_mut().zip(x).zip(mass) {
        *ri -= lambda * m * xi;
    }
    if let Some(c) = constraint {
        c.project_residual(&mut r, mass);
    }
    r.iter().zip(mass).map(|(ri, m)| ri * ri / m).sum::<f64>().sqrt()
}

fn dense(k: &CsrMatrix, mass: &[f64], constraint: Option<&Constraint>, count: usize) -> Result<EigenPairs> {
    let n = k.nrows();
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = k.to_dense();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    // Orthonormal basis of the admissible subspace in the M^{1/2}-scaled
    // coordinates: a Householder reflection maps M^{1/2}c to e₁, and its
    // remaining columns span the complement.
    let basis = match constraint {
        None => DMatrix::identity(n, n),
        Some(c) => {
            let mut q = DVector::from_iterator(n, c.c.iter().zip(mass).map(|(ci, m)| ci * m.sqrt()));
            q /= q.norm();
            let sign = if q[0] >= 0.0 { 1.0 } else { -1.0 };
            let mut w = q.clone();
            w[0] += sign;
            let w = &w / w.norm();
            let h = DMatrix::identity(n, n) - (&w * w.transpose()) * 2.0;
            h.columns(1, n - 1).into_owned()
        }
    };
    let reduced = basis.transpose() * &a * &basis;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for &j in order.iter().take(count) {
        let z = &basis * eig.eigenvectors.column(j);
        let x: Vec<f64> = z.iter().zip(&inv_sqrt).map(|(zi, s)| zi * s).collect();
        let lambda = eig.eigenvalues[j];
        residuals.push(residual_norm(k, mass, constraint, lambda, &x));
        values.push(lambda);
        vectors.push(x);
    }
    Ok(EigenPairs { values, vectors, residuals, cycles: 0 })
}

/// Shift-invert operator compressed to the constraint subspace:
/// `y = T x − t·(cᵀM T x)/(cᵀM t)` with `T = (K+σM)⁻¹M`, `t = T c`.
struct ShiftInvert<'a> {
    chol: EnvelopeCholesky,
    mass: &'a [f64],
    constraint: Option<(&'a Constraint, Vec<f64>, f64)>,
}

impl<'a> ShiftInvert<'a> {
    fn new(k: &CsrMatrix, mass: &'a [f64], constraint: Option<&'a Constraint>, shift: f64) -> Result<Self> {
        let mut sigma = shift;
        let mut attempt = 0;
        let chol = loop {
            let shifted = k.add_scaled(sigma, &CsrMatrix::diagonal(mass));
            match EnvelopeCholesky::factor(&shifted) {
                Ok(c) => break c,
                Err(Error::NotPositiveDefinite { .. }) if attempt < 8 => {
                    attempt += 1;
                    sigma = 2.0 * sigma.abs() + 1.0;
                }
                Err(e) => return Err(e),
            }
        };
        let constraint = constraint.map(|c| {
            let t = chol.solve(&c.mc);
            let ct = dot(&c.mc, &t);
            (c, t, ct)
        });
        Ok(Self { chol, mass, constraint })
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mx: Vec<f64> = x.iter().zip(self.mass).map(|(a, m)| a * m).collect();
        let mut y = self.chol.solve(&mx);
        if let Some((c, t, ct)) = &self.constraint {
            let a = dot(&c.mc, &y) / ct;
            for (yi, ti) in y.iter_mut().zip(t) {
                *yi -= a * ti;
            }
            c.project(&mut y);
        }
        y
    }
}

/// `M`-orthonormalizes `candidates` against `basis` and each other,
/// repeating classical Gram–Schmidt until a pass no longer cancels much,
/// and drops numerically dependent vectors.
fn extend_basis(basis: &mut Vec<Vec<f64>>, candidates: Vec<Vec<f64>>, mass: &[f64]) -> usize {
    let mut added = 0;
    for mut v in candidates {
        let original = m_dot(&v, &v, mass).sqrt();
        if original == 0.0 {
            continue;
        }
        let mut norm = original;
        for _ in 0..4 {
            let coefs: Vec<f64> = basis.iter().map(|b| m_dot(b, &v, mass)).collect();
            for (b, a) in basis.iter().zip(coefs) {
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= a * bi;
                }
            }
            let after = m_dot(&v, &v, mass).sqrt();
            let settled = after > 0.5 * norm;
            norm = after;
            if settled {
                break;
            }
        }
        if norm > 1e-12 * original {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            added += 1;
        }
    }
    added
}

fn krylov(k: &CsrMatrix, mass: &[f64], constraint: Option<&Constraint>, opts: &EigenOptions, block: usize) -> Result<EigenPairs> {
    let n = k.nrows();
    let op = ShiftInvert::new(k, mass, constraint, opts.shift)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Vec<f64>> = (0..block)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if let Some(c) = constraint {
                c.project(&mut v);
            }
            v
        })
        .collect();
    let depth = 3;
    let mut last_residuals = Vec::new();
    // Ritz values of `start`, once known. Expanding with `T(Kx − θMx)`
    // spans the same space as `T x` but avoids cancellation against `x`
    // once the pair has converged.
    let mut theta: Option<Vec<f64>> = None;
    for cycle in 1..=opts.max_cycles {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(depth * block);
        let mut current: Vec<Vec<f64>> = match &theta {
            None => start.iter().map(|v| op.apply(v)).collect(),
            Some(th) => start
                .iter()
                .zip(th)
                .map(|(x, t)| {
                    let mut r = k.mul_vec(x);
                    for ((ri, xi), m) in r.iter_mut().zip(x).zip(mass) {
                        *ri -= t * m * xi;
                    }
                    // T acts on M⁻¹r so that the solve sees r itself.
                    let scaled: Vec<f64> = r.iter().zip(mass).map(|(a, m)| a / m).collect();
                    op.apply(&scaled)
                })
                .collect(),
        };
        extend_basis(&mut basis, start, mass);
        for level in 1..depth {
            let begin = basis.len();
            extend_basis(&mut basis, current, mass);
            if level + 1 == depth {
                break;
            }
            current = basis[begin..].iter().map(|v| op.apply(v)).collect();
        }
        let m = basis.len();
        let kb: Vec<Vec<f64>> = basis.iter().map(|v| k.mul_vec(v)).collect();
        let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &kb[j]) + dot(&basis[j], &kb[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let keep = block.min(m);
        let ritz: Vec<Vec<f64>> = order[..keep]
            .iter()
            .map(|&j| {
                let y = eig.eigenvectors.column(j);
                let mut x = vec![0.0; n];
                for (b, &c) in basis.iter().zip(y.iter()) {
                    for (xi, bi) in x.iter_mut().zip(b) {
                        *xi += c * bi;
                    }
                }
                x
            })
            .collect();
        let values: Vec<f64> = order[..keep].iter().map(|&j| eig.eigenvalues[j]).collect();
        let wanted = opts.count + opts.guard;
        let residuals: Vec<f64> = (0..wanted.min(keep))
            .map(|j| residual_norm(k, mass, constraint, values[j], &ritz[j]))
            .collect();
        let converged = keep >= wanted
            && residuals.iter().zip(&values).enumerate().all(|(j, (r, l))| {
                let tol = if j < opts.count { opts.tol } else { opts.guard_tol };
                *r <= tol * l.abs().max(1.0)
            });
        if converged {
            return Ok(EigenPairs {
                values: values[..wanted].to_vec(),
                vectors: ritz[..wanted].to_vec(),
                residuals,
                cycles: cycle,
            });
        }
        last_residuals = residuals;
        theta = Some(values.clone());
        start = ritz;
        // Refill lost directions so the block keeps its size.
        while start.len() < block {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if let Some(c) = constraint {
                c.project(&mut v);
            }
            start.push(v);
            if let Some(th) = theta.as_mut() {
                th.push(0.0);
            }
        }
    }
    let worst = last_residuals.iter().copied().fold(0.0, f64::max);
    Err(Error::NoConvergence { cycles: opts.max_cycles, worst, tolerance: opts.tol, residuals: last_residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Path-graph Laplacian minus a constant, with non-uniform mass.
    fn problem(n: usize) -> (CsrMatrix, Vec<f64>) {
        let mut t = Vec::new();
        for i in 0..n {
            let deg = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
            t.push((i, i, deg - 0.3));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let mass = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.1).sin()).collect();
        (CsrMatrix::from_triplets(n, n, t), mass)
    }

    #[test]
    fn krylov_matches_dense() {
        let (k, mass) = problem(900);
        let mut opts = EigenOptions::new(6, 1.0);
        opts.constraint = Some(vec![1.0; 900]);
        let big = smallest_eigenpairs(&k, &mass, &EigenOptions { dense_limit: 0, ..opts.clone() }).unwrap();
        let small = smallest_eigenpairs(&k, &mass, &EigenOptions { dense_limit: 2000, ..opts }).unwrap();
        for (a, b) in big.values.iter().zip(&small.values) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        for v in &big.vectors {
            let mean: f64 = v.iter().zip(&mass).map(|(x, m)| x * m).sum();
            assert!(mean.abs() < 1e-8);
            assert!((m_dot(v, v, &mass) - 1.0).abs() < 1e-8);
        }
        assert!(big.vectors.len() == 6 && big.cycles > 0);
    }

    #[test]
    fn constraint_removes_the_constant_mode() {
        let (k, _) = problem(40);
        let mass = vec![1.0; 40];
        let free = smallest_eigenpairs(&k, &mass, &EigenOptions::new(1, 1.0)).unwrap();
        assert!((free.values[0] + 0.3).abs() < 1e-10);
        let mut opts = EigenOptions::new(1, 1.0);
        opts.constraint = Some(vec![1.0; 40]);
        let con = smallest_eigenpairs(&k, &mass, &opts).unwrap();
        assert!(con.values[0] > -0.3 + 1e-4);
    }

    #[test]
    fn rejects_oversized_requests() {
        let (k, mass) = problem(5);
        assert!(smallest_eigenpairs(&k, &mass, &EigenOptions::new(6, 1.0)).is_err());
        assert!(smallest_eigenpairs(&k, &mass, &EigenOptions::new(0, 1.0)).is_err());
    }
}
