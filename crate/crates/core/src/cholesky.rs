//! Envelope (skyline) Cholesky factorization with reverse Cuthill–McKee
//! ordering, for the shift-invert solves of the eigensolver.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Reverse Cuthill–McKee permutation of a structurally symmetric matrix.
/// `perm[k]` is the original index placed at position `k`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]).unwrap();
        let start = peripheral(a, seed, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a.row(v).0.iter().copied().filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Pseudo-peripheral vertex: repeatedly jump to the farthest BFS level.
fn peripheral(a: &CsrMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut start = seed;
    let mut depth = 0;
    for _ in 0..4 {
        let (far, d) = farthest(a, start, degree);
        if d <= depth {
            break;
        }
        depth = d;
        start = far;
    }
    start
}

fn farthest(a: &CsrMatrix, start: usize, degree: &[usize]) -> (usize, usize) {
    let mut level = vec![usize::MAX; a.nrows()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0);
    while let Some(v) = queue.pop_front() {
        let l = level[v];
        if l > best.1 || (l == best.1 && degree[v] < degree[best.0]) {
            best = (v, l);
        }
        for &j in a.row(v).0 {
            if level[j] == usize::MAX {
                level[j] = l + 1;
                queue.push_back(j);
            }
        }
    }
    best
}

/// Lower-triangular factor stored row by row from the first nonzero column
/// of each row to the diagonal.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// (in the permuted ordering) is read.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            inv[i] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for &j in a.row(i).0 {
                let (pi, pj) = (inv[i], inv[j]);
                if pj < pi {
                    first[pi] = first[pi].min(pj);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (pi, pj) = (inv[i], inv[j]);
                if pj <= pi {
                    data[start[pi] + pj - first[pi]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (row_i, row_j) = (start[i], start[j]);
                let dot: f64 = data[row_i + lo - fi..row_i + j - fi]
                    .iter()
                    .zip(&data[row_j + lo - fj..row_j + j - fj])
                    .map(|(x, y)| x * y)
                    .sum();
                let diag = data[start[j + 1] - 1];
                data[row_i + j - fi] = (data[row_i + j - fi] - dot) / diag;
            }
            let row = &data[start[i]..start[i + 1] - 1];
            let d = data[start[i + 1] - 1] - row.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { row: perm[i], pivot: d });
            }
            data[start[i + 1] - 1] = d.sqrt();
        }
        Ok(Self { perm, first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let dot: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (l, t) in row[..i - fi].iter().zip(&mut y[fi..i]) {
                *t -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian_1d(50, 0.1);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x);
        let chol = EnvelopeCholesky::factor(&a).unwrap();
        let y = chol.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
        // RCM keeps a path graph banded.
        assert!(chol.envelope_size() <= 2 * 50);
    }

    #[test]
    fn rejects_indefinite() {
        let a = laplacian_1d(10, -1.0);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn handles_disconnected_blocks() {
        let t = vec![(0, 0, 4.0), (1, 1, 3.0), (2, 2, 2.0), (1, 2, 1.0), (2, 1, 1.0)];
        let a = CsrMatrix::from_triplets(3, 3, t);
        let x = EnvelopeCholesky::factor(&a).unwrap().solve(&[4.0, 4.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14 && (x[2] - 1.0).abs() < 1e-14);
    }
}
