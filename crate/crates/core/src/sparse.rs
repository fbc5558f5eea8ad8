//! Minimal CSR storage and a Jacobi-preconditioned conjugate gradient
//! solver for the symmetric positive definite mass systems.

use std::fmt;

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from unsorted triplets; duplicate entries are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &mut Vec<(u32, u32, f64)>) -> CsrMatrix {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for &(r, c, v) in triplets.iter() {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> CsrMatrix {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[idx] * x[self.col_idx[idx] as usize];
            }
            y[r] = acc;
        }
    }

    /// y = A^T x.
    pub fn mul_transpose_vec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for r in 0..self.n_rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[idx] as usize] += self.values[idx] * xr;
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[idx] as usize == r {
                    d[r] += self.values[idx];
                }
            }
        }
        d
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.values[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum())
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PcgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug)]
pub struct PcgFailure {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl fmt::Display for PcgFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pcg hit the iteration limit ({}) with relative residual {:.3e}",
            self.iterations, self.relative_residual
        )
    }
}

impl std::error::Error for PcgFailure {}

/// Jacobi-preconditioned CG on A x = b, starting from the value in `x`
/// (warm start). Converges when ||b - Ax||_2 <= tol * ||b||_2.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    diag_inv: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<PcgStats, PcgFailure> {
    let n = a.n_rows;
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        x.fill(0.0);
        return Ok(PcgStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(diag_inv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let target = tol * norm_b;
    let mut res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut iter = 0;
    while res > target {
        if iter >= max_iter {
            return Err(PcgFailure { iterations: iter, relative_residual: res / norm_b });
        }
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * diag_inv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        iter += 1;
    }
    Ok(PcgStats { iterations: iter, relative_residual: res / norm_b })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n as u32 {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if (i as usize) < n - 1 {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &mut t)
    }

    #[test]
    fn triplets_merge_duplicates() {
        let mut t = vec![(0u32, 0u32, 1.0), (0, 0, 2.0), (1, 0, 0.5), (0, 1, -1.0)];
        let a = CsrMatrix::from_triplets(2, 2, &mut t);
        let mut y = vec![0.0; 2];
        a.mul_vec(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![2.0, 0.5]);
        assert_eq!(a.diagonal(), vec![3.0, 0.0]);
        assert!((a.sum() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn pcg_solves_spd_system() {
        let n = 64;
        let a = laplacian_1d(n);
        let x_true: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64 - 6.0) / 13.0).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&x_true, &mut b);
        let diag_inv: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
        let mut x = vec![0.0; n];
        let stats = pcg(&a, &b, &mut x, &diag_inv, 1e-12, 10_000).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-9);
        }
    }

    #[test]
    fn pcg_reports_iteration_limit() {
        let a = laplacian_1d(128);
        let b = vec![1.0; 128];
        let diag_inv = vec![0.5; 128];
        let mut x = vec![0.0; 128];
        let err = pcg(&a, &b, &mut x, &diag_inv, 1e-14, 2).unwrap_err();
        assert_eq!(err.iterations, 2);
        assert!(err.relative_residual > 0.0);
    }

    #[test]
    fn transpose_multiply() {
        let mut t = vec![(0u32, 1u32, 2.0), (1, 0, 3.0), (1, 2, -1.0)];
        let a = CsrMatrix::from_triplets(2, 3, &mut t);
        let mut y = vec![0.0; 3];
        a.mul_transpose_vec(&[1.0, 2.0], &mut y);
        assert_eq!(y, vec![6.0, 2.0, -2.0]);
    }
}
