//! Laplacian stencil generators (Dirichlet boundary).

use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;

/// 5-point Laplacian on an `nx × ny` grid: 4 on the diagonal, −1 per neighbour.
pub fn poisson2d(nx: usize, ny: usize) -> Result<CsrMatrix> {
    stencil(&[nx, ny])
}

/// 7-point Laplacian on an `nx × ny × nz` grid: 6 on the diagonal.
pub fn poisson3d(nx: usize, ny: usize, nz: usize) -> Result<CsrMatrix> {
    stencil(&[nx, ny, nz])
}

fn stencil(dims: &[usize]) -> Result<CsrMatrix> {
    if dims.contains(&0) {
        return Err(Error::invalid("grid dimensions must be positive"));
    }
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= u32::MAX as usize)
        .ok_or_else(|| Error::invalid("grid too large"))?;
    let mut strides = vec![1usize; dims.len()];
    for k in 1..dims.len() {
        strides[k] = strides[k - 1] * dims[k - 1];
    }
    let diag = 2.0 * dims.len() as f64;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(n * (2 * dims.len() + 1));
    let mut values = Vec::with_capacity(col_idx.capacity());
    row_ptr.push(0);
    for i in 0..n {
        let mut row: Vec<(usize, f64)> = vec![(i, diag)];
        for (&d, &s) in dims.iter().zip(&strides) {
            let coord = (i / s) % d;
            if coord > 0 {
                row.push((i - s, -1.0));
            }
            if coord + 1 < d {
                row.push((i + s, -1.0));
            }
        }
        row.sort_by_key(|e| e.0);
        for (c, v) in row {
            col_idx.push(c as u32);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::new(n, n, row_ptr, col_idx, values)
}
