//! Canonical matrix representations (COO and CSR), diagonal scalings and
//! structural statistics.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::Serialize;

/// Rows handed to one rayon task at a time in the row-parallel kernels.
pub(crate) const ROW_GRAIN: usize = 512;

/// A matrix in coordinate form.
///
/// Entries may be pushed in any order; [`CooMatrix::canonicalize`] sorts them
/// by `(row, col)` and sums duplicates. Explicit zeros are kept.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CooMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        CooMatrix {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        CooMatrix {
            n_rows,
            n_cols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if row >= self.n_rows || col >= self.n_cols {
            return Err(Error::invalid(format!(
                "entry ({row}, {col}) outside a {}x{} matrix",
                self.n_rows, self.n_cols
            )));
        }
        self.entries.push((row, col, value));
        Ok(())
    }

    /// Sorts entries by `(row, col)` and sums duplicates.
    pub fn canonicalize(&mut self) {
        self.entries
            .sort_by_key(|e| (e.0, e.1));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        self.entries = out;
    }

    pub fn is_canonical(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1))
    }

    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::from_coo(self)
    }
}

/// Compressed sparse row storage with `f64` values.
///
/// Column indices are strictly increasing within each row. Stored zeros are
/// structural nonzeros.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from raw arrays, checking every invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n_cols > u32::MAX as usize + 1 {
            return Err(Error::invalid("column count exceeds 32-bit index range"));
        }
        if row_ptr.len() != n_rows + 1 {
            return Err(Error::Structure(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n_rows + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[n_rows] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::Structure(
                "row_ptr bounds disagree with index/value arrays".into(),
            ));
        }
        for i in 0..n_rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::Structure(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Structure(format!(
                    "columns of row {i} are not strictly increasing"
                )));
            }
            if let Some(&last) = cols.last() {
                if last as usize >= n_cols {
                    return Err(Error::Structure(format!(
                        "column {last} out of range in row {i}"
                    )));
                }
            }
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_coo(coo: &CooMatrix) -> Self {
        let mut coo = coo.clone();
        if !coo.is_canonical() {
            coo.canonicalize();
        }
        let mut row_ptr = vec![0usize; coo.n_rows + 1];
        for &(r, _, _) in &coo.entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..coo.n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = coo.entries.iter().map(|e| e.1 as u32).collect();
        let values = coo.entries.iter().map(|e| e.2).collect();
        CsrMatrix {
            n_rows: coo.n_rows,
            n_cols: coo.n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut coo = CooMatrix::new(n_rows, n_cols);
        for (r, c, v) in triplets {
            coo.push(r, c, v)?;
        }
        coo.canonicalize();
        Ok(Self::from_coo(&coo))
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn to_coo(&self) -> CooMatrix {
        let mut coo = CooMatrix::with_capacity(self.n_rows, self.n_cols, self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            coo.entries
                .extend(cols.iter().zip(vals).map(|(&c, &v)| (i, c as usize, v)));
        }
        coo
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Returns a copy with every value passed through `f`; structure unchanged.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        CsrMatrix {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Fallible variant of [`CsrMatrix::map_values`].
    pub fn try_map_values(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
        Ok(CsrMatrix {
            values,
            ..self.clone()
        })
    }

    /// Looks up a stored entry.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&(j as u32)).ok().map(|k| vals[k])
    }

    /// `y = A x` in the working precision of `x`, accumulating each row left
    /// to right in ascending column order.
    pub fn spmv<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::ZERO; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: y.len(),
            });
        }
        y.par_iter_mut()
            .enumerate()
            .with_min_len(ROW_GRAIN)
            .for_each(|(i, yi)| {
                let (cols, vals) = self.row(i);
                let mut t = T::ZERO;
                for (&c, &v) in cols.iter().zip(vals) {
                    t = t + T::from_f64(v) * x[c as usize];
                }
                *yi = t;
            });
        Ok(())
    }

    /// Infinity norm: maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Lower bandwidth: max over rows of `i - leftmost column`, clamped at 0.
    pub fn lower_bandwidth(&self) -> usize {
        (0..self.n_rows)
            .filter_map(|i| self.row(i).0.first().map(|&c| i.saturating_sub(c as usize)))
            .max()
            .unwrap_or(0)
    }

    pub fn upper_bandwidth(&self) -> usize {
        (0..self.n_rows)
            .filter_map(|i| self.row(i).0.last().map(|&c| (c as usize).saturating_sub(i)))
            .max()
            .unwrap_or(0)
    }

    /// True when the matrix is square and `a_ij == a_ji` for every stored entry.
    pub fn is_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .all(|(&j, &v)| self.get(j as usize, i) == Some(v))
        })
    }

    /// Row scaling `G⁻¹A` with `g_i = Σ_j |a_ij|`.
    pub fn row_sum_scale(&self) -> Result<Self> {
        let mut values = self.values.clone();
        for i in 0..self.n_rows {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let g: f64 = values[s..e].iter().map(|v| v.abs()).sum();
            if g == 0.0 {
                return Err(Error::ZeroRow { row: i });
            }
            values[s..e].iter_mut().for_each(|v| *v /= g);
        }
        Ok(CsrMatrix {
            values,
            ..self.clone()
        })
    }

    /// Symmetric scaling `Ḡ⁻¹AḠ⁻¹` with `ḡ_i = √|a_ii|`.
    pub fn sym_diag_scale(&self) -> Result<Self> {
        let g = self.sqrt_abs_diagonal()?;
        let mut values = self.values.clone();
        for i in 0..self.n_rows {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            for (v, &j) in values[s..e].iter_mut().zip(&self.col_idx[s..e]) {
                // (g_i * g_j) is commutative, so b_ij and b_ji are computed identically.
                *v /= g[i] * g[j as usize];
            }
        }
        Ok(CsrMatrix {
            values,
            ..self.clone()
        })
    }

    fn sqrt_abs_diagonal(&self) -> Result<Vec<f64>> {
        if self.n_rows != self.n_cols {
            return Err(Error::invalid("symmetric scaling needs a square matrix"));
        }
        (0..self.n_rows)
            .map(|i| match self.get(i, i) {
                Some(d) if d != 0.0 => Ok(d.abs().sqrt()),
                _ => Err(Error::ZeroDiagonal { row: i }),
            })
            .collect()
    }

    /// Diagonal entries, 0 where absent.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i).unwrap_or(0.0))
            .collect()
    }

    pub fn stats(&self) -> MatrixStats {
        compute_stats(self)
    }
}

/// Structural statistics of a matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixStats {
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz: usize,
    /// Population standard deviation of per-row nnz divided by its mean.
    pub rsd: f64,
    pub lower_bandwidth: usize,
    pub upper_bandwidth: usize,
    pub nnz_per_row_min: f64,
    pub nnz_per_row_max: f64,
    pub nnz_per_row_mean: f64,
}

pub fn compute_stats(a: &CsrMatrix) -> MatrixStats {
    let n = a.n_rows();
    let counts: Vec<f64> = (0..n).map(|i| a.row_nnz(i) as f64).collect();
    let (mean, rsd, min, max) = if n == 0 {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n as f64;
        let rsd = if mean == 0.0 { 0.0 } else { var.sqrt() / mean };
        let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
        let max = counts.iter().copied().fold(0.0, f64::max);
        (mean, rsd, min, max)
    };
    MatrixStats {
        n_rows: n,
        n_cols: a.n_cols(),
        nnz: a.nnz(),
        rsd,
        lower_bandwidth: a.lower_bandwidth(),
        upper_bandwidth: a.upper_bandwidth(),
        nnz_per_row_min: min,
        nnz_per_row_max: max,
        nnz_per_row_mean: mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_matvec(a: &CsrMatrix, x: &[f64]) -> Vec<f64> {
        let mut dense = vec![vec![0.0; a.n_cols()]; a.n_rows()];
        for (r, c, v) in a.to_coo().entries().iter().copied() {
            dense[r][c] = v;
        }
        dense
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / (1u64 << 53) as f64
    }

    #[test]
    fn empty_matrix_row_ptr() {
        let a = CooMatrix::new(3, 3).to_csr();
        assert_eq!(a.row_ptr(), &[0, 0, 0, 0]);
    }

    #[test]
    fn identity_layout() {
        let a = CsrMatrix::from_triplets(3, 3, (0..3).map(|i| (i, i, 1.0))).unwrap();
        assert_eq!(a.row_ptr(), &[0, 1, 2, 3]);
        assert_eq!(a.col_idx(), &[0, 1, 2]);
        assert_eq!(a.values(), &[1.0, 1.0, 1.0]);
        assert_eq!(a, CsrMatrix::identity(3));
    }

    #[test]
    fn row_ptr_matches_prefix_sum_of_counts() {
        let counts = [3usize, 1, 2, 3, 1, 2];
        let mut trip = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            for k in 0..c {
                trip.push((i, (i + 2 * k) % 6, 1.0 + k as f64));
            }
        }
        let a = CsrMatrix::from_triplets(6, 6, trip).unwrap();
        let mut expect = vec![0];
        for c in counts {
            expect.push(expect.last().unwrap() + c);
        }
        assert_eq!(a.row_ptr(), expect.as_slice());
        assert_eq!(a.row_ptr(), &[0, 3, 4, 6, 9, 10, 12]);
    }

    #[test]
    fn duplicates_summed_and_zeros_kept() {
        let mut coo = CooMatrix::new(2, 2);
        coo.push(0, 0, 1.0).unwrap();
        coo.push(1, 1, 0.0).unwrap();
        coo.push(0, 0, 2.0).unwrap();
        coo.canonicalize();
        assert_eq!(coo.entries(), &[(0, 0, 3.0), (1, 1, 0.0)]);
    }

    #[test]
    fn push_out_of_bounds() {
        let mut coo = CooMatrix::new(2, 2);
        assert!(coo.push(2, 0, 1.0).is_err());
    }

    #[test]
    fn small_spmv() {
        let a = CsrMatrix::from_triplets(2, 2, [(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(a.spmv(&[1.0f64, 1.0]).unwrap(), vec![2.0, 3.0]);
        let x = [0.25f64, -7.0, 3.5];
        assert_eq!(CsrMatrix::identity(3).spmv(&x).unwrap(), x.to_vec());
        assert!(matches!(
            a.spmv(&[1.0f64]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn banded_spmv_matches_dense() {
        let mut seed = 42;
        let n: usize = 64;
        let mut trip = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 4).min(n) {
                trip.push((i, j, 2.0 * lcg(&mut seed) - 1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, trip).unwrap();
        let x: Vec<f64> = (0..n).map(|_| 2.0 * lcg(&mut seed) - 1.0).collect();
        let y = a.spmv(&x).unwrap();
        let d = dense_matvec(&a, &x);
        for (u, v) in y.iter().zip(&d) {
            assert!((u - v).abs() <= 1e-13 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn row_sum_scale_examples() {
        let a = CsrMatrix::from_triplets(1, 2, [(0, 0, 3.0), (0, 1, -1.0)]).unwrap();
        assert_eq!(a.row_sum_scale().unwrap().values(), &[0.75, -0.25]);
        let b = CsrMatrix::from_triplets(2, 2, [(0, 0, 0.5), (0, 1, -0.5), (1, 1, 1.0)]).unwrap();
        assert_eq!(b.row_sum_scale().unwrap(), b);
        let z = CsrMatrix::from_triplets(2, 2, [(0, 0, 1.0)]).unwrap();
        assert!(matches!(z.row_sum_scale(), Err(Error::ZeroRow { row: 1 })));
    }

    #[test]
    fn row_sum_scale_random_rows_sum_to_one() {
        let mut seed = 9;
        let trip: Vec<_> = (0..200)
            .map(|k| (k % 20, (k * 7) % 31, 10.0 * lcg(&mut seed) - 5.0))
            .collect();
        let a = CsrMatrix::from_triplets(20, 31, trip).unwrap().row_sum_scale().unwrap();
        for i in 0..20 {
            let s: f64 = a.row(i).1.iter().map(|v| v.abs()).sum();
            assert!((s - 1.0).abs() <= 1e-14);
        }
        let again = a.row_sum_scale().unwrap();
        for (u, v) in a.values().iter().zip(again.values()) {
            assert!((u - v).abs() <= 1e-14 * u.abs());
        }
    }

    #[test]
    fn sym_diag_scale_examples() {
        let d = CsrMatrix::from_triplets(2, 2, [(0, 0, 4.0), (1, 1, 9.0)]).unwrap();
        assert_eq!(d.sym_diag_scale().unwrap().values(), &[1.0, 1.0]);
        let a = CsrMatrix::from_triplets(2, 2, [(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 9.0)])
            .unwrap()
            .sym_diag_scale()
            .unwrap();
        assert_eq!(a.get(0, 0), Some(1.0));
        assert_eq!(a.get(1, 1), Some(1.0));
        assert!((a.get(0, 1).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(a.get(0, 1), a.get(1, 0));
        let missing = CsrMatrix::from_triplets(2, 2, [(0, 0, 4.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(missing.sym_diag_scale(), Err(Error::ZeroDiagonal { row: 1 })));
    }

    #[test]
    fn stats_examples() {
        // Uniform rows: rsd = 0.
        let trip: Vec<_> = (0..10).flat_map(|i| (0..9).map(move |k| (i, (i + k) % 20, 1.0))).collect();
        let a = CsrMatrix::from_triplets(10, 20, trip).unwrap();
        assert_eq!(a.stats().rsd, 0.0);
        assert_eq!(a.stats().nnz_per_row_mean, 9.0);

        let b = CsrMatrix::from_triplets(2, 3, [(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(b.stats().rsd, 0.5);

        let n = 5;
        let trip: Vec<_> = (0..n)
            .flat_map(|i: usize| (i.saturating_sub(1)..(i + 2).min(n)).map(move |j| (i, j, 1.0)))
            .collect();
        let t = CsrMatrix::from_triplets(n, n, trip).unwrap();
        assert_eq!(t.stats().lower_bandwidth, 1);
        assert_eq!(t.stats().upper_bandwidth, 1);

        let empty = CooMatrix::new(4, 4).to_csr().stats();
        assert_eq!((empty.rsd, empty.lower_bandwidth), (0.0, 0));
    }
}
