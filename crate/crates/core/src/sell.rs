//! SELL-C-σ storage: rows grouped into slices of `C`, each slice padded to
//! its widest row and stored column-major, with optional descending-nnz row
//! sorting inside blocks of `σ` rows.

use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

pub const DEFAULT_SLICE: usize = 32;
pub const DEFAULT_SIGMA: usize = 256;

/// How σ-block row sorting is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermMode {
    /// No reordering; σ is treated as 1.
    None,
    /// Rows are physically reordered; SpMV output is in storage order.
    Explicit,
    /// Rows are reordered in storage and a `perm` array restores the
    /// original order when writing the output.
    Implicit,
}

impl PermMode {
    pub fn id(self) -> u8 {
        match self {
            PermMode::None => 0,
            PermMode::Explicit => 1,
            PermMode::Implicit => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(PermMode::None),
            1 => Some(PermMode::Explicit),
            2 => Some(PermMode::Implicit),
            _ => None,
        }
    }
}

impl FromStr for PermMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PermMode::None),
            "explicit" => Ok(PermMode::Explicit),
            "implicit" => Ok(PermMode::Implicit),
            _ => Err(Error::invalid(format!("unknown permutation mode '{s}'"))),
        }
    }
}

/// Within-block row offsets, one per row, narrowest type that holds σ−1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Perm {
    U8(Vec<u8>),
    U16(Vec<u16>),
}

impl Perm {
    pub(crate) fn from_order(order: &[usize], sigma: usize) -> Self {
        let local = order.iter().enumerate().map(|(i, &o)| o - (i / sigma) * sigma);
        if sigma <= 256 {
            Perm::U8(local.map(|v| v as u8).collect())
        } else {
            Perm::U16(local.map(|v| v as u16).collect())
        }
    }

    #[inline(always)]
    pub fn get(&self, i: usize) -> usize {
        match self {
            Perm::U8(p) => p[i] as usize,
            Perm::U16(p) => p[i] as usize,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Perm::U8(p) => p.len(),
            Perm::U16(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element_bits(&self) -> usize {
        match self {
            Perm::U8(_) => 8,
            Perm::U16(_) => 16,
        }
    }
}

/// Checks `C`/`σ` and returns the σ actually used for sorting.
pub fn effective_sigma(c: usize, sigma: usize, mode: PermMode) -> Result<usize> {
    if c == 0 {
        return Err(Error::invalid("slice size C must be at least 1"));
    }
    match mode {
        PermMode::None => Ok(1),
        _ => {
            if sigma == 0 || !sigma.is_multiple_of(c) {
                return Err(Error::invalid(format!(
                    "sigma ({sigma}) must be a positive multiple of C ({c})"
                )));
            }
            if mode == PermMode::Implicit && sigma > 1 << 16 {
                return Err(Error::invalid("implicit permutation supports sigma <= 65536"));
            }
            Ok(sigma)
        }
    }
}

/// Storage order: `order[i]` is the original row stored at position `i`.
/// Rows are stably sorted by descending `counts` within each σ-block.
pub(crate) fn sigma_order(counts: &[usize], sigma: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    if sigma > 1 {
        for block in order.chunks_mut(sigma) {
            block.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
        }
    }
    order
}

/// Slice offsets for rows stored in `order`, padding each slice to its widest row.
pub(crate) fn slice_offsets(counts: &[usize], order: &[usize], c: usize) -> Vec<usize> {
    let n_slices = order.len().div_ceil(c);
    let mut offset = Vec::with_capacity(n_slices + 1);
    offset.push(0);
    for rows in order.chunks(c) {
        let width = rows.iter().map(|&r| counts[r]).max().unwrap_or(0);
        offset.push(offset.last().unwrap() + width * c);
    }
    offset
}

/// A SELL-C-σ matrix whose values are stored in precision `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct SellMatrix<S: Scalar> {
    n_rows: usize,
    n_cols: usize,
    nnz: usize,
    c: usize,
    sigma: usize,
    mode: PermMode,
    val: Vec<S>,
    col: Vec<u32>,
    offset: Vec<usize>,
    perm: Option<Perm>,
}

impl<S: Scalar> SellMatrix<S> {
    pub fn build(a: &CsrMatrix, c: usize, sigma: usize, mode: PermMode) -> Result<Self> {
        Self::build_with_order(a, c, sigma, mode).map(|(m, _)| m)
    }

    /// Builds the matrix and also returns the storage order (`order[i]` is the
    /// original row at storage position `i`). For explicit mode this maps the
    /// SpMV output back to the original rows.
    pub fn build_with_order(
        a: &CsrMatrix,
        c: usize,
        sigma: usize,
        mode: PermMode,
    ) -> Result<(Self, Vec<usize>)> {
        let sigma = effective_sigma(c, sigma, mode)?;
        let n = a.n_rows();
        let counts: Vec<usize> = (0..n).map(|i| a.row_nnz(i)).collect();
        let order = sigma_order(&counts, sigma);
        let offset = slice_offsets(&counts, &order, c);
        let total = *offset.last().unwrap();

        let mut val = vec![S::ZERO; total];
        let mut col = vec![0u32; total];
        for (k, rows) in order.chunks(c).enumerate() {
            let s = offset[k];
            let width = (offset[k + 1] - s) / c;
            for (l, &r) in rows.iter().enumerate() {
                let (cols, vals) = a.row(r);
                for j in 0..width {
                    let p = s + j * c + l;
                    if j < cols.len() {
                        let v = S::from_f64(vals[j]);
                        if !v.to_f64().is_finite() {
                            return Err(Error::Codec(format!(
                                "value {} in row {r} is not finite in {}",
                                vals[j],
                                S::NAME
                            )));
                        }
                        val[p] = v;
                        col[p] = cols[j];
                    } else {
                        // Padding: value 0, column of the row's last entry.
                        col[p] = cols.last().copied().unwrap_or(0);
                    }
                }
            }
        }

        let perm = (mode == PermMode::Implicit).then(|| Perm::from_order(&order, sigma));
        let m = SellMatrix {
            n_rows: n,
            n_cols: a.n_cols(),
            nnz: a.nnz(),
            c,
            sigma,
            mode,
            val,
            col,
            offset,
            perm,
        };
        Ok((m, order))
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn slice_size(&self) -> usize {
        self.c
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn mode(&self) -> PermMode {
        self.mode
    }

    pub fn val(&self) -> &[S] {
        &self.val
    }

    pub fn col(&self) -> &[u32] {
        &self.col
    }

    pub fn offset(&self) -> &[usize] {
        &self.offset
    }

    pub fn perm(&self) -> Option<&Perm> {
        self.perm.as_ref()
    }

    /// Stored elements including padding.
    pub fn stored(&self) -> usize {
        self.val.len()
    }

    pub fn n_padding(&self) -> usize {
        self.stored() - self.nnz
    }

    pub fn slice_widths(&self) -> Vec<usize> {
        self.offset.windows(2).map(|w| (w[1] - w[0]) / self.c).collect()
    }

    /// Approximate bytes of all matrix arrays.
    pub fn bytes(&self) -> usize {
        self.val.len() * (S::BYTES + 4)
            + self.offset.len() * 8
            + self.perm.as_ref().map_or(0, |p| p.len() * p.element_bits() / 8)
    }

    pub fn spmv<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::ZERO; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x`. Each row accumulates in stored order in the precision of
    /// `x`; with implicit permutation the row stored at `i` is written to
    /// `⌊i/σ⌋·σ + perm[i]`.
    pub fn spmv_into<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        check_dims(self.n_rows, self.n_cols, x.len(), y.len())?;
        let chunk = if self.perm.is_some() { self.sigma } else { self.c };
        if self.n_rows == 0 {
            return Ok(());
        }
        y.par_chunks_mut(chunk)
            .enumerate()
            .with_min_len((crate::matrix::ROW_GRAIN / chunk).max(1))
            .for_each(|(b, ys)| {
                let base = b * chunk;
                for local in 0..ys.len() {
                    let i = base + local;
                    let (k, l) = (i / self.c, i % self.c);
                    let s = self.offset[k];
                    let w = (self.offset[k + 1] - s) / self.c;
                    let mut t = T::ZERO;
                    for j in 0..w {
                        let p = s + j * self.c + l;
                        t = t + T::from_f64(self.val[p].to_f64()) * x[self.col[p] as usize];
                    }
                    let dest = match &self.perm {
                        Some(perm) => perm.get(i),
                        None => local,
                    };
                    ys[dest] = t;
                }
            });
        Ok(())
    }
}

pub(crate) fn check_dims(n_rows: usize, n_cols: usize, x: usize, y: usize) -> Result<()> {
    if x != n_cols {
        return Err(Error::DimensionMismatch {
            expected: n_cols,
            got: x,
        });
    }
    if y != n_rows {
        return Err(Error::DimensionMismatch {
            expected: n_rows,
            got: y,
        });
    }
    Ok(())
}

/// Reorders a storage-order vector back to original row order.
pub fn unpermute<T: Copy>(y_storage: &[T], order: &[usize]) -> Vec<T> {
    let mut y = y_storage.to_vec();
    for (i, &r) in order.iter().enumerate() {
        y[r] = y_storage[i];
    }
    y
}
