//! The PackSELL format and its SpMV kernel.
//!
//! Column indices are delta-encoded against the previous nonzero of the row,
//! starting from a block-uniform leftmost offset. Each (delta, value) pair is
//! packed into one word (see [`crate::codec`]). Deltas too wide for the `D`
//! delta bits are carried by a preceding dummy word (flag = 0) and the real
//! element follows with delta 0. Real and dummy words are then laid out as
//! SELL-C-σ slices; padding is the all-zero word.

use crate::codec::{E8myDec, Fp16Dec, Fp32Dec, Layout, PackFormat, PackedWord, UnpackedEntry, ValueDecoder, Word, Codec};
use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;
use crate::scalar::Scalar;
use crate::sell::{check_dims, effective_sigma, sigma_order, slice_offsets, Perm, PermMode};
use rayon::prelude::*;
use serde::Serialize;

/// Block-uniform leftmost offset: `⌊i/σ⌋·σ − k_left` when `k_left` is
/// below the block start, otherwise 0.
#[inline(always)]
pub fn leftmost_offset(i: usize, sigma: usize, k_left: usize) -> usize {
    ((i / sigma) * sigma).saturating_sub(k_left)
}

/// [`leftmost_offset`] clamped to the last column. Every nonempty row has
/// its first nonzero at or right of the unclamped offset, so clamping keeps
/// the first delta non-negative while padding-only rows (which can sit past
/// the last column in tall matrices) never read `x` out of bounds.
#[inline(always)]
pub(crate) fn clamped_leftmost(i: usize, sigma: usize, k_left: usize, n_cols: usize) -> usize {
    leftmost_offset(i, sigma, k_left).min(n_cols.saturating_sub(1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamEntry {
    pub delta: u64,
    /// `None` for dummy elements.
    pub value: Option<f64>,
}

/// The delta-encoded entries of one row, dummies included.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeltaStream {
    pub entries: Vec<StreamEntry>,
}

impl DeltaStream {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_dummy(&self) -> usize {
        self.entries.iter().filter(|e| e.value.is_none()).count()
    }
}

/// Delta-encodes one row starting from `leftmost`.
///
/// A gap wider than the format's direct range becomes a dummy (or a chain of
/// dummies when it also exceeds the dummy range) followed by the real entry
/// with delta 0.
pub fn build_delta_stream(
    cols: &[u32],
    vals: &[f64],
    leftmost: usize,
    fmt: &PackFormat,
) -> Result<DeltaStream> {
    debug_assert_eq!(cols.len(), vals.len());
    let mut entries = Vec::with_capacity(cols.len());
    let mut prev = leftmost as u64;
    for (&c, &v) in cols.iter().zip(vals) {
        let c = c as u64;
        if c < prev {
            return Err(Error::Structure(format!(
                "column {c} lies left of the running position {prev}"
            )));
        }
        let gap = c - prev;
        if gap > fmt.max_direct_delta() {
            let mut rest = gap;
            while rest > fmt.max_dummy_delta() {
                entries.push(StreamEntry { delta: fmt.max_dummy_delta(), value: None });
                rest -= fmt.max_dummy_delta();
            }
            entries.push(StreamEntry { delta: rest, value: None });
            entries.push(StreamEntry { delta: 0, value: Some(v) });
        } else {
            entries.push(StreamEntry { delta: gap, value: Some(v) });
        }
        prev = c;
    }
    Ok(DeltaStream { entries })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ElementCounts {
    pub nnz_real: usize,
    pub n_dummy: usize,
    pub n_padding: usize,
}

/// Packed word storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Words {
    W32(Vec<u32>),
    W64(Vec<u64>),
}

impl Words {
    pub fn len(&self) -> usize {
        match self {
            Words::W32(w) => w.len(),
            Words::W64(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, p: usize) -> PackedWord {
        match self {
            Words::W32(w) => PackedWord(w[p] as u64),
            Words::W64(w) => PackedWord(w[p]),
        }
    }
}

/// Builder settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    pub slice: usize,
    pub sigma: usize,
    pub mode: PermMode,
    pub fmt: PackFormat,
    /// Use this lower bandwidth instead of the computed one. Must be at
    /// least the true lower bandwidth; a value `>= n_rows` forces every
    /// leftmost offset to 0.
    pub k_left_override: Option<usize>,
}

impl BuildOptions {
    pub fn new(fmt: PackFormat) -> Self {
        BuildOptions {
            slice: crate::sell::DEFAULT_SLICE,
            sigma: crate::sell::DEFAULT_SIGMA,
            mode: PermMode::Implicit,
            fmt,
            k_left_override: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PackSellMatrix {
    n_rows: usize,
    n_cols: usize,
    c: usize,
    sigma: usize,
    mode: PermMode,
    fmt: PackFormat,
    pack: Words,
    offset: Vec<usize>,
    perm: Option<Perm>,
    k_left: usize,
    counts: ElementCounts,
}

/// Memory footprint of a PackSELL matrix against the SELL matrix with the
/// same slice size, σ, permutation mode and value precision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Footprint {
    pub pack_bits: u64,
    pub sell_equiv_bits: u64,
    pub ratio: f64,
    /// Bits of `offset` and `perm`, counted identically on both sides.
    pub overhead_bits: u64,
    pub n_padding_sell: usize,
}

impl PackSellMatrix {
    pub fn build(
        a: &CsrMatrix,
        c: usize,
        sigma: usize,
        fmt: PackFormat,
        mode: PermMode,
    ) -> Result<Self> {
        let opts = BuildOptions {
            slice: c,
            sigma,
            mode,
            fmt,
            k_left_override: None,
        };
        Self::build_with(a, &opts).map(|(m, _)| m)
    }

    /// Builds the matrix and returns the storage order (`order[i]` is the
    /// original row stored at position `i`).
    pub fn build_with(a: &CsrMatrix, opts: &BuildOptions) -> Result<(Self, Vec<usize>)> {
        let c = opts.slice;
        let fmt = opts.fmt;
        let sigma = effective_sigma(c, opts.sigma, opts.mode)?;
        let true_k_left = a.lower_bandwidth();
        let k_left = match opts.k_left_override {
            Some(k) if k < true_k_left => {
                return Err(Error::invalid(format!(
                    "k_left override {k} is below the lower bandwidth {true_k_left}"
                )))
            }
            Some(k) => k,
            None => true_k_left,
        };
        let n = a.n_rows();

        let streams = (0..n)
            .into_par_iter()
            .map(|r| {
                let (cols, vals) = a.row(r);
                let start = clamped_leftmost(r, sigma, k_left, a.n_cols());
                build_delta_stream(cols, vals, start, &fmt)
            })
            .collect::<Result<Vec<_>>>()?;
        let lens: Vec<usize> = streams.iter().map(DeltaStream::len).collect();
        let order = sigma_order(&lens, sigma);
        let offset = slice_offsets(&lens, &order, c);
        let total = *offset.last().unwrap();

        let mut words = vec![0u64; total];
        let mut n_dummy = 0;
        for (k, rows) in order.chunks(c).enumerate() {
            let s = offset[k];
            for (l, &r) in rows.iter().enumerate() {
                for (j, e) in streams[r].entries.iter().enumerate() {
                    words[s + j * c + l] = fmt
                        .pack(e.value, e.delta)
                        .map_err(|err| Error::Codec(format!("row {r}: {err}")))?
                        .0;
                }
                n_dummy += streams[r].n_dummy();
            }
        }
        let pack = match fmt.word_bits() {
            32 => Words::W32(words.into_iter().map(|w| w as u32).collect()),
            _ => Words::W64(words),
        };
        let counts = ElementCounts {
            nnz_real: a.nnz(),
            n_dummy,
            n_padding: total - a.nnz() - n_dummy,
        };
        let perm = (opts.mode == PermMode::Implicit).then(|| Perm::from_order(&order, sigma));
        let m = PackSellMatrix {
            n_rows: n,
            n_cols: a.n_cols(),
            c,
            sigma,
            mode: opts.mode,
            fmt,
            pack,
            offset,
            perm,
            k_left,
            counts,
        };
        Ok((m, order))
    }

    /// Assembles a matrix from raw arrays (e.g. read from a container),
    /// validating the layout and every delta chain.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        c: usize,
        sigma: usize,
        mode: PermMode,
        fmt: PackFormat,
        pack: Words,
        offset: Vec<usize>,
        perm: Option<Perm>,
        k_left: usize,
        counts: ElementCounts,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::Structure(m));
        if c == 0 || sigma == 0 {
            return bad("slice size and sigma must be positive".into());
        }
        if mode == PermMode::None && sigma != 1 {
            return bad("sigma must be 1 without permutation".into());
        }
        if mode != PermMode::None && !sigma.is_multiple_of(c) {
            return bad(format!("sigma {sigma} is not a multiple of C {c}"));
        }
        let word_ok = matches!(
            (&pack, fmt.word_bits()),
            (Words::W32(_), 32) | (Words::W64(_), 64)
        );
        if !word_ok {
            return bad("word array width disagrees with the format".into());
        }
        if offset.len() != n_rows.div_ceil(c) + 1 || offset[0] != 0 {
            return bad("offset array has the wrong length".into());
        }
        if offset
            .windows(2)
            .any(|w| w[1] < w[0] || (w[1] - w[0]) % c != 0)
        {
            return bad("slice widths are not multiples of C".into());
        }
        if *offset.last().unwrap() != pack.len() {
            return bad("offset total disagrees with pack length".into());
        }
        match (&perm, mode) {
            (None, PermMode::Implicit) => return bad("implicit mode needs a perm array".into()),
            (Some(_), PermMode::None | PermMode::Explicit) => {
                return bad("perm array present without implicit mode".into())
            }
            (Some(p), PermMode::Implicit) => {
                let want_bits = if sigma <= 256 { 8 } else { 16 };
                if p.len() != n_rows || p.element_bits() != want_bits {
                    return bad("perm array has the wrong length or width".into());
                }
                for (b, start) in (0..n_rows).step_by(sigma).enumerate() {
                    let end = (start + sigma).min(n_rows);
                    let mut local: Vec<usize> = (start..end).map(|i| p.get(i)).collect();
                    local.sort_unstable();
                    if local.iter().enumerate().any(|(k, &v)| k != v) {
                        return bad(format!("perm is not a bijection on block {b}"));
                    }
                }
            }
            _ => {}
        }
        let m = PackSellMatrix {
            n_rows,
            n_cols,
            c,
            sigma,
            mode,
            fmt,
            pack,
            offset,
            perm,
            k_left,
            counts,
        };
        let mut real = 0;
        let mut dummy = 0;
        for i in 0..m.padded_rows() {
            let mut col = m.leftmost(i);
            for e in m.storage_row(i) {
                col += e.delta as usize;
                if e.has_value {
                    if i >= n_rows || col >= n_cols {
                        return bad(format!("storage row {i} reads column {col} out of range"));
                    }
                    real += 1;
                } else if e.delta != 0 {
                    dummy += 1;
                }
            }
        }
        if real != counts.nnz_real || counts.nnz_real + counts.n_dummy + counts.n_padding != m.pack.len() {
            return bad("element counts disagree with the packed words".into());
        }
        // Zero-delta dummies are indistinguishable from padding words.
        if dummy > counts.n_dummy {
            return bad("dummy count disagrees with the packed words".into());
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
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

    pub fn format(&self) -> PackFormat {
        self.fmt
    }

    pub fn words(&self) -> &Words {
        &self.pack
    }

    pub fn offset(&self) -> &[usize] {
        &self.offset
    }

    pub fn perm(&self) -> Option<&Perm> {
        self.perm.as_ref()
    }

    pub fn k_left(&self) -> usize {
        self.k_left
    }

    pub fn counts(&self) -> ElementCounts {
        self.counts
    }

    pub fn nnz(&self) -> usize {
        self.counts.nnz_real
    }

    pub fn n_slices(&self) -> usize {
        self.offset.len() - 1
    }

    fn padded_rows(&self) -> usize {
        self.n_slices() * self.c
    }

    fn width(&self, slice: usize) -> usize {
        (self.offset[slice + 1] - self.offset[slice]) / self.c
    }

    /// Starting column of storage row `i`.
    pub fn leftmost(&self, i: usize) -> usize {
        clamped_leftmost(i, self.sigma, self.k_left, self.n_cols)
    }

    /// Unpacked words of storage row `i`, padding included.
    pub fn storage_row(&self, i: usize) -> Vec<UnpackedEntry> {
        let (k, l) = (i / self.c, i % self.c);
        let s = self.offset[k];
        (0..self.width(k))
            .map(|j| self.fmt.unpack(self.pack.get(s + j * self.c + l)))
            .collect()
    }

    /// Original row index of storage row `i` as far as the matrix knows:
    /// through `perm` in implicit mode, otherwise `i` itself.
    pub fn output_row(&self, i: usize) -> usize {
        match &self.perm {
            Some(p) => (i / self.sigma) * self.sigma + p.get(i),
            None => i,
        }
    }

    /// Decodes back to CSR with the stored (quantized) values. Rows come out
    /// in SpMV output order: original order unless the mode is explicit.
    pub fn to_csr(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(self.counts.nnz_real);
        for i in 0..self.n_rows {
            let row = self.output_row(i);
            let mut col = self.leftmost(i);
            for e in self.storage_row(i) {
                col += e.delta as usize;
                if e.has_value {
                    trip.push((row, col, e.value));
                }
            }
        }
        CsrMatrix::from_triplets(self.n_rows, self.n_cols, trip)
            .expect("validated matrix decodes in range")
    }

    pub fn bytes(&self) -> usize {
        (self.footprint().pack_bits / 8) as usize
    }

    pub fn footprint(&self) -> Footprint {
        let overhead = 64 * self.offset.len() as u64
            + self.perm.as_ref().map_or(0, |p| (p.len() * p.element_bits()) as u64);
        let elements = self.pack.len() as u64;
        let pack_bits = self.fmt.word_bits() as u64 * elements + overhead;

        // Real nonzeros per storage row, re-sorted per block the way a SELL
        // build of the same matrix would order them.
        let mut real: Vec<usize> = (0..self.n_rows)
            .map(|i| self.storage_row(i).iter().filter(|e| e.has_value).count())
            .collect();
        if self.sigma > 1 {
            for block in real.chunks_mut(self.sigma) {
                block.sort_by(|a, b| b.cmp(a));
            }
        }
        let identity: Vec<usize> = (0..self.n_rows).collect();
        let sell_total = *slice_offsets(&real, &identity, self.c).last().unwrap();
        let sell_bits = (self.fmt.sell_value_bits() as u64 + 32) * sell_total as u64 + overhead;

        let ratio = if elements == 0 && sell_total == 0 {
            1.0
        } else {
            pack_bits as f64 / sell_bits as f64
        };
        Footprint {
            pack_bits,
            sell_equiv_bits: sell_bits,
            ratio,
            overhead_bits: overhead,
            n_padding_sell: sell_total - self.counts.nnz_real,
        }
    }

    pub fn spmv<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::ZERO; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x`. For each storage row the running column starts at the
    /// leftmost offset and advances by every unpacked delta; padding and
    /// dummy words contribute `+0 · x_c`. `x` must be finite.
    pub fn spmv_into<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        check_dims(self.n_rows, self.n_cols, x.len(), y.len())?;
        match (&self.pack, self.fmt.codec()) {
            (Words::W32(w), Codec::Fp16Embed) => self.kernel::<u32, Fp16Dec, T>(w, x, y),
            (Words::W32(w), Codec::E8my) => self.kernel::<u32, E8myDec, T>(w, x, y),
            (Words::W32(w), Codec::Fp32Embed) => self.kernel::<u32, Fp32Dec, T>(w, x, y),
            (Words::W64(w), Codec::Fp16Embed) => self.kernel::<u64, Fp16Dec, T>(w, x, y),
            (Words::W64(w), Codec::E8my) => self.kernel::<u64, E8myDec, T>(w, x, y),
            (Words::W64(w), Codec::Fp32Embed) => self.kernel::<u64, Fp32Dec, T>(w, x, y),
        }
        Ok(())
    }

    fn kernel<W: Word, K: ValueDecoder, T: Scalar>(&self, words: &[W], x: &[T], y: &mut [T]) {
        if self.n_rows == 0 {
            return;
        }
        let layout: Layout = self.fmt.layout();
        let (c, sigma, k_left, n_cols) = (self.c, self.sigma, self.k_left, self.n_cols);
        let chunk = if self.perm.is_some() { sigma } else { c };
        y.par_chunks_mut(chunk)
            .enumerate()
            .with_min_len((crate::matrix::ROW_GRAIN / chunk).max(1))
            .for_each(|(b, ys)| {
                let base = b * chunk;
                for local in 0..ys.len() {
                    let i = base + local;
                    let (k, l) = (i / c, i % c);
                    let s = self.offset[k];
                    let w = (self.offset[k + 1] - s) / c;
                    let mut col = clamped_leftmost(i, sigma, k_left, n_cols);
                    let mut t = T::ZERO;
                    for j in 0..w {
                        let (v, d, _) = words[s + j * c + l].split(layout);
                        col += d.widen() as usize;
                        t = t + K::decode::<T>(v.widen(), layout) * x[col];
                    }
                    let dest = match &self.perm {
                        Some(p) => p.get(i),
                        None => local,
                    };
                    ys[dest] = t;
                }
            });
    }
}
