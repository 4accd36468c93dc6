//! C ABI for `packsell`.
//!
//! Matrices are opaque handles created by `ps_*_from_*`, `ps_packsell_build`
//! or `ps_packsell_read` and released with the matching `*_free`. Every
//! fallible call returns a [`PsStatus`]; on failure a description is
//! available from [`ps_last_error_message`] on the same thread.
//!
//! Panics never cross the boundary: they are reported as
//! `PS_STATUS_PANIC`.

use packsell::codec::{Codec, PackedWord};
use packsell::packsell::BuildOptions;
use packsell::{container, mtx, CsrMatrix, Error, PackFormat, PackSellMatrix, PermMode};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Codec = 5,
    DimensionMismatch = 6,
    Container = 7,
    Structure = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsCodec {
    /// IEEE half values, `V = 16`.
    Fp16 = 0,
    /// Sign, 8 exponent bits and `22 - D` mantissa bits, `W = 32`.
    E8my = 1,
    /// Lossless FP32 values, `W = 64`.
    Fp32Embed = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsPermMode {
    /// No sorting.
    None = 0,
    /// Rows sorted within σ-blocks; SpMV output is in sorted order.
    Explicit = 1,
    /// Rows sorted within σ-blocks; SpMV output is in original order.
    Implicit = 2,
}

/// Word layout and slice structure for `ps_packsell_build`. `codec` holds a
/// `PsCodec` value and `mode` a `PsPermMode` value.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsBuildOptions {
    pub word_bits: u32,
    pub delta_bits: u32,
    pub codec: u32,
    pub slice: usize,
    pub sigma: usize,
    pub mode: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PsFootprint {
    pub pack_bits: u64,
    pub sell_equiv_bits: u64,
    pub overhead_bits: u64,
    pub ratio: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PsCounts {
    pub nnz_real: u64,
    pub n_dummy: u64,
    pub n_padding: u64,
}

/// A CSR matrix with `f64` values.
pub struct PsCsr(CsrMatrix);

/// A PackSELL matrix.
pub struct PsPackSell(PackSellMatrix);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> PsStatus {
    match e {
        Error::Io(_) => PsStatus::Io,
        Error::Parse { .. } => PsStatus::Parse,
        Error::DimensionMismatch { .. } => PsStatus::DimensionMismatch,
        Error::ZeroRow { .. } | Error::ZeroDiagonal { .. } | Error::InvalidArgument(_) => PsStatus::InvalidArgument,
        Error::Codec(_) => PsStatus::Codec,
        Error::Structure(_) => PsStatus::Structure,
        Error::Container(_) => PsStatus::Container,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PsStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            PsStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| p.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            set_error(format!("panic: {msg}"));
            PsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidArgument("path is not valid UTF-8".into())))
}

// Enum values arrive as plain integers so that out-of-range input from C
// is an error instead of undefined behaviour.
fn codec(c: u32) -> Result<Codec, Failure> {
    match c {
        c if c == PsCodec::Fp16 as u32 => Ok(Codec::Fp16Embed),
        c if c == PsCodec::E8my as u32 => Ok(Codec::E8my),
        c if c == PsCodec::Fp32Embed as u32 => Ok(Codec::Fp32Embed),
        _ => Err(Error::InvalidArgument(format!("unknown codec {c}")).into()),
    }
}

fn mode(m: u32) -> Result<PermMode, Failure> {
    match m {
        m if m == PsPermMode::None as u32 => Ok(PermMode::None),
        m if m == PsPermMode::Explicit as u32 => Ok(PermMode::Explicit),
        m if m == PsPermMode::Implicit as u32 => Ok(PermMode::Implicit),
        _ => Err(Error::InvalidArgument(format!("unknown permutation mode {m}")).into()),
    }
}

/// Description of the last failure on this thread (empty after a
/// successful call). The pointer stays valid until the next call into this
/// library on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reads a Matrix Market file (`coordinate`, `real`/`integer`,
/// `general`/`symmetric`).
///
/// # Safety
/// `file` must be a NUL-terminated string and `out_matrix` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_csr_from_mtx_file(file: *const c_char, out_matrix: *mut *mut PsCsr) -> PsStatus {
    guard(|| {
        let (coo, _) = mtx::read_path(path(file)?)?;
        let m = Box::into_raw(Box::new(PsCsr(coo.to_csr())));
        out(out_matrix, m, "out_matrix")
    })
}

/// Builds a CSR matrix from 0-based triplets; duplicates are summed.
///
/// # Safety
/// `rows`, `cols` and `values` must each point to `nnz` elements and
/// `out_matrix` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_csr_from_triplets(
    n_rows: usize,
    n_cols: usize,
    nnz: usize,
    rows: *const usize,
    cols: *const usize,
    values: *const f64,
    out_matrix: *mut *mut PsCsr,
) -> PsStatus {
    guard(|| {
        let r = slice(rows, nnz, "rows")?;
        let c = slice(cols, nnz, "cols")?;
        let v = slice(values, nnz, "values")?;
        let trip = r.iter().zip(c).zip(v).map(|((&i, &j), &x)| (i, j, x));
        let m = CsrMatrix::from_triplets(n_rows, n_cols, trip)?;
        out(out_matrix, Box::into_raw(Box::new(PsCsr(m))), "out_matrix")
    })
}

/// # Safety
/// `matrix` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_csr_free(matrix: *mut PsCsr) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// # Safety
/// `matrix` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_csr_dims(
    matrix: *const PsCsr,
    n_rows: *mut usize,
    n_cols: *mut usize,
    nnz: *mut usize,
) -> PsStatus {
    guard(|| {
        let m = &deref(matrix, "matrix")?.0;
        out(n_rows, m.n_rows(), "n_rows")?;
        out(n_cols, m.n_cols(), "n_cols")?;
        out(nnz, m.nnz(), "nnz")
    })
}

/// `y = A x` in `f64`.
///
/// # Safety
/// `x` and `y` must point to `x_len` and `y_len` elements.
#[no_mangle]
pub unsafe extern "C" fn ps_csr_spmv_f64(
    matrix: *const PsCsr,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> PsStatus {
    guard(|| {
        let m = &deref(matrix, "matrix")?.0;
        m.spmv_into(slice(x, x_len, "x")?, slice_mut(y, y_len, "y")?)?;
        Ok(())
    })
}

/// FP16 values, `W = 32`, `D = 15`, `C = 32`, `σ = 256`, implicit
/// permutation.
#[no_mangle]
pub extern "C" fn ps_build_options_default() -> PsBuildOptions {
    PsBuildOptions {
        word_bits: 32,
        delta_bits: 15,
        codec: PsCodec::Fp16 as u32,
        slice: 32,
        sigma: 256,
        mode: PsPermMode::Implicit as u32,
    }
}

/// Converts a CSR matrix to PackSELL.
///
/// # Safety
/// `matrix` and `options` must be valid; `out_matrix` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_build(
    matrix: *const PsCsr,
    options: *const PsBuildOptions,
    out_matrix: *mut *mut PsPackSell,
) -> PsStatus {
    guard(|| {
        let a = &deref(matrix, "matrix")?.0;
        let o = deref(options, "options")?;
        let fmt = PackFormat::new(o.word_bits, o.delta_bits, codec(o.codec)?)?;
        let opts = BuildOptions {
            slice: o.slice,
            sigma: o.sigma,
            mode: mode(o.mode)?,
            ..BuildOptions::new(fmt)
        };
        let (p, _) = PackSellMatrix::build_with(a, &opts)?;
        out(out_matrix, Box::into_raw(Box::new(PsPackSell(p))), "out_matrix")
    })
}

/// # Safety
/// `matrix` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_free(matrix: *mut PsPackSell) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// # Safety
/// `matrix` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_dims(matrix: *const PsPackSell, n_rows: *mut usize, n_cols: *mut usize) -> PsStatus {
    guard(|| {
        let m = &deref(matrix, "matrix")?.0;
        out(n_rows, m.n_rows(), "n_rows")?;
        out(n_cols, m.n_cols(), "n_cols")
    })
}

/// Real, dummy and padding word counts.
///
/// # Safety
/// `matrix` must be a live handle and `counts` valid.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_counts(matrix: *const PsPackSell, counts: *mut PsCounts) -> PsStatus {
    guard(|| {
        let c = deref(matrix, "matrix")?.0.counts();
        let v = PsCounts {
            nnz_real: c.nnz_real as u64,
            n_dummy: c.n_dummy as u64,
            n_padding: c.n_padding as u64,
        };
        out(counts, v, "counts")
    })
}

/// Footprint against the equivalent SELL matrix.
///
/// # Safety
/// `matrix` must be a live handle and `footprint` valid.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_footprint(matrix: *const PsPackSell, footprint: *mut PsFootprint) -> PsStatus {
    guard(|| {
        let f = deref(matrix, "matrix")?.0.footprint();
        let v = PsFootprint {
            pack_bits: f.pack_bits,
            sell_equiv_bits: f.sell_equiv_bits,
            overhead_bits: f.overhead_bits,
            ratio: f.ratio,
        };
        out(footprint, v, "footprint")
    })
}

/// `y = A x` with `f64` vectors. With explicit permutation `y` is in sorted
/// row order.
///
/// # Safety
/// `x` and `y` must point to `x_len` and `y_len` elements.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_spmv_f64(
    matrix: *const PsPackSell,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> PsStatus {
    guard(|| {
        let m = &deref(matrix, "matrix")?.0;
        m.spmv_into(slice(x, x_len, "x")?, slice_mut(y, y_len, "y")?)?;
        Ok(())
    })
}

/// `y = A x` with `f32` vectors.
///
/// # Safety
/// `x` and `y` must point to `x_len` and `y_len` elements.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_spmv_f32(
    matrix: *const PsPackSell,
    x: *const f32,
    x_len: usize,
    y: *mut f32,
    y_len: usize,
) -> PsStatus {
    guard(|| {
        let m = &deref(matrix, "matrix")?.0;
        m.spmv_into(slice(x, x_len, "x")?, slice_mut(y, y_len, "y")?)?;
        Ok(())
    })
}

/// Writes a `.psell` container.
///
/// # Safety
/// `matrix` must be a live handle and `file` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_write(matrix: *const PsPackSell, file: *const c_char) -> PsStatus {
    guard(|| {
        let m = &deref(matrix, "matrix")?.0;
        container::write_path(m, path(file)?)?;
        Ok(())
    })
}

/// Reads a `.psell` container.
///
/// # Safety
/// `file` must be a NUL-terminated string and `out_matrix` valid.
#[no_mangle]
pub unsafe extern "C" fn ps_packsell_read(file: *const c_char, out_matrix: *mut *mut PsPackSell) -> PsStatus {
    guard(|| {
        let m = container::read_path(path(file)?)?;
        out(out_matrix, Box::into_raw(Box::new(PsPackSell(m))), "out_matrix")
    })
}

/// Packs one word. `has_value = false` makes a dummy carrying `delta`.
/// `codec_id` is a `PsCodec` value.
///
/// # Safety
/// `word` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_pack_word(
    word_bits: u32,
    delta_bits: u32,
    codec_id: u32,
    has_value: bool,
    value: f64,
    delta: u64,
    word: *mut u64,
) -> PsStatus {
    guard(|| {
        let fmt = PackFormat::new(word_bits, delta_bits, codec(codec_id)?)?;
        let w = fmt.pack(has_value.then_some(value), delta)?;
        out(word, w.0, "word")
    })
}

/// Unpacks one word into its decoded value, delta and flag.
///
/// # Safety
/// The out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_unpack_word(
    word_bits: u32,
    delta_bits: u32,
    codec_id: u32,
    word: u64,
    value: *mut f64,
    delta: *mut u64,
    has_value: *mut bool,
) -> PsStatus {
    guard(|| {
        let fmt = PackFormat::new(word_bits, delta_bits, codec(codec_id)?)?;
        let u = fmt.unpack(PackedWord(word));
        out(value, u.value, "value")?;
        out(delta, u.delta, "delta")?;
        out(has_value, u.has_value, "has_value")
    })
}
