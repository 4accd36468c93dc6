//! Backward error, the 2·nnz FLOP convention and the SpMV benchmark harness.

use crate::error::{Error, Result};
use crate::kernel::SpmvKernel;
use crate::matrix::CsrMatrix;
use crate::scalar::Scalar;
use crate::sell::unpermute;
use serde::Serialize;
use std::time::Instant;

pub const DEFAULT_REPS: usize = 10_000;
pub const DEFAULT_WARMUP: usize = 100;

/// `‖y − A x‖∞ / (‖A‖∞ ‖x‖∞)`, everything evaluated in `f64`.
pub fn backward_error<T: Scalar>(a: &CsrMatrix, x: &[T], y: &[T]) -> Result<f64> {
    if y.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows(),
            got: y.len(),
        });
    }
    let x64: Vec<f64> = x.iter().map(|v| v.to_f64()).collect();
    let ax = a.spmv(&x64)?;
    let num = y
        .iter()
        .zip(&ax)
        .map(|(yi, ri)| (yi.to_f64() - ri).abs())
        .fold(0.0, f64::max);
    let xnorm = x64.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let den = a.norm_inf() * xnorm;
    if den == 0.0 {
        return Err(Error::invalid("backward error undefined: ‖A‖‖x‖ = 0"));
    }
    Ok(num / den)
}

/// Giga-FLOPS with two operations per real nonzero.
pub fn gflops(nnz_real: usize, seconds: f64) -> f64 {
    2.0 * nnz_real as f64 / seconds / 1e9
}

#[derive(Clone, Debug, Serialize)]
pub struct SpmvReport {
    pub format_name: String,
    pub precision: &'static str,
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz_real: usize,
    pub reps: usize,
    pub warmup: usize,
    pub threads: usize,
    /// Mean seconds per call.
    pub elapsed_per_call: f64,
    pub gflops: f64,
    pub backward_error: f64,
    /// Matrix arrays plus one read of `x` and one write of `y`.
    pub bytes_touched_estimate: usize,
}

/// Times `reps` calls after `warmup` untimed ones and measures the backward
/// error of the last output against `source`.
///
/// `order` maps storage rows back to original rows for kernels whose output
/// is in storage order (explicitly permuted matrices).
pub fn bench_spmv<K: SpmvKernel, T: Scalar>(
    kernel: &K,
    name: &str,
    source: &CsrMatrix,
    order: Option<&[usize]>,
    x: &[T],
    reps: usize,
    warmup: usize,
) -> Result<(SpmvReport, Vec<T>)> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    let mut y = vec![T::ZERO; kernel.n_rows()];
    for _ in 0..warmup {
        kernel.spmv_into(x, &mut y)?;
    }
    let start = Instant::now();
    for _ in 0..reps {
        kernel.spmv_into(x, &mut y)?;
    }
    let per_call = start.elapsed().as_secs_f64() / reps as f64;
    let y = match order {
        Some(o) => unpermute(&y, o),
        None => y,
    };
    let be = backward_error(source, x, &y)?;
    let report = SpmvReport {
        format_name: name.to_string(),
        precision: T::NAME,
        n_rows: kernel.n_rows(),
        n_cols: kernel.n_cols(),
        nnz_real: kernel.nnz_real(),
        reps,
        warmup,
        threads: rayon::current_num_threads(),
        elapsed_per_call: per_call,
        gflops: gflops(kernel.nnz_real(), per_call.max(f64::MIN_POSITIVE)),
        backward_error: be,
        bytes_touched_estimate: kernel.matrix_bytes() + (kernel.n_cols() + kernel.n_rows()) * T::BYTES,
    };
    Ok((report, y))
}
