//! Conjugate-gradient solvers: PCG, flexible CG, and inner-outer CG where a
//! fixed number of low-precision PCG iterations precondition an FP64
//! flexible CG.
//!
//! All dot products and norms are sequential `f64` reductions so residual
//! histories do not depend on the thread count.

use crate::codec::PackFormat;
use crate::error::{Error, Result};
use crate::kernel::SpmvKernel;
use crate::matrix::CsrMatrix;
use crate::packsell::PackSellMatrix;
use crate::scalar::Scalar;
use crate::sell::{PermMode, SellMatrix, DEFAULT_SIGMA, DEFAULT_SLICE};
use half::f16;
use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

/// Times the recurred residual may pass the tolerance while the true
/// residual does not before the solver gives up.
const MAX_AUDITS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Pcg,
    Fcg,
    Iocg,
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcg" => Ok(SolverKind::Pcg),
            "fcg" => Ok(SolverKind::Fcg),
            "iocg" => Ok(SolverKind::Iocg),
            _ => Err(Error::invalid(format!("unknown solver '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "fp32" | "real32" => Ok(Precision::F32),
            "f64" | "fp64" | "real64" => Ok(Precision::F64),
            _ => Err(Error::invalid(format!("unknown precision '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    Identity,
    Jacobi,
}

impl FromStr for Preconditioner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "none" => Ok(Preconditioner::Identity),
            "jacobi" => Ok(Preconditioner::Jacobi),
            _ => Err(Error::invalid(format!("unknown preconditioner '{s}'"))),
        }
    }
}

/// Storage used for `A` inside a solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Csr64,
    Sell64,
    Sell32,
    Sell16,
    PackSellFp16,
    /// E8MY with the given mantissa bits.
    PackSellE8m(u32),
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csr64" => Ok(Backend::Csr64),
            "sell64" => Ok(Backend::Sell64),
            "sell32" => Ok(Backend::Sell32),
            "sell16" => Ok(Backend::Sell16),
            "packsell-fp16" => Ok(Backend::PackSellFp16),
            _ => match s.strip_prefix("packsell-e8m").map(str::parse::<u32>) {
                Some(Ok(y)) => {
                    PackFormat::e8m(y)?;
                    Ok(Backend::PackSellE8m(y))
                }
                _ => Err(Error::invalid(format!("unknown backend '{s}'"))),
            },
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Csr64 => write!(f, "csr64"),
            Backend::Sell64 => write!(f, "sell64"),
            Backend::Sell32 => write!(f, "sell32"),
            Backend::Sell16 => write!(f, "sell16"),
            Backend::PackSellFp16 => write!(f, "packsell-fp16"),
            Backend::PackSellE8m(y) => write!(f, "packsell-e8m{y}"),
        }
    }
}

impl Serialize for Backend {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A matrix stored through one of the [`Backend`]s. SELL-based backends use
/// `C = 32`, `σ = 256` with implicit permutation so vectors keep their
/// original ordering.
pub enum Operator {
    Csr(CsrMatrix),
    Sell64(SellMatrix<f64>),
    Sell32(SellMatrix<f32>),
    Sell16(SellMatrix<f16>),
    Pack(PackSellMatrix),
}

impl Operator {
    pub fn build(a: &CsrMatrix, backend: Backend) -> Result<Self> {
        let (c, s, m) = (DEFAULT_SLICE, DEFAULT_SIGMA, PermMode::Implicit);
        Ok(match backend {
            Backend::Csr64 => Operator::Csr(a.clone()),
            Backend::Sell64 => Operator::Sell64(SellMatrix::build(a, c, s, m)?),
            Backend::Sell32 => Operator::Sell32(SellMatrix::build(a, c, s, m)?),
            Backend::Sell16 => Operator::Sell16(SellMatrix::build(a, c, s, m)?),
            Backend::PackSellFp16 => Operator::Pack(PackSellMatrix::build(a, c, s, PackFormat::fp16(), m)?),
            Backend::PackSellE8m(y) => {
                Operator::Pack(PackSellMatrix::build(a, c, s, PackFormat::e8m(y)?, m)?)
            }
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Operator::Csr(a) => a.n_rows(),
            Operator::Sell64(a) => a.n_rows(),
            Operator::Sell32(a) => a.n_rows(),
            Operator::Sell16(a) => a.n_rows(),
            Operator::Pack(a) => a.n_rows(),
        }
    }

    pub fn apply<T: Scalar>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        match self {
            Operator::Csr(a) => a.spmv_into(x, y),
            Operator::Sell64(a) => a.spmv_into(x, y),
            Operator::Sell32(a) => a.spmv_into(x, y),
            Operator::Sell16(a) => a.spmv_into(x, y),
            Operator::Pack(a) => SpmvKernel::spmv_into(a, x, y),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    pub solver: SolverKind,
    pub tol: f64,
    pub max_outer: usize,
    /// Inner PCG iterations per outer step (IO-CG only).
    pub m_in: usize,
    pub inner_precision: Precision,
    /// Storage of `A` for PCG and for the IO-CG inner solver. The outer
    /// IO-CG loop always uses the FP64 matrix.
    pub a_backend: Backend,
    pub preconditioner: Preconditioner,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            solver: SolverKind::Pcg,
            tol: 1e-9,
            max_outer: 10_000,
            m_in: 50,
            inner_precision: Precision::F32,
            a_backend: Backend::Csr64,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.solver == SolverKind::Iocg && self.m_in == 0 {
            return Err(Error::invalid("m_in must be at least 1"));
        }
        if self.max_outer == 0 {
            return Err(Error::invalid("max_outer must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub outer_iters: usize,
    pub total_inner_iters: usize,
    /// Recurred `‖r‖₂ / ‖b‖₂`, starting with the initial residual.
    pub residual_history: Vec<f64>,
    /// `‖b − A x‖₂ / ‖b‖₂` with the unquantized `A` in `f64`.
    pub final_true_relres: f64,
    pub elapsed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<String>,
}

/// Right-hand side with entries uniform in `[0, 1)` from a ChaCha8 stream
/// seeded with `seed`, and a zero initial guess.
pub fn make_rhs_and_x0(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = (0..n).map(|_| rng.gen::<f64>()).collect();
    (b, vec![0.0; n])
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.to_f64() * y.to_f64()).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_relres(a: &CsrMatrix, b: &[f64], x: &[f64], bnorm: f64) -> Result<(f64, Vec<f64>)> {
    let ax = a.spmv(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    Ok((norm2(&r) / bnorm, r))
}

/// Diagonal preconditioner data (`1/a_ii`), or `None` for identity.
fn jacobi_inverse(a: &CsrMatrix, kind: Preconditioner) -> Result<Option<Vec<f64>>> {
    match kind {
        Preconditioner::Identity => Ok(None),
        Preconditioner::Jacobi => a
            .diagonal()
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                if d == 0.0 {
                    Err(Error::ZeroDiagonal { row: i })
                } else {
                    Ok(1.0 / d)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
    }
}

fn apply_diag<T: Scalar>(inv: Option<&[T]>, r: &[T], z: &mut [T]) {
    match inv {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((z, &r), &d)| *z = r * d),
        None => z.copy_from_slice(r),
    }
}

fn zero_rhs_report(start: Instant) -> SolveReport {
    SolveReport {
        converged: true,
        outer_iters: 0,
        total_inner_iters: 0,
        residual_history: vec![0.0],
        final_true_relres: 0.0,
        elapsed: start.elapsed().as_secs_f64(),
        breakdown: None,
    }
}

fn check_square(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::invalid("solver needs a square matrix"));
    }
    if b.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Preconditioned CG in `f64` with `A` applied through `op`.
///
/// Stops when the recurred relative residual drops below `tol`; the true
/// residual against `a_true` is then checked and, if it is not below `tol`,
/// the residual is replaced by the true one and the iteration restarts.
pub fn pcg(a_true: &CsrMatrix, op: &Operator, b: &[f64], cfg: &SolveConfig) -> Result<(SolveReport, Vec<f64>)> {
    cfg.validate()?;
    check_square(a_true, b)?;
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((zero_rhs_report(start), x));
    }
    let inv = jacobi_inverse(a_true, cfg.preconditioner)?;
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    apply_diag(inv.as_deref(), &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    let mut audits = 0;
    let mut converged = false;
    let mut breakdown = None;
    let mut iters = 0;
    let mut true_res = f64::NAN;

    while iters < cfg.max_outer {
        iters += 1;
        op.apply(&p, &mut q)?;
        let pq = dot(&p, &q);
        if !pq.is_finite() || pq <= 0.0 {
            breakdown = Some(format!("pᵀAp = {pq:e} at iteration {iters}"));
            break;
        }
        let alpha = rz / pq;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&q).for_each(|(r, q)| *r -= alpha * q);
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel < cfg.tol {
            let (t, tr) = true_relres(a_true, b, &x, bnorm)?;
            true_res = t;
            if t < cfg.tol {
                converged = true;
                break;
            }
            audits += 1;
            if audits >= MAX_AUDITS {
                break;
            }
            debug!("pcg: true residual {t:e} above tol at iteration {iters}; restarting");
            r = tr;
            apply_diag(inv.as_deref(), &r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        apply_diag(inv.as_deref(), &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    if !converged {
        true_res = true_relres(a_true, b, &x, bnorm)?.0;
    }
    let report = SolveReport {
        converged,
        outer_iters: iters,
        total_inner_iters: 0,
        residual_history: history,
        final_true_relres: true_res,
        elapsed: start.elapsed().as_secs_f64(),
        breakdown,
    };
    Ok((report, x))
}

/// Flexible CG with one-direction truncation and a preconditioner that may
/// change between calls: `z_k = P(r_k)`,
/// `β_k = z_kᵀ(r_k − r_{k−1}) / z_{k−1}ᵀr_{k−1}`, `p_k = z_k + β_k p_{k−1}`,
/// `α_k = p_kᵀr_k / p_kᵀAp_k`.
///
/// `precond` returns the number of inner iterations it performed, summed
/// into `total_inner_iters`.
pub fn fcg<P>(
    a_true: &CsrMatrix,
    op: &Operator,
    b: &[f64],
    cfg: &SolveConfig,
    mut precond: P,
) -> Result<(SolveReport, Vec<f64>)>
where
    P: FnMut(&[f64], &mut [f64]) -> Result<usize>,
{
    cfg.validate()?;
    check_square(a_true, b)?;
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((zero_rhs_report(start), x));
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut inner = precond(&r, &mut z)?;
    let mut p = z.clone();
    let mut zr = dot(&z, &r);
    let mut history = vec![1.0];
    let mut audits = 0;
    let mut converged = false;
    let mut breakdown = None;
    let mut iters = 0;
    let mut true_res = f64::NAN;
    let mut z_new = vec![0.0; n];

    while iters < cfg.max_outer {
        iters += 1;
        op.apply(&p, &mut q)?;
        let pq = dot(&p, &q);
        if !pq.is_finite() || pq <= 0.0 {
            breakdown = Some(format!("pᵀAp = {pq:e} at iteration {iters}"));
            break;
        }
        let alpha = dot(&p, &r) / pq;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        let r_old = r.clone();
        r.iter_mut().zip(&q).for_each(|(r, q)| *r -= alpha * q);
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel < cfg.tol {
            let (t, tr) = true_relres(a_true, b, &x, bnorm)?;
            true_res = t;
            if t < cfg.tol {
                converged = true;
                break;
            }
            audits += 1;
            if audits >= MAX_AUDITS {
                break;
            }
            debug!("fcg: true residual {t:e} above tol at iteration {iters}; restarting");
            r = tr;
            inner += precond(&r, &mut z)?;
            p.copy_from_slice(&z);
            zr = dot(&z, &r);
            continue;
        }
        inner += precond(&r, &mut z_new)?;
        let diff: f64 = z_new
            .iter()
            .zip(r.iter().zip(&r_old))
            .map(|(z, (r, ro))| z * (r - ro))
            .sum();
        let beta = diff / zr;
        p.iter_mut().zip(&z_new).for_each(|(p, z)| *p = z + beta * *p);
        std::mem::swap(&mut z, &mut z_new);
        zr = dot(&z, &r);
    }
    if !converged {
        true_res = true_relres(a_true, b, &x, bnorm)?.0;
    }
    let report = SolveReport {
        converged,
        outer_iters: iters,
        total_inner_iters: inner,
        residual_history: history,
        final_true_relres: true_res,
        elapsed: start.elapsed().as_secs_f64(),
        breakdown,
    };
    Ok((report, x))
}

/// Exactly `m_in` PCG iterations on `A z = rhs` from `z = 0` with vectors in
/// precision `T` (early exit only on breakdown or an exactly zero
/// residual). Returns the iterations performed.
pub fn inner_pcg<T: Scalar>(
    op: &Operator,
    inv_diag: Option<&[T]>,
    rhs: &[f64],
    m_in: usize,
    z_out: &mut [f64],
) -> Result<usize> {
    let n = rhs.len();
    let mut r: Vec<T> = rhs.iter().map(|&v| T::from_f64(v)).collect();
    let mut z = vec![T::ZERO; n];
    let mut w = vec![T::ZERO; n];
    let mut q = vec![T::ZERO; n];
    apply_diag(inv_diag, &r, &mut w);
    let mut p = w.clone();
    let mut rw = dot(&r, &w);
    let mut done = 0;
    for it in 0..m_in {
        if rw == 0.0 {
            break;
        }
        op.apply(&p, &mut q)?;
        let pq = dot(&p, &q);
        if !pq.is_finite() || pq <= 0.0 {
            debug!("inner pcg breakdown at iteration {it}: pᵀAp = {pq:e}; returning current iterate");
            break;
        }
        let alpha = T::from_f64(rw / pq);
        z.iter_mut().zip(&p).for_each(|(z, &p)| *z = *z + alpha * p);
        r.iter_mut().zip(&q).for_each(|(r, &q)| *r = *r - alpha * q);
        apply_diag(inv_diag, &r, &mut w);
        let rw_new = dot(&r, &w);
        let beta = T::from_f64(rw_new / rw);
        rw = rw_new;
        p.iter_mut().zip(&w).for_each(|(p, &w)| *p = w + beta * *p);
        done += 1;
    }
    z_out.iter_mut().zip(&z).for_each(|(o, v)| *o = v.to_f64());
    Ok(done)
}

/// Inner-outer CG: FP64 flexible CG on `a` whose preconditioner is
/// `cfg.m_in` PCG iterations in `cfg.inner_precision` with `A` stored as
/// `cfg.a_backend`.
pub fn iocg(a: &CsrMatrix, b: &[f64], cfg: &SolveConfig) -> Result<(SolveReport, Vec<f64>)> {
    cfg.validate()?;
    check_square(a, b)?;
    let outer = Operator::Csr(a.clone());
    let inner = Operator::build(a, cfg.a_backend)?;
    let inv = jacobi_inverse(a, cfg.preconditioner)?;
    let m_in = cfg.m_in;
    match cfg.inner_precision {
        Precision::F64 => {
            let inv = inv.as_deref();
            fcg(a, &outer, b, cfg, |r, z| inner_pcg::<f64>(&inner, inv, r, m_in, z))
        }
        Precision::F32 => {
            let inv32: Option<Vec<f32>> = inv.map(|d| d.iter().map(|&v| v as f32).collect());
            let inv32 = inv32.as_deref();
            fcg(a, &outer, b, cfg, |r, z| inner_pcg::<f32>(&inner, inv32, r, m_in, z))
        }
    }
}

/// Runs the configured solver. FCG uses the configured diagonal
/// preconditioner as its (fixed) `P`.
pub fn solve(a: &CsrMatrix, b: &[f64], cfg: &SolveConfig) -> Result<(SolveReport, Vec<f64>)> {
    match cfg.solver {
        SolverKind::Pcg => {
            let op = Operator::build(a, cfg.a_backend)?;
            pcg(a, &op, b, cfg)
        }
        SolverKind::Fcg => {
            let op = Operator::build(a, cfg.a_backend)?;
            let inv = jacobi_inverse(a, cfg.preconditioner)?;
            fcg(a, &op, b, cfg, |r, z| {
                apply_diag(inv.as_deref(), r, z);
                Ok(0)
            })
        }
        SolverKind::Iocg => iocg(a, b, cfg),
    }
}
