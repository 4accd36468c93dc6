//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails or exceeds its time budget.

mod common;

use common::{bits_f32, bits_f64, brute_force_dummies, quantized, random_full_rows, random_matrix, rng, Shape};
use half::f16;
use packsell::codec::{Codec, PackedWord};
use packsell::metrics::backward_error;
use packsell::packsell::BuildOptions;
use packsell::solvers::{self, make_rhs_and_x0, Backend, Precision, SolveConfig, SolveReport, SolverKind};
use packsell::stencil::poisson3d;
use packsell::{container, CsrMatrix, PackFormat, PackSellMatrix, PermMode, SellMatrix};
use rand::Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const MODES: [PermMode; 3] = [PermMode::None, PermMode::Explicit, PermMode::Implicit];

// ---------------------------------------------------------------------------
// 1. Codec round trip

/// Independent E8MY reference on FP32 bits: round half away from zero at
/// bit `D + 1`, flush subnormals, `None` on overflow.
fn e8my_oracle(v: f32, d: u32) -> Option<u32> {
    let bits = v.to_bits();
    let sign = bits & 0x8000_0000;
    let mag = bits & 0x7fff_ffff;
    if mag < 0x0080_0000 {
        return Some(sign);
    }
    let rounded = (mag + (1 << d)) & !((1u32 << (d + 1)) - 1);
    (rounded < 0x7f80_0000).then_some(sign | rounded)
}

/// Reference value pattern (as FP32 bits of the decoded value) or `None`
/// when the value must be rejected.
fn value_oracle(fmt: &PackFormat, v: f32) -> Option<u32> {
    match fmt.codec() {
        Codec::Fp16Embed => {
            let h = f16::from_f32(v);
            (!h.is_infinite()).then(|| h.to_f32().to_bits())
        }
        Codec::E8my => e8my_oracle(v, fmt.delta_bits()),
        Codec::Fp32Embed => Some(v.to_bits()),
    }
}

fn sample_f32(r: &mut impl Rng) -> f32 {
    loop {
        let v = match r.gen_range(0..3) {
            0 => f32::from_bits(r.gen()),
            1 => r.gen_range(-1.0f32..1.0),
            _ => r.gen_range(-1.0f32..1.0) * 2f32.powi(r.gen_range(-30..30)),
        };
        if v.is_finite() {
            return v;
        }
    }
}

fn check_word(fmt: &PackFormat, value: Option<f64>, delta: u64) -> Result<(), String> {
    let w = fmt.pack(value, delta).map_err(|e| format!("{fmt}: pack({value:?}, {delta}): {e}"))?;
    let u = fmt.unpack(w);
    let want = match value {
        Some(v) => fmt.quantize(v).unwrap(),
        None => 0.0,
    };
    ensure(
        u.has_value == value.is_some() && u.delta == delta && u.value.to_bits() == want.to_bits(),
        || format!("{fmt}: ({value:?}, {delta}) -> {u:?}"),
    )?;
    let again = fmt.pack(u.has_value.then_some(u.value), u.delta).unwrap();
    ensure(again == w, || format!("{fmt}: repack {w:?} -> {again:?}"))
}

fn codec_round_trip() -> Outcome {
    let mut formats = vec![PackFormat::fp16()];
    for d in [1, 2, 6, 12] {
        formats.push(PackFormat::new(32, d, Codec::E8my).unwrap());
    }
    formats.push(PackFormat::fp32_embed());
    let mut r = rng(1);
    let (mut words, mut values, mut rejected) = (0u64, 0u64, 0u64);
    for fmt in &formats {
        let d = fmt.delta_bits();
        let probe: Vec<f64> = (0..64).map(|_| sample_f32(&mut r).clamp(-6e4, 6e4) as f64).collect();
        // Every direct delta (capped at 2^20 for wide delta fields, which are
        // then sampled above the cap).
        let direct = (1u64 << d.min(20)) - 1;
        for delta in 0..=direct {
            check_word(fmt, Some(probe[delta as usize % probe.len()]), delta)?;
            words += 1;
        }
        if d > 20 {
            for _ in 0..100_000 {
                let delta = r.gen_range(1u64 << 20..=fmt.max_direct_delta());
                check_word(fmt, Some(probe[0]), delta)?;
                words += 1;
            }
            check_word(fmt, Some(probe[1]), fmt.max_direct_delta())?;
        }
        // Dummy deltas from 2^D up to 2^20, plus the top of the dummy range.
        let lo = 1u64 << d;
        let hi = (1u64 << 20).max(lo);
        for delta in [lo, hi, fmt.max_dummy_delta()] {
            check_word(fmt, None, delta)?;
        }
        for _ in 0..100_000 {
            check_word(fmt, None, r.gen_range(lo..=hi))?;
            words += 1;
        }
        ensure(fmt.pack(None, fmt.max_dummy_delta() + 1).is_err(), || format!("{fmt}: dummy overflow accepted"))?;
        ensure(fmt.pack(Some(1.0), fmt.max_direct_delta() + 1).is_err(), || format!("{fmt}: delta overflow accepted"))?;

        for _ in 0..1_000_000 {
            let v = sample_f32(&mut r);
            let delta = r.gen_range(0..=fmt.max_direct_delta());
            match (value_oracle(fmt, v), fmt.pack(Some(v as f64), delta)) {
                (Some(want), Ok(w)) => {
                    let u = fmt.unpack(w);
                    ensure(
                        u.has_value && u.delta == delta && (u.value as f32).to_bits() == want && u.value == (u.value as f32) as f64,
                        || format!("{fmt}: {v:e} -> {u:?}, expected bits {want:#010x}"),
                    )?;
                    ensure(fmt.pack(Some(u.value), u.delta).unwrap() == w, || format!("{fmt}: repack of {v:e}"))?;
                    values += 1;
                }
                (None, Err(_)) => rejected += 1,
                (want, got) => return Err(format!("{fmt}: {v:e}: oracle {want:?}, codec {got:?}")),
            }
        }
    }
    Ok(format!(
        "{} formats, {words} delta words, {values} values round-tripped, {rejected} overflows rejected as expected",
        formats.len()
    ))
}

// ---------------------------------------------------------------------------
// 2. Bit-layout goldens

fn bit_goldens() -> Outcome {
    let fp16 = PackFormat::fp16();
    // Oracles assemble the fields by hand before comparing to the frozen words.
    // FP16 1.0: biased exponent 15, sign and mantissa zero.
    let half_one: u32 = 15 << 10;
    let one_fp16: u32 = (half_one << 16) | (3 << 1) | 1;
    let dummy: u32 = 70_000 << 1;
    let tenth = {
        let b = 0.1f32.to_bits();
        // Round at bit 3 (D + 1 for D = 2): add half an ulp of the kept part.
        (b + 0b100) & !0b111
    };
    ensure(one_fp16 == 0x3C00_0007, || format!("oracle gave {one_fp16:#x}"))?;
    ensure(dummy == 0x0002_22E0, || format!("oracle gave {dummy:#x}"))?;
    ensure(tenth == 0x3DCC_CCD0, || format!("oracle gave {tenth:#x}"))?;

    let w = fp16.pack(Some(1.0), 3).unwrap();
    ensure(w == PackedWord(0x3C00_0007), || format!("pack(1.0, 3) = {w:?}"))?;
    let u = fp16.unpack(w);
    ensure((u.value, u.delta, u.has_value) == (1.0, 3, true), || format!("{u:?}"))?;

    let w = fp16.pack(None, 70_000).unwrap();
    ensure(w == PackedWord(0x0002_22E0), || format!("dummy 70000 = {w:?}"))?;
    let u = fp16.unpack(w);
    ensure((u.value, u.delta, u.has_value) == (0.0, 70_000, false), || format!("{u:?}"))?;

    for fmt in [fp16, PackFormat::e8m(20).unwrap(), PackFormat::fp32_embed()] {
        let u = fmt.unpack(PackedWord(0));
        ensure((u.value, u.delta, u.has_value) == (0.0, 0, false), || format!("{fmt}: padding {u:?}"))?;
    }

    let e8m20 = PackFormat::e8m(20).unwrap();
    let pattern = e8m20.encode_value(0.1).unwrap();
    ensure((pattern << 3) as u32 == 0x3DCC_CCD0, || format!("E8M20(0.1) pattern {pattern:#x}"))?;
    let w = e8m20.pack(Some(0.1), 0).unwrap();
    ensure(w == PackedWord(0x3DCC_CCD1), || format!("word {w:?}"))?;
    let u = e8m20.unpack(w);
    ensure((u.value as f32).to_bits() == 0x3DCC_CCD0 && u.delta == 0 && u.has_value, || format!("{u:?}"))?;
    Ok("0x3C000007, 0x000222E0, 0x00000000, 0x3DCCCCD0 match hand-assembled fields".into())
}

// ---------------------------------------------------------------------------
// 3. SpMV equivalence

fn reorder<T: Copy>(y: Vec<T>, mode: PermMode, order: &[usize]) -> Vec<T> {
    if mode == PermMode::Explicit {
        packsell::sell::unpermute(&y, order)
    } else {
        y
    }
}

fn spmv_equivalence() -> Outcome {
    let mut r = rng(3);
    let lossy = [PackFormat::fp16(), PackFormat::e8m(20).unwrap(), PackFormat::e8m(12).unwrap()];
    let exact = PackFormat::fp32_embed();
    let quant: Vec<_> = lossy.iter().copied().chain([exact]).collect();
    let mut runs = 0;
    for k in 0..200 {
        let shape = if k % 2 == 0 { Shape::Banded } else { Shape::Scattered };
        let a = random_matrix(&mut r, 512, shape);
        let x: Vec<f64> = (0..a.n_cols()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let y64 = bits_f64(&a.spmv(&x).unwrap());
        let y32 = bits_f32(&a.spmv(&x32).unwrap());
        let qs: Vec<(PackFormat, Vec<u32>)> = quant
            .iter()
            .map(|f| (*f, bits_f32(&quantized(&a, f).spmv(&x32).unwrap())))
            .collect();
        for mode in MODES {
            for c in [1, 2, 32] {
                for sigma in [c, 256] {
                    let ctx = || format!("matrix {k} ({}x{}, nnz {}), {mode:?} C={c} σ={sigma}", a.n_rows(), a.n_cols(), a.nnz());
                                        let (s, o) = SellMatrix::<f64>::build_with_order(&a, c, sigma, mode).unwrap();
                    ensure(bits_f64(&reorder(s.spmv(&x).unwrap(), mode, &o)) == y64, || format!("SELL f64 differs: {}", ctx()))?;
                    let (s, o) = SellMatrix::<f32>::build_with_order(&a, c, sigma, mode).unwrap();
                    ensure(bits_f32(&reorder(s.spmv(&x32).unwrap(), mode, &o)) == y32, || format!("SELL f32 differs: {}", ctx()))?;
                    for (fmt, want) in &qs {
                        let opts = BuildOptions { slice: c, sigma, mode, ..BuildOptions::new(*fmt) };
                        let (p, o) = PackSellMatrix::build_with(&a, &opts).unwrap();
                        let y = bits_f32(&reorder(p.spmv(&x32).unwrap(), mode, &o));
                        ensure(&y == want, || format!("PackSELL {fmt} differs: {}", ctx()))?;
                        if fmt.codec() == Codec::Fp32Embed {
                            ensure(y == y32, || format!("fp32embed differs from CSR f32: {}", ctx()))?;
                        }
                    }
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("200 matrices, {runs} layouts, SELL f64/f32 and 4 PackSELL codecs bitwise equal"))
}

// ---------------------------------------------------------------------------
// 4. Dummy insertion on a gap of four

fn gap_of_four() -> Outcome {
    // Two rows, one slice of C = 2. Row 1 jumps from column 1 to column 5.
    let a = CsrMatrix::from_triplets(
        2,
        8,
        [(0, 0, 1.0), (0, 3, 2.0), (1, 1, 3.0), (1, 5, 4.0)],
    )
    .unwrap();
    let fmt = PackFormat::e8m(20).unwrap();
    ensure(fmt.delta_bits() == 2, || "E8M20 must have D = 2".into())?;
    let opts = BuildOptions {
        slice: 2,
        sigma: 2,
        mode: PermMode::None,
        k_left_override: Some(a.n_rows()),
        ..BuildOptions::new(fmt)
    };
    let (p, _) = PackSellMatrix::build_with(&a, &opts).unwrap();
    ensure(p.leftmost(0) == 0 && p.leftmost(1) == 0, || "leftmost offsets not forced to 0".into())?;
    let row1 = p.storage_row(1);
    let shape: Vec<(bool, u64)> = row1.iter().map(|e| (e.has_value, e.delta)).collect();
    ensure(shape == [(true, 1), (false, 4), (true, 0)], || format!("row 1 words {shape:?}"))?;
    ensure(row1[2].value == 4.0, || format!("real element after dummy: {:?}", row1[2]))?;
    // Row 0 has a gap of 3 < 2^D: no dummy, one padding word.
    let row0: Vec<(bool, u64)> = p.storage_row(0).iter().map(|e| (e.has_value, e.delta)).collect();
    ensure(row0 == [(true, 0), (true, 3), (false, 0)], || format!("row 0 words {row0:?}"))?;
    let counts = p.counts();
    ensure((counts.n_dummy, counts.n_padding) == (1, 1), || format!("{counts:?}"))?;
    let x: Vec<f32> = (0..8).map(|i| i as f32 + 1.0).collect();
    ensure(p.spmv(&x).unwrap() == vec![1.0 + 8.0, 6.0 + 24.0], || "SpMV result".into())?;
    Ok("gap 4 at D = 2 gives [delta 1 | dummy 4 | delta 0]; gap 3 stays direct".into())
}

// ---------------------------------------------------------------------------
// 5. Dummy counts

fn dummy_counts() -> Outcome {
    let mut r = rng(5);
    let mut total = 0;
    for k in 0..100 {
        let a = random_matrix(&mut r, 512, if k % 2 == 0 { Shape::Banded } else { Shape::Scattered });
        let mode = MODES[k % 3];
        let mut prev = usize::MAX;
        for d in 1..=15 {
            let fmt = PackFormat::new(32, d, Codec::E8my).unwrap();
            let opts = BuildOptions { mode, ..BuildOptions::new(fmt) };
            let (p, _) = PackSellMatrix::build_with(&a, &opts).unwrap();
            let got = p.counts().n_dummy;
            let want = brute_force_dummies(&a, p.sigma(), d);
            ensure(got == want, || format!("matrix {k}, D={d}: builder {got}, oracle {want}"))?;
            ensure(got <= prev, || format!("matrix {k}: n_dummy rose at D={d}"))?;
            prev = got;
            total += got;
        }
    }
    Ok(format!("100 matrices × D 1..15 agree with brute force ({total} dummies), non-increasing in D"))
}

// ---------------------------------------------------------------------------
// 6. Footprint

fn footprint() -> Outcome {
    let n: usize = 4096;
    let mut trip = Vec::new();
    for i in 0..n {
        for j in i.saturating_sub(2)..(i + 3).min(n) {
            trip.push((i, j, 1.0 / (1 + i + j) as f64));
        }
    }
    let a = CsrMatrix::from_triplets(n, n, trip).unwrap();
    let mut lines = Vec::new();
    for fmt in [PackFormat::fp16(), PackFormat::e8m(14).unwrap()] {
        let p = PackSellMatrix::build(&a, 32, 256, fmt, PermMode::Implicit).unwrap();
        ensure(p.counts().n_dummy == 0, || format!("{fmt}: unexpected dummies"))?;
        let f = p.footprint();
        let expected = fmt.word_bits() as f64 / (fmt.sell_value_bits() + 32) as f64;
        let per_element = (f.pack_bits - f.overhead_bits) as f64 / (f.sell_equiv_bits - f.overhead_bits) as f64;
        ensure((per_element - expected).abs() < 1e-12, || format!("{fmt}: per-element ratio {per_element}"))?;
        let slack = f.overhead_bits as f64 / f.sell_equiv_bits as f64;
        ensure((f.ratio - expected).abs() <= slack, || format!("{fmt}: ratio {} vs {expected} ± {slack}", f.ratio))?;
        lines.push(format!("{}: {:.4} (element {:.4})", fmt.name(), f.ratio, per_element));
    }
    Ok(format!(
        "{} (element ratios W/(value bits + 32))",
        lines.join(", ")
    ))
}

// ---------------------------------------------------------------------------
// 7. Backward error trend

fn backward_error_trend() -> Outcome {
    let mut r = rng(7);
    let ys = [10u32, 14, 18, 21];
    let mut sums = [0.0f64; 4];
    let mut fp16_sum = 0.0;
    let suite = 50;
    for _ in 0..suite {
        let a = random_full_rows(&mut r, 400).row_sum_scale().unwrap();
        let x: Vec<f32> = (0..a.n_cols()).map(|_| r.gen_range(-1.0f32..1.0)).collect();
        for (s, &y) in sums.iter_mut().zip(&ys) {
            let p = PackSellMatrix::build(&a, 32, 256, PackFormat::e8m(y).unwrap(), PermMode::Implicit).unwrap();
            *s += backward_error(&a, &x, &p.spmv(&x).unwrap()).unwrap();
        }
        let s16 = SellMatrix::<f16>::build(&a, 32, 256, PermMode::Implicit).unwrap();
        fp16_sum += backward_error(&a, &x, &s16.spmv(&x).unwrap()).unwrap();
    }
    let means: Vec<f64> = sums.iter().map(|s| s / suite as f64).collect();
    let fp16_mean = fp16_sum / suite as f64;
    for k in 1..means.len() {
        ensure(means[k] <= means[k - 1], || format!("mean rose from E8M{} to E8M{}: {means:?}", ys[k - 1], ys[k]))?;
    }
    ensure(means[3] * 10.0 <= fp16_mean, || format!("E8M21 {:e} vs FP16 SELL {fp16_mean:e}", means[3]))?;
    Ok(format!(
        "means E8M10 {:.2e}, E8M14 {:.2e}, E8M18 {:.2e}, E8M21 {:.2e}; FP16 SELL {:.2e} ({:.0}× E8M21)",
        means[0],
        means[1],
        means[2],
        means[3],
        fp16_mean,
        fp16_mean / means[3]
    ))
}

// ---------------------------------------------------------------------------
// 8. Solvers on 3D Poisson

fn poisson_solves() -> Outcome {
    let a = poisson3d(32, 32, 32).unwrap().sym_diag_scale().unwrap();
    let (b, x0) = make_rhs_and_x0(a.n_rows(), 2024);
    ensure(x0.iter().all(|&v| v == 0.0), || "x0 not zero".into())?;
    let tol = 1e-9;
    let (pcg, _) = solvers::solve(&a, &b, &SolveConfig { tol, ..Default::default() }).unwrap();
    ensure(pcg.converged && pcg.final_true_relres < tol, || format!("PCG: {pcg:?}"))?;

    let io = |backend: Backend, m_in: usize| -> SolveReport {
        let cfg = SolveConfig {
            solver: SolverKind::Iocg,
            tol,
            m_in,
            inner_precision: Precision::F32,
            a_backend: backend,
            ..Default::default()
        };
        solvers::solve(&a, &b, &cfg).unwrap().0
    };
    let fp32 = io(Backend::Sell32, 50);
    let e8m14 = io(Backend::PackSellE8m(14), 50);
    let fp16 = io(Backend::PackSellFp16, 80);
    ensure(fp32.converged, || format!("FP32 IO-CG did not converge: {fp32:?}"))?;
    ensure(e8m14.converged && e8m14.final_true_relres < tol, || format!("E8M14 IO-CG: {e8m14:?}"))?;
    let ratio = e8m14.total_inner_iters as f64 / fp32.total_inner_iters as f64;
    ensure(ratio <= 1.25, || format!("E8M14 total {} vs FP32 {}", e8m14.total_inner_iters, fp32.total_inner_iters))?;
    ensure(!fp16.converged || fp16.total_inner_iters > e8m14.total_inner_iters, || {
        format!("FP16 m_in=80 total {} not above E8M14 {}", fp16.total_inner_iters, e8m14.total_inner_iters)
    })?;
    Ok(format!(
        "PCG {} iters (relres {:.1e}); IO-CG inner totals: FP32 {}, E8M14 {} ({ratio:.2}×, relres {:.1e}), FP16 m_in=80 {}{}",
        pcg.outer_iters,
        pcg.final_true_relres,
        fp32.total_inner_iters,
        e8m14.total_inner_iters,
        e8m14.final_true_relres,
        fp16.total_inner_iters,
        if fp16.converged { "" } else { " (not converged)" }
    ))
}

// ---------------------------------------------------------------------------
// 9. Determinism

fn stable(rep: &SolveReport) -> (bool, usize, usize, Vec<u64>, u64) {
    (
        rep.converged,
        rep.outer_iters,
        rep.total_inner_iters,
        bits_f64(&rep.residual_history),
        rep.final_true_relres.to_bits(),
    )
}

fn determinism() -> Outcome {
    let a = poisson3d(16, 16, 16).unwrap().sym_diag_scale().unwrap();
    let (b, _) = make_rhs_and_x0(a.n_rows(), 99);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let configs = [
        SolveConfig::default(),
        SolveConfig { solver: SolverKind::Iocg, a_backend: Backend::PackSellE8m(14), m_in: 20, ..Default::default() },
        SolveConfig { solver: SolverKind::Iocg, a_backend: Backend::PackSellFp16, m_in: 20, ..Default::default() },
    ];
    for cfg in &configs {
        let run = || pool.install(|| solvers::solve(&a, &b, cfg).unwrap());
        let ((r1, x1), (r2, x2)) = (run(), run());
        ensure(stable(&r1) == stable(&r2) && bits_f64(&x1) == bits_f64(&x2), || {
            format!("{:?}/{}: reports differ", cfg.solver, cfg.a_backend)
        })?;
    }
    let mut r = rng(9);
    let m = random_matrix(&mut r, 512, Shape::Scattered);
    for fmt in [PackFormat::fp16(), PackFormat::e8m(14).unwrap()] {
        let bytes = || pool.install(|| container::to_bytes(&PackSellMatrix::build(&m, 32, 256, fmt, PermMode::Implicit).unwrap()));
        ensure(bytes() == bytes(), || format!("{fmt}: container bytes differ"))?;
    }
    Ok(format!("{} solver configs and 2 containers identical across two runs on 4 threads", configs.len()))
}

// ---------------------------------------------------------------------------
// 10. Container round trip

fn container_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let presets = [PackFormat::fp16(), PackFormat::e8m(20).unwrap(), PackFormat::e8m(10).unwrap(), PackFormat::fp32_embed()];
    let mut r = rng(10);
    for k in 0..20 {
        let a = random_matrix(&mut r, 512, if k % 2 == 0 { Shape::Banded } else { Shape::Scattered });
        let x: Vec<f64> = (0..a.n_cols()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        for fmt in presets {
            let opts = BuildOptions { mode: MODES[k % 3], ..BuildOptions::new(fmt) };
            let (p, _) = PackSellMatrix::build_with(&a, &opts).unwrap();
            let path = dir.path().join(format!("m{k}-{}.psell", fmt.name()));
            container::write_path(&p, &path).map_err(|e| e.to_string())?;
            let q = container::read_path(&path).map_err(|e| format!("matrix {k} {fmt}: {e}"))?;
            ensure(q == p, || format!("matrix {k} {fmt}: decoded matrix differs"))?;
            ensure(bits_f32(&q.spmv(&x32).unwrap()) == bits_f32(&p.spmv(&x32).unwrap()), || format!("matrix {k} {fmt}: f32 SpMV"))?;
            ensure(bits_f64(&q.spmv(&x).unwrap()) == bits_f64(&p.spmv(&x).unwrap()), || format!("matrix {k} {fmt}: f64 SpMV"))?;
        }
    }
    Ok("20 matrices × 4 presets: read-back SpMV bitwise equal in f32 and f64".into())
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance() {
    type Criterion = (u32, &'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, "codec round trip", Duration::from_secs(30), codec_round_trip),
        (2, "bit-layout goldens", Duration::MAX, bit_goldens),
        (3, "SpMV oracle equivalence", Duration::from_secs(120), spmv_equivalence),
        (4, "dummy insertion on a gap of 4", Duration::MAX, gap_of_four),
        (5, "dummy-count oracle", Duration::MAX, dummy_counts),
        (6, "footprint accounting", Duration::MAX, footprint),
        (7, "backward-error trend", Duration::from_secs(120), backward_error_trend),
        (8, "3D Poisson solver acceptance", Duration::from_secs(180), poisson_solves),
        (9, "determinism", Duration::MAX, determinism),
        (10, "container round trip", Duration::MAX, container_round_trip),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|d| {
            if elapsed > budget {
                Err(format!("{d}; took {elapsed:.1?}, budget {budget:?}"))
            } else {
                Ok(d)
            }
        });
        match outcome {
            Ok(detail) => println!("[PASS] {id:>2} {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                println!("[FAIL] {id:>2} {name}: {why} ({elapsed:.2?})");
                failed.push(id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
