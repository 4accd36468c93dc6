//! The `packsell` command-line tool.
//!
//! Every subcommand accepts `--json`, which prints exactly one JSON object
//! (with `"schema": 1`) on stdout. Logs go to stderr.

use crate::codec::{Codec, PackFormat};
use crate::container;
use crate::error::{Error, Result};
use crate::kernel::SpmvKernel;
use crate::matrix::CsrMatrix;
use crate::metrics::{bench_spmv, SpmvReport, DEFAULT_REPS, DEFAULT_WARMUP};
use crate::mtx::{self, Symmetry};
use crate::packsell::{BuildOptions, PackSellMatrix};
use crate::scalar::Scalar;
use crate::sell::{PermMode, SellMatrix, DEFAULT_SIGMA, DEFAULT_SLICE};
use crate::solvers::{self, Backend, Precision, Preconditioner, SolveConfig, SolverKind};
use crate::stencil;
use clap::{Args, Parser, Subcommand, ValueEnum};
use half::f16;
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::fs::File;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

pub const SCHEMA: u32 = 1;

/// Exit status when a solve finishes without converging.
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "packsell", version, about = "PackSELL sparse matrix tools")]
pub struct Cli {
    /// Worker threads for kernels (defaults to the hardware parallelism).
    #[arg(long, global = true, env = "PACKSELL_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// Print a single JSON object instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Size, nonzero and bandwidth statistics of a Matrix Market file.
    Info { matrix: PathBuf },
    /// Convert a Matrix Market file to a .psell container.
    Convert(ConvertArgs),
    /// Benchmark SpMV in one storage format.
    Spmv(SpmvArgs),
    /// Memory footprint of PackSELL against SELL over a range of D
    /// (CSV unless --json).
    Footprint(FootprintArgs),
    /// Solve A x = b with b uniform in [0, 1) and x0 = 0.
    Solve(SolveArgs),
    /// Write a finite-difference Laplacian as a Matrix Market file.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    None,
    /// G⁻¹A with g_i the absolute row sum.
    Row,
    /// Ḡ⁻¹AḠ⁻¹ with ḡ_i = sqrt(|a_ii|).
    Sym,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CodecArg {
    Fp16,
    E8my,
    Fp32embed,
}

impl From<CodecArg> for Codec {
    fn from(c: CodecArg) -> Self {
        match c {
            CodecArg::Fp16 => Codec::Fp16Embed,
            CodecArg::E8my => Codec::E8my,
            CodecArg::Fp32embed => Codec::Fp32Embed,
        }
    }
}

fn default_word_bits(c: Codec) -> u32 {
    match c {
        Codec::Fp32Embed => 64,
        _ => 32,
    }
}

fn default_delta_bits(c: Codec) -> u32 {
    match c {
        Codec::Fp16Embed => 15,
        Codec::E8my => 2,
        Codec::Fp32Embed => 31,
    }
}

#[derive(Args, Debug, Clone)]
pub struct LayoutArgs {
    /// Slice size C.
    #[arg(long = "c", default_value_t = DEFAULT_SLICE)]
    pub slice: usize,
    /// Sorting block size σ (a multiple of C).
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: usize,
    #[arg(long, default_value = "implicit")]
    pub mode: PermMode,
}

impl LayoutArgs {
    fn validate(&self) -> Result<()> {
        crate::sell::effective_sigma(self.slice, self.sigma, self.mode).map(|_| ())
    }
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    pub matrix: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "fp16")]
    pub codec: CodecArg,
    /// Word size W (32 or 64); defaults to 64 for fp32embed, else 32.
    #[arg(long)]
    pub w: Option<u32>,
    /// Delta bits D; defaults to 15 (fp16), 2 (e8my) or 31 (fp32embed).
    #[arg(long)]
    pub d: Option<u32>,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[arg(long, value_enum, default_value = "none")]
    pub scale: Scale,
}

impl ConvertArgs {
    fn format(&self) -> Result<PackFormat> {
        let codec = Codec::from(self.codec);
        PackFormat::new(
            self.w.unwrap_or_else(|| default_word_bits(codec)),
            self.d.unwrap_or_else(|| default_delta_bits(codec)),
            codec,
        )
    }
}

/// Storage format for `spmv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpmvFormat {
    Csr,
    Sell64,
    Sell32,
    Sell16,
    Pack(PackFormat),
}

impl FromStr for SpmvFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csr" => Ok(SpmvFormat::Csr),
            "sell64" => Ok(SpmvFormat::Sell64),
            "sell32" => Ok(SpmvFormat::Sell32),
            "sell16" => Ok(SpmvFormat::Sell16),
            _ => match s.strip_prefix("packsell-") {
                Some(p) => p.parse().map(SpmvFormat::Pack),
                None => Err(Error::invalid(format!("unknown format '{s}'"))),
            },
        }
    }
}

impl SpmvFormat {
    fn name(&self) -> String {
        match self {
            SpmvFormat::Csr => "csr".into(),
            SpmvFormat::Sell64 => "sell64".into(),
            SpmvFormat::Sell32 => "sell32".into(),
            SpmvFormat::Sell16 => "sell16".into(),
            SpmvFormat::Pack(f) => format!("packsell-{}", f.name()),
        }
    }

    fn default_precision(&self) -> VecPrecision {
        match self {
            SpmvFormat::Csr | SpmvFormat::Sell64 => VecPrecision::F64,
            _ => VecPrecision::F32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VecPrecision {
    F64,
    F32,
    F16,
}

/// Input vector for `spmv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XSpec {
    Ones,
    /// Uniform in [-1, 1) from a ChaCha8 stream.
    Random(u64),
}

impl FromStr for XSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "ones" {
            return Ok(XSpec::Ones);
        }
        match s.strip_prefix("random:").map(str::parse::<u64>) {
            Some(Ok(seed)) => Ok(XSpec::Random(seed)),
            _ => Err(Error::invalid(format!("--x expects 'ones' or 'random:SEED', got '{s}'"))),
        }
    }
}

impl XSpec {
    fn build<T: Scalar>(self, n: usize) -> Vec<T> {
        match self {
            XSpec::Ones => vec![T::from_f64(1.0); n],
            XSpec::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| T::from_f64(rng.gen_range(-1.0..1.0))).collect()
            }
        }
    }
}

#[derive(Args, Debug)]
pub struct SpmvArgs {
    /// Matrix Market file or .psell container.
    pub input: PathBuf,
    /// csr, sell64, sell32, sell16, packsell-fp16, packsell-e8mY or
    /// packsell-fp32 (ignored for containers).
    #[arg(long, default_value = "csr")]
    pub format: SpmvFormat,
    /// Vector precision (defaults to f64 for csr/sell64, f32 otherwise).
    #[arg(long, value_enum)]
    pub precision: Option<VecPrecision>,
    #[arg(long, default_value_t = DEFAULT_REPS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, default_value_t = DEFAULT_WARMUP as u64)]
    pub warmup: u64,
    #[arg(long, default_value = "ones")]
    pub x: XSpec,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[arg(long, value_enum, default_value = "none")]
    pub scale: Scale,
}

#[derive(Args, Debug)]
pub struct FootprintArgs {
    pub matrix: PathBuf,
    /// Inclusive range of D, e.g. `1..15` or `4`.
    #[arg(long, default_value = "1..15")]
    pub sweep_d: DRange,
    /// Value codec; fp16 only admits D = 15 and fp32embed D >= 1 at W = 64.
    #[arg(long, value_enum, default_value = "e8my")]
    pub codec: CodecArg,
    #[command(flatten)]
    pub layout: LayoutArgs,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DRange(pub RangeInclusive<u32>);

impl FromStr for DRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("bad D range '{s}' (expected A..B or A)"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (a, b.trim_start_matches('=')),
            None => (s, s),
        };
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi || lo == 0 {
            return Err(bad());
        }
        Ok(DRange(lo..=hi))
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub matrix: PathBuf,
    #[arg(long, default_value = "pcg")]
    pub solver: SolverKind,
    /// Storage of A: csr64, sell64, sell32, sell16, packsell-fp16 or
    /// packsell-e8mY. For iocg this is the inner operator.
    #[arg(long, default_value = "csr64")]
    pub backend: Backend,
    #[arg(long, default_value_t = 50)]
    pub m_in: usize,
    #[arg(long, default_value = "f32")]
    pub inner_precision: Precision,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_outer: usize,
    #[arg(long, default_value = "jacobi")]
    pub precond: Preconditioner,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "none")]
    pub scale: Scale,
    /// Write the residual history as CSV.
    #[arg(long)]
    pub residual_csv: Option<PathBuf>,
    /// Exit 0 even when the solver does not converge.
    #[arg(long)]
    pub allow_nonconverged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StencilArg {
    Poisson2d,
    Poisson3d,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub stencil: StencilArg,
    /// Grid size, e.g. `64x64` or `32x32x32`.
    #[arg(long)]
    pub dims: String,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Parses `env::args`, runs the command and maps the outcome to an exit
/// code: 0 on success, 1 on error, 3 for an unconverged solve.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Runs a parsed command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<ExitCode> {
    validate(&cli.command)?;
    let threads = cli
        .threads
        .map(|t| t as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let (report, code) = pool.install(|| execute(&cli.command))?;
    let mut report = report;
    report.insert("threads".into(), json!(threads));
    if !cli.json && matches!(cli.command, Command::Footprint(_)) {
        write!(out, "{}", footprint_csv(&Value::Object(report)))?;
    } else {
        emit(out, report, cli.json)?;
    }
    Ok(code)
}

/// Flag checks that do not need any file.
fn validate(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Info { .. } => Ok(()),
        Command::Convert(a) => {
            a.format()?;
            a.layout.validate()
        }
        Command::Spmv(a) => a.layout.validate(),
        Command::Footprint(a) => {
            for d in a.sweep_d.0.clone() {
                let codec = Codec::from(a.codec);
                PackFormat::new(default_word_bits(codec), d, codec)?;
            }
            a.layout.validate()
        }
        Command::Solve(a) => SolveConfig::from(a).validate(),
        Command::Gen(a) => parse_dims(&a.dims, a.stencil).map(|_| ()),
    }
}

type Report = Map<String, Value>;

fn header(command: &str) -> Report {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    m
}

fn extend(m: &mut Report, v: Value) {
    if let Value::Object(o) = v {
        m.extend(o);
    }
}

fn emit(out: &mut dyn Write, report: Report, as_json: bool) -> Result<()> {
    if as_json {
        writeln!(out, "{}", Value::Object(report))?;
        return Ok(());
    }
    for (k, v) in &report {
        match v {
            Value::Array(a) if a.len() > 8 => writeln!(out, "{k:<24} [{} values]", a.len())?,
            Value::Array(a) if a.iter().all(Value::is_object) => {
                writeln!(out, "{k}:")?;
                for row in a {
                    writeln!(out, "  {row}")?;
                }
            }
            Value::String(s) => writeln!(out, "{k:<24} {s}")?,
            _ => writeln!(out, "{k:<24} {v}")?,
        }
    }
    Ok(())
}

fn execute(cmd: &Command) -> Result<(Report, ExitCode)> {
    match cmd {
        Command::Info { matrix } => info_cmd(matrix).map(|r| (r, ExitCode::SUCCESS)),
        Command::Convert(a) => convert_cmd(a).map(|r| (r, ExitCode::SUCCESS)),
        Command::Spmv(a) => spmv_cmd(a).map(|r| (r, ExitCode::SUCCESS)),
        Command::Footprint(a) => footprint_cmd(a).map(|r| (r, ExitCode::SUCCESS)),
        Command::Solve(a) => solve_cmd(a),
        Command::Gen(a) => gen_cmd(a).map(|r| (r, ExitCode::SUCCESS)),
    }
}

fn load(path: &Path) -> Result<(CsrMatrix, Symmetry)> {
    let (coo, h) = mtx::read_path(path)?;
    info!("read {}: {}x{}, {} entries", path.display(), coo.n_rows(), coo.n_cols(), coo.entries().len());
    Ok((coo.to_csr(), h.symmetry))
}

fn apply_scale(a: CsrMatrix, scale: Scale) -> Result<CsrMatrix> {
    match scale {
        Scale::None => Ok(a),
        Scale::Row => a.row_sum_scale(),
        Scale::Sym => a.sym_diag_scale(),
    }
}

fn info_cmd(path: &Path) -> Result<Report> {
    let (a, sym) = load(path)?;
    let mut r = header("info");
    r.insert("path".into(), json!(path.display().to_string()));
    extend(&mut r, serde_json::to_value(a.stats()).expect("stats serialize"));
    r.insert("n_rows".into(), json!(a.n_rows()));
    r.insert("n_cols".into(), json!(a.n_cols()));
    r.insert(
        "file_symmetry".into(),
        json!(match sym {
            Symmetry::General => "general",
            Symmetry::Symmetric => "symmetric",
        }),
    );
    r.insert("symmetric".into(), json!(a.is_symmetric()));
    Ok(r)
}

fn build_options(fmt: PackFormat, layout: &LayoutArgs) -> BuildOptions {
    BuildOptions {
        slice: layout.slice,
        sigma: layout.sigma,
        mode: layout.mode,
        ..BuildOptions::new(fmt)
    }
}

fn packsell_summary(r: &mut Report, m: &PackSellMatrix) {
    let counts = m.counts();
    r.insert("format".into(), json!(m.format().name()));
    r.insert("w".into(), json!(m.format().word_bits()));
    r.insert("d".into(), json!(m.format().delta_bits()));
    r.insert("v".into(), json!(m.format().value_bits()));
    r.insert("c".into(), json!(m.slice_size()));
    r.insert("sigma".into(), json!(m.sigma()));
    r.insert("mode".into(), json!(m.mode()));
    r.insert("k_left".into(), json!(m.k_left()));
    r.insert("nnz_real".into(), json!(counts.nnz_real));
    r.insert("n_dummy".into(), json!(counts.n_dummy));
    r.insert("n_padding".into(), json!(counts.n_padding));
    r.insert("footprint".into(), serde_json::to_value(m.footprint()).expect("footprint serialize"));
}

fn convert_cmd(a: &ConvertArgs) -> Result<Report> {
    let fmt = a.format()?;
    let (m, _) = load(&a.matrix)?;
    let m = apply_scale(m, a.scale)?;
    let (p, _) = PackSellMatrix::build_with(&m, &build_options(fmt, &a.layout))?;
    container::write_path(&p, &a.output)?;
    let mut r = header("convert");
    r.insert("output".into(), json!(a.output.display().to_string()));
    r.insert("n_rows".into(), json!(p.n_rows()));
    r.insert("n_cols".into(), json!(p.n_cols()));
    packsell_summary(&mut r, &p);
    Ok(r)
}

fn is_container(path: &Path) -> Result<bool> {
    let mut magic = [0u8; 8];
    let mut f = File::open(path)?;
    let mut got = 0;
    while got < magic.len() {
        match f.read(&mut magic[got..])? {
            0 => break,
            n => got += n,
        }
    }
    Ok(got == magic.len() && magic == container::MAGIC)
}

fn bench<K: SpmvKernel>(
    k: &K,
    name: &str,
    source: &CsrMatrix,
    order: Option<&[usize]>,
    prec: VecPrecision,
    a: &SpmvArgs,
) -> Result<SpmvReport> {
    fn go<K: SpmvKernel, T: Scalar>(
        k: &K,
        name: &str,
        source: &CsrMatrix,
        order: Option<&[usize]>,
        a: &SpmvArgs,
    ) -> Result<SpmvReport> {
        let x: Vec<T> = a.x.build(k.n_cols());
        bench_spmv(k, name, source, order, &x, a.reps as usize, a.warmup as usize).map(|(r, _)| r)
    }
    match prec {
        VecPrecision::F64 => go::<K, f64>(k, name, source, order, a),
        VecPrecision::F32 => go::<K, f32>(k, name, source, order, a),
        VecPrecision::F16 => go::<K, f16>(k, name, source, order, a),
    }
}

fn spmv_cmd(a: &SpmvArgs) -> Result<Report> {
    let mut r = header("spmv");
    let explicit = a.layout.mode == PermMode::Explicit;
    let report = if is_container(&a.input)? {
        let p = container::read_path(&a.input)?;
        let fmt = SpmvFormat::Pack(p.format());
        let prec = a.precision.unwrap_or(fmt.default_precision());
        // Row order of an explicit container is not stored, so the decoded
        // matrix (in output order) is the reference.
        let source = p.to_csr();
        let rep = bench(&p, &fmt.name(), &source, None, prec, a)?;
        packsell_summary(&mut r, &p);
        r.insert("reference".into(), json!("decoded"));
        rep
    } else {
        let (m, _) = load(&a.input)?;
        let m = apply_scale(m, a.scale)?;
        let prec = a.precision.unwrap_or(a.format.default_precision());
        let (c, s, mode) = (a.layout.slice, a.layout.sigma, a.layout.mode);
        let name = a.format.name();
        let rep = match a.format {
            SpmvFormat::Csr => bench(&m, &name, &m, None, prec, a)?,
            SpmvFormat::Sell64 => {
                let (k, o) = SellMatrix::<f64>::build_with_order(&m, c, s, mode)?;
                bench(&k, &name, &m, explicit.then_some(&o[..]), prec, a)?
            }
            SpmvFormat::Sell32 => {
                let (k, o) = SellMatrix::<f32>::build_with_order(&m, c, s, mode)?;
                bench(&k, &name, &m, explicit.then_some(&o[..]), prec, a)?
            }
            SpmvFormat::Sell16 => {
                let (k, o) = SellMatrix::<f16>::build_with_order(&m, c, s, mode)?;
                bench(&k, &name, &m, explicit.then_some(&o[..]), prec, a)?
            }
            SpmvFormat::Pack(fmt) => {
                let (k, o) = PackSellMatrix::build_with(&m, &build_options(fmt, &a.layout))?;
                packsell_summary(&mut r, &k);
                bench(&k, &name, &m, explicit.then_some(&o[..]), prec, a)?
            }
        };
        r.insert("reference".into(), json!("source"));
        rep
    };
    extend(&mut r, serde_json::to_value(report).expect("report serialize"));
    r.remove("threads");
    Ok(r)
}

fn footprint_cmd(a: &FootprintArgs) -> Result<Report> {
    let (m, _) = load(&a.matrix)?;
    let codec = Codec::from(a.codec);
    let mut rows = Vec::new();
    for d in a.sweep_d.0.clone() {
        let fmt = PackFormat::new(default_word_bits(codec), d, codec)?;
        let p = match PackSellMatrix::build_with(&m, &build_options(fmt, &a.layout)) {
            Ok((p, _)) => p,
            Err(e) => return Err(Error::invalid(format!("D={d}: {e}"))),
        };
        let fp = p.footprint();
        let counts = p.counts();
        rows.push(json!({
            "d": d,
            "format": fmt.name(),
            "n_dummy": counts.n_dummy,
            "n_padding": counts.n_padding,
            "pack_bits": fp.pack_bits,
            "sell_equiv_bits": fp.sell_equiv_bits,
            "ratio": fp.ratio,
        }));
    }
    let mut r = header("footprint");
    r.insert("n_rows".into(), json!(m.n_rows()));
    r.insert("n_cols".into(), json!(m.n_cols()));
    r.insert("nnz".into(), json!(m.nnz()));
    r.insert("rows".into(), Value::Array(rows));
    Ok(r)
}

/// The footprint table as CSV, one row per D.
pub fn footprint_csv(report: &Value) -> String {
    let mut s = String::from("d,format,n_dummy,n_padding,pack_bits,sell_equiv_bits,ratio\n");
    for row in report["rows"].as_array().into_iter().flatten() {
        s += &format!(
            "{},{},{},{},{},{},{}\n",
            row["d"],
            row["format"].as_str().unwrap_or(""),
            row["n_dummy"],
            row["n_padding"],
            row["pack_bits"],
            row["sell_equiv_bits"],
            row["ratio"]
        );
    }
    s
}

impl From<&SolveArgs> for SolveConfig {
    fn from(a: &SolveArgs) -> Self {
        SolveConfig {
            solver: a.solver,
            tol: a.tol,
            max_outer: a.max_outer,
            m_in: a.m_in,
            inner_precision: a.inner_precision,
            a_backend: a.backend,
            preconditioner: a.precond,
        }
    }
}

fn solve_cmd(a: &SolveArgs) -> Result<(Report, ExitCode)> {
    let cfg = SolveConfig::from(a);
    let (m, _) = load(&a.matrix)?;
    let m = apply_scale(m, a.scale)?;
    let (b, _) = solvers::make_rhs_and_x0(m.n_rows(), a.seed);
    let (rep, _) = solvers::solve(&m, &b, &cfg)?;
    if let Some(path) = &a.residual_csv {
        let mut f = std::io::BufWriter::new(File::create(path)?);
        writeln!(f, "iteration,relres")?;
        for (i, v) in rep.residual_history.iter().enumerate() {
            writeln!(f, "{i},{v:e}")?;
        }
        f.flush()?;
    }
    let code = if rep.converged || a.allow_nonconverged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    };
    if !rep.converged {
        log::warn!("solver did not converge (true relres {:e})", rep.final_true_relres);
    }
    let mut r = header("solve");
    r.insert("config".into(), serde_json::to_value(&cfg).expect("config serialize"));
    r.insert("seed".into(), json!(a.seed));
    r.insert("n".into(), json!(m.n_rows()));
    extend(&mut r, serde_json::to_value(&rep).expect("report serialize"));
    Ok((r, code))
}

fn parse_dims(s: &str, st: StencilArg) -> Result<Vec<usize>> {
    let dims = s
        .split(['x', 'X', ','])
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::invalid(format!("bad --dims '{s}'")))?;
    let want = match st {
        StencilArg::Poisson2d => 2,
        StencilArg::Poisson3d => 3,
    };
    if dims.len() != want || dims.contains(&0) {
        return Err(Error::invalid(format!("--dims needs {want} positive sizes, got '{s}'")));
    }
    Ok(dims)
}

fn gen_cmd(a: &GenArgs) -> Result<Report> {
    let d = parse_dims(&a.dims, a.stencil)?;
    let m = match a.stencil {
        StencilArg::Poisson2d => stencil::poisson2d(d[0], d[1])?,
        StencilArg::Poisson3d => stencil::poisson3d(d[0], d[1], d[2])?,
    };
    mtx::write_path(&m, &a.output)?;
    let mut r = header("gen");
    r.insert("output".into(), json!(a.output.display().to_string()));
    r.insert("n".into(), json!(m.n_rows()));
    r.insert("nnz".into(), json!(m.nnz()));
    Ok(r)
}
