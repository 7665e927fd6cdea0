//! Command-line interface.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::densemath::{trace_norm, ComplexMatrix, C64};
use crate::entanglement::{
    as_pure, bounds_report, mixed_entanglement, pure_entanglement, BoundsReport,
};
use crate::error::{Error, Result};
use crate::format::round12;
use crate::kd::{inner_sup_nonreality, KdDistribution, kd_full, kd_marginal, nonreality, reconstruct_state};
use crate::optimize::{Diagnostics, OptimizerConfig};
use crate::seeding::task_rng;
use crate::states::{
    make_state, read_state_file, BipartiteDims, BipartitePureState, OrthonormalBasis, State,
    StateSpec, INPUT_TOL,
};
use crate::verify::{run_suite, Suite};
use crate::weakvalue::{estimate_entanglement_sampled, write_shot_records};

/// Smallest accepted `--shots`.
pub const MIN_SHOTS: u64 = 1_000;

#[derive(Debug, Parser)]
#[command(name = "kdent", version, about = "Kirkwood-Dirac quasiprobabilities and KD-nonreality entanglement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// KD table of a state, its nonreality and optional reconstruction.
    KdDist(KdDistArgs),
    /// Closed-form entanglement of a pure state.
    Pure(PureArgs),
    /// Convex-roof entanglement of a mixed state.
    Mixed(MixedArgs),
    /// Lower and upper bounds from both sides of the cut.
    Bounds(BoundsArgs),
    /// Run self-check suites.
    Verify(VerifyArgs),
    /// Entanglement estimated from simulated measurement records.
    WeakSim(WeakSimArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "input")]
pub struct StateArgs {
    /// JSON state file.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Builtin state: bell, product, ket:XA,XB, max-entangled:D, werner:P,
    /// schmidt:L1,L2,..., random-pure:SEED, random-mixed:RANK:SEED.
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Local dimensions as AxB.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file for tabular data.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Random restarts of the optimizer.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Slack for bound checks.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct KdDistArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Basis of A: computational, fourier, random:SEED or a JSON file.
    #[arg(long, default_value = "computational")]
    pub basis_a: String,
    /// Basis of B, used by --reconstruct.
    #[arg(long, default_value = "computational")]
    pub basis_b: String,
    /// Basis of the whole space.
    #[arg(long, default_value = "computational")]
    pub basis_y: String,
    /// Rebuild the state from the full table and report the error.
    #[arg(long)]
    pub reconstruct: bool,
}

#[derive(Debug, Args)]
pub struct PureArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct MixedArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Decomposition size (default rank², at most 16).
    #[arg(long)]
    pub terms: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// lemma1, prop1 ... prop5, concurrence, roof, weak or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
}

#[derive(Debug, Args)]
pub struct WeakSimArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Shots per outcome of the basis of A.
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: u64,
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BasisPairSingular { .. } => 3,
        Error::OptimizerFailed { .. } | Error::InvalidDecomposition(_) => 4,
        Error::KdInvariant(_) | Error::NoConvergence { .. } => 1,
        _ => 2,
    }
}

fn parse_err(field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        field: field.into(),
        message: message.into(),
    }
}

/// `AxB` to dimensions.
pub fn parse_dims(s: &str) -> Result<BipartiteDims> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| parse_err("dims", format!("expected AxB, got `{s}`")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| parse_err("dims", format!("`{t}` is not a dimension")))
    };
    BipartiteDims::new(num(a)?, num(b)?).map_err(|e| parse_err("dims", e.to_string()))
}

/// Basis from a spec: `computational`, `fourier`, `random:SEED` or a JSON
/// file holding a list of basis vectors, each a list of `[re, im]` pairs.
pub fn parse_basis(spec: &str, dim: usize, field: &str) -> Result<OrthonormalBasis> {
    match spec {
        "computational" => return Ok(OrthonormalBasis::computational(dim)),
        "fourier" => return Ok(OrthonormalBasis::fourier(dim)),
        _ => {}
    }
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| parse_err(field, format!("bad seed in `{spec}`")))?;
        return Ok(OrthonormalBasis::haar_random(dim, &mut task_rng(seed, &[])));
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| parse_err(field, format!("`{spec}` is not a basis name or readable file: {e}")))?;
    let vectors: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(&text).map_err(|e| parse_err(field, e.to_string()))?;
    if vectors.len() != dim || vectors.iter().any(|v| v.len() != dim) {
        return Err(parse_err(field, format!("basis file must hold {dim} vectors of length {dim}")));
    }
    let columns: Vec<Vec<C64>> = vectors
        .iter()
        .map(|v| v.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        .collect();
    let m = ComplexMatrix::from_columns(&columns).map_err(|e| parse_err(field, e.to_string()))?;
    OrthonormalBasis::new(m).map_err(|e| parse_err(field, e.to_string()))
}

fn load_state(input: &StateArgs, dims: Option<&str>) -> Result<State> {
    let dims = dims.map(parse_dims).transpose()?;
    match (&input.state, &input.builtin) {
        (Some(path), None) => {
            let state = read_state_file(path).map_err(|e| match e {
                Error::Io(io) => parse_err("state", format!("{}: {io}", path.display())),
                other => other,
            })?;
            if let Some(d) = dims {
                if d != state.dims() {
                    return Err(parse_err(
                        "dims",
                        format!("--dims {:?} but the file has {:?}", d.as_tuple(), state.dims().as_tuple()),
                    ));
                }
            }
            Ok(state)
        }
        (None, Some(spec)) => {
            let spec: StateSpec = spec.parse()?;
            make_state(&spec, dims)
        }
        _ => Err(parse_err("state", "give exactly one of --state or --builtin")),
    }
}

fn require_pure(state: State) -> Result<BipartitePureState> {
    match state {
        State::Pure(p) => Ok(p),
        State::Density(d) => as_pure(&d)?.ok_or_else(|| {
            Error::InvalidState(format!(
                "expected a pure state; the density operator is not rank one within {INPUT_TOL:e}"
            ))
        }),
    }
}

fn config_from(args: &OptimizerArgs, seed: u64, default_restarts: usize) -> Result<OptimizerConfig> {
    if !(args.tol > 0.0) {
        return Err(parse_err("tol", format!("{} is not a positive tolerance", args.tol)));
    }
    Ok(OptimizerConfig {
        restarts: args.restarts.unwrap_or(default_restarts),
        tol: args.tol,
        ..OptimizerConfig::with_seed(seed)
    })
}

/// Rounds every float to 12 significant digits.
fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, rounded(x))).collect()),
        other => other,
    }
}

fn emit(out: &mut dyn Write, report: Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(&rounded(report)).expect("serializable"))?;
    Ok(())
}

fn diagnostics_json(d: &Diagnostics) -> Value {
    json!({
        "restarts_run": d.restarts_run,
        "best_restart": d.best_restart,
        "iterations": d.iterations,
        "evaluations": d.evaluations,
        "converged": d.converged,
    })
}

fn bounds_json(b: &BoundsReport) -> Value {
    json!({
        "lower": b.lower,
        "upper": b.upper,
        "lower_swapped": b.lower_swapped,
        "upper_swapped": b.upper_swapped,
        "best_lower": b.best_lower(),
        "best_upper": b.best_upper(),
    })
}

fn table_json(table: &KdDistribution) -> Value {
    let mut rows = Vec::with_capacity(table.values().len());
    for x in 0..table.n_x() {
        for y in 0..table.n_y() {
            let v = table.value(x, y);
            rows.push(json!({"x": x, "y": y, "re": v.re, "im": v.im}));
        }
    }
    Value::Array(rows)
}

fn open_out(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| parse_err("out", format!("{}: {e}", path.display())))
}

fn cmd_kd_dist(args: &KdDistArgs, out: &mut dyn Write) -> Result<i32> {
    let rho = load_state(&args.input, args.common.dims.as_deref())?.to_density();
    let dims = rho.dims();
    let basis_a = parse_basis(&args.basis_a, dims.a(), "basis-a")?;
    let basis_y = parse_basis(&args.basis_y, dims.total(), "basis-y")?;
    let table = kd_marginal(&rho, &basis_a, &basis_y)?;
    let total = nonreality(&table);
    let reconstruction_error = if args.reconstruct {
        let basis_b = parse_basis(&args.basis_b, dims.b(), "basis-b")?;
        let full = kd_full(&rho, &basis_a, &basis_b, &basis_y)?;
        let back = reconstruct_state(&full)?;
        Some(trace_norm(&(&back - rho.matrix()))?)
    } else {
        None
    };
    match (args.common.format, &args.common.out) {
        (Format::Csv, None) => {
            table.write_csv(&mut *out)?;
            eprintln!("nonreality {}", crate::format::sig12(total));
        }
        (format, path) => {
            if let Some(p) = path {
                table.write_csv(open_out(p)?)?;
            }
            if format == Format::Json {
                emit(
                    out,
                    json!({
                        "command": "kd-dist",
                        "dims": [dims.a(), dims.b()],
                        "nonreality": total,
                        "inner_sup_nonreality": inner_sup_nonreality(&rho, &basis_a)?,
                        "table": match path {
                            Some(p) => json!(p.display().to_string()),
                            None => table_json(&table),
                        },
                        "reconstruction_error": reconstruction_error,
                    }),
                )?;
            } else {
                eprintln!("nonreality {}", crate::format::sig12(total));
            }
        }
    }
    Ok(0)
}

fn cmd_pure(args: &PureArgs, out: &mut dyn Write) -> Result<i32> {
    let psi = require_pure(load_state(&args.input, args.common.dims.as_deref())?)?;
    let r = pure_entanglement(&psi)?;
    emit(
        out,
        json!({
            "command": "pure",
            "dims": [psi.dims().a(), psi.dims().b()],
            "value": r.value,
            "normalized": r.normalized,
            "schmidt_rank": r.schmidt_rank,
            "concurrence": r.concurrence,
            "entropy_of_entanglement": r.entropy_of_entanglement,
            "seed": args.common.seed,
        }),
    )?;
    Ok(0)
}

fn cmd_mixed(args: &MixedArgs, out: &mut dyn Write) -> Result<i32> {
    let rho = load_state(&args.input, args.common.dims.as_deref())?.to_density();
    let config = config_from(&args.optimizer, args.common.seed, 32)?;
    let r = mixed_entanglement(&rho, &config, args.terms)?;
    let decomposition: Vec<Value> = r
        .roof
        .probabilities
        .iter()
        .zip(&r.roof.pure_states)
        .map(|(p, psi)| {
            json!({
                "probability": p,
                "amplitudes": psi.amplitudes().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            })
        })
        .collect();
    emit(
        out,
        json!({
            "command": "mixed",
            "dims": [rho.dims().a(), rho.dims().b()],
            "value": r.value(),
            "normalized": r.normalized,
            "terms": r.roof.terms,
            "bounds": bounds_json(&r.bounds),
            "lower_bound_holds": r.lower_bound_holds,
            "decomposition": decomposition,
            "diagnostics": diagnostics_json(&r.roof.diagnostics),
            "seed": config.seed,
            "restarts": config.restarts,
            "tol": config.tol,
        }),
    )?;
    Ok(0)
}

fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let rho = load_state(&args.input, args.common.dims.as_deref())?.to_density();
    let config = config_from(&args.optimizer, args.common.seed, 32)?;
    let b = bounds_report(&rho, &config)?;
    let mut report = json!({
        "command": "bounds",
        "dims": [rho.dims().a(), rho.dims().b()],
        "seed": config.seed,
        "restarts": config.restarts,
        "tol": config.tol,
    });
    report["bounds"] = bounds_json(&b);
    emit(out, report)?;
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let suites = Suite::parse_selection(&args.suite)?;
    let dims = args.common.dims.as_deref().map(parse_dims).transpose()?;
    let config = config_from(&args.optimizer, args.common.seed, 4)?;
    let mut results = Vec::new();
    for s in suites {
        results.push(run_suite(s, dims, &config)?);
    }
    let all_passed = results.iter().all(|r| r.passed);
    match args.common.format {
        Format::Json => emit(
            out,
            json!({
                "command": "verify",
                "seed": config.seed,
                "suites": serde_json::to_value(&results).expect("serializable"),
                "passed": all_passed,
            }),
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["suite", "passed", "max_deviation", "tolerance", "checks"])?;
            for r in &results {
                w.write_record([
                    r.suite.name().to_string(),
                    r.passed.to_string(),
                    crate::format::sig12(r.max_deviation),
                    crate::format::sig12(r.tolerance),
                    r.checks.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    for r in &results {
        eprintln!(
            "{:<12} {}  max deviation {} (tolerance {}){}",
            r.suite.name(),
            if r.passed { "PASS" } else { "FAIL" },
            crate::format::sig12(r.max_deviation),
            crate::format::sig12(r.tolerance),
            r.note.as_ref().map(|n| format!("; note: {n}")).unwrap_or_default()
        );
    }
    Ok(if all_passed { 0 } else { 1 })
}

fn cmd_weak_sim(args: &WeakSimArgs, out: &mut dyn Write) -> Result<i32> {
    if args.shots < MIN_SHOTS {
        return Err(parse_err("shots", format!("{} is below the floor of {MIN_SHOTS}", args.shots)));
    }
    let psi = require_pure(load_state(&args.input, args.common.dims.as_deref())?)?;
    let config = config_from(&args.optimizer, args.common.seed, 4)?;
    let r = estimate_entanglement_sampled(&psi, args.shots, &config)?;
    if let Some(p) = &args.common.out {
        write_shot_records(&r.records, open_out(p)?)?;
    }
    match args.common.format {
        Format::Csv if args.common.out.is_none() => write_shot_records(&r.records, &mut *out)?,
        _ => emit(
            out,
            json!({
                "command": "weak-sim",
                "dims": [psi.dims().a(), psi.dims().b()],
                "estimate": r.estimate,
                "closed_form": r.closed_form,
                "deviation": r.estimate - r.closed_form,
                "shots_per_cell": args.shots,
                "records": args.common.out.as_ref().map(|p| p.display().to_string()),
                "diagnostics": diagnostics_json(&r.diagnostics),
                "seed": config.seed,
                "restarts": config.restarts,
            }),
        )?,
    }
    Ok(0)
}

/// Runs a parsed command, writing reports to `out`. Returns the exit code
/// for successful runs; errors map through [`exit_code`].
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::KdDist(a) => cmd_kd_dist(a, out),
        Command::Pure(a) => cmd_pure(a, out),
        Command::Mixed(a) => cmd_mixed(a, out),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::WeakSim(a) => cmd_weak_sim(a, out),
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let start = Instant::now();
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let code = match run(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    let _ = lock.flush();
    eprintln!("wall time {:.3} s", start.elapsed().as_secs_f64());
    code
}
