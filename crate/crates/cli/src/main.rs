//! `nedpca`: exact tables, partition functions, simulation and the
//! verification suite from the command line.
//!
//! Exit codes: 0 success, 1 verification failure or I/O error, 2 invalid
//! input, 3 resource cap exceeded.

mod config;
mod render;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use nedpca::closed_forms::{
    density_formula, density_formula_exact, partition_brute_force, partition_formula, partition_formula_exact,
    stationary_table_formula, FORMULA_TABLE_SITE_CAP,
};
use nedpca::exact::{audit_detailed_balance, balance_residual, build_matrix, solve_stationary, StationaryTable};
use nedpca::m2::{free_energy, z2_recurrence, z2_series};
use nedpca::montecarlo::{self, KernelChoice, SimulationPlan, Trajectory, TRACE_LINE_CAP};
use nedpca::scalar::parse_rational;
use nedpca::verify::{self, Level};
use nedpca::{Configuration, Error, ModelParams, Scalar};

use render::{csv_row, float, Emit};

/// Largest ring evaluated symbolically.
const EXACT_RATIONAL_SITE_CAP: usize = 12;

const SUBCOMMANDS: &[&str] = &[
    "exact",
    "partition",
    "simulate",
    "m2",
    "free-energy-grid",
    "edges",
    "verify",
];

#[derive(Parser, Debug)]
#[command(
    name = "nedpca",
    version,
    about = "Evaporation-deposition cellular automaton on a ring"
)]
struct Cli {
    /// Write output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Read flag defaults from a flat key=value file; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Formula and solver stationary tables, Z, density and the detailed-balance audit.
    #[command(args_override_self = true)]
    Exact(ExactArgs),
    /// Partition function and density, optionally over a grid of rates.
    #[command(args_override_self = true)]
    Partition(PartitionArgs),
    /// Seeded multi-chain Monte Carlo run.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Two-site neighbourhood analytics: free energy and Z_n series.
    #[command(args_override_self = true)]
    M2(M2Args),
    /// Free energy of the two-site model over a square grid of rates.
    #[command(name = "free-energy-grid", args_override_self = true)]
    FreeEnergyGrid(GridArgs),
    /// Positive-probability transitions of the chain.
    #[command(args_override_self = true)]
    Edges(EdgesArgs),
    /// Run the acceptance suite.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Ring size.
    #[arg(short = 'n')]
    n: usize,
    /// Neighbourhood size.
    #[arg(short = 'm', default_value_t = 2)]
    m: usize,
    /// Deposition probability on an empty window; decimal or a/b.
    #[arg(long, allow_hyphen_values = true)]
    p1: String,
    /// Survival-blocking probability; decimal or a/b.
    #[arg(long, allow_hyphen_values = true)]
    p2: String,
}

impl ModelArgs {
    fn float_params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(
            self.n,
            self.m,
            parse_rate(&self.p1)?,
            parse_rate(&self.p2)?,
        )?)
    }

    fn exact_params(&self) -> Result<ModelParams<BigRational>> {
        Ok(ModelParams::new(
            self.n,
            self.m,
            parse_rational(&self.p1)?,
            parse_rational(&self.p2)?,
        )?)
    }
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Exact rational arithmetic (rates must be decimals or fractions).
    #[arg(long)]
    exact_rational: bool,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    exact_rational: bool,
    /// Sweep a K x K grid of rates over [--min, --max]^2 instead of the
    /// single point; emits CSV.
    #[arg(long, value_name = "K")]
    grid: Option<usize>,
    #[arg(long, default_value_t = 0.02)]
    min: f64,
    #[arg(long, default_value_t = 0.98)]
    max: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value_t = montecarlo::DEFAULT_BURN_IN)]
    burn_in: u64,
    /// Recorded samples per chain.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    thin: u64,
    /// Start state: a binary string (site 1 leftmost) or its integer encoding.
    #[arg(long)]
    initial: Option<String>,
    /// Keep a visit histogram over all 2^n configurations.
    #[arg(long)]
    histogram: bool,
    #[arg(long, value_enum, default_value_t = KernelArg::Bit)]
    kernel: KernelArg,
    /// Write chain 0's states, one per line, to FILE.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    Bit,
    Scalar,
}

#[derive(Args, Debug)]
struct M2Args {
    #[arg(long, allow_hyphen_values = true)]
    p1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    p2: Option<String>,
    /// K x K grid over [--min, --max]^2 instead of a single point.
    #[arg(long, value_name = "K")]
    grid: Option<usize>,
    #[arg(long, default_value_t = 0.02)]
    min: f64,
    #[arg(long, default_value_t = 0.98)]
    max: f64,
    /// Emit Z_0..Z_n from the generating function instead of the free energy.
    #[arg(long)]
    series: bool,
    #[arg(short = 'n', default_value_t = 50)]
    n: usize,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_name = "K", default_value_t = 50)]
    grid: usize,
    #[arg(long, default_value_t = 0.02)]
    min: f64,
    #[arg(long, default_value_t = 0.98)]
    max: f64,
}

#[derive(Args, Debug)]
struct EdgesArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    #[arg(long)]
    full: bool,
    /// Run only these criteria (comma separated).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Validation failures outside the library's own error type.
#[derive(Debug)]
struct InvalidInput(String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidInput(msg.into()).into()
}

fn parse_rate(text: &str) -> Result<f64> {
    match text.trim().parse::<f64>() {
        Ok(v) => Ok(v),
        Err(_) => Ok(parse_rational(text)?.to_f64()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::BudgetExceeded { .. } => 3,
            Error::SolveFailed(_) => 1,
            _ => 2,
        };
    }
    if err.downcast_ref::<InvalidInput>().is_some() {
        return 2;
    }
    1
}

fn grid_axis(k: usize, min: f64, max: f64) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("--grid must be at least 1"));
    }
    if !(min > 0.0 && max <= 1.0 && min <= max) {
        return Err(invalid(format!("grid range [{min}, {max}] must lie in (0, 1]")));
    }
    if k == 1 {
        return Ok(vec![min]);
    }
    let step = (max - min) / (k - 1) as f64;
    Ok((0..k)
        .map(|i| if i + 1 == k { max } else { min + step * i as f64 })
        .collect())
}

fn write_json(out: &mut dyn Write, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn table_json<T: Emit>(table: &StationaryTable<T>) -> Value {
    Value::Array(table.probs.iter().map(Emit::json).collect())
}

/// Everything `exact` reports, in one number type.
struct ExactReport<T> {
    p1: T,
    p2: T,
    formula: StationaryTable<T>,
    solver: StationaryTable<T>,
    gap: T,
    z_formula: T,
    z_brute: T,
    density_formula: T,
    density_sites: T,
    residual: T,
    violation: T,
    reversible: bool,
    witness: (Configuration, Configuration),
    one_way: Option<(Configuration, Configuration)>,
}

fn exact_report<T: Scalar>(
    params: &ModelParams<T>,
    z_formula: T,
    density_formula: T,
    reversible: impl Fn(&T) -> bool,
) -> Result<ExactReport<T>> {
    let matrix = build_matrix(params)?;
    let solver = solve_stationary(&matrix)?;
    let formula = stationary_table_formula(params)?;
    let density_sites = Configuration::all(params.n())?
        .filter(|beta| beta.site(1) == 1)
        .fold(T::zero(), |acc, beta| acc + formula.prob(&beta).clone());
    let audit = audit_detailed_balance(&solver, &matrix);
    Ok(ExactReport {
        p1: params.p1().clone(),
        p2: params.p2().clone(),
        gap: formula.sup_distance(&solver),
        z_brute: partition_brute_force(params)?,
        residual: balance_residual(&solver, &matrix),
        reversible: reversible(&audit.max_violation),
        violation: audit.max_violation,
        witness: audit.witness,
        one_way: audit.one_way_witness,
        formula,
        solver,
        z_formula,
        density_formula,
        density_sites,
    })
}

fn emit_exact<T: Emit>(out: &mut dyn Write, report: &ExactReport<T>, args: &ExactArgs) -> Result<()> {
    let n = args.model.n;
    let verdict = if report.reversible {
        "reversible"
    } else {
        "irreversible"
    };
    let pair = |p: &(Configuration, Configuration)| json!([p.0.to_binary(), p.1.to_binary()]);
    match args.format {
        Format::Json => {
            let configurations: Vec<String> = (0..1u64 << n)
                .map(|b| Configuration::new(b, n).map(|c| c.to_binary()))
                .collect::<Result<_, _>>()?;
            write_json(
                out,
                &json!({
                    "n": n,
                    "m": args.model.m,
                    "p1": report.p1.json(),
                    "p2": report.p2.json(),
                    "arithmetic": if args.exact_rational { "rational" } else { "float" },
                    "configurations": configurations,
                    "formula": table_json(&report.formula),
                    "solver": table_json(&report.solver),
                    "sup_gap": report.gap.json(),
                    "Z": {"formula": report.z_formula.json(), "brute_force": report.z_brute.json()},
                    "density": {"formula": report.density_formula.json(), "site_sum": report.density_sites.json()},
                    "balance_residual": report.residual.json(),
                    "detailed_balance": {
                        "verdict": verdict,
                        "max_violation": report.violation.json(),
                        "witness": pair(&report.witness),
                        "one_way_witness": report.one_way.as_ref().map(pair),
                    },
                }),
            )
        }
        Format::Csv => {
            writeln!(out, "configuration,encoding,formula,solver")?;
            for (i, (f, s)) in report.formula.probs.iter().zip(&report.solver.probs).enumerate() {
                let beta = Configuration::new(i as u64, n)?;
                writeln!(
                    out,
                    "{}",
                    csv_row([beta.to_binary(), i.to_string(), f.text(), s.text()])
                )?;
            }
            let mut summary = io::stderr().lock();
            writeln!(summary, "sup_gap={}", report.gap.text())?;
            writeln!(
                summary,
                "Z formula={} brute_force={}",
                report.z_formula.text(),
                report.z_brute.text()
            )?;
            writeln!(
                summary,
                "density formula={} site_sum={}",
                report.density_formula.text(),
                report.density_sites.text()
            )?;
            writeln!(summary, "balance_residual={}", report.residual.text())?;
            write!(summary, "verdict={verdict} max_violation={}", report.violation.text())?;
            match &report.one_way {
                Some((a, b)) => writeln!(summary, " one_way_witness={a}->{b}")?,
                None => writeln!(summary, " witness={}<->{}", report.witness.0, report.witness.1)?,
            }
            Ok(())
        }
    }
}

fn cmd_exact(args: &ExactArgs, out: &mut dyn Write) -> Result<()> {
    if args.exact_rational {
        let params = args.model.exact_params()?;
        let report = exact_report(
            &params,
            partition_formula_exact(&params),
            density_formula_exact(&params),
            rational_is_zero,
        )?;
        emit_exact(out, &report, args)
    } else {
        let params = args.model.float_params()?;
        let report = exact_report(&params, partition_formula(&params), density_formula(&params), |v| {
            *v < nedpca::exact::DETAILED_BALANCE_ZERO
        })?;
        emit_exact(out, &report, args)
    }
}

fn rational_is_zero(v: &BigRational) -> bool {
    *v == BigRational::from_integer(0.into())
}

fn partition_point(model: &ModelArgs) -> Result<Value> {
    let params = model.float_params()?;
    let z = partition_formula(&params);
    let brute = if params.n() <= FORMULA_TABLE_SITE_CAP {
        Some(partition_brute_force(&params)?)
    } else {
        None
    };
    let recurrence = if params.m() == 2 && params.n() >= 2 {
        let (p1, p2) = params.rates();
        Some(z2_recurrence(params.n().max(2), p1, p2)?[params.n()])
    } else {
        None
    };
    Ok(json!({
        "n": params.n(),
        "m": params.m(),
        "p1": params.rates().0,
        "p2": params.rates().1,
        "Z": z.json(),
        "density": density_formula(&params).json(),
        "brute_force": brute.map(|v| v.json()),
        "recurrence": recurrence.map(|v| v.json()),
    }))
}

fn cmd_partition(args: &PartitionArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(k) = args.grid {
        if args.exact_rational {
            return Err(invalid("--grid and --exact-rational cannot be combined"));
        }
        let axis = grid_axis(k, args.min, args.max)?;
        writeln!(out, "n,m,p1,p2,Z,density")?;
        for &p1 in &axis {
            for &p2 in &axis {
                let params = ModelParams::new(args.model.n, args.model.m, p1, p2)?;
                let row = [
                    params.n().to_string(),
                    params.m().to_string(),
                    float(p1),
                    float(p2),
                    float(partition_formula(&params)),
                    float(density_formula(&params)),
                ];
                writeln!(out, "{}", csv_row(row))?;
            }
        }
        return Ok(());
    }
    if args.exact_rational {
        let params = args.model.exact_params()?;
        if params.n() > EXACT_RATIONAL_SITE_CAP {
            return Err(Error::BudgetExceeded {
                n: params.n(),
                cap: EXACT_RATIONAL_SITE_CAP,
            }
            .into());
        }
        let z = partition_formula_exact(&params);
        let density = density_formula_exact(&params);
        let brute = partition_brute_force(&params)?;
        if brute != z {
            bail!("formula Z = {z} differs from the brute-force sum {brute}");
        }
        return match args.format {
            Format::Json => write_json(
                out,
                &json!({
                    "n": params.n(),
                    "m": params.m(),
                    "p1": params.p1().json(),
                    "p2": params.p2().json(),
                    "Z": z.json(),
                    "density": density.json(),
                    "brute_force": brute.json(),
                }),
            ),
            Format::Csv => {
                writeln!(out, "n,m,p1,p2,Z,density")?;
                let row = [
                    params.n().to_string(),
                    params.m().to_string(),
                    params.p1().text(),
                    params.p2().text(),
                    z.text(),
                    density.text(),
                ];
                writeln!(out, "{}", csv_row(row))?;
                Ok(())
            }
        };
    }
    let record = partition_point(&args.model)?;
    match args.format {
        Format::Json => write_json(out, &record),
        Format::Csv => {
            writeln!(out, "n,m,p1,p2,Z,density")?;
            let num = |key: &str| record[key].as_f64().map(float).unwrap_or_default();
            let row = [
                record["n"].to_string(),
                record["m"].to_string(),
                num("p1"),
                num("p2"),
                num("Z"),
                num("density"),
            ];
            writeln!(out, "{}", csv_row(row))?;
            Ok(())
        }
    }
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let params = args.model.float_params()?;
    let initial = args
        .initial
        .as_deref()
        .map(|s| Configuration::parse(s, params.n()))
        .transpose()?;
    let plan = SimulationPlan {
        seed: args.seed,
        chains: args.chains,
        burn_in: args.burn_in,
        samples: args.samples,
        thin: args.thin,
        initial,
        histogram: args.histogram,
        kernel: match args.kernel {
            KernelArg::Bit => KernelChoice::BitParallel,
            KernelArg::Scalar => KernelChoice::Scalar,
        },
        params,
    };
    plan.validate()?;
    if let Some(path) = &args.trace {
        let start = plan.initial.unwrap_or(Configuration::zeros(plan.params.n())?);
        let steps = plan
            .burn_in
            .saturating_add(plan.samples.saturating_mul(plan.thin))
            .saturating_add(1);
        let lines = usize::try_from(steps).unwrap_or(usize::MAX).min(TRACE_LINE_CAP);
        let mut trace = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for state in Trajectory::new(&plan.params, plan.seed, start)?.take(lines) {
            writeln!(trace, "{state}")?;
        }
        trace.flush()?;
    }
    let summary = montecarlo::run(&plan)?;
    match args.format {
        Format::Json => {
            writeln!(out, "{}", summary.to_json())?;
        }
        Format::Csv => {
            writeln!(
                out,
                "n,m,p1,p2,seed,chains,burn_in,thin,samples,density_mean,density_stderr"
            )?;
            let opt = |v: Option<f64>| v.map(float).unwrap_or_default();
            let (p1, p2) = plan.params.rates();
            let row = [
                summary.n.to_string(),
                summary.m.to_string(),
                float(p1),
                float(p2),
                summary.seed.to_string(),
                summary.chains.to_string(),
                summary.burn_in.to_string(),
                summary.thin.to_string(),
                summary.total_samples.to_string(),
                opt(summary.density_mean),
                opt(summary.density_stderr),
            ];
            writeln!(out, "{}", csv_row(row))?;
        }
    }
    Ok(())
}

fn free_energy_csv(out: &mut dyn Write, points: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    writeln!(out, "p1,p2,F")?;
    for (p1, p2) in points {
        writeln!(out, "{}", csv_row([float(p1), float(p2), float(free_energy(p1, p2)?)]))?;
    }
    Ok(())
}

fn square(axis: &[f64]) -> Vec<(f64, f64)> {
    axis.iter()
        .flat_map(|&p1| axis.iter().map(move |&p2| (p1, p2)))
        .collect()
}

fn cmd_m2(args: &M2Args, out: &mut dyn Write) -> Result<()> {
    let point = match (&args.p1, &args.p2) {
        (Some(p1), Some(p2)) => Some((parse_rate(p1)?, parse_rate(p2)?)),
        (None, None) => None,
        _ => return Err(invalid("--p1 and --p2 must be given together")),
    };
    if args.series {
        let (p1, p2) = point.ok_or_else(|| invalid("--series needs --p1 and --p2"))?;
        let series = z2_series(args.n, p1, p2)?;
        writeln!(out, "n,Z")?;
        for (n, z) in series.coeffs.iter().enumerate() {
            writeln!(out, "{n},{}", float(*z))?;
        }
        return Ok(());
    }
    match (point, args.grid) {
        (Some(_), Some(_)) => Err(invalid("give either a point or --grid, not both")),
        (Some(p), None) => free_energy_csv(out, [p]),
        (None, Some(k)) => free_energy_csv(out, square(&grid_axis(k, args.min, args.max)?)),
        (None, None) => Err(invalid("m2 needs --p1/--p2 or --grid")),
    }
}

fn cmd_edges(args: &EdgesArgs, out: &mut dyn Write) -> Result<()> {
    let params = args.model.float_params()?;
    let edges = build_matrix(&params)?.edges();
    match args.format {
        Format::Csv => {
            writeln!(out, "from,to,probability")?;
            for (a, b, p) in &edges {
                writeln!(out, "{}", csv_row([a.to_binary(), b.to_binary(), float(*p)]))?;
            }
            Ok(())
        }
        Format::Json => {
            let list: Vec<Value> = edges
                .iter()
                .map(|(a, b, p)| json!({"from": a.to_binary(), "to": b.to_binary(), "probability": p}))
                .collect();
            write_json(out, &Value::Array(list))
        }
    }
}

/// Returns whether every selected criterion passed.
fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<bool> {
    let level = if args.full { Level::Full } else { Level::Quick };
    let ids: Vec<u8> = if args.only.is_empty() {
        verify::CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        for id in &args.only {
            if !verify::CRITERIA.iter().any(|(i, _)| i == id) {
                return Err(invalid(format!("no criterion {id}")));
            }
        }
        args.only.clone()
    };
    let mut reports = Vec::new();
    for id in ids {
        let report = verify::run_criterion(id, level);
        if args.format.is_none() {
            writeln!(out, "{report}")?;
            out.flush()?;
        }
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    match args.format {
        None => writeln!(
            out,
            "{} of {} criteria passed",
            reports.iter().filter(|r| r.passed).count(),
            reports.len()
        )?,
        Some(Format::Json) => write_json(out, &json!({"level": level, "passed": passed, "criteria": reports}))?,
        Some(Format::Csv) => {
            writeln!(out, "id,title,passed,seconds,detail")?;
            for r in &reports {
                let detail = format!("\"{}\"", r.detail.replace('"', "\"\""));
                writeln!(out, "{},\"{}\",{},{:.3},{detail}", r.id, r.title, r.passed, r.seconds)?;
            }
        }
    }
    Ok(passed)
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("NEDPCA_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| invalid(format!("NEDPCA_THREADS={value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow!(e))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<()> {
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let mut out: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let ok = match &cli.command {
        Command::Exact(a) => cmd_exact(a, &mut out).map(|_| true),
        Command::Partition(a) => cmd_partition(a, &mut out).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a, &mut out).map(|_| true),
        Command::M2(a) => cmd_m2(a, &mut out).map(|_| true),
        Command::FreeEnergyGrid(a) => {
            free_energy_csv(&mut out, square(&grid_axis(a.grid, a.min, a.max)?)).map(|_| true)
        }
        Command::Edges(a) => cmd_edges(a, &mut out).map(|_| true),
        Command::Verify(a) => cmd_verify(a, &mut out),
    }?;
    out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args_os().collect(), SUBCOMMANDS) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
