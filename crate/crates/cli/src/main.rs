//! Command-line front end for the motensor library.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use motensor::oracle::{psd_scan, PsdScanOptions};
use motensor::supmo::doubling_schedule;
use motensor::verify::{self, VerifyOptions};
use motensor::{
    alpha_star, format_real, lambda_min_curve, AlphaStarOptions, Error, FamilyKind, FamilySpec,
    RootMode, DEFAULT_DENSE_BUDGET,
};
use serde::Serialize;

const BUDGET_VAR: &str = "MOTENSOR_BUDGET";

#[derive(Parser)]
#[command(name = "motensor", version, about = "MO tensor family toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Sup-MO value for an even order
    AlphaStar(AlphaStarArgs),
    /// Smallest H-eigenvalue estimates of MO(alpha) over a range of dimensions
    LambdaMin(LambdaMinArgs),
    /// Run the bundled identity checks
    Verify(VerifyArgs),
    /// Write a family member as a dense tensor
    Materialize(TensorArgs),
    /// Evaluate a family member's form and gradient at a point
    Eval(EvalArgs),
    /// Sample the form on the m-norm sphere looking for negative values
    PsdScan(PsdScanArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bisection,
    Literal,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AlphaStarArgs {
    #[arg(long)]
    order: usize,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, value_enum, default_value = "bisection")]
    mode: Mode,
    /// Largest dimension in the doubling schedule
    #[arg(long, default_value_t = 4096)]
    n_max: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct LambdaMinArgs {
    #[arg(long)]
    order: usize,
    /// A number, or "sup" to compute the Sup-MO value first
    #[arg(long, default_value = "sup", allow_hyphen_values = true)]
    alpha: String,
    /// A single dimension `n` or a range `from:to`
    #[arg(long)]
    dims: String,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_fault: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TensorArgs {
    #[arg(long, value_parser = parse_family)]
    family: FamilyKind,
    #[arg(long)]
    dims: usize,
    /// Defaults to 2, the only order of the Moler matrix
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// MO parameter; a number or "sup"
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    tensor: TensorArgs,
    /// Comma-separated point, e.g. `1,-1,0`
    #[arg(long, allow_hyphen_values = true)]
    x: String,
}

#[derive(Args)]
struct PsdScanArgs {
    #[command(flatten)]
    tensor: TensorArgs,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_family(s: &str) -> Result<FamilyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed command: exit code, message, and optional partial output.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OuterBudget { .. }
        | Error::FixedPointLimit { .. }
        | Error::InnerIterationLimit { .. } => 2,
        Error::EstimatorFailure { .. } | Error::CurveFailure { .. } => 3,
        Error::SizeBudget { .. } => 5,
        _ => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::usage(format!("cannot write output: {e}"))
    }
}

fn budget() -> Result<u64, Failure> {
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::usage(format!(
                "{BUDGET_VAR} must be a non-negative integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(DEFAULT_DENSE_BUDGET),
    }
}

fn sink(output: &Output) -> Result<Box<dyn Write>, Failure> {
    Ok(match &output.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            Failure::usage(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(output: &Output, value: &T) -> Result<(), Failure> {
    let mut w = sink(output)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Failure::usage(format!("cannot serialize output: {e}")))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_rows(output: &Output, header: &[String], rows: &[Vec<String>]) -> Result<(), Failure> {
    let w = sink(output)?;
    let mut out = csv::Writer::from_writer(w);
    let fail = |e: csv::Error| Failure::usage(format!("cannot write csv: {e}"));
    out.write_record(header).map_err(fail)?;
    for r in rows {
        out.write_record(r).map_err(fail)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_dims(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::usage(format!("--dims expects `n` or `from:to`, got '{s}'"));
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo < 1 || hi < lo {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn resolve_alpha(raw: &str, order: usize, eps: f64) -> Result<f64, Failure> {
    if raw == "sup" {
        let opts = AlphaStarOptions {
            epsilon: eps,
            ..AlphaStarOptions::default()
        };
        return Ok(alpha_star(order, &opts)?.alpha_star);
    }
    match raw.parse::<f64>() {
        Ok(a) if a.is_finite() => Ok(a),
        _ => Err(Failure::usage(format!(
            "--alpha expects a number or 'sup', got '{raw}'"
        ))),
    }
}

fn even_order(order: usize) -> Result<(), Failure> {
    if order % 2 == 1 {
        return Err(Error::OddOrder(order).into());
    }
    Ok(())
}

fn run_alpha_star(args: &AlphaStarArgs) -> Result<(), Failure> {
    even_order(args.order)?;
    if args.eps.is_nan() || args.eps <= 0.0 {
        return Err(Failure::usage("--eps must be positive"));
    }
    if args.n_max < 2 {
        return Err(Failure::usage("--n-max must be at least 2"));
    }
    let opts = AlphaStarOptions {
        epsilon: args.eps,
        mode: match args.mode {
            Mode::Bisection => RootMode::Bisection,
            Mode::Literal => RootMode::Literal,
        },
        schedule: doubling_schedule(2, args.n_max),
        ..AlphaStarOptions::default()
    };
    let (trace, failure) = match alpha_star(args.order, &opts) {
        Ok(t) => (t, None),
        Err(Error::OuterBudget { trace }) => {
            let message = format!(
                "n-schedule exhausted before successive fixed points agreed to {}",
                args.eps
            );
            (*trace, Some(Failure { code: 2, message }))
        }
        Err(e) => return Err(e.into()),
    };
    match args.output.format {
        Format::Json => write_json(&args.output, &trace)?,
        Format::Csv => {
            let mut w = sink(&args.output)?;
            trace.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    failure.map_or(Ok(()), Err)
}

fn write_curve(output: &Output, curve: &motensor::LambdaCurve) -> Result<(), Failure> {
    match output.format {
        Format::Json => write_json(output, curve),
        Format::Csv => {
            let mut w = sink(output)?;
            curve.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn run_lambda_min(args: &LambdaMinArgs) -> Result<(), Failure> {
    even_order(args.order)?;
    let (lo, hi) = parse_dims(&args.dims)?;
    if args.starts == 0 {
        return Err(Failure::usage("--starts must be positive"));
    }
    let alpha = resolve_alpha(&args.alpha, args.order, args.eps)?;
    match lambda_min_curve(args.order, alpha, lo, hi, args.starts, args.seed) {
        Ok(curve) => {
            write_curve(&args.output, &curve)?;
            if !curve.is_strictly_decreasing() {
                let flagged: Vec<String> = curve
                    .rows
                    .iter()
                    .filter(|r| r.strictly_decreasing == Some(false))
                    .map(|r| r.n.to_string())
                    .collect();
                eprintln!(
                    "warning: not strictly decreasing at n = {}",
                    flagged.join(", ")
                );
            }
            Ok(())
        }
        Err(Error::CurveFailure { partial, n, reason }) => {
            write_curve(&args.output, &partial)?;
            Err(Failure {
                code: 3,
                message: format!("estimator failed at n = {n}: {reason}"),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn run_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let opts = VerifyOptions {
        dims: args.dims,
        order: args.order,
        seed: args.seed,
        budget: budget()?,
        inject_fault: args.inject_fault,
    };
    let report = verify::run(&opts)?;
    match args.output.format {
        Format::Json => write_json(&args.output, &report)?,
        Format::Csv => {
            let header = ["name", "passed", "max_diff", "tolerance", "cases"].map(String::from);
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.passed.to_string(),
                        format_real(c.max_diff),
                        format_real(c.tolerance),
                        c.cases.to_string(),
                    ]
                })
                .collect();
            write_rows(&args.output, &header, &rows)?;
        }
    }
    if report.all_passed {
        Ok(())
    } else {
        let names: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
        Err(Failure {
            code: 4,
            message: format!("failed checks: {}", names.join(", ")),
        })
    }
}

fn family_spec(args: &TensorArgs) -> Result<FamilySpec, Failure> {
    let alpha = match (&args.alpha, args.family) {
        (Some(raw), FamilyKind::MO) => Some(resolve_alpha(raw, args.order, args.eps)?),
        (None, FamilyKind::MO) => return Err(Failure::usage("family MO needs --alpha")),
        (Some(_), _) => return Err(Failure::usage("--alpha only applies to family MO")),
        (None, _) => None,
    };
    let spec = FamilySpec {
        kind: args.family,
        n: args.dims,
        m: args.order,
        alpha,
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
struct Materialized<T> {
    spec: FamilySpec,
    tensor: motensor::DenseExport<T>,
    /// All `n^m` entries as nested arrays.
    array: serde_json::Value,
}

fn export_rows<T: ToString>(e: &motensor::DenseExport<T>) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = (1..=e.order).map(|k| format!("i{k}")).collect();
    header.push("value".into());
    let rows = e
        .entries
        .iter()
        .map(|d| {
            let mut r: Vec<String> = d.index.iter().map(|i| i.to_string()).collect();
            r.push(d.value.to_string());
            r
        })
        .collect();
    (header, rows)
}

fn emit<T: Copy + Serialize + ToString>(
    output: &Output,
    spec: FamilySpec,
    dense: &motensor::DenseSymmetricTensor<T>,
) -> Result<(), Failure> {
    let tensor = dense.export();
    match output.format {
        Format::Json => write_json(
            output,
            &Materialized {
                spec,
                array: dense.to_nested(),
                tensor,
            },
        ),
        Format::Csv => {
            let (h, r) = export_rows(&tensor);
            write_rows(output, &h, &r)
        }
    }
}

fn run_materialize(args: &TensorArgs) -> Result<(), Failure> {
    let spec = family_spec(args)?;
    let budget = budget()?;
    match spec.dense_exact(budget) {
        Ok(exact) => emit(&args.output, spec, &exact),
        Err(Error::NotInteger) => emit(&args.output, spec, &spec.dense_by_entry(budget)?),
        Err(e) => Err(e.into()),
    }
}

fn parse_point(s: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let x: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::usage(format!("--x expects comma-separated numbers, got '{s}'")))?;
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        }
        .into());
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Failure::usage("--x must be finite"));
    }
    Ok(x)
}

#[derive(Serialize)]
struct Evaluation {
    spec: FamilySpec,
    x: Vec<f64>,
    /// `A x^m`
    value: f64,
    /// `A x^{m-1}`
    gradient: Vec<f64>,
    m_norm: f64,
    /// `A x^m / ||x||_m^m`; absent at `x = 0`
    rayleigh: Option<f64>,
}

fn run_eval(args: &EvalArgs) -> Result<(), Failure> {
    let spec = family_spec(&args.tensor)?;
    let x = parse_point(&args.x, spec.n)?;
    let t = spec.rank_one()?;
    let value = t.eval_poly(&x)?;
    let gradient = t.eval_grad(&x)?;
    let norm = motensor::m_norm(&x, spec.m);
    let rayleigh = (norm > 0.0).then(|| value / norm.powi(spec.m as i32));
    let e = Evaluation {
        spec,
        x,
        value,
        gradient,
        m_norm: norm,
        rayleigh,
    };
    let output = &args.tensor.output;
    match output.format {
        Format::Json => write_json(output, &e),
        Format::Csv => {
            let header = ["value", "m_norm", "rayleigh", "gradient"].map(String::from);
            let grad: Vec<String> = e.gradient.iter().map(|&g| format_real(g)).collect();
            let row = vec![
                format_real(e.value),
                format_real(e.m_norm),
                e.rayleigh.map_or(String::new(), format_real),
                grad.join(";"),
            ];
            write_rows(output, &header, &[row])
        }
    }
}

#[derive(Serialize)]
struct ScanOutput {
    spec: FamilySpec,
    samples: usize,
    seed: u64,
    min_value: f64,
    argmin: Vec<f64>,
    evaluations: usize,
    disproves_psd: bool,
}

fn run_psd_scan(args: &PsdScanArgs) -> Result<(), Failure> {
    let spec = family_spec(&args.tensor)?;
    even_order(spec.m)?;
    let t = spec.rank_one()?;
    let opts = PsdScanOptions {
        samples: args.samples,
        seed: args.seed,
        ..PsdScanOptions::default()
    };
    let r = psd_scan(&t, &opts)?;
    let out = ScanOutput {
        spec,
        samples: args.samples,
        seed: args.seed,
        disproves_psd: r.disproves_psd(),
        min_value: r.min_value,
        argmin: r.argmin,
        evaluations: r.evaluations,
    };
    let output = &args.tensor.output;
    match output.format {
        Format::Json => write_json(output, &out),
        Format::Csv => {
            let header = ["min_value", "disproves_psd", "evaluations", "argmin"].map(String::from);
            let argmin: Vec<String> = out.argmin.iter().map(|&v| format_real(v)).collect();
            let row = vec![
                format_real(out.min_value),
                out.disproves_psd.to_string(),
                out.evaluations.to_string(),
                argmin.join(";"),
            ];
            write_rows(output, &header, &[row])
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::AlphaStar(a) => run_alpha_star(a),
        Command::LambdaMin(a) => run_lambda_min(a),
        Command::Verify(a) => run_verify(a),
        Command::Materialize(a) => run_materialize(a),
        Command::Eval(a) => run_eval(a),
        Command::PsdScan(a) => run_psd_scan(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
