//! Batch front-end: config-driven verification runs, convergence sweeps and
//! model-kernel evaluations, with deterministic JSON/CSV output.

mod config;
mod report;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use lefgpd::heatkernel::{EllipticSymbol, ModelKernelEvaluator, SymbolTerm};
use lefgpd::lefschetz::{verify, LadderSpec};
use lefgpd::linalg::SquareMatrix;
use std::path::PathBuf;
use std::process::ExitCode;

/// Heat-kernel verification of the fixed point formula on flat tori.
#[derive(Debug, Parser)]
#[command(name = "lefgpd", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full three-way verification described by a config file.
    Verify(VerifyArgs),
    /// Emit the convergence ladder as a CSV table.
    Sweep(SweepArgs),
    /// Evaluate a constant-coefficient model kernel and its total integral.
    ModelKernel(ModelKernelArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Report destination (overrides `output.path` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Largest deformation parameter of the ladder.
    #[arg(long = "t-max")]
    t_max: f64,
    /// Geometric ratio between consecutive rungs, in (0, 1).
    #[arg(long)]
    ratio: f64,
    /// Number of rungs.
    #[arg(long)]
    rungs: usize,
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelKernelArgs {
    /// Operator order 2s (even, >= 2).
    #[arg(long)]
    order: u32,
    /// Space dimension n.
    #[arg(long)]
    dim: usize,
    /// Coefficient spec: a number, a matrix [[..],..], or
    /// {"terms": [{"alpha": [..], "matrix": [[..],..]}, ..]}.
    #[arg(long)]
    coeff: String,
    /// JSON destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // clap reserves exit code 2 for usage errors; remap those onto the
    // config-error code so 2 stays "verdict failed"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    if let Err(message) = init_thread_pool() {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    let code = match cli.command {
        Command::Verify(args) => cmd_verify(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::ModelKernel(args) => cmd_model_kernel(&args),
    };
    match code {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

/// Cap the worker count from LEFGPD_THREADS (default: all cores). Results
/// are byte-identical regardless of the setting.
fn init_thread_pool() -> Result<(), String> {
    match std::env::var("LEFGPD_THREADS") {
        Ok(value) => {
            let threads: usize = value
                .parse()
                .map_err(|_| format!("LEFGPD_THREADS must be a positive integer, got {value:?}"))?;
            if threads == 0 {
                return Err("LEFGPD_THREADS must be >= 1".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(e.to_string()),
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    RunConfig::from_json(&text)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode, String> {
    let run = load_config(&args.config)?;
    let config = run.to_verification()?;
    if run.verbosity > 0 {
        eprintln!(
            "verify: {} rungs, t_max {}, grid base {}",
            config.ladder.rungs,
            config.ladder.t_max,
            config.geom.grid_size()
        );
    }
    let report = verify(&config).map_err(|e| e.to_string())?;

    let format = run
        .output
        .as_ref()
        .map(|o| o.format.clone())
        .unwrap_or_else(|| "json".into());
    let text = match format.as_str() {
        "csv" => report::report_to_csv(&report),
        _ => report::report_to_json(&report),
    };
    let config_path = run
        .output
        .as_ref()
        .and_then(|o| o.path.clone().map(PathBuf::from));
    let destination = args.out.clone().or(config_path);
    emit(&text, destination.as_ref())?;
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode, String> {
    let run = load_config(&args.config)?;
    let mut config = run.to_verification()?;
    config.ladder = LadderSpec {
        t_max: args.t_max,
        ratio: args.ratio,
        rungs: args.rungs,
    };
    config.validate().map_err(|e| e.to_string())?;
    let report = verify(&config).map_err(|e| e.to_string())?;
    let text = report::report_to_csv(&report);
    let config_path = run
        .output
        .as_ref()
        .and_then(|o| o.path.clone().map(PathBuf::from));
    let destination = args.out.clone().or(config_path);
    emit(&text, destination.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_model_kernel(args: &ModelKernelArgs) -> Result<ExitCode, String> {
    if args.order == 0 || !args.order.is_multiple_of(2) {
        return Err(format!(
            "--order must be a positive even integer, got {}",
            args.order
        ));
    }
    let symbol = parse_symbol(args.order, args.dim, &args.coeff)?;
    let evaluator = ModelKernelEvaluator::new(&symbol).map_err(|e| e.to_string())?;
    let total = evaluator.total_integral().map_err(|e| e.to_string())?;

    // samples on the declared grid {0, 0.5, ..., 2.0}^n
    let offsets = [0.0f64, 0.5, 1.0, 1.5, 2.0];
    let mut samples = Vec::new();
    let mut index = vec![0usize; args.dim];
    'grid: loop {
        let point: Vec<f64> = index.iter().map(|&i| offsets[i]).collect();
        samples.push((point.clone(), evaluator.eval(&point)));
        let mut axis = 0;
        loop {
            index[axis] += 1;
            if index[axis] < offsets.len() {
                break;
            }
            index[axis] = 0;
            axis += 1;
            if axis == args.dim {
                break 'grid;
            }
        }
    }

    let text = report::model_kernel_to_json(args.order, args.dim, &total, &samples);
    emit(&text, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

/// Accept a bare number (scalar coefficient), a matrix, or the full
/// {"terms": [..]} form.
fn parse_symbol(order: u32, dim: usize, coeff: &str) -> Result<EllipticSymbol<f64>, String> {
    let value: serde_json::Value =
        serde_json::from_str(coeff).map_err(|e| format!("--coeff is not valid JSON: {e}"))?;
    let half_order = order / 2;

    let matrix_from_json = |v: &serde_json::Value| -> Result<SquareMatrix<f64>, String> {
        let rows = v
            .as_array()
            .ok_or_else(|| "coefficient matrix must be an array of rows".to_string())?;
        let parsed: Result<Vec<Vec<f64>>, String> = rows
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| "matrix row must be an array".to_string())?
                    .iter()
                    .map(|x| {
                        x.as_f64()
                            .ok_or_else(|| "matrix entries must be numbers".to_string())
                    })
                    .collect()
            })
            .collect();
        let parsed = parsed?;
        if parsed.iter().any(|row| row.len() != parsed.len()) {
            return Err("coefficient matrix must be square".into());
        }
        Ok(SquareMatrix::from_rows(&parsed))
    };

    let symbol = if let Some(a) = value.as_f64() {
        EllipticSymbol::isotropic(dim, half_order, SquareMatrix::scalar(a))
    } else if value.is_array() {
        EllipticSymbol::isotropic(dim, half_order, matrix_from_json(&value)?)
    } else if let Some(object) = value.as_object() {
        let terms_json = object
            .get("terms")
            .and_then(|t| t.as_array())
            .ok_or_else(|| "--coeff object needs a \"terms\" array".to_string())?;
        let mut terms = Vec::new();
        for term in terms_json {
            let alpha: Vec<u32> = term
                .get("alpha")
                .and_then(|a| a.as_array())
                .ok_or_else(|| "term needs an \"alpha\" array".to_string())?
                .iter()
                .map(|v| v.as_u64().map(|x| x as u32))
                .collect::<Option<_>>()
                .ok_or_else(|| "alpha entries must be nonnegative integers".to_string())?;
            let matrix = matrix_from_json(
                term.get("matrix")
                    .ok_or_else(|| "term needs a \"matrix\"".to_string())?,
            )?;
            terms.push(SymbolTerm {
                alpha,
                coefficient: matrix,
            });
        }
        EllipticSymbol::new(dim, half_order, terms)
    } else {
        return Err("--coeff must be a number, a matrix, or {\"terms\": [..]}".into());
    };
    symbol.map_err(|e| e.to_string())
}
