//! Command-line front end: single-instance solves, benchmark sweeps, and
//! instance file generation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use sparserec::bench::{run_sweep, sweep_p, write_report, BenchmarkReport, SweepConfig};
use sparserec::problem::{generate_instance_with, read_instance, NonzeroDist, ProblemInstance};
use sparserec::solver::{relative_error, solve, Algorithm, SolverConfig};
use sparserec::{Error, Result};

#[derive(Parser)]
#[command(name = "sparserec", version, about = "Sparse recovery solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a single-line summary.
    Solve(SolveArgs),
    /// Sweep sparsity levels for several algorithms and write report files.
    Bench(SweepArgs),
    /// Sweep the exponent p for the reweighted algorithm and write report files.
    SweepP(SweepArgs),
    /// Generate an instance file and print its checksum.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file written by `gen`; omit to generate one from --m --n --r --seed.
    instance: Option<PathBuf>,
    /// Rows of the sensing matrix (generation mode).
    #[arg(long)]
    m: Option<usize>,
    /// Columns of the sensing matrix (generation mode).
    #[arg(long)]
    n: Option<usize>,
    /// Number of nonzeros in the planted signal (generation mode).
    #[arg(long)]
    r: Option<usize>,
    /// Seed for instance generation (generation mode).
    #[arg(long)]
    seed: Option<u64>,
    /// Algorithm: it, soft, or half.
    #[arg(long, default_value = "it")]
    alg: String,
    /// Exponent p in (0, 1) for the reweighted algorithm.
    #[arg(long, default_value_t = 0.7)]
    p: f64,
    /// Step-size margin in (0, 1); mu = (1 - eta) / ||A||^2.
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    /// Relative step-norm stopping tolerance.
    #[arg(long, default_value = "1e-8")]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Scale on the residual gradient in the smoothing-offset rule.
    #[arg(long, default_value_t = 0.7)]
    epsilon_scale: f64,
    /// Floor for the smoothing offsets.
    #[arg(long, default_value = "1e-3")]
    epsilon_floor: f64,
    /// Freeze the regularization weight instead of the adaptive rule.
    #[arg(long)]
    fixed_lambda: Option<f64>,
    /// Write a per-iteration trace CSV (iter,h1,step_norm,lambda,support).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Flat `key = value` config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for trials.csv, aggregate.csv, metadata.json.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads [default: available cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Rows of the sensing matrix [default: 256].
    #[arg(long)]
    m: Option<usize>,
    /// Columns of the sensing matrix [default: 1024].
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sparsity levels [default: 10,20,...,90].
    #[arg(long, value_delimiter = ',')]
    r_values: Option<Vec<usize>>,
    /// Comma-separated exponents for the reweighted algorithm.
    #[arg(long, value_delimiter = ',')]
    p_values: Option<Vec<f64>>,
    /// Comma-separated algorithms (bench only) [default: it,soft,half].
    #[arg(long, value_delimiter = ',')]
    algs: Option<Vec<String>>,
    /// Trials per (algorithm, r) cell [default: 20].
    #[arg(long)]
    trials: Option<usize>,
    /// Relative-error threshold counted as success [default: 1e-3].
    #[arg(long)]
    threshold: Option<f64>,
    /// Master seed for per-trial seed derivation [default: 1].
    #[arg(long)]
    master_seed: Option<u64>,
    /// Nonzero value distribution: gaussian or rademacher [default: gaussian].
    #[arg(long)]
    dist: Option<String>,
    /// Step-size margin in (0, 1) [default: 0.01].
    #[arg(long)]
    eta: Option<f64>,
    /// Relative step-norm stopping tolerance [default: 1e-8].
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap per solve [default: 5000].
    #[arg(long)]
    max_iters: Option<usize>,
    /// Scale on the residual gradient in the smoothing-offset rule [default: 0.7].
    #[arg(long)]
    epsilon_scale: Option<f64>,
    /// Floor for the smoothing offsets [default: 1e-3].
    #[arg(long)]
    epsilon_floor: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    /// Rows of the sensing matrix.
    #[arg(long)]
    m: usize,
    /// Columns of the sensing matrix.
    #[arg(long)]
    n: usize,
    /// Number of nonzeros in the planted signal.
    #[arg(long)]
    r: usize,
    /// Generation seed.
    #[arg(long)]
    seed: u64,
    /// Destination file.
    #[arg(long)]
    out: PathBuf,
    /// Nonzero value distribution: gaussian or rademacher [default: gaussian].
    #[arg(long, default_value = "gaussian")]
    dist: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{err}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_sweep(args, SweepKind::Sparsity),
        Command::SweepP(args) => cmd_sweep(args, SweepKind::Exponent),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Contract(_) => ExitCode::from(1),
                Error::Io { .. } | Error::Format(_) => ExitCode::from(2),
            }
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let instance = load_or_generate(&args)?;
    let mut config = SolverConfig::new(Algorithm::parse(&args.alg)?, instance.sparsity);
    config.p = args.p;
    config.eta = args.eta;
    config.tolerance = args.tol;
    config.max_iterations = args.max_iters;
    config.epsilon_scale = args.epsilon_scale;
    config.epsilon_floor = args.epsilon_floor;
    config.fixed_lambda = args.fixed_lambda;
    let result = solve(&instance.a, &instance.b, &config)?;
    if let Some(path) = &args.trace {
        write_trace(&result.trace, path)?;
    }
    let re = relative_error(&result.solution, &instance.x0)?;
    println!(
        "alg={} re={re:.6e} iterations={} termination={}",
        config.algorithm.as_str(),
        result.iterations,
        result.termination.as_str(),
    );
    Ok(())
}

fn load_or_generate(args: &SolveArgs) -> Result<ProblemInstance> {
    if let Some(path) = &args.instance {
        return read_instance(path);
    }
    match (args.m, args.n, args.r, args.seed) {
        (Some(m), Some(n), Some(r), Some(seed)) => {
            generate_instance_with(m, n, r, seed, NonzeroDist::Gaussian)
        }
        _ => Err(Error::contract(
            "no instance source: pass an instance file or all of --m --n --r --seed",
        )),
    }
}

fn write_trace(trace: &[sparserec::solver::IterationRecord], path: &Path) -> Result<()> {
    let mut out = String::from("iter,h1,step_norm,lambda,support\n");
    for (k, rec) in trace.iter().enumerate() {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{}\n",
            k + 1,
            rec.objective,
            rec.step_norm,
            rec.lambda,
            rec.support_size,
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

enum SweepKind {
    Sparsity,
    Exponent,
}

fn cmd_sweep(args: SweepArgs, kind: SweepKind) -> Result<()> {
    let mut config = SweepConfig::new(256, 1024, (1..=9).map(|k| 10 * k).collect());
    if let Some(path) = &args.config {
        apply_config_file(&mut config, path)?;
    }
    apply_flags(&mut config, &args)?;
    if let SweepKind::Exponent = kind {
        config.algorithms = vec![Algorithm::It];
        if args.p_values.is_none() && config.p_values.len() == 1 {
            config.p_values = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::contract(format!("cannot build worker pool: {e}")))?;
    let report = pool.install(|| match kind {
        SweepKind::Sparsity => run_sweep(&config),
        SweepKind::Exponent => sweep_p(&config),
    })?;

    write_report(&report, &args.out)?;
    print_cells(&report);
    if let Some(p) = report.best_p {
        println!("best p by area under the success curve: {p}");
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

fn print_cells(report: &BenchmarkReport) {
    println!(
        "{:<10} {:>5} {:>5} {:>9} {:>12} {:>12}",
        "algorithm", "p", "r", "success", "mean_re", "mean_iters"
    );
    for cell in &report.cells {
        let p = cell.p.map(|p| format!("{p}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:>5} {:>5} {:>9.2} {:>12.3e} {:>12.1}",
            cell.algorithm.as_str(),
            p,
            cell.r,
            cell.success_rate,
            cell.mean_relative_error,
            cell.mean_iterations,
        );
    }
}

fn apply_flags(config: &mut SweepConfig, args: &SweepArgs) -> Result<()> {
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(r_values) = &args.r_values {
        config.r_values = r_values.clone();
    }
    if let Some(p_values) = &args.p_values {
        config.p_values = p_values.clone();
    }
    if let Some(algs) = &args.algs {
        config.algorithms = algs
            .iter()
            .map(|s| Algorithm::parse(s))
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(threshold) = args.threshold {
        config.success_threshold = threshold;
    }
    if let Some(master_seed) = args.master_seed {
        config.master_seed = master_seed;
    }
    if let Some(dist) = &args.dist {
        config.nonzero_dist = NonzeroDist::parse(dist)?;
    }
    if let Some(eta) = args.eta {
        config.eta = eta;
    }
    if let Some(tol) = args.tol {
        config.tolerance = tol;
    }
    if let Some(max_iters) = args.max_iters {
        config.max_iterations = max_iters;
    }
    if let Some(epsilon_scale) = args.epsilon_scale {
        config.epsilon_scale = epsilon_scale;
    }
    if let Some(epsilon_floor) = args.epsilon_floor {
        config.epsilon_floor = epsilon_floor;
    }
    Ok(())
}

fn apply_config_file(config: &mut SweepConfig, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::format(format!("{}:{}: expected `key = value`", path.display(), lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| {
            Error::format(format!(
                "{}:{}: {what} `{value}` for key `{key}`",
                path.display(),
                lineno + 1
            ))
        };
        match key {
            "m" => config.m = value.parse().map_err(|_| bad("invalid integer"))?,
            "n" => config.n = value.parse().map_err(|_| bad("invalid integer"))?,
            "r_values" => config.r_values = parse_list(value).map_err(|_| bad("invalid list"))?,
            "p_values" => config.p_values = parse_list(value).map_err(|_| bad("invalid list"))?,
            "algorithms" => {
                config.algorithms = value
                    .split(',')
                    .map(|s| Algorithm::parse(s.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "trials" => config.trials = value.parse().map_err(|_| bad("invalid integer"))?,
            "success_threshold" => {
                config.success_threshold = value.parse().map_err(|_| bad("invalid number"))?;
            }
            "master_seed" => {
                config.master_seed = value.parse().map_err(|_| bad("invalid integer"))?;
            }
            "nonzero_dist" => config.nonzero_dist = NonzeroDist::parse(value)?,
            "eta" => config.eta = value.parse().map_err(|_| bad("invalid number"))?,
            "tolerance" => config.tolerance = value.parse().map_err(|_| bad("invalid number"))?,
            "max_iterations" => {
                config.max_iterations = value.parse().map_err(|_| bad("invalid integer"))?;
            }
            "epsilon_scale" => {
                config.epsilon_scale = value.parse().map_err(|_| bad("invalid number"))?;
            }
            "epsilon_floor" => {
                config.epsilon_floor = value.parse().map_err(|_| bad("invalid number"))?;
            }
            _ => {
                return Err(Error::format(format!(
                    "{}:{}: unknown key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
        }
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, T::Err> {
    value.split(',').map(|s| s.trim().parse()).collect()
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let dist = NonzeroDist::parse(&args.dist)?;
    let instance = generate_instance_with(args.m, args.n, args.r, args.seed, dist)?;
    sparserec::problem::write_instance(&instance, &args.out)?;
    let bytes = fs::read(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let digest = Sha256::digest(&bytes);
    let mut checksum = String::with_capacity(64);
    for byte in digest {
        checksum.push_str(&format!("{byte:02x}"));
    }
    println!("wrote {} sha256={checksum}", args.out.display());
    Ok(())
}
