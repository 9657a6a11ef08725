//! Benchmark harness for phase-transition experiments: seeded sweeps over a
//! sparsity grid (one curve per algorithm) or an exponent grid (one curve
//! per p), per-trial records, aggregation, and persisted CSV/JSON reports.
//!
//! Reproducibility contract: every trial's instance seed is derived from
//! `(master_seed, r, trial)` alone, so all algorithms and exponents see the
//! same instances, and results are independent of worker parallelism. Trial
//! rows are emitted in job order (r grid order, then trial index, then the
//! combination order), which makes reruns byte-identical apart from the
//! wall-clock column.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::NonzeroDist;
use crate::rng::{derive_seed, GENERATOR_ID, NORMAL_METHOD_ID, SEED_DERIVATION_ID};
use crate::solver::{relative_error, solve, Algorithm, SolverConfig, Termination};

pub const TRIALS_HEADER: &str =
    "algorithm,p,m,n,r,trial,seed,re,success,iterations,wall_time_s,termination";
pub const AGGREGATE_HEADER: &str = "algorithm,p,r,success_rate,mean_re,mean_iters";

/// Outcome of one (algorithm, p, r, trial) solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    /// Exponent used by the reweighted rule; `None` for the baselines.
    pub p: Option<f64>,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub trial: usize,
    /// Instance seed, derived from the master seed, `r`, and `trial`.
    pub seed: u64,
    pub relative_error: f64,
    /// `relative_error <= success_threshold` for the sweep's threshold.
    pub success: bool,
    pub iterations: usize,
    pub wall_time_s: f64,
    /// Termination label; degenerate runs carry their reason after a colon.
    pub termination: String,
}

/// Aggregate over the trials of one (algorithm, p, r) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub algorithm: Algorithm,
    pub p: Option<f64>,
    pub r: usize,
    pub success_rate: f64,
    pub mean_relative_error: f64,
    pub mean_iterations: f64,
}

/// Sweep parameters. Construct with [`SweepConfig::new`] and override
/// fields as needed; the sweep entry points validate before running.
#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub m: usize,
    pub n: usize,
    pub r_values: Vec<usize>,
    /// Exponent grid. [`run_sweep`] uses exactly one value when the
    /// reweighted rule participates; [`sweep_p`] runs one curve per value.
    pub p_values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub success_threshold: f64,
    pub master_seed: u64,
    pub nonzero_dist: NonzeroDist,
    pub eta: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub epsilon_scale: f64,
    pub epsilon_floor: f64,
}

impl SweepConfig {
    pub fn new(m: usize, n: usize, r_values: Vec<usize>) -> Self {
        let defaults = SolverConfig::new(Algorithm::It, 1);
        SweepConfig {
            m,
            n,
            r_values,
            p_values: vec![defaults.p],
            algorithms: Algorithm::ALL.to_vec(),
            trials: 20,
            success_threshold: 1e-3,
            master_seed: 1,
            nonzero_dist: NonzeroDist::Gaussian,
            eta: defaults.eta,
            tolerance: defaults.tolerance,
            max_iterations: defaults.max_iterations,
            epsilon_scale: defaults.epsilon_scale,
            epsilon_floor: defaults.epsilon_floor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.m >= self.n {
            return Err(Error::contract(format!(
                "sweep needs an underdetermined system: m < n, got m={}, n={}",
                self.m, self.n
            )));
        }
        if self.r_values.is_empty() {
            return Err(Error::contract("sweep needs at least one r value"));
        }
        for &r in &self.r_values {
            if r == 0 || r >= self.m {
                return Err(Error::contract(format!(
                    "each r must satisfy 1 <= r < m, got r={r} with m={}",
                    self.m
                )));
            }
        }
        if has_duplicates(&self.r_values) {
            return Err(Error::contract("r values must be distinct"));
        }
        if self.trials == 0 {
            return Err(Error::contract("trials per cell must be at least 1"));
        }
        if !(self.success_threshold.is_finite() && self.success_threshold > 0.0) {
            return Err(Error::contract(format!(
                "success threshold must be positive and finite, got {}",
                self.success_threshold
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::contract("sweep needs at least one algorithm"));
        }
        if has_duplicates(&self.algorithms) {
            return Err(Error::contract("algorithms must be distinct"));
        }
        for &p in &self.p_values {
            if !(p.is_finite() && p > 0.0 && p < 1.0) {
                return Err(Error::contract(format!(
                    "each p must lie in (0, 1), got {p}"
                )));
            }
        }
        if has_duplicates_by_bits(&self.p_values) {
            return Err(Error::contract("p values must be distinct"));
        }
        // Delegate the solver-template checks to the solver validation.
        let mut template = SolverConfig::new(self.algorithms[0], self.r_values[0]);
        if let Some(&p) = self.p_values.first() {
            template.p = p;
        }
        template.eta = self.eta;
        template.tolerance = self.tolerance;
        template.max_iterations = self.max_iterations;
        template.epsilon_scale = self.epsilon_scale;
        template.epsilon_floor = self.epsilon_floor;
        template.validate()
    }
}

/// Final output of a sweep: the config echo, per-cell aggregates, the raw
/// trial rows, and (for exponent sweeps) the winning p.
#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub config: SweepConfig,
    pub cells: Vec<CellStats>,
    pub trials: Vec<TrialRecord>,
    /// Exponent with the largest area under its success curve; set by
    /// [`sweep_p`], `None` for [`run_sweep`]. Ties go to the earlier entry
    /// in the configured p list.
    pub best_p: Option<f64>,
}

/// Runs the sparsity sweep: one success curve per configured algorithm.
pub fn run_sweep(config: &SweepConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let p_for_it = if config.algorithms.contains(&Algorithm::It) {
        if config.p_values.len() != 1 {
            return Err(Error::contract(format!(
                "the sparsity sweep needs exactly one p value when the reweighted \
                 rule participates, got {}",
                config.p_values.len()
            )));
        }
        Some(config.p_values[0])
    } else {
        None
    };
    let combos: Vec<(Algorithm, Option<f64>)> = config
        .algorithms
        .iter()
        .map(|&a| (a, if a == Algorithm::It { p_for_it } else { None }))
        .collect();
    let trials = run_cells(config, &combos)?;
    let cells = aggregate_trials(&trials);
    Ok(BenchmarkReport {
        config: config.clone(),
        cells,
        trials,
        best_p: None,
    })
}

/// Runs the exponent sweep: one success curve per p value, reweighted rule
/// only, and identifies the p with the largest area under its curve.
pub fn sweep_p(config: &SweepConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    if config.algorithms != [Algorithm::It] {
        return Err(Error::contract(
            "the exponent sweep runs the reweighted rule only",
        ));
    }
    if config.p_values.is_empty() {
        return Err(Error::contract("the exponent sweep needs at least one p value"));
    }
    let combos: Vec<(Algorithm, Option<f64>)> = config
        .p_values
        .iter()
        .map(|&p| (Algorithm::It, Some(p)))
        .collect();
    let trials = run_cells(config, &combos)?;
    let cells = aggregate_trials(&trials);
    let best_p = pick_best_p(&cells, &config.p_values);
    Ok(BenchmarkReport {
        config: config.clone(),
        cells,
        trials,
        best_p,
    })
}

/// Groups trial rows into per-cell aggregates, in first-appearance order.
pub fn aggregate_trials(records: &[TrialRecord]) -> Vec<CellStats> {
    struct Acc {
        count: usize,
        successes: usize,
        re_sum: f64,
        iter_sum: f64,
    }
    let mut order: Vec<(Algorithm, Option<u64>, usize)> = Vec::new();
    let mut accs: HashMap<(Algorithm, Option<u64>, usize), Acc> = HashMap::new();
    for rec in records {
        let key = (rec.algorithm, rec.p.map(f64::to_bits), rec.r);
        let acc = accs.entry(key).or_insert_with(|| {
            order.push(key);
            Acc {
                count: 0,
                successes: 0,
                re_sum: 0.0,
                iter_sum: 0.0,
            }
        });
        acc.count += 1;
        acc.successes += rec.success as usize;
        acc.re_sum += rec.relative_error;
        acc.iter_sum += rec.iterations as f64;
    }
    order
        .into_iter()
        .map(|key| {
            let acc = &accs[&key];
            let count = acc.count as f64;
            CellStats {
                algorithm: key.0,
                p: key.1.map(f64::from_bits),
                r: key.2,
                success_rate: acc.successes as f64 / count,
                mean_relative_error: acc.re_sum / count,
                mean_iterations: acc.iter_sum / count,
            }
        })
        .collect()
}

/// Writes `trials.csv`, `aggregate.csv`, and `metadata.json` into `dir`,
/// creating the directory if needed.
pub fn write_report(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let trials_path = dir.join("trials.csv");
    fs::write(&trials_path, trials_to_csv(&report.trials))
        .map_err(|e| Error::io(&trials_path, e))?;

    let aggregate_path = dir.join("aggregate.csv");
    fs::write(&aggregate_path, aggregate_to_csv(&report.cells))
        .map_err(|e| Error::io(&aggregate_path, e))?;

    #[derive(Serialize)]
    struct Metadata<'a> {
        config: &'a SweepConfig,
        best_p: Option<f64>,
        generator: &'static str,
        normal_method: &'static str,
        seed_derivation: &'static str,
        version: &'static str,
        timestamp_unix_s: u64,
    }
    let metadata = Metadata {
        config: &report.config,
        best_p: report.best_p,
        generator: GENERATOR_ID,
        normal_method: NORMAL_METHOD_ID,
        seed_derivation: SEED_DERIVATION_ID,
        version: env!("CARGO_PKG_VERSION"),
        timestamp_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let metadata_path = dir.join("metadata.json");
    let json = serde_json::to_string_pretty(&metadata)
        .expect("report metadata serializes infallibly");
    fs::write(&metadata_path, json).map_err(|e| Error::io(&metadata_path, e))
}

/// Renders trial rows as CSV with the pinned header and column order.
pub fn trials_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 128);
    out.push_str(TRIALS_HEADER);
    out.push('\n');
    for r in records {
        let p = r.p.map(fmt_float).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm.as_str(),
            p,
            r.m,
            r.n,
            r.r,
            r.trial,
            r.seed,
            fmt_float(r.relative_error),
            r.success,
            r.iterations,
            fmt_float(r.wall_time_s),
            r.termination,
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Renders per-cell aggregates as CSV with the pinned header.
pub fn aggregate_to_csv(cells: &[CellStats]) -> String {
    let mut out = String::with_capacity(64 + cells.len() * 96);
    out.push_str(AGGREGATE_HEADER);
    out.push('\n');
    for c in cells {
        let p = c.p.map(fmt_float).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.algorithm.as_str(),
            p,
            c.r,
            fmt_float(c.success_rate),
            fmt_float(c.mean_relative_error),
            fmt_float(c.mean_iterations),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Parses a trials CSV produced by [`trials_to_csv`].
pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trials_csv(&text).map_err(|msg| Error::format(format!("{}: {msg}", path.display())))
}

fn parse_trials_csv(text: &str) -> std::result::Result<Vec<TrialRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRIALS_HEADER => {}
        Some(header) => return Err(format!("unexpected trials header '{header}'")),
        None => return Err("empty trials file".into()),
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(format!(
                "row {} has {} fields, expected 12",
                lineno + 2,
                fields.len()
            ));
        }
        let bad = |what: &str| format!("row {}: invalid {what}", lineno + 2);
        let algorithm = Algorithm::parse(fields[0]).map_err(|_| bad("algorithm"))?;
        let p = if fields[1].is_empty() {
            None
        } else {
            Some(fields[1].parse::<f64>().map_err(|_| bad("p"))?)
        };
        records.push(TrialRecord {
            algorithm,
            p,
            m: fields[2].parse().map_err(|_| bad("m"))?,
            n: fields[3].parse().map_err(|_| bad("n"))?,
            r: fields[4].parse().map_err(|_| bad("r"))?,
            trial: fields[5].parse().map_err(|_| bad("trial"))?,
            seed: fields[6].parse().map_err(|_| bad("seed"))?,
            relative_error: fields[7].parse().map_err(|_| bad("re"))?,
            success: match fields[8] {
                "true" => true,
                "false" => false,
                _ => return Err(bad("success")),
            },
            iterations: fields[9].parse().map_err(|_| bad("iterations"))?,
            wall_time_s: fields[10].parse().map_err(|_| bad("wall_time_s"))?,
            termination: match fields[11] {
                "" => return Err(bad("termination")),
                t => t.to_string(),
            },
        });
    }
    Ok(records)
}

/// Compares two trials CSVs ignoring the wall-clock column, which is the
/// only field that varies between reruns of the same sweep.
pub fn trials_csv_equal_modulo_wall(a: &str, b: &str) -> bool {
    fn stripped(text: &str) -> Option<Vec<String>> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let mut fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 12 {
                return None;
            }
            fields.remove(10);
            rows.push(fields.join(","));
        }
        Some(rows)
    }
    match (stripped(a), stripped(b)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn has_duplicates<T: PartialEq>(values: &[T]) -> bool {
    values
        .iter()
        .enumerate()
        .any(|(i, v)| values[..i].contains(v))
}

fn has_duplicates_by_bits(values: &[f64]) -> bool {
    let bits: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
    has_duplicates(&bits)
}

fn termination_label(termination: &Termination) -> String {
    match termination {
        Termination::DegenerateInput(reason) => {
            format!("{}: {reason}", termination.as_str())
        }
        other => other.as_str().to_string(),
    }
}

/// Runs all (r, trial) jobs, solving every combination on a shared instance.
fn run_cells(
    config: &SweepConfig,
    combos: &[(Algorithm, Option<f64>)],
) -> Result<Vec<TrialRecord>> {
    let jobs: Vec<(usize, usize)> = config
        .r_values
        .iter()
        .flat_map(|&r| (0..config.trials).map(move |trial| (r, trial)))
        .collect();

    let nested: Result<Vec<Vec<TrialRecord>>> = jobs
        .par_iter()
        .map(|&(r, trial)| {
            let seed = derive_seed(config.master_seed, r as u64, trial as u64);
            let instance = crate::problem::generate_instance_with(
                config.m,
                config.n,
                r,
                seed,
                config.nonzero_dist,
            )?;
            let mut rows = Vec::with_capacity(combos.len());
            for &(algorithm, p) in combos {
                let mut solver = SolverConfig::new(algorithm, r);
                if let Some(p) = p {
                    solver.p = p;
                }
                solver.eta = config.eta;
                solver.tolerance = config.tolerance;
                solver.max_iterations = config.max_iterations;
                solver.epsilon_scale = config.epsilon_scale;
                solver.epsilon_floor = config.epsilon_floor;

                let start = Instant::now();
                let result = solve(&instance.a, &instance.b, &solver)?;
                let wall_time_s = start.elapsed().as_secs_f64();
                let re = relative_error(&result.solution, &instance.x0)?;
                rows.push(TrialRecord {
                    algorithm,
                    p,
                    m: config.m,
                    n: config.n,
                    r,
                    trial,
                    seed,
                    relative_error: re,
                    success: re <= config.success_threshold,
                    iterations: result.iterations,
                    wall_time_s,
                    termination: termination_label(&result.termination),
                });
            }
            Ok(rows)
        })
        .collect();

    Ok(nested?.into_iter().flatten().collect())
}

fn pick_best_p(cells: &[CellStats], p_values: &[f64]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &p in p_values {
        let mut curve: Vec<(f64, f64)> = cells
            .iter()
            .filter(|c| c.p.map(f64::to_bits) == Some(p.to_bits()))
            .map(|c| (c.r as f64, c.success_rate))
            .collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        let area: f64 = curve
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        match best {
            Some((_, best_area)) if area <= best_area => {}
            _ => best = Some((p, area)),
        }
    }
    best.map(|(p, _)| p)
}
