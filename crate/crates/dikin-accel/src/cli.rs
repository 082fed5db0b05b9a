//! Command-line front door: solve single instances, run benchmark sweeps,
//! emit traces and plot-ready CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use ndarray::Array1;
use rayon::prelude::*;

use crate::diagnostics::TraceRecord;
use crate::linalg::NormRule;
use crate::model::{random_dense_lp, standardize, GeneralLp, LinearProgram, RandomLpSpec};
use crate::mps::parse_mps;
use crate::solver::{solve, Algorithm, SolveOutcome, SolveStatus, SolverConfig};

/// Caps benchmark parallelism; default is the number of logical processors.
pub const THREADS_ENV: &str = "DIKIN_ACCEL_THREADS";

/// Fixed column order of every trace CSV.
pub const TRACE_HEADER: &str =
    "k,obj,gap,shanks_gap,primal_residual,min_x,min_s,lemma2_residual,alpha_eff,beta_eff,ratio,rel_step_inf";

/// Fixed column order of the benchmark summary CSV.
pub const SUMMARY_HEADER: &str =
    "instance,m,n,algorithm,alpha,beta,eps,reps,median_iters,mean_time_s,final_gap";

/// Fixed column order of the per-run status CSV.
pub const RUNS_HEADER: &str =
    "instance,m,n,algorithm,alpha,beta,eps,rep,status,iterations,final_gap,time_s";

#[derive(Parser)]
#[command(
    name = "dikin-accel",
    version,
    about = "Primal affine-scaling LP solver with momentum and series acceleration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print status, objective, iterations, gap
    Solve(SolveArgs),
    /// Sweep instances x algorithms x parameter pairs, writing CSV reports
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Afs,
    Gafs,
    Aafs,
}

impl std::fmt::Display for AlgorithmArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(Algorithm::from(*self).name())
    }
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Afs => Algorithm::Afs,
            AlgorithmArg::Gafs => Algorithm::Gafs,
            AlgorithmArg::Aafs => Algorithm::Aafs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NormArg {
    /// Long-step rule: divide by the largest positive entry of X s
    Gamma,
    /// Divide by ||X s||_2
    L2,
}

impl From<NormArg> for NormRule {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Gamma => NormRule::Gamma,
            NormArg::L2 => NormRule::L2,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// MPS file to solve (phase-I supplies the interior start)
    #[arg(long, value_name = "PATH", conflicts_with = "random")]
    mps: Option<PathBuf>,
    /// Seeded random dense instance
    #[arg(long, num_args = 3, value_names = ["M", "N", "SEED"])]
    random: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Aafs)]
    algorithm: AlgorithmArg,
    /// Step size in (0,1)
    #[arg(long, default_value_t = 0.55)]
    alpha: f64,
    /// Momentum weight; defaults to 0.1 (0 for afs)
    #[arg(long)]
    beta: Option<f64>,
    /// Duality-gap tolerance
    #[arg(long, default_value_t = 1e-7)]
    eps: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = NormArg::Gamma)]
    norm: NormArg,
    /// Write the per-iteration trace CSV here
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Replace infinite bounds and clip huge rhs/cost magnitudes to +-VALUE
    #[arg(long, value_name = "VALUE", num_args = 0..=1, default_missing_value = "1e9")]
    clamp_inf: Option<f64>,
    /// Allow alpha + beta outside the guaranteed region (exploratory)
    #[arg(long, action = ArgAction::SetTrue)]
    no_enforce_q: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Seeded random instance as M N SEED; repeat for more instances
    #[arg(long = "random", num_args = 3, value_names = ["M", "N", "SEED"], action = ArgAction::Append)]
    random: Vec<u64>,
    /// MPS instance; repeat for more instances
    #[arg(long = "mps", value_name = "PATH", action = ArgAction::Append)]
    mps: Vec<PathBuf>,
    /// Algorithms to run
    #[arg(long, value_delimiter = ',', default_values_t = vec![AlgorithmArg::Afs, AlgorithmArg::Gafs, AlgorithmArg::Aafs])]
    algorithms: Vec<AlgorithmArg>,
    /// alpha:beta pairs (afs runs force beta to 0)
    #[arg(long, value_delimiter = ',', default_values_t = vec!["0.4:0.2".to_string(), "0.5:0.1".to_string(), "0.55:0.1".to_string()])]
    pairs: Vec<String>,
    /// Gap tolerances to sweep
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-4])]
    eps: Vec<f64>,
    /// Repetitions per configuration (timing noise only; runs are seeded)
    #[arg(long, default_value_t = 15)]
    reps: usize,
    #[arg(long, value_name = "DIR", default_value = "bench_out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = NormArg::Gamma)]
    norm: NormArg,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Replace infinite bounds and clip huge rhs/cost magnitudes to +-VALUE
    #[arg(long, value_name = "VALUE", num_args = 0..=1, default_missing_value = "1e9")]
    clamp_inf: Option<f64>,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{e}");
            return 1;
        }
    };
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => 0,
        SolveStatus::Unbounded => 2,
        SolveStatus::Infeasible => 3,
        SolveStatus::IterationLimit => 4,
        SolveStatus::NumericalFailure => 5,
    }
}

/// Replace infinities in bounds and clip out-of-range rhs/cost magnitudes.
fn clamp_general_lp(glp: &mut GeneralLp, limit: f64) {
    for bd in &mut glp.bounds {
        if bd.lower.is_infinite() {
            bd.lower = -limit;
        }
        if bd.upper.is_infinite() {
            bd.upper = limit;
        }
        bd.lower = bd.lower.clamp(-limit, limit);
        bd.upper = bd.upper.clamp(-limit, limit);
    }
    for v in glp.rhs.iter_mut() {
        *v = v.clamp(-limit, limit);
    }
    for v in glp.cost.iter_mut() {
        *v = v.clamp(-limit, limit);
    }
}

struct LoadedInstance {
    label: String,
    lp: LinearProgram,
    x0: Option<Array1<f64>>,
    objective_offset: f64,
}

fn load_mps_instance(path: &Path, clamp_inf: Option<f64>) -> Result<LoadedInstance, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read '{}': {e}", path.display()))?;
    let (mut glp, _sparsity) =
        parse_mps(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(limit) = clamp_inf {
        clamp_general_lp(&mut glp, limit);
    }
    let (lp, map) = standardize(&glp).map_err(|e| format!("{}: {e}", path.display()))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mps".into());
    Ok(LoadedInstance {
        label,
        lp,
        x0: None,
        objective_offset: map.objective_offset(),
    })
}

fn load_random_instance(m: u64, n: u64, seed: u64) -> Result<LoadedInstance, String> {
    let spec = RandomLpSpec::new(m as usize, n as usize, seed);
    let (lp, x0) = random_dense_lp(&spec).map_err(|e| e.to_string())?;
    Ok(LoadedInstance {
        label: format!("rand_{m}x{n}_s{seed}"),
        lp,
        x0: Some(x0),
        objective_offset: 0.0,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.obj,
            r.gap,
            fmt_opt(r.shanks_gap),
            r.primal_residual,
            r.min_x,
            r.min_s,
            r.lemma2_residual,
            fmt_opt(r.alpha_eff),
            r.beta_eff,
            fmt_opt(r.ratio),
            fmt_opt(r.rel_step_inf),
        );
    }
    out
}

fn cmd_solve(args: SolveArgs) -> i32 {
    let inst = match (&args.mps, &args.random) {
        (Some(path), None) => load_mps_instance(path, args.clamp_inf),
        (None, Some(mns)) => load_random_instance(mns[0], mns[1], mns[2]),
        _ => {
            eprintln!(
                "usage: dikin-accel solve (--mps PATH | --random M N SEED) [options]\n\
                 exactly one instance source is required; see --help"
            );
            return 1;
        }
    };
    let inst = match inst {
        Ok(inst) => inst,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 1;
        }
    };

    let algorithm: Algorithm = args.algorithm.into();
    let beta = args
        .beta
        .unwrap_or(if algorithm == Algorithm::Afs { 0.0 } else { 0.1 });
    let config = SolverConfig {
        algorithm,
        alpha: args.alpha,
        beta,
        epsilon: args.eps,
        norm_rule: args.norm.into(),
        max_iter: args.max_iter,
        enforce_q: !args.no_enforce_q,
        ..Default::default()
    };
    if args.no_enforce_q {
        eprintln!(
            "warning: parameter region checks disabled; convergence is not \
             guaranteed for alpha + beta > 2/3"
        );
    }

    let outcome = match solve(&inst.lp, inst.x0.as_ref(), &config) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };

    println!(
        "instance: {} (m={}, n={})",
        inst.label,
        inst.lp.num_rows(),
        inst.lp.num_cols()
    );
    println!("status: {}", outcome.status);
    match outcome.objective {
        Some(obj) => println!("objective: {}", obj + inst.objective_offset),
        None => println!("objective: n/a"),
    }
    println!("iterations: {}", outcome.iterations);
    println!("final gap: {:e}", outcome.final_gap);
    if let Some(detail) = &outcome.failure {
        println!("failure: {detail}");
    }

    if let Some(path) = &args.trace {
        if let Err(e) = fs::write(path, trace_csv(&outcome.trace)) {
            eprintln!("error: cannot write trace '{}': {e}", path.display());
            return 1;
        }
        println!("trace: {}", path.display());
    }
    exit_code(outcome.status)
}

struct RunSpec {
    instance: usize,
    algorithm: Algorithm,
    alpha: f64,
    beta: f64,
    eps: f64,
    rep: usize,
}

struct RunResult {
    status: SolveStatus,
    iterations: usize,
    final_gap: f64,
    time_s: f64,
}

fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| format!("pair '{text}' must look like ALPHA:BETA"))?;
    let alpha: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad alpha in pair '{text}'"))?;
    let beta: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad beta in pair '{text}'"))?;
    Ok((alpha, beta))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn cmd_bench(args: BenchArgs) -> i32 {
    if args.random.len() % 3 != 0 {
        eprintln!("error: --random needs M N SEED triples");
        return 1;
    }
    let mut instances: Vec<LoadedInstance> = Vec::new();
    for chunk in args.random.chunks(3) {
        match load_random_instance(chunk[0], chunk[1], chunk[2]) {
            Ok(inst) => instances.push(inst),
            Err(msg) => {
                eprintln!("error: {msg}");
                return 1;
            }
        }
    }
    for path in &args.mps {
        match load_mps_instance(path, args.clamp_inf) {
            Ok(inst) => instances.push(inst),
            Err(msg) => {
                eprintln!("error: {msg}");
                return 1;
            }
        }
    }
    if instances.is_empty() || args.algorithms.is_empty() || args.pairs.is_empty() {
        eprintln!("error: benchmark plan needs at least one instance and one algorithm");
        return 1;
    }
    let mut pairs = Vec::new();
    for p in &args.pairs {
        match parse_pair(p) {
            Ok(pair) => pairs.push(pair),
            Err(msg) => {
                eprintln!("error: {msg}");
                return 1;
            }
        }
    }
    if args.reps == 0 || args.eps.is_empty() {
        eprintln!("error: need at least one repetition and one eps value");
        return 1;
    }
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create '{}': {e}", args.out.display());
        return 1;
    }

    let mut specs = Vec::new();
    for (i, _) in instances.iter().enumerate() {
        for &alg in &args.algorithms {
            for &(alpha, beta) in &pairs {
                for &eps in &args.eps {
                    for rep in 0..args.reps {
                        specs.push(RunSpec {
                            instance: i,
                            algorithm: alg.into(),
                            alpha,
                            // the plain algorithm is defined by beta = 0
                            beta: if alg == AlgorithmArg::Afs { 0.0 } else { beta },
                            eps,
                            rep,
                        });
                    }
                }
            }
        }
    }

    let multi_eps = args.eps.len() > 1;
    let norm_rule: NormRule = args.norm.into();
    let max_iter = args.max_iter;
    let out_dir = args.out.clone();
    let run_one = |spec: &RunSpec| -> Result<RunResult, String> {
        let inst = &instances[spec.instance];
        let config = SolverConfig {
            algorithm: spec.algorithm,
            alpha: spec.alpha,
            beta: spec.beta,
            epsilon: spec.eps,
            norm_rule,
            max_iter,
            ..Default::default()
        };
        let started = Instant::now();
        let outcome = solve(&inst.lp, inst.x0.as_ref(), &config).map_err(|e| e.to_string())?;
        let time_s = started.elapsed().as_secs_f64();
        write_run_trace(&out_dir, multi_eps, spec, inst, &outcome)?;
        Ok(RunResult {
            status: outcome.status,
            iterations: outcome.iterations,
            final_gap: outcome.final_gap,
            time_s,
        })
    };

    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(k) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&k| k > 0)
        {
            builder = builder.num_threads(k);
        }
        match builder.build() {
            Ok(pool) => pool,
            Err(e) => {
                eprintln!("error: cannot build thread pool: {e}");
                return 1;
            }
        }
    };
    let results: Vec<Result<RunResult, String>> =
        pool.install(|| specs.par_iter().map(run_one).collect());

    // single-threaded aggregation after the join
    let mut runs_csv = String::from(RUNS_HEADER);
    runs_csv.push('\n');
    let mut summary_csv = String::from(SUMMARY_HEADER);
    summary_csv.push('\n');
    let mut cursor = 0usize;
    let mut failures = 0usize;
    while cursor < specs.len() {
        // one (instance, algorithm, pair, eps) group is `reps` consecutive specs
        let group = &specs[cursor..cursor + args.reps];
        let group_results = &results[cursor..cursor + args.reps];
        let spec0 = &group[0];
        let inst = &instances[spec0.instance];
        let mut iters = Vec::new();
        let mut gaps = Vec::new();
        let mut times = Vec::new();
        for (spec, result) in group.iter().zip(group_results.iter()) {
            match result {
                Ok(r) => {
                    iters.push(r.iterations as f64);
                    gaps.push(r.final_gap);
                    times.push(r.time_s);
                    let _ = writeln!(
                        runs_csv,
                        "{},{},{},{},{},{},{},{},{},{},{},{}",
                        inst.label,
                        inst.lp.num_rows(),
                        inst.lp.num_cols(),
                        spec.algorithm.name(),
                        spec.alpha,
                        spec.beta,
                        spec.eps,
                        spec.rep,
                        r.status,
                        r.iterations,
                        r.final_gap,
                        r.time_s
                    );
                    if r.status != SolveStatus::Optimal {
                        failures += 1;
                    }
                }
                Err(msg) => {
                    failures += 1;
                    let _ = writeln!(
                        runs_csv,
                        "{},{},{},{},{},{},{},{},error:{},,,",
                        inst.label,
                        inst.lp.num_rows(),
                        inst.lp.num_cols(),
                        spec.algorithm.name(),
                        spec.alpha,
                        spec.beta,
                        spec.eps,
                        spec.rep,
                        msg.replace(',', ";")
                    );
                }
            }
        }
        let mean_time = if times.is_empty() {
            f64::NAN
        } else {
            times.iter().sum::<f64>() / times.len() as f64
        };
        let _ = writeln!(
            summary_csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            inst.label,
            inst.lp.num_rows(),
            inst.lp.num_cols(),
            spec0.algorithm.name(),
            spec0.alpha,
            spec0.beta,
            spec0.eps,
            args.reps,
            median(&mut iters),
            mean_time,
            median(&mut gaps)
        );
        cursor += args.reps;
    }

    let summary_path = args.out.join("summary.csv");
    let runs_path = args.out.join("runs.csv");
    if let Err(e) = fs::write(&summary_path, &summary_csv) {
        eprintln!("error: cannot write '{}': {e}", summary_path.display());
        return 1;
    }
    if let Err(e) = fs::write(&runs_path, &runs_csv) {
        eprintln!("error: cannot write '{}': {e}", runs_path.display());
        return 1;
    }

    print!("{summary_csv}");
    println!("summary: {}", summary_path.display());
    println!("runs: {}", runs_path.display());
    if failures > 0 {
        println!("non-optimal or failed runs: {failures} (see runs.csv)");
    }
    0
}

fn write_run_trace(
    out_dir: &Path,
    multi_eps: bool,
    spec: &RunSpec,
    inst: &LoadedInstance,
    outcome: &SolveOutcome,
) -> Result<(), String> {
    let dir = if multi_eps {
        let d = out_dir.join(format!("eps_{}", spec.eps));
        fs::create_dir_all(&d).map_err(|e| format!("cannot create '{}': {e}", d.display()))?;
        d
    } else {
        out_dir.to_path_buf()
    };
    let name = format!(
        "{}_{}_{}_{}_run{}.csv",
        inst.label,
        spec.algorithm.name(),
        spec.alpha,
        spec.beta,
        spec.rep
    );
    let path = dir.join(name);
    fs::write(&path, trace_csv(&outcome.trace))
        .map_err(|e| format!("cannot write '{}': {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pair("0.55:0.1").unwrap(), (0.55, 0.1));
        assert_eq!(parse_pair(" 0.4 : 0.2 ").unwrap(), (0.4, 0.2));
        assert!(parse_pair("0.55").is_err());
        assert!(parse_pair("a:b").is_err());
    }

    #[test]
    fn median_of_even_and_odd_counts() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn trace_csv_has_fixed_header_and_empty_optionals() {
        let row = TraceRecord {
            k: 0,
            obj: 3.0,
            gap: 1.0,
            shanks_gap: None,
            primal_residual: 0.0,
            min_x: 1.0,
            min_s: -0.5,
            lemma2_residual: 0.0,
            alpha_eff: Some(1.1),
            beta_eff: 0.0,
            ratio: None,
            rel_step_inf: None,
        };
        let csv = trace_csv(&[row]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        assert_eq!(lines.next().unwrap(), "0,3,1,,0,1,-0.5,0,1.1,0,,");
    }

    #[test]
    fn clamp_replaces_infinities() {
        use crate::model::{ColumnBounds, RowSense};
        use ndarray::array;
        let mut glp = GeneralLp {
            a: array![[1.0, 1.0]],
            rhs: array![2e12],
            cost: array![1.0, -3e12],
            senses: vec![RowSense::Eq],
            bounds: vec![
                ColumnBounds::default(),
                ColumnBounds {
                    lower: f64::NEG_INFINITY,
                    upper: f64::INFINITY,
                },
            ],
            col_names: vec!["x1".into(), "x2".into()],
            row_names: vec!["r1".into()],
        };
        clamp_general_lp(&mut glp, 1e9);
        assert_eq!(glp.bounds[1].lower, -1e9);
        assert_eq!(glp.bounds[1].upper, 1e9);
        assert_eq!(glp.rhs[0], 1e9);
        assert_eq!(glp.cost[1], -1e9);
    }
}
