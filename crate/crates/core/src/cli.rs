//! Command-line front end. Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{bench_mttkrp, BenchConfig};
use crate::error::{Error, Result};
use crate::io::{
    parse_coordinate_file, read_manifest, read_matrix_file, write_coordinate_file, write_factors,
    write_json,
};
use crate::mttkrp::Mode;
use crate::parafac2::{fit_parafac2, FitTrace, Init, SolverConfig};
use crate::report::{rank_components, DataSummary, RunReport};
use crate::synth::{generate_synthetic, GeneratorSpec};
use crate::tensor::IrregularTensor;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "parafac2",
    version,
    about = "Sparse PARAFAC2 for irregular tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic tensor as a coordinate file.
    Generate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a PARAFAC2 model and export the factors.
    Fit(FitArgs),
    /// List the strongest components of one subject from exported factors.
    Rank {
        /// Directory written by `fit`.
        factors: PathBuf,
        #[arg(long)]
        subject: usize,
        #[arg(long)]
        top: Option<usize>,
    },
    /// Time specialized and naive MTTKRP kernels.
    Bench(BenchArgs),
    /// Print K, J, max I_k and nnz of a coordinate file.
    Info { input: PathBuf },
}

#[derive(Debug, Args)]
struct SpecArgs {
    #[arg(long)]
    subjects: usize,
    #[arg(long)]
    variables: usize,
    #[arg(long)]
    max_rows: usize,
    #[arg(long)]
    true_rank: usize,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw factors from [-1, 1) instead of [0, 1).
    #[arg(long)]
    signed: bool,
}

impl SpecArgs {
    fn spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            subjects: self.subjects,
            variables: self.variables,
            max_rows: self.max_rows,
            true_rank: self.true_rank,
            density: self.density,
            seed: self.seed,
            nonneg_factors: !self.signed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Eye,
}

#[derive(Debug, Args)]
struct FitArgs {
    input: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8, allow_negative_numbers = true)]
    tol: f64,
    /// Non-negative V and S (default).
    #[arg(long, overrides_with = "no_nonneg")]
    nonneg: bool,
    #[arg(long, overrides_with = "nonneg")]
    no_nonneg: bool,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Independent starts with seeds `seed, seed+1, ...`; the best final fit is kept.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Coordinate file to benchmark on; otherwise the generator flags are used.
    #[arg(long, conflicts_with_all = ["subjects", "variables", "max_rows", "true_rank"])]
    input: Option<PathBuf>,
    #[arg(long, requires_all = ["variables", "max_rows", "true_rank"])]
    subjects: Option<usize>,
    #[arg(long)]
    variables: Option<usize>,
    #[arg(long)]
    max_rows: Option<usize>,
    #[arg(long)]
    true_rank: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    rank: usize,
    /// Kernel modes to time, e.g. `--modes 1,3`.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    modes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 4096)]
    budget_mb: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also write the report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate { spec, out } => generate(&spec.spec(), &out),
        Command::Fit(args) => fit(&args),
        Command::Rank {
            factors,
            subject,
            top,
        } => rank(&factors, subject, top),
        Command::Bench(args) => bench(&args),
        Command::Info { input } => info(&input),
    }
}

fn load(path: &Path) -> Result<IrregularTensor> {
    let loaded = parse_coordinate_file(path)?;
    if loaded.removed_rows > 0 {
        eprintln!("warning: removed {} all-zero rows", loaded.removed_rows);
    }
    Ok(loaded.tensor)
}

fn generate(spec: &GeneratorSpec, out: &Path) -> Result<()> {
    let x = generate_synthetic(spec)?;
    if x.n_slices() < spec.subjects {
        eprintln!(
            "warning: {} subjects came out empty and were dropped",
            spec.subjects - x.n_slices()
        );
    }
    write_coordinate_file(&x, out)?;
    print_summary(&DataSummary::of(&x));
    Ok(())
}

fn print_summary(d: &DataSummary) {
    println!("K\t{}", d.subjects);
    println!("J\t{}", d.variables);
    println!("max_I\t{}", d.max_rows);
    println!("nnz\t{}", d.nnz);
}

fn info(input: &Path) -> Result<()> {
    let x = load(input)?;
    print_summary(&DataSummary::of(&x));
    Ok(())
}

fn fit(args: &FitArgs) -> Result<()> {
    if args.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let base = SolverConfig {
        rank: args.rank,
        max_iters: args.max_iters,
        tol: args.tol,
        nonneg: !args.no_nonneg,
        init: match args.init {
            InitArg::Random => Init::Random,
            InitArg::Eye => Init::Eye,
        },
        seed: args.seed,
        threads: args.threads,
    };
    base.validate()?;
    let x = load(&args.input)?;
    let started = Instant::now();

    let mut best = None;
    let mut traces = Vec::with_capacity(args.restarts);
    for restart in 0..args.restarts {
        let config = SolverConfig {
            seed: base.seed.wrapping_add(restart as u64),
            ..base.clone()
        };
        let (factors, trace) = fit_parafac2(&x, &config)?;
        let fit = trace.final_fit().unwrap_or(f64::NEG_INFINITY);
        eprintln!(
            "restart {restart}: fit {fit:.10} after {} iterations",
            trace.iterations.len()
        );
        if best.as_ref().is_none_or(|(_, _, f, _)| fit > *f) {
            best = Some((restart, factors, fit, config));
        }
        traces.push(trace);
    }
    let (best_restart, factors, fit, config) = best.expect("at least one restart");

    write_factors(&factors, Some(&config), &args.out)?;
    write_trace(&traces, &args.out.join("trace.tsv"))?;
    let mut report = RunReport::new(
        "fit",
        serde_json::json!({
            "solver": base,
            "restarts": args.restarts,
            "input": args.input,
        }),
        DataSummary::of(&x),
        config.threads,
    );
    report.traces = traces;
    report.best_restart = Some(best_restart);
    report.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    write_json(&report, args.out.join("report.json"))?;
    println!("best restart {best_restart}, fit {fit:.12}");
    Ok(())
}

/// Timing-free trace, one line per restart and iteration.
fn write_trace(traces: &[FitTrace], path: &Path) -> Result<()> {
    let mut text = String::from("# restart\titeration\tresidual_sq\tfit\n");
    for (restart, trace) in traces.iter().enumerate() {
        for rec in &trace.iterations {
            text.push_str(&format!(
                "{restart}\t{}\t{:.16e}\t{:.16e}\n",
                rec.iteration, rec.residual_sq, rec.fit
            ));
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn rank(dir: &Path, subject: usize, top: Option<usize>) -> Result<()> {
    let manifest = read_manifest(dir)?;
    let s = read_matrix_file(dir.join(&manifest.s_file))?;
    let ranked = rank_components(&s, subject, top.unwrap_or(s.n_cols()))?;
    let mut out = std::io::stdout().lock();
    for (component, score) in ranked {
        let _ = writeln!(out, "{component}\t{score:.16e}");
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let x = match (&args.input, args.subjects) {
        (Some(path), _) => load(path)?,
        (None, Some(subjects)) => generate_synthetic(&GeneratorSpec {
            subjects,
            variables: args.variables.unwrap_or_default(),
            max_rows: args.max_rows.unwrap_or_default(),
            true_rank: args.true_rank.unwrap_or_default(),
            density: args.density,
            seed: args.seed,
            nonneg_factors: true,
        })?,
        (None, None) => {
            return Err(Error::Config(
                "bench needs --input or the generator flags".into(),
            ))
        }
    };
    let modes = args
        .modes
        .iter()
        .map(|&m| Mode::from_index(m).ok_or_else(|| Error::Config(format!("no mode {m}"))))
        .collect::<Result<Vec<_>>>()?;
    let config = BenchConfig {
        rank: args.rank,
        modes,
        reps: args.reps,
        threads: args.threads,
        budget_bytes: args.budget_mb as u128 * (1 << 20),
        seed: args.seed,
    };
    let started = Instant::now();
    let result = bench_mttkrp(&x, &config)?;
    let mut report = RunReport::new(
        "bench",
        serde_json::json!({
            "rank": args.rank,
            "modes": args.modes,
            "reps": args.reps,
            "budget_mb": args.budget_mb,
            "seed": args.seed,
            "density": args.density,
        }),
        DataSummary::of(&x),
        args.threads,
    );
    report.bench = result.rows;
    report.speedups = result.speedups;
    report.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    if let Some(path) = &args.report {
        write_json(&report, path)?;
    }
    println!("{}", report.to_json());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["parafac2"]), EXIT_USAGE);
        assert_eq!(run(["parafac2", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["parafac2", "fit", "x.txt"]), EXIT_USAGE);
        assert_eq!(run(["parafac2", "--help"]), EXIT_OK);
    }

    #[test]
    fn nonneg_flags() {
        let parse = |extra: &[&str]| {
            let mut args = vec!["parafac2", "fit", "in", "--rank", "2", "--out", "o"];
            args.extend_from_slice(extra);
            match Cli::try_parse_from(args).unwrap().command {
                Command::Fit(f) => !f.no_nonneg,
                _ => unreachable!(),
            }
        };
        assert!(parse(&[]));
        assert!(!parse(&["--no-nonneg"]));
        assert!(parse(&["--no-nonneg", "--nonneg"]));
    }
}
