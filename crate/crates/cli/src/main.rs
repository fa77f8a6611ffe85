use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use vegas::harness::plots::{comparisons_csv, dynamics_csv, fig2_csv, fig3_csv, fig4_csv, fig5_csv};
use vegas::harness::{
    grid, parse_nc_cap, read_results, run_experiment, write_results, AlgorithmKind, Cell, ExperimentConfig, NcCap,
    ResultRow, DEFAULT_NC_CALIBRATION_RUNS,
};
use vegas::search::{calibrate_nc_k, reference_k_cap};
use vegas::{expected_neutral_degree, Algorithm, Instance, Quantization};

/// Plateau search on NKq landscapes: instances, runs, experiments and
/// statistics.
#[derive(Parser)]
#[command(name = "vegas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an NKq instance file.
    Gen(GenArgs),
    /// Run one algorithm once and print its result row.
    Run(RunArgs),
    /// Run an experiment grid and append the rows to a results file.
    Experiment(ExperimentArgs),
    /// Statistics over a results file.
    Stats(StatsArgs),
    /// Sample the neutral degree of an instance.
    NeutralDegree(NeutralDegreeArgs),
    /// Estimate a Netcrawler move cap from uncapped descents.
    CalibrateNc(CalibrateArgs),
    /// Write plot-ready CSV tables derived from a results file.
    PlotData(PlotArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Number of levels, or "continuous".
    #[arg(long)]
    q: Quantization,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Fihc,
    Nc,
    F2ns,
    Vegas,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// VEGAS exploration constant.
    #[arg(long, default_value_t = 100.0, value_parser = non_negative, allow_hyphen_values = true)]
    c: f64,
    /// Netcrawler move cap; defaults to the reference value of the instance's cell.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k_cap: Option<u64>,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Value of the run column.
    #[arg(long, default_value_t = 0)]
    run: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Configuration file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [64])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 6, 8])]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values = ["2", "3", "4"])]
    q: Vec<Quantization>,
    #[arg(long, value_delimiter = ',', default_values_t = [1])]
    instance_seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values = ["fihc", "nc", "f2ns", "vegas"])]
    algorithms: Vec<AlgorithmKind>,
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = non_negative,
        allow_hyphen_values = true,
        default_values = ["0.0001", "0.001", "0.01", "0.1", "1", "10", "100", "500"]
    )]
    c_values: Vec<f64>,
    /// reference, calibrate or an integer.
    #[arg(long, default_value = "reference")]
    nc_k_cap: String,
    #[arg(long, default_value_t = DEFAULT_NC_CALIBRATION_RUNS)]
    nc_calibration_runs: usize,
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "results.csv")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    /// Paired Wilcoxon tests between the headline algorithms.
    Wilcoxon,
    /// Mean normalized fitness per algorithm.
    Normalized,
    /// Plateau counts and sizes per configuration.
    Dynamics,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum, default_value_t = Table::Wilcoxon)]
    table: Table,
    /// C of the VEGAS configuration compared with the baselines.
    #[arg(long, default_value_t = 100.0, value_parser = non_negative, allow_hyphen_values = true)]
    c: f64,
    #[arg(long, default_value_t = 0.05, value_parser = probability)]
    alpha: f64,
}

#[derive(Args)]
struct NeutralDegreeArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NC_CALIBRATION_RUNS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["fig2", "fig3", "fig4", "fig5"])]
    figure: Vec<Figure>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// C of the VEGAS configuration in fig2 and fig3.
    #[arg(long, default_value_t = 100.0, value_parser = non_negative, allow_hyphen_values = true)]
    c: f64,
    #[arg(long, default_value_t = 100.0, value_parser = non_negative, allow_hyphen_values = true)]
    exploring_c: f64,
    #[arg(long, default_value_t = 0.01, value_parser = non_negative, allow_hyphen_values = true)]
    exploiting_c: f64,
    /// Neutral-degree samples per instance for fig3.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be finite and >= 0, got {s}"))
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {s}"))
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let sub = matches.subcommand().map(|(_, m)| m).expect("subcommand is required");
    match dispatch(cli.command, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command, matches: &ArgMatches) -> Result<()> {
    match command {
        Command::Gen(args) => gen(args),
        Command::Run(args) => run(args),
        Command::Experiment(args) => experiment(args, matches),
        Command::Stats(args) => stats(args),
        Command::NeutralDegree(args) => neutral_degree(args),
        Command::CalibrateNc(args) => calibrate(args),
        Command::PlotData(args) => plot_data(args),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    Instance::load(path).with_context(|| format!("cannot load instance {}", path.display()))
}

fn gen(args: GenArgs) -> Result<()> {
    let instance = Instance::generate(args.n, args.k, args.q, args.seed)?;
    match args.out {
        Some(path) => instance.save(&path)?,
        None => {
            let stdout = io::stdout();
            instance.write_to(stdout.lock())?;
        }
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let cell = Cell {
        n: instance.n(),
        k: instance.k(),
        q: instance.q(),
    };
    let algorithm = match args.algo {
        AlgoArg::Fihc => Algorithm::Fihc,
        AlgoArg::F2ns => Algorithm::F2ns,
        AlgoArg::Vegas => Algorithm::Vegas { c: args.c },
        AlgoArg::Nc => {
            let k_cap = match args.k_cap {
                Some(cap) => cap,
                None => reference_k_cap(cell.k, cell.q)
                    .filter(|_| cell.n == 64)
                    .with_context(|| {
                        format!(
                            "no reference Netcrawler cap for n={}, k={}, q={}; pass --k-cap",
                            cell.n, cell.k, cell.q
                        )
                    })?,
            };
            Algorithm::Netcrawler { k_cap }
        }
    };
    let record = algorithm.run(&instance, args.budget, args.seed);
    let row = ResultRow::from_record(cell, instance.seed(), args.run, &record);
    write_results(io::stdout().lock(), &[row])?;
    Ok(())
}

fn explicit(matches: &ArgMatches, id: &str) -> bool {
    matches.value_source(id) == Some(ValueSource::CommandLine)
}

fn experiment(args: ExperimentArgs, matches: &ArgMatches) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let from_file = args.config.is_some();
    let set = |id: &str| !from_file || explicit(matches, id);

    if ["n", "k", "q"].iter().any(|id| set(id)) {
        let keep = |pick: fn(&Cell) -> usize| -> Vec<usize> {
            let mut v: Vec<usize> = config.cells.iter().map(pick).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let ns = if set("n") { args.n.clone() } else { keep(|c| c.n) };
        let ks = if set("k") { args.k.clone() } else { keep(|c| c.k) };
        let qs = if set("q") {
            args.q.clone()
        } else {
            let mut v: Vec<Quantization> = config.cells.iter().map(|c| c.q).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        config.cells = grid(&ns, &ks, &qs);
    }
    if set("instance_seeds") {
        config.instance_seeds = args.instance_seeds;
    }
    if set("algorithms") {
        config.algorithms = args.algorithms;
    }
    if set("c_values") {
        config.c_values = args.c_values;
    }
    if set("nc_k_cap") || set("nc_calibration_runs") {
        let runs = match config.nc_cap {
            NcCap::Calibrate { runs } if !set("nc_calibration_runs") => runs,
            _ => args.nc_calibration_runs,
        };
        config.nc_cap = parse_nc_cap(&args.nc_k_cap, runs)?;
    }
    if set("runs") {
        config.runs = args.runs;
    }
    if set("budget") {
        config.budget = args.budget;
    }
    if set("seed") {
        config.master_seed = args.seed;
    }
    if set("workers") {
        config.workers = args.workers;
    }
    if set("output") {
        config.output = args.output;
    }
    config.validate()?;

    let report = run_experiment(&config)?;
    eprintln!(
        "{}: {} rows written, {} already present",
        config.output.display(),
        report.rows_written,
        report.rows_skipped
    );
    for (key, message) in &report.failures {
        eprintln!("failed run {key:?}: {message}");
    }
    if !report.failures.is_empty() {
        bail!("{} runs failed; rerun to retry them", report.failures.len());
    }
    Ok(())
}

fn load_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let rows = read_results(path)?;
    if rows.is_empty() {
        bail!("{} has no result rows", path.display());
    }
    Ok(rows)
}

fn stats(args: StatsArgs) -> Result<()> {
    let rows = load_rows(&args.results)?;
    let text = match args.table {
        Table::Wilcoxon => comparisons_csv(&rows, args.c, args.alpha)?,
        Table::Normalized => fig2_csv(&rows, args.c)?,
        Table::Dynamics => dynamics_csv(&rows),
    };
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn neutral_degree(args: NeutralDegreeArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let stats = instance.sample_neutral_degree(args.samples as usize, args.seed)?;
    let expected = match instance.q() {
        Quantization::Levels(q) => expected_neutral_degree(instance.n(), instance.k(), q)?.to_string(),
        Quantization::Continuous => "0".to_string(),
    };
    let mut out = io::stdout().lock();
    writeln!(out, "samples,mean,stddev,expected")?;
    writeln!(out, "{},{},{},{expected}", stats.samples, stats.mean, stats.stddev)?;
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let cap = calibrate_nc_k(&instance, args.runs as usize, args.budget, args.seed);
    let mut out = io::stdout().lock();
    writeln!(out, "runs,budget,k_cap")?;
    writeln!(out, "{},{},{cap}", args.runs, args.budget)?;
    Ok(())
}

fn plot_data(args: PlotArgs) -> Result<()> {
    let rows = load_rows(&args.results)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let mut figures = args.figure.clone();
    figures.dedup();
    for figure in figures {
        let (name, text) = match figure {
            Figure::Fig2 => ("fig2", fig2_csv(&rows, args.c)?),
            Figure::Fig3 => ("fig3", fig3_csv(&rows, args.c, args.samples, args.seed)?),
            Figure::Fig4 => ("fig4", fig4_csv(&rows)),
            Figure::Fig5 => ("fig5", fig5_csv(&rows, args.exploring_c, args.exploiting_c)),
        };
        let path = args.out_dir.join(format!("{name}.csv"));
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
