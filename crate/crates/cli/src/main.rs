//! `copredict` command-line runner.

mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use copredict::benchmarks::DEFAULT_BUDGET;
use copredict::format::write_instance;
use copredict::generate::{
    caching_instance, facility_instance, lower_bound_instance, setcover_instance, CachingParams,
    FacilityParams, SetCoverParams, SuggestionMode,
};
use copredict::Tolerances;

use run::{read_manifest, run_file, Failure, RunOptions};

#[derive(Parser)]
#[command(name = "copredict", version, about = "Online covering with multiple predictions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an instance file and write trace.csv and report.json
    Run(RunArgs),
    /// Generate an instance file
    Gen(GenArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "manifest"])))]
struct RunArgs {
    /// JSONL instance file
    #[arg(long)]
    input: Option<PathBuf>,
    /// File listing instance paths, one per line; each gets its own subdirectory
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Seed for randomized rounding
    #[arg(long, env = "COPREDICT_SEED", default_value_t = 0)]
    seed: u64,
    /// Also run the baseline and the robust combination
    #[arg(long, conflicts_with = "baseline_only")]
    robust: bool,
    /// Run only the prediction-free baseline
    #[arg(long)]
    baseline_only: bool,
    /// Cap on the number of DYNAMIC choice sequences
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Round the fractional set-cover solution online
    #[arg(long)]
    round: bool,
    /// Print the report JSON on stdout
    #[arg(long)]
    quiet_report: bool,
    /// Manifest worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    tol_tight: Option<f64>,
    #[arg(long)]
    tol_sat: Option<f64>,
    #[arg(long)]
    tol_time: Option<f64>,
    #[arg(long)]
    tol_ledger_abs: Option<f64>,
    #[arg(long)]
    tol_ledger_rel: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Oracle,
    Noisy,
    Adversarial,
}

#[derive(Args)]
#[command(group(ArgGroup::new("family").required(true).args(["lower_bound", "setcover", "caching_trace", "facloc"])))]
struct GenArgs {
    /// Lower-bound family: K T SEED
    #[arg(long, num_args = 3, value_names = ["K", "T", "SEED"])]
    lower_bound: Option<Vec<u64>>,
    /// Random set-cover instance
    #[arg(long)]
    setcover: bool,
    /// Random weighted caching trace
    #[arg(long)]
    caching_trace: bool,
    /// Random Euclidean facility location instance
    #[arg(long)]
    facloc: bool,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, env = "COPREDICT_SEED", default_value_t = 0)]
    seed: u64,
    /// Suggestions per step
    #[arg(long, short, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    sets: usize,
    #[arg(long, default_value_t = 20)]
    elements: usize,
    /// Maximum number of sets per element
    #[arg(long, default_value_t = 3)]
    frequency: usize,
    /// Element arrivals (defaults to each element once)
    #[arg(long)]
    arrivals: Option<usize>,
    #[arg(long, value_enum, default_value = "noisy")]
    mode: Mode,
    /// Noise level for --mode noisy
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 6)]
    pages: usize,
    #[arg(long, default_value_t = 2)]
    cache_size: usize,
    #[arg(long, default_value_t = 30)]
    length: usize,
    #[arg(long, default_value_t = 3)]
    facilities: usize,
    #[arg(long, default_value_t = 5)]
    clients: usize,
}

fn tolerances(a: &RunArgs) -> Result<Tolerances, Failure> {
    let mut tol = Tolerances::default();
    for (slot, value) in [
        (&mut tol.tight, a.tol_tight),
        (&mut tol.sat, a.tol_sat),
        (&mut tol.time, a.tol_time),
        (&mut tol.ledger_abs, a.tol_ledger_abs),
        (&mut tol.ledger_rel, a.tol_ledger_rel),
    ] {
        if let Some(v) = value {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Failure::Schema(format!("tolerance must be finite and non-negative, got {v}")));
            }
            *slot = v;
        }
    }
    Ok(tol)
}

fn cmd_run(a: RunArgs) -> Result<bool, Failure> {
    let opts = RunOptions {
        seed: a.seed,
        robust: a.robust,
        baseline_only: a.baseline_only,
        budget: a.budget,
        round: a.round,
        tol: tolerances(&a)?,
    };
    let emit = |report: &str| {
        if a.quiet_report {
            println!("{report}");
        }
    };
    if let Some(input) = &a.input {
        let (report, violation) = run_file(input, &a.out_dir, &opts)?;
        emit(&report);
        if violation {
            eprintln!("copredict: check violated for {}", input.display());
        }
        return Ok(violation);
    }
    let inputs = read_manifest(a.manifest.as_deref().expect("clap group"))?;
    let out_for = |p: &Path| a.out_dir.join(p.file_stem().unwrap_or(p.as_os_str()));
    let jobs = a.jobs.max(1);
    let mut results: Vec<Option<Result<(String, bool), Failure>>> = (0..inputs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (chunk_inputs, chunk_results) in inputs
            .chunks(inputs.len().div_ceil(jobs).max(1))
            .zip(results.chunks_mut(inputs.len().div_ceil(jobs).max(1)))
        {
            let opts = &opts;
            let out_for = &out_for;
            scope.spawn(move || {
                for (input, slot) in chunk_inputs.iter().zip(chunk_results) {
                    *slot = Some(run_file(input, &out_for(input), opts));
                }
            });
        }
    });
    let mut violation = false;
    let mut first_failure: Option<Failure> = None;
    for (input, result) in inputs.iter().zip(results) {
        match result.expect("every input ran") {
            Ok((report, bad)) => {
                emit(&report);
                if bad {
                    eprintln!("copredict: check violated for {}", input.display());
                }
                violation |= bad;
            }
            Err(e) => {
                eprintln!("copredict: {}", e.message());
                if first_failure.as_ref().is_none_or(|f| e.code() > f.code()) {
                    first_failure = Some(e);
                }
            }
        }
    }
    match first_failure {
        Some(e) => Err(e),
        None => Ok(violation),
    }
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let bad = |e: copredict::generate::GenerateError| Failure::Schema(e.to_string());
    let file = if let Some(v) = &a.lower_bound {
        lower_bound_instance(v[0] as usize, v[1] as usize, v[2]).map_err(bad)?
    } else if a.setcover {
        let mode = match a.mode {
            Mode::Oracle => SuggestionMode::Oracle,
            Mode::Noisy => SuggestionMode::Noisy(a.sigma),
            Mode::Adversarial => SuggestionMode::Adversarial,
        };
        let params = SetCoverParams {
            sets: a.sets,
            elements: a.elements,
            frequency: a.frequency,
            arrivals: a.arrivals.unwrap_or(a.elements),
            k: a.k,
            mode,
        };
        setcover_instance(&params, a.seed).map_err(bad)?
    } else if a.caching_trace {
        let params = CachingParams {
            pages: a.pages,
            h: a.cache_size,
            length: a.length,
            k: a.k,
        };
        caching_instance(&params, a.seed).map_err(bad)?
    } else {
        let params = FacilityParams {
            facilities: a.facilities,
            clients: a.clients,
            k: a.k,
        };
        facility_instance(&params, a.seed).map_err(bad)?
    };
    let text = write_instance(&file).map_err(|e| Failure::Schema(e.to_string()))?;
    std::fs::write(&a.output, text).map_err(|e| Failure::Engine(format!("{}: {e}", a.output.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gen(a) => cmd_gen(a).map(|()| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("copredict: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
