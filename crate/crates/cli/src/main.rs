use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use speedscale::discretize::build_grid;
use speedscale::gen::{generate, GenKind, GenParams};
use speedscale::model::Mode;
use speedscale::multi::Backend;
use speedscale::oracle::brute_force_single;
use speedscale::rational::{self, Rational};
use speedscale::SolveParams;

use speedscale_cli::commands::{dump_lp, override_alpha, solve_instance, summary, verify_texts, yds_energies, SolveOptions};
use speedscale_cli::experiment::{bell_rows, ratio_sweep, table1, write_csv, Battery, Table1Params, BELL_ALPHAS, SWEEP_ALPHAS};
use speedscale_cli::format::{parse_instance, write_instance, write_schedule_csv};
use speedscale_cli::CliError;

/// Energy-minimal non-preemptive scheduling on speed-scalable processors.
///
/// Every flag can also be set through the environment variable named in its help;
/// an explicit flag wins.
#[derive(Debug, Parser)]
#[command(name = "speedscale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded instance file.
    Gen(GenArgs),
    /// Solve an instance and write a schedule file.
    Solve(SolveArgs),
    /// Check a schedule file against its instance.
    Verify(VerifyArgs),
    /// Run an experiment preset and write CSV.
    Experiment(ExperimentArgs),
    /// Print the optimal preemptive energy of each processor's eligible jobs.
    Yds(InstanceArg),
    /// Exact slot-restricted optimum of a tiny single-processor instance.
    BruteForce(BruteForceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Random,
    Agreeable,
    EqualWork,
    Nested,
}

impl From<KindArg> for GenKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Random => GenKind::Random,
            KindArg::Agreeable => GenKind::Agreeable,
            KindArg::EqualWork => GenKind::EqualWork,
            KindArg::Nested => GenKind::Nested,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Pipeline,
    YdsEdf,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Pipeline => Backend::Pipeline,
            BackendArg::YdsEdf => Backend::YdsEdf,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Table1,
    RatioSweep,
    Bell,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(value_enum, env = "SPEEDSCALE_KIND")]
    kind: KindArg,
    #[arg(long, default_value_t = 5, env = "SPEEDSCALE_N")]
    n: usize,
    #[arg(long, default_value_t = 1, env = "SPEEDSCALE_M")]
    m: usize,
    #[arg(long, default_value_t = 0, env = "SPEEDSCALE_SEED")]
    seed: u64,
    /// Defaults to single for m = 1 and multi otherwise.
    #[arg(long, value_enum, env = "SPEEDSCALE_MODE")]
    mode: Option<ModeArg>,
    /// One exponent, or one per processor separated by commas.
    #[arg(long, value_delimiter = ',', default_value = "2", env = "SPEEDSCALE_ALPHA")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 10, env = "SPEEDSCALE_HORIZON")]
    horizon: i64,
    #[arg(long, default_value_t = 1, env = "SPEEDSCALE_MIN_WORK")]
    min_work: i64,
    #[arg(long, default_value_t = 5, env = "SPEEDSCALE_MAX_WORK")]
    max_work: i64,
    /// Probability of a job being eligible on each processor (multi mode).
    #[arg(long, default_value_t = 0.7, env = "SPEEDSCALE_ELIGIBILITY")]
    eligibility: f64,
    #[arg(long, short, env = "SPEEDSCALE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveParamArgs {
    #[arg(long, default_value = "1", value_parser = parse_rational, env = "SPEEDSCALE_EPSILON")]
    epsilon: Rational,
    #[arg(long, default_value_t = 0, env = "SPEEDSCALE_SEED")]
    seed: u64,
    #[arg(long, default_value_t = 32, env = "SPEEDSCALE_TRIALS")]
    trials: usize,
    /// Upper limit on slots per landmark gap.
    #[arg(long, env = "SPEEDSCALE_SLOT_CAP")]
    slot_cap: Option<usize>,
}

impl SolveParamArgs {
    fn params(&self) -> SolveParams {
        SolveParams {
            epsilon: self.epsilon.clone(),
            seed: self.seed,
            trials: self.trials,
            slot_cap: self.slot_cap,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    instance: PathBuf,
    /// Replace every processor's exponent.
    #[arg(long, env = "SPEEDSCALE_ALPHA")]
    alpha: Option<f64>,
    #[command(flatten)]
    solve: SolveParamArgs,
    #[arg(long, value_enum, default_value = "pipeline", env = "SPEEDSCALE_BACKEND")]
    backend: BackendArg,
    /// Schedule destination; without it the schedule goes to stdout and the summary to stderr.
    #[arg(long, short, env = "SPEEDSCALE_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json", env = "SPEEDSCALE_FORMAT")]
    format: OutputFormat,
    /// Also write the configuration LP in CPLEX LP format.
    #[arg(long, env = "SPEEDSCALE_LP_DUMP")]
    lp_dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    instance: PathBuf,
    schedule: PathBuf,
}

#[derive(Debug, Args)]
struct InstanceArg {
    instance: PathBuf,
}

#[derive(Debug, Args)]
struct BruteForceArgs {
    instance: PathBuf,
    #[arg(long, default_value = "1", value_parser = parse_rational, env = "SPEEDSCALE_EPSILON")]
    epsilon: Rational,
    #[arg(long, env = "SPEEDSCALE_SLOT_CAP")]
    slot_cap: Option<usize>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum, env = "SPEEDSCALE_PRESET")]
    preset: Preset,
    /// Exponents; preset defaults apply when omitted.
    #[arg(long, value_delimiter = ',', env = "SPEEDSCALE_ALPHAS")]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_rational, env = "SPEEDSCALE_EPSILONS")]
    epsilons: Vec<Rational>,
    /// Work ratios for the table1 preset.
    #[arg(long, value_delimiter = ',', default_value = "2", env = "SPEEDSCALE_RATIOS")]
    ratios: Vec<u32>,
    #[arg(long, default_value_t = 20, env = "SPEEDSCALE_INSTANCES")]
    instances: usize,
    #[arg(long, default_value_t = 5, env = "SPEEDSCALE_N")]
    n: usize,
    #[arg(long, default_value_t = 2, env = "SPEEDSCALE_M")]
    m: usize,
    #[arg(long, default_value_t = 0, env = "SPEEDSCALE_SEED")]
    seed: u64,
    #[arg(long, default_value_t = 8, env = "SPEEDSCALE_TRIALS")]
    trials: usize,
    #[arg(long, default_value_t = 6, env = "SPEEDSCALE_SLOT_CAP")]
    slot_cap: usize,
    #[arg(long, value_enum, default_value = "pipeline", env = "SPEEDSCALE_BACKEND")]
    backend: BackendArg,
    #[arg(long, default_value_t = 1e-8, env = "SPEEDSCALE_TOL")]
    tol: f64,
    #[arg(long, short, env = "SPEEDSCALE_OUT")]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

/// Runs `body` against the file at `path`, or stdout when absent.
fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p)?);
            body(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run_gen(a: GenArgs) -> Result<(), CliError> {
    let mode = match a.mode {
        Some(ModeArg::Single) => Mode::Single,
        Some(ModeArg::Multi) => Mode::Multi,
        None if a.m == 1 => Mode::Single,
        None => Mode::Multi,
    };
    let params = GenParams {
        kind: a.kind.into(),
        n: a.n,
        m: a.m,
        seed: a.seed,
        mode,
        alphas: a.alpha,
        horizon: a.horizon,
        min_work: a.min_work,
        max_work: a.max_work,
        eligibility: a.eligibility,
    };
    let instance = generate(&params).map_err(|e| CliError::Usage(e.to_string()))?;
    with_output(a.out.as_deref(), |w| {
        write_instance(&instance, &mut *w)?;
        writeln!(w)?;
        Ok(())
    })
}

fn run_solve(a: SolveArgs) -> Result<(), CliError> {
    let mut instance = parse_instance(&read(&a.instance)?)?;
    if let Some(alpha) = a.alpha {
        instance = override_alpha(&instance, alpha)?;
    }
    let opts = SolveOptions { params: a.solve.params(), backend: a.backend.into() };
    if let Some(path) = &a.lp_dump {
        dump_lp(&instance, &opts.params, io::BufWriter::new(fs::File::create(path)?))?;
    }
    let file = solve_instance(&instance, &opts)?;
    with_output(a.out.as_deref(), |w| {
        match a.format {
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut *w, &file).map_err(|e| CliError::Format(e.to_string()))?;
                writeln!(w)?;
            }
            OutputFormat::Csv => write_schedule_csv(&file, &mut *w)?,
        }
        Ok(())
    })?;
    let text = summary(&file);
    if a.out.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
    Ok(())
}

fn run_verify(a: VerifyArgs) -> Result<(), CliError> {
    let report = verify_texts(&read(&a.instance)?, &read(&a.schedule)?)?;
    if report.is_feasible() {
        println!("ok");
        return Ok(());
    }
    for v in &report.violations {
        println!("{v}");
    }
    Err(CliError::Violations(report.violations.len()))
}

fn run_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let battery = Battery {
        instances: a.instances,
        n: a.n,
        m: a.m,
        seed: a.seed,
        trials: a.trials,
        slot_cap: Some(a.slot_cap),
        backend: a.backend.into(),
        ..Default::default()
    };
    let epsilons = if a.epsilons.is_empty() { None } else { Some(a.epsilons.clone()) };
    with_output(a.out.as_deref(), |w| match a.preset {
        Preset::Bell => {
            let alphas = if a.alphas.is_empty() { BELL_ALPHAS.to_vec() } else { a.alphas.clone() };
            write_csv(&bell_rows(&alphas, a.tol)?, w)
        }
        Preset::Table1 => {
            let mut params = Table1Params { ratios: a.ratios.clone(), battery: battery.clone(), ..Default::default() };
            if !a.alphas.is_empty() {
                params.alphas = a.alphas.clone();
            }
            if let Some(e) = epsilons.clone() {
                params.epsilons = e;
            }
            write_csv(&table1(&params)?, w)
        }
        Preset::RatioSweep => {
            let alphas = if a.alphas.is_empty() { SWEEP_ALPHAS.to_vec() } else { a.alphas.clone() };
            let eps = epsilons.clone().unwrap_or_else(|| vec![rational::int(1), rational::ratio(1, 2)]);
            write_csv(&ratio_sweep(&alphas, &eps, &battery)?, w)
        }
    })
}

fn run_yds(a: InstanceArg) -> Result<(), CliError> {
    let instance = parse_instance(&read(&a.instance)?)?;
    for (p, e) in yds_energies(&instance)? {
        println!("P{p} {e:.12}");
    }
    Ok(())
}

fn run_brute_force(a: BruteForceArgs) -> Result<(), CliError> {
    let instance = parse_instance(&read(&a.instance)?)?;
    let grid = build_grid(&instance, &a.epsilon, a.slot_cap)?;
    let (energy, schedule) = brute_force_single::<f64>(&instance, &grid)?;
    println!("energy {energy:.12}");
    for s in &schedule.segments {
        println!("{} {} [{}, {}] speed {}", s.job, s.processor, s.start, s.end, s.speed);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(3),
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Solve(a) => run_solve(a),
        Command::Verify(a) => run_verify(a),
        Command::Experiment(a) => run_experiment(a),
        Command::Yds(a) => run_yds(a),
        Command::BruteForce(a) => run_brute_force(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
