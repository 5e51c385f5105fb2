//! `ifsbound`: experiment runner for dimension bounds of place-dependent IFS.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration or precondition
//! error, 3 the dimension bound is not applicable.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ifsbound::battery::{check_example_with, BatteryConfig};
use ifsbound::chain::{push_forward, krylov_bogolyubov_sequence, sample_trajectory, write_trajectory_csv, Resolution};
use ifsbound::config::{ExperimentConfig, SystemSpec, DEFAULT_SEED};
use ifsbound::dimension::{verify_bound, BoundReport, BoundValue};
use ifsbound::measure::fortet_mourier;
use ifsbound::{EmpiricalMeasure, Error};

/// Environment variable naming the output directory when neither a flag nor
/// the config file does.
const OUT_DIR_ENV: &str = "IFSBOUND_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "ifsbound-out";

#[derive(Parser)]
#[command(name = "ifsbound", version, about = "Hausdorff-dimension bounds for place-dependent iterated function systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a chain trajectory and write it as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        system: SystemArgs,
        /// Number of recorded transitions.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
    },
    /// Krylov–Bogolyubov averages and their invariance defect.
    Invariant {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        system: SystemArgs,
        /// Comma-separated averaging lengths.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Snap supports to a grid of 2^level cells.
        #[arg(long, conflicts_with = "no_coarsen")]
        grid_level: Option<u32>,
        /// Keep exact supports.
        #[arg(long)]
        no_coarsen: bool,
    },
    /// Full pipeline: sample, estimate h and lambda, bound, local dimension.
    Bound {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Run the Example 1 check battery.
    CheckExample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fortet–Mourier distance between two measure CSVs (columns point,weight).
    FmDistance { first: PathBuf, second: PathBuf },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config file, then $IFSBOUND_OUT_DIR, then ./ifsbound-out).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SystemKind {
    Example1,
    Cantor,
    TwoComponent,
    Expanding,
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long, value_enum)]
    system: Option<SystemKind>,
    /// Example 1 parameter, in (0, 1/2).
    #[arg(long)]
    p: Option<f64>,
    /// Cantor system probability of the first map.
    #[arg(long)]
    q: Option<f64>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BoundNotApplicable(_) => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::from(Error::from(e))
    }
}

type CmdResult = Result<u8, Failure>;

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(dir) = &common.out_dir {
        cfg.output_dir = Some(dir.clone());
    }
    Ok(cfg)
}

fn apply_system(cfg: &mut ExperimentConfig, args: &SystemArgs) -> Result<(), Failure> {
    let config_error = |msg: String| Failure::from(Error::Config(msg));
    if let Some(kind) = args.system {
        let a = match &cfg.system {
            Some(SystemSpec::Example1 { a, .. }) => a.clone(),
            _ => vec![(0.0, 0.5)],
        };
        cfg.system = Some(match kind {
            SystemKind::Example1 => SystemSpec::Example1 {
                p: args.p.ok_or_else(|| config_error("--system example1 needs --p".into()))?,
                a,
            },
            SystemKind::Cantor => SystemSpec::Cantor { q: args.q.unwrap_or(0.5) },
            SystemKind::TwoComponent => SystemSpec::TwoComponent,
            SystemKind::Expanding => SystemSpec::Expanding,
        });
        return Ok(());
    }
    match (&mut cfg.system, args.p, args.q) {
        (_, None, None) => Ok(()),
        (Some(SystemSpec::Example1 { p, .. }), Some(new_p), None) => {
            *p = new_p;
            Ok(())
        }
        (Some(SystemSpec::Cantor { q }), None, Some(new_q)) => {
            *q = new_q;
            Ok(())
        }
        _ => Err(config_error("--p applies to example1 and --q to cantor systems only".into())),
    }
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Reports already carry `seed = …`; this notes when it was defaulted.
fn default_seed_note(cfg: &ExperimentConfig, out: &mut impl Write) -> io::Result<()> {
    if cfg.seed.is_none() {
        writeln!(out, "# no seed given; using the default")?;
    }
    Ok(())
}

fn seed_line(cfg: &ExperimentConfig) -> String {
    if cfg.seed.is_some() {
        format!("seed = {}", cfg.seed())
    } else {
        format!("seed = {} (default)", DEFAULT_SEED)
    }
}

fn simulate(common: Common, system: SystemArgs, n: Option<usize>, burn_in: Option<usize>) -> CmdResult {
    let mut cfg = load(&common)?;
    apply_system(&mut cfg, &system)?;
    if let Some(n) = n {
        cfg.sample_count = n;
    }
    if let Some(b) = burn_in {
        cfg.burn_in = b;
    }
    let sys = cfg.build_system()?;
    let steps = sample_trajectory(&sys, &cfg.chain_config())?;
    let dir = output_dir(&cfg);
    let mut out = create(&dir, "trajectory.csv")?;
    write_trajectory_csv(&steps, &mut out)?;
    out.flush()?;
    println!("{}", seed_line(&cfg));
    println!("wrote {} rows to {}", steps.len(), dir.join("trajectory.csv").display());
    Ok(0)
}

fn invariant(
    common: Common,
    system: SystemArgs,
    n_list: Option<Vec<usize>>,
    grid_level: Option<u32>,
    no_coarsen: bool,
) -> CmdResult {
    let mut cfg = load(&common)?;
    apply_system(&mut cfg, &system)?;
    if let Some(list) = n_list {
        cfg.n_list = list;
    }
    if no_coarsen {
        cfg.grid_level = None;
    } else if let Some(level) = grid_level {
        cfg.grid_level = Some(level);
    }
    let sys = cfg.build_system()?;
    let resolution = cfg.grid_level.map(|level| Resolution::dyadic(&sys, level));
    sys.domain().check(cfg.invariant_start)?;
    let mu0 = EmpiricalMeasure::dirac(cfg.invariant_start);
    let averages = krylov_bogolyubov_sequence(&sys, &mu0, &cfg.n_list, resolution)?;

    let dir = output_dir(&cfg);
    let width = resolution.map_or(0.0, |r| r.cell_width);
    let mut conv = create(&dir, "convergence.csv")?;
    writeln!(conv, "n,fm_distance,bound,support_size")?;
    println!("{}", seed_line(&cfg));
    println!("{:>8}  {:>22}  {:>22}", "n", "d_FM(mu_n, mu_n P)", "2/n + 2 width");
    for (n, mu) in &averages {
        let d = fortet_mourier(mu, &push_forward(&sys, mu));
        let bound = 2.0 / *n as f64 + 2.0 * width;
        writeln!(conv, "{n},{d:?},{bound:?},{}", mu.len())?;
        println!("{n:>8}  {d:>22.6e}  {bound:>22.6e}");
    }
    conv.flush()?;
    let (_, last) = averages.last().expect("at least one average");
    let mut out = create(&dir, "measure.csv")?;
    last.write_csv(&mut out)?;
    out.flush()?;
    Ok(0)
}

fn write_bound_outputs(dir: &Path, report: &BoundReport) -> Result<(), Failure> {
    let mut f = create(dir, "estimates.csv")?;
    report.table.write_csv(&mut f)?;
    f.flush()?;
    let mut f = create(dir, "extrapolation.csv")?;
    report.extrapolation.write_csv(&mut f)?;
    f.flush()?;
    let mut f = create(dir, "local_dimension.csv")?;
    report.local.write_csv(&mut f)?;
    f.flush()?;
    let mut f = create(dir, "bound.csv")?;
    writeln!(f, "{}", BoundReport::CSV_HEADER)?;
    writeln!(f, "{}", report.csv_row())?;
    f.flush()?;
    let mut f = create(dir, "report.txt")?;
    report.write_text(&mut f)?;
    f.flush()?;
    Ok(())
}

fn bound(common: Common, system: SystemArgs, n: Option<usize>, n_max: Option<usize>) -> CmdResult {
    let mut cfg = load(&common)?;
    apply_system(&mut cfg, &system)?;
    if let Some(n) = n {
        cfg.sample_count = n;
    }
    if let Some(n_max) = n_max {
        cfg.n_max = n_max;
    }
    let sys = cfg.build_system()?;
    let report = verify_bound(&sys, &cfg.bound_config())?;
    let dir = output_dir(&cfg);
    write_bound_outputs(&dir, &report)?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    default_seed_note(&cfg, &mut out)?;
    report.write_text(&mut out)?;
    match &report.bound {
        BoundValue::NotApplicable(reason) => Err(Failure {
            code: 3,
            message: format!("bound not applicable: {reason}"),
        }),
        BoundValue::Finite(_) => Ok(if report.verdict { 0 } else { 1 }),
    }
}

fn check_example(common: Common, p: f64, n: Option<usize>) -> CmdResult {
    let mut cfg = load(&common)?;
    let mut battery = BatteryConfig::new(cfg.seed());
    battery.bound = cfg.bound_config();
    if let Some(n) = n {
        battery.bound.chain.sample_count = n;
        cfg.sample_count = n;
    }
    cfg.system = Some(SystemSpec::Example1 {
        p,
        a: vec![(0.0, 0.5)],
    });
    let report = check_example_with(p, &battery)?;
    let dir = output_dir(&cfg);
    write_bound_outputs(&dir, &report.bound)?;
    let mut f = create(&dir, "checks.txt")?;
    report.write_text(&mut f)?;
    f.flush()?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    default_seed_note(&cfg, &mut out)?;
    report.write_text(&mut out)?;
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn fm_distance(first: &Path, second: &Path) -> CmdResult {
    let read = |path: &Path| -> Result<EmpiricalMeasure, Failure> {
        let file = File::open(path).map_err(|e| Failure {
            code: 2,
            message: format!("cannot open {}: {e}", path.display()),
        })?;
        Ok(EmpiricalMeasure::read_csv(file)?)
    };
    let d = fortet_mourier(&read(first)?, &read(second)?);
    println!("{d:?}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            common,
            system,
            n,
            burn_in,
        } => simulate(common, system, n, burn_in),
        Command::Invariant {
            common,
            system,
            n_list,
            grid_level,
            no_coarsen,
        } => invariant(common, system, n_list, grid_level, no_coarsen),
        Command::Bound {
            common,
            system,
            n,
            n_max,
        } => bound(common, system, n, n_max),
        Command::CheckExample { common, p, n } => check_example(common, p, n),
        Command::FmDistance { first, second } => fm_distance(&first, &second),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
