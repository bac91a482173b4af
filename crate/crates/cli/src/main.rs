//! `iwcn`: run wake-up-radio simulations and dependability analyses.
//!
//! Exit status: 0 success, 1 usage error, 2 configuration or input error,
//! 3 runtime error. Errors are reported as a single `error[kind]: message`
//! line on stderr; nothing is written to stderr on success.
//!
//! Output goes to `--out`, else to `output.path` from the config, else to
//! `$IWCN_OUTPUT_DIR/<subcommand>.csv` when that variable is set, else to
//! stdout.

use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iwcn_core::config::{dump_defaults, parse_config, parse_n_values, ExperimentConfig};
use iwcn_core::dependability::description::analyze;
use iwcn_core::report::{write_metrics_csv, write_sweep_csv};
use iwcn_core::sim::{run, sweep, Execution, SimError, SweepRow};

const OUTPUT_DIR_VAR: &str = "IWCN_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "iwcn", version, about = "Wake-up-radio event reporting simulator and dependability analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario once and write one CSV row.
    Simulate(RunArgs),
    /// Run every policy and wake-up mode for each device count.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Device counts, overriding `sweep.n_values`.
        #[arg(long, value_name = "LIST", value_parser = parse_n_list)]
        n_values: Option<NValues>,
    },
    /// Evaluate the models in a system description file.
    Analyze {
        file: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Print the default configuration.
    Defaults {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    replications: Option<u64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Comma list given as one flag value.
#[derive(Clone)]
struct NValues(Vec<usize>);

fn parse_n_list(s: &str) -> Result<NValues, String> {
    parse_n_values(s).map(NValues)
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Config(m) => ("config", m),
            Failure::Runtime(m) => ("runtime", m),
        };
        let one_line: Vec<&str> = msg.split_whitespace().collect();
        write!(f, "error[{kind}]: {}", one_line.join(" "))
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidScenario(_) | SimError::Spatial(_) => Failure::Config(e.to_string()),
            SimError::EmptySweep => Failure::Usage(e.to_string()),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let what = path.map_or_else(|| "defaults".to_string(), |p| p.display().to_string());
    parse_config(&text).map_err(|e| Failure::Config(format!("{what}: {e}")))
}

/// Resolves the output file, or `None` for stdout.
fn destination(
    flag: Option<PathBuf>,
    configured: Option<PathBuf>,
    subcommand: &str,
) -> Result<Option<PathBuf>, Failure> {
    if let Some(p) = flag.or(configured) {
        return Ok(Some(p));
    }
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if !dir.is_empty() => {
            let dir = PathBuf::from(dir);
            fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            Ok(Some(dir.join(format!("{subcommand}.csv"))))
        }
        _ => Ok(None),
    }
}

fn write_out(dest: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let result = match dest {
        Some(path) => fs::File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| match dest {
        Some(p) => Failure::Runtime(format!("cannot write {}: {e}", p.display())),
        None => Failure::Runtime(format!("cannot write to stdout: {e}")),
    })
}

fn prepare(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(r) = args.replications {
        cfg.scenario.replications = r;
    }
    Ok(cfg)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate(args) => {
            let cfg = prepare(&args)?;
            let dest = destination(args.out, cfg.output_path.clone(), "simulate")?;
            let s = &cfg.scenario;
            let row = SweepRow { devices: s.devices, policy: s.policy, wus_mode: s.wus_mode, result: run(s)? };
            write_out(dest.as_deref(), |w| write_sweep_csv(&[row], w))
        }
        Command::Sweep { run: args, n_values } => {
            let cfg = prepare(&args)?;
            let dest = destination(args.out, cfg.output_path.clone(), "sweep")?;
            let ns = n_values.map_or_else(|| cfg.n_values.clone(), |n| n.0);
            let rows = sweep(&cfg.scenario, &ns, Execution::default())?;
            write_out(dest.as_deref(), |w| write_sweep_csv(&rows, w))
        }
        Command::Analyze { file, out } => {
            let text = fs::read_to_string(&file).map_err(|e| Failure::Config(format!("{}: {e}", file.display())))?;
            let rows = analyze(&text).map_err(|e| Failure::Config(format!("{}: {e}", file.display())))?;
            let dest = destination(out, None, "analyze")?;
            write_out(dest.as_deref(), |w| write_metrics_csv(&rows, w))
        }
        Command::Defaults { out } => write_out(out.as_deref(), |w| w.write_all(dump_defaults().as_bytes())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                "a subcommand is required (simulate, sweep, analyze, defaults); see --help".to_string()
            } else {
                let rendered = e.to_string();
                rendered.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string()
            };
            let f = Failure::Usage(text);
            eprintln!("{f}");
            return ExitCode::from(f.code());
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
