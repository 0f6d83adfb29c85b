use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use asap_phi_cli::bench::{cmd_bench, SUITES};
use asap_phi_cli::{cmd_eval, cmd_monitor, cmd_train, cmd_verify, out_root, CliError, VERSION};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asap-phi", version = VERSION, about = "Train, evaluate and verify STL recovery policies")]
struct Cli {
    /// Worker threads for evaluation (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a policy from a run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory (default: derived from the config under $ASAP_PHI_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key.path=value`, value parsed as a TOML literal.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate a run directory or checkpoint on random initial states.
    Eval {
        /// Run directory or checkpoint file.
        input: PathBuf,
        /// Run configuration; required for a bare checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Comma-separated step tolerances, e.g. 15,25,30.
        #[arg(long, value_delimiter = ',')]
        tolerances: Vec<usize>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the robustness of a formula at every step of a trace CSV.
    Monitor { trace: PathBuf, formula: String },
    /// Check the as-soon-as-possible ordering on random tabular MDPs.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for counterexample dumps.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named benchmark suite.
    Bench {
        suite: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output root (default: $ASAP_PHI_OUT or ./runs).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// List the suites and exit.
        #[arg(long)]
        list: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    match cli.cmd {
        Cmd::Train {
            config,
            seed,
            out,
            overrides,
        } => cmd_train(&config, seed, out.as_deref(), &overrides, &mut w).map(drop),
        Cmd::Eval {
            input,
            config,
            out,
            mut overrides,
            tolerances,
            n_points,
            seed,
        } => {
            if !tolerances.is_empty() {
                let list: Vec<String> = tolerances.iter().map(usize::to_string).collect();
                overrides.push(format!("eval.tolerances=[{}]", list.join(",")));
            }
            if let Some(n) = n_points {
                overrides.push(format!("eval.n_points={n}"));
            }
            if let Some(s) = seed {
                overrides.push(format!("eval.seed={s}"));
            }
            cmd_eval(&input, config.as_deref(), out.as_deref(), &overrides, &mut w).map(drop)
        }
        Cmd::Monitor { trace, formula } => cmd_monitor(&trace, &formula, &mut w).map(drop),
        Cmd::Verify { config, seed, out } => cmd_verify(config.as_deref(), seed, out.as_deref(), &mut w).map(drop),
        Cmd::Bench {
            suite,
            seed,
            out,
            overrides,
            list,
        } => {
            if list {
                for (name, what) in SUITES {
                    let _ = writeln!(w, "{name:<15} {what}");
                }
                return Ok(());
            }
            let suite = suite.ok_or_else(|| CliError::Usage("bench needs a suite name (see --list)".into()))?;
            let root = out.unwrap_or_else(out_root);
            cmd_bench(&suite, &root, seed, &overrides, &mut w).map(drop)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
