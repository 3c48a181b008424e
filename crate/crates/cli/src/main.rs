use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use schreier_liouville::constructions::DEFAULT_DISPLACEMENT_CAP;
use schreier_liouville::Error;
use schreier_liouville_cli::commands::{build_graph, cheeger_cmd, make_family, schedule_cmd};
use schreier_liouville_cli::compare::compare_runs;
use schreier_liouville_cli::config::Config;
use schreier_liouville_cli::experiment;

#[derive(Parser)]
#[command(name = "liouville", version, about = "Exact random-walk experiments on group actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export the Schreier ball around a basepoint.
    BuildGraph {
        #[arg(long)]
        group: String,
        #[arg(long)]
        basepoint: Option<String>,
        #[arg(long)]
        radius: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate a coupling family.
    MakeFamily {
        #[arg(long)]
        group: String,
        /// Largest family index.
        #[arg(long)]
        index: usize,
        /// BFS cap when measuring Thompson displacements.
        #[arg(long, default_value_t = DEFAULT_DISPLACEMENT_CAP)]
        displacement_cap: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the scale schedule of a config.
    Schedule {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and check its bounds.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Isoperimetric and spectral data of balls or small named graphs.
    Cheeger {
        /// A group name, `cycle:N` or `complete:N`.
        #[arg(long)]
        graph: String,
        #[arg(long)]
        basepoint: Option<String>,
        #[arg(long, default_value_t = 2)]
        radius: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diff the CSV artifacts of two runs.
    Compare { left: PathBuf, right: PathBuf },
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Parse(_) | Error::InvalidWeight(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn load(path: &std::path::Path) -> Result<Config, ExitCode> {
    Config::load(path).map_err(fail)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::BuildGraph { group, basepoint, radius, out } => match build_graph(&group, basepoint.as_deref(), radius, &out) {
            Ok(n) => {
                println!("{n} vertices");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::MakeFamily { group, index, displacement_cap, out } => match make_family(&group, index, displacement_cap, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
        Command::Schedule { config, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match schedule_cmd(&cfg, &out) {
                Ok((true, _)) => ExitCode::SUCCESS,
                Ok((false, why)) => {
                    println!("incomplete: {}", why.unwrap_or_default());
                    ExitCode::from(1)
                }
                Err(e) => fail(e),
            }
        }
        Command::Run { config, out, workers } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(w) = workers {
                if w == 0 {
                    return fail(Error::Config("workers must be positive".into()));
                }
                cfg.workers = w;
            }
            match experiment::run(&cfg, &out) {
                Ok(o) => {
                    print!("{}", o.summary);
                    if o.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Cheeger { graph, basepoint, radius, out } => match cheeger_cmd(&graph, basepoint.as_deref(), radius, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
        Command::Compare { left, right } => match compare_runs(&left, &right) {
            Ok(diffs) if diffs.is_empty() => {
                println!("no differences");
                ExitCode::SUCCESS
            }
            Ok(diffs) => {
                for d in &diffs {
                    println!("{d}");
                }
                ExitCode::from(1)
            }
            Err(e) => fail(e),
        },
    }
}
