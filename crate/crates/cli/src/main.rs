use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use bipartite_bft::analysis::CoverageInput;
use bipartite_bft_cli::commands::{self, Settings};
use bipartite_bft_cli::load_scenario;
use bipartite_bft_cli::scenario::Overrides;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bbft", version, about = "Byzantine broadcast and BA-lever simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Seed for the seeded-random adversary.
    #[arg(long)]
    seed: Option<u64>,
    /// Rounds to simulate (`run`) or adversary horizon (`exhaustive`).
    #[arg(long)]
    rounds: Option<u32>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output root; artifacts go to <out>/<scenario>/<timestamp>/.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gzip traces.
    #[arg(long)]
    gzip: bool,
    #[arg(long, hide = true, allow_hyphen_values = true)]
    accept_offset: Option<i64>,
}

impl RunFlags {
    fn settings(&self) -> Settings {
        Settings {
            overrides: Overrides {
                seed: self.seed,
                rounds: self.rounds,
                accept_offset: self.accept_offset,
            },
            workers: self.workers,
            out: self.out.clone(),
            gzip: self.gzip,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario name).
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check every adversary script up to the horizon.
    Exhaustive {
        scenario: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
        /// Largest script space per job, as a power of two.
        #[arg(long, default_value_t = 120)]
        cap: u32,
    },
    /// Assumption coverage for independent node failures.
    Coverage {
        #[arg(long)]
        n_a: u64,
        #[arg(long)]
        n_b: u64,
        #[arg(long)]
        f_a: u64,
        #[arg(long)]
        f_b: u64,
        /// Per-node failure probability.
        #[arg(long)]
        p: f64,
        /// Evaluate the closed form in single precision.
        #[arg(long)]
        f32: bool,
    },
    /// Build a graph and print its summary: complete:N, bipartite:A,B,
    /// butterfly:R, butterfly-bipartite:R or a topology file.
    Topo {
        graph: String,
        /// Also print the adjacency spectrum.
        #[arg(long)]
        spectral: bool,
        /// Write the graph in the text edge format.
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long)]
        f32: bool,
    },
    /// Re-execute a trace's header and compare with the trace.
    Replay { trace: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { scenario, flags } => commands::run(&load_scenario(&scenario)?, &flags.settings()),
        Command::Exhaustive { scenario, flags, cap } => {
            commands::exhaustive(&load_scenario(&scenario)?, &flags.settings(), cap)
        }
        Command::Coverage {
            n_a,
            n_b,
            f_a,
            f_b,
            p,
            f32,
        } => {
            let input = CoverageInput { n_a, n_b, f_a, f_b, p };
            let text = if f32 {
                commands::coverage::<f32>(&input)?
            } else {
                commands::coverage::<f64>(&input)?
            };
            println!("{text}");
            Ok(true)
        }
        Command::Topo {
            graph,
            spectral,
            export,
            f32,
        } => {
            let text = if f32 {
                commands::topo::<f32>(&graph, spectral, export.as_deref())?
            } else {
                commands::topo::<f64>(&graph, spectral, export.as_deref())?
            };
            println!("{text}");
            Ok(true)
        }
        Command::Replay { trace } => commands::replay(&trace),
    }
}
