use std::process::ExitCode;

use clap::{Parser, Subcommand};
use layercake_core::cake::{parse_rational, Rational};
use layercake_core::fptas::SolveOptions;
use layercake_core::generate::InstanceShape;
use serde::Serialize;

use layercake_cli::commands::{self, CliError};

#[derive(Parser)]
#[command(name = "layercake", version, about = "Envy-free and proportional division of layered cakes")]
struct Cli {
    /// Evaluate agents in parallel inside the solvers.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn groups(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|p: Vec<usize>| format!("expected three group sizes, got {}", p.len()))
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the division solvers.
    Solve {
        #[command(subcommand)]
        solver: Solver,
    },
    /// Search the chessboard complex for a balanced division.
    Search {
        #[command(subcommand)]
        search: Search,
    },
    /// Demonstrations built on the solvers.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
    /// Check a solution document against an instance.
    Verify {
        #[arg(short, long)]
        instance: String,
        #[arg(short, long)]
        solution: String,
        /// Defaults to the epsilon recorded in the solution.
        #[arg(long, value_parser = rational)]
        epsilon: Option<Rational>,
    },
    /// Print a random instance.
    Gen {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        layers: usize,
        #[arg(long, default_value_t = 4)]
        segments: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        max_density: i64,
    },
}

#[derive(Subcommand)]
enum Solver {
    /// Two layers, three groups of balanced size.
    TwoLayer {
        #[arg(short, long)]
        instance: String,
        #[arg(long, value_parser = rational, default_value = "1/10")]
        epsilon: Rational,
    },
    /// One layer, three groups of the given sizes.
    OneLayer {
        #[arg(short, long)]
        instance: String,
        /// Group sizes `k1,k2,k3` summing to the number of agents.
        #[arg(long, value_parser = groups)]
        groups: [usize; 3],
        #[arg(long, value_parser = rational, default_value = "1/10")]
        epsilon: Rational,
    },
    /// Proportional division among `q` groups.
    Proportional {
        #[arg(short, long)]
        instance: String,
        #[arg(long)]
        q: usize,
        #[arg(long, value_parser = rational, default_value = "1/10")]
        epsilon: Rational,
    },
}

#[derive(Subcommand)]
enum Search {
    Chessboard {
        #[arg(short, long)]
        instance: String,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 30)]
        resolution: usize,
        /// Envy slack to certify; defaults to 6K/resolution.
        #[arg(long, value_parser = rational)]
        epsilon: Option<Rational>,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Split a one-layer cake into bundles of equally long subintervals.
    EqualSize {
        #[arg(short, long)]
        instance: String,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 30)]
        resolution: usize,
        #[arg(long, value_parser = rational)]
        epsilon: Option<Rational>,
    },
}

fn emit<T: Serialize>(doc: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Verification(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let options = SolveOptions { parallel: cli.parallel };
    let doc = match cli.command {
        Command::Solve { solver } => match solver {
            Solver::TwoLayer { instance, epsilon } => {
                commands::solve_two_layer(&commands::read_instance(&instance)?, &epsilon, &options)?
            }
            Solver::OneLayer { instance, groups, epsilon } => {
                commands::solve_one_layer(&commands::read_instance(&instance)?, &epsilon, groups, &options)?
            }
            Solver::Proportional { instance, q, epsilon } => {
                commands::solve_proportional(&commands::read_instance(&instance)?, q, &epsilon, &options)?
            }
        },
        Command::Search { search: Search::Chessboard { instance, q, resolution, epsilon } } => {
            commands::search_chessboard(&commands::read_instance(&instance)?, q, resolution, epsilon)?
        }
        Command::Demo { demo: Demo::EqualSize { instance, q, resolution, epsilon } } => {
            commands::demo_equal_size(&commands::read_instance(&instance)?, q, resolution, epsilon)?
        }
        Command::Verify { instance, solution, epsilon } => {
            let inst = commands::read_instance(&instance)?;
            let sol = commands::read_solution(&solution)?;
            let cert = commands::verify(&inst, &sol, epsilon)?;
            emit(&cert)?;
            return Ok(cert.passed);
        }
        Command::Gen { agents, layers, segments, seed, max_density } => {
            let shape = InstanceShape { agents, layers, segments, max_density };
            emit(&commands::generate(&shape, seed)?)?;
            return Ok(true);
        }
    };
    emit(&doc)?;
    Ok(doc.certificate.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
