use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sosforge_cli::bench::{run_bench, seed_from_env, write_csv, Op};
use sosforge_cli::expr::{parse_poly, print_poly};
use sosforge_cli::problems::{run_glb, run_localstab, run_robust, RunOptions};

#[derive(Parser)]
#[command(name = "sosforge", version, about = "Sum-of-squares programs compiled to SDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Skip the solver even when the problem is small enough.
    #[arg(long)]
    no_solve: bool,
    /// Also write the SDP in SDPA sparse format.
    #[arg(long, value_name = "PATH")]
    export: Option<PathBuf>,
}

impl Output {
    fn options(&self) -> RunOptions {
        RunOptions { solve: !self.no_solve, export: self.export.clone(), ..RunOptions::default() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Greatest lower bound of the quartic test function on a box.
    Glb {
        /// Degree of the multiplier bases (even, at least 2).
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 12.0)]
        halfwidth: f64,
        /// Pose the program in the original box units.
        #[arg(long)]
        raw: bool,
        /// Kept for symmetry with `--export`; solving is the default.
        #[arg(long)]
        solve: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Robust stability of dx/dt = A(p)x over the unit disc.
    Robust {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Local stability of a chain of n Van der Pol oscillators.
    Localstab {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Time one operation in both representations.
    Bench {
        #[arg(long)]
        op: Op,
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',', default_value = "0,10,100,1000")]
        q: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Defaults to standard output.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Print the canonical form of a polynomial expression.
    Parse {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Glb { degree, halfwidth, raw, solve: _, out } => {
            let opts = RunOptions { raw, ..out.options() };
            print!("{}", run_glb(degree, halfwidth, &opts)?);
        }
        Command::Robust { n, out } => print!("{}", run_robust(n, &out.options())?),
        Command::Localstab { n, out } => print!("{}", run_localstab(n, &out.options())?),
        Command::Bench { op, q, reps, csv } => {
            let records = run_bench(op, &q, reps, seed_from_env())?;
            match csv {
                Some(path) => write_csv(&records, BufWriter::new(File::create(path)?))?,
                None => write_csv(&records, io::stdout().lock())?,
            }
        }
        Command::Parse { expr } => println!("{}", print_poly(&parse_poly(&expr)?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
