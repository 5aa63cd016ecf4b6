//! Command-line driver for the hypercurrent library.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "hypercurrent", version, about = "Driven Markov chains of cycles on CW complexes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Built-in example: wedge-spheres-d2, torus, cycle-graph-<n>.
    #[arg(long, global = true, conflicts_with = "complex")]
    pub example: Option<String>,
    /// Complex file (JSON).
    #[arg(long, global = true)]
    pub complex: Option<PathBuf>,
    /// Protocol file (JSON).
    #[arg(long, global = true)]
    pub protocol: Option<PathBuf>,
    /// Override the driving time scale.
    #[arg(long = "tau-d", global = true)]
    pub tau_d: Option<f64>,
    /// Override the inverse temperature.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Initial integer cycle, e.g. `f1=1` or `a1=1,a2=-1`.
    #[arg(long, global = true)]
    pub z0: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write results and a run manifest into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print or dump a built-in example.
    Example {
        name: Option<String>,
        /// Print the complex as canonical JSON.
        #[arg(long)]
        dump: bool,
        /// Print the example protocol as JSON.
        #[arg(long)]
        dump_protocol: bool,
    },
    /// Check the complex (and protocol, if given); exit 1 on violations.
    Validate,
    /// Betti numbers and torsion in every degree.
    Homology {
        /// Comma-separated cells of a subcomplex for relative homology.
        #[arg(long, value_delimiter = ',')]
        relative: Option<Vec<String>>,
    },
    /// Spanning trees and co-trees with torsion orders.
    Forests {
        /// Also report the forests of the k-skeleton.
        #[arg(long)]
        skeleton: Option<usize>,
        /// JSON map `cell -> weight` for E and W.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Use the protocol weights at this time.
        #[arg(long)]
        at: Option<f64>,
    },
    /// Boltzmann cycle in the class of z0.
    Boltzmann {
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Sample uniformly on [0, 1] with this many intervals and emit CSV.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Periodic solution of the expectation dynamics, as CSV.
    Expect {
        /// Dyadic grid level (2^level + 1 points).
        #[arg(long, default_value_t = 10)]
        level: u32,
    },
    /// Average current Q over one period.
    Current {
        #[arg(long, default_value_t = 10)]
        level: u32,
        #[arg(long, default_value_t = 14)]
        max_level: u32,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Also compute the adiabatic current.
        #[arg(long)]
        adiabatic: bool,
        /// `json` summary or `csv` table of J(t).
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Exact low-temperature ledger of the adiabatic current.
    Quantize {
        #[arg(long, default_value_t = 40.0)]
        probe_beta: f64,
    },
    /// Simulate trajectories and report the empirical mean.
    Simulate {
        #[arg(long, default_value_t = 1000)]
        n_traj: u64,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 50)]
        max_norm: i64,
        /// Number of uniform grid intervals on [0, t_end].
        #[arg(long, default_value_t = 10)]
        grid: usize,
        /// Add the solution of the expectation dynamics from z0.
        #[arg(long)]
        compare: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
