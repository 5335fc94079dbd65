//! `hjbd`: simulate, search values, synthesize feedback and run the
//! solution-concept checkers on delay control problems described in TOML.
//!
//! Exit codes: 0 on success, 2 when a check fails, 1 on usage or runtime
//! errors.

mod commands;
mod config;
mod functionals;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "hjbd", version, about = "Optimal control of delay systems: values, feedback and solution checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Problem description (TOML).
    pub problem: PathBuf,
    /// Initial state `t`, `z`, `[history]` (TOML).
    #[arg(long)]
    pub point: Option<PathBuf>,
    /// Directory receiving the JSON and CSV artifacts.
    #[arg(long, short, default_value = "out")]
    pub out: PathBuf,
    /// Single source of all randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Caps worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Search {
    /// Maximum number of control sequences per value search.
    #[arg(long, default_value_t = 1e6)]
    pub budget: f64,
    /// Finest control block, in grid steps; 0 picks a quarter of the delay.
    #[arg(long, default_value_t = 0)]
    pub block_len: usize,
    #[arg(long, default_value_t = 4)]
    pub beam_width: usize,
    #[arg(long, default_value_t = 2)]
    pub sweeps: usize,
}

#[derive(Debug, Args, Clone)]
pub struct Probes {
    /// Candidate functional: value, mu(lambda,epsilon), terminal-extended or smooth:<id>.
    #[arg(long, default_value = "value")]
    pub phi: String,
    /// `catalog` derives ten probes from the point; `point` uses the point alone.
    #[arg(long, default_value = "catalog")]
    pub probes: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one control and write the trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// `zero` (the control of least norm), `index:<i>`, or `optimal`.
        #[arg(long, default_value = "zero")]
        control: String,
        #[command(flatten)]
        search: Search,
    },
    /// Search the value and an optimal control.
    Value {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: Search,
    },
    /// Build a feedback control and compare its cost with the value.
    Synthesize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: Search,
        /// Functional whose gradient feeds the shifts.
        #[arg(long, default_value = "value")]
        phi: String,
        /// Partition intervals over the horizon.
        #[arg(long, default_value_t = 16)]
        k: usize,
        /// `value-gradient`, `envelope` or `zero`.
        #[arg(long, default_value = "value-gradient")]
        shift: String,
        /// Difference step of the value-gradient shifts.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        /// Envelope mode: `λ` of the comparison functional.
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        /// Envelope mode: `ε` as a fraction of its admissible bound.
        #[arg(long, default_value_t = 0.5)]
        epsilon_fraction: f64,
        /// Envelope mode: inclusion enlargement.
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        /// Envelope mode: sampled family size.
        #[arg(long, default_value_t = 8)]
        members: usize,
    },
    /// Stability inequalities on sampled characteristic families.
    CheckMinimax {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        probes: Probes,
        /// `(τ, s)` draws per probe.
        #[arg(long, default_value_t = 10)]
        draws: usize,
        /// Half-width of the box `s` is drawn from.
        #[arg(long, default_value_t = 3.0)]
        s_box: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 8)]
        family: usize,
        #[arg(long, default_value_t = 5e-2)]
        zeta: f64,
    },
    /// Viscosity inequalities at probe points.
    CheckViscosity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        probes: Probes,
        /// Spacing of the shifted `p₀` candidates.
        #[arg(long, default_value_t = 0.2)]
        spread: f64,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 5e-2)]
        tol: f64,
    },
    /// Directional-derivative inequalities at probe points.
    CheckDerivs {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        probes: Probes,
        #[arg(long, default_value_t = 4)]
        draws: usize,
        #[arg(long, default_value_t = 3.0)]
        s_box: f64,
        #[arg(long, default_value_t = 5e-2)]
        tol: f64,
    },
    /// Penalized search for a pair with positive pairing on a direction set.
    MviSearch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: Search,
        #[arg(long, default_value = "value")]
        phi: String,
        /// Generators of the direction set, e.g. `1,0;0,1`.
        #[arg(long)]
        directions: String,
        /// Penalty schedule, e.g. `1e2,1e3,1e4`.
        #[arg(long, default_value = "1e2,1e3,1e4")]
        k: String,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Growth and Lipschitz constants of the problem.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Radii `α` of the initial-data balls, e.g. `0.5,1,2`.
        #[arg(long, default_value = "1")]
        alpha: String,
    },
}

/// Distinguishes a failed check (exit 2) from an error (exit 1).
pub enum Outcome {
    Ok,
    CheckFailed(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed(why)) => {
            eprintln!("check failed: {why}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
