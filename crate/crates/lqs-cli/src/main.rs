use clap::{Args, Parser, Subcommand, ValueEnum};
use lqs::corpus::DEFAULT_SEED;
use lqs::invert::Waveform;
use lqs::network::{Quadrature, Scale};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod fixtures;
mod output;

#[derive(Parser, Debug)]
#[command(name = "lqs", version, about = "Linear quantum system analysis")]
pub struct Cli {
    /// Seed for every random choice (sample frequencies, initial states, suites).
    #[arg(long, global = true, env = "LQS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the report (or CSV) here instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Add wall-clock time to JSON reports; reports are then no longer byte-reproducible.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SystemArg {
    /// System file, or the name of a bundled fixture.
    pub system: String,
    /// Relative rank tolerance for reachability and observability.
    #[arg(long, default_value_t = lqs::kalman::DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObserverType {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    ZeroSign,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Physical realizability residuals.
    CheckPr {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Exit with status 1 when the test fails.
        #[arg(long)]
        expect_pr: bool,
    },
    /// Poles, zeros and their correspondences.
    Spectrum {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value_t = lqs::spectra::SPECTRAL_TOL)]
        tol: f64,
    },
    /// Kalman canonical form.
    Kalman {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Left-invertibility verdict.
    Invertibility {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Input observer, optionally with a reconstruction run.
    Observer {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long = "type", value_enum, default_value = "classical")]
        kind: ObserverType,
        /// One waveform per quadrature channel: 0, const:v, sin:w, cos:w.
        #[arg(long = "input", value_delimiter = ',')]
        input: Vec<Waveform>,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = lqs::invert::DEFAULT_DT)]
        dt: f64,
        /// Reconstruction trajectory CSV; requires --input.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mean trajectory as CSV.
    Simulate {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long = "input", value_delimiter = ',')]
        input: Vec<Waveform>,
        /// Initial state; defaults to zero.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        t_end: f64,
        #[arg(long, default_value_t = lqs::invert::DEFAULT_DT)]
        dt: f64,
        /// Output channels held at zero by choosing the matching inputs.
        #[arg(long, value_delimiter = ',')]
        forced_zero_output: Vec<usize>,
    },
    /// Beamsplitter feedback sweep around a parametric amplifier, as CSV.
    NetworkSweep {
        #[arg(long)]
        kappa: f64,
        #[arg(long, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Controller amplifier decay; the controller is the identity when absent.
        #[arg(long, requires = "controller_epsilon")]
        controller_kappa: Option<f64>,
        #[arg(long, requires = "controller_kappa")]
        controller_epsilon: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        wmin: f64,
        #[arg(long, allow_hyphen_values = true)]
        wmax: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value = "linear")]
        scale: Scale,
    },
    /// Parametric amplifier realization and its ideal-squeezing beamsplitter.
    Dpa {
        #[arg(long)]
        kappa: f64,
        #[arg(long, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long, default_value = "p")]
        quadrature: Quadrature,
    },
    /// Seeded property suites.
    Selftest {
        /// Inject a defect; the suites are expected to fail.
        #[arg(long, value_enum)]
        fault: Option<FaultArg>,
    },
    /// List bundled fixtures, or print one.
    Fixtures { name: Option<String> },
}

/// Status 1: computed, verdict negative. Status 2: could not compute.
pub enum Outcome {
    Done,
    Negative,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
