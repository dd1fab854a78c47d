//! `fountain-eval`: simulate fountain data and run the evaluation pipeline.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "fountain-eval",
    version,
    about = "Caesium fountain accuracy evaluation pipeline"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// RNG seed for simulation and Monte-Carlo fits.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Fountain configuration JSON (geometry, timing, simulation truth).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; results go to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte-Carlo trials for the tilt-scan fits.
    #[arg(long, global = true)]
    pub mc_trials: Option<usize>,
    /// Constants JSON overriding the built-in evaluation constants.
    #[arg(long, global = true, env = "FOUNTAIN_EVAL_CONSTANTS")]
    pub constants: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit a synthetic campaign (CSV data plus the injected truth).
    Simulate {
        /// Number of fountain cycles (even).
        #[arg(long, default_value_t = 20_000)]
        cycles: usize,
    },
    /// Reconstruct the C-field and evaluate the second-order Zeeman shift.
    EvalZeeman {
        #[arg(long)]
        scan: PathBuf,
        /// JSON with `routine_apogee_mm` and `fringe_track_hz`.
        #[arg(long)]
        routine: Option<PathBuf>,
        /// Routine launch apogee, mm; defaults to the ballistic apogee of the config.
        #[arg(long)]
        apogee_mm: Option<f64>,
    },
    /// Collisional shift and stability from interleaved cycles.
    EvalCollisional {
        #[arg(long)]
        cycles: PathBuf,
    },
    /// Distributed cavity phase from tilt scans.
    EvalDcp {
        #[arg(long)]
        scans: PathBuf,
    },
    /// Blackbody, gravity, light and background-gas terms.
    EvalEnvironment {
        #[arg(long)]
        temperature: Option<PathBuf>,
    },
    /// Overlapping Allan deviation of the cycle frequencies.
    Adev {
        #[arg(long)]
        cycles: PathBuf,
        #[arg(long, value_enum, default_value_t = Stream::All)]
        density: Stream,
    },
    /// Accuracy budget: reference values, a report to re-render, or a full evaluation.
    Budget {
        /// Budget report JSON to re-ingest and render.
        #[arg(long, conflicts_with = "data")]
        input: Option<PathBuf>,
        /// Directory written by `simulate` (or laid out the same way) to evaluate.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Chain the fountain frequency to UTC over one or more intervals.
    Compare {
        /// JSON comparison record, or an array of them.
        #[arg(long, conflicts_with_all = ["maser", "utc"])]
        record: Option<PathBuf>,
        /// Fountain − maser samples (`mjd,y_fountain_maser`).
        #[arg(long, requires_all = ["utc", "start", "end", "uncertainties"])]
        maser: Option<PathBuf>,
        /// UTC − UTC(lab) offsets (`mjd,utc_minus_utclab_ns`).
        #[arg(long, requires = "maser")]
        utc: Option<PathBuf>,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        end: Option<f64>,
        /// Maser − UTC(lab), fractional.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        y_maser_lab: f64,
        /// Nominal spacing of the fountain − maser samples, days.
        #[arg(long, default_value_t = 1.0)]
        spacing_days: f64,
        /// u_a,u_b,u_link_lab,u_link_tai (fractional).
        #[arg(long, value_delimiter = ',')]
        uncertainties: Option<Vec<f64>>,
    },
    /// Ramsey lineshape around the central fringe.
    Fringe {
        #[arg(long, default_value_t = 0.011)]
        tau_in: f64,
        #[arg(long, default_value_t = 0.515)]
        t_r: f64,
        /// Pulse area, rad; defaults to π/2.
        #[arg(long)]
        pulse_area: Option<f64>,
        /// Half-width of the detuning span, Hz.
        #[arg(long, default_value_t = 5.0)]
        span_hz: f64,
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    All,
    High,
    Low,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return commands::report_error("usage", &e.to_string(), 2),
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => commands::fail(&e),
    }
}
