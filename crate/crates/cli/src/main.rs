//! `tfbs`: command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
//! failure, 3 I/O failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tfbs_core::analysis::MeasureTime;
use tfbs_core::solver::{BoundaryTreatment, Scheme};

use config::{parse_schedule, Format, RunConfig, ScheduleSpec};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<tfbs_core::Error> for CliError {
    fn from(e: tfbs_core::Error) -> Self {
        use tfbs_core::Error as E;
        match e {
            E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
            ref n if n.is_numerical() => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tfbs",
    version,
    about = "Time-fractional Black–Scholes solver (L1 + modified cubic B-spline DQM)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem on one mesh and print a JSON summary.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the full history as history.csv.
        #[arg(long)]
        history_csv: bool,
    },
    /// Refinement study over a schedule, one table per alpha.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Compare against the matching reference table.
        #[arg(long)]
        compare_golden: bool,
    },
    /// Stability diagnostics for one mesh.
    Stability {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Unit-spacing weight matrices.
    Weights {
        #[arg(long = "M")]
        intervals: usize,
        /// Write X.csv and Y.csv into this directory.
        #[arg(long, num_args = 0..=1, default_missing_value = ".")]
        dump: Option<PathBuf>,
        /// Rebuild B from the modified basis instead of the tabulated entries.
        #[arg(long)]
        regenerate_b: bool,
    },
    /// Compare a convergence JSON file against the reference tables.
    CompareGolden {
        /// JSON written by `convergence`.
        #[arg(long)]
        input: PathBuf,
        /// Reference table; inferred from the run's schedule when omitted.
        #[arg(long)]
        table: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Curve and surface CSVs for plotting.
    PlotData {
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Flags shared by the solving commands; each overrides `--config`.
#[derive(Debug, Args, Default)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long = "M")]
    intervals: Option<usize>,
    #[arg(long = "N")]
    steps: Option<usize>,
    /// Named schedule (table2, table3, table4, table5, fdm-table) or pairs like 10x10,20x100.
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<ScheduleSpec>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Option<Vec<FormatArg>>,
    /// Use unit weight on U⁰ in the memory term.
    #[arg(long)]
    verbatim_history: bool,
    #[arg(long)]
    regenerate_b: bool,
    #[arg(long)]
    stability_report: bool,
    #[arg(long, value_enum)]
    measure_time: Option<MeasureArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum SchemeArg {
    Dqm,
    Fdm,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum BoundaryArg {
    Collocation,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum MeasureArg {
    Final,
    Max,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flag = |b: bool| b.then_some(true);
        let over = RunConfig {
            problem: self.problem,
            scheme: self.scheme.map(|s| match s {
                SchemeArg::Dqm => Scheme::Dqm,
                SchemeArg::Fdm => Scheme::Fdm,
            }),
            boundary: self.boundary.map(|b| match b {
                BoundaryArg::Collocation => BoundaryTreatment::Collocation,
                BoundaryArg::Dirichlet => BoundaryTreatment::Dirichlet,
            }),
            alpha: self.alpha,
            schedule: self.schedule,
            intervals: self.intervals,
            steps: self.steps,
            out_dir: self.out_dir,
            formats: self.format.map(|v| {
                v.into_iter()
                    .map(|f| match f {
                        FormatArg::Csv => Format::Csv,
                        FormatArg::Json => Format::Json,
                    })
                    .collect()
            }),
            verbatim_history: flag(self.verbatim_history),
            regenerate_b: flag(self.regenerate_b),
            stability_report: flag(self.stability_report),
            measure_time: self.measure_time.map(|m| match m {
                MeasureArg::Final => MeasureTime::Final,
                MeasureArg::Max => MeasureTime::Max,
            }),
            custom: None,
            call_demo: None,
        };
        Ok(base.merged(over))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { run, history_csv } => commands::solve(&run.resolve()?, history_csv),
        Command::Convergence {
            run,
            compare_golden,
        } => commands::convergence(&run.resolve()?, compare_golden),
        Command::Stability { run } => commands::stability(&run.resolve()?),
        Command::Weights {
            intervals,
            dump,
            regenerate_b,
        } => commands::weights(intervals, dump.as_deref(), regenerate_b),
        Command::CompareGolden {
            input,
            table,
            out_dir,
        } => commands::compare_golden(&input, table.as_deref(), out_dir.as_deref()),
        Command::PlotData { run } => commands::plot_data(&run.resolve()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("tfbs: {e}");
            ExitCode::from(e.code())
        }
    }
}
