//! Command-line front end: bound spectra, counting statistics, parameter
//! sweeps and the figure reproductions.
//!
//! Exit status: 0 on success, 1 on numerical or output failure, 2 on a
//! configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use fockprep::error::{ConfigError, Error};
use fockprep::io::config::{Count, Figure as FigureName};
use fockprep::io::{parse_config_as, run, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "fockprep",
    version,
    about = "Atom-number state preparation by sudden trap reduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON scenario file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output_dir` in the file)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Fixed number of grid points (overrides the automatic grid)
    #[arg(long, global = true)]
    grid_points: Option<usize>,

    /// Worker threads for sweeps (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output; repeat for more detail
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Sub {
    /// Bound energies of the initial (and final) trap
    Spectrum,
    /// Atom-number distribution after one trap reduction
    Counting,
    /// Width-ratio, temperature or smoothness sweep
    Sweep,
    /// Reproduce one of the built-in figure data sets
    Figure {
        #[arg(value_enum)]
        name: FigureArg,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FigureArg {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl From<FigureArg> for FigureName {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::Fig2 => FigureName::Fig2,
            FigureArg::Fig3 => FigureName::Fig3,
            FigureArg::Fig4 => FigureName::Fig4,
            FigureArg::Fig5 => FigureName::Fig5,
        }
    }
}

fn config_error(path: &str, message: String) -> Error {
    Error::Config(ConfigError {
        path: path.into(),
        line: None,
        message,
    })
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let command = match cli.command {
        Sub::Spectrum => Command::Spectrum,
        Sub::Counting => Command::Counting,
        Sub::Sweep => Command::Sweep,
        Sub::Figure { .. } => Command::Figure,
    };
    let text = match (&cli.common.config, &cli.command) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| {
            config_error("--config", format!("cannot read {}: {e}", path.display()))
        })?,
        (None, Sub::Figure { name }) => {
            let name: FigureName = (*name).into();
            format!(
                "{{\"figure\": \"{}\", \"tag\": \"{}\"}}",
                name.name(),
                name.name()
            )
        }
        (None, _) => return Err(config_error("--config", "required for this command".into())),
    };
    let mut config = parse_config_as(&text, Some(command))?;
    if let Sub::Figure { name } = cli.command {
        let name: FigureName = name.into();
        if config.figure.is_some_and(|f| f != name) {
            return Err(config_error(
                "figure",
                "file and command line name different figures".into(),
            ));
        }
        config.figure = Some(name);
    }
    if let Some(out) = &cli.common.out {
        config.output_dir = out.clone();
    }
    if let Some(n) = cli.common.grid_points {
        if n < 3 {
            return Err(config_error(
                "--grid-points",
                format!("must be at least 3, got {n}"),
            ));
        }
        config.grid.n_points = Some(Count(n));
    }
    config.verbosity = config.verbosity.max(cli.common.verbose);
    Ok(config)
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            init_logging(cli.common.verbose);
            return fail(&e);
        }
    };
    init_logging(config.verbosity);

    if let Some(k) = cli.common.threads {
        if k == 0 {
            return fail(&config_error("--threads", "must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: cannot configure the thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    match run(&config) {
        Ok(paths) => {
            for p in &paths {
                info!("wrote {}", p.display());
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
