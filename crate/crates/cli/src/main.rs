use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rrcov_cli::commands::{self, ModelInput, Output};
use rrcov_cli::{CliError, Format, RunOptions, Toggles};

#[derive(Parser)]
#[command(
    name = "rrcov",
    version,
    about = "Covariance asymptotics for renewal-reward processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every asymptotic constant of a model.
    Analyze {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Gaussian approximation of R(t) over a time grid.
    Approx {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        toggles: ToggleArgs,
    },
    /// Monte Carlo estimates of means, covariances and the expected minimum.
    Simulate {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Approximation error of the expected minimum with and without D.
    Compare {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        toggles: ToggleArgs,
    },
    /// Check the model's moment and covariance invariants.
    Validate {
        #[command(flatten)]
        io: IoArgs,
        /// Cycles drawn for the Monte Carlo moment check (0 skips it).
        #[arg(long, default_value_t = 200_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct IoArgs {
    /// Model file (TOML).
    #[arg(long)]
    model: PathBuf,
    /// Write the data stream here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Text,
}

#[derive(Args)]
struct GridArgs {
    /// Comma-separated, strictly increasing times.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    grid: Vec<f64>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replications per seed block [default: ceil(reps / 100)].
    #[arg(long)]
    block_size: Option<u64>,
    #[arg(long, default_value_t = 1_000_000_000)]
    max_cycles: u64,
    /// Worker threads; never changes the output [default: all cores].
    #[arg(long, env = "RRCOV_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct ToggleArgs {
    /// Include the mean correction b (default).
    #[arg(long = "use-b", overrides_with = "no_b")]
    use_b: bool,
    #[arg(long = "no-b")]
    no_b: bool,
    /// Include the covariance correction D (default).
    #[arg(long = "use-D", overrides_with = "no_d")]
    use_d: bool,
    #[arg(long = "no-D")]
    no_d: bool,
}

impl ToggleArgs {
    fn resolve(&self) -> Toggles {
        Toggles {
            use_b: !self.no_b || self.use_b,
            use_d: !self.no_d || self.use_d,
        }
    }
}

fn read_model(io: &IoArgs) -> Result<ModelInput, CliError> {
    let text = fs::read_to_string(&io.model)
        .map_err(|e| CliError::Io(format!("{}: {e}", io.model.display())))?;
    let name = io.model.file_name().map_or_else(
        || io.model.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    Ok(ModelInput { name, text })
}

fn format_of(io: &IoArgs, default: Format) -> Format {
    match io.format {
        None => default,
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Text) => Format::Text,
    }
}

fn options(
    io: &IoArgs,
    grid: &GridArgs,
    sim: Option<&SimArgs>,
    toggles: Option<&ToggleArgs>,
) -> RunOptions {
    let mut o = RunOptions {
        grid: grid.grid.clone(),
        format: format_of(io, Format::Csv),
        ..RunOptions::default()
    };
    if let Some(s) = sim {
        o.replications = s.reps;
        o.seed = s.seed;
        o.block_size = s.block_size;
        o.max_cycles = s.max_cycles;
        o.workers = s
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        eprintln!("workers: {}", o.workers);
    }
    if let Some(t) = toggles {
        o.toggles = t.resolve();
    }
    o
}

fn run(cli: Cli) -> Result<(Output, Option<PathBuf>), CliError> {
    match cli.command {
        Command::Analyze { io } => {
            let m = read_model(&io)?;
            Ok((commands::analyze(&m, format_of(&io, Format::Text))?, io.out))
        }
        Command::Approx { io, grid, toggles } => {
            let m = read_model(&io)?;
            let o = options(&io, &grid, None, Some(&toggles));
            Ok((commands::approx(&m, &o)?, io.out))
        }
        Command::Simulate { io, grid, sim } => {
            let m = read_model(&io)?;
            let o = options(&io, &grid, Some(&sim), None);
            Ok((commands::simulate_cmd(&m, &o)?, io.out))
        }
        Command::Compare {
            io,
            grid,
            sim,
            toggles,
        } => {
            let m = read_model(&io)?;
            let o = options(&io, &grid, Some(&sim), Some(&toggles));
            Ok((commands::compare_cmd(&m, &o)?, io.out))
        }
        Command::Validate { io, reps, seed } => {
            let m = read_model(&io)?;
            let o = RunOptions {
                replications: reps,
                seed,
                format: Format::Text,
                ..RunOptions::default()
            };
            Ok((commands::validate_cmd(&m, &o)?, io.out))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = run(cli).and_then(|(out, path)| {
        for d in &out.diagnostics {
            eprintln!("{d}");
        }
        match path {
            Some(p) => {
                fs::write(&p, &out.body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
            }
            None => std::io::stdout()
                .write_all(out.body.as_bytes())
                .map_err(|e| CliError::Io(e.to_string())),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
