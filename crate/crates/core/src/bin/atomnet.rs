use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use atomnet::run::{self, Command, Figure, Overrides, RunSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "atomnet", version, about = "Atom-array quantum network node simulator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Cavity geometry, linewidths, coupling and cooperativity.
    Cavity(Common),
    /// Four-wave-mixing protocol over the configured timing offsets.
    Fwm(Common),
    /// Closed-form single-link rates over the length × atoms × pairs grid.
    Link(Common),
    /// Monte Carlo repeater-chain rates.
    Network(Common),
    /// Figure data presets.
    Sweep {
        #[arg(long, value_enum)]
        figure: Figure,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Run seed; every Monte Carlo row derives its own stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Link or network length(s), comma-separated.
    #[arg(long, value_delimiter = ',')]
    length_km: Option<Vec<f64>>,
    /// Atoms per node.
    #[arg(long, value_delimiter = ',')]
    atoms: Option<Vec<u32>>,
    /// Repeater nesting level(s).
    #[arg(long, value_delimiter = ',')]
    nesting: Option<Vec<u32>>,
    /// Bell pairs per link.
    #[arg(long, value_delimiter = ',')]
    bell_pairs: Option<Vec<u32>>,
    /// Monte Carlo trials per row.
    #[arg(long)]
    trials: Option<u32>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Cavity(c) => (Command::Cavity, c),
        Sub::Fwm(c) => (Command::Fwm, c),
        Sub::Link(c) => (Command::Link, c),
        Sub::Network(c) => (Command::Network, c),
        Sub::Sweep { figure, common } => (Command::Sweep(figure), common),
    };
    match execute(command, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every row succeeded.
fn execute(command: Command, c: Common) -> Result<bool, Box<dyn std::error::Error>> {
    let text = match &c.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => String::new(),
    };
    let spec = RunSpec {
        command,
        config: run::parse_config(&text)?,
        overrides: Overrides {
            seed: c.seed,
            length_km: c.length_km,
            atoms: c.atoms,
            nesting: c.nesting,
            bell_pairs: c.bell_pairs,
            trials: c.trials,
        },
        jobs: c.jobs,
    };
    let report = run::run(&spec)?;
    let out: Box<dyn Write> = match &c.out {
        Some(p) => Box::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(out);
    match c.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => report.write_json(&mut out)?,
    }
    out.flush()?;
    Ok(!report.has_errors())
}
