use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use critsense::experiment::{load_config, run, write_outputs, RunError, Scenario};

/// Run one sensing scenario and write its CSV, plot table and gnuplot script.
#[derive(Parser, Debug)]
#[command(name = "critsense", version)]
struct Cli {
    scenario: Scenario,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; CRITSENSE_THREADS takes precedence.
    #[arg(long)]
    threads: Option<usize>,
}

fn threads(cli: Option<usize>) -> Result<Option<usize>, String> {
    match std::env::var("CRITSENSE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| format!("CRITSENSE_THREADS must be a positive integer, got `{v}`")),
        Err(_) => match cli {
            Some(0) => Err("--threads must be positive".into()),
            t => Ok(t),
        },
    }
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let config_err = |f: &str, m: String| RunError::Config(critsense::experiment::ConfigError::field(f, m));
    if let Some(n) = threads(cli.threads).map_err(|m| config_err("threads", m))? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_err("threads", e.to_string()))?;
    }
    let config = load_config(&cli.config)?;
    let resolved = config.resolve(Some(cli.scenario), cli.seed)?;
    let out = cli
        .out
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .ok_or_else(|| config_err("out", "no output directory given".into()))?;
    let records = run(&resolved)?;
    let files = write_outputs(&records, resolved.scenario, &out)?;
    println!("{} rows -> {}", records.len(), files.csv.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("critsense: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
