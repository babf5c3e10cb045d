use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mipt_core::Execution;
use mipt_sim::{execute, parse_config, presets, RunError};

#[derive(Parser)]
#[command(
    name = "mipt-sim",
    version,
    about = "Monitored hard-core boson chain: entanglement under post-selected measurement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the seed of every run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run a key = value configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one of the figure presets.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(presets::PRESETS))]
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Print the preset's configs instead of running them.
        #[arg(long)]
        dry_run: bool,
    },
}

fn configure_threads(threads: usize) -> Execution {
    if threads == 1 {
        return Execution::Sequential;
    }
    #[cfg(feature = "parallel")]
    if threads > 1 {
        // Only fails if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Execution::Parallel
}

fn main_inner(cli: Cli) -> Result<(), RunError> {
    let exec = configure_threads(cli.threads);
    let mut configs = match &cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)?;
            vec![parse_config(&text)?]
        }
        Command::Preset { name, out, .. } => {
            presets::preset(name, out, cli.seed.unwrap_or(0)).expect("name checked by clap")
        }
    };
    if let Some(seed) = cli.seed {
        for cfg in &mut configs {
            cfg.seed = seed;
        }
    }
    if let Command::Preset { dry_run: true, .. } = cli.command {
        for cfg in &configs {
            println!("# ---\n{}", cfg.to_config_text());
        }
        return Ok(());
    }
    execute(&configs, exec)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mipt-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
