use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use cfota_sim::config::{read_table, resolve};
use cfota_sim::{run_experiment, Experiment};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "sim", about = "Over-the-air fronthaul experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV.
    Run {
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Override any config key, e.g. `--set P_max=1 --set grid=[70,90]`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check a config file against every experiment preset.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the available experiments.
    List,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<18} {}", e.name(), e.description());
            }
        }
        Command::Validate { config } => {
            let file = read_table(&config)?;
            for e in Experiment::ALL {
                resolve(&e.preset(), Some(&file), &[]).with_context(|| format!("with {} preset", e.name()))?;
            }
            println!("{}: ok", config.display());
        }
        Command::Run {
            experiment,
            config,
            seed,
            trials,
            out,
            workers,
            set,
        } => {
            let exp = Experiment::from_name(&experiment)
                .ok_or_else(|| anyhow!("unknown experiment `{experiment}`; see `sim list`"))?;
            let file = config.as_deref().map(read_table).transpose()?;
            let mut overrides = set;
            overrides.extend(seed.map(|s| format!("seed={s}")));
            overrides.extend(trials.map(|t| format!("trials={t}")));
            overrides.extend(workers.map(|w| format!("workers={w}")));
            let cfg = resolve(&exp.preset(), file.as_ref(), &overrides)?;
            let table = run_experiment(exp, &cfg)?;
            match out {
                Some(path) => {
                    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    table.write_csv(BufWriter::new(f))?;
                }
                None => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    table.write_csv(&mut lock)?;
                    lock.flush()?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
