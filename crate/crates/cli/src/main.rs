//! `wavecore` command line: runs Monte-Carlo waveform chains from a config
//! file and writes the resulting metrics as CSV.
//!
//! Exit codes: 0 on success, 2 for configuration problems (unreadable or
//! invalid config, bad flag values), 3 for runtime failures inside a chain
//! stage (singular channel, sync failure, I/O on output files).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavecore::metrics::compute_psd;
use wavecore::{run_chain, transmit_stream, Error, PrototypeFilter, Result, RunConfig};

#[derive(Parser)]
#[command(name = "wavecore", version, about = "Multicarrier waveform simulation chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo chain and write mse.csv, summary.csv and
    /// config.echo into the output directory.
    Run {
        /// Path to the chain configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count from the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Synthesize one transmit frame and write its Welch spectrum to
    /// psd.csv in the output directory.
    Psd {
        /// Path to the chain configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Welch segment length (power of two). Defaults to the largest
        /// power of two not exceeding the frame length, capped at 1024.
        #[arg(long)]
        segment: Option<usize>,
    },
    /// Prototype filter utilities.
    Filter {
        #[command(subcommand)]
        command: FilterCommand,
    },
}

#[derive(Subcommand)]
enum FilterCommand {
    /// Print the prototype filter taps as CSV (index,tap) on stdout.
    Dump {
        /// Overlap factor.
        #[arg(long)]
        k: usize,
        /// Total subcarrier count (even).
        #[arg(long)]
        subcarriers: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, seed, trials, out } => cmd_run(&config, seed, trials, &out),
        Command::Psd { config, out, segment } => cmd_psd(&config, &out, segment),
        Command::Filter { command: FilterCommand::Dump { k, subcarriers } } => {
            cmd_filter_dump(k, subcarriers)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

/// Reads and parses a config file, folding unreadable files into the
/// config-error exit path.
fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("cannot read config {}: {e}", path.display()),
    })?;
    RunConfig::parse(&text)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn cmd_run(config: &Path, seed: Option<u64>, trials: Option<usize>, out: &Path) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.params.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let report = run_chain(&cfg, cfg.trials)?;
    let files = report.render();
    write_out(out, "mse.csv", &files.mse_csv)?;
    write_out(out, "summary.csv", &files.summary_csv)?;
    write_out(out, "config.echo", &files.config_echo)?;
    println!(
        "ran {} trial(s); wrote mse.csv, summary.csv, config.echo to {}",
        cfg.trials,
        out.display()
    );
    Ok(())
}

fn cmd_psd(config: &Path, out: &Path, segment: Option<usize>) -> Result<()> {
    let cfg = load_config(config)?;
    let stream = transmit_stream(&cfg, 0)?;
    let seg = match segment {
        Some(s) => s,
        None => {
            let cap = stream.len().min(1024);
            if cap < 2 {
                return Err(Error::Shape {
                    message: format!("frame of {} samples is too short for a spectrum", stream.len()),
                });
            }
            // largest power of two <= cap
            1usize << (usize::BITS - 1 - cap.leading_zeros())
        }
    };
    let (freq, power) = compute_psd(&stream, seg)?;
    let mut text = String::from("freq_hz,power_db\n");
    for (f, p) in freq.iter().zip(&power) {
        text.push_str(&format!("{f},{p}\n"));
    }
    write_out(out, "psd.csv", &text)?;
    write_out(out, "config.echo", &cfg.render())?;
    println!(
        "wrote psd.csv ({} bins, segment {}) and config.echo to {}",
        freq.len(),
        seg,
        out.display()
    );
    Ok(())
}

fn cmd_filter_dump(k: usize, subcarriers: usize) -> Result<()> {
    if subcarriers < 2 || subcarriers % 2 != 0 {
        return Err(Error::Validation {
            key: "subcarriers".into(),
            message: format!("subcarrier count must be even and >= 2, got {subcarriers}"),
        });
    }
    let filter = PrototypeFilter::frequency_sampling(subcarriers, k).map_err(|e| match e {
        // A bad overlap factor on the command line is a config mistake,
        // not a runtime failure.
        Error::UnsupportedOverlap { overlap_factor } => Error::Validation {
            key: "k".into(),
            message: format!("unsupported overlap factor {overlap_factor}"),
        },
        other => other,
    })?;
    let mut text = String::from("index,tap\n");
    for (i, tap) in filter.taps().iter().enumerate() {
        text.push_str(&format!("{i},{tap}\n"));
    }
    print!("{text}");
    Ok(())
}
