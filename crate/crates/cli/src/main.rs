use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sortnet_core::driver::{self, DEFAULT_ENUMERATION_BUDGET};
use sortnet_core::{Answer, LogWriter, OracleReader, RunOptions, RunOutcome};

/// Prover and checker for size-optimal sorting networks.
#[derive(Debug, Parser)]
#[command(name = "sortnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run generate-and-prune with subsumption search.
    Prove(RunArgs),
    /// Replay a witness log without searching.
    Check(RunArgs),
    /// Exhaustively enumerate all networks up to --max-size.
    Bruteforce(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    /// `ITER`/`RESULT` rows only.
    Rows,
    /// Rows plus per-phase timings.
    Text,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Number of channels.
    #[arg(short = 'n')]
    channels: usize,

    /// Iteration budget; defaults to the best known upper bound plus one.
    #[arg(long)]
    max_size: Option<usize>,

    /// Witness log to replay (check only).
    #[arg(long)]
    oracle: Option<PathBuf>,

    /// Write the witness log here (prove only).
    #[arg(long)]
    emit: Option<PathBuf>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, value_enum, default_value = "rows")]
    report: ReportFormat,

    /// On a `no` answer, print the surviving networks.
    #[arg(long)]
    dump_survivors: bool,
}

const EXIT_USAGE: u8 = 1;
const EXIT_MAYBE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Prove(args) => {
            if args.oracle.is_some() {
                return Err("prove does not take --oracle".into());
            }
            let max = max_size(&args)?;
            let outcome = match &args.emit {
                Some(path) => {
                    let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
                    let mut writer = LogWriter::new(BufWriter::new(file), args.channels).map_err(|e| e.to_string())?;
                    let outcome = driver::prove(args.channels, max, &options(&args), Some(&mut writer))
                        .map_err(|e| e.to_string())?;
                    writer.finish().map_err(|e| e.to_string())?;
                    outcome
                }
                None => {
                    driver::prove::<io::Sink>(args.channels, max, &options(&args), None).map_err(|e| e.to_string())?
                }
            };
            emit_outcome(&args, &outcome)
        }
        Command::Check(args) => {
            if args.emit.is_some() {
                return Err("check does not take --emit".into());
            }
            let path = args.oracle.as_ref().ok_or("check requires --oracle")?;
            let max = max_size(&args)?;
            let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut oracle = OracleReader::new(BufReader::new(file), args.channels).map_err(|e| e.to_string())?;
            let outcome = driver::check(args.channels, max, &options(&args), &mut oracle).map_err(|e| e.to_string())?;
            emit_outcome(&args, &outcome)
        }
        Command::Bruteforce(args) => {
            if args.oracle.is_some() || args.emit.is_some() {
                return Err("bruteforce takes neither --oracle nor --emit".into());
            }
            let max = max_size(&args)?;
            let found =
                driver::brute_force_min(args.channels, max, DEFAULT_ENUMERATION_BUDGET).map_err(|e| e.to_string())?;
            match found {
                Some(k) => println!("RESULT yes n={} k={k}", args.channels),
                None => println!("RESULT no n={} k={max}", args.channels),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn max_size(args: &RunArgs) -> Result<usize, String> {
    if args.channels > sortnet_core::MAX_CHANNELS {
        return Err(format!(
            "-n {} exceeds the supported maximum of {}",
            args.channels,
            sortnet_core::MAX_CHANNELS
        ));
    }
    Ok(args.max_size.unwrap_or_else(|| driver::default_max_size(args.channels)))
}

fn options(args: &RunArgs) -> RunOptions {
    RunOptions {
        threads: args.threads,
        candidate_limit: None,
    }
}

fn emit_outcome(args: &RunArgs, outcome: &RunOutcome) -> Result<ExitCode, String> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let io_err = |e: io::Error| e.to_string();
    for row in &outcome.report.iterations {
        writeln!(out, "{row}").map_err(io_err)?;
        if args.report == ReportFormat::Text {
            writeln!(
                out,
                "  generate {:.3}s, prune {:.3}s",
                row.generate_time.as_secs_f64(),
                row.prune_time.as_secs_f64()
            )
            .map_err(io_err)?;
        }
    }
    writeln!(out, "{}", outcome.answer).map_err(io_err)?;
    match &outcome.answer {
        Answer::Yes { network, .. } => {
            if args.report == ReportFormat::Text {
                writeln!(out, "network {network}").map_err(io_err)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Answer::No { survivors, .. } => {
            if args.dump_survivors {
                for network in survivors.networks() {
                    writeln!(out, "SURVIVOR {network}").map_err(io_err)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Answer::Maybe(reason) => {
            if args.report == ReportFormat::Text {
                writeln!(out, "reason {reason:?}").map_err(io_err)?;
            }
            Ok(ExitCode::from(EXIT_MAYBE))
        }
    }
}
