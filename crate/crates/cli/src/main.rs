//! quadmap: classify quadratic homogeneous maps, factor rank-≤3 Keller maps
//! into elementary automorphisms, verify certificates, and fuzz the pipeline.
//!
//! JSON reports go to --output (or stdout); human-readable status lines go to
//! stderr so reports stay pipeable.  Exit codes: 0 ok, 1 verification
//! failure, 2 parse error, 3 internal contract violation, 4 other errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use quadmap_cli::{exit_code_for, run, Command, JobSpec, MapSource, ModeChoice};

#[derive(Parser)]
#[command(name = "quadmap", version, about = "Exact classification and tame decomposition of quadratic homogeneous polynomial maps")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Require exact equality of the composition
    Exact,
    /// Allow a split-off square part (characteristic 2)
    SquareFree,
}

#[derive(Args)]
struct IoArgs {
    /// Coefficient field (Q, GF(p), GF(p,k)); must agree with the input header
    #[arg(long)]
    field: Option<String>,

    /// Read the input from this file
    #[arg(long, conflicts_with = "inline")]
    input: Option<PathBuf>,

    /// Take the input directly from the command line
    #[arg(long)]
    inline: Option<String>,

    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Classify a quadratic homogeneous map H by Jacobian rank
    Classify {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Factor a Keller map x + H (rank ≤ 3) into elementary and affine automorphisms
    Decompose {
        #[command(flatten)]
        io: IoArgs,
        /// Verification mode for the emitted certificate
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Re-check a decompose report (map + certificate) by exact composition
    Verify {
        #[command(flatten)]
        io: IoArgs,
        /// Verification mode
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run random inputs through the whole classify/decompose/verify pipeline
    Fuzz {
        #[command(flatten)]
        io: IoArgs,
        /// Base seed; the same seed reproduces the same report byte for byte
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random inputs
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Maximum number of variables per input
        #[arg(long, default_value_t = 6)]
        nvars: usize,
        /// Maximum number of components per input
        #[arg(long, default_value_t = 6)]
        ncomps: usize,
    },
    /// Render a JSON report as text, re-verifying any embedded certificate
    Report {
        #[command(flatten)]
        io: IoArgs,
        /// Verification mode for the re-check
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

fn to_source(io: &IoArgs) -> Option<MapSource> {
    match (&io.input, &io.inline) {
        (Some(p), _) => Some(MapSource::Path(p.clone())),
        (None, Some(s)) => Some(MapSource::Inline(s.clone())),
        (None, None) => None,
    }
}

fn to_mode(mode: Option<ModeArg>) -> Option<ModeChoice> {
    mode.map(|m| match m {
        ModeArg::Exact => ModeChoice::Exact,
        ModeArg::SquareFree => ModeChoice::SquareFree,
    })
}

fn to_job(cmd: CliCommand) -> JobSpec {
    match cmd {
        CliCommand::Classify { io } => {
            let mut job = JobSpec::new(Command::Classify);
            job.field = io.field.clone();
            job.input = to_source(&io);
            job.output = io.output;
            job
        }
        CliCommand::Decompose { io, mode } => {
            let mut job = JobSpec::new(Command::Decompose);
            job.field = io.field.clone();
            job.input = to_source(&io);
            job.output = io.output;
            job.mode = to_mode(mode);
            job
        }
        CliCommand::Verify { io, mode } => {
            let mut job = JobSpec::new(Command::Verify);
            job.field = io.field.clone();
            job.input = to_source(&io);
            job.output = io.output;
            job.mode = to_mode(mode);
            job
        }
        CliCommand::Fuzz {
            io,
            seed,
            count,
            nvars,
            ncomps,
        } => {
            let mut job = JobSpec::new(Command::Fuzz);
            job.field = io.field.clone();
            job.input = to_source(&io);
            job.output = io.output;
            job.seed = seed;
            job.count = count;
            job.nvars = nvars;
            job.ncomps = ncomps;
            job
        }
        CliCommand::Report { io, mode } => {
            let mut job = JobSpec::new(Command::Report);
            job.field = io.field.clone();
            job.input = to_source(&io);
            job.output = io.output;
            job.mode = to_mode(mode);
            job
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let job = to_job(cli.command);
    match run(&job) {
        Ok(out) => {
            if let Some(report) = &out.report {
                let body = serde_json::to_string_pretty(report).expect("report serializes");
                match &job.output {
                    Some(path) => {
                        if let Err(e) = std::fs::write(path, body + "\n") {
                            eprintln!("error: writing {}: {}", path.display(), e);
                            std::process::exit(4);
                        }
                    }
                    None => println!("{body}"),
                }
            }
            if let Some(text) = &out.text {
                if out.report.is_some() {
                    eprintln!("{text}");
                } else {
                    match &job.output {
                        Some(path) => {
                            if let Err(e) = std::fs::write(path, text.clone() + "\n") {
                                eprintln!("error: writing {}: {}", path.display(), e);
                                std::process::exit(4);
                            }
                        }
                        None => println!("{text}"),
                    }
                }
            }
            std::process::exit(out.code);
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(exit_code_for(&e));
        }
    }
}
