use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use memlang::cli::{
    cmd_check, cmd_denote, cmd_enumerate, cmd_laws, cmd_run, cmd_soundness, cmd_soundness_dir,
    max_undef_from_env, parse_branches, CliError, Law, Outcome, RunOptions, EXIT_OK, EXIT_USAGE,
};

/// Sampler, exact enumerator and denotational evaluator for memlang programs.
#[derive(Parser, Debug)]
#[command(name = "memlang", version)]
struct Cli {
    /// Also write the full report (including timing) as JSON to this file.
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse and typecheck a program.
    Check { file: PathBuf },
    /// Sample one run of the small-step machine.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print every configuration along the run.
        #[arg(long)]
        trace: bool,
        /// Take these branches at successive flips instead of sampling,
        /// e.g. `tf`; later flips take the tails branch.
        #[arg(long, value_name = "BRANCHES")]
        force: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Exact distribution over terminal configurations.
    Enumerate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// Report observations (returned value and the reachable part of the
        /// memo table) instead of raw configurations.
        #[arg(long)]
        observe: bool,
    },
    /// Denotation at the empty world.
    Denote {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compare the denotation with the big-step semantics.
    Soundness {
        #[arg(required_unless_present = "dir", conflicts_with = "dir")]
        file: Option<PathBuf>,
        /// Check every `.mem` file in a directory.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check a law on generated instances.
    Laws(LawArgs),
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(ArgGroup::new("law").required(true).args(["mem", "dataflow", "monad", "naturality"])))]
struct LawArgs {
    #[arg(long)]
    mem: bool,
    #[arg(long)]
    dataflow: bool,
    #[arg(long)]
    monad: bool,
    #[arg(long)]
    naturality: bool,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

impl LawArgs {
    fn law(&self) -> Law {
        if self.mem {
            Law::Mem
        } else if self.dataflow {
            Law::Dataflow
        } else if self.monad {
            Law::Monad
        } else {
            Law::Naturality
        }
    }
}

fn dispatch(cmd: &Cmd) -> Result<(Outcome, bool), CliError> {
    Ok(match cmd {
        Cmd::Check { file } => (cmd_check(file)?, false),
        Cmd::Run {
            file,
            seed,
            trace,
            force,
            json,
        } => {
            let opts = RunOptions {
                seed: *seed,
                trace: *trace,
                force: force.as_deref().map(parse_branches).transpose()?,
            };
            (cmd_run(file, &opts)?, *json)
        }
        Cmd::Enumerate {
            file,
            json,
            observe,
        } => (cmd_enumerate(file, *observe)?, *json),
        Cmd::Denote { file, json } => (cmd_denote(file)?, *json),
        Cmd::Soundness { file, dir, json } => {
            let max_undef = max_undef_from_env()?;
            let o = match (file, dir) {
                (_, Some(d)) => cmd_soundness_dir(d, max_undef)?,
                (Some(f), None) => cmd_soundness(f, max_undef)?,
                (None, None) => return Err(CliError::Usage("expected FILE or --dir".into())),
            };
            (o, *json)
        }
        Cmd::Laws(args) => (cmd_laws(args.law(), args.count, args.seed)?, args.json),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match dispatch(&cli.command) {
        Ok((outcome, json)) => {
            if json {
                println!("{}", outcome.report.results_json());
            } else {
                for line in &outcome.lines {
                    println!("{line}");
                }
            }
            if let Some(path) = &cli.report {
                if let Err(e) = fs::write(path, outcome.report.to_json() + "\n") {
                    eprintln!("{}: {e}", path.display());
                    return ExitCode::from(EXIT_USAGE);
                }
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
