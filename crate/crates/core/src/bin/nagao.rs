use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nagao::estimate::EstimateMode;
use nagao::family::{corpus_names, corpus_text};
use nagao::runner::{self, RunConfig, CHECKPOINT_JSON};

#[derive(Parser)]
#[command(name = "nagao", version, about = "Fibral-average rank estimates for families of curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute averages over good primes up to X and estimate the rank.
    Run(RunArgs),
    /// Summarize a checkpoint or per-prime CSV.
    Report { artifact: PathBuf },
    /// Built-in families.
    Corpus {
        #[command(subcommand)]
        action: CorpusCmd,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    List,
    Show { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Family config file, or the name of a built-in family.
    #[arg(long, required_unless_present = "resume")]
    family: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    xmax: u64,
    /// elliptic or combined (default depends on the genus).
    #[arg(long)]
    mode: Option<EstimateMode>,
    #[arg(long, default_value_t = nagao::trace::DEFAULT_B_MAX)]
    bmax: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 500)]
    checkpoint_every: usize,
    #[arg(long, default_value = "nagao-out")]
    out_dir: PathBuf,
    /// Also run the singular-fiber census (genus 1).
    #[arg(long)]
    census: bool,
    /// Largest prime at which the census is checked against a direct count.
    #[arg(long, default_value_t = nagao::census::DEFAULT_CROSSCHECK_CUTOFF)]
    crosscheck_cutoff: u64,
    /// Record per-prime wall times in the CSV.
    #[arg(long)]
    timings: bool,
    /// Continue from a checkpoint; other run options are taken from it.
    #[arg(long, conflicts_with = "family")]
    resume: Option<PathBuf>,
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

fn run(args: RunArgs) -> nagao::Result<()> {
    let outcome = match args.resume {
        Some(path) => runner::resume(&path)?,
        None => {
            let mut cfg = RunConfig::new(args.family.unwrap_or_default(), args.out_dir);
            cfg.x_max = args.xmax;
            cfg.mode = args.mode;
            cfg.b_max = args.bmax;
            if let Some(w) = args.workers {
                cfg.workers = w;
            }
            cfg.checkpoint_every = args.checkpoint_every;
            cfg.census = args.census;
            cfg.crosscheck_cutoff = args.crosscheck_cutoff;
            cfg.record_timings = args.timings;
            cfg.stop_after_checkpoints = args.stop_after;
            runner::run(cfg)?
        }
    };
    let path = outcome.checkpoint.config.out_dir.join(CHECKPOINT_JSON);
    print!("{}", runner::report(&path)?);
    eprintln!(
        "{} primes, {} fibers, {:.0} fibers/s",
        outcome.manifest.primes, outcome.manifest.fibers, outcome.manifest.fibers_per_second
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Report { artifact } => runner::report(&artifact).map(|r| print!("{r}")),
        Command::Corpus { action: CorpusCmd::List } => {
            corpus_names().for_each(|n| println!("{n}"));
            Ok(())
        }
        Command::Corpus {
            action: CorpusCmd::Show { name },
        } => match corpus_text(&name) {
            Some(t) => {
                print!("{t}");
                Ok(())
            }
            None => Err(nagao::Error::MalformedConfig(format!("no built-in family `{name}`"))),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
