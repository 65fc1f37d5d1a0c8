//! `lawgen`: weigh traffic laws, build a seed corpus, train the scenario
//! generator, sample from it, test the samples in the simulator and analyze
//! their diversity.

mod artifacts;
mod config;
mod error;
mod plots;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lawgen_core::road::RoadTag;
use lawgen_sim::Mode;

use config::{RunConfig, ScorerKind};
use error::CliError;
use stages::Context;

#[derive(Parser)]
#[command(name = "lawgen", version, about = "Law-violation scenario generation pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Run configuration (TOML). Defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the road structure (S1..S4).
    #[arg(long, global = true)]
    road: Option<RoadTag>,
    /// Overrides the worker thread count (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the law corpus file.
    #[arg(long, global = true)]
    laws: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Score every law for severity and occurrence and write the weights.
    Weigh {
        #[arg(long, value_enum)]
        scorer: Option<ScorerKind>,
        /// Rule table for the `table` scorer.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Expert overrides (TOML).
        #[arg(long)]
        overrides: Option<PathBuf>,
        #[arg(long, default_value = "weights.json")]
        out: PathBuf,
    },
    /// Encode scenario files as action sequences and token ids.
    Encode {
        /// Scenario file, directory of scenario files, dataset or sample set.
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value = "encoded.json")]
        out: PathBuf,
    },
    /// Sample and simulate a seed corpus of scored scenarios.
    SeedData {
        /// Scorer report; uniform weights when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value = "seeds.json")]
        out: PathBuf,
    },
    /// Train the reward proxy and the generator on a seed corpus.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Checkpoint path; the training manifest is written beside it.
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Sample scenarios from a trained checkpoint.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        temperature: Option<f64>,
        /// Oversampling factor for proxy reranking (1 = off).
        #[arg(long)]
        rerank: Option<usize>,
        #[arg(long, default_value = "samples.json")]
        out: PathBuf,
    },
    /// Simulate scenarios and report law violations.
    Test {
        /// Scenario file, directory of scenario files, dataset or sample set.
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Scorer report; uniform weights when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value = "violations.json")]
        out: PathBuf,
    },
    /// Diversity, validity and trajectory metrics of a sample set.
    Analyze {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value = "metrics.json")]
        out: PathBuf,
    },
    /// Run every stage in sequence into the configured output directory.
    Pipeline {
        /// Overrides `out_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Coverage,
    Counting,
}

fn configure(common: &Common, edit: impl FnOnce(&mut RunConfig)) -> Result<Context, CliError> {
    let mut cfg = RunConfig::load_or_default(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.road {
        cfg.road = r;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(l) = &common.laws {
        cfg.laws = Some(l.clone());
    }
    edit(&mut cfg);
    let cfg = cfg.resolve()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(Context { cfg, config_path: common.config.clone() })
}

fn run(command: Command, common: &Common) -> Result<(), CliError> {
    match command {
        Command::Weigh { scorer, table, overrides, out } => {
            let ctx = configure(common, |c| {
                if let Some(s) = scorer {
                    c.weigh.scorer = s;
                }
                if table.is_some() {
                    c.weigh.table = table;
                }
                if overrides.is_some() {
                    c.weigh.overrides = overrides;
                }
            })?;
            stages::weigh(&ctx, &out)
        }
        Command::Encode { scenarios, out } => stages::encode_scenarios(&configure(common, |_| {})?, &scenarios, &out),
        Command::SeedData { weights, count, out } => {
            let ctx = configure(common, |c| {
                if let Some(n) = count {
                    c.seed_data.count = n;
                }
            })?;
            stages::seed_data(&ctx, weights.as_deref(), &out)
        }
        Command::Train { dataset, out } => stages::train(&configure(common, |_| {})?, &dataset, &out),
        Command::Generate { checkpoint, count, temperature, rerank, out } => {
            let ctx = configure(common, |c| {
                if let Some(n) = count {
                    c.generate.count = n;
                }
                if let Some(t) = temperature {
                    c.generate.temperature = t;
                }
                if let Some(r) = rerank {
                    c.generate.rerank = r;
                }
            })?;
            stages::generate(&ctx, &checkpoint, &out)
        }
        Command::Test { scenarios, mode, weights, out } => {
            let ctx = configure(common, |c| match mode {
                Some(ModeArg::Coverage) => c.test.mode = Mode::Coverage,
                Some(ModeArg::Counting) => c.test.mode = Mode::Counting,
                None => {}
            })?;
            stages::test(&ctx, &scenarios, weights.as_deref(), &out)
        }
        Command::Analyze { samples, out } => stages::analyze(&configure(common, |_| {})?, &samples, &out),
        Command::Pipeline { out_dir } => {
            if common.config.is_none() {
                return Err(CliError::Config("pipeline needs --config".into()));
            }
            let ctx = configure(common, |c| {
                if let Some(d) = out_dir {
                    c.out_dir = d;
                }
            })?;
            stages::pipeline(&ctx)
        }
    }
}

fn main() -> ExitCode {
    let Cli { common, command } = Cli::parse();
    match run(command, &common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lawgen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
