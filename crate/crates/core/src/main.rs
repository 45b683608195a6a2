use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use botwatch::corpus::{self, filter_active, parse_timestamp, synthesize, SynthSpec, DEFAULT_MIN_ACTIVITY};
use botwatch::learn::{FeatureMatrix, ModelKind};
use botwatch::pipeline::{
    self, metrics_table, ranking_table, run_eval, run_features, EvalConfig, EvalRun, EvalSuite, FeatureConfig,
    FeaturesRun, Group,
};
use botwatch::{Error, Result};

#[derive(Parser)]
#[command(name = "botwatch", version, about = "Posting-bot detection for blockchain social platforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a raw dump, check it, drop inactive accounts and save the corpus.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// End of the collection window (RFC 3339, or naive ISO 8601 read as UTC).
        #[arg(long)]
        dataset_end: String,
        #[arg(long, default_value_t = DEFAULT_MIN_ACTIVITY)]
        min_activity: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a labeled synthetic corpus.
    Synth {
        #[arg(long)]
        bots: usize,
        #[arg(long)]
        humans: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// JSON file with generator settings; --bots and --humans override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Extract the feature matrix of a corpus.
    Features(FeaturesArgs),
    /// Grid-search one model on a feature matrix and report importances.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "random_forest_gini")]
        model: String,
        #[arg(long, default_value = "all")]
        combo: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        model_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nested cross-validation over feature combinations; writes a JSON
    /// report and per-feature histogram files.
    Evaluate(EvaluateArgs),
    /// Print the Dowdall ranking of one report section.
    Rank {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "all")]
        combo: String,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Print the metric table of a report.
    Report {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of cdfa,santia,chu,chain.
    #[arg(long, value_delimiter = ',')]
    groups: Option<Vec<String>>,
    /// Also emit the text baseline columns.
    #[arg(long)]
    baselines: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_MIN_ACTIVITY)]
    min_activity: usize,
    /// Override the dataset end recorded in the corpus file.
    #[arg(long)]
    dataset_end: Option<String>,
    /// JSON feature configuration; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated column combinations, e.g. cdfa,cdfa+santia+chu,all.
    #[arg(long, value_delimiter = ',')]
    combos: Option<Vec<String>>,
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model_seed: Option<u64>,
    #[arg(long)]
    hist_dir: Option<PathBuf>,
    /// JSON evaluation configuration; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn timestamp(s: &str) -> Result<i64> {
    parse_timestamp(s).map_err(|e| Error::Config(format!("bad timestamp {s:?}: {e}")))
}

fn features(args: FeaturesArgs) -> Result<()> {
    let mut cfg: FeatureConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => FeatureConfig::default(),
    };
    if let Some(groups) = &args.groups {
        cfg.groups = groups.iter().map(|g| Group::parse(g)).collect::<Result<_>>()?;
    }
    if args.baselines && !cfg.groups.contains(&Group::Baselines) {
        cfg.groups.push(Group::Baselines);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let run = FeaturesRun {
        input: args.corpus,
        out: args.out,
        dataset_end: args.dataset_end.as_deref().map(timestamp).transpose()?,
        min_activity: args.min_activity,
        features: cfg,
    };
    let ex = run_features(&run)?;
    eprintln!(
        "wrote {} rows x {} columns to {}",
        ex.matrix.n_rows(),
        ex.matrix.n_features(),
        run.out.display()
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut cfg: EvalConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => EvalConfig::default(),
    };
    if let Some(c) = args.combos {
        cfg.combos = c;
    }
    if let Some(m) = args.models {
        cfg.models = m.iter().map(|m| ModelKind::parse(m)).collect::<Result<_>>()?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.model_seed {
        cfg.model_seed = s;
    }
    let suite = run_eval(&EvalRun {
        features: args.features,
        out: args.out,
        hist_dir: args.hist_dir,
        eval: cfg,
    })?;
    print!("{}", metrics_table(&suite));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            input,
            dataset_end,
            min_activity,
            out,
        } => {
            let end = timestamp(&dataset_end)?;
            let c = filter_active(&corpus::ingest(&input, end)?, min_activity);
            corpus::export(&c, &out)?;
            eprintln!("kept {} accounts", c.accounts.len());
        }
        Command::Synth {
            bots,
            humans,
            seed,
            out,
            config,
        } => {
            let mut spec: SynthSpec = match &config {
                Some(p) => read_json(p)?,
                None => SynthSpec::default(),
            };
            spec.bots = bots;
            spec.humans = humans;
            let c = synthesize(&spec, seed)?;
            corpus::export(&c, &out)?;
            eprintln!("wrote {} accounts to {}", c.accounts.len(), out.display());
        }
        Command::Features(args) => features(args)?,
        Command::Train {
            features,
            model,
            combo,
            seed,
            model_seed,
            out,
        } => {
            let m = FeatureMatrix::load(&features)?;
            let r = pipeline::train(&m, &combo, ModelKind::parse(&model)?, seed, model_seed)?;
            pipeline::save_json(&out, &r)?;
            println!("{} on {}: cv f1 {:.2}, params {:?}", r.model, r.combo, r.cv_f1, r.selected_params);
        }
        Command::Evaluate(args) => evaluate(args)?,
        Command::Rank { report, combo, top } => {
            let suite = EvalSuite::load(&report)?;
            let section = suite
                .section(&combo)
                .ok_or_else(|| Error::Config(format!("report has no section {combo:?}")))?;
            print!("{}", ranking_table(section, top));
        }
        Command::Report { report, out } => {
            let table = metrics_table(&EvalSuite::load(&report)?);
            match out {
                Some(p) => fs::write(&p, table).map_err(|e| Error::Io { path: p, source: e })?,
                None => print!("{table}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("botwatch: {e}");
            ExitCode::FAILURE
        }
    }
}
