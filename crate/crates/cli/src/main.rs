use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use gat_core::adaptation::{self, ChatClient, McqaSample, NlvScorer, Reformatter, RemoteReformatter, Strategy};
use gat_core::data_io::{self, NlvProvider, PromptCache, ScenarioKind, SyntheticScenario};
use gat_core::harness::{self, ExperimentConfig, FunctionSpec};

#[derive(Parser)]
#[command(name = "gat", version, about = "Active testing: acquire informative test samples and estimate model risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an acquisition × estimator experiment described by a JSON config.
    Run(RunArgs),
    /// Turn a multiple-choice pool into a true/false verification pool.
    Adapt(AdaptArgs),
    /// Write a synthetic pool.
    Synth(SynthArgs),
    /// Check a pool file and report every invalid line.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.csv, report.json, curves/ and traces/.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per (pool, function); overrides the config.
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated acquisition functions; overrides the config.
    #[arg(long, value_delimiter = ',')]
    functions: Option<Vec<String>>,
    /// Report format printed to stdout.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write per-run acquisition traces.
    #[arg(long)]
    emit_traces: bool,
    /// Execute cells in reverse order (outputs are unchanged).
    #[arg(long)]
    reverse_cells: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Mostconf,
    Leastconf,
    Runnerup,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Mostconf => Strategy::MostConf,
            StrategyArg::Leastconf => Strategy::LeastConf,
            StrategyArg::Runnerup => Strategy::RunnerUp,
        }
    }
}

#[derive(clap::Args)]
struct AdaptArgs {
    /// Multiple-choice pool (JSON Lines).
    #[arg(long)]
    pool: PathBuf,
    /// Option probing strategy.
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Serve scores from the cache only; a miss excludes the sample.
    #[arg(long)]
    cache_only: bool,
    /// Response cache directory (default: $GAT_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Model id of the evaluated model.
    #[arg(long, default_value = "main")]
    model: String,
    /// Model id of a surrogate scorer; fills surrogate_probs when given.
    #[arg(long)]
    surrogate_model: Option<String>,
    /// Instruction for remote statement reformatting; the fixed template is
    /// used when absent.
    #[arg(long)]
    reformat_instruction: Option<String>,
    /// Output pool (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Calibrated,
    Overconfident,
    Uniform,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Calibrated => ScenarioKind::Calibrated,
            ScenarioArg::Overconfident => ScenarioKind::MiscalibratedOverconfident,
            ScenarioArg::Uniform => ScenarioKind::UniformNoise,
        }
    }
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Scenario to generate.
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    /// Number of classes.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fraction of samples the model gets wrong.
    #[arg(long, default_value_t = 0.3)]
    error_rate: f64,
    /// Share of errors made with confidence >= 0.9 (overconfident scenario).
    #[arg(long, default_value_t = 0.6)]
    overconfident_fraction: f64,
    /// Output pool (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// Pool file (JSON Lines).
    #[arg(long)]
    pool: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Adapt(a) => adapt(a),
        Command::Synth(a) => synth(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(a: RunArgs) -> anyhow::Result<ExitCode> {
    let mut config = ExperimentConfig::load(&a.config)?;
    if let Some(d) = a.output_dir {
        config.output_dir = Some(d);
    }
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    if let Some(r) = a.runs {
        config.runs = r;
    }
    if let Some(f) = a.functions {
        config.functions = f.into_iter().map(|n| FunctionSpec::Name(n.trim().to_string())).collect();
    }
    if a.jobs.is_some() {
        config.jobs = a.jobs;
    }
    config.emit_traces |= a.emit_traces;
    config.reverse_cell_order |= a.reverse_cells;
    let Some(out_dir) = config.output_dir.clone() else {
        bail!("no output directory: pass --output-dir or set output_dir in the config");
    };

    let report = harness::run_experiment(&config)?;
    harness::write_outputs(&report, &out_dir).with_context(|| format!("writing {}", out_dir.display()))?;
    let text = match a.format {
        Format::Csv => harness::report_csv(&report),
        Format::Json => harness::report_json(&report)?,
    };
    io::stdout().write_all(text.as_bytes())?;
    let failed = report.failed_cells();
    if failed > 0 {
        eprintln!("{failed} cell(s) failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn adapt(a: AdaptArgs) -> anyhow::Result<ExitCode> {
    let records = data_io::load_pool(&a.pool)?;
    let samples = records.iter().map(McqaSample::from_record).collect::<Result<Vec<_>, _>>()?;
    let Some(cache_dir) = a.cache_dir.or_else(NlvProvider::cache_dir_from_env) else {
        bail!("no cache directory: pass --cache-dir or set {}", data_io::ENV_CACHE_DIR);
    };
    let provider = |model: &str| -> anyhow::Result<NlvProvider> {
        let cache = PromptCache::open(&cache_dir)?;
        Ok(if a.cache_only {
            NlvProvider::cache_only(cache, model)
        } else {
            NlvProvider::remote(cache, ChatClient::from_env(model)?)
        })
    };
    let main = provider(&a.model)?;
    let surrogate = a.surrogate_model.as_deref().map(provider).transpose()?;
    let reformatter = match &a.reformat_instruction {
        Some(instr) => Some(RemoteReformatter::new(ChatClient::from_env(&a.model)?, instr.clone())),
        None => None,
    };

    let outcome = adaptation::adapt_pool(
        &samples,
        a.strategy.into(),
        &main,
        surrogate.as_ref().map(|s| s as &dyn NlvScorer),
        reformatter.as_ref().map(|r| r as &dyn Reformatter),
    );
    for ex in &outcome.excluded {
        eprintln!("excluded {}: {}", ex.id, ex.reason);
    }
    eprintln!("adapted {} of {} samples", outcome.records.len(), samples.len());
    match a.out {
        Some(path) => data_io::write_pool(&path, &outcome.records)?,
        None => data_io::write_pool_to(io::stdout().lock(), &outcome.records)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(a: SynthArgs) -> anyhow::Result<ExitCode> {
    let mut scenario = SyntheticScenario::new(a.scenario.into(), a.n, a.k, a.error_rate, a.seed);
    scenario.overconfident_fraction = a.overconfident_fraction;
    let pool = data_io::generate_synthetic(&scenario)?;
    match a.out {
        Some(path) => data_io::write_pool(&path, &pool)?,
        None => data_io::write_pool_to(io::stdout().lock(), &pool)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> anyhow::Result<ExitCode> {
    let (count, errors) = data_io::validate_pool_file(&a.pool)?;
    if errors.is_empty() {
        println!("{}: {count} valid records", a.pool.display());
        return Ok(ExitCode::SUCCESS);
    }
    for e in &errors {
        eprintln!("{}: {e}", a.pool.display());
    }
    eprintln!("{} problem(s), {count} valid records", errors.len());
    Ok(ExitCode::from(1))
}
