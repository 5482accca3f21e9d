use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cdma::app::{self, BandPowerRecord, LogitTable};
use cdma::config::RunConfig;
use cdma::eeg::CorrelationScope;
use cdma::eval::{compute_metrics, Stream};
use cdma::{Error, Result};

/// Speech-based depression detection and EEG band-power validation.
#[derive(Debug, Parser)]
#[command(name = "cdma", version)]
struct Cli {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Overrides the data root.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Overrides the output root.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Acoustic feature extraction or import.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Print per-speaker segment counts.
    Segment(InputArg),
    /// Train one model per emotional condition on all speakers.
    Train(InputArg),
    /// Repeated person-independent cross-validation.
    Crossval(CrossvalArgs),
    /// Apply trained models to a feature corpus.
    Evaluate(EvaluateArgs),
    /// EEG conditioning, ERSP and group statistics.
    #[command(subcommand)]
    Eeg(EegCmd),
    /// Spearman correlations between band power and speech-model logits.
    Correlate(CorrelateArgs),
    /// Synthetic data generation.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Summarize persisted results into CSV tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct InputArg {
    /// Feature directory; defaults to the data root.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InOut {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum FeaturesCmd {
    /// WAV + manifest pairs to feature CSVs.
    Extract(InOut),
    /// Validate and normalize existing feature CSVs.
    Import(InOut),
}

#[derive(Debug, Args)]
struct CrossvalArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Overrides the configured iteration count.
    #[arg(long)]
    iterations: Option<usize>,
    /// Fault injection: place a test speaker in the training set.
    #[arg(long, hide = true)]
    inject_leak: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory holding `<condition>.json` checkpoints.
    #[arg(long)]
    models: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum EegCmd {
    /// Re-reference, filter, resample and reject epochs.
    Condition(InOut),
    /// ERSP matrices and ROI band power.
    Ersp(InOut),
    /// Group comparisons (and correlations when logits are given).
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    powers: Option<PathBuf>,
    #[arg(long)]
    logits: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    Mdd,
    Hc,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    #[arg(long)]
    powers: Option<PathBuf>,
    #[arg(long)]
    logits: Option<PathBuf>,
    /// Restrict to one participant scope; all scopes when omitted.
    #[arg(long, value_enum)]
    scope: Option<ScopeArg>,
}

#[derive(Debug, Subcommand)]
enum SynthCmd {
    /// Feature CSVs with manifests for a two-class speaker corpus
    Speech(OutputArg),
    /// Participant epoch directories plus a matching logits.json
    Eeg(OutputArg),
}

#[derive(Debug, Args)]
struct OutputArg {
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Results directory; defaults to `<out>/results`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

struct Ctx {
    cfg: RunConfig,
    jobs: usize,
}

impl Ctx {
    fn out(&self, rel: &str) -> PathBuf {
        self.cfg.paths.output_root.join(rel)
    }

    fn data(&self, explicit: Option<PathBuf>) -> Result<PathBuf> {
        explicit
            .or_else(|| self.cfg.data_root())
            .ok_or_else(|| Error::Config(format!("no input given and no data root configured (set --data or ${})", cdma::config::DATA_ROOT_ENV)))
    }
}

fn build_ctx(cli: &Cli) -> Result<Ctx> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.synth.speech.seed = s;
        cfg.synth.eeg.seed = s;
    }
    if let Some(d) = &cli.data {
        cfg.paths.data_root = Some(d.clone());
    }
    if let Some(o) = &cli.out {
        cfg.paths.output_root = o.clone();
    }
    cfg.validate()?;
    Ok(Ctx { cfg, jobs: cli.jobs.max(1) })
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::json("<stdout>", e))?;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut ctx = build_ctx(&cli)?;
    match cli.command {
        Command::Features(FeaturesCmd::Extract(a)) => {
            let out = a.output.unwrap_or_else(|| ctx.out("features"));
            let n = app::extract_dir(&ctx.data(a.input)?, &out)?;
            log::info!("extracted {n} recordings into {}", out.display());
        }
        Command::Features(FeaturesCmd::Import(a)) => {
            let out = a.output.unwrap_or_else(|| ctx.out("features"));
            let n = app::import_dir(&ctx.data(a.input)?, &out)?;
            log::info!("imported {n} recordings into {}", out.display());
        }
        Command::Segment(a) => {
            let data = app::load_segments(&ctx.cfg, &ctx.data(a.input)?)?;
            let counts = app::segment_counts(&data);
            app::write_json(&ctx.out("segments.json"), &counts)?;
            print_json(&counts)?;
        }
        Command::Train(a) => {
            let data = app::load_segments(&ctx.cfg, &ctx.data(a.input)?)?;
            let dir = ctx.out("models");
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (c, ckpt) in cdma::corpus::Condition::EMOTIONAL.iter().zip(app::train_models(&ctx.cfg, &data, ctx.jobs)?) {
                ckpt.save(&app::model_path(&dir, *c))?;
            }
            log::info!("saved models to {}", dir.display());
        }
        Command::Crossval(a) => {
            if let Some(n) = a.iterations {
                ctx.cfg.iterations = n;
            }
            ctx.cfg.cv.inject_leak |= a.inject_leak;
            ctx.cfg.validate()?;
            let corpus = cdma::corpus::Corpus::load_dir(&ctx.data(a.input)?)?;
            let out = ctx.out("results");
            let report = app::crossval(&ctx.cfg, &corpus, &out, ctx.jobs)?;
            let summary: Vec<_> = Stream::ALL
                .iter()
                .map(|s| report.summary(*s).map(|m| (s.to_string(), m)))
                .collect::<Result<_>>()?;
            print_json(&summary)?;
        }
        Command::Evaluate(a) => {
            let data = app::load_segments(&ctx.cfg, &ctx.data(a.input)?)?;
            let models = a.models.unwrap_or_else(|| ctx.out("models"));
            let streams = app::evaluate_models(&models, &data)?;
            let dir = ctx.out("evaluation");
            let preds: Vec<_> = streams.values().flatten().cloned().collect();
            app::write_json(&dir.join("predictions.json"), &preds)?;
            let mut metrics = Vec::new();
            for (s, p) in &streams {
                let (pl, tl): (Vec<_>, Vec<_>) = p.iter().map(|p| (p.label, p.truth)).unzip();
                metrics.push((s.to_string(), compute_metrics(&pl, &tl)?));
            }
            app::write_json(&dir.join("metrics.json"), &metrics)?;
            print_json(&metrics)?;
        }
        Command::Eeg(EegCmd::Condition(a)) => {
            let out = a.output.unwrap_or_else(|| ctx.out("eeg/conditioned"));
            let summary = app::eeg_condition_dir(&ctx.cfg, &ctx.data(a.input)?, &out, ctx.jobs)?;
            app::write_json(&out.join("conditioning.json"), &summary)?;
            print_json(&summary)?;
        }
        Command::Eeg(EegCmd::Ersp(a)) => {
            let input = a.input.unwrap_or_else(|| ctx.out("eeg/conditioned"));
            let out = a.output.unwrap_or_else(|| ctx.out("eeg/ersp"));
            let powers = app::eeg_ersp_dir(&ctx.cfg, &input, &out, ctx.jobs)?;
            app::write_json(&ctx.out("eeg/band_powers.json"), &powers)?;
            log::info!("{} band-power records", powers.len());
        }
        Command::Eeg(EegCmd::Stats(a)) => {
            let powers: Vec<BandPowerRecord> = app::read_json(&a.powers.unwrap_or_else(|| ctx.out("eeg/band_powers.json")))?;
            let logits: Option<LogitTable> = a.logits.as_deref().map(app::read_json).transpose()?;
            let stats = app::eeg_stats(&ctx.cfg, &powers, logits.as_ref())?;
            app::write_json(&ctx.out("eeg/stats.json"), &stats)?;
            print_json(&stats)?;
        }
        Command::Correlate(a) => {
            let powers: Vec<BandPowerRecord> = app::read_json(&a.powers.unwrap_or_else(|| ctx.out("eeg/band_powers.json")))?;
            let logits: LogitTable = app::read_json(&a.logits.unwrap_or_else(|| ctx.out("results/logits.json")))?;
            let scope = a.scope.map(|s| match s {
                ScopeArg::All => CorrelationScope::All,
                ScopeArg::Mdd => CorrelationScope::Mdd,
                ScopeArg::Hc => CorrelationScope::Hc,
            });
            let rows = app::correlate(&powers, &logits, scope)?;
            app::write_json(&ctx.out("results/correlations.json"), &rows)?;
            print_json(&rows)?;
        }
        Command::Synth(SynthCmd::Speech(a)) => {
            let out = a.output.unwrap_or_else(|| ctx.out("synth/speech"));
            let n = app::synth_speech(&ctx.cfg, &out)?;
            log::info!("wrote {n} recordings to {}", out.display());
        }
        Command::Synth(SynthCmd::Eeg(a)) => {
            let out = a.output.unwrap_or_else(|| ctx.out("synth/eeg"));
            let n = app::synth_eeg(&ctx.cfg, &out)?;
            log::info!("wrote {n} epoch sets to {}", out.display());
        }
        Command::Report(a) => {
            let input = a.input.unwrap_or_else(|| ctx.out("results"));
            let out = a.output.unwrap_or_else(|| ctx.out("report"));
            app::report(&input, &out)?;
            log::info!("wrote report tables to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
