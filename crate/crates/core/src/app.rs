//! File-level pipeline stages driven by the command-line front end. Each
//! stage reads its inputs from disk and writes deterministic outputs, so
//! identical inputs and configuration give byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{Condition, Corpus, Label, RecordingManifest};
use crate::eeg::{
    band_power, compute_ersp, condition_epochs, correlate_power_logits, delta_logits, group_compare, load_epoch_dir,
    write_epoch_dir, write_ersp_csv, BandWindow, CorrelationScope, EpochSet, ErspMatrix, Group, ParticipantValue,
    StimulusCondition,
};
use crate::error::{Error, Result};
use crate::eval::{
    run_repetitions, segment_corpus, RepetitionReport, ResultsFile, SpeakerPrediction, SpeakerSegments, Stream,
};
use crate::features::{extract_features, read_wav, write_feature_csv};
use crate::model::{aggregate, majority_vote, train, CdmaModel, FeatureScaler, PreparedSpeaker, TrainHistory};
use crate::nn::Checkpoint;
use crate::pool::{mix_seed, parallel_map};
use crate::synth::{gen_eeg_epochs, gen_speech_corpus, write_corpus};

/// Per-participant depression probability for each speech condition.
pub type LogitTable = BTreeMap<String, BTreeMap<Condition, f64>>;

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}

fn manifests_in(dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(sorted_entries(dir)?.into_iter().filter(|p| p.extension().is_some_and(|e| e == "json")).collect())
}

fn write_manifest(dir: &Path, m: &RecordingManifest) -> Result<()> {
    write_json(&dir.join(format!("{}.json", m.recording_id)), m)
}

/// Extracts features from every `<id>.wav` that has an `<id>.json` manifest.
pub fn extract_dir(input: &Path, output: &Path) -> Result<usize> {
    crate::corpus::require_manifests(input, "wav")?;
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let mut count = 0;
    for path in manifests_in(input)? {
        let manifest = RecordingManifest::load(&path)?;
        let wav = path.with_extension("wav");
        if !wav.exists() {
            return Err(Error::format(&wav, "manifest has no matching WAV file"));
        }
        let buf = read_wav(&wav)?;
        if let Some(sr) = manifest.sample_rate {
            if sr != buf.sample_rate() {
                return Err(Error::format(&wav, format!("sample rate {} Hz, manifest says {sr} Hz", buf.sample_rate())));
            }
        }
        let seq = extract_features(&buf, &manifest)?;
        write_feature_csv(&output.join(format!("{}.csv", manifest.recording_id)), &seq)?;
        write_manifest(output, &manifest)?;
        count += 1;
    }
    Ok(count)
}

/// Validates externally produced feature CSVs and rewrites them in canonical form.
pub fn import_dir(input: &Path, output: &Path) -> Result<usize> {
    let corpus = Corpus::load_dir(input)?;
    let seqs: Vec<_> = corpus
        .speakers
        .into_iter()
        .flat_map(|s| s.read.into_iter().chain(s.responses.into_values().flatten()))
        .collect();
    write_corpus(output, &seqs)?;
    Ok(seqs.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentCount {
    pub speaker_id: String,
    pub label: Label,
    pub read: usize,
    pub positive: usize,
    pub neutral: usize,
    pub negative: usize,
}

pub fn segment_counts(data: &[SpeakerSegments]) -> Vec<SegmentCount> {
    let n = |s: &SpeakerSegments, c| s.responses.get(&c).map_or(0, Vec::len);
    data.iter()
        .map(|s| SegmentCount {
            speaker_id: s.speaker_id.clone(),
            label: s.label,
            read: s.read.len(),
            positive: n(s, Condition::Positive),
            neutral: n(s, Condition::Neutral),
            negative: n(s, Condition::Negative),
        })
        .collect()
}

/// Everything needed to run a trained condition model on new speakers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub condition: Condition,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub scaler: Option<FeatureScaler>,
    pub config_hash: String,
    pub history: TrainHistory,
}

fn prepared(sp: &SpeakerSegments, c: Condition, scaler: Option<&FeatureScaler>) -> Result<PreparedSpeaker> {
    let scale = |segs: &[ndarray::Array2<f64>]| -> Vec<ndarray::Array2<f64>> {
        segs.iter().map(|m| scaler.map_or_else(|| m.clone(), |s| s.apply(m))).collect()
    };
    let spont = sp
        .responses
        .get(&c)
        .ok_or_else(|| Error::Data(format!("speaker `{}` has no {c} responses", sp.speaker_id)))?;
    PreparedSpeaker::new(sp.speaker_id.clone(), sp.label, &scale(&sp.read), &scale(spont))
}

/// Trains one model per emotional condition on all speakers.
pub fn train_models(cfg: &RunConfig, data: &[SpeakerSegments], jobs: usize) -> Result<Vec<Checkpoint>> {
    let hash = cfg.hash();
    let results = parallel_map(3, jobs, |ci| {
        let c = Condition::EMOTIONAL[ci];
        let scaler = if cfg.cv.standardize {
            FeatureScaler::fit(data.iter().flat_map(|s| s.read.iter().chain(s.responses.get(&c).into_iter().flatten())))
        } else {
            None
        };
        let set = data.iter().map(|s| prepared(s, c, scaler.as_ref())).collect::<Result<Vec<_>>>()?;
        let (model, history) = train(&set, &cfg.cv.train, mix_seed(cfg.seed, ci as u64))?;
        let meta = ModelMetadata {
            condition: c,
            input_dim: model.input_dim(),
            hidden_dim: model.hidden_dim(),
            scaler,
            config_hash: hash.clone(),
            history,
        };
        let mut ckpt = Checkpoint::capture(&model);
        ckpt.metadata = match serde_json::to_value(&meta).expect("metadata serializes") {
            serde_json::Value::Object(m) => m,
            _ => unreachable!("struct serializes to an object"),
        };
        Ok(ckpt)
    });
    results.into_iter().collect()
}

pub fn model_path(dir: &Path, c: Condition) -> PathBuf {
    dir.join(format!("{c}.json"))
}

fn load_model(dir: &Path, c: Condition) -> Result<(CdmaModel, ModelMetadata)> {
    let path = model_path(dir, c);
    let ckpt = Checkpoint::load(&path)?;
    let meta: ModelMetadata = serde_json::from_value(serde_json::Value::Object(ckpt.metadata.clone()))
        .map_err(|e| Error::json(&path, e))?;
    let mut model = CdmaModel::zeros(meta.input_dim, meta.hidden_dim);
    ckpt.restore(&mut model)?;
    Ok((model, meta))
}

/// Applies saved condition models to every speaker, plus the majority vote.
pub fn evaluate_models(models_dir: &Path, data: &[SpeakerSegments]) -> Result<BTreeMap<Stream, Vec<SpeakerPrediction>>> {
    let mut streams = BTreeMap::new();
    for stream in &Stream::ALL[..3] {
        let c = stream.condition().expect("condition stream");
        let (model, meta) = load_model(models_dir, c)?;
        let preds = data
            .iter()
            .map(|s| {
                let ps = model.predict(&prepared(s, c, meta.scaler.as_ref())?)?;
                let (p_hat, label) = aggregate(&ps);
                Ok(SpeakerPrediction {
                    speaker_id: s.speaker_id.clone(),
                    condition: *stream,
                    probs: Some(ps),
                    p_hat,
                    label,
                    logit: p_hat,
                    truth: s.label,
                    fold: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        streams.insert(*stream, preds);
    }
    let combination = (0..data.len())
        .map(|k| {
            let votes: Vec<&SpeakerPrediction> = Stream::ALL[..3].iter().map(|s| &streams[s][k]).collect();
            let p_hat = votes.iter().map(|p| p.p_hat).sum::<f64>() / 3.0;
            Ok(SpeakerPrediction {
                speaker_id: votes[0].speaker_id.clone(),
                condition: Stream::Combination,
                probs: None,
                p_hat,
                label: majority_vote(&votes.iter().map(|p| p.label).collect::<Vec<_>>())?,
                logit: p_hat,
                truth: votes[0].truth,
                fold: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    streams.insert(Stream::Combination, combination);
    Ok(streams)
}

/// Mean `p_hat` per speaker and condition across iterations.
pub fn mean_logits(report: &RepetitionReport) -> LogitTable {
    let mut sums: BTreeMap<String, BTreeMap<Condition, (f64, usize)>> = BTreeMap::new();
    for it in &report.iterations {
        for stream in &Stream::ALL[..3] {
            let c = stream.condition().expect("condition stream");
            for p in it.predictions.get(stream).into_iter().flatten() {
                let e = sums.entry(p.speaker_id.clone()).or_default().entry(c).or_insert((0.0, 0));
                e.0 += p.logit;
                e.1 += 1;
            }
        }
    }
    sums.into_iter().map(|(id, m)| (id, m.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationPredictions {
    pub seed: u64,
    pub predictions: Vec<SpeakerPrediction>,
}

/// Runs the repetition harness and writes `results_<stream>.json`,
/// `f1_<stream>.csv`, `predictions.json` and `logits.json` into `out`.
pub fn crossval(cfg: &RunConfig, corpus: &Corpus, out: &Path, jobs: usize) -> Result<RepetitionReport> {
    let report = run_repetitions(&cfg.cv, corpus, cfg.iterations, cfg.seed, jobs)?;
    let hash = cfg.hash();
    for stream in Stream::ALL {
        let file = ResultsFile::from_report(&report, stream, &hash)?;
        write_json(&out.join(format!("results_{stream}.json")), &file)?;
        write_f1_csv(&out.join(format!("f1_{stream}.csv")), &file)?;
    }
    let preds: Vec<IterationPredictions> = report
        .iterations
        .iter()
        .map(|it| IterationPredictions { seed: it.seed, predictions: it.predictions.values().flatten().cloned().collect() })
        .collect();
    write_json(&out.join("predictions.json"), &preds)?;
    write_json(&out.join("logits.json"), &mean_logits(&report))?;
    Ok(report)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

pub fn write_f1_csv(path: &Path, file: &ResultsFile) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["iteration", "seed", "f1"]).map_err(|e| csv_err(path, e))?;
    for (i, r) in file.iterations.iter().enumerate() {
        w.write_record([i.to_string(), r.seed.to_string(), r.f1.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Epoch directories (those holding `manifest.json`) directly under `root`.
/// Participant epoch directories under `root`. Every subdirectory must carry a manifest.
pub fn epoch_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if let Some(bad) = dirs.iter().find(|d| !d.join(crate::eeg::MANIFEST_NAME).exists()) {
        return Err(Error::format(bad.join(crate::eeg::MANIFEST_NAME), "manifest is missing"));
    }
    if dirs.is_empty() {
        return Err(Error::NoData(format!("no participant epoch directories in {}", root.display())));
    }
    Ok(dirs)
}

fn set_dir_name(set: &EpochSet) -> String {
    format!("{}_{}", set.participant_id, set.condition)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningSummary {
    pub participant_id: String,
    pub condition: StimulusCondition,
    pub epochs_in: usize,
    pub epochs_kept: usize,
    pub valid: bool,
}

pub fn eeg_condition_dir(cfg: &RunConfig, input: &Path, output: &Path, jobs: usize) -> Result<Vec<ConditioningSummary>> {
    let dirs = epoch_dirs(input)?;
    let results = parallel_map(dirs.len(), jobs, |i| {
        let raw = load_epoch_dir(&dirs[i])?;
        let clean = condition_epochs(&raw, &cfg.eeg.conditioning)?;
        write_epoch_dir(&output.join(set_dir_name(&clean)), &clean)?;
        Ok(ConditioningSummary {
            participant_id: clean.participant_id.clone(),
            condition: clean.condition,
            epochs_in: raw.epochs.len(),
            epochs_kept: clean.epochs.len(),
            valid: clean.valid,
        })
    });
    results.into_iter().collect()
}

/// ROI/band/window power of one participant in one stimulus condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPowerRecord {
    pub participant_id: String,
    pub group: Group,
    pub condition: StimulusCondition,
    pub roi: String,
    #[serde(flatten)]
    pub band_window: BandWindow,
    pub power_db: f64,
}

/// ERSPs of every ROI channel for one epoch set.
pub fn roi_ersps(cfg: &RunConfig, set: &EpochSet) -> Result<BTreeMap<String, ErspMatrix>> {
    let channels: BTreeSet<&String> = cfg.eeg.rois.iter().flat_map(|r| &r.channels).collect();
    channels.into_iter().map(|ch| Ok((ch.clone(), compute_ersp(set, ch, &cfg.eeg.ersp)?))).collect()
}

pub fn band_powers(cfg: &RunConfig, set: &EpochSet, ersps: &BTreeMap<String, ErspMatrix>) -> Result<Vec<BandPowerRecord>> {
    let mut out = Vec::new();
    for roi in &cfg.eeg.rois {
        for bw in BandWindow::all() {
            out.push(BandPowerRecord {
                participant_id: set.participant_id.clone(),
                group: set.group,
                condition: set.condition,
                roi: roi.name.clone(),
                band_window: bw,
                power_db: band_power(ersps, roi, bw)?,
            });
        }
    }
    Ok(out)
}

/// Computes ERSP CSVs under `output/<participant>_<condition>/` and returns
/// band powers of all valid participants.
pub fn eeg_ersp_dir(cfg: &RunConfig, input: &Path, output: &Path, jobs: usize) -> Result<Vec<BandPowerRecord>> {
    let dirs = epoch_dirs(input)?;
    let results = parallel_map(dirs.len(), jobs, |i| -> Result<Vec<BandPowerRecord>> {
        let set = load_epoch_dir(&dirs[i])?;
        if !set.valid {
            log::warn!("skipping {}: too few epochs survived rejection", set.participant_id);
            return Ok(Vec::new());
        }
        let ersps = roi_ersps(cfg, &set)?;
        let dir = output.join(set_dir_name(&set));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (ch, m) in &ersps {
            write_ersp_csv(&dir.join(format!("{ch}.csv")), m)?;
        }
        band_powers(cfg, &set, &ersps)
    });
    Ok(results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

/// One Spearman correlation between band power and a logit column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEntry {
    /// `positive`, `neutral`, `negative`, `delta_positive` or `delta_negative`.
    pub logit: String,
    pub scope: CorrelationScope,
    pub n: usize,
    pub rho: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub roi: String,
    pub band: crate::eeg::Band,
    pub window: crate::eeg::TimeWindow,
    pub condition: StimulusCondition,
    pub n_mdd: usize,
    pub n_hc: usize,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub d: Option<f64>,
    pub degenerate: bool,
    pub rho_tables: Vec<RhoEntry>,
}

type CellKey = (String, BandWindow, StimulusCondition);

fn cells(powers: &[BandPowerRecord]) -> BTreeMap<CellKey, Vec<&BandPowerRecord>> {
    let mut map: BTreeMap<CellKey, Vec<&BandPowerRecord>> = BTreeMap::new();
    for r in powers {
        map.entry((r.roi.clone(), r.band_window, r.condition)).or_default().push(r);
    }
    map
}

fn logit_columns(logits: &LogitTable) -> Result<Vec<(String, BTreeMap<String, f64>)>> {
    let mut cols: Vec<(String, BTreeMap<String, f64>)> = Condition::EMOTIONAL
        .iter()
        .map(|c| {
            let col = logits.iter().filter_map(|(id, m)| m.get(c).map(|v| (id.clone(), *v))).collect();
            (c.to_string(), col)
        })
        .collect();
    let deltas = delta_logits(logits)?;
    cols.push(("delta_positive".into(), deltas.iter().map(|(id, d)| (id.clone(), d.positive)).collect()));
    cols.push(("delta_negative".into(), deltas.iter().map(|(id, d)| (id.clone(), d.negative)).collect()));
    Ok(cols)
}

fn rho_table(records: &[&BandPowerRecord], columns: &[(String, BTreeMap<String, f64>)]) -> Result<Vec<RhoEntry>> {
    let mut out = Vec::new();
    for (name, col) in columns {
        let values: Vec<ParticipantValue> = records
            .iter()
            .filter_map(|r| col.get(&r.participant_id).map(|&l| ParticipantValue { group: r.group, power: r.power_db, logit: l }))
            .collect();
        for scope in [CorrelationScope::All, CorrelationScope::Mdd, CorrelationScope::Hc] {
            match correlate_power_logits(&values, scope) {
                Ok(c) => out.push(RhoEntry { logit: name.clone(), scope, n: c.n, rho: c.rho, p: c.p_two_tailed }),
                Err(Error::InsufficientData { got, .. }) => {
                    out.push(RhoEntry { logit: name.clone(), scope, n: got, rho: None, p: None })
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Group comparison per ROI x band x window x stimulus condition, with
/// correlation tables when logits are supplied.
pub fn eeg_stats(cfg: &RunConfig, powers: &[BandPowerRecord], logits: Option<&LogitTable>) -> Result<Vec<StatsRecord>> {
    let columns = logits.map(logit_columns).transpose()?;
    cells(powers)
        .into_iter()
        .map(|((roi, bw, condition), recs)| {
            let pick = |g| recs.iter().filter(|r| r.group == g).map(|r| r.power_db).collect::<Vec<_>>();
            let (mdd, hc) = (pick(Group::Mdd), pick(Group::Hc));
            let g = group_compare(&mdd, &hc, cfg.eeg.t_test)?;
            let rho_tables = match &columns {
                Some(cols) => rho_table(&recs, cols)?,
                None => Vec::new(),
            };
            Ok(StatsRecord {
                roi,
                band: bw.band,
                window: bw.window,
                condition,
                n_mdd: mdd.len(),
                n_hc: hc.len(),
                t: g.t,
                df: g.df,
                p: g.p,
                d: g.d,
                degenerate: g.degenerate,
                rho_tables,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub roi: String,
    pub band: crate::eeg::Band,
    pub window: crate::eeg::TimeWindow,
    pub condition: StimulusCondition,
    #[serde(flatten)]
    pub entry: RhoEntry,
}

/// Power-logit correlations for every cell, restricted to `scope`.
pub fn correlate(powers: &[BandPowerRecord], logits: &LogitTable, scope: Option<CorrelationScope>) -> Result<Vec<CorrelationRow>> {
    let columns = logit_columns(logits)?;
    let mut rows = Vec::new();
    for ((roi, bw, condition), recs) in cells(powers) {
        for entry in rho_table(&recs, &columns)? {
            if scope.is_none_or(|s| s == entry.scope) {
                rows.push(CorrelationRow { roi: roi.clone(), band: bw.band, window: bw.window, condition, entry });
            }
        }
    }
    Ok(rows)
}

pub fn synth_speech(cfg: &RunConfig, output: &Path) -> Result<usize> {
    let seqs = gen_speech_corpus(&cfg.synth.speech)?;
    write_corpus(output, &seqs)?;
    Ok(seqs.len())
}

/// Writes one epoch directory per participant plus `logits.json` holding
/// the planted probability for every speech condition.
pub fn synth_eeg(cfg: &RunConfig, output: &Path) -> Result<usize> {
    let study = gen_eeg_epochs(&cfg.synth.eeg)?;
    for set in &study.sets {
        write_epoch_dir(&output.join(set_dir_name(set)), set)?;
    }
    let logits: LogitTable = study
        .logits
        .iter()
        .map(|(id, &l)| (id.clone(), Condition::EMOTIONAL.iter().map(|&c| (c, l)).collect()))
        .collect();
    write_json(&output.join("logits.json"), &logits)?;
    Ok(study.sets.len())
}

/// Table-I style summary (mean±std per stream) from `results_<stream>.json` files,
/// plus `correlations.csv` when `correlations.json` is present. Returns the table row count.
pub fn report(results_dir: &Path, output: &Path) -> Result<usize> {
    let mut records = Vec::new();
    for stream in Stream::ALL {
        let path = results_dir.join(format!("results_{stream}.json"));
        if !path.exists() {
            continue;
        }
        let file: ResultsFile = read_json(&path)?;
        let (m, s) = (file.summary.mean, file.summary.std);
        let cell = |a: f64, b: f64| format!("{a:.1}±{b:.1}");
        records.push([
            stream.to_string(),
            cell(m.acc, s.acc),
            cell(m.prec, s.prec),
            cell(m.rec, s.rec),
            cell(m.f1, s.f1),
            file.iterations.len().to_string(),
            file.config_hash.chars().take(12).collect(),
        ]);
    }
    let corr = results_dir.join("correlations.json");
    if records.is_empty() && !corr.exists() {
        return Err(Error::NoData(format!("no results_<stream>.json or correlations.json in {}", results_dir.display())));
    }
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let rows = records.len();
    if !records.is_empty() {
        let table = output.join("table1.csv");
        let mut w = csv::Writer::from_path(&table).map_err(|e| csv_err(&table, e))?;
        w.write_record(["Condition", "Acc.(%)", "Prec.(%)", "Rec.(%)", "F1(%)", "Iterations", "Config"])
            .map_err(|e| csv_err(&table, e))?;
        for r in records {
            w.write_record(r).map_err(|e| csv_err(&table, e))?;
        }
        w.flush().map_err(|e| Error::io(&table, e))?;
    }
    if corr.exists() {
        let rows: Vec<CorrelationRow> = read_json(&corr)?;
        let path = output.join("correlations.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(["roi", "band", "window", "condition", "logit", "scope", "n", "rho", "p"])
            .map_err(|e| csv_err(&path, e))?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.3}"));
        for r in rows {
            w.write_record([
                r.roi.clone(),
                variant_name(&r.band),
                variant_name(&r.window),
                r.condition.to_string(),
                r.entry.logit.clone(),
                variant_name(&r.entry.scope),
                r.entry.n.to_string(),
                opt(r.entry.rho),
                opt(r.entry.p),
            ])
            .map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(rows)
}

/// Serialized name of a unit enum variant.
fn variant_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

/// Segments the feature corpus under `dir`.
pub fn load_segments(cfg: &RunConfig, dir: &Path) -> Result<Vec<SpeakerSegments>> {
    segment_corpus(&Corpus::load_dir(dir)?, &cfg.cv)
}
