//! Recording metadata and the per-speaker view of a speech corpus.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Read,
    Positive,
    Neutral,
    Negative,
}

impl Condition {
    /// The three spontaneous-speech conditions, in the order models are trained.
    pub const EMOTIONAL: [Condition; 3] = [Condition::Positive, Condition::Neutral, Condition::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Read => "read",
            Condition::Positive => "positive",
            Condition::Neutral => "neutral",
            Condition::Negative => "negative",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "read" => Ok(Condition::Read),
            "positive" => Ok(Condition::Positive),
            "neutral" => Ok(Condition::Neutral),
            "negative" => Ok(Condition::Negative),
            other => Err(Error::Data(format!("unknown condition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Control,
    Depressed,
}

impl Label {
    /// 1.0 for the depressed (positive) class.
    pub fn target(self) -> f64 {
        match self {
            Label::Depressed => 1.0,
            Label::Control => 0.0,
        }
    }

    pub fn from_bool(depressed: bool) -> Self {
        if depressed {
            Label::Depressed
        } else {
            Label::Control
        }
    }

    pub fn is_depressed(self) -> bool {
        self == Label::Depressed
    }
}

/// Sidecar metadata describing one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingManifest {
    pub speaker_id: String,
    pub recording_id: String,
    pub condition: Condition,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<u32>,
}

impl RecordingManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// All recordings of one speaker, grouped by speech type.
#[derive(Debug, Clone)]
pub struct SpeakerRecordings {
    pub speaker_id: String,
    pub label: Label,
    pub read: Vec<FeatureSequence>,
    /// Interview responses keyed by emotional condition, in recording-id order.
    pub responses: BTreeMap<Condition, Vec<FeatureSequence>>,
}

impl SpeakerRecordings {
    pub fn responses(&self, condition: Condition) -> &[FeatureSequence] {
        self.responses.get(&condition).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// A speech corpus as a speaker-ordered collection.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub speakers: Vec<SpeakerRecordings>,
}

impl Corpus {
    /// Groups feature sequences by speaker. Speakers are ordered by id and
    /// recordings within a speaker by recording id.
    pub fn from_sequences(sequences: Vec<FeatureSequence>) -> Result<Self> {
        let mut by_speaker: BTreeMap<String, Vec<FeatureSequence>> = BTreeMap::new();
        for seq in sequences {
            by_speaker.entry(seq.speaker_id.clone()).or_default().push(seq);
        }
        let mut speakers = Vec::with_capacity(by_speaker.len());
        for (speaker_id, mut seqs) in by_speaker {
            seqs.sort_by(|a, b| a.recording_id.cmp(&b.recording_id));
            let label = seqs[0].label;
            if let Some(bad) = seqs.iter().find(|s| s.label != label) {
                return Err(Error::Data(format!(
                    "speaker {speaker_id}: recording {} has a conflicting label",
                    bad.recording_id
                )));
            }
            let mut read = Vec::new();
            let mut responses: BTreeMap<Condition, Vec<FeatureSequence>> = BTreeMap::new();
            for seq in seqs {
                match seq.condition {
                    Condition::Read => read.push(seq),
                    c => responses.entry(c).or_default().push(seq),
                }
            }
            speakers.push(SpeakerRecordings { speaker_id, label, read, responses });
        }
        Ok(Corpus { speakers })
    }

    /// Loads every `<id>.json` manifest in `dir` together with its `<id>.csv`
    /// feature file.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        require_manifests(dir, "csv")?;
        let manifests = manifest_paths(dir)?;
        if manifests.is_empty() {
            return Err(Error::NoData(format!("no recording manifests found in {}", dir.display())));
        }
        let mut sequences = Vec::with_capacity(manifests.len());
        for manifest_path in manifests {
            let manifest = RecordingManifest::load(&manifest_path)?;
            let csv_path = manifest_path.with_extension("csv");
            if !csv_path.exists() {
                return Err(Error::format(&csv_path, "feature file referenced by manifest is missing"));
            }
            sequences.push(crate::features::import_feature_csv(&csv_path, &manifest)?);
        }
        Corpus::from_sequences(sequences)
    }

    pub fn len(&self) -> usize {
        self.speakers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speakers.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.speakers.iter().map(|s| s.label).collect()
    }
}

pub(crate) fn manifest_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Fails on the first `<id>.<ext>` file in `dir` that has no `<id>.json` sidecar.
pub(crate) fn require_manifests(dir: &Path, ext: &str) -> Result<()> {
    let mut orphans = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == ext) && !path.with_extension("json").exists() {
            orphans.push(path.with_extension("json"));
        }
    }
    orphans.sort();
    match orphans.into_iter().next() {
        Some(missing) => Err(Error::format(missing, "manifest is missing")),
        None => Ok(()),
    }
}
