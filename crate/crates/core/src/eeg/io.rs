use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::ersp::ErspMatrix;
use super::{EpochSet, Group, StimulusCondition};
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

/// `manifest.json` of one participant/condition epoch directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochManifest {
    pub participant_id: String,
    pub group: Group,
    pub condition: StimulusCondition,
    pub sample_rate: f64,
    pub channels: Vec<String>,
    pub t0_index: usize,
    pub epoch_files: Vec<String>,
    #[serde(default = "default_true")]
    pub valid: bool,
}

fn default_true() -> bool {
    true
}

fn read_epoch_csv(path: &Path, n_channels: usize) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n_channels];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let first = record.get(0).unwrap_or("").trim();
        if line == 0 && first.parse::<f64>().is_err() {
            continue;
        }
        if record.len() != n_channels {
            return Err(Error::format(path, format!("row {} has {} columns, expected {n_channels}", line + 1, record.len())));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("row {}: `{field}` is not a number", line + 1)))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("{}: non-finite sample on row {}", path.display(), line + 1)));
            }
            columns[c].push(v);
        }
    }
    let n = columns.first().map_or(0, Vec::len);
    Ok(Array2::from_shape_fn((n_channels, n), |(c, i)| columns[c][i]))
}

/// Reads `manifest.json` and its per-epoch CSVs (rows = samples, columns = channels, µV).
pub fn load_epoch_dir(dir: &Path) -> Result<EpochSet> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: EpochManifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    let epochs = m
        .epoch_files
        .iter()
        .map(|f| read_epoch_csv(&dir.join(f), m.channels.len()))
        .collect::<Result<Vec<_>>>()?;
    let set = EpochSet {
        participant_id: m.participant_id,
        group: m.group,
        condition: m.condition,
        epochs,
        channels: m.channels,
        sample_rate: m.sample_rate,
        t0_index: m.t0_index,
        valid: m.valid,
    };
    set.validate()?;
    Ok(set)
}

pub fn write_epoch_dir(dir: &Path, set: &EpochSet) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut epoch_files = Vec::with_capacity(set.epochs.len());
    for (k, epoch) in set.epochs.iter().enumerate() {
        let name = format!("epoch_{k:03}.csv");
        let path = dir.join(&name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::format(&path, e.to_string()))?;
        w.write_record(&set.channels).map_err(|e| Error::format(&path, e.to_string()))?;
        for col in epoch.columns() {
            w.write_record(col.iter().map(|v| v.to_string())).map_err(|e| Error::format(&path, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        epoch_files.push(name);
    }
    let manifest = EpochManifest {
        participant_id: set.participant_id.clone(),
        group: set.group,
        condition: set.condition,
        sample_rate: set.sample_rate,
        channels: set.channels.clone(),
        t0_index: set.t0_index,
        epoch_files,
        valid: set.valid,
    };
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Frequencies as rows, window-centre times (ms) as columns.
pub fn write_ersp_csv(path: &Path, m: &ErspMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let header = std::iter::once("freq_hz".to_string()).chain(m.times_ms.iter().map(|t| format!("{t}")));
    w.write_record(header).map_err(|e| Error::format(path, e.to_string()))?;
    for (f, row) in m.freqs.iter().zip(m.power.rows()) {
        let record = std::iter::once(f.to_string()).chain(row.iter().map(|v| v.to_string()));
        w.write_record(record).map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
