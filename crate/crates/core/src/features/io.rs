use std::path::Path;

use ndarray::Array2;

use crate::corpus::RecordingManifest;
use crate::error::{Error, Result};

use super::{FeatureSequence, SampleBuffer, FEATURE_DIM};

fn header_name(i: usize) -> String {
    format!("f{i:02}")
}

/// Reads a 32-column feature CSV (optional `f00..f31` header).
pub fn import_feature_csv(path: &Path, manifest: &RecordingManifest) -> Result<FeatureSequence> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        if record.len() != FEATURE_DIM {
            return Err(Error::format(
                path,
                format!("line {}: expected {FEATURE_DIM} columns, found {}", line + 1, record.len()),
            ));
        }
        if line == 0 && record.iter().enumerate().all(|(i, f)| f == header_name(i)) {
            continue;
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::format(path, format!("line {}, column {col}: `{field}` is not a number", line + 1)))?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "{}: line {}, column {col}: non-finite value `{field}`",
                    path.display(),
                    line + 1
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::format(path, "no feature rows"));
    }
    let frames = Array2::from_shape_vec((rows, FEATURE_DIM), values).expect("row-major fill");
    FeatureSequence::new(frames, manifest)
}

/// Writes frames with an `f00..f31` header and shortest round-trip formatting.
pub fn write_feature_csv(path: &Path, seq: &FeatureSequence) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let io_err = |e: csv::Error| Error::format(path, e.to_string());
    writer.write_record((0..FEATURE_DIM).map(header_name)).map_err(io_err)?;
    for row in seq.frames.rows() {
        writer.write_record(row.iter().map(|v| v.to_string())).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Reads 16-bit PCM WAV, averaging channels to mono.
pub fn read_wav(path: &Path) -> Result<SampleBuffer> {
    let mut reader = hound::WavReader::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::format(
            path,
            format!("expected 16-bit PCM, found {:?} {}-bit", spec.sample_format, spec.bits_per_sample),
        ));
    }
    let channels = spec.channels.max(1) as usize;
    let raw: Vec<i16> = reader
        .samples::<i16>()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let samples = raw
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| s as f64 / 32768.0).sum::<f64>() / channels as f64)
        .collect();
    SampleBuffer::new(samples, spec.sample_rate)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;
    use crate::corpus::{Condition, Label};

    fn manifest() -> RecordingManifest {
        RecordingManifest {
            speaker_id: "s01".into(),
            recording_id: "s01_read".into(),
            condition: Condition::Read,
            label: Label::Control,
            sample_rate: None,
        }
    }

    fn write_rows(dir: &Path, name: &str, rows: usize, cols: usize, header: bool, poison: Option<&str>) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        if header {
            writeln!(f, "{}", (0..cols).map(header_name).collect::<Vec<_>>().join(",")).unwrap();
        }
        for r in 0..rows {
            let mut fields: Vec<String> = (0..cols).map(|c| format!("{}", (r * cols + c) as f64 * 0.5)).collect();
            if r == rows / 2 {
                if let Some(p) = poison {
                    fields[3] = p.into();
                }
            }
            writeln!(f, "{}", fields.join(",")).unwrap();
        }
        path
    }

    #[test]
    fn valid_file_keeps_row_order() {
        let dir = tempfile::tempdir().unwrap();
        for header in [false, true] {
            let path = write_rows(dir.path(), "a.csv", 128, 32, header, None);
            let seq = import_feature_csv(&path, &manifest()).unwrap();
            assert_eq!(seq.len(), 128);
            assert_eq!(seq.frames[[5, 1]], (5 * 32 + 1) as f64 * 0.5);
            assert_eq!(seq.speaker_id, "s01");
        }
    }

    #[test]
    fn wrong_column_count_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_rows(dir.path(), "b.csv", 10, 31, false, None);
        assert!(matches!(import_feature_csv(&path, &manifest()), Err(Error::Format { .. })));
    }

    #[test]
    fn nan_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_rows(dir.path(), "c.csv", 10, 32, false, Some("NaN"));
        assert!(matches!(import_feature_csv(&path, &manifest()), Err(Error::Data(_))));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let frames = Array2::from_shape_fn((7, 32), |(i, j)| (i as f64 + 1.0) / (j as f64 + 3.0) - 0.1);
        let seq = FeatureSequence::new(frames, &manifest()).unwrap();
        let path = dir.path().join("rt.csv");
        write_feature_csv(&path, &seq).unwrap();
        assert_eq!(import_feature_csv(&path, &manifest()).unwrap(), seq);
    }

    #[test]
    fn stereo_wav_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let spec = hound::WavSpec { channels: 2, sample_rate: 16_000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..500 {
            w.write_sample(16384i16).unwrap();
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        let buf = read_wav(&path).unwrap();
        assert_eq!(buf.len(), 500);
        assert_eq!(buf.sample_rate(), 16_000);
        assert!(buf.samples().iter().all(|&s| (s - 0.25).abs() < 1e-12));
    }
}
