//! Fixed-length, half-overlapping segmentation of feature sequences.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::corpus::Condition;
use crate::error::{Error, Result};
use crate::features::FeatureSequence;

pub const SEGMENT_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    /// Rows per segment (M).
    pub length: usize,
    /// Hop between segment starts; M/2 by default.
    pub stride: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { length: SEGMENT_LEN, stride: SEGMENT_LEN / 2 }
    }
}

impl SegmentConfig {
    pub fn with_length(length: usize) -> Self {
        SegmentConfig { length, stride: (length / 2).max(1) }
    }

    pub fn count(&self, frames: usize) -> usize {
        if frames < self.length {
            0
        } else {
            (frames - self.length) / self.stride + 1
        }
    }
}

/// What to do with sequences shorter than one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortSequencePolicy {
    /// Reject with `TooShortForSegment`.
    #[default]
    Drop,
    /// Zero-pad at the end to exactly one segment.
    ZeroPad,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// `M x D` feature rows.
    pub vectors: Array2<f64>,
    pub source_recording_id: String,
    /// Index of the first row within the source sequence.
    pub offset: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet {
    pub segments: Vec<Segment>,
    pub speaker_id: String,
    pub condition: Condition,
}

impl SegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

fn slice_segments(seq: &FeatureSequence, cfg: &SegmentConfig) -> Vec<Segment> {
    (0..cfg.count(seq.len()))
        .map(|k| {
            let offset = k * cfg.stride;
            Segment {
                vectors: seq.frames.slice(s![offset..offset + cfg.length, ..]).to_owned(),
                source_recording_id: seq.recording_id.clone(),
                offset,
            }
        })
        .collect()
}

fn pad_to_min(seq: &FeatureSequence, cfg: &SegmentConfig) -> Segment {
    let mut vectors = Array2::zeros((cfg.length, seq.frames.ncols()));
    vectors.slice_mut(s![..seq.len(), ..]).assign(&seq.frames);
    Segment { vectors, source_recording_id: seq.recording_id.clone(), offset: 0 }
}

/// Segments one recording. Trailing frames that cannot fill a window are dropped.
pub fn segment_sequence(seq: &FeatureSequence, cfg: &SegmentConfig) -> Result<SegmentSet> {
    if seq.len() < cfg.length {
        return Err(Error::TooShortForSegment { needed: cfg.length, got: seq.len() });
    }
    Ok(SegmentSet {
        segments: slice_segments(seq, cfg),
        speaker_id: seq.speaker_id.clone(),
        condition: seq.condition,
    })
}

/// Segments a list of recordings (read passages or interview responses)
/// independently and concatenates the results in input order, so no segment
/// crosses a recording boundary.
pub fn segment_responses(
    responses: &[FeatureSequence],
    cfg: &SegmentConfig,
    policy: ShortSequencePolicy,
) -> Result<SegmentSet> {
    let first = responses.first().ok_or(Error::EmptySegmentSet)?;
    let mut segments = Vec::new();
    for seq in responses {
        if seq.len() >= cfg.length {
            segments.extend(slice_segments(seq, cfg));
        } else if policy == ShortSequencePolicy::ZeroPad {
            segments.push(pad_to_min(seq, cfg));
        }
    }
    if segments.is_empty() {
        return Err(Error::EmptySegmentSet);
    }
    Ok(SegmentSet { segments, speaker_id: first.speaker_id.clone(), condition: first.condition })
}
