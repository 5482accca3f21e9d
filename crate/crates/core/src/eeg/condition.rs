use std::collections::BTreeSet;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::filter::{butterworth4_highpass, butterworth4_lowpass, filtfilt, filtfilt_with, Biquad, EdgeInit};
use super::EpochSet;
use crate::error::{Error, Result};

pub const TARGET_RATE: f64 = 250.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditioningConfig {
    pub highpass_hz: f64,
    pub lowpass_hz: f64,
    pub notch_low_hz: f64,
    pub notch_high_hz: f64,
    pub target_rate: f64,
    /// Absolute amplitude limit in µV.
    pub reject_uv: f64,
    /// Rejection window relative to onset, in ms.
    pub reject_window_ms: (f64, f64),
    /// Minimum surviving fraction for a participant to stay valid.
    pub min_surviving: f64,
    /// Accepted channel names; `None` means the 129-channel geodesic net.
    pub montage: Option<Vec<String>>,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        ConditioningConfig {
            highpass_hz: 0.1,
            lowpass_hz: 30.0,
            notch_low_hz: 48.0,
            notch_high_hz: 52.0,
            target_rate: TARGET_RATE,
            reject_uv: 100.0,
            reject_window_ms: (-500.0, 1500.0),
            min_surviving: 0.5,
            montage: None,
        }
    }
}

/// `E1..E128` plus the vertex reference `Cz`/`E129`.
pub fn default_montage() -> Vec<String> {
    (1..=129).map(|i| format!("E{i}")).chain(std::iter::once("Cz".to_string())).collect()
}

fn check_montage(set: &EpochSet, cfg: &ConditioningConfig) -> Result<()> {
    let allowed: BTreeSet<String> = cfg.montage.clone().unwrap_or_else(default_montage).into_iter().collect();
    let mut seen = BTreeSet::new();
    for ch in &set.channels {
        if !allowed.contains(ch) {
            return Err(Error::Montage(format!("{}: unknown channel `{ch}`", set.participant_id)));
        }
        if !seen.insert(ch) {
            return Err(Error::Montage(format!("{}: duplicate channel `{ch}`", set.participant_id)));
        }
    }
    Ok(())
}

/// Zero-phase band-pass and band-stop for one channel at rate `fs`.
pub fn filter_channel(x: &[f64], cfg: &ConditioningConfig, fs: f64) -> Vec<f64> {
    let high = filtfilt_with(&butterworth4_highpass(cfg.highpass_hz, fs), x, EdgeInit::Mean);
    let mut rest = butterworth4_lowpass(cfg.lowpass_hz, fs).to_vec();
    let center = 0.5 * (cfg.notch_low_hz + cfg.notch_high_hz);
    if center < fs / 2.0 {
        rest.push(Biquad::notch(center, cfg.notch_high_hz - cfg.notch_low_hz, fs));
    }
    filtfilt(&rest, &high)
}

/// Linear interpolation onto a `target` Hz grid that keeps a sample exactly at onset.
fn resample(epoch: &Array2<f64>, fs: f64, t0: usize, target: f64) -> (Array2<f64>, usize) {
    if (fs - target).abs() < 1e-9 {
        return (epoch.clone(), t0);
    }
    let ratio = fs / target;
    let new_t0 = (t0 as f64 / ratio).floor() as usize;
    let last = (epoch.ncols() - 1) as f64;
    let first_pos = t0 as f64 - new_t0 as f64 * ratio;
    let n_out = ((last - first_pos) / ratio).floor() as usize + 1;
    let mut out = Array2::zeros((epoch.nrows(), n_out));
    for j in 0..n_out {
        let pos = first_pos + j as f64 * ratio;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        for c in 0..epoch.nrows() {
            let a = epoch[[c, lo]];
            out[[c, j]] = if frac > 1e-12 { a + frac * (epoch[[c, lo + 1]] - a) } else { a };
        }
    }
    (out, new_t0)
}

/// Drops epochs exceeding the amplitude limit inside the rejection window and
/// flags the participant if too few remain. Idempotent.
pub fn reject_epochs(set: &EpochSet, cfg: &ConditioningConfig) -> EpochSet {
    let (lo, hi) = cfg.reject_window_ms;
    let in_window: Vec<usize> =
        (0..set.n_samples()).filter(|&i| (lo..=hi).contains(&set.time_ms(i))).collect();
    let keep: Vec<Array2<f64>> = set
        .epochs
        .iter()
        .filter(|e| in_window.iter().all(|&i| e.column(i).iter().all(|v| v.abs() <= cfg.reject_uv)))
        .cloned()
        .collect();
    let valid = set.valid && (keep.len() as f64) >= cfg.min_surviving * set.epochs.len() as f64;
    EpochSet { epochs: keep, valid, ..set.clone() }
}

/// Average reference, zero-phase band-pass and band-stop, resampling to the
/// target rate, then amplitude-threshold rejection.
pub fn condition_epochs(raw: &EpochSet, cfg: &ConditioningConfig) -> Result<EpochSet> {
    raw.validate()?;
    check_montage(raw, cfg)?;
    if raw.sample_rate < cfg.target_rate {
        return Err(Error::Data(format!(
            "{}: sample rate {} Hz below target {} Hz",
            raw.participant_id, raw.sample_rate, cfg.target_rate
        )));
    }
    let mut t0 = raw.t0_index;
    let epochs = raw
        .epochs
        .iter()
        .map(|e| {
            let mean = e.mean_axis(Axis(0)).expect("channels present");
            let mut referenced = e - &mean.insert_axis(Axis(0));
            for mut row in referenced.rows_mut() {
                let filtered = filter_channel(row.as_slice().expect("standard layout"), cfg, raw.sample_rate);
                row.assign(&ndarray::Array1::from(filtered));
            }
            let (out, new_t0) = resample(&referenced, raw.sample_rate, raw.t0_index, cfg.target_rate);
            t0 = new_t0;
            out
        })
        .collect();
    let filtered = EpochSet { epochs, sample_rate: cfg.target_rate, t0_index: t0, ..raw.clone() };
    Ok(reject_epochs(&filtered, cfg))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::eeg::{Group, StimulusCondition};

    fn set_from(epochs: Vec<Array2<f64>>, channels: &[&str], fs: f64, t0: usize) -> EpochSet {
        EpochSet {
            participant_id: "p1".into(),
            group: Group::Hc,
            condition: StimulusCondition::Sad,
            epochs,
            channels: channels.iter().map(|s| s.to_string()).collect(),
            sample_rate: fs,
            t0_index: t0,
            valid: true,
        }
    }

    #[test]
    fn spike_is_rejected() {
        let mut bad = Array2::zeros((2, 750));
        bad[[0, 250 + 50]] = 150.0;
        let good = Array2::from_elem((2, 750), 20.0);
        let set = set_from(vec![good.clone(), bad, good], &["E1", "E2"], 250.0, 250);
        let out = reject_epochs(&set, &ConditioningConfig::default());
        assert_eq!(out.epochs.len(), 2);
        assert!(out.valid);
        assert_eq!(reject_epochs(&out, &ConditioningConfig::default()), out);
    }

    #[test]
    fn outside_window_spike_is_kept_and_validity_flag() {
        let mut early = Array2::zeros((1, 750));
        early[[0, 10]] = 500.0;
        let mut late = Array2::zeros((1, 750));
        late[[0, 300]] = -120.0;
        let set = set_from(vec![early, late.clone(), late], &["E1"], 250.0, 250);
        let out = reject_epochs(&set, &ConditioningConfig::default());
        assert_eq!(out.epochs.len(), 1);
        assert!(!out.valid);
    }

    #[test]
    fn line_noise_is_suppressed() {
        let fs = 1000.0;
        let x: Vec<f64> = (0..3000).map(|i| 40.0 * (2.0 * PI * 50.0 * i as f64 / fs).sin()).collect();
        let y = filter_channel(&x, &ConditioningConfig::default(), fs);
        let peak = y[500..2500].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak < 0.05 * 40.0, "{peak}");
    }

    #[test]
    fn dc_offset_removed() {
        let fs = 250.0;
        let x = vec![35.0; 750];
        let y = filter_channel(&x, &ConditioningConfig::default(), fs);
        assert!(y.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn average_reference_and_resampling() {
        let fs = 500.0;
        let e = Array2::from_shape_fn((2, 1500), |(c, i)| {
            let t = i as f64 / fs;
            let common = 30.0;
            common + if c == 0 { 10.0 * (2.0 * PI * 6.0 * t).sin() } else { 0.0 }
        });
        let set = set_from(vec![e], &["E1", "E2"], fs, 500);
        let out = condition_epochs(&set, &ConditioningConfig::default()).unwrap();
        assert_eq!(out.sample_rate, 250.0);
        assert_eq!(out.t0_index, 250);
        assert_eq!(out.n_samples(), 750);
        let e = &out.epochs[0];
        for i in 0..750 {
            assert!((e[[0, i]] + e[[1, i]]).abs() < 1e-9);
        }
        let mid = e.row(0).slice(ndarray::s![200..550]).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((mid - 5.0).abs() < 0.2, "{mid}");
    }

    #[test]
    fn unknown_channel() {
        let set = set_from(vec![Array2::zeros((1, 750))], &["Fz"], 250.0, 250);
        assert!(matches!(condition_epochs(&set, &ConditioningConfig::default()), Err(Error::Montage(_))));
    }

    #[test]
    fn too_low_rate() {
        let set = set_from(vec![Array2::zeros((1, 300))], &["E1"], 100.0, 100);
        assert!(matches!(condition_epochs(&set, &ConditioningConfig::default()), Err(Error::Data(_))));
    }
}
