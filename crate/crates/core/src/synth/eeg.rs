use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::eeg::{EpochSet, Group, RoiSpec, StimulusCondition};
use crate::error::{Error, Result};

/// Sinusoid whose amplitude steps from `pre` to `post` at `onset_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub center_hz: f64,
    pub pre_amplitude: f64,
    pub post_amplitude: f64,
    pub onset_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EegSynthSpec {
    pub n_mdd: usize,
    pub n_hc: usize,
    pub channels: Vec<String>,
    pub epochs_per_participant: usize,
    pub sample_rate: f64,
    /// Epoch span around onset in seconds.
    pub epoch_span_s: (f64, f64),
    pub condition: StimulusCondition,
    /// Group-level oscillation of healthy controls.
    pub hc: Oscillation,
    /// Group-level oscillation of the MDD group.
    pub mdd: Oscillation,
    /// Between-participant SD of the post/pre power change, in dB.
    pub participant_sd_db: f64,
    /// SD of the pink background noise, in µV.
    pub noise_sd: f64,
    /// Slope of the planted logit relation: logit = sigmoid(-slope * ERD dB + noise).
    pub logit_slope: f64,
    pub logit_noise_sd: f64,
    pub seed: u64,
}

impl Default for EegSynthSpec {
    fn default() -> Self {
        let alpha = Oscillation { center_hz: 10.0, pre_amplitude: 10.0, post_amplitude: 10.0, onset_ms: 0.0 };
        let mut channels = RoiSpec::frontal(None).channels;
        channels.extend(RoiSpec::parieto_occipital().channels);
        EegSynthSpec {
            n_mdd: 13,
            n_hc: 20,
            channels,
            epochs_per_participant: 10,
            sample_rate: 250.0,
            epoch_span_s: (-1.0, 2.0),
            condition: StimulusCondition::Happy,
            hc: alpha,
            mdd: Oscillation { post_amplitude: 5.0, ..alpha },
            participant_sd_db: 6.0,
            noise_sd: 2.0,
            logit_slope: 0.3,
            logit_noise_sd: 0.1,
            seed: 0,
        }
    }
}

impl EegSynthSpec {
    fn validate(&self) -> Result<()> {
        for o in [self.hc, self.mdd] {
            if !(1.0..=30.0).contains(&o.center_hz) {
                return Err(Error::Config(format!("band centre {} Hz outside 1-30 Hz", o.center_hz)));
            }
            if o.pre_amplitude <= 0.0 || o.post_amplitude <= 0.0 {
                return Err(Error::Config("oscillation amplitudes must be positive".into()));
            }
        }
        if self.noise_sd < 0.0 || self.participant_sd_db < 0.0 || self.logit_noise_sd < 0.0 {
            return Err(Error::Config("standard deviations must be non-negative".into()));
        }
        if self.channels.is_empty() || self.epochs_per_participant == 0 || self.sample_rate <= 0.0 {
            return Err(Error::Config("need channels, epochs and a positive sample rate".into()));
        }
        if self.epoch_span_s.0 >= 0.0 || self.epoch_span_s.1 <= 0.0 {
            return Err(Error::Config("epoch must span the onset".into()));
        }
        Ok(())
    }
}

/// Generated epochs plus the ground truth planted in them.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEegStudy {
    pub sets: Vec<EpochSet>,
    /// Planted post/pre power change per participant, in dB.
    pub planted_db: BTreeMap<String, f64>,
    /// Planted depression probability per participant, monotone in `planted_db`.
    pub logits: BTreeMap<String, f64>,
}

/// Unit-variance 1/f noise by spectral shaping of white Gaussian noise.
fn pink_noise<R: Rng>(n: usize, rng: &mut R, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut spec: Vec<Complex<f64>> =
        (0..n).map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    spec[0] = Complex::new(0.0, 0.0);
    for (k, c) in spec.iter_mut().enumerate().skip(1) {
        let f = k.min(n - k) as f64;
        *c /= f.sqrt();
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    let x: Vec<f64> = spec.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    x.iter().map(|v| (v - mean) / sd.max(f64::MIN_POSITIVE)).collect()
}

/// MDD participants are `mdd_XX`, controls `hc_XX`. Each participant's
/// post-onset amplitude is the group value scaled by a random dB offset.
pub fn gen_eeg_epochs(spec: &EegSynthSpec) -> Result<SyntheticEegStudy> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut planner = FftPlanner::new();
    let fs = spec.sample_rate;
    let t0 = (-spec.epoch_span_s.0 * fs).round() as usize;
    let n = t0 + (spec.epoch_span_s.1 * fs).round() as usize;
    let spread = Normal::new(0.0, spec.participant_sd_db.max(f64::MIN_POSITIVE)).expect("validated");
    let logit_noise = Normal::new(0.0, spec.logit_noise_sd.max(f64::MIN_POSITIVE)).expect("validated");
    let mut study = SyntheticEegStudy { sets: Vec::new(), planted_db: BTreeMap::new(), logits: BTreeMap::new() };
    let roster = (0..spec.n_mdd).map(|i| (Group::Mdd, i)).chain((0..spec.n_hc).map(|i| (Group::Hc, i)));
    for (group, i) in roster {
        let (osc, id) = match group {
            Group::Mdd => (spec.mdd, format!("mdd_{i:02}")),
            Group::Hc => (spec.hc, format!("hc_{i:02}")),
        };
        let offset_db = if spec.participant_sd_db > 0.0 { spread.sample(&mut rng) } else { 0.0 };
        let post = osc.post_amplitude * 10f64.powf(offset_db / 20.0);
        let planted = 20.0 * (post / osc.pre_amplitude).log10();
        let noise = if spec.logit_noise_sd > 0.0 { logit_noise.sample(&mut rng) } else { 0.0 };
        let logit = 1.0 / (1.0 + (spec.logit_slope * planted - noise).exp());
        let onset = t0 as f64 + osc.onset_ms * fs / 1000.0;
        let epochs = (0..spec.epochs_per_participant)
            .map(|_| {
                let mut e = Array2::zeros((spec.channels.len(), n));
                for mut row in e.rows_mut() {
                    let phase = rng.gen_range(0.0..2.0 * PI);
                    let bg = pink_noise(n, &mut rng, &mut planner);
                    for (s, v) in row.iter_mut().enumerate() {
                        let amp = if (s as f64) < onset { osc.pre_amplitude } else { post };
                        let t = (s as f64 - t0 as f64) / fs;
                        *v = amp * (2.0 * PI * osc.center_hz * t + phase).sin() + spec.noise_sd * bg[s];
                    }
                }
                e
            })
            .collect();
        study.planted_db.insert(id.clone(), planted);
        study.logits.insert(id.clone(), logit);
        study.sets.push(EpochSet {
            participant_id: id,
            group,
            condition: spec.condition,
            epochs,
            channels: spec.channels.clone(),
            sample_rate: fs,
            t0_index: t0,
            valid: true,
        });
    }
    Ok(study)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eeg::{compute_ersp, ErspConfig};

    fn small() -> EegSynthSpec {
        EegSynthSpec {
            n_mdd: 2,
            n_hc: 2,
            channels: vec!["E62".into(), "E70".into()],
            epochs_per_participant: 3,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_shaped() {
        let a = gen_eeg_epochs(&small()).unwrap();
        assert_eq!(a, gen_eeg_epochs(&small()).unwrap());
        assert_eq!(a.sets.len(), 4);
        let s = &a.sets[0];
        assert_eq!(s.epochs[0].dim(), (2, 750));
        assert_eq!(s.t0_index, 250);
        s.validate().unwrap();
    }

    #[test]
    fn equal_amplitudes_give_flat_alpha() {
        let base = Oscillation { center_hz: 10.0, pre_amplitude: 10.0, post_amplitude: 10.0, onset_ms: 0.0 };
        let spec = EegSynthSpec {
            hc: base,
            mdd: base,
            participant_sd_db: 0.0,
            epochs_per_participant: 10,
            ..small()
        };
        let study = gen_eeg_epochs(&spec).unwrap();
        let m = compute_ersp(&study.sets[0], "E62", &ErspConfig::default()).unwrap();
        let fi = m.freq_indices(8.0, 12.0);
        let ti = m.time_indices(0.0, 600.0);
        let mean: f64 = fi.iter().flat_map(|&f| ti.iter().map(move |&t| (f, t))).map(|ft| m.power[ft]).sum::<f64>()
            / (fi.len() * ti.len()) as f64;
        assert!(mean.abs() < 0.5, "{mean}");
    }

    #[test]
    fn pink_noise_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = pink_noise(1000, &mut rng, &mut FftPlanner::new());
        let var = x.iter().map(|v| v * v).sum::<f64>() / 1000.0;
        assert!((var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn logits_are_monotone_in_planted_change() {
        let spec = EegSynthSpec { logit_noise_sd: 0.0, epochs_per_participant: 1, ..small() };
        let s = gen_eeg_epochs(&spec).unwrap();
        let mut pairs: Vec<(f64, f64)> = s.planted_db.keys().map(|k| (s.planted_db[k], s.logits[k])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn invalid_band() {
        let spec = EegSynthSpec { hc: Oscillation { center_hz: 45.0, ..small().hc }, ..small() };
        assert!(matches!(gen_eeg_epochs(&spec), Err(Error::Config(_))));
    }
}
