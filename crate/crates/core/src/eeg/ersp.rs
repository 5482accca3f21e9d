use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::EpochSet;
use crate::error::{Error, Result};

/// How the baseline reference power is formed before taking the dB ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    /// Geometric mean of the baseline power (mean taken in the log domain),
    /// so the baseline window averages exactly 0 dB.
    #[default]
    LogMean,
    /// Arithmetic mean of the baseline power.
    PowerMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErspConfig {
    /// Hann window length in samples.
    pub window: usize,
    /// Fractional overlap between consecutive windows.
    pub overlap: f64,
    pub freq_step_hz: f64,
    pub freq_min_hz: f64,
    pub freq_max_hz: f64,
    /// Window-centre times (ms) averaged as baseline.
    pub baseline_ms: (f64, f64),
    pub baseline_mode: BaselineMode,
}

impl Default for ErspConfig {
    fn default() -> Self {
        ErspConfig {
            window: 256,
            overlap: 0.9,
            freq_step_hz: 1.25,
            freq_min_hz: 1.0,
            freq_max_hz: 30.0,
            baseline_ms: (-300.0, -100.0),
            baseline_mode: BaselineMode::LogMean,
        }
    }
}

impl ErspConfig {
    pub fn hop(&self) -> usize {
        ((self.window as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }

    /// Multiples of the step within `[freq_min, freq_max]`.
    pub fn freqs(&self) -> Vec<f64> {
        let first = (self.freq_min_hz / self.freq_step_hz).ceil() as usize;
        let last = (self.freq_max_hz / self.freq_step_hz + 1e-9).floor() as usize;
        (first.max(1)..=last).map(|k| k as f64 * self.freq_step_hz).collect()
    }

    /// Smallest FFT length at least the window whose bin spacing divides the step.
    fn fft_len(&self, fs: f64) -> Result<(usize, usize)> {
        let base = fs / self.freq_step_hz;
        if (base - base.round()).abs() > 1e-9 || base < 1.0 {
            return Err(Error::Config(format!("{fs} Hz cannot place bins on a {} Hz grid", self.freq_step_hz)));
        }
        let base = base.round() as usize;
        let mult = self.window.div_ceil(base);
        Ok((base * mult, mult))
    }
}

/// Baseline-corrected power (dB) for one channel: `power[[f, t]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErspMatrix {
    pub channel: String,
    pub freqs: Vec<f64>,
    /// Window-centre times in ms relative to onset.
    pub times_ms: Vec<f64>,
    pub power: Array2<f64>,
}

impl ErspMatrix {
    pub fn freq_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.freqs.len()).filter(|&i| self.freqs[i] >= lo - 1e-9 && self.freqs[i] <= hi + 1e-9).collect()
    }

    pub fn time_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.times_ms.len()).filter(|&i| self.times_ms[i] >= lo - 1e-9 && self.times_ms[i] <= hi + 1e-9).collect()
    }
}

/// Epoch-averaged short-time Fourier power of one channel, in dB relative to
/// the baseline window.
pub fn compute_ersp(set: &EpochSet, channel: &str, cfg: &ErspConfig) -> Result<ErspMatrix> {
    if set.epochs.is_empty() {
        return Err(Error::NoData(format!("{}: no surviving epochs", set.participant_id)));
    }
    let ch = set.channel_index(channel)?;
    let n = set.n_samples();
    if n < cfg.window {
        return Err(Error::TooShort { needed: cfg.window, got: n });
    }
    let fs = set.sample_rate;
    let (nfft, bin_stride) = cfg.fft_len(fs)?;
    let freqs = cfg.freqs();
    let bins: Vec<usize> = freqs.iter().map(|f| (f / cfg.freq_step_hz).round() as usize * bin_stride).collect();
    if bins.iter().any(|&b| b > nfft / 2) {
        return Err(Error::Config("frequency grid exceeds Nyquist".into()));
    }
    let hop = cfg.hop();
    let starts: Vec<usize> = (0..=(n - cfg.window)).step_by(hop).collect();
    let half = (cfg.window as f64 - 1.0) / 2.0;
    let times_ms: Vec<f64> =
        starts.iter().map(|&s| (s as f64 + half - set.t0_index as f64) * 1000.0 / fs).collect();
    let hann: Vec<f64> =
        (0..cfg.window).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (cfg.window - 1) as f64).cos()).collect();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let mut power = Array2::<f64>::zeros((freqs.len(), starts.len()));
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    for epoch in &set.epochs {
        let row = epoch.row(ch);
        for (t, &s) in starts.iter().enumerate() {
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (k, w) in hann.iter().enumerate() {
                buf[k].re = row[s + k] * w;
            }
            fft.process(&mut buf);
            for (fi, &b) in bins.iter().enumerate() {
                power[[fi, t]] += buf[b].norm_sqr();
            }
        }
    }
    power /= set.epochs.len() as f64;

    let base_idx: Vec<usize> = (0..times_ms.len())
        .filter(|&i| times_ms[i] >= cfg.baseline_ms.0 - 1e-9 && times_ms[i] <= cfg.baseline_ms.1 + 1e-9)
        .collect();
    if base_idx.is_empty() {
        return Err(Error::Config(format!(
            "no analysis window is centred inside the baseline {:?} ms",
            cfg.baseline_ms
        )));
    }
    let floor = f64::MIN_POSITIVE;
    for mut row in power.rows_mut() {
        let reference = match cfg.baseline_mode {
            BaselineMode::LogMean => {
                (base_idx.iter().map(|&i| row[i].max(floor).ln()).sum::<f64>() / base_idx.len() as f64).exp()
            }
            BaselineMode::PowerMean => base_idx.iter().map(|&i| row[i]).sum::<f64>() / base_idx.len() as f64,
        };
        row.mapv_inplace(|p| 10.0 * (p.max(floor) / reference.max(floor)).log10());
    }
    Ok(ErspMatrix { channel: channel.to_string(), freqs, times_ms, power })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eeg::{Group, StimulusCondition};

    fn sinusoid_set(freq: f64, pre: f64, post: f64, epochs: usize) -> EpochSet {
        let fs = 250.0;
        let t0 = 250;
        let epochs = (0..epochs)
            .map(|k| {
                let phase = k as f64 * 0.7;
                Array2::from_shape_fn((1, 750), |(_, i)| {
                    let amp = if i >= t0 { post } else { pre };
                    amp * (2.0 * PI * freq * (i as f64) / fs + phase).sin()
                })
            })
            .collect();
        EpochSet {
            participant_id: "p".into(),
            group: Group::Hc,
            condition: StimulusCondition::Happy,
            epochs,
            channels: vec!["E1".into()],
            sample_rate: fs,
            t0_index: t0,
            valid: true,
        }
    }

    fn band_mean(m: &ErspMatrix, t_lo: f64) -> f64 {
        let fi = m.freq_indices(8.0, 12.0);
        let ti = m.time_indices(t_lo, f64::INFINITY);
        let mut s = 0.0;
        for &f in &fi {
            for &t in &ti {
                s += m.power[[f, t]];
            }
        }
        s / (fi.len() * ti.len()) as f64
    }

    #[test]
    fn grid_and_layout() {
        let m = compute_ersp(&sinusoid_set(10.0, 1.0, 1.0, 1), "E1", &ErspConfig::default()).unwrap();
        assert_eq!(m.freqs.len(), 24);
        assert_eq!(m.freqs[0], 1.25);
        assert_eq!(*m.freqs.last().unwrap(), 30.0);
        assert_eq!(m.power.dim(), (24, m.times_ms.len()));
        assert_eq!(ErspConfig::default().hop(), 26);
    }

    #[test]
    fn stationary_oscillation_is_flat() {
        let m = compute_ersp(&sinusoid_set(10.0, 5.0, 5.0, 4), "E1", &ErspConfig::default()).unwrap();
        let fi = m.freq_indices(8.0, 12.0);
        for &f in &fi {
            for t in 0..m.times_ms.len() {
                assert!(m.power[[f, t]].abs() < 0.1);
            }
        }
    }

    #[test]
    fn baseline_averages_to_zero() {
        let cfg = ErspConfig::default();
        let m = compute_ersp(&sinusoid_set(10.0, 2.0, 4.0, 3), "E1", &cfg).unwrap();
        let bi = m.time_indices(cfg.baseline_ms.0, cfg.baseline_ms.1);
        assert!(!bi.is_empty());
        for f in 0..m.freqs.len() {
            let mean = bi.iter().map(|&t| m.power[[f, t]]).sum::<f64>() / bi.len() as f64;
            assert!(mean.abs() < 1e-6);
        }
    }

    #[test]
    fn short_window_recovers_analytic_step() {
        let cfg = ErspConfig { window: 50, ..Default::default() };
        let up = compute_ersp(&sinusoid_set(10.0, 2.0, 4.0, 4), "E1", &cfg).unwrap();
        assert!((band_mean(&up, 100.0) - 10.0 * 4f64.log10()).abs() < 0.3, "{}", band_mean(&up, 100.0));
        let down = compute_ersp(&sinusoid_set(10.0, 4.0, 2.0, 4), "E1", &cfg).unwrap();
        assert!((band_mean(&down, 100.0) + 10.0 * 4f64.log10()).abs() < 0.3);
    }

    #[test]
    fn amplitude_scale_invariance() {
        let a = sinusoid_set(7.0, 3.0, 1.0, 2);
        let mut b = a.clone();
        b.epochs.iter_mut().for_each(|e| *e *= 17.5);
        let ma = compute_ersp(&a, "E1", &ErspConfig::default()).unwrap();
        let mb = compute_ersp(&b, "E1", &ErspConfig::default()).unwrap();
        for (x, y) in ma.power.iter().zip(mb.power.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        let mut empty = sinusoid_set(10.0, 1.0, 1.0, 1);
        empty.epochs.clear();
        assert!(matches!(compute_ersp(&empty, "E1", &ErspConfig::default()), Err(Error::NoData(_))));
        let one = sinusoid_set(10.0, 1.0, 1.0, 1);
        assert!(matches!(compute_ersp(&one, "E9", &ErspConfig::default()), Err(Error::Montage(_))));
    }
}
