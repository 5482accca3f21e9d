use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::mel::MelFilterbank;
use super::{DESCRIPTOR_DIM, ENERGY_FLOOR, NUM_MEL_FILTERS, NUM_MFCC};

/// Frames whose peak normalized autocorrelation falls below this are unvoiced.
pub const VOICING_THRESHOLD: f64 = 0.45;
pub const F0_MIN_HZ: f64 = 60.0;
pub const F0_MAX_HZ: f64 = 400.0;

const IDX_ENERGY: usize = 0;
const IDX_MFCC: usize = 1;
const IDX_F0: usize = 1 + NUM_MFCC;
const IDX_ZCR: usize = IDX_F0 + 1;
const IDX_VOICING: usize = IDX_ZCR + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    /// Hz, 0 for unvoiced frames.
    pub f0: f64,
    /// Peak normalized autocorrelation in [0, 1].
    pub voicing: f64,
}

/// Precomputed state for per-frame descriptor extraction at one sample rate
/// and window length.
pub struct DescriptorExtractor {
    sample_rate: u32,
    window_len: usize,
    fft_size: usize,
    hamming: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: MelFilterbank,
    /// `dct[n][m]`, orthonormal DCT-II rows for cepstral indices 1..=NUM_MFCC.
    dct: Vec<Vec<f64>>,
}

impl DescriptorExtractor {
    pub fn new(sample_rate: u32, window_len: usize) -> Self {
        let fft_size = window_len.next_power_of_two();
        let hamming = (0..window_len)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (window_len as f64 - 1.0).max(1.0)).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        let filterbank = MelFilterbank::new(NUM_MEL_FILTERS, fft_size, sample_rate);
        let m = NUM_MEL_FILTERS as f64;
        let dct = (1..=NUM_MFCC)
            .map(|n| {
                (0..NUM_MEL_FILTERS)
                    .map(|j| (2.0 / m).sqrt() * (PI * n as f64 * (j as f64 + 0.5) / m).cos())
                    .collect()
            })
            .collect();
        DescriptorExtractor { sample_rate, window_len, fft_size, hamming, fft, filterbank, dct }
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// One-sided power spectrum of the Hamming-tapered, zero-padded block.
    pub fn power_spectrum(&self, block: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = block
            .iter()
            .zip(&self.hamming)
            .map(|(x, w)| Complex::new(x * w, 0.0))
            .collect();
        buf.resize(self.fft_size, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        buf[..self.fft_size / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
    }

    /// Mel filterbank energies (linear scale).
    pub fn mel_energies(&self, block: &[f64]) -> Vec<f64> {
        self.filterbank.apply(&self.power_spectrum(block))
    }

    pub fn mfcc(&self, block: &[f64]) -> [f64; NUM_MFCC] {
        let log_mel: Vec<f64> = self.mel_energies(block).iter().map(|e| e.max(ENERGY_FLOOR).ln()).collect();
        let mut out = [0.0; NUM_MFCC];
        for (o, row) in out.iter_mut().zip(&self.dct) {
            *o = row.iter().zip(&log_mel).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn pitch(&self, block: &[f64]) -> PitchEstimate {
        estimate_pitch(block, self.sample_rate)
    }

    pub fn compute(&self, block: &[f64]) -> [f64; DESCRIPTOR_DIM] {
        debug_assert_eq!(block.len(), self.window_len);
        let mut d = [0.0; DESCRIPTOR_DIM];
        d[IDX_ENERGY] = log_energy(block);
        d[IDX_MFCC..IDX_MFCC + NUM_MFCC].copy_from_slice(&self.mfcc(block));
        let pitch = self.pitch(block);
        d[IDX_F0] = pitch.f0;
        d[IDX_ZCR] = zero_crossing_rate(block);
        d[IDX_VOICING] = pitch.voicing;
        d
    }
}

/// Descriptors of a single block. Builds the FFT plan and filterbank on every
/// call; use [`DescriptorExtractor`] for whole recordings.
pub fn compute_descriptors(block: &[f64], sample_rate: u32) -> [f64; DESCRIPTOR_DIM] {
    DescriptorExtractor::new(sample_rate, block.len()).compute(block)
}

pub(crate) fn log_energy(block: &[f64]) -> f64 {
    block.iter().map(|x| x * x).sum::<f64>().max(ENERGY_FLOOR).ln()
}

/// Fraction of adjacent sample pairs whose sign differs (zero counts as positive).
pub(crate) fn zero_crossing_rate(block: &[f64]) -> f64 {
    if block.len() < 2 {
        return 0.0;
    }
    let crossings = block.windows(2).filter(|p| (p[0] >= 0.0) != (p[1] >= 0.0)).count();
    crossings as f64 / (block.len() - 1) as f64
}

/// Normalized autocorrelation pitch tracker over 60-400 Hz.
pub(crate) fn estimate_pitch(block: &[f64], sample_rate: u32) -> PitchEstimate {
    let sr = sample_rate as f64;
    let n = block.len();
    let mean = block.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = block.iter().map(|v| v - mean).collect();
    if x.iter().map(|v| v * v).sum::<f64>() < ENERGY_FLOOR {
        return PitchEstimate { f0: 0.0, voicing: 0.0 };
    }
    let min_lag = (sr / F0_MAX_HZ).ceil() as usize;
    let max_lag = ((sr / F0_MIN_HZ).floor() as usize).min(n.saturating_sub(2));
    if min_lag >= max_lag {
        return PitchEstimate { f0: 0.0, voicing: 0.0 };
    }
    let nacf = |lag: usize| -> f64 {
        let (a, b) = (&x[..n - lag], &x[lag..]);
        let num: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
        let den = (a.iter().map(|v| v * v).sum::<f64>() * b.iter().map(|v| v * v).sum::<f64>()).sqrt();
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    // one extra lag on each side for peak interpolation
    let lo = min_lag.saturating_sub(1).max(1);
    let r: Vec<f64> = (lo..=max_lag + 1).map(|lag| if lag < n { nacf(lag) } else { 0.0 }).collect();
    let at = |lag: usize| r[lag - lo];
    let best = (min_lag..=max_lag).map(at).fold(f64::NEG_INFINITY, f64::max);
    let voicing = best.clamp(0.0, 1.0);
    if voicing < VOICING_THRESHOLD {
        return PitchEstimate { f0: 0.0, voicing };
    }
    // First local maximum close to the global one; guards against picking a
    // multiple of the true period.
    let lag = (min_lag..=max_lag)
        .find(|&l| at(l) >= 0.97 * best && at(l) >= at(l - 1) && at(l) >= at(l + 1))
        .unwrap_or_else(|| (min_lag..=max_lag).max_by(|&a, &b| at(a).total_cmp(&at(b))).unwrap());
    let (y0, y1, y2) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = y0 - 2.0 * y1 + y2;
    let offset = if denom.abs() > 1e-12 { (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    PitchEstimate { f0: sr / (lag as f64 + offset), voicing }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SR: u32 = 16_000;

    fn sine(freq: f64, len: usize, phase: f64) -> Vec<f64> {
        (0..len).map(|n| (2.0 * PI * freq * n as f64 / SR as f64 + phase).sin()).collect()
    }

    fn sawtooth(freq: f64, len: usize) -> Vec<f64> {
        let period = SR as f64 / freq;
        (0..len).map(|n| 2.0 * ((n as f64 / period).fract()) - 1.0).collect()
    }

    /// Independent pitch oracle: raw (unnormalized) autocorrelation argmax
    /// over the same lag range.
    fn autocorr_peak_hz(block: &[f64]) -> f64 {
        let n = block.len();
        let lags = (SR as f64 / 400.0).ceil() as usize..=(SR as f64 / 60.0) as usize;
        let best = lags
            .max_by(|&a, &b| {
                let ra: f64 = (0..n - a).map(|i| block[i] * block[i + a]).sum::<f64>() / (n - a) as f64;
                let rb: f64 = (0..n - b).map(|i| block[i] * block[i + b]).sum::<f64>() / (n - b) as f64;
                ra.total_cmp(&rb)
            })
            .unwrap();
        SR as f64 / best as f64
    }

    #[test]
    fn silence_hits_floors() {
        let d = compute_descriptors(&vec![0.0; 400], SR);
        assert_eq!(d[IDX_ENERGY], ENERGY_FLOOR.ln());
        assert_eq!(d[IDX_ZCR], 0.0);
        assert_eq!(d[IDX_F0], 0.0);
        assert!(d[IDX_VOICING] < VOICING_THRESHOLD);
        assert!(d.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn constant_block_has_no_crossings() {
        let d = compute_descriptors(&vec![0.3; 400], SR);
        assert_eq!(d[IDX_ZCR], 0.0);
        assert_eq!(d[IDX_F0], 0.0);
        assert!(d.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sawtooth_pitch_matches_autocorrelation_oracle() {
        let block = sawtooth(100.0, 400);
        let oracle = autocorr_peak_hz(&block);
        assert!((oracle - 100.0).abs() <= 2.0, "oracle {oracle}");
        let d = compute_descriptors(&block, SR);
        assert!((d[IDX_F0] - 100.0).abs() <= 2.0, "f0 {}", d[IDX_F0]);
        assert!((d[IDX_F0] - oracle).abs() <= 2.0);
        assert!(d[IDX_VOICING] > 0.9);
    }

    #[test]
    fn sine_pitch_in_range() {
        for f in [80.0, 150.0, 220.0, 310.0] {
            let p = estimate_pitch(&sine(f, 400, 0.3), SR);
            assert!((p.f0 - f).abs() / f < 0.02, "{f}: {}", p.f0);
        }
    }

    #[test]
    fn zcr_of_1khz_sine_matches_sign_change_count() {
        let block = sine(1000.0, 400, 0.1);
        let oracle = (1..400).filter(|&i| block[i - 1].signum() != block[i].signum()).count() as f64 / 399.0;
        let zcr = compute_descriptors(&block, SR)[IDX_ZCR];
        assert_eq!(zcr, oracle);
        assert!((zcr - 50.0 / 399.0).abs() <= 1.0 / 399.0);
    }

    #[test]
    fn pure_tone_mel_energy_peaks_in_containing_filter() {
        let ex = DescriptorExtractor::new(SR, 400);
        for tone in [300.0, 1000.0, 2500.0, 5000.0] {
            let block = sine(tone, 400, 0.0);
            let energies = ex.mel_energies(&block);

            // brute force: explicit DFT power at every bin dotted with the filter weights
            let fft_size = ex.fft_size();
            let win: Vec<f64> = (0..400).map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / 399.0).cos()).collect();
            let power: Vec<f64> = (0..=fft_size / 2)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for n in 0..400 {
                        let a = -2.0 * PI * (k * n) as f64 / fft_size as f64;
                        re += block[n] * win[n] * a.cos();
                        im += block[n] * win[n] * a.sin();
                    }
                    re * re + im * im
                })
                .collect();
            for (m, e) in energies.iter().enumerate() {
                let oracle: f64 = ex.filterbank().weights(m).iter().zip(&power).map(|(w, p)| w * p).sum();
                assert!((e - oracle).abs() <= 1e-8 * oracle.max(1.0), "filter {m}: {e} vs {oracle}");
            }

            let argmax = (0..energies.len()).max_by(|&a, &b| energies[a].total_cmp(&energies[b])).unwrap();
            // the filter whose triangle is highest at the tone's FFT bin
            let bin = (tone * fft_size as f64 / SR as f64).round() as usize;
            let nearest = (0..energies.len())
                .max_by(|&a, &b| ex.filterbank().weights(a)[bin].total_cmp(&ex.filterbank().weights(b)[bin]))
                .unwrap();
            assert_eq!(argmax, nearest, "tone {tone}");
        }
    }

    #[test]
    fn one_hop_shift_moves_frames_by_one() {
        use super::super::{frame_signal, SampleBuffer};
        let signal: Vec<f64> = (0..4000).map(|n| ((n as f64) * 0.037).sin() * (1.0 + (n as f64 * 0.001).cos())).collect();
        let a = frame_signal(&SampleBuffer::new(signal.clone(), SR).unwrap(), 25.0, 10.0).unwrap();
        let b = frame_signal(&SampleBuffer::new(signal[160..].to_vec(), SR).unwrap(), 25.0, 10.0).unwrap();
        let ex = DescriptorExtractor::new(SR, 400);
        for k in 0..b.len() {
            let (da, db) = (ex.compute(&a[k + 1]), ex.compute(&b[k]));
            assert_eq!(da[IDX_ENERGY], db[IDX_ENERGY]);
            assert_eq!(da[IDX_ZCR], db[IDX_ZCR]);
            for i in IDX_MFCC..IDX_MFCC + NUM_MFCC {
                assert!((da[i] - db[i]).abs() < 1e-6);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn descriptors_always_finite(samples in proptest::collection::vec(-1.0f64..1.0, 400)) {
            let d = compute_descriptors(&samples, SR);
            proptest::prop_assert_eq!(d.len(), DESCRIPTOR_DIM);
            proptest::prop_assert!(d.iter().all(|v| v.is_finite()));
        }
    }
}
