/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale between 0 Hz and
/// Nyquist, applied to a one-sided power spectrum of `fft_size / 2 + 1` bins.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `weights[m][k]`: weight of FFT bin `k` in filter `m`.
    weights: Vec<Vec<f64>>,
    center_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(num_filters: usize, fft_size: usize, sample_rate: u32) -> Self {
        let nyquist = sample_rate as f64 / 2.0;
        let max_mel = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..num_filters + 2)
            .map(|i| mel_to_hz(max_mel * i as f64 / (num_filters + 1) as f64))
            .collect();
        let bins = fft_size / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let weights = (0..num_filters)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        }
                    })
                    .collect()
            })
            .collect();
        MelFilterbank { weights, center_hz: edges[1..=num_filters].to_vec() }
    }

    pub fn num_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn center_hz(&self) -> &[f64] {
        &self.center_hz
    }

    pub fn weights(&self, filter: usize) -> &[f64] {
        &self.weights[filter]
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}
