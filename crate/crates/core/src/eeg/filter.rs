//! Biquad sections (RBJ cookbook forms) and zero-phase forward-backward filtering.

use std::f64::consts::PI;

/// Normalized second-order section, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

/// Section Qs of a 4th-order Butterworth response.
const BUTTERWORTH4_Q: [f64; 2] = [0.541_196_100_146_197, 1.306_562_964_876_376_6];

impl Biquad {
    fn normalized(b: [f64; 3], a0: f64, a1: f64, a2: f64) -> Self {
        Biquad { b: [b[0] / a0, b[1] / a0, b[2] / a0], a: [a1 / a0, a2 / a0] }
    }

    pub fn lowpass(cutoff: f64, q: f64, fs: f64) -> Self {
        let w = 2.0 * PI * cutoff / fs;
        let (sw, cw) = w.sin_cos();
        let alpha = sw / (2.0 * q);
        let b1 = 1.0 - cw;
        Self::normalized([b1 / 2.0, b1, b1 / 2.0], 1.0 + alpha, -2.0 * cw, 1.0 - alpha)
    }

    pub fn highpass(cutoff: f64, q: f64, fs: f64) -> Self {
        let w = 2.0 * PI * cutoff / fs;
        let (sw, cw) = w.sin_cos();
        let alpha = sw / (2.0 * q);
        let b1 = 1.0 + cw;
        Self::normalized([b1 / 2.0, -b1, b1 / 2.0], 1.0 + alpha, -2.0 * cw, 1.0 - alpha)
    }

    /// Band-stop centred at `center` with -3 dB bandwidth `width` (Hz).
    pub fn notch(center: f64, width: f64, fs: f64) -> Self {
        let w = 2.0 * PI * center / fs;
        let (sw, cw) = w.sin_cos();
        let alpha = sw / (2.0 * (center / width));
        Self::normalized([1.0, -2.0 * cw, 1.0], 1.0 + alpha, -2.0 * cw, 1.0 - alpha)
    }

    /// Steady-state response to a unit step.
    pub fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Magnitude response at `freq` Hz.
    pub fn magnitude(&self, freq: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq / fs;
        let z1 = (w.cos(), -w.sin());
        let z2 = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b[0] + self.b[1] * z1.0 + self.b[2] * z2.0, self.b[1] * z1.1 + self.b[2] * z2.1);
        let den = (1.0 + self.a[0] * z1.0 + self.a[1] * z2.0, self.a[0] * z1.1 + self.a[1] * z2.1);
        num.0.hypot(num.1) / den.0.hypot(den.1)
    }

    /// Transposed direct form II state that holds a constant input of 1 in steady state.
    fn step_state(&self) -> [f64; 2] {
        let h = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * h;
        [h - self.b[0], z2]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + z[0];
            z[0] = self.b[1] * input - self.a[0] * y + z[1];
            z[1] = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

pub fn butterworth4_lowpass(cutoff: f64, fs: f64) -> [Biquad; 2] {
    BUTTERWORTH4_Q.map(|q| Biquad::lowpass(cutoff, q, fs))
}

pub fn butterworth4_highpass(cutoff: f64, fs: f64) -> [Biquad; 2] {
    BUTTERWORTH4_Q.map(|q| Biquad::highpass(cutoff, q, fs))
}

/// Level the filter state is assumed to have settled at before the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeInit {
    /// The first sample, as for a signal that was constant before it.
    #[default]
    FirstSample,
    /// The mean of the pass input; suits high-pass sections whose time
    /// constant exceeds the record length.
    Mean,
}

/// Runs a section cascade forward with initial states in steady state at the `init` level.
fn cascade(sections: &[Biquad], x: &mut [f64], init: EdgeInit) {
    let Some(&first) = x.first() else { return };
    let mut level = match init {
        EdgeInit::FirstSample => first,
        EdgeInit::Mean => x.iter().sum::<f64>() / x.len() as f64,
    };
    for s in sections {
        let z = s.step_state().map(|v| v * level);
        s.run(x, z);
        level *= s.dc_gain();
    }
}

/// Zero-phase filtering: odd-symmetric edge extension, forward pass,
/// reversed pass, then the extension is trimmed.
pub fn filtfilt(sections: &[Biquad], signal: &[f64]) -> Vec<f64> {
    filtfilt_with(sections, signal, EdgeInit::FirstSample)
}

pub fn filtfilt_with(sections: &[Biquad], signal: &[f64], init: EdgeInit) -> Vec<f64> {
    let n = signal.len();
    if n < 2 || sections.is_empty() {
        return signal.to_vec();
    }
    let pad = (6 * sections.len() + 3).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * signal[0] - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * signal[n - 1] - signal[n - 1 - i]));
    cascade(sections, &mut ext, init);
    ext.reverse();
    cascade(sections, &mut ext, init);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}
