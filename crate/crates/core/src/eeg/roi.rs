use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ersp::ErspMatrix;
use crate::error::{Error, Result};

const FRONTAL: [&str; 12] = ["E23", "E18", "E16", "E10", "E3", "E19", "E11", "E4", "E20", "E12", "E5", "E118"];
const PARIETO_OCCIPITAL: [&str; 17] = [
    "E62", "E60", "E67", "E72", "E77", "E85", "E59", "E66", "E71", "E76", "E84", "E91", "E65", "E70", "E75", "E83",
    "E90",
];

/// Named electrode group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub name: String,
    pub channels: Vec<String>,
}

impl RoiSpec {
    /// The twelve named frontal electrodes, plus `extra` when the thirteenth is known.
    pub fn frontal(extra: Option<&str>) -> Self {
        let mut channels: Vec<String> = FRONTAL.iter().map(|s| s.to_string()).collect();
        channels.extend(extra.map(str::to_string));
        RoiSpec { name: "frontal".into(), channels }
    }

    pub fn parieto_occipital() -> Self {
        RoiSpec { name: "parieto-occipital".into(), channels: PARIETO_OCCIPITAL.iter().map(|s| s.to_string()).collect() }
    }

    pub fn defaults() -> Vec<RoiSpec> {
        vec![Self::frontal(None), Self::parieto_occipital()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Theta,
    Alpha,
}

impl Band {
    pub const ALL: [Band; 2] = [Band::Theta, Band::Alpha];

    pub fn range_hz(self) -> (f64, f64) {
        match self {
            Band::Theta => (3.0, 7.0),
            Band::Alpha => (8.0, 12.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeWindow {
    Early,
    Late,
}

impl TimeWindow {
    pub const ALL: [TimeWindow; 2] = [TimeWindow::Early, TimeWindow::Late];

    pub fn range_ms(self) -> (f64, f64) {
        match self {
            TimeWindow::Early => (0.0, 200.0),
            TimeWindow::Late => (400.0, 600.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BandWindow {
    pub band: Band,
    pub window: TimeWindow,
}

impl BandWindow {
    pub fn all() -> Vec<BandWindow> {
        Band::ALL.iter().flat_map(|&band| TimeWindow::ALL.iter().map(move |&window| BandWindow { band, window })).collect()
    }
}

impl fmt::Display for BandWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let band = match self.band {
            Band::Theta => "theta",
            Band::Alpha => "alpha",
        };
        let window = match self.window {
            TimeWindow::Early => "early",
            TimeWindow::Late => "late",
        };
        write!(f, "{band}_{window}")
    }
}

/// Mean dB over ROI channels, band frequencies and window times.
pub fn band_power(ersps: &BTreeMap<String, ErspMatrix>, roi: &RoiSpec, bw: BandWindow) -> Result<f64> {
    let (f_lo, f_hi) = bw.band.range_hz();
    let (t_lo, t_hi) = bw.window.range_ms();
    let mut sum = 0.0;
    let mut count = 0usize;
    for ch in &roi.channels {
        let m = ersps
            .get(ch)
            .ok_or_else(|| Error::Montage(format!("ROI `{}` channel `{ch}` has no ERSP", roi.name)))?;
        let fi = m.freq_indices(f_lo, f_hi);
        let ti = m.time_indices(t_lo, t_hi);
        if fi.is_empty() || ti.is_empty() {
            return Err(Error::NoData(format!("{bw} has no time-frequency bins for channel `{ch}`")));
        }
        for &f in &fi {
            for &t in &ti {
                sum += m.power[[f, t]];
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Montage(format!("ROI `{}` is empty", roi.name)));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn matrix(ch: &str, f: impl FnMut((usize, usize)) -> f64) -> ErspMatrix {
        let freqs: Vec<f64> = (1..=24).map(|k| k as f64 * 1.25).collect();
        let times_ms: Vec<f64> = (0..20).map(|k| -488.0 + 104.0 * k as f64).collect();
        ErspMatrix { channel: ch.into(), power: Array2::from_shape_fn((24, 20), f), freqs, times_ms }
    }

    fn roi(chs: &[&str]) -> RoiSpec {
        RoiSpec { name: "test".into(), channels: chs.iter().map(|s| s.to_string()).collect() }
    }

    #[test]
    fn defaults_have_expected_sizes() {
        assert_eq!(RoiSpec::frontal(None).channels.len(), 12);
        assert_eq!(RoiSpec::frontal(Some("E24")).channels.len(), 13);
        assert_eq!(RoiSpec::parieto_occipital().channels.len(), 17);
        assert_eq!(BandWindow::all().len(), 4);
    }

    #[test]
    fn constant_and_two_channel_means() {
        let bw = BandWindow { band: Band::Alpha, window: TimeWindow::Late };
        let one: BTreeMap<_, _> = [("A".to_string(), matrix("A", |_| 3.0))].into();
        assert_eq!(band_power(&one, &roi(&["A"]), bw).unwrap(), 3.0);
        let two: BTreeMap<_, _> =
            [("A".to_string(), matrix("A", |_| 2.0)), ("B".to_string(), matrix("B", |_| 4.0))].into();
        assert_eq!(band_power(&two, &roi(&["A", "B"]), bw).unwrap(), 3.0);
        assert!(matches!(band_power(&two, &roi(&["A", "C"]), bw), Err(Error::Montage(_))));
    }

    #[test]
    fn matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ersps = BTreeMap::new();
        for ch in ["A", "B", "C"] {
            let vals: Vec<f64> = (0..24 * 20).map(|_| rng.gen_range(-5.0..5.0)).collect();
            ersps.insert(ch.to_string(), matrix(ch, |(f, t)| vals[f * 20 + t]));
        }
        for bw in BandWindow::all() {
            let (f_lo, f_hi) = bw.band.range_hz();
            let (t_lo, t_hi) = bw.window.range_ms();
            let mut sum = 0.0;
            let mut n = 0.0;
            for ch in ["A", "B", "C"] {
                let m = &ersps[ch];
                for (fi, f) in m.freqs.iter().enumerate() {
                    for (ti, t) in m.times_ms.iter().enumerate() {
                        if (f_lo..=f_hi).contains(f) && (t_lo..=t_hi).contains(t) {
                            sum += m.power[[fi, ti]];
                            n += 1.0;
                        }
                    }
                }
            }
            let got = band_power(&ersps, &roi(&["A", "B", "C"]), bw).unwrap();
            assert!((got - sum / n).abs() < 1e-12);
        }
    }
}
