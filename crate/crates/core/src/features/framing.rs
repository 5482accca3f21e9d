use crate::error::{Error, Result};

use super::SampleBuffer;

/// Number of full frames of `window` samples at hop `shift` that fit in `len`.
pub fn frame_count(len: usize, window: usize, shift: usize) -> usize {
    if len < window || window == 0 || shift == 0 {
        0
    } else {
        (len - window) / shift + 1
    }
}

pub(crate) fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

/// Cuts the signal into overlapping raw blocks. Tapering is left to the
/// individual descriptors, since ZCR and pitch work on the raw samples.
pub fn frame_signal(buf: &SampleBuffer, window_ms: f64, shift_ms: f64) -> Result<Vec<Vec<f64>>> {
    let window = ms_to_samples(window_ms, buf.sample_rate());
    let shift = ms_to_samples(shift_ms, buf.sample_rate()).max(1);
    let n = frame_count(buf.len(), window, shift);
    if n == 0 {
        return Err(Error::EmptySignal { len: buf.len(), window });
    }
    let samples = buf.samples();
    Ok((0..n).map(|k| samples[k * shift..k * shift + window].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buffer(len: usize) -> SampleBuffer {
        SampleBuffer::new((0..len).map(|i| (i as f64 * 0.01).sin()).collect(), 16_000).unwrap()
    }

    #[test]
    fn one_second_at_16k_gives_98_frames() {
        let frames = frame_signal(&buffer(16_000), 25.0, 10.0).unwrap();
        assert_eq!(frames.len(), 98);
        assert!(frames.iter().all(|f| f.len() == 400));
    }

    #[test]
    fn exactly_one_window() {
        assert_eq!(frame_signal(&buffer(400), 25.0, 10.0).unwrap().len(), 1);
    }

    #[test]
    fn shorter_than_window_is_empty_signal() {
        let err = frame_signal(&buffer(399), 25.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::EmptySignal { len: 399, window: 400 }));
    }

    #[test]
    fn blocks_are_raw_slices() {
        let buf = buffer(1000);
        let frames = frame_signal(&buf, 25.0, 10.0).unwrap();
        assert_eq!(frames[2][..], buf.samples()[320..720]);
    }

    proptest::proptest! {
        #[test]
        fn frame_count_formula(len in 1usize..5000, window in 1usize..600, shift in 1usize..300) {
            let n = frame_count(len, window, shift);
            if len < window {
                proptest::prop_assert_eq!(n, 0);
            } else {
                proptest::prop_assert_eq!(n, (len - window) / shift + 1);
                // last frame fits, one more would not
                proptest::prop_assert!((n - 1) * shift + window <= len);
                proptest::prop_assert!(n * shift + window > len);
            }
        }
    }
}
