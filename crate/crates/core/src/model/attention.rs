//! Cosine-similarity softmax attention used at both the segment level
//! (rows of a segment against the segment mean) and the speaker level
//! (segment representations against the other speech type's global mean).
//!
//! Each row is rescaled by `1 + w`, where `w` is the softmax over rows of the
//! cosine between the row and the reference. Directions are preserved.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::segment::Segment;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    /// Rows scaled by `1 + weights[k]`.
    pub enhanced: Array2<f64>,
    pub weights: Array1<f64>,
    pub cosines: Array1<f64>,
}

fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(&b) / (na * nb)
    }
}

pub fn cosine_attention(rows: ArrayView2<f64>, reference: ArrayView1<f64>) -> AttentionOutput {
    let cosines: Array1<f64> = rows.rows().into_iter().map(|r| cosine(r, reference)).collect();
    let max = cosines.fold(f64::NEG_INFINITY, |m, &c| m.max(c));
    let mut weights = cosines.mapv(|c| (c - max).exp());
    let total = weights.sum();
    weights /= total;
    let mut enhanced = rows.to_owned();
    for (mut row, &w) in enhanced.rows_mut().into_iter().zip(&weights) {
        row *= 1.0 + w;
    }
    AttentionOutput { enhanced, weights, cosines }
}

/// Gradients of the attention output with respect to the rows and the
/// reference, given `d_enhanced = d loss / d enhanced`.
pub fn cosine_attention_backward(
    rows: ArrayView2<f64>,
    reference: ArrayView1<f64>,
    out: &AttentionOutput,
    d_enhanced: ArrayView2<f64>,
) -> (Array2<f64>, Array1<f64>) {
    let n = rows.nrows();
    let mut d_rows = Array2::zeros(rows.raw_dim());
    let mut d_ref = Array1::zeros(reference.len());
    let d_w: Array1<f64> = (0..n).map(|k| d_enhanced.row(k).dot(&rows.row(k))).collect();
    let mean_dw = out.weights.dot(&d_w);
    let q_norm = norm(reference);
    for k in 0..n {
        let x = rows.row(k);
        let w = out.weights[k];
        let mut dx = d_rows.row_mut(k);
        dx.scaled_add(1.0 + w, &d_enhanced.row(k));
        let d_cos = w * (d_w[k] - mean_dw);
        let x_norm = norm(x);
        if q_norm == 0.0 || x_norm == 0.0 || d_cos == 0.0 {
            continue;
        }
        let c = out.cosines[k];
        let inv = 1.0 / (q_norm * x_norm);
        dx.scaled_add(d_cos * inv, &reference);
        dx.scaled_add(-d_cos * c / (x_norm * x_norm), &x);
        d_ref.scaled_add(d_cos * inv, &x);
        d_ref.scaled_add(-d_cos * c / (q_norm * q_norm), &reference);
    }
    (d_rows, d_ref)
}

/// Elementwise mean of the segment's rows.
pub fn segment_average(seg: &Segment) -> Array1<f64> {
    seg.vectors.mean_axis(Axis(0)).expect("segments are non-empty")
}

/// Segment-level attention: each frame is reweighted by its cosine alignment
/// with the segment's average frame.
pub fn itmla_enhance(seg: &Segment) -> AttentionOutput {
    itmla_rows(seg.vectors.view())
}

pub(crate) fn itmla_rows(rows: ArrayView2<f64>) -> AttentionOutput {
    let avg = rows.mean_axis(Axis(0)).expect("segments are non-empty");
    cosine_attention(rows, avg.view())
}

/// Speaker-level attention over segment representations, guided by the
/// global average of the other speech type.
pub fn ctga_enhance(reprs: ArrayView2<f64>, reference: ArrayView1<f64>) -> AttentionOutput {
    cosine_attention(reprs, reference)
}

#[cfg(test)]
mod tests {
    use ndarray::{array, s};
    use proptest::prelude::*;

    use super::*;

    fn segment(rows: Array2<f64>) -> Segment {
        Segment { vectors: rows, source_recording_id: "r".into(), offset: 0 }
    }

    #[test]
    fn average_of_identical_rows() {
        let seg = segment(Array2::from_shape_fn((128, 32), |(_, j)| j as f64 - 3.0));
        let avg = segment_average(&seg);
        assert!(avg.iter().enumerate().all(|(j, &v)| v == j as f64 - 3.0));
    }

    #[test]
    fn average_of_two_basis_rows() {
        let mut rows = Array2::zeros((2, 32));
        rows[[0, 0]] = 1.0;
        rows[[1, 1]] = 1.0;
        let avg = segment_average(&segment(rows));
        assert_eq!(avg[0], 0.5);
        assert_eq!(avg[1], 0.5);
        assert!(avg.slice(s![2..]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn average_matches_summation_oracle() {
        let rows = Array2::from_shape_fn((128, 32), |(i, j)| ((i * 31 + j * 7) as f64 * 0.013).sin());
        let avg = segment_average(&segment(rows.clone()));
        for j in 0..32 {
            let mut acc = 0.0;
            for i in 0..128 {
                acc += rows[[i, j]];
            }
            assert!((avg[j] - acc / 128.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_rows_get_uniform_weights() {
        let m = 16;
        let rows = Array2::from_shape_fn((m, 4), |(_, j)| j as f64 + 0.5);
        let out = itmla_rows(rows.view());
        for k in 0..m {
            assert_eq!(out.weights[k], 1.0 / m as f64);
            assert_eq!(out.enhanced.row(k), rows.row(k).mapv(|v| v * (1.0 + 1.0 / m as f64)));
        }
    }

    #[test]
    fn orthogonal_pair_hand_values() {
        let out = itmla_rows(array![[1.0, 0.0], [0.0, 1.0]].view());
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.cosines[0] - c).abs() < 1e-15 && (out.cosines[1] - c).abs() < 1e-15);
        assert_eq!(out.weights, array![0.5, 0.5]);
        assert_eq!(out.enhanced, array![[1.5, 0.0], [0.0, 1.5]]);
    }

    #[test]
    fn zero_row_stays_zero() {
        let out = itmla_rows(array![[1.0, 2.0], [0.0, 0.0], [2.0, 1.0]].view());
        assert_eq!(out.cosines[1], 0.0);
        assert_eq!(out.enhanced.row(1), array![0.0, 0.0]);
    }

    #[test]
    fn ctga_hand_softmax() {
        let reprs = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let out = ctga_enhance(reprs.view(), array![1.0, 0.0, 0.0].view());
        let e = std::f64::consts::E;
        assert_eq!(out.cosines, array![1.0, 0.0]);
        assert!((out.weights[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((out.weights[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert!((out.weights[0] - 0.731).abs() < 1e-3);
    }

    #[test]
    fn singleton_doubles() {
        let out = ctga_enhance(array![[0.3, -0.4]].view(), array![1.0, 1.0].view());
        assert_eq!(out.weights[0], 1.0);
        assert_eq!(out.enhanced, array![[0.6, -0.8]]);
    }

    #[test]
    fn parallel_identical_reprs_scale_uniformly() {
        let reprs = Array2::from_shape_fn((3, 2), |(_, j)| [2.0, 1.0][j]);
        let out = ctga_enhance(reprs.view(), array![4.0, 2.0].view());
        for k in 0..3 {
            assert!((out.weights[k] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let rows = Array2::from_shape_fn((4, 3), |(i, j)| ((i * 3 + j) as f64 * 0.77).sin() + 0.2);
        let q = array![0.4, -0.9, 0.3];
        let upstream = Array2::from_shape_fn((4, 3), |(i, j)| ((i + 5 * j) as f64 * 0.41).cos());
        let loss = |r: &Array2<f64>, q: &Array1<f64>| (&cosine_attention(r.view(), q.view()).enhanced * &upstream).sum();
        let out = cosine_attention(rows.view(), q.view());
        let (d_rows, d_ref) = cosine_attention_backward(rows.view(), q.view(), &out, upstream.view());
        let eps = 1e-6;
        for i in 0..4 {
            for j in 0..3 {
                let (mut p, mut m) = (rows.clone(), rows.clone());
                p[[i, j]] += eps;
                m[[i, j]] -= eps;
                let fd = (loss(&p, &q) - loss(&m, &q)) / (2.0 * eps);
                assert!((fd - d_rows[[i, j]]).abs() < 1e-8, "row {i},{j}: {fd} vs {}", d_rows[[i, j]]);
            }
        }
        for j in 0..3 {
            let (mut p, mut m) = (q.clone(), q.clone());
            p[j] += eps;
            m[j] -= eps;
            let fd = (loss(&rows, &p) - loss(&rows, &m)) / (2.0 * eps);
            assert!((fd - d_ref[j]).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn weights_positive_normalized_and_directions_kept(
            data in prop::collection::vec(-50.0f64..50.0, 2 * 5..=20 * 5),
            q in prop::collection::vec(-5.0f64..5.0, 5),
        ) {
            let n = data.len() / 5;
            let rows = Array2::from_shape_vec((n, 5), data[..n * 5].to_vec()).unwrap();
            let out = cosine_attention(rows.view(), Array1::from(q).view());
            prop_assert!(out.weights.iter().all(|&w| w > 0.0));
            prop_assert!((out.weights.sum() - 1.0).abs() < 1e-9);
            for k in 0..n {
                let scale = 1.0 + out.weights[k];
                for j in 0..5 {
                    prop_assert!((out.enhanced[[k, j]] - scale * rows[[k, j]]).abs() <= 1e-12 * rows[[k, j]].abs().max(1.0));
                }
            }
        }
    }
}
