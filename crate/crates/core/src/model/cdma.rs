//! The three-stage cross-data multilevel attention graph for one emotional
//! condition: segment attention and stage-1 LSTMs per speech type,
//! cross-type attention and stage-2 LSTMs, cross-type fusion heads, and the
//! six-way probability average.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::attention::{cosine_attention, cosine_attention_backward, itmla_rows, AttentionOutput};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, cross_entropy_grad, prefixed, DenseSoftmax, Lstm, LstmTrace, ParamView, Parameterized};
use crate::segment::SegmentSet;

/// The six probability estimates for one speaker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbSet {
    /// Read speech, stage 1 (segment proportion).
    pub p_c: f64,
    /// Spontaneous speech, stage 1.
    pub p_o: f64,
    /// Read speech after cross-type attention.
    pub p_t: f64,
    /// Spontaneous speech after cross-type attention.
    pub p_d: f64,
    /// Fusion of the stage-1 global averages.
    pub p_f: f64,
    /// Fusion of the attention-enhanced global averages.
    pub p_fstar: f64,
}

impl ProbSet {
    pub fn to_array(&self) -> [f64; 6] {
        [self.p_c, self.p_o, self.p_t, self.p_d, self.p_f, self.p_fstar]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        ProbSet { p_c: a[0], p_o: a[1], p_t: a[2], p_d: a[3], p_f: a[4], p_fstar: a[5] }
    }
}

/// Mean of the six estimates and the hard decision `p_hat > 0.5`.
pub fn aggregate(ps: &ProbSet) -> (f64, Label) {
    let p_hat = ps.to_array().iter().sum::<f64>() / 6.0;
    (p_hat, Label::from_bool(p_hat > 0.5))
}

/// Summed per-head cross-entropy, averaged over the `K` speakers of a batch.
pub fn cdma_loss(prob_sets: &[ProbSet], labels: &[Label]) -> Result<f64> {
    if prob_sets.is_empty() || prob_sets.len() != labels.len() {
        return Err(Error::Shape(format!("{} probability sets for {} labels", prob_sets.len(), labels.len())));
    }
    let total: f64 = prob_sets
        .iter()
        .zip(labels)
        .map(|(ps, y)| ps.to_array().iter().map(|&p| cross_entropy(p, y.target())).sum::<f64>())
        .sum();
    Ok(total / prob_sets.len() as f64)
}

/// Combines the three per-condition decisions.
pub fn majority_vote(votes: &[Label]) -> Result<Label> {
    if votes.len() != 3 {
        return Err(Error::Arity { expected: 3, got: votes.len() });
    }
    Ok(Label::from_bool(votes.iter().filter(|v| v.is_depressed()).count() >= 2))
}

/// One speaker's inputs with segment-level attention already applied
/// (the attention has no trainable parameters, so it is computed once).
#[derive(Debug, Clone)]
pub struct PreparedSpeaker {
    pub speaker_id: String,
    pub label: Label,
    pub read: Vec<Array2<f64>>,
    pub spont: Vec<Array2<f64>>,
}

impl PreparedSpeaker {
    pub fn new(speaker_id: impl Into<String>, label: Label, read: &[Array2<f64>], spont: &[Array2<f64>]) -> Result<Self> {
        if read.is_empty() || spont.is_empty() {
            return Err(Error::EmptySegmentSet);
        }
        let enhance = |segs: &[Array2<f64>]| segs.iter().map(|s| itmla_rows(s.view()).enhanced).collect();
        Ok(PreparedSpeaker { speaker_id: speaker_id.into(), label, read: enhance(read), spont: enhance(spont) })
    }

    pub fn from_segment_sets(label: Label, read: &SegmentSet, spont: &SegmentSet) -> Result<Self> {
        let collect = |set: &SegmentSet| set.segments.iter().map(|s| s.vectors.clone()).collect::<Vec<_>>();
        Self::new(read.speaker_id.clone(), label, &collect(read), &collect(spont))
    }
}

/// Output of stage 1 for one speech type.
#[derive(Debug, Clone)]
pub struct Stage1Output {
    pub traces: Vec<LstmTrace>,
    /// `(p_control, p_depressed)` per segment, from the last hidden state.
    pub segment_probs: Vec<[f64; 2]>,
    /// Temporal means of each segment's hidden states, `N x H`.
    pub reprs: Array2<f64>,
    /// Mean depressed-class probability over segments.
    pub p_type: f64,
    /// Fraction of segments with depressed-class probability above 0.5.
    pub hard_proportion: f64,
}

/// Output of stage 2 for one speech type.
#[derive(Debug, Clone)]
pub struct Stage2Output {
    pub trace: LstmTrace,
    pub mean_hidden: Array1<f64>,
    pub probs: [f64; 2],
}

/// Per-speaker record of the forward pass, sufficient for backpropagation.
#[derive(Debug, Clone)]
pub struct SpeakerTrace {
    pub read: Stage1Output,
    pub spont: Stage1Output,
    /// Global averages r, s, r*, s*.
    pub r: Array1<f64>,
    pub s: Array1<f64>,
    pub r_star: Array1<f64>,
    pub s_star: Array1<f64>,
    pub read_attention: AttentionOutput,
    pub spont_attention: AttentionOutput,
    pub read_stage2: Stage2Output,
    pub spont_stage2: Stage2Output,
    pub fused: Array1<f64>,
    pub fused_star: Array1<f64>,
    pub fusion_probs: [f64; 2],
    pub fusion_star_probs: [f64; 2],
    pub probs: ProbSet,
}

/// Parameters of one condition model: two stage-1 encoders with their
/// segment heads, two stage-2 LSTMs with their heads, and two fusion heads.
#[derive(Debug, Clone, PartialEq)]
pub struct CdmaModel {
    pub read_encoder: Lstm,
    pub read_segment_head: DenseSoftmax,
    pub spont_encoder: Lstm,
    pub spont_segment_head: DenseSoftmax,
    pub read_context: Lstm,
    pub read_head: DenseSoftmax,
    pub spont_context: Lstm,
    pub spont_head: DenseSoftmax,
    pub fusion_head: DenseSoftmax,
    pub enhanced_fusion_head: DenseSoftmax,
}

fn stage1(encoder: &Lstm, head: &DenseSoftmax, segments: &[Array2<f64>]) -> Result<Stage1Output> {
    if segments.is_empty() {
        return Err(Error::EmptySegmentSet);
    }
    let mut traces = Vec::with_capacity(segments.len());
    let mut segment_probs = Vec::with_capacity(segments.len());
    let mut reprs = Array2::zeros((segments.len(), encoder.hidden_dim()));
    for (k, seg) in segments.iter().enumerate() {
        let trace = encoder.forward(seg.view())?;
        segment_probs.push(head.forward(trace.last_hidden()));
        reprs.row_mut(k).assign(&trace.mean_hidden());
        traces.push(trace);
    }
    let n = segments.len() as f64;
    let p_type = segment_probs.iter().map(|p| p[1]).sum::<f64>() / n;
    let hard_proportion = segment_probs.iter().filter(|p| p[1] > 0.5).count() as f64 / n;
    Ok(Stage1Output { traces, segment_probs, reprs, p_type, hard_proportion })
}

fn stage2(context: &Lstm, head: &DenseSoftmax, enhanced: ArrayView2<f64>) -> Result<Stage2Output> {
    if enhanced.nrows() == 0 {
        return Err(Error::EmptySegmentSet);
    }
    let trace = context.forward(enhanced)?;
    let mean_hidden = trace.mean_hidden();
    let probs = head.forward(mean_hidden.view());
    Ok(Stage2Output { trace, mean_hidden, probs })
}

fn column_mean(m: &Array2<f64>) -> Array1<f64> {
    m.mean_axis(Axis(0)).expect("non-empty")
}

impl CdmaModel {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        CdmaModel {
            read_encoder: Lstm::zeros(input_dim, hidden_dim),
            read_segment_head: DenseSoftmax::zeros(hidden_dim),
            spont_encoder: Lstm::zeros(input_dim, hidden_dim),
            spont_segment_head: DenseSoftmax::zeros(hidden_dim),
            read_context: Lstm::zeros(hidden_dim, hidden_dim),
            read_head: DenseSoftmax::zeros(hidden_dim),
            spont_context: Lstm::zeros(hidden_dim, hidden_dim),
            spont_head: DenseSoftmax::zeros(hidden_dim),
            fusion_head: DenseSoftmax::zeros(hidden_dim),
            enhanced_fusion_head: DenseSoftmax::zeros(hidden_dim),
        }
    }

    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        CdmaModel {
            read_encoder: Lstm::init(input_dim, hidden_dim, rng),
            read_segment_head: DenseSoftmax::init(hidden_dim, rng),
            spont_encoder: Lstm::init(input_dim, hidden_dim, rng),
            spont_segment_head: DenseSoftmax::init(hidden_dim, rng),
            read_context: Lstm::init(hidden_dim, hidden_dim, rng),
            read_head: DenseSoftmax::init(hidden_dim, rng),
            spont_context: Lstm::init(hidden_dim, hidden_dim, rng),
            spont_head: DenseSoftmax::init(hidden_dim, rng),
            fusion_head: DenseSoftmax::init(hidden_dim, rng),
            enhanced_fusion_head: DenseSoftmax::init(hidden_dim, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.read_encoder.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.read_encoder.hidden_dim()
    }

    /// A zero-valued model with the same shapes, used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim())
    }

    /// Stage 1 on read speech, applying segment attention first.
    pub fn stage1_read(&self, segs: &SegmentSet) -> Result<Stage1Output> {
        let enhanced: Vec<_> = segs.segments.iter().map(|s| itmla_rows(s.vectors.view()).enhanced).collect();
        stage1(&self.read_encoder, &self.read_segment_head, &enhanced)
    }

    /// Stage 1 on spontaneous speech, applying segment attention first.
    pub fn stage1_spont(&self, segs: &SegmentSet) -> Result<Stage1Output> {
        let enhanced: Vec<_> = segs.segments.iter().map(|s| itmla_rows(s.vectors.view()).enhanced).collect();
        stage1(&self.spont_encoder, &self.spont_segment_head, &enhanced)
    }

    /// Stage 2 for read speech (`p_t`) over attention-enhanced representations.
    pub fn stage2_read(&self, enhanced: ArrayView2<f64>) -> Result<Stage2Output> {
        stage2(&self.read_context, &self.read_head, enhanced)
    }

    /// Stage 2 for spontaneous speech (`p_d`).
    pub fn stage2_spont(&self, enhanced: ArrayView2<f64>) -> Result<Stage2Output> {
        stage2(&self.spont_context, &self.spont_head, enhanced)
    }

    /// Fusion heads over `r + s` and `r* + s*`; returns depressed-class
    /// probabilities `(p_f, p_f*)`.
    pub fn ctf_fuse(&self, r: &Array1<f64>, s: &Array1<f64>, r_star: &Array1<f64>, s_star: &Array1<f64>) -> (f64, f64) {
        let f = r + s;
        let f_star = r_star + s_star;
        (self.fusion_head.forward(f.view())[1], self.enhanced_fusion_head.forward(f_star.view())[1])
    }

    pub fn forward_speaker(&self, speaker: &PreparedSpeaker) -> Result<SpeakerTrace> {
        let read = stage1(&self.read_encoder, &self.read_segment_head, &speaker.read)?;
        let spont = stage1(&self.spont_encoder, &self.spont_segment_head, &speaker.spont)?;
        let r = column_mean(&read.reprs);
        let s = column_mean(&spont.reprs);
        let read_attention = cosine_attention(read.reprs.view(), s.view());
        let spont_attention = cosine_attention(spont.reprs.view(), r.view());
        let r_star = column_mean(&read_attention.enhanced);
        let s_star = column_mean(&spont_attention.enhanced);
        let read_stage2 = self.stage2_read(read_attention.enhanced.view())?;
        let spont_stage2 = self.stage2_spont(spont_attention.enhanced.view())?;
        let fused = &r + &s;
        let fused_star = &r_star + &s_star;
        let fusion_probs = self.fusion_head.forward(fused.view());
        let fusion_star_probs = self.enhanced_fusion_head.forward(fused_star.view());
        let probs = ProbSet {
            p_c: read.p_type,
            p_o: spont.p_type,
            p_t: read_stage2.probs[1],
            p_d: spont_stage2.probs[1],
            p_f: fusion_probs[1],
            p_fstar: fusion_star_probs[1],
        };
        Ok(SpeakerTrace {
            read,
            spont,
            r,
            s,
            r_star,
            s_star,
            read_attention,
            spont_attention,
            read_stage2,
            spont_stage2,
            fused,
            fused_star,
            fusion_probs,
            fusion_star_probs,
            probs,
        })
    }

    pub fn predict(&self, speaker: &PreparedSpeaker) -> Result<ProbSet> {
        Ok(self.forward_speaker(speaker)?.probs)
    }

    /// Accumulates `scale * d(sum of six cross-entropies)/d(theta)` into `grads`.
    pub fn backward_speaker(&self, trace: &SpeakerTrace, label: Label, scale: f64, grads: &mut CdmaModel) {
        let y = label.target();
        let d = |p: f64| scale * cross_entropy_grad(p, y);
        let ps = &trace.probs;
        let hidden = self.hidden_dim();

        // Fusion heads.
        let mut d_r = Array1::zeros(hidden);
        let mut d_s = Array1::zeros(hidden);
        let mut d_fused = Array1::zeros(hidden);
        self.fusion_head.backward(trace.fused.view(), trace.fusion_probs, d(ps.p_f), &mut grads.fusion_head, Some(d_fused.view_mut()));
        d_r += &d_fused;
        d_s += &d_fused;
        let mut d_fused_star = Array1::zeros(hidden);
        self.enhanced_fusion_head.backward(
            trace.fused_star.view(),
            trace.fusion_star_probs,
            d(ps.p_fstar),
            &mut grads.enhanced_fusion_head,
            Some(d_fused_star.view_mut()),
        );

        // Stage 2 and cross-type attention, per speech type. The attention
        // reference of each type is the other type's global average.
        let d_read_reprs = backward_stage2_branch(
            &self.read_context,
            &self.read_head,
            &trace.read_stage2,
            &trace.read_attention,
            &trace.read.reprs,
            &trace.s,
            d(ps.p_t),
            &d_fused_star,
            &mut grads.read_context,
            &mut grads.read_head,
            &mut d_s,
        );
        let d_spont_reprs = backward_stage2_branch(
            &self.spont_context,
            &self.spont_head,
            &trace.spont_stage2,
            &trace.spont_attention,
            &trace.spont.reprs,
            &trace.r,
            d(ps.p_d),
            &d_fused_star,
            &mut grads.spont_context,
            &mut grads.spont_head,
            &mut d_r,
        );

        backward_stage1_branch(
            &self.read_encoder,
            &self.read_segment_head,
            &trace.read,
            d_read_reprs,
            &d_r,
            d(ps.p_c),
            &mut grads.read_encoder,
            &mut grads.read_segment_head,
        );
        backward_stage1_branch(
            &self.spont_encoder,
            &self.spont_segment_head,
            &trace.spont,
            d_spont_reprs,
            &d_s,
            d(ps.p_o),
            &mut grads.spont_encoder,
            &mut grads.spont_segment_head,
        );
    }
}

/// Returns `d loss / d reprs` from the stage-2 path, adding the attention
/// reference gradient into `d_reference`.
#[allow(clippy::too_many_arguments)]
fn backward_stage2_branch(
    context: &Lstm,
    head: &DenseSoftmax,
    out: &Stage2Output,
    attention: &AttentionOutput,
    reprs: &Array2<f64>,
    reference: &Array1<f64>,
    d_p: f64,
    d_enhanced_mean: &Array1<f64>,
    grad_context: &mut Lstm,
    grad_head: &mut DenseSoftmax,
    d_reference: &mut Array1<f64>,
) -> Array2<f64> {
    let n = reprs.nrows();
    let mut d_mean = Array1::zeros(context.hidden_dim());
    head.backward(out.mean_hidden.view(), out.probs, d_p, grad_head, Some(d_mean.view_mut()));
    let d_hidden = Array2::from_shape_fn((n, context.hidden_dim()), |(_, j)| d_mean[j] / n as f64);
    let mut d_enhanced = context
        .backward(&out.trace, d_hidden.view(), grad_context, true)
        .expect("input gradient requested");
    // r* / s* are plain means of the enhanced rows
    for mut row in d_enhanced.rows_mut() {
        row.scaled_add(1.0 / n as f64, d_enhanced_mean);
    }
    let (d_reprs, d_ref) = cosine_attention_backward(reprs.view(), reference.view(), attention, d_enhanced.view());
    *d_reference += &d_ref;
    d_reprs
}

#[allow(clippy::too_many_arguments)]
fn backward_stage1_branch(
    encoder: &Lstm,
    head: &DenseSoftmax,
    out: &Stage1Output,
    mut d_reprs: Array2<f64>,
    d_global: &Array1<f64>,
    d_p_type: f64,
    grad_encoder: &mut Lstm,
    grad_head: &mut DenseSoftmax,
) {
    let n = out.traces.len() as f64;
    for mut row in d_reprs.rows_mut() {
        row.scaled_add(1.0 / n, d_global);
    }
    for (k, trace) in out.traces.iter().enumerate() {
        let steps = trace.len();
        let d_repr = d_reprs.row(k);
        let mut d_hidden = Array2::from_shape_fn((steps, encoder.hidden_dim()), |(_, j)| d_repr[j] / steps as f64);
        head.backward(
            trace.last_hidden(),
            out.segment_probs[k],
            d_p_type / n,
            grad_head,
            Some(d_hidden.row_mut(steps - 1)),
        );
        encoder.backward(trace, d_hidden.view(), grad_encoder, false);
    }
}

impl Parameterized for CdmaModel {
    fn params(&self) -> Vec<ParamView<'_>> {
        let mut out = Vec::new();
        out.extend(prefixed("read_encoder", self.read_encoder.params()));
        out.extend(prefixed("read_segment_head", self.read_segment_head.params()));
        out.extend(prefixed("spont_encoder", self.spont_encoder.params()));
        out.extend(prefixed("spont_segment_head", self.spont_segment_head.params()));
        out.extend(prefixed("read_context", self.read_context.params()));
        out.extend(prefixed("read_head", self.read_head.params()));
        out.extend(prefixed("spont_context", self.spont_context.params()));
        out.extend(prefixed("spont_head", self.spont_head.params()));
        out.extend(prefixed("fusion_head", self.fusion_head.params()));
        out.extend(prefixed("enhanced_fusion_head", self.enhanced_fusion_head.params()));
        out
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        out.extend(self.read_encoder.params_mut());
        out.extend(self.read_segment_head.params_mut());
        out.extend(self.spont_encoder.params_mut());
        out.extend(self.spont_segment_head.params_mut());
        out.extend(self.read_context.params_mut());
        out.extend(self.read_head.params_mut());
        out.extend(self.spont_context.params_mut());
        out.extend(self.spont_head.params_mut());
        out.extend(self.fusion_head.params_mut());
        out.extend(self.enhanced_fusion_head.params_mut());
        out
    }
}

/// Forward/backward over a batch of speakers. `backward` consumes the
/// recorded forward pass.
#[derive(Debug, Default)]
pub struct BatchGraph {
    recorded: Option<Vec<(SpeakerTrace, Label)>>,
}

impl BatchGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs the batch forward, records intermediates, returns the batch loss.
    pub fn forward(&mut self, model: &CdmaModel, batch: &[&PreparedSpeaker]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Data("empty training batch".into()));
        }
        let traces = batch
            .iter()
            .map(|sp| Ok((model.forward_speaker(sp)?, sp.label)))
            .collect::<Result<Vec<_>>>()?;
        let probs: Vec<ProbSet> = traces.iter().map(|(t, _)| t.probs).collect();
        let labels: Vec<Label> = traces.iter().map(|(_, l)| *l).collect();
        let loss = cdma_loss(&probs, &labels)?;
        self.recorded = Some(traces);
        Ok(loss)
    }

    pub fn backward(&mut self, model: &CdmaModel) -> Result<CdmaModel> {
        let traces = self
            .recorded
            .take()
            .ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        let mut grads = model.zeros_like();
        let scale = 1.0 / traces.len() as f64;
        for (trace, label) in &traces {
            model.backward_speaker(trace, *label, scale, &mut grads);
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::gradcheck::{central_difference, max_relative_error};

    fn random_speaker(rng: &mut ChaCha8Rng, id: &str, label: Label, m: usize, d: usize, n_read: usize, n_spont: usize) -> PreparedSpeaker {
        let seg = |rng: &mut ChaCha8Rng| Array2::from_shape_fn((m, d), |_| rng.gen_range(-1.0..1.0));
        let read: Vec<_> = (0..n_read).map(|_| seg(rng)).collect();
        let spont: Vec<_> = (0..n_spont).map(|_| seg(rng)).collect();
        PreparedSpeaker::new(id, label, &read, &spont).unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let (p, l) = aggregate(&ProbSet::from_array([0.9, 0.8, 0.7, 0.6, 0.5, 0.4]));
        assert!((p - 0.65).abs() < 1e-12);
        assert_eq!(l, Label::Depressed);
        assert_eq!(aggregate(&ProbSet::from_array([0.5; 6])), (0.5, Label::Control));
        assert_eq!(aggregate(&ProbSet::from_array([0.0; 6])), (0.0, Label::Control));
    }

    #[test]
    fn loss_examples() {
        assert_eq!(cdma_loss(&[ProbSet::from_array([1.0; 6])], &[Label::Depressed]).unwrap(), 0.0);
        let l = cdma_loss(&[ProbSet::from_array([0.5; 6])], &[Label::Depressed]).unwrap();
        assert!((l - 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((l - 4.1589).abs() < 1e-4);
    }

    #[test]
    fn vote_examples() {
        use Label::*;
        assert_eq!(majority_vote(&[Depressed, Control, Depressed]).unwrap(), Depressed);
        assert_eq!(majority_vote(&[Control, Control, Control]).unwrap(), Control);
        assert_eq!(majority_vote(&[Control, Depressed, Control]).unwrap(), Control);
        assert!(matches!(majority_vote(&[Control, Depressed]), Err(Error::Arity { expected: 3, got: 2 })));
    }

    #[test]
    fn stage1_proportion_is_mean_of_segment_probs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = CdmaModel::init(6, 4, &mut rng);
        let sp = random_speaker(&mut rng, "a", Label::Control, 5, 6, 3, 2);
        let out = stage1(&model.read_encoder, &model.read_segment_head, &sp.read).unwrap();
        let mean = out.segment_probs.iter().map(|p| p[1]).sum::<f64>() / 3.0;
        assert!((out.p_type - mean).abs() < 1e-15);
        for (k, t) in out.traces.iter().enumerate() {
            for j in 0..4 {
                let m: f64 = (0..5).map(|s| t.hidden[[s, j]]).sum::<f64>() / 5.0;
                assert!((out.reprs[[k, j]] - m).abs() < 1e-14);
            }
        }
        assert!(matches!(stage1(&model.read_encoder, &model.read_segment_head, &[]), Err(Error::EmptySegmentSet)));
    }

    #[test]
    fn zero_model_stage2_is_half() {
        let model = CdmaModel::zeros(3, 4);
        let out = model.stage2_read(Array2::from_elem((3, 4), 0.7).view()).unwrap();
        assert_eq!(out.probs, [0.5, 0.5]);
    }

    #[test]
    fn single_repr_stage2_is_head_of_that_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = CdmaModel::init(3, 4, &mut rng);
        let x = Array2::from_shape_fn((1, 4), |(_, j)| j as f64 * 0.2 - 0.3);
        let out = model.stage2_spont(x.view()).unwrap();
        let h = model.spont_context.forward(x.view()).unwrap();
        assert_eq!(out.probs, model.spont_head.forward(h.hidden.row(0)));
    }

    #[test]
    fn fusion_of_cancelling_averages_is_bias_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = CdmaModel::init(3, 4, &mut rng);
        let r = Array1::from(vec![0.3, -0.2, 0.9, 0.1]);
        let s = -&r;
        let (p_f, _) = model.ctf_fuse(&r, &s, &r, &r);
        let b = &model.fusion_head.bias;
        assert!((p_f - crate::nn::softmax2([b[0], b[1]])[1]).abs() < 1e-15);
        let zero = CdmaModel::zeros(3, 4);
        assert_eq!(zero.ctf_fuse(&r, &r, &r, &r), (0.5, 0.5));
    }

    #[test]
    fn backward_requires_forward() {
        let model = CdmaModel::zeros(3, 2);
        assert!(matches!(BatchGraph::new().backward(&model), Err(Error::State(_))));
    }

    #[test]
    fn full_graph_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let model = CdmaModel::init(5, 3, &mut rng);
        let speakers = [
            random_speaker(&mut rng, "a", Label::Depressed, 4, 5, 2, 3),
            random_speaker(&mut rng, "b", Label::Control, 4, 5, 1, 2),
        ];
        let batch: Vec<&PreparedSpeaker> = speakers.iter().collect();
        let mut graph = BatchGraph::new();
        graph.forward(&model, &batch).unwrap();
        let grads = graph.backward(&model).unwrap();
        let numeric = central_difference(&model, 1e-5, |m| BatchGraph::new().forward(m, &batch).unwrap());
        let err = max_relative_error(&grads.flatten(), &numeric);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn segment_permutation_keeps_stage1_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = CdmaModel::init(4, 3, &mut rng);
        let sp = random_speaker(&mut rng, "a", Label::Control, 6, 4, 3, 3);
        let mut permuted = sp.clone();
        permuted.read.reverse();
        permuted.spont.rotate_left(1);
        let (a, b) = (model.predict(&sp).unwrap(), model.predict(&permuted).unwrap());
        assert!((a.p_c - b.p_c).abs() < 1e-14);
        assert!((a.p_o - b.p_o).abs() < 1e-14);
    }
}
