use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::softmax_in_place;
use super::model::Encoder;
use super::params::EncoderParameters;
use super::EncoderError;
use crate::corpus::PretrainExample;

/// Pretraining loss terms for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainLoss {
    /// Mean cross-entropy over masked positions.
    pub mlm: f64,
    /// Mean next-sentence cross-entropy over examples.
    pub nsp: f64,
    /// Mean per-token in-span cross-entropy over all positions.
    pub span: f64,
    pub total: f64,
    pub masked_tokens: usize,
    /// Set when the batch contained no masked token; `mlm` is then 0.
    pub no_masked_tokens: bool,
}

/// Cross-entropy of `logits` against `label`, with its gradient.
pub(crate) fn softmax_cross_entropy(logits: ArrayView1<'_, f64>, label: usize) -> (f64, Array1<f64>) {
    let mut probs = logits.to_owned();
    softmax_in_place(probs.as_slice_mut().expect("owned vector"));
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let loss = lse - logits[label];
    probs[label] -= 1.0;
    (loss, probs)
}

struct ExampleResult {
    mlm: f64,
    nsp: f64,
    span: f64,
    grads: EncoderParameters,
}

/// Combined masked-token, next-sentence and span loss with exact gradients
/// for every parameter. Examples are evaluated in parallel and reduced in
/// batch order, so results do not depend on thread scheduling.
pub fn pretrain_loss(
    encoder: &Encoder,
    params: &EncoderParameters,
    batch: &[PretrainExample],
) -> Result<(PretrainLoss, EncoderParameters), EncoderError> {
    if batch.is_empty() {
        return Err(EncoderError::EmptyBatch);
    }
    let masked: usize = batch.iter().map(|e| e.masking.len()).sum();
    let positions: usize = batch.iter().map(|e| e.token_seq.len()).sum();
    let mlm_scale = if masked > 0 { 1.0 / masked as f64 } else { 0.0 };
    let nsp_scale = 1.0 / batch.len() as f64;
    let span_scale = 1.0 / positions as f64;

    let results: Vec<Result<ExampleResult, EncoderError>> = batch
        .par_iter()
        .map(|ex| {
            let out = encoder.forward(&ex.input_tokens(), &ex.token_seq.segment_ids, params)?;
            let h = &out.hidden;
            let mut grads = params.zeros_like();
            let mut d_hidden = Array2::zeros(h.dim());

            let mut mlm = 0.0;
            for m in &ex.masking.entries {
                let row = h.row(m.position);
                let logits = row.dot(&params.mlm_head);
                let (l, mut dl) = softmax_cross_entropy(logits.view(), m.label as usize);
                mlm += l;
                dl *= mlm_scale;
                add_outer(&mut grads.mlm_head, row, dl.view());
                let mut dh = d_hidden.row_mut(m.position);
                dh += &params.mlm_head.dot(&dl);
            }

            let cls = h.row(0);
            let (nsp, mut dl) = softmax_cross_entropy(cls.dot(&params.nsp_head).view(), ex.nsp_label.class_index());
            dl *= nsp_scale;
            add_outer(&mut grads.nsp_head, cls, dl.view());
            {
                let mut dh = d_hidden.row_mut(0);
                dh += &params.nsp_head.dot(&dl);
            }

            let mut span = 0.0;
            let span_logits = h.dot(&params.span_head);
            for (t, label) in ex.span_labels().into_iter().enumerate() {
                let (l, mut dl) = softmax_cross_entropy(span_logits.row(t), label);
                span += l;
                dl *= span_scale;
                add_outer(&mut grads.span_head, h.row(t), dl.view());
                let mut dh = d_hidden.row_mut(t);
                dh += &params.span_head.dot(&dl);
            }

            encoder.backward(&out.trace, d_hidden.view(), params, &mut grads);
            Ok(ExampleResult { mlm, nsp, span, grads })
        })
        .collect();

    let mut grads = params.zeros_like();
    let (mut mlm, mut nsp, mut span) = (0.0, 0.0, 0.0);
    for r in results {
        let r = r?;
        mlm += r.mlm;
        nsp += r.nsp;
        span += r.span;
        grads.add_scaled(&r.grads, 1.0);
    }
    let mlm = mlm * mlm_scale;
    let nsp = nsp * nsp_scale;
    let span = span * span_scale;
    Ok((
        PretrainLoss {
            mlm,
            nsp,
            span,
            total: mlm + nsp + span,
            masked_tokens: masked,
            no_masked_tokens: masked == 0,
        },
        grads,
    ))
}

/// A `[CLS]`-classified input: token ids, segment ids and class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationInput {
    pub tokens: Vec<u32>,
    pub segments: Vec<u8>,
    pub label: usize,
}

/// Mean cross-entropy of `cls_head` applied to the `[CLS]` vector, its
/// gradient, and the number of correct argmax predictions.
pub fn classification_loss(
    encoder: &Encoder,
    params: &EncoderParameters,
    batch: &[ClassificationInput],
) -> Result<(f64, EncoderParameters, usize), EncoderError> {
    if batch.is_empty() {
        return Err(EncoderError::EmptyBatch);
    }
    let scale = 1.0 / batch.len() as f64;
    let results: Vec<Result<(f64, bool, EncoderParameters), EncoderError>> = batch
        .par_iter()
        .map(|ex| {
            let out = encoder.forward(&ex.tokens, &ex.segments, params)?;
            let cls = out.hidden.row(0);
            let logits = cls.dot(&params.cls_head);
            let correct = argmax(logits.view()) == ex.label;
            let (l, mut dl) = softmax_cross_entropy(logits.view(), ex.label);
            dl *= scale;
            let mut grads = params.zeros_like();
            add_outer(&mut grads.cls_head, cls, dl.view());
            let mut d_hidden = Array2::zeros(out.hidden.dim());
            d_hidden.row_mut(0).assign(&params.cls_head.dot(&dl));
            encoder.backward(&out.trace, d_hidden.view(), params, &mut grads);
            Ok((l, correct, grads))
        })
        .collect();
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let mut correct = 0;
    for r in results {
        let (l, c, g) = r?;
        loss += l;
        correct += c as usize;
        grads.add_scaled(&g, 1.0);
    }
    Ok((loss * scale, grads, correct))
}

/// Class probabilities from the classification head.
pub fn classify(encoder: &Encoder, params: &EncoderParameters, tokens: &[u32], segments: &[u8]) -> Result<Array1<f64>, EncoderError> {
    let out = encoder.forward(tokens, segments, params)?;
    let mut logits = out.hidden.row(0).dot(&params.cls_head);
    softmax_in_place(logits.as_slice_mut().expect("owned vector"));
    Ok(logits)
}

pub(crate) fn argmax(v: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn add_outer(target: &mut Array2<f64>, left: ArrayView1<'_, f64>, right: ArrayView1<'_, f64>) {
    for (i, &a) in left.iter().enumerate() {
        if a != 0.0 {
            target.row_mut(i).scaled_add(a, &right);
        }
    }
}
