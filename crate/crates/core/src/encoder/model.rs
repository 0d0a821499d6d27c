use ndarray::{Array1, Array2, ArrayView2};

use super::config::EncoderConfig;
use super::layers::{
    attention_backward, attention_layer, ffn_backward, ffn_forward, layer_norm, layer_norm_backward, AttentionCache,
    FfnCache, LayerNormCache,
};
use super::params::EncoderParameters;
use super::rpe::RelativePositionTable;
use super::EncoderError;
use crate::corpus::TokenSequence;

/// Sum of token and segment embeddings. Order information enters only
/// through the relative position terms inside attention.
pub fn embed_input(tokens: &[u32], segments: &[u8], params: &EncoderParameters) -> Result<Array2<f64>, EncoderError> {
    if tokens.len() != segments.len() {
        return Err(EncoderError::Shape(format!(
            "{} tokens but {} segment ids",
            tokens.len(),
            segments.len()
        )));
    }
    let vocab = params.token_embed.nrows();
    let mut x = Array2::zeros((tokens.len(), params.token_embed.ncols()));
    for (t, (&tok, &seg)) in tokens.iter().zip(segments).enumerate() {
        if tok as usize >= vocab {
            return Err(EncoderError::TokenOutOfRange { token: tok, vocab_size: vocab });
        }
        if seg > 1 {
            return Err(EncoderError::Shape(format!("segment id {seg} outside {{0, 1}}")));
        }
        let mut row = x.row_mut(t);
        row.assign(&params.token_embed.row(tok as usize));
        row += &params.segment_embed.row(seg as usize);
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct BlockTrace {
    pub attention: AttentionCache,
    pub norm1: LayerNormCache,
    pub ffn: FfnCache,
    pub norm2: LayerNormCache,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub tokens: Vec<u32>,
    pub segments: Vec<u8>,
    pub blocks: Vec<BlockTrace>,
}

#[derive(Debug, Clone)]
pub struct EncoderOutput {
    /// Final hidden states, one row per position.
    pub hidden: Array2<f64>,
    pub trace: ForwardTrace,
}

impl EncoderOutput {
    /// Hidden state at position 0 (`[CLS]`).
    pub fn cls_vector(&self) -> Array1<f64> {
        self.hidden.row(0).to_owned()
    }
}

/// Encoder architecture bound to its fixed position table.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: EncoderConfig,
    table: RelativePositionTable,
}

impl Encoder {
    pub fn new(config: EncoderConfig) -> Result<Self, EncoderError> {
        config.validate()?;
        let table = RelativePositionTable::new(config.max_seq_len, config.rpe_dim())?;
        Ok(Encoder { config, table })
    }

    /// Same architecture with the position table replaced.
    pub fn with_table(config: EncoderConfig, table: RelativePositionTable) -> Result<Self, EncoderError> {
        config.validate()?;
        if table.dim() != config.rpe_dim() || table.max_seq_len() < config.max_seq_len {
            return Err(EncoderError::Config("position table does not fit the config".into()));
        }
        Ok(Encoder { config, table })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn table(&self) -> &RelativePositionTable {
        &self.table
    }

    pub fn check_params(&self, params: &EncoderParameters) -> Result<(), EncoderError> {
        let expected = EncoderParameters::zeros(&self.config);
        for ((name, want), (_, got)) in expected.tensors().iter().zip(params.tensors()) {
            if want.shape() != got.shape() {
                return Err(EncoderError::Shape(format!(
                    "{name}: expected {:?}, got {:?}",
                    want.shape(),
                    got.shape()
                )));
            }
        }
        if expected.layers.len() != params.layers.len() {
            return Err(EncoderError::Shape("layer count".into()));
        }
        Ok(())
    }

    /// `num_layers` blocks of attention, add & norm, feed-forward, add & norm.
    pub fn forward(&self, tokens: &[u32], segments: &[u8], params: &EncoderParameters) -> Result<EncoderOutput, EncoderError> {
        if tokens.is_empty() {
            return Err(EncoderError::Shape("empty sequence".into()));
        }
        if tokens.len() > self.config.max_seq_len {
            return Err(EncoderError::SequenceTooLong { len: tokens.len(), max_seq_len: self.config.max_seq_len });
        }
        let mut x = embed_input(tokens, segments, params)?;
        let mut blocks = Vec::with_capacity(params.layers.len());
        for layer in &params.layers {
            let (attn, attention) = attention_layer(x.view(), layer, self.config.num_heads, &self.table)?;
            let (y1, norm1) = layer_norm((&x + &attn).view(), layer.ln1_gain.view(), layer.ln1_bias.view());
            let (f, ffn) = ffn_forward(y1.view(), &layer.w1, &layer.b1, &layer.w2, &layer.b2)?;
            let (y2, norm2) = layer_norm((&y1 + &f).view(), layer.ln2_gain.view(), layer.ln2_bias.view());
            blocks.push(BlockTrace { attention, norm1, ffn, norm2 });
            x = y2;
        }
        Ok(EncoderOutput {
            hidden: x,
            trace: ForwardTrace { tokens: tokens.to_vec(), segments: segments.to_vec(), blocks },
        })
    }

    pub fn encoder_forward(&self, seq: &TokenSequence, params: &EncoderParameters) -> Result<EncoderOutput, EncoderError> {
        self.forward(&seq.tokens, &seq.segment_ids, params)
    }

    /// Accumulates into `grads` the gradient of a scalar loss whose gradient
    /// with respect to the final hidden states is `d_hidden`.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        d_hidden: ArrayView2<'_, f64>,
        params: &EncoderParameters,
        grads: &mut EncoderParameters,
    ) {
        let mut d = d_hidden.to_owned();
        for (l, block) in trace.blocks.iter().enumerate().rev() {
            let layer = &params.layers[l];
            let g = &mut grads.layers[l];
            let (d_r2, d_g2, d_b2) = layer_norm_backward(d.view(), &block.norm2, layer.ln2_gain.view());
            g.ln2_gain += &d_g2;
            g.ln2_bias += &d_b2;
            let fg = ffn_backward(d_r2.view(), &block.ffn, &layer.w1, &layer.w2);
            g.w1 += &fg.w1;
            g.b1 += &fg.b1;
            g.w2 += &fg.w2;
            g.b2 += &fg.b2;
            let d_y1 = d_r2 + fg.input;
            let (d_r1, d_g1, d_b1) = layer_norm_backward(d_y1.view(), &block.norm1, layer.ln1_gain.view());
            g.ln1_gain += &d_g1;
            g.ln1_bias += &d_b1;
            let ag = attention_backward(d_r1.view(), &block.attention, layer, &self.table);
            g.w_q += &ag.w_q;
            g.w_k += &ag.w_k;
            g.w_v += &ag.w_v;
            g.w_o += &ag.w_o;
            d = d_r1 + ag.input;
        }
        for (t, (&tok, &seg)) in trace.tokens.iter().zip(&trace.segments).enumerate() {
            let row = d.row(t);
            let mut te = grads.token_embed.row_mut(tok as usize);
            te += &row;
            let mut se = grads.segment_embed.row_mut(seg as usize);
            se += &row;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cfg(layers: usize) -> EncoderConfig {
        EncoderConfig { num_layers: layers, num_heads: 1, d_model: 4, d_ff: 4, vocab_size: 6, max_seq_len: 8, rng_seed: 3 }
    }

    #[test]
    fn zero_embeddings_give_zero_input() {
        let p = EncoderParameters::zeros(&cfg(0));
        let x = embed_input(&[1, 2, 3], &[0, 0, 1], &p).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embedding_is_token_plus_segment() {
        let mut p = EncoderParameters::init(&cfg(0));
        p.segment_embed = array![[0.5, 0.0, -1.0, 2.0], [1.0, 1.0, 1.0, 1.0]];
        let x = embed_input(&[3], &[0], &p).unwrap();
        assert_eq!(x.row(0), (&p.token_embed.row(3) + &p.segment_embed.row(0)).view());
        let two = embed_input(&[3, 3], &[0, 1], &p).unwrap();
        let diff = &two.row(1) - &two.row(0);
        for (a, b) in diff.iter().zip([0.5, 1.0, 2.0, -1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn token_out_of_range() {
        let p = EncoderParameters::zeros(&cfg(0));
        assert!(matches!(embed_input(&[6], &[0], &p), Err(EncoderError::TokenOutOfRange { .. })));
    }

    #[test]
    fn empty_stack_passes_embeddings_through() {
        let enc = Encoder::new(cfg(0)).unwrap();
        let p = EncoderParameters::init(&cfg(0));
        let out = enc.forward(&[2, 4, 3], &[0, 0, 0], &p).unwrap();
        assert_eq!(out.hidden, embed_input(&[2, 4, 3], &[0, 0, 0], &p).unwrap());
        assert_eq!(out.cls_vector(), out.hidden.row(0));
    }

    #[test]
    fn forward_is_deterministic() {
        let enc = Encoder::new(cfg(2)).unwrap();
        let p = EncoderParameters::init(&cfg(2));
        let a = enc.forward(&[2, 4, 5, 3], &[0, 0, 1, 1], &p).unwrap();
        let b = enc.forward(&[2, 4, 5, 3], &[0, 0, 1, 1], &p).unwrap();
        assert_eq!(a.hidden, b.hidden);
    }

    #[test]
    fn too_long_input_rejected() {
        let enc = Encoder::new(cfg(1)).unwrap();
        let p = EncoderParameters::init(&cfg(1));
        assert!(enc.forward(&[1; 9], &[0; 9], &p).is_err());
    }
}
