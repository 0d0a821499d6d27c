use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::EncoderConfig;

/// Weights of one encoder block.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    pub w_o: Array2<f64>,
    pub ln1_gain: Array1<f64>,
    pub ln1_bias: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub ln2_gain: Array1<f64>,
    pub ln2_bias: Array1<f64>,
}

impl LayerParams {
    fn zeros(d_model: usize, d_ff: usize) -> Self {
        LayerParams {
            w_q: Array2::zeros((d_model, d_model)),
            w_k: Array2::zeros((d_model, d_model)),
            w_v: Array2::zeros((d_model, d_model)),
            w_o: Array2::zeros((d_model, d_model)),
            ln1_gain: Array1::zeros(d_model),
            ln1_bias: Array1::zeros(d_model),
            w1: Array2::zeros((d_model, d_ff)),
            b1: Array1::zeros(d_ff),
            w2: Array2::zeros((d_ff, d_model)),
            b2: Array1::zeros(d_model),
            ln2_gain: Array1::zeros(d_model),
            ln2_bias: Array1::zeros(d_model),
        }
    }
}

/// Every learnable tensor of the encoder and its task heads.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParameters {
    pub token_embed: Array2<f64>,
    pub segment_embed: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub mlm_head: Array2<f64>,
    pub nsp_head: Array2<f64>,
    pub span_head: Array2<f64>,
    pub cls_head: Array2<f64>,
}

macro_rules! layer_fields {
    ($layer:expr, $push:ident, $i:expr, $view:ident) => {{
        let l = $layer;
        $push(format!("layers.{}.w_q", $i), l.w_q.$view().into_dyn());
        $push(format!("layers.{}.w_k", $i), l.w_k.$view().into_dyn());
        $push(format!("layers.{}.w_v", $i), l.w_v.$view().into_dyn());
        $push(format!("layers.{}.w_o", $i), l.w_o.$view().into_dyn());
        $push(format!("layers.{}.ln1_gain", $i), l.ln1_gain.$view().into_dyn());
        $push(format!("layers.{}.ln1_bias", $i), l.ln1_bias.$view().into_dyn());
        $push(format!("layers.{}.w1", $i), l.w1.$view().into_dyn());
        $push(format!("layers.{}.b1", $i), l.b1.$view().into_dyn());
        $push(format!("layers.{}.w2", $i), l.w2.$view().into_dyn());
        $push(format!("layers.{}.b2", $i), l.b2.$view().into_dyn());
        $push(format!("layers.{}.ln2_gain", $i), l.ln2_gain.$view().into_dyn());
        $push(format!("layers.{}.ln2_bias", $i), l.ln2_bias.$view().into_dyn());
    }};
}

impl EncoderParameters {
    /// All-zero tensors with the shapes implied by `config`; also used as a
    /// gradient accumulator.
    pub fn zeros(config: &EncoderConfig) -> Self {
        let d = config.d_model;
        EncoderParameters {
            token_embed: Array2::zeros((config.vocab_size, d)),
            segment_embed: Array2::zeros((2, d)),
            layers: (0..config.num_layers).map(|_| LayerParams::zeros(d, config.d_ff)).collect(),
            mlm_head: Array2::zeros((d, config.vocab_size)),
            nsp_head: Array2::zeros((d, 2)),
            span_head: Array2::zeros((d, 2)),
            cls_head: Array2::zeros((d, 2)),
        }
    }

    /// Weights drawn from N(0, 0.02²) with `config.rng_seed`; biases zero and
    /// layer-norm gains one.
    pub fn init(config: &EncoderConfig) -> Self {
        Self::init_with_std(config, 0.02)
    }

    pub fn init_with_std(config: &EncoderConfig, std: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let normal = Normal::new(0.0, std).expect("std must be finite and non-negative");
        let mut p = Self::zeros(config);
        let mut fill = |a: &mut Array2<f64>| a.mapv_inplace(|_| normal.sample(&mut rng));
        fill(&mut p.token_embed);
        fill(&mut p.segment_embed);
        for l in &mut p.layers {
            fill(&mut l.w_q);
            fill(&mut l.w_k);
            fill(&mut l.w_v);
            fill(&mut l.w_o);
            fill(&mut l.w1);
            fill(&mut l.w2);
            l.ln1_gain.fill(1.0);
            l.ln2_gain.fill(1.0);
        }
        fill(&mut p.mlm_head);
        fill(&mut p.nsp_head);
        fill(&mut p.span_head);
        fill(&mut p.cls_head);
        p
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, mut t) in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Tensors in checkpoint order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut out = Vec::new();
        let mut push = |name: String, t| out.push((name, t));
        push("token_embed".into(), self.token_embed.view().into_dyn());
        push("segment_embed".into(), self.segment_embed.view().into_dyn());
        for (i, l) in self.layers.iter().enumerate() {
            layer_fields!(l, push, i, view);
        }
        push("mlm_head".into(), self.mlm_head.view().into_dyn());
        push("nsp_head".into(), self.nsp_head.view().into_dyn());
        push("span_head".into(), self.span_head.view().into_dyn());
        push("cls_head".into(), self.cls_head.view().into_dyn());
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut out = Vec::new();
        let mut push = |name: String, t| out.push((name, t));
        push("token_embed".into(), self.token_embed.view_mut().into_dyn());
        push("segment_embed".into(), self.segment_embed.view_mut().into_dyn());
        for (i, l) in self.layers.iter_mut().enumerate() {
            layer_fields!(l, push, i, view_mut);
        }
        push("mlm_head".into(), self.mlm_head.view_mut().into_dyn());
        push("nsp_head".into(), self.nsp_head.view_mut().into_dyn());
        push("span_head".into(), self.span_head.view_mut().into_dyn());
        push("cls_head".into(), self.cls_head.view_mut().into_dyn());
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &EncoderParameters, scale: f64) {
        for ((_, mut a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.scaled_add(scale, &b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EncoderConfig {
        EncoderConfig { num_layers: 2, num_heads: 2, d_model: 4, d_ff: 6, vocab_size: 9, max_seq_len: 8, rng_seed: 7 }
    }

    #[test]
    fn shapes_and_order() {
        let p = EncoderParameters::init(&cfg());
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), 2 + 2 * 12 + 4);
        assert_eq!(names[0], "token_embed");
        assert_eq!(names[2], "layers.0.w_q");
        assert_eq!(names.last().unwrap(), "cls_head");
        assert_eq!(p.mlm_head.dim(), (4, 9));
        assert_eq!(p.layers[1].w1.dim(), (4, 6));
        assert_eq!(p.num_scalars(), 9 * 4 + 2 * 4 + 2 * (4 * 16 + 4 * 4 + 2 * 24 + 6 + 4) + 4 * 9 + 3 * 8);
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(EncoderParameters::init(&cfg()), EncoderParameters::init(&cfg()));
        let other = EncoderParameters::init(&EncoderConfig { rng_seed: 8, ..cfg() });
        assert_ne!(EncoderParameters::init(&cfg()), other);
        let p = EncoderParameters::init(&cfg());
        assert!(p.layers[0].b1.iter().all(|&b| b == 0.0));
        assert!(p.layers[0].ln1_gain.iter().all(|&g| g == 1.0));
    }
}
