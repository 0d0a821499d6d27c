//! Encoder forward/backward checked against straight-line reference code.

use aif_core::corpus::{make_pretrain_batch, Lexicon, PretrainCorpus, PretrainOptions, SentenceSplitter, Vocab};
use aif_core::encoder::{
    attention_layer, pretrain_loss, Encoder, EncoderConfig, EncoderParameters, LayerParams, RelativePositionTable,
    LAYER_NORM_EPS,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mat = Vec<Vec<f64>>;

fn to_mat(a: &Array2<f64>) -> Mat {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn alpha(delta: i64, k: usize, dim: usize) -> f64 {
    let w = 1.0 / 10000f64.powf((2 * (k / 2)) as f64 / dim as f64);
    if k % 2 == 0 {
        (delta as f64 * w).sin()
    } else {
        (delta as f64 * w).cos()
    }
}

/// Multi-head attention by explicit loops; `rpe` toggles the relative terms.
fn attention_oracle(x: &Mat, l: &LayerParams, heads: usize, rpe: bool) -> Mat {
    let n = x.len();
    let d = x[0].len();
    let dk = d / heads;
    let q = matmul(x, &to_mat(&l.w_q));
    let k = matmul(x, &to_mat(&l.w_k));
    let v = matmul(x, &to_mat(&l.w_v));
    let a = |i: usize, j: usize, c: usize| if rpe { alpha(j as i64 - i as i64, c, dk) } else { 0.0 };
    let mut concat = vec![vec![0.0; d]; n];
    for h in 0..heads {
        let off = h * dk;
        for i in 0..n {
            let scores: Vec<f64> = (0..n)
                .map(|j| (0..dk).map(|c| q[i][off + c] * (k[j][off + c] + a(i, j, c))).sum::<f64>() / (dk as f64).sqrt())
                .collect();
            let mx = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = scores.iter().map(|s| (s - mx).exp()).collect();
            let z: f64 = e.iter().sum();
            for c in 0..dk {
                concat[i][off + c] = (0..n).map(|j| e[j] / z * (v[j][off + c] + a(i, j, c))).sum();
            }
        }
    }
    matmul(&concat, &to_mat(&l.w_o))
}

fn layer_norm_oracle(x: &Mat, g: &[f64], b: &[f64]) -> Mat {
    x.iter()
        .map(|row| {
            let d = row.len() as f64;
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            row.iter().enumerate().map(|(c, v)| (v - mean) / (var + LAYER_NORM_EPS).sqrt() * g[c] + b[c]).collect()
        })
        .collect()
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

fn random_layer(d: usize, d_ff: usize, rng: &mut ChaCha8Rng) -> LayerParams {
    let mut m = |r: usize, c: usize| Array2::from_shape_fn((r, c), |_| rng.random_range(-0.6..0.6));
    let (w_q, w_k, w_v, w_o, w1, w2) = (m(d, d), m(d, d), m(d, d), m(d, d), m(d, d_ff), m(d_ff, d));
    let mut v = |c: usize| ndarray::Array1::from_shape_fn(c, |_| rng.random_range(-0.5..0.5));
    LayerParams {
        w_q,
        w_k,
        w_v,
        w_o,
        ln1_gain: v(d) + 1.0,
        ln1_bias: v(d),
        w1,
        b1: v(d_ff),
        w2,
        b2: v(d),
        ln2_gain: v(d) + 1.0,
        ln2_bias: v(d),
    }
}

#[test]
fn attention_without_positions_matches_plain_dot_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let heads = [1, 2, 4][case % 3];
        let d = heads * 2 * rng.random_range(1..=2);
        let n = rng.random_range(1..=8);
        let layer = random_layer(d, 4, &mut rng);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let table = RelativePositionTable::zeros(8, d / heads);
        let (out, cache) = attention_layer(x.view(), &layer, heads, &table).unwrap();
        let oracle = attention_oracle(&to_mat(&x), &layer, heads, false);
        for (r, o) in out.rows().into_iter().zip(&oracle) {
            for (a, b) in r.iter().zip(o) {
                assert!((a - b).abs() < 1e-9, "case {case}: {a} vs {b}");
            }
        }
        for p in &cache.probs {
            for row in p.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn attention_with_positions_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..30 {
        let heads = [1, 2][case % 2];
        let d = 8;
        let n = rng.random_range(1..=6);
        let layer = random_layer(d, 4, &mut rng);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let table = RelativePositionTable::new(6, d / heads).unwrap();
        let (out, _) = attention_layer(x.view(), &layer, heads, &table).unwrap();
        let oracle = attention_oracle(&to_mat(&x), &layer, heads, true);
        for (r, o) in out.rows().into_iter().zip(&oracle) {
            for (a, b) in r.iter().zip(o) {
                assert!((a - b).abs() < 1e-9, "case {case}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn single_position_attention_returns_projected_value_plus_alpha_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let layer = random_layer(4, 4, &mut rng);
    let x = Array2::from_shape_fn((1, 4), |_| rng.random_range(-1.0..1.0));
    let table = RelativePositionTable::zeros(1, 4);
    let (out, _) = attention_layer(x.view(), &layer, 1, &table).unwrap();
    let expect = x.dot(&layer.w_v).dot(&layer.w_o);
    assert!(out.iter().zip(expect.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
}

fn tiny_config(layers: usize, heads: usize, d: usize, d_ff: usize, vocab: usize) -> EncoderConfig {
    EncoderConfig { num_layers: layers, num_heads: heads, d_model: d, d_ff, vocab_size: vocab, max_seq_len: 16, rng_seed: 5 }
}

#[test]
fn one_block_matches_straight_line_evaluation() {
    let cfg = tiny_config(1, 1, 4, 6, 7);
    let mut params = EncoderParameters::init_with_std(&cfg, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    params.layers[0] = random_layer(4, 6, &mut rng);
    let encoder = Encoder::new(cfg).unwrap();
    let tokens = [2u32, 5];
    let segments = [0u8, 1];
    let out = encoder.forward(&tokens, &segments, &params).unwrap();

    let x: Mat = tokens
        .iter()
        .zip(&segments)
        .map(|(&t, &s)| (0..4).map(|c| params.token_embed[[t as usize, c]] + params.segment_embed[[s as usize, c]]).collect())
        .collect();
    let l = &params.layers[0];
    let y1 = layer_norm_oracle(&add(&x, &attention_oracle(&x, l, 1, true)), &l.ln1_gain.to_vec(), &l.ln1_bias.to_vec());
    let mut hidden = matmul(&y1, &to_mat(&l.w1));
    for row in &mut hidden {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (*v + l.b1[c]).max(0.0);
        }
    }
    let mut f = matmul(&hidden, &to_mat(&l.w2));
    for row in &mut f {
        for (c, v) in row.iter_mut().enumerate() {
            *v += l.b2[c];
        }
    }
    let y2 = layer_norm_oracle(&add(&y1, &f), &l.ln2_gain.to_vec(), &l.ln2_bias.to_vec());
    for (r, o) in out.hidden.rows().into_iter().zip(&y2) {
        for (a, b) in r.iter().zip(o) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
    assert_eq!(out.cls_vector().to_vec(), out.hidden.row(0).to_vec());
}

#[test]
fn output_depends_only_on_relative_offsets() {
    // The same content under tables built for different maximum lengths
    // (so absolute table rows shift) yields identical hidden states.
    let mut a = tiny_config(2, 2, 8, 12, 9);
    a.max_seq_len = 6;
    let mut b = a;
    b.max_seq_len = 40;
    let params = EncoderParameters::init_with_std(&a, 0.3);
    let tokens = [2u32, 6, 7, 3, 8, 3];
    let segments = [0u8, 0, 0, 0, 1, 1];
    let ha = Encoder::new(a).unwrap().forward(&tokens, &segments, &params).unwrap().hidden;
    let hb = Encoder::new(b).unwrap().forward(&tokens, &segments, &params).unwrap().hidden;
    assert_eq!(ha, hb);
}

fn gradient_corpus() -> (PretrainCorpus, Vocab) {
    let docs: Vec<String> = vec![
        "投资增长很快。工厂开工建设。项目贷款增加。".into(),
        "基建项目开工。挖掘机销量上升。水泥价格上涨。".into(),
    ];
    let lexicon = Lexicon::new(["投资", "增长", "工厂", "开工", "建设", "项目", "贷款", "基建", "挖掘机", "销量", "水泥", "价格"]).unwrap();
    let vocab = Vocab::from_texts(docs.iter().map(String::as_str));
    let corpus = PretrainCorpus::new(&docs, &lexicon, &vocab, &SentenceSplitter::default()).unwrap();
    (corpus, vocab)
}

/// Central differences over every scalar of every tensor.
#[test]
fn analytic_gradients_match_finite_differences() {
    let (corpus, vocab) = gradient_corpus();
    let cfg = EncoderConfig { num_layers: 1, num_heads: 2, d_model: 8, d_ff: 16, vocab_size: vocab.len(), max_seq_len: 40, rng_seed: 3 };
    let encoder = Encoder::new(cfg).unwrap();
    let params = EncoderParameters::init_with_std(&cfg, 0.3);
    let opts = PretrainOptions { max_seq_len: 40, ..PretrainOptions::default() };
    let batch = make_pretrain_batch(&corpus, 3, &opts, 21);
    assert!(batch.iter().any(|e| !e.masking.is_empty()));
    let (_, grads) = pretrain_loss(&encoder, &params, &batch).unwrap();

    let eps = 1e-4;
    let loss_at = |p: &EncoderParameters| pretrain_loss(&encoder, p, &batch).unwrap().0.total;
    let mut worst = (0.0f64, String::new());
    let mut probe = params.clone();
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    for (ti, name) in names.iter().enumerate() {
        let analytic: Vec<f64> = grads.tensors()[ti].1.iter().copied().collect();
        for (si, &a) in analytic.iter().enumerate() {
            let orig = params.tensors()[ti].1.iter().nth(si).copied().unwrap();
            let set = |p: &mut EncoderParameters, v: f64| {
                *p.tensors_mut().swap_remove(ti).1.iter_mut().nth(si).unwrap() = v;
            };
            set(&mut probe, orig + eps);
            let up = loss_at(&probe);
            set(&mut probe, orig - eps);
            let down = loss_at(&probe);
            set(&mut probe, orig);
            let numeric = (up - down) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{si}]: analytic {a:e} numeric {numeric:e}"));
            }
        }
    }
    assert!(worst.0 < 1e-4, "max relative error {} at {}", worst.0, worst.1);
}
