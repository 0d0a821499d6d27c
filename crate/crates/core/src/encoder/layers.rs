//! Sublayers of an encoder block and their backward passes.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::params::LayerParams;
use super::rpe::RelativePositionTable;
use super::EncoderError;

pub const LAYER_NORM_EPS: f64 = 1e-5;

fn check_dims(what: &str, got: (usize, usize), want: (usize, usize)) -> Result<(), EncoderError> {
    if got != want {
        return Err(EncoderError::Shape(format!("{what}: expected {want:?}, got {got:?}")));
    }
    Ok(())
}

/// Values kept from the attention forward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub input: Array2<f64>,
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// One `n x n` row-stochastic matrix per head.
    pub probs: Vec<Array2<f64>>,
    pub heads: Array2<f64>,
}

/// Multi-head self-attention with relative position vectors added to keys
/// and values:
///
/// `score_ij = q_i . (k_j + a_(j-i)) / sqrt(d_k)`,
/// `out_i = sum_j softmax(score_i)_j (v_j + a_(j-i))`,
///
/// heads concatenated and projected by `w_o`.
pub fn attention_layer(
    x: ArrayView2<'_, f64>,
    layer: &LayerParams,
    num_heads: usize,
    table: &RelativePositionTable,
) -> Result<(Array2<f64>, AttentionCache), EncoderError> {
    let (n, d) = x.dim();
    if n == 0 {
        return Err(EncoderError::Shape("attention needs at least one position".into()));
    }
    for (name, w) in [("w_q", &layer.w_q), ("w_k", &layer.w_k), ("w_v", &layer.w_v), ("w_o", &layer.w_o)] {
        check_dims(name, w.dim(), (d, d))?;
    }
    if num_heads == 0 || d % num_heads != 0 || table.dim() != d / num_heads {
        return Err(EncoderError::Shape(format!(
            "{num_heads} heads over width {d} do not match position table width {}",
            table.dim()
        )));
    }
    if n > table.max_seq_len() {
        return Err(EncoderError::SequenceTooLong { len: n, max_seq_len: table.max_seq_len() });
    }
    let dk = d / num_heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let q = x.dot(&layer.w_q);
    let k = x.dot(&layer.w_k);
    let v = x.dot(&layer.w_v);
    let mut heads = Array2::zeros((n, d));
    let mut probs = Vec::with_capacity(num_heads);
    for h in 0..num_heads {
        let cols = s![.., h * dk..(h + 1) * dk];
        let (qh, kh, vh) = (q.slice(cols), k.slice(cols), v.slice(cols));
        let mut p = Array2::zeros((n, n));
        for i in 0..n {
            let qi = qh.row(i);
            let mut row = p.row_mut(i);
            for j in 0..n {
                let a = table.row(j as i64 - i as i64);
                row[j] = (qi.dot(&kh.row(j)) + qi.dot(&a)) * scale;
            }
            softmax_in_place(row.as_slice_mut().expect("row of an owned standard-layout array"));
        }
        let mut out = heads.slice_mut(cols);
        for i in 0..n {
            let mut oi = out.row_mut(i);
            for j in 0..n {
                let pij = p[[i, j]];
                let a = table.row(j as i64 - i as i64);
                oi.scaled_add(pij, &vh.row(j));
                oi.scaled_add(pij, &a);
            }
        }
        probs.push(p);
    }
    let output = heads.dot(&layer.w_o);
    Ok((
        output,
        AttentionCache { input: x.to_owned(), q, k, v, probs, heads },
    ))
}

/// Gradients of one attention layer.
#[derive(Debug, Clone)]
pub struct AttentionGrads {
    pub input: Array2<f64>,
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    pub w_o: Array2<f64>,
}

pub fn attention_backward(
    d_out: ArrayView2<'_, f64>,
    cache: &AttentionCache,
    layer: &LayerParams,
    table: &RelativePositionTable,
) -> AttentionGrads {
    let (n, d) = cache.heads.dim();
    let num_heads = cache.probs.len();
    let dk = d / num_heads;
    let scale = 1.0 / (dk as f64).sqrt();

    let w_o = cache.heads.t().dot(&d_out);
    let d_heads = d_out.dot(&layer.w_o.t());
    let mut dq = Array2::zeros((n, d));
    let mut dk_ = Array2::zeros((n, d));
    let mut dv = Array2::zeros((n, d));
    for (h, p) in cache.probs.iter().enumerate() {
        let cols = s![.., h * dk..(h + 1) * dk];
        let (qh, kh, vh) = (cache.q.slice(cols), cache.k.slice(cols), cache.v.slice(cols));
        let dout_h = d_heads.slice(cols);
        // dP_ij = dout_i . (v_j + a_(j-i))
        let mut dp = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            let doi = dout_h.row(i);
            for j in 0..n {
                let a = table.row(j as i64 - i as i64);
                dp[[i, j]] = doi.dot(&vh.row(j)) + doi.dot(&a);
            }
        }
        // dV_j = sum_i P_ij dout_i
        dv.slice_mut(cols).assign(&p.t().dot(&dout_h));
        // softmax backward
        let mut ds = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            let inner: f64 = p.row(i).dot(&dp.row(i));
            for j in 0..n {
                ds[[i, j]] = p[[i, j]] * (dp[[i, j]] - inner) * scale;
            }
        }
        let mut dqh = dq.slice_mut(cols);
        for i in 0..n {
            let mut dqi = dqh.row_mut(i);
            for j in 0..n {
                let a = table.row(j as i64 - i as i64);
                dqi.scaled_add(ds[[i, j]], &kh.row(j));
                dqi.scaled_add(ds[[i, j]], &a);
            }
        }
        dk_.slice_mut(cols).assign(&ds.t().dot(&qh));
    }
    let x = &cache.input;
    let input = dq.dot(&layer.w_q.t()) + dk_.dot(&layer.w_k.t()) + dv.dot(&layer.w_v.t());
    AttentionGrads {
        input,
        w_q: x.t().dot(&dq),
        w_k: x.t().dot(&dk_),
        w_v: x.t().dot(&dv),
        w_o,
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Position-wise feed-forward network `max(0, x W1 + b1) W2 + b2`.
pub fn ffn(
    x: ArrayView2<'_, f64>,
    w1: &Array2<f64>,
    b1: &Array1<f64>,
    w2: &Array2<f64>,
    b2: &Array1<f64>,
) -> Result<Array2<f64>, EncoderError> {
    Ok(ffn_forward(x, w1, b1, w2, b2)?.0)
}

#[derive(Debug, Clone)]
pub struct FfnCache {
    pub input: Array2<f64>,
    pub pre_activation: Array2<f64>,
}

pub(crate) fn ffn_forward(
    x: ArrayView2<'_, f64>,
    w1: &Array2<f64>,
    b1: &Array1<f64>,
    w2: &Array2<f64>,
    b2: &Array1<f64>,
) -> Result<(Array2<f64>, FfnCache), EncoderError> {
    let d = x.ncols();
    let f = w1.ncols();
    check_dims("w1", w1.dim(), (d, f))?;
    check_dims("w2", w2.dim(), (f, w2.ncols()))?;
    if b1.len() != f || b2.len() != w2.ncols() {
        return Err(EncoderError::Shape("ffn bias length".into()));
    }
    let pre = x.dot(w1) + b1;
    let out = pre.mapv(|v| v.max(0.0)).dot(w2) + b2;
    Ok((out, FfnCache { input: x.to_owned(), pre_activation: pre }))
}

#[derive(Debug, Clone)]
pub struct FfnGrads {
    pub input: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

pub(crate) fn ffn_backward(d_out: ArrayView2<'_, f64>, cache: &FfnCache, w1: &Array2<f64>, w2: &Array2<f64>) -> FfnGrads {
    let act = cache.pre_activation.mapv(|v| v.max(0.0));
    let mut d_pre = d_out.dot(&w2.t());
    d_pre.zip_mut_with(&cache.pre_activation, |g, &z| {
        if z <= 0.0 {
            *g = 0.0
        }
    });
    FfnGrads {
        input: d_pre.dot(&w1.t()),
        w1: cache.input.t().dot(&d_pre),
        b1: d_pre.sum_axis(Axis(0)),
        w2: act.t().dot(&d_out),
        b2: d_out.sum_axis(Axis(0)),
    }
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    pub normalized: Array2<f64>,
    pub inv_std: Array1<f64>,
}

/// Row-wise layer normalization with gain and bias.
pub fn layer_norm(
    x: ArrayView2<'_, f64>,
    gain: ArrayView1<'_, f64>,
    bias: ArrayView1<'_, f64>,
) -> (Array2<f64>, LayerNormCache) {
    let (n, d) = x.dim();
    let mut normalized = Array2::zeros((n, d));
    let mut inv_std = Array1::zeros(n);
    for (i, row) in x.rows().into_iter().enumerate() {
        let mean = row.sum() / d as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std[i] = is;
        normalized.row_mut(i).assign(&row.mapv(|v| (v - mean) * is));
    }
    let out = &normalized * &gain + bias;
    (out, LayerNormCache { normalized, inv_std })
}

pub(crate) fn layer_norm_backward(
    d_out: ArrayView2<'_, f64>,
    cache: &LayerNormCache,
    gain: ArrayView1<'_, f64>,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let d = d_out.ncols() as f64;
    let d_gain = (&d_out * &cache.normalized).sum_axis(Axis(0));
    let d_bias = d_out.sum_axis(Axis(0));
    let d_hat = &d_out * &gain;
    let mut d_in = Array2::zeros(d_out.dim());
    for i in 0..d_out.nrows() {
        let dh = d_hat.row(i);
        let xh = cache.normalized.row(i);
        let mean_dh = dh.sum() / d;
        let mean_dh_xh = dh.dot(&xh) / d;
        let is = cache.inv_std[i];
        d_in.row_mut(i)
            .assign(&((&dh - mean_dh - &xh.mapv(|v| v * mean_dh_xh)) * is));
    }
    (d_in, d_gain, d_bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ffn_zero_input_gives_b2() {
        let x = Array2::zeros((3, 2));
        let w1 = array![[1.0, -2.0, 0.5], [0.3, 0.2, 0.1]];
        let b1 = array![-1.0, 0.0, -0.25];
        let w2 = Array2::from_elem((3, 2), 7.0);
        let b2 = array![0.5, -0.5];
        let out = ffn(x.view(), &w1, &b1, &w2, &b2).unwrap();
        for row in out.rows() {
            assert_eq!(row, b2.view());
        }
    }

    #[test]
    fn ffn_identity_is_relu() {
        let x = array![[1.0, -2.0], [-0.5, 3.0]];
        let eye = Array2::eye(2);
        let zero = Array1::zeros(2);
        let out = ffn(x.view(), &eye, &zero, &eye, &zero).unwrap();
        assert_eq!(out, array![[1.0, 0.0], [0.0, 3.0]]);
    }

    #[test]
    fn ffn_worked_example() {
        let x = array![[1.0, -1.0]];
        let out = ffn(x.view(), &Array2::eye(2), &Array1::zeros(2), &array![[1.0], [1.0]], &array![0.5]).unwrap();
        assert_eq!(out, array![[1.5]]);
    }

    #[test]
    fn ffn_shape_mismatch() {
        let x = Array2::zeros((1, 3));
        assert!(ffn(x.view(), &Array2::eye(2), &Array1::zeros(2), &Array2::eye(2), &Array1::zeros(2)).is_err());
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array::from_shape_fn((5, 8), |_| rng.random_range(-3.0..3.0));
        let (_, cache) = layer_norm(x.view(), Array1::ones(8).view(), Array1::zeros(8).view());
        for row in cache.normalized.rows() {
            let mean = row.sum() / 8.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    fn single_head_layer(d: usize, rng: &mut ChaCha8Rng) -> LayerParams {
        let mut m = || Array::from_shape_fn((d, d), |_| rng.random_range(-1.0..1.0));
        LayerParams {
            w_q: m(),
            w_k: m(),
            w_v: m(),
            w_o: m(),
            ln1_gain: Array1::ones(d),
            ln1_bias: Array1::zeros(d),
            w1: Array2::eye(d),
            b1: Array1::zeros(d),
            w2: Array2::eye(d),
            b2: Array1::zeros(d),
            ln2_gain: Array1::ones(d),
            ln2_bias: Array1::zeros(d),
        }
    }

    #[test]
    fn single_position_returns_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut layer = single_head_layer(4, &mut rng);
        layer.w_o = Array2::eye(4);
        let x = array![[0.3, -0.2, 1.0, 0.5]];
        let (out, cache) = attention_layer(x.view(), &layer, 1, &RelativePositionTable::zeros(4, 4)).unwrap();
        assert_eq!(cache.probs[0][[0, 0]], 1.0);
        let v = x.dot(&layer.w_v);
        for c in 0..4 {
            assert!((out[[0, c]] - v[[0, c]]).abs() < 1e-15);
        }
    }

    #[test]
    fn probability_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = single_head_layer(8, &mut rng);
        let x = Array::from_shape_fn((6, 8), |_| rng.random_range(-2.0..2.0));
        let table = RelativePositionTable::new(8, 4).unwrap();
        let (_, cache) = attention_layer(x.view(), &layer, 2, &table).unwrap();
        for p in &cache.probs {
            for row in p.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn too_long_sequence_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = single_head_layer(4, &mut rng);
        let x = Array2::zeros((5, 4));
        let table = RelativePositionTable::new(4, 4).unwrap();
        assert!(matches!(
            attention_layer(x.view(), &layer, 1, &table),
            Err(EncoderError::SequenceTooLong { .. })
        ));
    }
}
