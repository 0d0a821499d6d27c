use ndarray::{Array2, ArrayView1};

use super::EncoderError;

/// Fixed sinusoidal relative-position table, indexed by `delta = j - i`.
///
/// `alpha[delta][2k] = sin(delta / 10000^(2k/dim))` and
/// `alpha[delta][2k+1] = cos(delta / 10000^(2k/dim))`. The same vectors are
/// added to keys and to values.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativePositionTable {
    max_seq_len: usize,
    values: Array2<f64>,
}

impl RelativePositionTable {
    pub fn new(max_seq_len: usize, dim: usize) -> Result<Self, EncoderError> {
        if dim == 0 || !dim.is_multiple_of(2) || max_seq_len == 0 {
            return Err(EncoderError::Config(format!(
                "position table needs an even dimension and max_seq_len >= 1 (got dim {dim}, len {max_seq_len})"
            )));
        }
        let rows = 2 * max_seq_len - 1;
        let values = Array2::from_shape_fn((rows, dim), |(r, k)| {
            closed_form(r as i64 - (max_seq_len as i64 - 1), k, dim)
        });
        Ok(RelativePositionTable { max_seq_len, values })
    }

    /// All-zero table; attention then reduces to plain scaled dot-product.
    pub fn zeros(max_seq_len: usize, dim: usize) -> Self {
        RelativePositionTable {
            max_seq_len,
            values: Array2::zeros((2 * max_seq_len.max(1) - 1, dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn max_seq_len(&self) -> usize {
        self.max_seq_len
    }

    pub fn lookup(&self, delta: i64) -> Result<ArrayView1<'_, f64>, EncoderError> {
        if delta.unsigned_abs() as usize >= self.max_seq_len {
            return Err(EncoderError::DeltaOutOfRange { delta, max_seq_len: self.max_seq_len });
        }
        Ok(self.row(delta))
    }

    /// Unchecked lookup for in-range offsets.
    pub(crate) fn row(&self, delta: i64) -> ArrayView1<'_, f64> {
        self.values.row((delta + self.max_seq_len as i64 - 1) as usize)
    }
}

fn closed_form(delta: i64, k: usize, dim: usize) -> f64 {
    let exponent = (2 * (k / 2)) as f64 / dim as f64;
    let angle = delta as f64 / 10000f64.powf(exponent);
    if k.is_multiple_of(2) {
        angle.sin()
    } else {
        angle.cos()
    }
}
