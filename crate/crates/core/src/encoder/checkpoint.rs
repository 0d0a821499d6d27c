//! Flat binary parameter container.
//!
//! Layout, all integers little-endian `u32`, all values little-endian `f64`:
//!
//! ```text
//! "AIFX1"
//! num_layers num_heads d_model d_ff vocab_size max_seq_len seed_lo seed_hi
//! tensors in EncoderParameters::tensors() order, each row-major
//! ```

use std::io::{Read, Write};

use super::config::EncoderConfig;
use super::params::EncoderParameters;
use super::EncoderError;

pub const MAGIC: &[u8; 5] = b"AIFX1";

pub fn write_checkpoint<W: Write>(mut w: W, config: &EncoderConfig, params: &EncoderParameters) -> Result<(), EncoderError> {
    let io = |e: std::io::Error| EncoderError::Io(e.to_string());
    w.write_all(MAGIC).map_err(io)?;
    let fields = [
        config.num_layers,
        config.num_heads,
        config.d_model,
        config.d_ff,
        config.vocab_size,
        config.max_seq_len,
    ];
    for f in fields {
        let f = u32::try_from(f).map_err(|_| EncoderError::Config(format!("{f} does not fit in u32")))?;
        w.write_all(&f.to_le_bytes()).map_err(io)?;
    }
    w.write_all(&(config.rng_seed as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&((config.rng_seed >> 32) as u32).to_le_bytes()).map_err(io)?;
    for (_, t) in params.tensors() {
        for v in t.iter() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(EncoderConfig, EncoderParameters), EncoderError> {
    let io = |e: std::io::Error| EncoderError::Checkpoint(e.to_string());
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(EncoderError::Checkpoint("bad magic bytes".into()));
    }
    let mut word = [0u8; 4];
    let mut fields = [0u32; 8];
    for f in &mut fields {
        r.read_exact(&mut word).map_err(io)?;
        *f = u32::from_le_bytes(word);
    }
    let config = EncoderConfig {
        num_layers: fields[0] as usize,
        num_heads: fields[1] as usize,
        d_model: fields[2] as usize,
        d_ff: fields[3] as usize,
        vocab_size: fields[4] as usize,
        max_seq_len: fields[5] as usize,
        rng_seed: fields[6] as u64 | ((fields[7] as u64) << 32),
    };
    config.validate()?;
    let mut params = EncoderParameters::zeros(&config);
    let mut value = [0u8; 8];
    for (_, mut t) in params.tensors_mut() {
        for v in t.iter_mut() {
            r.read_exact(&mut value).map_err(io)?;
            *v = f64::from_le_bytes(value);
        }
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(io)?;
    if !rest.is_empty() {
        return Err(EncoderError::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    if !params.is_finite() {
        return Err(EncoderError::Checkpoint("non-finite parameter".into()));
    }
    Ok((config, params))
}
