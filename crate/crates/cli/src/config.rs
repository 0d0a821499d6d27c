use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aif_core::index::GapPolicy;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Diagnostic};

/// Input and output locations. Relative paths resolve against the directory
/// holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub stopwords: PathBuf,
    pub finetune: PathBuf,
    pub hierarchy: PathBuf,
    /// Long-format panel files; rows are concatenated.
    pub panel: Vec<PathBuf>,
    pub investment: PathBuf,
    pub availability: PathBuf,
    pub exclusions: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderSection {
    pub num_layers: usize,
    pub num_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub max_seq_len: usize,
}

impl Default for EncoderSection {
    fn default() -> Self {
        EncoderSection { num_layers: 2, num_heads: 2, d_model: 32, d_ff: 64, max_seq_len: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainSection {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for PretrainSection {
    fn default() -> Self {
        PretrainSection { steps: 200, batch_size: 8, learning_rate: 5e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FinetuneSection {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
}

impl Default for FinetuneSection {
    fn default() -> Self {
        FinetuneSection { batch_size: 16, epochs: 10, learning_rate: 5e-4, validation_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Knobs {
    pub top_k: usize,
    pub screen_threshold: f64,
    pub max_lag: usize,
    pub mask_rate: f64,
    pub jan_adjust: bool,
    pub national_region: String,
    pub gap_policy: GapPolicy,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            top_k: 50,
            screen_threshold: 0.1,
            max_lag: 5,
            mask_rate: 0.15,
            jan_adjust: true,
            national_region: "national".into(),
            gap_policy: GapPolicy::Reject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub pretrain: PretrainSection,
    #[serde(default)]
    pub finetune: FinetuneSection,
    #[serde(default)]
    pub knobs: Knobs,
    /// Polarity for expanded words, keyed by word (`positive`, `negative`, `two_way`).
    #[serde(default)]
    pub polarity_overrides: BTreeMap<String, String>,
    #[serde(default)]
    pub rng_seed: u64,
}

/// A parsed config plus the raw bytes it came from (for hashing).
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub config: RunConfig,
    pub raw: Vec<u8>,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_slice(&raw).map_err(|e| {
            CliError::Schema(vec![Diagnostic::new(path, Some(e.line()), None, format!("invalid config: {e}"))])
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { path: path.to_path_buf(), config, raw, base_dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.output_dir)
    }
}

impl RunConfig {
    /// Range checks on knobs and encoder sizes.
    pub fn check_knobs(&self, file: &Path) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut bad = |field: &str, msg: String| out.push(Diagnostic::new(file, None, Some(field), msg));
        let k = &self.knobs;
        if k.top_k == 0 {
            bad("knobs.top_k", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&k.screen_threshold) {
            bad("knobs.screen_threshold", format!("{} outside [0, 1]", k.screen_threshold));
        }
        if k.max_lag > 24 {
            bad("knobs.max_lag", format!("{} exceeds 24 months", k.max_lag));
        }
        if !(k.mask_rate > 0.0 && k.mask_rate < 1.0) {
            bad("knobs.mask_rate", format!("{} outside (0, 1)", k.mask_rate));
        }
        if let GapPolicy::Interpolate { max_gap_days } = k.gap_policy {
            if max_gap_days == 0 || max_gap_days > 3 {
                bad("knobs.gap_policy.max_gap_days", format!("{max_gap_days} outside 1..=3"));
            }
        }
        let e = &self.encoder;
        if e.num_heads == 0 || !e.d_model.is_multiple_of(e.num_heads) || !(e.d_model / e.num_heads.max(1)).is_multiple_of(2) {
            bad("encoder", format!("d_model {} must split into {} heads of even width", e.d_model, e.num_heads));
        }
        if e.d_ff == 0 || e.max_seq_len < 8 {
            bad("encoder", "d_ff must be positive and max_seq_len at least 8".into());
        }
        for (section, lr) in [("pretrain.learning_rate", self.pretrain.learning_rate), ("finetune.learning_rate", self.finetune.learning_rate)] {
            if !(lr > 0.0 && lr.is_finite()) {
                bad(section, format!("{lr} must be positive"));
            }
        }
        if self.pretrain.steps == 0 || self.pretrain.batch_size == 0 || self.finetune.batch_size == 0 {
            bad("pretrain/finetune", "steps and batch sizes must be at least 1".into());
        }
        if !(self.finetune.validation_fraction > 0.0 && self.finetune.validation_fraction < 1.0) {
            bad("finetune.validation_fraction", format!("{} outside (0, 1)", self.finetune.validation_fraction));
        }
        for (word, pol) in &self.polarity_overrides {
            if pol.parse::<aif_core::index::Polarity>().is_err() {
                bad("polarity_overrides", format!("{word}: unknown polarity {pol:?}"));
            }
        }
        out
    }
}
