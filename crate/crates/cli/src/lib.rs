//! Pipeline driver: config loading, input validation, stage execution and
//! the run manifest.

pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;
pub mod validate;

use std::fmt;

pub use config::{LoadedConfig, RunConfig};
pub use error::{CliError, Diagnostic};
pub use manifest::RunManifest;
pub use stages::{run, RunOptions};
pub use validate::{validate_for, validate_inputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Stage {
    Pretrain,
    Finetune,
    Expand,
    BuildIndex,
    Analyze,
    Report,
    All,
}

impl Stage {
    pub const PIPELINE: [Stage; 6] =
        [Stage::Pretrain, Stage::Finetune, Stage::Expand, Stage::BuildIndex, Stage::Analyze, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Pretrain => "pretrain",
            Stage::Finetune => "finetune",
            Stage::Expand => "expand",
            Stage::BuildIndex => "build-index",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
