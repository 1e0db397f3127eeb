//! Run configuration: a TOML file with a `[pipeline]` section mirroring
//! [`PipelineConfig`] and a `[data]` section naming the inputs.
//!
//! ```toml
//! [pipeline]
//! aux_languages = ["ka", "kb"]
//! unseen_languages = ["ke"]
//! n_per_language = 2000
//! synth_per_language = 2000
//! seed = 1
//!
//! [data]
//! source = "synthetic"      # the bundled cipher-language benchmark
//! train_fraction = 0.9
//! ```
//!
//! With `source = "files"` the section instead lists paths: `english_mono`,
//! and tables `aux` (lang → pair file), `foreign_mono` (lang → text file) and
//! optionally `test` (lang → gold `xx<TAB>en` pair file). Relative paths are
//! resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use ibt_core::hash::sha256_hex;
use ibt_core::orchestrator::PipelineConfig;
use ibt_core::Lang;

use crate::formats::read_file;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub pipeline: PipelineConfig,
    pub data: DataConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataConfig {
    Synthetic {
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
        /// Seed of the generated lexicons; defaults to the pipeline seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        family_seed: Option<u64>,
    },
    Files {
        english_mono: PathBuf,
        aux: BTreeMap<Lang, PathBuf>,
        foreign_mono: BTreeMap<Lang, PathBuf>,
        #[serde(default)]
        test: BTreeMap<Lang, PathBuf>,
    },
}

fn default_train_fraction() -> f64 {
    0.9
}

impl Default for Config {
    /// The bundled benchmark: two families of four auxiliary languages and
    /// one unseen language each.
    fn default() -> Self {
        let mut pipeline = PipelineConfig::new(
            &["ka", "kb", "kc", "kd", "za", "zb", "zc", "zd"],
            &["ke", "ze"],
            2000,
            2000,
        );
        pipeline.seed = 1;
        Config { pipeline, data: DataConfig::Synthetic { train_fraction: default_train_fraction(), family_seed: None } }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        let mut cfg: Config = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let DataConfig::Files { english_mono, aux, foreign_mono, test } = &mut cfg.data {
            let base = path.parent().unwrap_or(Path::new("."));
            let resolve = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            resolve(english_mono);
            aux.values_mut().chain(foreign_mono.values_mut()).chain(test.values_mut()).for_each(resolve);
        }
        cfg.pipeline.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.pipeline.seed = s;
        }
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }
}
