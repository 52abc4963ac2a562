//! Pipeline configuration, read from TOML. Every field has a default, so an
//! empty file (or none) is valid.

use std::path::{Path, PathBuf};

use anyhow::Context as _;
use rerank_core::attribution::AttributionConfig;
use rerank_core::explain::{LlmBackendConfig, Variant};
use rerank_core::retrieval::{Analyzer, Bm25Params};
use rerank_core::training::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    /// Items file for the index. Defaults to the judged items of the dataset.
    pub corpus: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub split_seed: u64,
    pub bm25: Bm25Params<f64>,
    pub analyzer: Analyzer,
    /// First-stage depth for free-text queries.
    pub retrieve_m: usize,
    pub train: TrainConfig<f64>,
    pub attribution: AttributionConfig,
    pub backend: LlmBackendConfig,
    pub explain: ExplainSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("fixtures/dataset_94.jsonl"),
            corpus: None,
            out_dir: PathBuf::from("out"),
            split_seed: 42,
            bm25: Bm25Params::default(),
            analyzer: Analyzer::default(),
            retrieve_m: 10,
            train: TrainConfig::default(),
            attribution: AttributionConfig::default(),
            backend: LlmBackendConfig::default(),
            explain: ExplainSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    /// Ranked entries per list that get attributed and explained.
    pub top_n: usize,
    pub variants: Vec<Variant>,
    pub offline: bool,
    /// Replaces the built-in with-attribution template.
    pub template_file: Option<PathBuf>,
    /// Replaces the built-in without-attribution template.
    pub ablation_template_file: Option<PathBuf>,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            top_n: 1,
            variants: Variant::BOTH.to_vec(),
            offline: false,
            template_file: None,
            ablation_template_file: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: Self =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.bm25.validate()?;
        self.train.validate()?;
        self.attribution.validate()?;
        self.backend.validate()?;
        anyhow::ensure!(self.retrieve_m >= 1, "retrieve_m must be >= 1");
        anyhow::ensure!(self.explain.top_n >= 1, "explain.top_n must be >= 1");
        anyhow::ensure!(!self.explain.variants.is_empty(), "explain.variants is empty");
        Ok(())
    }
}
