//! `RunConfig`: the JSON config file merged with command-line flags (flags win).

use std::path::{Path, PathBuf};

use edsynth_core::gateway::GenerationConfig;
use edsynth_core::narrator::{SpecSampling, TriggerSampling};
use edsynth_core::SelectionStrategy;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Where Scout takes triggers from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TriggerSource {
    /// Extraction over the unlabeled corpus.
    #[default]
    Corpus,
    /// Triggers proposed from the model's own knowledge.
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ontology: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    /// Output directory for pipeline commands; report file for `score` / `hitrate`.
    pub out: Option<PathBuf>,
    pub replay: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub drafts: Option<PathBuf>,
    pub generation: GenerationConfig,
    pub trigger_source: TriggerSource,
    pub t: usize,
    pub n: usize,
    pub strategy: String,
    pub pair_probability: f64,
    pub oversample_factor: f64,
    pub trigger_sampling: TriggerSampling,
    pub k: usize,
    /// Root seed; every random choice in a run derives from it.
    pub seed: u64,
    pub resume: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ontology: None,
            corpus: None,
            templates: None,
            out: None,
            replay: None,
            record: None,
            gold: None,
            lexicon: None,
            drafts: None,
            generation: GenerationConfig::default(),
            trigger_source: TriggerSource::Corpus,
            t: 10,
            n: 50,
            strategy: SelectionStrategy::FrequencyRanking.to_string(),
            pair_probability: 0.5,
            oversample_factor: 1.5,
            trigger_sampling: TriggerSampling::Uniform,
            k: 0,
            seed: 0,
            resume: false,
        }
    }
}

impl RunConfig {
    /// Reads a JSON config; relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config("config", format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for field in [
            &mut cfg.ontology,
            &mut cfg.corpus,
            &mut cfg.templates,
            &mut cfg.out,
            &mut cfg.replay,
            &mut cfg.record,
            &mut cfg.gold,
            &mut cfg.lexicon,
            &mut cfg.drafts,
        ] {
            if let Some(p) = field.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn selection_strategy(&self) -> CliResult<SelectionStrategy> {
        self.strategy
            .parse()
            .map_err(|e: edsynth_core::Error| CliError::config("config", e.to_string()))
    }

    pub fn spec_sampling(&self) -> SpecSampling {
        SpecSampling {
            count_per_event: self.n,
            pair_probability: self.pair_probability,
            oversample_factor: self.oversample_factor,
            trigger_sampling: self.trigger_sampling,
        }
    }

    /// Generation settings with the root seed applied.
    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            seed: self.seed,
            ..self.generation.clone()
        }
    }

    /// Range checks on the numeric knobs.
    pub fn validate(&self) -> CliResult<()> {
        self.generation().validate()?;
        self.selection_strategy()?;
        let bad = |m: &str| Err(CliError::config("config", m.to_string()));
        if self.t == 0 {
            return bad("t must be >= 1");
        }
        if self.n == 0 {
            return bad("n must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.pair_probability) {
            return bad("pair_probability must be in [0, 1]");
        }
        if self.oversample_factor.is_nan() || self.oversample_factor <= 0.0 {
            return bad("oversample_factor must be positive");
        }
        if self.k > 0 && self.gold.is_none() {
            return bad("k > 0 needs a gold dataset (--gold)");
        }
        Ok(())
    }
}

/// The named path must be set and exist.
pub fn require_path<'a>(value: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    let path = value
        .as_deref()
        .ok_or_else(|| CliError::config("missing_argument", format!("{flag} is required")))?;
    existing(path, flag)
}

/// `path` itself, or a config error naming `flag` when it does not exist.
pub fn existing<'a>(path: &'a Path, flag: &str) -> CliResult<&'a Path> {
    if !path.exists() {
        return Err(CliError::config(
            "missing_path",
            format!("{flag}: {} does not exist", path.display()),
        ));
    }
    Ok(path)
}
