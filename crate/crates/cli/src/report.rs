//! Run report written next to the stage artifacts. Contains no timings, so runs under replay
//! produce identical reports.

use std::collections::BTreeMap;

use edsynth_core::dataset::SampleReport;
use edsynth_core::fewshot::FewShotSummary;
use edsynth_core::narrator::NarrateReport;
use edsynth_core::refiner::RefineReport;
use edsynth_core::scout::ScoutReport;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub pipeline_version: String,
    pub seed: u64,
    pub model: String,
    pub backend: String,
    pub ontology_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scout: Option<ScoutSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub narrate: Option<NarrateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<RefineSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub few_shot: Option<FewShotSummary>,
    pub counts: Counts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoutSection {
    /// Lexicon loaded from a previous run instead of extracted.
    pub resumed: bool,
    pub source: String,
    pub strategy: String,
    pub t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ScoutReport>,
    /// Triggers kept per event type.
    pub lexicon_sizes: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RefineSection {
    pub drafts: usize,
    pub rejected: usize,
    pub rejected_ids: Vec<String>,
    pub pool: usize,
    pub refiner: RefineReport,
    pub sample: SampleReport,
    pub gold_appended: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSection {
    pub extraction: ScoutReport,
    /// Extracted mentions that could not be placed in their sentence.
    pub unanchored: usize,
    pub instances: usize,
}

/// Headline counters. `None` where the stage did not run in this command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub extracted: Option<usize>,
    /// Scout answers discarded: unknown type names plus triggers absent from their sentence.
    pub dropped: Option<usize>,
    pub specs: Option<usize>,
    pub drafts: Option<usize>,
    pub generation_failures: Option<usize>,
    pub rejected: Option<usize>,
    pub pool: Option<usize>,
    /// Mentions added by the refiner.
    pub refined: Option<usize>,
    pub sampled: Option<usize>,
    pub gold_appended: Option<usize>,
    /// Event types that ended below N.
    pub shortfalls: Option<Vec<String>>,
    pub backend_errors: usize,
}
