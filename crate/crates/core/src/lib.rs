//! Domain-aware synthetic data generation and scoring for event detection.
//!
//! The pipeline mines per-event trigger lexicons from unlabeled text ([`scout`]), generates
//! passages conditioned on sampled triggers ([`narrator`]), verifies and completes their
//! annotations ([`refiner`]), and balances the result per event type ([`dataset`]).
//! [`metrics`] scores predictions and measures trigger overlap with a gold set.

pub mod corpus;
pub mod dataset;
pub mod error;
pub mod fewshot;
pub mod gateway;
pub mod metrics;
pub mod narrator;
pub mod ontology;
pub mod prompts;
pub mod refiner;
pub mod scout;
pub mod seed;
pub mod text;

pub use corpus::{load_corpus, sample_corpus, Corpus, CorpusFormat, UnlabeledSentence};
pub use dataset::{
    append_gold, greedy_sample, read_dataset, write_dataset, Dataset, DatasetMeta, EventMention,
    Origin, SampleReport, SyntheticInstance,
};
pub use error::{Error, Result};
pub use fewshot::{render_examples, sample_few_shot, FewShotBank};
pub use gateway::{
    Gateway, GenerationConfig, HttpBackend, LlmExchange, LlmRequest, ReplayBackend, ReplayEntry,
};
pub use metrics::{extract_gold_triggers, hit_rate, score, HitRateReport, ScoreReport, TriggerMatch};
pub use narrator::{sample_label_specs, DraftInstance, LabelSpec, Narrator, SpecSampling};
pub use ontology::{load_ontology, EventType, Ontology};
pub use prompts::PromptSet;
pub use refiner::{anchor_trigger, verify_and_anchor, Anchor, AnchorTier, Refiner, SuffixSet};
pub use scout::{
    aggregate, filter_top_t, select_triggers, Scout, SelectionStrategy, SentenceExtraction,
    TriggerLexicon, TriggerStat,
};
