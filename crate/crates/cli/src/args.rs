use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, TriggerSource};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "edsynth", version, about = "Synthetic event detection data from an ontology and unlabeled text")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine a trigger lexicon from the corpus (writes lexicon.json).
    Scout(PipelineArgs),
    /// Generate passages from a lexicon (writes drafts.jsonl).
    Narrate(PipelineArgs),
    /// Verify, refine and balance drafts (writes dataset.jsonl).
    Refine(PipelineArgs),
    /// Scout, narrate and refine in one run.
    Generate(PipelineArgs),
    /// Label corpus sentences directly (weak supervision).
    Label(PipelineArgs),
    /// Eve-I / Tri-C scores of predictions against gold.
    Score(ScoreArgs),
    /// Overlap of synthesized triggers with gold triggers.
    Hitrate(HitRateArgs),
    /// Seeded random subset of a corpus.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replay log to serve completions from instead of a live endpoint.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Write every exchange of this run to a replay log.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Directory of prompt template overrides.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Triggers kept per event type.
    #[arg(long)]
    pub t: Option<usize>,
    /// Instances per event type in the final dataset.
    #[arg(long)]
    pub n: Option<usize>,
    /// Few-shot examples per event type (needs --gold).
    #[arg(long)]
    pub k: Option<usize>,
    /// frequency_ranking | uniform_sampling | weighted_sampling | min_count:M
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub pair_prob: Option<f64>,
    #[arg(long)]
    pub oversample: Option<f64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_enum)]
    pub trigger_source: Option<TriggerSource>,
    /// Gold dataset for few-shot examples.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Lexicon file for `narrate` (default: <out>/lexicon.json).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Drafts file for `refine` (default: <out>/drafts.jsonl).
    #[arg(long)]
    pub drafts: Option<PathBuf>,
    /// Reuse <out>/lexicon.json instead of running Scout again.
    #[arg(long)]
    pub resume: bool,
}

impl PipelineArgs {
    /// Config file (if any) with every given flag applied on top.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$($field).+ = v.clone().into(); })*
            };
        }
        set!(
            ontology => ontology, corpus => corpus, out => out, replay => replay,
            record => record, templates => templates, gold => gold, lexicon => lexicon,
            drafts => drafts, seed => seed, t => t, n => n, k => k, strategy => strategy,
            pair_prob => pair_probability, oversample => oversample_factor,
            parallelism => generation.parallelism, model => generation.model,
            trigger_source => trigger_source,
        );
        if self.resume {
            c.resume = true;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Predicted dataset (JSONL).
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Compare normalized trigger strings instead of spans for Tri-C.
    #[arg(long)]
    pub string_match: bool,
    /// Report file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HitRateArgs {
    /// Synthetic dataset (JSONL).
    #[arg(long)]
    pub synthetic: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Count every mention instead of distinct triggers.
    #[arg(long)]
    pub weighted: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Share of sentences to keep, in (0, 1].
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output corpus file (JSONL).
    #[arg(long)]
    pub out: PathBuf,
}
