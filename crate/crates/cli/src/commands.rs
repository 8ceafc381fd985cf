//! One function per subcommand. Each returns its report; files go to the configured output.

use std::fs;
use std::path::{Path, PathBuf};

use edsynth_core::dataset::{dataset_to_jsonl, DatasetMeta, PIPELINE_VERSION};
use edsynth_core::fewshot::FewShotBank;
use edsynth_core::gateway::{load_log, record_log, Backend};
use edsynth_core::narrator::{read_drafts, write_drafts};
use edsynth_core::scout::{extractions_to_dataset, LexiconProvenance};
use edsynth_core::{
    aggregate, append_gold, greedy_sample, hit_rate, load_corpus, load_ontology, read_dataset,
    sample_corpus, sample_few_shot, sample_label_specs, score, verify_and_anchor,
    extract_gold_triggers, Corpus, CorpusFormat, Dataset, DraftInstance, Gateway, HitRateReport,
    HttpBackend, Narrator, Ontology, PromptSet, Refiner, Scout, ScoreReport, SuffixSet,
    TriggerLexicon, TriggerMatch,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{existing, require_path, RunConfig, TriggerSource};
use crate::error::{CliError, CliResult};
use crate::report::{Counts, LabelSection, RefineSection, RunReport, ScoutSection};

pub const LEXICON_FILE: &str = "lexicon.json";
pub const DRAFTS_FILE: &str = "drafts.jsonl";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const PROVENANCE_FILE: &str = "provenance.jsonl";

/// Everything a pipeline stage needs, resolved and validated before any stage runs.
struct Context {
    cfg: RunConfig,
    out: PathBuf,
    ontology: Ontology,
    prompts: PromptSet,
    gateway: Gateway,
    backend: &'static str,
    few_shot: FewShotBank,
}

fn open_gateway(cfg: &RunConfig, custom: Option<Gateway>) -> CliResult<(Gateway, &'static str)> {
    let parallelism = cfg.generation.parallelism;
    let (gateway, name) = if let Some(g) = custom {
        (g, "custom")
    } else if let Some(path) = &cfg.replay {
        let path = existing(path, "--replay")?;
        (Gateway::new(load_log(path)?, parallelism), "replay")
    } else if let Some(http) = HttpBackend::from_env() {
        (Gateway::new(http, parallelism), "http")
    } else {
        return Err(CliError::config(
            "no_backend",
            "no LLM backend: pass --replay <log> or set EDSYNTH_API_BASE (and EDSYNTH_API_KEY)",
        ));
    };
    Ok((if cfg.record.is_some() { gateway.recording() } else { gateway }, name))
}

fn context(cfg: &RunConfig) -> CliResult<Context> {
    context_with(cfg, None)
}

fn context_with(cfg: &RunConfig, custom: Option<Gateway>) -> CliResult<Context> {
    cfg.validate()?;
    let ontology = load_ontology(require_path(&cfg.ontology, "--ontology")?)?;
    let prompts = match &cfg.templates {
        Some(_) => PromptSet::load(Some(require_path(&cfg.templates, "--templates")?))?,
        None => PromptSet::default(),
    };
    let few_shot = if cfg.k > 0 {
        let gold = read_dataset(require_path(&cfg.gold, "--gold")?, Some(&ontology))?;
        sample_few_shot(&gold, &ontology, cfg.k, cfg.seed)
    } else {
        FewShotBank::empty()
    };
    let (gateway, backend) = open_gateway(cfg, custom)?;
    let out = cfg.out_dir();
    fs::create_dir_all(&out).map_err(|e| CliError::runtime("io", format!("cannot create {}: {e}", out.display())))?;
    Ok(Context {
        cfg: cfg.clone(),
        out,
        ontology,
        prompts,
        gateway,
        backend,
        few_shot,
    })
}

impl Context {
    fn report(&self, command: &str) -> RunReport {
        RunReport {
            command: command.into(),
            pipeline_version: PIPELINE_VERSION.into(),
            seed: self.cfg.seed,
            model: self.cfg.generation.model.clone(),
            backend: self.backend.into(),
            ontology_digest: self.ontology.digest(),
            few_shot: (self.cfg.k > 0).then(|| self.few_shot.summary()),
            ..Default::default()
        }
    }

    fn corpus(&self) -> CliResult<Corpus> {
        let path = require_path(&self.cfg.corpus, "--corpus")?;
        Ok(load_corpus(path, CorpusFormat::from_path(path))?)
    }

    fn bank(&self) -> Option<&FewShotBank> {
        (!self.few_shot.is_empty()).then_some(&self.few_shot)
    }

    /// Writes the replay journal when recording, then the report.
    fn finish(&self, report: &RunReport, file: &str) -> CliResult<()> {
        if let Some(path) = &self.cfg.record {
            record_log(&self.gateway.take_journal(), path)?;
        }
        write_json(&self.out.join(file), report)
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::runtime("io", format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn stage_scout(ctx: &Context) -> CliResult<(TriggerLexicon, ScoutSection)> {
    let cfg = &ctx.cfg;
    let strategy = cfg.selection_strategy()?;
    let lexicon_path = ctx.out.join(LEXICON_FILE);
    let mut section = ScoutSection {
        source: format!("{:?}", cfg.trigger_source).to_lowercase(),
        strategy: strategy.to_string(),
        t: cfg.t,
        ..Default::default()
    };
    let lexicon = if cfg.resume && lexicon_path.exists() {
        log::info!("resuming from {}", lexicon_path.display());
        section.resumed = true;
        let lex = TriggerLexicon::load(&lexicon_path)?;
        section.strategy = lex.strategy.clone();
        section.t = lex.t;
        section.source = lex.provenance.source.clone();
        lex
    } else {
        let generation = cfg.generation();
        let scout = Scout::new(&ctx.gateway, &ctx.prompts, &generation);
        let lex = match cfg.trigger_source {
            TriggerSource::Corpus => {
                let corpus = ctx.corpus()?;
                let (extractions, report) = scout.extract_corpus(&corpus, &ctx.ontology)?;
                let mut lex = edsynth_core::select_triggers(&aggregate(&extractions), strategy, cfg.t, cfg.seed)?;
                lex.provenance = LexiconProvenance::corpus(corpus.digest(), &cfg.generation.model);
                section.extraction = Some(report);
                lex
            }
            TriggerSource::Internal => scout.generate_triggers_internal(&ctx.ontology, cfg.t)?.0,
        };
        lex.save(&lexicon_path)?;
        lex
    };
    section.lexicon_sizes = ctx
        .ontology
        .events()
        .iter()
        .map(|e| (e.name.clone(), lexicon.triggers(&e.name).len()))
        .collect();
    Ok((lexicon, section))
}

fn scout_counts(section: &ScoutSection, counts: &mut Counts) {
    if let Some(x) = &section.extraction {
        counts.extracted = Some(x.extracted);
        counts.dropped = Some(x.dropped_type_names + x.rejected_triggers);
        counts.backend_errors += x.backend_errors;
    }
}

fn stage_narrate(ctx: &Context, lexicon: &TriggerLexicon, report: &mut RunReport) -> CliResult<Vec<DraftInstance>> {
    let specs = sample_label_specs(lexicon, &ctx.ontology, &ctx.cfg.spec_sampling(), ctx.cfg.seed)?;
    let generation = ctx.cfg.generation();
    let narrator = Narrator::new(&ctx.gateway, &ctx.prompts, &generation);
    let (drafts, narrated) = narrator.narrate(&specs, &ctx.ontology, ctx.bank())?;
    write_drafts(&drafts, ctx.out.join(DRAFTS_FILE))?;
    report.counts.specs = Some(narrated.specs);
    report.counts.drafts = Some(narrated.drafts);
    report.counts.generation_failures = Some(narrated.generation_failures);
    report.counts.backend_errors += narrated.generation_failures;
    report.narrate = Some(narrated);
    Ok(drafts)
}

fn stage_refine(ctx: &Context, drafts: &[DraftInstance], report: &mut RunReport) -> CliResult<Dataset> {
    let suffixes = SuffixSet::default();
    let mut pool = Vec::with_capacity(drafts.len());
    let mut rejected_ids = Vec::new();
    for draft in drafts {
        match verify_and_anchor(draft, &suffixes) {
            Ok(inst) => pool.push(inst),
            Err(r) => {
                log::info!("rejected {r}");
                rejected_ids.push(r.draft_id);
            }
        }
    }
    let generation = ctx.cfg.generation();
    let refiner = Refiner::new(&ctx.gateway, &ctx.prompts, &generation);
    let (refined, refine_report) = refiner.refine_batch(&pool, &ctx.ontology)?;
    let (sampled, sample) = greedy_sample(&refined, &ctx.ontology, ctx.cfg.n);
    let gold = ctx.few_shot.instances();
    let dataset = append_gold(&sampled, &gold, &ctx.ontology)?.with_meta(DatasetMeta {
        ontology_digest: ctx.ontology.digest(),
        model: ctx.cfg.generation.model.clone(),
        seed: ctx.cfg.seed,
        pipeline_version: PIPELINE_VERSION.into(),
    });
    write_bytes(&ctx.out.join(DATASET_FILE), &dataset_to_jsonl(&dataset))?;
    write_provenance(&ctx.out.join(PROVENANCE_FILE), &dataset)?;

    let c = &mut report.counts;
    c.drafts = Some(drafts.len());
    c.rejected = Some(rejected_ids.len());
    c.pool = Some(pool.len());
    c.refined = Some(refine_report.merge.added);
    c.sampled = Some(sampled.len());
    c.gold_appended = Some(gold.len());
    c.shortfalls = Some(sample.per_event.iter().filter(|q| q.shortfall).map(|q| q.event.clone()).collect());
    c.backend_errors += refine_report.backend_errors;
    report.refine = Some(RefineSection {
        drafts: drafts.len(),
        rejected: rejected_ids.len(),
        rejected_ids,
        pool: pool.len(),
        refiner: refine_report,
        sample,
        gold_appended: gold.len(),
    });
    Ok(dataset)
}

/// Prompt digests per output instance, kept out of the dataset rows.
fn write_provenance(path: &Path, dataset: &Dataset) -> CliResult<()> {
    let mut out = String::new();
    for inst in &dataset.instances {
        out.push_str(&json!({ "id": inst.id, "prompt_digests": inst.metadata.prompt_digests }).to_string());
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn cmd_scout(cfg: &RunConfig) -> CliResult<RunReport> {
    let ctx = context(cfg)?;
    let mut report = ctx.report("scout");
    let (_, section) = stage_scout(&ctx)?;
    scout_counts(&section, &mut report.counts);
    report.scout = Some(section);
    ctx.finish(&report, "scout_report.json")?;
    Ok(report)
}

pub fn cmd_narrate(cfg: &RunConfig) -> CliResult<RunReport> {
    let ctx = context(cfg)?;
    let mut report = ctx.report("narrate");
    let path = cfg.lexicon.clone().unwrap_or_else(|| ctx.out.join(LEXICON_FILE));
    let lexicon = TriggerLexicon::load(existing(&path, "--lexicon")?)?;
    stage_narrate(&ctx, &lexicon, &mut report)?;
    ctx.finish(&report, "narrate_report.json")?;
    Ok(report)
}

pub fn cmd_refine(cfg: &RunConfig) -> CliResult<RunReport> {
    let ctx = context(cfg)?;
    let mut report = ctx.report("refine");
    let path = cfg.drafts.clone().unwrap_or_else(|| ctx.out.join(DRAFTS_FILE));
    let drafts = read_drafts(existing(&path, "--drafts")?)?;
    stage_refine(&ctx, &drafts, &mut report)?;
    ctx.finish(&report, "refine_report.json")?;
    Ok(report)
}

/// Scout, Narrator and Refiner in sequence; with `resume` an existing lexicon skips Scout.
pub fn cmd_generate(cfg: &RunConfig) -> CliResult<RunReport> {
    generate(cfg, None)
}

/// `cmd_generate` against a caller-supplied backend instead of replay or HTTP.
pub fn generate_with(cfg: &RunConfig, backend: impl Backend + 'static) -> CliResult<RunReport> {
    generate(cfg, Some(Gateway::new(backend, cfg.generation.parallelism)))
}

fn generate(cfg: &RunConfig, custom: Option<Gateway>) -> CliResult<RunReport> {
    if cfg.trigger_source == TriggerSource::Corpus
        && !(cfg.resume && cfg.out_dir().join(LEXICON_FILE).exists())
    {
        require_path(&cfg.corpus, "--corpus")?;
    }
    let ctx = context_with(cfg, custom)?;
    let mut report = ctx.report("generate");
    let (lexicon, section) = stage_scout(&ctx)?;
    scout_counts(&section, &mut report.counts);
    report.scout = Some(section);
    let drafts = stage_narrate(&ctx, &lexicon, &mut report)?;
    stage_refine(&ctx, &drafts, &mut report)?;
    ctx.finish(&report, "run_report.json")?;
    Ok(report)
}

/// Weak supervision: corpus sentences labeled by the Scout extraction.
pub fn cmd_label(cfg: &RunConfig) -> CliResult<RunReport> {
    require_path(&cfg.corpus, "--corpus")?;
    let ctx = context(cfg)?;
    let mut report = ctx.report("label");
    let corpus = ctx.corpus()?;
    let generation = cfg.generation();
    let scout = Scout::new(&ctx.gateway, &ctx.prompts, &generation);
    let (extractions, extraction) = scout.extract_corpus(&corpus, &ctx.ontology)?;
    let (dataset, unanchored) = extractions_to_dataset(&corpus, &extractions)?;
    let dataset = dataset.with_meta(DatasetMeta {
        ontology_digest: ctx.ontology.digest(),
        model: cfg.generation.model.clone(),
        seed: cfg.seed,
        pipeline_version: PIPELINE_VERSION.into(),
    });
    write_bytes(&ctx.out.join(DATASET_FILE), &dataset_to_jsonl(&dataset))?;
    report.counts.extracted = Some(extraction.extracted);
    report.counts.dropped = Some(extraction.dropped_type_names + extraction.rejected_triggers + unanchored);
    report.counts.backend_errors = extraction.backend_errors;
    report.label = Some(LabelSection {
        extraction,
        unanchored,
        instances: dataset.len(),
    });
    ctx.finish(&report, "label_report.json")?;
    Ok(report)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
            Ok(())
        }
    }
}

fn input_dataset(path: &Path, flag: &str) -> CliResult<Dataset> {
    Ok(read_dataset(existing(path, flag)?, None)?)
}

pub fn cmd_score(pred: &Path, gold: &Path, mode: TriggerMatch, out: Option<&Path>) -> CliResult<ScoreReport> {
    let report = score(&input_dataset(pred, "--pred")?, &input_dataset(gold, "--gold")?, mode)?;
    emit(&report, out)?;
    Ok(report)
}

pub fn cmd_hitrate(synthetic: &Path, gold: &Path, weighted: bool, out: Option<&Path>) -> CliResult<HitRateReport> {
    let gold_triggers = extract_gold_triggers(&input_dataset(gold, "--gold")?);
    let report = hit_rate(&input_dataset(synthetic, "--synthetic")?, &gold_triggers, weighted);
    emit(&report, out)?;
    Ok(report)
}

/// Seeded subset of a corpus, written as JSONL. Returns the subset size.
pub fn cmd_sample(corpus: &Path, fraction: f64, seed: u64, out: &Path) -> CliResult<usize> {
    let path = existing(corpus, "--corpus")?;
    let corpus = load_corpus(path, CorpusFormat::from_path(path))?;
    let subset = sample_corpus(&corpus, fraction, seed).map_err(|e| match e {
        edsynth_core::Error::InvalidArgument(m) => CliError::config("invalid_argument", m),
        other => other.into(),
    })?;
    subset.write_jsonl(out)?;
    Ok(subset.len())
}
