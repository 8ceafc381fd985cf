//! Trigger lexicon mining: two-stage extraction over the unlabeled corpus, corpus-level
//! aggregation, and top-t (or sampled) selection per event type.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, UnlabeledSentence};
use crate::dataset::{Dataset, EventMention, Origin, SyntheticInstance};
use crate::error::{Error, Result};
use crate::gateway::{Gateway, GenerationConfig, LlmRequest};
use crate::ontology::{EventType, Ontology};
use crate::prompts::{event_blocks, PromptSet};
use crate::seed::rng_for;
use crate::text::{
    char_slice, find_case_insensitive, is_none_answer, normalize_trigger, split_list_items,
    strip_list_marker, trim_decoration,
};

pub const TAG_STAGE1: &str = "scout.stage1";
pub const TAG_STAGE2: &str = "scout.stage2";
pub const TAG_INTERNAL: &str = "scout.internal";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtractedTrigger {
    pub event_type: String,
    pub trigger: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceExtraction {
    pub sentence_id: String,
    pub mentions: Vec<ExtractedTrigger>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerStat {
    #[serde(skip)]
    pub event_type: String,
    #[serde(rename = "trigger")]
    pub trigger_key: String,
    pub count: usize,
    /// Raw surface form -> count, summing to `count`.
    pub variants: BTreeMap<String, usize>,
}

impl TriggerStat {
    /// Most frequent raw surface (ties: lexicographically smallest).
    pub fn preferred_surface(&self) -> &str {
        self.variants
            .iter()
            .max_by_key(|(s, c)| (**c, std::cmp::Reverse(s.as_str())))
            .map(|(s, _)| s.as_str())
            .unwrap_or(&self.trigger_key)
    }
}

fn rank_order(a: &TriggerStat, b: &TriggerStat) -> std::cmp::Ordering {
    b.count
        .cmp(&a.count)
        .then_with(|| a.trigger_key.cmp(&b.trigger_key))
}

pub type TriggerStats = BTreeMap<String, Vec<TriggerStat>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStrategy {
    FrequencyRanking,
    UniformSampling,
    WeightedSampling,
    MinCount(usize),
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionStrategy::FrequencyRanking => f.write_str("frequency_ranking"),
            SelectionStrategy::UniformSampling => f.write_str("uniform_sampling"),
            SelectionStrategy::WeightedSampling => f.write_str("weighted_sampling"),
            SelectionStrategy::MinCount(m) => write!(f, "min_count({m})"),
        }
    }
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    /// Accepts `frequency_ranking`, `uniform_sampling`, `weighted_sampling`, `min_count(m)` or `min_count:m`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "frequency_ranking" | "frequency" => return Ok(SelectionStrategy::FrequencyRanking),
            "uniform_sampling" | "uniform" => return Ok(SelectionStrategy::UniformSampling),
            "weighted_sampling" | "weighted" => return Ok(SelectionStrategy::WeightedSampling),
            _ => {}
        }
        let arg = s
            .strip_prefix("min_count(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("min_count:"))
            .ok_or_else(|| Error::InvalidStrategyParam(format!("unknown strategy `{s}`")))?;
        let m: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::InvalidStrategyParam(format!("min_count needs an integer, got `{arg}`")))?;
        Ok(SelectionStrategy::MinCount(m))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconProvenance {
    /// `corpus` or `llm-internal`.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_digest: Option<String>,
    #[serde(default)]
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

impl LexiconProvenance {
    pub fn corpus(corpus_digest: impl Into<String>, model: impl Into<String>) -> Self {
        LexiconProvenance {
            source: "corpus".into(),
            corpus_digest: Some(corpus_digest.into()),
            model: model.into(),
            created_unix: None,
        }
    }
}

/// Curated triggers per event type, each list ordered by (count desc, trigger asc).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerLexicon {
    pub t: usize,
    pub strategy: String,
    pub provenance: LexiconProvenance,
    pub per_event: BTreeMap<String, Vec<TriggerStat>>,
}

#[derive(Serialize, Deserialize)]
struct LexiconFile {
    t: usize,
    strategy: String,
    provenance: LexiconProvenance,
    events: BTreeMap<String, Vec<TriggerStat>>,
}

impl TriggerLexicon {
    pub fn triggers(&self, event: &str) -> &[TriggerStat] {
        self.per_event.get(event).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn to_json(&self) -> String {
        let file = LexiconFile {
            t: self.t,
            strategy: self.strategy.clone(),
            provenance: self.provenance.clone(),
            events: self.per_event.clone(),
        };
        serde_json::to_string_pretty(&file).expect("lexicon serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LexiconFile = serde_json::from_str(text).map_err(|e| Error::parse("lexicon", e))?;
        let mut per_event = file.events;
        for (event, stats) in per_event.iter_mut() {
            for s in stats.iter_mut() {
                s.event_type = event.clone();
                if s.variants.values().sum::<usize>() != s.count || s.variants.is_empty() {
                    return Err(Error::validation(
                        format!("events.{event}"),
                        format!("variant counts of `{}` do not sum to {}", s.trigger_key, s.count),
                    ));
                }
            }
        }
        Ok(TriggerLexicon {
            t: file.t,
            strategy: file.strategy,
            provenance: file.provenance,
            per_event,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TriggerLexicon::from_json(&text)
    }
}

/// Counters for one extraction run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoutReport {
    pub sentences: usize,
    pub stage1_calls: usize,
    pub stage2_calls: usize,
    pub extracted: usize,
    pub dropped_type_names: usize,
    pub rejected_triggers: usize,
    pub backend_errors: usize,
}

/// Stage-1 answer after ontology resolution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stage1Parse {
    pub events: Vec<String>,
    pub dropped: Vec<String>,
}

pub fn parse_stage1(response: &str, ontology: &Ontology) -> Stage1Parse {
    let mut out = Stage1Parse::default();
    if is_none_answer(response) {
        return out;
    }
    for item in split_list_items(response) {
        match ontology.resolve_type(&item) {
            Some(e) if !out.events.contains(&e.name) => out.events.push(e.name.clone()),
            Some(_) => {}
            None if is_none_answer(&item) => {}
            None => out.dropped.push(item),
        }
    }
    out
}

/// First answer line, stripped of quotes and a `Trigger:` label, accepted only if it occurs in
/// `sentence`. Returns the sentence's own surface form.
pub fn parse_stage2(response: &str, sentence: &str) -> Option<String> {
    let line = response.lines().map(str::trim).find(|l| !l.is_empty())?;
    let line = strip_list_marker(line);
    let line = ["trigger:", "answer:"]
        .iter()
        .find_map(|p| {
            line.get(..p.len())
                .filter(|head| head.eq_ignore_ascii_case(p))
                .map(|_| &line[p.len()..])
        })
        .unwrap_or(line);
    let candidate = trim_decoration(line);
    if candidate.is_empty() || is_none_answer(candidate) {
        return None;
    }
    let (start, end) = find_case_insensitive(sentence, candidate)?;
    char_slice(sentence, start, end)
}

/// Normalized, deduplicated trigger words from a list-shaped answer (first raw form kept).
pub fn parse_trigger_list(response: &str) -> Vec<(String, String)> {
    if is_none_answer(response) {
        return Vec::new();
    }
    let mut seen = HashSet::new();
    split_list_items(response)
        .into_iter()
        .filter_map(|raw| {
            let key = normalize_trigger(&raw);
            (!key.is_empty() && seen.insert(key.clone())).then_some((key, raw))
        })
        .collect()
}

/// Counts (event, normalized trigger) pairs; result does not depend on input order.
pub fn aggregate(extractions: &[SentenceExtraction]) -> TriggerStats {
    let mut table: BTreeMap<(String, String), BTreeMap<String, usize>> = BTreeMap::new();
    for m in extractions.iter().flat_map(|x| x.mentions.iter()) {
        let key = normalize_trigger(&m.trigger);
        if key.is_empty() {
            continue;
        }
        *table
            .entry((m.event_type.clone(), key))
            .or_default()
            .entry(m.trigger.clone())
            .or_default() += 1;
    }
    let mut out: TriggerStats = BTreeMap::new();
    for ((event, key), variants) in table {
        out.entry(event.clone()).or_default().push(TriggerStat {
            event_type: event,
            trigger_key: key,
            count: variants.values().sum(),
            variants,
        });
    }
    for stats in out.values_mut() {
        stats.sort_by(rank_order);
    }
    out
}

/// Keeps the `t` best-ranked triggers per event under (count desc, trigger asc).
pub fn filter_top_t(stats: &TriggerStats, t: usize) -> TriggerLexicon {
    let per_event = stats
        .iter()
        .map(|(event, list)| {
            let mut list = list.clone();
            list.sort_by(rank_order);
            list.truncate(t);
            (event.clone(), list)
        })
        .collect();
    TriggerLexicon {
        t,
        strategy: SelectionStrategy::FrequencyRanking.to_string(),
        provenance: LexiconProvenance {
            source: "corpus".into(),
            corpus_digest: None,
            model: String::new(),
            created_unix: None,
        },
        per_event,
    }
}

/// Applies a selection strategy; sampling is seeded per event type.
pub fn select_triggers(
    stats: &TriggerStats,
    strategy: SelectionStrategy,
    t: usize,
    seed: u64,
) -> Result<TriggerLexicon> {
    if t == 0 {
        return Err(Error::InvalidStrategyParam("t must be >= 1".into()));
    }
    if let SelectionStrategy::MinCount(0) = strategy {
        return Err(Error::InvalidStrategyParam("min_count needs m >= 1".into()));
    }
    if strategy == SelectionStrategy::FrequencyRanking {
        return Ok(filter_top_t(stats, t));
    }
    let mut per_event = BTreeMap::new();
    for (event, list) in stats {
        let mut pool = list.clone();
        pool.sort_by(rank_order);
        if let SelectionStrategy::MinCount(m) = strategy {
            pool.retain(|s| s.count >= m);
        }
        let mut rng = rng_for(seed, &format!("select:{event}"));
        let mut chosen: Vec<TriggerStat> = if pool.len() <= t {
            pool
        } else if strategy == SelectionStrategy::WeightedSampling {
            pool.choose_multiple_weighted(&mut rng, t, |s| s.count as f64)
                .map_err(|e| Error::InvalidStrategyParam(e.to_string()))?
                .cloned()
                .collect()
        } else {
            index::sample(&mut rng, pool.len(), t)
                .into_iter()
                .map(|i| pool[i].clone())
                .collect()
        };
        chosen.sort_by(rank_order);
        per_event.insert(event.clone(), chosen);
    }
    let mut lex = filter_top_t(&BTreeMap::new(), t);
    lex.strategy = strategy.to_string();
    lex.per_event = per_event;
    Ok(lex)
}

/// Prompt-driven stages of trigger mining.
pub struct Scout<'a> {
    pub gateway: &'a Gateway,
    pub prompts: &'a PromptSet,
    pub config: &'a GenerationConfig,
}

impl<'a> Scout<'a> {
    pub fn new(gateway: &'a Gateway, prompts: &'a PromptSet, config: &'a GenerationConfig) -> Self {
        Scout {
            gateway,
            prompts,
            config,
        }
    }

    pub fn stage1_request(&self, sentence: &UnlabeledSentence, ontology: &Ontology) -> Result<LlmRequest> {
        let blocks = event_blocks(ontology.events());
        let user = self
            .prompts
            .scout_stage1
            .user
            .render(&[("event_blocks", &blocks), ("sentence", &sentence.text)])?;
        Ok(LlmRequest::new(TAG_STAGE1, &self.prompts.scout_stage1.system, user, self.config))
    }

    pub fn stage2_request(&self, sentence: &UnlabeledSentence, event: &EventType) -> Result<LlmRequest> {
        let user = self.prompts.scout_stage2.user.render(&[
            ("event_name", &event.name),
            ("event_definition", event.definition.trim()),
            ("sentence", &sentence.text),
        ])?;
        Ok(LlmRequest::new(TAG_STAGE2, &self.prompts.scout_stage2.system, user, self.config))
    }

    /// Event types the backend sees in `sentence`; unresolvable names are dropped and logged.
    pub fn stage1_identify(&self, sentence: &UnlabeledSentence, ontology: &Ontology) -> Result<Stage1Parse> {
        let x = self.gateway.complete(self.stage1_request(sentence, ontology)?)?;
        let parsed = parse_stage1(&x.response_text, ontology);
        for name in &parsed.dropped {
            log::warn!("{}: dropped unknown event type {name:?}", sentence.id);
        }
        Ok(parsed)
    }

    pub fn stage2_extract(&self, sentence: &UnlabeledSentence, event: &EventType) -> Result<Option<String>> {
        let x = self.gateway.complete(self.stage2_request(sentence, event)?)?;
        Ok(parse_stage2(&x.response_text, &sentence.text))
    }

    /// Runs both stages over the corpus with batched calls; output follows corpus order.
    pub fn extract_corpus(&self, corpus: &Corpus, ontology: &Ontology) -> Result<(Vec<SentenceExtraction>, ScoutReport)> {
        let sentences = corpus.sentences();
        let mut report = ScoutReport {
            sentences: sentences.len(),
            ..Default::default()
        };
        let stage1: Vec<LlmRequest> = sentences
            .iter()
            .map(|s| self.stage1_request(s, ontology))
            .collect::<Result<_>>()?;
        report.stage1_calls = stage1.len();
        let identified: Vec<Vec<String>> = self
            .gateway
            .complete_batch(stage1)
            .into_iter()
            .zip(sentences)
            .map(|(r, s)| match r {
                Ok(x) => {
                    let parsed = parse_stage1(&x.response_text, ontology);
                    for name in &parsed.dropped {
                        log::warn!("{}: dropped unknown event type {name:?}", s.id);
                    }
                    report.dropped_type_names += parsed.dropped.len();
                    parsed.events
                }
                Err(e) => {
                    log::warn!("{}: stage 1 failed: {e}", s.id);
                    report.backend_errors += 1;
                    Vec::new()
                }
            })
            .collect();

        let mut jobs = Vec::new();
        let mut stage2 = Vec::new();
        for (si, events) in identified.iter().enumerate() {
            for name in events {
                let event = ontology.get(name).expect("resolved against this ontology");
                stage2.push(self.stage2_request(&sentences[si], event)?);
                jobs.push((si, name.clone()));
            }
        }
        report.stage2_calls = stage2.len();
        let mut out: Vec<SentenceExtraction> = sentences
            .iter()
            .map(|s| SentenceExtraction {
                sentence_id: s.id.clone(),
                mentions: Vec::new(),
            })
            .collect();
        for ((si, event), r) in jobs.into_iter().zip(self.gateway.complete_batch(stage2)) {
            match r {
                Ok(x) => match parse_stage2(&x.response_text, &sentences[si].text) {
                    Some(trigger) => {
                        report.extracted += 1;
                        out[si].mentions.push(ExtractedTrigger {
                            event_type: event,
                            trigger,
                        });
                    }
                    None => report.rejected_triggers += 1,
                },
                Err(e) => {
                    log::warn!("{}: stage 2 for {event} failed: {e}", sentences[si].id);
                    report.backend_errors += 1;
                }
            }
        }
        Ok((out, report))
    }

    /// Triggers proposed from the backend's own knowledge (no corpus evidence; counts are 1).
    pub fn generate_triggers_internal(&self, ontology: &Ontology, t: usize) -> Result<(TriggerLexicon, usize)> {
        if t == 0 {
            return Err(Error::InvalidStrategyParam("t must be >= 1".into()));
        }
        let requests: Vec<LlmRequest> = ontology
            .events()
            .iter()
            .map(|e| {
                let t_str = t.to_string();
                let user = self.prompts.scout_internal.user.render(&[
                    ("event_name", &e.name),
                    ("event_definition", e.definition.trim()),
                    ("t", &t_str),
                ])?;
                Ok(LlmRequest::new(TAG_INTERNAL, &self.prompts.scout_internal.system, user, self.config))
            })
            .collect::<Result<_>>()?;
        let mut warnings = 0;
        let mut stats: TriggerStats = BTreeMap::new();
        for (event, r) in ontology.events().iter().zip(self.gateway.complete_batch(requests)) {
            let words = match r {
                Ok(x) => parse_trigger_list(&x.response_text),
                Err(e) => {
                    log::warn!("{}: internal trigger generation failed: {e}", event.name);
                    Vec::new()
                }
            };
            if words.is_empty() {
                warnings += 1;
                log::warn!("{}: no internal triggers", event.name);
            }
            let list = words
                .into_iter()
                .map(|(key, raw)| TriggerStat {
                    event_type: event.name.clone(),
                    trigger_key: key,
                    count: 1,
                    variants: BTreeMap::from([(raw, 1)]),
                })
                .collect();
            stats.insert(event.name.clone(), list);
        }
        let mut lex = filter_top_t(&stats, t);
        lex.provenance = LexiconProvenance {
            source: "llm-internal".into(),
            corpus_digest: None,
            model: self.config.model.clone(),
            created_unix: None,
        };
        Ok((lex, warnings))
    }

    /// Weak-supervision labeling: extractions anchored at their first case-insensitive occurrence.
    pub fn label_sentences(&self, corpus: &Corpus, ontology: &Ontology) -> Result<(Dataset, ScoutReport, usize)> {
        let (extractions, report) = self.extract_corpus(corpus, ontology)?;
        let (dataset, dropped) = extractions_to_dataset(corpus, &extractions)?;
        Ok((dataset, report, dropped))
    }
}

/// Converts extractions into instances; mentions whose trigger no longer occurs are dropped
/// and counted.
pub fn extractions_to_dataset(corpus: &Corpus, extractions: &[SentenceExtraction]) -> Result<(Dataset, usize)> {
    let mut dropped = 0;
    let mut instances = Vec::with_capacity(extractions.len());
    for (sentence, x) in corpus.sentences().iter().zip(extractions) {
        let mut inst = SyntheticInstance::new(sentence.id.clone(), sentence.text.clone());
        for m in &x.mentions {
            match find_case_insensitive(&sentence.text, &m.trigger) {
                Some((start, end)) => {
                    inst.push_mention(EventMention {
                        event_type: m.event_type.clone(),
                        trigger: char_slice(&sentence.text, start, end).expect("span in range"),
                        start,
                        end,
                        origin: Origin::Refined,
                    });
                }
                None => {
                    dropped += 1;
                    log::warn!("{}: trigger {:?} not found, mention dropped", sentence.id, m.trigger);
                }
            }
        }
        instances.push(inst);
    }
    Ok((Dataset::new(instances)?, dropped))
}
