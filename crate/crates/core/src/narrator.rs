//! Label-spec sampling and trigger-conditioned passage generation.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fewshot::{render_examples, FewShotBank};
use crate::gateway::{Gateway, GenerationConfig, LlmRequest};
use crate::ontology::Ontology;
use crate::prompts::{event_blocks, PromptSet};
use crate::scout::{TriggerLexicon, TriggerStat};
use crate::seed::rng_for;
use crate::text::clean_passage;

pub const TAG_NARRATOR: &str = "narrator";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub event_type: String,
    pub trigger: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub targets: Vec<Target>,
    pub sample_seed: u64,
}

impl LabelSpec {
    pub fn event_names(&self) -> Vec<&str> {
        self.targets.iter().map(|t| t.event_type.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerSampling {
    #[default]
    Uniform,
    CountWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSampling {
    pub count_per_event: usize,
    pub pair_probability: f64,
    pub oversample_factor: f64,
    pub trigger_sampling: TriggerSampling,
}

impl Default for SpecSampling {
    fn default() -> Self {
        SpecSampling {
            count_per_event: 50,
            pair_probability: 0.5,
            oversample_factor: 1.5,
            trigger_sampling: TriggerSampling::Uniform,
        }
    }
}

impl SpecSampling {
    /// Specs generated per event as primary target: `ceil(oversample_factor * count_per_event)`.
    pub fn quota(&self) -> usize {
        (self.oversample_factor * self.count_per_event as f64 - 1e-9).ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.count_per_event == 0 {
            return Err(Error::InvalidArgument("count_per_event must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pair_probability) {
            return Err(Error::InvalidArgument("pair_probability must be in [0, 1]".into()));
        }
        if self.oversample_factor.is_nan() || self.oversample_factor <= 0.0 {
            return Err(Error::InvalidArgument("oversample_factor must be positive".into()));
        }
        Ok(())
    }
}

fn pick_trigger<R: Rng>(rng: &mut R, list: &[TriggerStat], mode: TriggerSampling) -> String {
    let stat = match mode {
        TriggerSampling::Uniform => list.choose(rng),
        TriggerSampling::CountWeighted => list.choose_weighted(rng, |s| s.count).ok(),
    }
    .expect("lexicon list checked non-empty");
    stat.preferred_surface().to_string()
}

/// Every event gets `quota()` specs as primary target; each spec gains a second, distinct
/// event with probability `pair_probability`.
pub fn sample_label_specs(
    lexicon: &TriggerLexicon,
    ontology: &Ontology,
    params: &SpecSampling,
    seed: u64,
) -> Result<Vec<LabelSpec>> {
    params.validate()?;
    let missing: Vec<String> = ontology
        .events()
        .iter()
        .filter(|e| lexicon.triggers(&e.name).is_empty())
        .map(|e| e.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::EmptyLexiconFor(missing));
    }
    let mut rng = rng_for(seed, "narrator.specs");
    let names: Vec<&str> = ontology.events().iter().map(|e| e.name.as_str()).collect();
    let mut specs = Vec::with_capacity(names.len() * params.quota());
    for &primary in &names {
        for _ in 0..params.quota() {
            let mut targets = vec![Target {
                event_type: primary.to_string(),
                trigger: pick_trigger(&mut rng, lexicon.triggers(primary), params.trigger_sampling),
            }];
            if names.len() > 1 && rng.gen_bool(params.pair_probability) {
                let others: Vec<&str> = names.iter().copied().filter(|n| *n != primary).collect();
                let second = *others.choose(&mut rng).expect("at least one other event");
                targets.push(Target {
                    event_type: second.to_string(),
                    trigger: pick_trigger(&mut rng, lexicon.triggers(second), params.trigger_sampling),
                });
            }
            specs.push(LabelSpec {
                targets,
                sample_seed: rng.gen(),
            });
        }
    }
    Ok(specs)
}

/// Generated passage with the spec it was conditioned on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftInstance {
    pub id: String,
    pub passage: String,
    pub spec: LabelSpec,
    /// Prompt digest of the generating exchange.
    pub exchange_ref: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrateReport {
    pub specs: usize,
    pub drafts: usize,
    pub generation_failures: usize,
}

fn instructions(spec: &LabelSpec) -> String {
    let mut out = String::from(
        "Write a short, realistic passage of 1-3 sentences that mentions the following event(s):\n",
    );
    for t in &spec.targets {
        out.push_str(&format!(
            "- the {} event, expressed with the exact word \"{}\"\n",
            t.event_type, t.trigger
        ));
    }
    out.push_str("Return only the passage.");
    out
}

pub struct Narrator<'a> {
    pub gateway: &'a Gateway,
    pub prompts: &'a PromptSet,
    pub config: &'a GenerationConfig,
}

impl<'a> Narrator<'a> {
    pub fn new(gateway: &'a Gateway, prompts: &'a PromptSet, config: &'a GenerationConfig) -> Self {
        Narrator {
            gateway,
            prompts,
            config,
        }
    }

    pub fn render_prompt(
        &self,
        spec: &LabelSpec,
        ontology: &Ontology,
        few_shot: Option<&FewShotBank>,
    ) -> Result<(String, String)> {
        render_narrator_prompt(spec, ontology, self.prompts, few_shot)
    }

    /// One call per spec, batched; blank generations are dropped and counted.
    pub fn narrate(
        &self,
        specs: &[LabelSpec],
        ontology: &Ontology,
        few_shot: Option<&FewShotBank>,
    ) -> Result<(Vec<DraftInstance>, NarrateReport)> {
        let requests: Vec<LlmRequest> = specs
            .iter()
            .map(|s| {
                let (system, user) = self.render_prompt(s, ontology, few_shot)?;
                Ok(LlmRequest::new(TAG_NARRATOR, system, user, self.config))
            })
            .collect::<Result<_>>()?;
        let mut report = NarrateReport {
            specs: specs.len(),
            ..Default::default()
        };
        let mut drafts = Vec::with_capacity(specs.len());
        for (i, (spec, r)) in specs.iter().zip(self.gateway.complete_batch(requests)).enumerate() {
            let id = format!("narr-{i:06}");
            match r {
                Ok(x) => {
                    let passage = clean_passage(&x.response_text);
                    if passage.is_empty() {
                        log::warn!("{id}: empty generation dropped");
                        report.generation_failures += 1;
                        continue;
                    }
                    drafts.push(DraftInstance {
                        id,
                        passage,
                        spec: spec.clone(),
                        exchange_ref: x.prompt_digest,
                    });
                }
                Err(e) => {
                    log::warn!("{id}: generation failed: {e}");
                    report.generation_failures += 1;
                }
            }
        }
        report.drafts = drafts.len();
        Ok((drafts, report))
    }
}

/// System and user prompt for one spec: each target's name, definition and required trigger,
/// preceded by in-context examples for those events when a bank is given.
pub fn render_narrator_prompt(
    spec: &LabelSpec,
    ontology: &Ontology,
    prompts: &PromptSet,
    few_shot: Option<&FewShotBank>,
) -> Result<(String, String)> {
    let events = spec
        .targets
        .iter()
        .map(|t| {
            ontology.get(&t.event_type).ok_or_else(|| {
                Error::validation("spec", format!("unknown event type `{}`", t.event_type))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let blocks = event_blocks(events);
    let examples = few_shot
        .map(|bank| render_examples(bank, &spec.event_names()))
        .unwrap_or_default();
    let few_shot_block = if examples.is_empty() {
        String::new()
    } else {
        format!("Annotated examples from the target domain:\n\n{examples}\n\n")
    };
    let user = prompts.narrator.user.render(&[
        ("event_blocks", &blocks),
        ("few_shot", &few_shot_block),
        ("instructions", &instructions(spec)),
    ])?;
    Ok((prompts.narrator.system.clone(), user))
}

pub fn write_drafts(drafts: &[DraftInstance], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for d in drafts {
        serde_json::to_writer(&mut out, d).expect("draft serializes");
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Error::io(path, e))
}

pub fn read_drafts(path: impl AsRef<Path>) -> Result<Vec<DraftInstance>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::parse(format!("{} line {}", path.display(), i + 1), e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, EventMention, Origin, SyntheticInstance};
    use crate::fewshot::sample_few_shot;
    use crate::gateway::{ReplayBackend, ReplayEntry};
    use crate::ontology::EventType;
    use crate::scout::{aggregate, filter_top_t, ExtractedTrigger, SentenceExtraction};

    fn ontology() -> Ontology {
        Ontology::new(
            vec![
                EventType::new("Attack", "A violent physical act causing harm."),
                EventType::new("infect", "A person contracts a disease."),
                EventType::new("symptom", "A person shows symptoms of a disease."),
            ],
            "",
            "en",
        )
        .unwrap()
    }

    fn lexicon() -> TriggerLexicon {
        let pairs = [
            ("Attack", "shooting"),
            ("Attack", "raid"),
            ("infect", "positive"),
            ("infect", "Positive"),
            ("symptom", "fever"),
        ];
        let xs: Vec<_> = pairs
            .iter()
            .map(|(e, t)| SentenceExtraction {
                sentence_id: "s".into(),
                mentions: vec![ExtractedTrigger {
                    event_type: e.to_string(),
                    trigger: t.to_string(),
                }],
            })
            .collect();
        filter_top_t(&aggregate(&xs), 10)
    }

    fn params(p: f64) -> SpecSampling {
        SpecSampling {
            count_per_event: 4,
            pair_probability: p,
            ..Default::default()
        }
    }

    #[test]
    fn pair_probability_extremes() {
        let (lex, o) = (lexicon(), ontology());
        let single = sample_label_specs(&lex, &o, &params(0.0), 1).unwrap();
        assert!(single.iter().all(|s| s.targets.len() == 1));
        let pairs = sample_label_specs(&lex, &o, &params(1.0), 1).unwrap();
        assert!(pairs
            .iter()
            .all(|s| s.targets.len() == 2 && s.targets[0].event_type != s.targets[1].event_type));
    }

    #[test]
    fn coverage_and_determinism() {
        let (lex, o) = (lexicon(), ontology());
        let specs = sample_label_specs(&lex, &o, &params(0.5), 11).unwrap();
        assert_eq!(specs, sample_label_specs(&lex, &o, &params(0.5), 11).unwrap());
        for e in o.events() {
            let n = specs.iter().filter(|s| s.event_names().contains(&e.name.as_str())).count();
            assert!(n >= 6, "{} covered {n} times", e.name);
        }
        for s in &specs {
            for t in &s.targets {
                let list = lex.triggers(&t.event_type);
                assert!(list.iter().any(|st| st.variants.contains_key(&t.trigger) || st.trigger_key == t.trigger));
            }
        }
    }

    #[test]
    fn empty_lexicon_entry_is_error() {
        let mut lex = lexicon();
        lex.per_event.remove("symptom");
        match sample_label_specs(&lex, &ontology(), &params(0.5), 1) {
            Err(Error::EmptyLexiconFor(list)) => assert_eq!(list, ["symptom"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn spec(targets: &[(&str, &str)]) -> LabelSpec {
        LabelSpec {
            targets: targets
                .iter()
                .map(|(e, t)| Target {
                    event_type: e.to_string(),
                    trigger: t.to_string(),
                })
                .collect(),
            sample_seed: 0,
        }
    }

    #[test]
    fn prompt_contents() {
        let o = ontology();
        let prompts = PromptSet::default();
        let (_, user) = render_narrator_prompt(&spec(&[("infect", "positive")]), &o, &prompts, None).unwrap();
        assert!(user.contains("\"positive\""));
        assert!(user.contains("A person contracts a disease."));
        let (_, two) =
            render_narrator_prompt(&spec(&[("infect", "positive"), ("Attack", "raid")]), &o, &prompts, None).unwrap();
        assert!(two.contains("the infect event") && two.contains("the Attack event"));

        let gold: Vec<SyntheticInstance> = ["She tested positive on Monday.", "He was positive for flu."]
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let start = p.find("positive").unwrap();
                SyntheticInstance::with_mentions(
                    format!("g{i}"),
                    *p,
                    [EventMention {
                        event_type: "infect".into(),
                        trigger: "positive".into(),
                        start,
                        end: start + 8,
                        origin: Origin::Gold,
                    }],
                )
                .unwrap()
            })
            .collect();
        let bank = sample_few_shot(&Dataset::new(gold).unwrap(), &o, 2, 5);
        let (_, shots) = render_narrator_prompt(&spec(&[("infect", "positive")]), &o, &prompts, Some(&bank)).unwrap();
        assert!(shots.contains("She tested positive on Monday."));
        assert!(shots.contains("He was positive for flu."));
    }

    #[test]
    fn narrate_with_replay() {
        let o = ontology();
        let prompts = PromptSet::default();
        let config = GenerationConfig::default();
        let specs = vec![spec(&[("Attack", "shooting")]), spec(&[("infect", "positive")])];
        let passage = "As the rival businessman signed the contract, a sudden shooting erupted outside, causing chaos in the midst of the transaction.";
        let entries: Vec<ReplayEntry> = specs
            .iter()
            .zip([format!("\"{passage}\""), "   ".to_string()])
            .map(|(s, resp)| {
                let (sys, user) = render_narrator_prompt(s, &o, &prompts, None).unwrap();
                ReplayEntry::new(TAG_NARRATOR, sys, user, resp)
            })
            .collect();
        let gw = Gateway::new(ReplayBackend::from_entries(entries).unwrap(), 2);
        let narrator = Narrator::new(&gw, &prompts, &config);
        let (drafts, report) = narrator.narrate(&specs, &o, None).unwrap();
        assert_eq!(drafts.len(), 1);
        assert_eq!(drafts[0].id, "narr-000000");
        assert_eq!(drafts[0].passage, passage);
        assert_eq!(drafts[0].spec, specs[0]);
        assert_eq!(report.generation_failures, 1);
        assert!(narrator.narrate(&[], &o, None).unwrap().0.is_empty());
    }
}
