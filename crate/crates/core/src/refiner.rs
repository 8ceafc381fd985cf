//! Turns drafts into annotated instances: trigger presence check with a three-tier matching
//! cascade, then conservative merging of LLM-proposed extra mentions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{EventMention, InstanceMeta, Origin, SyntheticInstance};
use crate::error::Result;
use crate::gateway::{Gateway, GenerationConfig, LlmRequest};
use crate::narrator::DraftInstance;
use crate::ontology::Ontology;
use crate::prompts::{event_blocks, PromptSet};
use crate::text::{fold, is_none_answer, is_whole_word, is_word_char, strip_list_marker, trim_decoration};

pub const TAG_REFINER: &str = "refiner";

/// Stems shorter than this are not produced by suffix stripping.
const MIN_STEM_CHARS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixSet(pub Vec<String>);

impl Default for SuffixSet {
    fn default() -> Self {
        SuffixSet(
            ["s", "es", "ed", "d", "ing", "ion", "ions"]
                .into_iter()
                .map(String::from)
                .collect(),
        )
    }
}

impl SuffixSet {
    /// The lowercased word plus every form obtained by removing one listed suffix.
    pub fn stems(&self, word: &str) -> BTreeSet<String> {
        let lower: String = word.chars().map(fold).collect();
        let len = lower.chars().count();
        let mut out = BTreeSet::new();
        for suffix in &self.0 {
            let slen = suffix.chars().count();
            if len >= slen + MIN_STEM_CHARS && lower.ends_with(suffix.as_str()) {
                out.insert(lower[..lower.len() - suffix.len()].to_string());
            }
        }
        out.insert(lower);
        out
    }

    pub fn same_word_form(&self, a: &str, b: &str) -> bool {
        let sa = self.stems(a);
        self.stems(b).iter().any(|s| sa.contains(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnchorTier {
    Exact = 1,
    CaseInsensitive = 2,
    WordForm = 3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    /// Text of the passage at `[start, end)`.
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub tier: AnchorTier,
}

fn scan(chars: &[char], pat: &[char], eq: impl Fn(char, char) -> bool) -> Option<usize> {
    if pat.is_empty() || pat.len() > chars.len() {
        return None;
    }
    (0..=chars.len() - pat.len()).find(|&i| {
        chars[i..i + pat.len()].iter().zip(pat).all(|(&a, &b)| eq(a, b))
            && is_whole_word(chars, i, i + pat.len())
    })
}

/// Maximal runs of word characters as `[start, end)` char spans.
fn word_spans(chars: &[char]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if is_word_char(chars[i]) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            spans.push((start, i));
        } else {
            i += 1;
        }
    }
    spans
}

fn collapse(chars: &[char]) -> String {
    chars.iter().collect::<String>().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Locates `trigger` in `passage`. First hit wins, earliest position within a tier:
/// 1. exact whole-word match; 2. case-insensitive whole-word match;
/// 3. token-wise word-form match, where each word may drop one suffix from `suffixes`.
pub fn anchor_trigger(passage: &str, trigger: &str, suffixes: &SuffixSet) -> Option<Anchor> {
    let chars: Vec<char> = passage.chars().collect();
    let pat: Vec<char> = trigger.trim().chars().collect();
    if pat.is_empty() {
        return None;
    }
    let found = |start: usize, end: usize, tier| Anchor {
        surface: chars[start..end].iter().collect(),
        start,
        end,
        tier,
    };
    if let Some(i) = scan(&chars, &pat, |a, b| a == b) {
        return Some(found(i, i + pat.len(), AnchorTier::Exact));
    }
    if let Some(i) = scan(&chars, &pat, |a, b| fold(a) == fold(b)) {
        return Some(found(i, i + pat.len(), AnchorTier::CaseInsensitive));
    }

    let words = word_spans(&chars);
    let pat_words = word_spans(&pat);
    if pat_words.is_empty() || pat_words.len() > words.len() {
        return None;
    }
    let pat_word = |j: usize| -> String { pat[pat_words[j].0..pat_words[j].1].iter().collect() };
    let pat_gap = |j: usize| collapse(&pat[pat_words[j - 1].1..pat_words[j].0]);
    for p in 0..=words.len() - pat_words.len() {
        let matched = (0..pat_words.len()).all(|j| {
            let (s, e) = words[p + j];
            let word: String = chars[s..e].iter().collect();
            let gap_ok = j == 0 || collapse(&chars[words[p + j - 1].1..s]) == pat_gap(j);
            gap_ok && suffixes.same_word_form(&word, &pat_word(j))
        });
        if matched {
            let start = words[p].0;
            let end = words[p + pat_words.len() - 1].1;
            return Some(found(start, end, AnchorTier::WordForm));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejected {
    pub draft_id: String,
    pub missing: Vec<String>,
}

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: trigger(s) not found: {}", self.draft_id, self.missing.join(", "))
    }
}

/// One sampled mention per target, or `Rejected` when any target trigger cannot be anchored.
pub fn verify_and_anchor(draft: &DraftInstance, suffixes: &SuffixSet) -> std::result::Result<SyntheticInstance, Rejected> {
    let mut mentions = Vec::new();
    let mut missing = Vec::new();
    for target in &draft.spec.targets {
        match anchor_trigger(&draft.passage, &target.trigger, suffixes) {
            Some(a) => mentions.push(EventMention {
                event_type: target.event_type.clone(),
                trigger: a.surface,
                start: a.start,
                end: a.end,
                origin: Origin::Sampled,
            }),
            None => missing.push(target.trigger.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Rejected {
            draft_id: draft.id.clone(),
            missing,
        });
    }
    let mut inst = SyntheticInstance::new(draft.id.clone(), draft.passage.clone());
    for m in mentions {
        inst.push_mention(m);
    }
    inst.metadata = InstanceMeta {
        prompt_digests: vec![draft.exchange_ref.clone()],
    };
    Ok(inst)
}

/// A mention proposed by the refiner prompt, before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub event_type: String,
    pub trigger: String,
}

/// Parses `trigger -> event type` lines (also `→`); other lines are ignored.
pub fn parse_refiner_response(response: &str) -> Vec<Candidate> {
    response
        .lines()
        .map(strip_list_marker)
        .filter(|l| !l.is_empty() && !is_none_answer(l))
        .filter_map(|line| {
            let (trigger, event) = line
                .split_once("->")
                .or_else(|| line.split_once('\u{2192}'))?;
            let trigger = trim_decoration(trigger);
            let event = trim_decoration(event);
            (!trigger.is_empty() && !event.is_empty()).then(|| Candidate {
                event_type: event.to_string(),
                trigger: trigger.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub added: usize,
    pub already_present: usize,
    pub unknown_type: usize,
    pub unanchored: usize,
    pub collisions: usize,
}

impl MergeOutcome {
    fn absorb(&mut self, o: &MergeOutcome) {
        self.added += o.added;
        self.already_present += o.already_present;
        self.unknown_type += o.unknown_type;
        self.unanchored += o.unanchored;
        self.collisions += o.collisions;
    }
}

/// Adds candidates for event types not yet annotated; existing mentions are never touched.
pub fn merge_candidates(
    instance: &SyntheticInstance,
    candidates: &[Candidate],
    ontology: &Ontology,
    suffixes: &SuffixSet,
) -> (SyntheticInstance, MergeOutcome) {
    let present: BTreeSet<String> = instance.event_types().into_iter().map(String::from).collect();
    let mut out = instance.clone();
    let mut outcome = MergeOutcome::default();
    for c in candidates {
        let Some(event) = ontology.resolve_type(&c.event_type) else {
            outcome.unknown_type += 1;
            continue;
        };
        if present.contains(&event.name) {
            outcome.already_present += 1;
            continue;
        }
        let Some(a) = anchor_trigger(&out.passage, &c.trigger, suffixes) else {
            outcome.unanchored += 1;
            continue;
        };
        let added = out.push_mention(EventMention {
            event_type: event.name.clone(),
            trigger: a.surface,
            start: a.start,
            end: a.end,
            origin: Origin::Refined,
        });
        if added {
            outcome.added += 1;
        } else {
            outcome.collisions += 1;
        }
    }
    (out, outcome)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineReport {
    pub instances: usize,
    pub backend_errors: usize,
    #[serde(flatten)]
    pub merge: MergeOutcome,
}

pub struct Refiner<'a> {
    pub gateway: &'a Gateway,
    pub prompts: &'a PromptSet,
    pub config: &'a GenerationConfig,
    pub suffixes: SuffixSet,
}

impl<'a> Refiner<'a> {
    pub fn new(gateway: &'a Gateway, prompts: &'a PromptSet, config: &'a GenerationConfig) -> Self {
        Refiner {
            gateway,
            prompts,
            config,
            suffixes: SuffixSet::default(),
        }
    }

    pub fn request(&self, instance: &SyntheticInstance, ontology: &Ontology) -> Result<LlmRequest> {
        let blocks = event_blocks(ontology.events());
        let user = self
            .prompts
            .refiner
            .user
            .render(&[("event_blocks", &blocks), ("passage", &instance.passage)])?;
        Ok(LlmRequest::new(TAG_REFINER, &self.prompts.refiner.system, user, self.config))
    }

    fn apply(&self, instance: &SyntheticInstance, response: &str, digest: String, ontology: &Ontology) -> (SyntheticInstance, MergeOutcome) {
        let candidates = parse_refiner_response(response);
        let (mut out, outcome) = merge_candidates(instance, &candidates, ontology, &self.suffixes);
        out.metadata.prompt_digests.push(digest);
        (out, outcome)
    }

    /// Asks for all mentions in the passage and merges the new-event ones.
    pub fn refine(&self, instance: &SyntheticInstance, ontology: &Ontology) -> Result<(SyntheticInstance, MergeOutcome)> {
        let x = self.gateway.complete(self.request(instance, ontology)?)?;
        Ok(self.apply(instance, &x.response_text, x.prompt_digest, ontology))
    }

    /// Order-preserving; a failed call leaves its instance unchanged.
    pub fn refine_batch(&self, instances: &[SyntheticInstance], ontology: &Ontology) -> Result<(Vec<SyntheticInstance>, RefineReport)> {
        let requests = instances
            .iter()
            .map(|i| self.request(i, ontology))
            .collect::<Result<Vec<_>>>()?;
        let mut report = RefineReport {
            instances: instances.len(),
            ..Default::default()
        };
        let out = instances
            .iter()
            .zip(self.gateway.complete_batch(requests))
            .map(|(inst, r)| match r {
                Ok(x) => {
                    let (refined, outcome) = self.apply(inst, &x.response_text, x.prompt_digest, ontology);
                    report.merge.absorb(&outcome);
                    refined
                }
                Err(e) => {
                    log::warn!("{}: refine failed: {e}", inst.id);
                    report.backend_errors += 1;
                    inst.clone()
                }
            })
            .collect();
        Ok((out, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ReplayBackend, ReplayEntry};
    use crate::narrator::{LabelSpec, Target};
    use crate::ontology::EventType;

    fn anchor(p: &str, t: &str) -> Option<(String, usize, usize, AnchorTier)> {
        anchor_trigger(p, t, &SuffixSet::default()).map(|a| (a.surface, a.start, a.end, a.tier))
    }

    #[test]
    fn cascade_examples() {
        let p = "The patient's feverish state was triggered when they tested positive for the virus, which ultimately led to their being killed by the rapidly spreading infection.";
        let start = p.find("killed").unwrap();
        assert_eq!(anchor(p, "killed"), Some(("killed".into(), start, start + 6, AnchorTier::Exact)));
        assert_eq!(anchor("She was arrested yesterday", "arrest"), Some(("arrested".into(), 8, 16, AnchorTier::WordForm)));
        assert_eq!(anchor("The attacker fled", "attack"), None);
        assert_eq!(anchor("A Raid, then a raid", "raid"), Some(("raid".into(), 15, 19, AnchorTier::Exact)));
        assert_eq!(anchor("A Raid began", "raid"), Some(("Raid".into(), 2, 6, AnchorTier::CaseInsensitive)));
        assert_eq!(anchor("They tests positive", "tested positive"), Some(("tests positive".into(), 5, 19, AnchorTier::WordForm)));
    }

    #[test]
    fn short_stems_not_produced() {
        let s = SuffixSet::default();
        assert!(s.stems("is").contains("is"));
        assert!(!s.stems("bed").contains("b"));
        assert!(s.same_word_form("infection", "infected"));
    }

    fn draft(passage: &str, targets: &[(&str, &str)]) -> DraftInstance {
        DraftInstance {
            id: "narr-000001".into(),
            passage: passage.into(),
            spec: LabelSpec {
                targets: targets
                    .iter()
                    .map(|(e, t)| Target {
                        event_type: e.to_string(),
                        trigger: t.to_string(),
                    })
                    .collect(),
                sample_seed: 0,
            },
            exchange_ref: "d0".into(),
        }
    }

    #[test]
    fn verify_examples() {
        let s = SuffixSet::default();
        let ok = verify_and_anchor(&draft("A raid ended in a shooting.", &[("Attack", "raid"), ("Die", "shooting")]), &s).unwrap();
        assert_eq!(ok.mentions().len(), 2);
        assert!(ok.mentions().iter().all(|m| m.origin == Origin::Sampled));
        let rejected = verify_and_anchor(&draft("A raid ended.", &[("Attack", "raid"), ("Die", "shooting")]), &s).unwrap_err();
        assert_eq!(rejected.missing, ["shooting"]);
        let twice = verify_and_anchor(&draft("raid after raid", &[("Attack", "raid")]), &s).unwrap();
        assert_eq!(twice.mentions()[0].start, 0);
    }

    fn covid() -> Ontology {
        Ontology::new(
            vec![
                EventType::new("infect", "A person contracts a disease."),
                EventType::new("symptom", "A person shows symptoms."),
                EventType::new("death", "A person dies."),
            ],
            "epidemiology",
            "en",
        )
        .unwrap()
    }

    fn fig5() -> SyntheticInstance {
        verify_and_anchor(
            &draft("Ok, I just got a fever... Theres a possibility Im COVID-19 Positive", &[("infect", "Positive")]),
            &SuffixSet::default(),
        )
        .unwrap()
    }

    #[test]
    fn merge_rules() {
        let o = covid();
        let s = SuffixSet::default();
        let cands = parse_refiner_response("got -> symptom\nfever -> infect\n- dies -> death\nflu -> Pandemic\nNone");
        assert_eq!(cands.len(), 4);
        let (out, outcome) = merge_candidates(&fig5(), &cands, &o, &s);
        assert_eq!(
            outcome,
            MergeOutcome {
                added: 1,
                already_present: 1,
                unknown_type: 1,
                unanchored: 1,
                collisions: 0
            }
        );
        let added: Vec<_> = out.mentions().iter().filter(|m| m.origin == Origin::Refined).collect();
        assert_eq!(added.len(), 1);
        assert_eq!((added[0].event_type.as_str(), added[0].trigger.as_str()), ("symptom", "got"));
        // second pass adds nothing
        let (again, o2) = merge_candidates(&out, &cands, &o, &s);
        assert_eq!(again, out);
        assert_eq!(o2.added, 0);
    }

    #[test]
    fn refine_batch_isolates_failures() {
        let o = covid();
        let prompts = PromptSet::default();
        let config = GenerationConfig::default();
        let probe = Gateway::new(ReplayBackend::default(), 1);
        let refiner = Refiner::new(&probe, &prompts, &config);
        let first = fig5();
        let mut second = fig5();
        second.id = "narr-000002".into();
        second.passage.push('!');
        let req = refiner.request(&first, &o).unwrap();
        let gw = Gateway::new(
            ReplayBackend::from_entries([ReplayEntry::new(TAG_REFINER, req.system, req.user, "got -> symptom")]).unwrap(),
            2,
        );
        let refiner = Refiner::new(&gw, &prompts, &config);
        let (out, report) = refiner.refine_batch(&[first, second.clone()], &o).unwrap();
        assert_eq!(out[0].mentions().len(), 2);
        assert_eq!(out[0].metadata.prompt_digests.len(), 2);
        assert_eq!(out[1], second);
        assert_eq!((report.backend_errors, report.merge.added), (1, 1));
        assert!(refiner.refine_batch(&[], &o).unwrap().0.is_empty());
    }
}
