//! k-shot gold examples: seeded per-event sampling and in-context serialization.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SyntheticInstance};
use crate::ontology::Ontology;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotBank {
    pub k: usize,
    /// Ontology order; each list holds `min(k, available)` instances.
    pub per_event: Vec<(String, Vec<SyntheticInstance>)>,
    /// Missing examples per event (`k - available`), only for events that fell short.
    pub shortfall: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotSummary {
    pub k: usize,
    pub instances: usize,
    pub shortfall: BTreeMap<String, usize>,
}

impl FewShotBank {
    pub fn empty() -> Self {
        FewShotBank {
            k: 0,
            per_event: Vec::new(),
            shortfall: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.per_event.iter().all(|(_, v)| v.is_empty())
    }

    pub fn examples(&self, event: &str) -> &[SyntheticInstance] {
        self.per_event
            .iter()
            .find(|(e, _)| e == event)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }

    /// Distinct instances in first-seen order (an instance may serve several events).
    pub fn instances(&self) -> Vec<SyntheticInstance> {
        let mut seen = HashSet::new();
        self.per_event
            .iter()
            .flat_map(|(_, v)| v.iter())
            .filter(|i| seen.insert(i.id.clone()))
            .cloned()
            .collect()
    }

    pub fn summary(&self) -> FewShotSummary {
        FewShotSummary {
            k: self.k,
            instances: self.instances().len(),
            shortfall: self.shortfall.clone(),
        }
    }
}

/// Per event, a seeded sample without replacement among gold instances mentioning it,
/// kept in dataset order.
pub fn sample_few_shot(gold: &Dataset, ontology: &Ontology, k: usize, seed: u64) -> FewShotBank {
    if k == 0 {
        return FewShotBank::empty();
    }
    let mut per_event = Vec::new();
    let mut shortfall = BTreeMap::new();
    for event in ontology.events() {
        let candidates: Vec<&SyntheticInstance> =
            gold.instances.iter().filter(|i| i.has_event(&event.name)).collect();
        let take = k.min(candidates.len());
        if take < k {
            shortfall.insert(event.name.clone(), k - take);
        }
        let mut rng = rng_for(seed, &format!("fewshot:{}", event.name));
        let mut picked = index::sample(&mut rng, candidates.len(), take).into_vec();
        picked.sort_unstable();
        per_event.push((
            event.name.clone(),
            picked.into_iter().map(|i| candidates[i].clone()).collect(),
        ));
    }
    FewShotBank {
        k,
        per_event,
        shortfall,
    }
}

fn render_instance(inst: &SyntheticInstance) -> String {
    let mut out = format!("Passage: {}\nMentions:", inst.passage);
    if inst.mentions().is_empty() {
        out.push_str("\nNone");
    }
    for m in inst.mentions() {
        out.push_str(&format!("\n{} \u{2192} {}", m.trigger, m.event_type));
    }
    out
}

/// Examples for `events`, grouped per event in bank (ontology) order; each instance is shown once.
pub fn render_examples(bank: &FewShotBank, events: &[&str]) -> String {
    let mut seen = HashSet::new();
    let mut groups = Vec::new();
    for (event, examples) in &bank.per_event {
        if !events.contains(&event.as_str()) {
            continue;
        }
        let rendered: Vec<String> = examples
            .iter()
            .filter(|i| seen.insert(i.id.as_str()))
            .map(render_instance)
            .collect();
        if !rendered.is_empty() {
            groups.push(format!("Examples for {event}:\n{}", rendered.join("\n\n")));
        }
    }
    groups.join("\n\n")
}
