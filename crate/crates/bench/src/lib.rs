//! Deterministic inputs for the pipeline benchmarks.

use edsynth_core::dataset::{EventMention, Origin};
use edsynth_core::scout::ExtractedTrigger;
use edsynth_core::{Dataset, EventType, Ontology, SentenceExtraction, SyntheticInstance};

const WORDS: [&str; 12] = [
    "raided", "Raided", "bombed", "attacked", "arrested", "detained", "held", "infected",
    "caught", "tested positive", "tested  positive", "shelled",
];

pub fn event_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("Event{i}")).collect()
}

pub fn ontology(n: usize) -> Ontology {
    Ontology::new(
        event_names(n).into_iter().map(|e| EventType::new(e.clone(), format!("{e} happens"))).collect(),
        "bench",
        "en",
    )
    .expect("valid ontology")
}

/// `n` sentences with one to three extracted triggers each.
pub fn extractions(n: usize, events: usize) -> Vec<SentenceExtraction> {
    let names = event_names(events);
    (0..n)
        .map(|i| SentenceExtraction {
            sentence_id: format!("s{i}"),
            mentions: (0..1 + i % 3)
                .map(|j| ExtractedTrigger {
                    event_type: names[(i + j) % events].clone(),
                    trigger: WORDS[(i * 7 + j * 3) % WORDS.len()].to_string(),
                })
                .collect(),
        })
        .collect()
}

/// A passage of about `words` words ending in `tail`.
pub fn passage(words: usize, tail: &str) -> String {
    let mut s: String = (0..words).map(|i| format!("{} ", ["the", "crowd", "gathered", "near", "Raid", "posts"][i % 6])).collect();
    s.push_str(tail);
    s
}

/// Instances mentioning one or two events each, spans over their own passage.
pub fn instances(n: usize, events: usize) -> Vec<SyntheticInstance> {
    let names = event_names(events);
    (0..n)
        .map(|i| {
            let a = &names[i % events];
            let b = &names[(i * 5 + 1) % events];
            let passage = format!("{a} then {b}");
            let mut inst = SyntheticInstance::new(format!("i{i}"), passage);
            let second = a.chars().count() + 6;
            inst.push_mention(mention(a, 0));
            if i % 3 == 0 {
                inst.push_mention(mention(b, second));
            }
            inst
        })
        .collect()
}

fn mention(event: &str, start: usize) -> EventMention {
    EventMention {
        event_type: event.to_string(),
        trigger: event.to_string(),
        start,
        end: start + event.chars().count(),
        origin: Origin::Sampled,
    }
}

/// Gold and a perturbed prediction over the same ids.
pub fn score_pair(n: usize, events: usize) -> (Dataset, Dataset) {
    let gold = instances(n, events);
    let pred = gold
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut p = SyntheticInstance::new(g.id.clone(), g.passage.clone());
            for m in g.mentions().iter().skip(i % 2) {
                p.push_mention(m.clone());
            }
            p
        })
        .collect();
    (Dataset::new(pred).expect("unique ids"), Dataset::new(gold).expect("unique ids"))
}
