//! Event identification / trigger classification scoring and trigger hit rate.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::text::normalize_trigger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMatch {
    /// Match on exact (start, end) offsets.
    #[default]
    Span,
    /// Match on normalized trigger text, ignoring offsets.
    String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub num_pred: usize,
    pub num_gold: usize,
    pub num_matched: usize,
}

impl Prf {
    /// Zero denominators give 0 for that ratio; f1 is 0 when P + R = 0.
    pub fn from_counts(num_pred: usize, num_gold: usize, num_matched: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(num_matched, num_pred);
        let recall = ratio(num_matched, num_gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            num_pred,
            num_gold,
            num_matched,
        }
    }

    fn from_sets<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> Self {
        Prf::from_counts(pred.len(), gold.len(), pred.intersection(gold).count())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub eve_i: Prf,
    pub tri_c: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub trigger_match: TriggerMatch,
    pub eve_i: Prf,
    pub tri_c: Prf,
    pub per_event: BTreeMap<String, MetricPair>,
}

type EveUnit = (String, String);
type TriUnit = (String, String, String);

fn units(dataset: &Dataset, mode: TriggerMatch) -> (BTreeSet<EveUnit>, BTreeSet<TriUnit>) {
    let mut eve = BTreeSet::new();
    let mut tri = BTreeSet::new();
    for inst in &dataset.instances {
        for m in inst.mentions() {
            eve.insert((inst.id.clone(), m.event_type.clone()));
            let key = match mode {
                TriggerMatch::Span => format!("{}:{}", m.start, m.end),
                TriggerMatch::String => normalize_trigger(&m.trigger),
            };
            tri.insert((inst.id.clone(), m.event_type.clone(), key));
        }
    }
    (eve, tri)
}

/// Micro-averaged Eve-I over distinct (instance, type) and Tri-C over distinct
/// (instance, trigger, type), plus the same per event type.
///
/// Every predicted id must exist in `gold`; gold instances without a prediction count as
/// predicting nothing.
pub fn score(pred: &Dataset, gold: &Dataset, mode: TriggerMatch) -> Result<ScoreReport> {
    let gold_ids: HashSet<&str> = gold.instances.iter().map(|i| i.id.as_str()).collect();
    let unknown: Vec<&str> = pred
        .instances
        .iter()
        .map(|i| i.id.as_str())
        .filter(|id| !gold_ids.contains(id))
        .collect();
    if !unknown.is_empty() {
        let shown: Vec<&str> = unknown.iter().copied().take(5).collect();
        return Err(Error::Alignment(format!(
            "{} predicted id(s) missing from gold: {}",
            unknown.len(),
            shown.join(", ")
        )));
    }
    let (pe, pt) = units(pred, mode);
    let (ge, gt) = units(gold, mode);
    let events: BTreeSet<&str> = pe.iter().chain(&ge).map(|(_, e)| e.as_str()).collect();
    let per_event = events
        .into_iter()
        .map(|event| {
            let fe = |s: &BTreeSet<EveUnit>| s.iter().filter(|u| u.1 == event).cloned().collect::<BTreeSet<_>>();
            let ft = |s: &BTreeSet<TriUnit>| s.iter().filter(|u| u.1 == event).cloned().collect::<BTreeSet<_>>();
            (
                event.to_string(),
                MetricPair {
                    eve_i: Prf::from_sets(&fe(&pe), &fe(&ge)),
                    tri_c: Prf::from_sets(&ft(&pt), &ft(&gt)),
                },
            )
        })
        .collect();
    Ok(ScoreReport {
        trigger_match: mode,
        eve_i: Prf::from_sets(&pe, &ge),
        tri_c: Prf::from_sets(&pt, &gt),
        per_event,
    })
}

/// Normalized gold triggers per event type.
pub fn extract_gold_triggers(gold: &Dataset) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for m in gold.instances.iter().flat_map(|i| i.mentions()) {
        let key = normalize_trigger(&m.trigger);
        if !key.is_empty() {
            out.entry(m.event_type.clone()).or_default().insert(key);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventHitRate {
    pub synthetic_trigger_count: usize,
    pub hits: usize,
    pub hit_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRateReport {
    pub weighted: bool,
    pub per_event: BTreeMap<String, EventHitRate>,
    pub macro_average: f64,
    pub micro_average: f64,
}

/// Share of synthesized triggers found in the gold trigger set, per event type.
///
/// By default each event's triggers are a distinct normalized set; `weighted` counts every
/// mention instead. Events without synthetic triggers are left out of both averages.
pub fn hit_rate(
    synthetic: &Dataset,
    gold_triggers: &BTreeMap<String, BTreeSet<String>>,
    weighted: bool,
) -> HitRateReport {
    let mut keys: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for m in synthetic.instances.iter().flat_map(|i| i.mentions()) {
        let key = normalize_trigger(&m.trigger);
        if !key.is_empty() {
            keys.entry(m.event_type.clone()).or_default().push(key);
        }
    }
    let empty = BTreeSet::new();
    let mut per_event = BTreeMap::new();
    let (mut total_hits, mut total) = (0usize, 0usize);
    for (event, mut list) in keys {
        if !weighted {
            list.sort();
            list.dedup();
        }
        let gold = gold_triggers.get(&event).unwrap_or(&empty);
        let hits = list.iter().filter(|k| gold.contains(*k)).count();
        total_hits += hits;
        total += list.len();
        per_event.insert(
            event,
            EventHitRate {
                synthetic_trigger_count: list.len(),
                hits,
                hit_rate: hits as f64 / list.len() as f64,
            },
        );
    }
    let macro_average = if per_event.is_empty() {
        0.0
    } else {
        per_event.values().map(|e| e.hit_rate).sum::<f64>() / per_event.len() as f64
    };
    let micro_average = if total == 0 { 0.0 } else { total_hits as f64 / total as f64 };
    HitRateReport {
        weighted,
        per_event,
        macro_average,
        micro_average,
    }
}
