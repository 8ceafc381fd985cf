//! Annotated instances, the dataset JSONL format, greedy per-event sampling and gold appending.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::text::{char_len, char_slice};

pub const PIPELINE_VERSION: &str = concat!("edsynth/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Sampled,
    Refined,
    Gold,
}

/// A trigger span labeled with an event type. Offsets are char indices, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventMention {
    #[serde(rename = "type")]
    pub event_type: String,
    pub trigger: String,
    pub start: usize,
    pub end: usize,
    pub origin: Origin,
}

impl EventMention {
    fn sort_key(&self) -> (usize, &str, usize) {
        (self.start, self.event_type.as_str(), self.end)
    }

    fn collides(&self, other: &EventMention) -> bool {
        self.start == other.start && self.end == other.end && self.event_type == other.event_type
    }
}

/// Per-instance provenance. Not part of the dataset row; carried in memory and in sidecar files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub prompt_digests: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticInstance {
    pub id: String,
    pub passage: String,
    mentions: Vec<EventMention>,
    pub metadata: InstanceMeta,
}

impl SyntheticInstance {
    pub fn new(id: impl Into<String>, passage: impl Into<String>) -> Self {
        SyntheticInstance {
            id: id.into(),
            passage: passage.into(),
            mentions: Vec::new(),
            metadata: InstanceMeta::default(),
        }
    }

    /// Builds an instance and checks span invariants; colliding mentions are an error.
    pub fn with_mentions(
        id: impl Into<String>,
        passage: impl Into<String>,
        mentions: impl IntoIterator<Item = EventMention>,
    ) -> Result<Self> {
        let mut inst = SyntheticInstance::new(id, passage);
        for m in mentions {
            inst.check_span(&m)?;
            if !inst.push_mention(m.clone()) {
                return Err(Error::validation(
                    format!("instance `{}`", inst.id),
                    format!("duplicate mention {} [{}, {})", m.event_type, m.start, m.end),
                ));
            }
        }
        Ok(inst)
    }

    pub fn mentions(&self) -> &[EventMention] {
        &self.mentions
    }

    /// Inserts in (start, type) order; returns false if (start, end, type) is already present.
    pub fn push_mention(&mut self, mention: EventMention) -> bool {
        if self.mentions.iter().any(|m| m.collides(&mention)) {
            return false;
        }
        let at = self
            .mentions
            .partition_point(|m| m.sort_key() <= mention.sort_key());
        self.mentions.insert(at, mention);
        true
    }

    pub fn event_types(&self) -> BTreeSet<&str> {
        self.mentions.iter().map(|m| m.event_type.as_str()).collect()
    }

    pub fn has_event(&self, event: &str) -> bool {
        self.mentions.iter().any(|m| m.event_type == event)
    }

    fn check_span(&self, m: &EventMention) -> Result<()> {
        let field = format!("instance `{}`", self.id);
        if m.start >= m.end || m.end > char_len(&self.passage) {
            return Err(Error::validation(
                field,
                format!("mention {:?} has invalid span [{}, {})", m.trigger, m.start, m.end),
            ));
        }
        let actual = char_slice(&self.passage, m.start, m.end).unwrap_or_default();
        if actual != m.trigger {
            return Err(Error::validation(
                field,
                format!(
                    "mention span [{}, {}) reads {:?}, not trigger {:?}",
                    m.start, m.end, actual, m.trigger
                ),
            ));
        }
        Ok(())
    }

    /// Checks every mention invariant, optionally including ontology membership.
    pub fn validate(&self, ontology: Option<&Ontology>) -> Result<()> {
        for (i, m) in self.mentions.iter().enumerate() {
            self.check_span(m)?;
            if let Some(o) = ontology {
                if o.get(&m.event_type).is_none() {
                    return Err(Error::validation(
                        format!("instance `{}`", self.id),
                        format!("unknown event type `{}`", m.event_type),
                    ));
                }
            }
            if self.mentions[..i].iter().any(|p| p.collides(m)) {
                return Err(Error::validation(
                    format!("instance `{}`", self.id),
                    format!("duplicate mention {} [{}, {})", m.event_type, m.start, m.end),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub ontology_digest: String,
    pub model: String,
    pub seed: u64,
    pub pipeline_version: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub instances: Vec<SyntheticInstance>,
    pub meta: Option<DatasetMeta>,
}

impl Dataset {
    pub fn new(instances: Vec<SyntheticInstance>) -> Result<Self> {
        let mut seen = HashSet::new();
        for inst in &instances {
            if !seen.insert(inst.id.as_str()) {
                return Err(Error::DuplicateId(inst.id.clone()));
            }
        }
        Ok(Dataset {
            instances,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: DatasetMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn ontology_digest(&self) -> Option<&str> {
        self.meta.as_ref().map(|m| m.ontology_digest.as_str())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SyntheticInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Mention count per event type.
    pub fn stats(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for m in self.instances.iter().flat_map(|i| i.mentions.iter()) {
            *out.entry(m.event_type.clone()).or_default() += 1;
        }
        out
    }

    /// Number of instances mentioning each event type.
    pub fn instance_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for inst in &self.instances {
            for e in inst.event_types() {
                *out.entry(e.to_string()).or_default() += 1;
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceRow {
    id: String,
    text: String,
    mentions: Vec<EventMention>,
}

#[derive(Serialize)]
struct MetaRow<'a> {
    #[serde(rename = "_meta")]
    meta: &'a DatasetMeta,
}

/// Serializes to the fixed JSONL layout: optional `_meta` row, then one compact row per instance.
pub fn dataset_to_jsonl(dataset: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    if let Some(meta) = &dataset.meta {
        serde_json::to_writer(&mut out, &MetaRow { meta }).expect("meta serializes");
        out.push(b'\n');
    }
    for inst in &dataset.instances {
        let row = InstanceRow {
            id: inst.id.clone(),
            text: inst.passage.clone(),
            mentions: inst.mentions.clone(),
        };
        serde_json::to_writer(&mut out, &row).expect("row serializes");
        out.push(b'\n');
    }
    out
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&dataset_to_jsonl(dataset)))
        .map_err(|e| Error::io(path, e))
}

/// Parses dataset JSONL, revalidating every mention (and ontology membership when given).
pub fn parse_dataset(text: &str, name: &str, ontology: Option<&Ontology>) -> Result<Dataset> {
    let mut meta = None;
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("{name} line {}", i + 1);
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| Error::parse(&location, e))?;
        if let Some(m) = value.get("_meta") {
            if meta.is_some() || !instances.is_empty() {
                return Err(Error::parse(&location, "`_meta` row must be the first row"));
            }
            meta = Some(
                serde_json::from_value::<DatasetMeta>(m.clone())
                    .map_err(|e| Error::parse(&location, e))?,
            );
            continue;
        }
        let row: InstanceRow =
            serde_json::from_value(value).map_err(|e| Error::parse(&location, e))?;
        if !seen.insert(row.id.clone()) {
            return Err(Error::validation(
                format!("instance `{}`", row.id),
                format!("duplicate id at {location}"),
            ));
        }
        let mut inst = SyntheticInstance::new(row.id, row.text);
        inst.mentions = row.mentions;
        inst.mentions.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        inst.validate(ontology)?;
        instances.push(inst);
    }
    Ok(Dataset { instances, meta })
}

pub fn read_dataset(path: impl AsRef<Path>, ontology: Option<&Ontology>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string(), ontology)
}

/// Outcome of [`greedy_sample`] per event type, in ontology order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventQuota {
    pub event: String,
    pub selected: usize,
    pub available: usize,
    pub shortfall: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleReport {
    pub n: usize,
    pub per_event: Vec<EventQuota>,
    /// Pool indices in selection order.
    pub selection: Vec<usize>,
}

/// Selection order of the greedy balancer over per-instance event-index sets.
///
/// Each round takes the event with the largest remaining deficit `n - c[e]` (ties: lower
/// index) that still has an unselected candidate, then the candidate covering the most
/// events with a positive deficit (ties: earliest pool index), and credits every event the
/// candidate mentions. Stops when no unselected instance can reduce a positive deficit.
pub fn greedy_order(pool: &[Vec<usize>], num_events: usize, n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut counts = vec![0usize; num_events];
    let mut selected = vec![false; pool.len()];
    let mut order = Vec::new();
    loop {
        let mut events: Vec<usize> = (0..num_events).filter(|&e| counts[e] < n).collect();
        events.sort_by_key(|&e| (std::cmp::Reverse(n - counts[e]), e));
        let pick = events.into_iter().find_map(|target| {
            pool.iter()
                .enumerate()
                .filter(|(i, evs)| !selected[*i] && evs.contains(&target))
                .map(|(i, evs)| (i, evs.iter().filter(|&&e| counts[e] < n).count()))
                // max_by_key keeps the last maximum; reverse the index to prefer the earliest
                .max_by_key(|&(i, score)| (score, std::cmp::Reverse(i)))
                .map(|(i, _)| i)
        });
        let Some(i) = pick else { break };
        selected[i] = true;
        order.push(i);
        for &e in &pool[i] {
            counts[e] += 1;
        }
    }
    (order, counts)
}

/// Picks about `n` instances per event type from `pool` with [`greedy_order`].
///
/// Instances count toward every event they mention, so co-occurring events can exceed `n`.
/// Output keeps selection order.
pub fn greedy_sample(pool: &[SyntheticInstance], ontology: &Ontology, n: usize) -> (Dataset, SampleReport) {
    let event_sets: Vec<Vec<usize>> = pool
        .iter()
        .map(|inst| {
            inst.event_types()
                .into_iter()
                .filter_map(|e| ontology.position(e))
                .collect()
        })
        .collect();
    let (order, counts) = greedy_order(&event_sets, ontology.len(), n);
    let mut available = vec![0usize; ontology.len()];
    for set in &event_sets {
        for &e in set {
            available[e] += 1;
        }
    }
    let per_event = ontology
        .events()
        .iter()
        .enumerate()
        .map(|(e, ev)| EventQuota {
            event: ev.name.clone(),
            selected: counts[e],
            available: available[e],
            shortfall: counts[e] < n,
        })
        .collect();
    let instances = order.iter().map(|&i| pool[i].clone()).collect();
    let dataset = Dataset {
        instances,
        meta: None,
    };
    (
        dataset,
        SampleReport {
            n,
            per_event,
            selection: order,
        },
    )
}

/// Appends gold instances after the synthetic ones with ids prefixed `gold-` and origin `gold`.
pub fn append_gold(dataset: &Dataset, gold: &[SyntheticInstance], ontology: &Ontology) -> Result<Dataset> {
    let mut out = dataset.clone();
    let mut ids: HashSet<String> = out.instances.iter().map(|i| i.id.clone()).collect();
    for g in gold {
        g.validate(Some(ontology))?;
        let mut inst = g.clone();
        inst.id = format!("gold-{}", g.id);
        for m in &mut inst.mentions {
            m.origin = Origin::Gold;
        }
        if !ids.insert(inst.id.clone()) {
            return Err(Error::validation(
                format!("instance `{}`", inst.id),
                "id already present in dataset",
            ));
        }
        out.instances.push(inst);
    }
    Ok(out)
}
