//! Event ontology: the closed set of event types every prompt and validation step refers to.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::sha256_hex;
use crate::text::trim_decoration;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventType {
    pub name: String,
    pub definition: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

impl EventType {
    pub fn new(name: impl Into<String>, definition: impl Into<String>) -> Self {
        EventType {
            name: name.into(),
            definition: definition.into(),
            aliases: Vec::new(),
        }
    }

    pub fn with_aliases<I, S>(mut self, aliases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.aliases = aliases.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct OntologyFile {
    #[serde(default)]
    domain: String,
    #[serde(default = "default_language")]
    language: String,
    events: Vec<EventType>,
}

fn default_language() -> String {
    "en".to_string()
}

/// Validated, immutable ontology. Lookup keys are ASCII-folded names and aliases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    events: Vec<EventType>,
    domain_label: String,
    language: String,
    index: HashMap<String, usize>,
}

impl Ontology {
    pub fn new(
        events: Vec<EventType>,
        domain_label: impl Into<String>,
        language: impl Into<String>,
    ) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::validation("events", "ontology needs at least one event type"));
        }
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, event) in events.iter().enumerate() {
            let field = format!("events[{i}]");
            if event.name.trim().is_empty() {
                return Err(Error::validation(format!("{field}.name"), "name is empty"));
            }
            if event.name.contains(['\n', '\r']) {
                return Err(Error::validation(
                    format!("{field}.name"),
                    format!("name {:?} contains a newline", event.name),
                ));
            }
            if event.definition.trim().is_empty() {
                return Err(Error::validation(
                    format!("{field}.definition"),
                    format!("definition of `{}` is empty", event.name),
                ));
            }
            for (j, key) in std::iter::once(&event.name).chain(&event.aliases).enumerate() {
                let folded = key.trim().to_ascii_lowercase();
                let key_field = if j == 0 {
                    format!("{field}.name")
                } else {
                    format!("{field}.aliases[{}]", j - 1)
                };
                if folded.is_empty() {
                    return Err(Error::validation(key_field, "alias is empty"));
                }
                if let Some(&other) = index.get(&folded) {
                    let message = if other == i {
                        format!("`{key}` repeats a name or alias of `{}`", event.name)
                    } else {
                        format!("`{key}` collides with event type `{}`", events[other].name)
                    };
                    return Err(Error::validation(key_field, message));
                }
                index.insert(folded, i);
            }
        }
        Ok(Ontology {
            events,
            domain_label: domain_label.into(),
            language: language.into(),
            index,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: OntologyFile =
            serde_json::from_str(text).map_err(|e| Error::parse("ontology", e))?;
        Ontology::new(file.events, file.domain, file.language)
    }

    pub fn to_json(&self) -> String {
        let file = OntologyFile {
            domain: self.domain_label.clone(),
            language: self.language.clone(),
            events: self.events.clone(),
        };
        serde_json::to_string_pretty(&file).expect("ontology serializes")
    }

    pub fn events(&self) -> &[EventType] {
        &self.events
    }

    pub fn domain_label(&self) -> &str {
        &self.domain_label
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Exact lookup by canonical name.
    pub fn get(&self, name: &str) -> Option<&EventType> {
        self.events.iter().find(|e| e.name == name)
    }

    /// Position of a canonical name in ontology order.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    /// Case-insensitive match on name or alias after trimming whitespace and edge punctuation.
    pub fn resolve_type(&self, raw: &str) -> Option<&EventType> {
        let key = trim_decoration(raw).to_ascii_lowercase();
        self.index.get(&key).map(|&i| &self.events[i])
    }

    /// Content hash of the canonical JSON form; identical ontologies hash identically.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ontology::from_json(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}
