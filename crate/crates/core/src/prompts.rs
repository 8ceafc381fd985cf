//! Prompt templates with `{{placeholder}}` substitution.
//!
//! Each stage has a user-prompt template and a system prompt. Defaults are compiled in;
//! an operator directory may override any of them with `<stage>.txt` / `<stage>.system.txt`.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ontology::EventType;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: String,
    text: String,
    placeholders: BTreeSet<String>,
}

enum Piece<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

fn pieces(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("{{") {
        let Some(close) = rest[open + 2..].find("}}") else {
            break;
        };
        out.push(Piece::Literal(&rest[..open]));
        out.push(Piece::Slot(rest[open + 2..open + 2 + close].trim()));
        rest = &rest[open + 2 + close + 2..];
    }
    out.push(Piece::Literal(rest));
    out
}

impl Template {
    /// Fails when any of `required` does not appear in `text`.
    pub fn new(name: impl Into<String>, text: impl Into<String>, required: &[&str]) -> Result<Self> {
        let name = name.into();
        let text = text.into();
        let placeholders: BTreeSet<String> = pieces(&text)
            .into_iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s.to_string()),
                Piece::Literal(_) => None,
            })
            .collect();
        let missing: Vec<&str> = required
            .iter()
            .copied()
            .filter(|r| !placeholders.contains(*r))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Template {
                template: name,
                message: format!("missing placeholder(s): {}", missing.join(", ")),
            });
        }
        Ok(Template {
            name,
            text,
            placeholders,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.placeholders.iter().map(String::as_str)
    }

    /// Single-pass substitution; values are inserted verbatim and never re-scanned.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String> {
        let mut out = String::with_capacity(self.text.len() + 256);
        for piece in pieces(&self.text) {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot(slot) => {
                    let value = values
                        .iter()
                        .find(|(k, _)| *k == slot)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| Error::Template {
                            template: self.name.clone(),
                            message: format!("no value supplied for {{{{{slot}}}}}"),
                        })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

/// A stage's system prompt plus user template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePrompt {
    pub system: String,
    pub user: Template,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub scout_stage1: StagePrompt,
    pub scout_stage2: StagePrompt,
    pub scout_internal: StagePrompt,
    pub narrator: StagePrompt,
    pub refiner: StagePrompt,
}

struct StageSpec {
    file: &'static str,
    required: &'static [&'static str],
    system: &'static str,
    user: &'static str,
}

const STAGE1: StageSpec = StageSpec {
    file: "scout_stage1",
    required: &["event_blocks", "sentence"],
    system: "You are an expert annotator for event detection. You identify which event types are mentioned in a sentence.",
    user: "Event types and their definitions:\n{{event_blocks}}\n\nSentence: {{sentence}}\n\nWhich of the event types above are mentioned in the sentence? Answer with the event type names only, separated by commas. If none are mentioned, answer \"None\".",
};

const STAGE2: StageSpec = StageSpec {
    file: "scout_stage2",
    required: &["event_name", "event_definition", "sentence"],
    system: "You are an expert annotator for event detection. You find the trigger word of an event in a sentence.",
    user: "Event type: {{event_name}}\nDefinition: {{event_definition}}\n\nSentence: {{sentence}}\n\nCopy the single word or short phrase from the sentence that most clearly expresses the {{event_name}} event. Answer with the trigger only.",
};

const INTERNAL: StageSpec = StageSpec {
    file: "scout_internal",
    required: &["event_name", "event_definition", "t"],
    system: "You are an expert in event detection.",
    user: "Event type: {{event_name}}\nDefinition: {{event_definition}}\n\nList {{t}} different words that commonly trigger this event in text. Answer with the words only, separated by commas.",
};

const NARRATOR: StageSpec = StageSpec {
    file: "narrator",
    required: &["event_blocks", "few_shot", "instructions"],
    system: "You write realistic text passages for building event detection training data.",
    user: "Event types and their definitions:\n{{event_blocks}}\n\n{{few_shot}}{{instructions}}",
};

const REFINER: StageSpec = StageSpec {
    file: "refiner",
    required: &["event_blocks", "passage"],
    system: "You are an expert annotator for event detection.",
    user: "Event types and their definitions:\n{{event_blocks}}\n\nPassage: {{passage}}\n\nList every mention of the event types above in the passage, one per line, in the form `trigger -> event type`, where the trigger is copied exactly from the passage. If there are none, answer \"None\".",
};

fn build(spec: &StageSpec, dir: Option<&Path>) -> Result<StagePrompt> {
    let read = |suffix: &str| -> Result<Option<String>> {
        let Some(dir) = dir else { return Ok(None) };
        let path = dir.join(format!("{}{suffix}", spec.file));
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(Some(text.trim_end_matches('\n').to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    };
    let user = read(".txt")?.unwrap_or_else(|| spec.user.to_string());
    let system = read(".system.txt")?.unwrap_or_else(|| spec.system.to_string());
    Ok(StagePrompt {
        system,
        user: Template::new(spec.file, user, spec.required)?,
    })
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet::load(None).expect("built-in templates are valid")
    }
}

impl PromptSet {
    /// Built-in templates, overridden by any files found in `dir`.
    pub fn load(dir: Option<&Path>) -> Result<Self> {
        Ok(PromptSet {
            scout_stage1: build(&STAGE1, dir)?,
            scout_stage2: build(&STAGE2, dir)?,
            scout_internal: build(&INTERNAL, dir)?,
            narrator: build(&NARRATOR, dir)?,
            refiner: build(&REFINER, dir)?,
        })
    }
}

/// `- Name: definition` lines for the given events.
pub fn event_blocks<'a>(events: impl IntoIterator<Item = &'a EventType>) -> String {
    events
        .into_iter()
        .map(|e| format!("- {}: {}", e.name, e.definition.trim()))
        .collect::<Vec<_>>()
        .join("\n")
}
