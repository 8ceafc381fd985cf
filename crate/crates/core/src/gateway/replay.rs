use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{prompt_digest, Backend, Completion, LlmExchange, LlmRequest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayPrompt {
    pub system: String,
    pub user: String,
}

/// One row of the replay log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub digest: String,
    pub tag: String,
    pub request: ReplayPrompt,
    pub response: String,
}

impl ReplayEntry {
    pub fn new(
        tag: impl Into<String>,
        system: impl Into<String>,
        user: impl Into<String>,
        response: impl Into<String>,
    ) -> Self {
        let request = ReplayPrompt {
            system: system.into(),
            user: user.into(),
        };
        ReplayEntry {
            digest: prompt_digest(&request.system, &request.user),
            tag: tag.into(),
            request,
            response: response.into(),
        }
    }

    pub fn from_exchange(x: &LlmExchange) -> Self {
        ReplayEntry {
            digest: x.prompt_digest.clone(),
            tag: x.request.tag.clone(),
            request: ReplayPrompt {
                system: x.request.system.clone(),
                user: x.request.user.clone(),
            },
            response: x.response_text.clone(),
        }
    }
}

/// Serves logged responses keyed by prompt digest. Read-only once built.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    entries: HashMap<String, ReplayEntry>,
}

impl ReplayBackend {
    /// Fails when two entries share a digest but disagree on the response.
    pub fn from_entries(entries: impl IntoIterator<Item = ReplayEntry>) -> Result<Self> {
        let mut map: HashMap<String, ReplayEntry> = HashMap::new();
        for entry in entries {
            let expected = prompt_digest(&entry.request.system, &entry.request.user);
            if entry.digest != expected {
                return Err(Error::validation(
                    "digest",
                    format!("entry `{}` has digest {} but its prompt hashes to {expected}", entry.tag, entry.digest),
                ));
            }
            if let Some(prev) = map.get(&entry.digest) {
                if prev.response != entry.response {
                    return Err(Error::validation(
                        "digest",
                        format!("digest {} logged twice with different responses", entry.digest),
                    ));
                }
                continue;
            }
            map.insert(entry.digest.clone(), entry);
        }
        Ok(ReplayBackend { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, digest: &str) -> bool {
        self.entries.contains_key(digest)
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &LlmRequest, digest: &str) -> Result<Completion> {
        match self.entries.get(digest) {
            Some(entry) => Ok(Completion {
                text: entry.response.clone(),
                attempts: 1,
            }),
            None => Err(Error::ReplayMiss {
                tag: request.tag.clone(),
                digest: digest.to_string(),
            }),
        }
    }
}

/// Writes exchanges as replay-log JSONL, one row per exchange, in the given order.
pub fn record_log(exchanges: &[LlmExchange], path: impl AsRef<Path>) -> Result<()> {
    let entries: Vec<ReplayEntry> = exchanges.iter().map(ReplayEntry::from_exchange).collect();
    write_entries(&entries, path)
}

pub fn write_entries(entries: &[ReplayEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut out, e).expect("replay entry serializes");
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Error::io(path, e))
}

pub fn parse_log(text: &str, name: &str) -> Result<Vec<ReplayEntry>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ReplayEntry = serde_json::from_str(line)
            .map_err(|e| Error::parse(format!("{name} line {}", i + 1), e))?;
        entries.push(entry);
    }
    Ok(entries)
}

pub fn load_log(path: impl AsRef<Path>) -> Result<ReplayBackend> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ReplayBackend::from_entries(parse_log(&text, &path.display().to_string())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{GenerationConfig, Gateway};

    fn exchanges(n: usize) -> Vec<LlmExchange> {
        (0..n)
            .map(|i| {
                let request = LlmRequest::new("t", "sys", format!("prompt {i}"), &GenerationConfig::default());
                LlmExchange {
                    prompt_digest: request.digest(),
                    request,
                    response_text: format!("answer {i}"),
                    latency_ms: 0,
                    attempt: 1,
                }
            })
            .collect()
    }

    #[test]
    fn record_then_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let xs = exchanges(5);
        record_log(&xs, &path).unwrap();
        let backend = load_log(&path).unwrap();
        assert_eq!(backend.len(), 5);
        let gw = Gateway::new(backend, 2);
        for x in xs {
            let got = gw.complete(x.request.clone()).unwrap();
            assert_eq!(got.response_text, x.response_text);
            assert_eq!(got.prompt_digest, x.prompt_digest);
        }
    }

    #[test]
    fn conflicting_digest_rejected() {
        let a = ReplayEntry::new("t", "s", "u", "one");
        let b = ReplayEntry::new("t", "s", "u", "two");
        assert!(matches!(
            ReplayBackend::from_entries([a.clone(), b]),
            Err(Error::Validation { .. })
        ));
        assert_eq!(ReplayBackend::from_entries([a.clone(), a]).unwrap().len(), 1);
    }

    #[test]
    fn corrupted_line_reports_line_number() {
        let good = serde_json::to_string(&ReplayEntry::new("t", "s", "u", "r")).unwrap();
        let text = format!("{good}\n{{broken\n");
        match parse_log(&text, "log") {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "log line 2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn miss_names_tag_and_digest() {
        let gw = Gateway::new(ReplayBackend::default(), 1);
        let req = LlmRequest::new("scout.stage1", "s", "u", &GenerationConfig::default());
        let digest = req.digest();
        match gw.complete(req) {
            Err(Error::ReplayMiss { tag, digest: d }) => {
                assert_eq!(tag, "scout.stage1");
                assert_eq!(d, digest);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hit_serves_logged_text() {
        let entry = ReplayEntry::new("scout.stage1", "s", "u", "Attack");
        let gw = Gateway::new(ReplayBackend::from_entries([entry]).unwrap(), 1);
        let x = gw
            .complete(LlmRequest::new("scout.stage1", "s", "u", &GenerationConfig::default()))
            .unwrap();
        assert_eq!(x.response_text, "Attack");
        assert_eq!(x.attempt, 1);
    }
}
