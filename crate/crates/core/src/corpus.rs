//! Unlabeled target-domain text, one row per unit (no sentence splitting).

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_for, sha256_hex};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnlabeledSentence {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Plain,
}

impl CorpusFormat {
    /// `.jsonl`/`.json` files are JSONL, everything else plain text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<UnlabeledSentence>,
    language: String,
}

#[derive(Deserialize)]
struct JsonlRow {
    id: Option<String>,
    text: Option<String>,
    source: Option<String>,
}

impl Corpus {
    pub fn new(sentences: Vec<UnlabeledSentence>, language: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &sentences {
            if s.text.trim().is_empty() {
                return Err(Error::validation(format!("sentence `{}`", s.id), "text is empty"));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Corpus {
            sentences,
            language: language.into(),
        })
    }

    /// Builds a corpus from bare texts with ids `<prefix>#1..`.
    pub fn from_texts<I, S>(prefix: &str, texts: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sentences = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| UnlabeledSentence {
                id: format!("{prefix}#{}", i + 1),
                text: t.into(),
                source: String::new(),
            })
            .collect();
        Corpus::new(sentences, "en")
    }

    pub fn sentences(&self) -> &[UnlabeledSentence] {
        &self.sentences
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Drops rows whose text exactly repeats an earlier row.
    pub fn dedup_exact(&self) -> Corpus {
        let mut seen = HashSet::new();
        let sentences = self
            .sentences
            .iter()
            .filter(|s| seen.insert(s.text.as_str()))
            .cloned()
            .collect();
        Corpus {
            sentences,
            language: self.language.clone(),
        }
    }

    /// Content hash over (id, text) in order.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        for s in &self.sentences {
            buf.extend_from_slice(s.id.as_bytes());
            buf.push(0);
            buf.extend_from_slice(s.text.as_bytes());
            buf.push(b'\n');
        }
        sha256_hex(&buf)
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for s in &self.sentences {
            serde_json::to_writer(&mut out, s).expect("sentence serializes");
            out.push(b'\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(path, e))
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_corpus(&text, &file_name, format)
}

/// Parses corpus text; `file_name` seeds ids for rows without one.
pub fn parse_corpus(text: &str, file_name: &str, format: CorpusFormat) -> Result<Corpus> {
    let mut sentences = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fallback_id = format!("{file_name}#{line_no}");
        let sentence = match format {
            CorpusFormat::Plain => UnlabeledSentence {
                id: fallback_id,
                text: line.trim().to_string(),
                source: String::new(),
            },
            CorpusFormat::Jsonl => {
                let location = format!("{file_name} line {line_no}");
                let row: JsonlRow =
                    serde_json::from_str(line).map_err(|e| Error::parse(&location, e))?;
                let text = row
                    .text
                    .filter(|t| !t.trim().is_empty())
                    .ok_or_else(|| Error::parse(&location, "missing or empty \"text\""))?;
                UnlabeledSentence {
                    id: row.id.unwrap_or(fallback_id),
                    text,
                    source: row.source.unwrap_or_default(),
                }
            }
        };
        sentences.push(sentence);
    }
    Corpus::new(sentences, "en")
}

/// Seeded subset of `ceil(fraction * |corpus|)` rows, input order preserved.
pub fn sample_corpus(corpus: &Corpus, fraction: f64, seed: u64) -> Result<Corpus> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = corpus.len();
    // tolerance absorbs products like 0.07 * 100 = 7.000000000000001
    let size = ((fraction * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let mut rng = rng_for(seed, "corpus.sample");
    let mut picked = index::sample(&mut rng, n, size).into_vec();
    picked.sort_unstable();
    Ok(Corpus {
        sentences: picked.into_iter().map(|i| corpus.sentences[i].clone()).collect(),
        language: corpus.language.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hundred() -> Corpus {
        Corpus::from_texts("c", (0..100).map(|i| format!("sentence {i}"))).unwrap()
    }

    #[test]
    fn plain_ids_follow_line_numbers() {
        let c = parse_corpus("a\nb\n\nc\n", "file", CorpusFormat::Plain).unwrap();
        let ids: Vec<_> = c.sentences().iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["file#1", "file#2", "file#4"]);
        let c = parse_corpus("a\nb\nc", "file", CorpusFormat::Plain).unwrap();
        assert_eq!(c.sentences()[2].id, "file#3");
    }

    #[test]
    fn jsonl_missing_text_names_line() {
        let err = parse_corpus("{\"text\":\"ok\"}\n{\"id\":\"x\"}\n", "f.jsonl", CorpusFormat::Jsonl)
            .unwrap_err();
        match err {
            Error::Parse { location, .. } => assert_eq!(location, "f.jsonl line 2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jsonl_duplicate_ids() {
        let err = parse_corpus(
            "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}",
            "f.jsonl",
            CorpusFormat::Jsonl,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn sampling_sizes_and_determinism() {
        let c = hundred();
        assert_eq!(sample_corpus(&c, 1.0, 3).unwrap(), c);
        assert_eq!(sample_corpus(&c, 0.05, 7).unwrap().len(), 5);
        assert_eq!(sample_corpus(&c, 0.07, 7).unwrap().len(), 7);
        let a = sample_corpus(&c, 0.2, 7).unwrap();
        let b = sample_corpus(&c, 0.2, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
    }

    #[test]
    fn sampling_errors() {
        let empty = Corpus::new(vec![], "en").unwrap();
        assert!(matches!(sample_corpus(&empty, 0.5, 1), Err(Error::EmptyCorpus)));
        assert!(matches!(sample_corpus(&hundred(), 0.0, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(sample_corpus(&hundred(), 1.5, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dedup_keeps_first() {
        let c = Corpus::from_texts("c", ["x", "y", "x"]).unwrap().dedup_exact();
        assert_eq!(c.len(), 2);
        assert_eq!(c.sentences()[1].text, "y");
    }
}
