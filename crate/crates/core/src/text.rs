//! Character-level helpers shared by every stage.
//!
//! All offsets are Unicode scalar value indices (`char` positions), never bytes.

/// Lowercases and collapses internal whitespace runs to one space.
pub fn normalize_trigger(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One-to-one case fold, so folded and original strings stay the same length.
pub fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Punctuation stripped from the edges of LLM answers: ASCII punctuation plus typographic quotes.
pub fn is_edge_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{00AB}' | '\u{00BB}' | '\u{2026}'
        )
}

/// Trims whitespace and surrounding punctuation/quotes.
pub fn trim_decoration(raw: &str) -> &str {
    raw.trim_matches(|c: char| c.is_whitespace() || is_edge_punct(c))
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Substring by char offsets; `None` when out of range.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<String> {
    if start > end {
        return None;
    }
    let mut it = s.chars();
    let mut out = String::new();
    for _ in 0..start {
        it.next()?;
    }
    for _ in start..end {
        out.push(it.next()?);
    }
    Some(out)
}

/// Whether `[start, end)` in `chars` is bounded by non-word characters (or the text edges).
pub fn is_whole_word(chars: &[char], start: usize, end: usize) -> bool {
    let left = start == 0 || !is_word_char(chars[start - 1]);
    let right = end == chars.len() || !is_word_char(chars[end]);
    left && right
}

/// Earliest case-insensitive occurrence of `needle` in `haystack`, as char offsets.
pub fn find_case_insensitive(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    let hay: Vec<char> = haystack.chars().map(fold).collect();
    let pat: Vec<char> = needle.chars().map(fold).collect();
    if pat.is_empty() || pat.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - pat.len())
        .find(|&i| hay[i..i + pat.len()] == pat[..])
        .map(|i| (i, i + pat.len()))
}

pub fn contains_case_insensitive(haystack: &str, needle: &str) -> bool {
    find_case_insensitive(haystack, needle).is_some()
}

/// Splits a list-shaped LLM answer on newlines and commas, dropping bullets and numbering.
pub fn split_list_items(response: &str) -> Vec<String> {
    response
        .split(['\n', ','])
        .map(strip_list_marker)
        .map(trim_decoration)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Removes a leading "- ", "* ", "1. " or "2) " marker.
pub fn strip_list_marker(line: &str) -> &str {
    let line = line.trim();
    if let Some(rest) = line
        .strip_prefix("- ")
        .or_else(|| line.strip_prefix("* "))
        .or_else(|| line.strip_prefix("\u{2022} "))
    {
        return rest.trim();
    }
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return rest.trim();
        }
    }
    line
}

/// Answers meaning "nothing found" ("None", "None of the above", "N/A").
pub fn is_none_answer(response: &str) -> bool {
    let t = trim_decoration(response).to_ascii_lowercase();
    t.is_empty() || t == "n/a" || t == "none" || t.starts_with("none ") || t.starts_with("no event")
}

/// Strips code fences, surrounding quotes, and whitespace from a generated passage.
pub fn clean_passage(raw: &str) -> String {
    let mut text = raw.trim();
    if text.starts_with("```") {
        text = text.trim_start_matches('`');
        // drop an info string such as ```text
        if let Some(nl) = text.find('\n') {
            if !text[..nl].contains(' ') {
                text = &text[nl + 1..];
            }
        }
        text = text.trim_end().trim_end_matches('`').trim();
    }
    for (open, close) in [('"', '"'), ('\u{201C}', '\u{201D}'), ('\'', '\'')] {
        if text.len() >= 2 && text.starts_with(open) && text.ends_with(close) {
            let inner = &text[open.len_utf8()..text.len() - close.len_utf8()];
            if !inner.contains(open) && !inner.contains(close) {
                text = inner.trim();
            }
        }
    }
    text.to_string()
}
