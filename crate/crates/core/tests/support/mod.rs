//! Independent oracles and random generators shared by the integration and acceptance tests.
//! Nothing here calls into the code paths it checks.
#![allow(dead_code)]

use std::collections::BTreeMap;

use edsynth_core::dataset::{EventMention, Origin, SyntheticInstance};
use rand::seq::SliceRandom;
use rand::Rng;

/// Lowercase + whitespace collapse written out by hand.
pub fn oracle_normalize(s: &str) -> String {
    let mut out = String::new();
    let mut pending_space = false;
    for c in s.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.extend(c.to_lowercase());
    }
    out
}

/// Brute-force per-event counts of normalized triggers, ranked by repeated max selection
/// (count desc, key asc) and cut at `t`.
pub fn oracle_top_t(pairs: &[(String, String)], t: usize) -> BTreeMap<String, Vec<(String, usize)>> {
    let mut events: Vec<String> = pairs.iter().map(|(e, _)| e.clone()).collect();
    events.sort();
    events.dedup();
    let mut out = BTreeMap::new();
    for event in events {
        let keys: Vec<String> = pairs
            .iter()
            .filter(|(e, _)| *e == event)
            .map(|(_, k)| oracle_normalize(k))
            .collect();
        let mut distinct: Vec<(String, usize)> = Vec::new();
        for k in &keys {
            if distinct.iter().any(|(d, _)| d == k) {
                continue;
            }
            let count = keys.iter().filter(|x| *x == k).count();
            distinct.push((k.clone(), count));
        }
        let mut ranked = Vec::new();
        while !distinct.is_empty() && ranked.len() < t {
            let mut best = 0;
            for i in 1..distinct.len() {
                let (bk, bc) = &distinct[best];
                let (k, c) = &distinct[i];
                if c > bc || (c == bc && k < bk) {
                    best = i;
                }
            }
            ranked.push(distinct.remove(best));
        }
        out.insert(event, ranked);
    }
    out
}

fn alnum(c: char) -> bool {
    c.is_alphanumeric()
}

fn oracle_stems(word: &str, suffixes: &[&str]) -> Vec<String> {
    let lower = word.to_lowercase();
    let mut out = vec![lower.clone()];
    for s in suffixes {
        if lower.ends_with(s) && lower.chars().count() >= s.chars().count() + 3 {
            out.push(lower[..lower.len() - s.len()].to_string());
        }
    }
    out
}

/// Splits into (words, gaps) where gaps[i] sits between words[i] and words[i+1].
fn words_and_gaps(s: &str) -> (Vec<String>, Vec<String>) {
    let mut words = Vec::new();
    let mut gaps = Vec::new();
    let mut cur = String::new();
    let mut gap = String::new();
    for c in s.chars() {
        if alnum(c) {
            if cur.is_empty() && !words.is_empty() {
                gaps.push(std::mem::take(&mut gap));
            }
            cur.push(c);
        } else {
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
            if !words.is_empty() {
                gap.push(c);
            }
        }
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    (words, gaps)
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Scans every whole-word span `[i, j)` of the passage and applies the three tier predicates;
/// returns `(start, end, tier)` of the earliest hit in the lowest tier.
pub fn oracle_anchor(passage: &str, trigger: &str, suffixes: &[&str]) -> Option<(usize, usize, u8)> {
    let chars: Vec<char> = passage.chars().collect();
    let trigger = trigger.trim();
    if trigger.is_empty() {
        return None;
    }
    let n = chars.len();
    let whole = |i: usize, j: usize| (i == 0 || !alnum(chars[i - 1])) && (j == n || !alnum(chars[j]));
    let text = |i: usize, j: usize| chars[i..j].iter().collect::<String>();
    let lower_eq = |a: &str, b: &str| {
        a.chars().count() == b.chars().count()
            && a.chars().zip(b.chars()).all(|(x, y)| x.to_lowercase().eq(y.to_lowercase()))
    };
    let (twords, tgaps) = words_and_gaps(trigger);
    let tier3 = |span: &str| {
        let first_last_alnum = span.chars().next().is_some_and(alnum) && span.chars().last().is_some_and(alnum);
        if !first_last_alnum || twords.is_empty() {
            return false;
        }
        let (words, gaps) = words_and_gaps(span);
        words.len() == twords.len()
            && gaps.iter().zip(&tgaps).all(|(a, b)| collapse_ws(a) == collapse_ws(b))
            && words.iter().zip(&twords).all(|(w, t)| {
                let a = oracle_stems(w, suffixes);
                oracle_stems(t, suffixes).iter().any(|s| a.contains(s))
            })
    };
    for tier in 1..=3u8 {
        for i in 0..n {
            for j in i + 1..=n {
                if !whole(i, j) {
                    continue;
                }
                let span = text(i, j);
                let hit = match tier {
                    1 => span == trigger,
                    2 => lower_eq(&span, trigger),
                    _ => tier3(&span),
                };
                if hit {
                    return Some((i, j, tier));
                }
            }
        }
    }
    None
}

pub const SUFFIXES: [&str; 7] = ["s", "es", "ed", "d", "ing", "ion", "ions"];

const WORDS: [&str; 24] = [
    "raid", "raids", "raided", "attack", "attacker", "arrest", "arrested", "infect", "infection",
    "infected", "Fever", "fever", "got", "kill", "killed", "positive", "Positive", "war", "WAR",
    "protest", "protests", "déjà", "日本", "Ärzte",
];

const SEPARATORS: [&str; 6] = [" ", " ", ", ", "-", ".  ", " \u{2014} "];

pub fn random_passage<R: Rng>(rng: &mut R, words: usize) -> String {
    let mut s = String::new();
    for i in 0..words {
        if i > 0 {
            s.push_str(SEPARATORS.choose(rng).unwrap());
        }
        s.push_str(WORDS.choose(rng).unwrap());
    }
    s
}

pub fn random_word<R: Rng>(rng: &mut R) -> &'static str {
    WORDS.choose(rng).unwrap()
}

/// Random instance whose mentions are valid spans of its passage.
pub fn random_instance<R: Rng>(rng: &mut R, id: &str, events: &[&str], max_mentions: usize) -> SyntheticInstance {
    let words = rng.gen_range(1..10);
    let passage = random_passage(rng, words);
    let chars: Vec<char> = passage.chars().collect();
    let mut inst = SyntheticInstance::new(id, passage.clone());
    for _ in 0..rng.gen_range(0..=max_mentions) {
        let start = rng.gen_range(0..chars.len());
        let end = rng.gen_range(start + 1..=chars.len().min(start + 8));
        inst.push_mention(EventMention {
            event_type: events.choose(rng).unwrap().to_string(),
            trigger: chars[start..end].iter().collect(),
            start,
            end,
            origin: *[Origin::Sampled, Origin::Refined, Origin::Gold].choose(rng).unwrap(),
        });
    }
    inst
}

/// Precision/recall/F1 from two unit lists by explicit nested-loop intersection.
pub fn oracle_prf<T: PartialEq + Clone>(pred: &[T], gold: &[T]) -> (f64, f64, f64) {
    let mut p: Vec<T> = Vec::new();
    for x in pred {
        if !p.contains(x) {
            p.push(x.clone());
        }
    }
    let mut g: Vec<T> = Vec::new();
    for x in gold {
        if !g.contains(x) {
            g.push(x.clone());
        }
    }
    let matched = p.iter().filter(|x| g.contains(x)).count() as f64;
    let precision = if p.is_empty() { 0.0 } else { matched / p.len() as f64 };
    let recall = if g.is_empty() { 0.0 } else { matched / g.len() as f64 };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    (precision, recall, f1)
}

/// Random-order baseline for the balancer: walk a shuffled pool once, taking any instance
/// that reduces a positive deficit. Returns per-event counts.
pub fn random_fill<R: Rng>(rng: &mut R, pool: &[Vec<usize>], events: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(rng);
    let mut counts = vec![0; events];
    for i in order {
        if pool[i].iter().any(|&e| counts[e] < n) {
            for &e in &pool[i] {
                counts[e] += 1;
            }
        }
    }
    counts
}
