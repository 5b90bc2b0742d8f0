//! Turning query phrases into weighted retrieval terms.
//!
//! A phrase is a run of adjacent content units. Multi-unit terms are the
//! phrase's contiguous spans, spelled with the index mode's joiner.

use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Mode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeight {
    pub weight: f64,
    pub tf_q: u32,
}

/// Distinct terms with a query-side weight and query frequency.
///
/// Adding a term that is already present increments `tf_q` and keeps the
/// mean of the weights seen, so `weight * tf_q` is the sum of all
/// contributions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedTermVector {
    entries: BTreeMap<String, TermWeight>,
}

impl WeightedTermVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: impl Into<String>, weight: f64) {
        match self.entries.entry(term.into()) {
            btree_map::Entry::Vacant(v) => {
                v.insert(TermWeight { weight, tf_q: 1 });
            }
            btree_map::Entry::Occupied(mut o) => {
                let e = o.get_mut();
                let n = f64::from(e.tf_q);
                e.weight = (e.weight * n + weight) / (n + 1.0);
                e.tf_q += 1;
            }
        }
    }

    /// Sets an entry outright.
    pub fn insert(&mut self, term: impl Into<String>, weight: f64, tf_q: u32) {
        self.entries.insert(term.into(), TermWeight { weight, tf_q });
    }

    pub fn get(&self, term: &str) -> Option<&TermWeight> {
        self.entries.get(term)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TermWeight)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&str, &TermWeight) -> bool) {
        self.entries.retain(|k, v| keep(k, v));
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        TermWeight {
                            weight: v.weight * factor,
                            tf_q: v.tf_q,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl FromIterator<(String, f64)> for WeightedTermVector {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        let mut v = Self::new();
        for (t, w) in iter {
            v.add(t, w);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Shortest,
    AllPatterns,
    Lattice,
    DownWeight,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shortest" => Ok(Strategy::Shortest),
            "all" | "all_patterns" => Ok(Strategy::AllPatterns),
            "lattice" => Ok(Strategy::Lattice),
            "down" | "down_weight" => Ok(Strategy::DownWeight),
            _ => Err(Error::invalid(format!("unknown term strategy `{s}`"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Shortest => "shortest",
            Strategy::AllPatterns => "all",
            Strategy::Lattice => "lattice",
            Strategy::DownWeight => "down",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub strategy: Strategy,
    pub k_down: f64,
    pub max_span: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Shortest,
            k_down: 0.2,
            max_span: 6,
        }
    }
}

/// Contiguous spans `(start, end)` of an `n`-unit phrase, shortest first.
pub fn spans(n: usize, max_span: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n.min(max_span)).flat_map(move |len| (0..=n - len).map(move |i| (i, i + len)))
}

pub fn span_term(phrase: &[String], start: usize, end: usize, mode: Mode) -> String {
    phrase[start..end].join(mode.joiner())
}

pub fn shortest_terms(phrases: &[Vec<String>]) -> WeightedTermVector {
    phrases.iter().flatten().map(|t| (t.clone(), 1.0)).collect()
}

pub fn all_term_patterns(phrases: &[Vec<String>], max_span: usize, mode: Mode) -> WeightedTermVector {
    let mut out = WeightedTermVector::new();
    for phrase in phrases.iter().filter(|p| !p.is_empty()) {
        let n = phrase.len() as f64;
        let weight = 1.0 / (n * (n + 1.0) / 2.0).sqrt();
        for (i, j) in spans(phrase.len(), max_span) {
            out.add(span_term(phrase, i, j, mode), weight);
        }
    }
    out
}

pub fn down_weighted_terms(
    phrases: &[Vec<String>],
    k_down: f64,
    max_span: usize,
    mode: Mode,
) -> WeightedTermVector {
    let mut out = WeightedTermVector::new();
    for phrase in phrases {
        for (i, j) in spans(phrase.len(), max_span) {
            out.add(span_term(phrase, i, j, mode), k_down.powi((j - i) as i32 - 1));
        }
    }
    out
}

/// Flat term vector for the non-lattice strategies. The lattice strategy
/// has no document-independent vector; it falls back to the shortest terms.
pub fn extract(phrases: &[Vec<String>], config: &ExtractionConfig, mode: Mode) -> WeightedTermVector {
    match config.strategy {
        Strategy::Shortest | Strategy::Lattice => shortest_terms(phrases),
        Strategy::AllPatterns => all_term_patterns(phrases, config.max_span, mode),
        Strategy::DownWeight => down_weighted_terms(phrases, config.k_down, config.max_span, mode),
    }
}

/// Longest phrase the lattice search accepts.
pub const LATTICE_MAX_UNITS: usize = 48;

/// Best segmentation of an `n`-unit phrase into contiguous groups of at
/// most `max_span` units, maximizing the sum of `gain(start, end)`.
///
/// Ties prefer fewer groups, then the lexicographically smaller sequence of
/// `key(start, end)` values.
pub fn best_path<G, K>(n: usize, max_span: usize, gain: G, key: K) -> Result<(Vec<(usize, usize)>, f64)>
where
    G: Fn(usize, usize) -> f64,
    K: Fn(usize, usize) -> String,
{
    if n == 0 {
        return Err(Error::invalid("lattice over an empty phrase"));
    }
    if n > LATTICE_MAX_UNITS {
        return Err(Error::invalid(format!("phrase of {n} units exceeds lattice limit")));
    }
    let max_span = max_span.max(1);
    // best[j]: best path covering units 0..j
    let mut best: Vec<Option<(f64, Vec<(usize, usize)>, Vec<String>)>> = vec![None; n + 1];
    best[0] = Some((0.0, Vec::new(), Vec::new()));
    for j in 1..=n {
        for i in j.saturating_sub(max_span)..j {
            let Some((score, path, keys)) = &best[i] else { continue };
            let score = score + gain(i, j);
            let better = match &best[j] {
                None => true,
                Some((s, p, k)) => {
                    score > *s
                        || (score == *s
                            && (path.len() + 1 < p.len()
                                || (path.len() + 1 == p.len() && {
                                    let mut cand = keys.clone();
                                    cand.push(key(i, j));
                                    cand < *k
                                })))
                }
            };
            if better {
                let mut p = path.clone();
                p.push((i, j));
                let mut k = keys.clone();
                k.push(key(i, j));
                best[j] = Some((score, p, k));
            }
        }
    }
    let (score, path, _) = best[n].take().expect("a path always exists");
    Ok((path, score))
}
