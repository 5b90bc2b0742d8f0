//! Dictionary-based cross-lingual retrieval.
//!
//! The dictionary is built from keyword pairs of parallel records: every
//! co-occurring (source, target) keyword pair counts once per record. Query
//! translation is a leftmost-longest scan over source tokens. Before
//! translation a query can be expanded with words from the top documents of
//! a source-language retrieval.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::Analyzer;
use crate::corpus::{self, Query, TokenizerConfig};
use crate::error::{Error, Result};
use crate::feedback_b::{self, Bag, FeedbackBParams, FeedbackContext};
use crate::index::Index;
use crate::scoring::{self, Ranking, BM11_KQ};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordPairRecord {
    #[serde(alias = "id")]
    pub record_id: String,
    #[serde(alias = "source")]
    pub source_keywords: Vec<String>,
    #[serde(alias = "target")]
    pub target_keywords: Vec<String>,
}

pub fn load_keyword_pairs(path: impl AsRef<Path>) -> Result<Vec<KeywordPairRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Source phrase (as tokens) to target phrases ranked by co-occurrence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BilingualDictionary {
    entries: BTreeMap<Vec<String>, Vec<(Vec<String>, u32)>>,
    max_source_len: usize,
}

fn phrase_key(tokens: &[String]) -> String {
    tokens.join(" ")
}

impl BilingualDictionary {
    fn from_counts(counts: BTreeMap<Vec<String>, BTreeMap<Vec<String>, u32>>) -> Self {
        let mut entries = BTreeMap::new();
        let mut max_source_len = 0;
        for (src, targets) in counts {
            let mut list: Vec<_> = targets.into_iter().filter(|(_, n)| *n > 0).collect();
            if list.is_empty() {
                continue;
            }
            list.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| phrase_key(&a.0).cmp(&phrase_key(&b.0))));
            max_source_len = max_source_len.max(src.len());
            entries.insert(src, list);
        }
        Self {
            entries,
            max_source_len,
        }
    }

    /// Every single-unit word maps to itself.
    pub fn identity<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let counts = words
            .into_iter()
            .map(|w| (vec![w.to_owned()], BTreeMap::from([(vec![w.to_owned()], 1)])))
            .collect();
        Self::from_counts(counts)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn targets(&self, source: &[String]) -> Option<&[(Vec<String>, u32)]> {
        self.entries.get(source).map(Vec::as_slice)
    }

    pub fn head(&self, source: &[String]) -> Option<&[String]> {
        self.targets(source).map(|t| t[0].0.as_slice())
    }

    /// TSV lines `source<TAB>target<TAB>count`, grouped by source.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (src, targets) in &self.entries {
            for (tgt, n) in targets {
                writeln!(out, "{}\t{}\t{}", phrase_key(src), phrase_key(tgt), n)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn parse_tsv<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut counts: BTreeMap<Vec<String>, BTreeMap<Vec<String>, u32>> = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Parse { line: i + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(bad(format!("expected 3 tab-separated columns, found {}", cols.len())));
            }
            let n: u32 = cols[2].trim().parse().map_err(|_| bad(format!("bad count `{}`", cols[2])))?;
            let split = |s: &str| s.split_whitespace().map(str::to_owned).collect::<Vec<_>>();
            let (src, tgt) = (split(cols[0]), split(cols[1]));
            if src.is_empty() || tgt.is_empty() || n == 0 {
                return Err(bad("empty phrase or zero count".into()));
            }
            *counts.entry(src).or_default().entry(tgt).or_insert(0) += n;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(BufReader::new(file), path)
    }
}

/// Counts every (source keyword, target keyword) pair of every record.
/// Keywords are tokenized with the respective configurations.
pub fn build_dictionary<'a, I>(records: I, source: &TokenizerConfig, target: &TokenizerConfig) -> BilingualDictionary
where
    I: IntoIterator<Item = &'a KeywordPairRecord>,
{
    let mut counts: BTreeMap<Vec<String>, BTreeMap<Vec<String>, u32>> = BTreeMap::new();
    for rec in records {
        let tok = |cfg: &TokenizerConfig, words: &[String]| -> BTreeSet<Vec<String>> {
            words
                .iter()
                .map(|w| corpus::tokenize(w, cfg))
                .filter(|t| !t.is_empty())
                .collect()
        };
        let (srcs, tgts) = (tok(source, &rec.source_keywords), tok(target, &rec.target_keywords));
        for s in &srcs {
            for t in &tgts {
                *counts.entry(s.clone()).or_default().entry(t.clone()).or_insert(0) += 1;
            }
        }
    }
    BilingualDictionary::from_counts(counts)
}

/// Leftmost-longest translation of one run of source tokens.
///
/// Returns runs of target tokens; a dropped token ends the current run, a
/// passed-through one is emitted as is.
pub fn translate_run(tokens: &[String], dict: &BilingualDictionary, passthrough: bool) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = (1..=dict.max_source_len.min(tokens.len() - i))
            .rev()
            .find_map(|n| dict.head(&tokens[i..i + n]).map(|t| (n, t)));
        match longest {
            Some((n, target)) => {
                current.extend_from_slice(target);
                i += n;
            }
            None => {
                if passthrough {
                    current.push(tokens[i].clone());
                } else if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                i += 1;
            }
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Flat translation of a token list.
pub fn translate(tokens: &[String], dict: &BilingualDictionary, passthrough: bool) -> Vec<String> {
    translate_run(tokens, dict, passthrough).into_iter().flatten().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams {
    pub n_docs: usize,
    pub theta: f64,
    /// Take every word of the top documents, without the relevance filter.
    pub expand_all: bool,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self {
            n_docs: 5,
            theta: feedback_b::theta_for_p(0.10).expect("valid level"),
            expand_all: false,
        }
    }
}

/// Query runs extended with one run per word selected from the top
/// `n_docs` documents of a source-side retrieval.
pub fn document_expansion(
    runs: &[Vec<String>],
    source: &Index,
    analyzer: &Analyzer,
    params: &ExpansionParams,
) -> Vec<Vec<String>> {
    let mut out = runs.to_vec();
    if params.n_docs == 0 {
        return out;
    }
    let bag = analyzer.runs_bag(runs.to_vec());
    let vector = scoring::bm11_query_vector(&bag, source, BM11_KQ);
    let first = scoring::rank_bm11(source, &vector, "", params.n_docs);
    if first.is_empty() || vector.is_empty() {
        return out;
    }
    let docs: Vec<_> = first.entries.iter().map(|e| e.doc).collect();
    let ctx = FeedbackContext::new(source, analyzer, &docs);
    let selected: Vec<Bag> = if params.expand_all {
        ctx.bags().to_vec()
    } else {
        ctx.selections(docs.len(), params.theta)
    };
    let words: BTreeSet<&String> = selected.iter().flat_map(|f| f.keys()).collect();
    for w in words {
        if !bag.contains_key(w.as_str()) {
            out.push(source.mode().units(w));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClirParams {
    pub expansion: Option<ExpansionParams>,
    pub passthrough: bool,
    pub feedback: Option<FeedbackBParams>,
}

/// Source index with its analyzer, for document expansion.
pub struct SourceSide<'a> {
    pub index: &'a Index,
    pub analyzer: &'a Analyzer,
}

/// Target-side query vector for a source-language query.
pub fn translated_vector(
    query: &Query,
    source_config: &TokenizerConfig,
    source: Option<&SourceSide<'_>>,
    dict: &BilingualDictionary,
    target: &Index,
    target_analyzer: &Analyzer,
    params: &ClirParams,
) -> Result<crate::terms::WeightedTermVector> {
    let mut runs: Vec<Vec<String>> = query
        .parts
        .iter()
        .flat_map(|p| corpus::runs(p, source_config))
        .collect();
    if let (Some(src), Some(ep)) = (source, params.expansion.as_ref()) {
        runs = document_expansion(&runs, src.index, src.analyzer, ep);
    }
    let translated: Vec<Vec<String>> = runs
        .iter()
        .flat_map(|r| translate_run(r, dict, params.passthrough))
        .collect();
    let bag = target_analyzer.runs_bag(translated);
    let vector = scoring::bm11_query_vector(&bag, target, BM11_KQ);
    if vector.is_empty() {
        return Err(Error::EmptyQuery(query.query_id.clone()));
    }
    Ok(vector)
}

/// Translate, retrieve on the target index and optionally apply feedback.
#[allow(clippy::too_many_arguments)]
pub fn clir_search(
    query: &Query,
    source_config: &TokenizerConfig,
    source: Option<&SourceSide<'_>>,
    dict: &BilingualDictionary,
    target: &Index,
    target_analyzer: &Analyzer,
    params: &ClirParams,
    cutoff: usize,
) -> Result<Ranking> {
    let vector = translated_vector(query, source_config, source, dict, target, target_analyzer, params)?;
    let first = scoring::rank_bm11(target, &vector, &query.query_id, cutoff);
    match &params.feedback {
        Some(fb) => Ok(feedback_b::run_feedback_b(&vector, &first, target, target_analyzer, fb, cutoff)?.0),
        None => Ok(first),
    }
}
