//! BM11 scoring and the extended score with location, category, query
//! rarity and length factors.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Mode;
use crate::error::{Error, Result};
use crate::index::{DocNo, Index, Location, TermPostings};
use crate::terms::{self, WeightedTermVector};

/// Query-side saturation constant used by the BM11 query weight.
pub const BM11_KQ: f64 = 1000.0;

/// Depth of the first retrieval that the category factor looks at.
pub const CATEGORY_DEPTH: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub doc: DocNo,
    pub doc_id: String,
    pub score: f64,
}

/// Documents in non-increasing score order with distinct ids.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ranking {
    pub query_id: String,
    pub entries: Vec<RankedDoc>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> &[RankedDoc] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.doc_id.clone()).collect()
    }

    /// Same documents in the same order.
    pub fn same_order(&self, other: &Ranking) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.doc == b.doc)
    }
}

pub fn tf_factor(tf: u32, doc_len: u32, avg_len: f64, k_t: f64) -> f64 {
    let tf = f64::from(tf);
    tf / (tf + k_t * f64::from(doc_len) / avg_len)
}

pub fn idf(df: u32, n: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::invalid("idf of a term with df = 0"));
    }
    Ok((f64::from(n) / f64::from(df)).ln())
}

pub fn bm11_query_weight(tf_q: u32, idf: f64, k_q: f64) -> f64 {
    let tf = f64::from(tf_q);
    (k_q + 1.0) * tf / (k_q + tf) * idf
}

pub fn length_bonus(doc_len: u32, avg_len: f64) -> f64 {
    let l = f64::from(doc_len);
    l / (l + avg_len)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryTfSaturation {
    /// `TF_q = tf_q`, the rank-equivalent limit of `tf_q / (tf_q + k_q)`.
    Infinite,
    Finite(f64),
}

impl QueryTfSaturation {
    pub fn apply(self, tf_q: u32) -> f64 {
        let tf = f64::from(tf_q);
        match self {
            QueryTfSaturation::Infinite => tf,
            QueryTfSaturation::Finite(k) => tf / (tf + k),
        }
    }
}

impl FromStr for QueryTfSaturation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "∞" => Ok(QueryTfSaturation::Infinite),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0)
                .map(QueryTfSaturation::Finite)
                .ok_or_else(|| Error::invalid(format!("bad k_q `{s}`"))),
        }
    }
}

impl fmt::Display for QueryTfSaturation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryTfSaturation::Infinite => f.write_str("inf"),
            QueryTfSaturation::Finite(k) => write!(f, "{k}"),
        }
    }
}

/// Exponent choice for the query-rarity factor `ln(Nq / qf(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RarityMode {
    /// Exponent 0: factor is 1.
    Off,
    /// Exponent 1 over all query text.
    Query,
    /// Exponent 1 with `qf` counted over query titles.
    Title,
}

impl FromStr for RarityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "off" => Ok(RarityMode::Off),
            "1" | "query" => Ok(RarityMode::Query),
            "t" | "title" => Ok(RarityMode::Title),
            _ => Err(Error::invalid(format!("bad k_Nq `{s}` (expected 0, 1 or t)"))),
        }
    }
}

impl fmt::Display for RarityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RarityMode::Off => "0",
            RarityMode::Query => "1",
            RarityMode::Title => "t",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringParamsA {
    pub k_t: f64,
    pub k_q: QueryTfSaturation,
    pub rarity: RarityMode,
    pub k_loc1: f64,
    pub k_loc2: f64,
    pub k_cat: f64,
    pub use_location: bool,
    pub use_category: bool,
    pub use_length_bonus: bool,
}

impl Default for ScoringParamsA {
    fn default() -> Self {
        Self {
            k_t: 1.0,
            k_q: QueryTfSaturation::Infinite,
            rarity: RarityMode::Off,
            k_loc1: 1.2,
            k_loc2: 0.1,
            k_cat: 0.1,
            use_location: true,
            use_category: false,
            use_length_bonus: true,
        }
    }
}

impl ScoringParamsA {
    /// Every extension switched off: plain BM11 with `k_t`.
    pub fn plain() -> Self {
        Self {
            use_location: false,
            use_category: false,
            use_length_bonus: false,
            rarity: RarityMode::Off,
            ..Self::default()
        }
    }

    /// The stronger location and category constants.
    pub fn strong(mut self) -> Self {
        self.k_loc1 = 1.3;
        self.k_loc2 = 0.15;
        self.k_cat = 0.15;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_t > 0.0) {
            return Err(Error::invalid("k_t must be positive"));
        }
        if self.k_loc1 < 1.0 || !(0.0..1.0).contains(&self.k_loc2) {
            return Err(Error::invalid("need k_loc1 >= 1 and 0 <= k_loc2 < 1"));
        }
        Ok(())
    }
}

pub fn k_location(location: Location, doc_len: u32, params: &ScoringParamsA) -> f64 {
    match location {
        Location::Title => params.k_loc1,
        Location::Body(p) => {
            let len = f64::from(doc_len.max(1));
            1.0 + params.k_loc2 * (len - 2.0 * f64::from(p)) / len
        }
        Location::Absent => 1.0,
    }
}

pub fn category_factor(ratio_a: f64, ratio_b: f64, k_cat: f64) -> f64 {
    let denom = ratio_a + ratio_b;
    if denom <= 0.0 {
        return 1.0;
    }
    1.0 + k_cat * (ratio_a - ratio_b) / denom
}

/// Category proportions among the top of a first retrieval.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryBoost {
    top_counts: HashMap<String, u32>,
    top_len: usize,
    k_cat: f64,
}

impl CategoryBoost {
    pub fn new(first: &Ranking, index: &Index, k_cat: f64) -> Self {
        let top = first.top(CATEGORY_DEPTH);
        let mut top_counts = HashMap::new();
        for e in top {
            if let Some(c) = index.category(e.doc) {
                *top_counts.entry(c.to_owned()).or_default() += 1;
            }
        }
        Self {
            top_counts,
            top_len: top.len(),
            k_cat,
        }
    }

    pub fn factor(&self, doc: DocNo, index: &Index) -> f64 {
        let Some(cat) = index.category(doc) else {
            return 1.0;
        };
        let ratio_a = if self.top_len == 0 {
            0.0
        } else {
            f64::from(self.top_counts.get(cat).copied().unwrap_or(0)) / self.top_len as f64
        };
        let ratio_b = f64::from(index.category_count(cat)) / f64::from(index.n_docs());
        category_factor(ratio_a, ratio_b, self.k_cat)
    }
}

pub fn k_category(doc: DocNo, first: &Ranking, index: &Index, k_cat: f64) -> f64 {
    CategoryBoost::new(first, index, k_cat).factor(doc, index)
}

/// Query counts over the whole topic set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuerySetStats {
    pub nq: u32,
    pub qf: HashMap<String, u32>,
    pub qf_title: HashMap<String, u32>,
}

impl QuerySetStats {
    /// `queries` yields, per query, its terms and the terms of its title.
    pub fn from_queries<'a, I, A, B>(queries: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: IntoIterator<Item = &'a str>,
        B: IntoIterator<Item = &'a str>,
    {
        let mut stats = QuerySetStats::default();
        for (all, title) in queries {
            stats.nq += 1;
            for t in all.into_iter().collect::<HashSet<_>>() {
                *stats.qf.entry(t.to_owned()).or_default() += 1;
            }
            for t in title.into_iter().collect::<HashSet<_>>() {
                *stats.qf_title.entry(t.to_owned()).or_default() += 1;
            }
        }
        stats
    }
}

pub fn query_rarity_factor(term: &str, stats: &QuerySetStats, mode: RarityMode) -> f64 {
    let count = |m: &HashMap<String, u32>| f64::from(m.get(term).copied().unwrap_or(0).max(1));
    let nq = f64::from(stats.nq.max(1));
    match mode {
        RarityMode::Off => 1.0,
        RarityMode::Query => (nq / count(&stats.qf)).ln(),
        RarityMode::Title => (nq / count(&stats.qf_title)).ln(),
    }
}

/// Something that can score documents for one query.
pub trait Scorer {
    /// Documents that match at least one query term, ascending.
    fn candidates(&self) -> Vec<DocNo>;
    fn score(&self, doc: DocNo) -> f64;
}

/// Top `cutoff` candidates by score, ties by ascending doc id.
pub fn rank<S: Scorer + ?Sized>(index: &Index, scorer: &S, query_id: &str, cutoff: usize) -> Ranking {
    let mut scored: Vec<RankedDoc> = scorer
        .candidates()
        .into_iter()
        .map(|doc| RankedDoc {
            doc,
            doc_id: index.doc_id(doc).to_owned(),
            score: scorer.score(doc),
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
    scored.truncate(cutoff.max(1));
    Ranking {
        query_id: query_id.to_owned(),
        entries: scored,
    }
}

fn union_candidates<'a>(lists: impl Iterator<Item = &'a TermPostings>) -> Vec<DocNo> {
    let mut docs: Vec<DocNo> = lists.flat_map(|p| p.hits.iter().map(|h| h.doc)).collect();
    docs.sort_unstable();
    docs.dedup();
    docs
}

/// `q(w|Q)` for every word of a query bag that occurs in the collection.
pub fn bm11_query_vector(bag: &BTreeMap<String, u32>, index: &Index, k_q: f64) -> WeightedTermVector {
    let mut v = WeightedTermVector::new();
    for (w, &tf) in bag {
        let df = index.term_stats(w).df;
        if df == 0 || tf == 0 {
            continue;
        }
        let idf = idf(df, index.n_docs()).expect("df > 0");
        v.insert(w.clone(), bm11_query_weight(tf, idf, k_q), tf);
    }
    v
}

/// `Σ d(w|D) × weight(w)` with `k_t = 1`.
pub struct Bm11Scorer<'a> {
    index: &'a Index,
    terms: Vec<(TermPostings, f64)>,
}

impl<'a> Bm11Scorer<'a> {
    pub fn new(index: &'a Index, vector: &WeightedTermVector) -> Self {
        let terms = vector
            .iter()
            .map(|(t, w)| (index.postings(t), w.weight))
            .filter(|(p, _)| p.df() > 0)
            .collect();
        Self { index, terms }
    }
}

impl Scorer for Bm11Scorer<'_> {
    fn candidates(&self) -> Vec<DocNo> {
        union_candidates(self.terms.iter().map(|(p, _)| p))
    }

    fn score(&self, doc: DocNo) -> f64 {
        let len = self.index.doc_len(doc);
        let avg = self.index.avg_len();
        self.terms
            .iter()
            .filter_map(|(p, w)| p.get(doc).map(|h| tf_factor(h.tf, len, avg, 1.0) * w))
            .sum()
    }
}

pub fn score_bm11(doc: DocNo, vector: &WeightedTermVector, index: &Index) -> f64 {
    Bm11Scorer::new(index, vector).score(doc)
}

pub fn rank_bm11(index: &Index, vector: &WeightedTermVector, query_id: &str, cutoff: usize) -> Ranking {
    rank(index, &Bm11Scorer::new(index, vector), query_id, cutoff)
}

/// Query for the extended scorer: flat weighted terms plus phrases searched
/// by the lattice method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemAQuery {
    pub flat: WeightedTermVector,
    pub lattice: Vec<Vec<String>>,
    pub max_span: usize,
}

impl SystemAQuery {
    pub fn flat(terms: WeightedTermVector) -> Self {
        Self {
            flat: terms,
            lattice: Vec::new(),
            max_span: 6,
        }
    }

    /// Every term the query can contribute, including lattice spans.
    pub fn all_terms(&self, mode: Mode) -> Vec<String> {
        let mut out: Vec<String> = self.flat.terms().map(str::to_owned).collect();
        for p in &self.lattice {
            out.extend(terms::spans(p.len(), self.max_span).map(|(i, j)| terms::span_term(p, i, j, mode)));
        }
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone)]
struct PreparedTerm {
    term: String,
    postings: TermPostings,
    /// IDF × TF_q × extraction weight × rarity.
    query_part: f64,
}

struct PreparedPhrase {
    n: usize,
    /// (start, end, index into `terms`)
    spans: Vec<(usize, usize, usize)>,
}

/// The extended score
/// `K_cat(d) × (Σ_t TF·IDF·TF_q·K_loc·rarity·w + length(d)/(length(d)+Δ))`.
pub struct SystemAScorer<'a> {
    index: &'a Index,
    params: ScoringParamsA,
    terms: Vec<PreparedTerm>,
    flat: Vec<usize>,
    phrases: Vec<PreparedPhrase>,
    max_span: usize,
    category: Option<CategoryBoost>,
}

impl<'a> SystemAScorer<'a> {
    /// `idf_override` replaces the collection IDF for the terms it lists.
    /// `first` supplies the first retrieval for the category factor and is
    /// required exactly when `params.use_category` is set.
    pub fn new(
        index: &'a Index,
        query: &SystemAQuery,
        params: &ScoringParamsA,
        stats: &QuerySetStats,
        first: Option<&Ranking>,
        idf_override: Option<&HashMap<String, f64>>,
    ) -> Result<Self> {
        params.validate()?;
        let category = match (params.use_category, first) {
            (true, Some(r)) => Some(CategoryBoost::new(r, index, params.k_cat)),
            (false, None) => None,
            (true, None) => return Err(Error::invalid("category factor needs a first retrieval")),
            (false, Some(_)) => return Err(Error::invalid("first retrieval given but category factor is off")),
        };
        let mode = index.mode();
        let mut terms = Vec::new();
        let mut lookup: HashMap<String, usize> = HashMap::new();
        let prepare = |term: &str, weight: f64, tf_q: u32, terms: &mut Vec<PreparedTerm>| -> Option<usize> {
            let postings = index.postings(term);
            if postings.df() == 0 {
                return None;
            }
            let idf = match idf_override.and_then(|m| m.get(term)) {
                Some(v) => *v,
                None => idf(postings.df(), index.n_docs()).expect("df > 0"),
            };
            let query_part = idf * params.k_q.apply(tf_q) * weight * query_rarity_factor(term, stats, params.rarity);
            terms.push(PreparedTerm {
                term: term.to_owned(),
                postings,
                query_part,
            });
            Some(terms.len() - 1)
        };
        let mut flat = Vec::new();
        for (t, w) in query.flat.iter() {
            if let Some(i) = prepare(t, w.weight, w.tf_q, &mut terms) {
                flat.push(i);
            }
        }
        let mut phrases = Vec::new();
        for phrase in &query.lattice {
            if phrase.is_empty() {
                continue;
            }
            let mut spans = Vec::new();
            for (i, j) in terms::spans(phrase.len(), query.max_span) {
                let term = terms::span_term(phrase, i, j, mode);
                let slot = match lookup.get(&term) {
                    Some(&s) => Some(s),
                    None => {
                        let s = prepare(&term, 1.0, 1, &mut terms);
                        if let Some(s) = s {
                            lookup.insert(term, s);
                        }
                        s
                    }
                };
                if let Some(s) = slot {
                    spans.push((i, j, s));
                }
            }
            phrases.push(PreparedPhrase {
                n: phrase.len(),
                spans,
            });
        }
        Ok(Self {
            index,
            params: *params,
            terms,
            flat,
            phrases,
            max_span: query.max_span,
            category,
        })
    }

    fn contribution(&self, term: &PreparedTerm, doc: DocNo) -> f64 {
        let Some(hit) = term.postings.get(doc) else {
            return 0.0;
        };
        let len = self.index.doc_len(doc);
        let loc = if self.params.use_location {
            k_location(hit.location, len, &self.params)
        } else {
            1.0
        };
        tf_factor(hit.tf, len, self.index.avg_len(), self.params.k_t) * term.query_part * loc
    }

    /// Best lattice path of phrase `p` for `doc`: per-term spellings and score.
    pub fn lattice_path(&self, p: usize, doc: DocNo) -> Result<(Vec<String>, f64)> {
        let phrase = &self.phrases[p];
        let mut gain: HashMap<(usize, usize), usize> = HashMap::new();
        for &(i, j, s) in &phrase.spans {
            gain.insert((i, j), s);
        }
        let (path, score) = terms::best_path(
            phrase.n,
            self.max_span,
            |i, j| gain.get(&(i, j)).map_or(0.0, |&s| self.contribution(&self.terms[s], doc)),
            |i, j| gain.get(&(i, j)).map_or_else(|| format!("\u{10ffff}{i}:{j}"), |&s| self.terms[s].term.clone()),
        )?;
        let names = path
            .into_iter()
            .map(|(i, j)| gain.get(&(i, j)).map_or_else(|| format!("<{i}..{j}>"), |&s| self.terms[s].term.clone()))
            .collect();
        Ok((names, score))
    }

    /// Term part of the score, before the length bonus and category factor.
    pub fn term_sum(&self, doc: DocNo) -> f64 {
        let flat: f64 = self.flat.iter().map(|&i| self.contribution(&self.terms[i], doc)).sum();
        let lattice: f64 = (0..self.phrases.len())
            .map(|p| self.lattice_path(p, doc).map_or(0.0, |(_, s)| s))
            .sum();
        flat + lattice
    }
}

impl Scorer for SystemAScorer<'_> {
    fn candidates(&self) -> Vec<DocNo> {
        union_candidates(self.terms.iter().map(|t| &t.postings))
    }

    fn score(&self, doc: DocNo) -> f64 {
        let mut s = self.term_sum(doc);
        if self.params.use_length_bonus {
            s += length_bonus(self.index.doc_len(doc), self.index.avg_len());
        }
        match &self.category {
            Some(c) => c.factor(doc, self.index) * s,
            None => s,
        }
    }
}

pub fn score_system_a(
    doc: DocNo,
    query: &SystemAQuery,
    index: &Index,
    params: &ScoringParamsA,
    stats: &QuerySetStats,
    first: Option<&Ranking>,
) -> Result<f64> {
    Ok(SystemAScorer::new(index, query, params, stats, first, None)?.score(doc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, DocumentCollection, TokenizerConfig};

    fn index(docs: &[(&str, &str, &str)]) -> Index {
        let c = DocumentCollection::from_documents(
            docs.iter().map(|(i, t, b)| Document::new(*i, *t, *b)).collect(),
        )
        .unwrap();
        Index::build(&c, &TokenizerConfig::token()).unwrap()
    }

    #[test]
    fn tf_factor_values() {
        assert_eq!(tf_factor(0, 10, 10.0, 1.0), 0.0);
        assert_eq!(tf_factor(3, 10, 10.0, 1.0), 0.75);
        assert!(tf_factor(1_000_000, 10, 10.0, 1.0) < 1.0);
        assert!(tf_factor(4, 10, 10.0, 1.0) > tf_factor(3, 10, 10.0, 1.0));
    }

    #[test]
    fn idf_values() {
        assert_eq!(idf(7, 7).unwrap(), 0.0);
        assert!((idf(10, 100).unwrap() - 2.302_585_092_994_046).abs() < 1e-12);
        assert!(idf(0, 100).is_err());
    }

    #[test]
    fn query_weight_values() {
        for k in [1.0, 7.5, 1000.0] {
            assert!((bm11_query_weight(1, 2.5, k) - 2.5).abs() < 1e-15);
        }
        assert!((bm11_query_weight(3, 2.0, 1000.0) - 1001.0 * 3.0 / 1003.0 * 2.0).abs() < 1e-12);
        assert!((bm11_query_weight(3, 2.0, 1000.0) - 5.98804).abs() < 1e-5);
        assert!(bm11_query_weight(4, 2.0, 1000.0) >= bm11_query_weight(3, 2.0, 1000.0));
    }

    #[test]
    fn location_values() {
        let p = ScoringParamsA::default();
        assert_eq!(k_location(Location::Title, 100, &p), 1.2);
        assert!((k_location(Location::Body(1), 100, &p) - 1.098).abs() < 1e-12);
        assert_eq!(k_location(Location::Body(50), 100, &p), 1.0);
        assert_eq!(k_location(Location::Absent, 100, &p), 1.0);
    }

    #[test]
    fn category_values() {
        assert_eq!(category_factor(0.2, 0.2, 0.1), 1.0);
        assert!((category_factor(0.3, 0.1, 0.1) - 1.05).abs() < 1e-12);
        assert_eq!(category_factor(0.0, 0.0, 0.1), 1.0);
        let idx = index(&[("d1", "", "a")]);
        let first = Ranking::default();
        assert_eq!(k_category(0, &first, &idx, 0.1), 1.0);
    }

    #[test]
    fn rarity_values() {
        let mut s = QuerySetStats {
            nq: 50,
            ..Default::default()
        };
        s.qf.insert("t".into(), 5);
        s.qf.insert("all".into(), 50);
        assert_eq!(query_rarity_factor("t", &s, RarityMode::Off), 1.0);
        assert!((query_rarity_factor("t", &s, RarityMode::Query) - 10f64.ln()).abs() < 1e-12);
        assert_eq!(query_rarity_factor("all", &s, RarityMode::Query), 0.0);
        // unseen in titles: clamped to 1
        assert!((query_rarity_factor("t", &s, RarityMode::Title) - 50f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn length_bonus_values() {
        assert_eq!(length_bonus(10, 10.0), 0.5);
        assert_eq!(length_bonus(0, 10.0), 0.0);
        assert!(length_bonus(11, 10.0) > length_bonus(10, 10.0));
    }

    #[test]
    fn bm11_disjoint_and_single_term() {
        let idx = index(&[("d1", "", "a b"), ("d2", "", "c d e f")]);
        let mut v = WeightedTermVector::new();
        v.insert("zzz", 1.0, 1);
        assert_eq!(score_bm11(0, &v, &idx), 0.0);
        let mut v = WeightedTermVector::new();
        v.insert("a", 2.0, 1);
        let expected = tf_factor(1, 2, 3.0, 1.0) * 2.0;
        assert!((score_bm11(0, &v, &idx) - expected).abs() < 1e-15);
    }

    #[test]
    fn rank_ties_and_cutoff() {
        let idx = index(&[("d2", "", "a"), ("d1", "", "a"), ("d3", "", "a b")]);
        let mut v = WeightedTermVector::new();
        v.insert("a", 1.0, 1);
        let r = rank_bm11(&idx, &v, "q", 100);
        assert_eq!(r.len(), 3);
        assert_eq!(r.entries[0].doc_id, "d1");
        assert_eq!(r.entries[1].doc_id, "d2");
        assert_eq!(rank_bm11(&idx, &v, "q", 1).len(), 1);
    }

    #[test]
    fn system_a_reduces_to_bm11() {
        let idx = index(&[("d1", "a", "a b c"), ("d2", "", "b c"), ("d3", "", "a a a d")]);
        let mut v = WeightedTermVector::new();
        v.insert("a", 1.0, 1);
        v.insert("b", 1.0, 1);
        let bm = {
            let mut q = WeightedTermVector::new();
            for t in ["a", "b"] {
                let df = idx.term_stats(t).df;
                q.insert(t, idf(df, 3).unwrap(), 1);
            }
            q
        };
        let query = SystemAQuery::flat(v);
        let stats = QuerySetStats::default();
        for d in 0..3 {
            let a = score_system_a(d, &query, &idx, &ScoringParamsA::plain(), &stats, None).unwrap();
            assert!((a - score_bm11(d, &bm, &idx)).abs() < 1e-12);
        }
    }

    #[test]
    fn title_term_single_defaults() {
        let idx = index(&[("d1", "rust", "systems language"), ("d2", "", "python scripting language")]);
        let mut v = WeightedTermVector::new();
        v.insert("rust", 1.0, 1);
        let q = SystemAQuery::flat(v);
        let s = score_system_a(0, &q, &idx, &ScoringParamsA::default(), &QuerySetStats::default(), None).unwrap();
        let expected = 1.2 * tf_factor(1, 3, 3.0, 1.0) * 2f64.ln() + length_bonus(3, 3.0);
        assert!((s - expected).abs() < 1e-9);
        let off = ScoringParamsA {
            use_location: false,
            ..Default::default()
        };
        let s_off = score_system_a(0, &q, &idx, &off, &QuerySetStats::default(), None).unwrap();
        assert!(s > s_off);
    }

    #[test]
    fn category_requires_first_ranking() {
        let idx = index(&[("d1", "", "a")]);
        let q = SystemAQuery::flat(WeightedTermVector::new());
        let p = ScoringParamsA {
            use_category: true,
            ..Default::default()
        };
        assert!(score_system_a(0, &q, &idx, &p, &QuerySetStats::default(), None).is_err());
    }
}
