//! Parameter-light automatic feedback for the BM11 pipeline.
//!
//! Words of the top documents are kept when their relevance score, a
//! z-statistic comparing their rate in the top documents with their rate in
//! the rest of the collection, reaches θ. The number of feedback documents
//! and the weight of the original query can both be set automatically.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::analysis::Analyzer;
use crate::error::{Error, Result};
use crate::index::{DocNo, Index};
use crate::scoring::{self, Ranking, BM11_KQ};
use crate::terms::WeightedTermVector;

pub type Bag = BTreeMap<String, u32>;

/// θ for a one-sided significance level, rounded to six decimals.
pub fn theta_for_p(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("significance level {p} outside (0, 1)")));
    }
    let z = Normal::standard().inverse_cdf(1.0 - p);
    Ok((z * 1e6).round() / 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RMode {
    Auto,
    Fixed(usize),
}

impl FromStr for RMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" | "var" => Ok(RMode::Auto),
            _ => s
                .parse::<usize>()
                .ok()
                .filter(|&r| r >= 1)
                .map(RMode::Fixed)
                .ok_or_else(|| Error::invalid(format!("bad R `{s}`"))),
        }
    }
}

impl fmt::Display for RMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RMode::Auto => f.write_str("auto"),
            RMode::Fixed(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    Auto,
    Fixed(f64),
}

impl FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" | "var" => Ok(AlphaMode::Auto),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|a| a.is_finite())
                .map(AlphaMode::Fixed)
                .ok_or_else(|| Error::invalid(format!("bad alpha `{s}`"))),
        }
    }
}

impl fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaMode::Auto => f.write_str("auto"),
            AlphaMode::Fixed(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackBParams {
    pub theta: f64,
    pub r_mode: RMode,
    pub alpha_mode: AlphaMode,
    pub r_cap: usize,
    /// Count each selected word once per document instead of keeping its
    /// frequency.
    pub set_mode: bool,
}

impl Default for FeedbackBParams {
    fn default() -> Self {
        Self {
            theta: theta_for_p(0.10).expect("valid level"),
            r_mode: RMode::Auto,
            alpha_mode: AlphaMode::Auto,
            r_cap: 20,
            set_mode: false,
        }
    }
}

pub fn word_prob(tf: u64, size: u64) -> f64 {
    (tf as f64 + 1.0) / (size as f64 + 2.0)
}

pub fn word_var(pr: f64, size: u64) -> f64 {
    pr * (1.0 - pr) / (size as f64 + 3.0)
}

/// Word counts of the top documents and of the rest of the collection.
#[derive(Debug, Clone, PartialEq)]
pub struct TopDocBag {
    pub counts: Bag,
    pub size: u64,
    /// `collection_tf(w)` for every word in `counts`.
    pub collection_tf: HashMap<String, u64>,
    pub collection_size: u64,
}

impl TopDocBag {
    pub fn new<'a, I>(docs: I, collection_tf: &dyn Fn(&str) -> u64, collection_size: u64) -> Self
    where
        I: IntoIterator<Item = &'a Bag>,
    {
        let mut counts = Bag::new();
        for bag in docs {
            for (w, &n) in bag {
                *counts.entry(w.clone()).or_insert(0) += n;
            }
        }
        let size = counts.values().map(|&n| u64::from(n)).sum();
        let collection_tf = counts.keys().map(|w| (w.clone(), collection_tf(w))).collect();
        Self {
            counts,
            size,
            collection_tf,
            collection_size,
        }
    }

    pub fn tf(&self, w: &str) -> u64 {
        self.counts.get(w).map_or(0, |&n| u64::from(n))
    }

    /// (tf, size) of the complement of the bag in the collection.
    pub fn complement(&self, w: &str) -> (u64, u64) {
        let total = self.collection_tf.get(w).copied().unwrap_or(0);
        (
            total.saturating_sub(self.tf(w)),
            self.collection_size.saturating_sub(self.size),
        )
    }
}

/// `rel(w | bag)`: difference of smoothed rates over their pooled standard
/// error.
pub fn relevance(w: &str, bag: &TopDocBag) -> f64 {
    let p_in = word_prob(bag.tf(w), bag.size);
    let (tf_out, size_out) = bag.complement(w);
    let p_out = word_prob(tf_out, size_out);
    (p_in - p_out) / (word_var(p_in, bag.size) + word_var(p_out, size_out)).sqrt()
}

/// `F(D_i)`: the words of `doc` whose relevance reaches `theta`, with their
/// frequencies.
pub fn select_terms(doc: &Bag, bag: &TopDocBag, theta: f64) -> Bag {
    doc.iter()
        .filter(|(w, _)| relevance(w, bag) >= theta)
        .map(|(w, &n)| (w.clone(), n))
        .collect()
}

/// Automatic choice of R from the sizes `|W(F(D¹_i))|`.
///
/// Starting at R = 3, returns the first R with `diff(R) > diff(R-1)`, where
/// `diff(i) = size(i) - size(i-1)` and `size(0) = 0`. Falls back to
/// `min(available, r_cap)`.
pub fn auto_r_from(available: usize, r_cap: usize, mut size: impl FnMut(usize) -> usize) -> usize {
    let limit = available.min(r_cap);
    if limit < 3 {
        return limit.max(available.min(1));
    }
    let mut sizes: Vec<i64> = vec![0];
    let mut size_at = |i: usize, sizes: &mut Vec<i64>| -> i64 {
        while sizes.len() <= i {
            let n = sizes.len();
            sizes.push(size(n) as i64);
        }
        sizes[i]
    };
    let mut diff = |i: usize, sizes: &mut Vec<i64>| size_at(i, sizes) - size_at(i - 1, sizes);
    for r in 3..=limit {
        if diff(r, &mut sizes) > diff(r - 1, &mut sizes) {
            return r;
        }
    }
    limit
}

pub fn alpha(query_words: usize, union_size: usize) -> f64 {
    if union_size == 0 || query_words == 0 {
        return 1.0;
    }
    (union_size as f64).powf(1.0 / query_words as f64)
}

/// Bags of the top documents of a ranking plus collection statistics, with
/// per-word collection frequencies cached.
pub struct FeedbackContext<'a> {
    index: &'a Index,
    bags: Vec<Bag>,
    tf_cache: std::cell::RefCell<HashMap<String, u64>>,
}

impl<'a> FeedbackContext<'a> {
    pub fn new(index: &'a Index, analyzer: &Analyzer, docs: &[DocNo]) -> Self {
        Self {
            index,
            bags: docs.iter().map(|&d| analyzer.doc_bag(index, d)).collect(),
            tf_cache: Default::default(),
        }
    }

    pub fn from_bags(index: &'a Index, bags: Vec<Bag>) -> Self {
        Self {
            index,
            bags,
            tf_cache: Default::default(),
        }
    }

    pub fn available(&self) -> usize {
        self.bags.len()
    }

    pub fn bags(&self) -> &[Bag] {
        &self.bags
    }

    fn collection_tf(&self, w: &str) -> u64 {
        if let Some(&v) = self.tf_cache.borrow().get(w) {
            return v;
        }
        let v = self.index.term_stats(w).collection_tf;
        self.tf_cache.borrow_mut().insert(w.to_owned(), v);
        v
    }

    pub fn top_bag(&self, r: usize) -> TopDocBag {
        TopDocBag::new(&self.bags[..r], &|w| self.collection_tf(w), self.index.total_len())
    }

    /// `F(D_1) … F(D_r)` with relevance measured against `D¹_r`.
    pub fn selections(&self, r: usize, theta: f64) -> Vec<Bag> {
        let bag = self.top_bag(r);
        self.bags[..r].iter().map(|d| select_terms(d, &bag, theta)).collect()
    }

    pub fn union_size(&self, r: usize, theta: f64) -> usize {
        if r == 0 {
            return 0;
        }
        self.selections(r, theta)
            .iter()
            .flat_map(|f| f.keys())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn auto_r(&self, theta: f64, r_cap: usize) -> usize {
        auto_r_from(self.available(), r_cap, |i| self.union_size(i, theta))
    }
}

/// `q'(w|Q) = α q(w|Q) + Σ_i q(w|F(D_i)) / R` over `Q ∪ F(D_1) ∪ … ∪ F(D_R)`.
pub fn feedback_weights(
    query: &WeightedTermVector,
    selections: &[Bag],
    alpha: f64,
    index: &Index,
    set_mode: bool,
) -> WeightedTermVector {
    let r = selections.len().max(1) as f64;
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for (w, _) in query.iter() {
        sums.entry(w.to_owned()).or_insert(0.0);
    }
    let mut idf_cache: HashMap<&str, f64> = HashMap::new();
    for f in selections {
        for (w, &tf) in f {
            let idf = *idf_cache.entry(w.as_str()).or_insert_with(|| {
                let df = index.term_stats(w).df;
                scoring::idf(df, index.n_docs()).unwrap_or(0.0)
            });
            let tf = if set_mode { 1 } else { tf };
            *sums.entry(w.clone()).or_insert(0.0) += scoring::bm11_query_weight(tf, idf, BM11_KQ);
        }
    }
    let mut out = WeightedTermVector::new();
    for (w, s) in sums {
        let q = query.get(&w).map_or(0.0, |e| e.weight);
        let tf_q = query.get(&w).map_or(1, |e| e.tf_q);
        out.insert(w, alpha * q + s / r, tf_q);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackBTrace {
    pub r: usize,
    pub alpha: f64,
    pub expanded_terms: usize,
}

/// Feedback retrieval from an initial BM11 ranking. `query` holds `q(w|Q)`.
pub fn run_feedback_b(
    query: &WeightedTermVector,
    first: &Ranking,
    index: &Index,
    analyzer: &Analyzer,
    params: &FeedbackBParams,
    cutoff: usize,
) -> Result<(Ranking, FeedbackBTrace)> {
    if query.is_empty() {
        return Err(Error::EmptyQuery(first.query_id.clone()));
    }
    let depth = match params.r_mode {
        RMode::Auto => params.r_cap,
        RMode::Fixed(r) => r,
    };
    let docs: Vec<DocNo> = first.top(depth).iter().map(|e| e.doc).collect();
    if docs.is_empty() {
        return Ok((
            first.clone(),
            FeedbackBTrace {
                r: 0,
                alpha: 1.0,
                expanded_terms: 0,
            },
        ));
    }
    let ctx = FeedbackContext::new(index, analyzer, &docs);
    let r = match params.r_mode {
        RMode::Auto => ctx.auto_r(params.theta, params.r_cap),
        RMode::Fixed(r) => r.min(ctx.available()),
    };
    let selections = ctx.selections(r, params.theta);
    let union: BTreeSet<&String> = selections.iter().flat_map(|f| f.keys()).collect();
    let a = match params.alpha_mode {
        AlphaMode::Auto => alpha(query.len(), union.len()),
        AlphaMode::Fixed(a) => a,
    };
    let expanded_terms = union.iter().filter(|w| !query.contains(w)).count();
    let q2 = feedback_weights(query, &selections, a, index, params.set_mode);
    let ranking = scoring::rank_bm11(index, &q2, &first.query_id, cutoff);
    Ok((
        ranking,
        FeedbackBTrace {
            r,
            alpha: a,
            expanded_terms,
        },
    ))
}
