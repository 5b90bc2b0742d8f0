//! Positional inverted index over tokens or characters.
//!
//! Token mode posts every token with its positions. Character mode posts
//! every character and every adjacent character bigram; a longer term is
//! located by intersecting the positions of its constituent bigrams.
//! Title and body are posted as separate position streams, both 0-based
//! internally; [`Location::Body`] reports 1-based body positions.
//!
//! Term frequency of a multi-unit term counts non-overlapping occurrences,
//! taken greedily from the left, that lie inside a single run.

mod persist;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, DocumentCollection, Mode, TokenizerConfig};
use crate::error::{Error, Result};

pub use persist::FORMAT_VERSION;

/// Dense document number, assigned in collection order.
pub type DocNo = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    Title,
    /// 1-based position of the first body occurrence.
    Body(u32),
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TermStats {
    pub df: u32,
    pub collection_tf: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DocHit {
    pub doc: DocNo,
    pub tf: u32,
    pub location: Location,
}

/// Every document containing a term, in ascending document order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TermPostings {
    pub hits: Vec<DocHit>,
    pub collection_tf: u64,
}

impl TermPostings {
    pub fn df(&self) -> u32 {
        self.hits.len() as u32
    }

    pub fn stats(&self) -> TermStats {
        TermStats {
            df: self.df(),
            collection_tf: self.collection_tf,
        }
    }

    pub fn get(&self, doc: DocNo) -> Option<&DocHit> {
        self.hits
            .binary_search_by_key(&doc, |h| h.doc)
            .ok()
            .map(|i| &self.hits[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct UnitPosting {
    pub doc: DocNo,
    pub title: Vec<u32>,
    pub body: Vec<u32>,
}

/// One field of a document: its runs, spelled with the mode's joiner.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Segment {
    pub runs: Vec<String>,
    /// Exclusive end position of each run.
    pub run_ends: Vec<u32>,
    pub len: u32,
}

impl Segment {
    fn from_runs(runs: Vec<Vec<String>>, mode: Mode) -> Self {
        let mut run_ends = Vec::with_capacity(runs.len());
        let mut len = 0u32;
        for r in &runs {
            len += r.len() as u32;
            run_ends.push(len);
        }
        Self {
            runs: runs.into_iter().map(|r| r.join(mode.joiner())).collect(),
            run_ends,
            len,
        }
    }

    pub(crate) fn from_stored(runs: Vec<String>, mode: Mode) -> Self {
        let units: Vec<Vec<String>> = runs.iter().map(|r| mode.units(r)).collect();
        Self::from_runs(units, mode)
    }

    fn run_of(&self, pos: u32) -> usize {
        self.run_ends.partition_point(|&end| end <= pos)
    }

    fn within_one_run(&self, start: u32, span: u32) -> bool {
        span <= 1 || self.run_of(start) == self.run_of(start + span - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DocEntry {
    pub doc_id: String,
    pub category: Option<String>,
    pub title: Segment,
    pub body: Segment,
}

impl DocEntry {
    pub fn len(&self) -> u32 {
        self.title.len + self.body.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    pub(crate) config: TokenizerConfig,
    pub(crate) docs: Vec<DocEntry>,
    pub(crate) units: HashMap<String, Vec<UnitPosting>>,
    doc_lookup: HashMap<String, DocNo>,
    category_counts: HashMap<String, u32>,
    total_len: u64,
}

struct MatchPlan {
    /// (unit key, offset from the start of the term)
    keys: Vec<(String, u32)>,
    span: u32,
    check_runs: bool,
}

impl Index {
    pub fn build(collection: &DocumentCollection, config: &TokenizerConfig) -> Result<Self> {
        if collection.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mode = config.mode;
        let mut docs = Vec::with_capacity(collection.len());
        let mut units: HashMap<String, Vec<UnitPosting>> = HashMap::new();
        for (doc_no, doc) in collection.iter().enumerate() {
            let doc_no = doc_no as DocNo;
            let title_runs = corpus::runs(&doc.title, config);
            let body_runs = corpus::runs(&doc.body, config);
            let mut local: HashMap<String, UnitPosting> = HashMap::new();
            post_segment(&title_runs, mode, doc_no, &mut local, true);
            post_segment(&body_runs, mode, doc_no, &mut local, false);
            for (key, posting) in local {
                units.entry(key).or_default().push(posting);
            }
            docs.push(DocEntry {
                doc_id: doc.doc_id.clone(),
                category: doc.category.clone(),
                title: Segment::from_runs(title_runs, mode),
                body: Segment::from_runs(body_runs, mode),
            });
        }
        for list in units.values_mut() {
            list.sort_by_key(|p| p.doc);
        }
        Self::assemble(config.clone(), docs, units)
    }

    pub(crate) fn assemble(
        config: TokenizerConfig,
        docs: Vec<DocEntry>,
        units: HashMap<String, Vec<UnitPosting>>,
    ) -> Result<Self> {
        let mut doc_lookup = HashMap::with_capacity(docs.len());
        let mut category_counts: HashMap<String, u32> = HashMap::new();
        let mut total_len = 0u64;
        for (i, d) in docs.iter().enumerate() {
            if doc_lookup.insert(d.doc_id.clone(), i as DocNo).is_some() {
                return Err(Error::DuplicateKey {
                    line: i + 1,
                    key: d.doc_id.clone(),
                });
            }
            if let Some(c) = &d.category {
                *category_counts.entry(c.clone()).or_default() += 1;
            }
            total_len += u64::from(d.len());
        }
        if docs.is_empty() {
            return Err(Error::EmptyCollection);
        }
        if total_len == 0 {
            return Err(Error::invalid("collection has no indexable content"));
        }
        Ok(Self {
            config,
            docs,
            units,
            doc_lookup,
            category_counts,
            total_len,
        })
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.config
    }

    /// Number of documents.
    pub fn n_docs(&self) -> u32 {
        self.docs.len() as u32
    }

    /// Mean document length in units.
    pub fn avg_len(&self) -> f64 {
        self.total_len as f64 / self.docs.len() as f64
    }

    /// Total units over the whole collection.
    pub fn total_len(&self) -> u64 {
        self.total_len
    }

    pub fn doc_no(&self, doc_id: &str) -> Result<DocNo> {
        self.doc_lookup
            .get(doc_id)
            .copied()
            .ok_or_else(|| Error::DocNotFound(doc_id.to_owned()))
    }

    pub fn doc_id(&self, doc: DocNo) -> &str {
        &self.docs[doc as usize].doc_id
    }

    pub fn doc_len(&self, doc: DocNo) -> u32 {
        self.docs[doc as usize].len()
    }

    pub fn category(&self, doc: DocNo) -> Option<&str> {
        self.docs[doc as usize].category.as_deref()
    }

    /// Documents carrying a category label.
    pub fn category_count(&self, category: &str) -> u32 {
        self.category_counts.get(category).copied().unwrap_or(0)
    }

    /// Runs of units for title then body.
    pub fn doc_runs(&self, doc: DocNo) -> Vec<Vec<String>> {
        let d = &self.docs[doc as usize];
        let mode = self.mode();
        d.title
            .runs
            .iter()
            .chain(&d.body.runs)
            .map(|r| mode.units(r))
            .collect()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.doc_id.as_str())
    }

    /// Distinct unit keys (tokens, or characters plus bigrams).
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.units.keys().map(String::as_str)
    }

    fn plan(&self, term: &str) -> Option<MatchPlan> {
        let mode = self.mode();
        let units = mode.units(term);
        let span = units.len() as u32;
        match (mode, units.len()) {
            (_, 0) => None,
            (_, 1) => Some(MatchPlan {
                keys: vec![(units.into_iter().next().unwrap(), 0)],
                span: 1,
                check_runs: false,
            }),
            (Mode::Character, _) => Some(MatchPlan {
                keys: units
                    .windows(2)
                    .enumerate()
                    .map(|(i, w)| (format!("{}{}", w[0], w[1]), i as u32))
                    .collect(),
                span,
                check_runs: false,
            }),
            (Mode::Token, _) => Some(MatchPlan {
                keys: units.into_iter().enumerate().map(|(i, u)| (u, i as u32)).collect(),
                span,
                check_runs: true,
            }),
        }
    }

    fn match_doc(&self, doc: DocNo, plan: &MatchPlan, lists: &[&Vec<UnitPosting>]) -> Option<(u32, Location)> {
        let postings: Vec<&UnitPosting> = lists
            .iter()
            .map(|l| l.binary_search_by_key(&doc, |p| p.doc).ok().map(|i| &l[i]))
            .collect::<Option<_>>()?;
        let entry = &self.docs[doc as usize];
        let title = count_segment(plan, &postings, &entry.title, |p| &p.title);
        let body = count_segment(plan, &postings, &entry.body, |p| &p.body);
        let tf = title.0 + body.0;
        if tf == 0 {
            return None;
        }
        let location = if title.0 > 0 {
            Location::Title
        } else {
            Location::Body(body.1.expect("body occurrence") + 1)
        };
        Some((tf, location))
    }

    fn lists(&self, plan: &MatchPlan) -> Option<Vec<&Vec<UnitPosting>>> {
        plan.keys.iter().map(|(k, _)| self.units.get(k)).collect()
    }

    /// Resolves a term to its per-document frequencies and first locations.
    pub fn postings(&self, term: &str) -> TermPostings {
        let Some(plan) = self.plan(term) else {
            return TermPostings::default();
        };
        let Some(lists) = self.lists(&plan) else {
            return TermPostings::default();
        };
        let driver = lists
            .iter()
            .enumerate()
            .min_by_key(|(_, l)| l.len())
            .map(|(i, _)| i)
            .unwrap();
        let mut out = TermPostings::default();
        for p in lists[driver] {
            if let Some((tf, location)) = self.match_doc(p.doc, &plan, &lists) {
                out.collection_tf += u64::from(tf);
                out.hits.push(DocHit {
                    doc: p.doc,
                    tf,
                    location,
                });
            }
        }
        out
    }

    pub fn term_stats(&self, term: &str) -> TermStats {
        self.postings(term).stats()
    }

    fn hit(&self, doc: DocNo, term: &str) -> Option<(u32, Location)> {
        let plan = self.plan(term)?;
        let lists = self.lists(&plan)?;
        self.match_doc(doc, &plan, &lists)
    }

    pub fn doc_tf(&self, doc_id: &str, term: &str) -> Result<u32> {
        let doc = self.doc_no(doc_id)?;
        Ok(self.tf(doc, term))
    }

    pub fn tf(&self, doc: DocNo, term: &str) -> u32 {
        self.hit(doc, term).map_or(0, |h| h.0)
    }

    pub fn first_position(&self, doc_id: &str, term: &str) -> Result<Location> {
        let doc = self.doc_no(doc_id)?;
        Ok(self.hit(doc, term).map_or(Location::Absent, |h| h.1))
    }
}

fn post_segment(
    runs: &[Vec<String>],
    mode: Mode,
    doc: DocNo,
    local: &mut HashMap<String, UnitPosting>,
    title: bool,
) {
    let mut push = |key: String, pos: u32| {
        let p = local.entry(key).or_insert_with(|| UnitPosting {
            doc,
            ..Default::default()
        });
        if title { &mut p.title } else { &mut p.body }.push(pos);
    };
    let mut pos = 0u32;
    for run in runs {
        for (i, unit) in run.iter().enumerate() {
            push(unit.clone(), pos + i as u32);
            if mode == Mode::Character {
                if let Some(next) = run.get(i + 1) {
                    push(format!("{unit}{next}"), pos + i as u32);
                }
            }
        }
        pos += run.len() as u32;
    }
}

/// Returns (non-overlapping count, first start) within one segment.
fn count_segment(
    plan: &MatchPlan,
    postings: &[&UnitPosting],
    segment: &Segment,
    field: impl Fn(&UnitPosting) -> &Vec<u32>,
) -> (u32, Option<u32>) {
    let (driver_key, driver_off) = (0usize, plan.keys[0].1);
    let mut count = 0u32;
    let mut first = None;
    let mut next_free = 0u32;
    for &pos in field(postings[driver_key]) {
        let Some(start) = pos.checked_sub(driver_off) else {
            continue;
        };
        if start < next_free {
            continue;
        }
        let aligned = plan.keys.iter().zip(postings).skip(1).all(|((_, off), p)| {
            field(p).binary_search(&(start + off)).is_ok()
        });
        if !aligned || (plan.check_runs && !segment.within_one_run(start, plan.span)) {
            continue;
        }
        count += 1;
        first.get_or_insert(start);
        next_free = start + plan.span;
    }
    (count, first)
}
