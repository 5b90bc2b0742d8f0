//! Mode-aware text analysis shared by queries and feedback.
//!
//! Token mode uses the tokenizer's runs directly. Character mode segments
//! each run into one- and two-character words with a [`Segmenter`]; without
//! one, every character is its own word.

use std::collections::BTreeMap;

use crate::corpus::{self, Mode, Query, TokenizerConfig};
use crate::error::Result;
use crate::index::{DocNo, Index};
use crate::segment::{RatioTarget, Segmenter};

#[derive(Debug)]
pub struct Analyzer {
    pub config: TokenizerConfig,
    pub segmenter: Option<Segmenter>,
}

impl Analyzer {
    pub fn new(config: TokenizerConfig) -> Self {
        Self {
            config,
            segmenter: None,
        }
    }

    pub fn with_segmenter(mut self, segmenter: Segmenter) -> Self {
        self.segmenter = Some(segmenter);
        self
    }

    /// Analyzer matching an index; in character mode the MI table and
    /// threshold are derived from the indexed text.
    pub fn for_index(index: &Index, target: RatioTarget, k_cmi: Option<f64>) -> Result<Self> {
        let mut a = Self::new(index.tokenizer().clone());
        if index.mode() == Mode::Character {
            let sentences: Vec<Vec<char>> = (0..index.n_docs())
                .flat_map(|d| index.doc_runs(d))
                .map(|run| run.iter().flat_map(|u| u.chars()).collect())
                .collect();
            let seg = match k_cmi {
                Some(k) => Segmenter::new(crate::segment::MiTable::from_sentences(&sentences), k),
                None => Segmenter::calibrated(&sentences, target)?,
            };
            a.segmenter = Some(seg);
        }
        Ok(a)
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Words of one run of units.
    pub fn segment_run(&self, run: Vec<String>) -> Vec<String> {
        match (&self.segmenter, self.mode()) {
            (Some(seg), Mode::Character) => {
                let chars: Vec<char> = run.iter().flat_map(|u| u.chars()).collect();
                seg.words(&chars)
            }
            _ => run,
        }
    }

    /// Phrases of a text: runs, segmented into words in character mode.
    pub fn phrases(&self, text: &str) -> Vec<Vec<String>> {
        corpus::runs(text, &self.config)
            .into_iter()
            .map(|r| self.segment_run(r))
            .filter(|p| !p.is_empty())
            .collect()
    }

    pub fn query_phrases(&self, query: &Query) -> Vec<Vec<String>> {
        query.parts.iter().flat_map(|p| self.phrases(p)).collect()
    }

    fn keep(&self, word: &str) -> bool {
        self.mode() == Mode::Token || !self.config.is_stopword(word)
    }

    fn count<I: IntoIterator<Item = String>>(&self, words: I) -> BTreeMap<String, u32> {
        let mut bag = BTreeMap::new();
        for w in words {
            if self.keep(&w) {
                *bag.entry(w).or_insert(0) += 1;
            }
        }
        bag
    }

    /// Bag of words of a query: `tf(w|Q)`.
    pub fn query_bag(&self, query: &Query) -> BTreeMap<String, u32> {
        self.count(self.query_phrases(query).into_iter().flatten())
    }

    /// Bag of words of a text.
    pub fn text_bag(&self, text: &str) -> BTreeMap<String, u32> {
        self.count(self.phrases(text).into_iter().flatten())
    }

    /// Bag of words of pre-tokenized runs.
    pub fn runs_bag(&self, runs: Vec<Vec<String>>) -> BTreeMap<String, u32> {
        self.count(runs.into_iter().flat_map(|r| self.segment_run(r)))
    }

    /// Bag of words of an indexed document.
    pub fn doc_bag(&self, index: &Index, doc: DocNo) -> BTreeMap<String, u32> {
        self.count(index.doc_runs(doc).into_iter().flat_map(|r| self.segment_run(r)))
    }

    /// Character-mode stopword filtering of extracted terms.
    pub fn filter_terms(&self, terms: &mut crate::terms::WeightedTermVector) {
        if self.mode() == Mode::Character {
            terms.retain(|t, _| !self.config.is_stopword(t));
        }
    }
}
