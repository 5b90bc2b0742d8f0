//! Unsupervised segmentation of unsegmented text by adjacent-character
//! mutual information.
//!
//! Words are assumed to be one or two characters long. A sentence is first
//! cut at its lowest-PMI adjacent pairs until no fragment is longer than two
//! characters; two-character fragments whose PMI is at or below `k_cmi` are
//! then split into single characters. `k_cmi` is calibrated so that the
//! sample's one-character : two-character word proportion lands as close as
//! possible to a target `a:b`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentCollection;
use crate::error::{Error, Result};

/// Sentences of a text: maximal runs of alphanumeric characters, lowercased.
pub fn sentences(text: &str) -> Vec<Vec<char>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MiTable {
    unigrams: HashMap<char, u64>,
    bigrams: HashMap<(char, char), u64>,
    total_unigrams: u64,
    total_bigrams: u64,
}

impl MiTable {
    /// Counts characters and adjacent pairs within each sentence.
    pub fn from_sentences<I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[char]>,
    {
        let mut t = MiTable::default();
        for s in sentences {
            let s = s.as_ref();
            for &c in s {
                *t.unigrams.entry(c).or_default() += 1;
                t.total_unigrams += 1;
            }
            for w in s.windows(2) {
                *t.bigrams.entry((w[0], w[1])).or_default() += 1;
                t.total_bigrams += 1;
            }
        }
        t
    }

    pub fn unigram(&self, c: char) -> u64 {
        self.unigrams.get(&c).copied().unwrap_or(0)
    }

    pub fn bigram(&self, x: char, y: char) -> u64 {
        self.bigrams.get(&(x, y)).copied().unwrap_or(0)
    }

    pub fn total_unigrams(&self) -> u64 {
        self.total_unigrams
    }

    pub fn total_bigrams(&self) -> u64 {
        self.total_bigrams
    }

    pub fn vocab_size(&self) -> usize {
        self.unigrams.len()
    }

    /// Add-one smoothed pointwise mutual information of the pair `xy`.
    pub fn pmi(&self, x: char, y: char) -> f64 {
        let v = self.vocab_size().max(1) as f64;
        let p_xy = (self.bigram(x, y) as f64 + 1.0) / (self.total_bigrams as f64 + v * v);
        let p = |c: char| (self.unigram(c) as f64 + 1.0) / (self.total_unigrams as f64 + v);
        (p_xy / (p(x) * p(y))).ln()
    }
}

pub fn build_mi_table(corpus: &DocumentCollection) -> Result<MiTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyCollection);
    }
    Ok(MiTable::from_sentences(
        corpus
            .iter()
            .flat_map(|d| sentences(&d.title).into_iter().chain(sentences(&d.body))),
    ))
}

pub fn pmi(table: &MiTable, x: char, y: char) -> f64 {
    table.pmi(x, y)
}

/// Cuts at the globally lowest-PMI pair inside any fragment longer than two
/// characters until every fragment has one or two characters.
pub fn segment_phase1(sentence: &[char], table: &MiTable) -> Vec<Vec<char>> {
    let n = sentence.len();
    if n == 0 {
        return Vec::new();
    }
    let pair_pmi: Vec<f64> = sentence.windows(2).map(|w| table.pmi(w[0], w[1])).collect();
    // cut[i]: boundary between i and i+1
    let mut cut = vec![false; n.saturating_sub(1)];
    loop {
        let mut best: Option<(usize, f64)> = None;
        let mut start = 0;
        for end in 1..=n {
            if end < n && !cut[end - 1] {
                continue;
            }
            if end - start > 2 {
                for (i, &m) in pair_pmi.iter().enumerate().take(end - 1).skip(start) {
                    if best.is_none_or(|(_, b)| m < b) {
                        best = Some((i, m));
                    }
                }
            }
            start = end;
        }
        match best {
            Some((i, _)) => cut[i] = true,
            None => break,
        }
    }
    let mut out = Vec::new();
    let mut frag = vec![sentence[0]];
    for i in 1..n {
        if cut[i - 1] {
            out.push(std::mem::take(&mut frag));
        }
        frag.push(sentence[i]);
    }
    out.push(frag);
    out
}

fn split_pairs(fragments: Vec<Vec<char>>, table: &MiTable, k_cmi: f64) -> Vec<String> {
    let mut out = Vec::with_capacity(fragments.len());
    for f in fragments {
        if f.len() == 2 && table.pmi(f[0], f[1]) <= k_cmi {
            out.push(f[0].to_string());
            out.push(f[1].to_string());
        } else {
            out.push(f.into_iter().collect());
        }
    }
    out
}

pub fn segment(sentence: &[char], table: &MiTable, k_cmi: f64) -> Vec<String> {
    split_pairs(segment_phase1(sentence, table), table, k_cmi)
}

/// Target proportion of one-character to two-character words.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioTarget {
    pub a: f64,
    pub b: f64,
}

impl RatioTarget {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a < 0.0 || b < 0.0 || a + b <= 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("bad ratio {a}:{b}")));
        }
        Ok(Self { a, b })
    }

    pub fn one_char_share(&self) -> f64 {
        self.a / (self.a + self.b)
    }
}

impl Default for RatioTarget {
    fn default() -> Self {
        Self { a: 7.0, b: 3.0 }
    }
}

impl FromStr for RatioTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("ratio `{s}` is not a:b")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("ratio `{s}` is not a:b")))
        };
        RatioTarget::new(parse(a)?, parse(b)?)
    }
}

impl fmt::Display for RatioTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.a, self.b)
    }
}

/// Phase-1 statistics of a sample: one-character fragment count and the
/// sorted PMIs of its two-character fragments.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleProfile {
    pub ones: usize,
    pub pair_pmis: Vec<f64>,
}

impl SampleProfile {
    pub fn new<S: AsRef<[char]>>(sample: &[S], table: &MiTable) -> Self {
        let mut ones = 0;
        let mut pair_pmis = Vec::new();
        for s in sample {
            for f in segment_phase1(s.as_ref(), table) {
                match f.len() {
                    1 => ones += 1,
                    _ => pair_pmis.push(table.pmi(f[0], f[1])),
                }
            }
        }
        pair_pmis.sort_by(f64::total_cmp);
        Self { ones, pair_pmis }
    }

    /// One-character share after splitting the `k` lowest-PMI pairs.
    pub fn share_after(&self, k: usize) -> f64 {
        let ones = (self.ones + 2 * k) as f64;
        let twos = (self.pair_pmis.len() - k) as f64;
        ones / (ones + twos)
    }
}

/// Largest PMI threshold strictly below `x`; used to split nothing at `x`.
fn below(x: f64) -> f64 {
    x - 1.0
}

pub fn calibrate_kcmi<S: AsRef<[char]>>(sample: &[S], table: &MiTable, target: RatioTarget) -> Result<f64> {
    let profile = SampleProfile::new(sample, table);
    let pmis = &profile.pair_pmis;
    let m = pmis.len();
    if m == 0 {
        return Err(Error::invalid("sample has no two-character fragments"));
    }
    let want = target.one_char_share();
    // only cut points between distinct PMI values are attainable
    let mut best_k = 0;
    let mut best_gap = (profile.share_after(0) - want).abs();
    for k in 1..=m {
        if k < m && pmis[k - 1] == pmis[k] {
            continue;
        }
        let gap = (profile.share_after(k) - want).abs();
        if gap < best_gap {
            best_gap = gap;
            best_k = k;
        }
    }
    Ok(match best_k {
        0 => below(pmis[0]),
        k if k == m => pmis[m - 1],
        k => (pmis[k - 1] + pmis[k]) / 2.0,
    })
}

/// An external word splitter run before the MI rules.
pub trait PreSegmenter: Send + Sync {
    fn split(&self, sentence: &[char]) -> Vec<Vec<char>>;
}

/// Greedy forward maximum matching against a word list; characters not
/// covered by any entry become single-character tokens.
#[derive(Debug, Clone, Default)]
pub struct LexiconSegmenter {
    words: std::collections::HashSet<Vec<char>>,
    max_len: usize,
}

impl LexiconSegmenter {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: std::collections::HashSet<Vec<char>> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase().chars().collect::<Vec<_>>())
            .filter(|w| !w.is_empty())
            .collect();
        let max_len = words.iter().map(Vec::len).max().unwrap_or(1);
        Self { words, max_len }
    }
}

impl PreSegmenter for LexiconSegmenter {
    fn split(&self, sentence: &[char]) -> Vec<Vec<char>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < sentence.len() {
            let longest = (2..=self.max_len.min(sentence.len() - i))
                .rev()
                .find(|&l| self.words.contains(&sentence[i..i + l]))
                .unwrap_or(1);
            out.push(sentence[i..i + longest].to_vec());
            i += longest;
        }
        out
    }
}

pub fn hybrid_segment(sentence: &[char], tokenizer: &dyn PreSegmenter, table: &MiTable, k_cmi: f64) -> Vec<String> {
    let mut out = Vec::new();
    for token in tokenizer.split(sentence) {
        match token.len() {
            0 => {}
            1 => out.push(token.into_iter().collect()),
            _ => out.extend(segment(&token, table, k_cmi)),
        }
    }
    out
}

/// A ready-to-use segmenter: MI table, threshold, optional pre-splitter.
pub struct Segmenter {
    pub table: MiTable,
    pub k_cmi: f64,
    pub pre: Option<Box<dyn PreSegmenter>>,
}

impl fmt::Debug for Segmenter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Segmenter")
            .field("k_cmi", &self.k_cmi)
            .field("hybrid", &self.pre.is_some())
            .finish()
    }
}

impl Segmenter {
    pub fn new(table: MiTable, k_cmi: f64) -> Self {
        Self { table, k_cmi, pre: None }
    }

    /// Builds the table from `sentences` and calibrates the threshold on them.
    pub fn calibrated(sentences: &[Vec<char>], target: RatioTarget) -> Result<Self> {
        let table = MiTable::from_sentences(sentences);
        let k_cmi = calibrate_kcmi(sentences, &table, target)?;
        Ok(Self::new(table, k_cmi))
    }

    pub fn with_pre(mut self, pre: Box<dyn PreSegmenter>) -> Self {
        self.pre = Some(pre);
        self
    }

    pub fn words(&self, sentence: &[char]) -> Vec<String> {
        match &self.pre {
            Some(p) => hybrid_segment(sentence, p.as_ref(), &self.table, self.k_cmi),
            None => segment(sentence, &self.table, self.k_cmi),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn table_counts_bigrams_within_sentences() {
        let t = MiTable::from_sentences(sentences("abab"));
        assert_eq!(t.bigram('a', 'b'), 2);
        assert_eq!(t.bigram('b', 'a'), 1);
        let t = MiTable::from_sentences(sentences("ab. ab"));
        assert_eq!(t.bigram('a', 'b'), 2);
        assert_eq!(t.total_bigrams(), 2);
        assert_eq!(t.bigram('b', 'a'), 0);
        let t = MiTable::from_sentences(sentences("x"));
        assert_eq!(t.total_bigrams(), 0);
        assert_eq!(t.total_unigrams(), 1);
    }

    #[test]
    fn build_from_collection() {
        let c = DocumentCollection::from_documents(vec![Document::new("d", "ab", "ab. b")]).unwrap();
        let t = build_mi_table(&c).unwrap();
        assert_eq!(t.bigram('a', 'b'), 2);
        assert!(build_mi_table(&DocumentCollection::default()).is_err());
    }

    #[test]
    fn pmi_signs() {
        // a,b always adjacent; c,d frequent but never adjacent
        let text = "ab ab ab ab cc dd cc dd";
        let t = MiTable::from_sentences(sentences(text));
        assert!(t.pmi('a', 'b') > 0.0);
        assert!(t.pmi('c', 'd') < 0.0);
    }

    #[test]
    fn pmi_synthetic_table() {
        let mut t = MiTable::default();
        t.unigrams.insert('x', 8);
        t.unigrams.insert('y', 8);
        t.bigrams.insert(('x', 'y'), 8);
        t.total_unigrams = 16;
        t.total_bigrams = 15;
        let expected = ((9.0 / 19.0) / ((9.0 / 18.0) * (9.0 / 18.0)) as f64).ln();
        assert!((t.pmi('x', 'y') - expected).abs() < 1e-15);
        assert!((t.pmi('x', 'y') - (36f64 / 19.0).ln()).abs() < 1e-15);
    }

    /// Table whose PMIs follow the given pair counts over a fixed alphabet.
    fn table_with(pairs: &[((char, char), u64)]) -> MiTable {
        let mut t = MiTable::default();
        for c in ['a', 'b', 'c', 'd'] {
            t.unigrams.insert(c, 10);
            t.total_unigrams += 10;
        }
        for &(p, n) in pairs {
            t.bigrams.insert(p, n);
            t.total_bigrams += n;
        }
        t
    }

    #[test]
    fn phase1_cases() {
        let t = table_with(&[(('a', 'b'), 9), (('b', 'c'), 0), (('c', 'd'), 9)]);
        assert_eq!(segment_phase1(&chars("ab"), &t), vec![chars("ab")]);
        assert_eq!(segment_phase1(&chars("abcd"), &t), vec![chars("ab"), chars("cd")]);
        let t = table_with(&[(('a', 'b'), 1), (('b', 'c'), 9)]);
        assert!(t.pmi('a', 'b') < t.pmi('b', 'c'));
        assert_eq!(segment_phase1(&chars("abc"), &t), vec![chars("a"), chars("bc")]);
        assert!(segment_phase1(&[], &t).is_empty());
    }

    #[test]
    fn phase1_tie_breaks_leftmost() {
        let t = table_with(&[]);
        assert_eq!(segment_phase1(&chars("abc"), &t), vec![chars("a"), chars("bc")]);
    }

    #[test]
    fn threshold_extremes() {
        let t = table_with(&[(('a', 'b'), 9), (('c', 'd'), 9)]);
        let s = chars("abcd");
        let phase1: Vec<String> = segment_phase1(&s, &t).into_iter().map(|f| f.into_iter().collect()).collect();
        assert_eq!(segment(&s, &t, f64::NEG_INFINITY), phase1);
        assert_eq!(segment(&s, &t, f64::INFINITY), ["a", "b", "c", "d"]);
    }

    #[test]
    fn collocation_versus_random_pair() {
        // "ab" always together; "cd" appears together once among many c/d elsewhere
        let mut text = String::new();
        for _ in 0..20 {
            text.push_str("ab ");
        }
        for _ in 0..20 {
            text.push_str("cxd dyc ");
        }
        text.push_str("abcd");
        let t = MiTable::from_sentences(sentences(&text));
        let ab = t.pmi('a', 'b');
        let cd = t.pmi('c', 'd');
        assert!(ab > cd);
        let k = (ab + cd) / 2.0;
        assert_eq!(segment(&chars("abcd"), &t, k), ["ab", "c", "d"]);
    }

    #[test]
    fn calibration_limits() {
        let text = "abcd bcda cadb dbca abdc";
        let t = MiTable::from_sentences(sentences(text));
        let sample = sentences(text);
        let profile = SampleProfile::new(&sample, &t);
        let min = profile.pair_pmis[0];
        let max = *profile.pair_pmis.last().unwrap();
        let never = calibrate_kcmi(&sample, &t, RatioTarget::new(0.0, 1.0).unwrap()).unwrap();
        assert!(never < min);
        let always = calibrate_kcmi(&sample, &t, RatioTarget::new(1.0, 0.0).unwrap()).unwrap();
        assert!(always >= max);
        let none: Vec<Vec<char>> = vec![chars("a")];
        assert!(calibrate_kcmi(&none, &t, RatioTarget::default()).is_err());
    }

    #[test]
    fn calibration_picks_closest_share() {
        // four pair fragments with distinct PMIs and no singles
        let profile = SampleProfile {
            ones: 0,
            pair_pmis: vec![-1.0, 0.0, 2.0, 3.0],
        };
        // splitting k gives 2k singles and 4-k pairs; target 1:1
        let shares: Vec<f64> = (0..=4).map(|k| profile.share_after(k)).collect();
        let best = (0..=4)
            .min_by(|&a, &b| (shares[a] - 0.5).abs().total_cmp(&(shares[b] - 0.5).abs()))
            .unwrap();
        assert_eq!(best, 1);
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!("7:3".parse::<RatioTarget>().unwrap(), RatioTarget::default());
        assert!("7".parse::<RatioTarget>().is_err());
        assert!("0:0".parse::<RatioTarget>().is_err());
    }

    #[test]
    fn hybrid_cases() {
        let t = table_with(&[(('a', 'b'), 9), (('b', 'c'), 0), (('c', 'd'), 9)]);
        let lex = LexiconSegmenter::new(["ab", "abcd"]);
        assert_eq!(hybrid_segment(&chars("abcd"), &lex, &t, f64::NEG_INFINITY), ["ab", "cd"]);
        let lex = LexiconSegmenter::new(["ab", "cd"]);
        assert_eq!(hybrid_segment(&chars("abcd"), &lex, &t, f64::NEG_INFINITY), ["ab", "cd"]);
        assert!(hybrid_segment(&[], &lex, &t, 0.0).is_empty());
    }
}
