//! Documents, topics and the tokenization contract.
//!
//! Both index modes see text through [`runs`]: a run is a maximal stretch of
//! content units that are adjacent in the source text. In token mode the
//! units are lowercased (optionally stemmed) words and runs break at
//! punctuation, stopwords and dropped tokens. In character mode the units
//! are single characters and runs break at whitespace and punctuation.
//! Multi-unit terms only ever match inside a single run.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Token,
    Character,
}

impl Mode {
    /// Separator placed between units when a multi-unit term is spelled out.
    pub fn joiner(self) -> &'static str {
        match self {
            Mode::Token => " ",
            Mode::Character => "",
        }
    }

    /// Splits a term string back into its units.
    pub fn units(self, term: &str) -> Vec<String> {
        match self {
            Mode::Token => term.split(' ').filter(|s| !s.is_empty()).map(str::to_owned).collect(),
            Mode::Character => term.chars().map(String::from).collect(),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(Mode::Token),
            "character" | "char" => Ok(Mode::Character),
            _ => Err(Error::invalid(format!("unknown mode `{s}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Token => "token",
            Mode::Character => "character",
        })
    }
}

/// Suffix-stripping or table-driven stemming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Stemmer {
    /// A handful of English inflectional suffix rules.
    #[default]
    Suffix,
    /// Explicit word → stem table; words not in the table are left alone.
    Table(BTreeMap<String, String>),
}

impl Stemmer {
    pub fn stem(&self, word: &str) -> String {
        match self {
            Stemmer::Table(table) => table.get(word).cloned().unwrap_or_else(|| word.to_owned()),
            Stemmer::Suffix => suffix_stem(word),
        }
    }
}

fn suffix_stem(word: &str) -> String {
    let n = word.chars().count();
    let strip = |suffix: &str, replacement: &str, min_stem: usize| -> Option<String> {
        let stem = word.strip_suffix(suffix)?;
        (stem.chars().count() >= min_stem).then(|| format!("{stem}{replacement}"))
    };
    if n <= 3 {
        return word.to_owned();
    }
    if let Some(s) = strip("sses", "ss", 1) {
        return s;
    }
    if let Some(s) = strip("ies", "y", 2) {
        return s;
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return word.to_owned();
    }
    if let Some(s) = strip("ing", "", 3) {
        return s;
    }
    if let Some(s) = strip("ed", "", 3) {
        return s;
    }
    if let Some(s) = strip("s", "", 3) {
        return s;
    }
    word.to_owned()
}

/// Which tokens count as content words in token mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContentFilter {
    /// Drop tokens made only of digits.
    #[default]
    DropNumeric,
    KeepAll,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub mode: Mode,
    #[serde(default)]
    pub stopwords: BTreeSet<String>,
    #[serde(default)]
    pub stemming: bool,
    #[serde(default)]
    pub stemmer: Stemmer,
    #[serde(default)]
    pub filter: ContentFilter,
}

impl TokenizerConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            stopwords: BTreeSet::new(),
            stemming: false,
            stemmer: Stemmer::default(),
            filter: ContentFilter::default(),
        }
    }

    pub fn token() -> Self {
        Self::new(Mode::Token)
    }

    pub fn character() -> Self {
        Self::new(Mode::Character)
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = words.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_stemming(mut self, stemmer: Stemmer) -> Self {
        self.stemming = true;
        self.stemmer = stemmer;
        self
    }

    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(term)
    }
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self::token()
    }
}

/// Splits text into runs of adjacent content units.
pub fn runs(text: &str, config: &TokenizerConfig) -> Vec<Vec<String>> {
    match config.mode {
        Mode::Token => token_runs(text, config),
        Mode::Character => char_runs(text),
    }
}

fn char_runs(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut cur: Vec<String> = Vec::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase().map(String::from));
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn token_runs(text: &str, config: &TokenizerConfig) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut cur: Vec<String> = Vec::new();
    let mut word = String::new();
    let flush_word = |word: &mut String, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>| {
        if word.is_empty() {
            return;
        }
        let lowered = word.to_lowercase();
        word.clear();
        let numeric = lowered.chars().all(|c| c.is_numeric());
        if config.is_stopword(&lowered) || (numeric && config.filter == ContentFilter::DropNumeric) {
            if !cur.is_empty() {
                out.push(std::mem::take(cur));
            }
            return;
        }
        let token = if config.stemming {
            config.stemmer.stem(&lowered)
        } else {
            lowered
        };
        if config.is_stopword(&token) {
            if !cur.is_empty() {
                out.push(std::mem::take(cur));
            }
            return;
        }
        cur.push(token);
    };
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        flush_word(&mut word, &mut cur, &mut out);
        if !c.is_whitespace() && !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    flush_word(&mut word, &mut cur, &mut out);
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Token mode: lowercased, stemmed-if-enabled and stopword-filtered words.
/// Character mode: the characters with whitespace and punctuation removed.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    runs(text, config).into_iter().flatten().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            body: body.into(),
            category: None,
            date: None,
        }
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocumentCollection {
    docs: Vec<Document>,
}

impl DocumentCollection {
    /// Builds a collection, rejecting duplicate or invalid records.
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, doc) in docs.iter().enumerate() {
            validate_document(doc, i + 1)?;
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(Error::DuplicateKey {
                    line: i + 1,
                    key: doc.doc_id.clone(),
                });
            }
        }
        Ok(Self { docs })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }
}

impl<'a> IntoIterator for &'a DocumentCollection {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

fn validate_document(doc: &Document, line: usize) -> Result<()> {
    if doc.doc_id.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty doc_id".into(),
        });
    }
    if doc.title.trim().is_empty() && doc.body.trim().is_empty() {
        return Err(Error::Parse {
            line,
            message: format!("document `{}` has neither title nor body", doc.doc_id),
        });
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Yields `(line_number, line)` for every non-blank line of a JSONL file.
fn jsonl_records<R: BufRead, T: serde::de::DeserializeOwned>(
    reader: R,
    path: &Path,
) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub fn load_documents(path: impl AsRef<Path>) -> Result<DocumentCollection> {
    let path = path.as_ref();
    parse_documents(open(path)?, path)
}

pub fn parse_documents<R: BufRead>(reader: R, path: &Path) -> Result<DocumentCollection> {
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (line, doc) in jsonl_records::<_, Document>(reader, path)? {
        validate_document(&doc, line)?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateKey { line, key: doc.doc_id });
        }
        docs.push(doc);
    }
    Ok(DocumentCollection { docs })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub query_id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub narrative: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concepts: Option<String>,
    /// Carried for completeness; never used for retrieval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl Topic {
    pub fn new(query_id: impl Into<String>, title: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            title: title.into(),
            description: description.into(),
            narrative: None,
            concepts: None,
            field: None,
        }
    }
}

pub fn load_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>> {
    let path = path.as_ref();
    let mut seen = HashSet::new();
    let mut topics = Vec::new();
    for (line, topic) in jsonl_records::<_, Topic>(open(path)?, path)? {
        if topic.query_id.is_empty() || topic.title.trim().is_empty() {
            return Err(Error::Parse {
                line,
                message: "topic needs a non-empty query_id and title".into(),
            });
        }
        if !seen.insert(topic.query_id.clone()) {
            return Err(Error::DuplicateKey { line, key: topic.query_id });
        }
        topics.push(topic);
    }
    Ok(topics)
}

/// One word per line; blank lines and surrounding whitespace ignored.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryType {
    /// Title only.
    VeryShort,
    /// Description only.
    Short,
    /// Every part except the field.
    Long,
}

impl QueryType {
    pub fn select<'a>(&self, topic: &'a Topic) -> Vec<&'a str> {
        match self {
            QueryType::VeryShort => vec![topic.title.as_str()],
            QueryType::Short => vec![topic.description.as_str()],
            QueryType::Long => {
                let mut parts = vec![topic.title.as_str(), topic.description.as_str()];
                parts.extend(topic.narrative.as_deref());
                parts.extend(topic.concepts.as_deref());
                parts
            }
        }
    }
}

impl FromStr for QueryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "very_short" | "very-short" | "vs" => Ok(QueryType::VeryShort),
            "short" => Ok(QueryType::Short),
            "long" => Ok(QueryType::Long),
            _ => Err(Error::invalid(format!("unknown query type `{s}`"))),
        }
    }
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryType::VeryShort => "very_short",
            QueryType::Short => "short",
            QueryType::Long => "long",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub query_id: String,
    /// Raw text of the selected topic parts, in topic order.
    pub parts: Vec<String>,
    /// Tokenization of the selected parts.
    pub tokens: Vec<String>,
}

pub fn build_query(topic: &Topic, qtype: QueryType, config: &TokenizerConfig) -> Result<Query> {
    let parts: Vec<String> = qtype
        .select(topic)
        .into_iter()
        .filter(|p| !p.trim().is_empty())
        .map(str::to_owned)
        .collect();
    let tokens: Vec<String> = parts.iter().flat_map(|p| tokenize(p, config)).collect();
    if tokens.is_empty() {
        return Err(Error::EmptyQuery(topic.query_id.clone()));
    }
    Ok(Query {
        query_id: topic.query_id.clone(),
        parts,
        tokens,
    })
}
