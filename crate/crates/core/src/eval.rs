//! Run files, graded judgments and the ranked-retrieval measures.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scoring::Ranking;

/// `query_id → doc_id → grade`. Unjudged pairs have grade 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(query_id)
            .and_then(|q| q.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.judgments.contains_key(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn relevant(&self, query_id: &str, min_grade: u32) -> HashSet<&str> {
        self.judgments
            .get(query_id)
            .into_iter()
            .flatten()
            .filter(|(_, &g)| g >= min_grade && g > 0)
            .map(|(d, _)| d.as_str())
            .collect()
    }

    /// Lines `query_id 0 doc_id grade`.
    pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut q = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.is_empty() || cols[0].starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Parse { line: i + 1, message };
            if cols.len() != 4 {
                return Err(bad(format!("expected 4 columns, found {}", cols.len())));
            }
            let grade: i64 = cols[3].parse().map_err(|_| bad(format!("bad grade `{}`", cols[3])))?;
            q.insert(cols[0], cols[2], grade.max(0) as u32);
        }
        Ok(q)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file), path)
    }
}

/// Grade thresholds of the two evaluation modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalMode {
    pub rigid_grade: u32,
    pub relax_grade: u32,
}

impl Default for EvalMode {
    fn default() -> Self {
        Self {
            rigid_grade: 2,
            relax_grade: 1,
        }
    }
}

impl EvalMode {
    pub fn new(rigid_grade: u32, relax_grade: u32) -> Result<Self> {
        if relax_grade == 0 || relax_grade > rigid_grade {
            return Err(Error::invalid("need 1 <= relax grade <= rigid grade"));
        }
        Ok(Self {
            rigid_grade,
            relax_grade,
        })
    }
}

/// Non-interpolated average precision; `None` without relevant documents.
pub fn average_precision<S: AsRef<str>>(ranking: &[S], relevant: &HashSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    let mut seen = HashSet::new();
    for (i, d) in ranking.iter().enumerate() {
        let d = d.as_ref();
        if relevant.contains(d) && seen.insert(d) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// Precision at rank R = number of relevant documents.
pub fn r_precision<S: AsRef<str>>(ranking: &[S], relevant: &HashSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let r = relevant.len();
    let hits = ranking
        .iter()
        .take(r)
        .map(|d| d.as_ref())
        .collect::<HashSet<_>>()
        .iter()
        .filter(|d| relevant.contains(**d))
        .count();
    Some(hits as f64 / r as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLine {
    pub query_id: String,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
    pub tag: String,
}

/// Run lines grouped by query, each list ordered by the rank column.
pub type Run = BTreeMap<String, Vec<RunLine>>;

/// TREC run format; `#` lines are comments.
pub fn parse_run<R: BufRead>(reader: R, path: &Path) -> Result<Run> {
    let mut run = Run::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() || cols[0].starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        if cols.len() != 6 {
            return Err(bad(format!("expected 6 columns, found {}", cols.len())));
        }
        let rank = cols[3].parse().map_err(|_| bad(format!("bad rank `{}`", cols[3])))?;
        let score: f64 = cols[4].parse().map_err(|_| bad(format!("bad score `{}`", cols[4])))?;
        run.entry(cols[0].to_owned()).or_default().push(RunLine {
            query_id: cols[0].to_owned(),
            doc_id: cols[2].to_owned(),
            rank,
            score,
            tag: cols[5].to_owned(),
        });
    }
    for lines in run.values_mut() {
        lines.sort_by_key(|l| l.rank);
    }
    Ok(run)
}

pub fn load_run(path: impl AsRef<Path>) -> Result<Run> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_run(BufReader::new(file), path)
}

/// Run lines for one ranking.
pub fn format_ranking(ranking: &Ranking, tag: &str, out: &mut String) {
    for (i, e) in ranking.entries.iter().enumerate() {
        let _ = writeln!(out, "{} Q0 {} {} {:.9e} {}", ranking.query_id, e.doc_id, i + 1, e.score, tag);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryEval {
    pub query_id: String,
    pub ap_rigid: Option<f64>,
    pub ap_relax: Option<f64>,
    pub rp_rigid: Option<f64>,
    pub rp_relax: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub queries: Vec<QueryEval>,
    pub warnings: Vec<String>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl EvalReport {
    pub fn macro_ap_rigid(&self) -> Option<f64> {
        mean(self.queries.iter().map(|q| q.ap_rigid))
    }

    pub fn macro_ap_relax(&self) -> Option<f64> {
        mean(self.queries.iter().map(|q| q.ap_relax))
    }

    pub fn macro_rp_rigid(&self) -> Option<f64> {
        mean(self.queries.iter().map(|q| q.rp_rigid))
    }

    pub fn macro_rp_relax(&self) -> Option<f64> {
        mean(self.queries.iter().map(|q| q.rp_relax))
    }

    pub fn to_tsv(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_owned(), |x| format!("{x:.4}"));
        let mut s = String::from("query_id\tap_rigid\tap_relax\trp_rigid\trp_relax\n");
        for q in &self.queries {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                q.query_id,
                f(q.ap_rigid),
                f(q.ap_relax),
                f(q.rp_rigid),
                f(q.rp_relax)
            );
        }
        let _ = writeln!(
            s,
            "MACRO\t{}\t{}\t{}\t{}",
            f(self.macro_ap_rigid()),
            f(self.macro_ap_relax()),
            f(self.macro_rp_rigid()),
            f(self.macro_rp_relax())
        );
        s
    }
}

fn evaluate_docs(query_id: &str, docs: &[&str], qrels: &Qrels, mode: EvalMode) -> QueryEval {
    let rigid = qrels.relevant(query_id, mode.rigid_grade);
    let relax = qrels.relevant(query_id, mode.relax_grade);
    QueryEval {
        query_id: query_id.to_owned(),
        ap_rigid: average_precision(docs, &rigid),
        ap_relax: average_precision(docs, &relax),
        rp_rigid: r_precision(docs, &rigid),
        rp_relax: r_precision(docs, &relax),
    }
}

/// Per-query measures for the queries of a run that have judgments.
pub fn evaluate_run(run: &Run, qrels: &Qrels, mode: EvalMode) -> EvalReport {
    let mut report = EvalReport::default();
    for (qid, lines) in run {
        if !qrels.contains_query(qid) {
            report.warnings.push(format!("query {qid} has no judgments; skipped"));
            continue;
        }
        let docs: Vec<&str> = lines.iter().map(|l| l.doc_id.as_str()).collect();
        report.queries.push(evaluate_docs(qid, &docs, qrels, mode));
    }
    report
}

/// Same as [`evaluate_run`] over in-memory rankings.
pub fn evaluate_rankings(rankings: &[Ranking], qrels: &Qrels, mode: EvalMode) -> EvalReport {
    let mut report = EvalReport::default();
    let mut sorted: Vec<&Ranking> = rankings.iter().collect();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    for r in sorted {
        if !qrels.contains_query(&r.query_id) {
            report
                .warnings
                .push(format!("query {} has no judgments; skipped", r.query_id));
            continue;
        }
        let docs: Vec<&str> = r.entries.iter().map(|e| e.doc_id.as_str()).collect();
        report.queries.push(evaluate_docs(&r.query_id, &docs, qrels, mode));
    }
    report
}
