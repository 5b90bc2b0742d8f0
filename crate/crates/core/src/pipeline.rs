//! Batch runs: resolved configuration, per-topic search for both engines,
//! run-file output and the feedback parameter sweep.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::analysis::Analyzer;
use crate::clir::{self, BilingualDictionary, ClirParams, ExpansionParams, SourceSide};
use crate::corpus::{self, Mode, QueryType, Topic, TokenizerConfig};
use crate::error::{Error, Result};
use crate::eval::{self, EvalMode, Qrels};
use crate::feedback_a::{self, FeedbackAParams};
use crate::feedback_b::{self, AlphaMode, FeedbackBParams, RMode};
use crate::index::Index;
use crate::scoring::{self, QuerySetStats, Ranking, ScoringParamsA, SystemAQuery, SystemAScorer, BM11_KQ, CATEGORY_DEPTH};
use crate::segment::RatioTarget;
use crate::terms::{self, ExtractionConfig, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    A,
    B,
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(System::A),
            "b" => Ok(System::B),
            _ => Err(Error::invalid(format!("unknown system `{s}`"))),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::A => "a",
            System::B => "b",
        })
    }
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: System,
    pub query_type: QueryType,
    pub extraction: ExtractionConfig,
    pub scoring: ScoringParamsA,
    pub feedback_a: FeedbackAParams,
    pub feedback_b: FeedbackBParams,
    pub feedback: bool,
    pub cutoff: usize,
    pub ratio: RatioTarget,
    pub k_cmi: Option<f64>,
    pub translate: Option<String>,
    pub expand_source: Option<String>,
    /// Tokenization of untranslated queries when no source index is given.
    pub source_mode: Option<Mode>,
    pub expansion: ExpansionParams,
    pub passthrough: bool,
    pub tag: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: System::B,
            query_type: QueryType::Long,
            extraction: ExtractionConfig::default(),
            scoring: ScoringParamsA::default(),
            feedback_a: FeedbackAParams::default(),
            feedback_b: FeedbackBParams::default(),
            feedback: false,
            cutoff: 1000,
            ratio: RatioTarget::default(),
            k_cmi: None,
            translate: None,
            expand_source: None,
            source_mode: None,
            expansion: ExpansionParams::default(),
            passthrough: false,
            tag: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::invalid(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn optional(value: &str) -> Option<String> {
    (!value.is_empty() && value != "none").then(|| value.to_owned())
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_").to_ascii_lowercase();
        let k = key.as_str();
        let v = value.trim();
        match k {
            "system" => self.system = v.parse()?,
            "qtype" | "query_type" => self.query_type = v.parse()?,
            "terms" => self.extraction.strategy = v.parse::<Strategy>()?,
            "k_down" => self.extraction.k_down = parse(k, v)?,
            "max_span" => self.extraction.max_span = parse(k, v)?,
            "k_t" => self.scoring.k_t = parse(k, v)?,
            "k_q" => self.scoring.k_q = v.parse()?,
            "k_nq" | "rarity" => self.scoring.rarity = v.parse()?,
            "k_loc1" => self.scoring.k_loc1 = parse(k, v)?,
            "k_loc2" => self.scoring.k_loc2 = parse(k, v)?,
            "k_cat" => self.scoring.k_cat = parse(k, v)?,
            "location" => self.scoring.use_location = parse_bool(k, v)?,
            "category" => self.scoring.use_category = parse_bool(k, v)?,
            "length_bonus" => self.scoring.use_length_bonus = parse_bool(k, v)?,
            "kr" | "k_r" => self.feedback_a.k_r = parse(k, v)?,
            "kaf" | "k_af" => self.feedback_a.k_af = parse(k, v)?,
            "kp" | "k_p" => self.feedback_a.k_p = parse(k, v)?,
            "kafw" | "k_afw" => self.feedback_a.k_afw = parse(k, v)?,
            "kp_literal" => self.feedback_a.literal_kp = parse_bool(k, v)?,
            "p" => self.feedback_b.theta = feedback_b::theta_for_p(parse(k, v)?)?,
            "theta" => self.feedback_b.theta = parse(k, v)?,
            "r" => self.feedback_b.r_mode = v.parse()?,
            "alpha" => self.feedback_b.alpha_mode = v.parse()?,
            "r_cap" => self.feedback_b.r_cap = parse(k, v)?,
            "set_mode" => self.feedback_b.set_mode = parse_bool(k, v)?,
            "feedback" => self.feedback = parse_bool(k, v)?,
            "cutoff" => self.cutoff = parse(k, v)?,
            "ratio" => self.ratio = v.parse()?,
            "k_cmi" => self.k_cmi = if v == "auto" { None } else { Some(parse(k, v)?) },
            "translate" => self.translate = optional(v),
            "expand_source" => self.expand_source = optional(v),
            "source_mode" => self.source_mode = if v == "none" { None } else { Some(v.parse()?) },
            "expand_docs" => self.expansion.n_docs = parse(k, v)?,
            "expand_theta" => self.expansion.theta = parse(k, v)?,
            "expand_all" => self.expansion.expand_all = parse_bool(k, v)?,
            "passthrough" => self.passthrough = parse_bool(k, v)?,
            "tag" => self.tag = optional(v),
            _ => return Err(Error::invalid(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scoring.validate()?;
        self.feedback_a.validate()?;
        if !(self.feedback_b.theta > 0.0) {
            return Err(Error::invalid("theta must be positive"));
        }
        if self.cutoff == 0 || self.feedback_b.r_cap == 0 {
            return Err(Error::invalid("cutoff and r_cap must be at least 1"));
        }
        if self.expand_source.is_some() && self.translate.is_none() {
            return Err(Error::invalid("expand_source needs a dictionary"));
        }
        Ok(())
    }

    /// Resolved settings, one `key = value` per line, in a fixed order.
    /// Settings of the other engine are left out.
    pub fn to_text(&self) -> String {
        let mut kv: Vec<(&str, String)> = vec![
            ("system", self.system.to_string()),
            ("qtype", self.query_type.to_string()),
            ("feedback", self.feedback.to_string()),
            ("cutoff", self.cutoff.to_string()),
            ("ratio", format!("{}:{}", self.ratio.a, self.ratio.b)),
            ("k_cmi", self.k_cmi.map_or_else(|| "auto".to_owned(), |k| k.to_string())),
        ];
        match self.system {
            System::A => {
                let s = &self.scoring;
                let fa = &self.feedback_a;
                kv.extend([
                    ("terms", self.extraction.strategy.to_string()),
                    ("k_down", self.extraction.k_down.to_string()),
                    ("max_span", self.extraction.max_span.to_string()),
                    ("k_t", s.k_t.to_string()),
                    ("k_q", s.k_q.to_string()),
                    ("k_nq", s.rarity.to_string()),
                    ("k_loc1", s.k_loc1.to_string()),
                    ("k_loc2", s.k_loc2.to_string()),
                    ("k_cat", s.k_cat.to_string()),
                    ("location", s.use_location.to_string()),
                    ("category", s.use_category.to_string()),
                    ("length_bonus", s.use_length_bonus.to_string()),
                    ("kr", fa.k_r.to_string()),
                    ("kaf", fa.k_af.to_string()),
                    ("kp", fa.k_p.to_string()),
                    ("kafw", fa.k_afw.to_string()),
                    ("kp_literal", fa.literal_kp.to_string()),
                ]);
            }
            System::B => {
                let fb = &self.feedback_b;
                kv.extend([
                    ("theta", fb.theta.to_string()),
                    ("r", fb.r_mode.to_string()),
                    ("alpha", fb.alpha_mode.to_string()),
                    ("r_cap", fb.r_cap.to_string()),
                    ("set_mode", fb.set_mode.to_string()),
                    ("translate", self.translate.clone().unwrap_or_else(|| "none".into())),
                    ("expand_source", self.expand_source.clone().unwrap_or_else(|| "none".into())),
                    ("source_mode", self.source_mode.map_or_else(|| "none".into(), |m| m.to_string())),
                    ("expand_docs", self.expansion.n_docs.to_string()),
                    ("expand_theta", self.expansion.theta.to_string()),
                    ("expand_all", self.expansion.expand_all.to_string()),
                    ("passthrough", self.passthrough.to_string()),
                ]);
            }
        }
        kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// The explicit tag, or a hash of the resolved settings.
    pub fn run_tag(&self) -> String {
        match &self.tag {
            Some(t) => t.clone(),
            None => {
                let digest = Sha256::digest(self.to_text().as_bytes());
                format!("dr-{}", &hex::encode(digest)[..12])
            }
        }
    }
}

/// Dictionary and optional source side for cross-lingual runs.
pub struct ClirResources {
    pub dictionary: BilingualDictionary,
    pub source: Option<(Index, Analyzer)>,
}

/// Result of one topic.
#[derive(Debug, Clone, PartialEq)]
pub enum TopicOutcome {
    Ranked(Ranking),
    Skipped { query_id: String, reason: String },
}

/// Per-run state shared by every topic.
pub struct Engine<'a> {
    pub config: RunConfig,
    pub index: &'a Index,
    pub analyzer: &'a Analyzer,
    pub clir: Option<&'a ClirResources>,
    stats: QuerySetStats,
}

impl<'a> Engine<'a> {
    pub fn new(
        config: RunConfig,
        index: &'a Index,
        analyzer: &'a Analyzer,
        clir: Option<&'a ClirResources>,
        topics: &[Topic],
    ) -> Result<Self> {
        config.validate()?;
        if config.translate.is_some() && clir.is_none() {
            return Err(Error::invalid("translation configured but no dictionary loaded"));
        }
        let mut engine = Self {
            config,
            index,
            analyzer,
            clir,
            stats: QuerySetStats::default(),
        };
        if engine.config.system == System::A {
            engine.stats = engine.query_stats(topics);
        }
        Ok(engine)
    }

    fn query_stats(&self, topics: &[Topic]) -> QuerySetStats {
        let mode = self.index.mode();
        let span_terms = |phrases: Vec<Vec<String>>| -> Vec<String> {
            phrases
                .iter()
                .flat_map(|p| terms::spans(p.len(), self.config.extraction.max_span).map(|(i, j)| terms::span_term(p, i, j, mode)))
                .collect()
        };
        let per_topic: Vec<(Vec<String>, Vec<String>)> = topics
            .iter()
            .map(|t| {
                let all = self
                    .config
                    .query_type
                    .select(t)
                    .into_iter()
                    .flat_map(|p| self.analyzer.phrases(p))
                    .collect();
                (span_terms(all), span_terms(self.analyzer.phrases(&t.title)))
            })
            .collect();
        QuerySetStats::from_queries(
            per_topic
                .iter()
                .map(|(a, t)| (a.iter().map(String::as_str), t.iter().map(String::as_str))),
        )
    }

    pub fn system_a_query(&self, query: &corpus::Query) -> SystemAQuery {
        let phrases = self.analyzer.query_phrases(query);
        let ex = &self.config.extraction;
        if ex.strategy == Strategy::Lattice {
            return SystemAQuery {
                flat: Default::default(),
                lattice: phrases,
                max_span: ex.max_span,
            };
        }
        let mut flat = terms::extract(&phrases, ex, self.index.mode());
        self.analyzer.filter_terms(&mut flat);
        SystemAQuery {
            flat,
            lattice: Vec::new(),
            max_span: ex.max_span,
        }
    }

    fn search_a(&self, query: &corpus::Query) -> Result<Ranking> {
        let q = self.system_a_query(query);
        let cfg = &self.config;
        let depth = cfg.cutoff.max(cfg.feedback_a.k_r);
        let category_first = if cfg.scoring.use_category {
            let plain = ScoringParamsA {
                use_category: false,
                ..cfg.scoring
            };
            let scorer = SystemAScorer::new(self.index, &q, &plain, &self.stats, None, None)?;
            Some(scoring::rank(self.index, &scorer, &query.query_id, CATEGORY_DEPTH))
        } else {
            None
        };
        let scorer = SystemAScorer::new(self.index, &q, &cfg.scoring, &self.stats, category_first.as_ref(), None)?;
        if scoring::Scorer::candidates(&scorer).is_empty() {
            return Err(Error::EmptyQuery(query.query_id.clone()));
        }
        let first = scoring::rank(self.index, &scorer, &query.query_id, depth);
        if !cfg.feedback {
            return Ok(truncated(first, cfg.cutoff));
        }
        feedback_a::run_feedback_a(
            &q,
            &first,
            self.index,
            self.analyzer,
            &cfg.feedback_a,
            &cfg.scoring,
            &self.stats,
            category_first.as_ref(),
            cfg.cutoff,
        )
    }

    fn search_b(&self, query: &corpus::Query) -> Result<Ranking> {
        let cfg = &self.config;
        let vector = match self.clir {
            Some(res) => {
                let source = res.source.as_ref().map(|(index, analyzer)| SourceSide { index, analyzer });
                let params = ClirParams {
                    expansion: cfg.expand_source.as_ref().map(|_| cfg.expansion),
                    passthrough: cfg.passthrough,
                    feedback: None,
                };
                let source_config = self.query_tokenizer();
                clir::translated_vector(
                    query,
                    &source_config,
                    source.as_ref(),
                    &res.dictionary,
                    self.index,
                    self.analyzer,
                    &params,
                )?
            }
            None => scoring::bm11_query_vector(&self.analyzer.query_bag(query), self.index, BM11_KQ),
        };
        if vector.is_empty() {
            return Err(Error::EmptyQuery(query.query_id.clone()));
        }
        let depth = if cfg.feedback {
            cfg.cutoff.max(cfg.feedback_b.r_cap).max(match cfg.feedback_b.r_mode {
                RMode::Fixed(r) => r,
                RMode::Auto => 0,
            })
        } else {
            cfg.cutoff
        };
        let first = scoring::rank_bm11(self.index, &vector, &query.query_id, depth);
        if !cfg.feedback {
            return Ok(first);
        }
        Ok(feedback_b::run_feedback_b(&vector, &first, self.index, self.analyzer, &cfg.feedback_b, cfg.cutoff)?.0)
    }

    /// Tokenizer of the query language.
    pub fn query_tokenizer(&self) -> TokenizerConfig {
        if self.clir.is_none() {
            return self.index.tokenizer().clone();
        }
        match (self.clir.and_then(|c| c.source.as_ref()), self.config.source_mode) {
            (Some((idx, _)), _) => idx.tokenizer().clone(),
            (None, Some(mode)) => TokenizerConfig::new(mode),
            (None, None) => self.index.tokenizer().clone(),
        }
    }

    /// Query for a topic under the configured query type.
    pub fn build_query(&self, topic: &Topic) -> Result<corpus::Query> {
        corpus::build_query(topic, self.config.query_type, &self.query_tokenizer())
    }

    pub fn search_topic(&self, topic: &Topic) -> Result<TopicOutcome> {
        let skipped = |e: Error| -> Result<TopicOutcome> {
            match e {
                Error::EmptyQuery(q) => Ok(TopicOutcome::Skipped {
                    query_id: q,
                    reason: "empty query after processing".into(),
                }),
                other => Err(other),
            }
        };
        let query = match self.build_query(topic) {
            Ok(q) => q,
            Err(e) => return skipped(e),
        };
        let result = match self.config.system {
            System::A => self.search_a(&query),
            System::B => self.search_b(&query),
        };
        match result {
            Ok(r) if r.is_empty() => skipped(Error::EmptyQuery(query.query_id)),
            Ok(r) => Ok(TopicOutcome::Ranked(r)),
            Err(e) => skipped(e),
        }
    }

    /// Every topic in turn.
    pub fn search_all(&self, topics: &[Topic]) -> Result<Vec<TopicOutcome>> {
        topics.iter().map(|t| self.search_topic(t)).collect()
    }
}

fn truncated(mut r: Ranking, cutoff: usize) -> Ranking {
    r.entries.truncate(cutoff);
    r
}

/// Run file text: configuration header, skip notes, then the ranked lines
/// ordered by query id.
pub fn format_run(config: &RunConfig, outcomes: &[TopicOutcome]) -> String {
    let tag = config.run_tag();
    let mut out = format!("# dualrank run {tag}\n");
    for line in config.to_text().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    let mut sorted: Vec<&TopicOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| outcome_id(a).cmp(outcome_id(b)));
    for o in &sorted {
        if let TopicOutcome::Skipped { query_id, reason } = o {
            out.push_str(&format!("# skipped {query_id}: {reason}\n"));
        }
    }
    for o in sorted {
        if let TopicOutcome::Ranked(r) = o {
            eval::format_ranking(r, &tag, &mut out);
        }
    }
    out
}

fn outcome_id(o: &TopicOutcome) -> &str {
    match o {
        TopicOutcome::Ranked(r) => &r.query_id,
        TopicOutcome::Skipped { query_id, .. } => query_id,
    }
}

pub fn rankings(outcomes: Vec<TopicOutcome>) -> Vec<Ranking> {
    outcomes
        .into_iter()
        .filter_map(|o| match o {
            TopicOutcome::Ranked(r) => Some(r),
            TopicOutcome::Skipped { .. } => None,
        })
        .collect()
}

/// Value lists of the feedback sweep; an empty list keeps the configured
/// value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepGrid {
    pub p: Vec<f64>,
    pub r: Vec<RMode>,
    pub alpha: Vec<AlphaMode>,
}

impl SweepGrid {
    pub fn points(&self, base: &FeedbackBParams) -> Result<Vec<SweepPoint>> {
        let thetas: Vec<(String, f64)> = if self.p.is_empty() {
            vec![(format!("theta={}", base.theta), base.theta)]
        } else {
            self.p
                .iter()
                .map(|&p| Ok((format!("{p}"), feedback_b::theta_for_p(p)?)))
                .collect::<Result<_>>()?
        };
        let rs = if self.r.is_empty() { vec![base.r_mode] } else { self.r.clone() };
        let alphas = if self.alpha.is_empty() {
            vec![base.alpha_mode]
        } else {
            self.alpha.clone()
        };
        let mut out = Vec::new();
        for (label, theta) in &thetas {
            for r in &rs {
                for a in &alphas {
                    out.push(SweepPoint {
                        p_label: label.clone(),
                        params: FeedbackBParams {
                            theta: *theta,
                            r_mode: *r,
                            alpha_mode: *a,
                            ..*base
                        },
                    });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub p_label: String,
    pub params: FeedbackBParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub ap_rigid: Option<f64>,
    pub ap_relax: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Mean macro AP per value of one parameter.
    pub fn marginal(&self, key: impl Fn(&SweepPoint) -> String) -> Vec<(String, Option<f64>, Option<f64>)> {
        let mut groups: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        for row in &self.rows {
            let k = key(&row.point);
            if !groups.contains_key(&k) {
                order.push(k.clone());
            }
            let g = groups.entry(k).or_default();
            g.0.extend(row.ap_rigid);
            g.1.extend(row.ap_relax);
        }
        let m = |v: &Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        order
            .into_iter()
            .map(|k| {
                let g = &groups[&k];
                (k, m(&g.0), m(&g.1))
            })
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "NA".to_owned(), |x| format!("{x:.4}"));
        let mut s = String::from("p\tR\talpha\tap_rigid\tap_relax\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.point.p_label,
                r.point.params.r_mode,
                r.point.params.alpha_mode,
                f(r.ap_rigid),
                f(r.ap_relax)
            ));
        }
        let sections: [(&str, Box<dyn Fn(&SweepPoint) -> String>); 3] = [
            ("p", Box::new(|p: &SweepPoint| p.p_label.clone())),
            ("R", Box::new(|p: &SweepPoint| p.params.r_mode.to_string())),
            ("alpha", Box::new(|p: &SweepPoint| p.params.alpha_mode.to_string())),
        ];
        for (name, key) in sections {
            s.push_str(&format!("\n{name}\tap_rigid\tap_relax\n"));
            for (k, a, b) in self.marginal(key) {
                s.push_str(&format!("{k}\t{}\t{}\n", f(a), f(b)));
            }
        }
        s
    }
}

/// Runs every grid point through `run` and evaluates it.
pub fn sweep<F>(base: &RunConfig, grid: &SweepGrid, qrels: &Qrels, mode: EvalMode, mut run: F) -> Result<SweepReport>
where
    F: FnMut(&RunConfig) -> Result<Vec<Ranking>>,
{
    let mut report = SweepReport::default();
    for point in grid.points(&base.feedback_b)? {
        let cfg = RunConfig {
            system: System::B,
            feedback: true,
            feedback_b: point.params,
            ..base.clone()
        };
        let rankings = run(&cfg)?;
        let ev = eval::evaluate_rankings(&rankings, qrels, mode);
        report.rows.push(SweepRow {
            point,
            ap_rigid: ev.macro_ap_rigid(),
            ap_relax: ev.macro_ap_relax(),
        });
    }
    Ok(report)
}

/// Parses a comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| Error::invalid(format!("bad list item `{x}`"))))
        .collect()
}
