use std::fs;
use std::io::{self, BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use dualrank::clir::{self, BilingualDictionary};
use dualrank::corpus::{self, Mode, Stemmer, TokenizerConfig};
use dualrank::eval::{self, EvalMode, Qrels};
use dualrank::pipeline::{self, ClirResources, Engine, RunConfig, SweepGrid, TopicOutcome};
use dualrank::segment::{self, RatioTarget, Segmenter};
use dualrank::{Analyzer, Index, Topic};

#[derive(Parser)]
#[command(name = "dualrank", version, about = "Probabilistic retrieval with feedback, segmentation and CLIR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index directory from a JSONL document file.
    Index(IndexArgs),
    /// Run topics against an index and write a TREC run file.
    Search(SearchArgs),
    /// Evaluate a grid of feedback settings.
    Sweep(SweepArgs),
    /// Segment standard-input lines into words.
    Segment(SegmentArgs),
    /// Build a bilingual dictionary from keyword-pair JSONL.
    BuildDict(BuildDictArgs),
    /// Translate standard-input lines with a dictionary.
    Translate(TranslateArgs),
    /// Score a run file against graded judgments.
    Eval(EvalArgs),
}

#[derive(Args)]
struct TokenizerArgs {
    #[arg(long, default_value = "token")]
    mode: Mode,
    /// One stopword per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    stem: bool,
    /// Keep purely numeric tokens.
    #[arg(long)]
    keep_numbers: bool,
}

impl TokenizerArgs {
    fn config(&self) -> Result<TokenizerConfig> {
        let mut cfg = TokenizerConfig::new(self.mode);
        if let Some(p) = &self.stopwords {
            cfg = cfg.with_stopwords(corpus::load_stopwords(p)?);
        }
        if self.stem {
            cfg = cfg.with_stemming(Stemmer::default());
        }
        if self.keep_numbers {
            cfg.filter = corpus::ContentFilter::KeepAll;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    topics: PathBuf,
    /// `key = value` settings, overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    qtype: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    feedback: Option<bool>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    terms: Option<String>,
    #[arg(long)]
    k_down: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    location: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    category: Option<bool>,
    #[arg(long)]
    k_nq: Option<String>,
    #[arg(long)]
    kr: Option<usize>,
    #[arg(long)]
    kaf: Option<f64>,
    #[arg(long)]
    kp: Option<f64>,
    #[arg(long)]
    kafw: Option<f64>,
    #[arg(long)]
    kp_literal: bool,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long = "R")]
    r: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    r_cap: Option<usize>,
    #[arg(long)]
    set_mode: bool,
    #[arg(long)]
    ratio: Option<String>,
    #[arg(long)]
    k_cmi: Option<String>,
    /// Dictionary TSV for cross-lingual search.
    #[arg(long)]
    translate: Option<PathBuf>,
    /// Source-language index for document expansion.
    #[arg(long)]
    expand_source: Option<PathBuf>,
    #[arg(long)]
    expand_docs: Option<usize>,
    #[arg(long)]
    expand_all: bool,
    #[arg(long)]
    passthrough: bool,
    /// Query tokenization when translating without a source index.
    #[arg(long)]
    source_mode: Option<String>,
    #[arg(long)]
    tag: Option<String>,
    /// Any further setting, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            cfg.apply_text(&text).with_context(|| format!("in {}", p.display()))?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let flags: Vec<(&str, Option<String>)> = vec![
            ("system", self.system.clone()),
            ("qtype", self.qtype.clone()),
            ("feedback", self.feedback.map(|b| b.to_string())),
            ("cutoff", self.cutoff.map(|v| v.to_string())),
            ("terms", self.terms.clone()),
            ("k_down", self.k_down.map(|v| v.to_string())),
            ("location", self.location.map(|b| b.to_string())),
            ("category", self.category.map(|b| b.to_string())),
            ("k_nq", self.k_nq.clone()),
            ("kr", self.kr.map(|v| v.to_string())),
            ("kaf", self.kaf.map(|v| v.to_string())),
            ("kp", self.kp.map(|v| v.to_string())),
            ("kafw", self.kafw.map(|v| v.to_string())),
            ("kp_literal", self.kp_literal.then(|| "true".into())),
            ("p", self.p.map(|v| v.to_string())),
            ("theta", self.theta.map(|v| v.to_string())),
            ("r", self.r.clone()),
            ("alpha", self.alpha.clone()),
            ("r_cap", self.r_cap.map(|v| v.to_string())),
            ("set_mode", self.set_mode.then(|| "true".into())),
            ("ratio", self.ratio.clone()),
            ("k_cmi", self.k_cmi.clone()),
            ("translate", path(&self.translate)),
            ("expand_source", path(&self.expand_source)),
            ("expand_docs", self.expand_docs.map(|v| v.to_string())),
            ("expand_all", self.expand_all.then(|| "true".into())),
            ("passthrough", self.passthrough.then(|| "true".into())),
            ("source_mode", self.source_mode.clone()),
            ("tag", self.tag.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v).with_context(|| format!("--{}", k.replace('_', "-")))?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k, v).with_context(|| format!("--set {kv}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build()?)
    }
}

/// Loaded index, analyzer, topics and CLIR resources for a run.
struct Workspace {
    index: Index,
    analyzer: Analyzer,
    topics: Vec<Topic>,
    clir: Option<ClirResources>,
}

impl Workspace {
    fn load(args: &RunArgs, cfg: &RunConfig) -> Result<Self> {
        let index = Index::load(&args.index)?;
        let analyzer = Analyzer::for_index(&index, cfg.ratio, cfg.k_cmi)?;
        let topics = corpus::load_topics(&args.topics)?;
        let clir = match &cfg.translate {
            Some(dict) => {
                let dictionary = BilingualDictionary::load(dict)?;
                let source = match &cfg.expand_source {
                    Some(dir) => {
                        let idx = Index::load(dir)?;
                        let a = Analyzer::for_index(&idx, cfg.ratio, cfg.k_cmi)?;
                        Some((idx, a))
                    }
                    None => None,
                };
                Some(ClirResources { dictionary, source })
            }
            None => None,
        };
        Ok(Self {
            index,
            analyzer,
            topics,
            clir,
        })
    }

    fn run(&self, cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Vec<TopicOutcome>> {
        let engine = Engine::new(cfg.clone(), &self.index, &self.analyzer, self.clir.as_ref(), &self.topics)?;
        let outcomes: Vec<TopicOutcome> = pool.install(|| {
            self.topics
                .par_iter()
                .map(|t| engine.search_topic(t))
                .collect::<dualrank::Result<_>>()
        })?;
        for o in &outcomes {
            if let TopicOutcome::Skipped { query_id, reason } = o {
                log::warn!("query {query_id} skipped: {reason}");
            }
        }
        Ok(outcomes)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Run file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    qrels: PathBuf,
    /// Comma-separated significance levels.
    #[arg(long)]
    p_list: Option<String>,
    /// Comma-separated R values, `auto` allowed.
    #[arg(long)]
    r_list: Option<String>,
    /// Comma-separated α values, `auto` allowed.
    #[arg(long)]
    alpha_list: Option<String>,
    #[arg(long, default_value_t = 2)]
    rigid_grade: u32,
    #[arg(long, default_value_t = 1)]
    relax_grade: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SegmentArgs {
    /// Documents whose text trains the MI table.
    #[arg(long)]
    docs: PathBuf,
    #[arg(long, default_value = "7:3")]
    ratio: RatioTarget,
    /// Fixed threshold; skips calibration.
    #[arg(long)]
    k_cmi: Option<f64>,
}

#[derive(Args)]
struct BuildDictArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "token")]
    source_mode: Mode,
    #[arg(long, default_value = "token")]
    target_mode: Mode,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    dict: PathBuf,
    #[arg(long, default_value = "token")]
    mode: Mode,
    /// Keep untranslatable tokens.
    #[arg(long)]
    passthrough: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value_t = 2)]
    rigid_grade: u32,
    #[arg(long, default_value_t = 1)]
    relax_grade: u32,
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_index(a: &IndexArgs) -> Result<()> {
    let cfg = a.tokenizer.config()?;
    let docs = corpus::load_documents(&a.docs)?;
    let index = Index::build(&docs, &cfg)?;
    index.save(&a.out)?;
    eprintln!(
        "indexed {} documents ({} mode) into {}",
        index.n_docs(),
        index.mode(),
        a.out.display()
    );
    Ok(())
}

fn cmd_search(a: &SearchArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let ws = Workspace::load(&a.run, &cfg)?;
    let outcomes = ws.run(&cfg, &a.run.pool()?)?;
    write_output(a.out.as_deref(), &pipeline::format_run(&cfg, &outcomes))
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let base = a.run.resolve()?;
    let ws = Workspace::load(&a.run, &base)?;
    let pool = a.run.pool()?;
    let qrels = Qrels::load(&a.qrels)?;
    let grid = SweepGrid {
        p: a.p_list.as_deref().map(pipeline::parse_list).transpose()?.unwrap_or_default(),
        r: a.r_list.as_deref().map(pipeline::parse_list).transpose()?.unwrap_or_default(),
        alpha: a.alpha_list.as_deref().map(pipeline::parse_list).transpose()?.unwrap_or_default(),
    };
    let mode = EvalMode::new(a.rigid_grade, a.relax_grade)?;
    let report = pipeline::sweep(&base, &grid, &qrels, mode, |cfg| {
        let outcomes = ws.run(cfg, &pool).map_err(|e| dualrank::Error::InvalidArgument(format!("{e:#}")))?;
        Ok(pipeline::rankings(outcomes))
    })?;
    write_output(a.out.as_deref(), &report.to_tsv())
}

fn cmd_segment(a: &SegmentArgs) -> Result<()> {
    let docs = corpus::load_documents(&a.docs)?;
    let table = segment::build_mi_table(&docs)?;
    let seg = match a.k_cmi {
        Some(k) => Segmenter::new(table, k),
        None => {
            let sample: Vec<Vec<char>> = docs
                .iter()
                .flat_map(|d| segment::sentences(&format!("{}\n{}", d.title, d.body)))
                .collect();
            let k = segment::calibrate_kcmi(&sample, &table, a.ratio)?;
            eprintln!("calibrated k_cmi = {k}");
            Segmenter::new(table, k)
        }
    };
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        let words: Vec<String> = segment::sentences(&line).iter().flat_map(|s| seg.words(s)).collect();
        writeln!(out, "{}", words.join(" "))?;
    }
    Ok(())
}

fn cmd_build_dict(a: &BuildDictArgs) -> Result<()> {
    let records = clir::load_keyword_pairs(&a.pairs)?;
    let dict = clir::build_dictionary(
        &records,
        &TokenizerConfig::new(a.source_mode),
        &TokenizerConfig::new(a.target_mode),
    );
    dict.save(&a.out)?;
    eprintln!("{} source entries from {} records", dict.len(), records.len());
    Ok(())
}

fn cmd_translate(a: &TranslateArgs) -> Result<()> {
    let dict = BilingualDictionary::load(&a.dict)?;
    let cfg = TokenizerConfig::new(a.mode);
    let mut input = String::new();
    io::stdin().read_to_string(&mut input)?;
    let mut out = io::stdout().lock();
    for line in input.lines() {
        let target: Vec<String> = corpus::runs(line, &cfg)
            .iter()
            .flat_map(|r| clir::translate(r, &dict, a.passthrough))
            .collect();
        writeln!(out, "{}", target.join(" "))?;
    }
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let run = eval::load_run(&a.run)?;
    let qrels = Qrels::load(&a.qrels)?;
    let report = eval::evaluate_run(&run, &qrels, EvalMode::new(a.rigid_grade, a.relax_grade)?);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if report.queries.is_empty() {
        eprintln!("no evaluated queries ({} warnings)", report.warnings.len());
    }
    write_output(None, &report.to_tsv())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Search(a) => cmd_search(a),
        Command::Sweep(a) => {
            if a.run.system.as_deref().is_some_and(|s| !s.eq_ignore_ascii_case("b")) {
                bail!("sweep varies the lean engine's feedback; use --system b");
            }
            cmd_sweep(a)
        }
        Command::Segment(a) => cmd_segment(a),
        Command::BuildDict(a) => cmd_build_dict(a),
        Command::Translate(a) => cmd_translate(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
