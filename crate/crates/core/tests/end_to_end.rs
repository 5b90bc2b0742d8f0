use std::path::Path;

use dualrank::clir::{self, ClirParams, ExpansionParams, KeywordPairRecord, SourceSide};
use dualrank::corpus::{self, QueryType};
use dualrank::eval::{self, EvalMode, Qrels};
use dualrank::feedback_a::{self, FeedbackAParams};
use dualrank::feedback_b::{self, AlphaMode, FeedbackBParams, RMode};
use dualrank::pipeline::{self, Engine, RunConfig, System, TopicOutcome};
use dualrank::scoring::{self, QuerySetStats, ScoringParamsA, SystemAQuery, SystemAScorer, BM11_KQ};
use dualrank::{terms, Analyzer, Document, DocumentCollection, Error, Index, Mode, Topic, TokenizerConfig};

/// Four documents about apples in orchards, one orchard document without
/// the query word, and unrelated filler.
fn orchard() -> DocumentCollection {
    let mut docs = vec![
        Document::new("a1", "apple news", "apple orchard harvest report"),
        Document::new("a2", "", "the apple orchard expands"),
        Document::new("a3", "apple", "orchard harvest season apple"),
        Document::new("a4", "", "apple orchard harvest"),
        Document::new("target", "orchard", "orchard harvest begins"),
    ];
    for i in 0..30 {
        docs.push(Document::new(format!("f{i:02}"), "", format!("filler{} filler{} words{}", i, i + 1, i % 4)));
    }
    DocumentCollection::from_documents(docs).unwrap()
}

fn query(text: &str, cfg: &TokenizerConfig) -> corpus::Query {
    corpus::build_query(&Topic::new("q1", text, text), QueryType::VeryShort, cfg).unwrap()
}

#[test]
fn lean_feedback_pulls_in_related_document() {
    let cfg = TokenizerConfig::token();
    let idx = Index::build(&orchard(), &cfg).unwrap();
    let an = Analyzer::new(cfg.clone());
    let v = scoring::bm11_query_vector(&an.query_bag(&query("apple", &cfg)), &idx, BM11_KQ);
    let first = scoring::rank_bm11(&idx, &v, "q1", 1000);
    assert!(!first.doc_ids().contains(&"target".to_owned()));
    let params = FeedbackBParams {
        r_mode: RMode::Fixed(4),
        alpha_mode: AlphaMode::Fixed(1.0),
        ..FeedbackBParams::default()
    };
    let (second, trace) = feedback_b::run_feedback_b(&v, &first, &idx, &an, &params, 1000).unwrap();
    assert_eq!(trace.r, 4);
    assert!(trace.expanded_terms > 0);
    assert!(second.doc_ids().contains(&"target".to_owned()));
    // the query word still dominates
    assert_eq!(&second.doc_ids()[..4].iter().filter(|d| d.starts_with('a')).count(), &4);
}

#[test]
fn extended_feedback_pulls_in_related_document() {
    let cfg = TokenizerConfig::token();
    let idx = Index::build(&orchard(), &cfg).unwrap();
    let an = Analyzer::new(cfg.clone());
    let sq = SystemAQuery::flat(terms::shortest_terms(&an.query_phrases(&query("apple", &cfg))));
    let params = ScoringParamsA::default();
    let stats = QuerySetStats::default();
    let scorer = SystemAScorer::new(&idx, &sq, &params, &stats, None, None).unwrap();
    let first = scoring::rank(&idx, &scorer, "q1", 1000);
    assert_eq!(first.len(), 4);
    let fa = FeedbackAParams::default();
    let expansion = feedback_a::expansion_terms(first.top(fa.k_r), &idx, &an, &fa, &["apple".to_owned()].into());
    assert!(expansion.iter().any(|t| t == "orchard"), "{expansion:?}");
    let second = feedback_a::run_feedback_a(&sq, &first, &idx, &an, &fa, &params, &stats, None, 1000).unwrap();
    assert!(second.doc_ids().contains(&"target".to_owned()));
}

#[test]
fn source_side_expansion_recovers_untranslated_concept() {
    let cfg = TokenizerConfig::token();
    let mut src = vec![
        Document::new("s1", "", "apple pie cider"),
        Document::new("s2", "", "apple cider press"),
        Document::new("s3", "", "cider apple tart"),
    ];
    let mut tgt = vec![
        Document::new("t1", "", "pomme cidre"),
        Document::new("t2", "", "cidre verger"),
        Document::new("t3", "", "pomme rouge"),
    ];
    for i in 0..20 {
        src.push(Document::new(format!("sf{i}"), "", format!("noise{i} static{}", i % 3)));
        tgt.push(Document::new(format!("tf{i}"), "", format!("bruit{i} calme{}", i % 3)));
    }
    let src_idx = Index::build(&DocumentCollection::from_documents(src).unwrap(), &cfg).unwrap();
    let tgt_idx = Index::build(&DocumentCollection::from_documents(tgt).unwrap(), &cfg).unwrap();
    let an = Analyzer::new(cfg.clone());
    let rec = |id: &str, s: &str, t: &str| KeywordPairRecord {
        record_id: id.into(),
        source_keywords: vec![s.into()],
        target_keywords: vec![t.into()],
    };
    let dict = clir::build_dictionary(&[rec("1", "apple", "pomme"), rec("2", "cider", "cidre")], &cfg, &cfg);
    let q = query("apple", &cfg);
    let source = SourceSide { index: &src_idx, analyzer: &an };

    let plain = clir::clir_search(&q, &cfg, Some(&source), &dict, &tgt_idx, &an, &ClirParams::default(), 1000).unwrap();
    assert_eq!(plain.doc_ids(), vec!["t1", "t3"]);

    let params = ClirParams {
        expansion: Some(ExpansionParams { n_docs: 3, ..ExpansionParams::default() }),
        ..ClirParams::default()
    };
    let expanded = clir::clir_search(&q, &cfg, Some(&source), &dict, &tgt_idx, &an, &params, 1000).unwrap();
    assert_eq!(expanded.doc_ids()[0], "t1");
    assert!(expanded.doc_ids().contains(&"t2".to_owned()));
}

#[test]
fn untranslatable_query_is_an_empty_query() {
    let cfg = TokenizerConfig::token();
    let idx = Index::build(&orchard(), &cfg).unwrap();
    let an = Analyzer::new(cfg.clone());
    let dict = clir::BilingualDictionary::identity(["banana"]);
    let err = clir::clir_search(&query("kiwi", &cfg), &cfg, None, &dict, &idx, &an, &ClirParams::default(), 10).unwrap_err();
    assert!(matches!(err, Error::EmptyQuery(_)));
}

#[test]
fn index_round_trip_and_integrity_checks() {
    let dir = tempfile::tempdir().unwrap();
    let idx = Index::build(&orchard(), &TokenizerConfig::token()).unwrap();
    idx.save(dir.path()).unwrap();
    let loaded = Index::load(dir.path()).unwrap();
    assert_eq!(idx, loaded);
    assert_eq!(loaded.postings("apple orchard"), idx.postings("apple orchard"));

    assert!(matches!(Index::load_expect(dir.path(), Mode::Character), Err(Error::ModeMismatch { .. })));

    let data = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_none_or(|e| e != "json"))
        .unwrap();
    let mut bytes = std::fs::read(&data).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&data, bytes).unwrap();
    assert!(matches!(Index::load(dir.path()), Err(Error::Checksum { .. })));
}

#[test]
fn missing_index_names_the_path() {
    let err = Index::load(Path::new("/nonexistent/idx")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/idx"), "{err}");
}

#[test]
fn character_mode_engine_runs() {
    let docs = vec![
        Document::new("c1", "银行合并", "两家银行宣布合并计划"),
        Document::new("c2", "市场", "股票市场今天上涨"),
        Document::new("c3", "利率", "银行调整利率政策"),
        Document::new("c4", "天气", "今天天气晴朗"),
    ];
    let cfg = TokenizerConfig::character();
    let idx = Index::build(&DocumentCollection::from_documents(docs).unwrap(), &cfg).unwrap();
    let an = Analyzer::for_index(&idx, Default::default(), None).unwrap();
    let topics = vec![Topic::new("T1", "银行合并", "银行合并计划")];
    for system in [System::A, System::B] {
        for feedback in [false, true] {
            let config = RunConfig { system, feedback, ..RunConfig::default() };
            let engine = Engine::new(config, &idx, &an, None, &topics).unwrap();
            let out = engine.search_all(&topics).unwrap();
            let TopicOutcome::Ranked(r) = &out[0] else { panic!("skipped") };
            assert_eq!(r.entries[0].doc_id, "c1", "{system:?} feedback={feedback}");
        }
    }
}

#[test]
fn run_file_round_trips_through_the_evaluator() {
    let cfg = TokenizerConfig::token();
    let idx = Index::build(&orchard(), &cfg).unwrap();
    let an = Analyzer::new(cfg);
    let topics = vec![
        Topic::new("q1", "apple orchard", "apple orchard"),
        Topic::new("q2", "zzz", "zzz"),
    ];
    let config = RunConfig { system: System::A, query_type: QueryType::VeryShort, ..RunConfig::default() };
    let engine = Engine::new(config.clone(), &idx, &an, None, &topics).unwrap();
    let outcomes = engine.search_all(&topics).unwrap();
    assert!(matches!(&outcomes[1], TopicOutcome::Skipped { query_id, .. } if query_id == "q2"));
    let text = pipeline::format_run(&config, &outcomes);
    assert!(text.starts_with(&format!("# dualrank run {}\n", config.run_tag())));
    assert!(text.contains("# skipped q2"));

    let run = eval::parse_run(text.as_bytes(), Path::new("run")).unwrap();
    let mut qrels = Qrels::new();
    for d in ["a1", "a2", "a3", "a4"] {
        qrels.insert("q1", d, 3);
    }
    qrels.insert("q1", "target", 1);
    let report = eval::evaluate_run(&run, &qrels, EvalMode::default());
    assert_eq!(report.queries.len(), 1);
    let rigid = report.macro_ap_rigid().unwrap();
    let relax = report.macro_ap_relax().unwrap();
    assert_eq!(rigid, 1.0);
    assert!(relax > 0.0 && relax <= 1.0);
    assert_eq!(
        eval::evaluate_run(&run, &qrels, EvalMode::default()).to_tsv(),
        eval::evaluate_rankings(&pipeline::rankings(outcomes), &qrels, EvalMode::default()).to_tsv()
    );
}
