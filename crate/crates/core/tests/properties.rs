use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use proptest::prelude::*;

use dualrank::clir::{self, BilingualDictionary, KeywordPairRecord};
use dualrank::eval::{self, Qrels};
use dualrank::feedback_b::{self, Bag, TopDocBag};
use dualrank::segment::{self, MiTable};
use dualrank::{Document, DocumentCollection, Index, TokenizerConfig};

const WORDS: &[&str] = &["ant", "bee", "cat", "dog", "eel", "fox", "gnu", "hen"];

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(WORDS).prop_map(str::to_owned)
}

fn docs() -> impl Strategy<Value = Vec<(Vec<String>, Vec<String>)>> {
    prop::collection::vec(
        (prop::collection::vec(word(), 0..4), prop::collection::vec(word(), 1..20)),
        1..15,
    )
}

fn build(docs: &[(Vec<String>, Vec<String>)]) -> Index {
    let coll = DocumentCollection::from_documents(
        docs.iter()
            .enumerate()
            .map(|(i, (t, b))| Document::new(format!("d{i}"), t.join(" "), b.join(" ")))
            .collect(),
    )
    .unwrap();
    Index::build(&coll, &TokenizerConfig::token()).unwrap()
}

fn bag_of(words: &[String]) -> Bag {
    let mut b = Bag::new();
    for w in words {
        *b.entry(w.clone()).or_insert(0) += 1;
    }
    b
}

fn oracle_ap(ranking: &[String], rel: &HashSet<&str>) -> Option<f64> {
    if rel.is_empty() {
        return None;
    }
    let mut hits = 0.0;
    let mut sum = 0.0;
    for (i, d) in ranking.iter().enumerate() {
        if rel.contains(d.as_str()) {
            hits += 1.0;
            sum += hits / (i + 1) as f64;
        }
    }
    Some(sum / rel.len() as f64)
}

proptest! {
    #[test]
    fn index_tf_matches_scan(docs in docs()) {
        let idx = build(&docs);
        let mut df: HashMap<&str, u32> = HashMap::new();
        for (i, (t, b)) in docs.iter().enumerate() {
            let id = format!("d{i}");
            for w in WORDS {
                let tf = t.iter().chain(b).filter(|x| x == w).count() as u32;
                prop_assert_eq!(idx.doc_tf(&id, w).unwrap(), tf);
                if tf > 0 {
                    *df.entry(w).or_insert(0) += 1;
                }
            }
            prop_assert_eq!(idx.doc_len(i as u32) as usize, t.len() + b.len());
        }
        for w in WORDS {
            prop_assert_eq!(idx.term_stats(w).df, df.get(w).copied().unwrap_or(0));
        }
    }

    #[test]
    fn segmentation_is_a_partition(s in "[一二三四五六七八九十]{1,30}", k in -3.0f64..3.0) {
        let chars: Vec<char> = s.chars().collect();
        let table = MiTable::from_sentences(&[chars.clone()]);
        let words = segment::segment(&chars, &table, k);
        prop_assert_eq!(words.concat(), s);
        prop_assert!(words.iter().all(|w| (1..=2).contains(&w.chars().count())));
    }

    #[test]
    fn selection_shrinks_as_theta_grows(
        top in prop::collection::vec(prop::collection::vec(word(), 1..15), 1..5),
        rest in prop::collection::vec(word(), 0..60),
        t1 in -3.0f64..3.0,
        t2 in -3.0f64..3.0,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let bags: Vec<Bag> = top.iter().map(|d| bag_of(d)).collect();
        let mut all: Vec<String> = top.concat();
        all.extend(rest);
        let ctf = bag_of(&all);
        let total = all.len() as u64;
        let pooled = TopDocBag::new(&bags, &|w| u64::from(ctf[w]), total);
        for b in &bags {
            let loose = feedback_b::select_terms(b, &pooled, lo);
            let strict = feedback_b::select_terms(b, &pooled, hi);
            prop_assert!(strict.iter().all(|(w, n)| loose.get(w) == Some(n)));
        }
    }

    #[test]
    fn auto_r_within_bounds(avail in 1usize..40, cap in 1usize..30, diffs in prop::collection::vec(0usize..6, 41)) {
        let r = feedback_b::auto_r_from(avail, cap, |i| diffs[..i].iter().sum());
        prop_assert!(r >= 1);
        prop_assert!(r <= avail.min(cap).max(1));
    }

    #[test]
    fn alpha_recovers_union_size(q in 1usize..8, u in 1usize..500) {
        let a = feedback_b::alpha(q, u);
        prop_assert!((a.powi(q as i32) - u as f64).abs() <= 1e-9 * u as f64);
        prop_assert!(a >= 1.0);
    }

    #[test]
    fn ap_matches_oracle(n in 1usize..30, rel_mask in any::<u32>(), cut in 0usize..30, seed in any::<u64>()) {
        let mut ranking: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        let mut s = seed;
        for i in (1..ranking.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ranking.swap(i, (s >> 33) as usize % (i + 1));
        }
        let rel: HashSet<&str> = (0..n)
            .filter(|i| rel_mask & (1 << i) != 0)
            .map(|i| ranking.iter().find(|d| **d == format!("d{i}")).unwrap().as_str())
            .collect();
        let shown = &ranking[..cut.min(n)];
        prop_assert_eq!(eval::average_precision(shown, &rel), oracle_ap(shown, &rel));
    }

    #[test]
    fn moving_relevant_up_never_hurts(n in 2usize..30, rel_mask in any::<u32>(), i in 0usize..30, j in 0usize..30) {
        let ranking: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        let rel: HashSet<&str> = ranking.iter().enumerate()
            .filter(|(i, _)| rel_mask & (1 << i) != 0)
            .map(|(_, d)| d.as_str())
            .collect();
        let (i, j) = (i % n, j % n);
        let (hi, lo) = if i < j { (i, j) } else { (j, i) };
        prop_assume!(!rel.contains(ranking[hi].as_str()) && rel.contains(ranking[lo].as_str()));
        let mut better = ranking.clone();
        better.swap(hi, lo);
        prop_assert!(eval::average_precision(&better, &rel) >= eval::average_precision(&ranking, &rel));
    }

    #[test]
    fn rigid_is_subset_of_relax(grades in prop::collection::vec(0u32..4, 0..30)) {
        let mut q = Qrels::new();
        for (i, g) in grades.iter().enumerate() {
            q.insert("q", format!("d{i}"), *g);
        }
        let rigid = q.relevant("q", 2);
        let relax = q.relevant("q", 1);
        prop_assert!(rigid.is_subset(&relax));
    }

    #[test]
    fn translation_consumes_each_token_once(
        entries in prop::collection::vec(prop::collection::vec(word(), 1..4), 0..12),
        tokens in prop::collection::vec(word(), 0..25),
        passthrough in any::<bool>(),
    ) {
        // each target encodes the length of its source phrase
        let tsv: String = entries
            .iter()
            .enumerate()
            .map(|(i, e)| format!("{}\tm{}x{}\t1\n", e.join(" "), e.len(), i))
            .collect();
        let dict = BilingualDictionary::parse_tsv(tsv.as_bytes(), Path::new("dict")).unwrap();
        let out = clir::translate(&tokens, &dict, passthrough);
        let consumed: usize = out
            .iter()
            .map(|t| if t.starts_with('m') { t[1..t.find('x').unwrap()].parse().unwrap() } else { 1 })
            .sum();
        if passthrough {
            prop_assert_eq!(consumed, tokens.len());
        } else {
            prop_assert!(consumed <= tokens.len());
            prop_assert!(out.iter().all(|t| t.starts_with('m')));
        }
    }

    #[test]
    fn dictionary_ignores_record_order(
        recs in prop::collection::vec((prop::collection::vec(word(), 1..3), prop::collection::vec(word(), 1..3)), 1..10),
        rotate in 0usize..10,
    ) {
        let records: Vec<KeywordPairRecord> = recs
            .iter()
            .enumerate()
            .map(|(i, (s, t))| KeywordPairRecord {
                record_id: format!("r{i}"),
                source_keywords: s.clone(),
                target_keywords: t.clone(),
            })
            .collect();
        let cfg = TokenizerConfig::token();
        let mut shuffled = records.clone();
        shuffled.rotate_left(rotate % records.len());
        shuffled.reverse();
        let a = clir::build_dictionary(&records, &cfg, &cfg);
        let b = clir::build_dictionary(&shuffled, &cfg, &cfg);
        prop_assert_eq!(&a, &b);
        let mut ta = Vec::new();
        let mut tb = Vec::new();
        a.write_tsv(&mut ta).unwrap();
        b.write_tsv(&mut tb).unwrap();
        prop_assert_eq!(ta, tb);
        let counts: BTreeMap<(String, String), u32> = records
            .iter()
            .flat_map(|r| {
                let s: HashSet<&String> = r.source_keywords.iter().collect();
                let t: HashSet<&String> = r.target_keywords.iter().collect();
                s.into_iter().flat_map(move |x| t.clone().into_iter().map(move |y| (x.clone(), y.clone())))
            })
            .fold(BTreeMap::new(), |mut m, k| {
                *m.entry(k).or_insert(0) += 1;
                m
            });
        for ((s, t), n) in counts {
            let targets = a.targets(&[s]).unwrap();
            prop_assert!(targets.iter().any(|(tt, c)| *tt == vec![t.clone()] && *c == n));
        }
    }
}
