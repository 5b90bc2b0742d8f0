//! Automatic feedback for the extended scorer: rank-weighted document
//! counting, Rocchio-style IDF modulation and binomial expansion-term
//! selection.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::analysis::Analyzer;
use crate::error::{Error, Result};
use crate::index::Index;
use crate::scoring::{self, QuerySetStats, RankedDoc, Ranking, ScoringParamsA, SystemAQuery, SystemAScorer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackAParams {
    pub k_r: usize,
    pub k_af: f64,
    pub k_p: f64,
    pub k_afw: f64,
    /// Select terms whose chance probability itself reaches `k_p`.
    pub literal_kp: bool,
}

impl Default for FeedbackAParams {
    fn default() -> Self {
        Self {
            k_r: 5,
            k_af: 0.7,
            k_p: 0.9,
            k_afw: 0.5,
            literal_kp: false,
        }
    }
}

impl FeedbackAParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_r == 0 || !(0.0..=1.0).contains(&self.k_p) || !(0.0..1.0).contains(&self.k_afw) {
            return Err(Error::invalid("need k_r >= 1, 0 <= k_p <= 1 and 0 <= k_afw < 1"));
        }
        Ok(())
    }
}

/// Rank weight `(k_afw + 1) - 2 k_afw (rank - 1) / (k_r - 1)`.
pub fn afw(rank: usize, k_r: usize, k_afw: f64) -> Result<f64> {
    if rank == 0 || rank > k_r {
        return Err(Error::invalid(format!("rank {rank} outside 1..={k_r}")));
    }
    if k_r == 1 {
        return Ok(1.0);
    }
    Ok((k_afw + 1.0) - 2.0 * k_afw * (rank - 1) as f64 / (k_r - 1) as f64)
}

fn rank_weights(k_r: usize, k_afw: f64) -> Vec<f64> {
    (1..=k_r).map(|r| afw(r, k_r, k_afw).expect("rank in range")).collect()
}

/// `Pr[X >= n_obs]` for `X ~ Binomial(trials, p)`, summed term by term.
pub fn binomial_tail(trials: u32, n_obs: u32, p: f64) -> f64 {
    if n_obs == 0 {
        return 1.0;
    }
    if n_obs > trials || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let n = f64::from(trials);
    // ln C(trials, k), built up from k = 0
    let mut ln_c = 0.0;
    let mut tail = 0.0;
    for k in 0..=trials {
        if k > 0 {
            ln_c += (n - f64::from(k) + 1.0).ln() - f64::from(k).ln();
        }
        if k >= n_obs {
            tail += (ln_c + f64::from(k) * lp + (n - f64::from(k)) * lq).exp();
        }
    }
    tail.min(1.0)
}

/// (RatioC, AFW-weighted term frequency) of `term` over `top`.
pub fn weighted_doc_ratios(term: &str, top: &[RankedDoc], index: &Index, k_afw: f64) -> (f64, f64) {
    if top.is_empty() {
        return (0.0, 0.0);
    }
    let weights = rank_weights(top.len(), k_afw);
    let postings = index.postings(term);
    weighted_ratios_with(&postings, top, &weights)
}

fn weighted_ratios_with(postings: &crate::index::TermPostings, top: &[RankedDoc], weights: &[f64]) -> (f64, f64) {
    let mut containing = 0.0;
    let mut freq = 0.0;
    for (e, w) in top.iter().zip(weights) {
        if let Some(h) = postings.get(e.doc) {
            containing += w;
            freq += w * f64::from(h.tf);
        }
    }
    let total: f64 = weights.iter().sum();
    (containing / total, freq)
}

/// `(E + k_af (RatioC - RatioD)) × IDF_orig`, clamped at zero.
pub fn feedback_idf(in_query: bool, ratio_c: f64, ratio_d: f64, k_af: f64, idf_orig: f64) -> f64 {
    let e = if in_query { 1.0 } else { 0.0 };
    ((e + k_af * (ratio_c - ratio_d)) * idf_orig).max(0.0)
}

/// Whether a term seen in `n_obs` (weighted, rounded) of `trials` top
/// documents, with collection rate `p0`, is selected.
pub fn binomial_select(trials: u32, n_obs: u32, p0: f64, k_p: f64, literal: bool) -> bool {
    let tail = binomial_tail(trials, n_obs, p0);
    if literal {
        tail >= k_p
    } else {
        1.0 - tail >= k_p
    }
}

/// Terms from the top documents that pass the binomial test, excluding
/// `exclude` (the original query terms).
pub fn expansion_terms(
    top: &[RankedDoc],
    index: &Index,
    analyzer: &Analyzer,
    params: &FeedbackAParams,
    exclude: &HashSet<String>,
) -> Vec<String> {
    if top.is_empty() {
        return Vec::new();
    }
    let weights = rank_weights(top.len(), params.k_afw);
    let candidates: BTreeSet<String> = top
        .iter()
        .flat_map(|e| analyzer.doc_bag(index, e.doc).into_keys())
        .filter(|t| !exclude.contains(t))
        .collect();
    let n = f64::from(index.n_docs());
    candidates
        .into_iter()
        .filter(|t| {
            let postings = index.postings(t);
            let containing: f64 = top
                .iter()
                .zip(&weights)
                .filter(|(e, _)| postings.get(e.doc).is_some())
                .map(|(_, w)| w)
                .sum();
            let n_obs = containing.round() as u32;
            let p0 = f64::from(postings.df()) / n;
            binomial_select(top.len() as u32, n_obs, p0, params.k_p, params.literal_kp)
        })
        .collect()
}

/// Second retrieval with feedback IDF for every term and the expansion
/// terms added with `E = 0`.
///
/// `first` is the ranking the feedback is read from; `category_first` is the
/// first retrieval for the category factor, required iff the category
/// factor is on.
#[allow(clippy::too_many_arguments)]
pub fn run_feedback_a(
    query: &SystemAQuery,
    first: &Ranking,
    index: &Index,
    analyzer: &Analyzer,
    params: &FeedbackAParams,
    scoring_params: &ScoringParamsA,
    stats: &QuerySetStats,
    category_first: Option<&Ranking>,
    cutoff: usize,
) -> Result<Ranking> {
    params.validate()?;
    let top = first.top(params.k_r);
    let weights = rank_weights(top.len().max(1), params.k_afw);
    let n = f64::from(index.n_docs());
    let original: HashSet<String> = query.all_terms(index.mode()).into_iter().collect();
    let mut idf_override = HashMap::new();
    let ratios = |term: &str| -> Option<(f64, f64, f64)> {
        let postings = index.postings(term);
        if postings.df() == 0 {
            return None;
        }
        let ratio_c = if top.is_empty() {
            0.0
        } else {
            weighted_ratios_with(&postings, top, &weights).0
        };
        let ratio_d = f64::from(postings.df()) / n;
        let idf = scoring::idf(postings.df(), index.n_docs()).ok()?;
        Some((ratio_c, ratio_d, idf))
    };
    for t in &original {
        if let Some((rc, rd, idf)) = ratios(t) {
            idf_override.insert(t.clone(), feedback_idf(true, rc, rd, params.k_af, idf));
        }
    }
    let mut expanded = query.clone();
    for t in expansion_terms(top, index, analyzer, params, &original) {
        if let Some((rc, rd, idf)) = ratios(&t) {
            let v = feedback_idf(false, rc, rd, params.k_af, idf);
            if v > 0.0 {
                idf_override.insert(t.clone(), v);
                expanded.flat.insert(t, 1.0, 1);
            }
        }
    }
    let scorer = SystemAScorer::new(index, &expanded, scoring_params, stats, category_first, Some(&idf_override))?;
    Ok(scoring::rank(index, &scorer, &first.query_id, cutoff))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_tail(n: u32, k0: u32, p: f64) -> f64 {
        let c = |n: u32, k: u32| -> f64 {
            let mut v: u128 = 1;
            for i in 0..k {
                v = v * u128::from(n - i) / u128::from(i + 1);
            }
            v as f64
        };
        (k0..=n).map(|k| c(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)).sum()
    }

    #[test]
    fn afw_endpoints() {
        assert_eq!(afw(1, 5, 0.5).unwrap(), 1.5);
        assert_eq!(afw(5, 5, 0.5).unwrap(), 0.5);
        assert_eq!(afw(3, 5, 0.5).unwrap(), 1.0);
        assert_eq!(afw(1, 1, 0.5).unwrap(), 1.0);
        assert!(afw(0, 5, 0.5).is_err());
        assert!(afw(6, 5, 0.5).is_err());
        for k_r in 1..12 {
            let s: f64 = rank_weights(k_r, 0.37).iter().sum();
            assert!((s - k_r as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn binomial_worked_case() {
        let tail = binomial_tail(5, 3, 0.1);
        assert!((tail - 0.00856).abs() < 1e-12);
        assert!((tail - direct_tail(5, 3, 0.1)).abs() < 1e-15);
        assert!(binomial_select(5, 3, 0.1, 0.9, false));
        assert_eq!(binomial_tail(5, 0, 0.3), 1.0);
        assert!(!binomial_select(5, 0, 0.3, 0.9, false));
        assert_eq!(binomial_tail(5, 3, 1.0), 1.0);
        assert!(!binomial_select(5, 5, 1.0, 0.9, false));
    }

    #[test]
    fn feedback_idf_cases() {
        assert_eq!(feedback_idf(true, 0.3, 0.3, 0.7, 2.0), 2.0);
        assert!((feedback_idf(true, 0.8, 0.1, 0.7, 1.0) - 1.49).abs() < 1e-12);
        assert_eq!(feedback_idf(false, 0.0, 0.2, 0.7, 3.0), 0.0);
    }
}
