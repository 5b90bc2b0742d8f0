//! Synthetic collections for the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dualrank::{Document, DocumentCollection};

/// Zipf-ish token documents over a `vocab`-word vocabulary.
pub fn token_collection(n_docs: usize, vocab: usize, seed: u64) -> DocumentCollection {
    let mut rng = StdRng::seed_from_u64(seed);
    let docs = (0..n_docs)
        .map(|i| {
            let len = rng.random_range(50..300);
            let body: Vec<String> = (0..len).map(|_| word(&mut rng, vocab)).collect();
            let title: Vec<String> = (0..4).map(|_| word(&mut rng, vocab)).collect();
            Document::new(format!("d{i:06}"), title.join(" "), body.join(" "))
        })
        .collect();
    DocumentCollection::from_documents(docs).expect("ids are unique")
}

pub fn word(rng: &mut StdRng, vocab: usize) -> String {
    let r: f64 = rng.random();
    format!("w{}", (r * r * r * vocab as f64) as usize)
}

/// Random sentences over a small set of characters with recurring pairs.
pub fn char_sentences(n: usize, seed: u64) -> Vec<Vec<char>> {
    const CHARS: &str = "银行合并市场利率开放完成经济发展政策改革国家企业技术";
    let chars: Vec<char> = CHARS.chars().collect();
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut s = Vec::new();
            while s.len() < 20 {
                let i = rng.random_range(0..chars.len());
                s.push(chars[i]);
                if i % 2 == 0 && i + 1 < chars.len() {
                    s.push(chars[i + 1]);
                }
            }
            s
        })
        .collect()
}
