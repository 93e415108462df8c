use std::collections::HashMap;

use super::text::tokenize;

/// Tokenized documents with an inverted index, scored as one collection.
#[derive(Debug, Clone, Default)]
pub struct Pool {
    lengths: Vec<u32>,
    avg_len: f64,
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl Pool {
    pub fn build<S: AsRef<str>>(texts: &[S]) -> Self {
        let mut lengths = Vec::with_capacity(texts.len());
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        for (doc, text) in texts.iter().enumerate() {
            let tokens = tokenize(text.as_ref());
            lengths.push(tokens.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((doc as u32, n));
            }
        }
        let total: u64 = lengths.iter().map(|&l| l as u64).sum();
        let avg_len = if lengths.is_empty() {
            0.0
        } else {
            total as f64 / lengths.len() as f64
        };
        Pool {
            lengths,
            avg_len,
            postings,
        }
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn doc_len(&self, doc: usize) -> u32 {
        self.lengths[doc]
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    /// `(doc, term frequency)` for every document containing `term`.
    pub fn postings(&self, term: &str) -> &[(u32, u32)] {
        self.postings
            .get(term)
            .map(Vec::as_slice)
            .unwrap_or_default()
    }
}

/// Scores every document of a pool against a query. Scores are non-negative
/// and zero for documents sharing no token with the query.
pub trait Scorer: Send + Sync {
    fn score(&self, query: &str, pool: &Pool) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct Bm25 {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25 {
    fn default() -> Self {
        Bm25 { k1: 1.2, b: 0.75 }
    }
}

impl Bm25 {
    pub fn idf(n_docs: usize, df: usize) -> f64 {
        let n = n_docs as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }
}

impl Scorer for Bm25 {
    fn score(&self, query: &str, pool: &Pool) -> Vec<f64> {
        let mut scores = vec![0.0; pool.len()];
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();
        for term in terms {
            let postings = pool.postings(&term);
            if postings.is_empty() {
                continue;
            }
            let idf = Bm25::idf(pool.len(), postings.len());
            for &(doc, tf) in postings {
                let tf = tf as f64;
                let norm = 1.0 - self.b
                    + self.b * pool.doc_len(doc as usize) as f64 / pool.avg_len().max(1e-9);
                scores[doc as usize] += idf * tf * (self.k1 + 1.0) / (tf + self.k1 * norm);
            }
        }
        scores
    }
}
