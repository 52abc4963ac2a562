//! First-stage candidate generation: tokenizer, inverted index and Okapi BM25.
//!
//! The scoring function is the Robertson/Okapi form with the smoothed,
//! always non-negative IDF used by Lucene:
//!
//! ```text
//! score(q, d) = Σ_{t ∈ q} idf(t) · tf·(k1 + 1) / (tf + k1·(1 − b + b·|d|/avgdl))
//! idf(t)      = ln(1 + (N − df + 0.5) / (df + 0.5))
//! ```
//!
//! Query terms are summed per occurrence, so a repeated query word counts twice.

use std::collections::{BTreeMap, HashMap};

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::corpus::{Query, ResponseItem};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RetrievalError {
    #[error("duplicate item id `{0}` in corpus")]
    DuplicateItem(String),
    #[error("item `{0}` is not indexed")]
    UnknownItem(String),
    #[error("invalid BM25 parameters: k1={k1}, b={b} (need k1 >= 0 and 0 <= b <= 1)")]
    InvalidParams { k1: f64, b: f64 },
    #[error("retrieval depth must be at least 1")]
    ZeroDepth,
}

/// Lowercases and splits on anything that is not alphanumeric.
///
/// `"CO2, CO2!"` becomes `["co2", "co2"]`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
    "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from",
    "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how",
    "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my",
    "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
    "out", "over", "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
    "their", "theirs", "them", "then", "there", "these", "they", "this", "those", "through",
    "to", "too", "under", "until", "up", "very", "was", "we", "were", "what", "when", "where",
    "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours",
];

/// Term normalization applied on top of [`tokenize`].
///
/// Both switches are off by default so index terms stay identical to the
/// visible words of a summary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Analyzer {
    pub remove_stopwords: bool,
    pub stem: bool,
}

impl Analyzer {
    /// Maps one token to its index term, or `None` when it is filtered out.
    pub fn term(&self, token: &str) -> Option<String> {
        if self.remove_stopwords && STOPWORDS.binary_search(&token).is_ok() {
            return None;
        }
        if self.stem {
            Some(Stemmer::create(Algorithm::English).stem(token).into_owned())
        } else {
            Some(token.to_string())
        }
    }

    pub fn analyze(&self, tokens: &[String]) -> Vec<String> {
        if !self.remove_stopwords && !self.stem {
            return tokens.to_vec();
        }
        tokens.iter().filter_map(|t| self.term(t)).collect()
    }

    pub fn analyze_text(&self, text: &str) -> Vec<String> {
        self.analyze(&tokenize(text))
    }
}

/// BM25 free parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar", default)]
pub struct Bm25Params<F: Scalar> {
    pub k1: F,
    pub b: F,
}

impl<F: Scalar> Default for Bm25Params<F> {
    fn default() -> Self {
        Self {
            k1: F::lit(1.2),
            b: F::lit(0.75),
        }
    }
}

impl<F: Scalar> Bm25Params<F> {
    pub fn new(k1: F, b: F) -> Result<Self, RetrievalError> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        let ok = self.k1 >= F::zero() && self.b >= F::zero() && self.b <= F::one();
        if ok {
            Ok(())
        } else {
            Err(RetrievalError::InvalidParams {
                k1: self.k1.to_f64_lossy(),
                b: self.b.to_f64_lossy(),
            })
        }
    }
}

/// Smoothed inverse document frequency, `ln(1 + (N − df + 0.5)/(df + 0.5))`.
pub fn idf<F: Scalar>(n_docs: usize, df: usize) -> F {
    let half = F::lit(0.5);
    let n = F::from_count(n_docs);
    let df = F::from_count(df);
    ((n - df + half) / (df + half)).ln_1p()
}

/// Contribution of one query term occurrence.
pub fn term_weight<F: Scalar>(
    params: &Bm25Params<F>,
    idf: F,
    tf: usize,
    doc_len: usize,
    avg_len: F,
) -> F {
    if tf == 0 {
        return F::zero();
    }
    let one = F::one();
    let tf = F::from_count(tf);
    let ratio = if avg_len > F::zero() {
        F::from_count(doc_len) / avg_len
    } else {
        one
    };
    let norm = params.k1 * (one - params.b + params.b * ratio);
    idf * tf * (params.k1 + one) / (tf + norm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the item in [`InvertedIndex::items`].
    pub doc: usize,
    pub tf: usize,
}

/// Immutable term → postings index over a set of response items.
#[derive(Clone, Debug)]
pub struct InvertedIndex {
    analyzer: Analyzer,
    items: Vec<ResponseItem>,
    by_id: HashMap<String, usize>,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<usize>,
    total_length: usize,
}

impl InvertedIndex {
    pub fn build(items: &[ResponseItem]) -> Result<Self, RetrievalError> {
        Self::build_with(items, Analyzer::default())
    }

    pub fn build_with(items: &[ResponseItem], analyzer: Analyzer) -> Result<Self, RetrievalError> {
        let mut by_id = HashMap::with_capacity(items.len());
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(items.len());
        let mut total_length = 0;

        for (doc, item) in items.iter().enumerate() {
            if by_id.insert(item.id.clone(), doc).is_some() {
                return Err(RetrievalError::DuplicateItem(item.id.clone()));
            }
            let terms = analyzer.analyze(&item.tokens);
            let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
            for t in &terms {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (term, tf) in tf {
                postings
                    .entry(term.to_string())
                    .or_default()
                    .push(Posting { doc, tf });
            }
            doc_lengths.push(terms.len());
            total_length += terms.len();
        }

        Ok(Self {
            analyzer,
            items: items.to_vec(),
            by_id,
            postings,
            doc_lengths,
            total_length,
        })
    }

    pub fn analyzer(&self) -> Analyzer {
        self.analyzer
    }

    /// Corpus size `N`.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[ResponseItem] {
        &self.items
    }

    pub fn item(&self, id: &str) -> Option<&ResponseItem> {
        self.by_id.get(id).map(|&d| &self.items[d])
    }

    pub fn doc_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn doc_length(&self, doc: usize) -> usize {
        self.doc_lengths[doc]
    }

    pub fn doc_lengths(&self) -> &[usize] {
        &self.doc_lengths
    }

    pub fn avg_doc_length<F: Scalar>(&self) -> F {
        if self.items.is_empty() {
            F::zero()
        } else {
            F::from_count(self.total_length) / F::from_count(self.items.len())
        }
    }

    pub fn idf<F: Scalar>(&self, term: &str) -> F {
        idf(self.items.len(), self.doc_freq(term))
    }

    /// Analyzed query terms for free text.
    pub fn query_terms(&self, text: &str) -> Vec<String> {
        self.analyzer.analyze_text(text)
    }
}

fn tf_in(index: &InvertedIndex, term: &str, doc: usize) -> usize {
    let postings = index.postings(term);
    postings
        .binary_search_by_key(&doc, |p| p.doc)
        .map_or(0, |i| postings[i].tf)
}

/// BM25 score of one indexed item for already analyzed query terms.
pub fn bm25_score<F: Scalar>(
    index: &InvertedIndex,
    params: &Bm25Params<F>,
    query_terms: &[String],
    item_id: &str,
) -> Result<F, RetrievalError> {
    let doc = index
        .doc_of(item_id)
        .ok_or_else(|| RetrievalError::UnknownItem(item_id.to_string()))?;
    let avg = index.avg_doc_length::<F>();
    let len = index.doc_length(doc);
    Ok(query_terms.iter().fold(F::zero(), |acc, t| {
        acc + term_weight(params, index.idf(t), tf_in(index, t, doc), len, avg)
    }))
}

/// Top-`m` items for a query by descending BM25 score, ties by ascending item id.
///
/// Only items sharing at least one term with the query are returned.
pub fn retrieve_topk<'a, F: Scalar>(
    index: &'a InvertedIndex,
    params: &Bm25Params<F>,
    query: &Query,
    m: usize,
) -> Result<Vec<(&'a ResponseItem, F)>, RetrievalError> {
    if m == 0 {
        return Err(RetrievalError::ZeroDepth);
    }
    let terms = index.query_terms(&query.text);
    let avg = index.avg_doc_length::<F>();
    let mut acc: BTreeMap<usize, F> = BTreeMap::new();
    for t in &terms {
        let w = index.idf::<F>(t);
        for p in index.postings(t) {
            let s = term_weight(params, w, p.tf, index.doc_length(p.doc), avg);
            let e = acc.entry(p.doc).or_insert_with(F::zero);
            *e = *e + s;
        }
    }
    let mut scored: Vec<(&ResponseItem, F)> = acc
        .into_iter()
        .map(|(doc, s)| (&index.items[doc], s))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.id.cmp(&b.0.id))
    });
    scored.truncate(m);
    Ok(scored)
}
