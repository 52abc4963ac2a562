//! Ranking and text-similarity evaluation.
//!
//! NDCG uses linear gains (`rel / log2(p + 1)`), not `2^rel − 1`: with 0–9
//! grades the exponential form lets a single top item swamp the rest of the
//! list. Text metrics compare the system's top-ranked summary with the
//! expert's top-ranked summary for each query.
//!
//! BERTScore here is the greedy-matching formula over a pluggable token
//! embedding, not the pretrained-transformer implementation.

use std::collections::HashMap;
use std::fmt::Display;
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::ExpertRanking;
use crate::rerank::RerankedList;
use crate::retrieval::tokenize;
use crate::scalar::{cosine, Scalar};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("item `{0}` has no relevance judgment")]
    UnknownId(String),
    #[error("cutoff k must be at least 1")]
    ZeroCutoff,
    #[error("{0} has no tokens")]
    EmptyText(&'static str),
    #[error("nothing to evaluate")]
    EmptyRun,
    #[error("reranked list for `{0}` is empty")]
    EmptyList(String),
}

/// Token → vector map used by the cosine and BERTScore metrics and by the
/// scorer's embedding feature.
pub trait EmbeddingProvider<F>: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, token: &str) -> Vec<F>;
}

/// Seeded hashed bag of character n-grams.
///
/// Each token is wrapped as `<token>`; every character n-gram plus the whole
/// wrapped token is hashed (FNV-1a, seed-mixed) into one of `dim` buckets and
/// counted. Entries are non-negative, so all cosines land in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedNgramEmbedding {
    pub dim: usize,
    pub ngram: usize,
    pub seed: u64,
}

impl Default for HashedNgramEmbedding {
    fn default() -> Self {
        Self {
            dim: 256,
            ngram: 3,
            seed: 0x5eed_0f_e5,
        }
    }
}

fn fnv1a(seed: u64, bytes: impl IntoIterator<Item = u8>) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET ^ seed.wrapping_mul(PRIME);
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

impl<F: Scalar> EmbeddingProvider<F> for HashedNgramEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, token: &str) -> Vec<F> {
        let mut v = vec![F::zero(); self.dim];
        if self.dim == 0 {
            return v;
        }
        let wrapped: Vec<char> = std::iter::once('<')
            .chain(token.chars())
            .chain(std::iter::once('>'))
            .collect();
        let mut bump = |h: u64| {
            let i = (h % self.dim as u64) as usize;
            v[i] = v[i] + F::one();
        };
        let whole: String = wrapped.iter().collect();
        bump(fnv1a(self.seed ^ 0x9e37_79b9, whole.bytes()));
        let n = self.ngram.max(1);
        if wrapped.len() <= n {
            bump(fnv1a(self.seed, whole.bytes()));
        } else {
            for w in wrapped.windows(n) {
                let s: String = w.iter().collect();
                bump(fnv1a(self.seed, s.bytes()));
            }
        }
        v
    }
}

/// Sum of token embeddings (the mean up to a positive factor).
pub fn embedding_sum<F: Scalar, S: AsRef<str>>(
    tokens: &[S],
    provider: &dyn EmbeddingProvider<F>,
) -> Vec<F> {
    let mut acc = vec![F::zero(); provider.dim()];
    for t in tokens {
        for (a, e) in acc.iter_mut().zip(provider.embed(t.as_ref())) {
            *a = *a + e;
        }
    }
    acc
}

/// Mean-pooled token embedding, `(1/|D|) Σ e_w`.
pub fn mean_embedding<F: Scalar, S: AsRef<str>>(
    tokens: &[S],
    provider: &dyn EmbeddingProvider<F>,
) -> Vec<F> {
    let n = F::from_count(tokens.len().max(1));
    embedding_sum(tokens, provider)
        .into_iter()
        .map(|x| x / n)
        .collect()
}

/// Discounted cumulative gain of a relevance sequence, cut at `k`.
pub fn dcg<F: Scalar>(relevances: impl IntoIterator<Item = u8>, k: usize) -> F {
    relevances
        .into_iter()
        .take(k)
        .enumerate()
        .fold(F::zero(), |acc, (p, rel)| {
            acc + F::from_count(rel as usize) / F::from_count(p + 2).log2()
        })
}

/// NDCG@k of a system ordering against graded relevance.
///
/// The ideal DCG ranks every judged item by grade. When no judged item has a
/// positive grade the result is defined as 0. A `k` beyond the list length
/// evaluates the whole list.
pub fn ndcg_at_k<F: Scalar, K: Eq + Hash + Display>(
    order: &[K],
    relevance: &HashMap<K, u8>,
    k: usize,
) -> Result<F, MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroCutoff);
    }
    let rels = order
        .iter()
        .map(|id| {
            relevance
                .get(id)
                .copied()
                .ok_or_else(|| MetricError::UnknownId(id.to_string()))
        })
        .collect::<Result<Vec<u8>, _>>()?;
    let mut ideal: Vec<u8> = relevance.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: F = dcg(ideal, k);
    if idcg <= F::zero() {
        return Ok(F::zero());
    }
    Ok(dcg::<F>(rels, k) / idcg)
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    m
}

/// Sentence BLEU with clipped n-gram precisions and brevity penalty.
///
/// For orders `n ≥ 2` with no clipped match the precision is smoothed to
/// `1 / (count + 1)`, so short summaries are not zeroed by a missing 4-gram;
/// an order the candidate is too short to contain then contributes 1. A
/// candidate without any unigram match, or an empty candidate, scores 0.
pub fn bleu<F: Scalar, S: AsRef<str>>(candidate: &[S], reference: &[S], max_n: usize) -> F {
    if candidate.is_empty() || max_n == 0 {
        return F::zero();
    }
    let mut log_sum = F::zero();
    for n in 1..=max_n {
        let cand = ngram_counts(candidate, n);
        let refc = ngram_counts(reference, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        let p = if n == 1 {
            if matched == 0 {
                return F::zero();
            }
            F::from_count(matched) / F::from_count(total)
        } else if matched == 0 {
            F::one() / F::from_count(total + 1)
        } else {
            F::from_count(matched) / F::from_count(total)
        };
        log_sum = log_sum + p.ln();
    }
    let c = F::from_count(candidate.len());
    let r = F::from_count(reference.len());
    let bp = if c > r { F::one() } else { (F::one() - r / c).exp() };
    bp * (log_sum / F::from_count(max_n)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RougeL<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
}

pub fn lcs_length<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L precision, recall and F1 from the longest common subsequence.
pub fn rouge_l<F: Scalar, S: AsRef<str>>(candidate: &[S], reference: &[S]) -> RougeL<F> {
    let zero = RougeL {
        precision: F::zero(),
        recall: F::zero(),
        f1: F::zero(),
    };
    if candidate.is_empty() || reference.is_empty() {
        return zero;
    }
    let lcs = lcs_length(candidate, reference);
    if lcs == 0 {
        return zero;
    }
    let p = F::from_count(lcs) / F::from_count(candidate.len());
    let r = F::from_count(lcs) / F::from_count(reference.len());
    RougeL {
        precision: p,
        recall: r,
        f1: F::lit(2.0) * p * r / (p + r),
    }
}

/// Cosine between mean-pooled token embeddings of two texts.
pub fn cosine_similarity<F: Scalar>(
    text: &str,
    other: &str,
    provider: &dyn EmbeddingProvider<F>,
) -> Result<F, MetricError> {
    let a = tokenize(text);
    let b = tokenize(other);
    if a.is_empty() {
        return Err(MetricError::EmptyText("candidate text"));
    }
    if b.is_empty() {
        return Err(MetricError::EmptyText("reference text"));
    }
    Ok(cosine(
        &mean_embedding(&a, provider),
        &mean_embedding(&b, provider),
    ))
}

/// Greedy-matching BERTScore F1 over token embeddings.
pub fn bertscore_f1<F: Scalar, S: AsRef<str>>(
    candidate: &[S],
    reference: &[S],
    provider: &dyn EmbeddingProvider<F>,
) -> Result<F, MetricError> {
    if candidate.is_empty() {
        return Err(MetricError::EmptyText("candidate"));
    }
    if reference.is_empty() {
        return Err(MetricError::EmptyText("reference"));
    }
    let ce: Vec<Vec<F>> = candidate.iter().map(|t| provider.embed(t.as_ref())).collect();
    let re: Vec<Vec<F>> = reference.iter().map(|t| provider.embed(t.as_ref())).collect();
    let sims: Vec<Vec<F>> = ce
        .iter()
        .map(|c| re.iter().map(|r| cosine(c, r)).collect())
        .collect();
    let best = |it: &mut dyn Iterator<Item = F>| it.fold(F::neg_infinity(), F::max);
    let precision = sims
        .iter()
        .map(|row| best(&mut row.iter().copied()))
        .sum::<F>()
        / F::from_count(ce.len());
    let recall = (0..re.len())
        .map(|j| best(&mut sims.iter().map(|row| row[j])))
        .sum::<F>()
        / F::from_count(re.len());
    if precision + recall == F::zero() {
        return Ok(F::zero());
    }
    Ok(F::lit(2.0) * precision * recall / (precision + recall))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct QueryMetrics<F> {
    pub query_id: String,
    pub ndcg_at_5: F,
    pub ndcg_at_10: F,
    pub cosine: F,
    pub bertscore_f1: F,
    pub bleu: F,
    pub rouge_l: F,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct MetricReport<F> {
    pub ndcg_at_5: F,
    pub ndcg_at_10: F,
    pub cosine: F,
    pub bertscore_f1: F,
    pub bleu: F,
    pub rouge_l: F,
    pub per_query: Vec<QueryMetrics<F>>,
}

fn evaluate_one<F: Scalar>(
    list: &RerankedList<F>,
    truth: &ExpertRanking,
    provider: &dyn EmbeddingProvider<F>,
) -> Result<QueryMetrics<F>, MetricError> {
    let relevance: HashMap<String, u8> = truth
        .judged
        .iter()
        .map(|j| (j.item.id.clone(), j.relevance))
        .collect();
    let order: Vec<String> = list.entries.iter().map(|e| e.item.id.clone()).collect();
    let system_top = list
        .entries
        .first()
        .ok_or_else(|| MetricError::EmptyList(list.query.id.clone()))?;
    let expert_top = truth
        .expert_top()
        .ok_or_else(|| MetricError::EmptyList(truth.query.id.clone()))?;

    let cand = &system_top.item.tokens;
    let refr = &expert_top.tokens;
    Ok(QueryMetrics {
        query_id: list.query.id.clone(),
        ndcg_at_5: ndcg_at_k(&order, &relevance, 5)?,
        ndcg_at_10: ndcg_at_k(&order, &relevance, 10)?,
        cosine: cosine_similarity(&system_top.item.summary, &expert_top.summary, provider)?,
        bertscore_f1: bertscore_f1(cand, refr, provider)?,
        bleu: bleu(cand, refr, 4),
        rouge_l: rouge_l(cand, refr).f1,
    })
}

/// Per-query metrics and their means over a run.
pub fn evaluate_run<F: Scalar>(
    paired: &[(RerankedList<F>, ExpertRanking)],
    provider: &dyn EmbeddingProvider<F>,
) -> Result<MetricReport<F>, MetricError> {
    if paired.is_empty() {
        return Err(MetricError::EmptyRun);
    }
    let per_query = paired
        .iter()
        .map(|(l, t)| evaluate_one(l, t, provider))
        .collect::<Result<Vec<_>, _>>()?;
    let n = F::from_count(per_query.len());
    let mean = |f: fn(&QueryMetrics<F>) -> F| per_query.iter().map(f).sum::<F>() / n;
    Ok(MetricReport {
        ndcg_at_5: mean(|q| q.ndcg_at_5),
        ndcg_at_10: mean(|q| q.ndcg_at_10),
        cosine: mean(|q| q.cosine),
        bertscore_f1: mean(|q| q.bertscore_f1),
        bleu: mean(|q| q.bleu),
        rouge_l: mean(|q| q.rouge_l),
        per_query,
    })
}

pub const TABLE_HEADER: [&str; 7] = [
    "Model",
    "NDCG@5",
    "NDCG@10",
    "Cos. Sim.",
    "BERTScore",
    "BLEU",
    "Rouge-L",
];

/// Writes one row per model in the comparison-table layout.
pub fn write_table_csv<F: Scalar, W: Write>(
    rows: &[(String, MetricReport<F>)],
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for (model, r) in rows {
        let vals = [
            r.ndcg_at_5,
            r.ndcg_at_10,
            r.cosine,
            r.bertscore_f1,
            r.bleu,
            r.rouge_l,
        ];
        let mut rec = vec![model.clone()];
        rec.extend(vals.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
