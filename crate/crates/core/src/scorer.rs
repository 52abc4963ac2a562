//! Single-score ranking heads.
//!
//! [`RankScorer`] maps a (query, item) pair to one real number. The trainable
//! implementation is a [`LinearScorer`] over six IR features:
//!
//! | index | feature |
//! |-------|---------|
//! | 0 | BM25 score of the item against the query |
//! | 1 | fraction of distinct query terms present in the item |
//! | 2 | fraction of item tokens that are query terms |
//! | 3 | multiset term overlap divided by query length |
//! | 4 | cosine of summed query and item token embeddings |
//! | 5 | bias, always 1 |
//!
//! Every feature is computed from the item's token positions, so a keep-mask
//! over those positions defines the coalition value used for attribution.
//! A masked token is deleted; an all-false mask is the zero-token item
//! (features `[0, 0, 0, 0, 0, 1]`).

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{Query, ResponseItem};
use crate::http::{build_client, post_json_with_retry, HttpError, RetryPolicy};
use crate::metrics::EmbeddingProvider;
use crate::retrieval::{term_weight, Bm25Params, InvertedIndex};
use crate::scalar::{dot, Scalar};

pub const FEATURE_DIM: usize = 6;
pub const FEATURE_SPEC: &str = "ir6-v1";
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "bm25",
    "query_coverage",
    "item_coverage",
    "overlap",
    "embedding_cosine",
    "bias",
];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("mask has {got} entries but the item has {expected} tokens")]
    MaskLength { expected: usize, got: usize },
    #[error("feature layout `{got}` does not match `{expected}`")]
    FeatureSpec { expected: String, got: String },
    #[error("non-finite weight at index {0}")]
    NonFiniteWeight(usize),
    #[error("no score known for item `{item}` under query `{query}`")]
    Unknown { query: String, item: String },
    #[error("remote scorer: {0}")]
    Remote(#[from] HttpError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct FeatureVector<F>(pub Vec<F>);

impl<F: Scalar> FeatureVector<F> {
    pub fn values(&self) -> &[F] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Weight vector over a named feature layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct LinearScorer<F> {
    pub weights: Vec<F>,
    pub feature_spec: String,
}

impl<F: Scalar> LinearScorer<F> {
    pub fn new(weights: Vec<F>) -> Result<Self, ScoreError> {
        Self::with_spec(weights, FEATURE_SPEC)
    }

    pub fn with_spec(weights: Vec<F>, spec: impl Into<String>) -> Result<Self, ScoreError> {
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(ScoreError::NonFiniteWeight(i));
        }
        Ok(Self {
            weights,
            feature_spec: spec.into(),
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![F::zero(); dim],
            feature_spec: FEATURE_SPEC.to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Dot product of weights and features.
    pub fn score(&self, f: &FeatureVector<F>) -> Result<F, ScoreError> {
        self.score_slice(&f.0)
    }

    pub fn score_slice(&self, f: &[F]) -> Result<F, ScoreError> {
        if f.len() != self.weights.len() {
            return Err(ScoreError::Dimension {
                expected: self.weights.len(),
                got: f.len(),
            });
        }
        Ok(dot(&self.weights, f))
    }

    pub fn check_compatible(&self, other: &LinearScorer<F>) -> Result<(), ScoreError> {
        if self.dim() != other.dim() {
            return Err(ScoreError::Dimension {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        if self.feature_spec != other.feature_spec {
            return Err(ScoreError::FeatureSpec {
                expected: self.feature_spec.clone(),
                got: other.feature_spec.clone(),
            });
        }
        Ok(())
    }
}

/// Coalition value over an item's token positions.
pub trait MaskedValue<F>: Sync {
    /// Number of players (token positions).
    fn players(&self) -> usize;
    fn value(&self, keep: &[bool]) -> Result<F, ScoreError>;
}

/// A function `(query, item) → score` usable for re-ranking and attribution.
pub trait RankScorer<F: Scalar>: Sync {
    fn score(&self, query: &Query, item: &ResponseItem) -> Result<F, ScoreError>;

    /// Score of the item with masked token positions deleted.
    fn score_masked(
        &self,
        query: &Query,
        item: &ResponseItem,
        keep: &[bool],
    ) -> Result<F, ScoreError> {
        check_mask(item, keep)?;
        self.score(query, &item.restricted(keep))
    }

    /// Coalition value function for one pair. Implementations may precompute
    /// per-token state; the result must agree with [`RankScorer::score_masked`].
    fn masked_game<'s>(
        &'s self,
        query: &'s Query,
        item: &'s ResponseItem,
    ) -> Result<Box<dyn MaskedValue<F> + 's>, ScoreError> {
        Ok(Box::new(RestrictGame {
            scorer: self,
            query,
            item,
        }))
    }
}

fn check_mask(item: &ResponseItem, keep: &[bool]) -> Result<(), ScoreError> {
    if keep.len() != item.tokens.len() {
        return Err(ScoreError::MaskLength {
            expected: item.tokens.len(),
            got: keep.len(),
        });
    }
    Ok(())
}

struct RestrictGame<'s, S: ?Sized> {
    scorer: &'s S,
    query: &'s Query,
    item: &'s ResponseItem,
}

impl<F: Scalar, S: RankScorer<F> + ?Sized> MaskedValue<F> for RestrictGame<'_, S> {
    fn players(&self) -> usize {
        self.item.tokens.len()
    }

    fn value(&self, keep: &[bool]) -> Result<F, ScoreError> {
        self.scorer.score_masked(self.query, self.item, keep)
    }
}

/// Computes [`FeatureVector`]s against a fixed index and embedding.
#[derive(Clone, Copy)]
pub struct FeatureExtractor<'a, F: Scalar> {
    pub index: &'a InvertedIndex,
    pub params: Bm25Params<F>,
    pub provider: &'a dyn EmbeddingProvider<F>,
}

struct LocalTerm<F> {
    idf: F,
    query_count: usize,
    /// Dot product of the term embedding with the summed query embedding.
    query_dot: F,
}

/// Per-(query, item) state for fast repeated feature evaluation under masks.
///
/// Embeddings enter only through dot products, so the pair keeps the Gram
/// matrix of its distinct item terms instead of the vectors.
pub struct PreparedPair<F: Scalar> {
    params: Bm25Params<F>,
    avg_len: F,
    /// Local term id of each item token position; `None` when the analyzer drops it.
    positions: Vec<Option<usize>>,
    vocab: Vec<LocalTerm<F>>,
    /// Row-major `vocab.len()²` term embedding dot products.
    gram: Vec<F>,
    /// Local term id of each query term occurrence, in query order.
    query_occurrences: Vec<Option<usize>>,
    query_len: usize,
    query_distinct: usize,
    query_norm: F,
}

impl<'a, F: Scalar> FeatureExtractor<'a, F> {
    pub fn new(
        index: &'a InvertedIndex,
        params: Bm25Params<F>,
        provider: &'a dyn EmbeddingProvider<F>,
    ) -> Self {
        Self {
            index,
            params,
            provider,
        }
    }

    pub fn prepare(&self, query: &Query, item: &ResponseItem) -> PreparedPair<F> {
        let analyzer = self.index.analyzer();
        let query_terms = self.index.query_terms(&query.text);
        let mut query_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in &query_terms {
            *query_counts.entry(t.as_str()).or_default() += 1;
        }

        let mut query_embedding = vec![F::zero(); self.provider.dim()];
        for t in &query_terms {
            for (a, e) in query_embedding.iter_mut().zip(self.provider.embed(t)) {
                *a = *a + e;
            }
        }

        let mut local: HashMap<String, usize> = HashMap::new();
        let mut vocab: Vec<LocalTerm<F>> = Vec::new();
        let mut embeddings: Vec<Vec<F>> = Vec::new();
        let positions = item
            .tokens
            .iter()
            .map(|tok| {
                let term = analyzer.term(tok)?;
                if let Some(&id) = local.get(&term) {
                    return Some(id);
                }
                let id = vocab.len();
                let e = self.provider.embed(&term);
                vocab.push(LocalTerm {
                    idf: self.index.idf(&term),
                    query_count: query_counts.get(term.as_str()).copied().unwrap_or(0),
                    query_dot: dot(&query_embedding, &e),
                });
                embeddings.push(e);
                local.insert(term, id);
                Some(id)
            })
            .collect();

        let u = embeddings.len();
        let mut gram = vec![F::zero(); u * u];
        for i in 0..u {
            for j in i..u {
                let g = dot(&embeddings[i], &embeddings[j]);
                gram[i * u + j] = g;
                gram[j * u + i] = g;
            }
        }

        PreparedPair {
            params: self.params,
            avg_len: self.index.avg_doc_length(),
            positions,
            query_occurrences: query_terms.iter().map(|t| local.get(t).copied()).collect(),
            query_len: query_terms.len(),
            query_distinct: query_counts.len(),
            query_norm: dot(&query_embedding, &query_embedding).sqrt(),
            vocab,
            gram,
        }
    }

    pub fn extract(&self, query: &Query, item: &ResponseItem) -> FeatureVector<F> {
        self.prepare(query, item).features_all()
    }
}

impl<F: Scalar> PreparedPair<F> {
    pub fn n_tokens(&self) -> usize {
        self.positions.len()
    }

    pub fn features_all(&self) -> FeatureVector<F> {
        self.features_iter(std::iter::repeat(true))
    }

    pub fn features(&self, keep: &[bool]) -> Result<FeatureVector<F>, ScoreError> {
        if keep.len() != self.positions.len() {
            return Err(ScoreError::MaskLength {
                expected: self.positions.len(),
                got: keep.len(),
            });
        }
        Ok(self.features_iter(keep.iter().copied()))
    }

    fn features_iter(&self, keep: impl Iterator<Item = bool>) -> FeatureVector<F> {
        let zero = F::zero();
        let u = self.vocab.len();
        let mut counts = vec![0usize; u];
        let mut kept_len = 0usize;
        for (pos, k) in self.positions.iter().zip(keep) {
            if let (Some(id), true) = (pos, k) {
                counts[*id] += 1;
                kept_len += 1;
            }
        }

        let bm25 = self.query_occurrences.iter().fold(zero, |acc, occ| match occ {
            Some(id) => {
                acc + term_weight(
                    &self.params,
                    self.vocab[*id].idf,
                    counts[*id],
                    kept_len,
                    self.avg_len,
                )
            }
            None => acc + zero,
        });

        let present: Vec<usize> = (0..u).filter(|&t| counts[t] > 0).collect();
        let mut covered = 0usize;
        let mut in_query_positions = 0usize;
        let mut overlap = 0usize;
        let mut qdot = zero;
        let mut norm2 = zero;
        for &t in &present {
            let c = counts[t];
            let term = &self.vocab[t];
            if term.query_count > 0 {
                covered += 1;
                in_query_positions += c;
                overlap += c.min(term.query_count);
            }
            let ct = F::from_count(c);
            qdot = qdot + ct * term.query_dot;
            let row = &self.gram[t * u..(t + 1) * u];
            let inner = present
                .iter()
                .fold(zero, |acc, &s| acc + F::from_count(counts[s]) * row[s]);
            norm2 = norm2 + ct * inner;
        }
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                zero
            } else {
                F::from_count(num) / F::from_count(den)
            }
        };
        let cos = if self.query_norm > zero && norm2 > zero {
            (qdot / (self.query_norm * norm2.sqrt()))
                .max(-F::one())
                .min(F::one())
        } else {
            zero
        };

        FeatureVector(vec![
            bm25,
            ratio(covered, self.query_distinct),
            ratio(in_query_positions, kept_len),
            ratio(overlap, self.query_len),
            cos,
            F::one(),
        ])
    }
}

/// A trained [`LinearScorer`] bound to its feature extractor.
#[derive(Clone, Copy)]
pub struct LocalScorer<'a, F: Scalar> {
    pub model: &'a LinearScorer<F>,
    pub features: FeatureExtractor<'a, F>,
}

impl<'a, F: Scalar> LocalScorer<'a, F> {
    pub fn new(model: &'a LinearScorer<F>, features: FeatureExtractor<'a, F>) -> Self {
        Self { model, features }
    }
}

struct PreparedGame<'a, F: Scalar> {
    model: &'a LinearScorer<F>,
    pair: PreparedPair<F>,
}

impl<F: Scalar> MaskedValue<F> for PreparedGame<'_, F> {
    fn players(&self) -> usize {
        self.pair.n_tokens()
    }

    fn value(&self, keep: &[bool]) -> Result<F, ScoreError> {
        self.model.score(&self.pair.features(keep)?)
    }
}

impl<F: Scalar> RankScorer<F> for LocalScorer<'_, F> {
    fn score(&self, query: &Query, item: &ResponseItem) -> Result<F, ScoreError> {
        self.model.score(&self.features.extract(query, item))
    }

    fn score_masked(
        &self,
        query: &Query,
        item: &ResponseItem,
        keep: &[bool],
    ) -> Result<F, ScoreError> {
        self.model
            .score(&self.features.prepare(query, item).features(keep)?)
    }

    fn masked_game<'s>(
        &'s self,
        query: &'s Query,
        item: &'s ResponseItem,
    ) -> Result<Box<dyn MaskedValue<F> + 's>, ScoreError> {
        Ok(prepared_game(self.model, &self.features, query, item))
    }
}

/// The fast coalition game of a linear model on one pair.
pub fn prepared_game<'a, F: Scalar>(
    model: &'a LinearScorer<F>,
    features: &FeatureExtractor<'_, F>,
    query: &Query,
    item: &ResponseItem,
) -> Box<dyn MaskedValue<F> + 'a> {
    Box::new(PreparedGame {
        model,
        pair: features.prepare(query, item),
    })
}

/// Plain BM25 as a scorer; the first-stage baseline.
#[derive(Clone, Copy)]
pub struct Bm25Scorer<'a, F: Scalar> {
    pub index: &'a InvertedIndex,
    pub params: Bm25Params<F>,
}

impl<F: Scalar> RankScorer<F> for Bm25Scorer<'_, F> {
    fn score(&self, query: &Query, item: &ResponseItem) -> Result<F, ScoreError> {
        let bm25 = LinearScorer {
            weights: vec![F::one()],
            feature_spec: "bm25".into(),
        };
        let pair = self.prepare(query, item);
        bm25.score_slice(&pair.features_all().0[..1])
    }
}

impl<F: Scalar> Bm25Scorer<'_, F> {
    fn prepare(&self, query: &Query, item: &ResponseItem) -> PreparedPair<F> {
        struct NoEmbedding;
        impl<F: Scalar> EmbeddingProvider<F> for NoEmbedding {
            fn dim(&self) -> usize {
                0
            }
            fn embed(&self, _: &str) -> Vec<F> {
                Vec::new()
            }
        }
        FeatureExtractor::new(self.index, self.params, &NoEmbedding).prepare(query, item)
    }
}

/// Scores by looking up known grades; the perfect-agreement reference.
#[derive(Clone, Debug, Default)]
pub struct OracleScorer {
    grades: HashMap<(String, String), u8>,
}

impl OracleScorer {
    pub fn from_rankings(data: &[crate::corpus::ExpertRanking]) -> Self {
        let grades = data
            .iter()
            .flat_map(|r| {
                r.judged
                    .iter()
                    .map(move |j| ((r.query.id.clone(), j.item.id.clone()), j.relevance))
            })
            .collect();
        Self { grades }
    }
}

impl<F: Scalar> RankScorer<F> for OracleScorer {
    fn score(&self, query: &Query, item: &ResponseItem) -> Result<F, ScoreError> {
        self.grades
            .get(&(query.id.clone(), item.id.clone()))
            .map(|&g| F::from_count(g as usize))
            .ok_or_else(|| ScoreError::Unknown {
                query: query.id.clone(),
                item: item.id.clone(),
            })
    }
}

/// The same score for every pair.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantScorer<F>(pub F);

impl<F: Scalar> RankScorer<F> for ConstantScorer<F> {
    fn score(&self, _: &Query, _: &ResponseItem) -> Result<F, ScoreError> {
        Ok(self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteScorerConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    #[serde(flatten)]
    pub retry: RetryPolicy,
    /// Environment variable holding a bearer token, if any.
    pub api_key_env: Option<String>,
}

impl Default for RemoteScorerConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/score".into(),
            model: "ranker".into(),
            timeout_ms: 30_000,
            retry: RetryPolicy::default(),
            api_key_env: None,
        }
    }
}

/// A served model as scorer: `POST {query, url, summary}` → `{score}`.
///
/// The model name travels in the `X-Model` header so the body matches the
/// wire format exactly.
pub struct RemoteScorer {
    cfg: RemoteScorerConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    query: &'a str,
    url: &'a str,
    summary: &'a str,
}

fn parse_score(body: &str) -> Result<f64, String> {
    let v: serde_json::Value =
        serde_json::from_str(body.trim()).map_err(|e| format!("not JSON: {e}"))?;
    let n = match &v {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::Object(o) => o.get("score").and_then(serde_json::Value::as_f64),
        _ => None,
    };
    match n {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(format!("no numeric `score` in {body:?}")),
    }
}

impl RemoteScorer {
    pub fn new(cfg: RemoteScorerConfig) -> Result<Self, ScoreError> {
        let client = build_client(Duration::from_millis(cfg.timeout_ms))?;
        let token = cfg
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok());
        Ok(Self { cfg, client, token })
    }
}

impl<F: Scalar> RankScorer<F> for RemoteScorer {
    fn score(&self, query: &Query, item: &ResponseItem) -> Result<F, ScoreError> {
        let body = serde_json::to_value(ScoreRequest {
            query: &query.text,
            url: &item.url,
            summary: &item.summary,
        })
        .expect("serializable request");
        let x = post_json_with_retry(
            &self.client,
            &self.cfg.endpoint,
            self.token.as_deref(),
            &[("X-Model", self.cfg.model.as_str())],
            &body,
            &self.cfg.retry,
            parse_score,
        )?;
        Ok(F::lit(x))
    }
}
