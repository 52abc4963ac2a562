//! Candidate re-ranking: score every candidate, sort, optionally truncate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetSplit, ExpertRanking, Query, ResponseItem};
use crate::scalar::Scalar;
use crate::scorer::{RankScorer, ScoreError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RerankError {
    #[error("no candidates to rerank for query `{0}`")]
    NoCandidates(String),
    #[error("truncation m_r={m_r} must be smaller than the candidate count {count}")]
    Truncation { m_r: usize, count: usize },
    #[error("non-finite score for item `{0}`")]
    NonFinite(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedEntry<F> {
    pub item: ResponseItem,
    pub score: F,
    /// 1-based.
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RerankedList<F> {
    pub query: Query,
    /// Anonymized user id; carried for provenance only.
    pub user: Option<String>,
    pub entries: Vec<RankedEntry<F>>,
    pub truncation: Option<usize>,
}

impl<F: Scalar> RerankedList<F> {
    pub fn items(&self) -> Vec<ResponseItem> {
        self.entries.iter().map(|e| e.item.clone()).collect()
    }

    pub fn record(&self) -> RerankedRecord<F> {
        RerankedRecord {
            query_id: self.query.id.clone(),
            query_text: self.query.text.clone(),
            user: self.user.clone(),
            truncation: self.truncation,
            entries: self
                .entries
                .iter()
                .map(|e| RecordEntry {
                    rank: e.rank,
                    item_id: e.item.id.clone(),
                    score: e.score,
                })
                .collect(),
        }
    }
}

/// Persisted form of a [`RerankedList`]: ids, ranks and full-precision scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RerankedRecord<F> {
    pub query_id: String,
    pub query_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub truncation: Option<usize>,
    pub entries: Vec<RecordEntry<F>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RecordEntry<F> {
    pub rank: usize,
    pub item_id: String,
    pub score: F,
}

impl<F: Scalar> RerankedRecord<F> {
    /// Rebuilds the list, resolving item ids with `lookup`.
    pub fn resolve(
        &self,
        lookup: impl Fn(&str) -> Option<ResponseItem>,
    ) -> Result<RerankedList<F>, String> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                lookup(&e.item_id)
                    .map(|item| RankedEntry {
                        item,
                        score: e.score,
                        rank: e.rank,
                    })
                    .ok_or_else(|| e.item_id.clone())
            })
            .collect::<Result<_, _>>()?;
        Ok(RerankedList {
            query: Query {
                id: self.query_id.clone(),
                text: self.query_text.clone(),
            },
            user: self.user.clone(),
            entries,
            truncation: self.truncation,
        })
    }
}

/// Orders indices by score descending; equal scores keep input order.
pub fn stable_order<F: Scalar>(scores: &[F]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Scores every candidate and returns them by descending score.
///
/// Ties keep the candidates' input order. With `m_r` set, only the first
/// `m_r` entries are kept, and `m_r` must be smaller than the candidate count.
pub fn rerank<F: Scalar, S: RankScorer<F> + ?Sized>(
    query: &Query,
    candidates: &[ResponseItem],
    scorer: &S,
    m_r: Option<usize>,
) -> Result<RerankedList<F>, RerankError> {
    if candidates.is_empty() {
        return Err(RerankError::NoCandidates(query.id.clone()));
    }
    if let Some(m_r) = m_r {
        if m_r >= candidates.len() {
            return Err(RerankError::Truncation {
                m_r,
                count: candidates.len(),
            });
        }
    }
    let scores = candidates
        .par_iter()
        .map(|c| {
            let s = scorer.score(query, c)?;
            if s.is_finite() {
                Ok(s)
            } else {
                Err(RerankError::NonFinite(c.id.clone()))
            }
        })
        .collect::<Result<Vec<F>, RerankError>>()?;

    let mut order = stable_order(&scores);
    if let Some(m_r) = m_r {
        order.truncate(m_r);
    }
    Ok(RerankedList {
        query: query.clone(),
        user: None,
        entries: order
            .into_iter()
            .enumerate()
            .map(|(r, i)| RankedEntry {
                item: candidates[i].clone(),
                score: scores[i],
                rank: r + 1,
            })
            .collect(),
        truncation: m_r,
    })
}

/// Reranks the judged items of every test ranking and pairs each result with
/// its ground truth.
pub fn rerank_against_experts<F: Scalar, S: RankScorer<F> + ?Sized>(
    split: &DatasetSplit,
    scorer: &S,
) -> Result<Vec<(RerankedList<F>, ExpertRanking)>, RerankError> {
    rerank_rankings(&split.test, scorer)
}

pub fn rerank_rankings<F: Scalar, S: RankScorer<F> + ?Sized>(
    rankings: &[ExpertRanking],
    scorer: &S,
) -> Result<Vec<(RerankedList<F>, ExpertRanking)>, RerankError> {
    rankings
        .iter()
        .map(|r| Ok((rerank(&r.query, &r.items(), scorer, None)?, r.clone())))
        .collect()
}
