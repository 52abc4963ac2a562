//! Dataset model: queries, judged response items, splits and preference pairs.
//!
//! A dataset file is UTF-8 JSON Lines, one expert ranking per line:
//!
//! ```text
//! {"query_id": "q001", "query_text": "Aerosol Concentration dataset",
//!  "items": [{"item_id": "...", "url": "...", "summary": "...", "relevance": 7}, ...]}
//! ```
//!
//! Relevance grades run from 0 (unrelated) to 9 (highly relevant).

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::retrieval::tokenize;

/// Highest expert grade.
pub const MAX_RELEVANCE: u8 = 9;

/// Judged list length of the collected rankings.
pub const RANKING_LENGTH: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
    #[error("cannot split an empty dataset")]
    EmptyDataset,
    #[error("ranking for query `{query}` has {count} judged item(s); at least 2 are needed for a preference pair")]
    TooFewItems { query: String, count: usize },
    #[error("split references unknown query id `{0}`")]
    UnknownQuery(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, CorpusError> {
        let q = Self {
            id: id.into(),
            text: text.into(),
        };
        if q.text.trim().is_empty() {
            return Err(CorpusError::Invalid {
                what: "query",
                message: format!("query `{}` has empty text", q.id),
            });
        }
        Ok(q)
    }
}

/// A retrievable document. `tokens` is always `tokenize(summary)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawItem", into = "RawItem")]
pub struct ResponseItem {
    pub id: String,
    pub url: String,
    pub summary: String,
    pub tokens: Vec<String>,
}

impl ResponseItem {
    pub fn new(
        id: impl Into<String>,
        url: impl Into<String>,
        summary: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let summary = summary.into();
        let id = id.into();
        if summary.trim().is_empty() {
            return Err(CorpusError::Invalid {
                what: "item",
                message: format!("item `{id}` has an empty summary"),
            });
        }
        Ok(Self {
            tokens: tokenize(&summary),
            id,
            url: url.into(),
            summary,
        })
    }

    /// The item with only the tokens whose mask entry is `true`.
    ///
    /// The summary becomes the kept tokens joined by single spaces, which
    /// tokenizes back to exactly the kept tokens. An all-false mask yields a
    /// zero-token item.
    pub fn restricted(&self, keep: &[bool]) -> Self {
        let tokens: Vec<String> = self
            .tokens
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(t, _)| t.clone())
            .collect();
        Self {
            id: self.id.clone(),
            url: self.url.clone(),
            summary: tokens.join(" "),
            tokens,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawItem {
    #[serde(rename = "item_id")]
    id: String,
    url: String,
    summary: String,
}

impl TryFrom<RawItem> for ResponseItem {
    type Error = CorpusError;
    fn try_from(r: RawItem) -> Result<Self, Self::Error> {
        ResponseItem::new(r.id, r.url, r.summary)
    }
}

impl From<ResponseItem> for RawItem {
    fn from(i: ResponseItem) -> Self {
        RawItem {
            id: i.id,
            url: i.url,
            summary: i.summary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub item: ResponseItem,
    pub relevance: u8,
}

/// One query with its expert-graded items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpertRanking {
    pub query: Query,
    pub judged: Vec<Judgment>,
}

impl ExpertRanking {
    pub fn relevance_of(&self, item_id: &str) -> Option<u8> {
        self.judged
            .iter()
            .find(|j| j.item.id == item_id)
            .map(|j| j.relevance)
    }

    pub fn items(&self) -> Vec<ResponseItem> {
        self.judged.iter().map(|j| j.item.clone()).collect()
    }

    /// Judgments ordered by relevance descending, ties by ascending item id.
    pub fn sorted_by_relevance(&self) -> Vec<&Judgment> {
        let mut v: Vec<&Judgment> = self.judged.iter().collect();
        v.sort_by(|a, b| {
            b.relevance
                .cmp(&a.relevance)
                .then_with(|| a.item.id.cmp(&b.item.id))
        });
        v
    }

    /// The expert's top-ranked item.
    pub fn expert_top(&self) -> Option<&ResponseItem> {
        self.sorted_by_relevance().first().map(|j| &j.item)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferencePair {
    pub query: Query,
    pub positive: ResponseItem,
    pub negative: ResponseItem,
}

/// Anonymized user population; only the count is kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSet {
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<ExpertRanking>,
    pub validation: Vec<ExpertRanking>,
    pub test: Vec<ExpertRanking>,
    pub seed: u64,
}

/// Query ids of each partition, as persisted between pipeline stages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn manifest(&self) -> SplitManifest {
        let ids = |v: &[ExpertRanking]| v.iter().map(|r| r.query.id.clone()).collect();
        SplitManifest {
            seed: self.seed,
            train: ids(&self.train),
            validation: ids(&self.validation),
            test: ids(&self.test),
        }
    }

    /// Rebuilds a split from persisted query ids.
    pub fn from_manifest(
        data: &[ExpertRanking],
        manifest: &SplitManifest,
    ) -> Result<Self, CorpusError> {
        let by_id: BTreeMap<&str, &ExpertRanking> =
            data.iter().map(|r| (r.query.id.as_str(), r)).collect();
        let pick = |ids: &[String]| -> Result<Vec<ExpertRanking>, CorpusError> {
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|r| (*r).clone())
                        .ok_or_else(|| CorpusError::UnknownQuery(id.clone()))
                })
                .collect()
        };
        Ok(Self {
            train: pick(&manifest.train)?,
            validation: pick(&manifest.validation)?,
            test: pick(&manifest.test)?,
            seed: manifest.seed,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJudgment {
    item_id: String,
    url: String,
    summary: String,
    relevance: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRanking {
    query_id: String,
    query_text: String,
    items: Vec<RawJudgment>,
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses and validates dataset text. Blank lines are skipped; line numbers are 1-based.
pub fn parse_dataset(text: &str) -> Result<Vec<ExpertRanking>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRanking = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let invalid = |message: String| CorpusError::Validation {
            line: line_no,
            message,
        };
        if !seen.insert(raw.query_id.clone()) {
            return Err(invalid(format!("duplicate query id `{}`", raw.query_id)));
        }
        let query = Query::new(raw.query_id, raw.query_text).map_err(|e| invalid(e.to_string()))?;
        let mut item_ids = HashSet::new();
        let mut judged = Vec::with_capacity(raw.items.len());
        for j in raw.items {
            if !(0..=i64::from(MAX_RELEVANCE)).contains(&j.relevance) {
                return Err(invalid(format!(
                    "item `{}` has relevance {} outside [0, {MAX_RELEVANCE}]",
                    j.item_id, j.relevance
                )));
            }
            if !item_ids.insert(j.item_id.clone()) {
                return Err(invalid(format!(
                    "item `{}` judged twice for query `{}`",
                    j.item_id, query.id
                )));
            }
            let item =
                ResponseItem::new(j.item_id, j.url, j.summary).map_err(|e| invalid(e.to_string()))?;
            judged.push(Judgment {
                item,
                relevance: j.relevance as u8,
            });
        }
        if judged.len() != RANKING_LENGTH {
            log::warn!(
                "line {line_no}: query `{}` has {} judged items (expected {RANKING_LENGTH})",
                query.id,
                judged.len()
            );
        }
        out.push(ExpertRanking { query, judged });
    }
    Ok(out)
}

/// Loads a dataset file, preserving record order.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<ExpertRanking>, CorpusError> {
    parse_dataset(&read_text(path.as_ref())?)
}

/// All distinct items referenced by a dataset, in first-appearance order.
///
/// The same item id with two different texts is a validation error.
pub fn corpus_items(data: &[ExpertRanking]) -> Result<Vec<ResponseItem>, CorpusError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out: Vec<ResponseItem> = Vec::new();
    for r in data {
        for j in &r.judged {
            match seen.get(&j.item.id) {
                Some(&i) if out[i] != j.item => {
                    return Err(CorpusError::Invalid {
                        what: "corpus",
                        message: format!("item `{}` appears with differing content", j.item.id),
                    })
                }
                Some(_) => {}
                None => {
                    seen.insert(j.item.id.clone(), out.len());
                    out.push(j.item.clone());
                }
            }
        }
    }
    Ok(out)
}

/// Loads a corpus file: JSON Lines of `{item_id, url, summary}` objects.
///
/// Full dataset records are accepted too and contribute their items; any
/// `relevance` field is ignored.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<ResponseItem>, CorpusError> {
    #[derive(Deserialize)]
    struct LooseItem {
        item_id: String,
        url: String,
        summary: String,
    }
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Line {
        Ranking { items: Vec<LooseItem> },
        Item(LooseItem),
    }

    let text = read_text(path.as_ref())?;
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let loose = match parsed {
            Line::Ranking { items } => items,
            Line::Item(i) => vec![i],
        };
        for l in loose {
            let item = ResponseItem::new(l.item_id, l.url, l.summary).map_err(|e| {
                CorpusError::Validation {
                    line: idx + 1,
                    message: e.to_string(),
                }
            })?;
            if seen.insert(item.id.clone()) {
                items.push(item);
            }
        }
    }
    Ok(items)
}

/// Seeded 80:10:10 partition; the rounding remainder goes to train.
pub fn split_dataset(data: &[ExpertRanking], seed: u64) -> Result<DatasetSplit, CorpusError> {
    if data.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let n = data.len();
    let tenth = n / 10;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_train = n - 2 * tenth;
    let take = |range: std::ops::Range<usize>| -> Vec<ExpertRanking> {
        order[range].iter().map(|&i| data[i].clone()).collect()
    };
    Ok(DatasetSplit {
        train: take(0..n_train),
        validation: take(n_train..n_train + tenth),
        test: take(n_train + tenth..n),
        seed,
    })
}

/// Top-half × bottom-half preference pairs for one ranking.
///
/// Items are ordered by relevance (descending, ties by item id). For `m`
/// judged items the first `⌈m/2⌉` are positives and the remaining `⌊m/2⌋`
/// negatives; a 10-item ranking gives 25 pairs. Pairs whose two grades are
/// equal carry no preference and are dropped. Output is positive-major.
pub fn build_preference_pairs(r: &ExpertRanking) -> Result<Vec<PreferencePair>, CorpusError> {
    let m = r.judged.len();
    if m < 2 {
        return Err(CorpusError::TooFewItems {
            query: r.query.id.clone(),
            count: m,
        });
    }
    let sorted = r.sorted_by_relevance();
    let (top, bottom) = sorted.split_at(m.div_ceil(2));
    let mut pairs = Vec::with_capacity(top.len() * bottom.len());
    for p in top {
        for n in bottom {
            if p.relevance > n.relevance {
                pairs.push(PreferencePair {
                    query: r.query.clone(),
                    positive: p.item.clone(),
                    negative: n.item.clone(),
                });
            }
        }
    }
    Ok(pairs)
}

/// Preference pairs of every ranking, in dataset order.
pub fn build_all_pairs(data: &[ExpertRanking]) -> Result<Vec<PreferencePair>, CorpusError> {
    let mut out = Vec::new();
    for r in data {
        out.extend(build_preference_pairs(r)?);
    }
    Ok(out)
}

/// Number of (query, item, grade) examples: the sum of judged-list lengths.
pub fn count_pointwise_examples(data: &[ExpertRanking]) -> usize {
    data.iter().map(|r| r.judged.len()).sum()
}
