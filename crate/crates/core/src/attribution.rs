//! Shapley token attribution for ranking scores.
//!
//! Players are the token positions of an item's summary; the value of a
//! coalition is the score with all other positions deleted. Exact values
//! enumerate every coalition:
//!
//! ```text
//! φ_i = Σ_{S ⊆ N∖{i}} |S|! (n − |S| − 1)! / n! · (f(S ∪ {i}) − f(S))
//! ```
//!
//! Longer items use permutation sampling: the mean marginal contribution of
//! each position over seeded random orderings.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Query, ResponseItem};
use crate::scalar::Scalar;
use crate::scorer::{MaskedValue, RankScorer, ScoreError};

/// Hard ceiling on exact enumeration regardless of configuration.
pub const MAX_EXACT_TOKENS: usize = 25;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AttributionError {
    #[error("{n} tokens exceed the exact limit of {limit}; use permutation sampling")]
    TooManyTokens { n: usize, limit: usize },
    #[error("invalid attribution config: {0}")]
    Config(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttributionConfig {
    pub exact_limit: usize,
    pub permutations: usize,
    pub seed: u64,
    pub top_k: usize,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            exact_limit: 14,
            permutations: 2000,
            seed: 0,
            top_k: 10,
        }
    }
}

impl AttributionConfig {
    pub fn validate(&self) -> Result<(), AttributionError> {
        let bad = |m: &str| Err(AttributionError::Config(m.to_string()));
        if self.exact_limit == 0 || self.exact_limit > MAX_EXACT_TOKENS {
            return bad("exact_limit must be in 1..=25");
        }
        if self.permutations == 0 {
            return bad("permutations must be >= 1");
        }
        if self.top_k == 0 {
            return bad("top_k must be >= 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sampled,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Sampled => "sampled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TokenValue<F> {
    pub token: String,
    pub position: usize,
    pub value: F,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct AttributionResult<F> {
    pub query: Query,
    pub item_id: String,
    pub url: String,
    /// One entry per token position, in position order.
    pub values: Vec<TokenValue<F>>,
    pub method: Method,
    pub samples: Option<usize>,
    /// `f(∅)`.
    pub base_value: F,
    /// `f(N)`.
    pub full_value: F,
}

impl<F: Scalar> AttributionResult<F> {
    pub fn total(&self) -> F {
        self.values.iter().map(|v| v.value).sum()
    }

    /// `Σφ − (f(N) − f(∅))`.
    pub fn efficiency_gap(&self) -> F {
        self.total() - (self.full_value - self.base_value)
    }

    /// Values summed by surface form, sorted like [`top_k_tokens`].
    pub fn aggregated(&self) -> Vec<(String, F)> {
        let mut first: BTreeMap<&str, (usize, F)> = BTreeMap::new();
        for v in &self.values {
            let e = first.entry(&v.token).or_insert((v.position, F::zero()));
            e.1 = e.1 + v.value;
        }
        let mut out: Vec<(usize, String, F)> = first
            .into_iter()
            .map(|(t, (p, v))| (p, t.to_string(), v))
            .collect();
        out.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        out.into_iter().map(|(_, t, v)| (t, v)).collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact Shapley values of an `n`-player game by full coalition enumeration.
///
/// Returns `(values, f(∅), f(N))`.
pub fn exact_values<F: Scalar>(
    game: &(dyn MaskedValue<F> + '_),
    limit: usize,
) -> Result<(Vec<F>, F, F), AttributionError> {
    let n = game.players();
    let limit = limit.min(MAX_EXACT_TOKENS);
    if n > limit {
        return Err(AttributionError::TooManyTokens { n, limit });
    }
    let coalitions = 1usize << n;
    let v: Vec<F> = (0..coalitions)
        .into_par_iter()
        .map(|s| {
            let keep: Vec<bool> = (0..n).map(|i| s >> i & 1 == 1).collect();
            game.value(&keep)
        })
        .collect::<Result<_, _>>()?;
    // weight(|S|) = |S|! (n − |S| − 1)! / n! = 1 / (n · C(n−1, |S|))
    let weights: Vec<F> = (0..n)
        .map(|s| F::lit(1.0 / (n as f64 * binomial(n - 1, s))))
        .collect();
    let phi = (0..n)
        .into_par_iter()
        .map(|i| {
            let bit = 1usize << i;
            (0..coalitions)
                .filter(|s| s & bit == 0)
                .fold(F::zero(), |acc, s| {
                    let size = s.count_ones() as usize;
                    acc + weights[size] * (v[s | bit] - v[s])
                })
        })
        .collect();
    Ok((phi, v[0], v[coalitions - 1]))
}

/// Permutation-sampling Shapley estimate.
///
/// Permutation `p` is drawn from `ChaCha8Rng::seed_from_u64(seed)` on stream
/// `p`, so results do not depend on thread scheduling. Per-permutation
/// contributions are summed in permutation order.
pub fn sampled_values<F: Scalar>(
    game: &(dyn MaskedValue<F> + '_),
    permutations: usize,
    seed: u64,
) -> Result<(Vec<F>, F, F), AttributionError> {
    if permutations == 0 {
        return Err(AttributionError::Config("permutations must be >= 1".into()));
    }
    let n = game.players();
    let base = game.value(&vec![false; n])?;
    let full = game.value(&vec![true; n])?;
    let runs: Vec<Vec<F>> = (0..permutations)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut keep = vec![false; n];
            let mut prev = base;
            let mut contrib = vec![F::zero(); n];
            for i in order {
                keep[i] = true;
                let v = game.value(&keep)?;
                contrib[i] = v - prev;
                prev = v;
            }
            Ok(contrib)
        })
        .collect::<Result<_, ScoreError>>()?;
    let mut phi = vec![F::zero(); n];
    for run in &runs {
        for (a, &c) in phi.iter_mut().zip(run) {
            *a = *a + c;
        }
    }
    let count = F::from_count(permutations);
    phi.iter_mut().for_each(|a| *a = *a / count);
    Ok((phi, base, full))
}

fn result<F: Scalar>(
    query: &Query,
    item: &ResponseItem,
    (phi, base, full): (Vec<F>, F, F),
    method: Method,
    samples: Option<usize>,
) -> AttributionResult<F> {
    AttributionResult {
        query: query.clone(),
        item_id: item.id.clone(),
        url: item.url.clone(),
        values: item
            .tokens
            .iter()
            .zip(phi)
            .enumerate()
            .map(|(position, (token, value))| TokenValue {
                token: token.clone(),
                position,
                value,
            })
            .collect(),
        method,
        samples,
        base_value: base,
        full_value: full,
    }
}

pub fn shapley_exact<F: Scalar, S: RankScorer<F> + ?Sized>(
    query: &Query,
    item: &ResponseItem,
    scorer: &S,
    cfg: &AttributionConfig,
) -> Result<AttributionResult<F>, AttributionError> {
    let game = scorer.masked_game(query, item)?;
    let vals = exact_values(game.as_ref(), cfg.exact_limit)?;
    Ok(result(query, item, vals, Method::Exact, None))
}

pub fn shapley_sampled<F: Scalar, S: RankScorer<F> + ?Sized>(
    query: &Query,
    item: &ResponseItem,
    scorer: &S,
    cfg: &AttributionConfig,
) -> Result<AttributionResult<F>, AttributionError> {
    let game = scorer.masked_game(query, item)?;
    let vals = sampled_values(game.as_ref(), cfg.permutations, cfg.seed)?;
    Ok(result(
        query,
        item,
        vals,
        Method::Sampled,
        Some(cfg.permutations),
    ))
}

/// Exact when the item has at most `exact_limit` tokens, sampled otherwise.
pub fn attribute<F: Scalar, S: RankScorer<F> + ?Sized>(
    query: &Query,
    item: &ResponseItem,
    scorer: &S,
    cfg: &AttributionConfig,
) -> Result<AttributionResult<F>, AttributionError> {
    cfg.validate()?;
    if item.tokens.len() <= cfg.exact_limit {
        shapley_exact(query, item, scorer, cfg)
    } else {
        shapley_sampled(query, item, scorer, cfg)
    }
}

/// The `k` highest-valued positions, by value descending then position.
pub fn top_k_tokens<F: Scalar>(result: &AttributionResult<F>, k: usize) -> Vec<(String, F)> {
    let mut v: Vec<&TokenValue<F>> = result.values.iter().collect();
    v.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.position.cmp(&b.position))
    });
    v.into_iter()
        .take(k)
        .map(|t| (t.token.clone(), t.value))
        .collect()
}

pub const REPORT_HEADER: [&str; 3] = ["token", "position", "value"];

/// Writes `token,position,value` rows sorted by value, preceded by `#`
/// comment lines carrying the query, item and method. Values use Rust's
/// shortest round-trip formatting, so they parse back bit-identically.
///
/// Read it back with a CSV reader configured with `comment(Some(b'#'))`.
pub fn write_report<F: Scalar, W: Write>(
    result: &AttributionResult<F>,
    mut out: W,
) -> Result<(), csv::Error> {
    let one_line = |s: &str| s.replace(['\n', '\r'], " ");
    writeln!(out, "# query_id: {}", one_line(&result.query.id))?;
    writeln!(out, "# query: {}", one_line(&result.query.text))?;
    writeln!(out, "# item_id: {}", one_line(&result.item_id))?;
    writeln!(out, "# url: {}", one_line(&result.url))?;
    writeln!(out, "# method: {}", result.method.as_str())?;
    writeln!(out, "# base_value: {}", result.base_value)?;
    writeln!(out, "# full_value: {}", result.full_value)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    let mut rows: Vec<&TokenValue<F>> = result.values.iter().collect();
    rows.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.position.cmp(&b.position))
    });
    for r in rows {
        w.write_record([r.token.as_str(), &r.position.to_string(), &r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the rows of a report written by [`write_report`].
pub fn read_report_rows<F: Scalar>(text: &str) -> Result<Vec<TokenValue<F>>, csv::Error> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    r.records()
        .map(|rec| {
            let rec = rec?;
            let parse_err = |what: &str| {
                csv::Error::from(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("bad {what} in row {:?}", rec),
                ))
            };
            Ok(TokenValue {
                token: rec[0].to_string(),
                position: rec[1].parse().map_err(|_| parse_err("position"))?,
                value: rec[2].parse::<f64>().map(F::lit).map_err(|_| parse_err("value"))?,
            })
        })
        .collect()
}
