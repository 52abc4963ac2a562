//! The four training regimes on a [`LinearScorer`].
//!
//! All objectives are means over examples, minimized by seeded mini-batch
//! gradient descent. With `d = f(pos) − f(neg)`:
//!
//! | objective | per-example loss |
//! |-----------|------------------|
//! | `pointwise_sft` | `(θ·f − rel/9)²` |
//! | `pairwise_reward` | `−ln σ(θ·d)` |
//! | `pairwise_dpo` | `−ln σ(β (θ − θ_ref)·d)` |
//! | `ppo_proximal` | `−ln σ(θ·d')` plus `λ‖θ − θ_ref‖²` on the whole objective |
//!
//! For PPO, `d'` is `d` reoriented so the reward model prefers its first item,
//! and the quadratic penalty is applied as an exact proximal step after each
//! gradient step on the surrogate. That keeps large `λ` stable.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ExpertRanking, PreferencePair, Query, ResponseItem};
use crate::scalar::{dot, sigmoid, softplus, Scalar};
use crate::scorer::{FeatureExtractor, LinearScorer, RankScorer, ScoreError, FEATURE_DIM};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrainError {
    #[error("no training examples")]
    EmptyData,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}; lower the learning rate")]
    NonFinite { epoch: usize, batch: usize },
    #[error("unknown objective `{0}` (expected pointwise_sft, pairwise_reward, pairwise_dpo or ppo_proximal)")]
    UnknownObjective(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    #[default]
    PointwiseSft,
    PairwiseReward,
    PairwiseDpo,
    PpoProximal,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::PointwiseSft,
        ObjectiveKind::PairwiseReward,
        ObjectiveKind::PairwiseDpo,
        ObjectiveKind::PpoProximal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::PointwiseSft => "pointwise_sft",
            ObjectiveKind::PairwiseReward => "pairwise_reward",
            ObjectiveKind::PairwiseDpo => "pairwise_dpo",
            ObjectiveKind::PpoProximal => "ppo_proximal",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveKind {
    type Err = TrainError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| TrainError::UnknownObjective(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar", default)]
pub struct TrainConfig<F: Scalar> {
    pub learning_rate: F,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta: F,
    pub lambda_prox: F,
    pub objective: ObjectiveKind,
    /// Recorded for fidelity with the LLM setting; the linear scorer ignores it.
    pub max_seq_len: usize,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        Self {
            learning_rate: F::lit(1e-2),
            ..Self::paper()
        }
    }
}

impl<F: Scalar> TrainConfig<F> {
    /// The LLM fine-tuning hyperparameters: lr 2e-5, 8 epochs, batch 4.
    pub fn paper() -> Self {
        Self {
            learning_rate: F::lit(2e-5),
            epochs: 8,
            batch_size: 4,
            seed: 0,
            beta: F::one(),
            lambda_prox: F::lit(0.1),
            objective: ObjectiveKind::PointwiseSft,
            max_seq_len: 2048,
        }
    }

    /// A zero learning rate and zero epochs are accepted; both leave the
    /// weights at their initialization.
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= F::zero()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.beta.is_finite() && self.beta > F::zero()) {
            return bad("beta must be finite and > 0");
        }
        if !(self.lambda_prox.is_finite() && self.lambda_prox >= F::zero()) {
            return bad("lambda_prox must be finite and >= 0");
        }
        Ok(())
    }
}

/// One regression example; `group` ties examples of the same query together.
#[derive(Clone, Debug, PartialEq)]
pub struct PointExample<F> {
    pub features: Vec<F>,
    pub target: F,
    pub group: usize,
}

enum Terms<F> {
    Squared(Vec<PointExample<F>>),
    Logistic {
        diffs: Vec<Vec<F>>,
        beta: F,
        anchor: Option<Vec<F>>,
    },
}

/// A differentiable training objective over fixed feature data.
pub struct Objective<F> {
    pub kind: ObjectiveKind,
    dim: usize,
    terms: Terms<F>,
    proximity: Option<(F, Vec<F>)>,
}

fn check_dims<F>(dim: usize, rows: impl IntoIterator<Item = usize>) -> Result<(), ScoreError> {
    for got in rows {
        if got != dim {
            return Err(ScoreError::Dimension { expected: dim, got });
        }
    }
    Ok(())
}

impl<F: Scalar> Objective<F> {
    pub fn pointwise(dim: usize, examples: Vec<PointExample<F>>) -> Result<Self, TrainError> {
        check_dims::<F>(dim, examples.iter().map(|e| e.features.len()))?;
        Ok(Self {
            kind: ObjectiveKind::PointwiseSft,
            dim,
            terms: Terms::Squared(examples),
            proximity: None,
        })
    }

    pub fn reward(dim: usize, diffs: Vec<Vec<F>>) -> Result<Self, TrainError> {
        check_dims::<F>(dim, diffs.iter().map(Vec::len))?;
        Ok(Self {
            kind: ObjectiveKind::PairwiseReward,
            dim,
            terms: Terms::Logistic {
                diffs,
                beta: F::one(),
                anchor: None,
            },
            proximity: None,
        })
    }

    pub fn dpo(diffs: Vec<Vec<F>>, beta: F, reference: Vec<F>) -> Result<Self, TrainError> {
        let dim = reference.len();
        check_dims::<F>(dim, diffs.iter().map(Vec::len))?;
        Ok(Self {
            kind: ObjectiveKind::PairwiseDpo,
            dim,
            terms: Terms::Logistic {
                diffs,
                beta,
                anchor: Some(reference),
            },
            proximity: None,
        })
    }

    /// `diffs` must already be oriented by the reward model.
    pub fn ppo(diffs: Vec<Vec<F>>, lambda: F, reference: Vec<F>) -> Result<Self, TrainError> {
        let dim = reference.len();
        check_dims::<F>(dim, diffs.iter().map(Vec::len))?;
        Ok(Self {
            kind: ObjectiveKind::PpoProximal,
            dim,
            terms: Terms::Logistic {
                diffs,
                beta: F::one(),
                anchor: None,
            },
            proximity: Some((lambda, reference)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        match &self.terms {
            Terms::Squared(e) => e.len(),
            Terms::Logistic { diffs, .. } => diffs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn proximity(&self) -> Option<(F, &[F])> {
        self.proximity.as_ref().map(|(l, c)| (*l, c.as_slice()))
    }

    /// Data term averaged over `idx`, accumulating its gradient into `grad`.
    /// An empty batch contributes zero loss and zero gradient.
    fn batch(&self, w: &[F], idx: &[usize], grad: &mut [F]) -> F {
        grad.iter_mut().for_each(|g| *g = F::zero());
        if idx.is_empty() {
            return F::zero();
        }
        let n = F::from_count(idx.len());
        let mut loss = F::zero();
        match &self.terms {
            Terms::Squared(ex) => {
                let two = F::lit(2.0);
                for &i in idx {
                    let e = &ex[i];
                    let r = dot(w, &e.features) - e.target;
                    loss = loss + r * r;
                    for (g, &x) in grad.iter_mut().zip(&e.features) {
                        *g = *g + two * r * x / n;
                    }
                }
            }
            Terms::Logistic {
                diffs,
                beta,
                anchor,
            } => {
                for &i in idx {
                    let d = &diffs[i];
                    let m = match anchor {
                        Some(a) => dot(w, d) - dot(a, d),
                        None => dot(w, d),
                    };
                    let z = *beta * m;
                    loss = loss + softplus(-z);
                    let coef = -*beta * sigmoid(-z) / n;
                    for (g, &x) in grad.iter_mut().zip(d) {
                        *g = *g + coef * x;
                    }
                }
            }
        }
        loss / n
    }

    fn proximity_value(&self, w: &[F]) -> F {
        match &self.proximity {
            Some((lambda, c)) => {
                *lambda
                    * w.iter()
                        .zip(c)
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum::<F>()
            }
            None => F::zero(),
        }
    }

    /// Per-pair logits `β·margin` (pairwise objectives only).
    pub fn logits(&self, w: &[F]) -> Vec<F> {
        match &self.terms {
            Terms::Squared(_) => Vec::new(),
            Terms::Logistic {
                diffs,
                beta,
                anchor,
            } => diffs
                .iter()
                .map(|d| {
                    let m = match anchor {
                        Some(a) => dot(w, d) - dot(a, d),
                        None => dot(w, d),
                    };
                    *beta * m
                })
                .collect(),
        }
    }

    /// Full objective: mean data loss plus any proximity penalty.
    pub fn loss(&self, w: &[F]) -> F {
        let all: Vec<usize> = (0..self.len()).collect();
        let mut g = vec![F::zero(); self.dim];
        self.batch(w, &all, &mut g) + self.proximity_value(w)
    }

    /// Analytic gradient of [`Objective::loss`].
    pub fn gradient(&self, w: &[F]) -> Vec<F> {
        let all: Vec<usize> = (0..self.len()).collect();
        let mut g = vec![F::zero(); self.dim];
        self.batch(w, &all, &mut g);
        if let Some((lambda, c)) = &self.proximity {
            let two = F::lit(2.0);
            for ((g, &a), &b) in g.iter_mut().zip(w).zip(c) {
                *g = *g + two * *lambda * (a - b);
            }
        }
        g
    }

    /// Pairwise accuracy on the objective's own data (pairwise objectives),
    /// or on within-group pairs with distinct targets (pointwise).
    pub fn accuracy(&self, w: &[F]) -> F {
        match &self.terms {
            Terms::Logistic { diffs, .. } => diff_accuracy(w, diffs),
            Terms::Squared(ex) => diff_accuracy(w, &group_diffs(ex)),
        }
    }
}

/// Feature differences `f(a) − f(b)` for every within-group pair with
/// `target(a) > target(b)`.
pub fn group_diffs<F: Scalar>(ex: &[PointExample<F>]) -> Vec<Vec<F>> {
    let mut out = Vec::new();
    for (i, a) in ex.iter().enumerate() {
        for b in &ex[i + 1..] {
            if a.group != b.group || a.target == b.target {
                continue;
            }
            let (p, n) = if a.target > b.target { (a, b) } else { (b, a) };
            out.push(sub(&p.features, &n.features));
        }
    }
    out
}

pub fn sub<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Fraction of differences with positive score margin; ties count ½.
/// An empty set scores ½.
pub fn diff_accuracy<F: Scalar>(w: &[F], diffs: &[Vec<F>]) -> F {
    if diffs.is_empty() {
        return F::lit(0.5);
    }
    let half = F::lit(0.5);
    let hits = diffs
        .iter()
        .map(|d| {
            let m = dot(w, d);
            if m > F::zero() {
                F::one()
            } else if m == F::zero() {
                half
            } else {
                F::zero()
            }
        })
        .sum::<F>();
    hits / F::from_count(diffs.len())
}

/// Fraction of pairs the scorer orders correctly; ties count ½.
pub fn pairwise_accuracy<F: Scalar, S: RankScorer<F> + ?Sized>(
    scorer: &S,
    pairs: &[PreferencePair],
) -> Result<F, ScoreError> {
    if pairs.is_empty() {
        return Ok(F::lit(0.5));
    }
    let half = F::lit(0.5);
    let mut hits = F::zero();
    for p in pairs {
        let sp = scorer.score(&p.query, &p.positive)?;
        let sn = scorer.score(&p.query, &p.negative)?;
        hits = hits
            + if sp > sn {
                F::one()
            } else if sp == sn {
                half
            } else {
                F::zero()
            };
    }
    Ok(hits / F::from_count(pairs.len()))
}

/// Largest coordinate-wise relative error between the analytic gradient and
/// central finite differences with step `epsilon`.
///
/// Relative error is `|a − n| / max(|a|, |n|, 1e-7)`.
pub fn gradient_check<F: Scalar>(objective: &Objective<F>, w: &[F], epsilon: F) -> F {
    let analytic = objective.gradient(w);
    let floor = F::lit(1e-7);
    let two = F::lit(2.0);
    let mut worst = F::zero();
    let mut probe = w.to_vec();
    for (j, &a) in analytic.iter().enumerate() {
        let orig = probe[j];
        probe[j] = orig + epsilon;
        let up = objective.loss(&probe);
        probe[j] = orig - epsilon;
        let down = objective.loss(&probe);
        probe[j] = orig;
        let numeric = (up - down) / (two * epsilon);
        let denom = a.abs().max(numeric.abs()).max(floor);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TrainReport<F: Scalar> {
    pub objective: ObjectiveKind,
    pub config: TrainConfig<F>,
    pub examples: usize,
    /// Full objective before the first update.
    pub initial_loss: F,
    /// Full objective after each epoch.
    pub epoch_losses: Vec<F>,
    /// Pairwise accuracy on the training data.
    pub accuracy: F,
    pub weights_before: Vec<F>,
    pub weights_after: Vec<F>,
}

impl<F: Scalar> TrainReport<F> {
    pub fn final_loss(&self) -> F {
        self.epoch_losses
            .last()
            .copied()
            .unwrap_or(self.initial_loss)
    }
}

/// Mini-batch gradient descent from `init`.
///
/// Each epoch draws a fresh permutation from one `ChaCha8Rng` seeded with
/// `cfg.seed`. The epoch loss is the full objective evaluated after the epoch.
pub fn fit<F: Scalar>(
    objective: &Objective<F>,
    init: &[F],
    cfg: &TrainConfig<F>,
) -> Result<TrainReport<F>, TrainError> {
    cfg.validate()?;
    check_dims::<F>(objective.dim(), [init.len()])?;
    let mut w = init.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..objective.len()).collect();
    let mut grad = vec![F::zero(); w.len()];
    let lr = cfg.learning_rate;
    let initial_loss = objective.loss(&w);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let l = objective.batch(&w, idx, &mut grad);
            if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::NonFinite { epoch, batch });
            }
            for (wi, &g) in w.iter_mut().zip(&grad) {
                *wi = *wi - lr * g;
            }
            if let Some((lambda, c)) = objective.proximity() {
                let k = F::lit(2.0) * lr * lambda;
                for (wi, &ci) in w.iter_mut().zip(c) {
                    *wi = (*wi + k * ci) / (F::one() + k);
                }
            }
        }
        let l = objective.loss(&w);
        if !l.is_finite() {
            return Err(TrainError::NonFinite {
                epoch,
                batch: order.len().div_ceil(cfg.batch_size),
            });
        }
        log::debug!("{} epoch {}: loss {}", objective.kind, epoch + 1, l);
        epoch_losses.push(l);
    }

    Ok(TrainReport {
        objective: objective.kind,
        config: TrainConfig {
            objective: objective.kind,
            ..cfg.clone()
        },
        examples: objective.len(),
        initial_loss,
        accuracy: objective.accuracy(&w),
        epoch_losses,
        weights_before: init.to_vec(),
        weights_after: w,
    })
}

/// Computes features once per distinct (query id, item id).
pub struct FeatureCache<'a, F: Scalar> {
    fx: FeatureExtractor<'a, F>,
    cache: HashMap<(String, String), Vec<F>>,
}

impl<'a, F: Scalar> FeatureCache<'a, F> {
    pub fn new(fx: FeatureExtractor<'a, F>) -> Self {
        Self {
            fx,
            cache: HashMap::new(),
        }
    }

    /// Fills the cache for all given pairs in parallel.
    pub fn warm<'b>(&mut self, pairs: impl IntoIterator<Item = (&'b Query, &'b ResponseItem)>) {
        let mut todo: Vec<(&Query, &ResponseItem)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (q, i) in pairs {
            let key = (q.id.clone(), i.id.clone());
            if !self.cache.contains_key(&key) && seen.insert(key) {
                todo.push((q, i));
            }
        }
        let fx = self.fx;
        let done: Vec<_> = todo
            .par_iter()
            .map(|(q, i)| ((q.id.clone(), i.id.clone()), fx.extract(q, i).0))
            .collect();
        self.cache.extend(done);
    }

    pub fn get(&mut self, q: &Query, i: &ResponseItem) -> Vec<F> {
        let fx = self.fx;
        self.cache
            .entry((q.id.clone(), i.id.clone()))
            .or_insert_with(|| fx.extract(q, i).0)
            .clone()
    }

    pub fn pair_diffs(&mut self, pairs: &[PreferencePair]) -> Vec<Vec<F>> {
        self.warm(
            pairs
                .iter()
                .flat_map(|p| [(&p.query, &p.positive), (&p.query, &p.negative)]),
        );
        pairs
            .iter()
            .map(|p| {
                let a = self.get(&p.query, &p.positive);
                let b = self.get(&p.query, &p.negative);
                sub(&a, &b)
            })
            .collect()
    }

    pub fn point_examples(&mut self, data: &[(Query, ResponseItem, u8)]) -> Vec<PointExample<F>> {
        self.warm(data.iter().map(|(q, i, _)| (q, i)));
        let mut groups: HashMap<String, usize> = HashMap::new();
        data.iter()
            .map(|(q, i, rel)| {
                let next = groups.len();
                let group = *groups.entry(q.id.clone()).or_insert(next);
                PointExample {
                    features: self.get(q, i),
                    target: F::from_count(*rel as usize) / F::from_count(9),
                    group,
                }
            })
            .collect()
    }
}

/// Flattens rankings into (query, item, relevance) examples.
pub fn pointwise_data(data: &[ExpertRanking]) -> Vec<(Query, ResponseItem, u8)> {
    data.iter()
        .flat_map(|r| {
            r.judged
                .iter()
                .map(move |j| (r.query.clone(), j.item.clone(), j.relevance))
        })
        .collect()
}

fn finish<F: Scalar>(report: TrainReport<F>) -> Result<(LinearScorer<F>, TrainReport<F>), TrainError> {
    let scorer = LinearScorer::new(report.weights_after.clone())?;
    Ok((scorer, report))
}

/// Regression of the score toward `relevance / 9`, starting from zero weights.
pub fn train_pointwise_sft<F: Scalar>(
    data: &[(Query, ResponseItem, u8)],
    features: &mut FeatureCache<'_, F>,
    cfg: &TrainConfig<F>,
) -> Result<(LinearScorer<F>, TrainReport<F>), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let obj = Objective::pointwise(FEATURE_DIM, features.point_examples(data))?;
    finish(fit(&obj, &vec![F::zero(); FEATURE_DIM], cfg)?)
}

/// Bradley–Terry reward model, starting from `init` (zero weights if `None`).
pub fn train_pairwise_reward<F: Scalar>(
    pairs: &[PreferencePair],
    features: &mut FeatureCache<'_, F>,
    cfg: &TrainConfig<F>,
    init: Option<&LinearScorer<F>>,
) -> Result<(LinearScorer<F>, TrainReport<F>), TrainError> {
    if pairs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let obj = Objective::reward(FEATURE_DIM, features.pair_diffs(pairs))?;
    let w0 = init.map_or_else(|| vec![F::zero(); FEATURE_DIM], |s| s.weights.clone());
    finish(fit(&obj, &w0, cfg)?)
}

/// Reference-anchored pairwise objective; θ starts at the reference.
pub fn train_pairwise_dpo<F: Scalar>(
    pairs: &[PreferencePair],
    features: &mut FeatureCache<'_, F>,
    cfg: &TrainConfig<F>,
    reference: &LinearScorer<F>,
) -> Result<(LinearScorer<F>, TrainReport<F>), TrainError> {
    if pairs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    check_dims::<F>(FEATURE_DIM, [reference.dim()])?;
    let obj = Objective::dpo(
        features.pair_diffs(pairs),
        cfg.beta,
        reference.weights.clone(),
    )?;
    finish(fit(&obj, &reference.weights, cfg)?)
}

/// Orients each difference so the reward model prefers the first item.
/// Pairs the reward model scores as ties keep their original orientation.
pub fn relabel_by_reward<F: Scalar>(diffs: Vec<Vec<F>>, reward: &[F]) -> Vec<Vec<F>> {
    diffs
        .into_iter()
        .map(|d| {
            if dot(reward, &d) < F::zero() {
                d.into_iter().map(|x| -x).collect()
            } else {
                d
            }
        })
        .collect()
}

/// Pairwise surrogate on reward-model preferences with a proximity penalty
/// toward `reference`; θ starts at the reference.
pub fn train_ppo_proximal<F: Scalar>(
    pairs: &[PreferencePair],
    features: &mut FeatureCache<'_, F>,
    cfg: &TrainConfig<F>,
    reward: &LinearScorer<F>,
    reference: &LinearScorer<F>,
) -> Result<(LinearScorer<F>, TrainReport<F>), TrainError> {
    if pairs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    reward.check_compatible(reference)?;
    check_dims::<F>(FEATURE_DIM, [reference.dim()])?;
    let diffs = relabel_by_reward(features.pair_diffs(pairs), &reward.weights);
    let obj = Objective::ppo(diffs, cfg.lambda_prox, reference.weights.clone())?;
    finish(fit(&obj, &reference.weights, cfg)?)
}

/// One row per epoch: `objective,epoch,loss`. Epoch 0 is the initial loss.
pub fn write_epoch_csv<F: Scalar, W: Write>(
    reports: &[TrainReport<F>],
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["objective", "epoch", "loss"])?;
    for r in reports {
        let losses = std::iter::once(r.initial_loss).chain(r.epoch_losses.iter().copied());
        for (e, l) in losses.enumerate() {
            w.write_record([r.objective.as_str(), &e.to_string(), &l.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per objective: `objective,loss,accuracy`.
pub fn write_summary_csv<F: Scalar, W: Write>(
    reports: &[TrainReport<F>],
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["objective", "loss", "accuracy"])?;
    for r in reports {
        w.write_record([
            r.objective.as_str(),
            &r.final_loss().to_string(),
            &r.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
