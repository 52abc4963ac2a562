//! Pipeline stages. Each stage reads the previous stage's files from the
//! output directory and writes its own atomically.
//!
//! | stage | writes |
//! |-------|--------|
//! | split | `split.json` |
//! | train | `scorer_<objective>.json`, `train_report_<objective>.json`, `train_epochs_<objective>.csv`, `train_summary.csv` |
//! | rerank | `reranked_<scorer>.jsonl` |
//! | attribute | `attributions_<scorer>/<query>__<item>.{json,csv}` |
//! | explain | `explanations_<scorer>.jsonl`, `prompts/*.txt` when offline |
//! | eval | `metrics_<scorer>.csv`, `metrics_<scorer>.json` |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context as _, Result};
use rerank_core::attribution::{attribute, write_report, AttributionResult};
use rerank_core::corpus::{
    build_all_pairs, corpus_items, count_pointwise_examples, load_corpus, load_dataset,
    parse_dataset, split_dataset, DatasetSplit, ExpertRanking, Query, ResponseItem,
    SplitManifest,
};
use rerank_core::explain::{
    explain_ranked_list, ExplanationRecord, Explainer, PromptTemplate, Variant,
};
use rerank_core::fsutil::{file_stem, write_atomic};
use rerank_core::metrics::{evaluate_run, write_table_csv, HashedNgramEmbedding, MetricReport};
use rerank_core::rerank::{rerank, RerankedList, RerankedRecord};
use rerank_core::retrieval::{retrieve_topk, InvertedIndex};
use rerank_core::scorer::{
    prepared_game, Bm25Scorer, FeatureExtractor, LinearScorer, MaskedValue, OracleScorer,
    RankScorer, ScoreError,
};
use rerank_core::training::{
    pairwise_accuracy, pointwise_data, train_pairwise_dpo, train_pairwise_reward,
    train_pointwise_sft, train_ppo_proximal, write_epoch_csv, write_summary_csv, FeatureCache,
    ObjectiveKind, TrainConfig, TrainReport,
};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;

pub const SPLIT_FILE: &str = "split.json";
pub const TRAIN_SUMMARY_FILE: &str = "train_summary.csv";

/// Dataset accounting printed by `ingest`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub rankings: usize,
    pub pointwise: usize,
    pub pairs: usize,
}

impl std::fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "rankings={} pointwise={} pairs={}",
            self.rankings, self.pointwise, self.pairs
        )
    }
}

pub fn summarize(data: &[ExpertRanking]) -> Result<IngestSummary> {
    Ok(IngestSummary {
        rankings: data.len(),
        pointwise: count_pointwise_examples(data),
        pairs: build_all_pairs(data)?.len(),
    })
}

pub fn cmd_ingest(dataset: &Path) -> Result<IngestSummary> {
    summarize(&load_dataset(dataset)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Validation,
    Test,
    All,
}

impl FromStr for Partition {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "train" => Partition::Train,
            "validation" => Partition::Validation,
            "test" => Partition::Test,
            "all" => Partition::All,
            _ => bail!("unknown partition `{s}` (expected train, validation, test or all)"),
        })
    }
}

/// Which scorer a stage uses: a trained objective, plain BM25, or the
/// expert grades themselves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorerName {
    Trained(ObjectiveKind),
    Bm25,
    Oracle,
}

impl ScorerName {
    pub fn as_str(self) -> &'static str {
        match self {
            ScorerName::Trained(k) => k.as_str(),
            ScorerName::Bm25 => "bm25",
            ScorerName::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for ScorerName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScorerName {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(ScorerName::Bm25),
            "oracle" => Ok(ScorerName::Oracle),
            other => Ok(ScorerName::Trained(other.parse().map_err(|_| {
                anyhow!(
                    "unknown scorer `{other}` (expected bm25, oracle, pointwise_sft, \
                     pairwise_reward, pairwise_dpo or ppo_proximal)"
                )
            })?)),
        }
    }
}

/// A scorer with its parameters loaded.
pub enum LoadedScorer {
    Linear(LinearScorer<f64>),
    Bm25,
    Oracle(OracleScorer),
}

/// Loaded dataset, index and embedding, shared by all stages.
pub struct Context {
    pub cfg: PipelineConfig,
    pub dataset: Vec<ExpertRanking>,
    pub index: InvertedIndex,
    pub provider: HashedNgramEmbedding,
}

/// A [`LoadedScorer`] bound to the context's index and embedding.
pub struct Bound<'a> {
    ctx: &'a Context,
    scorer: &'a LoadedScorer,
}

impl RankScorer<f64> for Bound<'_> {
    fn score(&self, query: &Query, item: &ResponseItem) -> Result<f64, ScoreError> {
        match self.scorer {
            LoadedScorer::Linear(m) => {
                rerank_core::scorer::LocalScorer::new(m, self.ctx.features()).score(query, item)
            }
            LoadedScorer::Bm25 => self.ctx.bm25().score(query, item),
            LoadedScorer::Oracle(o) => o.score(query, item),
        }
    }

    fn masked_game<'s>(
        &'s self,
        query: &'s Query,
        item: &'s ResponseItem,
    ) -> Result<Box<dyn MaskedValue<f64> + 's>, ScoreError> {
        match self.scorer {
            LoadedScorer::Linear(m) => Ok(prepared_game(m, &self.ctx.features(), query, item)),
            LoadedScorer::Bm25 => {
                let b = self.ctx.bm25();
                Ok(Box::new(OwnedGame { scorer: b, query, item }))
            }
            LoadedScorer::Oracle(o) => o.masked_game(query, item),
        }
    }
}

struct OwnedGame<'a, S> {
    scorer: S,
    query: &'a Query,
    item: &'a ResponseItem,
}

impl<S: RankScorer<f64>> MaskedValue<f64> for OwnedGame<'_, S> {
    fn players(&self) -> usize {
        self.item.tokens.len()
    }
    fn value(&self, keep: &[bool]) -> Result<f64, ScoreError> {
        self.scorer.score_masked(self.query, self.item, keep)
    }
}

impl Context {
    pub fn load(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let dataset = load_dataset(&cfg.dataset)
            .with_context(|| format!("loading dataset {}", cfg.dataset.display()))?;
        let items = match &cfg.corpus {
            Some(p) => load_corpus(p).with_context(|| format!("loading corpus {}", p.display()))?,
            None => corpus_items(&dataset)?,
        };
        let index = InvertedIndex::build_with(&items, cfg.analyzer)?;
        Ok(Self {
            cfg,
            dataset,
            index,
            provider: HashedNgramEmbedding::default(),
        })
    }

    /// Context over in-memory dataset text; used by tests.
    pub fn from_text(cfg: PipelineConfig, dataset: &str) -> Result<Self> {
        let dataset = parse_dataset(dataset)?;
        let index = InvertedIndex::build_with(&corpus_items(&dataset)?, cfg.analyzer)?;
        Ok(Self {
            cfg,
            dataset,
            index,
            provider: HashedNgramEmbedding::default(),
        })
    }

    pub fn features(&self) -> FeatureExtractor<'_, f64> {
        FeatureExtractor::new(&self.index, self.cfg.bm25, &self.provider)
    }

    pub fn bm25(&self) -> Bm25Scorer<'_, f64> {
        Bm25Scorer {
            index: &self.index,
            params: self.cfg.bm25,
        }
    }

    pub fn bind<'a>(&'a self, scorer: &'a LoadedScorer) -> Bound<'a> {
        Bound { ctx: self, scorer }
    }

    pub fn out(&self, name: impl AsRef<Path>) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    /// Reads an upstream artifact, naming the file and its producing stage
    /// when it is missing.
    pub fn read_artifact(&self, name: impl AsRef<Path>, stage: &str) -> Result<String> {
        let path = self.out(name);
        std::fs::read_to_string(&path).map_err(|e| {
            anyhow!(
                "missing upstream artifact {} ({e}); run `{stage}` first",
                path.display()
            )
        })
    }

    pub fn write(&self, name: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn split(&self) -> Result<DatasetSplit> {
        let text = self.read_artifact(SPLIT_FILE, "split")?;
        let manifest: SplitManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", self.out(SPLIT_FILE).display()))?;
        Ok(DatasetSplit::from_manifest(&self.dataset, &manifest)?)
    }

    pub fn partition(&self, p: Partition) -> Result<Vec<ExpertRanking>> {
        Ok(match p {
            Partition::All => self.dataset.clone(),
            Partition::Train => self.split()?.train,
            Partition::Validation => self.split()?.validation,
            Partition::Test => self.split()?.test,
        })
    }

    pub fn ranking(&self, query_id: &str) -> Option<&ExpertRanking> {
        self.dataset.iter().find(|r| r.query.id == query_id)
    }

    pub fn load_scorer(&self, name: ScorerName) -> Result<LoadedScorer> {
        Ok(match name {
            ScorerName::Bm25 => LoadedScorer::Bm25,
            ScorerName::Oracle => LoadedScorer::Oracle(OracleScorer::from_rankings(&self.dataset)),
            ScorerName::Trained(k) => LoadedScorer::Linear(self.load_linear(k)?),
        })
    }

    fn load_linear(&self, kind: ObjectiveKind) -> Result<LinearScorer<f64>> {
        let name = scorer_file(kind);
        let text = self.read_artifact(&name, &format!("train --objective {kind}"))?;
        let s: LinearScorer<f64> = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", self.out(&name).display()))?;
        Ok(LinearScorer::with_spec(s.weights, s.feature_spec)?)
    }

    pub fn templates(&self) -> Result<Vec<PromptTemplate>> {
        self.cfg
            .explain
            .variants
            .iter()
            .map(|&v| {
                let file = match v {
                    Variant::WithAttribution => &self.cfg.explain.template_file,
                    Variant::WithoutAttribution => &self.cfg.explain.ablation_template_file,
                };
                Ok(match file {
                    Some(p) => {
                        let text = std::fs::read_to_string(p)
                            .with_context(|| format!("reading template {}", p.display()))?;
                        PromptTemplate::new(text, v)?
                    }
                    None => PromptTemplate::default_for(v),
                })
            })
            .collect()
    }

    pub fn explainer(&self, offline: bool) -> Result<Explainer> {
        let cfg = self.cfg.backend.clone();
        Ok(if offline || self.cfg.explain.offline {
            Explainer::offline(cfg, &self.cfg.out_dir)?
        } else {
            Explainer::online(cfg)?
        })
    }
}

pub fn cmd_split(ctx: &Context) -> Result<SplitManifest> {
    let manifest = split_dataset(&ctx.dataset, ctx.cfg.split_seed)?.manifest();
    ctx.write(SPLIT_FILE, to_json_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn scorer_file(kind: ObjectiveKind) -> String {
    format!("scorer_{kind}.json")
}

pub fn report_file(kind: ObjectiveKind) -> String {
    format!("train_report_{kind}.json")
}

/// Persisted training outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainArtifact {
    pub report: TrainReport<f64>,
    /// Pairwise accuracy on validation preference pairs.
    pub validation_accuracy: f64,
}

/// Trains `kind` on the train partition. Reference scorers the objective
/// needs (SFT for DPO and PPO, the reward model for PPO) are loaded when
/// present and trained first otherwise.
pub fn cmd_train(ctx: &Context, kind: ObjectiveKind) -> Result<TrainArtifact> {
    let split = ctx.split()?;
    let cfg = TrainConfig {
        objective: kind,
        ..ctx.cfg.train.clone()
    };
    let pairs = build_all_pairs(&split.train)?;
    let mut cache = FeatureCache::new(ctx.features());
    let (scorer, report) = match kind {
        ObjectiveKind::PointwiseSft => {
            train_pointwise_sft(&pointwise_data(&split.train), &mut cache, &cfg)?
        }
        ObjectiveKind::PairwiseReward => train_pairwise_reward(&pairs, &mut cache, &cfg, None)?,
        ObjectiveKind::PairwiseDpo => {
            let reference = prerequisite(ctx, ObjectiveKind::PointwiseSft)?;
            train_pairwise_dpo(&pairs, &mut cache, &cfg, &reference)?
        }
        ObjectiveKind::PpoProximal => {
            let reference = prerequisite(ctx, ObjectiveKind::PointwiseSft)?;
            let reward = prerequisite(ctx, ObjectiveKind::PairwiseReward)?;
            train_ppo_proximal(&pairs, &mut cache, &cfg, &reward, &reference)?
        }
    };

    let local = rerank_core::scorer::LocalScorer::new(&scorer, ctx.features());
    let validation_accuracy = pairwise_accuracy(&local, &build_all_pairs(&split.validation)?)?;
    let artifact = TrainArtifact {
        report,
        validation_accuracy,
    };

    ctx.write(scorer_file(kind), to_json_pretty(&scorer)?.as_bytes())?;
    ctx.write(report_file(kind), to_json_pretty(&artifact)?.as_bytes())?;
    let mut epochs = Vec::new();
    write_epoch_csv(std::slice::from_ref(&artifact.report), &mut epochs)?;
    ctx.write(format!("train_epochs_{kind}.csv"), &epochs)?;
    write_train_summary(ctx)?;
    Ok(artifact)
}

fn prerequisite(ctx: &Context, kind: ObjectiveKind) -> Result<LinearScorer<f64>> {
    if ctx.out(scorer_file(kind)).exists() {
        return ctx.load_linear(kind);
    }
    log::info!("{kind} scorer not found; training it first");
    cmd_train(ctx, kind)?;
    ctx.load_linear(kind)
}

/// `objective,loss,accuracy,validation_accuracy` for every objective with a
/// report in the output directory.
fn write_train_summary(ctx: &Context) -> Result<()> {
    let mut artifacts = Vec::new();
    for kind in ObjectiveKind::ALL {
        if ctx.out(report_file(kind)).exists() {
            let text = ctx.read_artifact(report_file(kind), "train")?;
            artifacts.push(serde_json::from_str::<TrainArtifact>(&text)?);
        }
    }
    let reports: Vec<TrainReport<f64>> = artifacts.iter().map(|a| a.report.clone()).collect();
    let mut base = Vec::new();
    write_summary_csv(&reports, &mut base)?;
    let text = String::from_utf8(base)?;
    let mut out = String::new();
    for (i, line) in text.lines().enumerate() {
        out.push_str(line);
        if i == 0 {
            out.push_str(",validation_accuracy");
        } else {
            out.push(',');
            out.push_str(&artifacts[i - 1].validation_accuracy.to_string());
        }
        out.push('\n');
    }
    ctx.write(TRAIN_SUMMARY_FILE, out.as_bytes())?;
    Ok(())
}

pub fn reranked_file(scorer: ScorerName) -> String {
    format!("reranked_{scorer}.jsonl")
}

/// One serialized reranked list, as stored per line and served by `/rerank`.
pub fn record_line(list: &RerankedList<f64>) -> Result<String> {
    Ok(serde_json::to_string(&list.record())?)
}

/// Reranks the judged items of every ranking in `partition`.
pub fn cmd_rerank(
    ctx: &Context,
    scorer: ScorerName,
    partition: Partition,
    m_r: Option<usize>,
) -> Result<Vec<RerankedList<f64>>> {
    let loaded = ctx.load_scorer(scorer)?;
    let bound = ctx.bind(&loaded);
    let lists = ctx
        .partition(partition)?
        .iter()
        .map(|r| Ok(rerank(&r.query, &r.items(), &bound, m_r)?))
        .collect::<Result<Vec<_>>>()?;
    let mut text = String::new();
    for l in &lists {
        text.push_str(&record_line(l)?);
        text.push('\n');
    }
    ctx.write(reranked_file(scorer), text.as_bytes())?;
    Ok(lists)
}

/// Reranks an ad-hoc query: explicit candidate ids, or BM25's top `retrieve_m`.
pub fn rerank_query(
    ctx: &Context,
    loaded: &LoadedScorer,
    query: &Query,
    candidate_ids: Option<&[String]>,
    m_r: Option<usize>,
) -> Result<RerankedList<f64>> {
    let candidates: Vec<ResponseItem> = match candidate_ids {
        Some(ids) => ids
            .iter()
            .map(|id| {
                ctx.index
                    .item(id)
                    .cloned()
                    .ok_or_else(|| anyhow!(UnknownItem(id.clone())))
            })
            .collect::<Result<_>>()?,
        None => retrieve_topk(&ctx.index, &ctx.cfg.bm25, query, ctx.cfg.retrieve_m)?
            .into_iter()
            .map(|(i, _)| i.clone())
            .collect(),
    };
    Ok(rerank(query, &candidates, &ctx.bind(loaded), m_r)?)
}

#[derive(Debug, thiserror::Error)]
#[error("unknown item `{0}`")]
pub struct UnknownItem(pub String);

pub fn load_reranked(ctx: &Context, scorer: ScorerName) -> Result<Vec<RerankedList<f64>>> {
    let name = reranked_file(scorer);
    let text = ctx.read_artifact(&name, &format!("rerank --scorer {scorer}"))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let rec: RerankedRecord<f64> = serde_json::from_str(line)
                .with_context(|| format!("{name} line {}", i + 1))?;
            rec.resolve(|id| ctx.index.item(id).cloned())
                .map_err(|id| anyhow!("{name} line {}: unknown item `{id}`", i + 1))
        })
        .collect()
}

pub fn attribution_dir(scorer: ScorerName) -> String {
    format!("attributions_{scorer}")
}

pub fn attribution_stem(query_id: &str, item_id: &str) -> String {
    format!("{}__{}", file_stem(query_id), file_stem(item_id))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatedToken {
    pub token: String,
    pub value: f64,
}

/// Per-position values plus the surface-form aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionFile {
    pub result: AttributionResult<f64>,
    pub aggregated: Vec<AggregatedToken>,
}

pub fn attribution_file(result: AttributionResult<f64>) -> AttributionFile {
    let aggregated = result
        .aggregated()
        .into_iter()
        .map(|(token, value)| AggregatedToken { token, value })
        .collect();
    AttributionFile { result, aggregated }
}

/// Attributes the top `explain.top_n` entries of every reranked list.
pub fn cmd_attribute(ctx: &Context, scorer: ScorerName) -> Result<Vec<PathBuf>> {
    let lists = load_reranked(ctx, scorer)?;
    let loaded = ctx.load_scorer(scorer)?;
    let bound = ctx.bind(&loaded);
    let dir = attribution_dir(scorer);
    let mut written = Vec::new();
    for list in &lists {
        for e in list.entries.iter().take(ctx.cfg.explain.top_n) {
            let result = attribute(&list.query, &e.item, &bound, &ctx.cfg.attribution)?;
            let stem = attribution_stem(&list.query.id, &e.item.id);
            let mut csv = Vec::new();
            write_report(&result, &mut csv)?;
            ctx.write(format!("{dir}/{stem}.csv"), &csv)?;
            let json = to_json_pretty(&attribution_file(result))?;
            written.push(ctx.write(format!("{dir}/{stem}.json"), json.as_bytes())?);
        }
    }
    Ok(written)
}

pub fn explanations_file(scorer: ScorerName) -> String {
    format!("explanations_{scorer}.jsonl")
}

/// Explains the attributed entries of every reranked list, all configured
/// variants, in list order.
pub fn cmd_explain(
    ctx: &Context,
    scorer: ScorerName,
    offline: bool,
) -> Result<Vec<ExplanationRecord<f64>>> {
    let lists = load_reranked(ctx, scorer)?;
    let explainer = ctx.explainer(offline)?;
    let templates = ctx.templates()?;
    let dir = attribution_dir(scorer);
    let mut records = Vec::new();
    for list in &lists {
        let mut head = list.clone();
        head.entries.truncate(ctx.cfg.explain.top_n);
        let attributions = head
            .entries
            .iter()
            .map(|e| {
                let name = format!("{dir}/{}.json", attribution_stem(&list.query.id, &e.item.id));
                let text = ctx.read_artifact(&name, &format!("attribute --scorer {scorer}"))?;
                let f: AttributionFile = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", ctx.out(&name).display()))?;
                Ok(f.result)
            })
            .collect::<Result<Vec<_>>>()?;
        records.extend(explain_ranked_list(
            &explainer,
            &templates,
            &head,
            &attributions,
            ctx.cfg.attribution.top_k,
        )?);
    }
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    ctx.write(explanations_file(scorer), text.as_bytes())?;
    Ok(records)
}

pub const BASELINE_LABEL: &str = "BM25";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalOutcome {
    pub baseline: MetricReport<f64>,
    pub scorer: MetricReport<f64>,
}

/// Metrics of the stored reranked lists against expert grades, next to a
/// BM25 ordering of the same candidates.
pub fn cmd_eval(ctx: &Context, scorer: ScorerName) -> Result<EvalOutcome> {
    let lists = load_reranked(ctx, scorer)?;
    let bm25 = LoadedScorer::Bm25;
    let bound = ctx.bind(&bm25);
    let mut system = Vec::with_capacity(lists.len());
    let mut baseline = Vec::with_capacity(lists.len());
    for l in lists {
        let truth = ctx
            .ranking(&l.query.id)
            .ok_or_else(|| anyhow!("no expert ranking for query `{}`", l.query.id))?
            .clone();
        let base = rerank(&truth.query, &truth.items(), &bound, None)?;
        baseline.push((base, truth.clone()));
        system.push((l, truth));
    }
    let outcome = EvalOutcome {
        baseline: evaluate_run(&baseline, &ctx.provider)?,
        scorer: evaluate_run(&system, &ctx.provider)?,
    };
    let mut csv = Vec::new();
    write_table_csv(
        &[
            (BASELINE_LABEL.to_string(), outcome.baseline.clone()),
            (scorer.to_string(), outcome.scorer.clone()),
        ],
        &mut csv,
    )?;
    ctx.write(format!("metrics_{scorer}.csv"), &csv)?;
    ctx.write(
        format!("metrics_{scorer}.json"),
        to_json_pretty(&outcome)?.as_bytes(),
    )?;
    Ok(outcome)
}

/// Looks up a query by id, or builds an ad-hoc one from text.
pub fn resolve_query(ctx: &Context, id: Option<&str>, text: Option<&str>) -> Result<Query> {
    match (id, text) {
        (Some(id), None) => ctx
            .ranking(id)
            .map(|r| r.query.clone())
            .ok_or_else(|| anyhow!(UnknownQuery(id.to_string()))),
        (id, Some(text)) => Ok(Query::new(id.unwrap_or("query"), text)?),
        (None, None) => bail!("request needs `query_id` or `query`"),
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown query `{0}`")]
pub struct UnknownQuery(pub String);

/// What `run` produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub lists: usize,
    pub attributions: usize,
    pub explanations: usize,
    pub eval: EvalOutcome,
}

/// split, train (for trained scorers), rerank, attribute, explain, eval.
pub fn cmd_run(
    ctx: &Context,
    scorer: ScorerName,
    partition: Partition,
    offline: bool,
) -> Result<RunOutcome> {
    cmd_split(ctx)?;
    if let ScorerName::Trained(kind) = scorer {
        cmd_train(ctx, kind)?;
    }
    let lists = cmd_rerank(ctx, scorer, partition, None)?.len();
    let attributions = cmd_attribute(ctx, scorer)?.len();
    let explanations = cmd_explain(ctx, scorer, offline)?.len();
    let eval = cmd_eval(ctx, scorer)?;
    Ok(RunOutcome {
        lists,
        attributions,
        explanations,
        eval,
    })
}
