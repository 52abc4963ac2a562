//! Acceptance criteria AC1-AC11. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits nonzero if any fails.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::AssertUnwindSafe;
use std::path::Path;
use std::time::Instant;

use anyhow::{ensure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rerank_core::attribution::{exact_values, sampled_values};
use rerank_core::corpus::{
    build_all_pairs, corpus_items, count_pointwise_examples, load_dataset, ExpertRanking, Query,
    ResponseItem,
};
use rerank_core::explain::{build_prompt, PromptTemplate, Variant};
use rerank_core::metrics::{
    bertscore_f1, bleu, cosine_similarity, ndcg_at_k, rouge_l, HashedNgramEmbedding,
};
use rerank_core::retrieval::{bm25_score, retrieve_topk, tokenize, Bm25Params, InvertedIndex};
use rerank_core::scorer::{
    Bm25Scorer, FeatureExtractor, LinearScorer, LocalScorer, MaskedValue, RankScorer,
};
use rerank_core::stub::{StubResponse, StubServer};
use rerank_core::synthetic::{generate, PlantedConfig};
use rerank_core::training::{
    diff_accuracy, fit, gradient_check, FeatureCache, Objective, ObjectiveKind, TrainConfig,
};
use rerank_explain::config::PipelineConfig;
use rerank_explain::pipeline::{self, Context, Partition, ScorerName};

type Outcome = Result<String>;

fn main() {
    let checks: [(&str, &str, fn() -> Outcome); 11] = [
        ("AC1", "dataset accounting", ac1),
        ("AC2", "Shapley efficiency", ac2),
        ("AC3", "Shapley oracle equivalence", ac3),
        ("AC4", "gradient checks", ac4),
        ("AC5", "trainer ordering on planted data", ac5),
        ("AC6", "NDCG correctness", ac6),
        ("AC7", "metric identities", ac7),
        ("AC8", "BM25 brute-force equivalence", ac8),
        ("AC9", "end-to-end fixture run", ac9),
        ("AC10", "prompt fidelity", ac10),
        ("AC11", "determinism", ac11),
    ];
    let mut failed = 0;
    for (id, name, f) in checks {
        let result = std::panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(anyhow::anyhow!("panic: {msg}"))
            });
        match result {
            Ok(detail) => println!("[PASS] {id} {name}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {e:#}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn dataset(name: &str) -> Vec<ExpertRanking> {
    load_dataset(common::fixture(name)).unwrap()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let data = dataset("dataset_94.jsonl");
    let points = count_pointwise_examples(&data);
    let pairs = build_all_pairs(&data)?.len();
    let t = start.elapsed();
    ensure!(data.len() == 94, "rankings {}", data.len());
    ensure!(points == 940, "pointwise {points}");
    ensure!(pairs == 2350, "pairs {pairs}");
    ensure!(t.as_secs_f64() < 1.0, "took {t:?}");
    Ok(format!("940 pointwise, 2350 pairs in {t:.2?}"))
}

/// Fixture-backed games: a trained-looking linear scorer and plain BM25 on
/// fixture items cut to at most `max_tokens` tokens.
struct Games {
    data: Vec<ExpertRanking>,
    index: InvertedIndex,
    provider: HashedNgramEmbedding,
}

impl Games {
    fn new() -> Self {
        let data = dataset("dataset_10.jsonl");
        let index = InvertedIndex::build(&corpus_items(&data).unwrap()).unwrap();
        Self {
            data,
            index,
            provider: HashedNgramEmbedding::default(),
        }
    }

    fn instances(&self, count: usize, max_tokens: usize) -> Vec<(Query, ResponseItem, LinearScorer<f64>, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        (0..count)
            .map(|i| {
                let r = &self.data[i % self.data.len()];
                let j = &r.judged[rng.random_range(0..r.judged.len())];
                let n = rng.random_range(1..=max_tokens.min(j.item.tokens.len()));
                let start = rng.random_range(0..=j.item.tokens.len() - n);
                let keep: Vec<bool> = (0..j.item.tokens.len())
                    .map(|p| p >= start && p < start + n)
                    .collect();
                let item = j.item.restricted(&keep);
                let w = LinearScorer::new((0..6).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
                (r.query.clone(), item, w, i % 2 == 1)
            })
            .collect()
    }

    fn game<'a>(
        &'a self,
        q: &'a Query,
        item: &'a ResponseItem,
        bm25: bool,
        local: &'a LocalScorer<'a, f64>,
        plain: &'a Bm25Scorer<'a, f64>,
    ) -> Box<dyn MaskedValue<f64> + 'a> {
        if bm25 {
            plain.masked_game(q, item).unwrap()
        } else {
            local.masked_game(q, item).unwrap()
        }
    }
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let g = Games::new();
    let plain = Bm25Scorer {
        index: &g.index,
        params: Bm25Params::default(),
    };
    let mut worst_exact: f64 = 0.0;
    let mut worst_sampled: f64 = 0.0;
    let instances = g.instances(50, 10);
    for (i, (q, item, w, bm25)) in instances.iter().enumerate() {
        let local = LocalScorer::new(w, FeatureExtractor::new(&g.index, Bm25Params::default(), &g.provider));
        let game = g.game(q, item, *bm25, &local, &plain);
        let (phi, base, full) = exact_values(game.as_ref(), 25)?;
        // f(N) and f(∅) straight from the scorer, not the game.
        let n = item.tokens.len();
        let scorer: &dyn RankScorer<f64> = if *bm25 { &plain } else { &local };
        let f_full = scorer.score(q, item)?;
        let f_empty = scorer.score_masked(q, item, &vec![false; n])?;
        ensure!((full - f_full).abs() <= 1e-12 && (base - f_empty).abs() <= 1e-12, "instance {i}: game endpoints disagree with scorer");
        worst_exact = worst_exact.max((phi.iter().sum::<f64>() - (f_full - f_empty)).abs());
        let (sphi, sbase, sfull) = sampled_values(game.as_ref(), 200, i as u64)?;
        worst_sampled = worst_sampled.max((sphi.iter().sum::<f64>() - (sfull - sbase)).abs());
    }
    let t = start.elapsed();
    ensure!(worst_exact <= 1e-9, "exact gap {worst_exact:e}");
    ensure!(worst_sampled <= 1e-9, "sampled gap {worst_sampled:e}");
    ensure!(t.as_secs_f64() < 30.0, "took {t:?}");
    Ok(format!(
        "{} instances, max |gap| exact {worst_exact:.1e}, sampled {worst_sampled:.1e}, {t:.2?}",
        instances.len()
    ))
}

fn permutation_oracle(game: &dyn MaskedValue<f64>) -> Vec<f64> {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }
    let n = game.players();
    let all = perms(n);
    let mut phi = vec![0.0; n];
    for p in &all {
        let mut keep = vec![false; n];
        let mut prev = game.value(&keep).unwrap();
        for &i in p {
            keep[i] = true;
            let v = game.value(&keep).unwrap();
            phi[i] += v - prev;
            prev = v;
        }
    }
    phi.iter().map(|x| x / all.len() as f64).collect()
}

fn ac3() -> Outcome {
    let g = Games::new();
    let plain = Bm25Scorer {
        index: &g.index,
        params: Bm25Params::default(),
    };
    let mut worst_oracle: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let instances = g.instances(20, 8);
    for (i, (q, item, w, bm25)) in instances.iter().enumerate() {
        let local = LocalScorer::new(w, FeatureExtractor::new(&g.index, Bm25Params::default(), &g.provider));
        let game = g.game(q, item, *bm25, &local, &plain);
        let (exact, ..) = exact_values(game.as_ref(), 25)?;
        for (a, b) in exact.iter().zip(permutation_oracle(game.as_ref())) {
            worst_oracle = worst_oracle.max((a - b).abs());
        }
        let (approx, ..) = sampled_values(game.as_ref(), 2000, i as u64)?;
        let hi = exact.iter().cloned().fold(f64::MIN, f64::max);
        let lo = exact.iter().cloned().fold(f64::MAX, f64::min);
        let range = hi - lo;
        for (a, e) in approx.iter().zip(&exact) {
            let err = (a - e).abs();
            let ratio = if range > 0.0 {
                err / range
            } else if err <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            worst_ratio = worst_ratio.max(ratio);
        }
    }
    ensure!(worst_oracle <= 1e-9, "exact vs oracle {worst_oracle:e}");
    ensure!(worst_ratio <= 0.05, "sampled error {worst_ratio:.4} of value range");
    Ok(format!(
        "{} instances, exact vs oracle {worst_oracle:.1e}, sampled error <= {worst_ratio:.4} x range",
        instances.len()
    ))
}

fn ac4() -> Outcome {
    let data = dataset("dataset_10.jsonl");
    let index = InvertedIndex::build(&corpus_items(&data)?)?;
    let provider = HashedNgramEmbedding::default();
    let mut cache = FeatureCache::new(FeatureExtractor::new(&index, Bm25Params::default(), &provider));
    let diffs = cache.pair_diffs(&build_all_pairs(&data)?);
    let points = cache.point_examples(&rerank_core::training::pointwise_data(&data));
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let mut w = || -> Vec<f64> { (0..6).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (theta, reference) = (w(), w());
        let objectives = [
            Objective::pointwise(6, points.clone())?,
            Objective::reward(6, diffs.clone())?,
            Objective::dpo(diffs.clone(), 1.0, reference.clone())?,
            Objective::ppo(diffs.clone(), 0.1, reference)?,
        ];
        for (kind, obj) in ObjectiveKind::ALL.iter().zip(&objectives) {
            let err = gradient_check(obj, &theta, 1e-6);
            let e = worst.entry(kind.as_str()).or_insert(0.0);
            *e = e.max(err);
        }
    }
    let max = worst.values().cloned().fold(0.0, f64::max);
    let detail = worst
        .iter()
        .map(|(k, v)| format!("{k} {v:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure!(max <= 1e-4, "max relative error {max:e} ({detail})");
    Ok(format!("20 trials, max relative error: {detail}"))
}

fn ac5() -> Outcome {
    let mut rows = Vec::new();
    let mut ok = true;
    for seed in 0..5u64 {
        let data = generate::<f64>(&PlantedConfig {
            seed,
            ..PlantedConfig::default()
        });
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let train = data.pair_diffs(0..76);
        let held = data.pair_diffs(76..94);
        let sft = fit(&Objective::pointwise(6, data.point_examples(0..76))?, &[0.0; 6], &cfg)?;
        let rm = fit(&Objective::reward(6, train.clone())?, &[0.0; 6], &cfg)?;
        let dpo_obj = Objective::dpo(train, cfg.beta, sft.weights_after.clone())?;
        let at_ref = dpo_obj.loss(&sft.weights_after);
        ensure!(
            (at_ref - std::f64::consts::LN_2).abs() <= 1e-12,
            "seed {seed}: DPO loss at reference {at_ref}"
        );
        let dpo = fit(&dpo_obj, &sft.weights_after, &cfg)?;
        let (a_sft, a_rm, a_dpo) = (
            diff_accuracy(&sft.weights_after, &held),
            diff_accuracy(&rm.weights_after, &held),
            diff_accuracy(&dpo.weights_after, &held),
        );
        ok &= a_dpo >= a_rm - 0.02 && a_rm >= a_sft - 0.02;
        rows.push(format!("seed {seed}: sft {a_sft:.3} rm {a_rm:.3} dpo {a_dpo:.3}"));
    }
    ensure!(ok, "ordering violated: {}", rows.join("; "));
    Ok(format!("DPO at reference = ln 2; {}", rows.join("; ")))
}

fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut swaps = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let grades: Vec<u8> = (0..n).map(|_| rng.random_range(0..=9)).collect();
        let ids: Vec<usize> = (0..n).collect();
        let rel: HashMap<usize, u8> = grades.iter().copied().enumerate().collect();
        let k = rng.random_range(1..=12);
        let dcg = |g: &[u8]| -> f64 {
            g.iter()
                .take(k)
                .enumerate()
                .map(|(i, &r)| r as f64 / ((i + 2) as f64).log2())
                .sum()
        };
        let mut ideal = grades.clone();
        ideal.sort_by(|a, b| b.cmp(a));
        let want = if dcg(&ideal) == 0.0 { 0.0 } else { dcg(&grades) / dcg(&ideal) };
        let got: f64 = ndcg_at_k(&ids, &rel, k)?;
        worst = worst.max((got - want).abs());

        if ideal[0] > 0 {
            let mut by_grade = ids.clone();
            by_grade.sort_by(|&a, &b| grades[b].cmp(&grades[a]));
            let one: f64 = ndcg_at_k(&by_grade, &rel, k)?;
            ensure!(one == 1.0, "ideal ordering gave {one}");
        }
        let before: f64 = ndcg_at_k(&ids, &rel, 10)?;
        for i in 0..n {
            for j in i + 1..n {
                if grades[i] < grades[j] {
                    let mut s = ids.clone();
                    s.swap(i, j);
                    let after: f64 = ndcg_at_k(&s, &rel, 10)?;
                    ensure!(after >= before - 1e-15, "swap lowered NDCG");
                    swaps += 1;
                }
            }
        }
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    Ok(format!("1000 instances, max deviation {worst:.1e}, {swaps} swap checks"))
}

fn ac7() -> Outcome {
    let p = HashedNgramEmbedding::default();
    let text = "Aerosol optical depth measurements from ground stations";
    let t = tokenize(text);
    let ids = [
        ("bleu", bleu::<f64, _>(&t, &t, 4)),
        ("rouge_l", rouge_l::<f64, _>(&t, &t).f1),
        ("cosine", cosine_similarity::<f64>(text, text, &p)?),
        ("bertscore", bertscore_f1::<f64, _>(&t, &t, &p)?),
    ];
    for (name, v) in ids {
        ensure!((v - 1.0).abs() <= 1e-9, "{name} on identical input = {v}");
    }
    // {a:9, b:0}, order [b, a], k=2: 9/log2(3) / 9.
    let rel: HashMap<&str, u8> = [("a", 9), ("b", 0)].into_iter().collect();
    let v: f64 = ndcg_at_k(&["b", "a"], &rel, 2)?;
    ensure!((v - 1.0 / 3f64.log2()).abs() <= 1e-9, "ndcg example {v}");
    // "the cat" vs "the cat sat": precisions 1 and 1, brevity e^(1 - 3/2).
    let b = bleu::<f64, _>(&tokenize("the cat"), &tokenize("the cat sat"), 2);
    ensure!((b - (1.0f64 - 1.5).exp()).abs() <= 1e-9, "bleu example {b}");
    // "the cat sat" vs "the cat ran": LCS 2, P = R = F1 = 2/3.
    let r = rouge_l::<f64, _>(&tokenize("the cat sat"), &tokenize("the cat ran"));
    for v in [r.precision, r.recall, r.f1] {
        ensure!((v - 2.0 / 3.0).abs() <= 1e-9, "rouge example {v}");
    }
    let disjoint = rouge_l::<f64, _>(&tokenize("a b"), &tokenize("c d"));
    ensure!(disjoint.f1 == 0.0, "disjoint rouge {}", disjoint.f1);
    Ok("identities = 1.0; NDCG, BLEU and ROUGE-L hand cases within 1e-9".into())
}

fn ac8() -> Outcome {
    let single = [ResponseItem::new("d", "u", "a b")?];
    let idx = InvertedIndex::build(&single)?;
    let s: f64 = bm25_score(&idx, &Bm25Params::default(), &["a".to_string()], "d")?;
    let hand = (4.0f64 / 3.0).ln();
    ensure!((s - hand).abs() <= 1e-9, "single-doc score {s} vs {hand}");

    let vocab = ["aerosol", "ocean", "carbon", "flux", "data", "trend", "ice", "soil", "co2", "wind"];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for size in [1usize, 10, 100, 1000] {
        let items: Vec<ResponseItem> = (0..size)
            .map(|i| {
                let n = rng.random_range(1..30);
                let words: Vec<&str> = (0..n).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
                ResponseItem::new(format!("d{i:04}"), "u", words.join(" ")).unwrap()
            })
            .collect();
        let index = InvertedIndex::build(&items)?;
        let docs: Vec<Vec<String>> = items.iter().map(|i| tokenize(&i.summary)).collect();
        let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / size as f64;
        for _ in 0..10 {
            let q: Vec<&str> = (0..rng.random_range(1..4)).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
            let qt = tokenize(&q.join(" "));
            let mut scan: Vec<(String, f64)> = Vec::new();
            for (item, d) in items.iter().zip(&docs) {
                let mut s = 0.0;
                let mut hit = false;
                for t in &qt {
                    let tf = d.iter().filter(|x| *x == t).count() as f64;
                    if tf == 0.0 {
                        continue;
                    }
                    hit = true;
                    let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
                    let idf = (1.0 + (size as f64 - df + 0.5) / (df + 0.5)).ln();
                    s += idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * d.len() as f64 / avg));
                }
                if hit {
                    scan.push((item.id.clone(), s));
                }
            }
            scan.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let m = 10;
            let got = retrieve_topk(&index, &Bm25Params::default(), &Query::new("q", q.join(" "))?, m)?;
            ensure!(got.len() == scan.len().min(m), "size {size}: length");
            for ((item, s), (id, w)) in got.iter().zip(&scan) {
                ensure!((s - w).abs() <= 1e-9, "size {size}: score {s} vs {w}");
                ensure!(item.id == *id || (s - w).abs() <= 1e-12, "size {size}: order {} vs {id}", item.id);
            }
            checked += 1;
        }
    }
    Ok(format!("single-doc {s:.4} = ln(4/3); {checked} queries match linear scan up to 1000 docs"))
}

fn e2e(out: &Path, offline: bool, endpoint: Option<String>) -> Result<pipeline::RunOutcome> {
    let mut cfg: PipelineConfig = common::config(out);
    cfg.attribution.permutations = 2000;
    if let Some(e) = endpoint {
        cfg.backend.endpoint = e;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    pool.install(|| {
        let summary = pipeline::cmd_ingest(&cfg.dataset)?;
        ensure!(summary.rankings == 10, "ingest saw {} rankings", summary.rankings);
        let ctx = Context::load(cfg.clone())?;
        pipeline::cmd_run(&ctx, ScorerName::Trained(ObjectiveKind::PairwiseDpo), Partition::All, offline)
    })
}

fn ac9() -> Outcome {
    let dir = tempfile::tempdir()?;
    let start = Instant::now();
    let out = e2e(dir.path(), true, None)?;
    let t = start.elapsed();
    ensure!(t.as_secs_f64() < 60.0, "took {t:?}");
    ensure!(
        (out.lists, out.attributions, out.explanations) == (10, 10, 20),
        "produced {} lists, {} attributions, {} explanations",
        out.lists,
        out.attributions,
        out.explanations
    );
    let csv = std::fs::read_to_string(dir.path().join("metrics_pairwise_dpo.csv"))?;
    let rows: Vec<&str> = csv.lines().collect();
    ensure!(rows.len() == 3 && rows[1].starts_with("BM25,") && rows[2].starts_with("pairwise_dpo,"), "csv rows {rows:?}");
    let (b, s) = (out.eval.baseline.ndcg_at_5, out.eval.scorer.ndcg_at_5);
    ensure!(s >= b, "trained NDCG@5 {s:.4} < BM25 {b:.4}");
    Ok(format!("{t:.2?} on one thread; NDCG@5 trained {s:.4} vs BM25 {b:.4}"))
}

fn ac10() -> Outcome {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(common::fixture("table3.json"))?)?;
    let topk: Vec<(String, f64)> = v["top_tokens"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (t["token"].as_str().unwrap().to_string(), t["value"].as_f64().unwrap()))
        .collect();
    let s = |k: &str| v[k].as_str().unwrap().to_string();
    let render = |variant| {
        build_prompt(
            &PromptTemplate::default_for(variant),
            &s("query"),
            &topk,
            &s("url"),
            &s("summary"),
            &s("item_id"),
        )
    };
    let with = render(Variant::WithAttribution)?;
    let without = render(Variant::WithoutAttribution)?;
    ensure!(with.lines().any(|l| l == "carbon: 0.32"), "no `carbon: 0.32` line");
    for line in [
        "Using the attribution values of the top tokens, generate a concise, clear, and coherent explanation describing why this response was selected to answer the query. Focus on how the most important tokens contribute to the relevance and ranking of this response.",
        "Your explanation should help a user understand the reasoning behind the ranking decision based on the key contributing tokens.",
    ] {
        ensure!(with.lines().any(|l| l == line), "instruction text missing: {line}");
    }
    let attribution_lines = without
        .lines()
        .filter(|l| {
            topk.iter().any(|(t, _)| l.starts_with(&format!("{t}: ")))
                || l.to_lowercase().contains("attribution")
        })
        .count();
    ensure!(attribution_lines == 0, "{attribution_lines} attribution lines without attribution");
    let listed = with.lines().filter(|l| topk.iter().any(|(t, _)| l.starts_with(&format!("{t}: ")))).count();
    ensure!(listed == 10, "{listed} token lines");
    Ok("10 token lines incl. `carbon: 0.32`, instruction text verbatim; ablation has 0 attribution lines".into())
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn ac11() -> Outcome {
    let stub = StubServer::start(vec![StubResponse::ok(common::chat_reply("Deterministic reply."))]);
    let mut snaps = Vec::new();
    for offline in [false, true] {
        for _ in 0..2 {
            let dir = tempfile::tempdir()?;
            e2e(dir.path(), offline, Some(stub.url()))?;
            snaps.push(snapshot(dir.path()));
        }
    }
    for (a, b, what) in [(&snaps[0], &snaps[1], "online"), (&snaps[2], &snaps[3], "offline")] {
        ensure!(a.keys().eq(b.keys()), "{what}: file sets differ");
        for (k, v) in a {
            ensure!(b[k] == *v, "{what}: {k} differs between runs");
        }
    }
    // Also across thread counts.
    let dir = tempfile::tempdir()?;
    let mut cfg = common::config(dir.path());
    cfg.attribution.permutations = 2000;
    cfg.backend.endpoint = stub.url();
    let ctx = Context::load(cfg)?;
    rayon::ThreadPoolBuilder::new().num_threads(4).build()?.install(|| {
        pipeline::cmd_run(&ctx, ScorerName::Trained(ObjectiveKind::PairwiseDpo), Partition::All, false)
    })?;
    let multi = snapshot(dir.path());
    ensure!(multi == snaps[0], "4-thread run differs from 1-thread run");
    Ok(format!(
        "{} files byte-identical across reruns (stub backend and offline) and thread counts",
        snaps[0].len()
    ))
}
