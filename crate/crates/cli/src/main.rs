use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Result;
use clap::{Parser, Subcommand};
use rerank_explain::config::PipelineConfig;
use rerank_explain::pipeline::{self, Context, Partition, ScorerName};
use rerank_explain::server::{self, AppState};
use rerank_core::training::ObjectiveKind;

#[derive(Parser)]
#[command(version, about = "Explainable re-ranking pipeline")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset JSONL (overrides `dataset`).
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    k1: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    /// First-stage depth for free-text queries.
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Split seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for scoring and attribution (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a dataset and print its example counts.
    Ingest,
    /// Partition queries into train/validation/test.
    Split,
    /// Train a scorer under one objective.
    Train {
        #[arg(long)]
        objective: ObjectiveKind,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Rerank the judged items of each query in a partition.
    Rerank {
        #[arg(long)]
        scorer: ScorerName,
        #[arg(long, default_value = "test")]
        partition: Partition,
        #[arg(long)]
        m_r: Option<usize>,
    },
    /// Shapley values for the top entries of each reranked list.
    Attribute {
        #[arg(long)]
        scorer: ScorerName,
        #[arg(long)]
        top_n: Option<usize>,
        #[arg(long)]
        permutations: Option<usize>,
    },
    /// Build explanation prompts and resolve them with the backend.
    Explain {
        #[arg(long)]
        scorer: ScorerName,
        /// Write prompts to files instead of calling the backend.
        #[arg(long)]
        offline: bool,
    },
    /// Ranking and text metrics against expert grades.
    Eval {
        #[arg(long)]
        scorer: ScorerName,
    },
    /// split, train, rerank, attribute, explain and eval in one go.
    Run {
        #[arg(long)]
        scorer: ScorerName,
        #[arg(long, default_value = "test")]
        partition: Partition,
        #[arg(long)]
        offline: bool,
    },
    /// Serve /health, /rerank and /explain.
    Serve {
        #[arg(long)]
        scorer: ScorerName,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long)]
        offline: bool,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    if let Some(d) = cli.dataset {
        cfg.dataset = d;
    }
    if let Some(k1) = cli.k1 {
        cfg.bm25.k1 = k1;
    }
    if let Some(b) = cli.b {
        cfg.bm25.b = b;
    }
    if let Some(m) = cli.m {
        cfg.retrieve_m = m;
    }
    if let Some(s) = cli.seed {
        cfg.split_seed = s;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }

    if let Cmd::Ingest = cli.cmd {
        println!("{}", pipeline::cmd_ingest(&cfg.dataset)?);
        return Ok(());
    }
    match &cli.cmd {
        Cmd::Train {
            epochs,
            lr,
            batch_size,
            ..
        } => {
            if let Some(e) = epochs {
                cfg.train.epochs = *e;
            }
            if let Some(lr) = lr {
                cfg.train.learning_rate = *lr;
            }
            if let Some(b) = batch_size {
                cfg.train.batch_size = *b;
            }
        }
        Cmd::Attribute {
            top_n,
            permutations,
            ..
        } => {
            if let Some(n) = top_n {
                cfg.explain.top_n = *n;
            }
            if let Some(p) = permutations {
                cfg.attribution.permutations = *p;
            }
        }
        _ => {}
    }

    let ctx = Context::load(cfg)?;
    match cli.cmd {
        Cmd::Ingest => unreachable!(),
        Cmd::Split => {
            let m = pipeline::cmd_split(&ctx)?;
            println!(
                "train={} validation={} test={}",
                m.train.len(),
                m.validation.len(),
                m.test.len()
            );
        }
        Cmd::Train { objective, .. } => {
            let a = pipeline::cmd_train(&ctx, objective)?;
            println!(
                "objective={} loss={:.6} accuracy={:.4} validation_accuracy={:.4}",
                objective,
                a.report.final_loss(),
                a.report.accuracy,
                a.validation_accuracy
            );
        }
        Cmd::Rerank {
            scorer,
            partition,
            m_r,
        } => {
            let lists = pipeline::cmd_rerank(&ctx, scorer, partition, m_r)?;
            println!("lists={}", lists.len());
        }
        Cmd::Attribute { scorer, .. } => {
            let files = pipeline::cmd_attribute(&ctx, scorer)?;
            println!("attributions={}", files.len());
        }
        Cmd::Explain { scorer, offline } => {
            let recs = pipeline::cmd_explain(&ctx, scorer, offline)?;
            println!("explanations={}", recs.len());
        }
        Cmd::Eval { scorer } => print_eval(scorer, &pipeline::cmd_eval(&ctx, scorer)?),
        Cmd::Run {
            scorer,
            partition,
            offline,
        } => {
            let r = pipeline::cmd_run(&ctx, scorer, partition, offline)?;
            println!(
                "lists={} attributions={} explanations={}",
                r.lists, r.attributions, r.explanations
            );
            print_eval(scorer, &r.eval);
        }
        Cmd::Serve {
            scorer,
            addr,
            offline,
        } => {
            let state = Arc::new(AppState::new(ctx, scorer, offline)?);
            let listener = std::net::TcpListener::bind(addr)?;
            log::info!("listening on {}", listener.local_addr()?);
            server::serve(state, listener)?;
        }
    }
    Ok(())
}

fn print_eval(scorer: ScorerName, e: &pipeline::EvalOutcome) {
    for (name, r) in [(pipeline::BASELINE_LABEL, &e.baseline), (scorer.as_str(), &e.scorer)] {
        println!(
            "{name}: ndcg@5={:.4} ndcg@10={:.4} cos={:.4} bertscore={:.4} bleu={:.4} rouge_l={:.4}",
            r.ndcg_at_5, r.ndcg_at_10, r.cosine, r.bertscore_f1, r.bleu, r.rouge_l
        );
    }
}
