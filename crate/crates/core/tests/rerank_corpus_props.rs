use proptest::prelude::*;
use rerank_core::corpus::{
    build_all_pairs, build_preference_pairs, parse_dataset, split_dataset, ExpertRanking,
    Judgment, Query, ResponseItem,
};
use rerank_core::rerank::rerank;
use rerank_core::scorer::{OracleScorer, RankScorer, ScoreError};

struct Table(Vec<f64>);

impl RankScorer<f64> for Table {
    fn score(&self, _: &Query, item: &ResponseItem) -> Result<f64, ScoreError> {
        Ok(self.0[item.id[1..].parse::<usize>().unwrap()])
    }
}

fn items(n: usize) -> Vec<ResponseItem> {
    (0..n)
        .map(|i| ResponseItem::new(format!("i{i}"), "u", format!("text {i}")).unwrap())
        .collect()
}

fn ranking(id: usize, grades: &[u8]) -> ExpertRanking {
    ExpertRanking {
        query: Query::new(format!("q{id}"), "query").unwrap(),
        judged: items(grades.len())
            .into_iter()
            .zip(grades)
            .map(|(item, &relevance)| Judgment { item, relevance })
            .collect(),
    }
}

proptest! {
    #[test]
    fn rerank_sorts_stably(scores in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0, 2.0, -1.0]), 1..15)) {
        let cands = items(scores.len());
        let q = Query::new("q", "query").unwrap();
        let list = rerank(&q, &cands, &Table(scores.clone()), None).unwrap();
        prop_assert_eq!(list.entries.len(), scores.len());
        for w in list.entries.windows(2) {
            prop_assert!(w[0].score >= w[1].score);
            if w[0].score == w[1].score {
                // Equal scores keep candidate order.
                prop_assert!(w[0].item.id[1..].parse::<usize>().unwrap() < w[1].item.id[1..].parse::<usize>().unwrap());
            }
        }
        for (r, e) in list.entries.iter().enumerate() {
            prop_assert_eq!(e.rank, r + 1);
        }
    }

    #[test]
    fn truncation_keeps_prefix(n in 2usize..15, m in 1usize..15) {
        let scores: Vec<f64> = (0..n).map(|i| (i * 7 % 5) as f64).collect();
        let q = Query::new("q", "query").unwrap();
        let full = rerank(&q, &items(n), &Table(scores.clone()), None).unwrap();
        match rerank(&q, &items(n), &Table(scores), Some(m)) {
            Ok(cut) => {
                prop_assert!(m < n);
                prop_assert_eq!(&cut.entries[..], &full.entries[..m]);
            }
            Err(_) => prop_assert!(m >= n),
        }
    }

    #[test]
    fn pairs_are_strict_preferences(grades in prop::collection::vec(0u8..=9, 2..=12)) {
        let r = ranking(0, &grades);
        for p in build_preference_pairs(&r).unwrap() {
            prop_assert!(r.relevance_of(&p.positive.id).unwrap() > r.relevance_of(&p.negative.id).unwrap());
        }
    }

    #[test]
    fn oracle_order_is_ideal(grades in prop::collection::vec(0u8..=9, 2..=10)) {
        let r = ranking(0, &grades);
        let list: rerank_core::RerankedListF64 = rerank(&r.query, &r.items(), &OracleScorer::from_rankings(std::slice::from_ref(&r)), None).unwrap();
        let got: Vec<u8> = list.entries.iter().map(|e| r.relevance_of(&e.item.id).unwrap()).collect();
        let mut want = grades.clone();
        want.sort_by(|a, b| b.cmp(a));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn split_partitions_every_query(n in 1usize..120, seed in any::<u64>()) {
        let data: Vec<ExpertRanking> = (0..n).map(|i| ranking(i, &[1, 0])).collect();
        let s = split_dataset(&data, seed).unwrap();
        let mut ids: Vec<String> = s.train.iter().chain(&s.validation).chain(&s.test).map(|r| r.query.id.clone()).collect();
        ids.sort();
        let mut want: Vec<String> = data.iter().map(|r| r.query.id.clone()).collect();
        want.sort();
        prop_assert_eq!(ids, want);
        prop_assert_eq!(s.validation.len(), n / 10);
        prop_assert_eq!(s.test.len(), n / 10);
        let again = split_dataset(&data, seed).unwrap();
        prop_assert_eq!(s.manifest(), again.manifest());
    }
}

#[test]
fn shipped_fixture_counts() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/dataset_94.jsonl");
    let data = parse_dataset(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(data.len(), 94);
    assert_eq!(rerank_core::corpus::count_pointwise_examples(&data), 940);
    assert_eq!(build_all_pairs(&data).unwrap().len(), 2350);
}
