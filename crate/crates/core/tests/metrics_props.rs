use std::collections::HashMap;

use proptest::prelude::*;
use rerank_core::metrics::{
    bertscore_f1, bleu, cosine_similarity, ndcg_at_k, rouge_l, HashedNgramEmbedding,
};
use rerank_core::retrieval::tokenize;

/// Σ rel_p / log2(p + 1) over positions 1..=k, divided by the same sum
/// over grades sorted descending.
fn ndcg_oracle(grades_in_order: &[u8], k: usize) -> f64 {
    let dcg = |g: &[u8]| -> f64 {
        g.iter()
            .take(k)
            .enumerate()
            .map(|(i, &r)| r as f64 / ((i + 2) as f64).log2())
            .sum()
    };
    let mut ideal = grades_in_order.to_vec();
    ideal.sort_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        0.0
    } else {
        dcg(grades_in_order) / idcg
    }
}

fn table(grades: &[u8]) -> (Vec<usize>, HashMap<usize, u8>) {
    let ids: Vec<usize> = (0..grades.len()).collect();
    (ids, grades.iter().copied().enumerate().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ndcg_matches_direct_formula(grades in prop::collection::vec(0u8..=9, 1..=10), k in 1usize..=12) {
        let (order, rel) = table(&grades);
        let got: f64 = ndcg_at_k(&order, &rel, k).unwrap();
        prop_assert!((got - ndcg_oracle(&grades, k)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&got));
    }

    #[test]
    fn ideal_order_scores_one(grades in prop::collection::vec(0u8..=9, 1..=10)) {
        prop_assume!(grades.iter().any(|&g| g > 0));
        let mut sorted = grades.clone();
        sorted.sort_by(|a, b| b.cmp(a));
        let (order, rel) = table(&sorted);
        prop_assert_eq!(ndcg_at_k::<f64, _>(&order, &rel, 10).unwrap(), 1.0);
    }

    #[test]
    fn fixing_an_inversion_never_lowers_ndcg(grades in prop::collection::vec(0u8..=9, 2..=10)) {
        let (order, rel) = table(&grades);
        let before: f64 = ndcg_at_k(&order, &rel, 10).unwrap();
        for i in 0..grades.len() {
            for j in i + 1..grades.len() {
                if grades[i] < grades[j] {
                    let mut swapped = order.clone();
                    swapped.swap(i, j);
                    let after: f64 = ndcg_at_k(&swapped, &rel, 10).unwrap();
                    prop_assert!(after >= before - 1e-15);
                }
            }
        }
    }
}

const WORDS: [&str; 8] = ["carbon", "flux", "ocean", "data", "aerosol", "trend", "ice", "co2"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn text_metrics_are_one_on_identical_input(words in prop::collection::vec(0..WORDS.len(), 1..30)) {
        let text: Vec<&str> = words.iter().map(|&w| WORDS[w]).collect();
        let text = text.join(" ");
        let toks = tokenize(&text);
        let p = HashedNgramEmbedding::default();
        prop_assert!((bleu::<f64, _>(&toks, &toks, 4) - 1.0).abs() <= 1e-9);
        prop_assert!((rouge_l::<f64, _>(&toks, &toks).f1 - 1.0).abs() <= 1e-9);
        prop_assert!((cosine_similarity::<f64>(&text, &text, &p).unwrap() - 1.0).abs() <= 1e-9);
        prop_assert!((bertscore_f1::<f64, _>(&toks, &toks, &p).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn text_metrics_are_bounded(
        a in prop::collection::vec(0..WORDS.len(), 1..20),
        b in prop::collection::vec(0..WORDS.len(), 1..20),
    ) {
        let ta: Vec<&str> = a.iter().map(|&w| WORDS[w]).collect();
        let tb: Vec<&str> = b.iter().map(|&w| WORDS[w]).collect();
        let p = HashedNgramEmbedding::default();
        for v in [
            bleu::<f64, _>(&ta, &tb, 4),
            rouge_l::<f64, _>(&ta, &tb).f1,
            bertscore_f1::<f64, _>(&ta, &tb, &p).unwrap(),
            cosine_similarity::<f64>(&ta.join(" "), &tb.join(" "), &p).unwrap(),
        ] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v), "{}", v);
        }
    }
}

#[test]
fn hand_computed_rouge_and_bleu() {
    // LCS("the cat sat on the mat", "the cat on the mat") = 5.
    let c = tokenize("the cat sat on the mat");
    let r = tokenize("the cat on the mat");
    let rl = rouge_l::<f64, _>(&c, &r);
    assert!((rl.precision - 5.0 / 6.0).abs() < 1e-9);
    assert!((rl.recall - 1.0).abs() < 1e-9);
    assert!((rl.f1 - 2.0 * (5.0 / 6.0) / (5.0 / 6.0 + 1.0)).abs() < 1e-9);
    // Unigram BLEU with a shorter candidate: precision 1, brevity e^(1 - 5/3).
    let c = tokenize("the cat on");
    let b1 = bleu::<f64, _>(&c, &r, 1);
    assert!((b1 - (1.0f64 - 5.0 / 3.0).exp()).abs() < 1e-9);
}
