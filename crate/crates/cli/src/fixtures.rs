//! Synthetic, schema-compatible datasets.
//!
//! Every ranking has ten items in five kinds:
//!
//! | kind | count | grades | text |
//! |------|-------|--------|------|
//! | core | 2 | 7-9 | every query term plus filler |
//! | near | 3 | 5-6 | all query terms but one |
//! | partial | 2 | 3-4 | a single query term |
//! | stuffed | 1 | 1-3 | the rarest query term repeated in a short text |
//! | off-topic | 2 | 0-1 | another query's words, none of this query's |
//!
//! The five best items always outrank the five worst, so each ranking gives
//! 25 preference pairs. Stuffed items score high under BM25 while carrying
//! low grades.

use std::collections::{BTreeSet, HashMap};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rerank_core::retrieval::tokenize;
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 7;

const FIXED_QUERIES: [&str; 4] = [
    "Aerosol Concentration dataset",
    "Atmospheric CO2 concentration trends",
    "Ocean temperature monitoring data",
    "Carbon data calculation methods",
];

const SUBJECTS: [&str; 32] = [
    "Aerosol",
    "Methane",
    "Soil moisture",
    "Sea ice",
    "Precipitation",
    "River discharge",
    "Ozone",
    "Nitrogen dioxide",
    "Biodiversity",
    "Forest biomass",
    "Glacier mass",
    "Sea level",
    "Groundwater",
    "Wind speed",
    "Solar radiation",
    "Particulate matter",
    "Ocean salinity",
    "Phytoplankton",
    "Permafrost",
    "Snow cover",
    "Air quality",
    "Land cover",
    "Evapotranspiration",
    "Seismic activity",
    "Volcanic ash",
    "Coral reef",
    "Wetland",
    "Ocean acidity",
    "Pollen",
    "Lake ice",
    "Dust storm",
    "Nitrous oxide",
];

const ASPECTS: [&str; 12] = [
    "monitoring data",
    "concentration trends",
    "calculation methods",
    "time series",
    "satellite observations",
    "station measurements",
    "model outputs",
    "flux estimates",
    "gridded products",
    "historical records",
    "daily averages",
    "field campaigns",
];

const FILLER: [&str; 60] = [
    "infrastructure", "portal", "access", "provides", "repository", "archive", "network",
    "coverage", "resolution", "spatial", "temporal", "european", "research", "harmonised",
    "lineage", "controlled", "open", "licence", "metadata", "catalogue", "instrument",
    "processing", "tiles", "version", "users", "scientists", "download", "format", "netcdf",
    "hourly", "annual", "global", "regional", "validated", "calibration", "uncertainty",
    "documentation", "service", "collection", "sampling", "sensors", "platform", "curated",
    "variables", "period", "domain", "analysis", "community", "standard", "protocol",
    "provenance", "interoperable", "release", "citation", "baseline", "retrieval", "mission",
    "inventory", "workflow", "outreach",
];

#[derive(Clone, Debug, Serialize)]
pub struct FixtureItem {
    pub item_id: String,
    pub url: String,
    pub summary: String,
    pub relevance: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureRanking {
    pub query_id: String,
    pub query_text: String,
    pub items: Vec<FixtureItem>,
}

fn query_texts(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out: Vec<String> = FIXED_QUERIES.iter().map(|s| s.to_string()).collect();
    let mut combos: Vec<(usize, usize)> = (0..SUBJECTS.len())
        .flat_map(|s| (0..ASPECTS.len()).map(move |a| (s, a)))
        .collect();
    combos.shuffle(rng);
    let mut seen: BTreeSet<Vec<String>> = out.iter().map(|q| tokenize(q)).collect();
    for (s, a) in combos {
        if out.len() >= n {
            break;
        }
        let q = format!("{} {}", SUBJECTS[s], ASPECTS[a]);
        if seen.insert(tokenize(&q)) {
            out.push(q);
        }
    }
    out.truncate(n);
    out
}

fn sentence(mut words: Vec<String>, rng: &mut ChaCha8Rng) -> String {
    words.shuffle(rng);
    let mut s = words.join(" ");
    if let Some(first) = s.get(..1) {
        s = first.to_uppercase() + &s[1..];
    }
    s.push('.');
    s
}

fn filler(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    FILLER.choose_multiple(rng, n).map(|w| w.to_string()).collect()
}

/// `n` rankings drawn from a seeded generator. The first rankings use the
/// four fixed queries.
pub fn generate(n: usize, seed: u64) -> Vec<FixtureRanking> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries = query_texts(n, &mut rng);
    let term_sets: Vec<Vec<String>> = queries.iter().map(|q| tokenize(q)).collect();
    // Document frequency over queries decides which term is rarest.
    let mut df: HashMap<&str, usize> = HashMap::new();
    for terms in &term_sets {
        for t in terms.iter().collect::<BTreeSet<_>>() {
            *df.entry(t.as_str()).or_default() += 1;
        }
    }

    let mut out = Vec::with_capacity(n);
    for (qi, (text, terms)) in queries.iter().zip(&term_sets).enumerate() {
        let qid = format!("q{:03}", qi + 1);
        let mut kinds: Vec<(Vec<String>, u8)> = Vec::with_capacity(10);

        let mut core_grades = vec![7u8, 8, 9];
        core_grades.shuffle(&mut rng);
        for &g in &core_grades[..2] {
            let mut w = terms.clone();
            w.extend(filler(rng.random_range(14..=20), &mut rng));
            kinds.push((w, g));
        }
        for _ in 0..3 {
            let mut w = terms.clone();
            w.remove(rng.random_range(0..w.len()));
            w.extend(filler(rng.random_range(14..=20), &mut rng));
            kinds.push((w, rng.random_range(5..=6)));
        }
        for _ in 0..2 {
            let mut w = vec![terms.choose(&mut rng).expect("non-empty query").clone()];
            w.extend(filler(rng.random_range(16..=22), &mut rng));
            kinds.push((w, rng.random_range(3..=4)));
        }
        let rarest = terms
            .iter()
            .min_by_key(|t| (df[t.as_str()], t.as_str()))
            .expect("non-empty query");
        let mut w = vec![rarest.clone(); 4];
        w.extend(filler(rng.random_range(1..=2), &mut rng));
        kinds.push((w, rng.random_range(1..=3)));
        for _ in 0..2 {
            let other = loop {
                let j = rng.random_range(0..term_sets.len());
                if term_sets[j].iter().all(|t| !terms.contains(t)) {
                    break &term_sets[j];
                }
            };
            let mut w = other.clone();
            w.extend(filler(rng.random_range(14..=20), &mut rng));
            kinds.push((w, rng.random_range(0..=1)));
        }

        kinds.shuffle(&mut rng);
        let items = kinds
            .into_iter()
            .enumerate()
            .map(|(i, (words, relevance))| FixtureItem {
                item_id: format!("{qid}-d{:02}", i + 1),
                url: format!("https://catalogue.example.org/datasets/{qid}-d{:02}", i + 1),
                summary: sentence(words, &mut rng),
                relevance,
            })
            .collect();
        out.push(FixtureRanking {
            query_id: qid,
            query_text: text.clone(),
            items,
        });
    }
    out
}

pub fn to_jsonl(rankings: &[FixtureRanking]) -> String {
    let mut s = String::new();
    for r in rankings {
        s.push_str(&serde_json::to_string(r).expect("plain data serializes"));
        s.push('\n');
    }
    s
}

pub const DATASET_SCHEMA: &str = r#"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "Expert ranking (one JSON object per line)",
  "type": "object",
  "additionalProperties": false,
  "required": ["query_id", "query_text", "items"],
  "properties": {
    "query_id": { "type": "string", "minLength": 1 },
    "query_text": { "type": "string", "minLength": 1 },
    "items": {
      "type": "array",
      "description": "Judged items; ten per ranking in the collected data.",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["item_id", "url", "summary", "relevance"],
        "properties": {
          "item_id": { "type": "string", "minLength": 1 },
          "url": { "type": "string" },
          "summary": { "type": "string", "minLength": 1 },
          "relevance": { "type": "integer", "minimum": 0, "maximum": 9 }
        }
      }
    }
  }
}
"#;

/// The attributed example used for prompt-fidelity checks.
pub const TABLE3_FIXTURE: &str = r#"{
  "query_id": "table3",
  "query": "Carbon data calculation methods",
  "item_id": "table3-d01",
  "url": "https://catalogue.example.org/datasets/terrestrial-carbon-flux",
  "summary": "Carbon emissions dataset with flux measurement and terrestrial carbon_cycle model outputs for greenhouse gas calculation.",
  "top_tokens": [
    { "token": "carbon", "value": 0.32 },
    { "token": "calculation", "value": 0.28 },
    { "token": "emissions", "value": 0.25 },
    { "token": "dataset", "value": 0.20 },
    { "token": "measurement", "value": 0.18 },
    { "token": "flux", "value": 0.15 },
    { "token": "terrestrial", "value": 0.14 },
    { "token": "carbon_cycle", "value": 0.13 },
    { "token": "model", "value": 0.12 },
    { "token": "greenhouse", "value": 0.10 }
  ]
}
"#;

/// File name and contents of every shipped fixture.
pub fn all_files() -> Vec<(&'static str, String)> {
    let big = generate(94, DEFAULT_SEED);
    vec![
        ("dataset_94.jsonl", to_jsonl(&big)),
        ("dataset_10.jsonl", to_jsonl(&big[..10])),
        ("dataset.schema.json", DATASET_SCHEMA.to_string()),
        ("table3.json", TABLE3_FIXTURE.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rerank_core::corpus::{build_all_pairs, parse_dataset};

    #[test]
    fn counts_and_pairs() {
        let data = parse_dataset(&to_jsonl(&generate(94, DEFAULT_SEED))).unwrap();
        assert_eq!(data.len(), 94);
        assert!(data.iter().all(|r| r.judged.len() == 10));
        assert_eq!(build_all_pairs(&data).unwrap().len(), 2350);
        assert_eq!(data[0].query.text, "Aerosol Concentration dataset");
    }

    #[test]
    fn filler_never_matches_a_query_term() {
        let qs: BTreeSet<String> = generate(94, DEFAULT_SEED)
            .iter()
            .flat_map(|r| tokenize(&r.query_text))
            .collect();
        for w in FILLER {
            assert!(!qs.contains(w), "{w}");
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(to_jsonl(&generate(20, 3)), to_jsonl(&generate(20, 3)));
    }
}
