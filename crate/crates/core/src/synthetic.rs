//! Planted-preference data in feature space.
//!
//! Each group (one simulated query) holds `items` feature vectors
//! `f = c_g + x`, where `x` is item-specific and `c_g` is a per-group offset
//! along a fixed direction. Grades rank the items of a group by the latent
//! utility `w*·x + noise`, spread over 0..=9. Because grades are relative
//! within a group, the offsets carry no signal: pairwise objectives ignore
//! them (they cancel in `f(pos) − f(neg)`) while pointwise regression must
//! absorb them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::MAX_RELEVANCE;
use crate::scalar::{dot, Scalar};
use crate::training::{sub, PointExample};

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub groups: usize,
    pub items: usize,
    pub seed: u64,
    /// Amplitude of per-group offsets.
    pub offset_scale: f64,
    /// Amplitude of uniform noise added to the latent utility.
    pub noise: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            groups: 94,
            items: 10,
            seed: 0,
            offset_scale: 4.0,
            noise: 0.5,
        }
    }
}

/// The generator's ground-truth weights; the last coordinate is the bias.
pub const PLANTED_WEIGHTS: [f64; 6] = [1.0, 0.8, -0.5, 0.3, 0.6, 0.0];
const OFFSET_DIRECTION: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedData<F> {
    pub truth: Vec<F>,
    /// Per group: (features, grade).
    pub groups: Vec<Vec<(Vec<F>, u8)>>,
}

pub fn generate<F: Scalar>(cfg: &PlantedConfig) -> PlantedData<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = PLANTED_WEIGHTS.len();
    let groups = (0..cfg.groups)
        .map(|_| {
            let c: f64 = rng.random_range(-1.0..1.0) * cfg.offset_scale;
            let rows: Vec<(Vec<f64>, f64)> = (0..cfg.items)
                .map(|_| {
                    let mut x: Vec<f64> = (0..dim - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
                    x.push(0.0);
                    let u = dot(&PLANTED_WEIGHTS, &x) + cfg.noise * rng.random_range(-1.0..1.0);
                    let mut f: Vec<f64> = x[..dim - 1]
                        .iter()
                        .zip(OFFSET_DIRECTION)
                        .map(|(xi, v)| xi + c * v)
                        .collect();
                    f.push(1.0);
                    (f, u)
                })
                .collect();
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.sort_by(|&a, &b| rows[a].1.total_cmp(&rows[b].1));
            let mut grades = vec![0u8; rows.len()];
            let top = (rows.len().max(2) - 1) as f64;
            for (rank, &i) in order.iter().enumerate() {
                grades[i] = (rank as f64 * f64::from(MAX_RELEVANCE) / top).round() as u8;
            }
            rows.into_iter()
                .zip(grades)
                .map(|((f, _), g)| (f.into_iter().map(F::lit).collect(), g))
                .collect()
        })
        .collect();
    PlantedData {
        truth: PLANTED_WEIGHTS.iter().map(|&w| F::lit(w)).collect(),
        groups,
    }
}

impl<F: Scalar> PlantedData<F> {
    pub fn point_examples(&self, groups: std::ops::Range<usize>) -> Vec<PointExample<F>> {
        let nine = F::from_count(MAX_RELEVANCE as usize);
        self.groups[groups.clone()]
            .iter()
            .zip(groups)
            .flat_map(|(g, gi)| {
                g.iter().map(move |(f, r)| PointExample {
                    features: f.clone(),
                    target: F::from_count(*r as usize) / nine,
                    group: gi,
                })
            })
            .collect()
    }

    /// Top-half × bottom-half differences per group, dropping equal grades.
    pub fn pair_diffs(&self, groups: std::ops::Range<usize>) -> Vec<Vec<F>> {
        let mut out = Vec::new();
        for g in &self.groups[groups] {
            let mut idx: Vec<usize> = (0..g.len()).collect();
            idx.sort_by(|&a, &b| g[b].1.cmp(&g[a].1).then(a.cmp(&b)));
            let (top, bottom) = idx.split_at(g.len().div_ceil(2));
            for &p in top {
                for &n in bottom {
                    if g[p].1 > g[n].1 {
                        out.push(sub(&g[p].0, &g[n].0));
                    }
                }
            }
        }
        out
    }
}
