//! Random cost tables and partitions, with cycle counts computed directly
//! from base costs and factors.

use cipherpipe::perf::{CostTable, Feature, FeatureCosts, FeatureSet};
use cipherpipe::product::{CipherId, StageSpec};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Random {
    pub base: [u64; 3],
    pub factors: [[f64; 3]; 3],
    pub table: CostTable,
    pub partitions: Vec<Vec<StageSpec>>,
    pub initial: Vec<FeatureSet>,
    pub stream_len: u64,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Random {
    let base = [
        rng.gen_range(50..2000),
        rng.gen_range(50..2000),
        rng.gen_range(50..2000),
    ];
    let mut factors = [[1.0; 3]; 3];
    for row in factors.iter_mut() {
        for f in row.iter_mut() {
            *f = rng.gen_range(0.4..1.2);
        }
    }
    factors[CipherId::Idea.index()][Feature::Mul as usize] = rng.gen_range(0.3..1.0);
    let costs = |rng: &mut ChaCha8Rng| FeatureCosts {
        base: rng.gen_range(0.0..10.0),
        per_feature: [rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0)],
    };
    let area = costs(rng);
    let power = costs(rng);
    let table = CostTable::from_factors(base, factors, area, power).unwrap();
    let cores = rng.gen_range(1..=6);
    let partitions = (0..cores)
        .map(|_| {
            (0..rng.gen_range(1..=3))
                .map(|_| StageSpec::new(*CipherId::ALL.choose(rng).unwrap(), rng.gen_range(1..=12)).unwrap())
                .collect()
        })
        .collect();
    let initial = (0..cores).map(|_| FeatureSet::from_index(rng.gen_range(0..8))).collect();
    Random {
        base,
        factors,
        table,
        partitions,
        initial,
        stream_len: rng.gen_range(1..5000),
    }
}

/// Cycles for one block computed straight from the base costs and factors.
pub fn oracle_block(case: &Random, stages: &[StageSpec], set: FeatureSet) -> u64 {
    stages
        .iter()
        .map(|s| {
            let c = s.cipher.index();
            let factor: f64 = Feature::ALL
                .iter()
                .filter(|&&f| set.has(f))
                .map(|&f| case.factors[c][f as usize])
                .product();
            s.iterations() as u64 * (case.base[c] as f64 * factor).round() as u64
        })
        .sum()
}

pub fn oracle_system(case: &Random, sets: &[FeatureSet], len: u64) -> u64 {
    let mut fill = 0;
    let mut worst = 0;
    for (p, &s) in case.partitions.iter().zip(sets) {
        let b = oracle_block(case, p, s);
        worst = worst.max(len * b + fill);
        fill += b;
    }
    worst
}

