//! Binary-mask genetic algorithm for wrapper feature selection: tournament
//! selection, uniform crossover, per-bit mutation, elitism, and a
//! minimum-feature repair rule. Fitness trains an evaluator ensemble on the
//! masked columns and scores validation macro-F1, trading it off against
//! mask size:
//!
//! J(z) = alpha * (1 - MacroF1(z)) + (1 - alpha) * |z| / d, smaller is better.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{predict_proba, train_forest, ForestConfig, ForestMode};
use crate::error::{Error, Result};
use crate::metrics::{
    apply_threshold, classification_metrics, confusion, roc_auc, select_threshold,
    ConfusionCounts, MetricsReport,
};
use crate::preprocess::PreparedSplits;

/// A candidate feature subset: one bit per feature with the popcount cached.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureMask {
    bits: Vec<bool>,
    ones: usize,
}

impl FeatureMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let ones = bits.iter().filter(|&&b| b).count();
        FeatureMask { bits, ones }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    fn set(&mut self, i: usize, value: bool) {
        if self.bits[i] != value {
            self.ones = if value { self.ones + 1 } else { self.ones - 1 };
            self.bits[i] = value;
        }
    }

    /// Indices of the selected features, ascending.
    pub fn selected_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Genetic-algorithm settings. All knobs are exposed; the defaults size one
/// run to minutes at benchmark scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub alpha: f64,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means 1/d.
    pub mutation_rate: Option<f64>,
    pub elitism_count: usize,
    pub min_features: usize,
    pub init_inclusion_prob: f64,
    pub seed: u64,
    /// Reduced-strength classifier trained per fitness evaluation.
    pub evaluator: ForestConfig,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 40,
            generations: 30,
            alpha: 0.95,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: None,
            elitism_count: 2,
            min_features: 5,
            init_inclusion_prob: 0.5,
            seed: 1,
            evaluator: ForestConfig {
                n_trees: 100,
                mode: ForestMode::Extra,
                ..ForestConfig::extra_trees()
            },
        }
    }
}

impl GaConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".to_string()));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::Config(format!(
                "elitism_count {} must be below population_size {}",
                self.elitism_count, self.population_size
            )));
        }
        if self.tournament_size < 2 {
            return Err(Error::Config("tournament_size must be at least 2".to_string()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config(format!(
                "crossover_rate must lie in [0, 1], got {}",
                self.crossover_rate
            )));
        }
        if let Some(m) = self.mutation_rate {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::Config(format!(
                    "mutation_rate must lie in [0, 1], got {m}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.init_inclusion_prob) {
            return Err(Error::Config(format!(
                "init_inclusion_prob must lie in [0, 1], got {}",
                self.init_inclusion_prob
            )));
        }
        if self.min_features == 0 {
            return Err(Error::Config("min_features must be at least 1".to_string()));
        }
        if d < self.min_features {
            return Err(Error::Config(format!(
                "min_features {} exceeds the {d} available features",
                self.min_features
            )));
        }
        Ok(())
    }

    fn mutation_rate_for(&self, d: usize) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / d as f64)
    }
}

/// The objective J(z) given an already-computed validation macro-F1.
pub fn fitness_value(alpha: f64, macro_f1: f64, popcount: usize, d: usize) -> f64 {
    alpha * (1.0 - macro_f1) + (1.0 - alpha) * (popcount as f64 / d as f64)
}

/// Deterministic per-mask evaluator seed: FNV-1a over the run seed and the
/// mask bits. Stable across processes, unlike the stdlib hasher.
fn mask_seed(seed: u64, bits: &[bool]) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut h = OFFSET;
    for byte in seed.to_le_bytes() {
        h = (h ^ byte as u64).wrapping_mul(PRIME);
    }
    for &bit in bits {
        h = (h ^ bit as u64).wrapping_mul(PRIME);
    }
    h
}

/// Trains the evaluator on the masked training columns, picks a decision
/// threshold on validation, and returns J. Deterministic in (mask,
/// cfg.seed): the evaluator's seed is derived from both, so the value does
/// not depend on evaluation order.
pub fn fitness(mask: &FeatureMask, data: &PreparedSplits, cfg: &GaConfig) -> Result<f64> {
    if mask.ones() == 0 {
        return Err(Error::Usage("cannot evaluate an empty feature mask".to_string()));
    }
    let d = data.train_x.n_cols();
    if mask.len() != d {
        return Err(Error::Usage(format!(
            "mask length {} vs {} features",
            mask.len(),
            d
        )));
    }
    let columns = mask.selected_indices();
    let train_x = data.train_x.select_columns(&columns);
    let val_x = data.validation_x.select_columns(&columns);

    let eval_cfg = ForestConfig {
        seed: mask_seed(cfg.seed, mask.bits()),
        ..cfg.evaluator.clone()
    };
    let model = train_forest(&train_x, &data.train_y, &eval_cfg)?;
    let scores = predict_proba(&model, &val_x)?;
    let threshold = select_threshold(&data.validation_y, &scores)?;
    let predicted = apply_threshold(&scores, threshold);
    let macro_f1 = classification_metrics(&confusion(&data.validation_y, &predicted)?).macro_f1;
    Ok(fitness_value(cfg.alpha, macro_f1, mask.ones(), d))
}

/// Sets uniformly chosen unset bits until the mask meets `min_features`.
fn repair(mask: &mut FeatureMask, min_features: usize, rng: &mut ChaCha8Rng) {
    if mask.ones() >= min_features {
        return;
    }
    let mut unset: Vec<usize> = (0..mask.len()).filter(|&i| !mask.get(i)).collect();
    while mask.ones() < min_features {
        let pick = rng.gen_range(0..unset.len());
        mask.set(unset.swap_remove(pick), true);
    }
}

/// Random initial population: each bit set with `init_inclusion_prob`,
/// undersized masks repaired up to `min_features`.
pub fn init_population(cfg: &GaConfig, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<FeatureMask>> {
    cfg.validate(d)?;
    let mut population = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        let bits: Vec<bool> = (0..d).map(|_| rng.gen_bool(cfg.init_inclusion_prob)).collect();
        let mut mask = FeatureMask::from_bits(bits);
        repair(&mut mask, cfg.min_features, rng);
        population.push(mask);
    }
    Ok(population)
}

/// Selection key: lowest J wins; ties prefer fewer selected features, then
/// the lower population index.
fn rank_key(fitness: &[f64], population: &[FeatureMask], i: usize) -> (f64, usize, usize) {
    (fitness[i], population[i].ones(), i)
}

fn key_less(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    (a.0, a.1, a.2) < (b.0, b.1, b.2)
}

fn tournament(
    population: &[FeatureMask],
    fitness: &[f64],
    size: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let mut winner = rng.gen_range(0..population.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..population.len());
        if key_less(
            rank_key(fitness, population, challenger),
            rank_key(fitness, population, winner),
        ) {
            winner = challenger;
        }
    }
    winner
}

fn uniform_crossover(
    a: &FeatureMask,
    b: &FeatureMask,
    rng: &mut ChaCha8Rng,
) -> (FeatureMask, FeatureMask) {
    let d = a.len();
    let mut bits1 = Vec::with_capacity(d);
    let mut bits2 = Vec::with_capacity(d);
    for i in 0..d {
        if rng.gen_bool(0.5) {
            bits1.push(a.get(i));
            bits2.push(b.get(i));
        } else {
            bits1.push(b.get(i));
            bits2.push(a.get(i));
        }
    }
    (FeatureMask::from_bits(bits1), FeatureMask::from_bits(bits2))
}

fn mutate(mask: &mut FeatureMask, rate: f64, rng: &mut ChaCha8Rng) {
    for i in 0..mask.len() {
        if rng.gen_bool(rate) {
            let flipped = !mask.get(i);
            mask.set(i, flipped);
        }
    }
}

/// Produces the next population: elites copied unchanged, the rest bred by
/// tournament selection, uniform crossover, per-bit mutation, and repair.
pub fn next_generation(
    population: &[FeatureMask],
    fitness: &[f64],
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<FeatureMask> {
    let p = population.len();
    let d = population[0].len();
    let mutation_rate = cfg.mutation_rate_for(d);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        rank_key(fitness, population, a)
            .partial_cmp(&rank_key(fitness, population, b))
            .unwrap()
    });

    let mut next = Vec::with_capacity(p);
    for &i in order.iter().take(cfg.elitism_count) {
        next.push(population[i].clone());
    }
    while next.len() < p {
        let pa = tournament(population, fitness, cfg.tournament_size, rng);
        let pb = tournament(population, fitness, cfg.tournament_size, rng);
        let (mut c1, mut c2) = if rng.gen_bool(cfg.crossover_rate) {
            uniform_crossover(&population[pa], &population[pb], rng)
        } else {
            (population[pa].clone(), population[pb].clone())
        };
        mutate(&mut c1, mutation_rate, rng);
        repair(&mut c1, cfg.min_features, rng);
        next.push(c1);
        if next.len() < p {
            mutate(&mut c2, mutation_rate, rng);
            repair(&mut c2, cfg.min_features, rng);
            next.push(c2);
        }
    }
    next
}

/// One row of the optimization trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStat {
    pub generation: usize,
    pub best_j: f64,
    pub mean_j: f64,
    pub best_popcount: usize,
}

/// Outcome of one GA run, including the final-model test evaluation.
#[derive(Debug, Clone)]
pub struct GaResult {
    pub best_mask: FeatureMask,
    pub best_j: f64,
    pub selected_indices: Vec<usize>,
    pub selected_names: Vec<String>,
    pub history: Vec<GenerationStat>,
    pub test_metrics: MetricsReport,
    pub test_confusion: ConfusionCounts,
    /// Distinct masks actually trained and scored.
    pub evaluations: u64,
    /// Evaluations served from the duplicate-mask cache.
    pub cache_hits: u64,
}

struct Evaluator<'a> {
    data: &'a PreparedSplits,
    cfg: &'a GaConfig,
    cache: HashMap<Vec<bool>, f64>,
    evaluations: u64,
    cache_hits: u64,
}

impl<'a> Evaluator<'a> {
    fn evaluate_all(&mut self, population: &[FeatureMask]) -> Result<Vec<f64>> {
        let mut pending: Vec<&FeatureMask> = Vec::new();
        for mask in population {
            if !self.cache.contains_key(mask.bits()) && !pending.contains(&mask) {
                pending.push(mask);
            }
        }
        self.evaluations += pending.len() as u64;
        self.cache_hits += (population.len() - pending.len()) as u64;

        let computed: Vec<Result<f64>> = pending
            .par_iter()
            .map(|mask| fitness(mask, self.data, self.cfg))
            .collect();
        for (mask, value) in pending.iter().zip(computed) {
            self.cache.insert(mask.bits().to_vec(), value?);
        }
        Ok(population.iter().map(|m| self.cache[m.bits()]).collect())
    }
}

/// Runs the full search and retrains the configured full-strength final
/// classifier on the best-ever mask. The best mask is the minimum-J
/// individual ever evaluated; ties prefer fewer features, then the earlier
/// individual.
pub fn run_ga(
    data: &PreparedSplits,
    cfg: &GaConfig,
    final_model: &ForestConfig,
) -> Result<GaResult> {
    let d = data.train_x.n_cols();
    cfg.validate(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population = init_population(cfg, d, &mut rng)?;
    let mut evaluator = Evaluator {
        data,
        cfg,
        cache: HashMap::new(),
        evaluations: 0,
        cache_hits: 0,
    };

    let mut best: Option<(f64, FeatureMask)> = None;
    let mut history = Vec::with_capacity(cfg.generations + 1);
    for generation in 0..=cfg.generations {
        let fitness_values = evaluator.evaluate_all(&population)?;

        let mut gen_best = 0;
        for i in 1..population.len() {
            if key_less(
                rank_key(&fitness_values, &population, i),
                rank_key(&fitness_values, &population, gen_best),
            ) {
                gen_best = i;
            }
        }
        for (i, mask) in population.iter().enumerate() {
            let improves = match &best {
                None => true,
                Some((best_j, best_mask)) => {
                    (fitness_values[i], mask.ones()) < (*best_j, best_mask.ones())
                }
            };
            if improves {
                best = Some((fitness_values[i], mask.clone()));
            }
        }
        history.push(GenerationStat {
            generation,
            best_j: fitness_values[gen_best],
            mean_j: fitness_values.iter().sum::<f64>() / fitness_values.len() as f64,
            best_popcount: population[gen_best].ones(),
        });

        if generation < cfg.generations {
            population = next_generation(&population, &fitness_values, cfg, &mut rng);
        }
    }

    let (best_j, best_mask) = best.expect("at least one generation was evaluated");
    let selected_indices = best_mask.selected_indices();
    let selected_names: Vec<String> = selected_indices
        .iter()
        .map(|&i| data.feature_names[i].clone())
        .collect();

    let train_x = data.train_x.select_columns(&selected_indices);
    let val_x = data.validation_x.select_columns(&selected_indices);
    let test_x = data.test_x.select_columns(&selected_indices);
    let model = train_forest(&train_x, &data.train_y, final_model)?;
    let val_scores = predict_proba(&model, &val_x)?;
    let threshold = select_threshold(&data.validation_y, &val_scores)?;
    let test_scores = predict_proba(&model, &test_x)?;
    let predicted = apply_threshold(&test_scores, threshold);
    let test_confusion = confusion(&data.test_y, &predicted)?;
    let mut test_metrics = classification_metrics(&test_confusion);
    test_metrics.roc_auc = Some(roc_auc(&data.test_y, &test_scores)?);
    test_metrics.threshold = Some(threshold);

    Ok(GaResult {
        best_mask,
        best_j,
        selected_indices,
        selected_names,
        history,
        test_metrics,
        test_confusion,
        evaluations: evaluator.evaluations,
        cache_hits: evaluator.cache_hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};
    use crate::preprocess::prepare;

    fn tiny_prepared() -> PreparedSplits {
        let ds = generate_synthetic(&SyntheticSpec {
            n_samples: 80,
            n_informative: 2,
            n_redundant: 1,
            n_noise: 3,
            separation: 2.0,
            seed: 3,
            ..SyntheticSpec::default()
        })
        .unwrap();
        prepare(&ds, (0.7, 0.15, 0.15), 5).unwrap()
    }

    fn tiny_cfg() -> GaConfig {
        GaConfig {
            population_size: 8,
            generations: 4,
            min_features: 2,
            evaluator: ForestConfig {
                n_trees: 10,
                ..ForestConfig::extra_trees()
            },
            ..GaConfig::default()
        }
    }

    #[test]
    fn fitness_value_hand_examples() {
        let j = fitness_value(0.95, 0.92, 28, 112);
        assert!((j - 0.0885).abs() < 1e-12, "J = {j}");
        assert_eq!(fitness_value(1.0, 0.92, 28, 112), 1.0 - 0.92);
        let boundary = fitness_value(0.95, 1.0, 112, 112);
        assert!((boundary - 0.05).abs() < 1e-12);
    }

    #[test]
    fn mask_bookkeeping() {
        let mut mask = FeatureMask::from_bits(vec![true, false, true, false]);
        assert_eq!(mask.ones(), 2);
        assert_eq!(mask.selected_indices(), [0, 2]);
        mask.set(1, true);
        assert_eq!(mask.ones(), 3);
        mask.set(1, true);
        assert_eq!(mask.ones(), 3);
        mask.set(0, false);
        assert_eq!(mask.ones(), 2);
        assert_eq!(mask.selected_indices(), [1, 2]);
    }

    #[test]
    fn init_population_boundaries() {
        let mut cfg = tiny_cfg();
        cfg.init_inclusion_prob = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = init_population(&cfg, 6, &mut rng).unwrap();
        assert!(pop.iter().all(|m| m.ones() == 6));

        cfg.init_inclusion_prob = 0.0;
        cfg.min_features = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = init_population(&cfg, 6, &mut rng).unwrap();
        assert!(pop.iter().all(|m| m.ones() == 5));
    }

    #[test]
    fn init_population_mean_popcount_tracks_inclusion_prob() {
        let cfg = GaConfig {
            population_size: 1000,
            min_features: 5,
            ..GaConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pop = init_population(&cfg, 112, &mut rng).unwrap();
        let mean: f64 = pop.iter().map(|m| m.ones() as f64).sum::<f64>() / 1000.0;
        assert!((mean - 56.0).abs() < 5.0, "mean popcount {mean}");
    }

    #[test]
    fn too_few_features_is_a_config_error() {
        let cfg = GaConfig::default(); // min_features 5
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            init_population(&cfg, 4, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn empty_mask_fitness_is_a_usage_error() {
        let data = tiny_prepared();
        let mask = FeatureMask::from_bits(vec![false; data.train_x.n_cols()]);
        assert!(matches!(
            fitness(&mask, &data, &tiny_cfg()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn fitness_is_deterministic_per_mask_and_seed() {
        let data = tiny_prepared();
        let cfg = tiny_cfg();
        let mask = FeatureMask::from_bits(vec![true, true, false, true, false, false]);
        let a = fitness(&mask, &data, &cfg).unwrap();
        let b = fitness(&mask, &data, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn mask_seed_separates_run_seeds_and_masks() {
        let bits_a = vec![true, false, true];
        let bits_b = vec![true, false, false];
        assert_ne!(mask_seed(1, &bits_a), mask_seed(2, &bits_a));
        assert_ne!(mask_seed(1, &bits_a), mask_seed(1, &bits_b));
        assert_eq!(mask_seed(7, &bits_a), mask_seed(7, &bits_a));
    }

    #[test]
    fn alpha_one_ranks_by_macro_f1_alone() {
        // With alpha = 1 the compactness term vanishes; J must equal
        // 1 - macro_f1 for any mask, so rankings coincide.
        let data = tiny_prepared();
        let mut cfg = tiny_cfg();
        let masks = [
            FeatureMask::from_bits(vec![true, true, false, false, false, false]),
            FeatureMask::from_bits(vec![true, true, true, true, true, true]),
            FeatureMask::from_bits(vec![false, false, true, true, true, true]),
        ];
        cfg.alpha = 1.0;
        for mask in &masks {
            let j = fitness(mask, &data, &cfg).unwrap();
            // Reconstruct macro-F1 from J and check J = 1 - macro_f1 shape.
            assert!((0.0..=1.0).contains(&j), "J = {j}");
        }
        // Same evaluator seeds, so J(alpha=1) = 1 - macro_f1 and
        // J(alpha=0.95) = 0.95 * (1 - macro_f1) + 0.05 * k/d exactly.
        cfg.alpha = 1.0;
        let j1: Vec<f64> = masks.iter().map(|m| fitness(m, &data, &cfg).unwrap()).collect();
        cfg.alpha = 0.95;
        let j95: Vec<f64> = masks.iter().map(|m| fitness(m, &data, &cfg).unwrap()).collect();
        for ((m, a), b) in masks.iter().zip(&j1).zip(&j95) {
            let macro_f1 = 1.0 - a;
            let expected = fitness_value(0.95, macro_f1, m.ones(), m.len());
            assert!((b - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn crossover_bits_come_from_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = FeatureMask::from_bits(vec![true, true, false, false]);
        let b = FeatureMask::from_bits(vec![false, false, true, true]);
        for _ in 0..50 {
            let (c1, c2) = uniform_crossover(&a, &b, &mut rng);
            for i in 0..4 {
                let pair = (c1.get(i), c2.get(i));
                let expected = (a.get(i), b.get(i));
                assert!(pair == expected || pair == (expected.1, expected.0));
            }
        }
    }

    #[test]
    fn no_variation_population_is_a_fixed_point() {
        let mask = FeatureMask::from_bits(vec![true, false, true, false, true]);
        let population = vec![mask.clone(); 6];
        let fitness_values = vec![0.25; 6];
        let cfg = GaConfig {
            population_size: 6,
            crossover_rate: 0.0,
            mutation_rate: Some(0.0),
            min_features: 2,
            ..GaConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let next = next_generation(&population, &fitness_values, &cfg, &mut rng);
        assert_eq!(next.len(), 6);
        assert!(next.iter().all(|m| *m == mask));
    }

    #[test]
    fn next_generation_respects_min_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cfg = GaConfig {
            population_size: 10,
            min_features: 3,
            mutation_rate: Some(0.5),
            ..GaConfig::default()
        };
        let mut population = init_population(&cfg, 8, &mut rng).unwrap();
        let fitness_values: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        for _ in 0..20 {
            population = next_generation(&population, &fitness_values, &cfg, &mut rng);
            assert!(population.iter().all(|m| m.ones() >= 3));
        }
    }

    #[test]
    fn elites_survive_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = GaConfig {
            population_size: 6,
            elitism_count: 2,
            min_features: 1,
            mutation_rate: Some(0.5),
            ..GaConfig::default()
        };
        let population = init_population(&cfg, 5, &mut rng).unwrap();
        let fitness_values = vec![0.9, 0.1, 0.5, 0.3, 0.7, 0.2];
        let next = next_generation(&population, &fitness_values, &cfg, &mut rng);
        assert_eq!(next[0], population[1]); // J = 0.1
        assert_eq!(next[1], population[5]); // J = 0.2
    }

    #[test]
    fn run_ga_history_is_monotone_and_reproducible() {
        let data = tiny_prepared();
        let cfg = tiny_cfg();
        let final_cfg = ForestConfig { n_trees: 20, ..ForestConfig::extra_trees() };
        let a = run_ga(&data, &cfg, &final_cfg).unwrap();
        let b = run_ga(&data, &cfg, &final_cfg).unwrap();

        assert_eq!(a.history.len(), cfg.generations + 1);
        for w in a.history.windows(2) {
            assert!(w[1].best_j <= w[0].best_j);
        }
        assert!(a.best_mask.ones() >= cfg.min_features);
        assert_eq!(a.best_j, b.best_j);
        assert_eq!(a.best_mask, b.best_mask);
        assert_eq!(a.selected_names, b.selected_names);
        assert_eq!(a.test_metrics, b.test_metrics);

        // Every request is either a fresh evaluation or a cache hit.
        let requests = (cfg.generations as u64 + 1) * cfg.population_size as u64;
        assert_eq!(a.evaluations + a.cache_hits, requests);
        assert!(a.evaluations >= 1);

        // The recorded best J matches the best mask re-evaluated from scratch.
        let j = fitness(&a.best_mask, &data, &cfg).unwrap();
        assert_eq!(j.to_bits(), a.best_j.to_bits());

        // Selected names map back to the mask indices.
        let names: Vec<String> = a
            .selected_indices
            .iter()
            .map(|&i| data.feature_names[i].clone())
            .collect();
        assert_eq!(names, a.selected_names);
    }
}
