use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{self, FeatureSet, SyntheticSpec};
use crate::ensemble::{ForestConfig, ForestMode, LogisticConfig};
use crate::error::{Error, Result};
use crate::ga::GaConfig;

/// Models the harness can train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ExtraTrees,
    Logistic,
    RandomForest,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ExtraTrees => "extra_trees",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Logistic => "logistic",
        }
    }

    pub fn is_tree(self) -> bool {
        matches!(self, ModelKind::ExtraTrees | ModelKind::RandomForest)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extra_trees" => Ok(ModelKind::ExtraTrees),
            "random_forest" => Ok(ModelKind::RandomForest),
            "logistic" => Ok(ModelKind::Logistic),
            other => Err(Error::Usage(format!(
                "unknown model `{other}` (expected extra_trees, random_forest, or logistic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Csv,
    Synthetic,
}

/// Where the dataset comes from: explicit CSV paths, a directory of CSV
/// files, or the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    pub paths: Vec<PathBuf>,
    pub dir: Option<PathBuf>,
    /// Manifest file mapping column names to groups; the built-in
    /// power-system benchmark layout when absent.
    pub manifest: Option<PathBuf>,
    pub label_column: String,
    pub label_map: BTreeMap<String, u8>,
    pub synthetic: SyntheticSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            kind: DataKind::Csv,
            paths: Vec::new(),
            dir: None,
            manifest: None,
            label_column: dataset::DEFAULT_LABEL_COLUMN.to_string(),
            label_map: dataset::default_label_map(),
            synthetic: SyntheticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { fractions: [0.7, 0.15, 0.15], seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub feature_sets: Vec<FeatureSet>,
    pub models: Vec<ModelKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            feature_sets: vec![
                FeatureSet::All,
                FeatureSet::PmuOnly,
                FeatureSet::PmuWithoutStatus,
            ],
            models: vec![
                ModelKind::ExtraTrees,
                ModelKind::RandomForest,
                ModelKind::Logistic,
            ],
        }
    }
}

/// GA settings as they appear in the config file: the per-run [`GaConfig`]
/// template plus the seed list and the feature set the search runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaBlock {
    pub feature_set: FeatureSet,
    pub seeds: Vec<u64>,
    pub population_size: usize,
    pub generations: usize,
    pub alpha: f64,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: Option<f64>,
    pub elitism_count: usize,
    pub min_features: usize,
    pub init_inclusion_prob: f64,
    pub evaluator: ForestConfig,
    /// Full-strength classifier retrained on the winning mask.
    pub final_model: ForestConfig,
}

impl Default for GaBlock {
    fn default() -> Self {
        let template = GaConfig::default();
        GaBlock {
            feature_set: FeatureSet::PmuWithoutStatus,
            seeds: vec![1, 2, 3, 4, 5],
            population_size: template.population_size,
            generations: template.generations,
            alpha: template.alpha,
            tournament_size: template.tournament_size,
            crossover_rate: template.crossover_rate,
            mutation_rate: template.mutation_rate,
            elitism_count: template.elitism_count,
            min_features: template.min_features,
            init_inclusion_prob: template.init_inclusion_prob,
            evaluator: template.evaluator,
            final_model: ForestConfig::extra_trees(),
        }
    }
}

impl GaBlock {
    pub fn to_ga_config(&self, seed: u64) -> GaConfig {
        GaConfig {
            population_size: self.population_size,
            generations: self.generations,
            alpha: self.alpha,
            tournament_size: self.tournament_size,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            elitism_count: self.elitism_count,
            min_features: self.min_features,
            init_inclusion_prob: self.init_inclusion_prob,
            seed,
            evaluator: self.evaluator.clone(),
        }
    }
}

/// The whole experiment description: data source, split, model roster and
/// per-model settings, GA block, and output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub run: RunConfig,
    pub extra_trees: ForestConfig,
    pub random_forest: ForestConfig,
    pub logistic: LogisticConfig,
    pub ga: GaBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            out_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            split: SplitConfig::default(),
            run: RunConfig::default(),
            extra_trees: ForestConfig::extra_trees(),
            random_forest: ForestConfig::random_forest(),
            logistic: LogisticConfig::default(),
            ga: GaBlock::default(),
        }
    }
}

/// CLI-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub feature_set: Option<FeatureSet>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub models: Option<Vec<ModelKind>>,
    pub ga_seeds: Option<Vec<u64>>,
}

impl ExperimentConfig {
    /// Reads a TOML config file; `None` yields the defaults.
    pub fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
        let mut cfg = match path {
            None => ExperimentConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::Config(format!("cannot read {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
        };
        // The roster entry decides the mode of its block; a partial
        // [extra_trees] or [random_forest] block cannot flip it.
        cfg.extra_trees.mode = ForestMode::Extra;
        cfg.random_forest.mode = ForestMode::RandomForest;
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, overrides: &Overrides) {
        if let Some(dir) = &overrides.data_dir {
            self.data.kind = DataKind::Csv;
            self.data.dir = Some(dir.clone());
            self.data.paths.clear();
        }
        if let Some(set) = overrides.feature_set {
            self.run.feature_sets = vec![set];
            self.ga.feature_set = set;
        }
        if let Some(seed) = overrides.seed {
            self.split.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.out_dir = out.clone();
        }
        if let Some(models) = &overrides.models {
            self.run.models = models.clone();
        }
        if let Some(seeds) = &overrides.ga_seeds {
            self.ga.seeds = seeds.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.models.is_empty() {
            return Err(Error::Config("model roster is empty".to_string()));
        }
        if self.run.feature_sets.is_empty() {
            return Err(Error::Config("no feature sets configured".to_string()));
        }
        Ok(())
    }

    pub fn split_fractions(&self) -> (f64, f64, f64) {
        (
            self.split.fractions[0],
            self.split.fractions[1],
            self.split.fractions[2],
        )
    }

    pub fn forest_config(&self, kind: ModelKind) -> &ForestConfig {
        match kind {
            ModelKind::ExtraTrees => &self.extra_trees,
            ModelKind::RandomForest => &self.random_forest,
            ModelKind::Logistic => panic!("logistic has no forest config"),
        }
    }

    /// The CSV files to load, honoring explicit paths over a directory
    /// scan. Directory entries are sorted by file name so file-system
    /// iteration order cannot leak into results.
    pub fn resolve_data_paths(&self) -> Result<Vec<PathBuf>> {
        if !self.data.paths.is_empty() {
            return Ok(self.data.paths.clone());
        }
        if let Some(dir) = &self.data.dir {
            let entries = std::fs::read_dir(dir)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", dir.display())))?;
            let mut paths: Vec<PathBuf> = entries
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| {
                    p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
                })
                .collect();
            if paths.is_empty() {
                return Err(Error::Config(format!(
                    "no .csv files found in {}",
                    dir.display()
                )));
            }
            paths.sort();
            return Ok(paths);
        }
        Err(Error::Config(
            "no data source configured: set [data] paths, dir, or kind = \"synthetic\"".to_string(),
        ))
    }
}
