//! From-scratch randomized tree ensembles (Extra Trees and Random Forest
//! modes) plus a logistic-regression baseline. Ensembles emit probability
//! scores as the mean of leaf positive-class fractions.

mod logistic;
mod tree;

pub use logistic::{loss_and_gradient, train_logistic, LinearModel, LogisticConfig};
pub(crate) use tree::Tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestMode {
    /// Extremely randomized trees: one uniform-random threshold per
    /// candidate feature, whole training set per tree.
    Extra,
    /// Classic random forest: exhaustive threshold search per candidate
    /// feature, bootstrap-resampled rows per tree.
    RandomForest,
}

/// Hyperparameters for either ensemble mode. `max_features: None` resolves
/// to floor(sqrt(d')) with a minimum of 1 at training time, and
/// `bootstrap: None` resolves to false for `extra`, true for
/// `random_forest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub mode: ForestMode,
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: Option<bool>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig::extra_trees()
    }
}

impl ForestConfig {
    pub fn extra_trees() -> Self {
        ForestConfig {
            n_trees: 300,
            mode: ForestMode::Extra,
            max_features: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: None,
            seed: 42,
        }
    }

    pub fn random_forest() -> Self {
        ForestConfig {
            mode: ForestMode::RandomForest,
            ..ForestConfig::extra_trees()
        }
    }

    pub fn bootstrap_enabled(&self) -> bool {
        self.bootstrap
            .unwrap_or(matches!(self.mode, ForestMode::RandomForest))
    }

    fn resolve_max_features(&self, d: usize) -> Result<usize> {
        match self.max_features {
            Some(m) => {
                if m == 0 || m > d {
                    Err(Error::Config(format!(
                        "max_features {m} outside the valid range 1..={d}"
                    )))
                } else {
                    Ok(m)
                }
            }
            None => Ok(((d as f64).sqrt().floor() as usize).max(1)),
        }
    }
}

/// A trained ensemble. Immutable and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<Tree>,
    config: ForestConfig,
    n_features: usize,
}

const FOREST_FORMAT: &str = "gridsentry-forest";
const FOREST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VersionedForest {
    format: String,
    version: u32,
    model: ForestModel,
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    /// Writes the model as versioned JSON.
    pub fn save_to(&self, w: impl std::io::Write) -> Result<()> {
        let doc = VersionedForest {
            format: FOREST_FORMAT.to_string(),
            version: FOREST_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer(w, &doc)
            .map_err(|e| Error::Usage(format!("cannot serialize model: {e}")))
    }

    pub fn load_from(r: impl std::io::Read) -> Result<ForestModel> {
        let doc: VersionedForest = serde_json::from_reader(r)
            .map_err(|e| Error::Usage(format!("cannot parse model: {e}")))?;
        if doc.format != FOREST_FORMAT {
            return Err(Error::Usage(format!(
                "unexpected model format `{}`",
                doc.format
            )));
        }
        if doc.version != FOREST_VERSION {
            return Err(Error::Usage(format!(
                "unsupported model version {} (expected {FOREST_VERSION})",
                doc.version
            )));
        }
        Ok(doc.model)
    }
}

fn check_training_data(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::Usage(format!(
            "{} rows vs {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::Training(
            "training needs at least 2 samples".to_string(),
        ));
    }
    if x.n_cols() == 0 {
        return Err(Error::Training("training data has no features".to_string()));
    }
    if !x.all_finite() {
        return Err(Error::Training(
            "training data contains missing or non-finite values; run preprocessing first"
                .to_string(),
        ));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Training(
            "training data contains a single class".to_string(),
        ));
    }
    Ok(())
}

/// Trains an ensemble. Tree `i` uses a generator seeded from
/// (cfg.seed, stream=i), so growth is reproducible and independent of both
/// thread count and training row order (the latter for non-bootstrap mode).
pub fn train_forest(x: &Matrix, y: &[u8], cfg: &ForestConfig) -> Result<ForestModel> {
    check_training_data(x, y)?;
    if cfg.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".to_string()));
    }
    if cfg.min_samples_split < 2 {
        return Err(Error::Config(
            "min_samples_split must be at least 2".to_string(),
        ));
    }
    let max_features = cfg.resolve_max_features(x.n_cols())?;

    let n = x.n_rows();
    let bootstrap = cfg.bootstrap_enabled();
    let trees: Vec<Tree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let rows: Vec<usize> = if bootstrap {
                use rand::Rng;
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            Tree::grow(x, y, rows, cfg, max_features, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        trees,
        config: cfg.clone(),
        n_features: x.n_cols(),
    })
}

fn check_prediction_input(n_features: usize, x: &Matrix) -> Result<()> {
    if x.n_cols() != n_features {
        return Err(Error::Usage(format!(
            "model trained on {n_features} features, input has {}",
            x.n_cols()
        )));
    }
    if !x.all_finite() {
        return Err(Error::Usage(
            "prediction input contains missing or non-finite values".to_string(),
        ));
    }
    Ok(())
}

/// Per-row mean of leaf positive-class fractions across all trees.
pub fn predict_proba(model: &ForestModel, x: &Matrix) -> Result<Vec<f64>> {
    check_prediction_input(model.n_features, x)?;
    let n_trees = model.trees.len() as f64;
    let scores = (0..x.n_rows())
        .map(|r| {
            let row = x.row(r);
            let sum: f64 = model.trees.iter().map(|t| t.leaf_fraction(row)).sum();
            sum / n_trees
        })
        .collect();
    Ok(scores)
}

/// Hard labels at the given decision threshold: 1 iff score >= threshold.
pub fn predict_label(model: &ForestModel, x: &Matrix, threshold: f64) -> Result<Vec<u8>> {
    let scores = predict_proba(model, x)?;
    Ok(crate::metrics::apply_threshold(&scores, threshold))
}
