//! Experiment orchestration: baseline and ablation tables, the multi-seed
//! GA study, and the full-vs-selected comparison, with results persisted as
//! JSON plus derived CSV and Markdown tables.

pub mod config;
pub mod persist;

pub use config::{ExperimentConfig, ModelKind, Overrides};

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset, FeatureSet};
use crate::ensemble::{predict_proba, train_forest, train_logistic};
use crate::error::{Error, Result};
use crate::ga::{run_ga, GenerationStat};
use crate::metrics::{
    apply_threshold, classification_metrics, confusion, roc_auc, select_threshold,
    ConfusionCounts, MetricsReport,
};
use crate::preprocess::{prepare, PreparedSplits};

use config::DataKind;

impl Error {
    /// Prefixes the message with the experiment step that failed, keeping
    /// the error class (and therefore the exit code) intact.
    fn with_context(self, context: &str) -> Error {
        match self {
            Error::Config(m) => Error::Config(format!("{context}: {m}")),
            Error::Schema(m) => Error::Schema(format!("{context}: {m}")),
            Error::Label(m) => Error::Label(format!("{context}: {m}")),
            Error::Manifest(m) => Error::Manifest(format!("{context}: {m}")),
            Error::Stratification(m) => Error::Stratification(format!("{context}: {m}")),
            Error::Training(m) => Error::Training(format!("{context}: {m}")),
            Error::Divergence(m) => Error::Divergence(format!("{context}: {m}")),
            Error::UndefinedMetric(m) => Error::UndefinedMetric(format!("{context}: {m}")),
            Error::Usage(m) => Error::Usage(format!("{context}: {m}")),
            Error::Io(e) => Error::Io(e),
        }
    }
}

/// One evaluated (model, feature set) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub feature_set: String,
    pub n_features: usize,
    pub seed: u64,
    pub wall_seconds: f64,
    pub metrics: MetricsReport,
    pub confusion: ConfusionCounts,
}

/// Loads the configured dataset (CSV files or the synthetic generator).
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match cfg.data.kind {
        DataKind::Synthetic => dataset::generate_synthetic(&cfg.data.synthetic),
        DataKind::Csv => {
            let paths = cfg.resolve_data_paths()?;
            let manifest = match &cfg.data.manifest {
                Some(p) => dataset::FeatureManifest::from_path(p)?,
                None => dataset::FeatureManifest::msu_ornl_default(),
            };
            dataset::load_csv(&paths, &manifest, &cfg.data.label_column, &cfg.data.label_map)
        }
    }
}

fn prepare_feature_set(
    ds: &Dataset,
    set: FeatureSet,
    cfg: &ExperimentConfig,
) -> Result<(usize, PreparedSplits)> {
    let filtered = dataset::select_feature_set(ds, set);
    if filtered.n_features() == 0 {
        return Err(Error::Config(format!(
            "feature set `{set}` keeps no columns of this dataset"
        )));
    }
    let prepared = prepare(&filtered, cfg.split_fractions(), cfg.split.seed)?;
    Ok((filtered.n_features(), prepared))
}

/// Scores one trained model: threshold from validation, metrics from test.
fn score_split(
    prepared: &PreparedSplits,
    validation_scores: &[f64],
    test_scores: &[f64],
) -> Result<(MetricsReport, ConfusionCounts)> {
    let threshold = select_threshold(&prepared.validation_y, validation_scores)?;
    let predicted = apply_threshold(test_scores, threshold);
    let counts = confusion(&prepared.test_y, &predicted)?;
    let mut metrics = classification_metrics(&counts);
    metrics.roc_auc = Some(roc_auc(&prepared.test_y, test_scores)?);
    metrics.threshold = Some(threshold);
    Ok((metrics, counts))
}

fn eval_pair(ds: &Dataset, kind: ModelKind, set: FeatureSet, cfg: &ExperimentConfig) -> Result<ResultRow> {
    let started = Instant::now();
    let (n_features, prepared) = prepare_feature_set(ds, set, cfg)?;
    let (validation_scores, test_scores, seed) = match kind {
        ModelKind::ExtraTrees | ModelKind::RandomForest => {
            let forest_cfg = cfg.forest_config(kind);
            let model = train_forest(&prepared.train_x, &prepared.train_y, forest_cfg)?;
            (
                predict_proba(&model, &prepared.validation_x)?,
                predict_proba(&model, &prepared.test_x)?,
                forest_cfg.seed,
            )
        }
        ModelKind::Logistic => {
            let model = train_logistic(&prepared.train_x, &prepared.train_y, &cfg.logistic)?;
            (
                model.predict_proba(&prepared.validation_x)?,
                model.predict_proba(&prepared.test_x)?,
                cfg.logistic.seed,
            )
        }
    };
    let (metrics, counts) = score_split(&prepared, &validation_scores, &test_scores)?;
    Ok(ResultRow {
        model: kind.name().to_string(),
        feature_set: set.name().to_string(),
        n_features,
        seed,
        wall_seconds: started.elapsed().as_secs_f64(),
        metrics,
        confusion: counts,
    })
}

fn run_pairs(
    ds: &Dataset,
    models: &[ModelKind],
    sets: &[FeatureSet],
    cfg: &ExperimentConfig,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::with_capacity(models.len() * sets.len());
    for &kind in models {
        for &set in sets {
            log::info!("evaluating {kind} on {set}");
            let row = eval_pair(ds, kind, set, cfg)
                .map_err(|e| e.with_context(&format!("{kind} on {set}")))?;
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| (&a.model, &a.feature_set).cmp(&(&b.model, &b.feature_set)));
    Ok(rows)
}

/// Trains and evaluates every configured (model, feature set) pair.
pub fn run_baselines(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    run_pairs(&ds, &cfg.run.models, &cfg.run.feature_sets, cfg)
}

/// Evaluates the configured tree models over the three nested feature sets,
/// regardless of which sets the [run] block asks for.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let tree_models: Vec<ModelKind> = cfg
        .run
        .models
        .iter()
        .copied()
        .filter(|m| m.is_tree())
        .collect();
    if tree_models.is_empty() {
        return Err(Error::Config(
            "ablation needs at least one tree model in the roster".to_string(),
        ));
    }
    let sets = [
        FeatureSet::All,
        FeatureSet::PmuOnly,
        FeatureSet::PmuWithoutStatus,
    ];
    let ds = load_dataset(cfg)?;
    run_pairs(&ds, &tree_models, &sets, cfg)
}

/// One finished GA seed, as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaSeedOutcome {
    pub seed: u64,
    pub n_selected: usize,
    pub selected_names: Vec<String>,
    pub best_j: f64,
    pub evaluations: u64,
    pub cache_hits: u64,
    pub wall_seconds: f64,
    pub metrics: MetricsReport,
    pub confusion: ConfusionCounts,
    pub history: Vec<GenerationStat>,
}

/// Mean or standard deviation over the per-seed rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaAggregate {
    pub n_selected: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub f1_pos: f64,
    pub macro_f1: f64,
    pub roc_auc: f64,
}

/// The whole GA study: per-seed outcomes, their mean and sample standard
/// deviation, and the same-run full-feature baseline for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaStudy {
    pub feature_set: String,
    pub seeds: Vec<GaSeedOutcome>,
    pub mean: GaAggregate,
    pub std: GaAggregate,
    pub full_baseline: ResultRow,
}

fn aggregate(seeds: &[GaSeedOutcome]) -> (GaAggregate, GaAggregate) {
    let n = seeds.len() as f64;
    let columns: [fn(&GaSeedOutcome) -> f64; 6] = [
        |s| s.n_selected as f64,
        |s| s.metrics.accuracy,
        |s| s.metrics.balanced_accuracy,
        |s| s.metrics.f1_pos,
        |s| s.metrics.macro_f1,
        |s| s.metrics.roc_auc.unwrap_or(0.0),
    ];
    let mut means = [0.0; 6];
    let mut stds = [0.0; 6];
    for (k, get) in columns.iter().enumerate() {
        let mean = seeds.iter().map(get).sum::<f64>() / n;
        means[k] = mean;
        if seeds.len() > 1 {
            let ss = seeds.iter().map(|s| (get(s) - mean).powi(2)).sum::<f64>();
            stds[k] = (ss / (n - 1.0)).sqrt();
        }
    }
    let build = |v: [f64; 6]| GaAggregate {
        n_selected: v[0],
        accuracy: v[1],
        balanced_accuracy: v[2],
        f1_pos: v[3],
        macro_f1: v[4],
        roc_auc: v[5],
    };
    (build(means), build(stds))
}

/// Runs the GA once per configured seed on the configured feature set.
/// When `progress_dir` is given, each seed's history CSV and selected
/// feature list are written as soon as that seed finishes, so a later
/// failure still leaves the completed seeds on disk.
pub fn run_ga_study(cfg: &ExperimentConfig, progress_dir: Option<&Path>) -> Result<GaStudy> {
    if cfg.ga.seeds.is_empty() {
        return Err(Error::Config("ga.seeds is empty".to_string()));
    }
    let ds = load_dataset(cfg)?;
    let set = cfg.ga.feature_set;
    let (n_features, prepared) = prepare_feature_set(&ds, set, cfg)?;

    // Same-run full-feature baseline with the same final-model settings.
    let full_baseline = {
        let started = Instant::now();
        let model = train_forest(&prepared.train_x, &prepared.train_y, &cfg.ga.final_model)?;
        let validation_scores = predict_proba(&model, &prepared.validation_x)?;
        let test_scores = predict_proba(&model, &prepared.test_x)?;
        let (metrics, counts) = score_split(&prepared, &validation_scores, &test_scores)?;
        ResultRow {
            model: ModelKind::ExtraTrees.name().to_string(),
            feature_set: set.name().to_string(),
            n_features,
            seed: cfg.ga.final_model.seed,
            wall_seconds: started.elapsed().as_secs_f64(),
            metrics,
            confusion: counts,
        }
    };

    let mut seeds = Vec::with_capacity(cfg.ga.seeds.len());
    for &seed in &cfg.ga.seeds {
        log::info!("GA seed {seed} on {set}");
        let started = Instant::now();
        let ga_cfg = cfg.ga.to_ga_config(seed);
        let result = run_ga(&prepared, &ga_cfg, &cfg.ga.final_model)
            .map_err(|e| e.with_context(&format!("ga seed {seed}")))?;
        let outcome = GaSeedOutcome {
            seed,
            n_selected: result.best_mask.ones(),
            selected_names: result.selected_names,
            best_j: result.best_j,
            evaluations: result.evaluations,
            cache_hits: result.cache_hits,
            wall_seconds: started.elapsed().as_secs_f64(),
            metrics: result.test_metrics,
            confusion: result.test_confusion,
            history: result.history,
        };
        if let Some(dir) = progress_dir {
            persist::write_ga_seed_files(dir, &outcome)?;
        }
        seeds.push(outcome);
    }

    let (mean, std) = aggregate(&seeds);
    Ok(GaStudy {
        feature_set: set.name().to_string(),
        seeds,
        mean,
        std,
        full_baseline,
    })
}
