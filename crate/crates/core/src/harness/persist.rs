//! Results persistence. The JSON document is the source of truth; every
//! CSV and the Markdown report are derived from it, carry no timing, and
//! rerender byte-for-byte identically.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::{GaSeedOutcome, GaStudy, ResultRow};

pub const RESULTS_FILE: &str = "results.json";
const DOCUMENT_FORMAT: &str = "gridsentry-results";
const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentStamp {
    pub os: String,
    pub arch: String,
    pub crate_version: String,
    pub threads: usize,
}

pub fn environment_stamp() -> EnvironmentStamp {
    EnvironmentStamp {
        os: std::env::consts::OS.to_string(),
        arch: std::env::consts::ARCH.to_string(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
    }
}

/// Everything one command run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub format: String,
    pub version: u32,
    pub command: String,
    pub created_unix: u64,
    pub environment: EnvironmentStamp,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<Vec<ResultRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Vec<ResultRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga: Option<GaStudy>,
}

impl RunDocument {
    pub fn new(command: &str, config: ExperimentConfig) -> Self {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunDocument {
            format: DOCUMENT_FORMAT.to_string(),
            version: DOCUMENT_VERSION,
            command: command.to_string(),
            created_unix,
            environment: environment_stamp(),
            config,
            baselines: None,
            ablation: None,
            ga: None,
        }
    }
}

/// Writes `results.json` plus every derived table under `out_dir`.
pub fn write_run(out_dir: &Path, doc: &RunDocument) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let json = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::Usage(format!("cannot serialize results: {e}")))?;
    fs::write(out_dir.join(RESULTS_FILE), json + "\n")?;
    render_tables(out_dir, doc)
}

/// Reads a `results.json` back.
pub fn load_run(path: &Path) -> Result<RunDocument> {
    let text = fs::read_to_string(path)?;
    let doc: RunDocument = serde_json::from_str(&text)
        .map_err(|e| Error::Usage(format!("{}: not a results document: {e}", path.display())))?;
    if doc.format != DOCUMENT_FORMAT {
        return Err(Error::Usage(format!(
            "{}: unexpected document format `{}`",
            path.display(),
            doc.format
        )));
    }
    if doc.version != DOCUMENT_VERSION {
        return Err(Error::Usage(format!(
            "{}: unsupported document version {}",
            path.display(),
            doc.version
        )));
    }
    Ok(doc)
}

/// Renders every table derivable from `doc` into `out_dir`. Never touches
/// `results.json`, so the `report` command can point at an existing run.
pub fn render_tables(out_dir: &Path, doc: &RunDocument) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    if let Some(rows) = &doc.baselines {
        fs::write(out_dir.join("baselines.csv"), rows_csv(rows))?;
    }
    if let Some(rows) = &doc.ablation {
        fs::write(out_dir.join("ablation.csv"), rows_csv(rows))?;
    }
    if let Some(study) = &doc.ga {
        fs::write(out_dir.join("ga_runs.csv"), ga_runs_csv(study))?;
        for outcome in &study.seeds {
            write_ga_seed_files(out_dir, outcome)?;
        }
    }
    fs::write(out_dir.join("report.md"), report_markdown(doc))?;
    Ok(())
}

/// Per-seed GA artifacts, written as soon as the seed finishes.
pub fn write_ga_seed_files(dir: &Path, outcome: &GaSeedOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut history = String::from("generation,best_j,mean_j,best_popcount\n");
    for stat in &outcome.history {
        history.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            stat.generation, stat.best_j, stat.mean_j, stat.best_popcount
        ));
    }
    fs::write(dir.join(format!("ga_history_{}.csv", outcome.seed)), history)?;

    let mut names = outcome.selected_names.join("\n");
    names.push('\n');
    fs::write(dir.join(format!("selected_features_{}.txt", outcome.seed)), names)?;
    Ok(())
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.4}")).unwrap_or_default()
}

const ROW_HEADER: &str = "model,feature_set,n_features,seed,accuracy,balanced_accuracy,\
precision_pos,recall_pos,f1_pos,f1_neg,macro_f1,roc_auc,threshold\n";

fn rows_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(ROW_HEADER);
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!(
            "{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{}\n",
            r.model,
            r.feature_set,
            r.n_features,
            r.seed,
            m.accuracy,
            m.balanced_accuracy,
            m.precision_pos,
            m.recall_pos,
            m.f1_pos,
            m.f1_neg,
            m.macro_f1,
            fmt_opt(m.roc_auc),
            fmt_opt(m.threshold),
        ));
    }
    out
}

fn ga_runs_csv(study: &GaStudy) -> String {
    let mut out =
        String::from("row_kind,seed,n_selected,accuracy,balanced_accuracy,f1_pos,macro_f1,roc_auc\n");
    for s in &study.seeds {
        let m = &s.metrics;
        out.push_str(&format!(
            "seed,{},{},{:.4},{:.4},{:.4},{:.4},{}\n",
            s.seed,
            s.n_selected,
            m.accuracy,
            m.balanced_accuracy,
            m.f1_pos,
            m.macro_f1,
            fmt_opt(m.roc_auc),
        ));
    }
    for (kind, agg) in [("mean", &study.mean), ("std", &study.std)] {
        out.push_str(&format!(
            "{},,{:.2},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            kind, agg.n_selected, agg.accuracy, agg.balanced_accuracy, agg.f1_pos, agg.macro_f1,
            agg.roc_auc,
        ));
    }
    let b = &study.full_baseline;
    out.push_str(&format!(
        "full_baseline,{},{},{:.4},{:.4},{:.4},{:.4},{}\n",
        b.seed,
        b.n_features,
        b.metrics.accuracy,
        b.metrics.balanced_accuracy,
        b.metrics.f1_pos,
        b.metrics.macro_f1,
        fmt_opt(b.metrics.roc_auc),
    ));
    out
}

fn rows_markdown(out: &mut String, rows: &[ResultRow]) {
    out.push_str(
        "| model | feature set | features | accuracy | balanced acc. | macro F1 | ROC-AUC |\n",
    );
    out.push_str("|---|---|---:|---:|---:|---:|---:|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {:.4} | {:.4} | {:.4} | {} |\n",
            r.model,
            r.feature_set,
            r.n_features,
            r.metrics.accuracy,
            r.metrics.balanced_accuracy,
            r.metrics.macro_f1,
            fmt_opt(r.metrics.roc_auc),
        ));
    }
}

fn report_markdown(doc: &RunDocument) -> String {
    let mut out = String::from("# Grid anomaly detection results\n");
    let f = doc.config.split.fractions;
    out.push_str(&format!(
        "\nSplit {:.2}/{:.2}/{:.2}, split seed {}.\n",
        f[0], f[1], f[2], doc.config.split.seed
    ));

    if let Some(rows) = &doc.baselines {
        out.push_str("\n## Baselines\n\n");
        rows_markdown(&mut out, rows);
    }
    if let Some(rows) = &doc.ablation {
        out.push_str("\n## Feature-set ablation\n\n");
        rows_markdown(&mut out, rows);
    }
    if let Some(study) = &doc.ga {
        out.push_str(&format!(
            "\n## GA feature selection ({})\n\n",
            study.feature_set
        ));
        out.push_str("| seed | selected | accuracy | macro F1 | ROC-AUC | best J |\n");
        out.push_str("|---:|---:|---:|---:|---:|---:|\n");
        for s in &study.seeds {
            out.push_str(&format!(
                "| {} | {} | {:.4} | {:.4} | {} | {:.6} |\n",
                s.seed,
                s.n_selected,
                s.metrics.accuracy,
                s.metrics.macro_f1,
                fmt_opt(s.metrics.roc_auc),
                s.best_j,
            ));
        }
        out.push_str(&format!(
            "\nMean over {} seeds: {:.2} features selected, accuracy {:.4}, macro F1 {:.4} (std {:.4}), ROC-AUC {:.4}.\n",
            study.seeds.len(),
            study.mean.n_selected,
            study.mean.accuracy,
            study.mean.macro_f1,
            study.std.macro_f1,
            study.mean.roc_auc,
        ));
        let b = &study.full_baseline;
        out.push_str(&format!(
            "\nFull-feature baseline ({} features): accuracy {:.4}, macro F1 {:.4}, ROC-AUC {}.\n",
            b.n_features,
            b.metrics.accuracy,
            b.metrics.macro_f1,
            fmt_opt(b.metrics.roc_auc),
        ));
    }
    out
}
