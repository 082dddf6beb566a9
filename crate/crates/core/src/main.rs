use std::path::PathBuf;
use std::process::exit;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use gridsentry::dataset::{self, FeatureGroup, FeatureManifest, FeatureSet, SyntheticSpec};
use gridsentry::error::Result;
use gridsentry::harness::persist::{self, RunDocument};
use gridsentry::harness::{self, ExperimentConfig, ModelKind, Overrides, ResultRow};

/// Anomaly detection experiments on power-system telemetry.
#[derive(Parser)]
#[command(name = "gridsentry", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every configured model on every feature set.
    Baselines(RunArgs),
    /// Compare the tree models across the three nested feature sets.
    Ablation(RunArgs),
    /// Run the genetic feature-selection study over the configured seeds.
    Ga(GaArgs),
    /// Generate a synthetic labelled dataset as CSV.
    Synth(SynthArgs),
    /// Re-render the CSV and Markdown tables from an existing results.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of CSV data files; overrides the config's data source.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Restrict to one feature set: all, pmu_only, or pmu_without_status.
    #[arg(long)]
    feature_set: Option<String>,
    /// Split seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for results.json and derived tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated models: extra_trees, random_forest, logistic.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
}

#[derive(Args)]
struct GaArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated GA seeds, one study run per seed.
    #[arg(long, value_delimiter = ',')]
    ga_seeds: Option<Vec<u64>>,
}

#[derive(Args)]
struct SynthArgs {
    /// Where to write the generated CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write a matching feature manifest here.
    #[arg(long)]
    manifest_out: Option<PathBuf>,
    #[arg(long, default_value_t = SyntheticSpec::default().n_samples)]
    samples: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().n_informative)]
    informative: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().n_redundant)]
    redundant: usize,
    #[arg(long, default_value_t = SyntheticSpec::default().n_noise)]
    noise: usize,
    /// Fraction of positive (attack) rows, strictly between 0 and 1.
    #[arg(long, default_value_t = SyntheticSpec::default().class_balance)]
    balance: f64,
    /// Class-mean gap on each informative feature, in standard deviations.
    #[arg(long, default_value_t = SyntheticSpec::default().separation)]
    separation: f64,
    #[arg(long, default_value_t = SyntheticSpec::default().seed)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to a results.json written by baselines, ablation, or ga.
    results: PathBuf,
    /// Directory for the rendered tables; defaults to the file's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_overrides(args: &RunArgs, ga_seeds: Option<&[u64]>) -> Result<Overrides> {
    let feature_set = args
        .feature_set
        .as_deref()
        .map(FeatureSet::from_str)
        .transpose()?;
    let models = args
        .models
        .as_ref()
        .map(|names| {
            names
                .iter()
                .map(|n| ModelKind::from_str(n))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(Overrides {
        data_dir: args.data_dir.clone(),
        feature_set,
        seed: args.seed,
        out: args.out.clone(),
        models,
        ga_seeds: ga_seeds.map(|s| s.to_vec()),
    })
}

fn load_config(args: &RunArgs, ga_seeds: Option<&[u64]>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(args.config.as_deref())?;
    cfg.apply_overrides(&parse_overrides(args, ga_seeds)?);
    Ok(cfg)
}

fn print_rows(rows: &[ResultRow]) {
    for r in rows {
        let auc = r.metrics.roc_auc.map(|a| format!("{a:.4}")).unwrap_or_default();
        println!(
            "{:<14} {:<20} features={:<4} macro_f1={:.4} balanced_acc={:.4} roc_auc={auc}",
            r.model, r.feature_set, r.n_features, r.metrics.macro_f1, r.metrics.balanced_accuracy
        );
    }
}

fn cmd_baselines(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args, None)?;
    let rows = harness::run_baselines(&cfg)?;
    let mut doc = RunDocument::new("baselines", cfg);
    doc.baselines = Some(rows);
    persist::write_run(&doc.config.out_dir, &doc)?;
    print_rows(doc.baselines.as_deref().unwrap_or_default());
    println!("wrote {}", doc.config.out_dir.join(persist::RESULTS_FILE).display());
    Ok(())
}

fn cmd_ablation(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args, None)?;
    let rows = harness::run_ablation(&cfg)?;
    let mut doc = RunDocument::new("ablation", cfg);
    doc.ablation = Some(rows);
    persist::write_run(&doc.config.out_dir, &doc)?;
    print_rows(doc.ablation.as_deref().unwrap_or_default());
    println!("wrote {}", doc.config.out_dir.join(persist::RESULTS_FILE).display());
    Ok(())
}

fn cmd_ga(args: &GaArgs) -> Result<()> {
    let cfg = load_config(&args.run, args.ga_seeds.as_deref())?;
    let out_dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&out_dir)?;
    let study = harness::run_ga_study(&cfg, Some(&out_dir))?;
    for s in &study.seeds {
        let auc = s.metrics.roc_auc.map(|a| format!("{a:.4}")).unwrap_or_default();
        println!(
            "seed {} selected={:<4} macro_f1={:.4} roc_auc={auc} best_j={:.6}",
            s.seed, s.n_selected, s.metrics.macro_f1, s.best_j
        );
    }
    println!(
        "mean: selected={:.2} macro_f1={:.4} roc_auc={:.4} (full baseline macro_f1={:.4})",
        study.mean.n_selected,
        study.mean.macro_f1,
        study.mean.roc_auc,
        study.full_baseline.metrics.macro_f1
    );
    let mut doc = RunDocument::new("ga", cfg);
    doc.ga = Some(study);
    persist::write_run(&out_dir, &doc)?;
    println!("wrote {}", out_dir.join(persist::RESULTS_FILE).display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_samples: args.samples,
        n_informative: args.informative,
        n_redundant: args.redundant,
        n_noise: args.noise,
        class_balance: args.balance,
        separation: args.separation,
        seed: args.seed,
    };
    let ds = dataset::generate_synthetic(&spec)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    dataset::write_csv(&ds, &args.out, dataset::DEFAULT_LABEL_COLUMN, ("Natural", "Attack"))?;
    if let Some(manifest_path) = &args.manifest_out {
        let manifest =
            FeatureManifest::uniform(ds.feature_names(), FeatureGroup::PmuMeasurement);
        std::fs::write(manifest_path, manifest.render())?;
    }
    println!(
        "wrote {} ({} rows, {} features)",
        args.out.display(),
        ds.n_rows(),
        ds.n_features()
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let doc = persist::load_run(&args.results)?;
    let out_dir = match &args.out {
        Some(dir) => dir.clone(),
        None => args
            .results
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    persist::render_tables(&out_dir, &doc)?;
    println!("rendered tables into {}", out_dir.display());
    Ok(())
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Baselines(args) => cmd_baselines(args),
        Command::Ablation(args) => cmd_ablation(args),
        Command::Ga(args) => cmd_ga(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Report(args) => cmd_report(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        exit(e.exit_code());
    }
}
