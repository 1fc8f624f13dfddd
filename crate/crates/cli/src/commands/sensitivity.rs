//! `compreg sensitivity`: refit under one-at-a-time prior substitutions and
//! report posterior-mean shifts against the baseline fit.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use crate::error::CliError;
use crate::ingest::regression_dataset_from_table;
use crate::table::{fmt6, write_csv, Table};

use super::fit::fit_model;
use super::{ChainArgs, ModelChoice, PriorArgs};

#[derive(Debug, Clone, Args)]
pub struct SensitivityArgs {
    /// Input CSV with component and covariate columns
    #[arg(long)]
    pub data: PathBuf,
    /// Component columns in order; the last one is the ALR reference
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub components: Vec<String>,
    /// Covariate columns
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub covariates: Vec<String>,
    /// Error structure to refit
    #[arg(long, value_enum, default_value = "uncorrelated")]
    pub model: ModelChoice,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Baseline prior hyperparameters
    #[command(flatten)]
    pub priors: PriorArgs,
    /// Credible-interval level
    #[arg(long, default_value_t = 0.9)]
    pub level: f64,
    /// Sweep JSON: a list of {"hyperparameter": "a|b2|c|d", "value": number}
    #[arg(long)]
    pub sweep: PathBuf,
    /// Output directory (created if missing)
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
struct SweepEntry {
    hyperparameter: String,
    value: f64,
}

fn apply_substitution(base: &PriorArgs, entry: &SweepEntry) -> Result<PriorArgs, CliError> {
    let mut modified = base.clone();
    match entry.hyperparameter.as_str() {
        "a" => modified.a = entry.value,
        "b2" => modified.b2 = entry.value,
        "c" => modified.c = entry.value,
        "d" => modified.d = entry.value,
        other => {
            return Err(CliError::Usage(format!(
                "unknown hyperparameter '{other}' in sweep (expected one of a, b2, c, d)"
            )))
        }
    }
    Ok(modified)
}

pub fn run(args: &SensitivityArgs) -> Result<(), CliError> {
    let raw = fs::read_to_string(&args.sweep)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.sweep.display())))?;
    let sweep: Vec<SweepEntry> = serde_json::from_str(&raw)
        .map_err(|e| CliError::Data(format!("invalid sweep JSON: {e}")))?;
    let substitutions: Vec<(String, PriorArgs)> = sweep
        .iter()
        .map(|entry| {
            apply_substitution(&args.priors, entry)
                .map(|p| (format!("{}={}", entry.hyperparameter, entry.value), p))
        })
        .collect::<Result<_, _>>()?;

    let table = Table::read(&args.data)?;
    let data = regression_dataset_from_table(&table, &args.components, &args.covariates)?;
    fs::create_dir_all(&args.out_dir)?;
    let config = args.chain.to_config();

    let mut rows: Vec<Vec<String>> = Vec::new();
    for kind in args.model.kinds() {
        let baseline = fit_model(
            &data,
            &args.priors.to_spec(data.p(), data.g()),
            kind,
            &config,
            args.level,
        )?;
        for (name, summary) in &baseline.summaries {
            rows.push(vec![
                kind.label().to_string(),
                "baseline".to_string(),
                name.clone(),
                fmt6(summary.mean),
                fmt6(summary.sd),
                String::new(),
            ]);
        }
        for (label, prior_args) in &substitutions {
            let fit = fit_model(
                &data,
                &prior_args.to_spec(data.p(), data.g()),
                kind,
                &config,
                args.level,
            )?;
            for ((name, summary), (_, base)) in fit.summaries.iter().zip(&baseline.summaries) {
                rows.push(vec![
                    kind.label().to_string(),
                    label.clone(),
                    name.clone(),
                    fmt6(summary.mean),
                    fmt6(summary.sd),
                    fmt6(summary.mean - base.mean),
                ]);
            }
        }
    }
    write_csv(
        &args.out_dir.join("sensitivity.csv"),
        &["model", "sweep", "parameter", "posterior_mean", "posterior_sd", "delta_vs_baseline"],
        &rows,
    )
}
