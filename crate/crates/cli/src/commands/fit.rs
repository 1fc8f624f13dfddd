//! `compreg fit`: run the MCMC fit(s) and emit a posterior summary CSV, a
//! criteria JSON, a flat draws CSV per model, and one metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;

use compreg::criteria::{compute_criteria, CriteriaReport};
use compreg::diagnostics::{summarize_chains, PosteriorSummary};
use compreg::model::{ModelKind, PriorSpec, RegressionDataset};
use compreg::sampler::{run_chains, ChainConfig, ChainOutput};

use crate::error::CliError;
use crate::ingest::regression_dataset_from_table;
use crate::table::{fmt6, write_csv, Table};

use super::{ChainArgs, ModelChoice, PriorArgs, CRITERION_DEFINITIONS};

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Input CSV with component and covariate columns
    #[arg(long)]
    pub data: PathBuf,
    /// Component columns in order; the last one is the ALR reference
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub components: Vec<String>,
    /// Covariate columns
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub covariates: Vec<String>,
    /// Error structure to fit
    #[arg(long, value_enum, default_value = "both")]
    pub model: ModelChoice,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub priors: PriorArgs,
    /// Credible-interval level
    #[arg(long, default_value_t = 0.9)]
    pub level: f64,
    /// Exit with status 3 if any parameter's PSRF exceeds this
    #[arg(long = "psrf-threshold", default_value_t = 1.1)]
    pub psrf_threshold: f64,
    /// Output directory (created if missing)
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

/// Everything produced by fitting one model.
pub struct ModelFit {
    pub kind: ModelKind,
    pub chains: Vec<ChainOutput>,
    pub summaries: Vec<(String, PosteriorSummary)>,
    pub criteria: CriteriaReport,
}

/// Run the chains for one model and reduce them to summaries and criteria.
pub fn fit_model(
    data: &RegressionDataset,
    priors: &PriorSpec,
    kind: ModelKind,
    config: &ChainConfig,
    level: f64,
) -> Result<ModelFit, CliError> {
    let chains = run_chains(data, priors, kind, config)?;
    let summaries = summarize_chains(&chains, level)?;
    let pooled = ChainOutput::pooled(&chains)
        .ok_or_else(|| CliError::Data("chains produced mismatched layouts".into()))?;
    let criteria = compute_criteria(data, &pooled)?;
    Ok(ModelFit {
        kind,
        chains,
        summaries,
        criteria,
    })
}

pub fn write_summary_csv(path: &Path, fit: &ModelFit) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = fit
        .summaries
        .iter()
        .map(|(name, s)| {
            vec![
                name.clone(),
                fmt6(s.mean),
                fmt6(s.sd),
                fmt6(s.lower),
                fmt6(s.upper),
                fmt6(s.ess),
                s.psrf.map(fmt6).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        path,
        &["parameter", "mean", "sd", "ci_lower", "ci_upper", "ess", "psrf"],
        &rows,
    )
}

fn write_draws_csv(path: &Path, fit: &ModelFit, config: &ChainConfig) -> Result<(), CliError> {
    let mut headers = vec!["iteration".to_string(), "chain".to_string()];
    headers.extend(fit.chains[0].parameter_names.iter().cloned());
    let header_refs: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();

    let mut rows = Vec::new();
    for (c, chain) in fit.chains.iter().enumerate() {
        for k in 0..chain.n_kept() {
            let iteration = config.burn_in + (k + 1) * config.thin;
            let mut row = vec![iteration.to_string(), c.to_string()];
            row.extend(chain.draws.row(k).iter().map(|v| format!("{v}")));
            rows.push(row);
        }
    }
    write_csv(path, &header_refs, &rows)
}

fn write_criteria_json(
    path: &Path,
    fit: &ModelFit,
    data: &RegressionDataset,
) -> Result<(), CliError> {
    let payload = json!({
        "model": fit.kind,
        "n_observations": data.n(),
        "criteria": fit.criteria,
    });
    fs::write(path, format!("{:#}\n", payload))?;
    Ok(())
}

pub fn run(args: &FitArgs) -> Result<(), CliError> {
    let table = Table::read(&args.data)?;
    let data = regression_dataset_from_table(&table, &args.components, &args.covariates)?;
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Usage(format!(
            "--level must lie in (0,1), got {}",
            args.level
        )));
    }
    fs::create_dir_all(&args.out_dir)?;
    let config = args.chain.to_config();
    let priors = args.priors.to_spec(data.p(), data.g());

    let mut model_meta = Vec::new();
    let mut violations = Vec::new();
    for kind in args.model.kinds() {
        let fit = fit_model(&data, &priors, kind, &config, args.level)?;
        let label = kind.label();
        write_summary_csv(&args.out_dir.join(format!("summary_{label}.csv")), &fit)?;
        write_draws_csv(&args.out_dir.join(format!("draws_{label}.csv")), &fit, &config)?;
        write_criteria_json(&args.out_dir.join(format!("criteria_{label}.json")), &fit, &data)?;

        for (name, summary) in &fit.summaries {
            if let Some(psrf) = summary.psrf {
                if psrf.is_finite() && psrf > args.psrf_threshold {
                    violations.push(format!("{label}/{name}: PSRF {psrf:.4}"));
                }
            }
        }
        model_meta.push(json!({
            "model": kind,
            "chain_seeds": fit.chains.iter().map(|c| c.seed_used).collect::<Vec<_>>(),
            "kept_draws_per_chain": fit.chains[0].n_kept(),
            "acceptance_rates": fit.chains.iter().map(|c| c.acceptance.clone()).collect::<Vec<_>>(),
            "deviance_anchor": fit.criteria.anchor,
        }));
    }

    let metadata = json!({
        "command": "fit",
        "data": args.data.display().to_string(),
        "components": args.components,
        "covariates": args.covariates,
        "n_observations": data.n(),
        "chain": {
            "iterations": config.iterations,
            "burn_in": config.burn_in,
            "thin": config.thin,
            "chains": config.n_chains,
            "seed": config.seed,
            "target_accept": config.target_accept,
        },
        "priors": { "a": args.priors.a, "b2": args.priors.b2, "c": args.priors.c, "d": args.priors.d },
        "level": args.level,
        "psrf_threshold": args.psrf_threshold,
        "models": model_meta,
        "criterion_definitions": CRITERION_DEFINITIONS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect::<std::collections::BTreeMap<_, _>>(),
    });
    fs::write(
        args.out_dir.join("metadata.json"),
        format!("{:#}\n", metadata),
    )?;

    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Convergence(format!(
            "PSRF above {} for: {}",
            args.psrf_threshold,
            violations.join("; ")
        )))
    }
}
