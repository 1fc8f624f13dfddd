//! Simulation study harness: generate synthetic datasets from known
//! parameters, fit both error models to every replicate, and aggregate
//! posterior means, posterior SDs, empirical coverage of the credible
//! intervals, and averaged comparison criteria.
//!
//! Replicates are independent and run on a work pool; replicate r derives all
//! of its randomness from `master_seed + r`, and aggregation is a
//! deterministic reduction in replicate order, so a study is reproducible
//! regardless of scheduling.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{compute_criteria, CriteriaError};
use crate::diagnostics::{summarize, DiagnosticsError};
use crate::model::{rho_len, ModelError, ModelKind, ParameterState, PriorSpec, RegressionDataset};
use crate::sampler::{run_chain, ChainConfig, ParamLayout, SamplerError};
use crate::simplex::{alr_inverse, CompositionDataset, SimplexError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Distribution descriptor for one covariate column.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CovariateGen {
    Bernoulli { p: f64 },
    /// Normal with mean `mean` and standard deviation `sd`.
    Normal { mean: f64, sd: f64 },
}

fn default_level() -> f64 {
    0.9
}

/// A complete description of one simulation study.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimScenario {
    /// Observations per replicate.
    pub n: usize,
    /// True coefficients, (p+1) rows of g entries; row 0 is the intercepts.
    pub true_beta: Vec<Vec<f64>>,
    pub true_sigma2: Vec<f64>,
    /// True correlations in lexicographic pair order; empty means all zero.
    #[serde(default)]
    pub true_rho: Vec<f64>,
    pub covariates: Vec<CovariateGen>,
    pub replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl SimScenario {
    /// The reference configuration: g = 3 responses, a Bernoulli(0.8) and a
    /// Normal(0.5, 0.1) covariate, intercepts (0.5, −1, −2), all slopes 0.1,
    /// variances (0.06, 0.2, 0.3), and — when `with_correlation` — pairwise
    /// correlations (0.45, 0.37, 0.20).
    pub fn reference(n: usize, replicates: usize, with_correlation: bool) -> Self {
        Self {
            n,
            true_beta: vec![
                vec![0.5, -1.0, -2.0],
                vec![0.1, 0.1, 0.1],
                vec![0.1, 0.1, 0.1],
            ],
            true_sigma2: vec![0.06, 0.2, 0.3],
            true_rho: if with_correlation {
                vec![0.45, 0.37, 0.20]
            } else {
                vec![0.0; 3]
            },
            covariates: vec![
                CovariateGen::Bernoulli { p: 0.8 },
                CovariateGen::Normal { mean: 0.5, sd: 0.1 },
            ],
            replicates,
            level: 0.9,
        }
    }

    pub fn g(&self) -> usize {
        self.true_sigma2.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.len()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let g = self.g();
        if g == 0 {
            return Err(SimError::Invalid("true_sigma2 must be non-empty".into()));
        }
        if self.true_beta.len() != self.p() + 1 {
            return Err(SimError::Invalid(format!(
                "true_beta must have {} rows (intercepts plus one per covariate), found {}",
                self.p() + 1,
                self.true_beta.len()
            )));
        }
        if self.true_beta.iter().any(|row| row.len() != g) {
            return Err(SimError::Invalid(format!(
                "every true_beta row must have g={g} entries"
            )));
        }
        if !self.true_rho.is_empty() && self.true_rho.len() != rho_len(g) {
            return Err(SimError::Invalid(format!(
                "true_rho must be empty or have length {}",
                rho_len(g)
            )));
        }
        if self.true_sigma2.iter().any(|&s| !(s > 0.0)) {
            return Err(SimError::Invalid("true_sigma2 entries must be positive".into()));
        }
        if self.true_rho.iter().any(|&r| !(r.abs() < 1.0)) {
            return Err(SimError::Invalid("true_rho entries must lie in (-1,1)".into()));
        }
        if self.n <= self.p() + 1 {
            return Err(SimError::Invalid(format!(
                "n must exceed p+1 = {}",
                self.p() + 1
            )));
        }
        if self.replicates == 0 {
            return Err(SimError::Invalid("replicates must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(SimError::Invalid("level must lie in (0,1)".into()));
        }
        for (i, gen) in self.covariates.iter().enumerate() {
            match gen {
                CovariateGen::Bernoulli { p } if !(0.0..=1.0).contains(p) => {
                    return Err(SimError::Invalid(format!(
                        "covariate {i}: Bernoulli p must lie in [0,1]"
                    )));
                }
                CovariateGen::Normal { sd, .. } if !(*sd >= 0.0) => {
                    return Err(SimError::Invalid(format!(
                        "covariate {i}: Normal sd must be nonnegative"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The generating parameters as a [`ParameterState`] (rho filled with
    /// zeros when unspecified).
    pub fn truth(&self) -> ParameterState {
        let g = self.g();
        let beta = DMatrix::from_fn(self.p() + 1, g, |l, j| self.true_beta[l][j]);
        let sigma2 = DVector::from_column_slice(&self.true_sigma2);
        let rho = if self.true_rho.is_empty() {
            DVector::zeros(rho_len(g))
        } else {
            DVector::from_column_slice(&self.true_rho)
        };
        ParameterState::new(beta, sigma2, rho)
    }
}

/// A generated dataset together with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub data: RegressionDataset,
    pub truth: ParameterState,
}

/// Draw covariates from their descriptors and responses from the g-variate
/// Normal error model around the linear predictor.
pub fn generate_dataset(
    scenario: &SimScenario,
    rng: &mut ChaCha8Rng,
) -> Result<GeneratedDataset, SimError> {
    scenario.validate()?;
    let (n, g, p) = (scenario.n, scenario.g(), scenario.p());
    let truth = scenario.truth();

    let mut z = DMatrix::zeros(n, p);
    for (c, gen) in scenario.covariates.iter().enumerate() {
        match gen {
            CovariateGen::Bernoulli { p } => {
                let dist = Bernoulli::new(*p).expect("validated");
                for i in 0..n {
                    z[(i, c)] = dist.sample(rng) as u8 as f64;
                }
            }
            CovariateGen::Normal { mean, sd } => {
                for i in 0..n {
                    let e: f64 = rng.sample(StandardNormal);
                    z[(i, c)] = mean + sd * e;
                }
            }
        }
    }

    let chol = Cholesky::new(truth.covariance_matrix()).ok_or(ModelError::NotPositiveDefinite)?;
    let l = chol.l();
    let mut y = DMatrix::zeros(n, g);
    let mut white = vec![0.0_f64; g];
    for i in 0..n {
        for w in white.iter_mut() {
            *w = rng.sample(StandardNormal);
        }
        for j in 0..g {
            let mut value = truth.beta[(0, j)];
            for c in 0..p {
                value += truth.beta[(c + 1, j)] * z[(i, c)];
            }
            for k in 0..=j {
                value += l[(j, k)] * white[k];
            }
            y[(i, j)] = value;
        }
    }

    Ok(GeneratedDataset {
        data: RegressionDataset::new(y, z)?,
        truth,
    })
}

/// Map each response row back through the inverse ALR, yielding compositions
/// for end-to-end pipeline tests.
pub fn compositions_from_responses(y: &DMatrix<f64>) -> Result<CompositionDataset, SimplexError> {
    let rows = (0..y.nrows())
        .map(|i| {
            let coords: Vec<f64> = y.row(i).iter().copied().collect();
            alr_inverse(&coords)
        })
        .collect::<Result<Vec<_>, _>>()?;
    CompositionDataset::new(rows, None)
}

/// Whether a credible interval covers the truth (endpoints inclusive).
pub fn coverage(lower: f64, upper: f64, truth: f64) -> bool {
    truth >= lower && truth <= upper
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub model: ModelKind,
    pub parameter: String,
    pub truth: f64,
    pub mean_of_posterior_means: f64,
    pub mean_of_posterior_sds: f64,
    /// Fraction of completed replicates whose interval covered the truth.
    pub coverage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelCriteriaMeans {
    pub model: ModelKind,
    pub eaic: f64,
    pub ebic: f64,
    pub dic: f64,
    pub lpml: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateCriteria {
    pub replicate: usize,
    pub uncorrelated_dic: f64,
    pub correlated_dic: f64,
    pub uncorrelated_eaic: f64,
    pub correlated_eaic: f64,
    pub uncorrelated_ebic: f64,
    pub correlated_ebic: f64,
    pub uncorrelated_lpml: f64,
    pub correlated_lpml: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedReplicate {
    pub replicate: usize,
    pub error: String,
}

/// Aggregated study output: one row per parameter per model, averaged
/// criteria per model, per-replicate criteria, and any failed replicates.
#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub scenario: SimScenario,
    pub master_seed: u64,
    pub completed: usize,
    pub rows: Vec<StudyRow>,
    pub criteria: Vec<ModelCriteriaMeans>,
    pub per_replicate: Vec<ReplicateCriteria>,
    pub failed: Vec<FailedReplicate>,
}

struct ParamFit {
    mean: f64,
    sd: f64,
    covered: bool,
}

struct ReplicateOutcome {
    fits: [Vec<ParamFit>; 2],
    criteria: ReplicateCriteria,
}

fn fit_one_model(
    data: &RegressionDataset,
    priors: &PriorSpec,
    kind: ModelKind,
    config: &ChainConfig,
    truth: &[f64],
    level: f64,
) -> Result<(Vec<ParamFit>, crate::criteria::CriteriaReport), SimError> {
    let chain = run_chain(data, priors, kind, config)?;
    let mut fits = Vec::with_capacity(truth.len());
    for (idx, &true_value) in truth.iter().enumerate() {
        let draws = chain.param_draws(idx);
        let summary = summarize(&draws, level)?;
        fits.push(ParamFit {
            mean: summary.mean,
            sd: summary.sd,
            covered: coverage(summary.lower, summary.upper, true_value),
        });
    }
    let report = compute_criteria(data, &chain)?;
    Ok((fits, report))
}

fn run_replicate(
    scenario: &SimScenario,
    priors: &PriorSpec,
    base: &ChainConfig,
    replicate: usize,
) -> Result<ReplicateOutcome, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(base.seed.wrapping_add(replicate as u64));
    let generated = generate_dataset(scenario, &mut rng)?;
    let truth = &generated.truth;

    let layout_u = ParamLayout::for_data(&generated.data, ModelKind::Uncorrelated);
    let truth_u = layout_u.flatten(&ParameterState::new(
        truth.beta.clone(),
        truth.sigma2.clone(),
        DVector::zeros(0),
    ));
    let layout_c = ParamLayout::for_data(&generated.data, ModelKind::Correlated);
    let truth_c = layout_c.flatten(truth);

    let config_u = ChainConfig {
        seed: rng.random::<u64>(),
        n_chains: 1,
        ..base.clone()
    };
    let config_c = ChainConfig {
        seed: rng.random::<u64>(),
        n_chains: 1,
        ..base.clone()
    };
    let (fits_u, report_u) = fit_one_model(
        &generated.data,
        priors,
        ModelKind::Uncorrelated,
        &config_u,
        &truth_u,
        scenario.level,
    )?;
    let (fits_c, report_c) = fit_one_model(
        &generated.data,
        priors,
        ModelKind::Correlated,
        &config_c,
        &truth_c,
        scenario.level,
    )?;

    Ok(ReplicateOutcome {
        fits: [fits_u, fits_c],
        criteria: ReplicateCriteria {
            replicate,
            uncorrelated_dic: report_u.dic,
            correlated_dic: report_c.dic,
            uncorrelated_eaic: report_u.eaic,
            correlated_eaic: report_c.eaic,
            uncorrelated_ebic: report_u.ebic,
            correlated_ebic: report_c.ebic,
            uncorrelated_lpml: report_u.lpml,
            correlated_lpml: report_c.lpml,
        },
    })
}

/// Run the full study: generate, fit both models, summarize, and aggregate
/// across replicates. Replicate r draws everything from `config.seed + r`; a
/// replicate whose fit fails is recorded and excluded from the aggregates.
pub fn run_study(
    scenario: &SimScenario,
    priors: &PriorSpec,
    config: &ChainConfig,
) -> Result<StudyResult, SimError> {
    scenario.validate()?;
    priors.validate(scenario.p(), scenario.g())?;
    config.validate()?;

    let outcomes: Vec<(usize, Result<ReplicateOutcome, SimError>)> = (0..scenario.replicates)
        .into_par_iter()
        .map(|r| (r, run_replicate(scenario, priors, config, r)))
        .collect();

    let mut completed = Vec::new();
    let mut failed = Vec::new();
    for (r, outcome) in outcomes {
        match outcome {
            Ok(o) => completed.push(o),
            Err(e) => failed.push(FailedReplicate {
                replicate: r,
                error: e.to_string(),
            }),
        }
    }
    if completed.is_empty() {
        return Err(SimError::Invalid(format!(
            "all {} replicates failed; first error: {}",
            scenario.replicates,
            failed.first().map(|f| f.error.as_str()).unwrap_or("none")
        )));
    }

    let truth = scenario.truth();
    let layouts = [
        ParamLayout::new(scenario.p(), scenario.g(), ModelKind::Uncorrelated),
        ParamLayout::new(scenario.p(), scenario.g(), ModelKind::Correlated),
    ];
    let truths = [
        layouts[0].flatten(&ParameterState::new(
            truth.beta.clone(),
            truth.sigma2.clone(),
            DVector::zeros(0),
        )),
        layouts[1].flatten(&truth),
    ];

    let denom = completed.len() as f64;
    let mut rows = Vec::new();
    for (which, layout) in layouts.iter().enumerate() {
        for (idx, name) in layout.names().into_iter().enumerate() {
            let mut mean_sum = 0.0;
            let mut sd_sum = 0.0;
            let mut covered = 0usize;
            for outcome in &completed {
                let fit = &outcome.fits[which][idx];
                mean_sum += fit.mean;
                sd_sum += fit.sd;
                covered += fit.covered as usize;
            }
            rows.push(StudyRow {
                model: layout.kind,
                parameter: name,
                truth: truths[which][idx],
                mean_of_posterior_means: mean_sum / denom,
                mean_of_posterior_sds: sd_sum / denom,
                coverage: covered as f64 / denom,
            });
        }
    }

    let mut criteria = Vec::new();
    for kind in [ModelKind::Uncorrelated, ModelKind::Correlated] {
        let (mut eaic, mut ebic, mut dic, mut lpml) = (0.0, 0.0, 0.0, 0.0);
        for outcome in &completed {
            let c = &outcome.criteria;
            match kind {
                ModelKind::Uncorrelated => {
                    eaic += c.uncorrelated_eaic;
                    ebic += c.uncorrelated_ebic;
                    dic += c.uncorrelated_dic;
                    lpml += c.uncorrelated_lpml;
                }
                ModelKind::Correlated => {
                    eaic += c.correlated_eaic;
                    ebic += c.correlated_ebic;
                    dic += c.correlated_dic;
                    lpml += c.correlated_lpml;
                }
            }
        }
        criteria.push(ModelCriteriaMeans {
            model: kind,
            eaic: eaic / denom,
            ebic: ebic / denom,
            dic: dic / denom,
            lpml: lpml / denom,
        });
    }

    Ok(StudyResult {
        scenario: scenario.clone(),
        master_seed: config.seed,
        completed: completed.len(),
        rows,
        criteria,
        per_replicate: completed.into_iter().map(|o| o.criteria).collect(),
        failed,
    })
}

/// Chain settings for desk-scale studies: 6000 iterations, 1000 burn-in,
/// thinning 5, single chain.
pub fn desk_chain_config(seed: u64) -> ChainConfig {
    ChainConfig {
        iterations: 6000,
        burn_in: 1000,
        thin: 5,
        seed,
        n_chains: 1,
        ..ChainConfig::default()
    }
}
