//! Deviance-based model comparison criteria computed from chain output.
//!
//! With D(θ) = −2·log-likelihood (2π constants included, so values are
//! absolute): DIC = D̄ + p_D where p_D = D̄ − D(θ̄); EAIC = D̄ + 2q and
//! EBIC = D̄ + q·log n with q the free-parameter count. CPO_i is the
//! harmonic-mean estimator over kept draws of the observation-level
//! likelihood, accumulated in log space with a running max shift, and
//! LPML = Σ_i log CPO_i.
//!
//! θ̄ is the componentwise posterior mean. If averaging the correlations
//! leaves the positive-definite region (possible though rare), the deviance
//! anchor falls back to the kept draw with the highest log posterior and the
//! report records which definition was used.

use serde::Serialize;
use thiserror::Error;

use crate::model::{obs_logliks, loglik, ModelError, ModelKind, ParameterState, RegressionDataset};
use crate::sampler::ChainOutput;

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error("need at least one kept draw")]
    NoDraws,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which state anchored `deviance_at_mean`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DevianceAnchor {
    PosteriorMean,
    HighestPosteriorDraw,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriteriaReport {
    pub eaic: f64,
    pub ebic: f64,
    pub dic: f64,
    pub lpml: f64,
    /// Per-observation conditional predictive ordinates.
    pub cpo: Vec<f64>,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
    pub p_d: f64,
    /// Free parameters q: g(p+2), plus g(g−1)/2 for the correlated model.
    pub n_params: usize,
    pub anchor: DevianceAnchor,
}

/// Deviance D(θ) = −2 × log-likelihood.
pub fn deviance(
    data: &RegressionDataset,
    state: &ParameterState,
    kind: ModelKind,
) -> Result<f64, CriteriaError> {
    Ok(-2.0 * loglik(data, state, kind)?)
}

/// Running log-sum-exp accumulator.
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn push(&mut self, value: f64) {
        if value <= self.max {
            self.sum += (value - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - value).exp() + 1.0;
            self.max = value;
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Compute EAIC/EBIC/DIC and CPO/LPML from the kept draws of a chain (or a
/// pooled set of chains); the model kind comes from the chain layout.
pub fn compute_criteria(
    data: &RegressionDataset,
    chain: &ChainOutput,
) -> Result<CriteriaReport, CriteriaError> {
    let m = chain.n_kept();
    if m == 0 {
        return Err(CriteriaError::NoDraws);
    }
    let kind = chain.layout.kind;
    let n = data.n();
    let q = chain.layout.n_params();

    let mut deviance_sum = 0.0;
    // one accumulator per observation over exp(−loglik_i)
    let mut inv_lik: Vec<LogSumExp> = (0..n).map(|_| LogSumExp::new()).collect();
    for r in 0..m {
        let state = chain.state_at(r);
        let per_obs = obs_logliks(data, &state, kind)?;
        deviance_sum += -2.0 * per_obs.sum();
        for (acc, ll) in inv_lik.iter_mut().zip(per_obs.iter()) {
            acc.push(-ll);
        }
    }
    let mean_deviance = deviance_sum / m as f64;

    let col_means: Vec<f64> = (0..chain.layout.n_params())
        .map(|c| chain.draws.column(c).iter().sum::<f64>() / m as f64)
        .collect();
    let mean_state = chain.layout.state_from_slice(&col_means);
    let (anchor_state, anchor) = if mean_state.in_support() {
        (mean_state, DevianceAnchor::PosteriorMean)
    } else {
        let best = chain
            .log_post
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("log posterior must not be NaN"))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (chain.state_at(best), DevianceAnchor::HighestPosteriorDraw)
    };
    let deviance_at_mean = deviance(data, &anchor_state, kind)?;
    let p_d = mean_deviance - deviance_at_mean;

    let log_m = (m as f64).ln();
    let log_cpo: Vec<f64> = inv_lik.iter().map(|acc| log_m - acc.value()).collect();
    let lpml = log_cpo.iter().sum();

    Ok(CriteriaReport {
        eaic: mean_deviance + 2.0 * q as f64,
        ebic: mean_deviance + q as f64 * (n as f64).ln(),
        dic: mean_deviance + p_d,
        lpml,
        cpo: log_cpo.iter().map(|&l| l.exp()).collect(),
        mean_deviance,
        deviance_at_mean,
        p_d,
        n_params: q,
        anchor,
    })
}
