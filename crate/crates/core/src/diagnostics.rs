//! Convergence diagnostics and posterior summarization.
//!
//! [`gelman_rubin`] is the classic univariate potential scale reduction
//! factor computed per parameter from two or more chains. [`summarize`]
//! reduces one parameter's draws to mean, standard deviation, an equal-tailed
//! credible interval, and an effective sample size based on Geyer's initial
//! positive sequence of autocorrelations.
//!
//! Quantiles use linear interpolation between order statistics at position
//! h = (m−1)p + 1; credible-interval endpoints are compared in golden tests,
//! so the rule is part of the contract.

use thiserror::Error;

use crate::sampler::ChainOutput;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("Gelman-Rubin needs at least 2 chains, found {found}")]
    TooFewChains { found: usize },
    #[error("chains must have at least 2 draws each, found {found}")]
    ChainTooShort { found: usize },
    #[error("chains must have equal lengths")]
    UnequalChainLengths,
    #[error("chains have zero within-chain variance")]
    DegenerateChains,
    #[error("need at least 2 draws to summarize")]
    EmptyDraws,
    #[error("credible level must lie in (0,1), got {level}")]
    BadLevel { level: f64 },
    #[error("chain outputs have mismatched layouts")]
    LayoutMismatch,
}

/// Posterior summary for a single parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub sd: f64,
    /// Equal-tailed credible interval bounds at the requested level.
    pub lower: f64,
    pub upper: f64,
    pub ess: f64,
    /// Potential scale reduction factor; `None` when only one chain ran.
    pub psrf: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Classic potential scale reduction factor over equal-length chains of one
/// parameter: with within-chain variance W and between-chain variance B,
/// V̂ = ((m−1)/m)·W + B/m and PSRF = sqrt(V̂/W).
pub fn gelman_rubin(chains: &[&[f64]]) -> Result<f64, DiagnosticsError> {
    if chains.len() < 2 {
        return Err(DiagnosticsError::TooFewChains { found: chains.len() });
    }
    let m = chains[0].len();
    if chains.iter().any(|c| c.len() != m) {
        return Err(DiagnosticsError::UnequalChainLengths);
    }
    if m < 2 {
        return Err(DiagnosticsError::ChainTooShort { found: m });
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let within = chains.iter().map(|c| sample_variance(c)).sum::<f64>() / chains.len() as f64;
    if within == 0.0 {
        return Err(DiagnosticsError::DegenerateChains);
    }
    // sample variance of the chain means equals B/m in Gelman's notation
    let b_over_m = sample_variance(&means);
    let m = m as f64;
    let v_hat = (m - 1.0) / m * within + b_over_m;
    Ok((v_hat / within).sqrt())
}

/// Empirical quantile with linear interpolation between order statistics at
/// h = (m−1)p + 1 (1-based).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    debug_assert!(m >= 1 && (0.0..=1.0).contains(&p));
    let h = (m as f64 - 1.0) * p + 1.0;
    let lo = h.floor() as usize;
    if lo >= m {
        return sorted[m - 1];
    }
    let frac = h - lo as f64;
    sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1])
}

/// Effective sample size of one sequence via Geyer's initial positive
/// sequence: τ = −1 + 2·Σ_k Γ_k over consecutive autocorrelation pairs
/// Γ_k = ρ_{2k} + ρ_{2k+1} while the pair sums stay positive; ESS = m/τ,
/// clamped to [1, m]. A constant sequence reports ESS = m.
pub fn effective_sample_size(draws: &[f64]) -> f64 {
    let m = draws.len();
    if m < 4 {
        return m as f64;
    }
    let mu = mean(draws);
    let centered: Vec<f64> = draws.iter().map(|x| x - mu).collect();
    let gamma0 = centered.iter().map(|x| x * x).sum::<f64>() / m as f64;
    if gamma0 == 0.0 {
        return m as f64;
    }
    let autocorr = |t: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..m - t {
            acc += centered[i] * centered[i + t];
        }
        acc / (m as f64 * gamma0)
    };

    let mut tau = -1.0;
    let mut t = 0;
    while t + 1 < m {
        let pair = if t == 0 {
            1.0 + autocorr(1)
        } else {
            autocorr(t) + autocorr(t + 1)
        };
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        t += 2;
    }
    (m as f64 / tau).clamp(1.0, m as f64)
}

/// Summarize one parameter's draws: mean, sample SD, equal-tailed credible
/// interval at `level`, and effective sample size.
pub fn summarize(draws: &[f64], level: f64) -> Result<PosteriorSummary, DiagnosticsError> {
    if draws.len() < 2 {
        return Err(DiagnosticsError::EmptyDraws);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(DiagnosticsError::BadLevel { level });
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("draws must not contain NaN"));
    let alpha = 1.0 - level;
    Ok(PosteriorSummary {
        mean: mean(draws),
        sd: sample_variance(draws).sqrt(),
        lower: quantile(&sorted, alpha / 2.0),
        upper: quantile(&sorted, 1.0 - alpha / 2.0),
        ess: effective_sample_size(draws),
        psrf: None,
    })
}

/// Per-parameter summaries across chains: pooled moments and intervals,
/// per-chain ESS summed, and PSRF when two or more chains are available.
pub fn summarize_chains(
    chains: &[ChainOutput],
    level: f64,
) -> Result<Vec<(String, PosteriorSummary)>, DiagnosticsError> {
    let Some(first) = chains.first() else {
        return Err(DiagnosticsError::EmptyDraws);
    };
    if chains.iter().any(|c| c.layout != first.layout) {
        return Err(DiagnosticsError::LayoutMismatch);
    }
    let mut out = Vec::with_capacity(first.parameter_names.len());
    for (idx, name) in first.parameter_names.iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = chains.iter().map(|c| c.param_draws(idx)).collect();
        let pooled: Vec<f64> = per_chain.iter().flatten().copied().collect();
        let mut summary = summarize(&pooled, level)?;
        summary.ess = per_chain.iter().map(|c| effective_sample_size(c)).sum();
        if chains.len() >= 2 {
            let views: Vec<&[f64]> = per_chain.iter().map(|c| c.as_slice()).collect();
            summary.psrf = match gelman_rubin(&views) {
                Ok(v) => Some(v),
                // A parameter stuck at one value across all chains gives no
                // scale-reduction information; surface it as NaN rather than
                // failing the whole summary.
                Err(DiagnosticsError::DegenerateChains) => Some(f64::NAN),
                Err(e) => return Err(e),
            };
        }
        out.push((name.clone(), summary));
    }
    Ok(out)
}
