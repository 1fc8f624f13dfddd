//! MCMC engines for the two error structures.
//!
//! The uncorrelated model admits closed-form full conditionals (Normal for
//! each coefficient, Inverse-Gamma for each variance), so [`run_chain`] cycles
//! exact Gibbs draws. The conditional moments are derived from standard
//! conjugacy and exposed ([`beta0_conditional`], [`beta_slope_conditional`],
//! [`sigma2_conditional`]) so tests can pin them against grid quadrature of
//! the joint log posterior.
//!
//! The correlated model has no tractable conditionals; [`mwg_step`] performs
//! one sweep of single-site random-walk Metropolis updates: Normal proposals
//! on each coefficient, Normal proposals on log σ² (with the Jacobian term),
//! and Normal proposals on each correlation with immediate rejection outside
//! the positive-definite region. Proposal scales adapt during burn-in by a
//! Robbins–Monro rule ([`adapt_scales`]) and are frozen afterwards so the
//! kept chain is Markov.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{
    log_posterior_unnorm, residuals, rho_len, rho_pairs, ModelError, ModelKind, ParameterState,
    PriorSpec, RegressionDataset,
};

/// Iterations between proposal-scale adaptations during burn-in.
const ADAPT_INTERVAL: usize = 50;
/// Default initial random-walk proposal scale for every block.
const DEFAULT_PROPOSAL_SCALE: f64 = 0.1;
/// Jitter SD applied to initial values for overdispersed chain starts.
const INIT_JITTER_SD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),
    #[error("proposal_scales must have length {expected} or 1, found {found}")]
    ProposalScaleCount { expected: usize, found: usize },
    #[error("state is outside the posterior support")]
    InvalidState,
}

/// Settings for one sampling run.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub n_chains: usize,
    /// Initial random-walk scales per block (correlated model only); a single
    /// value broadcasts, `None` uses 0.1 everywhere.
    pub proposal_scales: Option<Vec<f64>>,
    /// Adapt proposal scales during burn-in.
    pub adapt: bool,
    pub target_accept: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            burn_in: 10_000,
            thin: 20,
            seed: 42,
            n_chains: 2,
            proposal_scales: None,
            adapt: true,
            target_accept: 0.44,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.burn_in >= self.iterations {
            return Err(SamplerError::InvalidConfig(format!(
                "burn_in ({}) must be less than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(SamplerError::InvalidConfig("thin must be at least 1".into()));
        }
        if self.n_chains == 0 {
            return Err(SamplerError::InvalidConfig("n_chains must be at least 1".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "target_accept must lie in (0,1), got {}",
                self.target_accept
            )));
        }
        if let Some(scales) = &self.proposal_scales {
            if scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
                return Err(SamplerError::InvalidConfig(
                    "proposal scales must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Number of kept draws: floor((iterations − burn_in)/thin).
    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Flattened parameter ordering for a model: beta (row-major, intercepts
/// first), then variances, then correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub p: usize,
    pub g: usize,
    pub kind: ModelKind,
}

impl ParamLayout {
    pub fn new(p: usize, g: usize, kind: ModelKind) -> Self {
        Self { p, g, kind }
    }

    pub fn for_data(data: &RegressionDataset, kind: ModelKind) -> Self {
        Self::new(data.p(), data.g(), kind)
    }

    pub fn n_rho(&self) -> usize {
        match self.kind {
            ModelKind::Uncorrelated => 0,
            ModelKind::Correlated => rho_len(self.g),
        }
    }

    /// Count of free parameters: g(p+2) plus g(g−1)/2 for the correlated model.
    pub fn n_params(&self) -> usize {
        (self.p + 1) * self.g + self.g + self.n_rho()
    }

    /// Column labels, e.g. `beta_0_1`, `sigma2_1`, `rho_1_2` (indices 1-based
    /// on the response column).
    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        for l in 0..=self.p {
            for j in 1..=self.g {
                names.push(format!("beta_{l}_{j}"));
            }
        }
        for j in 1..=self.g {
            names.push(format!("sigma2_{j}"));
        }
        if self.kind == ModelKind::Correlated {
            for (j, k) in rho_pairs(self.g) {
                names.push(format!("rho_{}_{}", j + 1, k + 1));
            }
        }
        names
    }

    pub fn flatten(&self, state: &ParameterState) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.n_params());
        for l in 0..=self.p {
            for j in 0..self.g {
                row.push(state.beta[(l, j)]);
            }
        }
        row.extend(state.sigma2.iter());
        row.extend(state.rho.iter());
        row
    }

    pub fn state_from_slice(&self, row: &[f64]) -> ParameterState {
        assert_eq!(row.len(), self.n_params(), "row length does not match layout");
        let beta = DMatrix::from_fn(self.p + 1, self.g, |l, j| row[l * self.g + j]);
        let base = (self.p + 1) * self.g;
        let sigma2 = DVector::from_column_slice(&row[base..base + self.g]);
        let rho = DVector::from_column_slice(&row[base + self.g..]);
        ParameterState::new(beta, sigma2, rho)
    }
}

/// Thinned post-burn-in draws from one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub layout: ParamLayout,
    pub parameter_names: Vec<String>,
    /// Kept draws, one row per kept iteration, columns per [`ParamLayout`].
    pub draws: DMatrix<f64>,
    /// Unnormalized log posterior at each kept draw.
    pub log_post: Vec<f64>,
    /// Post-burn-in acceptance rate per block (empty for the Gibbs sampler).
    pub acceptance: Vec<f64>,
    pub seed_used: u64,
}

impl ChainOutput {
    pub fn n_kept(&self) -> usize {
        self.draws.nrows()
    }

    pub fn state_at(&self, row: usize) -> ParameterState {
        let row: Vec<f64> = self.draws.row(row).iter().copied().collect();
        self.layout.state_from_slice(&row)
    }

    /// All kept draws of one parameter column.
    pub fn param_draws(&self, col: usize) -> Vec<f64> {
        self.draws.column(col).iter().copied().collect()
    }

    /// Concatenate kept draws across chains (layouts must agree).
    pub fn pooled(chains: &[ChainOutput]) -> Option<ChainOutput> {
        let first = chains.first()?;
        if chains.iter().any(|c| c.layout != first.layout) {
            return None;
        }
        let total: usize = chains.iter().map(|c| c.n_kept()).sum();
        let mut draws = DMatrix::zeros(total, first.layout.n_params());
        let mut log_post = Vec::with_capacity(total);
        let mut row = 0;
        for chain in chains {
            for r in 0..chain.n_kept() {
                draws.set_row(row, &chain.draws.row(r));
                row += 1;
            }
            log_post.extend_from_slice(&chain.log_post);
        }
        let acceptance = if first.acceptance.is_empty() {
            Vec::new()
        } else {
            let blocks = first.acceptance.len();
            (0..blocks)
                .map(|b| chains.iter().map(|c| c.acceptance[b]).sum::<f64>() / chains.len() as f64)
                .collect()
        };
        Some(ChainOutput {
            layout: first.layout,
            parameter_names: first.parameter_names.clone(),
            draws,
            log_post,
            acceptance,
            seed_used: first.seed_used,
        })
    }
}

/// Mean and variance of a Normal full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub mean: f64,
    pub var: f64,
}

/// Shape and scale of an Inverse-Gamma full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaParams {
    pub shape: f64,
    pub scale: f64,
}

/// Full conditional of the intercept β_0j in the uncorrelated model:
/// precision 1/b² + n/σ², mean weighting the prior mean against the partial
/// residuals μ_i = y_ij − Σ_l β_lj z_il.
pub fn beta0_conditional(
    j: usize,
    data: &RegressionDataset,
    state: &ParameterState,
    priors: &PriorSpec,
) -> GaussianParams {
    let (n, p) = (data.n(), data.p());
    let s2 = state.sigma2[j];
    let (a, b2) = (priors.a[(0, j)], priors.b2[(0, j)]);
    let mut sum_mu = 0.0;
    for i in 0..n {
        let mut mu = data.y()[(i, j)];
        for l in 0..p {
            mu -= state.beta[(l + 1, j)] * data.z()[(i, l)];
        }
        sum_mu += mu;
    }
    let precision = 1.0 / b2 + n as f64 / s2;
    GaussianParams {
        mean: (a / b2 + sum_mu / s2) / precision,
        var: 1.0 / precision,
    }
}

/// Full conditional of the slope β_lj (l ≥ 1) in the uncorrelated model:
/// precision 1/b² + Σ z² /σ², with partial residuals θ_i removing the
/// intercept and every other covariate's contribution.
pub fn beta_slope_conditional(
    l: usize,
    j: usize,
    data: &RegressionDataset,
    state: &ParameterState,
    priors: &PriorSpec,
) -> GaussianParams {
    assert!(l >= 1 && l <= data.p(), "slope index l must be in 1..=p");
    let (n, p) = (data.n(), data.p());
    let s2 = state.sigma2[j];
    let (a, b2) = (priors.a[(l, j)], priors.b2[(l, j)]);
    let mut sum_z2 = 0.0;
    let mut sum_ztheta = 0.0;
    for i in 0..n {
        let zil = data.z()[(i, l - 1)];
        let mut theta = data.y()[(i, j)] - state.beta[(0, j)];
        for m in 1..=p {
            if m != l {
                theta -= state.beta[(m, j)] * data.z()[(i, m - 1)];
            }
        }
        sum_z2 += zil * zil;
        sum_ztheta += zil * theta;
    }
    let precision = 1.0 / b2 + sum_z2 / s2;
    GaussianParams {
        mean: (a / b2 + sum_ztheta / s2) / precision,
        var: 1.0 / precision,
    }
}

/// Full conditional of σ_j²: Inverse-Gamma(c + n/2, d + SSE_j/2).
pub fn sigma2_conditional(
    j: usize,
    data: &RegressionDataset,
    state: &ParameterState,
    priors: &PriorSpec,
) -> Result<InvGammaParams, ModelError> {
    let eps = residuals(data, state)?;
    let sse: f64 = eps.column(j).iter().map(|e| e * e).sum();
    Ok(InvGammaParams {
        shape: priors.c[j] + data.n() as f64 / 2.0,
        scale: priors.d[j] + sse / 2.0,
    })
}

fn draw_normal<R: Rng>(params: GaussianParams, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    params.mean + params.var.sqrt() * z
}

fn draw_inverse_gamma<R: Rng>(params: InvGammaParams, rng: &mut R) -> f64 {
    let gamma = Gamma::new(params.shape, 1.0 / params.scale)
        .expect("conditional shape and scale are positive");
    let y: f64 = gamma.sample(rng).max(f64::MIN_POSITIVE);
    1.0 / y
}

/// Draw β_0j from its full conditional, writing it into `state`.
pub fn gibbs_update_beta0<R: Rng>(
    j: usize,
    data: &RegressionDataset,
    state: &mut ParameterState,
    priors: &PriorSpec,
    rng: &mut R,
) -> f64 {
    let draw = draw_normal(beta0_conditional(j, data, state, priors), rng);
    state.beta[(0, j)] = draw;
    draw
}

/// Draw β_lj (l ≥ 1) from its full conditional, writing it into `state`.
pub fn gibbs_update_beta_slope<R: Rng>(
    l: usize,
    j: usize,
    data: &RegressionDataset,
    state: &mut ParameterState,
    priors: &PriorSpec,
    rng: &mut R,
) -> f64 {
    let draw = draw_normal(beta_slope_conditional(l, j, data, state, priors), rng);
    state.beta[(l, j)] = draw;
    draw
}

/// Draw σ_j² from its Inverse-Gamma full conditional, writing it into `state`.
pub fn gibbs_update_sigma2<R: Rng>(
    j: usize,
    data: &RegressionDataset,
    state: &mut ParameterState,
    priors: &PriorSpec,
    rng: &mut R,
) -> Result<f64, ModelError> {
    let params = sigma2_conditional(j, data, state, priors)?;
    let draw = draw_inverse_gamma(params, rng);
    state.sigma2[j] = draw;
    Ok(draw)
}

/// One full Gibbs sweep over every coefficient and variance.
pub fn gibbs_sweep<R: Rng>(
    data: &RegressionDataset,
    state: &mut ParameterState,
    priors: &PriorSpec,
    rng: &mut R,
) -> Result<(), ModelError> {
    for j in 0..data.g() {
        gibbs_update_beta0(j, data, state, priors, rng);
        for l in 1..=data.p() {
            gibbs_update_beta_slope(l, j, data, state, priors, rng);
        }
    }
    for j in 0..data.g() {
        gibbs_update_sigma2(j, data, state, priors, rng)?;
    }
    Ok(())
}

fn accept<R: Rng>(log_ratio: f64, rng: &mut R) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp()
}

/// One Metropolis-within-Gibbs sweep for the correlated model, with the
/// current log posterior threaded through to avoid recomputation.
fn mwg_sweep<R: Rng>(
    data: &RegressionDataset,
    state: &mut ParameterState,
    priors: &PriorSpec,
    scales: &[f64],
    rng: &mut R,
    lp: &mut f64,
) -> Result<Vec<bool>, ModelError> {
    let (g, p) = (data.g(), data.p());
    let mut flags = Vec::with_capacity(scales.len());
    let mut block = 0;

    for l in 0..=p {
        for j in 0..g {
            let noise: f64 = rng.sample(StandardNormal);
            let old = state.beta[(l, j)];
            state.beta[(l, j)] = old + scales[block] * noise;
            let lp_new = log_posterior_unnorm(data, state, priors, ModelKind::Correlated)?;
            let ok = accept(lp_new - *lp, rng);
            if ok {
                *lp = lp_new;
            } else {
                state.beta[(l, j)] = old;
            }
            flags.push(ok);
            block += 1;
        }
    }

    // Log-scale proposals keep σ² positive; the Jacobian of σ² = exp(w)
    // contributes log(σ²_new) − log(σ²_old) to the acceptance ratio.
    for j in 0..g {
        let noise: f64 = rng.sample(StandardNormal);
        let old = state.sigma2[j];
        let proposal = (old.ln() + scales[block] * noise).exp();
        let ok = if proposal > 0.0 && proposal.is_finite() {
            state.sigma2[j] = proposal;
            let lp_new = log_posterior_unnorm(data, state, priors, ModelKind::Correlated)?;
            let ok = accept(lp_new - *lp + (proposal.ln() - old.ln()), rng);
            if ok {
                *lp = lp_new;
            } else {
                state.sigma2[j] = old;
            }
            ok
        } else {
            false
        };
        flags.push(ok);
        block += 1;
    }

    for r in 0..state.rho.len() {
        let noise: f64 = rng.sample(StandardNormal);
        let old = state.rho[r];
        let proposal = old + scales[block] * noise;
        // Proposals outside (−1,1) or the PD region have zero prior mass.
        let ok = if proposal.abs() < 1.0 {
            state.rho[r] = proposal;
            let lp_new = log_posterior_unnorm(data, state, priors, ModelKind::Correlated)?;
            let ok = accept(lp_new - *lp, rng);
            if ok {
                *lp = lp_new;
            } else {
                state.rho[r] = old;
            }
            ok
        } else {
            false
        };
        flags.push(ok);
        block += 1;
    }

    Ok(flags)
}

/// One sweep of single-site random-walk Metropolis updates over every
/// parameter of the correlated model; returns per-block accept flags in
/// [`ParamLayout`] order.
pub fn mwg_step<R: Rng>(
    data: &RegressionDataset,
    state: &mut ParameterState,
    priors: &PriorSpec,
    scales: &[f64],
    rng: &mut R,
) -> Result<Vec<bool>, SamplerError> {
    let expected = ParamLayout::for_data(data, ModelKind::Correlated).n_params();
    if scales.len() != expected {
        return Err(SamplerError::ProposalScaleCount {
            expected,
            found: scales.len(),
        });
    }
    let mut lp = log_posterior_unnorm(data, state, priors, ModelKind::Correlated)?;
    if !lp.is_finite() {
        return Err(SamplerError::InvalidState);
    }
    Ok(mwg_sweep(data, state, priors, scales, rng, &mut lp)?)
}

/// Robbins–Monro proposal-scale update: log s ← log s + t^{−0.6}·(rate − target).
pub fn adapt_scales(rates: &[f64], scales: &[f64], step: u64, target_accept: f64) -> Vec<f64> {
    assert_eq!(rates.len(), scales.len());
    let gain = (step.max(1) as f64).powf(-0.6);
    rates
        .iter()
        .zip(scales)
        .map(|(&rate, &s)| (s.ln() + gain * (rate - target_accept)).exp().clamp(1e-8, 1e8))
        .collect()
}

fn initial_state<R: Rng>(
    data: &RegressionDataset,
    priors: &PriorSpec,
    kind: ModelKind,
    rng: &mut R,
) -> ParameterState {
    let (n, g, p) = (data.n(), data.g(), data.p());
    let (mut beta, mut sigma2) = if n > p + 1 {
        let design = DMatrix::from_fn(n, p + 1, |i, c| {
            if c == 0 {
                1.0
            } else {
                data.z()[(i, c - 1)]
            }
        });
        let xtx = design.transpose() * &design;
        let xty = design.transpose() * data.y();
        let beta = match Cholesky::new(xtx.clone()) {
            Some(chol) => chol.solve(&xty),
            None => xtx
                .lu()
                .solve(&xty)
                .unwrap_or_else(|| DMatrix::zeros(p + 1, g)),
        };
        let eps = data.y() - &design * &beta;
        let sigma2 = DVector::from_fn(g, |j, _| {
            let sse: f64 = eps.column(j).iter().map(|e| e * e).sum();
            (sse / (n - p - 1) as f64).max(1e-8)
        });
        (beta, sigma2)
    } else {
        (priors.a.clone(), DVector::from_element(g, 1.0))
    };

    for v in beta.iter_mut() {
        let noise: f64 = rng.sample(StandardNormal);
        *v += INIT_JITTER_SD * noise;
    }
    for v in sigma2.iter_mut() {
        let noise: f64 = rng.sample(StandardNormal);
        *v = (v.ln() + INIT_JITTER_SD * noise).exp();
    }
    let rho = match kind {
        ModelKind::Uncorrelated => DVector::zeros(0),
        ModelKind::Correlated => DVector::zeros(rho_len(g)),
    };
    ParameterState::new(beta, sigma2, rho)
}

fn keep_at(t: usize, config: &ChainConfig) -> bool {
    t > config.burn_in && (t - config.burn_in) % config.thin == 0
}

/// Run a single chain; fully deterministic given `config.seed`.
pub fn run_chain(
    data: &RegressionDataset,
    priors: &PriorSpec,
    kind: ModelKind,
    config: &ChainConfig,
) -> Result<ChainOutput, SamplerError> {
    config.validate()?;
    priors.validate(data.p(), data.g())?;
    let layout = ParamLayout::for_data(data, kind);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = initial_state(data, priors, kind, &mut rng);

    let kept = config.kept();
    let mut draws = DMatrix::zeros(kept, layout.n_params());
    let mut log_post = Vec::with_capacity(kept);
    let mut row = 0;

    let acceptance = match kind {
        ModelKind::Uncorrelated => {
            for t in 1..=config.iterations {
                gibbs_sweep(data, &mut state, priors, &mut rng)?;
                if keep_at(t, config) {
                    for (c, v) in layout.flatten(&state).into_iter().enumerate() {
                        draws[(row, c)] = v;
                    }
                    log_post.push(log_posterior_unnorm(data, &state, priors, kind)?);
                    row += 1;
                }
            }
            Vec::new()
        }
        ModelKind::Correlated => {
            let n_blocks = layout.n_params();
            let mut scales = match &config.proposal_scales {
                None => vec![DEFAULT_PROPOSAL_SCALE; n_blocks],
                Some(v) if v.len() == 1 => vec![v[0]; n_blocks],
                Some(v) if v.len() == n_blocks => v.clone(),
                Some(v) => {
                    return Err(SamplerError::ProposalScaleCount {
                        expected: n_blocks,
                        found: v.len(),
                    })
                }
            };
            let mut lp = log_posterior_unnorm(data, &state, priors, kind)?;
            if !lp.is_finite() {
                return Err(SamplerError::InvalidState);
            }

            let mut batch_accepts = vec![0usize; n_blocks];
            let mut batch_len = 0usize;
            let mut adapt_step = 0u64;
            let mut post_accepts = vec![0usize; n_blocks];

            for t in 1..=config.iterations {
                let flags = mwg_sweep(data, &mut state, priors, &scales, &mut rng, &mut lp)?;
                if t <= config.burn_in {
                    if config.adapt {
                        for (count, &f) in batch_accepts.iter_mut().zip(&flags) {
                            *count += f as usize;
                        }
                        batch_len += 1;
                        if batch_len == ADAPT_INTERVAL {
                            adapt_step += 1;
                            let rates: Vec<f64> = batch_accepts
                                .iter()
                                .map(|&c| c as f64 / batch_len as f64)
                                .collect();
                            scales = adapt_scales(&rates, &scales, adapt_step, config.target_accept);
                            batch_accepts.iter_mut().for_each(|c| *c = 0);
                            batch_len = 0;
                        }
                    }
                } else {
                    for (count, &f) in post_accepts.iter_mut().zip(&flags) {
                        *count += f as usize;
                    }
                }
                if keep_at(t, config) {
                    for (c, v) in layout.flatten(&state).into_iter().enumerate() {
                        draws[(row, c)] = v;
                    }
                    log_post.push(lp);
                    row += 1;
                }
            }
            let denom = (config.iterations - config.burn_in) as f64;
            post_accepts
                .into_iter()
                .map(|c| c as f64 / denom)
                .collect()
        }
    };
    debug_assert_eq!(row, kept);

    Ok(ChainOutput {
        layout,
        parameter_names: layout.names(),
        draws,
        log_post,
        acceptance,
        seed_used: config.seed,
    })
}

/// Run `config.n_chains` independent chains with seeds seed, seed+1, … and
/// overdispersed starting points; chains execute in parallel.
pub fn run_chains(
    data: &RegressionDataset,
    priors: &PriorSpec,
    kind: ModelKind,
    config: &ChainConfig,
) -> Result<Vec<ChainOutput>, SamplerError> {
    config.validate()?;
    (0..config.n_chains)
        .into_par_iter()
        .map(|c| {
            let chain_config = ChainConfig {
                seed: config.seed + c as u64,
                ..config.clone()
            };
            run_chain(data, priors, kind, &chain_config)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_data(seed: u64, n: usize, g: usize, p: usize) -> RegressionDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DMatrix::from_fn(n, g, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let z = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>());
        RegressionDataset::new(y, z).unwrap()
    }

    fn plain_state(g: usize, p: usize, correlated: bool) -> ParameterState {
        ParameterState::new(
            DMatrix::from_element(p + 1, g, 0.1),
            DVector::from_element(g, 0.5),
            if correlated {
                DVector::zeros(rho_len(g))
            } else {
                DVector::zeros(0)
            },
        )
    }

    #[test]
    fn beta0_flat_prior_limit_recovers_sample_mean() {
        let data = toy_data(1, 40, 2, 2);
        let state = plain_state(2, 2, false);
        let mut priors = PriorSpec::vague(2, 2);
        priors.b2.fill(1e12);
        let params = beta0_conditional(0, &data, &state, &priors);
        let mut expect = 0.0;
        for i in 0..data.n() {
            expect += data.y()[(i, 0)]
                - state.beta[(1, 0)] * data.z()[(i, 0)]
                - state.beta[(2, 0)] * data.z()[(i, 1)];
        }
        expect /= data.n() as f64;
        assert_relative_eq!(params.mean, expect, epsilon = 1e-8);
        assert_relative_eq!(params.var, state.sigma2[0] / data.n() as f64, max_relative = 1e-6);
    }

    #[test]
    fn conditionals_reduce_to_prior_without_data() {
        let data = RegressionDataset::prior_only(2, 2);
        let state = plain_state(2, 2, false);
        let mut priors = PriorSpec::vague(2, 2);
        priors.a[(0, 1)] = 0.7;
        priors.b2[(0, 1)] = 2.5;
        let params = beta0_conditional(1, &data, &state, &priors);
        assert_relative_eq!(params.mean, 0.7, epsilon = 1e-12);
        assert_relative_eq!(params.var, 2.5, epsilon = 1e-12);

        let ig = sigma2_conditional(0, &data, &state, &priors).unwrap();
        assert_relative_eq!(ig.shape, priors.c[0], epsilon = 1e-12);
        assert_relative_eq!(ig.scale, priors.d[0], epsilon = 1e-12);
    }

    #[test]
    fn slope_conditional_prior_when_covariate_is_zero() {
        let mut data = toy_data(2, 20, 1, 2);
        // Zero out the first covariate column.
        let mut z = data.z().clone();
        for i in 0..z.nrows() {
            z[(i, 0)] = 0.0;
        }
        data = RegressionDataset::new(data.y().clone(), z).unwrap();
        let state = plain_state(1, 2, false);
        let priors = PriorSpec::vague(2, 1);
        let params = beta_slope_conditional(1, 0, &data, &state, &priors);
        assert_relative_eq!(params.mean, priors.a[(1, 0)], epsilon = 1e-12);
        assert_relative_eq!(params.var, priors.b2[(1, 0)], epsilon = 1e-12);
    }

    #[test]
    fn slope_flat_prior_limit_is_least_squares() {
        let data = toy_data(3, 30, 1, 1);
        let mut state = plain_state(1, 1, false);
        state.beta[(0, 0)] = 0.0;
        let mut priors = PriorSpec::vague(1, 1);
        priors.b2.fill(1e12);
        let params = beta_slope_conditional(1, 0, &data, &state, &priors);
        let num: f64 = (0..data.n())
            .map(|i| data.z()[(i, 0)] * data.y()[(i, 0)])
            .sum();
        let den: f64 = (0..data.n()).map(|i| data.z()[(i, 0)].powi(2)).sum();
        assert_relative_eq!(params.mean, num / den, epsilon = 1e-8);
    }

    #[test]
    fn sigma2_conditional_shape_is_forced_by_n() {
        // n=128 with c=0.1 gives shape 64.1.
        let data = toy_data(4, 128, 1, 1);
        let state = plain_state(1, 1, false);
        let priors = PriorSpec::vague(1, 1);
        let params = sigma2_conditional(0, &data, &state, &priors).unwrap();
        assert_relative_eq!(params.shape, 64.1, epsilon = 1e-12);
    }

    #[test]
    fn inverse_gamma_draws_match_moment_oracle() {
        // IG(4, 5) has mean 5/3 and variance 25/(9·2).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = InvGammaParams { shape: 4.0, scale: 5.0 };
        let m = 100_000;
        let mean = (0..m)
            .map(|_| draw_inverse_gamma(params, &mut rng))
            .sum::<f64>()
            / m as f64;
        let se = (25.0 / (9.0 * 2.0) / m as f64).sqrt();
        assert!(
            (mean - 5.0 / 3.0).abs() < 3.0 * se,
            "IG sample mean {mean} vs 5/3 (3·SE = {:.5})",
            3.0 * se
        );
    }

    #[test]
    fn mwg_accepts_everything_in_the_small_scale_limit() {
        let data = toy_data(6, 15, 2, 1);
        let mut state = plain_state(2, 1, true);
        let priors = PriorSpec::vague(1, 2);
        let n_blocks = ParamLayout::for_data(&data, ModelKind::Correlated).n_params();
        let scales = vec![1e-12; n_blocks];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut total = 0usize;
        let mut accepted = 0usize;
        for _ in 0..50 {
            let flags = mwg_step(&data, &mut state, &priors, &scales, &mut rng).unwrap();
            total += flags.len();
            accepted += flags.iter().filter(|&&f| f).count();
        }
        assert_eq!(accepted, total, "tiny proposals should always be accepted");
    }

    #[test]
    fn mwg_rejects_invalid_incoming_state() {
        let data = toy_data(7, 15, 2, 1);
        let mut state = plain_state(2, 1, true);
        state.sigma2[0] = -1.0;
        let priors = PriorSpec::vague(1, 2);
        let scales = vec![0.1; ParamLayout::for_data(&data, ModelKind::Correlated).n_params()];
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        assert!(matches!(
            mwg_step(&data, &mut state, &priors, &scales, &mut rng),
            Err(SamplerError::InvalidState) | Err(SamplerError::Model(_))
        ));
    }

    #[test]
    fn adapt_scales_examples() {
        let scales = vec![0.3, 0.3];
        let same = adapt_scales(&[0.44, 0.44], &scales, 3, 0.44);
        assert_relative_eq!(same[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(same[1], 0.3, epsilon = 1e-12);

        // A persistently saturated acceptance rate grows the scale every step.
        let mut s = vec![0.3];
        for step in 1..=10 {
            let next = adapt_scales(&[1.0], &s, step, 0.44);
            assert!(next[0] > s[0]);
            s = next;
        }
    }

    #[test]
    fn kept_row_count_and_determinism() {
        let data = toy_data(11, 12, 2, 1);
        let priors = PriorSpec::vague(1, 2);
        let config = ChainConfig {
            iterations: 100,
            burn_in: 50,
            thin: 10,
            seed: 123,
            n_chains: 1,
            ..ChainConfig::default()
        };
        let out = run_chain(&data, &priors, ModelKind::Uncorrelated, &config).unwrap();
        assert_eq!(out.n_kept(), 5);
        assert_eq!(out.parameter_names.len(), 2 * 2 + 2);

        let again = run_chain(&data, &priors, ModelKind::Uncorrelated, &config).unwrap();
        assert_eq!(out.draws, again.draws, "same seed must be bit-identical");
        assert_eq!(out.log_post, again.log_post);

        let corr = run_chain(&data, &priors, ModelKind::Correlated, &config).unwrap();
        let corr_again = run_chain(&data, &priors, ModelKind::Correlated, &config).unwrap();
        assert_eq!(corr.draws, corr_again.draws);
        assert_eq!(corr.acceptance.len(), corr.layout.n_params());
    }

    #[test]
    fn chains_with_different_seeds_differ() {
        let data = toy_data(12, 12, 1, 1);
        let priors = PriorSpec::vague(1, 1);
        let config = ChainConfig {
            iterations: 60,
            burn_in: 20,
            thin: 2,
            seed: 7,
            n_chains: 2,
            ..ChainConfig::default()
        };
        let chains = run_chains(&data, &priors, ModelKind::Uncorrelated, &config).unwrap();
        assert_eq!(chains.len(), 2);
        assert_eq!(chains[0].seed_used, 7);
        assert_eq!(chains[1].seed_used, 8);
        assert_ne!(chains[0].draws, chains[1].draws);
    }

    #[test]
    fn every_kept_correlated_draw_is_positive_definite() {
        let data = toy_data(13, 25, 3, 2);
        let priors = PriorSpec::vague(2, 3);
        let config = ChainConfig {
            iterations: 400,
            burn_in: 100,
            thin: 3,
            seed: 99,
            n_chains: 1,
            ..ChainConfig::default()
        };
        let out = run_chain(&data, &priors, ModelKind::Correlated, &config).unwrap();
        for r in 0..out.n_kept() {
            assert!(out.state_at(r).in_support(), "kept draw {r} out of support");
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let config = ChainConfig {
            iterations: 10,
            burn_in: 10,
            ..ChainConfig::default()
        };
        assert!(config.validate().is_err());
        let config = ChainConfig {
            thin: 0,
            ..ChainConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn layout_round_trips_states() {
        let layout = ParamLayout::new(2, 3, ModelKind::Correlated);
        let state = ParameterState::new(
            DMatrix::from_fn(3, 3, |l, j| (l * 3 + j) as f64),
            DVector::from_column_slice(&[1.0, 2.0, 3.0]),
            DVector::from_column_slice(&[0.1, 0.2, 0.3]),
        );
        let row = layout.flatten(&state);
        assert_eq!(row.len(), layout.n_params());
        let back = layout.state_from_slice(&row);
        assert_eq!(back, state);
        assert_eq!(layout.names()[0], "beta_0_1");
        assert_eq!(layout.names()[9], "sigma2_1");
        assert_eq!(layout.names()[12], "rho_1_2");
    }
}
