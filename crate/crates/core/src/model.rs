//! Regression model specification and exact log-density evaluation.
//!
//! The transformed responses follow `y_ij = β_0j + Σ_l β_lj z_il + ε_ij`,
//! with the error rows `ε_i` either independent Normal per column
//! ([`ModelKind::Uncorrelated`]) or jointly g-variate Normal with covariance
//! `Σ = diag(σ)·Ρ·diag(σ)` built from per-column variances and pairwise
//! correlations ([`ModelKind::Correlated`]). Coefficients carry independent
//! Normal priors, variances Inverse-Gamma priors, and correlations Uniform
//! (−1,1) priors restricted to the jointly positive-definite region.
//!
//! All normalizing constants (the 2π terms) are kept, so deviance-based
//! criteria computed from these densities are absolute rather than relative.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::simplex::{alr_forward, CompositionDataset, SimplexError};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("variance {index} is not strictly positive ({value})")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("{what} contains a non-finite entry")]
    NonFinite { what: &'static str },
    #[error("need n > p+1 observations for identifiability, got n={n}, p={p}")]
    TooFewObservations { n: usize, p: usize },
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Which error structure the likelihood assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Uncorrelated,
    Correlated,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Uncorrelated => "uncorrelated",
            ModelKind::Correlated => "correlated",
        }
    }
}

/// Number of free correlations for g response columns.
pub fn rho_len(g: usize) -> usize {
    g * (g - 1) / 2
}

/// Index of ρ_{jk} (0-based j < k) in the flattened correlation vector.
///
/// Pairs are ordered lexicographically: for g=3 that is (ρ_12, ρ_13, ρ_23).
pub fn rho_index(j: usize, k: usize, g: usize) -> usize {
    debug_assert!(j < k && k < g);
    j * g - j * (j + 1) / 2 + (k - j - 1)
}

/// All (j, k) correlation pairs in flattened order.
pub fn rho_pairs(g: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(rho_len(g));
    for j in 0..g {
        for k in (j + 1)..g {
            pairs.push((j, k));
        }
    }
    pairs
}

/// ALR-transformed responses (n×g) with a covariate matrix (n×p).
#[derive(Debug, Clone)]
pub struct RegressionDataset {
    y: DMatrix<f64>,
    z: DMatrix<f64>,
}

impl RegressionDataset {
    pub fn new(y: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self, ModelError> {
        if y.nrows() != z.nrows() {
            return Err(ModelError::DimensionMismatch(format!(
                "y has {} rows but z has {}",
                y.nrows(),
                z.nrows()
            )));
        }
        if y.ncols() == 0 {
            return Err(ModelError::DimensionMismatch("y has no columns".into()));
        }
        if y.nrows() <= z.ncols() + 1 {
            return Err(ModelError::TooFewObservations {
                n: y.nrows(),
                p: z.ncols(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { what: "y" });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { what: "z" });
        }
        Ok(Self { y, z })
    }

    /// A dataset with zero observations, usable for prior-only sampling.
    pub fn prior_only(g: usize, p: usize) -> Self {
        Self {
            y: DMatrix::zeros(0, g),
            z: DMatrix::zeros(0, p),
        }
    }

    /// Skip the identifiability check; used by crate-internal tests that pin
    /// density values on degenerate shapes.
    #[doc(hidden)]
    pub fn new_unchecked(y: DMatrix<f64>, z: DMatrix<f64>) -> Self {
        assert_eq!(y.nrows(), z.nrows());
        Self { y, z }
    }

    /// Build from a composition dataset (responses) and covariates, applying
    /// the ALR transform with the last part as the reference.
    pub fn from_compositions(
        compositions: &CompositionDataset,
        z: DMatrix<f64>,
    ) -> Result<Self, ModelError> {
        let n = compositions.num_rows();
        let g = compositions.num_parts() - 1;
        let mut y = DMatrix::zeros(n, g);
        for (i, row) in compositions.rows().iter().enumerate() {
            let coords = alr_forward(row)?;
            for (j, v) in coords.into_iter().enumerate() {
                y[(i, j)] = v;
            }
        }
        Self::new(y, z)
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    /// Number of transformed response columns, g = G−1.
    pub fn g(&self) -> usize {
        self.y.ncols()
    }

    /// Number of covariates (excluding the intercept).
    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }
}

/// One point in parameter space.
///
/// `beta` is (p+1)×g with row 0 the intercepts and row l the slopes of
/// covariate l; `sigma2` holds the g error variances; `rho` holds the
/// g(g−1)/2 pairwise correlations in [`rho_pairs`] order and is empty for the
/// uncorrelated model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState {
    pub beta: DMatrix<f64>,
    pub sigma2: DVector<f64>,
    pub rho: DVector<f64>,
}

impl ParameterState {
    pub fn new(beta: DMatrix<f64>, sigma2: DVector<f64>, rho: DVector<f64>) -> Self {
        Self { beta, sigma2, rho }
    }

    pub fn g(&self) -> usize {
        self.sigma2.len()
    }

    /// The correlation matrix Ρ implied by `rho` (identity when empty).
    pub fn correlation_matrix(&self) -> DMatrix<f64> {
        let g = self.g();
        let mut corr = DMatrix::identity(g, g);
        if !self.rho.is_empty() {
            for (idx, (j, k)) in rho_pairs(g).into_iter().enumerate() {
                corr[(j, k)] = self.rho[idx];
                corr[(k, j)] = self.rho[idx];
            }
        }
        corr
    }

    /// Σ = diag(σ)·Ρ·diag(σ).
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let g = self.g();
        let sd: Vec<f64> = self.sigma2.iter().map(|v| v.sqrt()).collect();
        let mut cov = self.correlation_matrix();
        for j in 0..g {
            for k in 0..g {
                cov[(j, k)] *= sd[j] * sd[k];
            }
        }
        cov
    }

    /// Whether variances are positive and the correlation matrix is strictly
    /// inside the positive-definite region.
    pub fn in_support(&self) -> bool {
        if self
            .sigma2
            .iter()
            .any(|&v| !(v > 0.0) || !v.is_finite())
        {
            return false;
        }
        if self.beta.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if self.rho.is_empty() {
            return true;
        }
        if self.rho.iter().any(|&r| !(r.abs() < 1.0) || !r.is_finite()) {
            return false;
        }
        Cholesky::new(self.correlation_matrix()).is_some()
    }
}

/// Normal hyperparameters for every coefficient and Inverse-Gamma
/// hyperparameters for every variance.
///
/// The Inverse-Gamma(c, d) density is ∝ (σ²)^{−(c+1)} exp(−d/σ²), i.e. mean
/// d/(c−1) for c > 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    /// Normal means, (p+1)×g.
    pub a: DMatrix<f64>,
    /// Normal variances, (p+1)×g.
    pub b2: DMatrix<f64>,
    /// Inverse-Gamma shapes, length g.
    pub c: DVector<f64>,
    /// Inverse-Gamma scales, length g.
    pub d: DVector<f64>,
}

impl PriorSpec {
    /// The diffuse defaults used throughout: N(0, 1000) on every coefficient
    /// and IG(0.1, 0.01) on every variance.
    pub fn vague(p: usize, g: usize) -> Self {
        Self {
            a: DMatrix::zeros(p + 1, g),
            b2: DMatrix::from_element(p + 1, g, 1000.0),
            c: DVector::from_element(g, 0.1),
            d: DVector::from_element(g, 0.01),
        }
    }

    pub fn validate(&self, p: usize, g: usize) -> Result<(), ModelError> {
        if self.a.shape() != (p + 1, g) || self.b2.shape() != (p + 1, g) {
            return Err(ModelError::DimensionMismatch(format!(
                "prior coefficient hyperparameters must be {}×{}",
                p + 1,
                g
            )));
        }
        if self.c.len() != g || self.d.len() != g {
            return Err(ModelError::DimensionMismatch(format!(
                "prior variance hyperparameters must have length {g}"
            )));
        }
        for (i, &v) in self.b2.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::NonPositiveVariance { index: i, value: v });
            }
        }
        for (i, (&c, &d)) in self.c.iter().zip(self.d.iter()).enumerate() {
            if !(c > 0.0) || !(d > 0.0) || !c.is_finite() || !d.is_finite() {
                return Err(ModelError::NonPositiveVariance {
                    index: i,
                    value: if c > 0.0 { d } else { c },
                });
            }
        }
        Ok(())
    }
}

fn check_dims(data: &RegressionDataset, state: &ParameterState) -> Result<(), ModelError> {
    if state.beta.nrows() != data.p() + 1 || state.beta.ncols() != data.g() {
        return Err(ModelError::DimensionMismatch(format!(
            "beta is {}×{} but data needs {}×{}",
            state.beta.nrows(),
            state.beta.ncols(),
            data.p() + 1,
            data.g()
        )));
    }
    if state.sigma2.len() != data.g() {
        return Err(ModelError::DimensionMismatch(format!(
            "sigma2 has length {} but data has g={}",
            state.sigma2.len(),
            data.g()
        )));
    }
    if !state.rho.is_empty() && state.rho.len() != rho_len(data.g()) {
        return Err(ModelError::DimensionMismatch(format!(
            "rho has length {} but g={} needs {}",
            state.rho.len(),
            data.g(),
            rho_len(data.g())
        )));
    }
    Ok(())
}

/// Residual matrix ε_ij = y_ij − β_0j − Σ_l β_lj z_il.
pub fn residuals(
    data: &RegressionDataset,
    state: &ParameterState,
) -> Result<DMatrix<f64>, ModelError> {
    check_dims(data, state)?;
    let (n, g, p) = (data.n(), data.g(), data.p());
    let mut eps = data.y().clone();
    for i in 0..n {
        for j in 0..g {
            let mut pred = state.beta[(0, j)];
            for l in 0..p {
                pred += state.beta[(l + 1, j)] * data.z()[(i, l)];
            }
            eps[(i, j)] -= pred;
        }
    }
    Ok(eps)
}

/// Log-likelihood under independent per-column Normal errors, including the
/// 2π constants.
pub fn loglik_uncorrelated(
    data: &RegressionDataset,
    state: &ParameterState,
) -> Result<f64, ModelError> {
    for (j, &v) in state.sigma2.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(ModelError::NonPositiveVariance { index: j, value: v });
        }
    }
    let eps = residuals(data, state)?;
    let n = data.n() as f64;
    let mut ll = 0.0;
    for j in 0..data.g() {
        let s2 = state.sigma2[j];
        let sse: f64 = eps.column(j).iter().map(|e| e * e).sum();
        ll += -0.5 * n * (LN_2PI + s2.ln()) - sse / (2.0 * s2);
    }
    Ok(ll)
}

/// Log-likelihood under jointly Normal error rows with covariance
/// Σ = diag(σ)·Ρ·diag(σ), evaluated through the Cholesky factor of Σ.
pub fn loglik_correlated(
    data: &RegressionDataset,
    state: &ParameterState,
) -> Result<f64, ModelError> {
    for (j, &v) in state.sigma2.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(ModelError::NonPositiveVariance { index: j, value: v });
        }
    }
    let eps = residuals(data, state)?;
    let g = data.g();
    let chol = Cholesky::new(state.covariance_matrix()).ok_or(ModelError::NotPositiveDefinite)?;
    let l = chol.l();
    let log_det: f64 = (0..g).map(|j| l[(j, j)].ln()).sum::<f64>() * 2.0;

    let n = data.n();
    let mut quad = 0.0;
    let mut buf = vec![0.0_f64; g];
    for i in 0..n {
        // Forward-solve L x = ε_i and accumulate ‖x‖².
        for j in 0..g {
            let mut v = eps[(i, j)];
            for k in 0..j {
                v -= l[(j, k)] * buf[k];
            }
            buf[j] = v / l[(j, j)];
            quad += buf[j] * buf[j];
        }
    }
    Ok(-0.5 * (n as f64) * (g as f64 * LN_2PI + log_det) - 0.5 * quad)
}

pub fn loglik(
    data: &RegressionDataset,
    state: &ParameterState,
    kind: ModelKind,
) -> Result<f64, ModelError> {
    match kind {
        ModelKind::Uncorrelated => loglik_uncorrelated(data, state),
        ModelKind::Correlated => loglik_correlated(data, state),
    }
}

/// Per-observation log-likelihood contributions (length n).
pub fn obs_logliks(
    data: &RegressionDataset,
    state: &ParameterState,
    kind: ModelKind,
) -> Result<DVector<f64>, ModelError> {
    for (j, &v) in state.sigma2.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(ModelError::NonPositiveVariance { index: j, value: v });
        }
    }
    let eps = residuals(data, state)?;
    let (n, g) = (data.n(), data.g());
    let mut out = DVector::zeros(n);
    match kind {
        ModelKind::Uncorrelated => {
            let consts: Vec<f64> = state
                .sigma2
                .iter()
                .map(|&s2| -0.5 * (LN_2PI + s2.ln()))
                .collect();
            for i in 0..n {
                let mut ll = 0.0;
                for j in 0..g {
                    let e = eps[(i, j)];
                    ll += consts[j] - e * e / (2.0 * state.sigma2[j]);
                }
                out[i] = ll;
            }
        }
        ModelKind::Correlated => {
            let chol =
                Cholesky::new(state.covariance_matrix()).ok_or(ModelError::NotPositiveDefinite)?;
            let l = chol.l();
            let log_det: f64 = (0..g).map(|j| l[(j, j)].ln()).sum::<f64>() * 2.0;
            let constant = -0.5 * (g as f64 * LN_2PI + log_det);
            let mut buf = vec![0.0_f64; g];
            for i in 0..n {
                let mut quad = 0.0;
                for j in 0..g {
                    let mut v = eps[(i, j)];
                    for k in 0..j {
                        v -= l[(j, k)] * buf[k];
                    }
                    buf[j] = v / l[(j, j)];
                    quad += buf[j] * buf[j];
                }
                out[i] = constant - 0.5 * quad;
            }
        }
    }
    Ok(out)
}

/// Joint log prior density; −∞ outside the support.
///
/// Coefficients are Normal(a, b²), variances Inverse-Gamma(c, d), and each
/// correlation Uniform(−1, 1) subject to the joint positive-definiteness of
/// the correlation matrix.
pub fn logprior(state: &ParameterState, priors: &PriorSpec) -> f64 {
    let mut lp = 0.0;
    for (idx, (&b, &a)) in state.beta.iter().zip(priors.a.iter()).enumerate() {
        let b2 = priors.b2[idx];
        let dev = b - a;
        lp += -0.5 * (LN_2PI + b2.ln()) - dev * dev / (2.0 * b2);
    }
    for (j, &s2) in state.sigma2.iter().enumerate() {
        if !(s2 > 0.0) || !s2.is_finite() {
            return f64::NEG_INFINITY;
        }
        let (c, d) = (priors.c[j], priors.d[j]);
        lp += c * d.ln() - ln_gamma(c) - (c + 1.0) * s2.ln() - d / s2;
    }
    if !state.rho.is_empty() {
        if state.rho.iter().any(|&r| !(r.abs() < 1.0) || !r.is_finite()) {
            return f64::NEG_INFINITY;
        }
        if Cholesky::new(state.correlation_matrix()).is_none() {
            return f64::NEG_INFINITY;
        }
        lp += state.rho.len() as f64 * 0.5_f64.ln();
    }
    lp
}

/// Unnormalized log posterior: log-likelihood plus log prior, with −∞
/// propagating from outside-support states.
pub fn log_posterior_unnorm(
    data: &RegressionDataset,
    state: &ParameterState,
    priors: &PriorSpec,
    kind: ModelKind,
) -> Result<f64, ModelError> {
    check_dims(data, state)?;
    priors.validate(data.p(), data.g())?;
    let prior = logprior(state, priors);
    if prior == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(loglik(data, state, kind)? + prior)
}
