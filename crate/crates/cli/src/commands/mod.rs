pub mod fit;
pub mod sensitivity;
pub mod simulate;
pub mod transform;

use clap::Args;

use compreg::model::{ModelKind, PriorSpec};
use compreg::sampler::ChainConfig;

/// Which error structure(s) to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelChoice {
    Uncorrelated,
    Correlated,
    Both,
}

impl ModelChoice {
    pub fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelChoice::Uncorrelated => vec![ModelKind::Uncorrelated],
            ModelChoice::Correlated => vec![ModelKind::Correlated],
            ModelChoice::Both => vec![ModelKind::Uncorrelated, ModelKind::Correlated],
        }
    }
}

/// MCMC settings shared by the fitting commands.
#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Total iterations per chain
    #[arg(long, default_value_t = 100_000)]
    pub iterations: usize,
    /// Iterations discarded as burn-in
    #[arg(long = "burn-in", default_value_t = 10_000)]
    pub burn_in: usize,
    /// Keep every thin-th post-burn-in draw
    #[arg(long, default_value_t = 20)]
    pub thin: usize,
    /// Number of chains (2 or more enables the Gelman-Rubin check)
    #[arg(long, default_value_t = 2)]
    pub chains: usize,
    /// Master seed; all randomness derives from it
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

impl ChainArgs {
    pub fn to_config(&self) -> ChainConfig {
        ChainConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed,
            n_chains: self.chains,
            ..ChainConfig::default()
        }
    }
}

/// Global prior hyperparameter overrides.
#[derive(Debug, Clone, Args)]
pub struct PriorArgs {
    /// Normal prior mean for every coefficient
    #[arg(long = "prior-a", default_value_t = 0.0)]
    pub a: f64,
    /// Normal prior variance for every coefficient
    #[arg(long = "prior-b2", default_value_t = 1000.0)]
    pub b2: f64,
    /// Inverse-Gamma prior shape for every variance
    #[arg(long = "prior-c", default_value_t = 0.1)]
    pub c: f64,
    /// Inverse-Gamma prior scale for every variance
    #[arg(long = "prior-d", default_value_t = 0.01)]
    pub d: f64,
}

impl PriorArgs {
    pub fn to_spec(&self, p: usize, g: usize) -> PriorSpec {
        let mut priors = PriorSpec::vague(p, g);
        priors.a.fill(self.a);
        priors.b2.fill(self.b2);
        priors.c.fill(self.c);
        priors.d.fill(self.d);
        priors
    }
}

/// Fixed text recorded in metadata so emitted numbers are interpretable.
pub const CRITERION_DEFINITIONS: &[(&str, &str)] = &[
    ("deviance", "D(theta) = -2 log-likelihood, 2*pi constants included"),
    ("dic", "DIC = mean_deviance + p_d with p_d = mean_deviance - deviance_at_mean"),
    ("eaic", "EAIC = mean_deviance + 2q, q = free parameter count"),
    ("ebic", "EBIC = mean_deviance + q log n"),
    (
        "cpo",
        "CPO_i = harmonic mean over kept draws of the observation-level likelihood, \
         accumulated in log space; LPML = sum_i log CPO_i",
    ),
];
