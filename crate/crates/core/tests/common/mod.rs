//! Shared helpers for integration tests: random small problem instances and
//! a trapezoid-quadrature oracle for conditional moments.

use compreg::model::{ParameterState, PriorSpec, RegressionDataset};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random dataset/state/priors of the shape used by the conditional checks.
pub fn random_instance(
    seed: u64,
    n: usize,
    g: usize,
    p: usize,
) -> (RegressionDataset, ParameterState, PriorSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = DMatrix::from_fn(n, g, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let z = DMatrix::from_fn(n, p, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let data = RegressionDataset::new(y, z).unwrap();

    let beta = DMatrix::from_fn(p + 1, g, |_, _| rng.random::<f64>() - 0.5);
    let sigma2 = DVector::from_fn(g, |_, _| 0.3 + rng.random::<f64>());
    let state = ParameterState::new(beta, sigma2, DVector::zeros(0));

    let mut priors = PriorSpec::vague(p, g);
    // Informative enough that the prior visibly shapes the conditionals.
    priors.a = DMatrix::from_fn(p + 1, g, |_, _| rng.random::<f64>() - 0.5);
    priors.b2 = DMatrix::from_fn(p + 1, g, |_, _| 0.5 + 2.0 * rng.random::<f64>());
    priors.c = DVector::from_fn(g, |_, _| 1.5 + rng.random::<f64>());
    priors.d = DVector::from_fn(g, |_, _| 0.5 + rng.random::<f64>());
    (data, state, priors)
}

/// Mean and variance of the density exp(log_density) over [lo, hi] by the
/// trapezoid rule with a max shift; for smooth, rapidly decaying integrands
/// this is accurate far beyond the 1e-6 tolerance it is used to certify.
pub fn grid_moments(log_density: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    assert!(points >= 3);
    let h = (hi - lo) / (points - 1) as f64;
    let values: Vec<(f64, f64)> = (0..points)
        .map(|k| {
            let x = lo + k as f64 * h;
            (x, log_density(x))
        })
        .collect();
    let max = values
        .iter()
        .map(|&(_, lp)| lp)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut norm = 0.0;
    let mut first = 0.0;
    for (k, &(x, lp)) in values.iter().enumerate() {
        let mut w = (lp - max).exp();
        if k == 0 || k == points - 1 {
            w *= 0.5;
        }
        norm += w;
        first += w * x;
    }
    let mean = first / norm;
    let mut second = 0.0;
    for (k, &(x, lp)) in values.iter().enumerate() {
        let mut w = (lp - max).exp();
        if k == 0 || k == points - 1 {
            w *= 0.5;
        }
        second += w * (x - mean) * (x - mean);
    }
    (mean, second / norm)
}
