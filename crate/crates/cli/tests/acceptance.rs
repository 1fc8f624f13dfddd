//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see the detail).
//!
//! Criterion 4 compares the fit of the bundled 128-match dataset against
//! recorded reference posterior summaries. The bundled data does not exactly
//! reproduce the reference fit for a handful of parameters (the per-parameter
//! report in the test output shows which); that test is expected to stay red
//! until a dataset revision reconciles them. Everything else must pass.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::LazyLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use compreg::criteria::compute_criteria;
use compreg::diagnostics::summarize_chains;
use compreg::model::{
    log_posterior_unnorm, loglik_correlated, loglik_uncorrelated, obs_logliks, residuals,
    rho_len, ModelKind, ParameterState, PriorSpec, RegressionDataset,
};
use compreg::sampler::{
    beta0_conditional, beta_slope_conditional, run_chains, sigma2_conditional, ChainConfig,
    ChainOutput,
};
use compreg::sim::{run_study, SimScenario, StudyResult};
use compreg::simplex::{alr_forward, alr_inverse, validate_and_normalize, Composition};

fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// The bundled volleyball dataset as ALR responses plus covariates.
static DATA: LazyLock<RegressionDataset> = LazyLock::new(|| {
    let mut reader = csv::Reader::from_path(workspace_file("data/volleyball.csv")).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let idx = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (ai, bi, si, ei) = (idx("attack"), idx("block"), idx("serve"), idx("errors"));
    let zi: Vec<usize> = (1..=4).map(|k| idx(&format!("z{k}"))).collect();

    let mut raw = Vec::new();
    let mut zrows = Vec::new();
    for record in reader.records() {
        let record = record.unwrap();
        let get = |i: usize| record[i].parse::<f64>().unwrap();
        raw.push(vec![get(ai), get(bi), get(si), get(ei)]);
        zrows.push(zi.iter().map(|&i| get(i)).collect::<Vec<f64>>());
    }
    assert_eq!(raw.len(), 128, "the bundled dataset must have 128 matches");
    let compositions = validate_and_normalize(&raw, None).unwrap();
    let z = DMatrix::from_fn(zrows.len(), 4, |i, j| zrows[i][j]);
    RegressionDataset::from_compositions(&compositions, z).unwrap()
});

static PRIORS: LazyLock<PriorSpec> = LazyLock::new(|| PriorSpec::vague(4, 3));

struct TimedFits {
    uncorrelated: Vec<ChainOutput>,
    correlated: Vec<ChainOutput>,
    elapsed: Duration,
}

/// Both models fitted to the real data with the reference chain settings
/// (100000 iterations, 10000 burn-in, thin 20) across 3 chains.
static REAL_FITS: LazyLock<TimedFits> = LazyLock::new(|| {
    let start = Instant::now();
    let config = ChainConfig {
        iterations: 100_000,
        burn_in: 10_000,
        thin: 20,
        seed: 20_121,
        n_chains: 3,
        ..ChainConfig::default()
    };
    let uncorrelated = run_chains(&DATA, &PRIORS, ModelKind::Uncorrelated, &config).unwrap();
    let correlated = run_chains(&DATA, &PRIORS, ModelKind::Correlated, &config).unwrap();
    TimedFits {
        uncorrelated,
        correlated,
        elapsed: start.elapsed(),
    }
});

struct TimedStudy {
    result: StudyResult,
    elapsed: Duration,
}

/// 100-replicate study at n=100 with generating correlations
/// (0.45, 0.37, 0.20) and desk-scale chains.
static STUDY: LazyLock<TimedStudy> = LazyLock::new(|| {
    let start = Instant::now();
    let scenario = SimScenario::reference(100, 100, true);
    let priors = PriorSpec::vague(2, 3);
    let config = ChainConfig {
        iterations: 6_000,
        burn_in: 1_000,
        thin: 5,
        seed: 90_210,
        n_chains: 1,
        ..ChainConfig::default()
    };
    let result = run_study(&scenario, &priors, &config).unwrap();
    TimedStudy {
        result,
        elapsed: start.elapsed(),
    }
});

#[test]
fn criterion_1_alr_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sizes = [2usize, 3, 4, 6];
    for trial in 0..10_000 {
        let g = sizes[trial % sizes.len()];
        let parts: Vec<f64> = (0..g).map(|_| 0.01 + rng.random::<f64>()).collect();
        let sum: f64 = parts.iter().sum();
        let c = Composition::new(parts.into_iter().map(|p| p / sum).collect()).unwrap();
        let back = alr_inverse(&alr_forward(&c).unwrap()).unwrap();
        for (a, b) in c.parts().iter().zip(back.parts()) {
            assert!(
                (a - b).abs() <= 1e-12,
                "round trip off by {} at trial {trial}",
                (a - b).abs()
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 1 (ALR round trip, 10^4 compositions): PASS in {elapsed:?}");
}

/// Trapezoid moments of exp(log_density); duplicated here so the acceptance
/// oracle stays independent of library code paths.
fn grid_moments(log_density: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let h = (hi - lo) / (points - 1) as f64;
    let values: Vec<(f64, f64)> = (0..points)
        .map(|k| {
            let x = lo + k as f64 * h;
            (x, log_density(x))
        })
        .collect();
    let max = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let weight = |k: usize, lp: f64| {
        let w = (lp - max).exp();
        if k == 0 || k == points - 1 {
            0.5 * w
        } else {
            w
        }
    };
    let norm: f64 = values.iter().enumerate().map(|(k, v)| weight(k, v.1)).sum();
    let mean: f64 = values
        .iter()
        .enumerate()
        .map(|(k, v)| weight(k, v.1) * v.0)
        .sum::<f64>()
        / norm;
    let var: f64 = values
        .iter()
        .enumerate()
        .map(|(k, v)| weight(k, v.1) * (v.0 - mean) * (v.0 - mean))
        .sum::<f64>()
        / norm;
    (mean, var)
}

fn random_small_instance(seed: u64) -> (RegressionDataset, ParameterState, PriorSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, g, p) = (5, 3, 2);
    let y = DMatrix::from_fn(n, g, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let z = DMatrix::from_fn(n, p, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let data = RegressionDataset::new(y, z).unwrap();
    let beta = DMatrix::from_fn(p + 1, g, |_, _| rng.random::<f64>() - 0.5);
    let sigma2 = DVector::from_fn(g, |_, _| 0.3 + rng.random::<f64>());
    let state = ParameterState::new(beta, sigma2, DVector::zeros(0));
    let mut priors = PriorSpec::vague(p, g);
    priors.a = DMatrix::from_fn(p + 1, g, |_, _| rng.random::<f64>() - 0.5);
    priors.b2 = DMatrix::from_fn(p + 1, g, |_, _| 0.5 + 2.0 * rng.random::<f64>());
    priors.c = DVector::from_fn(g, |_, _| 1.0 + rng.random::<f64>());
    priors.d = DVector::from_fn(g, |_, _| 0.5 + rng.random::<f64>());
    (data, state, priors)
}

#[test]
fn criterion_2_conditionals_match_grid_quadrature() {
    let start = Instant::now();
    for seed in [11, 22, 33] {
        let (data, state, priors) = random_small_instance(seed);
        for j in 0..3 {
            // Intercept conditional.
            let cond = beta0_conditional(j, &data, &state, &priors);
            let sd = cond.var.sqrt();
            let (mean, var) = grid_moments(
                |x| {
                    let mut s = state.clone();
                    s.beta[(0, j)] = x;
                    log_posterior_unnorm(&data, &s, &priors, ModelKind::Uncorrelated).unwrap()
                },
                cond.mean - 10.0 * sd,
                cond.mean + 10.0 * sd,
                4001,
            );
            assert!(
                ((mean - cond.mean) / sd.max(cond.mean.abs())).abs() < 1e-6,
                "beta0 mean seed {seed} j {j}: {mean} vs {}",
                cond.mean
            );
            assert!(
                (var / cond.var - 1.0).abs() < 1e-6,
                "beta0 var seed {seed} j {j}: {var} vs {}",
                cond.var
            );

            // Slope conditionals.
            for l in 1..=2 {
                let cond = beta_slope_conditional(l, j, &data, &state, &priors);
                let sd = cond.var.sqrt();
                let (mean, var) = grid_moments(
                    |x| {
                        let mut s = state.clone();
                        s.beta[(l, j)] = x;
                        log_posterior_unnorm(&data, &s, &priors, ModelKind::Uncorrelated).unwrap()
                    },
                    cond.mean - 10.0 * sd,
                    cond.mean + 10.0 * sd,
                    4001,
                );
                assert!(((mean - cond.mean) / sd.max(cond.mean.abs())).abs() < 1e-6);
                assert!((var / cond.var - 1.0).abs() < 1e-6);
            }

            // Variance conditional: shape and scale exactly.
            let cond = sigma2_conditional(j, &data, &state, &priors).unwrap();
            let eps = residuals(&data, &state).unwrap();
            let sse: f64 = (0..data.n()).map(|i| eps[(i, j)] * eps[(i, j)]).sum();
            assert_eq!(cond.shape, priors.c[j] + data.n() as f64 / 2.0);
            assert!((cond.scale - (priors.d[j] + sse / 2.0)).abs() < 1e-12);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("criterion 2 (Gibbs conditionals vs grid quadrature): PASS in {elapsed:?}");
}

fn mvn3_logpdf_cofactor(eps: &[f64; 3], cov: &DMatrix<f64>) -> f64 {
    let a = cov;
    let det = a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
        - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
        + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)]);
    let mut inv = DMatrix::zeros(3, 3);
    for r in 0..3 {
        for c in 0..3 {
            let mut minor = [0.0_f64; 4];
            let mut idx = 0;
            for rr in 0..3 {
                for cc in 0..3 {
                    if rr != r && cc != c {
                        minor[idx] = a[(rr, cc)];
                        idx += 1;
                    }
                }
            }
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            inv[(c, r)] = sign * (minor[0] * minor[3] - minor[1] * minor[2]) / det;
        }
    }
    let mut quad = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            quad += eps[r] * inv[(r, c)] * eps[c];
        }
    }
    -1.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad
}

#[test]
fn criterion_3_likelihood_degeneracy_and_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..100 {
        let (data, state, _) = random_small_instance(1000 + trial);
        let zero_rho = ParameterState::new(
            state.beta.clone(),
            state.sigma2.clone(),
            DVector::zeros(rho_len(3)),
        );
        let a = loglik_uncorrelated(&data, &state).unwrap();
        let b = loglik_correlated(&data, &zero_rho).unwrap();
        assert!((a - b).abs() < 1e-10, "trial {trial}: {a} vs {b}");
    }

    for trial in 0..30 {
        let (data, mut state, _) = random_small_instance(5000 + trial);
        loop {
            let rho = DVector::from_fn(3, |_, _| 0.8 * (rng.random::<f64>() - 0.5));
            state.rho = rho;
            if state.in_support() {
                break;
            }
        }
        let cov = state.covariance_matrix();
        let eps = residuals(&data, &state).unwrap();
        let expect: f64 = (0..data.n())
            .map(|i| mvn3_logpdf_cofactor(&[eps[(i, 0)], eps[(i, 1)], eps[(i, 2)]], &cov))
            .sum();
        let got = loglik_correlated(&data, &state).unwrap();
        assert!(
            (got - expect).abs() <= 1e-10 * expect.abs().max(1.0),
            "trial {trial}: {got} vs cofactor {expect}"
        );
    }
    println!("criterion 3 (likelihood degeneracy and 3x3 brute force): PASS");
}

/// Reference posterior summaries for the uncorrelated fit: (parameter, mean,
/// sd) in layout order; the acceptance band is half an SD around the mean.
const REFERENCE_UNCORRELATED: [(&str, f64, f64); 18] = [
    ("beta_0_1", 0.5570, 0.1918),
    ("beta_0_2", -1.9765, 0.3457),
    ("beta_0_3", -0.9372, 0.4806),
    ("beta_1_1", 0.1729, 0.0439),
    ("beta_1_2", 0.1434, 0.0787),
    ("beta_1_3", 0.1896, 0.1103),
    ("beta_2_1", -0.0719, 0.0418),
    ("beta_2_2", -0.1533, 0.0748),
    ("beta_2_3", -0.0269, 0.1034),
    ("beta_3_1", 0.4273, 0.1740),
    ("beta_3_2", 0.5267, 0.3124),
    ("beta_3_3", -0.2667, 0.4356),
    ("beta_4_1", -0.5559, 0.2818),
    ("beta_4_2", 1.2419, 0.5086),
    ("beta_4_3", -1.9218, 0.7063),
    ("sigma2_1", 0.0515, 0.0067),
    ("sigma2_2", 0.1634, 0.0213),
    ("sigma2_3", 0.3172, 0.0411),
];

const REFERENCE_CORRELATED_COEF: [(&str, f64, f64); 15] = [
    ("beta_0_1", 0.5402, 0.1340),
    ("beta_0_2", -1.9646, 0.2373),
    ("beta_0_3", -0.9369, 0.3362),
    ("beta_1_1", 0.1739, 0.0302),
    ("beta_1_2", 0.1422, 0.0539),
    ("beta_1_3", 0.1904, 0.0763),
    ("beta_2_1", -0.0710, 0.0288),
    ("beta_2_2", -0.1540, 0.0518),
    ("beta_2_3", -0.0266, 0.0721),
    ("beta_3_1", 0.4317, 0.1235),
    ("beta_3_2", 0.5156, 0.2156),
    ("beta_3_3", -0.2705, 0.3049),
    ("beta_4_1", -0.5284, 0.1945),
    ("beta_4_2", 1.2339, 0.3470),
    ("beta_4_3", -1.9212, 0.4873),
];

/// (parameter, mean, interval low, interval high): compared by sign and
/// 90%-interval overlap only.
const REFERENCE_CORRELATED_SCALE: [(&str, f64, f64, f64); 6] = [
    ("sigma2_1", 0.0242, 0.0209, 0.0280),
    ("sigma2_2", 0.0775, 0.0667, 0.0895),
    ("sigma2_3", 0.1524, 0.1310, 0.1763),
    ("rho_1_2", 0.1296, 0.0632, 0.1946),
    ("rho_1_3", 0.0793, 0.0137, 0.1443),
    ("rho_2_3", 0.0514, -0.0145, 0.1167),
];

#[test]
fn criterion_4_real_data_reproduction() {
    let fits = &*REAL_FITS;
    let summaries_u = summarize_chains(&fits.uncorrelated, 0.9).unwrap();
    let summaries_c = summarize_chains(&fits.correlated, 0.9).unwrap();
    let lookup = |summaries: &[(String, compreg::diagnostics::PosteriorSummary)],
                  name: &str|
     -> compreg::diagnostics::PosteriorSummary {
        summaries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| panic!("missing parameter {name}"))
    };

    let mut failures = Vec::new();
    for (name, ref_mean, ref_sd) in REFERENCE_UNCORRELATED {
        let ours = lookup(&summaries_u, name);
        let band = 0.5 * ref_sd;
        let ok = (ours.mean - ref_mean).abs() <= band;
        println!(
            "criterion 4 [uncorrelated {name}]: ours {:.4} vs reference {ref_mean} +- {band:.4} -> {}",
            ours.mean,
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failures.push(format!("uncorrelated/{name}"));
        }
    }
    for (name, ref_mean, ref_sd) in REFERENCE_CORRELATED_COEF {
        let ours = lookup(&summaries_c, name);
        let band = 0.5 * ref_sd;
        let ok = (ours.mean - ref_mean).abs() <= band;
        println!(
            "criterion 4 [correlated {name}]: ours {:.4} vs reference {ref_mean} +- {band:.4} -> {}",
            ours.mean,
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failures.push(format!("correlated/{name}"));
        }
    }
    for (name, ref_mean, ref_lo, ref_hi) in REFERENCE_CORRELATED_SCALE {
        let ours = lookup(&summaries_c, name);
        let sign_ok = ours.mean.signum() == ref_mean.signum();
        let overlap = ours.lower <= ref_hi && ref_lo <= ours.upper;
        let ok = sign_ok && overlap;
        println!(
            "criterion 4 [correlated {name}]: ours {:.4} ({:.4}; {:.4}) vs reference {ref_mean} ({ref_lo}; {ref_hi}) sign+overlap -> {}",
            ours.mean,
            ours.lower,
            ours.upper,
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failures.push(format!("correlated/{name} (sign/overlap)"));
        }
    }

    assert!(
        fits.elapsed < Duration::from_secs(300),
        "both fits took {:?}, target < 5 min",
        fits.elapsed
    );
    println!(
        "criterion 4 (real-data reproduction): {} in {:?}",
        if failures.is_empty() { "PASS" } else { "FAIL" },
        fits.elapsed
    );
    assert!(
        failures.is_empty(),
        "{} of 39 reference comparisons outside tolerance: {}. Known dataset/reference \
         inconsistency: the bundled match table does not exactly reproduce the recorded \
         reference fit for these parameters (the serve column and all remaining parameters \
         agree); see the per-parameter report above.",
        failures.len(),
        failures.join(", ")
    );
}

#[test]
fn criterion_5_convergence_on_real_data() {
    let fits = &*REAL_FITS;
    for (label, chains) in [
        ("uncorrelated", &fits.uncorrelated),
        ("correlated", &fits.correlated),
    ] {
        let summaries = summarize_chains(chains, 0.9).unwrap();
        for (name, summary) in &summaries {
            let psrf = summary.psrf.expect("three chains give a PSRF");
            assert!(
                psrf.is_finite() && psrf < 1.05,
                "{label}/{name}: PSRF {psrf}"
            );
        }
    }
    println!("criterion 5 (PSRF < 1.05 on real data, 3 chains, both models): PASS");
}

#[test]
fn criterion_6_simulation_coverage_and_sigma_recovery() {
    let study = &*STUDY;
    let result = &study.result;
    assert_eq!(result.completed, 100, "replicates failed: {:?}", result.failed);

    let row = |name: &str| {
        result
            .rows
            .iter()
            .find(|r| r.model == ModelKind::Uncorrelated && r.parameter == name)
            .unwrap_or_else(|| panic!("missing study row {name}"))
    };
    for (name, target) in [
        ("beta_0_1", 0.884),
        ("beta_0_2", 0.893),
        ("beta_0_3", 0.890),
    ] {
        let got = row(name).coverage;
        println!("criterion 6 [{name}]: coverage {got:.3} vs {target} +- 0.07");
        assert!(
            (got - target).abs() <= 0.07,
            "{name}: coverage {got} vs {target} +- 0.07"
        );
    }
    for (name, target) in [
        ("sigma2_1", 0.0610),
        ("sigma2_2", 0.2031),
        ("sigma2_3", 0.3068),
    ] {
        let got = row(name).mean_of_posterior_means;
        println!("criterion 6 [{name}]: mean of posterior means {got:.4} vs {target} +- 0.01");
        assert!(
            (got - target).abs() <= 0.01,
            "{name}: {got} vs {target} +- 0.01"
        );
    }
    assert!(
        study.elapsed < Duration::from_secs(1800),
        "study took {:?}, target < 30 min",
        study.elapsed
    );
    println!(
        "criterion 6 (coverage and sigma recovery at n=100): PASS in {:?}",
        study.elapsed
    );
}

#[test]
fn criterion_7_criteria_against_bruteforce_and_dic_direction() {
    // Brute-force recomputation over the raw draws of the pooled real fit.
    let fits = &*REAL_FITS;
    let pooled = ChainOutput::pooled(&fits.uncorrelated).unwrap();
    let report = compute_criteria(&DATA, &pooled).unwrap();

    let m = pooled.n_kept();
    let n = DATA.n();
    let kind = pooled.layout.kind;
    let mut dev_sum = 0.0;
    let mut obs_matrix = vec![vec![0.0_f64; m]; n];
    for r in 0..m {
        let state = pooled.state_at(r);
        let per_obs = obs_logliks(&DATA, &state, kind).unwrap();
        dev_sum += -2.0 * per_obs.sum();
        for i in 0..n {
            obs_matrix[i][r] = per_obs[i];
        }
    }
    let mean_dev = dev_sum / m as f64;
    let q = pooled.layout.n_params() as f64;
    assert!((report.mean_deviance - mean_dev).abs() < 1e-8);
    assert!((report.eaic - (mean_dev + 2.0 * q)).abs() < 1e-8);
    assert!((report.ebic - (mean_dev + q * (n as f64).ln())).abs() < 1e-8);

    let col_means: Vec<f64> = (0..pooled.layout.n_params())
        .map(|c| pooled.draws.column(c).iter().sum::<f64>() / m as f64)
        .collect();
    let mean_state = pooled.layout.state_from_slice(&col_means);
    let dev_at_mean = -2.0 * loglik_uncorrelated(&DATA, &mean_state).unwrap();
    assert!((report.dic - (2.0 * mean_dev - dev_at_mean)).abs() < 1e-8);

    let mut lpml = 0.0;
    for row in &obs_matrix {
        let max = row.iter().map(|ll| -ll).fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|ll| (-ll - max).exp()).sum::<f64>().ln();
        lpml += (m as f64).ln() - lse;
    }
    assert!(
        (report.lpml - lpml).abs() < 1e-8,
        "LPML {} vs brute force {lpml}",
        report.lpml
    );

    // Preference direction on data generated with nonzero correlations.
    let result = &STUDY.result;
    let wins = result
        .per_replicate
        .iter()
        .filter(|c| c.correlated_dic < c.uncorrelated_dic)
        .count();
    println!("criterion 7: correlated model wins DIC in {wins}/100 replicates");
    assert!(wins >= 90, "correlated DIC preferred in only {wins}/100");
    println!("criterion 7 (criteria vs brute force; DIC direction): PASS");
}

fn run_cli(args: &[&str]) {
    let output = Command::new(env!("CARGO_BIN_EXE_compreg"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "compreg {args:?}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn snapshot_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|entry| {
            let entry = entry.unwrap();
            (
                entry.file_name().to_string_lossy().into_owned(),
                fs::read(entry.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_8_byte_identical_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let data = workspace_file("data/volleyball.csv");
    let data = data.to_str().unwrap();
    let scenario_path = tmp.path().join("scenario.json");
    fs::write(
        &scenario_path,
        serde_json::to_string(&SimScenario::reference(70, 2, true)).unwrap(),
    )
    .unwrap();
    let sweep_path = tmp.path().join("sweep.json");
    fs::write(&sweep_path, r#"[{"hyperparameter": "b2", "value": 100.0}]"#).unwrap();

    let round = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let dir = tmp.path().join(tag);
        fs::create_dir_all(&dir).unwrap();
        let fit_dir = dir.join("fit");
        run_cli(&[
            "fit",
            "--data",
            data,
            "--components",
            "attack,block,serve,errors",
            "--covariates",
            "z1,z2,z3,z4",
            "--iterations",
            "400",
            "--burn-in",
            "100",
            "--thin",
            "5",
            "--chains",
            "2",
            "--seed",
            "77",
            "--psrf-threshold",
            "1e9",
            "--out-dir",
            fit_dir.to_str().unwrap(),
        ]);
        let transform_out = dir.join("alr.csv");
        run_cli(&[
            "transform",
            "--data",
            data,
            "--components",
            "attack,block,serve,errors",
            "--out",
            transform_out.to_str().unwrap(),
        ]);
        let study_dir = dir.join("study");
        run_cli(&[
            "simulate",
            "--scenario",
            scenario_path.to_str().unwrap(),
            "--iterations",
            "400",
            "--burn-in",
            "100",
            "--thin",
            "5",
            "--seed",
            "13",
            "--out-dir",
            study_dir.to_str().unwrap(),
        ]);
        let sens_dir = dir.join("sens");
        run_cli(&[
            "sensitivity",
            "--data",
            data,
            "--components",
            "attack,block,serve,errors",
            "--covariates",
            "z1,z2,z3,z4",
            "--iterations",
            "300",
            "--burn-in",
            "100",
            "--thin",
            "4",
            "--chains",
            "1",
            "--seed",
            "5",
            "--sweep",
            sweep_path.to_str().unwrap(),
            "--out-dir",
            sens_dir.to_str().unwrap(),
        ]);

        let mut all = Vec::new();
        for (sub, path) in [
            ("fit", fit_dir),
            ("study", study_dir),
            ("sens", sens_dir),
        ] {
            for (name, bytes) in snapshot_dir(&path) {
                all.push((format!("{sub}/{name}"), bytes));
            }
        }
        all.push(("alr.csv".into(), fs::read(&transform_out).unwrap()));
        all
    };

    let first = round("a");
    let second = round("b");
    assert_eq!(first.len(), second.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(name_a, name_b);
        assert_eq!(
            bytes_a, bytes_b,
            "output file {name_a} differs between identical runs"
        );
    }
    println!(
        "criterion 8 (byte-identical reruns across {} output files): PASS",
        first.len()
    );
}
