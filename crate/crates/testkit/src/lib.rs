//! Reference implementations and synthetic data used by the test suites.
//!
//! The oracles here deliberately avoid the production code paths: Gibbs
//! weights come from a plain double loop over decoded spins, and the
//! response function is computed directly from an explicitly rescaled
//! probability vector.

use std::fmt;
use std::str::FromStr;

use critscan::ingest::BinaryMatrix;
use critscan::ising::{ising_model, LatticeSpec};
use critscan::maxent::{glauber_simulate, sk_model, PairwiseModel};
use critscan::{ConfigDistribution, CritError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub const DETERMINISTIC_TOL: f64 = 1e-10;

/// Largest system the brute-force oracles accept.
pub const ORACLE_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Paper,
    Trivial,
    Derived { oracle: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub description: String,
    pub inputs: String,
    pub expected: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
}

impl OracleCase {
    pub fn derived(description: &str, inputs: &str, expected: f64, tolerance: f64, oracle: &str) -> Self {
        OracleCase {
            description: description.into(),
            inputs: inputs.into(),
            expected,
            tolerance,
            provenance: Provenance::Derived { oracle: oracle.into() },
        }
    }

    pub fn check(&self, actual: f64) -> std::result::Result<(), String> {
        if (actual - self.expected).abs() <= self.tolerance {
            Ok(())
        } else {
            Err(format!(
                "{}: expected {} ± {}, got {actual} ({:?})",
                self.description, self.expected, self.tolerance, self.provenance
            ))
        }
    }
}

fn spin(code: u64, i: usize) -> f64 {
    if code >> i & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Gibbs distribution by a naive loop over all `2^n` configurations.
pub fn brute_force_gibbs(model: &PairwiseModel, t: f64) -> ConfigDistribution {
    let n = model.n();
    assert!(n <= ORACLE_MAX_N, "oracle limited to n <= {ORACLE_MAX_N}");
    let j = model.couplings();
    let h = model.fields();
    let mut u = Vec::with_capacity(1 << n);
    for code in 0..1u64 << n {
        let mut total = 0.0;
        for a in 0..n {
            for b in 0..n {
                total += 0.5 * j[a * n + b] * spin(code, a) * spin(code, b);
            }
            total += h[a] * spin(code, a);
        }
        u.push(total / t);
    }
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = u.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = w.iter().sum();
    ConfigDistribution::new(n, w.iter().enumerate().map(|(c, v)| (c as u64, v / z))).expect("normalized")
}

/// `T^-2 Var_{P_T}(ln P)` with `P_T` built explicitly from powers of `P`.
pub fn brute_force_response(dist: &ConfigDistribution, t: f64) -> f64 {
    let p = dist.probs();
    assert!(p.len() <= 1 << ORACLE_MAX_N);
    let w: Vec<f64> = p.iter().map(|v| v.powf(1.0 / t)).collect();
    let z: f64 = w.iter().sum();
    let mut mean = 0.0;
    let mut second = 0.0;
    for (wi, pi) in w.iter().zip(p) {
        let q = wi / z;
        mean += q * pi.ln();
        second += q * pi.ln() * pi.ln();
    }
    (second - mean * mean) / (t * t)
}

/// Empirical frequency of every code in `0..2^n`.
pub fn code_frequencies(data: &BinaryMatrix) -> Vec<f64> {
    let n = data.cols();
    let mut counts = vec![0.0; 1 << n];
    for row in data.iter_rows() {
        let mut code = 0usize;
        for (i, &s) in row.iter().enumerate() {
            if s == 1 {
                code |= 1 << i;
            }
        }
        counts[code] += 1.0;
    }
    let m = data.rows() as f64;
    counts.iter().map(|c| c / m).collect()
}

/// Total variation between a dense frequency vector and a distribution.
pub fn total_variation(freq: &[f64], dist: &ConfigDistribution) -> f64 {
    0.5 * freq
        .iter()
        .enumerate()
        .map(|(c, f)| (f - dist.prob(c as u64)).abs())
        .sum::<f64>()
}

/// Pearson chi-square goodness-of-fit p-value; cells with expectation below 5 are pooled.
pub fn chi_square_pvalue(observed: &[u64], expected_probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = p * total as f64;
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Asymptotic Kolmogorov p-value for `U(0, 1)` samples.
pub fn ks_uniform_pvalue(samples: &[f64]) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i as f64 + 1.0) / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..200 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

/// Two-sided normal p-value of a z-score.
pub fn z_pvalue(z: f64) -> f64 {
    2.0 * (1.0 - Normal::standard().cdf(z.abs()))
}

/// Pairwise model with Gaussian couplings `N(mean, std^2)` and fields `N(0, field_std^2)`.
pub fn random_model(n: usize, mean: f64, std: f64, field_std: f64, seed: u64) -> PairwiseModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = mean + std * gauss();
            j[a * n + b] = v;
            j[b * n + a] = v;
        }
    }
    let h = (0..n).map(|_| field_std * gauss()).collect();
    PairwiseModel::new(n, j, h).expect("valid model")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    IndependentCoins,
    OrderedPair,
    MaxentSampled,
    SkSampled,
    IsingSampled,
}

impl FromStr for FixtureKind {
    type Err = CritError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent-coins" => Ok(FixtureKind::IndependentCoins),
            "ordered-pair" => Ok(FixtureKind::OrderedPair),
            "maxent-sampled" => Ok(FixtureKind::MaxentSampled),
            "sk-sampled" => Ok(FixtureKind::SkSampled),
            "ising-sampled" => Ok(FixtureKind::IsingSampled),
            other => Err(CritError::InvalidInput(format!("unknown fixture kind `{other}`"))),
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixtureKind::IndependentCoins => "independent-coins",
            FixtureKind::OrderedPair => "ordered-pair",
            FixtureKind::MaxentSampled => "maxent-sampled",
            FixtureKind::SkSampled => "sk-sampled",
            FixtureKind::IsingSampled => "ising-sampled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureParams {
    /// Number of entities; ignored for the lattice, which has `side^2`.
    pub n: usize,
    pub m: usize,
    pub t: f64,
    pub n_equil: usize,
    /// Mean and spread of the random couplings for `maxent-sampled`.
    pub coupling_mean: f64,
    pub coupling_std: f64,
    pub field_std: f64,
    pub side: usize,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            n: 8,
            m: 2560,
            t: 1.0,
            n_equil: 1000,
            coupling_mean: 0.12,
            coupling_std: 0.05,
            field_std: 0.1,
            side: 3,
        }
    }
}

/// The model behind a `maxent-sampled` fixture.
pub fn fixture_model(params: &FixtureParams, seed: u64) -> PairwiseModel {
    random_model(params.n, params.coupling_mean, params.coupling_std, params.field_std, seed ^ 0x5eed)
}

/// Reproducible synthetic spin data of `params.m` rows.
pub fn fixture_generators(kind: FixtureKind, params: &FixtureParams, seed: u64) -> Result<BinaryMatrix> {
    match kind {
        FixtureKind::IndependentCoins => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<i8>> = (0..params.m)
                .map(|_| (0..params.n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
                .collect();
            BinaryMatrix::from_rows(&rows)
        }
        FixtureKind::OrderedPair => {
            let rows: Vec<Vec<i8>> = (0..params.m)
                .map(|t| vec![if t % 2 == 0 { 1 } else { -1 }; params.n])
                .collect();
            BinaryMatrix::from_rows(&rows)
        }
        FixtureKind::MaxentSampled => {
            let model = fixture_model(params, seed);
            Ok(glauber_simulate(&model, params.t, params.n_equil, params.m, seed)?.spins)
        }
        FixtureKind::SkSampled => {
            let model = sk_model(params.n, seed ^ 0x5eed)?;
            Ok(glauber_simulate(&model, params.t, params.n_equil, params.m, seed)?.spins)
        }
        FixtureKind::IsingSampled => {
            let model = ising_model(&LatticeSpec::new(params.side)?)?;
            Ok(glauber_simulate(&model, params.t, params.n_equil, params.m, seed)?.spins)
        }
    }
}
