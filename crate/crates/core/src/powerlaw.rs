//! Discrete power law with a natural upper bound: maximum likelihood
//! exponent, its Gaussian standard error, inverse-CDF sampling and the
//! bootstrap Kolmogorov-Smirnov goodness-of-fit test.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configdist::{empirical_distribution, rank_spectrum};
use crate::error::{CritError, Result};
use crate::ingest::BinaryMatrix;
use crate::rng::{seeded_rng, task_rng};

/// Default bisection bracket for the exponent.
pub const BETA_BRACKET: (f64, f64) = (-5.0, 20.0);
const WIDE_BRACKET: (f64, f64) = (-60.0, 200.0);
/// Significance level below which the power law is ruled out.
pub const REJECTION_LEVEL: f64 = 0.05;

/// `p(x) ∝ x^-beta` on `x = 1..=x_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedPowerLaw {
    pub beta: f64,
    pub x_max: u32,
}

impl BoundedPowerLaw {
    pub fn new(beta: f64, x_max: u32) -> Result<Self> {
        if x_max < 2 {
            return Err(CritError::param("x_max", format!("upper bound must be at least 2, got {x_max}")));
        }
        if !beta.is_finite() {
            return Err(CritError::param("beta", "exponent must be finite"));
        }
        Ok(BoundedPowerLaw { beta, x_max })
    }

    /// Cumulative probabilities `P[X <= x]` for `x = 1..=x_max`.
    pub fn cdf(&self) -> Vec<f64> {
        let cum = cumulative_weights(self.beta, self.x_max);
        let z = *cum.last().expect("x_max >= 1");
        cum.iter().map(|c| c / z).collect()
    }

    pub fn pmf(&self, x: u32) -> f64 {
        if x == 0 || x > self.x_max {
            return 0.0;
        }
        f64::from(x).powf(-self.beta) / zeta_sum(self.x_max, self.beta, 0)
    }
}

/// `sum_{x=1}^{x_max} x^-beta (-ln x)^order`, the `order`-th derivative of the
/// truncated zeta function in `beta`, summed in ascending `x`.
pub fn zeta_sum(x_max: u32, beta: f64, order: u32) -> f64 {
    (1..=x_max)
        .map(|x| {
            let lx = f64::from(x).ln();
            (-beta * lx).exp() * (-lx).powi(order as i32)
        })
        .sum()
}

fn cumulative_weights(beta: f64, x_max: u32) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=x_max)
        .map(|x| {
            acc += f64::from(x).powf(-beta);
            acc
        })
        .collect()
}

/// `ln x` for `x = 1..=x_max`, shared by repeated fits on one support.
#[derive(Debug, Clone)]
struct LogSupport {
    ln_x: Vec<f64>,
}

impl LogSupport {
    fn new(x_max: u32) -> Self {
        LogSupport {
            ln_x: (1..=x_max).map(|x| f64::from(x).ln()).collect(),
        }
    }

    /// Mean and variance of `ln x` under the law with exponent `beta`.
    fn log_moments(&self, beta: f64) -> (f64, f64) {
        // shift exponents so the largest weight is 1 for any sign of beta
        let shift = if beta < 0.0 { -beta * self.ln_x[self.ln_x.len() - 1] } else { 0.0 };
        let (mut z, mut z1, mut z2) = (0.0, 0.0, 0.0);
        for &lx in &self.ln_x {
            let w = (-beta * lx - shift).exp();
            z += w;
            z1 += w * lx;
            z2 += w * lx * lx;
        }
        let mean = z1 / z;
        (mean, (z2 / z - mean * mean).max(0.0))
    }

    fn mean_log(&self, sample: &[u32]) -> f64 {
        sample.iter().map(|&x| self.ln_x[x as usize - 1]).sum::<f64>() / sample.len() as f64
    }

    /// Root of `E_beta[ln x] = target` by bisection; `E_beta[ln x]` decreases in beta.
    fn solve(&self, target: f64) -> Result<f64> {
        let g = |b: f64| self.log_moments(b).0 - target;
        let (mut lo, mut hi) = BETA_BRACKET;
        if !(g(lo) >= 0.0 && g(hi) <= 0.0) {
            (lo, hi) = WIDE_BRACKET;
            if !(g(lo) >= 0.0 && g(hi) <= 0.0) {
                return Err(CritError::ExponentUnbounded(format!(
                    "mean log value {target} is outside the range reachable for beta in [{lo}, {hi}]"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid);
            if gm == 0.0 || (hi - lo < 1e-8 && gm.abs() < 1e-11) || hi - lo < 1e-14 {
                return Ok(mid);
            }
            if gm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn check_sample(sample: &[u32], x_max: u32) -> Result<()> {
    if sample.is_empty() {
        return Err(CritError::InvalidInput("empty sample".into()));
    }
    if let Some(&bad) = sample.iter().find(|&&x| x == 0 || x > x_max) {
        return Err(CritError::InvalidInput(format!("sample value {bad} outside [1, {x_max}]")));
    }
    Ok(())
}

/// Maximum likelihood exponent: the root of
/// `mean(ln x_i) = sum x^-beta ln x / sum x^-beta`.
pub fn mle_exponent(sample: &[u32], x_max: u32) -> Result<f64> {
    check_sample(sample, x_max)?;
    if sample.iter().all(|&x| x == 1) {
        return Err(CritError::ExponentUnbounded("all observations equal 1".into()));
    }
    let support = LogSupport::new(x_max);
    support.solve(support.mean_log(sample))
}

/// Residual of the first-order condition at `beta`.
pub fn mle_residual(sample: &[u32], x_max: u32, beta: f64) -> f64 {
    let support = LogSupport::new(x_max);
    support.log_moments(beta).0 - support.mean_log(sample)
}

/// `sigma = [n (zeta''/zeta - (zeta'/zeta)^2)]^(-1/2)`.
pub fn mle_sigma(beta_hat: f64, x_max: u32, n: usize) -> Result<f64> {
    if x_max < 2 {
        return Err(CritError::param("x_max", "a single-point support has zero variance"));
    }
    if n < 2 {
        return Err(CritError::param("n", "need at least two observations"));
    }
    let (_, var) = LogSupport::new(x_max).log_moments(beta_hat);
    if var <= 0.0 {
        return Err(CritError::Degenerate(format!("zero curvature at beta = {beta_hat}")));
    }
    Ok(1.0 / (n as f64 * var).sqrt())
}

/// Inverse-CDF sampler over precomputed cumulative weights.
#[derive(Debug, Clone)]
pub struct PowerLawSampler {
    cum: Vec<f64>,
}

impl PowerLawSampler {
    pub fn new(model: &BoundedPowerLaw) -> Self {
        PowerLawSampler {
            cum: cumulative_weights(model.beta, model.x_max),
        }
    }

    /// Smallest `x` with `sum_{y<=x} y^-beta >= u * zeta`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let target = rng.random::<f64>() * self.cum[self.cum.len() - 1];
        let k = self.cum.partition_point(|&c| c < target);
        (k.min(self.cum.len() - 1) + 1) as u32
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u32> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

pub fn sample_power_law(model: &BoundedPowerLaw, n: usize, seed: u64) -> Vec<u32> {
    PowerLawSampler::new(model).sample(n, &mut seeded_rng(seed))
}

fn ks_against_cdf(sample: &[u32], cdf: &[f64]) -> f64 {
    let mut counts = vec![0u64; cdf.len()];
    for &x in sample {
        counts[x as usize - 1] += 1;
    }
    let n = sample.len() as f64;
    let mut acc = 0u64;
    let mut d: f64 = 0.0;
    for (c, f) in counts.iter().zip(cdf) {
        acc += c;
        d = d.max((acc as f64 / n - f).abs());
    }
    d
}

/// Largest gap between the empirical and model CDFs over `1..=x_max`.
pub fn ks_statistic(sample: &[u32], model: &BoundedPowerLaw) -> Result<f64> {
    check_sample(sample, model.x_max)?;
    Ok(ks_against_cdf(sample, &model.cdf()))
}

/// Result of a power-law goodness-of-fit test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub beta_hat: f64,
    pub sigma: f64,
    pub ks_d: f64,
    pub p_value: f64,
    pub n: usize,
    pub x_max: u32,
    pub n_boot: usize,
    /// `p_value < 0.05`: the power law is ruled out.
    pub rejected: bool,
}

/// KS statistic of a sample refitted on a fixed support. An all-ones sample
/// fits the `beta -> inf` point mass exactly.
fn refit_ks(sample: &[u32], support: &LogSupport, x_max: u32) -> f64 {
    if sample.iter().all(|&x| x == 1) {
        return 0.0;
    }
    match support.solve(support.mean_log(sample)) {
        Ok(beta) => ks_against_cdf(sample, &BoundedPowerLaw { beta, x_max }.cdf()),
        Err(_) => 0.0,
    }
}

/// Parametric bootstrap: fit, compute `D0`, then refit `n_boot` synthetic
/// samples of equal length drawn from the fitted law on the same support.
/// The p-value is the fraction of synthetic statistics exceeding `D0`.
pub fn bootstrap_pvalue(sample: &[u32], x_max: u32, n_boot: usize, seed: u64) -> Result<FitReport> {
    bootstrap_with(sample, x_max, n_boot, seed, Resampling::Plain)
}

/// How synthetic bootstrap samples are turned into test statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampling {
    /// Synthetic draws are refitted as they are.
    Plain,
    /// Synthetic draws are first replaced by their frequency ranks, the same
    /// map that turns observed configurations into a rank sample.
    #[default]
    Reranked,
}

/// Replaces each value by its rank in decreasing frequency, ties by value.
pub fn rerank(sample: &[u32]) -> Vec<u32> {
    let top = sample.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; top + 1];
    for &x in sample {
        counts[x as usize] += 1;
    }
    let mut order: Vec<usize> = (1..=top).filter(|&x| counts[x] > 0).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut rank = vec![0u32; top + 1];
    for (r, &x) in order.iter().enumerate() {
        rank[x] = r as u32 + 1;
    }
    sample.iter().map(|&x| rank[x as usize]).collect()
}

fn bootstrap_with(sample: &[u32], x_max: u32, n_boot: usize, seed: u64, mode: Resampling) -> Result<FitReport> {
    if n_boot < 100 {
        return Err(CritError::param("n_boot", format!("need at least 100 replicates, got {n_boot}")));
    }
    if x_max < 2 {
        return Err(CritError::param("x_max", "upper bound must be at least 2"));
    }
    let beta_hat = mle_exponent(sample, x_max)?;
    let model = BoundedPowerLaw::new(beta_hat, x_max)?;
    let d0 = ks_against_cdf(sample, &model.cdf());
    let sigma = mle_sigma(beta_hat, x_max, sample.len().max(2))?;
    let sampler = PowerLawSampler::new(&model);
    let support = LogSupport::new(x_max);
    let n = sample.len();
    let exceed = (0..n_boot)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = task_rng(seed, i as u64);
            let mut synthetic = sampler.sample(n, &mut rng);
            if mode == Resampling::Reranked {
                synthetic = rerank(&synthetic);
            }
            refit_ks(&synthetic, &support, x_max) > d0
        })
        .count();
    let p_value = exceed as f64 / n_boot as f64;
    Ok(FitReport {
        beta_hat,
        sigma,
        ks_d: d0,
        p_value,
        n,
        x_max,
        n_boot,
        rejected: p_value < REJECTION_LEVEL,
    })
}

/// Upper bound used for rank samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XMaxPolicy {
    /// Number of distinct configurations observed.
    #[default]
    ObservedDistinct,
    /// All `2^N` configurations.
    AllConfigurations,
}

/// Rank (1 = most frequent) of every observation's configuration.
pub fn rank_sample(data: &BinaryMatrix) -> Result<Vec<u32>> {
    let spectrum = rank_spectrum(&empirical_distribution(data)?);
    let ranks: HashMap<u64, u32> = spectrum
        .entries
        .iter()
        .map(|e| (e.code, e.rank as u32))
        .collect();
    Ok(data.codes().iter().map(|c| ranks[c]).collect())
}

/// Tests Zipf's law for configuration ranks with the bootstrap KS test.
pub fn zipf_test(data: &BinaryMatrix, policy: XMaxPolicy, n_boot: usize, seed: u64) -> Result<FitReport> {
    zipf_test_with(data, policy, Resampling::default(), n_boot, seed)
}

pub fn zipf_test_with(
    data: &BinaryMatrix,
    policy: XMaxPolicy,
    mode: Resampling,
    n_boot: usize,
    seed: u64,
) -> Result<FitReport> {
    let ranks = rank_sample(data)?;
    let distinct = ranks.iter().copied().max().unwrap_or(0);
    if distinct < 2 {
        return Err(CritError::Degenerate("a single configuration was observed".into()));
    }
    let x_max = match policy {
        XMaxPolicy::ObservedDistinct => distinct,
        XMaxPolicy::AllConfigurations => {
            if data.cols() >= 32 {
                return Err(CritError::param("x_max_policy", "2^N does not fit the rank type"));
            }
            1u32 << data.cols()
        }
    };
    bootstrap_with(&ranks, x_max, n_boot, seed, mode)
}

/// Writes fit reports with the columns `n_entities, alpha_hat, sigma, D, p_value`.
pub fn write_fit_table<W: Write>(rows: &[(usize, FitReport)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n_entities", "alpha_hat", "sigma", "D", "p_value"])?;
    for (n, r) in rows {
        w.write_record([
            n.to_string(),
            r.beta_hat.to_string(),
            r.sigma.to_string(),
            r.ks_d.to_string(),
            r.p_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
