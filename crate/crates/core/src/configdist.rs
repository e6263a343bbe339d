//! Configuration distributions, temperature-like rescaling and the response
//! function `R(T) = T dS/dT = Var_T(log P) / T^2`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CritError, Result};
use crate::ingest::{BinaryMatrix, MAX_CODE_BITS};

const NORMALIZATION_TOL: f64 = 1e-12;

/// Normalized probability over configuration codes; only codes with positive
/// mass are stored, sorted by code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDistribution {
    n: usize,
    codes: Vec<u64>,
    probs: Vec<f64>,
}

impl ConfigDistribution {
    /// Validates an already normalized distribution.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let d = Self::collect(n, pairs)?;
        let total: f64 = d.probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(CritError::InvalidInput(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(d)
    }

    /// Normalizes non-negative weights; zero weights are dropped.
    pub fn from_weights(n: usize, pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut d = Self::collect(n, pairs)?;
        let total: f64 = d.probs.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(CritError::InvalidInput("weights have no positive finite mass".into()));
        }
        d.probs.iter_mut().for_each(|p| *p /= total);
        Ok(d)
    }

    /// Normalizes log-weights with the max-shift trick.
    pub fn from_log_weights(n: usize, pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let pairs: Vec<(u64, f64)> = pairs.into_iter().collect();
        let max = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(CritError::InvalidInput("log-weights are not finite".into()));
        }
        Self::from_weights(n, pairs.into_iter().map(|(c, lw)| (c, (lw - max).exp())))
    }

    fn collect(n: usize, pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        if n > MAX_CODE_BITS {
            return Err(CritError::param("n", format!("at most {MAX_CODE_BITS} entities")));
        }
        let mut map = BTreeMap::new();
        for (code, p) in pairs {
            if n < 64 && code >> n != 0 {
                return Err(CritError::param("code", format!("{code} out of range for n = {n}")));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(CritError::InvalidInput(format!("invalid probability {p} for code {code}")));
            }
            if p > 0.0 {
                *map.entry(code).or_insert(0.0) += p;
            }
        }
        if map.is_empty() {
            return Err(CritError::InvalidInput("distribution has empty support".into()));
        }
        let (codes, probs) = map.into_iter().unzip();
        Ok(ConfigDistribution { n, codes, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support_size(&self) -> usize {
        self.codes.len()
    }

    pub fn codes(&self) -> &[u64] {
        &self.codes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.codes.iter().copied().zip(self.probs.iter().copied())
    }

    /// Probability of `code`, zero off the support.
    pub fn prob(&self, code: u64) -> f64 {
        self.codes
            .binary_search(&code)
            .map_or(0.0, |k| self.probs[k])
    }

    pub fn log_probs(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.ln()).collect()
    }

    /// `P_T(s) = P(s)^(1/T) / sum P^(1/T)`; `t = 1` returns an exact copy.
    pub fn rescale(&self, t: f64) -> Result<Self> {
        check_temperature(t)?;
        if t == 1.0 {
            return Ok(self.clone());
        }
        let probs = rescaled(&self.log_probs(), t);
        Ok(ConfigDistribution {
            n: self.n,
            codes: self.codes.clone(),
            probs,
        })
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.probs)
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(CritError::param("t", format!("scaling parameter must be positive, got {t}")))
    }
}

fn rescaled(log_p: &[f64], t: f64) -> Vec<f64> {
    let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_p.iter().map(|lp| ((lp - max) / t).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

fn shannon_entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// `P(s) = count(s) / M` over the observed rows.
pub fn empirical_distribution(data: &BinaryMatrix) -> Result<ConfigDistribution> {
    if data.rows() == 0 {
        return Err(CritError::InsufficientRows { needed: 1, got: 0 });
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for code in data.codes() {
        *counts.entry(code).or_insert(0) += 1;
    }
    let m = data.rows() as f64;
    Ok(ConfigDistribution {
        n: data.cols(),
        codes: counts.keys().copied().collect(),
        probs: counts.values().map(|&c| c as f64 / m).collect(),
    })
}

pub fn rescale(dist: &ConfigDistribution, t: f64) -> Result<ConfigDistribution> {
    dist.rescale(t)
}

pub fn shannon_entropy_of(dist: &ConfigDistribution) -> f64 {
    dist.entropy()
}

/// Estimator used for the response function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseEstimator {
    /// `T dS/dT` by a five-point central difference with step `rel_step * T`.
    FiniteDifference { rel_step: f64 },
    /// `Var_T(log P) / T^2`.
    Variance,
}

impl Default for ResponseEstimator {
    fn default() -> Self {
        ResponseEstimator::FiniteDifference { rel_step: 1e-3 }
    }
}

/// Response function sampled on a grid of scaling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub t_grid: Vec<f64>,
    pub r_values: Vec<f64>,
    pub s_values: Vec<f64>,
    /// Set when the distribution has a single configuration, so `R` is identically 0.
    pub degenerate: bool,
}

impl ResponseCurve {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["T", "R", "S"])?;
        for ((t, r), s) in self.t_grid.iter().zip(&self.r_values).zip(&self.s_values) {
            w.write_record([t.to_string(), r.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(CritError::param("t_grid", format!("need 0 < lo < hi and at least 2 points, got [{lo}, {hi}] x {n}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// Default grid: 200 log-spaced points in [0.2, 5].
pub fn default_t_grid() -> Vec<f64> {
    log_grid(0.2, 5.0, 200).expect("static grid")
}

/// `ln P_T` for every configuration. The normalizer is taken relative to the
/// most probable configuration through `ln_1p`, so a nearly certain
/// configuration keeps full relative precision in `1 - P_T`.
fn log_rescaled(log_p: &[f64], t: f64) -> Vec<f64> {
    let (top, max) = log_p
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let lw: Vec<f64> = log_p.iter().map(|lp| (lp - max) / t).collect();
    let rest: f64 = lw.iter().enumerate().filter(|&(i, _)| i != top).map(|(_, x)| x.exp()).sum();
    let log_z = rest.ln_1p();
    lw.into_iter().map(|x| x - log_z).collect()
}

fn entropy_from_logs(log_pt: &[f64]) -> f64 {
    -log_pt.iter().map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { l.exp() * l }).sum::<f64>()
}

/// Entropy and `Var[U]` of `U = log P` under `P_T`. `U` is shifted by its
/// maximum first so the variance of a sharply peaked `P_T` does not cancel.
fn entropy_and_variance(log_p: &[f64], t: f64) -> (f64, f64) {
    let log_pt = log_rescaled(log_p, t);
    let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut mean = 0.0;
    for (l, u) in log_pt.iter().zip(log_p) {
        mean += l.exp() * (u - max);
    }
    let mut var = 0.0;
    for (l, u) in log_pt.iter().zip(log_p) {
        var += l.exp() * (u - max - mean).powi(2);
    }
    (entropy_from_logs(&log_pt), var)
}

fn entropy_at(log_p: &[f64], t: f64) -> f64 {
    entropy_from_logs(&log_rescaled(log_p, t))
}

/// Evaluates `R(T)` and `S(T)` on `t_grid`.
pub fn response_function(
    dist: &ConfigDistribution,
    t_grid: &[f64],
    estimator: ResponseEstimator,
) -> Result<ResponseCurve> {
    if t_grid.is_empty() {
        return Err(CritError::param("t_grid", "empty grid"));
    }
    for w in t_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(CritError::param("t_grid", "grid must be strictly ascending"));
        }
    }
    for &t in t_grid {
        check_temperature(t)?;
    }
    if let ResponseEstimator::FiniteDifference { rel_step } = estimator {
        if !(rel_step > 0.0 && rel_step < 0.25) {
            return Err(CritError::param("dt", format!("relative step must lie in (0, 0.25), got {rel_step}")));
        }
    }
    let log_p = dist.log_probs();
    if dist.support_size() == 1 {
        return Ok(ResponseCurve {
            t_grid: t_grid.to_vec(),
            r_values: vec![0.0; t_grid.len()],
            s_values: vec![0.0; t_grid.len()],
            degenerate: true,
        });
    }
    let points: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|&t| {
            let (s, var) = entropy_and_variance(&log_p, t);
            let r = match estimator {
                ResponseEstimator::Variance => var / (t * t),
                ResponseEstimator::FiniteDifference { rel_step } => {
                    let h = rel_step * t;
                    let d = (-entropy_at(&log_p, t + 2.0 * h) + 8.0 * entropy_at(&log_p, t + h)
                        - 8.0 * entropy_at(&log_p, t - h)
                        + entropy_at(&log_p, t - 2.0 * h))
                        / (12.0 * h);
                    t * d
                }
            };
            (r, s)
        })
        .collect();
    let (r_values, s_values) = points.into_iter().unzip();
    Ok(ResponseCurve {
        t_grid: t_grid.to_vec(),
        r_values,
        s_values,
        degenerate: false,
    })
}

/// Location of the response maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t_max: f64,
    pub r_max: f64,
    /// The grid argmax is the first or last point; `t_max` is then that grid point.
    pub at_boundary: bool,
}

/// Grid argmax refined by the parabola through the three surrounding points.
pub fn find_t_max(curve: &ResponseCurve) -> Result<Peak> {
    if curve.degenerate {
        return Err(CritError::Degenerate("response curve of a single-configuration distribution".into()));
    }
    let r = &curve.r_values;
    let t = &curve.t_grid;
    if r.is_empty() || r.len() != t.len() {
        return Err(CritError::ShapeMismatch("response curve grids differ in length".into()));
    }
    let k = r
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > r[best] { i } else { best });
    if k == 0 || k == r.len() - 1 {
        return Ok(Peak {
            t_max: t[k],
            r_max: r[k],
            at_boundary: true,
        });
    }
    let (t0, t1, t2) = (t[k - 1], t[k], t[k + 1]);
    let (r0, r1, r2) = (r[k - 1], r[k], r[k + 1]);
    let num = (t1 - t0).powi(2) * (r1 - r2) - (t1 - t2).powi(2) * (r1 - r0);
    let den = (t1 - t0) * (r1 - r2) - (t1 - t2) * (r1 - r0);
    if den == 0.0 {
        return Ok(Peak {
            t_max: t1,
            r_max: r1,
            at_boundary: false,
        });
    }
    let ts = (t1 - 0.5 * num / den).clamp(t0, t2);
    let rs = r0 * (ts - t1) * (ts - t2) / ((t0 - t1) * (t0 - t2))
        + r1 * (ts - t0) * (ts - t2) / ((t1 - t0) * (t1 - t2))
        + r2 * (ts - t0) * (ts - t1) / ((t2 - t0) * (t2 - t1));
    Ok(Peak {
        t_max: ts,
        r_max: rs.max(r1),
        at_boundary: false,
    })
}

/// `D_KL(p || q) = sum p ln(p / q)` in nats.
pub fn kl_divergence(p: &ConfigDistribution, q: &ConfigDistribution) -> Result<f64> {
    if p.n != q.n {
        return Err(CritError::ShapeMismatch(format!("system sizes {} and {}", p.n, q.n)));
    }
    let mut d = 0.0;
    for (code, pp) in p.iter() {
        let qq = q.prob(code);
        if qq <= 0.0 {
            return Err(CritError::AbsoluteContinuity { code });
        }
        d += pp * (pp / qq).ln();
    }
    Ok(d.max(0.0))
}

/// `D_KL(P_{T_max} || P)`: divergence between the distribution rescaled at its
/// response peak and the empirical one.
pub fn kld_at_peak(dist: &ConfigDistribution, t_max: f64) -> Result<f64> {
    kl_divergence(&dist.rescale(t_max)?, dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub code: u64,
    pub prob: f64,
}

/// Configurations ordered by decreasing probability, ranks starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSpectrum {
    pub entries: Vec<RankEntry>,
}

impl RankSpectrum {
    pub fn rank_of(&self, code: u64) -> Option<usize> {
        self.entries.iter().find(|e| e.code == code).map(|e| e.rank)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "prob"])?;
        for e in &self.entries {
            w.write_record([e.rank.to_string(), e.prob.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ties are broken by ascending code; tied entries still get distinct ranks.
pub fn rank_spectrum(dist: &ConfigDistribution) -> RankSpectrum {
    let mut pairs: Vec<(u64, f64)> = dist.iter().collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    RankSpectrum {
        entries: pairs
            .into_iter()
            .enumerate()
            .map(|(k, (code, prob))| RankEntry {
                rank: k + 1,
                code,
                prob,
            })
            .collect(),
    }
}

/// Net orientation `m(t) = N^-1 sum_i s_i(t)` and its distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub series: Vec<f64>,
    /// Attainable values `-1, -1 + 2/N, ..., 1` with relative frequencies.
    pub histogram: Vec<(f64, f64)>,
    /// Values `|m|` (ascending) with relative frequencies.
    pub abs_histogram: Vec<(f64, f64)>,
    pub mean_abs: f64,
}

pub fn net_orientation(data: &BinaryMatrix) -> Orientation {
    let n = data.cols();
    let m_rows = data.rows().max(1) as f64;
    let mut up_counts = vec![0usize; n + 1];
    let series: Vec<f64> = data
        .iter_rows()
        .map(|row| {
            let ups = row.iter().filter(|&&s| s > 0).count();
            up_counts[ups] += 1;
            row.iter().map(|&s| f64::from(s)).sum::<f64>() / n as f64
        })
        .collect();
    let value = |ups: usize| (2.0 * ups as f64 - n as f64) / n as f64;
    let histogram: Vec<(f64, f64)> = (0..=n)
        .map(|u| (value(u), up_counts[u] as f64 / m_rows))
        .collect();
    let mut abs_map: BTreeMap<usize, f64> = BTreeMap::new();
    for u in 0..=n {
        let key = (2 * u).abs_diff(n);
        *abs_map.entry(key).or_insert(0.0) += up_counts[u] as f64 / m_rows;
    }
    let abs_histogram = abs_map
        .into_iter()
        .map(|(k, f)| (k as f64 / n as f64, f))
        .collect();
    let mean_abs = series.iter().map(|m| m.abs()).sum::<f64>() / m_rows;
    Orientation {
        series,
        histogram,
        abs_histogram,
        mean_abs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> ConfigDistribution {
        ConfigDistribution::new(1, [(0, 0.2), (1, 0.8)]).unwrap()
    }

    #[test]
    fn empirical_counts() {
        let data = BinaryMatrix::from_rows(&[vec![1], vec![1], vec![-1], vec![1]]).unwrap();
        let d = empirical_distribution(&data).unwrap();
        assert_eq!(d.prob(1), 0.75);
        assert_eq!(d.prob(0), 0.25);
        let same = BinaryMatrix::from_rows(&vec![vec![1, -1]; 5]).unwrap();
        let d = empirical_distribution(&same).unwrap();
        assert_eq!(d.support_size(), 1);
        assert_eq!(d.prob(1), 1.0);
        let empty = BinaryMatrix::from_flat(vec!["a".into()], None, 0, 1, vec![]).unwrap();
        assert!(empirical_distribution(&empty).is_err());
    }

    #[test]
    fn rescale_examples() {
        let d = two_point();
        assert_eq!(d.rescale(1.0).unwrap(), d);
        let h = d.rescale(0.5).unwrap();
        assert!((h.prob(1) - 0.64 / 0.68).abs() < 1e-12);
        assert!((h.prob(0) - 0.04 / 0.68).abs() < 1e-12);
        let flat = d.rescale(1e9).unwrap();
        assert!((flat.prob(0) - 0.5).abs() < 1e-8);
        assert!(d.rescale(0.0).is_err());
        assert!(d.rescale(-1.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        let point = ConfigDistribution::new(3, [(5, 1.0)]).unwrap();
        assert_eq!(point.entropy(), 0.0);
        let uni = ConfigDistribution::from_weights(4, (0..16).map(|c| (c, 1.0))).unwrap();
        assert!((uni.entropy() - 4.0 * 2f64.ln()).abs() < 1e-12);
        let d = ConfigDistribution::new(2, [(0, 0.5), (1, 0.25), (2, 0.25)]).unwrap();
        assert!((d.entropy() - 1.5 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn response_examples() {
        let grid = default_t_grid();
        let uni = ConfigDistribution::from_weights(3, (0..8).map(|c| (c, 1.0))).unwrap();
        let c = response_function(&uni, &grid, ResponseEstimator::Variance).unwrap();
        assert!(c.r_values.iter().all(|r| r.abs() < 1e-12));

        let point = ConfigDistribution::new(2, [(1, 1.0)]).unwrap();
        let c = response_function(&point, &grid, ResponseEstimator::default()).unwrap();
        assert!(c.degenerate && c.r_values.iter().all(|&r| r == 0.0));
        assert!(find_t_max(&c).is_err());

        let d = two_point();
        let expected = 0.16 * 4f64.ln().powi(2);
        let v = response_function(&d, &[1.0], ResponseEstimator::Variance).unwrap();
        let f = response_function(&d, &[1.0], ResponseEstimator::default()).unwrap();
        assert!((v.r_values[0] - expected).abs() < 1e-12);
        assert!((f.r_values[0] - expected).abs() < 1e-6);
    }

    #[test]
    fn response_rejects_bad_grids() {
        let d = two_point();
        assert!(response_function(&d, &[], ResponseEstimator::Variance).is_err());
        assert!(response_function(&d, &[2.0, 1.0], ResponseEstimator::Variance).is_err());
        assert!(response_function(&d, &[0.0, 1.0], ResponseEstimator::Variance).is_err());
        let bad = ResponseEstimator::FiniteDifference { rel_step: 0.0 };
        assert!(response_function(&d, &[1.0], bad).is_err());
    }

    #[test]
    fn peak_refinement() {
        // symmetric parabola sampled off-centre
        let t_grid: Vec<f64> = (0..41).map(|k| 0.5 + 0.05 * k as f64).collect();
        let r_values = t_grid.iter().map(|t| 3.0 - (t - 1.234f64).powi(2)).collect();
        let curve = ResponseCurve {
            s_values: vec![0.0; t_grid.len()],
            t_grid,
            r_values,
            degenerate: false,
        };
        let p = find_t_max(&curve).unwrap();
        assert!(!p.at_boundary);
        assert!((p.t_max - 1.234).abs() < 1e-12);
        assert!((p.r_max - 3.0).abs() < 1e-12);

        let mono = ResponseCurve {
            t_grid: vec![1.0, 2.0, 3.0],
            r_values: vec![0.1, 0.2, 0.3],
            s_values: vec![0.0; 3],
            degenerate: false,
        };
        let p = find_t_max(&mono).unwrap();
        assert!(p.at_boundary);
        assert_eq!(p.t_max, 3.0);
    }

    #[test]
    fn kl_examples() {
        let p = two_point();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let point = ConfigDistribution::new(1, [(0, 1.0)]).unwrap();
        let half = ConfigDistribution::new(1, [(0, 0.5), (1, 0.5)]).unwrap();
        assert!((kl_divergence(&point, &half).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(
            kl_divergence(&half, &point),
            Err(CritError::AbsoluteContinuity { code: 1 })
        ));
    }

    #[test]
    fn ranks() {
        let d = ConfigDistribution::new(2, [(0, 0.2), (1, 0.5), (3, 0.3)]).unwrap();
        let r = rank_spectrum(&d);
        let got: Vec<(usize, f64)> = r.entries.iter().map(|e| (e.rank, e.prob)).collect();
        assert_eq!(got, vec![(1, 0.5), (2, 0.3), (3, 0.2)]);
        assert_eq!(r.rank_of(0), Some(3));

        let uni = ConfigDistribution::from_weights(2, (0..4).rev().map(|c| (c, 1.0))).unwrap();
        let r = rank_spectrum(&uni);
        let codes: Vec<u64> = r.entries.iter().map(|e| e.code).collect();
        assert_eq!(codes, vec![0, 1, 2, 3]);
        assert!(r.entries.iter().all(|e| e.prob == 0.25));

        let point = ConfigDistribution::new(1, [(1, 1.0)]).unwrap();
        let r = rank_spectrum(&point);
        assert_eq!(r.entries.len(), 1);
        assert_eq!((r.entries[0].rank, r.entries[0].prob), (1, 1.0));
    }

    #[test]
    fn orientation_examples() {
        let data = BinaryMatrix::from_rows(&[vec![1, 1, -1], vec![-1, -1, -1]]).unwrap();
        let o = net_orientation(&data);
        assert!((o.series[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(o.series[1], -1.0);
        assert!((o.mean_abs - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(o.histogram.len(), 4);
        assert_eq!(o.histogram[0], (-1.0, 0.5));
        assert_eq!(o.abs_histogram.len(), 2);

        let o = net_orientation(&BinaryMatrix::from_rows(&[vec![1, -1], vec![1, 1]]).unwrap());
        assert_eq!(o.series, vec![0.0, 1.0]);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = default_t_grid();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 0.2).abs() < 1e-15);
        assert_eq!(*g.last().unwrap(), 5.0);
        assert!(log_grid(1.0, 1.0, 5).is_err());
    }
}
