//! Studies built on top of the response function: peak location against
//! subset size and mean correlation, entropy against log-likelihood,
//! the scaling exponent near the peak and peak location over time.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configdist::{empirical_distribution, find_t_max, response_function, ConfigDistribution, ResponseCurve, ResponseEstimator};
use crate::error::{CritError, Result};
use crate::ingest::{mean_correlation, random_subsets, BinaryMatrix, PriceSeries, ReturnMatrix};
use crate::rng::derive_seed;
use crate::significance::mean_std;

/// Outcome of locating the peak for one data subset.
#[derive(Debug, Clone, Copy, PartialEq)]
enum SubsetPeak {
    Interior(f64),
    Boundary(f64),
    Degenerate,
}

fn subset_peak(data: &BinaryMatrix, columns: &[usize], t_grid: &[f64]) -> Result<SubsetPeak> {
    let dist = empirical_distribution(&data.select_columns(columns)?)?;
    let curve = response_function(&dist, t_grid, ResponseEstimator::default())?;
    if curve.degenerate {
        return Ok(SubsetPeak::Degenerate);
    }
    let peak = find_t_max(&curve)?;
    Ok(if peak.at_boundary {
        SubsetPeak::Boundary(peak.t_max)
    } else {
        SubsetPeak::Interior(peak.t_max)
    })
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Absent with fewer than three points.
    pub slope_std_error: Option<f64>,
    pub n_points: usize,
}

/// Weighted least squares; `None` with fewer than two distinct abscissae.
fn weighted_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<LinearFit> {
    let sw: f64 = w.iter().sum();
    if x.len() < 2 || sw <= 0.0 {
        return None;
    }
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((a, b), c) in x.iter().zip(y).zip(w) {
        sxx += c * (a - mx) * (a - mx);
        sxy += c * (a - mx) * (b - my);
        syy += c * (b - my) * (b - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, b), c)| c * (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let n = x.len();
    let slope_std_error = (n > 2).then(|| {
        // Effective-sample normalization so that unit weights give the usual formula.
        let scale = n as f64 / sw;
        (sse * scale / (n - 2) as f64 / (sxx * scale)).sqrt()
    });
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_std_error,
        n_points: n,
    })
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    weighted_fit(x, y, &vec![1.0; x.len()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFamily {
    /// `T(N) = T_inf − b e^{−cN}`
    Exponential,
    /// `T(N) = T_inf − b N^{−c}`
    Power,
}

impl FitFamily {
    fn basis(self, n: f64, c: f64) -> f64 {
        match self {
            FitFamily::Exponential => (-c * n).exp(),
            FitFamily::Power => n.powf(-c),
        }
    }

    /// Admissible range of the decay rate `c`.
    fn c_range(self) -> (f64, f64) {
        match self {
            FitFamily::Exponential => (0.1, 10.0),
            FitFamily::Power => (0.25, 10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturatingFit {
    pub family: FitFamily,
    pub t_inf: f64,
    pub b: f64,
    pub c: f64,
    pub rss: f64,
}

/// For fixed `c` the model is linear in `(T_inf, b)`; `b` is kept non-negative.
fn project(family: FitFamily, n: &[f64], y: &[f64], c: f64) -> (f64, f64, f64) {
    let g: Vec<f64> = n.iter().map(|&v| family.basis(v, c)).collect();
    let k = n.len() as f64;
    let (mg, my) = (g.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sgg: f64 = g.iter().map(|v| (v - mg).powi(2)).sum();
    let sgy: f64 = g.iter().zip(y).map(|(a, b)| (a - mg) * (b - my)).sum();
    let b = if sgg > 1e-300 { (-sgy / sgg).max(0.0) } else { 0.0 };
    let t_inf = my + b * mg;
    let rss = g.iter().zip(y).map(|(gv, yv)| (yv - t_inf + b * gv).powi(2)).sum();
    (t_inf, b, rss)
}

/// Variable projection: golden-section search on `ln c` from five deterministic starts.
pub fn fit_saturating(family: FitFamily, sizes: &[f64], t_values: &[f64]) -> Result<SaturatingFit> {
    if sizes.len() != t_values.len() {
        return Err(CritError::ShapeMismatch("sizes and values differ in length".into()));
    }
    if sizes.len() < 3 {
        return Err(CritError::InvalidInput(format!(
            "a three-parameter fit needs at least 3 sizes, got {}",
            sizes.len()
        )));
    }
    let (lo, hi) = family.c_range();
    let (lo, hi) = (lo.ln(), hi.ln());
    let cost = |lc: f64| project(family, sizes, t_values, lc.exp()).2;
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let width = (hi - lo) / 5.0;
    let best_lc = (0..5)
        .into_par_iter()
        .map(|k| {
            let (mut a, mut b) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
            let mut x1 = b - invphi * (b - a);
            let mut x2 = a + invphi * (b - a);
            let (mut f1, mut f2) = (cost(x1), cost(x2));
            for _ in 0..80 {
                if f1 <= f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - invphi * (b - a);
                    f1 = cost(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + invphi * (b - a);
                    f2 = cost(x2);
                }
            }
            let x = 0.5 * (a + b);
            (x, cost(x))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
        .0;
    let c = best_lc.exp();
    let (t_inf, b, rss) = project(family, sizes, t_values, c);
    Ok(SaturatingFit {
        family,
        t_inf,
        b,
        c,
        rss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub n: usize,
    pub t_mean: f64,
    pub t_std: f64,
    /// Subsets with an interior peak.
    pub count: usize,
    pub degenerate: usize,
    pub boundary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub points: Vec<SizePoint>,
    pub exponential: Option<SaturatingFit>,
    pub power: Option<SaturatingFit>,
}

impl ScalingStudy {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "t_mean", "t_std", "count"])?;
        for p in &self.points {
            w.write_record([p.n.to_string(), p.t_mean.to_string(), p.t_std.to_string(), p.count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean and spread of the peak location over random subsets of each size.
///
/// Subsets whose distribution has a single configuration, or whose peak sits on
/// the grid boundary, are left out of the mean and counted separately.
pub fn tmax_vs_size(
    data: &BinaryMatrix,
    sizes: &[usize],
    n_subsets: usize,
    seed: u64,
    t_grid: &[f64],
) -> Result<ScalingStudy> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CritError::param("sizes", "need a non-empty ascending list"));
    }
    if sizes[0] < 1 || *sizes.last().unwrap() > data.cols() {
        return Err(CritError::param("sizes", format!("sizes must lie in [1, {}]", data.cols())));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let subsets = random_subsets(data.cols(), n, n_subsets, derive_seed(seed, n as u64))?;
        let peaks = subsets
            .par_iter()
            .map(|s| subset_peak(data, s, t_grid))
            .collect::<Result<Vec<_>>>()?;
        let interior: Vec<f64> = peaks
            .iter()
            .filter_map(|p| if let SubsetPeak::Interior(t) = p { Some(*t) } else { None })
            .collect();
        let (t_mean, t_std) = if interior.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&interior) };
        points.push(SizePoint {
            n,
            t_mean,
            t_std,
            count: interior.len(),
            degenerate: peaks.iter().filter(|p| **p == SubsetPeak::Degenerate).count(),
            boundary: peaks.iter().filter(|p| matches!(p, SubsetPeak::Boundary(_))).count(),
        });
    }
    let usable: Vec<&SizePoint> = points.iter().filter(|p| p.count > 0).collect();
    let (ns, ts): (Vec<f64>, Vec<f64>) = usable.iter().map(|p| (p.n as f64, p.t_mean)).unzip();
    let fit = |family| if ns.len() >= 3 { fit_saturating(family, &ns, &ts).ok() } else { None };
    Ok(ScalingStudy {
        exponential: fit(FitFamily::Exponential),
        power: fit(FitFamily::Power),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub subset: Vec<usize>,
    pub mean_correlation: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStudy {
    pub points: Vec<CorrelationPoint>,
    /// Subsets skipped for a degenerate distribution, boundary peak or constant column.
    pub skipped: usize,
    pub fit: Option<LinearFit>,
}

impl CorrelationStudy {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["mean_correlation", "t_max"])?;
        for p in &self.points {
            w.write_record([p.mean_correlation.to_string(), p.t_max.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Peak location against mean pairwise return correlation over random subsets of size `n`.
pub fn tmax_vs_correlation(
    returns: &ReturnMatrix,
    data: &BinaryMatrix,
    n: usize,
    n_subsets: usize,
    seed: u64,
    t_grid: &[f64],
) -> Result<CorrelationStudy> {
    if n < 2 || n > data.cols() {
        return Err(CritError::param("size", format!("must lie in [2, {}]", data.cols())));
    }
    if returns.cols() != data.cols() {
        return Err(CritError::ShapeMismatch("returns and spins differ in width".into()));
    }
    let subsets = random_subsets(data.cols(), n, n_subsets, seed)?;
    let results = subsets
        .par_iter()
        .map(|s| -> Result<Option<CorrelationPoint>> {
            let rho = match mean_correlation(returns, s) {
                Ok(r) => r,
                Err(CritError::ConstantColumn(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            Ok(match subset_peak(data, s, t_grid)? {
                SubsetPeak::Interior(t) => Some(CorrelationPoint {
                    subset: s.clone(),
                    mean_correlation: rho,
                    t_max: t,
                }),
                _ => None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let points: Vec<CorrelationPoint> = results.into_iter().flatten().collect();
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p.mean_correlation, p.t_max)).unzip();
    Ok(CorrelationStudy {
        fit: linear_fit(&x, &y),
        points,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEnergyCurve {
    /// Bin centers of `−U = −ln P`, non-empty bins only.
    pub bin_u: Vec<f64>,
    /// `ln` of the number of distinct configurations per bin.
    pub s: Vec<f64>,
    pub counts: Vec<usize>,
    pub fit: Option<LinearFit>,
    /// RMS residual divided by the range of fitted `S`.
    pub relative_nonlinearity: Option<f64>,
    /// All configurations share one value of `U`.
    pub degenerate: bool,
}

impl EntropyEnergyCurve {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bin_u", "s"])?;
        for (u, s) in self.bin_u.iter().zip(&self.s) {
            w.write_record([u.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const DEFAULT_ENERGY_BINS: usize = 30;

/// Histogram of `−ln P` over the support, `S = ln(count)` per bin and its linear fit in `−U`.
///
/// The fit weights each bin by its number of configurations. `fit_range`, if
/// given, restricts the fit to bins whose center of `−U` lies in the interval.
pub fn entropy_energy_curve(
    dist: &ConfigDistribution,
    n_bins: usize,
    fit_range: Option<(f64, f64)>,
) -> Result<EntropyEnergyCurve> {
    if n_bins < 3 {
        return Err(CritError::param("n_bins", "need at least 3 bins"));
    }
    let neg_u: Vec<f64> = dist.log_probs().iter().map(|v| -v).collect();
    let lo = neg_u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = neg_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        return Ok(EntropyEnergyCurve {
            bin_u: vec![lo],
            s: vec![(neg_u.len() as f64).ln()],
            counts: vec![neg_u.len()],
            fit: None,
            relative_nonlinearity: None,
            degenerate: true,
        });
    }
    if dist.support_size() < n_bins {
        return Err(CritError::InvalidInput(format!(
            "support of {} configurations is smaller than {n_bins} bins",
            dist.support_size()
        )));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for v in &neg_u {
        counts[(((v - lo) / width) as usize).min(n_bins - 1)] += 1;
    }
    let (mut bin_u, mut s, mut kept) = (Vec::new(), Vec::new(), Vec::new());
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 {
            bin_u.push(lo + (k as f64 + 0.5) * width);
            s.push((c as f64).ln());
            kept.push(c);
        }
    }
    let mut fx = Vec::new();
    let mut fy = Vec::new();
    let mut fw = Vec::new();
    for ((&u, &sv), &c) in bin_u.iter().zip(&s).zip(&kept) {
        if fit_range.is_none_or(|(a, b)| u >= a && u <= b) {
            fx.push(u);
            fy.push(sv);
            fw.push(c as f64);
        }
    }
    let fit = if fx.len() >= 3 { weighted_fit(&fx, &fy, &fw) } else { None };
    let relative_nonlinearity = fit.and_then(|f| {
        let fitted: Vec<f64> = fx.iter().map(|x| f.intercept + f.slope * x).collect();
        let sw: f64 = fw.iter().sum();
        let rms = (fitted
            .iter()
            .zip(&fy)
            .zip(&fw)
            .map(|((a, b), w)| w * (a - b).powi(2))
            .sum::<f64>()
            / sw)
            .sqrt();
        let range = fitted.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - fitted.iter().copied().fold(f64::INFINITY, f64::min);
        (range > 0.0).then(|| rms / range)
    });
    Ok(EntropyEnergyCurve {
        bin_u,
        s,
        counts: kept,
        fit,
        relative_nonlinearity,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponent {
    pub t_max: f64,
    pub exponent: f64,
    pub std_error: Option<f64>,
    pub epsilon: Vec<f64>,
    pub log_r: Vec<f64>,
}

impl CriticalExponent {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epsilon", "log_r"])?;
        for (e, r) in self.epsilon.iter().zip(&self.log_r) {
            w.write_record([e.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const DEFAULT_EPSILON_WINDOW: (f64, f64) = (0.05, 0.3);

/// Slope of `ln R` against `ln ε`, `ε = (T − t_max)/t_max`, over grid points
/// with `ε` inside `window`.
pub fn critical_exponent_at(curve: &ResponseCurve, t_max: f64, window: (f64, f64)) -> Result<CriticalExponent> {
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(CritError::param("epsilon_window", "need 0 < lo < hi"));
    }
    let mut epsilon = Vec::new();
    let mut log_r = Vec::new();
    for (&t, &r) in curve.t_grid.iter().zip(&curve.r_values) {
        let e = (t - t_max) / t_max;
        if e >= window.0 && e <= window.1 && r > 0.0 {
            epsilon.push(e);
            log_r.push(r.ln());
        }
    }
    if epsilon.len() < 3 {
        return Err(CritError::InvalidInput(format!(
            "only {} grid points with positive response in the epsilon window",
            epsilon.len()
        )));
    }
    let log_e: Vec<f64> = epsilon.iter().map(|e| e.ln()).collect();
    let fit = linear_fit(&log_e, &log_r).ok_or_else(|| CritError::Degenerate("epsilon window has one distinct point".into()))?;
    Ok(CriticalExponent {
        t_max,
        exponent: fit.slope,
        std_error: fit.slope_std_error,
        epsilon,
        log_r,
    })
}

/// Locates the peak, then fits the default `ε` window.
pub fn critical_exponent(curve: &ResponseCurve) -> Result<CriticalExponent> {
    let peak = find_t_max(curve)?;
    if peak.at_boundary {
        return Err(CritError::PeakAtBoundary { t: peak.t_max });
    }
    critical_exponent_at(curve, peak.t_max, DEFAULT_EPSILON_WINDOW)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPeak {
    /// Index of the last row in the window.
    pub window_end: usize,
    /// Absent for windows with a single configuration.
    pub t_max: Option<f64>,
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlidingSeries {
    pub window: usize,
    pub step: usize,
    pub points: Vec<WindowPeak>,
}

impl SlidingSeries {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["window_end", "t_max"])?;
        for p in &self.points {
            w.write_record([p.window_end.to_string(), p.t_max.map(|t| t.to_string()).unwrap_or_default()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default window length `2^(N+2)`.
pub fn default_window(n: usize) -> usize {
    1usize << (n + 2).min(62)
}

pub fn sliding_tmax(data: &BinaryMatrix, window: usize, step: usize, t_grid: &[f64]) -> Result<SlidingSeries> {
    if window < 2 || step == 0 {
        return Err(CritError::param("window/step", "window must be at least 2 and step at least 1"));
    }
    if data.rows() < window {
        return Err(CritError::InsufficientRows {
            needed: window,
            got: data.rows(),
        });
    }
    let starts: Vec<usize> = (0..=data.rows() - window).step_by(step).collect();
    let points = starts
        .par_iter()
        .map(|&start| -> Result<WindowPeak> {
            let dist = empirical_distribution(&data.window(start, start + window))?;
            let curve = response_function(&dist, t_grid, ResponseEstimator::default())?;
            let window_end = start + window - 1;
            if curve.degenerate {
                return Ok(WindowPeak {
                    window_end,
                    t_max: None,
                    at_boundary: false,
                });
            }
            let peak = find_t_max(&curve)?;
            Ok(WindowPeak {
                window_end,
                t_max: Some(peak.t_max),
                at_boundary: peak.at_boundary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlidingSeries { window, step, points })
}

/// Sum of prices across entities at each time, rescaled to `[0, 1]`.
///
/// A convenience overlay for the sliding series; constant sums map to 0.
pub fn normalized_index_sum(prices: &PriceSeries) -> Vec<f64> {
    let sums: Vec<f64> = (0..prices.rows())
        .map(|t| (0..prices.cols()).map(|i| prices.get(t, i)).sum())
        .collect();
    let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    sums.iter()
        .map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 0.0 })
        .collect()
}
