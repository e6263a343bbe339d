//! Sampling significance in the `H[K]` vs `H[s]` plane.
//!
//! `H[s]` is the entropy of the empirical configuration frequencies and `H[K]`
//! the entropy of the number of times the configuration of a random sample
//! point was observed. `H[K]` grows with system size while the sample resolves
//! the distribution and falls once it becomes undersampled.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CritError, Result};
use crate::ingest::{random_subsets, BinaryMatrix};
use crate::rng::derive_seed;

/// Counts `m_k` of configurations observed exactly `k` times, with entropies in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingProfile {
    pub m: u64,
    pub multiplicities: BTreeMap<u64, u64>,
    pub h_s: f64,
    pub h_k: f64,
}

impl SamplingProfile {
    /// Builds the profile from per-configuration occurrence counts.
    pub fn from_counts(counts: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut multiplicities = BTreeMap::new();
        let mut m = 0u64;
        for c in counts {
            if c == 0 {
                continue;
            }
            *multiplicities.entry(c).or_insert(0) += 1;
            m += c;
        }
        if m == 0 {
            return Err(CritError::InsufficientRows { needed: 1, got: 0 });
        }
        let mut p = SamplingProfile {
            m,
            multiplicities,
            h_s: 0.0,
            h_k: 0.0,
        };
        (p.h_s, p.h_k) = entropy_pair(&p);
        Ok(p)
    }
}

pub fn multiplicities(data: &BinaryMatrix) -> Result<SamplingProfile> {
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for code in data.codes() {
        *counts.entry(code).or_insert(0) += 1;
    }
    SamplingProfile::from_counts(counts.into_values())
}

/// `H[s] = -sum_k (k m_k / M) ln(k / M)` and
/// `H[K] = H[s] - sum_k (k m_k / M) ln m_k`.
pub fn entropy_pair(profile: &SamplingProfile) -> (f64, f64) {
    let m = profile.m as f64;
    let mut h_s = 0.0;
    let mut correction = 0.0;
    for (&k, &mk) in &profile.multiplicities {
        let (k, mk) = (k as f64, mk as f64);
        let w = k * mk / m;
        h_s -= w * (k / m).ln();
        correction += w * mk.ln();
    }
    let h_s = h_s.max(0.0);
    (h_s, (h_s - correction).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificancePoint {
    pub n: usize,
    pub subsets: usize,
    pub h_s_mean: f64,
    pub h_s_std: f64,
    pub h_k_mean: f64,
    pub h_k_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceCurve {
    pub m: usize,
    pub points: Vec<SignificancePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyUnit {
    Nats,
    Bits,
}

impl SignificanceCurve {
    pub fn write_csv<W: Write>(&self, writer: W, unit: EntropyUnit) -> Result<()> {
        let scale = match unit {
            EntropyUnit::Nats => 1.0,
            EntropyUnit::Bits => 1.0 / std::f64::consts::LN_2,
        };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "h_s_mean", "h_s_std", "h_k_mean", "h_k_std"])?;
        for p in &self.points {
            w.write_record([
                p.n.to_string(),
                (p.h_s_mean * scale).to_string(),
                (p.h_s_std * scale).to_string(),
                (p.h_k_mean * scale).to_string(),
                (p.h_k_std * scale).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Averages `(H[s], H[K])` over `n_subsets` random entity subsets per size
/// (all subsets when there are no more than `n_subsets`).
pub fn significance_curve(
    data: &BinaryMatrix,
    sizes: &[usize],
    n_subsets: usize,
    seed: u64,
) -> Result<SignificanceCurve> {
    if n_subsets == 0 {
        return Err(CritError::param("n_subsets", "must be positive"));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if let Some(&big) = sizes.last() {
        if big > data.cols() {
            return Err(CritError::param("sizes", format!("size {big} exceeds {} entities", data.cols())));
        }
    }
    let mut points = Vec::with_capacity(sizes.len());
    for n in sizes {
        let subsets = random_subsets(data.cols(), n, n_subsets, derive_seed(seed, n as u64))?;
        let pairs: Vec<(f64, f64)> = subsets
            .par_iter()
            .map(|cols| {
                let p = multiplicities(&data.select_columns(cols)?)?;
                Ok((p.h_s, p.h_k))
            })
            .collect::<Result<_>>()?;
        let hs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let hk: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let (h_s_mean, h_s_std) = mean_std(&hs);
        let (h_k_mean, h_k_std) = mean_std(&hk);
        points.push(SignificancePoint {
            n,
            subsets: subsets.len(),
            h_s_mean,
            h_s_std,
            h_k_mean,
            h_k_std,
        });
    }
    Ok(SignificanceCurve {
        m: data.rows(),
        points,
    })
}

/// Upper envelope of `H[K]` over the most-informative-sample family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformativeBound {
    pub m: usize,
    pub h_s: Vec<f64>,
    pub h_k: Vec<f64>,
}

impl InformativeBound {
    /// Coordinates of the envelope maximum.
    pub fn peak(&self) -> (f64, f64) {
        self.h_s
            .iter()
            .zip(&self.h_k)
            .fold((0.0, f64::NEG_INFINITY), |best, (&s, &k)| if k > best.1 { (s, k) } else { best })
    }
}

/// `(H[s], H[K])` of the relaxed family `m_k ∝ k^(-1-mu)` on `k = 1..=k_max`,
/// scaled so that `sum k m_k = M`.
pub fn family_point(m: usize, mu: f64, k_max: usize) -> (f64, f64) {
    let mf = m as f64;
    let weights: Vec<f64> = (1..=k_max).map(|k| (k as f64).powf(-1.0 - mu)).collect();
    let mass: f64 = weights.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum();
    let c = mf / mass;
    let mut h_s = 0.0;
    let mut corr = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let k = (i + 1) as f64;
        let mk = c * w;
        let pk = k * mk / mf;
        h_s -= pk * (k / mf).ln();
        corr += pk * mk.ln();
    }
    (h_s, h_s - corr)
}

/// Envelope of maximal `H[K]` at each requested `H[s]`.
///
/// The exact most-informative samples solve a variational problem; here the
/// power family `m_k ∝ k^(-1-mu)` (mu in [-1, 4]) with a support cutoff
/// `k_max` is relaxed to real `m_k`, `H[K]` is capped at `H[s]`, and the
/// envelope is the maximum over mu of each cutoff-parametrized branch.
pub fn theoretical_bound(m: usize, h_s_grid: &[f64]) -> Result<InformativeBound> {
    if m < 2 {
        return Err(CritError::param("m", "sample length must be at least 2"));
    }
    let ln_m = (m as f64).ln();
    let mut cutoffs: Vec<usize> = (0..=120)
        .map(|i| (ln_m * i as f64 / 120.0).exp().round() as usize)
        .map(|k| k.clamp(1, m))
        .collect();
    cutoffs.dedup();
    let mus: Vec<f64> = (0..=100).map(|i| -1.0 + 5.0 * i as f64 / 100.0).collect();
    let branches: Vec<Vec<(f64, f64)>> = mus
        .par_iter()
        .map(|&mu| {
            let mut pts: Vec<(f64, f64)> = cutoffs
                .iter()
                .map(|&k| {
                    let (s, h) = family_point(m, mu, k);
                    (s, h.min(s).max(0.0))
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts
        })
        .collect();

    let envelope_at = |h: f64| -> Option<f64> {
        let mut best: Option<f64> = None;
        for pts in &branches {
            for w in pts.windows(2) {
                let ((s0, k0), (s1, k1)) = (w[0], w[1]);
                if h >= s0 && h <= s1 {
                    let v = if s1 > s0 { k0 + (k1 - k0) * (h - s0) / (s1 - s0) } else { k0.max(k1) };
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        best
    };

    // anchors used for targets outside every branch's range
    let mut covered: Vec<(f64, f64)> = vec![(0.0, 0.0), (ln_m, 0.0)];
    let sweep: Vec<f64> = (1..400).map(|i| ln_m * i as f64 / 400.0).collect();
    for &h in &sweep {
        if let Some(v) = envelope_at(h) {
            covered.push((h, v));
        }
    }
    covered.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out_s = Vec::with_capacity(h_s_grid.len());
    let mut out_k = Vec::with_capacity(h_s_grid.len());
    for &h in h_s_grid {
        let v = if h <= 0.0 || h >= ln_m {
            0.0
        } else if let Some(v) = envelope_at(h) {
            v
        } else {
            let k = covered.partition_point(|p| p.0 <= h);
            let (a, b) = (covered[k - 1], covered[k.min(covered.len() - 1)]);
            if b.0 > a.0 {
                a.1 + (b.1 - a.1) * (h - a.0) / (b.0 - a.0)
            } else {
                a.1
            }
        };
        out_s.push(h);
        out_k.push(v.clamp(0.0, h.max(0.0)));
    }
    Ok(InformativeBound {
        m,
        h_s: out_s,
        h_k: out_k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Largest size whose mean point lies at or left of the `H[K]` maximum.
    pub n_max: usize,
    /// `H[K]` still increases at the largest tested size.
    pub beyond_tested: bool,
    pub peak_h_s: f64,
    pub peak_h_k: f64,
    /// Maximum of the most-informative envelope, when one was supplied.
    pub bound_peak: Option<(f64, f64)>,
    pub verdict: String,
}

pub fn undersampling_threshold(
    curve: &SignificanceCurve,
    bound: Option<&InformativeBound>,
) -> Result<ThresholdReport> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(CritError::param("curve", format!("need at least 3 sizes, got {}", pts.len())));
    }
    let k = pts
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.h_k_mean > pts[best].h_k_mean { i } else { best });
    let peak = pts[k];
    let beyond_tested = k == pts.len() - 1;
    let n_max = pts
        .iter()
        .filter(|p| p.h_s_mean <= peak.h_s_mean)
        .map(|p| p.n)
        .max()
        .unwrap_or(peak.n);
    let verdict = if beyond_tested {
        format!(
            "H[K] still increasing at N = {}: threshold beyond tested sizes",
            peak.n
        )
    } else {
        format!("correctly sampled up to N = {n_max}; H[K] decreases beyond this point")
    };
    Ok(ThresholdReport {
        n_max,
        beyond_tested,
        peak_h_s: peak.h_s_mean,
        peak_h_k: peak.h_k_mean,
        bound_peak: bound.map(InformativeBound::peak),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicity_examples() {
        // codes a, a, b, c
        let data = BinaryMatrix::from_rows(&[vec![1, 1], vec![1, 1], vec![-1, 1], vec![1, -1]]).unwrap();
        let p = multiplicities(&data).unwrap();
        assert_eq!(p.multiplicities, BTreeMap::from([(1, 2), (2, 1)]));
        assert!((p.h_s - 1.5 * 2f64.ln()).abs() < 1e-12);
        assert!((p.h_k - (1.5 * 2f64.ln() - 0.5 * 2f64.ln())).abs() < 1e-12);

        let same = BinaryMatrix::from_rows(&vec![vec![1, -1]; 6]).unwrap();
        let p = multiplicities(&same).unwrap();
        assert_eq!(p.multiplicities, BTreeMap::from([(6, 1)]));
        assert_eq!((p.h_s, p.h_k), (0.0, 0.0));

        let distinct = BinaryMatrix::from_rows(&[vec![1, 1], vec![1, -1], vec![-1, 1], vec![-1, -1]]).unwrap();
        let p = multiplicities(&distinct).unwrap();
        assert_eq!(p.multiplicities, BTreeMap::from([(1, 4)]));
        assert!((p.h_s - 4f64.ln()).abs() < 1e-12);
        assert!(p.h_k.abs() < 1e-12);
    }

    #[test]
    fn single_size_has_zero_std() {
        let data = BinaryMatrix::from_rows(&[vec![1, 1, -1], vec![1, -1, -1], vec![1, 1, -1]]).unwrap();
        let c = significance_curve(&data, &[3], 10, 1).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].subsets, 1);
        assert_eq!((c.points[0].h_s_std, c.points[0].h_k_std), (0.0, 0.0));
        assert!(significance_curve(&data, &[4], 10, 1).is_err());
    }

    #[test]
    fn bound_endpoints() {
        let m = 2300;
        let ln_m = (m as f64).ln();
        let b = theoretical_bound(m, &[0.0, ln_m]).unwrap();
        assert_eq!(b.h_k, vec![0.0, 0.0]);
        assert!(theoretical_bound(1, &[0.5]).is_err());
    }

    #[test]
    fn threshold_needs_three_sizes() {
        let c = SignificanceCurve {
            m: 10,
            points: vec![],
        };
        assert!(undersampling_threshold(&c, None).is_err());
    }

    #[test]
    fn threshold_on_hand_made_curve() {
        let mk = |n, s, k| SignificancePoint {
            n,
            subsets: 1,
            h_s_mean: s,
            h_s_std: 0.0,
            h_k_mean: k,
            h_k_std: 0.0,
        };
        let c = SignificanceCurve {
            m: 100,
            points: vec![mk(2, 1.0, 0.5), mk(3, 2.0, 1.5), mk(4, 3.0, 1.0)],
        };
        let r = undersampling_threshold(&c, None).unwrap();
        assert_eq!(r.n_max, 3);
        assert!(!r.beyond_tested);
        let c = SignificanceCurve {
            m: 100,
            points: vec![mk(2, 1.0, 0.5), mk(3, 2.0, 1.0), mk(4, 3.0, 1.5)],
        };
        let r = undersampling_threshold(&c, None).unwrap();
        assert!(r.beyond_tested);
        assert_eq!(r.n_max, 4);
    }
}
