//! Pairwise maximum-entropy (Ising-like) model
//! `p(s) ∝ exp(½ Σ_ij J_ij s_i s_j + Σ_i h_i s_i)`.

mod glauber;
mod rpml;

use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::configdist::ConfigDistribution;
use crate::error::{CritError, Result};
use crate::ingest::Spin;
use crate::rng::seeded_rng;

pub use glauber::{
    flip_probability, glauber_simulate, overlap_series, overlap_variance, GlauberChain, McmcRun, OverlapParams,
    OverlapStudy,
};
pub use rpml::{rpml_infer, PseudoLikelihood, RpmlOptions, DEFAULT_LAMBDA};

/// Largest system size enumerated exactly.
pub const MAX_ENUMERATION: usize = 20;
const SYMMETRY_TOL: f64 = 1e-12;

/// Couplings (row-major, symmetric, zero diagonal) and fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct PairwiseModel {
    n: usize,
    j: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    n: usize,
    j: Vec<f64>,
    h: Vec<f64>,
}

impl TryFrom<RawModel> for PairwiseModel {
    type Error = CritError;

    fn try_from(raw: RawModel) -> Result<Self> {
        PairwiseModel::new(raw.n, raw.j, raw.h)
    }
}

impl From<PairwiseModel> for RawModel {
    fn from(m: PairwiseModel) -> Self {
        RawModel { n: m.n, j: m.j, h: m.h }
    }
}

impl PairwiseModel {
    pub fn new(n: usize, j: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if j.len() != n * n || h.len() != n {
            return Err(CritError::ShapeMismatch(format!(
                "model with n = {n} needs {} couplings and {n} fields, got {} and {}",
                n * n,
                j.len(),
                h.len()
            )));
        }
        if j.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(CritError::InvalidInput("model parameters must be finite".into()));
        }
        for a in 0..n {
            if j[a * n + a] != 0.0 {
                return Err(CritError::InvalidInput(format!("J[{a}][{a}] must be 0")));
            }
            for b in a + 1..n {
                if (j[a * n + b] - j[b * n + a]).abs() > SYMMETRY_TOL {
                    return Err(CritError::InvalidInput(format!("J is not symmetric at ({a}, {b})")));
                }
            }
        }
        Ok(PairwiseModel { n, j, h })
    }

    /// Model with no couplings and no fields.
    pub fn zeros(n: usize) -> Self {
        PairwiseModel {
            n,
            j: vec![0.0; n * n],
            h: vec![0.0; n],
        }
    }

    /// Builds a model from `(i, j, J_ij)` edges; repeated edges accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], h: Vec<f64>) -> Result<Self> {
        let mut j = vec![0.0; n * n];
        for &(a, b, w) in edges {
            if a == b || a >= n || b >= n {
                return Err(CritError::param("edges", format!("invalid edge ({a}, {b})")));
            }
            j[a * n + b] += w;
            j[b * n + a] += w;
        }
        Self::new(n, j, h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.j[a * self.n + b]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.j
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    /// Same model with every parameter divided by `t`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(PairwiseModel {
            n: self.n,
            j: self.j.iter().map(|v| v / t).collect(),
            h: self.h.iter().map(|v| v / t).collect(),
        })
    }

    /// `Σ_j J_ij s_j + h_i`.
    pub fn local_field(&self, s: &[Spin], i: usize) -> f64 {
        let row = &self.j[i * self.n..(i + 1) * self.n];
        row.iter().zip(s).map(|(j, &x)| j * f64::from(x)).sum::<f64>() + self.h[i]
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(CritError::param("t", format!("temperature must be positive, got {t}")))
    }
}

fn check_config(model: &PairwiseModel, s: &[Spin]) -> Result<()> {
    if s.len() != model.n {
        return Err(CritError::ShapeMismatch(format!(
            "configuration of length {} for a model of size {}",
            s.len(),
            model.n
        )));
    }
    Ok(())
}

fn raw_utility(model: &PairwiseModel, s: &[Spin]) -> f64 {
    let n = model.n;
    let mut u = 0.0;
    for a in 0..n {
        let sa = f64::from(s[a]);
        for b in a + 1..n {
            u += model.j[a * n + b] * sa * f64::from(s[b]);
        }
        u += model.h[a] * sa;
    }
    u
}

/// `U(s) / t` with `U(s) = ½ Σ_ij J_ij s_i s_j + Σ_i h_i s_i`.
pub fn utility(model: &PairwiseModel, s: &[Spin], t: f64) -> Result<f64> {
    check_t(t)?;
    check_config(model, s)?;
    Ok(raw_utility(model, s) / t)
}

/// Utility of every configuration, indexed by code, via a Gray-code walk.
pub fn utility_table(model: &PairwiseModel) -> Result<Vec<f64>> {
    let n = model.n;
    if n > MAX_ENUMERATION {
        return Err(CritError::EnumerationBound { n, max: MAX_ENUMERATION });
    }
    let mut s: Vec<Spin> = vec![-1; n];
    let mut fields: Vec<f64> = (0..n).map(|i| model.local_field(&s, i)).collect();
    let mut u = raw_utility(model, &s);
    let mut table = vec![0.0; 1usize << n];
    let mut code = 0usize;
    table[0] = u;
    for step in 1..(1usize << n) {
        let k = step.trailing_zeros() as usize;
        let old = f64::from(s[k]);
        // U changes by -2 s_k (field_k) when s_k flips
        u -= 2.0 * old * fields[k];
        s[k] = -s[k];
        let ds = -2.0 * old;
        for (i, f) in fields.iter_mut().enumerate() {
            *f += model.j[i * n + k] * ds;
        }
        code ^= 1 << k;
        table[code] = u;
    }
    Ok(table)
}

/// Exact Gibbs distribution `e^{U(s)/t} / Z` over all `2^n` configurations.
pub fn exact_gibbs(model: &PairwiseModel, t: f64) -> Result<ConfigDistribution> {
    check_t(t)?;
    let table = utility_table(model)?;
    ConfigDistribution::from_log_weights(model.n, table.iter().enumerate().map(|(c, u)| (c as u64, u / t)))
}

/// `p(s_i | s_-i) = ½ [1 + s_i tanh((Σ_{j≠i} J_ij s_j + h_i) / t)]`.
pub fn conditional_prob(model: &PairwiseModel, s: &[Spin], i: usize, t: f64) -> Result<f64> {
    check_t(t)?;
    check_config(model, s)?;
    if i >= model.n {
        return Err(CritError::param("i", format!("entity {i} out of range")));
    }
    Ok(0.5 * (1.0 + f64::from(s[i]) * (model.local_field(s, i) / t).tanh()))
}

/// `√N ⟨(J_ij − J_ij^true)^2⟩^{1/2}` over pairs `i < j`.
pub fn reconstruction_error(estimate: &PairwiseModel, truth: &PairwiseModel) -> Result<f64> {
    if estimate.n != truth.n {
        return Err(CritError::ShapeMismatch(format!(
            "models of size {} and {}",
            estimate.n, truth.n
        )));
    }
    Ok(coupling_delta(estimate.n, &estimate.j, &truth.j))
}

fn coupling_delta(n: usize, a: &[f64], b: &[f64]) -> f64 {
    let pairs = n * (n.saturating_sub(1)) / 2;
    if pairs == 0 {
        return 0.0;
    }
    let mut ss = 0.0;
    for i in 0..n {
        for k in i + 1..n {
            ss += (a[i * n + k] - b[i * n + k]).powi(2);
        }
    }
    (n as f64).sqrt() * (ss / pairs as f64).sqrt()
}

/// Adds symmetric Gaussian noise to the couplings, rescaled so the
/// reconstruction error to the original is exactly `target_delta`.
pub fn perturb_model(model: &PairwiseModel, target_delta: f64, seed: u64) -> Result<PairwiseModel> {
    if !(target_delta >= 0.0 && target_delta.is_finite()) {
        return Err(CritError::param("target_delta", "must be non-negative"));
    }
    let n = model.n;
    if target_delta == 0.0 || n < 2 {
        return Ok(model.clone());
    }
    let mut rng = seeded_rng(seed);
    let mut noise = vec![0.0; n * n];
    for i in 0..n {
        for k in i + 1..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise[i * n + k] = z;
            noise[k * n + i] = z;
        }
    }
    let raw = coupling_delta(n, &noise, &vec![0.0; n * n]);
    let scale = target_delta / raw;
    let j = model.j.iter().zip(&noise).map(|(a, z)| a + scale * z).collect();
    PairwiseModel::new(n, j, model.h.clone())
}

/// Sherrington-Kirkpatrick couplings: i.i.d. `N(0, 1/n)` above the diagonal, no fields.
pub fn sk_model(n: usize, seed: u64) -> Result<PairwiseModel> {
    if n < 2 {
        return Err(CritError::param("n", "need at least two spins"));
    }
    let mut rng = seeded_rng(seed);
    let sd = 1.0 / (n as f64).sqrt();
    let mut j = vec![0.0; n * n];
    for i in 0..n {
        for k in i + 1..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            j[i * n + k] = sd * z;
            j[k * n + i] = sd * z;
        }
    }
    PairwiseModel::new(n, j, vec![0.0; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::decode_unchecked;

    fn pair(j12: f64) -> PairwiseModel {
        PairwiseModel::from_edges(2, &[(0, 1, j12)], vec![0.0; 2]).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(PairwiseModel::new(2, vec![0.0, 1.0, 0.5, 0.0], vec![0.0; 2]).is_err());
        assert!(PairwiseModel::new(2, vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 2]).is_err());
        assert!(PairwiseModel::new(2, vec![0.0; 3], vec![0.0; 2]).is_err());
        let m = pair(0.3);
        let mut buf = Vec::new();
        m.write_json(&mut buf).unwrap();
        assert_eq!(PairwiseModel::from_json(buf.as_slice()).unwrap(), m);
        let bad = r#"{"n":2,"j":[0,1,2,0],"h":[0,0]}"#;
        assert!(PairwiseModel::from_json(bad.as_bytes()).is_err());
    }

    #[test]
    fn utility_examples() {
        let z = PairwiseModel::zeros(3);
        assert_eq!(utility(&z, &[1, -1, 1], 1.0).unwrap(), 0.0);
        let m = pair(1.0);
        assert_eq!(utility(&m, &[1, 1], 1.0).unwrap(), 1.0);
        let m = PairwiseModel::from_edges(3, &[(0, 1, 0.7), (1, 2, -0.4)], vec![0.2, -0.1, 0.5]).unwrap();
        let s = [1, -1, 1];
        let u1 = utility(&m, &s, 1.0).unwrap();
        assert!((utility(&m, &s, 2.0).unwrap() - u1 / 2.0).abs() < 1e-15);
        assert!(utility(&m, &[1, 1], 1.0).is_err());
    }

    #[test]
    fn utility_table_matches_direct() {
        let m = sk_model(7, 5).unwrap();
        let table = utility_table(&m).unwrap();
        for code in 0..(1u64 << 7) {
            let s = decode_unchecked(code, 7);
            assert!((table[code as usize] - raw_utility(&m, &s)).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_examples() {
        let d = exact_gibbs(&PairwiseModel::zeros(1), 1.0).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        let d = exact_gibbs(&pair(1.0), 1.0).unwrap();
        let e = std::f64::consts::E;
        let expected = e / (2.0 * e + 2.0 / e);
        assert!((d.prob(0) - expected).abs() < 1e-15);
        assert!((d.prob(3) - expected).abs() < 1e-15);
        let hot = exact_gibbs(&sk_model(5, 1).unwrap(), 1e6).unwrap();
        assert!(hot.probs().iter().all(|p| (p - 1.0 / 32.0).abs() < 1e-6));
        let big = PairwiseModel::zeros(21);
        assert!(matches!(exact_gibbs(&big, 1.0), Err(CritError::EnumerationBound { .. })));
    }

    #[test]
    fn conditional_examples() {
        let z = PairwiseModel::zeros(3);
        assert_eq!(conditional_prob(&z, &[1, -1, 1], 1, 1.0).unwrap(), 0.5);
        let m = PairwiseModel::new(1, vec![0.0], vec![1.0]).unwrap();
        let p = conditional_prob(&m, &[1], 0, 1.0).unwrap();
        assert!((p - 0.5 * (1.0 + 1f64.tanh())).abs() < 1e-15);
        assert!((p - 0.880_797_077_977_882_3).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_examples() {
        let a = pair(0.3);
        assert_eq!(reconstruction_error(&a, &a).unwrap(), 0.0);
        let b = pair(0.4);
        let d = reconstruction_error(&a, &b).unwrap();
        assert!((d - 2f64.sqrt() * 0.1).abs() < 1e-12);
        assert_eq!(d, reconstruction_error(&b, &a).unwrap());
        assert!(reconstruction_error(&a, &PairwiseModel::zeros(3)).is_err());
    }

    #[test]
    fn perturbation_hits_target() {
        let m = sk_model(8, 2).unwrap();
        assert_eq!(perturb_model(&m, 0.0, 1).unwrap(), m);
        let p1 = perturb_model(&m, 0.015, 1).unwrap();
        let p2 = perturb_model(&m, 0.015, 2).unwrap();
        assert!((reconstruction_error(&p1, &m).unwrap() - 0.015).abs() < 1e-9);
        assert!((reconstruction_error(&p2, &m).unwrap() - 0.015).abs() < 1e-9);
        assert_ne!(p1, p2);
        assert_eq!(p1, perturb_model(&m, 0.015, 1).unwrap());
        assert_eq!(p1.fields(), m.fields());
    }

    #[test]
    fn sk_examples() {
        let m = sk_model(25, 9).unwrap();
        assert!((0..25).all(|i| m.coupling(i, i) == 0.0));
        assert_eq!(m, sk_model(25, 9).unwrap());
        let off: Vec<f64> = (0..25).flat_map(|i| (i + 1..25).map(move |k| (i, k))).map(|(i, k)| m.coupling(i, k)).collect();
        let mean = off.iter().sum::<f64>() / off.len() as f64;
        let var = off.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (off.len() - 1) as f64;
        assert!((var * 25.0 - 1.0).abs() < 0.2, "variance {var}");
    }

    #[test]
    fn temperature_equivalence() {
        let m = sk_model(6, 4).unwrap();
        let a = exact_gibbs(&m, 1.7).unwrap();
        let b = exact_gibbs(&m.scaled(1.7).unwrap(), 1.0).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
