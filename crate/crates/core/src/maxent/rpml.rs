//! Regularized pseudo-maximum-likelihood inference of couplings and fields.
//!
//! The pseudo-likelihood is a sum of per-entity logistic regressions of
//! `s_i` on the other spins, so each entity's row of `J` and its field are
//! fitted independently; the rows are symmetrized at the end.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::PairwiseModel;
use crate::error::{CritError, Result};
use crate::ingest::BinaryMatrix;

pub const DEFAULT_LAMBDA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpmlOptions {
    /// Weight of the squared l2 penalty on all parameters.
    pub lambda: f64,
    /// Convergence threshold on the gradient max-norm.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RpmlOptions {
    fn default() -> Self {
        RpmlOptions {
            lambda: DEFAULT_LAMBDA,
            tolerance: 1e-6,
            max_iterations: 10_000,
        }
    }
}

/// `-ln(1 + e^{-x})` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Objective `PL(θ) − λ‖θ‖²` over distinct observed configurations.
///
/// Parameters are laid out as a flat vector: the `n x n` coupling matrix
/// row-major (diagonal entries are not parameters and stay 0), then `n` fields.
#[derive(Debug, Clone)]
pub struct PseudoLikelihood {
    n: usize,
    patterns: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl PseudoLikelihood {
    pub fn new(data: &BinaryMatrix) -> Result<Self> {
        if data.rows() < 10 {
            return Err(CritError::InsufficientRows {
                needed: 10,
                got: data.rows(),
            });
        }
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        let mut rows: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for (row, code) in data.iter_rows().zip(data.codes()) {
            *counts.entry(code).or_insert(0) += 1;
            rows.entry(code)
                .or_insert_with(|| row.iter().map(|&s| f64::from(s)).collect());
        }
        let m = data.rows() as f64;
        Ok(PseudoLikelihood {
            n: data.cols(),
            patterns: rows.into_values().collect(),
            weights: counts.into_values().map(|c| c as f64 / m).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parameter_len(&self) -> usize {
        self.n * self.n + self.n
    }

    fn field(&self, theta: &[f64], s: &[f64], i: usize) -> f64 {
        let n = self.n;
        let row = &theta[i * n..(i + 1) * n];
        let mut h = theta[n * n + i];
        for (k, (&j, &x)) in row.iter().zip(s).enumerate() {
            if k != i {
                h += j * x;
            }
        }
        h
    }

    fn penalty_terms<'a>(&self, theta: &'a [f64]) -> impl Iterator<Item = (usize, f64)> + 'a {
        let n = self.n;
        theta
            .iter()
            .copied()
            .enumerate()
            .filter(move |&(k, _)| k >= n * n || k / n != k % n)
    }

    pub fn objective(&self, theta: &[f64], lambda: f64) -> f64 {
        let mut pl = 0.0;
        for (s, w) in self.patterns.iter().zip(&self.weights) {
            for i in 0..self.n {
                pl += w * log_sigmoid(2.0 * s[i] * self.field(theta, s, i));
            }
        }
        pl - lambda * self.penalty_terms(theta).map(|(_, v)| v * v).sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64], lambda: f64) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0; self.parameter_len()];
        for (s, w) in self.patterns.iter().zip(&self.weights) {
            for i in 0..n {
                let r = w * (s[i] - self.field(theta, s, i).tanh());
                for k in 0..n {
                    if k != i {
                        g[i * n + k] += r * s[k];
                    }
                }
                g[n * n + i] += r;
            }
        }
        for (k, v) in self.penalty_terms(theta) {
            g[k] -= 2.0 * lambda * v;
        }
        g
    }

    /// Design vector for entity `i`: the other spins followed by a constant 1.
    fn design(&self, s: &[f64], i: usize) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        let mut c = 0;
        for (k, &v) in s.iter().enumerate() {
            if k != i {
                x[c] = v;
                c += 1;
            }
        }
        x[self.n - 1] = 1.0;
        x
    }

    /// Per-entity objective, gradient and negated Hessian at `x`.
    fn node_terms(&self, i: usize, x: &DVector<f64>, lambda: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
        let d = self.n;
        let mut f = 0.0;
        let mut g = DVector::zeros(d);
        let mut a = DMatrix::zeros(d, d);
        for (s, w) in self.patterns.iter().zip(&self.weights) {
            let phi = self.design(s, i);
            let h = phi.dot(x);
            let th = h.tanh();
            f += w * log_sigmoid(2.0 * s[i] * h);
            g.axpy(w * (s[i] - th), &phi, 1.0);
            a.ger(w * (1.0 - th * th), &phi, &phi, 1.0);
        }
        f -= lambda * x.norm_squared();
        g.axpy(-2.0 * lambda, x, 1.0);
        for k in 0..d {
            a[(k, k)] += 2.0 * lambda;
        }
        (f, g, a)
    }

    fn node_objective(&self, i: usize, x: &DVector<f64>, lambda: f64) -> f64 {
        self.patterns
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * log_sigmoid(2.0 * s[i] * self.design(s, i).dot(x)))
            .sum::<f64>()
            - lambda * x.norm_squared()
    }

    /// Damped Newton ascent with Armijo backtracking for one entity.
    fn fit_node(&self, i: usize, opts: &RpmlOptions) -> Result<DVector<f64>> {
        let mut x = DVector::zeros(self.n);
        for _ in 0..opts.max_iterations {
            let (f, g, a) = self.node_terms(i, &x, opts.lambda);
            if g.amax() < opts.tolerance {
                return Ok(x);
            }
            let dir = match a.cholesky() {
                Some(ch) => ch.solve(&g),
                None => g.clone(),
            };
            let slope = g.dot(&dir);
            let mut step = 1.0;
            loop {
                let trial = &x + &dir * step;
                if self.node_objective(i, &trial, opts.lambda) >= f + 1e-4 * step * slope || step < 1e-12 {
                    x = trial;
                    break;
                }
                step *= 0.5;
            }
        }
        let (_, g, _) = self.node_terms(i, &x, opts.lambda);
        if g.amax() < opts.tolerance {
            return Ok(x);
        }
        Err(CritError::NonConvergence {
            iterations: opts.max_iterations,
            gradient_norm: g.amax(),
        })
    }

    /// Maximizes the regularized objective; returns the flat parameter vector
    /// before symmetrization.
    pub fn maximize(&self, opts: &RpmlOptions) -> Result<Vec<f64>> {
        if !(opts.lambda >= 0.0 && opts.lambda.is_finite()) {
            return Err(CritError::param("lambda", "must be non-negative"));
        }
        let n = self.n;
        let rows: Vec<DVector<f64>> = (0..n)
            .into_par_iter()
            .map(|i| self.fit_node(i, opts))
            .collect::<Result<_>>()?;
        let mut theta = vec![0.0; self.parameter_len()];
        for (i, x) in rows.iter().enumerate() {
            let mut c = 0;
            for k in 0..n {
                if k != i {
                    theta[i * n + k] = x[c];
                    c += 1;
                }
            }
            theta[n * n + i] = x[n - 1];
        }
        Ok(theta)
    }
}

/// Infers a pairwise model with `J` symmetrized as `(J + Jᵀ)/2`.
pub fn rpml_infer(data: &BinaryMatrix, opts: &RpmlOptions) -> Result<PairwiseModel> {
    let pl = PseudoLikelihood::new(data)?;
    let theta = pl.maximize(opts)?;
    let n = pl.n;
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = 0.5 * (theta[a * n + b] + theta[b * n + a]);
            j[a * n + b] = v;
            j[b * n + a] = v;
        }
    }
    PairwiseModel::new(n, j, theta[n * n..].to_vec())
}
