//! Asynchronous single-flip Glauber dynamics and two-replica overlap statistics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_t, raw_utility, PairwiseModel};
use crate::configdist::{find_t_max, Peak, ResponseCurve};
use crate::error::{CritError, Result};
use crate::ingest::{BinaryMatrix, Spin};
use crate::rng::{seeded_rng, task_rng, TaskRng};
use crate::significance::mean_std;

/// `W(-s_i | s_i) = ½ [1 − s_i tanh(field / t)]`.
pub fn flip_probability(spin: Spin, field: f64, t: f64) -> f64 {
    0.5 * (1.0 - f64::from(spin) * (field / t).tanh())
}

/// A single chain. Local fields are kept up to date on every accepted flip.
#[derive(Debug, Clone)]
pub struct GlauberChain<'m> {
    model: &'m PairwiseModel,
    t: f64,
    state: Vec<Spin>,
    fields: Vec<f64>,
    rng: TaskRng,
}

impl<'m> GlauberChain<'m> {
    /// Chain started from uniformly random spins.
    pub fn new(model: &'m PairwiseModel, t: f64, mut rng: TaskRng) -> Result<Self> {
        let state = (0..model.n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        Self::with_state(model, t, state, rng)
    }

    pub fn with_state(model: &'m PairwiseModel, t: f64, state: Vec<Spin>, rng: TaskRng) -> Result<Self> {
        check_t(t)?;
        if state.len() != model.n {
            return Err(CritError::ShapeMismatch("initial state length differs from model size".into()));
        }
        let fields = (0..model.n).map(|i| model.local_field(&state, i)).collect();
        Ok(GlauberChain {
            model,
            t,
            state,
            fields,
            rng,
        })
    }

    pub fn state(&self) -> &[Spin] {
        &self.state
    }

    /// One reversal attempt on a uniformly chosen entity.
    pub fn attempt(&mut self) {
        let n = self.model.n;
        let i = self.rng.random_range(0..n);
        let w = flip_probability(self.state[i], self.fields[i], self.t);
        let x: f64 = self.rng.random();
        if w > x {
            let ds = -2.0 * f64::from(self.state[i]);
            self.state[i] = -self.state[i];
            let j = &self.model.j;
            for (k, f) in self.fields.iter_mut().enumerate() {
                *f += j[k * n + i] * ds;
            }
        }
    }

    /// One Monte Carlo step: `N` reversal attempts.
    pub fn step(&mut self) {
        for _ in 0..self.model.n {
            self.attempt();
        }
    }
}

/// Recorded configurations of an equilibrated chain, one per MCS.
#[derive(Debug, Clone)]
pub struct McmcRun {
    pub model: PairwiseModel,
    pub t: f64,
    pub n_equil: usize,
    pub n_record: usize,
    pub seed: u64,
    pub spins: BinaryMatrix,
}

fn run_chain(model: &PairwiseModel, t: f64, n_equil: usize, n_record: usize, rng: TaskRng) -> Result<BinaryMatrix> {
    if n_equil == 0 || n_record == 0 {
        return Err(CritError::param("n_equil/n_record", "must be at least 1"));
    }
    let mut chain = GlauberChain::new(model, t, rng)?;
    for _ in 0..n_equil {
        chain.step();
    }
    let mut spins = Vec::with_capacity(n_record * model.n);
    for _ in 0..n_record {
        chain.step();
        spins.extend_from_slice(chain.state());
    }
    let labels = (0..model.n).map(|i| format!("s{i}")).collect();
    BinaryMatrix::from_flat(labels, None, n_record, model.n, spins)
}

/// Equilibrates for `n_equil` MCS from a random start, then records `n_record` MCS.
pub fn glauber_simulate(
    model: &PairwiseModel,
    t: f64,
    n_equil: usize,
    n_record: usize,
    seed: u64,
) -> Result<McmcRun> {
    let spins = run_chain(model, t, n_equil, n_record, seeded_rng(seed))?;
    Ok(McmcRun {
        model: model.clone(),
        t,
        n_equil,
        n_record,
        seed,
        spins,
    })
}

/// `q = N^-1 Σ_i s_i^(1) s_i^(2)` per recorded step.
pub fn overlap_series(a: &BinaryMatrix, b: &BinaryMatrix) -> Result<Vec<f64>> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(CritError::ShapeMismatch("replicas differ in shape".into()));
    }
    let n = a.cols() as f64;
    Ok(a.iter_rows()
        .zip(b.iter_rows())
        .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| f64::from(p * q)).sum::<f64>() / n)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapParams {
    pub n_equil: usize,
    pub n_record: usize,
    pub seed: u64,
}

/// Overlap and log-likelihood variances across a temperature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStudy {
    pub t_grid: Vec<f64>,
    pub mean_q: Vec<f64>,
    /// `R_Q(T) = Var(q)`.
    pub var_q: Vec<f64>,
    /// `R_U(T) = Var(U) / T^2` from the first replica.
    pub r_u: Vec<f64>,
    pub mean_abs_m: Vec<f64>,
    /// A replica never changed configuration during recording.
    pub frozen: Vec<bool>,
    pub q_peak: Option<Peak>,
    pub u_peak: Option<Peak>,
}

fn variance(xs: &[f64]) -> f64 {
    let (_, sd) = mean_std(xs);
    sd * sd
}

fn is_frozen(data: &BinaryMatrix) -> bool {
    let first = data.row(0);
    data.iter_rows().all(|r| r == first)
}

/// Runs two independently seeded replicas at each temperature.
pub fn overlap_variance(model: &PairwiseModel, t_grid: &[f64], params: OverlapParams) -> Result<OverlapStudy> {
    if t_grid.is_empty() {
        return Err(CritError::param("t_grid", "empty grid"));
    }
    if params.n_record < 2 {
        return Err(CritError::param("n_record", "need at least two recorded steps"));
    }
    type Row = (f64, f64, f64, f64, bool);
    let rows: Vec<Row> = t_grid
        .par_iter()
        .enumerate()
        .map(|(k, &t)| -> Result<Row> {
            let a = run_chain(model, t, params.n_equil, params.n_record, task_rng(params.seed, 2 * k as u64))?;
            let b = run_chain(model, t, params.n_equil, params.n_record, task_rng(params.seed, 2 * k as u64 + 1))?;
            let q = overlap_series(&a, &b)?;
            let u: Vec<f64> = a.iter_rows().map(|s| raw_utility(model, s)).collect();
            let (mean_q, _) = mean_std(&q);
            let abs_m = a
                .iter_rows()
                .map(|s| s.iter().map(|&x| f64::from(x)).sum::<f64>().abs() / model.n as f64)
                .sum::<f64>()
                / a.rows() as f64;
            Ok((mean_q, variance(&q), variance(&u) / (t * t), abs_m, is_frozen(&a) || is_frozen(&b)))
        })
        .collect::<Result<_>>()?;
    let peak_of = |values: Vec<f64>| -> Option<Peak> {
        let curve = ResponseCurve {
            t_grid: t_grid.to_vec(),
            s_values: vec![0.0; values.len()],
            degenerate: values.iter().all(|&v| v == 0.0),
            r_values: values,
        };
        find_t_max(&curve).ok()
    };
    let var_q: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let r_u: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(OverlapStudy {
        t_grid: t_grid.to_vec(),
        mean_q: rows.iter().map(|r| r.0).collect(),
        q_peak: peak_of(var_q.clone()),
        u_peak: peak_of(r_u.clone()),
        var_q,
        r_u,
        mean_abs_m: rows.iter().map(|r| r.3).collect(),
        frozen: rows.iter().map(|r| r.4).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::sk_model;

    #[test]
    fn flip_probability_values() {
        assert_eq!(flip_probability(1, 0.0, 1.0), 0.5);
        assert!((flip_probability(1, 1.0, 1.0) - 0.5 * (1.0 - 1f64.tanh())).abs() < 1e-15);
        assert!((flip_probability(-1, 1.0, 1.0) - 0.5 * (1.0 + 1f64.tanh())).abs() < 1e-15);
    }

    #[test]
    fn run_shape_and_determinism() {
        let m = sk_model(5, 1).unwrap();
        let a = glauber_simulate(&m, 1.0, 10, 200, 42).unwrap();
        assert_eq!((a.spins.rows(), a.spins.cols()), (200, 5));
        let b = glauber_simulate(&m, 1.0, 10, 200, 42).unwrap();
        assert_eq!(a.spins, b.spins);
        assert!(glauber_simulate(&m, 1.0, 0, 10, 1).is_err());
        assert!(glauber_simulate(&m, 0.0, 1, 10, 1).is_err());
    }

    #[test]
    fn fields_stay_consistent() {
        let m = sk_model(6, 3).unwrap();
        let mut chain = GlauberChain::new(&m, 0.8, seeded_rng(5)).unwrap();
        for _ in 0..500 {
            chain.step();
        }
        for i in 0..6 {
            assert!((chain.fields[i] - m.local_field(chain.state(), i)).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_replicas_overlap_one() {
        let m = sk_model(6, 3).unwrap();
        let run = glauber_simulate(&m, 1.0, 10, 300, 9).unwrap();
        let q = overlap_series(&run.spins, &run.spins).unwrap();
        assert!(q.iter().all(|&v| v == 1.0));
        assert_eq!(variance(&q), 0.0);
    }
}
