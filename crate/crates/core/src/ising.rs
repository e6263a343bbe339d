//! Exact finite-size reference: the periodic nearest-neighbour Ising model on
//! an `L x L` square lattice.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configdist::{find_t_max, kl_divergence, ResponseCurve};
use crate::error::{CritError, Result};
use crate::maxent::{exact_gibbs, utility_table, PairwiseModel, MAX_ENUMERATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub side: usize,
}

impl LatticeSpec {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(CritError::param("side", "lattice side must be at least 2"));
        }
        Ok(LatticeSpec { side })
    }

    pub fn n(&self) -> usize {
        self.side * self.side
    }

    /// Right and down neighbour of every site with wrap-around: `2 L^2` pairs.
    /// For `L = 2` each pair appears twice.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let l = self.side;
        let mut e = Vec::with_capacity(2 * l * l);
        for r in 0..l {
            for c in 0..l {
                let i = r * l + c;
                e.push((i, r * l + (c + 1) % l));
                e.push((i, ((r + 1) % l) * l + c));
            }
        }
        e
    }
}

/// `J_ij = 1` on lattice bonds, `h = 0`.
pub fn ising_model(spec: &LatticeSpec) -> Result<PairwiseModel> {
    let edges: Vec<(usize, usize, f64)> = spec.edges().into_iter().map(|(a, b)| (a, b, 1.0)).collect();
    PairwiseModel::from_edges(spec.n(), &edges, vec![0.0; spec.n()])
}

fn check_size(spec: &LatticeSpec) -> Result<()> {
    if spec.n() > MAX_ENUMERATION {
        return Err(CritError::EnumerationBound {
            n: spec.n(),
            max: MAX_ENUMERATION,
        });
    }
    Ok(())
}

/// `R(T) = Var_T(U) / T^2` and `S(T)` by exact enumeration.
pub fn exact_response_curve(spec: &LatticeSpec, t_grid: &[f64]) -> Result<ResponseCurve> {
    check_size(spec)?;
    if t_grid.iter().any(|&t| !(t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CritError::param("t_grid", "grid must be positive and ascending"));
    }
    let table = utility_table(&ising_model(spec)?)?;
    let u_max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let points: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|&t| {
            let w: Vec<f64> = table.iter().map(|u| ((u - u_max) / t).exp()).collect();
            let z: f64 = w.iter().sum();
            let (mut m1, mut m2, mut s) = (0.0, 0.0, 0.0);
            for (wi, u) in w.iter().zip(&table) {
                let p = wi / z;
                m1 += p * u;
                m2 += p * u * u;
                if p > 0.0 {
                    s -= p * p.ln();
                }
            }
            ((m2 - m1 * m1).max(0.0) / (t * t), s)
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

/// Location of the exact response peak.
pub fn critical_temperature(spec: &LatticeSpec, t_grid: &[f64]) -> Result<f64> {
    let peak = find_t_max(&exact_response_curve(spec, t_grid)?)?;
    if peak.at_boundary {
        return Err(CritError::PeakAtBoundary { t: peak.t_max });
    }
    Ok(peak.t_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KldCurve {
    pub t_crit: f64,
    pub x: Vec<f64>,
    pub kld: Vec<f64>,
}

impl KldCurve {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "kld"])?;
        for (x, d) in self.x.iter().zip(&self.kld) {
            w.write_record([x.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default offsets: 60 points in [-0.5, 0.5].
pub fn default_x_grid() -> Vec<f64> {
    (0..60).map(|k| -0.5 + k as f64 / 59.0).collect()
}

/// `D_KL(P_crit || P_crit^{1/(1+x)})` for each offset `x`.
pub fn kld_benchmark(spec: &LatticeSpec, t_crit: f64, x_grid: &[f64]) -> Result<KldCurve> {
    check_size(spec)?;
    if !(t_crit > 0.0) {
        return Err(CritError::param("t_crit", "must be positive"));
    }
    if let Some(&bad) = x_grid.iter().find(|&&x| 1.0 + x <= 0.0) {
        return Err(CritError::param("x", format!("1 + x must be positive, got x = {bad}")));
    }
    let p_crit = exact_gibbs(&ising_model(spec)?, t_crit)?;
    let kld = x_grid
        .par_iter()
        .map(|&x| kl_divergence(&p_crit, &p_crit.rescale(1.0 + x)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(KldCurve {
        t_crit,
        x: x_grid.to_vec(),
        kld,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub lattice_side: usize,
    pub t_crit: f64,
    pub empirical_t_max: f64,
    pub empirical_kld: f64,
    /// `x = (T_op − T_max) / T_op` with `T_op = 1`.
    pub x: f64,
    pub benchmark_kld: f64,
    /// `empirical / benchmark`; absent when the benchmark divergence is 0.
    pub ratio: Option<f64>,
}

/// Compares an empirical peak offset and divergence with the Ising reference
/// at the same relative offset.
pub fn benchmark_compare(
    empirical_t_max: f64,
    empirical_kld: f64,
    spec: &LatticeSpec,
    t_crit: f64,
) -> Result<BenchmarkReport> {
    let x = 1.0 - empirical_t_max;
    let curve = kld_benchmark(spec, t_crit, &[x])?;
    let benchmark_kld = curve.kld[0];
    Ok(BenchmarkReport {
        lattice_side: spec.side,
        t_crit,
        empirical_t_max,
        empirical_kld,
        x,
        benchmark_kld,
        ratio: (benchmark_kld > 0.0).then(|| empirical_kld / benchmark_kld),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configdist::default_t_grid;
    use crate::ingest::decode_unchecked;
    use crate::maxent::utility;

    #[test]
    fn lattice_edges() {
        let spec = LatticeSpec::new(3).unwrap();
        let edges = spec.edges();
        assert_eq!(edges.len(), 18);
        let mut degree = [0; 9];
        for (a, b) in &edges {
            degree[*a] += 1;
            degree[*b] += 1;
        }
        assert!(degree.iter().all(|&d| d == 4));
        let m = ising_model(&spec).unwrap();
        assert!(m.fields().iter().all(|&h| h == 0.0));
        assert_eq!(utility(&m, &[1; 9], 1.0).unwrap(), 18.0);
        assert_eq!(utility(&m, &[-1; 9], 1.0).unwrap(), 18.0);
        for l in 2..6 {
            assert_eq!(LatticeSpec::new(l).unwrap().edges().len(), 2 * l * l);
        }
        assert!(LatticeSpec::new(1).is_err());
    }

    #[test]
    fn ground_states_maximize_utility() {
        let m = ising_model(&LatticeSpec::new(3).unwrap()).unwrap();
        let table = utility_table(&m).unwrap();
        let max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, 18.0);
        let argmax: Vec<usize> = (0..table.len()).filter(|&c| table[c] == max).collect();
        assert_eq!(argmax, vec![0, 511]);
    }

    #[test]
    fn spin_flip_symmetry() {
        let m = ising_model(&LatticeSpec::new(3).unwrap()).unwrap();
        let d = exact_gibbs(&m, 2.0).unwrap();
        for code in 0..512u64 {
            let flipped = !code & 511;
            assert!((d.prob(code) - d.prob(flipped)).abs() < 1e-15);
            let _ = decode_unchecked(code, 9);
        }
    }

    #[test]
    fn hot_limit_and_bounds() {
        let spec = LatticeSpec::new(3).unwrap();
        let c = exact_response_curve(&spec, &[1e4]).unwrap();
        assert!(c.r_values[0] < 1e-6);
        assert!(exact_response_curve(&LatticeSpec::new(5).unwrap(), &default_t_grid()).is_err());
    }

    #[test]
    fn kld_curve_shape() {
        let spec = LatticeSpec::new(3).unwrap();
        let curve = kld_benchmark(&spec, 2.4, &default_x_grid()).unwrap();
        assert!(curve.kld.iter().all(|&d| d > 0.0));
        let zero = kld_benchmark(&spec, 2.4, &[0.0]).unwrap();
        assert_eq!(zero.kld[0], 0.0);
        assert!(kld_benchmark(&spec, 2.4, &[-1.0]).is_err());
        let r = benchmark_compare(1.0, 0.0, &spec, 2.4).unwrap();
        assert_eq!((r.x, r.benchmark_kld, r.ratio), (0.0, 0.0, None));
        let r = benchmark_compare(0.88, 0.07, &spec, 2.4).unwrap();
        assert!((r.x - 0.12).abs() < 1e-12);
        assert!(r.benchmark_kld > 0.0);
    }
}
