use critscan::configdist::{default_t_grid, empirical_distribution, find_t_max, kld_at_peak, log_grid, response_function, ResponseEstimator};
use critscan::ingest::BinaryMatrix;
use critscan::ising::{benchmark_compare, critical_temperature, exact_response_curve, ising_model, LatticeSpec};
use critscan::maxent::{
    conditional_prob, exact_gibbs, glauber_simulate, overlap_variance, perturb_model, reconstruction_error, rpml_infer,
    sk_model, OverlapParams, RpmlOptions,
};
use critscan::PairwiseModel;
use critscan_testkit::{
    brute_force_gibbs, chi_square_pvalue, code_frequencies, fixture_generators, random_model, total_variation,
    FixtureKind, FixtureParams,
};

#[test]
fn glauber_matches_gibbs_in_total_variation() {
    for seed in 0..5 {
        let m = random_model(3, 0.0, 0.8, 0.6, seed);
        let run = glauber_simulate(&m, 1.0, 1000, 1_000_000, seed).unwrap();
        let tv = total_variation(&code_frequencies(&run.spins), &brute_force_gibbs(&m, 1.0));
        assert!(tv < 0.01, "seed {seed}: tv {tv}");
    }
}

#[test]
fn free_spins_are_uniform() {
    let m = PairwiseModel::zeros(3);
    let run = glauber_simulate(&m, 1.0, 10, 100_000, 5).unwrap();
    let mut counts = vec![0u64; 8];
    for c in run.spins.codes() {
        counts[c as usize] += 1;
    }
    assert!(chi_square_pvalue(&counts, &[0.125; 8]) > 0.01);
}

#[test]
fn independent_spin_means() {
    let h = [2.0, -1.0];
    let m = PairwiseModel::new(2, vec![0.0; 4], h.to_vec()).unwrap();
    let run = glauber_simulate(&m, 1.0, 100, 200_000, 8).unwrap();
    for (i, hi) in h.iter().enumerate() {
        let mean = run.spins.iter_rows().map(|r| f64::from(r[i])).sum::<f64>() / run.spins.rows() as f64;
        // consecutive MCS are correlated; bound the standard error by the i.i.d. value times 2
        let se = 2.0 * ((1.0 - hi.tanh().powi(2)) / run.spins.rows() as f64).sqrt();
        assert!((mean - hi.tanh()).abs() < 3.0 * se, "spin {i}: {mean} vs {}", hi.tanh());
    }
}

#[test]
fn conditional_matches_enumeration() {
    for seed in 0..10 {
        let m = random_model(3, 0.0, 1.0, 0.5, seed);
        let p = exact_gibbs(&m, 1.3).unwrap();
        for code in 0..8u64 {
            let s: Vec<i8> = (0..3).map(|i| if code >> i & 1 == 1 { 1 } else { -1 }).collect();
            for i in 0..3 {
                let other = code ^ (1 << i);
                let want = p.prob(code) / (p.prob(code) + p.prob(other));
                assert!((conditional_prob(&m, &s, i, 1.3).unwrap() - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn convergence_improves_with_chain_length() {
    let m = random_model(3, 0.1, 0.6, 0.4, 21);
    let exact = brute_force_gibbs(&m, 1.0);
    let tv = |len| total_variation(&code_frequencies(&glauber_simulate(&m, 1.0, 500, len, 4).unwrap().spins), &exact);
    let short = tv(10_000);
    let long = tv(1_000_000);
    assert!(long < short, "{short} -> {long}");
    assert!(long < 0.005);
}

#[test]
fn rpml_recovers_independent_fields() {
    let m = PairwiseModel::new(2, vec![0.0; 4], vec![1.0, -0.5]).unwrap();
    let data = glauber_simulate(&m, 1.0, 100, 100_000, 12).unwrap().spins;
    let fit = rpml_infer(&data, &RpmlOptions::default()).unwrap();
    for i in 0..2 {
        let mean = data.iter_rows().map(|r| f64::from(r[i])).sum::<f64>() / data.rows() as f64;
        assert!((fit.fields()[i] - mean.atanh()).abs() < 0.05);
    }
    assert!(fit.coupling(0, 1).abs() < 0.05);
}

#[test]
fn rpml_closed_loop() {
    let truth = sk_model(8, 3).unwrap();
    let data = glauber_simulate(&truth, 1.0, 1000, 50_000, 17).unwrap().spins;
    let fit = rpml_infer(&data, &RpmlOptions::default()).unwrap();
    let delta = reconstruction_error(&fit, &truth).unwrap();
    assert!(delta <= 0.05, "delta {delta}");
}

#[test]
fn reconstruction_error_examples() {
    let a = PairwiseModel::new(2, vec![0.0, 1.0, 1.0, 0.0], vec![0.0; 2]).unwrap();
    let b = PairwiseModel::new(2, vec![0.0, 1.1, 1.1, 0.0], vec![0.0; 2]).unwrap();
    assert!((reconstruction_error(&a, &b).unwrap() - 2f64.sqrt() * 0.1).abs() < 1e-12);
    let sk = sk_model(8, 1).unwrap();
    let p = perturb_model(&sk, 0.015, 2).unwrap();
    assert!((reconstruction_error(&p, &sk).unwrap() - 0.015).abs() < 1e-9);
}

#[test]
fn sk_coupling_variance() {
    let n = 25;
    let m = sk_model(n, 77).unwrap();
    let vals: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k))).map(|(i, k)| m.coupling(i, k)).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    assert!((var * n as f64 - 1.0).abs() < 0.2, "var {var}");
}

#[test]
fn free_overlap_variance_is_inverse_size() {
    let n = 10;
    let m = PairwiseModel::zeros(n);
    let grid = [0.5, 1.0, 3.0];
    let study = overlap_variance(&m, &grid, OverlapParams { n_equil: 10, n_record: 20_000, seed: 3 }).unwrap();
    for v in &study.var_q {
        assert!((v * n as f64 - 1.0).abs() < 0.1, "{v}");
    }
}

#[test]
fn hot_replicas_do_not_overlap() {
    let m = sk_model(8, 5).unwrap();
    let study = overlap_variance(&m, &[100.0], OverlapParams { n_equil: 100, n_record: 20_000, seed: 9 }).unwrap();
    // Var(q) ≈ 1/N at infinite temperature
    let se = (1.0 / 8.0 / 20_000f64).sqrt() * 3.0;
    assert!(study.mean_q[0].abs() < 3.0 * se, "{}", study.mean_q[0]);
}

#[test]
fn lattice_response_peak_from_simulation() {
    let spec = LatticeSpec::new(3).unwrap();
    let exact = critical_temperature(&spec, &log_grid(1.0, 5.0, 400).unwrap()).unwrap();
    let model = ising_model(&spec).unwrap();
    let grid = log_grid(1.6, 3.6, 21).unwrap();
    let study = overlap_variance(&model, &grid, OverlapParams { n_equil: 2000, n_record: 100_000, seed: 1 }).unwrap();
    let peak = study.u_peak.unwrap();
    assert!((peak.t_max - exact).abs() < 0.1, "{} vs {exact}", peak.t_max);
}

#[test]
fn lattice_curve_is_single_peaked() {
    let spec = LatticeSpec::new(3).unwrap();
    let grid = log_grid(0.5, 5.0, 300).unwrap();
    let c = exact_response_curve(&spec, &grid).unwrap();
    let k = c.r_values.iter().enumerate().fold(0, |b, (i, &v)| if v > c.r_values[b] { i } else { b });
    assert!(c.r_values[..=k].windows(2).all(|w| w[1] >= w[0]));
    assert!(c.r_values[k..].windows(2).all(|w| w[1] <= w[0]));
    let max_jump = c.r_values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    assert!(max_jump < 0.1 * c.r_values[k]);
}

#[test]
fn lattice_estimators_agree() {
    let spec = LatticeSpec::new(3).unwrap();
    let grid = log_grid(0.5, 5.0, 50).unwrap();
    let exact = exact_response_curve(&spec, &grid).unwrap();
    let dist = exact_gibbs(&ising_model(&spec).unwrap(), 1.0).unwrap();
    let fd = response_function(&dist, &grid, ResponseEstimator::default()).unwrap();
    for (a, b) in exact.r_values.iter().zip(&fd.r_values) {
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3), "{a} vs {b}");
    }
}

#[test]
fn sampled_lattice_locates_peak() {
    let params = FixtureParams { side: 3, t: 2.4, m: 100_000, n_equil: 1000, ..Default::default() };
    let data = fixture_generators(FixtureKind::IsingSampled, &params, 2).unwrap();
    let dist = empirical_distribution(&data).unwrap();
    // rescaling the sampled distribution by T moves the lattice to temperature 2.4 T
    let grid = log_grid(0.4, 2.5, 200).unwrap();
    let peak = find_t_max(&response_function(&dist, &grid, ResponseEstimator::default()).unwrap()).unwrap();
    let exact = critical_temperature(&LatticeSpec::new(3).unwrap(), &default_t_grid()).unwrap();
    assert!((2.4 * peak.t_max - exact).abs() < 0.2, "{}", 2.4 * peak.t_max);
}

#[test]
fn benchmark_ratio_closed_loop() {
    let spec = LatticeSpec::new(3).unwrap();
    let t_crit = critical_temperature(&spec, &log_grid(1.0, 5.0, 400).unwrap()).unwrap();
    let t_data = 1.1 * t_crit;
    let dist = exact_gibbs(&ising_model(&spec).unwrap(), t_data).unwrap();
    let peak = find_t_max(&response_function(&dist, &default_t_grid(), ResponseEstimator::default()).unwrap()).unwrap();
    let kld = kld_at_peak(&dist, peak.t_max).unwrap();
    let report = benchmark_compare(peak.t_max, kld, &spec, t_crit).unwrap();
    let ratio = report.ratio.unwrap();
    assert!((ratio - 1.0).abs() < 0.25, "ratio {ratio}");
}

#[test]
fn coin_fixture_is_near_uniform() {
    let data: BinaryMatrix = fixture_generators(FixtureKind::IndependentCoins, &FixtureParams::default(), 6).unwrap();
    let p = critscan::significance::multiplicities(&data).unwrap();
    assert!((p.h_s - 8.0 * 2f64.ln()).abs() < 0.02 * 8.0 * 2f64.ln());
    assert!(p.h_k < 0.5 * p.h_s);
}
