use kstrip::binprocess::run_bin_process;
use kstrip::thresholds::{core_constants, supercritical_profile};

#[test]
fn heavy_degree_only_moves_by_removed_points() {
    let tr = run_bin_process(2000, 5200, 2, 0.1, 2000, 3, 3).unwrap();
    let mut prev = &tr.initial;
    for row in &tr.steps {
        let lost_bins = prev.n_hat - row.n_hat;
        assert!(lost_bins <= 1);
        // One point removed singly; a dying bin takes its remaining k-1 with it.
        let expected = if lost_bins == 1 { 1 + 1 } else { 1 };
        assert_eq!(prev.d_hat - row.d_hat, expected, "step {}", row.t);
        prev = row;
    }
    assert!((tr.steps.last().unwrap().n_hat as f64) < 0.1 * 2000.0);
}

#[test]
fn zeta_hat_drifts_down_roughly_linearly() {
    let tc = core_constants(3, 2).unwrap();
    let n = 1_000_000u64;
    let bins = (tc.alpha * n as f64).round() as u64;
    let points = (tc.zeta * bins as f64 * 1.01).round() as u64;
    for seed in 0..4u64 {
        let tr = run_bin_process(bins, points, 2, 0.1, n, 3, 40 + seed).unwrap();
        let z0 = tr.initial.zeta_hat.unwrap();
        let end = tr.tau_1.unwrap();
        let slopes: Vec<f64> = (10_000..=end)
            .step_by(10_000)
            .map(|t| {
                let dz = tr.steps[t - 1].zeta_hat.unwrap() - z0;
                assert!(dz < 0.0, "seed {seed}: zeta rose by t = {t}");
                dz / t as f64
            })
            .collect();
        let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(lo / hi <= 4.0, "seed {seed}: slopes span {lo:.3e}..{hi:.3e}");
    }
}

#[test]
fn theta_hat_crosses_zero_on_the_expected_scale() {
    let n = 200_000u64;
    let xi_prime = 0.01;
    let (c_rk, _) = kstrip::thresholds::core_threshold(3, 2).unwrap();
    let prof = supercritical_profile(c_rk + xi_prime, 3, 2).unwrap();
    let bins = (prof.alpha_c * n as f64).round() as u64;
    let points = (3.0 * prof.beta_c * n as f64).round() as u64;
    for seed in 0..5u64 {
        let tr = run_bin_process(bins, points, 2, 0.1, n, 3, 70 + seed).unwrap();
        assert!(tr.initial.theta_hat.unwrap() < 0.0);
        let t_star = tr
            .steps
            .iter()
            .find(|row| row.theta_hat.is_some_and(|th| th >= 0.0))
            .expect("no crossing")
            .t;
        let ratio = t_star as f64 / (n as f64 * xi_prime.sqrt());
        println!("seed {seed}: t* = {t_star}, ratio {ratio:.3}");
        assert!((0.05..=20.0).contains(&ratio), "ratio {ratio}");
    }
}
