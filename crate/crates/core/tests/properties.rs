use nalgebra::{DMatrix, DVector};
use ou_pacbayes::bounds::{
    discrepancy_d, discrepancy_d_tilde, finetune_bound, kl_upper_bound_trace, mcallester_bound, theorem_complexity,
    DomainPair, SampleSpec,
};
use ou_pacbayes::gaussian::{kl_divergence, stationary_covariance, GaussianMeasure};
use ou_pacbayes::linalg::{
    random_orthogonal, random_spd, solve_continuous_lyapunov, solve_discrete_stein, SpdMatrix, Strictness,
    SymmetricMatrix,
};
use ou_pacbayes::seed::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian(dim: usize, seed: u64) -> GaussianMeasure {
    let mut rng = rng_from_seed(seed ^ 0xABCD);
    let mean = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    GaussianMeasure::new(mean, random_spd(dim, 0.2, 5.0, seed).unwrap()).unwrap()
}

fn pair(dim: usize, seed: u64) -> DomainPair {
    let mut rng = rng_from_seed(seed ^ 0x1234);
    let shift = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    DomainPair::new(
        random_spd(dim, 0.2, 5.0, seed).unwrap(),
        random_spd(dim, 0.2, 5.0, seed.wrapping_add(1)).unwrap(),
        shift,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_residual_and_spd(dim in 1usize..12, seed in any::<u64>()) {
        let a = random_spd(dim, 0.1, 10.0, seed).unwrap();
        let q = random_spd(dim, 0.1, 10.0, seed.wrapping_add(7)).unwrap();
        let x = solve_continuous_lyapunov(&a, q.symmetric()).unwrap();
        let res = a.as_matrix() * x.as_matrix() + x.as_matrix() * a.as_matrix() - q.as_matrix();
        prop_assert!(res.norm() <= 1e-10 * (1.0 + q.as_matrix().norm()));
        prop_assert!(SpdMatrix::new(x, Strictness::Strict).is_ok());
    }

    #[test]
    fn stein_residual(dim in 1usize..9, seed in any::<u64>(), radius in 0.05f64..0.95) {
        let mut rng = rng_from_seed(seed);
        let u = random_orthogonal(dim, &mut rng);
        let diag = DVector::from_fn(dim, |_, _| radius * rng.random_range(-1.0..1.0));
        let m = &u * DMatrix::from_diagonal(&diag);
        let q = random_spd(dim, 0.1, 2.0, seed.wrapping_add(3)).unwrap();
        let x = solve_discrete_stein(&m, q.symmetric()).unwrap();
        let res = x.as_matrix() - &m * x.as_matrix() * m.transpose() - q.as_matrix();
        prop_assert!(res.norm() <= 1e-10 * (1.0 + q.as_matrix().norm()));
        prop_assert!(SpdMatrix::new(x, Strictness::Strict).is_ok());
    }

    #[test]
    fn stationary_covariance_scales_linearly(dim in 1usize..6, seed in any::<u64>(), k in 0.1f64..10.0) {
        let a = random_spd(dim, 0.5, 4.0, seed).unwrap();
        let c = random_spd(dim, 0.5, 4.0, seed.wrapping_add(1)).unwrap();
        let base = stationary_covariance(&a, &c, 0.01, 4).unwrap();
        let scaled = stationary_covariance(&a, &c, 0.01 * k, 4).unwrap();
        let diff = scaled.as_matrix() - base.as_matrix() * k;
        prop_assert!(diff.norm() <= 1e-10 * k * base.frobenius_norm());
        let batch = stationary_covariance(&a, &c, 0.01, 8).unwrap();
        prop_assert!((batch.as_matrix() * 2.0 - base.as_matrix()).norm() <= 1e-10 * base.frobenius_norm());
    }

    #[test]
    fn trace_identity(dim in 1usize..8, seed in any::<u64>()) {
        let a = random_spd(dim, 0.2, 5.0, seed).unwrap();
        let c = random_spd(dim, 0.2, 5.0, seed.wrapping_add(1)).unwrap();
        let (lr, batch) = (0.05, 2);
        let sigma = stationary_covariance(&a, &c, lr, batch).unwrap();
        let expected = 0.5 * lr / batch as f64 * a.solve(c.as_matrix()).unwrap().trace();
        prop_assert!((sigma.trace() - expected).abs() <= 1e-10 * expected);
        let sigma = SpdMatrix::new(sigma, Strictness::Strict).unwrap();
        let kl = kl_divergence(
            &GaussianMeasure::new(DVector::zeros(dim), sigma.clone()).unwrap(),
            &GaussianMeasure::standard(dim),
        ).unwrap();
        let traced = kl_upper_bound_trace(&a, &c, lr, batch, &sigma).unwrap();
        prop_assert!((kl - traced).abs() <= 1e-10 * kl.abs().max(1.0));
    }

    #[test]
    fn kl_nonnegative_and_zero_on_diagonal(dim in 1usize..8, s1 in any::<u64>(), s2 in any::<u64>()) {
        let q = gaussian(dim, s1);
        let p = gaussian(dim, s2);
        prop_assert!(kl_divergence(&q, &p).unwrap() >= 0.0);
        prop_assert!(kl_divergence(&q, &q).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn discrepancy_is_twice_kl(dim in 1usize..8, seed in any::<u64>()) {
        let p = pair(dim, seed);
        let q_ft = GaussianMeasure::new(p.shift().clone(), p.sigma_ft().clone()).unwrap();
        let q_pt = GaussianMeasure::new(DVector::zeros(dim), p.sigma_pt().clone()).unwrap();
        let kl = kl_divergence(&q_ft, &q_pt).unwrap();
        prop_assert!((discrepancy_d(&p) - 2.0 * kl).abs() <= 1e-10 * kl.max(1.0));
    }

    #[test]
    fn theorem_form_matches_mcallester_at_half(kl in 0.0f64..50.0, n in 2u64..1_000_000, delta in 0.001f64..1.0) {
        let spec = SampleSpec::new(n, delta).unwrap();
        let a = theorem_complexity(2.0 * kl, &spec);
        let b = mcallester_bound(kl, &spec).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn bound_monotone(kl in 0.0f64..50.0, n in 2u64..100_000, delta in 0.001f64..0.5) {
        let spec = SampleSpec::new(n, delta).unwrap();
        let b = mcallester_bound(kl, &spec).unwrap();
        prop_assert!(mcallester_bound(kl + 1.0, &spec).unwrap() > b);
        prop_assert!(mcallester_bound(kl, &SampleSpec::new(n + 1, delta).unwrap()).unwrap() < b);
        prop_assert!(mcallester_bound(kl, &SampleSpec::new(n, delta / 2.0).unwrap()).unwrap() > b);
    }

    #[test]
    fn finetune_bound_uses_discrepancy(dim in 1usize..6, seed in any::<u64>()) {
        let p = pair(dim, seed);
        let spec = SampleSpec::new(1000, 0.05).unwrap();
        let report = finetune_bound(&p, &spec).unwrap();
        prop_assert_eq!(report.kl_term, discrepancy_d(&p));
        prop_assert_eq!(report.complexity_term, theorem_complexity(report.kl_term, &spec));
        prop_assert!(discrepancy_d_tilde(&p).is_finite());
    }
}

#[test]
fn identical_domains_have_zero_discrepancy() {
    for dim in 1..=10 {
        let s = random_spd(dim, 0.1, 10.0, dim as u64).unwrap();
        let p = DomainPair::new(s.clone(), s, DVector::zeros(dim)).unwrap();
        assert!(discrepancy_d(&p).abs() < 1e-10);
    }
}

#[test]
fn complexity_decays_as_inverse_sqrt() {
    for n in [10_000u64, 100_000] {
        for kl in [0.0, 1.0, 5.0, 10.0] {
            let r = theorem_complexity(kl, &SampleSpec::new(4 * n, 0.05).unwrap())
                / theorem_complexity(kl, &SampleSpec::new(n, 0.05).unwrap());
            assert!((0.45..=0.60).contains(&r), "N={n} kl={kl} ratio={r}");
        }
    }
    let grid: Vec<u64> = (0..20).map(|k| (100.0 * 10f64.powf(k as f64 * 4.0 / 19.0)).round() as u64).collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&n| mcallester_bound(3.0, &SampleSpec::new(n, 0.05).unwrap()).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn semidefinite_noise_allowed_for_stationary_covariance() {
    let a = SpdMatrix::identity(2);
    let c = SpdMatrix::new(SymmetricMatrix::from_diagonal(&[1.0, 0.0]), Strictness::Semidefinite).unwrap();
    let s = stationary_covariance(&a, &c, 1.0, 1).unwrap();
    assert_eq!(s.as_matrix()[(0, 0)], 0.5);
    assert_eq!(s.as_matrix()[(1, 1)], 0.0);
}
