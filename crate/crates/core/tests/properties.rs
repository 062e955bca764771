use delayfb_core::charfn::covariance::charfn_covariance;
use delayfb_core::dde::{ChiEvaluator, SummationMode};
use delayfb_core::trajectories::generate_path;
use delayfb_core::{Complex64, FeedbackConfig};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = FeedbackConfig> {
    (0.2..3.0f64, 0.0..1.5f64, -3.0..3.0f64, -1.0..1.0f64, 0.0..1.0f64, 0.3..=1.0f64)
        .prop_map(|(gamma, g, theta, phi, tau, eta)| FeedbackConfig::new(gamma, g, theta, phi, tau, eta).unwrap())
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.5..1.5f64, -1.5..1.5f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summation_modes_agree(cfg in config(), t in 0.0..6.0f64) {
        let cfg = cfg.with_tau(cfg.tau().max(0.1)).unwrap();
        let a = ChiEvaluator::new(cfg).chi(t).unwrap();
        let b = ChiEvaluator::new(cfg).with_mode(SummationMode::DirectKahan).chi(t).unwrap();
        // alternating terms cancel; measure against the sum of magnitudes
        let abs = FeedbackConfig::with_gain(cfg.gamma(), cfg.k().abs(), cfg.tau(), cfg.efficiency()).unwrap();
        let scale = ChiEvaluator::new(abs).chi(t).unwrap().max(1.0);
        prop_assert!((a - b).abs() <= 1e-11 * scale * (1.0 + t));
    }

    #[test]
    fn conjugate_symmetry(cfg in config(), a in complex(), b in complex(), lam in complex(), t in 0.0..2.0f64) {
        let fwd = charfn_covariance(lam, t, a, b, &cfg).unwrap().log_value;
        let back = charfn_covariance(-lam, t, b, a, &cfg).unwrap().log_value;
        prop_assert!((fwd.re - back.re).abs() < 1e-10);
        let dphase = (fwd.im + back.im).rem_euclid(std::f64::consts::TAU);
        prop_assert!(dphase < 1e-9 || std::f64::consts::TAU - dphase < 1e-9);
    }

    #[test]
    fn diagonal_charfn_bounded(cfg in config(), a in complex(), lam in complex(), t in 0.0..2.0f64) {
        let v = charfn_covariance(lam, t, a, a, &cfg).unwrap().value;
        prop_assert!(v.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn refinement_conserves_endpoint(seed in 0u64..1000, levels in 1usize..4) {
        let coarse = generate_path(seed, 0.01, 0.2).unwrap();
        let mut fine = coarse.clone();
        for _ in 0..levels {
            fine = fine.refine();
        }
        prop_assert!((fine.cumulative().last().unwrap() - coarse.cumulative().last().unwrap()).abs() < 1e-12);
    }
}
