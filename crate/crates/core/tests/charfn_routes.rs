use delayfb_core::charfn::covariance::charfn_covariance;
use delayfb_core::charfn::{charfn_early, charfn_exact, charfn_small_tau, CharFnKernels};
use delayfb_core::{Complex64, FeedbackConfig};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn generic() -> FeedbackConfig {
    FeedbackConfig::new(1.0, 0.7, 1.1, 0.4, 0.3, 0.8).unwrap()
}

#[test]
fn single_integral_w_matches_nested_form() {
    let k = CharFnKernels::new(&generic());
    for &(u, t) in &[(0.5, 0.8), (1.3, 1.6), (1.7, 2.3)] {
        for &lam in &[c(0.6, -0.4), c(-1.0, 0.3)] {
            let a = k.w(lam, u, t).unwrap();
            let b = k.w_nested(lam, u, t).unwrap();
            assert!((a - b).norm() < 1e-8 * (1.0 + b.norm()), "u={u} t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn exact_matches_covariance() {
    let configs = [
        generic(),
        FeedbackConfig::new(1.0, 0.5, 0.3, -0.7, 0.0, 0.6).unwrap(),
        FeedbackConfig::with_gain(2.0, -0.4, 0.25, 1.0).unwrap(),
    ];
    let (alpha, beta) = (c(0.3, 0.5), c(-0.2, 0.4));
    for cfg in &configs {
        for &t in &[0.2, 0.45, 0.9, 1.7] {
            for &lam in &[c(0.5, 0.2), c(-0.3, 0.8)] {
                let a = charfn_exact(lam, t, alpha, beta, cfg).unwrap().log_value;
                let b = charfn_covariance(lam, t, alpha, beta, cfg).unwrap().log_value;
                assert!((a - b).norm() < 1e-8, "{cfg:?} t={t} lam={lam}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn early_matches_covariance_and_exact() {
    let cfg = generic();
    let (alpha, beta) = (c(0.1, -0.6), c(0.4, 0.2));
    let lam = c(0.7, -0.5);
    for &t in &[0.0, 0.1, 0.3, 0.45, 0.6] {
        let e = charfn_early(lam, t, alpha, beta, &cfg).unwrap().log_value;
        let v = charfn_covariance(lam, t, alpha, beta, &cfg).unwrap().log_value;
        let x = charfn_exact(lam, t, alpha, beta, &cfg).unwrap().log_value;
        assert!((e - v).norm() < 1e-10, "t={t}: {e} vs {v}");
        assert!((e - x).norm() < 1e-8, "t={t}: {e} vs {x}");
    }
    assert!(charfn_early(lam, 0.61, alpha, beta, &cfg).is_err());
}

#[test]
fn small_tau_error_is_second_order() {
    let (alpha, beta, lam, t) = (c(0.0, 1.0), c(0.0, 1.0), c(0.0, 2.0), 0.1);
    let err = |tau: f64| {
        let cfg = FeedbackConfig::with_gain(1.0, 0.5, tau, 0.7).unwrap();
        let a = charfn_small_tau(lam, t, alpha, beta, &cfg).unwrap().log_value;
        let b = charfn_exact(lam, t, alpha, beta, &cfg).unwrap().log_value;
        (a - b).norm()
    };
    let (e1, e2) = (err(0.005), err(0.0025));
    let ratio = e1 / e2;
    assert!((3.0..5.5).contains(&ratio), "ratio {ratio} ({e1}, {e2})");
}

#[test]
fn small_tau_reduces_to_exact_without_delay() {
    let cfg = FeedbackConfig::new(1.0, 0.6, 0.9, 0.0, 0.0, 0.5).unwrap();
    let (alpha, beta, lam) = (c(0.2, 0.3), c(-0.1, 0.5), c(0.4, -0.6));
    for &t in &[0.3, 1.2] {
        let a = charfn_small_tau(lam, t, alpha, beta, &cfg).unwrap().log_value;
        let b = charfn_covariance(lam, t, alpha, beta, &cfg).unwrap().log_value;
        assert!((a - b).norm() < 1e-10, "t={t}: {a} vs {b}");
    }
}

#[test]
fn small_tau_finite_at_sin_theta_zero() {
    let cfg = FeedbackConfig::new(1.0, 0.6, 0.0, 0.0, 0.01, 0.9).unwrap();
    let r = charfn_small_tau(c(0.3, 0.2), 0.5, c(0.1, 0.0), c(0.1, 0.0), &cfg).unwrap();
    assert!(r.log_value.re.is_finite() && r.log_value.im.is_finite());
    let off = FeedbackConfig::new(1.0, 0.6, 0.2, 0.3, 0.01, 0.9).unwrap();
    assert!(charfn_small_tau(c(0.3, 0.2), 0.5, c(0.1, 0.0), c(0.1, 0.0), &off).is_err());
}

#[test]
fn no_feedback_damped_oracle() {
    let cfg = FeedbackConfig::no_feedback(1.3).unwrap();
    let (alpha, beta, lam, t) = (c(0.4, -0.2), c(0.1, 0.3), c(0.6, 0.5), 0.8_f64);
    let e = (-0.65 * t).exp();
    let want =
        delayfb_core::charfn::log_displacement(lam * e, alpha, beta) - 0.5 * lam.norm_sqr() * (1.0 - (-1.3 * t).exp());
    let got = charfn_exact(lam, t, alpha, beta, &cfg).unwrap().log_value;
    assert!((got - want).norm() < 1e-10, "{got} vs {want}");
}

#[test]
fn conjugation_and_trace_preservation() {
    let cfg = generic();
    let (alpha, beta, lam, t) = (c(0.3, -0.1), c(-0.5, 0.2), c(0.4, 0.9), 1.4);
    let fwd = charfn_exact(lam, t, alpha, beta, &cfg).unwrap().value;
    let back = charfn_exact(-lam, t, beta, alpha, &cfg).unwrap().value;
    assert!((fwd - back.conj()).norm() < 1e-9 * fwd.norm());
    let zero = charfn_exact(c(0.0, 0.0), t, alpha, beta, &cfg).unwrap().log_value;
    let ov = delayfb_core::model::log_overlap(beta, alpha);
    assert!((zero - ov).norm() < 1e-12);
}

#[test]
fn continuity_at_two_tau() {
    let cfg = FeedbackConfig::with_gain(1.0, 0.4, 0.2, 0.9).unwrap();
    let (alpha, beta, lam) = (c(0.0, 0.8), c(0.0, -0.8), c(0.0, 1.6));
    let a = charfn_early(lam, 0.4, alpha, beta, &cfg).unwrap().log_value;
    let b = charfn_exact(lam, 0.4 + 1e-12, alpha, beta, &cfg).unwrap().log_value;
    assert!((a - b).norm() < 1e-8);
}

#[test]
fn long_horizon_stays_consistent() {
    let cfg = FeedbackConfig::with_gain(1.0, 0.3, 0.05, 0.8).unwrap();
    let (alpha, beta, lam) = (c(0.0, 0.5), c(0.0, -0.5), c(0.0, 1.0));
    let start = std::time::Instant::now();
    let a = charfn_exact(lam, 2.0, alpha, beta, &cfg).unwrap().log_value;
    let elapsed = start.elapsed();
    let b = charfn_covariance(lam, 2.0, alpha, beta, &cfg).unwrap().log_value;
    assert!((a - b).norm() < 1e-8, "{a} vs {b}");
    eprintln!("t/tau = 40 exact route: {elapsed:?}");
}

#[test]
fn coherence_curves_ordered_by_delay_and_efficiency() {
    use delayfb_core::charfn::coherence_curve;
    let a0 = c(0.0, 5.0);
    let at = |tau: f64, eta: f64, k: f64, t: f64| {
        coherence_curve(t, a0, &FeedbackConfig::with_gain(1.0, k, tau, eta).unwrap()).unwrap()
    };
    for &tau in &[0.0, 0.001, 0.01, 0.02] {
        assert!((at(tau, 1.0, 1.0, 0.0) - 1.0).abs() < 1e-12);
    }
    for i in 0..=12 {
        let t = 0.04 + 0.005 * i as f64;
        assert!(at(0.02, 1.0, 1.0, t) < at(0.01, 1.0, 1.0, t));
        assert!(at(0.01, 1.0, 1.0, t) < at(0.001, 1.0, 1.0, t));
        assert!(at(0.001, 1.0, 1.0, t) <= at(0.0, 1.0, 1.0, t));
        assert!(at(0.01, 0.75, 1.0, t) < at(0.01, 0.9, 1.0, t));
        assert!(at(0.01, 0.9, 1.0, t) < at(0.01, 0.95, 1.0, t));
        assert!(at(0.01, 0.95, 1.0, t) < at(0.01, 1.0, 1.0, t));
    }
    for i in 1..=90 {
        let t = 0.01 + 0.001 * i as f64;
        assert!(at(0.01, 1.0, 1.0, t) > at(0.0, 1.0, 0.0, t), "t={t}");
    }
}
