use delayfb_core::trajectories::*;
use delayfb_core::{Complex64, FeedbackConfig};
use std::f64::consts::FRAC_PI_2;

fn check(cfg: &FeedbackConfig, seed: u64, alpha0: Complex64) -> (f64, Complex64, Complex64) {
    let path = generate_path(seed, 1e-4, 0.5).unwrap();
    let states = trajectory(&path, alpha0, cfg).unwrap();
    let run = fock_sde_oracle_with(&path, alpha0, cfg, 30, FockOptions { stride: 1000, ..Default::default() }).unwrap();
    let mut worst_fid: f64 = 1.0;
    let mut ratio = Complex64::new(1.0, 0.0);
    let mut functional = Complex64::new(1.0, 0.0);
    for (idx, psi) in run.indices.iter().zip(&run.states) {
        let s = &states[*idx];
        worst_fid = worst_fid.min(coherent_fidelity(psi, s.amplitude));
        let proj = coherent_projection(psi, s.amplitude);
        ratio = proj / s.weight();
        functional = proj / s.functional_weight();
    }
    (worst_fid, ratio, functional)
}

#[test]
fn closed_form_matches_number_basis_on_reference_setting() {
    let cfg = FeedbackConfig::new(1.0, 1.0, FRAC_PI_2, 0.0, 0.0, 1.0).unwrap();
    for seed in 0..10 {
        let (fid, ratio, functional) = check(&cfg, seed, Complex64::new(1.0, 0.0));
        assert!(fid > 1.0 - 1e-3, "seed {seed}: fidelity {fid}");
        assert!((ratio.norm() - 1.0).abs() < 1e-3, "seed {seed}: {ratio}");
        assert!((functional.norm() - 1.0).abs() < 1e-3, "seed {seed}: functional form {functional}");
    }
}

#[test]
fn exact_weight_holds_for_generic_phases() {
    let cfg = FeedbackConfig::new(1.3, 0.7, 0.6, 0.4, 0.0, 1.0).unwrap();
    for seed in 0..3 {
        let (fid, ratio, functional) = check(&cfg, seed, Complex64::new(0.7, -0.4));
        assert!(fid > 1.0 - 1e-3);
        assert!((ratio - 1.0).norm() < 1e-3, "seed {seed}: {ratio}");
        eprintln!("seed {seed}: functional-weight ratio {functional}");
    }
}

#[test]
fn fock_state_remains_coherent() {
    let cfg = FeedbackConfig::new(1.0, 0.8, 1.0, 0.3, 0.0, 1.0).unwrap();
    let path = generate_path(21, 1e-4, 0.5).unwrap();
    let run = fock_sde_oracle_with(
        &path,
        Complex64::new(0.0, 1.0),
        &cfg,
        30,
        FockOptions { stride: 500, ..Default::default() },
    )
    .unwrap();
    for psi in &run.states {
        assert!(coherent_fit(psi).1 < 1e-3);
    }
}

#[test]
fn halving_dt_improves_agreement() {
    let cfg = FeedbackConfig::new(1.0, 1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
    let alpha0 = Complex64::new(1.0, 0.0);
    let coarse = generate_path(8, 4e-3, 0.5).unwrap();
    let mut errs = Vec::new();
    for path in [coarse.clone(), coarse.refine(), coarse.refine().refine()] {
        let s = trajectory(&path, alpha0, &cfg).unwrap();
        let run = fock_sde_oracle(&path, alpha0, &cfg, 30).unwrap();
        let last = s.last().unwrap();
        errs.push(1.0 - coherent_fidelity(run.states.last().unwrap(), last.amplitude));
    }
    assert!(errs[2] < errs[0], "{errs:?}");
}

#[test]
fn wiener_statistics() {
    let n = 10_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for seed in 0..n {
        let w = *generate_path(seed, 0.01, 1.0).unwrap().cumulative().last().unwrap();
        s += w;
        s2 += w * w;
    }
    let mean = s / n as f64;
    let var = s2 / n as f64 - mean * mean;
    assert!(mean.abs() < 0.05, "{mean}");
    assert!((var - 1.0).abs() < 0.05, "{var}");
}

#[test]
fn asymptotic_fluctuations_are_mostly_phase() {
    let cfg = FeedbackConfig::new(1.0, 1.0, std::f64::consts::FRAC_PI_4, 0.0, 0.0, 1.0).unwrap();
    let a0 = Complex64::new(0.0, 5.0);
    let finals: Vec<Complex64> = (0..400)
        .map(|seed| {
            let path = generate_path(seed, 1e-4, 0.01).unwrap();
            *coherence_trajectory(&path, a0, &cfg, CoherenceMode::Asymptotic).unwrap().last().unwrap()
        })
        .collect();
    let var = |xs: Vec<f64>| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
    };
    let v_arg = var(finals.iter().map(|z| z.arg()).collect());
    let v_abs = var(finals.iter().map(|z| z.norm()).collect());
    assert!(v_arg / v_abs > 10.0, "{v_arg} / {v_abs}");
}

#[test]
fn full_and_asymptotic_coherence_agree_for_large_amplitude() {
    let cfg = FeedbackConfig::new(1.0, 1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
    let a0 = Complex64::new(0.0, 5.0);
    let path = generate_path(2, 1e-4, 0.005).unwrap();
    let full = coherence_trajectory(&path, a0, &cfg, CoherenceMode::Full).unwrap();
    let asym = coherence_trajectory(&path, a0, &cfg, CoherenceMode::Asymptotic).unwrap();
    let (f, a) = (full.last().unwrap(), asym.last().unwrap());
    assert!((f.norm() - a.norm()).abs() < 0.02, "{f} vs {a}");
}
