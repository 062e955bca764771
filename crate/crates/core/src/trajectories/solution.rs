//! Closed-form zero-delay trajectory: functionals, amplitude, weight, coherence.
//!
//! All stochastic integrals are Itô (left-point) sums on the path grid.
//!
//! The weight is evaluated in the form
//!
//! ```text
//! ln ℰ = -|α₀|²/2 + |β|²/2 - γg²t/8 - (γ/2)e^{-2iφ} ∫β² ds + √γ(e^{-iφ} - (i/2)g e^{-iθ}) ∫β dw
//! ```
//!
//! with β the coherent amplitude, obtained by projecting the linear equation
//! onto coherent states. Both integrals reduce to the path sums
//! `J = Σ e^{γs/2} dw`, `K = Σ e^{-γs/2} dw` and
//! `P = Σ (J e^{-γs/2} dw + (dw² - ds)/2)`. The closed form listed with the
//! functionals χ₁, χ₂, Λ is kept as [`TrajectoryState::functional_log_weight`];
//! it agrees with the number-basis integration only at θ = π/2, φ = 0.

use super::path::WienerPath;
use crate::error::{Error, Result};
use crate::model::{log_overlap, FeedbackConfig};
use crate::series::log_sum_exp;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn require_zero_delay(config: &FeedbackConfig) -> Result<()> {
    if config.tau() != 0.0 {
        return Err(Error::NonZeroDelay(config.tau()));
    }
    Ok(())
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

/// The integrands `(f₁(t), f₂(t))` of the functionals χ₁, χ₂.
pub fn f_functions(t: f64, config: &FeedbackConfig) -> Result<(Complex64, Complex64)> {
    require_zero_delay(config)?;
    let (gamma, g, th, ph) = (config.gamma(), config.g(), config.theta(), config.phi());
    let pre = gamma.sqrt() / 2f64.powf(1.5);
    let grow = (0.5 * gamma * t).exp();
    let decay = (-0.5 * gamma * t).exp();
    let bracket = -I * g * cis(-th) + 2.0 * cis(-ph) + I * g * cis(th - 2.0 * ph);
    let f1 = pre * (-I * g * (1.0 + cis(-2.0 * ph)) * cis(th) * grow + bracket * decay);
    let f2 = pre * (-g * (1.0 - cis(-2.0 * ph)) * cis(th) * grow + I * bracket * decay);
    Ok((f1, f2))
}

/// The functionals χ₁, χ₂ and Λ at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub chi1: Complex64,
    pub chi2: Complex64,
    pub lambda: Complex64,
}

impl Functionals {
    pub fn chi_plus(&self) -> Complex64 {
        (self.chi1 + I * self.chi2) / 2f64.sqrt()
    }

    pub fn chi_minus(&self) -> Complex64 {
        (self.chi1 - I * self.chi2) / 2f64.sqrt()
    }
}

/// `(χ₁, χ₂, Λ)` at every grid point `t_0 = 0, …, t_N`.
pub fn ito_functionals(path: &WienerPath, config: &FeedbackConfig) -> Result<Vec<Functionals>> {
    let mut acc = Functionals { chi1: Complex64::default(), chi2: Complex64::default(), lambda: Complex64::default() };
    let mut out = Vec::with_capacity(path.n_steps() + 1);
    out.push(acc);
    for (i, &dw) in path.increments().iter().enumerate() {
        let (f1, f2) = f_functions(path.time(i), config)?;
        acc.lambda += (f1 * acc.chi2 - f2 * acc.chi1) * dw;
        acc.chi1 += f1 * dw;
        acc.chi2 += f2 * dw;
        out.push(acc);
    }
    Ok(out)
}

/// Trajectory state at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub t: f64,
    /// `[χ₊(t) + α₀] e^{-γt/2}`.
    pub amplitude: Complex64,
    /// `ln ℰ_w(t)`, consistent with the number-basis integration.
    pub log_weight: Complex64,
    /// The weight in its χ±, Λ closed form, kept for comparison.
    pub functional_log_weight: Complex64,
    pub functionals: Functionals,
}

impl TrajectoryState {
    pub fn weight(&self) -> Complex64 {
        self.log_weight.exp()
    }

    pub fn functional_weight(&self) -> Complex64 {
        self.functional_log_weight.exp()
    }
}

fn functional_log_weight(f: &Functionals, alpha0: Complex64, t: f64, config: &FeedbackConfig) -> Complex64 {
    let (gamma, g, th, ph) = (config.gamma(), config.g(), config.theta(), config.phi());
    let (cp, cm) = (f.chi_plus(), f.chi_minus());
    let shifted = cp + alpha0;
    I * f.lambda
        + 0.5 * (cp.conj() + cm) * (cp + 2.0 * alpha0)
        + I * (cp * alpha0.conj()).im
        + I * 0.25 * g * gamma * t * cis(th - ph)
        - 0.5 * (shifted.norm_sqr() + shifted * shifted * cis(-2.0 * ph)) * -(-gamma * t).exp_m1()
}

/// Amplitude and weight along the path for the initial coherent state `|α₀⟩`.
pub fn trajectory(path: &WienerPath, alpha0: Complex64, config: &FeedbackConfig) -> Result<Vec<TrajectoryState>> {
    let functionals = ito_functionals(path, config)?;
    let (gamma, g, th, ph) = (config.gamma(), config.g(), config.theta(), config.phi());
    let b1 = -I * 0.5 * g * gamma.sqrt() * cis(th);
    let c0 = gamma.sqrt() * (cis(-ph) - I * 0.5 * g * cis(-th));
    let (mut j, mut k, mut p) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(functionals.len());
    for (n, f) in functionals.iter().enumerate() {
        let t = path.time(n);
        let decay = (-gamma * t).exp();
        let amplitude = (f.chi_plus() + alpha0) * (-0.5 * gamma * t).exp();
        let beta_exact = (-0.5 * gamma * t).exp() * (alpha0 + b1 * j);
        let i_beta = alpha0 * k + b1 * p;
        let i_beta2 = (alpha0 * alpha0 * (1.0 - decay)
            + 2.0 * alpha0 * b1 * (k - decay * j)
            + b1 * b1 * (2.0 * p + t - decay * j * j))
            / gamma;
        let log_weight = -0.5 * alpha0.norm_sqr() + 0.5 * beta_exact.norm_sqr()
            - gamma * g * g * t / 8.0
            - 0.5 * gamma * cis(-2.0 * ph) * i_beta2
            + c0 * i_beta;
        out.push(TrajectoryState {
            t,
            amplitude,
            log_weight,
            functional_log_weight: functional_log_weight(f, alpha0, t, config),
            functionals: *f,
        });
        if let Some(&dw) = path.increments().get(n) {
            let (grow, shrink) = ((0.5 * gamma * t).exp(), (-0.5 * gamma * t).exp());
            p += j * shrink * dw + 0.5 * (dw * dw - path.dt());
            j += grow * dw;
            k += shrink * dw;
        }
    }
    Ok(out)
}

/// How [`coherence_trajectory`] evaluates `C_w(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoherenceMode {
    /// `⟨-α₀|ψ_w⟩⟨ψ_w|α₀⟩ / ⟨ψ_w|ψ_w⟩` for the cat `|α₀⟩ + |-α₀⟩`.
    Full,
    /// The large-|α₀|, short-time limit; needs φ = 0 and Re α₀ = 0.
    Asymptotic,
}

/// The per-path coherence function at every grid time.
pub fn coherence_trajectory(
    path: &WienerPath,
    alpha0: Complex64,
    config: &FeedbackConfig,
    mode: CoherenceMode,
) -> Result<Vec<Complex64>> {
    require_zero_delay(config)?;
    match mode {
        CoherenceMode::Asymptotic => {
            if config.phi() != 0.0 {
                return Err(Error::PhaseConvention(config.phi()));
            }
            if alpha0.re.abs() > 1e-12 * alpha0.norm().max(1.0) {
                return Err(Error::Precondition(format!(
                    "asymptotic coherence needs Re alpha0 = 0, got {}",
                    alpha0.re
                )));
            }
            let (gamma, g) = (config.gamma(), config.g());
            let phase = 2.0 * gamma.sqrt() * alpha0.norm() * (1.0 - g * config.theta().sin());
            Ok(path
                .cumulative()
                .iter()
                .map(|&w| 0.5 * Complex64::new(-0.25 * gamma * g * g * w * w, -phase * w).exp())
                .collect())
        }
        CoherenceMode::Full => {
            let plus = trajectory(path, alpha0, config)?;
            let minus = trajectory(path, -alpha0, config)?;
            Ok(plus
                .iter()
                .zip(&minus)
                .map(|(p, m)| {
                    let branches = [(p.amplitude, p.log_weight), (m.amplitude, m.log_weight)];
                    let bra: Vec<_> = branches.iter().map(|(b, l)| l + log_overlap(-alpha0, *b)).collect();
                    let ket: Vec<_> = branches.iter().map(|(b, l)| l.conj() + log_overlap(*b, alpha0)).collect();
                    let mut norm = Vec::with_capacity(4);
                    for (bs, ls) in &branches {
                        for (bt, lt) in &branches {
                            norm.push(ls.conj() + lt + log_overlap(*bs, *bt));
                        }
                    }
                    (log_sum_exp(&bra) + log_sum_exp(&ket) - log_sum_exp(&norm)).exp()
                })
                .collect())
        }
    }
}

/// CSV with columns `t, amp_re, amp_im, weight_re, weight_im, w`.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    states: &[TrajectoryState],
    path: &WienerPath,
) -> std::io::Result<()> {
    writeln!(out, "t,amp_re,amp_im,weight_re,weight_im,w")?;
    for (s, w) in states.iter().zip(path.cumulative()) {
        let wt = s.weight();
        writeln!(out, "{},{},{},{},{},{}", s.t, s.amplitude.re, s.amplitude.im, wt.re, wt.im, w)?;
    }
    Ok(())
}
