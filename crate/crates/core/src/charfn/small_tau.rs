//! First-order-in-γτ closed form, valid for t ≥ 2τ with φ = 0.
//!
//! The `1/sin θ` factors in 𝒞 and 𝒟 cancel against `e^{-(1-2k)γt/2} - e^{-γt/2}`;
//! the coefficients are written in that cancelled form,
//! `(e^{-(1-2k)γt/2} - e^{-γt/2}) / sin θ = g γt e^{-γt/2} φ₁(kγt)` with
//! `φ₁(z) = (eᶻ - 1)/z`, so they stay finite as `sin θ → 0`.

use super::{Branch, CharFnResult};
use crate::error::{Error, Result};
use crate::model::{log_overlap, FeedbackConfig};
use crate::moments::{f0, f1};
use crate::series::phi1;
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coefficients of the small-delay exponent at one time and matrix element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallTauCoefficients {
    pub a: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub f0: f64,
    pub f1: f64,
}

fn check_phase(config: &FeedbackConfig) -> Result<()> {
    if config.phi() != 0.0 {
        return Err(Error::PhaseConvention(config.phi()));
    }
    Ok(())
}

impl SmallTauCoefficients {
    pub fn at(t: f64, alpha: Complex64, beta: Complex64, config: &FeedbackConfig) -> Result<Self> {
        check_phase(config)?;
        let (g, k, eta, theta) = (config.g(), config.k(), config.efficiency(), config.theta());
        let (gt, gtau) = (config.gamma() * t, config.gamma() * config.tau());
        let (f0v, f1v) = (f0(t, config), f1(t, config));
        let noise = f0v - gtau * f1v;
        let a = Complex64::new(0.5 + g * g / (4.0 * eta) * noise, 0.0);
        let b1 = -g * g / (8.0 * eta) * noise * Complex64::from_polar(1.0, -2.0 * theta);
        let e = (-0.5 * gt).exp();
        let ea = (-0.5 * (1.0 - 2.0 * k) * gt).exp();
        let sum = alpha + beta.conj();
        let ramp = e * gt * phi1(k * gt);
        let delay = gtau * ((1.0 - 2.0 * k) * 0.5 * gt - 1.0) * ea;
        let (em, ep) = (Complex64::from_polar(1.0, -theta), Complex64::from_polar(1.0, theta));
        Ok(Self {
            a,
            b1,
            b2: b1.conj(),
            c: beta.conj() * e + 0.5 * I * g * em * sum * (ramp + delay),
            d: -alpha * e + 0.5 * I * g * ep * sum * (ramp + delay),
            f0: f0v,
            f1: f1v,
        })
    }

    /// `-𝒜|λ|² + ℬ₁λ² + ℬ₂λ*² + 𝒞λ + 𝒟λ*`.
    pub fn exponent(&self, lambda: Complex64) -> Complex64 {
        let lc = lambda.conj();
        -self.a * lambda.norm_sqr() + self.b1 * lambda * lambda + self.b2 * lc * lc + self.c * lambda + self.d * lc
    }
}

/// `⟨D(λ,t)⟩_{βα}` to first order in γτ.
pub fn charfn_small_tau(
    lambda: Complex64,
    t: f64,
    alpha: Complex64,
    beta: Complex64,
    config: &FeedbackConfig,
) -> Result<CharFnResult> {
    if !(t >= 2.0 * config.tau() && t.is_finite()) {
        return Err(Error::Precondition(format!("small-delay form needs t >= 2 tau, got {t}")));
    }
    let co = SmallTauCoefficients::at(t, alpha, beta, config)?;
    Ok(CharFnResult::from_log(log_overlap(beta, alpha) + co.exponent(lambda), Branch::SmallTau))
}

/// Equivalent coherence function `⟨D(2α₀,t)⟩` of the cat state, first order in γτ.
///
/// Requires φ = 0 and Re α₀ = 0. Written for t ≥ 2τ: at earlier times the
/// expansion does not describe the inert segment (use [`super::charfn_early`]).
pub fn coherence_function(t: f64, alpha0: Complex64, config: &FeedbackConfig) -> Result<Complex64> {
    check_phase(config)?;
    if alpha0.re.abs() > 1e-12 * alpha0.norm().max(1.0) {
        return Err(Error::Precondition(format!("coherence function needs Re alpha0 = 0, got {}", alpha0.re)));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidTime(t));
    }
    let (k, eta) = (config.k(), config.efficiency());
    let (gt, gtau) = (config.gamma() * t, config.gamma() * config.tau());
    let a = 1.0 - 2.0 * k;
    let ea = (-0.5 * a * gt).exp();
    let bracket =
        2.0 + k * k / eta * (f0(t, config) - gtau * f1(t, config)) - 2.0 * ea + k * (2.0 - gt * a) * gtau * ea;
    Ok(Complex64::new(0.5 * (-2.0 * alpha0.norm_sqr() * bracket).exp(), 0.0))
}
