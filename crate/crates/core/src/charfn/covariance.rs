//! Independent evaluation of `⟨D(λ,t)⟩_{βα}` through Gaussian linear response.
//!
//! The field at time t is linear in the initial mode and in two white-noise
//! inputs: the cavity output that feeds the loop and the extra detection noise
//! when η < 1. The mean and noise amplitudes follow from χ and ρ alone:
//!
//! ```text
//! μ(t)  = λ e^{-γt/2} + ζ ρ(t)                 ζ = (i/2) g e^{iφ} L,  L = λe^{-iθ} + λ*e^{iθ}
//! ln⟨D⟩ = ln⟨β|α⟩ - |μ|²/2 + μβ* - μ*α - Q/2
//! Q(t)  = γ ∫₀ᵗ |λ e^{-γx/2} + ζ(ρ(x) - Θ(x-τ)χ(x-τ))|² + (1/η - 1)|ζ|² Θ(x-τ)χ²(x-τ) dx
//! ```

use super::{Branch, CharFnResult};
use crate::dde::ChiEvaluator;
use crate::error::{Error, Result};
use crate::model::{knots_in, log_overlap, FeedbackConfig};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64;

/// `ζ = (i/2) g e^{iφ} L`.
pub(crate) fn zeta(lambda: Complex64, config: &FeedbackConfig) -> Complex64 {
    let l = 2.0 * (lambda * Complex64::from_polar(1.0, -config.theta())).re;
    Complex64::new(0.0, 0.5 * config.g() * l) * Complex64::from_polar(1.0, config.phi())
}

/// ln⟨D⟩ from the mean shift μ and the accumulated noise Q.
pub(crate) fn gaussian_log(mu: Complex64, q: f64, alpha: Complex64, beta: Complex64) -> Complex64 {
    log_overlap(beta, alpha) - 0.5 * mu.norm_sqr() + mu * beta.conj() - mu.conj() * alpha - 0.5 * q
}

/// `⟨D(λ,t)⟩_{βα}` by Gaussian linear response.
pub fn charfn_covariance(
    lambda: Complex64,
    t: f64,
    alpha: Complex64,
    beta: Complex64,
    config: &FeedbackConfig,
) -> Result<CharFnResult> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidTime(t));
    }
    let ev = ChiEvaluator::new(*config);
    let z = zeta(lambda, config);
    let (tau, gamma, eta) = (config.tau(), config.gamma(), config.efficiency());
    let mut failure = None;
    let mut integrand = |x: f64| -> Complex64 {
        let eval = || -> Result<f64> {
            let delayed = if x >= tau { ev.chi(x - tau)? } else { 0.0 };
            let a = lambda * ev.envelope(x) + z * (ev.rho(x)? - delayed);
            Ok(a.norm_sqr() + (1.0 / eta - 1.0) * z.norm_sqr() * delayed * delayed)
        };
        match eval() {
            Ok(v) => Complex64::new(v, 0.0),
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::default()
            }
        }
    };
    let q = gamma * gauss_legendre(&mut integrand, 0.0, t, knots_in(0.0, t, tau), 0.25 / gamma).re;
    if let Some(e) = failure {
        return Err(e);
    }
    let mu = lambda * ev.envelope(t) + z * ev.rho(t)?;
    Ok(CharFnResult::from_log(gaussian_log(mu, q, alpha, beta), Branch::Covariance))
}
