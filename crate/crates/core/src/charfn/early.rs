//! Closed form of the characteristic function on the early segment `0 ≤ t ≤ 2τ`.
//!
//! Before τ the loop is inert and the mode is a damped cavity. Between τ and 2τ
//! the delayed field `a(t-τ)` is still unaffected by feedback, so every kernel
//! is an exponential times a polynomial of degree at most one. The noise
//! integral then reduces to the incomplete moments `∫₀^Y zⁿ e^{-z} dz`, n ≤ 2.

use super::covariance::{gaussian_log, zeta};
use super::{Branch, CharFnResult};
use crate::error::{Error, Result};
use crate::model::FeedbackConfig;
use num_complex::Complex64;

/// `⟨D(λ,t)⟩_{βα}` for `0 ≤ t ≤ 2τ`.
pub fn charfn_early(
    lambda: Complex64,
    t: f64,
    alpha: Complex64,
    beta: Complex64,
    config: &FeedbackConfig,
) -> Result<CharFnResult> {
    let tau = config.tau();
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidTime(t));
    }
    if t > 2.0 * tau {
        return Err(Error::OutsideEarlySegment { t, limit: 2.0 * tau });
    }
    let gamma = config.gamma();
    let l2 = lambda.norm_sqr();
    let inert = gamma * t.min(tau);
    let mut q = -l2 * (-inert).exp_m1();
    let mut mu = lambda * (-0.5 * gamma * t).exp();
    if t > tau {
        let z = zeta(lambda, config);
        let y = gamma * (t - tau);
        let ey = (-y).exp();
        let i0 = -(-y).exp_m1();
        let i1 = i0 - y * ey;
        let i2 = 2.0 * i1 - y * y * ey;
        let et = (-gamma * tau).exp();
        let cross = (lambda.conj() * z).re;
        q += l2 * et * i0
            + z.norm_sqr() * (i2 - 2.0 * i1 + i0 / config.efficiency())
            + 2.0 * cross * et.sqrt() * (i1 - i0);
        mu += z * y * (-0.5 * y).exp();
    }
    Ok(CharFnResult::from_log(gaussian_log(mu, q, alpha, beta), Branch::Early))
}
