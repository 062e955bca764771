//! Quadrature correlations, the doubled variance σ⁽²⁾ and Gaussian moments.
//!
//! σ⁽²⁾ is twice the usual
//! variance, so a coherent state has σ⁽²⁾ = 1/2.

use crate::dde::{quadrature_amplitude, ChiEvaluator};
use crate::error::{Error, Result};
use crate::model::{overlap, FeedbackConfig};
use crate::quadrature::adaptive_simpson;
use crate::series::phi1;
use num_complex::Complex64;

/// Absolute tolerance of every adaptive quadrature in this module.
pub const QUAD_TOL: f64 = 1e-11;

/// χ(t) and σ⁽²⁾(t) at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub t: f64,
    pub mean_factor: f64,
    pub sigma2: f64,
    pub config: FeedbackConfig,
}

impl QuadratureMoments {
    pub fn at(t: f64, config: &FeedbackConfig) -> Result<Self> {
        let ev = ChiEvaluator::new(*config);
        Ok(Self { t, mean_factor: ev.chi(t)?, sigma2: sigma2_with(&ev, t)?, config: *config })
    }
}

/// Kinks of `s ↦ χ(a - s)` for every anchor `a`, i.e. `a - nτ`.
fn shifted_knots(anchors: &[f64], tau: f64, upper: f64) -> Vec<f64> {
    if tau <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &a in anchors {
        let mut n = 0.0;
        while a - n * tau > 0.0 {
            let s = a - n * tau;
            if s < upper {
                out.push(s);
            }
            n += 1.0;
        }
    }
    out
}

fn multiples(tau: f64, upper: f64) -> Vec<f64> {
    crate::model::knots_in(0.0, upper, tau)
}

/// σ⁽²⁾(t) = 1/2 + (γ/(2η)) k² Θ(t-τ) ∫₀^{t-τ} χ²(s) ds.
pub fn sigma2(t: f64, config: &FeedbackConfig) -> Result<f64> {
    sigma2_with(&ChiEvaluator::new(*config), t)
}

/// [`sigma2`] with a caller-supplied evaluator.
pub fn sigma2_with(ev: &ChiEvaluator, t: f64) -> Result<f64> {
    let c = ev.config();
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidTime(t));
    }
    let k = c.k();
    if t <= c.tau() || k == 0.0 {
        return Ok(0.5);
    }
    let upper = t - c.tau();
    let f = |s: f64| ev.chi(s).map(|x| x * x).unwrap_or(f64::NAN);
    let integral = adaptive_simpson(&f, 0.0, upper, multiples(c.tau(), upper), QUAD_TOL)?;
    Ok(0.5 + c.gamma() / (2.0 * c.efficiency()) * k * k * integral)
}

/// `(1 - e^{-(1-2k)γt}) / (1-2k)` in a form that is regular at k = 1/2.
pub fn f0(t: f64, config: &FeedbackConfig) -> f64 {
    let gt = config.gamma() * t;
    gt * phi1(-(1.0 - 2.0 * config.k()) * gt)
}

/// `F₁(t) = (1 + γtk) e^{-(1-2k)γt} + k F₀(t)`.
pub fn f1(t: f64, config: &FeedbackConfig) -> f64 {
    let (k, gt) = (config.k(), config.gamma() * t);
    (1.0 + gt * k) * (-(1.0 - 2.0 * k) * gt).exp() + k * f0(t, config)
}

/// First-order expansion of σ⁽²⁾ in γτ; intended for t ≥ τ.
pub fn sigma2_first_order(t: f64, config: &FeedbackConfig) -> Result<f64> {
    if t < config.tau() || !t.is_finite() {
        return Err(Error::Precondition(format!("first-order variance needs t >= tau, got {t}")));
    }
    let (k, eta) = (config.k(), config.efficiency());
    let gtau = config.gamma() * config.tau();
    Ok(0.5 * (1.0 + k * k / eta * f0(t, config)) - k * k / (2.0 * eta) * f1(t, config) * gtau)
}

/// The noise correlation 𝒢(t, t').
pub fn g_function(t: f64, t2: f64, config: &FeedbackConfig) -> Result<f64> {
    g_function_with(&ChiEvaluator::new(*config), t, t2)
}

/// [`g_function`] with a caller-supplied evaluator.
pub fn g_function_with(ev: &ChiEvaluator, t: f64, t2: f64) -> Result<f64> {
    for x in [t, t2] {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidTime(x));
        }
    }
    let c = ev.config();
    let (tau, k) = (c.tau(), c.k());
    let knots = shifted_knots(&[t, t2], tau, t.max(t2));
    let chi = |x: f64| ev.chi(x).unwrap_or(f64::NAN);
    let term = |a: f64, b: f64| -> Result<f64> {
        let upper = a.min(b);
        if upper <= 0.0 {
            return Ok(0.0);
        }
        let f = |s: f64| chi(a - s) * chi(b - s);
        adaptive_simpson(&f, 0.0, upper, knots.iter().copied(), QUAD_TOL)
    };
    let mut total = term(t, t2)?;
    if k != 0.0 {
        if t2 >= tau {
            total -= k * term(t, t2 - tau)?;
        }
        if t >= tau {
            total -= k * term(t - tau, t2)?;
        }
        if t >= tau && t2 >= tau {
            total += k * k / c.efficiency() * term(t - tau, t2 - tau)?;
        }
    }
    Ok(0.25 * c.gamma() * total)
}

/// `C(0,0) = ⟨β|α⟩ [m² + 1/4]` with `m = (α e^{-iφ} + β* e^{iφ})/2`.
pub fn initial_second_moment(alpha: Complex64, beta: Complex64, phi: f64) -> Complex64 {
    let m = quadrature_amplitude(alpha, beta, phi);
    overlap(beta, alpha) * (m * m + 0.25)
}

/// Two-time correlation `C(t,t') = C(0,0) χ(t) χ(t') + ⟨β|α⟩ 𝒢(t,t')`.
pub fn correlation(t: f64, t2: f64, beta: Complex64, alpha: Complex64, config: &FeedbackConfig) -> Result<Complex64> {
    let ev = ChiEvaluator::new(*config);
    let c00 = initial_second_moment(alpha, beta, config.phi());
    Ok(c00 * ev.chi(t)? * ev.chi(t2)? + overlap(beta, alpha) * g_function_with(&ev, t, t2)?)
}

fn double_factorial_odd(n: u32) -> f64 {
    // (n-1)!! for even n
    (1..n).step_by(2).map(|i| i as f64).product()
}

/// Central moment about the scaled mean `m χ(t)`:
/// `⟨β|α⟩ (n-1)!! (σ⁽²⁾/2)^{n/2}` for even n, zero for odd n.
pub fn central_moment(n: u32, t: f64, beta: Complex64, alpha: Complex64, config: &FeedbackConfig) -> Result<Complex64> {
    let ov = overlap(beta, alpha);
    if n % 2 == 1 {
        return Ok(Complex64::default());
    }
    let s = sigma2(t, config)?;
    Ok(ov * double_factorial_odd(n) * (0.5 * s).powi(n as i32 / 2))
}

/// Moment of the noise part `X(t) - χ(t) X(0)` alone, built by the Gaussian
/// recursion `M_n = (n-1) 𝒢(t,t) M_{n-2}`.
pub fn noise_moment(n: u32, t: f64, beta: Complex64, alpha: Complex64, config: &FeedbackConfig) -> Result<Complex64> {
    let ov = overlap(beta, alpha);
    if n % 2 == 1 {
        return Ok(Complex64::default());
    }
    let g = g_function(t, t, config)?;
    let mut m = ov;
    for j in (2..=n).step_by(2) {
        m *= (j - 1) as f64 * g;
    }
    Ok(m)
}
