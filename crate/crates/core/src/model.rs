//! Parameter records and initial-state descriptions.
//!
//! Angles are in radians and are never wrapped. Complex numbers serialise to
//! JSON as `[re, im]` pairs.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Physical parameters of the feedback loop.
///
/// Immutable once built; `k = g sin(theta - phi)` is computed at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct FeedbackConfig {
    gamma: f64,
    g: f64,
    theta: f64,
    phi: f64,
    tau: f64,
    eta: f64,
    k: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    gamma: f64,
    g: f64,
    theta: f64,
    phi: f64,
    tau: f64,
    eta: f64,
}

impl TryFrom<RawConfig> for FeedbackConfig {
    type Error = Error;
    fn try_from(r: RawConfig) -> Result<Self> {
        FeedbackConfig::new(r.gamma, r.g, r.theta, r.phi, r.tau, r.eta)
    }
}

impl From<FeedbackConfig> for RawConfig {
    fn from(c: FeedbackConfig) -> Self {
        RawConfig { gamma: c.gamma, g: c.g, theta: c.theta, phi: c.phi, tau: c.tau, eta: c.eta }
    }
}

impl FeedbackConfig {
    /// Validated constructor. Rejects `gamma <= 0`, `tau < 0` and `eta` outside `(0, 1]`.
    pub fn new(gamma: f64, g: f64, theta: f64, phi: f64, tau: f64, eta: f64) -> Result<Self> {
        for (name, value) in [("gamma", gamma), ("g", g), ("theta", theta), ("phi", phi), ("tau", tau), ("eta", eta)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { name, value });
            }
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidGamma(gamma));
        }
        if tau < 0.0 {
            return Err(Error::InvalidTau(tau));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidEta(eta));
        }
        Ok(Self { gamma, g, theta, phi, tau, eta, k: g * (theta - phi).sin() })
    }

    /// No feedback at all: `g = 0`, `tau = 0`, `eta = 1`.
    pub fn no_feedback(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0, 0.0, 0.0, 0.0, 1.0)
    }

    /// Convenience for the common `phi = 0`, `theta = pi/2` setting where `k = g`.
    pub fn with_gain(gamma: f64, k: f64, tau: f64, eta: f64) -> Result<Self> {
        Self::new(gamma, k, std::f64::consts::FRAC_PI_2, 0.0, tau, eta)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    /// Homodyne detection efficiency η.
    pub fn efficiency(&self) -> f64 {
        self.eta
    }
    /// Effective gain `k = g sin(theta - phi)`.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.gamma, self.g, self.theta, self.phi, tau, self.eta)
    }
    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.gamma, g, self.theta, self.phi, self.tau, self.eta)
    }
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.gamma, self.g, theta, self.phi, self.tau, self.eta)
    }
    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::new(self.gamma, self.g, self.theta, phi, self.tau, self.eta)
    }
    pub fn with_efficiency(&self, eta: f64) -> Result<Self> {
        Self::new(self.gamma, self.g, self.theta, self.phi, self.tau, eta)
    }
}

/// Coherent-state overlap `<beta|alpha>`.
pub fn overlap(beta: Complex64, alpha: Complex64) -> Complex64 {
    log_overlap(beta, alpha).exp()
}

/// Logarithm of [`overlap`]: `-|alpha|^2/2 - |beta|^2/2 + conj(beta) alpha`.
pub fn log_overlap(beta: Complex64, alpha: Complex64) -> Complex64 {
    -0.5 * (alpha.norm_sqr() + beta.norm_sqr()) + beta.conj() * alpha
}

/// How [`CoherentSuperposition::new`] treats the supplied coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    AsGiven,
    Renormalize,
}

/// One coherent component `c |alpha>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentTerm {
    pub alpha: Complex64,
    pub coefficient: Complex64,
}

/// A finite superposition `sum_i c_i |alpha_i>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct CoherentSuperposition {
    terms: Vec<CoherentTerm>,
    norm_mode: NormMode,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    terms: Vec<CoherentTerm>,
    norm_mode: NormMode,
}

impl TryFrom<RawState> for CoherentSuperposition {
    type Error = Error;
    fn try_from(r: RawState) -> Result<Self> {
        CoherentSuperposition::new(r.terms, r.norm_mode)
    }
}

impl From<CoherentSuperposition> for RawState {
    fn from(s: CoherentSuperposition) -> Self {
        RawState { terms: s.terms, norm_mode: s.norm_mode }
    }
}

/// One density-matrix element `N_{alpha beta} |alpha><beta|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityElement {
    pub alpha: Complex64,
    pub beta: Complex64,
    /// `c_alpha conj(c_beta)`
    pub weight: Complex64,
}

impl CoherentSuperposition {
    /// Builds a superposition; with [`NormMode::Renormalize`] the coefficients are
    /// rescaled so that the state has unit norm.
    pub fn new(terms: Vec<CoherentTerm>, norm_mode: NormMode) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyState);
        }
        for t in &terms {
            for v in [t.alpha.re, t.alpha.im, t.coefficient.re, t.coefficient.im] {
                if !v.is_finite() {
                    return Err(Error::NonFinite { name: "state", value: v });
                }
            }
        }
        let mut s = Self { terms, norm_mode };
        if norm_mode == NormMode::Renormalize {
            let n2 = s.norm_sqr();
            if !(n2 > 0.0 && n2.is_finite()) {
                return Err(Error::Unnormalisable(n2));
            }
            let scale = n2.sqrt().recip();
            for t in &mut s.terms {
                t.coefficient *= scale;
            }
        }
        Ok(s)
    }

    /// A single coherent state `|alpha>`.
    pub fn coherent(alpha: Complex64) -> Self {
        Self {
            terms: vec![CoherentTerm { alpha, coefficient: Complex64::new(1.0, 0.0) }],
            norm_mode: NormMode::AsGiven,
        }
    }

    pub fn terms(&self) -> &[CoherentTerm] {
        &self.terms
    }

    pub fn norm_mode(&self) -> NormMode {
        self.norm_mode
    }

    /// `sum_ij c_i conj(c_j) <alpha_j|alpha_i>`.
    pub fn norm_sqr(&self) -> f64 {
        self.density_elements().map(|e| e.weight * overlap(e.beta, e.alpha)).sum::<Complex64>().re
    }

    /// All `N_{alpha beta}` with their amplitudes, row-major over the term list.
    pub fn density_elements(&self) -> impl Iterator<Item = DensityElement> + '_ {
        self.terms.iter().flat_map(move |a| {
            self.terms.iter().map(move |b| DensityElement {
                alpha: a.alpha,
                beta: b.alpha,
                weight: a.coefficient * b.coefficient.conj(),
            })
        })
    }
}

/// Even cat state `N(|alpha0> + |-alpha0>)`, normalised exactly:
/// `N = [2(1 + e^{-2|alpha0|^2})]^{-1/2}`, so `N^2 = 1/2` for well separated components.
pub fn cat_state(alpha0: Complex64) -> CoherentSuperposition {
    let n = Complex64::new((2.0 * (1.0 + (-2.0 * alpha0.norm_sqr()).exp())).powf(-0.5), 0.0);
    CoherentSuperposition {
        terms: vec![CoherentTerm { alpha: alpha0, coefficient: n }, CoherentTerm { alpha: -alpha0, coefficient: n }],
        norm_mode: NormMode::AsGiven,
    }
}

/// Output time grid plus the kink times `n tau` falling inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
    pub knots: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize, tau: f64) -> Result<Self> {
        if !(t_start >= 0.0 && t_end >= t_start && t_end.is_finite()) {
            return Err(Error::Precondition(format!("bad time range [{t_start}, {t_end}]")));
        }
        if n_points < 2 && t_end > t_start {
            return Err(Error::Precondition("a time grid needs at least two points".into()));
        }
        Ok(Self { t_start, t_end, n_points: n_points.max(1), knots: knots_in(t_start, t_end, tau) })
    }

    /// Uniformly spaced sample times, endpoints included.
    pub fn points(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![self.t_start];
        }
        let h = (self.t_end - self.t_start) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| if i + 1 == self.n_points { self.t_end } else { self.t_start + h * i as f64 })
            .collect()
    }
}

/// Every `n tau` (n >= 1) inside `[a, b]`; empty when `tau = 0`.
pub fn knots_in(a: f64, b: f64, tau: f64) -> Vec<f64> {
    if tau <= 0.0 {
        return Vec::new();
    }
    let first = ((a / tau).ceil() as usize).max(1);
    (first..).map(|n| n as f64 * tau).take_while(|&x| x <= b).collect()
}
