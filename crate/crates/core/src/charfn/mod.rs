//! The symmetrically ordered characteristic function `⟨D(λ,t)⟩_{βα}`.
//!
//! Four routes are provided:
//!
//! * [`charfn_exact`] integrates the exact exponent ℋ(t) (see [`exact`]);
//! * [`charfn_small_tau`] is the closed form to first order in γτ, valid for t ≥ 2τ;
//! * [`charfn_early`] is the closed form on the early segment `0 ≤ t ≤ 2τ`;
//! * [`covariance::charfn_covariance`] is an independent Gaussian linear-response
//!   evaluation used as an oracle.
//!
//! Exponents are carried in log space; values are exponentiated only on output.

pub mod covariance;
pub mod early;
pub mod exact;
pub mod small_tau;

use crate::error::Result;
use crate::exec::Execution;
use crate::model::{log_overlap, CoherentSuperposition, FeedbackConfig};
use crate::series::log_sum_exp;
use num_complex::Complex64;

pub use early::charfn_early;
pub use exact::{charfn_exact, hamiltonian_exponent, CharFnKernels, ExactCharFn};
pub use small_tau::{charfn_small_tau, coherence_function, SmallTauCoefficients};

/// Which evaluation route produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Exact,
    SmallTau,
    Early,
    Covariance,
}

/// A characteristic-function value with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFnResult {
    /// Natural log of the value (imaginary part defined modulo 2π).
    pub log_value: Complex64,
    pub value: Complex64,
    pub branch: Branch,
    /// Set when the value underflowed to zero on exponentiation.
    pub underflow: bool,
}

impl CharFnResult {
    pub fn from_log(log_value: Complex64, branch: Branch) -> Self {
        let value = log_value.exp();
        let underflow = log_value.re > f64::NEG_INFINITY && value == Complex64::default();
        Self { log_value, value, branch, underflow }
    }
}

/// `ln ⟨D(λ,0)⟩_{βα} = ln⟨β|α⟩ - |λ|²/2 + λβ* - λ*α`.
pub fn log_displacement(lambda: Complex64, alpha: Complex64, beta: Complex64) -> Complex64 {
    log_overlap(beta, alpha) - 0.5 * lambda.norm_sqr() + lambda * beta.conj() - lambda.conj() * alpha
}

/// `⟨β|D(λ)|α⟩ = ⟨β|α⟩ exp(-|λ|²/2 + λβ* - λ*α)`.
pub fn displacement_matrix_element(lambda: Complex64, alpha: Complex64, beta: Complex64) -> Complex64 {
    log_displacement(lambda, alpha, beta).exp()
}

/// `Σ_{αβ} N_{αβ} ⟨D(λ,t)⟩_{βα}` over a superposition, for any branch.
pub fn charfn_state(
    lambda: Complex64,
    t: f64,
    state: &CoherentSuperposition,
    config: &FeedbackConfig,
    branch: Branch,
) -> Result<CharFnResult> {
    if branch == Branch::Exact {
        return Ok(ExactCharFn::new(config, t, Execution::default())?.evaluate_state(lambda, state));
    }
    let mut logs = Vec::new();
    for e in state.density_elements() {
        if e.weight == Complex64::default() {
            continue;
        }
        let part = match branch {
            Branch::Exact => unreachable!("handled above"),
            Branch::SmallTau => charfn_small_tau(lambda, t, e.alpha, e.beta, config)?,
            Branch::Early => charfn_early(lambda, t, e.alpha, e.beta, config)?,
            Branch::Covariance => covariance::charfn_covariance(lambda, t, e.alpha, e.beta, config)?,
        };
        logs.push(e.weight.ln() + part.log_value);
    }
    Ok(CharFnResult::from_log(log_sum_exp(&logs), branch))
}

/// The plotted coherence `2⟨D(2α₀,t)⟩` of the cat state `N(|α₀⟩ + |-α₀⟩)`.
///
/// On `t < 2τ` the early-segment closed form is summed over the cat; from
/// `2τ` on, the small-delay [`coherence_function`] is used. Both need φ = 0
/// and Re α₀ = 0.
pub fn coherence_curve(t: f64, alpha0: Complex64, config: &FeedbackConfig) -> Result<f64> {
    if t >= 2.0 * config.tau() {
        return Ok(2.0 * coherence_function(t, alpha0, config)?.re);
    }
    coherence_function(0.0, alpha0, config)?;
    let cat = crate::model::cat_state(alpha0);
    Ok(2.0 * charfn_state(2.0 * alpha0, t, &cat, config, Branch::Early)?.value.re)
}
