//! Exact characteristic function from the time integral of ℋ(t).
//!
//! `⟨D(λ,t)⟩ = ⟨D(λ,0)⟩ exp ∫₀ᵗ ℋ(s) ds`. ℋ needs `𝒲_λ(u,T)` at `u = T-τ` and
//! `u = T-2τ`. As written, 𝒲 is a double integral over Λ_λ. Swapping the order of
//! integration turns the inner convolution with χ into
//! `K(w) = ∫₀^w e^{γs/2} χ(s) ds`, which has a closed-form series:
//!
//! ```text
//! 𝒲(u,T) = -i(√γ/2) g e^{iθ} e^{iφ} [ ∫₀^u e^{γv/2} { -γ K(u-v) G_T(v) + 𝓡_λ^{f*}(T-v)/√η } dv
//!                                      + √γ 𝒱_λ*(T) K(u) ]
//! G_T(v) = 𝓡_λ*(T-v) - k Θ(v-τ) 𝓡_λ^{f*}(T-v+τ)/√η
//! ```
//!
//! Every λ-dependent kernel is real-linear in λ, so 𝒲 is computed once for
//! λ = 1 and λ = i and recombined for any λ.

use super::{log_displacement, Branch, CharFnResult};
use crate::dde::{kernels, ChiEvaluator, KernelSet};
use crate::error::Result;
use crate::exec::Execution;
use crate::model::{CoherentSuperposition, FeedbackConfig};
use crate::quadrature::{gl_nodes_with, gl_rule8};
use crate::series::{log_sum_exp, KahanComplex};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Panels never exceed this many damping times.
const MAX_PANEL: f64 = 0.5;

/// λ-dependent kernels 𝒱_λ, 𝓡_λ, 𝓡_λ^f, Λ_λ and 𝒲_λ for one configuration.
#[derive(Debug, Clone)]
pub struct CharFnKernels {
    ks: KernelSet,
}

fn unit_basis() -> [Complex64; 2] {
    [Complex64::new(1.0, 0.0), I]
}

/// `L = λe^{-iθ} + λ*e^{iθ}`, always real.
fn l_factor(lambda: Complex64, theta: f64) -> f64 {
    2.0 * (lambda * Complex64::from_polar(1.0, -theta)).re
}

impl CharFnKernels {
    pub fn new(config: &FeedbackConfig) -> Self {
        Self { ks: kernels(config) }
    }

    pub fn config(&self) -> &FeedbackConfig {
        self.ks.evaluator().config()
    }

    fn ev(&self) -> &ChiEvaluator {
        self.ks.evaluator()
    }

    fn panel(&self) -> f64 {
        MAX_PANEL / self.config().gamma()
    }

    /// 𝒱_λ(t) = -λ e^{-γt/2} - (i/2) e^{iφ} L g ρ(t) Θ(t-τ).
    pub fn v(&self, lambda: Complex64, t: f64) -> Result<Complex64> {
        let c = self.config();
        let fb = if t >= c.tau() { c.g() * self.ev().rho(t)? } else { 0.0 };
        Ok(-lambda * self.ev().envelope(t)
            - 0.5 * I * Complex64::from_polar(1.0, c.phi()) * l_factor(lambda, c.theta()) * fb)
    }

    /// 𝓡_λ(x) = λ𝓡₁(x) - λ*𝓡(x).
    pub fn r(&self, lambda: Complex64, x: f64) -> Result<Complex64> {
        let kv = self.ks.all(x)?;
        Ok(lambda * kv.r1 - lambda.conj() * kv.r)
    }

    /// 𝓡_λ^f(x) = λ𝓡₁^f(x) - λ*𝓡^f(x).
    pub fn r_f(&self, lambda: Complex64, x: f64) -> Result<Complex64> {
        let kv = self.ks.all(x)?;
        Ok(lambda * kv.r1_f - lambda.conj() * kv.r_f)
    }

    /// Direct quadrature of Λ_λ(s, T).
    pub fn lambda_fn(&self, lambda: Complex64, s: f64, t: f64) -> Result<Complex64> {
        let c = *self.config();
        let (tau, k, se) = (c.tau(), c.k(), c.efficiency().sqrt());
        let ev = self.ev();
        let breaks = shifted(&[s, t, t + tau], tau, s).into_iter().chain([tau]);
        let mut acc = KahanComplex::new();
        for (u, w) in gl_nodes_with(0.0, s, breaks, self.panel(), gl_rule8()) {
            let mut g = if t >= u { self.r(lambda, t - u)?.conj() } else { Complex64::default() };
            if u >= tau && k != 0.0 {
                g -= k * self.r_f(lambda, t - u + tau)?.conj() / se;
            }
            acc.add(w * ev.chi(s - u)? * g);
        }
        let e = Complex64::from_polar(1.0, c.phi());
        Ok(-0.5 * c.gamma().sqrt() * e * acc.value() + 0.5 * e * ev.chi(s)? * self.v(lambda, t)?.conj())
    }

    /// 𝒲_λ(u, T) as the literal double integral over Λ_λ; slow, for cross-checks.
    pub fn w_nested(&self, lambda: Complex64, u: f64, t: f64) -> Result<Complex64> {
        let c = *self.config();
        let (tau, se, gamma) = (c.tau(), c.efficiency().sqrt(), c.gamma());
        let breaks = shifted(&[t], tau, u).into_iter().chain(crate::model::knots_in(0.0, u, tau));
        let mut acc = KahanComplex::new();
        let e = Complex64::from_polar(1.0, c.phi());
        for (s, w) in gl_nodes_with(0.0, u, breaks, self.panel(), gl_rule8()) {
            let inner = 2.0 * gamma.sqrt() * self.lambda_fn(lambda, s, t)? + e * self.r_f(lambda, t - s)?.conj() / se;
            acc.add(w * (0.5 * gamma * s).exp() * inner);
        }
        Ok(-I * 0.5 * gamma.sqrt() * c.g() * Complex64::from_polar(1.0, c.theta()) * acc.value())
    }

    /// 𝒲_λ(u, T) for λ = 1 and λ = i, by the single-integral form.
    pub fn w_basis(&self, u: f64, t: f64) -> Result<[Complex64; 2]> {
        let c = *self.config();
        if c.g() == 0.0 || u <= 0.0 {
            return Ok([Complex64::default(); 2]);
        }
        let (tau, k, se, gamma) = (c.tau(), c.k(), c.efficiency().sqrt(), c.gamma());
        let ev = self.ev();
        let basis = unit_basis();
        let breaks = shifted(&[u, t], tau, u).into_iter().chain([tau]);
        let mut acc = [KahanComplex::new(), KahanComplex::new()];
        for (v, w) in gl_nodes_with(0.0, u, breaks, self.panel(), gl_rule8()) {
            let now = self.ks.all(t - v)?;
            let late = if v >= tau && k != 0.0 { Some(self.ks.all(t - v + tau)?) } else { None };
            let kuv = ev.growth_integral(u - v)?;
            let grow = (0.5 * gamma * v).exp();
            for (b, lam) in basis.iter().enumerate() {
                let lc = lam.conj();
                let r_star = (lam * now.r1 - lc * now.r).conj();
                let rf_star = (lam * now.r1_f - lc * now.r_f).conj();
                let mut g = r_star;
                if let Some(kv) = &late {
                    g -= k * (lam * kv.r1_f - lc * kv.r_f).conj() / se;
                }
                acc[b].add(w * grow * (-gamma * kuv * g + rf_star / se));
            }
        }
        let pre = -I * 0.5 * gamma.sqrt() * c.g() * Complex64::from_polar(1.0, c.theta() + c.phi());
        let ku = ev.growth_integral(u)?;
        let mut out = [Complex64::default(); 2];
        for (b, lam) in basis.iter().enumerate() {
            out[b] = pre * (acc[b].value() + gamma.sqrt() * self.v(*lam, t)?.conj() * ku);
        }
        Ok(out)
    }

    /// 𝒲_λ(u, T) for any λ.
    pub fn w(&self, lambda: Complex64, u: f64, t: f64) -> Result<Complex64> {
        let b = self.w_basis(u, t)?;
        Ok(lambda.re * b[0] + lambda.im * b[1])
    }

    fn node(&self, t: f64) -> Result<HNode> {
        let c = *self.config();
        let tau = c.tau();
        let ev = self.ev();
        let gate1 = t >= tau;
        let gate2 = t >= 2.0 * tau;
        let zero = [Complex64::default(); 2];
        Ok(HNode {
            envelope: ev.envelope(t),
            gate1,
            gate2,
            rate: if gate1 { c.g() * ev.rho_derivative(t)? } else { 0.0 },
            e1: ev.envelope(t - tau),
            e2: ev.envelope(t - 2.0 * tau),
            w1: if gate1 { self.w_basis(t - tau, t)? } else { zero },
            w2: if gate2 { self.w_basis(t - 2.0 * tau, t)? } else { zero },
        })
    }
}

/// Kinks `a - nτ` (n ≥ 1) of the anchors that fall in `(0, upper)`.
fn shifted(anchors: &[f64], tau: f64, upper: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if tau <= 0.0 {
        return out;
    }
    for &a in anchors {
        let mut n = 1.0;
        while a - n * tau > 0.0 {
            if a - n * tau < upper {
                out.push(a - n * tau);
            }
            n += 1.0;
        }
    }
    out
}

/// λ-independent ingredients of ℋ at one time.
#[derive(Debug, Clone, Copy)]
struct HNode {
    envelope: f64,
    gate1: bool,
    gate2: bool,
    /// `(χ' + (γ/2)e^{-γt/2}) / sin(θ-φ) = g ρ'(t)`.
    rate: f64,
    e1: f64,
    e2: f64,
    w1: [Complex64; 2],
    w2: [Complex64; 2],
}

impl HNode {
    fn eval(&self, c: &FeedbackConfig, lambda: Complex64, alpha: Complex64, beta: Complex64) -> Complex64 {
        let gamma = c.gamma();
        let lc = lambda.conj();
        let mut h = 0.5 * gamma * (lc * alpha - lambda * beta.conj()) * self.envelope;
        if self.gate1 {
            let l = l_factor(lambda, c.theta());
            let ep = Complex64::from_polar(1.0, c.phi());
            h += 0.5 * I * l * (beta.conj() * ep + alpha * ep.conj()) * self.rate;
            h -= gamma * c.g() * c.g() * l * l / (8.0 * c.efficiency());
            let w1 = lambda.re * self.w1[0] + lambda.im * self.w1[1];
            h += 0.5 * gamma * self.e1 * (lc * w1 + lambda * w1.conj());
            if self.gate2 {
                let w2 = lambda.re * self.w2[0] + lambda.im * self.w2[1];
                h += I * 0.5 * gamma * c.g() * l * self.e2 * (ep.conj() * w2 - ep * w2.conj());
            }
        }
        h
    }
}

/// ℋ(t) for one matrix element.
pub fn hamiltonian_exponent(
    t: f64,
    lambda: Complex64,
    alpha: Complex64,
    beta: Complex64,
    config: &FeedbackConfig,
) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(crate::error::Error::InvalidTime(t));
    }
    Ok(CharFnKernels::new(config).node(t)?.eval(config, lambda, alpha, beta))
}

/// Quadrature table of ℋ on `[0, t]`, reusable across λ and matrix elements.
#[derive(Debug, Clone)]
pub struct ExactCharFn {
    config: FeedbackConfig,
    t: f64,
    nodes: Vec<(f64, HNode)>,
}

impl ExactCharFn {
    /// Builds the table; the node work is spread according to `exec`.
    pub fn new(config: &FeedbackConfig, t: f64, exec: Execution) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(crate::error::Error::InvalidTime(t));
        }
        let kern = CharFnKernels::new(config);
        let knots = crate::model::knots_in(0.0, t, config.tau());
        let grid = gl_nodes_with(0.0, t, knots, kern.panel(), gl_rule8());
        let nodes = exec.try_map(&grid, |&(s, w)| kern.node(s).map(|n| (w, n)))?;
        Ok(Self { config: *config, t, nodes })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `∫₀ᵗ ℋ(s) ds`.
    pub fn exponent(&self, lambda: Complex64, alpha: Complex64, beta: Complex64) -> Complex64 {
        let mut acc = KahanComplex::new();
        for (w, n) in &self.nodes {
            acc.add(*w * n.eval(&self.config, lambda, alpha, beta));
        }
        acc.value()
    }

    pub fn evaluate(&self, lambda: Complex64, alpha: Complex64, beta: Complex64) -> CharFnResult {
        CharFnResult::from_log(
            log_displacement(lambda, alpha, beta) + self.exponent(lambda, alpha, beta),
            Branch::Exact,
        )
    }

    /// `Σ_{αβ} N_{αβ} ⟨D(λ,t)⟩_{βα}` over a superposition.
    pub fn evaluate_state(&self, lambda: Complex64, state: &CoherentSuperposition) -> CharFnResult {
        let logs: Vec<Complex64> = state
            .density_elements()
            .filter(|e| e.weight != Complex64::default())
            .map(|e| e.weight.ln() + self.evaluate(lambda, e.alpha, e.beta).log_value)
            .collect();
        CharFnResult::from_log(log_sum_exp(&logs), Branch::Exact)
    }
}

/// `⟨D(λ,t)⟩_{βα}` from the exact exponent.
pub fn charfn_exact(
    lambda: Complex64,
    t: f64,
    alpha: Complex64,
    beta: Complex64,
    config: &FeedbackConfig,
) -> Result<CharFnResult> {
    Ok(ExactCharFn::new(config, t, Execution::default())?.evaluate(lambda, alpha, beta))
}
