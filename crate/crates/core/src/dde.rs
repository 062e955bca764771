//! The delay series χ(t), its relatives, the commutator kernels and a
//! method-of-steps oracle for the linear delay equation behind them.
//!
//! χ solves `χ'(t) = -(γ/2) χ(t) + γ k χ(t - τ) Θ(t - τ)` with `χ(0) = 1`:
//!
//! ```text
//! χ(t) = Σ_{n=0}^{⌊t/τ⌋} kⁿ/n! · e^{-γ(t-nτ)/2} · (γ(t-nτ))ⁿ
//! ```
//!
//! Two companions share the same machinery:
//!
//! * `ρ(t) = (χ(t) - e^{-γt/2}) / k`, evaluated as the shifted series so that it
//!   stays finite as `k → 0`;
//! * `K(w) = ∫₀^w e^{γs/2} χ(s) ds`, which has a closed-form series and lets the
//!   characteristic-function integrals collapse by one dimension.

use crate::error::{Error, Result};
use crate::model::FeedbackConfig;
use crate::series::{ln_factorials, phi1, Kahan};
use num_complex::Complex64;
use std::sync::{Arc, OnceLock};

/// Default cap on the number of delay-series terms.
pub const DEFAULT_TERM_CAP: usize = 4000;

/// How the series terms are evaluated and accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SummationMode {
    /// Plain powers and factorials; overflows near n ≈ 170.
    DirectKahan,
    /// `sign · exp(log-magnitude)` per term, always in range.
    #[default]
    LogDomainSigned,
}

fn default_ln_factorials() -> Arc<Vec<f64>> {
    static TABLE: OnceLock<Arc<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| Arc::new(ln_factorials(DEFAULT_TERM_CAP + 2))).clone()
}

/// A derivative value that may be one-sided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSided {
    pub value: f64,
    /// `true` when `t` sits on a kink `nτ` (n ≥ 1); `value` is then the right derivative.
    pub at_kink: bool,
}

/// Evaluator for χ and its companion series at a fixed configuration.
#[derive(Debug, Clone)]
pub struct ChiEvaluator {
    config: FeedbackConfig,
    term_cap: usize,
    mode: SummationMode,
    ln_fact: Arc<Vec<f64>>,
}

impl ChiEvaluator {
    pub fn new(config: FeedbackConfig) -> Self {
        Self { config, term_cap: DEFAULT_TERM_CAP, mode: SummationMode::default(), ln_fact: default_ln_factorials() }
    }

    pub fn with_mode(mut self, mode: SummationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_term_cap(mut self, cap: usize) -> Self {
        self.term_cap = cap;
        if cap + 2 >= self.ln_fact.len() {
            self.ln_fact = Arc::new(ln_factorials(cap + 2));
        }
        self
    }

    pub fn config(&self) -> &FeedbackConfig {
        &self.config
    }

    pub fn term_cap(&self) -> usize {
        self.term_cap
    }

    pub fn mode(&self) -> SummationMode {
        self.mode
    }

    /// Damping envelope `e^{-γx/2}`.
    pub fn envelope(&self, x: f64) -> f64 {
        (-0.5 * self.config.gamma() * x).exp()
    }

    fn check_time(t: f64) -> Result<()> {
        if t >= 0.0 && t.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidTime(t))
        }
    }

    /// Highest series index contributing at time `t`.
    fn top_index(&self, t: f64) -> Result<usize> {
        let r = t / self.config.tau();
        if r > self.term_cap as f64 {
            return Err(Error::TermCapExceeded { needed: r as usize, cap: self.term_cap });
        }
        Ok(r.floor() as usize)
    }

    /// Sums `Σ_{n=from}^{top} sign(k)^{n-shift} exp(log_term(n))`, where
    /// `log_term` returns the log-magnitude given `x_n = t - nτ ≥ 0`.
    fn delay_sum(
        &self,
        t: f64,
        from: usize,
        shift: usize,
        log_term: impl Fn(usize, f64) -> f64,
        direct_term: impl Fn(usize, f64, f64) -> f64,
    ) -> Result<f64> {
        let top = self.top_index(t)?;
        let tau = self.config.tau();
        let k = self.config.k();
        let mut acc = Kahan::new();
        match self.mode {
            SummationMode::LogDomainSigned => {
                for n in from..=top {
                    let x = (t - n as f64 * tau).max(0.0);
                    let p = n - shift;
                    if p > 0 && k == 0.0 {
                        break;
                    }
                    let lk = if p == 0 { 0.0 } else { p as f64 * k.abs().ln() };
                    let mag = (lk + log_term(n, x)).exp();
                    let sign = if k < 0.0 && p % 2 == 1 { -1.0 } else { 1.0 };
                    acc.add(sign * mag);
                }
            }
            SummationMode::DirectKahan => {
                let mut k_pow = 1.0;
                for _ in 0..from.saturating_sub(shift) {
                    k_pow *= k;
                }
                for n in from..=top {
                    let x = (t - n as f64 * tau).max(0.0);
                    let term = direct_term(n, x, k_pow);
                    // (n+1)! overflows f64 beyond n = 169
                    if !term.is_finite() || n >= 170 {
                        return Err(Error::SeriesOverflow { index: n });
                    }
                    acc.add(term);
                    k_pow *= k;
                }
            }
        }
        Ok(acc.value())
    }

    fn direct_factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    /// χ(t).
    pub fn chi(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let c = &self.config;
        let gamma = c.gamma();
        if c.tau() == 0.0 {
            return Ok((-0.5 * gamma * (1.0 - 2.0 * c.k()) * t).exp());
        }
        let lf = &self.ln_fact;
        self.delay_sum(
            t,
            0,
            0,
            |n, x| {
                let pw = if n == 0 { 0.0 } else { n as f64 * (gamma * x).ln() };
                pw - lf[n] - 0.5 * gamma * x
            },
            |n, x, kp| kp * (gamma * x).powi(n as i32) / Self::direct_factorial(n) * (-0.5 * gamma * x).exp(),
        )
    }

    /// Termwise derivative of χ; right-sided (and flagged) on a kink.
    pub fn chi_derivative(&self, t: f64) -> Result<OneSided> {
        Self::check_time(t)?;
        let c = &self.config;
        let gamma = c.gamma();
        if c.tau() == 0.0 {
            return Ok(OneSided { value: -0.5 * gamma * (1.0 - 2.0 * c.k()) * self.chi(t)?, at_kink: false });
        }
        let lf = &self.ln_fact;
        // d/dt of term n: kⁿ e^{-γx/2} [γ(γx)^{n-1}/(n-1)! - (γ/2)(γx)ⁿ/n!]
        let growth = self.delay_sum(
            t,
            1,
            0,
            |n, x| {
                let pw = if n == 1 { 0.0 } else { (n - 1) as f64 * (gamma * x).ln() };
                gamma.ln() + pw - lf[n - 1] - 0.5 * gamma * x
            },
            |n, x, kp| {
                kp * gamma * (gamma * x).powi(n as i32 - 1) / Self::direct_factorial(n - 1) * (-0.5 * gamma * x).exp()
            },
        )?;
        let r = t / c.tau();
        let at_kink = r >= 0.5 && (r - r.round()).abs() < 1e-12;
        Ok(OneSided { value: growth - 0.5 * gamma * self.chi(t)?, at_kink })
    }

    /// ρ(t) = (χ(t) - e^{-γt/2}) / k, finite at k = 0; zero for t < τ.
    pub fn rho(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let c = &self.config;
        let gamma = c.gamma();
        if c.tau() == 0.0 {
            return Ok(self.envelope(t) * gamma * t * phi1(c.k() * gamma * t));
        }
        if t < c.tau() {
            return Ok(0.0);
        }
        let lf = &self.ln_fact;
        self.delay_sum(
            t,
            1,
            1,
            |n, x| n as f64 * (gamma * x).ln() - lf[n] - 0.5 * gamma * x,
            |n, x, kp| kp * (gamma * x).powi(n as i32) / Self::direct_factorial(n) * (-0.5 * gamma * x).exp(),
        )
    }

    /// ρ'(t) from the delay equation: `γ χ(t-τ) - (γ/2) ρ(t)` for t ≥ τ, zero before.
    ///
    /// Equals `(χ'(t) + (γ/2) e^{-γt/2}) / k` without dividing by k.
    pub fn rho_derivative(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let c = &self.config;
        if t < c.tau() {
            return Ok(0.0);
        }
        let gamma = c.gamma();
        Ok(gamma * self.chi(t - c.tau())? - 0.5 * gamma * self.rho(t)?)
    }

    /// K(w) = ∫₀^w e^{γs/2} χ(s) ds
    /// `= (1/γ) Σ_n kⁿ e^{nγτ/2} (γ(w-nτ))^{n+1}/(n+1)!`.
    pub fn growth_integral(&self, w: f64) -> Result<f64> {
        Self::check_time(w)?;
        let c = &self.config;
        let gamma = c.gamma();
        let tau = c.tau();
        if tau == 0.0 {
            return Ok(w * phi1(c.k() * gamma * w));
        }
        let lf = &self.ln_fact;
        let s = self.delay_sum(
            w,
            0,
            0,
            |n, x| 0.5 * n as f64 * gamma * tau + (n + 1) as f64 * (gamma * x).ln() - lf[n + 1],
            |n, x, kp| {
                kp * (0.5 * n as f64 * gamma * tau).exp() * (gamma * x).powi(n as i32 + 1)
                    / Self::direct_factorial(n + 1)
            },
        )?;
        Ok(s / gamma)
    }
}

/// χ(t) with the default evaluator.
pub fn chi(t: f64, config: &FeedbackConfig) -> Result<f64> {
    ChiEvaluator::new(*config).chi(t)
}

/// χ'(t) with the default evaluator.
pub fn chi_derivative(t: f64, config: &FeedbackConfig) -> Result<OneSided> {
    ChiEvaluator::new(*config).chi_derivative(t)
}

/// First order in γτ: `{1 - (k/2)(2 - γt(1-2k)) γτ} e^{-(1-2k)γt/2}`; meant for t ≥ τ.
pub fn chi_first_order(t: f64, config: &FeedbackConfig) -> Result<f64> {
    if t < config.tau() || !t.is_finite() {
        return Err(Error::Precondition(format!("first-order chi needs t >= tau, got t = {t}")));
    }
    let (k, gt, gtau) = (config.k(), config.gamma() * t, config.gamma() * config.tau());
    let a = 1.0 - 2.0 * k;
    Ok((1.0 - 0.5 * k * (2.0 - gt * a) * gtau) * (-0.5 * a * gt).exp())
}

/// `⟨X_φ(0)⟩_{βα} = ⟨β|α⟩ (α e^{-iφ} + β* e^{iφ}) / 2`.
pub fn initial_quadrature(alpha: Complex64, beta: Complex64, phi: f64) -> Complex64 {
    crate::model::overlap(beta, alpha) * quadrature_amplitude(alpha, beta, phi)
}

/// `(α e^{-iφ} + β* e^{iφ}) / 2`, the mean per unit overlap.
pub fn quadrature_amplitude(alpha: Complex64, beta: Complex64, phi: f64) -> Complex64 {
    let e = Complex64::from_polar(1.0, phi);
    0.5 * (alpha * e.conj() + beta.conj() * e)
}

/// `⟨X_φ(t)⟩_{βα} = x0 · χ(t)`.
pub fn mean_quadrature(t: f64, x0: Complex64, config: &FeedbackConfig) -> Result<Complex64> {
    Ok(x0 * chi(t, config)?)
}

/// The six commutator kernels, all functions of a time difference `x = t - t'`.
#[derive(Debug, Clone)]
pub struct KernelSet {
    chi: ChiEvaluator,
}

/// Kernel values at one time difference, indexed as in [`KernelSet`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelValues {
    pub f: Complex64,
    pub f_f: Complex64,
    pub r: Complex64,
    pub r1: Complex64,
    pub r_f: Complex64,
    pub r1_f: Complex64,
}

/// Build the kernel set for a configuration.
pub fn kernels(config: &FeedbackConfig) -> KernelSet {
    KernelSet::new(ChiEvaluator::new(*config))
}

impl KernelSet {
    pub fn new(chi: ChiEvaluator) -> Self {
        Self { chi }
    }

    pub fn evaluator(&self) -> &ChiEvaluator {
        &self.chi
    }

    fn cfg(&self) -> &FeedbackConfig {
        self.chi.config()
    }

    /// χ(x) gated by Θ(x - shift), zero before.
    fn chi_after(&self, x: f64, shift: f64) -> Result<f64> {
        if x < shift {
            Ok(0.0)
        } else {
            self.chi.chi(x - shift)
        }
    }

    /// 𝓕(x) = -(√γ/2) e^{-iφ} [χ(x) - k Θ(x-τ) χ(x-τ)].
    pub fn f(&self, x: f64) -> Result<Complex64> {
        self.f_like(x, 1.0, 1.0)
    }

    /// 𝓕_f(x) = -(√γ/2) e^{-iφ} [√η χ(x) - (k/√η) Θ(x-τ) χ(x-τ)].
    pub fn f_f(&self, x: f64) -> Result<Complex64> {
        let s = self.cfg().efficiency().sqrt();
        self.f_like(x, s, 1.0 / s)
    }

    fn f_like(&self, x: f64, direct: f64, delayed: f64) -> Result<Complex64> {
        if x < 0.0 {
            return Ok(Complex64::default());
        }
        let c = self.cfg();
        let bracket = direct * self.chi.chi(x)? - delayed * c.k() * self.chi_after(x, c.tau())?;
        Ok(-0.5 * c.gamma().sqrt() * Complex64::from_polar(1.0, -c.phi()) * bracket)
    }

    /// 𝓡(x) = i(√γ/2) g e^{i(θ+φ)} {Θ(x-τ)[E(x-τ) - ρ(x)] + Θ(x-2τ)[χ(x-τ) - E(x-τ)]},
    /// with `E(x) = e^{-γx/2}`.
    pub fn r(&self, x: f64) -> Result<Complex64> {
        let c = self.cfg();
        Ok(self.r_bracket(x, 1.0)? * (0.5 * c.gamma().sqrt() * c.g()))
    }

    /// 𝓡^f(x): as 𝓡 with prefactor `i√(γ/(4η))` and `η ρ(x)` in the first bracket.
    pub fn r_f(&self, x: f64) -> Result<Complex64> {
        let c = self.cfg();
        let eta = c.efficiency();
        Ok(self.r_bracket(x, eta)? * ((c.gamma() / (4.0 * eta)).sqrt() * c.g()))
    }

    fn r_bracket(&self, x: f64, eta: f64) -> Result<Complex64> {
        let c = self.cfg();
        let tau = c.tau();
        if x < tau {
            return Ok(Complex64::default());
        }
        let e = self.chi.envelope(x - tau);
        let mut b = e - eta * self.chi.rho(x)?;
        if x >= 2.0 * tau {
            b += self.chi.chi(x - tau)? - e;
        }
        Ok(Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, c.theta() + c.phi()) * b)
    }

    /// 𝓡₁ = -2 e^{-iφ} 𝓕* - e^{-2iφ} 𝓡.
    pub fn r1(&self, x: f64) -> Result<Complex64> {
        let p = Complex64::from_polar(1.0, -self.cfg().phi());
        Ok(-2.0 * p * self.f(x)?.conj() - p * p * self.r(x)?)
    }

    /// 𝓡₁^f = -2 e^{-iφ} 𝓕_f* - e^{-2iφ} 𝓡^f.
    pub fn r1_f(&self, x: f64) -> Result<Complex64> {
        let p = Complex64::from_polar(1.0, -self.cfg().phi());
        Ok(-2.0 * p * self.f_f(x)?.conj() - p * p * self.r_f(x)?)
    }

    /// All six kernels at once, sharing the underlying series evaluations.
    pub fn all(&self, x: f64) -> Result<KernelValues> {
        if x < 0.0 {
            return Ok(KernelValues::default());
        }
        let c = self.cfg();
        let (tau, k, eta) = (c.tau(), c.k(), c.efficiency());
        let se = eta.sqrt();
        let chi_x = self.chi.chi(x)?;
        let chi_d = self.chi_after(x, tau)?;
        let sg = c.gamma().sqrt();
        let p = Complex64::from_polar(1.0, -c.phi());
        let f = -0.5 * sg * p * (chi_x - k * chi_d);
        let f_f = -0.5 * sg * p * (se * chi_x - k / se * chi_d);
        let (r, r_f) = if x < tau {
            (Complex64::default(), Complex64::default())
        } else {
            let e = self.chi.envelope(x - tau);
            let rho = self.chi.rho(x)?;
            let late = if x >= 2.0 * tau { chi_d - e } else { 0.0 };
            let rot = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, c.theta() + c.phi());
            (
                rot * (e - rho + late) * (0.5 * sg * c.g()),
                rot * (e - eta * rho + late) * ((c.gamma() / (4.0 * eta)).sqrt() * c.g()),
            )
        };
        Ok(KernelValues {
            f,
            f_f,
            r,
            r_f,
            r1: -2.0 * p * f.conj() - p * p * r,
            r1_f: -2.0 * p * f_f.conj() - p * p * r_f,
        })
    }
}

/// How the oracle evaluates the delayed value at RK4 half steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayInterpolation {
    /// Average of the neighbouring nodes, second-order accurate.
    Linear,
    /// Cubic Hermite from node values and slopes, fourth-order accurate.
    #[default]
    CubicHermite,
}

/// Method-of-steps RK4 solution of `Z'(ξ) = -Z(ξ) + 2k Z(ξ-y) Θ(ξ-y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub dx: f64,
    /// Values at `ξ_j = j·dx`.
    pub values: Vec<f64>,
    /// Right-sided slope at each node.
    slopes: Vec<f64>,
}

impl OracleSolution {
    pub fn xi(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    /// Piecewise cubic Hermite interpolant between nodes.
    pub fn value_at(&self, xi: f64) -> f64 {
        let last = self.values.len() - 1;
        let s = (xi / self.dx).clamp(0.0, last as f64);
        let j = (s.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return self.values[0];
        }
        let u = s - j as f64;
        let (z0, z1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.slopes[j] * self.dx, self.left_slope(j + 1) * self.dx);
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * z0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * z1 + (u3 - u2) * m1
    }

    fn left_slope(&self, j: usize) -> f64 {
        self.slopes[j]
    }
}

/// Method-of-steps oracle with cubic Hermite delayed values.
pub fn dde_oracle(z0: f64, k: f64, y: f64, xi_max: f64, dx: f64) -> Result<OracleSolution> {
    dde_oracle_with(z0, k, y, xi_max, dx, DelayInterpolation::default())
}

/// [`dde_oracle`] with an explicit interpolation rule for the delayed value.
pub fn dde_oracle_with(
    z0: f64,
    k: f64,
    y: f64,
    xi_max: f64,
    dx: f64,
    interp: DelayInterpolation,
) -> Result<OracleSolution> {
    if !(dx > 0.0 && xi_max > 0.0 && y >= 0.0) {
        return Err(Error::Precondition(format!("bad oracle grid dx = {dx}, y = {y}, xi_max = {xi_max}")));
    }
    let lag = if y > 0.0 {
        if dx > y / 4.0 {
            return Err(Error::StepTooLarge { dx, y });
        }
        let m = (y / dx).round();
        if (m * dx - y).abs() > 1e-9 * y {
            return Err(Error::StepNotCommensurate { dx, y });
        }
        Some(m as usize)
    } else {
        None
    };
    let n = (xi_max / dx).ceil() as usize;
    let mut z = Vec::with_capacity(n + 1);
    // slope at the left end of each step, and at its right end
    let mut sl: Vec<f64> = Vec::with_capacity(n + 1);
    let mut sr: Vec<f64> = Vec::with_capacity(n + 1);
    z.push(z0);
    for j in 0..n {
        let zj = z[j];
        let step = |zz: f64, d: f64| -zz + 2.0 * k * d;
        let (k1, k2, k3, k4, d0, d1);
        match lag {
            None => {
                let f = |zz: f64| (2.0 * k - 1.0) * zz;
                k1 = f(zj);
                k2 = f(zj + 0.5 * dx * k1);
                k3 = f(zj + 0.5 * dx * k2);
                k4 = f(zj + dx * k3);
                d0 = f64::NAN;
                d1 = f64::NAN;
            }
            Some(m) => {
                let (a, b, dh) = if j >= m {
                    let i = j - m;
                    let dh = match interp {
                        DelayInterpolation::Linear => 0.5 * (z[i] + z[i + 1]),
                        DelayInterpolation::CubicHermite => 0.5 * (z[i] + z[i + 1]) + dx * (sl[i] - sr[i]) / 8.0,
                    };
                    (z[i], z[i + 1], dh)
                } else {
                    (0.0, 0.0, 0.0)
                };
                k1 = step(zj, a);
                k2 = step(zj + 0.5 * dx * k1, dh);
                k3 = step(zj + 0.5 * dx * k2, dh);
                k4 = step(zj + dx * k3, b);
                d0 = a;
                d1 = b;
            }
        }
        let next = zj + dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        z.push(next);
        match lag {
            None => {
                sl.push((2.0 * k - 1.0) * zj);
                sr.push((2.0 * k - 1.0) * next);
            }
            Some(_) => {
                sl.push(step(zj, d0));
                sr.push(step(next, d1));
            }
        }
    }
    // node slopes for the public interpolant: right-sided, last one left-sided
    let mut slopes = sl;
    slopes.push(sr.last().copied().unwrap_or((2.0 * k - 1.0) * z0));
    Ok(OracleSolution { dx, values: z, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: f64, tau: f64) -> FeedbackConfig {
        FeedbackConfig::with_gain(1.0, k, tau, 1.0).unwrap()
    }

    #[test]
    fn chi_examples() {
        for c in [cfg(0.45, 0.0), cfg(-1.0, 0.3), cfg(1.0, 2.0)] {
            assert_eq!(chi(0.0, &c).unwrap(), 1.0);
        }
        assert!((chi(1.0, &cfg(0.45, 0.0)).unwrap() - (-0.05f64).exp()).abs() < 1e-15);
        for k in [-1.0, 0.3, 2.0] {
            assert_eq!(chi(0.3, &cfg(k, 0.5)).unwrap(), (-0.15f64).exp());
        }
        assert!(chi(-1.0, &cfg(0.1, 0.1)).is_err());
    }

    #[test]
    fn longer_delay_decays_faster() {
        let at8: Vec<f64> = [5.0, 2.5, 1.0, 0.5, 0.0].iter().map(|&t| chi(8.0, &cfg(0.45, t)).unwrap()).collect();
        assert!(at8.windows(2).all(|w| w[0] < w[1]), "{at8:?}");
    }

    #[test]
    fn term_cap_is_enforced() {
        let ev = ChiEvaluator::new(cfg(0.5, 1e-4));
        assert!(matches!(ev.chi(1.0), Err(Error::TermCapExceeded { .. })));
        assert!(ev.clone().with_term_cap(20_000).chi(1.0).is_ok());
    }

    #[test]
    fn summation_modes_agree_and_direct_overflows() {
        for (k, tau) in [(0.45, 0.5), (-0.45, 0.5), (1.0, 0.2), (-0.9, 0.3)] {
            let log = ChiEvaluator::new(cfg(k, tau));
            let dir = log.clone().with_mode(SummationMode::DirectKahan);
            // alternating series cancel; measure against the sum of term magnitudes
            let mag = ChiEvaluator::new(cfg(f64::abs(k), tau));
            for i in 0..60 {
                let t = 0.17 * i as f64;
                let (a, b) = (log.chi(t).unwrap(), dir.chi(t).unwrap());
                assert!((a - b).abs() <= 1e-12 * mag.chi(t).unwrap(), "{k} {tau} {t}: {a} {b}");
                let (a, b) = (log.rho(t).unwrap(), dir.rho(t).unwrap());
                assert!((a - b).abs() <= 1e-12 * mag.rho(t).unwrap().max(1e-300));
                let (a, b) = (log.growth_integral(t).unwrap(), dir.growth_integral(t).unwrap());
                assert!((a - b).abs() <= 1e-12 * mag.growth_integral(t).unwrap().max(1e-300));
            }
        }
        let dir = ChiEvaluator::new(cfg(0.1, 0.01)).with_mode(SummationMode::DirectKahan);
        assert!(matches!(dir.chi(2.0), Err(Error::SeriesOverflow { .. })));
        assert!(ChiEvaluator::new(cfg(0.1, 0.01)).chi(2.0).unwrap().is_finite());
    }

    #[test]
    fn continuity_at_kinks() {
        let ev = ChiEvaluator::new(cfg(0.8, 0.5));
        for n in 1..8 {
            let t = n as f64 * 0.5;
            let (l, r) = (ev.chi(t - 1e-13).unwrap(), ev.chi(t + 1e-13).unwrap());
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn feedback_slows_decay() {
        let ev = ChiEvaluator::new(cfg(0.45, 0.5));
        for i in 0..400 {
            let t = 0.5 + 0.025 * i as f64;
            assert!(ev.chi(t).unwrap() >= ev.envelope(t));
        }
    }

    #[test]
    fn derivative_examples() {
        let c = cfg(0.45, 1.0);
        let d = chi_derivative(0.4, &c).unwrap();
        assert!((d.value + 0.5 * (-0.2f64).exp()).abs() < 1e-15 && !d.at_kink);
        let c0 = cfg(0.45, 0.0);
        let d0 = chi_derivative(1.3, &c0).unwrap();
        assert!((d0.value + 0.5 * 0.1 * chi(1.3, &c0).unwrap()).abs() < 1e-15);
        let h = 1e-6;
        let fd = (chi(2.3 + h, &c).unwrap() - chi(2.3 - h, &c).unwrap()) / (2.0 * h);
        let an = chi_derivative(2.3, &c).unwrap().value;
        assert!(((fd - an) / an).abs() < 1e-6);
        let kink = chi_derivative(1.0, &c).unwrap();
        assert!(kink.at_kink);
        // right derivative picks up the γ k jump
        assert!((kink.value - (-0.5 * (-0.5f64).exp() + 0.45)).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_delay_equation() {
        let ev = ChiEvaluator::new(cfg(-0.7, 0.4));
        for i in 1..50 {
            let t = 0.131 * i as f64;
            let lhs = ev.chi_derivative(t).unwrap().value;
            let delayed = if t >= 0.4 { ev.chi(t - 0.4).unwrap() } else { 0.0 };
            let rhs = -0.5 * ev.chi(t).unwrap() - 0.7 * delayed;
            assert!((lhs - rhs).abs() < 1e-13, "{t}");
        }
    }

    #[test]
    fn rho_is_shifted_ratio() {
        for (k, tau) in [(0.45, 0.5), (-0.3, 0.2), (0.7, 0.0)] {
            let ev = ChiEvaluator::new(cfg(k, tau));
            for i in 0..40 {
                let t = 0.2 * i as f64;
                let ratio = (ev.chi(t).unwrap() - ev.envelope(t)) / k;
                assert!((ev.rho(t).unwrap() - ratio).abs() < 1e-12);
            }
        }
        let zero = ChiEvaluator::new(cfg(0.0, 0.5));
        // k = 0 keeps only the first shifted term
        assert!((zero.rho(1.2).unwrap() - (-0.35f64).exp() * 0.7).abs() < 1e-15);
    }

    #[test]
    fn rho_derivative_matches_finite_difference() {
        let ev = ChiEvaluator::new(cfg(0.6, 0.3));
        let h = 1e-6;
        for t in [0.45, 0.8, 1.7] {
            let fd = (ev.rho(t + h).unwrap() - ev.rho(t - h).unwrap()) / (2.0 * h);
            assert!((fd - ev.rho_derivative(t).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn growth_integral_matches_quadrature() {
        for (k, tau) in [(0.45, 0.5), (-0.8, 0.3), (1.0, 0.0)] {
            let ev = ChiEvaluator::new(cfg(k, tau));
            let w = 2.1;
            let f = |s: f64| (0.5 * s).exp() * ev.chi(s).unwrap();
            let brk: Vec<f64> = (1..10).map(|n| n as f64 * tau).collect();
            let q = crate::quadrature::adaptive_simpson(&f, 0.0, w, brk, 1e-13).unwrap();
            assert!((q - ev.growth_integral(w).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn first_order_chi() {
        let c0 = cfg(0.45, 0.0);
        assert_eq!(chi_first_order(0.7, &c0).unwrap(), chi(0.7, &c0).unwrap());
        let free = cfg(0.0, 0.3);
        assert!((chi_first_order(0.7, &free).unwrap() - (-0.35f64).exp()).abs() < 1e-15);
        let err = |tau: f64| {
            let c = cfg(1.0, tau);
            (chi_first_order(0.1, &c).unwrap() - chi(0.1, &c).unwrap()).abs()
        };
        let ratio = err(0.01) / err(0.005);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn mean_quadrature_examples() {
        use num_complex::Complex64 as C;
        let c = cfg(0.45, 0.5);
        assert_eq!(mean_quadrature(2.0, C::default(), &c).unwrap(), C::default());
        let a = C::new(0.0, 5.0);
        assert!(initial_quadrature(a, a, 0.0).norm() < 1e-15);
        let one = C::new(1.0, 0.0);
        let x0 = initial_quadrature(one, one, 0.0);
        let m = mean_quadrature(1.0, x0, &cfg(0.0, 0.0)).unwrap();
        assert!((m - (-0.5f64).exp()).norm() < 1e-15);
    }

    #[test]
    fn kernels_are_causal_and_consistent() {
        let c = FeedbackConfig::new(1.3, 0.9, 1.1, 0.4, 0.3, 0.8).unwrap();
        let ks = kernels(&c);
        let zero = Complex64::default();
        assert_eq!(ks.all(-0.1).unwrap(), KernelValues::default());
        for x in [0.0, 0.1, 0.29] {
            assert_eq!(ks.all(x).unwrap().r, zero);
            assert_eq!(ks.r(x).unwrap(), zero);
            assert_eq!(ks.r_f(x).unwrap(), zero);
        }
        let p = Complex64::from_polar(1.0, -0.4);
        for i in 0..50 {
            let x = 0.037 * i as f64 + 0.001;
            let v = ks.all(x).unwrap();
            assert!((v.f - ks.f(x).unwrap()).norm() < 1e-15 && (v.f_f - ks.f_f(x).unwrap()).norm() < 1e-15);
            assert!((v.r - ks.r(x).unwrap()).norm() < 1e-15 && (v.r_f - ks.r_f(x).unwrap()).norm() < 1e-15);
            let r1 = -2.0 * p * v.f.conj() - p * p * v.r;
            assert!((ks.r1(x).unwrap() - r1).norm() < 1e-14);
            assert!((v.r1_f - (-2.0 * p * v.f_f.conj() - p * p * v.r_f)).norm() < 1e-14);
        }
    }

    #[test]
    fn unit_efficiency_collapses_f_kernels() {
        let c = FeedbackConfig::new(1.0, 0.9, 1.1, 0.4, 0.3, 1.0).unwrap();
        let ks = kernels(&c);
        for i in 0..40 {
            let x = 0.05 * i as f64;
            assert!((ks.f(x).unwrap() - ks.f_f(x).unwrap()).norm() < 1e-15);
            let v = ks.all(x).unwrap();
            assert!((v.r - v.r_f).norm() < 1e-15);
        }
    }

    #[test]
    fn r_kernel_equals_compact_form() {
        // Θ(x-τ) χ(x-τ) - ρ(x) once the 2τ bracket is expanded
        let c = FeedbackConfig::new(1.0, 0.7, 0.9, 0.2, 0.25, 1.0).unwrap();
        let ks = kernels(&c);
        let ev = ks.evaluator();
        let pre = Complex64::new(0.0, 0.5 * 0.7) * Complex64::from_polar(1.0, 1.1);
        for i in 0..40 {
            let x = 0.25 + 0.033 * i as f64 + 1e-9;
            let compact = pre * (ev.chi(x - 0.25).unwrap() - ev.rho(x).unwrap());
            assert!((ks.r(x).unwrap() - compact).norm() < 1e-14, "{x}");
        }
    }

    #[test]
    fn oracle_examples() {
        let free = dde_oracle(1.0, 0.0, 0.25, 5.0, 1e-3).unwrap();
        for (j, z) in free.values.iter().enumerate() {
            assert!((z - (-free.xi(j)).exp()).abs() < 1e-10);
        }
        let zero = dde_oracle(0.0, 0.45, 0.25, 5.0, 1e-3).unwrap();
        assert!(zero.values.iter().all(|&z| z == 0.0));
        assert!(matches!(dde_oracle(1.0, 0.45, 0.25, 5.0, 0.1), Err(Error::StepTooLarge { .. })));
        assert!(matches!(dde_oracle(1.0, 0.45, 0.25, 5.0, 0.0011), Err(Error::StepNotCommensurate { .. })));
    }

    #[test]
    fn oracle_matches_series() {
        let c = cfg(0.45, 0.5);
        let ev = ChiEvaluator::new(c);
        let sol = dde_oracle(1.0, 0.45, 0.25, 5.0, 1e-3).unwrap();
        let worst =
            (0..sol.values.len()).map(|j| (sol.values[j] - ev.chi(2.0 * sol.xi(j)).unwrap()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
        let mid = sol.value_at(1.2345);
        assert!((mid - ev.chi(2.469).unwrap()).abs() < 1e-8);

        let lin = dde_oracle_with(1.0, 0.45, 0.25, 5.0, 1e-3, DelayInterpolation::Linear).unwrap();
        let worst_lin =
            (0..lin.values.len()).map(|j| (lin.values[j] - ev.chi(2.0 * lin.xi(j)).unwrap()).abs()).fold(0.0, f64::max);
        assert!(worst_lin > worst);
    }

    #[test]
    fn oracle_without_delay() {
        let sol = dde_oracle(2.0, 0.3, 0.0, 3.0, 1e-3).unwrap();
        let last = *sol.values.last().unwrap();
        assert!((last - 2.0 * (-0.4 * 3.0f64).exp()).abs() < 1e-11);
    }
}
