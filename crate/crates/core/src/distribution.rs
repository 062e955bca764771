//! Marginal distribution of the measured quadrature and cat-state fringes.
//!
//! Gaussians are written `exp{-(x - x̄)²/σ⁽²⁾} / √(π σ⁽²⁾)`, where σ⁽²⁾ is twice
//! the usual variance. The detection efficiency is called `efficiency` and the
//! fringe exponent `visibility_exponent`, so that neither is a bare η.

use crate::dde::{quadrature_amplitude, ChiEvaluator};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{cat_state, log_overlap, CoherentSuperposition, FeedbackConfig};
use crate::quadrature::simpson_uniform;
use crate::series::KahanComplex;
use num_complex::Complex64;
use std::f64::consts::PI;

/// The two numbers that fix every Gaussian in the distribution at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalStats {
    pub chi: f64,
    pub sigma2: f64,
}

impl MarginalStats {
    pub fn at(t: f64, config: &FeedbackConfig) -> Result<Self> {
        let ev = ChiEvaluator::new(*config);
        Ok(Self { chi: ev.chi(t)?, sigma2: crate::moments::sigma2_with(&ev, t)? })
    }
}

/// Precomputed mixture of complex Gaussians for one state and one time.
#[derive(Debug, Clone)]
pub struct MarginalDensity {
    stats: MarginalStats,
    /// (log prefactor, complex centre)
    terms: Vec<(Complex64, Complex64)>,
}

impl MarginalDensity {
    pub fn new(stats: MarginalStats, state: &CoherentSuperposition, phi: f64) -> Self {
        let norm = -0.5 * (PI * stats.sigma2).ln();
        let terms = state
            .density_elements()
            .filter(|e| e.weight != Complex64::default())
            .map(|e| {
                let pre = e.weight.ln() + log_overlap(e.beta, e.alpha) + norm;
                (pre, quadrature_amplitude(e.alpha, e.beta, phi) * stats.chi)
            })
            .collect();
        Self { stats, terms }
    }

    pub fn stats(&self) -> MarginalStats {
        self.stats
    }

    /// Unreduced complex sum; its imaginary part vanishes for Hermitian states.
    pub fn complex_density(&self, x: f64) -> Complex64 {
        let mut acc = KahanComplex::new();
        for (pre, centre) in &self.terms {
            let d = x - centre;
            acc.add((pre - d * d / self.stats.sigma2).exp());
        }
        acc.value()
    }

    /// Real density; errors if the imaginary residue exceeds 1e-10.
    pub fn density(&self, x: f64) -> Result<f64> {
        let z = self.complex_density(x);
        if z.im.abs() > 1e-10 {
            return Err(Error::Precondition(format!("non-Hermitian residue {} at x = {x}", z.im)));
        }
        Ok(z.re)
    }
}

/// P(x_φ, t) for an arbitrary coherent superposition.
pub fn marginal_pdf(x: f64, t: f64, state: &CoherentSuperposition, config: &FeedbackConfig) -> Result<f64> {
    MarginalDensity::new(MarginalStats::at(t, config)?, state, config.phi()).density(x)
}

/// P(x_φ, t) on a grid of x values, evaluated with the given strategy.
pub fn marginal_pdf_grid(
    xs: &[f64],
    t: f64,
    state: &CoherentSuperposition,
    config: &FeedbackConfig,
    exec: Execution,
) -> Result<Vec<f64>> {
    let dens = MarginalDensity::new(MarginalStats::at(t, config)?, state, config.phi());
    exec.try_map(xs, |&x| dens.density(x))
}

/// `∫ P(x) e^{2ikx} dx` by composite Simpson on `[-half_width, half_width]`.
pub fn pdf_fourier(dens: &MarginalDensity, k: f64, half_width: f64, intervals: usize) -> Complex64 {
    let re = simpson_uniform(&|x| dens.complex_density(x).re * (2.0 * k * x).cos(), -half_width, half_width, intervals);
    let im = simpson_uniform(&|x| dens.complex_density(x).re * (2.0 * k * x).sin(), -half_width, half_width, intervals);
    Complex64::new(re, im)
}

/// η(t) = 1 - χ²(t) / (2σ⁽²⁾(t)).
pub fn visibility_exponent(t: f64, config: &FeedbackConfig) -> Result<f64> {
    let s = MarginalStats::at(t, config)?;
    Ok(1.0 - s.chi * s.chi / (2.0 * s.sigma2))
}

/// Decomposition of a cat state's marginal into envelopes and fringes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatFringeReport {
    pub t: f64,
    pub stats: MarginalStats,
    /// N² of the cat state.
    pub norm_sqr: f64,
    /// Envelope centres sit at `±centre`.
    pub centre: f64,
    /// Coefficient of x in Ω(x, t).
    pub omega_slope: f64,
    pub visibility_exponent: f64,
    /// `⟨α₀|-α₀⟩^{visibility_exponent}`.
    pub overlap_factor: f64,
}

impl CatFringeReport {
    pub fn new(t: f64, alpha0: Complex64, config: &FeedbackConfig) -> Result<Self> {
        let stats = MarginalStats::at(t, config)?;
        let rotated = alpha0 * Complex64::from_polar(1.0, -config.phi());
        let vis = 1.0 - stats.chi * stats.chi / (2.0 * stats.sigma2);
        let n = cat_state(alpha0).terms()[0].coefficient.re;
        Ok(Self {
            t,
            stats,
            norm_sqr: n * n,
            centre: rotated.re * stats.chi,
            omega_slope: 2.0 * rotated.im * stats.chi / stats.sigma2,
            visibility_exponent: vis,
            overlap_factor: (-2.0 * alpha0.norm_sqr() * vis).exp(),
        })
    }

    fn gaussian(&self, x: f64, centre: f64) -> f64 {
        let s = self.stats.sigma2;
        (-(x - centre).powi(2) / s).exp() / (PI * s).sqrt()
    }

    /// p₊²(x).
    pub fn p_plus_sq(&self, x: f64) -> f64 {
        self.gaussian(x, self.centre)
    }

    /// p₋²(x).
    pub fn p_minus_sq(&self, x: f64) -> f64 {
        self.gaussian(x, -self.centre)
    }

    /// Ω(x, t).
    pub fn omega(&self, x: f64) -> f64 {
        self.omega_slope * x
    }

    /// The full cat marginal.
    pub fn pdf(&self, x: f64) -> f64 {
        let (pp, pm) = (self.p_plus_sq(x), self.p_minus_sq(x));
        self.norm_sqr * (pp + pm + 2.0 * (pp * pm).sqrt() * self.omega(x).cos() * self.overlap_factor)
    }

    /// (P_max - P_min)/(P_max + P_min) over the central lobe.
    ///
    /// The lobe runs to the first fringe minimum, `|x| ≤ π/|Ω'|`, capped at 1.
    /// Taking all of `|x| ≤ 1` would also count the Gaussian envelope's own fall-off.
    pub fn fringe_contrast(&self) -> f64 {
        let half = if self.omega_slope == 0.0 { 1.0 } else { (PI / self.omega_slope.abs()).min(1.0) };
        let n = 2000;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=n {
            let p = self.pdf(-half + 2.0 * half * i as f64 / n as f64);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (hi - lo) / (hi + lo)
    }
}

/// Cat-state marginal through the closed-form fringe decomposition.
pub fn cat_pdf(x: f64, t: f64, alpha0: Complex64, config: &FeedbackConfig) -> Result<f64> {
    Ok(CatFringeReport::new(t, alpha0, config)?.pdf(x))
}

/// Estimated decoherence time with a flag for use outside its derivation regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceTime {
    /// `+∞` when k = 1.
    pub value: f64,
    /// Set when τ > 0 or η < 1, where the estimate was not derived.
    pub regime_mismatch: bool,
}

/// t_dec = 1 / (2γ|α₀|²(1 - k)²).
pub fn decoherence_time(config: &FeedbackConfig, alpha0: Complex64) -> DecoherenceTime {
    let d = 1.0 - config.k();
    let value = if d == 0.0 { f64::INFINITY } else { 1.0 / (2.0 * config.gamma() * alpha0.norm_sqr() * d * d) };
    DecoherenceTime { value, regime_mismatch: config.tau() > 0.0 || config.efficiency() < 1.0 }
}
