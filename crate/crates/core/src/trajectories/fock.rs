//! Number-basis integration of the linear trajectory equation, used as an oracle.
//!
//! `d|ψ⟩ = (A dt + B dw)|ψ⟩` with
//! `A = -(γ/2)a†a - (γ/2)F² - iγF a e^{-iφ}`, `B = √γ(a e^{-iφ} - iF)` and
//! `F = g(a e^{-iθ} + a†e^{iθ})/2`, truncated to `n_max + 1` levels. The norm is
//! monitored but never restored; its drift is the trajectory weight.

use super::path::WienerPath;
use crate::error::{Error, Result};
use crate::model::FeedbackConfig;
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);
const LEAK_TOLERANCE: f64 = 1e-8;

/// Stepping rule for the number-basis integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FockScheme {
    EulerMaruyama,
    #[default]
    Milstein,
}

/// Options for [`fock_sde_oracle_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockOptions {
    pub scheme: FockScheme,
    /// Keep every `stride`-th state (the final one is always kept).
    pub stride: usize,
}

impl Default for FockOptions {
    fn default() -> Self {
        Self { scheme: FockScheme::Milstein, stride: 1 }
    }
}

/// Recorded number-basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct FockTrajectory {
    pub indices: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
}

struct Dense {
    dim: usize,
    data: Vec<Complex64>,
}

impl Dense {
    fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::default(); dim * dim] }
    }

    fn at(&mut self, r: usize, c: usize) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }

    fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    fn mul(&self, other: &Dense) -> Dense {
        let mut out = Dense::zeros(self.dim);
        for r in 0..self.dim {
            for k in 0..self.dim {
                let a = self.get(r, k);
                if a == Complex64::default() {
                    continue;
                }
                for c in 0..self.dim {
                    out.data[r * self.dim + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    fn combine(terms: &[(&Dense, Complex64)]) -> Dense {
        let mut out = Dense::zeros(terms[0].0.dim);
        for (m, s) in terms {
            for (o, v) in out.data.iter_mut().zip(&m.data) {
                *o += s * v;
            }
        }
        out
    }
}

/// `e^{-|α|²/2} αⁿ/√n!` for `n = 0..=n_max`.
pub fn coherent_vector(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(n_max + 1);
    let mut cur = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..=n_max {
        v.push(cur);
        cur *= alpha / ((n + 1) as f64).sqrt();
    }
    v
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `⟨β|ψ⟩` in the truncated basis.
pub fn coherent_projection(psi: &[Complex64], beta: Complex64) -> Complex64 {
    inner(&coherent_vector(beta, psi.len() - 1), psi)
}

/// `|⟨β|ψ⟩|² / ⟨ψ|ψ⟩`.
pub fn coherent_fidelity(psi: &[Complex64], beta: Complex64) -> f64 {
    coherent_projection(psi, beta).norm_sqr() / inner(psi, psi).re
}

/// Best coherent fit `β = ⟨a⟩` and the residual `1 - fidelity`.
pub fn coherent_fit(psi: &[Complex64]) -> (Complex64, f64) {
    let norm = inner(psi, psi).re;
    let mean: Complex64 =
        (1..psi.len()).map(|n| psi[n - 1].conj() * psi[n] * (n as f64).sqrt()).sum::<Complex64>() / norm;
    (mean, 1.0 - coherent_fidelity(psi, mean))
}

/// Milstein integration on the path grid, recording every state.
pub fn fock_sde_oracle(
    path: &WienerPath,
    alpha0: Complex64,
    config: &FeedbackConfig,
    n_max: usize,
) -> Result<FockTrajectory> {
    fock_sde_oracle_with(path, alpha0, config, n_max, FockOptions::default())
}

pub fn fock_sde_oracle_with(
    path: &WienerPath,
    alpha0: Complex64,
    config: &FeedbackConfig,
    n_max: usize,
    options: FockOptions,
) -> Result<FockTrajectory> {
    if config.tau() != 0.0 {
        return Err(Error::NonZeroDelay(config.tau()));
    }
    let r = alpha0.norm();
    if r * r + 5.0 * r >= n_max as f64 {
        return Err(Error::Precondition(format!("n_max = {n_max} too small for |alpha0| = {r}")));
    }
    let stride = options.stride.max(1);
    let dim = n_max + 1;
    let (gamma, g, th, ph) = (config.gamma(), config.g(), config.theta(), config.phi());
    let mut a = Dense::zeros(dim);
    let mut ad = Dense::zeros(dim);
    let mut num = Dense::zeros(dim);
    for n in 1..dim {
        *a.at(n - 1, n) = Complex64::new((n as f64).sqrt(), 0.0);
        *ad.at(n, n - 1) = Complex64::new((n as f64).sqrt(), 0.0);
        *num.at(n, n) = Complex64::new(n as f64, 0.0);
    }
    let f = Dense::combine(&[
        (&a, 0.5 * g * Complex64::from_polar(1.0, -th)),
        (&ad, 0.5 * g * Complex64::from_polar(1.0, th)),
    ]);
    let ff = f.mul(&f);
    let fa = f.mul(&a);
    let drift = Dense::combine(&[
        (&num, Complex64::new(-0.5 * gamma, 0.0)),
        (&ff, Complex64::new(-0.5 * gamma, 0.0)),
        (&fa, -I * gamma * Complex64::from_polar(1.0, -ph)),
    ]);
    let sg = gamma.sqrt();
    let diffusion = Dense::combine(&[(&a, sg * Complex64::from_polar(1.0, -ph)), (&f, -I * sg)]);
    let diffusion2 = diffusion.mul(&diffusion);

    let dt = path.dt();
    let mut psi = coherent_vector(alpha0, n_max);
    let mut out = FockTrajectory { indices: vec![0], times: vec![0.0], states: vec![psi.clone()] };
    let mut next = vec![Complex64::default(); dim];
    let n_steps = path.n_steps();
    for (i, &dw) in path.increments().iter().enumerate() {
        let milstein = match options.scheme {
            FockScheme::Milstein => 0.5 * (dw * dw - dt),
            FockScheme::EulerMaruyama => 0.0,
        };
        for (r, slot) in next.iter_mut().enumerate() {
            let mut acc = psi[r];
            for (c, p) in psi.iter().enumerate() {
                let m = drift.get(r, c) * dt + diffusion.get(r, c) * dw + diffusion2.get(r, c) * milstein;
                acc += m * p;
            }
            *slot = acc;
        }
        std::mem::swap(&mut psi, &mut next);
        let step = i + 1;
        let norm = inner(&psi, &psi).re;
        let top = psi[n_max].norm_sqr();
        if top.is_nan() || top > LEAK_TOLERANCE * norm {
            return Err(Error::TruncationLeak { population: top / norm, t: path.time(step) });
        }
        if step % stride == 0 || step == n_steps {
            out.indices.push(step);
            out.times.push(path.time(step));
            out.states.push(psi.clone());
        }
    }
    Ok(out)
}
