//! Quadrature on piecewise-smooth integrands.
//!
//! Every routine takes a list of breakpoints; integrands here are smooth between
//! kinks at multiples of the delay, and splitting there keeps the rule's order.

use crate::error::{Error, Result};
use crate::series::{Kahan, KahanComplex};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Sorted, de-duplicated breakpoints of `[a, b]` including both ends.
pub fn panels(a: f64, b: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(1e-300);
    let mut pts: Vec<f64> =
        std::iter::once(a).chain(interior.into_iter().filter(|&x| x > a && x < b)).chain(std::iter::once(b)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * scale);
    if pts.len() == 1 {
        pts.push(b);
    }
    pts
}

/// Adaptive Simpson with Richardson extrapolation, run separately on every panel.
///
/// `tol` is the absolute target for the whole interval, shared in proportion to panel width.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: impl IntoIterator<Item = f64>,
    tol: f64,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let pts = panels(a, b, breaks);
    let mut total = Kahan::new();
    for w in pts.windows(2) {
        let (l, r) = (w[0], w[1]);
        if r <= l {
            continue;
        }
        let panel_tol = tol * (r - l) / (b - a);
        let m = 0.5 * (l + r);
        let (fl, fm, fr) = (f(l), f(m), f(r));
        let whole = (r - l) / 6.0 * (fl + 4.0 * fm + fr);
        total.add(simpson_step(f, l, r, fl, fm, fr, whole, panel_tol, 48)?);
    }
    Ok(total.value())
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-13 * a.abs().max(1.0) {
        if !delta.is_finite() {
            return Err(Error::QuadratureFailure { a, b });
        }
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure { a, b });
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

/// Order of the Gauss–Legendre rule used by [`gauss_legendre`].
pub const GL_ORDER: usize = 12;

/// Nodes and weights of the `GL_ORDER`-point rule on `[-1, 1]`.
pub fn gl_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(GL_ORDER))
}

/// An 8-point rule, for inner loops where panels are already short.
pub fn gl_rule8() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(8))
}

/// Gauss–Legendre nodes and weights by Newton iteration on `P_n`.
pub fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Nodes and weights of composite Gauss–Legendre on `[a, b]`.
///
/// Panels are cut at `breaks` and further split so that none is wider than `max_width`.
pub fn gl_nodes(a: f64, b: f64, breaks: impl IntoIterator<Item = f64>, max_width: f64) -> Vec<(f64, f64)> {
    gl_nodes_with(a, b, breaks, max_width, gl_rule())
}

/// [`gl_nodes`] with an explicit base rule on `[-1, 1]`.
pub fn gl_nodes_with(
    a: f64,
    b: f64,
    breaks: impl IntoIterator<Item = f64>,
    max_width: f64,
    rule: &[(f64, f64)],
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if b <= a {
        return out;
    }
    for w in panels(a, b, breaks).windows(2) {
        let (l, r) = (w[0], w[1]);
        if r <= l {
            continue;
        }
        let pieces = ((r - l) / max_width).ceil().max(1.0) as usize;
        let h = (r - l) / pieces as f64;
        for p in 0..pieces {
            let pl = l + h * p as f64;
            let half = 0.5 * h;
            let mid = pl + half;
            for &(x, w) in rule {
                out.push((mid + half * x, half * w));
            }
        }
    }
    out
}

/// Composite Gauss–Legendre integral of a complex function.
pub fn gauss_legendre(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    breaks: impl IntoIterator<Item = f64>,
    max_width: f64,
) -> Complex64 {
    let mut acc = KahanComplex::new();
    for (x, w) in gl_nodes(a, b, breaks, max_width) {
        acc.add(f(x) * w);
    }
    acc.value()
}

/// Composite Simpson on a uniform grid of `n` (even) intervals.
pub fn simpson_uniform(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = Kahan::new();
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add(w * f(a + h * i as f64));
    }
    acc.value() * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = legendre_rule(GL_ORDER);
        let s: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((s - 2.0).abs() < 1e-14);
        let x22: f64 = rule.iter().map(|(x, w)| w * x.powi(22)).sum();
        assert!((x22 - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_kinks() {
        let f = |x: f64| (x - 0.3).abs();
        let v = adaptive_simpson(&f, 0.0, 1.0, [0.3], 1e-12).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-13);
    }

    #[test]
    fn simpson_reports_failure() {
        let f = |x: f64| if x > 0.5 { f64::NAN } else { 0.0 };
        assert!(adaptive_simpson(&f, 0.0, 1.0, [], 1e-12).is_err());
    }

    #[test]
    fn gauss_legendre_on_exponential() {
        let v = gauss_legendre(&mut |x| Complex64::new(0.0, x).exp(), 0.0, 3.0, [1.0], 0.5);
        let exact = (Complex64::new(0.0, 3.0).exp() - 1.0) / Complex64::new(0.0, 1.0);
        assert!((v - exact).norm() < 1e-14);
    }

    #[test]
    fn uniform_simpson() {
        let v = simpson_uniform(&|x| x.exp(), 0.0, 1.0, 1000);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }
}
