//! Compensated summation and log-domain helpers.

use num_complex::Complex64;

/// Kahan–Babuška (Neumaier) compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Neumaier-compensated complex sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: Kahan,
    im: Kahan,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `ln n!` for `n = 0..=cap`, accumulated once.
pub fn ln_factorials(cap: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cap + 1);
    let mut acc = Kahan::new();
    out.push(0.0);
    for n in 1..=cap {
        acc.add((n as f64).ln());
        out.push(acc.value());
    }
    out
}

/// `expm1(z)/z`, continuous at zero.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0))
    } else {
        z.exp_m1() / z
    }
}

/// `ln(sum_i exp(z_i))` for complex exponents, stable for large real parts.
///
/// Returns `-inf` (real part) when every input is `-inf`.
pub fn log_sum_exp(zs: &[Complex64]) -> Complex64 {
    let m = zs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Complex64::new(f64::NEG_INFINITY, 0.0);
    }
    let mut acc = KahanComplex::new();
    for z in zs {
        if z.re > f64::NEG_INFINITY {
            acc.add((z - m).exp());
        }
    }
    acc.value().ln() + m
}
