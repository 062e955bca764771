//! Reproducible Wiener increments.
//!
//! Increment `i` at refinement level `ℓ` is built from the ChaCha8 keystream
//! seeded with `seed_from_u64(seed)` on stream `ℓ`: words `4i..4i+4` form two
//! `u64`s, mapped to `u₁ ∈ (0, 1]` and `u₂ ∈ [0, 1)` by their top 53 bits, and
//! `Z = √(-2 ln u₁) cos(2π u₂)`. Level 0 draws `ΔW = √dt Z` directly. Level
//! `ℓ + 1` halves every step of level `ℓ` by Brownian-bridge subdivision:
//! `ΔW/2 ± (√dt / 2) Z′`, with `Z′` the `i`-th normal of stream `ℓ + 1`.

use crate::error::{Error, Result};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"WPTH";
const FORMAT_VERSION: u32 = 1;

/// One discretised Wiener realisation on the uniform grid `t_i = i·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    seed: u64,
    level: u32,
    dt: f64,
    increments: Vec<f64>,
    cumulative: Vec<f64>,
}

struct Normals(ChaCha8Rng);

impl Normals {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(0);
        Self(rng)
    }

    fn next(&mut self) -> f64 {
        let scale = 1.0 / (1u64 << 53) as f64;
        let u1 = 1.0 - (self.0.next_u64() >> 11) as f64 * scale;
        let u2 = (self.0.next_u64() >> 11) as f64 * scale;
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

fn prefix_sums(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut w = 0.0;
    out.push(w);
    for &d in increments {
        w += d;
        out.push(w);
    }
    out
}

/// Level-0 path with `round(t_max / dt)` steps.
pub fn generate_path(seed: u64, dt: f64, t_max: f64) -> Result<WienerPath> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidTime(t_max));
    }
    let n = (t_max / dt).round() as usize;
    let mut normals = Normals::new(seed, 0);
    let sd = dt.sqrt();
    let increments: Vec<f64> = (0..n).map(|_| sd * normals.next()).collect();
    WienerPath::from_parts(seed, 0, dt, increments)
}

impl WienerPath {
    /// Builds a path from explicit increments, e.g. the zero path or a single kick.
    pub fn from_increments(dt: f64, increments: Vec<f64>) -> Result<Self> {
        Self::from_parts(0, 0, dt, increments)
    }

    fn from_parts(seed: u64, level: u32, dt: f64, increments: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
        }
        if let Some(bad) = increments.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite { name: "increment", value: *bad });
        }
        let cumulative = prefix_sums(&increments);
        Ok(Self { seed, level, dt, increments, cumulative })
    }

    /// The same realisation on a grid of half the step.
    pub fn refine(&self) -> Self {
        let level = self.level + 1;
        let mut normals = Normals::new(self.seed, level as u64);
        let half = 0.5 * self.dt.sqrt();
        let mut increments = Vec::with_capacity(2 * self.increments.len());
        for &d in &self.increments {
            let z = half * normals.next();
            increments.push(0.5 * d + z);
            increments.push(0.5 * d - z);
        }
        let cumulative = prefix_sums(&increments);
        Self { seed: self.seed, level, dt: 0.5 * self.dt, increments, cumulative }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of halvings applied since generation.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `w(t_i)` for `i = 0..=n_steps`; the first entry is 0.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.n_steps())
    }

    /// Little-endian dump: `WPTH`, version `u32`, seed `u64`, level `u32`,
    /// dt `f64`, step count `u64`, then the increments as `f64`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&self.level.to_le_bytes())?;
        out.write_all(&self.dt.to_le_bytes())?;
        out.write_all(&(self.increments.len() as u64).to_le_bytes())?;
        for d in &self.increments {
            out.write_all(&d.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Format(format!("path dump: {e}"));
        let mut buf4 = [0u8; 4];
        let mut buf8 = [0u8; 8];
        input.read_exact(&mut buf4).map_err(io)?;
        if &buf4 != MAGIC {
            return Err(Error::Format("path dump: bad magic".into()));
        }
        input.read_exact(&mut buf4).map_err(io)?;
        if u32::from_le_bytes(buf4) != FORMAT_VERSION {
            return Err(Error::Format("path dump: unsupported version".into()));
        }
        input.read_exact(&mut buf8).map_err(io)?;
        let seed = u64::from_le_bytes(buf8);
        input.read_exact(&mut buf4).map_err(io)?;
        let level = u32::from_le_bytes(buf4);
        input.read_exact(&mut buf8).map_err(io)?;
        let dt = f64::from_le_bytes(buf8);
        input.read_exact(&mut buf8).map_err(io)?;
        let n = u64::from_le_bytes(buf8) as usize;
        let mut increments = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            input.read_exact(&mut buf8).map_err(io)?;
            increments.push(f64::from_le_bytes(buf8));
        }
        Self::from_parts(seed, level, dt, increments)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = generate_path(11, 1e-3, 0.5).unwrap();
        let b = generate_path(11, 1e-3, 0.5).unwrap();
        let c = generate_path(12, 1e-3, 0.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.increments(), c.increments());
        assert_eq!(a.n_steps(), 500);
        assert_eq!(a.cumulative()[0], 0.0);
    }

    #[test]
    fn refinement_preserves_coarse_increments() {
        let a = generate_path(3, 0.01, 1.0).unwrap();
        let f = a.refine();
        assert_eq!(f.n_steps(), 200);
        for (i, d) in a.increments().iter().enumerate() {
            let pair = f.increments()[2 * i] + f.increments()[2 * i + 1];
            assert!((pair - d).abs() < 1e-15);
        }
        assert!((f.cumulative()[200] - a.cumulative()[100]).abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let a = generate_path(5, 0.02, 0.3).unwrap().refine();
        let mut buf = Vec::new();
        a.write_binary(&mut buf).unwrap();
        assert_eq!(WienerPath::read_binary(buf.as_slice()).unwrap(), a);
        buf[0] = b'X';
        assert!(WienerPath::read_binary(buf.as_slice()).is_err());
    }
}
