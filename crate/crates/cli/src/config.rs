//! The resolved run record written into every output header.

use anyhow::{bail, Context, Result};
use delayfb_core::{Complex64, FeedbackConfig};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Chi,
    Pdist,
    Coherence,
    Trajectories,
}

/// Uniform grid `start, …, end` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.start];
        }
        let h = (self.end - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + h * i as f64).collect()
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite() && self.end >= self.start && self.points >= 1) {
            bail!("invalid {name} grid {self:?}");
        }
        Ok(())
    }
}

/// One curve, panel or sweep member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub label: CurveLabel,
    pub feedback: FeedbackConfig,
}

/// Short tag for a curve, e.g. `tau=0.01` or `panel-b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveLabel {
    NoFeedback,
    Custom,
    DelaySweep,
    EfficiencySweep,
    PanelA,
    PanelB,
    PanelC,
    PanelD,
    ThetaSweep,
}

impl CurveLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveLabel::NoFeedback => "no-feedback",
            CurveLabel::Custom => "custom",
            CurveLabel::DelaySweep => "delay-sweep",
            CurveLabel::EfficiencySweep => "efficiency-sweep",
            CurveLabel::PanelA => "panel-a",
            CurveLabel::PanelB => "panel-b",
            CurveLabel::PanelC => "panel-c",
            CurveLabel::PanelD => "panel-d",
            CurveLabel::ThetaSweep => "theta-sweep",
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub curves: Vec<Curve>,
    pub alpha0: Complex64,
    pub t_grid: Grid,
    #[serde(default)]
    pub x_grid: Option<Grid>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub n_max: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.curves.is_empty() {
            bail!("run has no curves");
        }
        self.t_grid.check("time")?;
        if self.t_grid.start < 0.0 {
            bail!("times must be non-negative");
        }
        if let Some(x) = &self.x_grid {
            x.check("x")?;
        }
        if self.command == CommandKind::Trajectories {
            if self.seeds.is_empty() {
                bail!("trajectories need at least one seed");
            }
            match self.dt {
                Some(dt) if dt > 0.0 && dt.is_finite() => {}
                _ => bail!("trajectories need a positive dt"),
            }
        }
        Ok(())
    }

    /// The `# {json}` line that heads every CSV.
    pub fn header(&self) -> String {
        format!("# {}", serde_json::to_string(self).expect("run config serialises"))
    }

    /// Parses a header line, raw JSON, or a whole CSV whose first line is a header.
    pub fn parse(text: &str) -> Result<Self> {
        let first = text.lines().next().unwrap_or("").trim();
        let json = match first.strip_prefix('#') {
            Some(rest) => rest.trim(),
            None => text.trim(),
        };
        serde_json::from_str(json).context("parsing run config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = Self::parse(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Feedback flags as typed; unset values fall back per subcommand.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeedbackFlags {
    pub gamma: Option<f64>,
    pub g: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
}

impl FeedbackFlags {
    /// True if any flag that selects a single curve was given.
    pub fn selects_curve(&self) -> bool {
        self.g.is_some() || self.tau.is_some() || self.eta.is_some() || self.theta.is_some() || self.phi.is_some()
    }

    /// Builds a config with the given fallbacks for g, τ and η.
    pub fn build(&self, g: f64, tau: f64, eta: f64) -> Result<FeedbackConfig> {
        Ok(FeedbackConfig::new(
            self.gamma.unwrap_or(1.0),
            self.g.unwrap_or(g),
            self.theta.unwrap_or(FRAC_PI_2),
            self.phi.unwrap_or(0.0),
            self.tau.unwrap_or(tau),
            self.eta.unwrap_or(eta),
        )?)
    }

    /// A config at the flagged γ, θ, φ with the given gain, delay and efficiency.
    pub fn preset(&self, g: f64, tau: f64, eta: f64) -> Result<FeedbackConfig> {
        Ok(FeedbackConfig::new(
            self.gamma.unwrap_or(1.0),
            g,
            self.theta.unwrap_or(FRAC_PI_2),
            self.phi.unwrap_or(0.0),
            tau,
            eta,
        )?)
    }
}

/// Parses `a..b` (inclusive) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().context("seed range start")?;
        let b: u64 = b.trim().parse().context("seed range end")?;
        if b < a {
            bail!("empty seed range {s}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse::<u64>().with_context(|| format!("seed {p:?}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_forms() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("4, 7,9").unwrap(), vec![4, 7, 9]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn header_round_trip() {
        let run = RunConfig {
            command: CommandKind::Chi,
            curves: vec![Curve {
                label: CurveLabel::Custom,
                feedback: FeedbackConfig::with_gain(1.0, 0.45, 0.1, 1.0).unwrap(),
            }],
            alpha0: Complex64::new(0.1, 1.0 / 3.0),
            t_grid: Grid { start: 0.0, end: 10.0, points: 101 },
            x_grid: None,
            seeds: vec![],
            dt: None,
            oracle: false,
            n_max: None,
        };
        let line = run.header();
        assert!(line.starts_with("# {"));
        assert_eq!(RunConfig::parse(&format!("{line}\na,b\n")).unwrap(), run);
        assert!(RunConfig::parse("{\"command\":\"chi\",\"bogus\":1}").is_err());
    }
}
