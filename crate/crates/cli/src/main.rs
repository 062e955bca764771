//! `delayfb`: curve data, sweeps and the verification suite.
//!
//! Exit status: 0 on success, 1 if any computation or I/O failed or a
//! verification check did not pass, 2 for usage errors.

mod commands;
mod config;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{parse_seeds, CommandKind, Curve, CurveLabel, FeedbackFlags, Grid, RunConfig};
use delayfb_core::Complex64;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "delayfb", version, about = "Cavity mode under delayed homodyne feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Cavity damping rate γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Feedback gain g.
    #[arg(long)]
    g: Option<f64>,
    /// Feedback phase θ (default π/2).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Homodyne phase φ (default 0).
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Loop delay τ.
    #[arg(long)]
    tau: Option<f64>,
    /// Detection efficiency η.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha0_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha0_im: Option<f64>,
    /// Time grid end (in units of 1/γ when γ = 1).
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of time samples.
    #[arg(long)]
    points: Option<usize>,
    /// Full run record (JSON, or a CSV produced by an earlier run); overrides the other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Mean quadrature χ(t) curves.
    Chi {
        #[command(flatten)]
        common: Common,
    },
    /// Marginal distribution P(x, t) of the cat state.
    Pdist {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4.0)]
        x_max: f64,
        #[arg(long, default_value_t = 2001)]
        x_points: usize,
        /// Where to write the per-slice summary JSON; standard error when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Coherence 2⟨D(2α₀,t)⟩ of the cat state.
    Coherence {
        #[command(flatten)]
        common: Common,
        /// Which sweep to emit when no single curve is selected.
        #[arg(long, value_enum, default_value_t = CoherenceSet::Both)]
        set: CoherenceSet,
    },
    /// Zero-delay stochastic trajectories.
    Trajectories {
        #[command(flatten)]
        common: Common,
        /// Inclusive range `a..b` or comma list.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Comma list of feedback phases to sweep.
        #[arg(long, allow_hyphen_values = true)]
        thetas: Option<String>,
        /// Also integrate in the number basis and report fidelities.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Directory for per-path CSV and binary dumps.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Run the cross-module property suite and print a JSON report.
    Verify {
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum CoherenceSet {
    Delay,
    Efficiency,
    Both,
}

impl Common {
    fn flags(&self) -> FeedbackFlags {
        FeedbackFlags { gamma: self.gamma, g: self.g, theta: self.theta, phi: self.phi, tau: self.tau, eta: self.eta }
    }

    fn alpha0(&self, re: f64, im: f64) -> Complex64 {
        Complex64::new(self.alpha0_re.unwrap_or(re), self.alpha0_im.unwrap_or(im))
    }

    fn grid(&self, t_max: f64, points: usize) -> Grid {
        Grid { start: 0.0, end: self.t_max.unwrap_or(t_max), points: self.points.unwrap_or(points) }
    }
}

fn base_run(kind: CommandKind, curves: Vec<Curve>, alpha0: Complex64, t_grid: Grid) -> RunConfig {
    RunConfig {
        command: kind,
        curves,
        alpha0,
        t_grid,
        x_grid: None,
        seeds: vec![],
        dt: None,
        oracle: false,
        n_max: None,
    }
}

fn curve(label: CurveLabel, feedback: delayfb_core::FeedbackConfig) -> Curve {
    Curve { label, feedback }
}

fn resolve(common: &Common, kind: CommandKind, build: impl FnOnce(&Common) -> Result<RunConfig>) -> Result<RunConfig> {
    let run = match &common.config {
        Some(path) => {
            let run = RunConfig::load(path)?;
            if run.command != kind {
                bail!("{} holds a {:?} run, not {:?}", path.display(), run.command, kind);
            }
            run
        }
        None => build(common)?,
    };
    run.validate()?;
    Ok(run)
}

fn chi_run(c: &Common) -> Result<RunConfig> {
    let f = c.flags();
    let curves = if f.selects_curve() {
        vec![curve(CurveLabel::Custom, f.build(0.45, 0.0, 1.0)?)]
    } else {
        let mut v = vec![curve(CurveLabel::NoFeedback, f.preset(0.0, 0.0, 1.0)?)];
        for gtau in [0.0, 0.5, 1.0, 2.5, 5.0] {
            let gamma = c.gamma.unwrap_or(1.0);
            v.push(curve(CurveLabel::DelaySweep, f.preset(0.45, gtau / gamma, 1.0)?));
        }
        v
    };
    Ok(base_run(CommandKind::Chi, curves, c.alpha0(0.0, 5.0), c.grid(10.0, 201)))
}

fn pdist_run(c: &Common, x_max: f64, x_points: usize) -> Result<RunConfig> {
    let f = c.flags();
    let gamma = c.gamma.unwrap_or(1.0);
    let curves = if f.selects_curve() {
        vec![curve(CurveLabel::Custom, f.build(1.0, 0.0, 1.0)?)]
    } else {
        vec![
            curve(CurveLabel::PanelA, f.preset(0.0, 0.0, 1.0)?),
            curve(CurveLabel::PanelB, f.preset(1.0, 0.0, 1.0)?),
            curve(CurveLabel::PanelC, f.preset(1.0, 0.01 / gamma, 1.0)?),
            curve(CurveLabel::PanelD, f.preset(1.0, 0.01 / gamma, 0.9)?),
        ]
    };
    let mut run = base_run(CommandKind::Pdist, curves, c.alpha0(0.0, 5.0), c.grid(0.1, 6));
    run.x_grid = Some(Grid { start: -x_max, end: x_max, points: x_points });
    Ok(run)
}

fn coherence_run(c: &Common, set: CoherenceSet) -> Result<RunConfig> {
    let f = c.flags();
    let gamma = c.gamma.unwrap_or(1.0);
    let curves = if f.selects_curve() {
        vec![curve(CurveLabel::Custom, f.build(1.0, 0.0, 1.0)?)]
    } else {
        let mut v = Vec::new();
        if set != CoherenceSet::Efficiency {
            v.push(curve(CurveLabel::NoFeedback, f.preset(0.0, 0.0, 1.0)?));
            for gtau in [0.0, 0.001, 0.01, 0.02] {
                v.push(curve(CurveLabel::DelaySweep, f.preset(1.0, gtau / gamma, 1.0)?));
            }
        }
        if set != CoherenceSet::Delay {
            for eta in [0.75, 0.9, 0.95, 1.0] {
                v.push(curve(CurveLabel::EfficiencySweep, f.preset(1.0, 0.01 / gamma, eta)?));
            }
        }
        v
    };
    Ok(base_run(CommandKind::Coherence, curves, c.alpha0(0.0, 5.0), c.grid(0.1, 201)))
}

fn trajectories_run(
    c: &Common,
    seeds: &str,
    dt: f64,
    thetas: Option<&str>,
    oracle: bool,
    n_max: usize,
) -> Result<RunConfig> {
    let f = c.flags();
    let base = f.build(1.0, 0.0, 1.0)?;
    let curves = match thetas {
        Some(list) => list
            .split(',')
            .map(|s| -> Result<Curve> {
                let th: f64 = s.trim().parse().with_context(|| format!("theta {s:?}"))?;
                Ok(curve(CurveLabel::ThetaSweep, base.with_theta(th)?))
            })
            .collect::<Result<_>>()?,
        None => vec![curve(CurveLabel::Custom, base)],
    };
    let mut run = base_run(CommandKind::Trajectories, curves, c.alpha0(0.0, 1.0), c.grid(0.5, 51));
    run.seeds = parse_seeds(seeds)?;
    run.dt = Some(dt);
    run.oracle = oracle;
    run.n_max = Some(n_max);
    Ok(run)
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn emit_csv(run: &RunConfig, output: Option<&Path>, body: &str) -> Result<()> {
    emit(output, &format!("{}\n{body}", run.header()))
}

fn emit_summary<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("DELAYFB_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("DELAYFB_THREADS = {v:?}"))?;
        if n == 0 {
            bail!("DELAYFB_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Chi { common } => {
            let run = resolve(&common, CommandKind::Chi, chi_run)?;
            emit_csv(&run, common.output.as_deref(), &commands::chi(&run)?)?;
        }
        Command::Pdist { common, x_max, x_points, summary } => {
            let run = resolve(&common, CommandKind::Pdist, |c| pdist_run(c, x_max, x_points))?;
            let (body, slices) = commands::pdist(&run)?;
            emit_csv(&run, common.output.as_deref(), &body)?;
            emit_summary(summary.as_deref(), &slices)?;
        }
        Command::Coherence { common, set } => {
            let run = resolve(&common, CommandKind::Coherence, |c| coherence_run(c, set))?;
            emit_csv(&run, common.output.as_deref(), &commands::coherence(&run)?)?;
        }
        Command::Trajectories { common, seeds, dt, thetas, oracle, n_max, summary, dump_dir } => {
            let run = resolve(&common, CommandKind::Trajectories, |c| {
                trajectories_run(c, &seeds, dt, thetas.as_deref(), oracle, n_max)
            })?;
            if let Some(dir) = &dump_dir {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let (body, report) = commands::trajectories(&run, dump_dir.as_deref())?;
            emit_csv(&run, common.output.as_deref(), &body)?;
            emit_summary(summary.as_deref(), &report)?;
        }
        Command::Verify { output } => {
            let report = delayfb_core::verify::run_suite();
            emit(output.as_deref(), &(report.to_json() + "\n"))?;
            return Ok(report.all_passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
