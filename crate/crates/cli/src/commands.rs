//! Subcommand bodies. Each returns the CSV body; the caller adds the header.

use crate::config::{Curve, RunConfig};
use anyhow::{Context, Result};
use delayfb_core::charfn::coherence_curve;
use delayfb_core::dde::ChiEvaluator;
use delayfb_core::distribution::{CatFringeReport, MarginalDensity, MarginalStats};
use delayfb_core::model::cat_state;
use delayfb_core::quadrature::simpson_uniform;
use delayfb_core::trajectories::{
    coherence_trajectory, coherent_fidelity, coherent_projection, fock_sde_oracle_with, generate_path, trajectory,
    write_trajectory_csv, CoherenceMode, FockOptions,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

fn curve_prefix(c: &Curve) -> String {
    let f = &c.feedback;
    format!("{},{},{},{},{}", c.label.as_str(), f.k(), f.gamma() * f.tau(), f.efficiency(), f.theta())
}

/// `curve,k,gamma_tau,eta,theta,gamma_t,chi`.
pub fn chi(run: &RunConfig) -> Result<String> {
    let ts = run.t_grid.values();
    let blocks: Vec<String> = run
        .curves
        .par_iter()
        .map(|c| -> Result<String> {
            let ev = ChiEvaluator::new(c.feedback);
            let prefix = curve_prefix(c);
            let mut s = String::new();
            for &t in &ts {
                let v = ev.chi(t).with_context(|| format!("chi at t = {t} for {}", c.label.as_str()))?;
                writeln!(s, "{prefix},{},{v}", c.feedback.gamma() * t).unwrap();
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(format!("curve,k,gamma_tau,eta,theta,gamma_t,chi\n{}", blocks.concat()))
}

#[derive(Debug, Serialize)]
pub struct PanelSummary {
    pub curve: String,
    pub gamma_t: f64,
    pub integral: f64,
    pub fringe_contrast: f64,
}

/// `curve,k,gamma_tau,eta,theta,gamma_t,x,p`, plus per-slice integrals and contrasts.
pub fn pdist(run: &RunConfig) -> Result<(String, Vec<PanelSummary>)> {
    let xg = run.x_grid.context("pdist needs an x grid")?;
    let xs = xg.values();
    let ts = run.t_grid.values();
    let cat = cat_state(run.alpha0);
    let jobs: Vec<(usize, f64)> = (0..run.curves.len()).flat_map(|i| ts.iter().map(move |&t| (i, t))).collect();
    let parts: Vec<(String, PanelSummary)> = jobs
        .par_iter()
        .map(|&(i, t)| -> Result<(String, PanelSummary)> {
            let c = &run.curves[i];
            let dens = MarginalDensity::new(MarginalStats::at(t, &c.feedback)?, &cat, c.feedback.phi());
            let ps: Vec<f64> = xs.iter().map(|&x| dens.density(x)).collect::<Result<_, _>>()?;
            let prefix = curve_prefix(c);
            let mut s = String::new();
            for (x, p) in xs.iter().zip(&ps) {
                writeln!(s, "{prefix},{},{x},{p}", c.feedback.gamma() * t).unwrap();
            }
            let intervals = (xs.len() - 1) & !1;
            let integral =
                simpson_uniform(&|x| dens.density(x).unwrap_or(f64::NAN), xg.start, xg.end, intervals.max(2));
            let contrast = CatFringeReport::new(t, run.alpha0, &c.feedback)?.fringe_contrast();
            Ok((
                s,
                PanelSummary {
                    curve: c.label.as_str().into(),
                    gamma_t: c.feedback.gamma() * t,
                    integral,
                    fringe_contrast: contrast,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let (blocks, summary): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok((format!("curve,k,gamma_tau,eta,theta,gamma_t,x,p\n{}", blocks.concat()), summary))
}

/// `curve,k,gamma_tau,eta,theta,gamma_t,coherence` with coherence = 2⟨D(2α₀,t)⟩.
pub fn coherence(run: &RunConfig) -> Result<String> {
    let ts = run.t_grid.values();
    let blocks: Vec<String> = run
        .curves
        .par_iter()
        .map(|c| -> Result<String> {
            let prefix = curve_prefix(c);
            let mut s = String::new();
            for &t in &ts {
                let v = coherence_curve(t, run.alpha0, &c.feedback)
                    .with_context(|| format!("coherence at t = {t} for {}", c.label.as_str()))?;
                writeln!(s, "{prefix},{},{v}", c.feedback.gamma() * t).unwrap();
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(format!("curve,k,gamma_tau,eta,theta,gamma_t,coherence\n{}", blocks.concat()))
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub theta: f64,
    pub min_fidelity: f64,
    pub max_weight_mismatch: f64,
}

#[derive(Debug, Serialize)]
pub struct EnsembleSummary {
    pub theta: f64,
    pub gamma_t: f64,
    pub mean_abs_full: f64,
    pub var_abs_full: f64,
    pub var_arg_full: f64,
    pub mean_abs_asymptotic: Option<f64>,
    pub var_abs_asymptotic: Option<f64>,
    pub var_arg_asymptotic: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct TrajectorySummary {
    pub ensemble: Vec<EnsembleSummary>,
    pub oracle: Vec<OracleReport>,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
}

struct SeedRun {
    rows: String,
    final_full: delayfb_core::Complex64,
    final_asym: Option<delayfb_core::Complex64>,
    oracle: Option<OracleReport>,
}

/// Per-seed rows `curve,theta,seed,gamma_t,w,cw_full_re,cw_full_im,cw_asym_re,cw_asym_im,amp_re,amp_im,log_weight_re,log_weight_im`.
pub fn trajectories(run: &RunConfig, dump_dir: Option<&Path>) -> Result<(String, TrajectorySummary)> {
    let dt = run.dt.context("trajectories need dt")?;
    let t_max = run.t_grid.end;
    let n_max = run.n_max.unwrap_or(30);
    let jobs: Vec<(usize, u64)> = (0..run.curves.len()).flat_map(|i| run.seeds.iter().map(move |&s| (i, s))).collect();
    let results: Vec<SeedRun> = jobs
        .par_iter()
        .map(|&(i, seed)| -> Result<SeedRun> {
            let c = &run.curves[i];
            let cfg = &c.feedback;
            let path = generate_path(seed, dt, t_max)?;
            let states = trajectory(&path, run.alpha0, cfg)?;
            let full = coherence_trajectory(&path, run.alpha0, cfg, CoherenceMode::Full)?;
            let asym = coherence_trajectory(&path, run.alpha0, cfg, CoherenceMode::Asymptotic).ok();
            if let Some(dir) = dump_dir {
                let stem = format!("{}-theta{}-seed{seed}", c.label.as_str(), cfg.theta());
                let csv = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
                write_trajectory_csv(std::io::BufWriter::new(csv), &states, &path)?;
                let bin = std::fs::File::create(dir.join(format!("{stem}.wpth")))?;
                path.write_binary(std::io::BufWriter::new(bin))?;
            }
            let mut rows = String::new();
            let mut indices: Vec<usize> =
                run.t_grid.values().iter().map(|t| ((t / dt).round() as usize).min(path.n_steps())).collect();
            indices.dedup();
            for &n in &indices {
                let s = &states[n];
                let (ar, ai) = asym
                    .as_ref()
                    .map_or((String::new(), String::new()), |a| (a[n].re.to_string(), a[n].im.to_string()));
                writeln!(
                    rows,
                    "{},{},{seed},{},{},{},{},{ar},{ai},{},{},{},{}",
                    c.label.as_str(),
                    cfg.theta(),
                    cfg.gamma() * s.t,
                    path.cumulative()[n],
                    full[n].re,
                    full[n].im,
                    s.amplitude.re,
                    s.amplitude.im,
                    s.log_weight.re,
                    s.log_weight.im
                )
                .unwrap();
            }
            let oracle = if run.oracle {
                let stride = (path.n_steps() / 50).max(1);
                let fock =
                    fock_sde_oracle_with(&path, run.alpha0, cfg, n_max, FockOptions { stride, ..Default::default() })?;
                let (mut fid, mut mismatch): (f64, f64) = (1.0, 0.0);
                for (idx, psi) in fock.indices.iter().zip(&fock.states) {
                    let s = &states[*idx];
                    fid = fid.min(coherent_fidelity(psi, s.amplitude));
                    mismatch =
                        mismatch.max((coherent_projection(psi, s.amplitude).norm() / s.weight().norm() - 1.0).abs());
                }
                Some(OracleReport { seed, theta: cfg.theta(), min_fidelity: fid, max_weight_mismatch: mismatch })
            } else {
                None
            };
            Ok(SeedRun {
                rows,
                final_full: *full.last().unwrap(),
                final_asym: asym.map(|a| *a.last().unwrap()),
                oracle,
            })
        })
        .collect::<Result<_>>()?;
    let mut ensemble = Vec::new();
    for (i, chunk) in results.chunks(run.seeds.len()).enumerate() {
        let cfg = &run.curves[i].feedback;
        let stats = |zs: &[delayfb_core::Complex64]| {
            let (m, v) = mean_var(&zs.iter().map(|z| z.norm()).collect::<Vec<_>>());
            (m, v, mean_var(&zs.iter().map(|z| z.arg()).collect::<Vec<_>>()).1)
        };
        let full: Vec<_> = chunk.iter().map(|r| r.final_full).collect();
        let asym: Option<Vec<_>> = chunk.iter().map(|r| r.final_asym).collect();
        let (mf, vf, af) = stats(&full);
        let a = asym.map(|a| stats(&a));
        ensemble.push(EnsembleSummary {
            theta: cfg.theta(),
            gamma_t: cfg.gamma() * t_max,
            mean_abs_full: mf,
            var_abs_full: vf,
            var_arg_full: af,
            mean_abs_asymptotic: a.map(|x| x.0),
            var_abs_asymptotic: a.map(|x| x.1),
            var_arg_asymptotic: a.map(|x| x.2),
        });
    }
    let mut body = String::from(
        "curve,theta,seed,gamma_t,w,cw_full_re,cw_full_im,cw_asym_re,cw_asym_im,amp_re,amp_im,log_weight_re,log_weight_im\n",
    );
    let mut oracle = Vec::new();
    for r in results {
        body.push_str(&r.rows);
        oracle.extend(r.oracle);
    }
    Ok((body, TrajectorySummary { ensemble, oracle }))
}
