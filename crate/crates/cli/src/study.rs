//! Convergence study over an increasing list of basis sizes.

use std::sync::Arc;

use anyhow::{bail, Result};
use oseen_core::fields::format_decimal;
use oseen_core::galerkin::build_basis;
use oseen_core::verify::{estimate_monitor, strong_residuals, CheckResult, Relation};
use serde::Serialize;

use crate::config::{Friction, RunConfig};
use crate::pipeline::{auto_friction, solve_only, Setup};
use crate::report::{sci, Artifacts, Summary};

#[derive(Clone, Debug, Serialize)]
pub struct StudyRow {
    pub n: usize,
    pub energy: f64,
    pub normal_trace: f64,
    pub momentum: f64,
    pub continuity: f64,
    pub friction: f64,
    pub velocity_error: Option<f64>,
    pub density_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Study {
    pub friction: f64,
    pub rows: Vec<StudyRow>,
    pub checks: Vec<CheckResult>,
}

/// Largest ratio of consecutive entries, below one when strictly decreasing.
fn worst_ratio(v: &[f64]) -> f64 {
    v.windows(2)
        .map(|w| if w[0] == 0.0 { if w[1] == 0.0 { 0.0 } else { f64::INFINITY } } else { w[1] / w[0] })
        .fold(0.0, f64::max)
}

pub fn convergence_study(cfg: &RunConfig) -> Result<Study> {
    if cfg.ns.len() < 3 {
        bail!("study: needs at least three basis sizes, got {:?}", cfg.ns);
    }
    let domain = Arc::new(cfg.domain.build()?);
    let n_max = *cfg.ns.last().expect("non-empty");
    // One friction coefficient for the whole series so the data stay fixed.
    let friction = match cfg.friction {
        Friction::Fixed(f) => f,
        Friction::Auto => auto_friction(&build_basis(domain.clone(), n_max, cfg.sigma)?, &cfg.params)?.0,
    };
    let mut rows = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        let setup = Setup::new(cfg, domain.clone(), n, Some(friction))?;
        let solved = solve_only(&setup)?;
        let s = &solved.solution;
        let r = strong_residuals(&setup.basis.quad, &s.velocity, &s.density, &setup.data, &setup.params)?;
        rows.push(StudyRow {
            n: setup.basis.len(),
            energy: solved.energy.total(),
            normal_trace: solved.normal_trace,
            momentum: r.momentum,
            continuity: r.continuity,
            friction: r.friction,
            velocity_error: solved.errors.map(|e| e[0]),
            density_error: solved.errors.map(|e| e[1]),
        });
    }

    let series: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.energy)).collect();
    let mut monitor = estimate_monitor(&series);
    monitor.threshold = cfg.tolerances.energy_ratio;
    monitor.pass = series.len() >= 3 && monitor.value <= monitor.threshold;
    let mut checks = vec![monitor];
    if cfg.manufactured.is_some() {
        let eu: Vec<f64> = rows.iter().filter_map(|r| r.velocity_error).collect();
        let ew: Vec<f64> = rows.iter().filter_map(|r| r.density_error).collect();
        checks.push(CheckResult::new(
            "velocity_error_decrease",
            worst_ratio(&eu),
            Relation::Below,
            1.0,
            "largest ratio of consecutive H1 errors",
        ));
        checks.push(CheckResult::new(
            "density_error_decrease",
            worst_ratio(&ew),
            Relation::Below,
            1.0,
            "largest ratio of consecutive L2 errors",
        ));
    }
    Ok(Study { friction, rows, checks })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_decimal).unwrap_or_default()
}

pub fn run_study(
    cfg: &RunConfig,
    art: &Artifacts,
    summary: &mut Summary,
    checks: &mut Vec<CheckResult>,
) -> Result<()> {
    let study = convergence_study(cfg)?;
    let mut csv = String::from("n,energy,normal_trace,momentum,continuity,friction,velocity_error,density_error\n");
    let mut table = format!(
        "{:>5} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}\n",
        "N", "energy", "normal_trace", "momentum", "continuity", "friction", "u_error_H1", "w_error_L2"
    );
    for r in &study.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            format_decimal(r.energy),
            format_decimal(r.normal_trace),
            format_decimal(r.momentum),
            format_decimal(r.continuity),
            format_decimal(r.friction),
            opt(r.velocity_error),
            opt(r.density_error)
        ));
        let e = |v: Option<f64>| v.map(sci).unwrap_or_else(|| "-".into());
        table.push_str(&format!(
            "{:>5} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}\n",
            r.n,
            sci(r.energy),
            sci(r.normal_trace),
            sci(r.momentum),
            sci(r.continuity),
            sci(r.friction),
            e(r.velocity_error),
            e(r.density_error)
        ));
    }
    for c in &study.checks {
        table.push_str(&format!("{c}\n"));
    }
    art.text("study.csv", &csv)?;
    art.text("study.txt", &table)?;
    summary.set("study_sizes", format!("{:?}", study.rows.iter().map(|r| r.n).collect::<Vec<_>>()));
    summary.set("friction", sci(study.friction));
    checks.extend(study.checks);
    Ok(())
}
