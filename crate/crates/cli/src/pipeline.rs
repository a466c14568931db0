//! Stage orchestration: classify, lift and solve, decompose, regularity, verify.

use std::sync::Arc;

use anyhow::{anyhow, Result};
use oseen_core::fields::{boundary_traces, l2_norm, lin, vector_h1, vlin, ScalarField, VectorField};
use oseen_core::flatness::{classify_admissibility, FlatnessReport, Verdict};
use oseen_core::galerkin::{
    advective_friction_bound, build_basis, energy_report, friction_threshold, solve, BoundaryData, EnergyReport, FrictionScan, GalerkinBasis,
    GalerkinSolution, OseenData, OseenParameters, FRICTION_GRID,
};
use oseen_core::geometry::Domain;
use oseen_core::helmholtz::{
    boundary_vorticity_residual, decompose, scalar_quadrature, weak_vorticity_solve, HelmholtzParts,
};
use oseen_core::transport::{regularity_report, transport_data, RegularityReport};
use oseen_core::verify::{
    korn_rayleigh, poincare_v, poincare_w, random_antiderivatives, strong_residuals, CheckResult, Manufactured,
    Relation, StrongResiduals,
};
use serde_json::json;

use crate::config::{Friction, Manufacture, RunConfig};
use crate::report::{sci, Artifacts, Summary};
use crate::study;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INADMISSIBLE: i32 = 2;

/// Degree of the random polynomials behind the density Poincare samples.
const SAMPLE_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Classify,
    Solve,
    Decompose,
    Regularity,
    Verify,
    Study,
    Run,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Solve => "solve",
            Command::Decompose => "decompose",
            Command::Regularity => "regularity",
            Command::Verify => "verify",
            Command::Study => "study",
            Command::Run => "run",
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: Summary,
    pub checks: Vec<CheckResult>,
}

/// How the stages ended when no error occurred.
pub enum Flow {
    Done,
    Inadmissible,
}

/// Run one subcommand, write its artifacts and the summary, and map the
/// result to an exit code.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Outcome {
    let out = cfg.out.as_path();
    let mut summary = Summary::default();
    summary.set("command", cmd.name());
    summary.set("domain", format!("{:?}", cfg.domain));
    summary.set("seed", cfg.seed);
    let mut checks = Vec::new();

    let result = Artifacts::create(out).and_then(|art| {
        let flow = match cmd {
            Command::Study => study::run_study(cfg, &art, &mut summary, &mut checks).map(|_| Flow::Done),
            _ => run_stages(cmd, cfg, &art, &mut summary, &mut checks),
        };
        if !checks.is_empty() {
            art.checks(&checks)?;
        }
        flow
    });

    let passed = checks.iter().filter(|c| c.pass).count();
    let exit_code = match &result {
        Ok(Flow::Inadmissible) => EXIT_INADMISSIBLE,
        Ok(Flow::Done) if passed == checks.len() => EXIT_OK,
        Ok(Flow::Done) => EXIT_FAILURE,
        Err(e) => {
            summary.set("error", format!("{e:#}"));
            let _ = std::fs::create_dir_all(out);
            let _ = std::fs::write(out.join("error.txt"), format!("{e:#}\n"));
            EXIT_FAILURE
        }
    };
    summary.set("checks_passed", format!("{passed}/{}", checks.len()));
    summary.set(
        "status",
        match exit_code {
            EXIT_OK => "ok",
            EXIT_INADMISSIBLE => "inadmissible domain",
            _ if result.is_err() => "error",
            _ => "checks failed",
        },
    );
    summary.set("exit_code", exit_code);
    if let Err(e) = summary.write(out) {
        eprintln!("cannot write summary: {e:#}");
    }
    Outcome { exit_code, summary, checks }
}

fn run_stages(
    cmd: Command,
    cfg: &RunConfig,
    art: &Artifacts,
    summary: &mut Summary,
    checks: &mut Vec<CheckResult>,
) -> Result<Flow> {
    let domain = Arc::new(cfg.domain.build()?);
    let needs_flatness = matches!(cmd, Command::Classify | Command::Regularity | Command::Run);
    let flatness = if needs_flatness {
        let report = classify_stage(&domain, art, summary)?;
        match report.verdict {
            Verdict::Inadmissible => return Ok(Flow::Inadmissible),
            Verdict::Indeterminate => checks.push(verdict_check(&report)),
            Verdict::Admissible => {}
        }
        Some(report)
    } else {
        None
    };
    if cmd == Command::Classify {
        return Ok(Flow::Done);
    }

    let n = *cfg.ns.last().ok_or_else(|| anyhow!("no basis size configured"))?;
    let setup = Setup::new(cfg, domain, n, None)?;
    let solved = solve_stage(&setup, art, summary)?;
    if matches!(cmd, Command::Decompose | Command::Run) {
        decompose_stage(cfg, &setup, &solved, art, summary, checks)?;
    }
    if matches!(cmd, Command::Regularity | Command::Run) {
        let flat = flatness.as_ref().ok_or_else(|| anyhow!("flatness report missing"))?;
        regularity_stage(cfg, &setup, &solved, flat, art, summary, checks)?;
    }
    if matches!(cmd, Command::Verify | Command::Run) {
        verify_stage(cfg, &setup, &solved, art, summary, checks)?;
    }
    Ok(Flow::Done)
}

fn verdict_check(report: &FlatnessReport) -> CheckResult {
    let admissible = if report.verdict == Verdict::Admissible { 1.0 } else { 0.0 };
    CheckResult::new("flatness_admissible", admissible, Relation::Above, 0.5, report.reason.clone())
}

pub fn classify_stage(domain: &Domain, art: &Artifacts, summary: &mut Summary) -> Result<FlatnessReport> {
    let report = classify_admissibility(domain)?;
    art.json("flatness.json", &report)?;
    summary.set("flatness", format!("{:?}", report.verdict));
    summary.set("flatness_reason", &report.reason);
    if let Some([q, eps]) = report.witness {
        summary.set("flatness_witness", format!("q = {q}, eps = {eps}"));
    }
    Ok(report)
}

/// Basis, resolved parameters and data for one basis size.
pub struct Setup {
    pub domain: Arc<Domain>,
    pub basis: GalerkinBasis,
    pub params: OseenParameters,
    pub data: OseenData,
    pub truth: Option<(VectorField, ScalarField)>,
    pub friction_scan: Option<FrictionScan>,
}

impl Setup {
    /// `friction` overrides the configured coefficient, as studies do to keep it fixed across `N`.
    pub fn new(cfg: &RunConfig, domain: Arc<Domain>, n: usize, friction: Option<f64>) -> Result<Self> {
        let basis = build_basis(domain.clone(), n, cfg.sigma)?;
        let (f, friction_scan) = match (friction, cfg.friction) {
            (Some(f), _) | (None, Friction::Fixed(f)) => (f, None),
            (None, Friction::Auto) => {
                let (f, scan) = auto_friction(&basis, &cfg.params)?;
                (f, Some(scan))
            }
        };
        let params = cfg.params.with_friction(f);
        params.validate()?;
        let (data, truth) = problem_data(cfg, &domain, &params)?;
        Ok(Self { domain, basis, params, data, truth, friction_scan })
    }
}

/// First decade-grid friction coefficient that makes the discrete system
/// coercive and dominates the advective boundary term.
pub fn auto_friction(basis: &GalerkinBasis, params: &OseenParameters) -> Result<(f64, FrictionScan)> {
    let scan = friction_threshold(basis, params);
    let discrete = scan
        .grid_value
        .ok_or_else(|| anyhow!("no friction coefficient up to 1e6 makes the system coercive; raise sigma"))?;
    let bound = advective_friction_bound(&basis.quad);
    let f = FRICTION_GRID
        .iter()
        .copied()
        .find(|&f| f >= discrete && f >= bound)
        .ok_or_else(|| anyhow!("advective friction bound {bound} exceeds the friction grid"))?;
    Ok((f, scan))
}

pub fn problem_data(
    cfg: &RunConfig,
    domain: &Domain,
    params: &OseenParameters,
) -> Result<(OseenData, Option<(VectorField, ScalarField)>)> {
    let m = match &cfg.manufactured {
        Some(Manufacture::Standard) => Manufactured::standard(domain.shape, params)?,
        Some(Manufacture::Fields { velocity, density, .. }) => {
            Manufactured::from_fields(velocity.clone(), density.clone(), params)?
        }
        None => {
            let d = &cfg.data;
            let boundary =
                if d.boundary.is_zero() { BoundaryData::Zero } else { BoundaryData::Field(d.boundary.clone()) };
            let data = OseenData { force: d.force.clone(), source: d.source.clone(), boundary };
            return Ok((data, None));
        }
    };
    Ok((m.data, Some((m.velocity, m.density))))
}

pub struct Solved {
    pub solution: GalerkinSolution,
    pub energy: EnergyReport,
    pub normal_trace: f64,
    /// `(|u - u*|_{H^1}, |w - w*|_{L^2})` when an exact solution is known.
    pub errors: Option<[f64; 2]>,
}

pub fn solve_only(setup: &Setup) -> Result<Solved> {
    let quad = &setup.basis.quad;
    let solution = solve(&setup.basis, &setup.data, &setup.params)?;
    let energy = energy_report(quad, &solution.velocity, &solution.density)?;
    let (vn, _) = boundary_traces(&solution.velocity, quad)?;
    let normal_trace = quad.boundary.iter().zip(&vn).map(|(b, v)| b.w * v * v).sum::<f64>().sqrt();
    let errors = match &setup.truth {
        Some((u, w)) => {
            let du = vlin(vec![(1.0, solution.velocity.clone()), (-1.0, u.clone())]);
            let dw = lin(vec![(1.0, solution.density.clone()), (-1.0, w.clone())]);
            Some([vector_h1(&du, quad)?, l2_norm(&dw, quad)?])
        }
        None => None,
    };
    Ok(Solved { solution, energy, normal_trace, errors })
}

fn solve_stage(setup: &Setup, art: &Artifacts, summary: &mut Summary) -> Result<Solved> {
    let solved = solve_only(setup)?;
    let quad = &setup.basis.quad;
    let s = &solved.solution;
    art.vector("velocity.csv", quad, &s.velocity)?;
    art.scalar("density.csv", quad, &s.density)?;
    art.json(
        "solve.json",
        &json!({
            "basis_size": setup.basis.len(),
            "max_level": setup.basis.max_level,
            "sigma": setup.basis.sigma,
            "params": setup.params,
            "friction_scan": setup.friction_scan,
            "lift_misfit": s.lift.misfit,
            "lift_condition": s.lift.condition,
            "diagnostics": s.diagnostics,
            "energy": solved.energy,
            "normal_trace": solved.normal_trace,
            "errors": solved.errors,
        }),
    )?;
    summary.set("basis_size", setup.basis.len());
    summary.set("sigma", sci(setup.basis.sigma));
    summary.set("friction", sci(setup.params.friction));
    summary.set("coercivity_margin", sci(s.diagnostics.coercivity_margin));
    summary.set("energy", sci(solved.energy.total()));
    summary.set("normal_trace", sci(solved.normal_trace));
    if let Some([eu, ew]) = solved.errors {
        summary.set("velocity_h1_error", sci(eu));
        summary.set("density_l2_error", sci(ew));
    }
    Ok(solved)
}

/// Polynomial degree bound of the Galerkin velocity.
pub fn velocity_degree(basis: &GalerkinBasis) -> usize {
    basis.max_level + 1
}

pub struct Decomposed {
    pub parts: HelmholtzParts,
    pub vorticity_residual: f64,
    pub weak_vorticity_defect: f64,
}

pub fn decompose_only(setup: &Setup, solved: &Solved) -> Result<(Decomposed, oseen_core::quadrature::Quadrature)> {
    let degree = velocity_degree(&setup.basis);
    let quad = scalar_quadrature(setup.domain.clone(), degree + 1);
    let u = &solved.solution.velocity;
    let parts = decompose(&quad, u, degree)?;
    let traction = setup.data.boundary.values(&quad)?;
    let vorticity_residual = boundary_vorticity_residual(u, &setup.params, &quad, Some(&traction))?;
    let weak = weak_vorticity_solve(&quad, u, &setup.data.force, &setup.params, Some(&traction), degree + 1)?;
    Ok((Decomposed { parts, vorticity_residual, weak_vorticity_defect: weak.defect }, quad))
}

/// Roundtrip bound `factor * (|u.n| + err)`, with `err` the manufactured
/// velocity error when known and zero otherwise.
pub fn helmholtz_check(
    factor: f64,
    defect: f64,
    normal_trace: f64,
    err: f64,
    context: impl Into<String>,
) -> CheckResult {
    CheckResult::new("helmholtz_roundtrip", defect, Relation::AtMost, factor * (normal_trace + err), context)
}

fn decompose_stage(
    cfg: &RunConfig,
    setup: &Setup,
    solved: &Solved,
    art: &Artifacts,
    summary: &mut Summary,
    checks: &mut Vec<CheckResult>,
) -> Result<()> {
    let (d, quad) = decompose_only(setup, solved)?;
    art.scalar("psi.csv", &quad, &d.parts.psi)?;
    art.scalar("stream.csv", &quad, &d.parts.stream)?;
    let err = solved.errors.map_or(0.0, |e| e[0]);
    art.json(
        "helmholtz.json",
        &json!({
            "defect": d.parts.defect,
            "divergence_mean": d.parts.divergence_mean,
            "stream_residual": d.parts.stream_residual,
            "potential_residual": d.parts.potential_residual,
            "boundary_vorticity_residual": d.vorticity_residual,
            "weak_vorticity_defect": d.weak_vorticity_defect,
            "error_term": err,
        }),
    )?;
    summary.set("helmholtz_defect", sci(d.parts.defect));
    summary.set("boundary_vorticity_residual", sci(d.vorticity_residual));
    summary.set("weak_vorticity_defect", sci(d.weak_vorticity_defect));
    checks.push(helmholtz_check(
        cfg.tolerances.helmholtz_factor,
        d.parts.defect,
        solved.normal_trace,
        err,
        format!("N = {}", setup.basis.len()),
    ));
    Ok(())
}

pub fn regularity_only(setup: &Setup, solved: &Solved, flat: &FlatnessReport) -> Result<RegularityReport> {
    let s = &solved.solution;
    Ok(regularity_report(&setup.basis.quad, &s.velocity, &s.density, &setup.data.source, &setup.params, flat)?)
}

fn regularity_stage(
    cfg: &RunConfig,
    setup: &Setup,
    solved: &Solved,
    flat: &FlatnessReport,
    art: &Artifacts,
    summary: &mut Summary,
    checks: &mut Vec<CheckResult>,
) -> Result<()> {
    let quad = &setup.basis.quad;
    let s = &solved.solution;
    let data = transport_data(quad, &s.velocity, &s.density, &setup.data.source, &setup.params)?;
    art.scalar("lambda.csv", quad, &data.lambda)?;
    art.scalar("transport_w.csv", quad, &data.w)?;
    let report = regularity_only(setup, solved, flat)?;
    art.json("regularity.json", &report)?;
    summary.set("regularity", if report.regular { "regular" } else { "not regular" });
    summary.set("membership_integral", sci(report.membership_value));
    checks.push(CheckResult::new(
        "membership_integral",
        report.membership_value,
        Relation::Below,
        f64::INFINITY,
        format!("{:?}", report.membership_verdict),
    ));
    let scale = 1.0 + solved.energy.w_l2;
    checks.push(CheckResult::new(
        "transport_consistency",
        report.transport_gap,
        Relation::AtMost,
        cfg.tolerances.transport_gap * scale,
        "Galerkin density against the characteristic solution",
    ));
    let mut c = verdict_check(flat);
    c.name = "regularity".into();
    c.value = if report.regular { 1.0 } else { 0.0 };
    c.pass = report.regular;
    checks.push(c);
    Ok(())
}

pub struct Verified {
    pub residuals: StrongResiduals,
    pub checks: Vec<CheckResult>,
    pub korn_min: f64,
    pub poincare_constant: f64,
}

pub fn verify_only(cfg: &RunConfig, setup: &Setup, solved: &Solved) -> Result<Verified> {
    let quad = &setup.basis.quad;
    let s = &solved.solution;
    let ctx = format!("{}, N = {}, f = {}", setup.domain.name, setup.basis.len(), sci(setup.params.friction));
    let residuals = strong_residuals(quad, &s.velocity, &s.density, &setup.data, &setup.params)?;
    let korn = korn_rayleigh(&setup.basis, &setup.params)?;
    let pv = poincare_v(&setup.basis)?;
    let samples = random_antiderivatives(quad, cfg.samples, SAMPLE_DEGREE, cfg.seed);
    let mut checks = vec![
        CheckResult::new("korn_min_quotient", korn.min_quotient, Relation::Above, 0.0, ctx.clone()),
        {
            let mut c = CheckResult::new("poincare_v", pv.constant, Relation::Below, f64::INFINITY, ctx.clone());
            c.pass = pv.pass;
            c
        },
        poincare_w(quad, &samples)?,
    ];
    if let Some(tol) = cfg.tolerances.residual {
        for (name, v) in [
            ("momentum_residual", residuals.momentum),
            ("continuity_residual", residuals.continuity),
            ("friction_residual", residuals.friction),
            ("normal_trace_residual", residuals.normal_trace),
            ("inflow_density_residual", residuals.inflow_density),
        ] {
            checks.push(CheckResult::new(name, v, Relation::AtMost, tol, ctx.clone()));
        }
    }
    Ok(Verified { residuals, checks, korn_min: korn.min_quotient, poincare_constant: pv.constant })
}

fn verify_stage(
    cfg: &RunConfig,
    setup: &Setup,
    solved: &Solved,
    art: &Artifacts,
    summary: &mut Summary,
    checks: &mut Vec<CheckResult>,
) -> Result<()> {
    let v = verify_only(cfg, setup, solved)?;
    art.json(
        "verify.json",
        &json!({
            "residuals": v.residuals,
            "korn_min_quotient": v.korn_min,
            "poincare_v_constant": v.poincare_constant,
            "errors": solved.errors,
        }),
    )?;
    summary.set("momentum_residual", sci(v.residuals.momentum));
    summary.set("continuity_residual", sci(v.residuals.continuity));
    summary.set("friction_residual", sci(v.residuals.friction));
    summary.set("korn_min_quotient", sci(v.korn_min));
    checks.extend(v.checks);
    Ok(())
}
