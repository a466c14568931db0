//! Density regularity by characteristics: the transport equation
//! `gbar w + d1 w = Ht` along horizontal lines, its `x2`-derivative `lambda`
//! and the boundary integrability condition that controls it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{div, exp_x1, lin, weighted_inflow, ScalarField, VectorField};
use crate::flatness::{singular_line_integral, FlatnessReport, SingularIntegral, Verdict};
use crate::integrate::TailVerdict;
use crate::galerkin::OseenParameters;
use crate::geometry::{Domain, Pole};
use crate::quadrature::Quadrature;

/// Euclidean distance from a singularity point inside which trace and
/// `lambda` values are not used.
pub const DELTA_CLIP: f64 = 1e-3;

/// `H = -(2 mu + nu) div u + gamma w`.
pub fn compute_h(u: &VectorField, w: &ScalarField, params: &OseenParameters) -> Result<ScalarField> {
    Ok(lin(vec![(-params.lame(), div(u)?), (params.gamma, w.clone())]))
}

/// `(Ht, gbar)` with `Ht = H/(2 mu + nu) + G` and `gbar = gamma/(2 mu + nu)`.
pub fn compute_source(h: &ScalarField, g: &ScalarField, params: &OseenParameters) -> (ScalarField, f64) {
    let l = params.lame();
    (lin(vec![(1.0 / l, h.clone()), (1.0, g.clone())]), params.gamma / l)
}

/// `w = e^{-gbar x1} int_{lo(x2)}^{x1} e^{gbar s} Ht(s, x2) ds`, zero on the inflow boundary.
pub fn solve_transport(quad: &Quadrature, gamma_bar: f64, h_tilde: &ScalarField) -> Result<ScalarField> {
    if !(gamma_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("transport rate must be positive, got {gamma_bar}")));
    }
    Ok(weighted_inflow(quad, gamma_bar, h_tilde.clone()))
}

/// `alpha_T = e^{gbar x1} d2 Ht`.
pub fn transport_alpha(h_tilde: &ScalarField, gamma_bar: f64) -> Result<ScalarField> {
    Ok(exp_x1(gamma_bar, h_tilde.diff(1)?))
}

/// `lambda = e^{-gbar x1} [ -e^{gbar lo} lo' Ht(lo, x2) + int_{lo}^{x1} alpha_T ds ]`,
/// the `x2`-derivative of the transport solution.
pub fn lambda_field(quad: &Quadrature, h_tilde: &ScalarField, gamma_bar: f64) -> Result<ScalarField> {
    if !(gamma_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("transport rate must be positive, got {gamma_bar}")));
    }
    let trace = ScalarField::InflowTrace { domain: quad.domain.clone(), rate: gamma_bar, f: Box::new(h_tilde.clone()) };
    let alpha_t = transport_alpha(h_tilde, gamma_bar)?;
    let bracket = lin(vec![(1.0, trace), (1.0, weighted_inflow(quad, 0.0, alpha_t))]);
    Ok(exp_x1(-gamma_bar, bracket))
}

/// Distance from `x` to the nearer singularity point.
pub fn pole_distance(domain: &Domain, x: [f64; 2]) -> f64 {
    [Pole::Lower, Pole::Upper]
        .iter()
        .map(|&p| {
            let c = domain.pole_point(p);
            ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceValue {
    pub x2: f64,
    pub value: f64,
    pub clipped: bool,
}

/// `d2 w` on the inflow boundary: `-lo'(x2) Ht(lo(x2), x2)`. Heights whose inflow
/// point lies within [`DELTA_CLIP`] of a singularity point return zero with
/// the clipped flag set.
pub fn boundary_trace_wx2(domain: &Domain, h_tilde: &ScalarField, x2: f64) -> Result<TraceValue> {
    let (lo, hi) = domain.x2_range();
    if !(x2 > lo && x2 < hi) {
        return Err(Error::InvalidInput(format!("height {x2} outside the open range ({lo}, {hi})")));
    }
    let sec = domain.section(x2)?;
    if pole_distance(domain, [sec.lo, x2]) < DELTA_CLIP {
        return Ok(TraceValue { x2, value: 0.0, clipped: true });
    }
    let value = if h_tilde.is_zero() { 0.0 } else { -sec.dlo * h_tilde.eval([sec.lo, x2])? };
    Ok(TraceValue { x2, value, clipped: false })
}

/// `int beta(x2) |lo'(x2)| Ht(lo(x2), x2)^2 dx2` with divergence detection at
/// the singularity points.
pub fn membership_check(domain: &Domain, h_tilde: &ScalarField) -> Result<SingularIntegral> {
    let g = |s: &crate::geometry::Section| {
        let h = h_tilde.eval([s.lo, s.x2]).unwrap_or(f64::NAN);
        s.beta() * s.dlo.abs() * h * h
    };
    singular_line_integral(domain, &g)
}

#[derive(Clone, Debug)]
pub struct TransportData {
    pub h: ScalarField,
    pub h_tilde: ScalarField,
    pub gamma_bar: f64,
    pub alpha_t: ScalarField,
    pub lambda: ScalarField,
    pub w: ScalarField,
}

/// Build `H`, `Ht`, the transport solution and `lambda` from a velocity/density pair.
pub fn transport_data(
    quad: &Quadrature,
    u: &VectorField,
    w: &ScalarField,
    source: &ScalarField,
    params: &OseenParameters,
) -> Result<TransportData> {
    params.validate()?;
    let h = compute_h(u, w, params)?;
    let (h_tilde, gamma_bar) = compute_source(&h, source, params);
    let alpha_t = transport_alpha(&h_tilde, gamma_bar)?;
    let lambda = lambda_field(quad, &h_tilde, gamma_bar)?;
    let w = solve_transport(quad, gamma_bar, &h_tilde)?;
    Ok(TransportData { h, h_tilde, gamma_bar, alpha_t, lambda, w })
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub gamma_bar: f64,
    pub membership_value: f64,
    pub membership_verdict: TailVerdict,
    pub membership_finite: bool,
    pub flatness: Verdict,
    /// `(|w|^2 + |d1 w|^2 + |lambda|^2)^{1/2}` over unclipped nodes.
    pub w_h1: f64,
    /// `(sum_ijk |d_i d_j u_k|^2)^{1/2}`.
    pub u_h2_seminorm: f64,
    /// L2 gap between the transport solution and the supplied density.
    pub transport_gap: f64,
    /// Measure of the interior nodes excluded by clipping.
    pub clipped_measure: f64,
    pub regular: bool,
}

pub fn regularity_report(
    quad: &Quadrature,
    u: &VectorField,
    w: &ScalarField,
    source: &ScalarField,
    params: &OseenParameters,
    flatness: &FlatnessReport,
) -> Result<RegularityReport> {
    let data = transport_data(quad, u, w, source, params)?;
    let membership = membership_check(&quad.domain, &data.h_tilde)?;
    let membership_finite = membership.verdict == TailVerdict::Converged && membership.value.is_finite();

    let wt = data.w.values(quad)?;
    let ht = data.h_tilde.values(quad)?;
    let lam = data.lambda.values(quad)?;
    let wg = w.values(quad)?;
    let mut w_h1 = 0.0;
    let mut gap = 0.0;
    let mut clipped_measure = 0.0;
    for (k, node) in quad.interior.iter().enumerate() {
        gap += node.w * (wt[k] - wg[k]).powi(2);
        if pole_distance(&quad.domain, node.x) < DELTA_CLIP {
            clipped_measure += node.w;
            continue;
        }
        let w1 = ht[k] - data.gamma_bar * wt[k];
        w_h1 += node.w * (wt[k] * wt[k] + w1 * w1 + lam[k] * lam[k]);
    }

    let mut h2 = 0.0;
    for comp in &u.c {
        for i in 0..2 {
            let di = comp.diff(i)?;
            for j in 0..2 {
                let v = di.diff(j)?.values(quad)?;
                h2 += v.iter().zip(&quad.interior).map(|(a, n)| n.w * a * a).sum::<f64>();
            }
        }
    }

    let regular = membership_finite && flatness.verdict == Verdict::Admissible;
    Ok(RegularityReport {
        gamma_bar: data.gamma_bar,
        membership_value: membership.value,
        membership_verdict: membership.verdict,
        membership_finite,
        flatness: flatness.verdict,
        w_h1: w_h1.sqrt(),
        u_h2_seminorm: h2.sqrt(),
        transport_gap: gap.sqrt(),
        clipped_measure,
        regular,
    })
}

/// `e^{-gbar x1} d1 (e^{gbar x1} lambda)`, which equals `d2 Ht`.
pub fn integrating_factor_check(lambda: &ScalarField, gamma_bar: f64) -> Result<ScalarField> {
    let scaled = exp_x1(gamma_bar, lambda.clone());
    Ok(exp_x1(-gamma_bar, scaled.diff(0)?))
}

/// `gbar w + d1 w - Ht`, the pointwise transport residual.
pub fn transport_residual(w: &ScalarField, h_tilde: &ScalarField, gamma_bar: f64) -> Result<ScalarField> {
    Ok(lin(vec![(gamma_bar, w.clone()), (1.0, w.diff(0)?), (-1.0, h_tilde.clone())]))
}
