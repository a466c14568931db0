//! Finite-dimensional velocity space, assembly and direct solution of the
//! discrete Oseen system, boundary-data lifting and density reconstruction.
//!
//! Velocities live in the span of stream fields `perp_grad(b P)`, exactly
//! tangent because the bubble `b` vanishes on the boundary, and gradient
//! fields `grad P` whose normal trace is suppressed by a boundary penalty
//! `sigma int (u.n)(v.n)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    div, grad, h1_norm, inflow_antiderivative, l2_norm, lin, perp_grad, vector_h1, vlin, ScalarField, Spectral,
    VectorField, Weight,
};
use crate::geometry::{Domain, Shape};
use crate::legendre::Tensor;
use crate::linalg::{generalized_eigenvalues, sym_eigenvalues};
use crate::quadrature::Quadrature;

/// Largest candidate level offered by [`build_basis`].
pub const MAX_LEVEL: usize = 14;
/// Penalty per unit viscosity used when none is given.
pub const DEFAULT_SIGMA_PER_MU: f64 = 1e4;
/// Symmetric-part eigenvalues at or below this count as loss of coercivity.
pub const MARGIN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OseenParameters {
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    /// Friction coefficient `f` in the slip condition.
    pub friction: f64,
}

impl Default for OseenParameters {
    fn default() -> Self {
        Self { mu: 1.0, nu: 1.0, gamma: 1.0, friction: 1.0 }
    }
}

impl OseenParameters {
    pub fn new(mu: f64, nu: f64, gamma: f64, friction: f64) -> Result<Self> {
        let p = Self { mu, nu, gamma, friction };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.nu, self.gamma, self.friction].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu = {} must be positive", self.mu)));
        }
        if !(self.nu + 2.0 * self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nu + 2 mu = {} must be positive",
                self.nu + 2.0 * self.mu
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(self.friction >= 0.0) {
            return Err(Error::InvalidParameter(format!("friction f = {} must be nonnegative", self.friction)));
        }
        Ok(())
    }

    /// `2 mu + nu`.
    pub fn lame(&self) -> f64 {
        2.0 * self.mu + self.nu
    }

    /// `gamma / (2 mu + nu)`.
    pub fn gamma_bar(&self) -> f64 {
        self.gamma / self.lame()
    }

    pub fn with_friction(mut self, friction: f64) -> Self {
        self.friction = friction;
        self
    }
}

/// Right-hand side of the slip condition `n.2 mu D(u).tau + f u.tau = B`.
#[derive(Clone, Debug)]
pub enum BoundaryData {
    Zero,
    Field(ScalarField),
    /// The slip traction of a known velocity.
    SlipOf { u: VectorField, mu: f64, friction: f64 },
}

impl BoundaryData {
    pub fn values(&self, quad: &Quadrature) -> Result<Vec<f64>> {
        match self {
            BoundaryData::Zero => Ok(vec![0.0; quad.boundary.len()]),
            BoundaryData::Field(f) => f.boundary_values(quad),
            BoundaryData::SlipOf { u, mu, friction } => slip_traction(u, quad, *mu, *friction),
        }
    }
}

/// `n.2 mu D(u).tau + f u.tau` at the boundary nodes.
pub fn slip_traction(u: &VectorField, quad: &Quadrature, mu: f64, friction: f64) -> Result<Vec<f64>> {
    let v = [u.c[0].boundary_values(quad)?, u.c[1].boundary_values(quad)?];
    let mut g = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            g.push(u.c[i].diff(j)?.boundary_values(quad)?);
        }
    }
    Ok(quad
        .boundary
        .iter()
        .enumerate()
        .map(|(k, node)| {
            let (n, t) = (node.normal, node.tangent);
            let d11 = g[0][k];
            let d22 = g[3][k];
            let d12 = 0.5 * (g[1][k] + g[2][k]);
            let ndt = n[0] * t[0] * d11 + (n[0] * t[1] + n[1] * t[0]) * d12 + n[1] * t[1] * d22;
            2.0 * mu * ndt + friction * (v[0][k] * t[0] + v[1][k] * t[1])
        })
        .collect())
}

/// Data `(F, G, B)` of the Oseen system.
#[derive(Clone, Debug)]
pub struct OseenData {
    pub force: VectorField,
    pub source: ScalarField,
    pub boundary: BoundaryData,
}

impl OseenData {
    pub fn zero() -> Self {
        Self { force: VectorField::zero(), source: ScalarField::zero(), boundary: BoundaryData::Zero }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemberKind {
    Stream,
    Gradient,
}

/// Candidate fields up to `max_level`: level `l` holds `perp_grad(b P)` for
/// `P` of total degree `l`, then `grad P` for `P` of total degree `l + 1`.
pub fn candidates(shape: Shape, max_level: usize) -> Result<Vec<(MemberKind, usize, VectorField)>> {
    let mut out = Vec::new();
    for level in 0..=max_level {
        for i in (0..=level).rev() {
            let s = Spectral::single(shape, Weight::Bubble(0, 0), Tensor::unit(i, level - i));
            out.push((MemberKind::Stream, level, perp_grad(&ScalarField::Spectral(s))?));
        }
        let d = level + 1;
        for i in (0..=d).rev() {
            let s = Spectral::single(shape, Weight::One, Tensor::unit(i, d - i));
            out.push((MemberKind::Gradient, level, grad(&ScalarField::Spectral(s))?));
        }
    }
    Ok(out)
}

/// Node values of a set of vector fields, one column per field.
#[derive(Clone, Debug)]
struct Tables {
    u: [DMatrix<f64>; 2],
    /// `g[i][j]` holds `d u_i / d x_j`.
    g: [[DMatrix<f64>; 2]; 2],
    div: DMatrix<f64>,
    /// Inflow antiderivative of the divergence.
    adiv: DMatrix<f64>,
    bn: DMatrix<f64>,
    bt: DMatrix<f64>,
}

struct Column {
    u: [Vec<f64>; 2],
    g: [[Vec<f64>; 2]; 2],
    div: Vec<f64>,
    adiv: Vec<f64>,
    bn: Vec<f64>,
    bt: Vec<f64>,
}

fn column(quad: &Quadrature, v: &VectorField) -> Result<Column> {
    let u = [v.c[0].values(quad)?, v.c[1].values(quad)?];
    let g = [
        [v.c[0].diff(0)?.values(quad)?, v.c[0].diff(1)?.values(quad)?],
        [v.c[1].diff(0)?.values(quad)?, v.c[1].diff(1)?.values(quad)?],
    ];
    let d: Vec<f64> = g[0][0].iter().zip(&g[1][1]).map(|(a, b)| a + b).collect();
    let adiv = inflow_antiderivative(quad, div(v)?).values(quad)?;
    let (bn, bt) = crate::fields::boundary_traces(v, quad)?;
    Ok(Column { u, g, div: d, adiv, bn, bt })
}

impl Tables {
    fn new(quad: &Quadrature, fields: &[VectorField]) -> Result<Self> {
        let cols: Vec<Column> = fields.par_iter().map(|v| column(quad, v)).collect::<Result<_>>()?;
        let (ni, nb, m) = (quad.interior.len(), quad.boundary.len(), fields.len());
        let mat = |rows: usize, pick: &dyn Fn(&Column) -> &Vec<f64>| {
            DMatrix::from_fn(rows, m, |r, c| pick(&cols[c])[r])
        };
        Ok(Self {
            u: [mat(ni, &|c| &c.u[0]), mat(ni, &|c| &c.u[1])],
            g: [
                [mat(ni, &|c| &c.g[0][0]), mat(ni, &|c| &c.g[0][1])],
                [mat(ni, &|c| &c.g[1][0]), mat(ni, &|c| &c.g[1][1])],
            ],
            div: mat(ni, &|c| &c.div),
            adiv: mat(ni, &|c| &c.adiv),
            bn: mat(nb, &|c| &c.bn),
            bt: mat(nb, &|c| &c.bt),
        })
    }

    fn combine(&self, c: &DMatrix<f64>) -> Self {
        Self {
            u: [&self.u[0] * c, &self.u[1] * c],
            g: [[&self.g[0][0] * c, &self.g[0][1] * c], [&self.g[1][0] * c, &self.g[1][1] * c]],
            div: &self.div * c,
            adiv: &self.adiv * c,
            bn: &self.bn * c,
            bt: &self.bt * c,
        }
    }
}

/// `a^T diag(w) b`.
fn weighted(a: &DMatrix<f64>, w: &DVector<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut wb = b.clone();
    for (mut row, wi) in wb.row_iter_mut().zip(w.iter()) {
        row *= *wi;
    }
    a.transpose() * wb
}

/// The separate bilinear forms making up the system matrix, over the basis.
#[derive(Clone, Debug)]
pub struct FormParts {
    /// `int d_{x1} phi_i . phi_k`, stored as `[k][i]`.
    pub advection: DMatrix<f64>,
    /// `int D(phi_i) : D(phi_k)`.
    pub strain: DMatrix<f64>,
    pub divergence: DMatrix<f64>,
    /// `int A(div phi_i) div phi_k` with `A` the inflow antiderivative.
    pub density: DMatrix<f64>,
    pub tangential: DMatrix<f64>,
    pub normal: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    /// `int grad phi_i : grad phi_k`.
    pub stiffness: DMatrix<f64>,
}

impl FormParts {
    fn new(t: &Tables, w: &DVector<f64>, wb: &DVector<f64>) -> Self {
        let advection = weighted(&t.u[0], w, &t.g[0][0]) + weighted(&t.u[1], w, &t.g[1][0]);
        let d12 = (&t.g[0][1] + &t.g[1][0]) * 0.5;
        let strain = weighted(&t.g[0][0], w, &t.g[0][0])
            + weighted(&t.g[1][1], w, &t.g[1][1])
            + weighted(&d12, w, &d12) * 2.0;
        let mass = weighted(&t.u[0], w, &t.u[0]) + weighted(&t.u[1], w, &t.u[1]);
        let mut stiffness = DMatrix::zeros(mass.nrows(), mass.ncols());
        for i in 0..2 {
            for j in 0..2 {
                stiffness += weighted(&t.g[i][j], w, &t.g[i][j]);
            }
        }
        Self {
            advection,
            strain,
            divergence: weighted(&t.div, w, &t.div),
            density: weighted(&t.div, w, &t.adiv),
            tangential: weighted(&t.bt, wb, &t.bt),
            normal: weighted(&t.bn, wb, &t.bn),
            mass,
            stiffness,
        }
    }

    /// The system matrix `M[k][i]`.
    pub fn system(&self, params: &OseenParameters, sigma: f64) -> DMatrix<f64> {
        &self.advection
            + &self.strain * (2.0 * params.mu)
            + &self.divergence * params.nu
            + &self.density * params.gamma
            + &self.tangential * params.friction
            + &self.normal * sigma
    }

    /// `2 mu int D:D + f int (u.tau)^2 + sigma int (u.n)^2`.
    pub fn korn(&self, params: &OseenParameters, sigma: f64) -> DMatrix<f64> {
        &self.strain * (2.0 * params.mu) + &self.tangential * params.friction + &self.normal * sigma
    }

    /// Gram matrix of the `H^1` inner product.
    pub fn h1(&self) -> DMatrix<f64> {
        &self.mass + &self.stiffness
    }
}

#[derive(Clone, Debug)]
pub struct GalerkinBasis {
    pub quad: Arc<Quadrature>,
    pub members: Vec<VectorField>,
    pub kinds: Vec<MemberKind>,
    pub sigma: f64,
    /// `H^1` Gram matrix of the members.
    pub gram: DMatrix<f64>,
    pub forms: FormParts,
    pub max_level: usize,
    tables: Tables,
}

fn node_weights(quad: &Quadrature) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from_iterator(quad.interior.len(), quad.interior.iter().map(|n| n.w)),
        DVector::from_iterator(quad.boundary.len(), quad.boundary.iter().map(|n| n.w)),
    )
}

/// Modified Gram-Schmidt in the metric `g`, visiting candidates in `order`.
/// Returns accepted coefficient vectors and the dropped indices.
fn orthonormalize(g: &DMatrix<f64>, order: &[usize]) -> (Vec<DVector<f64>>, Vec<usize>) {
    let m = g.nrows();
    let mut acc: Vec<DVector<f64>> = Vec::new();
    let mut dropped = Vec::new();
    for &j in order {
        let mut v = DVector::zeros(m);
        v[j] = 1.0;
        for _ in 0..2 {
            for q in &acc {
                let c = q.dot(&(g * &v));
                v.axpy(-c, q, 1.0);
            }
        }
        let nn = v.dot(&(g * &v));
        if nn <= 1e-11 * g[(j, j)] || !nn.is_finite() {
            dropped.push(j);
            continue;
        }
        acc.push(v / nn.sqrt());
    }
    (acc, dropped)
}

fn level_count(level: usize) -> usize {
    2 * level + 3
}

/// Quadrature for products of two fields up to `max_level`.
pub fn quadrature_for_level(domain: Arc<Domain>, max_level: usize) -> Quadrature {
    Quadrature::for_degree(domain, 2 * (max_level + 2))
}

/// `N` members orthonormal in `H^1`, stream members first.
pub fn build_basis(domain: Arc<Domain>, n: usize, sigma: f64) -> Result<GalerkinBasis> {
    if n == 0 {
        return Err(Error::InvalidInput("basis size N must be at least 1".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("penalty sigma = {sigma} must be finite and nonnegative")));
    }
    let mut level = 0;
    let mut total = level_count(0);
    while total < n {
        level += 1;
        total += level_count(level);
        if level > MAX_LEVEL {
            return Err(Error::InvalidInput(format!(
                "N = {n} exceeds the available polynomial dimensions (levels up to {MAX_LEVEL})"
            )));
        }
    }
    let cand_level = (level + 1).min(MAX_LEVEL);
    let quad = Arc::new(quadrature_for_level(domain.clone(), cand_level));
    let cands = candidates(domain.shape, cand_level)?;
    let fields: Vec<VectorField> = cands.iter().map(|c| c.2.clone()).collect();
    let all = Tables::new(&quad, &fields)?;
    let (w, wb) = node_weights(&quad);
    let full = FormParts::new(&all, &w, &wb).h1();

    let mut take = n;
    let (acc, kinds) = loop {
        if take > cands.len() {
            return Err(Error::InvalidInput(format!(
                "only {} independent candidates available for N = {n}",
                take - 1
            )));
        }
        let mut order: Vec<usize> = (0..take).filter(|&j| cands[j].0 == MemberKind::Stream).collect();
        order.extend((0..take).filter(|&j| cands[j].0 == MemberKind::Gradient));
        let (acc, dropped) = orthonormalize(&full, &order);
        if acc.len() >= n {
            let kinds: Vec<MemberKind> =
                order.iter().filter(|j| !dropped.contains(j)).map(|&j| cands[j].0).collect();
            break (acc, kinds);
        }
        take += 1;
    };
    let coef = DMatrix::from_columns(&acc[..n]);
    let members: Vec<VectorField> = (0..n)
        .map(|i| {
            vlin(
                (0..fields.len())
                    .filter(|&j| coef[(j, i)] != 0.0)
                    .map(|j| (coef[(j, i)], fields[j].clone()))
                    .collect(),
            )
        })
        .collect();
    let tables = all.combine(&coef);
    let forms = FormParts::new(&tables, &w, &wb);
    let gram = forms.h1();
    Ok(GalerkinBasis { quad, members, kinds: kinds[..n].to_vec(), sigma, gram, forms, max_level: cand_level, tables })
}

impl GalerkinBasis {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.quad.domain
    }

    /// `sum_i c_i phi_i`.
    pub fn combine(&self, c: &DVector<f64>) -> VectorField {
        vlin(self.members.iter().zip(c.iter()).filter(|(_, k)| **k != 0.0).map(|(f, k)| (*k, f.clone())).collect())
    }

    pub fn system_matrix(&self, params: &OseenParameters) -> DMatrix<f64> {
        self.forms.system(params, self.sigma)
    }

    /// `||phi_i . n||_{L^2(boundary)}` per member.
    pub fn normal_traces(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.forms.normal[(i, i)].max(0.0).sqrt()).collect()
    }
}

/// Boundary data lifted to a tangent velocity and the corrected data.
#[derive(Clone, Debug)]
pub struct Lift {
    pub velocity: VectorField,
    /// `F + mu lap u0 + (nu + mu) grad div u0 - d_{x1} u0`.
    pub force: VectorField,
    /// `G - div u0`.
    pub source: ScalarField,
    /// `B - (n.2 mu D(u0).tau + f u0.tau)` at the boundary nodes.
    pub boundary_residual: Vec<f64>,
    /// Relative boundary misfit of the lift.
    pub misfit: f64,
    pub condition: f64,
}

/// Tangent field in the stream part of the basis matching the slip data in
/// least squares on the boundary nodes, regularized by its `H^2` seminorm.
pub fn lift_boundary_data(basis: &GalerkinBasis, data: &OseenData, params: &OseenParameters) -> Result<Lift> {
    let quad = &basis.quad;
    let target = data.boundary.values(quad)?;
    let trivial = Lift {
        velocity: VectorField::zero(),
        force: data.force.clone(),
        source: data.source.clone(),
        boundary_residual: target.clone(),
        misfit: 0.0,
        condition: 1.0,
    };
    if target.iter().all(|v| *v == 0.0) {
        return Ok(trivial);
    }
    // stream members of the basis itself, so that u - u0 stays in its span
    let stream: Vec<VectorField> = basis
        .members
        .iter()
        .zip(&basis.kinds)
        .filter(|(_, k)| **k == MemberKind::Stream)
        .map(|(f, _)| f.clone())
        .collect();
    let m = stream.len();
    let traction: Vec<Vec<f64>> = stream
        .par_iter()
        .map(|u| slip_traction(u, quad, params.mu, params.friction))
        .collect::<Result<_>>()?;
    let hess: Vec<Vec<Vec<f64>>> = stream
        .par_iter()
        .map(|u| {
            let mut out = Vec::new();
            for c in &u.c {
                for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                    out.push(c.diff(i)?.diff(j)?.values(quad)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let (w, wb) = node_weights(quad);
    let t = DMatrix::from_fn(quad.boundary.len(), m, |r, c| traction[c][r]);
    let mut normal = weighted(&t, &wb, &t);
    let mut energy = DMatrix::zeros(m, m);
    for (k, mult) in [1.0, 2.0, 1.0, 1.0, 2.0, 1.0].iter().enumerate() {
        let h = DMatrix::from_fn(quad.interior.len(), m, |r, c| hess[c][k][r]);
        energy += weighted(&h, &w, &h) * *mult;
    }
    let scale = normal.trace().max(f64::MIN_POSITIVE);
    let eta = 1e-8 * scale / energy.trace().max(f64::MIN_POSITIVE);
    normal += &energy * eta;
    for i in 0..m {
        normal[(i, i)] += 1e-14 * scale;
    }
    let b = DVector::from_vec(target.clone());
    let rhs = t.transpose() * DVector::from_iterator(b.len(), b.iter().zip(wb.iter()).map(|(x, w)| x * w));
    let condition = crate::linalg::spd_condition(&normal);
    let coef = crate::linalg::solve_spd(&normal, &rhs, 1e15).map_err(|e| match e {
        Error::Solver(msg) => Error::Solver(format!("boundary least squares for the lift failed: {msg}")),
        other => other,
    })?;
    let u0 = vlin(stream.iter().zip(coef.iter()).map(|(f, k)| (*k, f.clone())).collect());
    let fitted = &t * &coef;
    let residual: Vec<f64> = target.iter().zip(fitted.iter()).map(|(b, f)| b - f).collect();
    let bnorm = |v: &[f64]| v.iter().zip(wb.iter()).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
    let misfit = bnorm(&residual) / bnorm(&target).max(f64::MIN_POSITIVE);

    let div0 = div(&u0)?;
    let graddiv = grad(&div0)?;
    let mut force = [data.force.c[0].clone(), data.force.c[1].clone()];
    for i in 0..2 {
        let c = &u0.c[i];
        let lap = lin(vec![(1.0, c.diff(0)?.diff(0)?), (1.0, c.diff(1)?.diff(1)?)]);
        force[i] = lin(vec![
            (1.0, force[i].clone()),
            (params.mu, lap),
            (params.nu + params.mu, graddiv.c[i].clone()),
            (-1.0, c.diff(0)?),
        ]);
    }
    let [f1, f2] = force;
    Ok(Lift {
        source: lin(vec![(1.0, data.source.clone()), (-1.0, div0)]),
        force: VectorField::new(f1, f2),
        velocity: u0,
        boundary_residual: residual,
        misfit,
        condition,
    })
}

/// System matrix and right-hand side for the lifted problem.
pub fn assemble_system(
    basis: &GalerkinBasis,
    lift: &Lift,
    params: &OseenParameters,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let quad = &basis.quad;
    let (w, wb) = node_weights(quad);
    let t = &basis.tables;
    let n = basis.len();
    let mut r = DVector::zeros(n);
    for i in 0..2 {
        if !lift.force.c[i].is_zero() {
            let f = DVector::from_vec(lift.force.c[i].values(quad)?);
            r += t.u[i].transpose() * f.component_mul(&w);
        }
    }
    if !lift.source.is_zero() {
        let a = DVector::from_vec(inflow_antiderivative(quad, lift.source.clone()).values(quad)?);
        r += t.div.transpose() * a.component_mul(&w) * params.gamma;
    }
    if lift.boundary_residual.iter().any(|v| *v != 0.0) {
        let b = DVector::from_vec(lift.boundary_residual.clone());
        r += t.bt.transpose() * b.component_mul(&wb);
    }
    Ok((basis.system_matrix(params), r))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// `|M c - r|`.
    pub residual: f64,
    /// Smallest eigenvalue of the symmetric part of `M`.
    pub coercivity_margin: f64,
}

/// Dense LU solve after checking that the symmetric part of `M` is positive definite.
pub fn solve_coefficients(m: &DMatrix<f64>, r: &DVector<f64>) -> Result<(DVector<f64>, SolveDiagnostics)> {
    if m.nrows() != m.ncols() || m.nrows() != r.len() {
        return Err(Error::Solver(format!(
            "system is {}x{} with a right-hand side of length {}",
            m.nrows(),
            m.ncols(),
            r.len()
        )));
    }
    let margin = sym_eigenvalues(m).first().copied().unwrap_or(0.0);
    if !(margin > MARGIN_TOL) {
        return Err(Error::Solver(format!(
            "coercivity margin {margin:.3e} is not positive; increase the friction coefficient f or the penalty sigma"
        )));
    }
    let c = m
        .clone()
        .lu()
        .solve(r)
        .ok_or_else(|| Error::Solver("system matrix is singular; increase f or sigma".into()))?;
    let residual = (m * &c - r).norm();
    Ok((c, SolveDiagnostics { residual, coercivity_margin: margin }))
}

/// Friction coefficients scanned for coercivity.
pub const FRICTION_GRID: [f64; 12] = [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionScan {
    /// `(f, smallest eigenvalue of the symmetric part)` on the decade grid.
    pub grid: Vec<[f64; 2]>,
    /// First grid value with a positive margin.
    pub grid_value: Option<f64>,
    /// Bisected threshold between that grid value and its predecessor.
    pub threshold: Option<f64>,
}

fn scan(margin: impl Fn(f64) -> f64) -> FrictionScan {
    let grid: Vec<[f64; 2]> = FRICTION_GRID.iter().map(|&f| [f, margin(f)]).collect();
    let pos = grid.iter().position(|g| g[1] > MARGIN_TOL);
    let (grid_value, threshold) = match pos {
        None => (None, None),
        Some(0) => (Some(0.0), Some(0.0)),
        Some(k) => {
            let (mut lo, mut hi) = (grid[k - 1][0], grid[k][0]);
            for _ in 0..40 {
                let mid = if lo == 0.0 { 0.5 * hi } else { (lo * hi).sqrt() };
                if margin(mid) > MARGIN_TOL {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (Some(grid[k][0]), Some(hi))
        }
    };
    FrictionScan { grid, grid_value, threshold }
}

/// `max(-n1) / 2` over the boundary: the friction needed for the boundary
/// term `1/2 int n1 (u.tau)^2` produced by the advection form to be dominated.
pub fn advective_friction_bound(quad: &Quadrature) -> f64 {
    0.5 * quad.boundary.iter().map(|b| -b.normal[0]).fold(0.0, f64::max)
}

/// Smallest friction coefficient making the system matrix coercive.
pub fn friction_threshold(basis: &GalerkinBasis, params: &OseenParameters) -> FrictionScan {
    scan(|f| {
        let m = basis.forms.system(&params.with_friction(f), basis.sigma);
        sym_eigenvalues(&m).first().copied().unwrap_or(0.0)
    })
}

/// Smallest friction coefficient making the Korn form positive against `H^1`.
pub fn korn_threshold(basis: &GalerkinBasis, params: &OseenParameters) -> FrictionScan {
    let h1 = basis.forms.h1();
    scan(|f| {
        let k = basis.forms.korn(&params.with_friction(f), basis.sigma);
        generalized_eigenvalues(&k, &h1).ok().and_then(|e| e.first().copied()).unwrap_or(f64::NAN)
    })
}

#[derive(Clone, Debug)]
pub struct GalerkinSolution {
    pub coefficients: DVector<f64>,
    /// Full velocity `u0 + sum c_i phi_i`.
    pub velocity: VectorField,
    /// The Galerkin part `sum c_i phi_i`.
    pub discrete: VectorField,
    pub lift: Lift,
    /// `A(G - div u)`, vanishing on the inflow boundary.
    pub density: ScalarField,
    pub diagnostics: SolveDiagnostics,
}

/// `w = A(G - div u)` with `A` the inflow antiderivative.
pub fn reconstruct_density(quad: &Quadrature, u: &VectorField, g: &ScalarField) -> Result<ScalarField> {
    Ok(inflow_antiderivative(quad, lin(vec![(1.0, g.clone()), (-1.0, div(u)?)])))
}

/// Lift, assemble, solve and reconstruct.
pub fn solve(basis: &GalerkinBasis, data: &OseenData, params: &OseenParameters) -> Result<GalerkinSolution> {
    params.validate()?;
    let lift = lift_boundary_data(basis, data, params)?;
    let (m, r) = assemble_system(basis, &lift, params)?;
    let (c, diagnostics) = solve_coefficients(&m, &r)?;
    let discrete = basis.combine(&c);
    let density = reconstruct_density(&basis.quad, &discrete, &lift.source)?;
    let velocity = vlin(vec![(1.0, lift.velocity.clone()), (1.0, discrete.clone())]);
    Ok(GalerkinSolution { coefficients: c, velocity, discrete, lift, density, diagnostics })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub u_h1: f64,
    pub w_l2: f64,
    pub w_x1_l2: f64,
}

impl EnergyReport {
    /// `||u||_{H^1} + ||w||_{L^2} + ||w_{x1}||_{L^2}`.
    pub fn total(&self) -> f64 {
        self.u_h1 + self.w_l2 + self.w_x1_l2
    }
}

pub fn energy_report(quad: &Quadrature, u: &VectorField, w: &ScalarField) -> Result<EnergyReport> {
    Ok(EnergyReport { u_h1: vector_h1(u, quad)?, w_l2: l2_norm(w, quad)?, w_x1_l2: l2_norm(&w.diff(0)?, quad)? })
}

/// `||f||_{H^1}` of each component, for reports.
pub fn component_h1(u: &VectorField, quad: &Quadrature) -> Result<[f64; 2]> {
    Ok([h1_norm(&u.c[0], quad)?, h1_norm(&u.c[1], quad)?])
}
