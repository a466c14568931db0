//! Numerical checks of the inequalities and identities behind the existence
//! and regularity argument, plus manufactured solutions.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{div, grad, l2_norm, lin, perp_grad, ScalarField, Spectral, VectorField, Weight};
use crate::galerkin::{slip_traction, BoundaryData, FrictionScan, GalerkinBasis, OseenData, OseenParameters};
use crate::geometry::Shape;
use crate::legendre::Tensor;
use crate::linalg::generalized_eigenvalues;
use crate::quadrature::Quadrature;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    AtMost,
    Below,
    Above,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::AtMost => "<=",
            Relation::Below => "<",
            Relation::Above => ">",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
    pub context: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64, context: impl Into<String>) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= threshold,
            Relation::Below => value < threshold,
            Relation::Above => value > threshold,
        };
        Self { name: name.into(), value, threshold, relation, pass, context: context.into() }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.6e} {} {:.6e} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation,
            self.threshold,
            self.context
        )
    }
}

/// An exact solution `(u, w)` with the data it induces.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub velocity: VectorField,
    pub density: ScalarField,
    pub data: OseenData,
}

/// `d_{x1} u - mu lap u - (nu + mu) grad div u + gamma grad w`.
pub fn momentum_operator(u: &VectorField, w: &ScalarField, params: &OseenParameters) -> Result<VectorField> {
    let gd = grad(&div(u)?)?;
    let gw = grad(w)?;
    let mut out = Vec::with_capacity(2);
    for i in 0..2 {
        let c = &u.c[i];
        let lap = lin(vec![(1.0, c.diff(0)?.diff(0)?), (1.0, c.diff(1)?.diff(1)?)]);
        out.push(lin(vec![
            (1.0, c.diff(0)?),
            (-params.mu, lap),
            (-(params.nu + params.mu), gd.c[i].clone()),
            (params.gamma, gw.c[i].clone()),
        ]));
    }
    let v = out.pop().expect("two");
    Ok(VectorField::new(out.pop().expect("two"), v))
}

/// `div u + d_{x1} w`.
pub fn continuity_operator(u: &VectorField, w: &ScalarField) -> Result<ScalarField> {
    Ok(lin(vec![(1.0, div(u)?), (1.0, w.diff(0)?)]))
}

impl Manufactured {
    /// Data `F`, `G`, `B` generated from `(u, w)` by exact differentiation.
    pub fn from_fields(u: VectorField, w: ScalarField, params: &OseenParameters) -> Result<Self> {
        let data = OseenData {
            force: momentum_operator(&u, &w, params)?,
            source: continuity_operator(&u, &w)?,
            boundary: BoundaryData::SlipOf { u: u.clone(), mu: params.mu, friction: params.friction },
        };
        Ok(Self { velocity: u, density: w, data })
    }

    /// `u = perp_grad(b P) + b v` with `deg P = 2`, `deg v = 1`, and
    /// `w = b (1 + xi2 / 2)`, in reference coordinates of `shape`. The
    /// velocity vanishes in the normal direction and has a divergent part;
    /// `w` vanishes on the whole boundary.
    pub fn standard(shape: Shape, params: &OseenParameters) -> Result<Self> {
        let bubble = |coef: &[(usize, usize, f64)]| {
            let mut t = Tensor::zeros(2, 2);
            for &(i, j, v) in coef {
                t.set(i, j, v);
            }
            ScalarField::Spectral(Spectral::single(shape, Weight::Bubble(0, 0), t))
        };
        let stream = bubble(&[(0, 0, 0.5), (1, 0, 0.3), (0, 1, -0.2), (1, 1, 0.15), (2, 0, 0.1), (0, 2, -0.05)]);
        let v1 = bubble(&[(0, 0, 0.6), (1, 0, 0.3), (0, 1, -0.2)]);
        let v2 = bubble(&[(0, 0, -0.4), (1, 0, 0.25), (0, 1, 0.15)]);
        let u = crate::fields::vlin(vec![(1.0, perp_grad(&stream)?), (1.0, VectorField::new(v1, v2))]);
        let w = bubble(&[(0, 0, 1.0), (0, 1, 0.5)]);
        Self::from_fields(u, w, params)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongResiduals {
    pub momentum: f64,
    pub continuity: f64,
    /// Slip condition `n.2 mu D(u).tau + f u.tau - B`.
    pub friction: f64,
    pub normal_trace: f64,
    /// `w` on the inflow boundary.
    pub inflow_density: f64,
}

pub fn strong_residuals(
    quad: &Quadrature,
    u: &VectorField,
    w: &ScalarField,
    data: &OseenData,
    params: &OseenParameters,
) -> Result<StrongResiduals> {
    let mo = momentum_operator(u, w, params)?;
    let r1 = lin(vec![(1.0, mo.c[0].clone()), (-1.0, data.force.c[0].clone())]);
    let r2 = lin(vec![(1.0, mo.c[1].clone()), (-1.0, data.force.c[1].clone())]);
    let momentum = l2_norm(&r1, quad)?.hypot(l2_norm(&r2, quad)?);
    let rc = lin(vec![(1.0, continuity_operator(u, w)?), (-1.0, data.source.clone())]);
    let continuity = l2_norm(&rc, quad)?;
    let t = slip_traction(u, quad, params.mu, params.friction)?;
    let b = data.boundary.values(quad)?;
    let (vn, _) = crate::fields::boundary_traces(u, quad)?;
    let wb = w.boundary_values(quad)?;
    let mut acc = [0.0; 3];
    for (k, node) in quad.boundary.iter().enumerate() {
        acc[0] += node.w * (t[k] - b[k]).powi(2);
        acc[1] += node.w * vn[k] * vn[k];
        if node.normal[0] < 0.0 {
            acc[2] += node.w * wb[k] * wb[k];
        }
    }
    Ok(StrongResiduals {
        momentum,
        continuity,
        friction: acc[0].sqrt(),
        normal_trace: acc[1].sqrt(),
        inflow_density: acc[2].sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KornReport {
    /// Smallest eigenvalue of the Korn form against the `H^1` Gram matrix.
    pub min_quotient: f64,
    pub scan: FrictionScan,
}

/// Discrete Korn constant over the span of the basis at the given friction.
pub fn korn_rayleigh(basis: &GalerkinBasis, params: &OseenParameters) -> Result<KornReport> {
    let k = basis.forms.korn(params, basis.sigma);
    let e = generalized_eigenvalues(&k, &basis.forms.h1())?;
    Ok(KornReport {
        min_quotient: e.first().copied().unwrap_or(f64::NAN),
        scan: crate::galerkin::korn_threshold(basis, params),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    /// Best constant in `||u|| <= C ||grad u||` over the tangent part of the span.
    pub constant: f64,
    /// Smallest eigenvalue of the gradient Gram against the mass matrix.
    pub min_gradient_ratio: f64,
    /// Dimension of the subspace of exactly tangent combinations.
    pub tangent_dim: usize,
    pub pass: bool,
}

/// Relative size below which a normal-trace eigenvalue counts as zero.
const TANGENT_TOL: f64 = 1e-10;

/// Orthonormal coordinates of the combinations with vanishing normal trace.
fn tangent_subspace(normal: &DMatrix<f64>) -> DMatrix<f64> {
    let n = normal.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = crate::linalg::symmetric_part(normal).symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&j| eig.eigenvalues[j] <= TANGENT_TOL * scale)
        .map(|j| eig.eigenvectors.column(j).clone_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Discrete Poincare constant over the exactly tangent fields in the span.
/// Constant fields are excluded because they are not tangent to a curved boundary.
pub fn poincare_v(basis: &GalerkinBasis) -> Result<PoincareReport> {
    let z = tangent_subspace(&basis.forms.normal);
    let tangent_dim = z.ncols();
    if tangent_dim == 0 {
        return Ok(PoincareReport { constant: f64::NAN, min_gradient_ratio: f64::NAN, tangent_dim, pass: false });
    }
    let s = z.transpose() * &basis.forms.stiffness * &z;
    let m = z.transpose() * &basis.forms.mass * &z;
    let e = generalized_eigenvalues(&s, &m)?;
    let lo = e.first().copied().unwrap_or(f64::NAN);
    let constant = if lo > 0.0 { 1.0 / lo.sqrt() } else { f64::INFINITY };
    Ok(PoincareReport { constant, min_gradient_ratio: lo, tangent_dim, pass: constant.is_finite() && lo > 1e-12 })
}

/// Inflow antiderivatives of random polynomials of total degree at most `degree`.
pub fn random_antiderivatives(quad: &Quadrature, count: usize, degree: usize, seed: u64) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = quad.domain.shape;
    (0..count)
        .map(|_| {
            let mut t = Tensor::zeros(degree, degree);
            for i in 0..=degree {
                for j in 0..=degree - i {
                    t.set(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            crate::fields::inflow_antiderivative(quad, ScalarField::Spectral(Spectral::single(shape, Weight::One, t)))
        })
        .collect()
}

/// `||eta|| <= diam ||eta_{x1}||` for fields vanishing on the inflow boundary.
pub fn poincare_w(quad: &Quadrature, samples: &[ScalarField]) -> Result<CheckResult> {
    let diam = quad.domain.diameter();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for eta in samples {
        let a = l2_norm(eta, quad)?;
        let b = l2_norm(&eta.diff(0)?, quad)?;
        if a > diam * b {
            failures += 1;
        }
        if b > 0.0 {
            worst = worst.max(a / b);
        }
    }
    let mut c = CheckResult::new(
        "poincare_w",
        worst,
        Relation::AtMost,
        diam,
        format!("{}: {} samples, {failures} failures", quad.domain.name, samples.len()),
    );
    c.pass = failures == 0;
    Ok(c)
}

/// Uniform boundedness of `||u^N||_{H^1} + ||w^N||_W` along a series in `N`.
pub fn estimate_monitor(series: &[(usize, f64)]) -> CheckResult {
    let max = series.iter().map(|s| s.1).fold(0.0, f64::max);
    let min = series.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let ratio = if max == 0.0 { 1.0 } else { max / min };
    let table: Vec<String> = series.iter().map(|(n, v)| format!("N={n}: {v:.6e}")).collect();
    let mut c = CheckResult::new("estimate_monitor", ratio, Relation::AtMost, 1.5, table.join(", "));
    if series.len() < 3 {
        c.pass = false;
        c.context = format!("needs at least 3 runs, got {}", series.len());
    }
    c
}
