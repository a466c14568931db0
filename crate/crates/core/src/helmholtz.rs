//! Vorticity, the stream/potential split `u = grad psi + perp_grad A`, and the
//! vorticity identities satisfied by slip solutions.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::{
    boundary_l2, boundary_traces, grad, l2_norm, lin, perp_grad, rot, vector_l2, vlin, ScalarField, Spectral,
    VectorField, Weight,
};
use crate::galerkin::OseenParameters;
use crate::geometry::{Domain, Shape};
use crate::legendre::Tensor;
use crate::linalg::solve_spd;
use crate::quadrature::Quadrature;

/// Largest polynomial degree accepted by the scalar solves.
pub const MAX_SCALAR_DEGREE: usize = 16;
/// `|int g|` above this rejects a Neumann solve.
pub const COMPATIBILITY_TOL: f64 = 1e-8;
const MAX_COND: f64 = 1e15;

pub fn vorticity(u: &VectorField) -> Result<ScalarField> {
    rot(u)
}

/// Quadrature exact for products of two scalar fields of the given degree.
pub fn scalar_quadrature(domain: Arc<Domain>, degree: usize) -> Quadrature {
    Quadrature::for_degree(domain, 2 * degree + 6)
}

/// Trial/test functions of one scalar Galerkin space tabulated on a quadrature.
struct ScalarSpace {
    fields: Vec<Spectral>,
    val: DMatrix<f64>,
    gx: DMatrix<f64>,
    gy: DMatrix<f64>,
}

impl ScalarSpace {
    fn new(quad: &Quadrature, fields: Vec<Spectral>) -> Result<Self> {
        let n = quad.interior.len();
        let m = fields.len();
        let mut val = DMatrix::zeros(n, m);
        let mut gx = DMatrix::zeros(n, m);
        let mut gy = DMatrix::zeros(n, m);
        for (j, f) in fields.iter().enumerate() {
            let dx = f.diff(0);
            let dy = f.diff(1);
            for (k, node) in quad.interior.iter().enumerate() {
                val[(k, j)] = f.eval(node.x);
                gx[(k, j)] = dx.eval(node.x);
                gy[(k, j)] = dy.eval(node.x);
            }
        }
        Ok(Self { fields, val, gx, gy })
    }

    /// Zero-trace space `{B p : deg p <= degree}`.
    fn bubble(quad: &Quadrature, shape: Shape, degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let mut fields = Vec::new();
        for k in 0..=degree {
            for i in (0..=k).rev() {
                fields.push(Spectral::single(shape, Weight::Bubble(0, 0), Tensor::unit(i, k - i)));
            }
        }
        Self::new(quad, fields)
    }

    /// Non-constant polynomials of total degree `1..=degree`.
    fn polynomial(quad: &Quadrature, shape: Shape, degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let mut fields = Vec::new();
        for k in 1..=degree {
            for i in (0..=k).rev() {
                fields.push(Spectral::single(shape, Weight::One, Tensor::unit(i, k - i)));
            }
        }
        Self::new(quad, fields)
    }

    fn weights(quad: &Quadrature) -> DVector<f64> {
        DVector::from_iterator(quad.interior.len(), quad.interior.iter().map(|n| n.w))
    }

    fn weighted(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (k, mut row) in out.row_iter_mut().enumerate() {
            row *= w[k];
        }
        out
    }

    fn stiffness(&self, w: &DVector<f64>) -> DMatrix<f64> {
        self.gx.transpose() * Self::weighted(&self.gx, w) + self.gy.transpose() * Self::weighted(&self.gy, w)
    }

    /// `int f phi_j` for node values `f`.
    fn load(&self, w: &DVector<f64>, f: &[f64]) -> DVector<f64> {
        let fw = DVector::from_iterator(f.len(), f.iter().zip(w.iter()).map(|(a, b)| a * b));
        self.val.transpose() * fw
    }

    /// `int (g1 d1 phi_j + g2 d2 phi_j)` for node values `g`.
    fn grad_load(&self, w: &DVector<f64>, g: [&[f64]; 2]) -> DVector<f64> {
        let g1 = DVector::from_iterator(w.len(), g[0].iter().zip(w.iter()).map(|(a, b)| a * b));
        let g2 = DVector::from_iterator(w.len(), g[1].iter().zip(w.iter()).map(|(a, b)| a * b));
        self.gx.transpose() * g1 + self.gy.transpose() * g2
    }

    fn combine(&self, c: &DVector<f64>) -> ScalarField {
        let Some(first) = self.fields.first() else {
            return ScalarField::zero();
        };
        let mut s = Spectral::new(first.shape);
        for (f, k) in self.fields.iter().zip(c.iter()) {
            s.axpy(*k, f);
        }
        ScalarField::Spectral(s)
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_SCALAR_DEGREE {
        return Err(Error::InvalidInput(format!("scalar degree {degree} exceeds {MAX_SCALAR_DEGREE}")));
    }
    Ok(())
}

/// Symmetric diagonal scaling before an SPD solve.
fn scaled_spd_solve(k: &DMatrix<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
    let n = k.nrows();
    let s = DVector::from_iterator(n, (0..n).map(|i| 1.0 / k[(i, i)].max(f64::MIN_POSITIVE).sqrt()));
    let ks = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * s[i] * s[j]);
    let rs = r.component_mul(&s);
    Ok(solve_spd(&ks, &rs, MAX_COND)?.component_mul(&s))
}

#[derive(Clone, Debug)]
pub struct ScalarSolve {
    pub field: ScalarField,
    /// Largest weak-form residual over the test functions.
    pub residual: f64,
}

/// `Delta A = alpha` with `A = 0` on the boundary, over `{B p : deg p <= degree}`.
pub fn solve_stream(quad: &Quadrature, alpha: &ScalarField, degree: usize) -> Result<ScalarSolve> {
    let space = ScalarSpace::bubble(quad, quad.domain.shape, degree)?;
    let w = ScalarSpace::weights(quad);
    let k = space.stiffness(&w);
    let r = -space.load(&w, &alpha.values(quad)?);
    let c = scaled_spd_solve(&k, &r)?;
    let residual = (&k * &c - &r).amax();
    Ok(ScalarSolve { field: space.combine(&c), residual })
}

/// `Delta psi = g` with `d psi / dn = 0`, normalized to zero mean.
pub fn solve_potential(quad: &Quadrature, g: &ScalarField, degree: usize) -> Result<ScalarSolve> {
    let gv = g.values(quad)?;
    let total: f64 = gv.iter().zip(&quad.interior).map(|(v, n)| v * n.w).sum();
    if total.abs() > COMPATIBILITY_TOL {
        return Err(Error::InvalidInput(format!(
            "Neumann data incompatible: integral of the source is {total:.3e}"
        )));
    }
    let space = ScalarSpace::polynomial(quad, quad.domain.shape, degree)?;
    let w = ScalarSpace::weights(quad);
    let k = space.stiffness(&w);
    let r = -space.load(&w, &gv);
    let c = scaled_spd_solve(&k, &r)?;
    let residual = (&k * &c - &r).amax();
    let psi = space.combine(&c);
    let mean = quad.integrate(|x| psi.eval(x).unwrap_or(0.0)) / quad.area();
    let field = match psi {
        ScalarField::Spectral(mut s) => {
            s.push(-mean, Weight::One, &Tensor::constant(1.0));
            ScalarField::Spectral(s)
        }
        other => other,
    };
    Ok(ScalarSolve { field, residual })
}

#[derive(Clone, Debug)]
pub struct HelmholtzParts {
    pub psi: ScalarField,
    pub stream: ScalarField,
    /// `|u - grad psi - perp_grad A|` in L2.
    pub defect: f64,
    /// Mean of `div u` removed before the Neumann solve.
    pub divergence_mean: f64,
    pub stream_residual: f64,
    pub potential_residual: f64,
}

impl HelmholtzParts {
    pub fn potential_part(&self) -> Result<VectorField> {
        grad(&self.psi)
    }

    pub fn stream_part(&self) -> Result<VectorField> {
        perp_grad(&self.stream)
    }
}

/// Split `u` into potential and stream parts. `degree` bounds the polynomial
/// degree of `u`; the potential space uses `degree + 1`, the stream space `degree`.
///
/// With `rot = d1 u2 - d2 u1` one has `rot perp_grad A = -Delta A`, so the
/// stream function solves `Delta A = -rot u`.
pub fn decompose(quad: &Quadrature, u: &VectorField, degree: usize) -> Result<HelmholtzParts> {
    let alpha = vorticity(u)?;
    let g = crate::fields::div(u)?;
    let gv = g.values(quad)?;
    let divergence_mean = gv.iter().zip(&quad.interior).map(|(v, n)| v * n.w).sum::<f64>() / quad.area();
    let g0 = if divergence_mean == 0.0 {
        g
    } else {
        lin(vec![(1.0, g), (-divergence_mean, ScalarField::constant(1.0))])
    };
    let (stream, potential) = rayon::join(
        || solve_stream(quad, &lin(vec![(-1.0, alpha.clone())]), degree),
        || solve_potential(quad, &g0, degree + 1),
    );
    let (stream, potential) = (stream?, potential?);
    let recon = vlin(vec![
        (1.0, u.clone()),
        (-1.0, grad(&potential.field)?),
        (-1.0, perp_grad(&stream.field)?),
    ]);
    let defect = vector_l2(&recon, quad)?;
    Ok(HelmholtzParts {
        psi: potential.field,
        stream: stream.field,
        defect,
        divergence_mean,
        stream_residual: stream.residual,
        potential_residual: potential.residual,
    })
}

/// Node values of `(2 chi - f/mu) u.tau + B/mu`, the boundary value of `rot u`
/// for slip fields.
pub fn slip_vorticity_trace(
    u: &VectorField,
    params: &OseenParameters,
    quad: &Quadrature,
    traction: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let (_, ut) = boundary_traces(u, quad)?;
    Ok(quad
        .boundary
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let extra = traction.map_or(0.0, |t| t[k] / params.mu);
            (2.0 * b.curvature - params.friction / params.mu) * ut[k] + extra
        })
        .collect())
}

/// Boundary L2 norm of `rot u - (2 chi - f/mu) u.tau - B/mu`; `traction`
/// holds `B` at the boundary nodes and defaults to zero.
pub fn boundary_vorticity_residual(
    u: &VectorField,
    params: &OseenParameters,
    quad: &Quadrature,
    traction: Option<&[f64]>,
) -> Result<f64> {
    let alpha = vorticity(u)?.boundary_values(quad)?;
    let target = slip_vorticity_trace(u, params, quad, traction)?;
    let s: f64 = quad.boundary.iter().enumerate().map(|(k, b)| b.w * (alpha[k] - target[k]).powi(2)).sum();
    Ok(s.sqrt())
}

#[derive(Clone, Debug)]
pub struct VorticityCheck {
    pub alpha: ScalarField,
    /// Boundary lift carrying the slip vorticity trace.
    pub lift: ScalarField,
    /// `|alpha - rot u|` in L2.
    pub defect: f64,
    /// Boundary L2 misfit of the lift against its target trace.
    pub lift_misfit: f64,
}

/// Rebuild `rot u` from the advection-diffusion problem
/// `d1 alpha - mu Delta alpha = rot F` with the slip vorticity trace as
/// Dirichlet data, and compare with the vorticity of `u`.
pub fn weak_vorticity_solve(
    quad: &Quadrature,
    u: &VectorField,
    force: &VectorField,
    params: &OseenParameters,
    traction: Option<&[f64]>,
    degree: usize,
) -> Result<VorticityCheck> {
    params.validate()?;
    let shape = quad.domain.shape;
    let target = slip_vorticity_trace(u, params, quad, traction)?;
    let lift = boundary_lift(quad, &target, degree)?;
    let lift_misfit = {
        let lv = lift.boundary_values(quad)?;
        let s: f64 = quad.boundary.iter().enumerate().map(|(k, b)| b.w * (lv[k] - target[k]).powi(2)).sum();
        s.sqrt()
    };

    let space = ScalarSpace::bubble(quad, shape, degree)?;
    let w = ScalarSpace::weights(quad);
    // Row i tests with phi_i: -int b d1 phi_i + mu int grad b . grad phi_i.
    let k = space.stiffness(&w) * params.mu - space.gx.transpose() * ScalarSpace::weighted(&space.val, &w);
    let f1 = force.c[0].values(quad)?;
    let f2 = force.c[1].values(quad)?;
    // F . perp_grad phi = F1 d2 phi - F2 d1 phi.
    let neg_f2: Vec<f64> = f2.iter().map(|v| -v).collect();
    let mut r = space.grad_load(&w, [&neg_f2, &f1]);
    let dv = lift.values(quad)?;
    let dx = lift.diff(0)?.values(quad)?;
    let dy = lift.diff(1)?.values(quad)?;
    let zeros = vec![0.0; dv.len()];
    r += space.grad_load(&w, [&dv, &zeros]);
    let mdx: Vec<f64> = dx.iter().map(|v| -params.mu * v).collect();
    let mdy: Vec<f64> = dy.iter().map(|v| -params.mu * v).collect();
    r += space.grad_load(&w, [&mdx, &mdy]);
    let c = k
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Solver("vorticity system is singular".into()))?;
    let b = space.combine(&c);
    let alpha = lin(vec![(1.0, b), (1.0, lift.clone())]);
    let diff = lin(vec![(1.0, alpha.clone()), (-1.0, vorticity(u)?)]);
    let defect = l2_norm(&diff, quad)?;
    Ok(VorticityCheck { alpha, lift, defect, lift_misfit })
}

/// Polynomial of degree `degree` fitted to boundary values, then corrected by
/// a zero-trace Dirichlet solve so that it is discretely harmonic.
fn boundary_lift(quad: &Quadrature, target: &[f64], degree: usize) -> Result<ScalarField> {
    let shape = quad.domain.shape;
    check_degree(degree)?;
    let mut fields = vec![Spectral::single(shape, Weight::One, Tensor::unit(0, 0))];
    for k in 1..=degree {
        for i in (0..=k).rev() {
            fields.push(Spectral::single(shape, Weight::One, Tensor::unit(i, k - i)));
        }
    }
    let nb = quad.boundary.len();
    let m = fields.len();
    let mut a = DMatrix::zeros(nb, m);
    for (j, f) in fields.iter().enumerate() {
        for (k, b) in quad.boundary.iter().enumerate() {
            a[(k, j)] = f.eval(b.x) * b.w.sqrt();
        }
    }
    let rhs = DVector::from_iterator(nb, quad.boundary.iter().zip(target).map(|(b, t)| t * b.w.sqrt()));
    // Polynomials vanishing on an ellipse make the fit rank deficient; the
    // pseudo-inverse picks the minimal-norm representative.
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let c = svd
        .solve(&rhs, 1e-12 * smax)
        .map_err(|e| Error::Numerical(format!("boundary fit failed: {e}")))?;
    let mut p = Spectral::new(shape);
    for (f, k) in fields.iter().zip(c.iter()) {
        p.axpy(*k, f);
    }
    let p = ScalarField::Spectral(p);
    // Remove the bubble-space component z with int grad z . grad phi = int grad p . grad phi.
    let space = ScalarSpace::bubble(quad, shape, degree.saturating_sub(2).max(1))?;
    let w = ScalarSpace::weights(quad);
    let px = p.diff(0)?.values(quad)?;
    let py = p.diff(1)?.values(quad)?;
    let r = space.grad_load(&w, [&px, &py]);
    let z = scaled_spd_solve(&space.stiffness(&w), &r)?;
    Ok(lin(vec![(1.0, p), (-1.0, space.combine(&z))]))
}

/// Boundary L2 norm of the tangential derivative of `A`, zero when `A` has zero trace.
pub fn stream_normal_flux(stream: &ScalarField, quad: &Quadrature) -> Result<f64> {
    let v = perp_grad(stream)?;
    crate::fields::normal_trace_norm(&v, quad)
}

/// Boundary L2 norm of a scalar field; re-exported for trace checks on `A`.
pub fn trace_norm(f: &ScalarField, quad: &Quadrature) -> Result<f64> {
    boundary_l2(f, quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{div, normal_trace_norm};
    use crate::galerkin::{slip_traction, BoundaryData};
    use crate::verify::Manufactured;

    fn disk_quad(p: usize) -> Quadrature {
        Quadrature::for_degree(Arc::new(Domain::disk([0.0, 0.0], 1.0).unwrap()), p)
    }

    fn ellipse_quad(p: usize) -> Quadrature {
        Quadrature::for_degree(Arc::new(Domain::ellipse([0.3, -0.2], 1.4, 0.8).unwrap()), p)
    }

    fn parse(e: &str) -> ScalarField {
        ScalarField::parse(e).unwrap()
    }

    fn max_diff(quad: &Quadrature, a: &ScalarField, b: &ScalarField) -> f64 {
        quad.points().map(|x| (a.eval(x).unwrap() - b.eval(x).unwrap()).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn vorticity_examples() {
        let q = disk_quad(8);
        let rotation = VectorField::parse("-x2", "x1").unwrap();
        assert!(max_diff(&q, &vorticity(&rotation).unwrap(), &ScalarField::constant(2.0)) < 1e-14);
        let g = grad(&parse("x1^3*x2 - x2^2")).unwrap();
        assert!(max_diff(&q, &vorticity(&g).unwrap(), &ScalarField::zero()) < 1e-12);
        let s = perp_grad(&parse("1 - x1^2 - x2^2")).unwrap();
        assert!(max_diff(&q, &vorticity(&s).unwrap(), &ScalarField::constant(4.0)) < 1e-12);
    }

    #[test]
    fn stream_on_disk() {
        let q = scalar_quadrature(Arc::new(Domain::disk([0.0, 0.0], 1.0).unwrap()), 4);
        let a = solve_stream(&q, &ScalarField::constant(-4.0), 3).unwrap();
        assert!(a.residual < 1e-10);
        assert!(max_diff(&q, &a.field, &parse("1 - x1^2 - x2^2")) < 1e-10);
        let z = solve_stream(&q, &ScalarField::zero(), 3).unwrap();
        assert!(max_diff(&q, &z.field, &ScalarField::zero()) < 1e-14);
    }

    #[test]
    fn stream_is_linear() {
        let q = ellipse_quad(14);
        let a1 = parse("x1^2 - x2");
        let a2 = parse("x1*x2^3 + 1");
        let s1 = solve_stream(&q, &a1, 5).unwrap().field;
        let s2 = solve_stream(&q, &a2, 5).unwrap().field;
        let s12 = solve_stream(&q, &lin(vec![(1.0, a1), (1.0, a2)]), 5).unwrap().field;
        assert!(max_diff(&q, &s12, &lin(vec![(1.0, s1), (1.0, s2)])) < 1e-10);
    }

    #[test]
    fn potential_gauge_and_neumann() {
        let q = disk_quad(12);
        let z = solve_potential(&q, &ScalarField::zero(), 4).unwrap();
        assert!(max_diff(&q, &z.field, &ScalarField::zero()) < 1e-14);
        // x1^2 - x2^2 is harmonic but has nonzero normal derivative: not returned.
        let h = parse("x1^2 - x2^2");
        assert!(max_diff(&q, &z.field, &h) > 0.5);
        let err = solve_potential(&q, &ScalarField::constant(1.0), 4).unwrap_err();
        assert!(err.to_string().contains("3.14"));
    }

    #[test]
    fn potential_recovers_neumann_solution() {
        let q = disk_quad(14);
        let psi = parse("(x1^2 + x2^2) - (x1^2 + x2^2)^2/2");
        let g = crate::fields::laplacian(&psi).unwrap();
        let s = solve_potential(&q, &g, 5).unwrap();
        let mean = q.integrate(|x| psi.eval(x).unwrap()) / q.area();
        let shifted = lin(vec![(1.0, psi), (-mean, ScalarField::constant(1.0))]);
        assert!(max_diff(&q, &s.field, &shifted) < 1e-10);
        assert!(q.integrate(|x| s.field.eval(x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn decompose_examples() {
        let q = disk_quad(14);
        let b = parse("1 - x1^2 - x2^2");
        let u = perp_grad(&b).unwrap();
        let parts = decompose(&q, &u, 2).unwrap();
        assert!(parts.defect < 1e-8);
        assert!(max_diff(&q, &parts.psi, &ScalarField::zero()) < 1e-10);
        assert!(max_diff(&q, &parts.stream, &b) < 1e-10);

        let zero = decompose(&q, &VectorField::zero(), 2).unwrap();
        assert!(zero.defect < 1e-14);

        let psi = parse("(x1^2 + x2^2) - (x1^2 + x2^2)^2/2");
        let a = parse("(1 - x1^2 - x2^2)*x1");
        let u = vlin(vec![(1.0, grad(&psi).unwrap()), (1.0, perp_grad(&a).unwrap())]);
        let parts = decompose(&q, &u, 3).unwrap();
        assert!(parts.defect < 1e-8, "{}", parts.defect);
        assert!(max_diff(&q, &parts.stream, &a) < 1e-10);
        let gp = grad(&parts.psi).unwrap();
        let gt = grad(&psi).unwrap();
        assert!(vector_l2(&vlin(vec![(1.0, gp), (-1.0, gt)]), &q).unwrap() < 1e-9);
    }

    #[test]
    fn decompose_tangent_field_on_ellipse() {
        let quad = ellipse_quad(16);
        let m = Manufactured::standard(quad.domain.shape, &OseenParameters::default()).unwrap();
        let parts = decompose(&quad, &m.velocity, 3).unwrap();
        assert!(parts.defect < 1e-8, "{}", parts.defect);
        assert!(stream_normal_flux(&parts.stream, &quad).unwrap() < 1e-12);
        assert!(trace_norm(&parts.stream, &quad).unwrap() < 1e-12);
        assert!(parts.divergence_mean.abs() < 1e-12);
        let r = rot(&parts.potential_part().unwrap()).unwrap();
        assert!(l2_norm(&r, &quad).unwrap() < 1e-10);
        let d = div(&parts.stream_part().unwrap()).unwrap();
        assert!(l2_norm(&d, &quad).unwrap() < 1e-10);
    }

    #[test]
    fn rotation_violates_slip_identity() {
        let q = disk_quad(8);
        let params = OseenParameters { friction: 4.0, ..OseenParameters::default() };
        let u = VectorField::parse("-x2", "x1").unwrap();
        let r = boundary_vorticity_residual(&u, &params, &q, None).unwrap();
        assert!((r - 4.0 * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
        let z = boundary_vorticity_residual(&VectorField::zero(), &params, &q, None).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn slip_identity_holds_with_traction() {
        let q = ellipse_quad(12);
        let params = OseenParameters { mu: 0.7, friction: 2.5, ..OseenParameters::default() };
        let u = perp_grad(&ScalarField::Spectral(Spectral::single(
            q.domain.shape,
            Weight::Bubble(0, 0),
            Tensor::unit(2, 1),
        )))
        .unwrap();
        assert!(normal_trace_norm(&u, &q).unwrap() < 1e-12);
        let b = slip_traction(&u, &q, params.mu, params.friction).unwrap();
        let r = boundary_vorticity_residual(&u, &params, &q, Some(&b)).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn weak_vorticity_trivial() {
        let q = disk_quad(10);
        let params = OseenParameters::default();
        let v = weak_vorticity_solve(&q, &VectorField::zero(), &VectorField::zero(), &params, None, 4).unwrap();
        assert!(max_diff(&q, &v.alpha, &ScalarField::zero()) < 1e-14);
        assert!(v.defect < 1e-14);
    }

    #[test]
    fn weak_vorticity_reproduces_exact_rot() {
        let quad = ellipse_quad(18);
        let params = OseenParameters { mu: 0.8, friction: 1.5, ..OseenParameters::default() };
        let m = Manufactured::standard(quad.domain.shape, &params).unwrap();
        let b = match &m.data.boundary {
            BoundaryData::SlipOf { .. } => m.data.boundary.values(&quad).unwrap(),
            _ => unreachable!(),
        };
        let v = weak_vorticity_solve(&quad, &m.velocity, &m.data.force, &params, Some(&b), 6).unwrap();
        assert!(v.lift_misfit < 1e-9, "{}", v.lift_misfit);
        assert!(v.defect < 1e-8, "{}", v.defect);
    }
}
