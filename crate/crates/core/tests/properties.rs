use std::sync::Arc;

use oseen_core::fields::{
    boundary_traces, inflow_antiderivative, lin, normal_trace_norm, perp_grad, vector_l2, vlin, ScalarField,
    Spectral, VectorField, Weight,
};
use oseen_core::galerkin::{build_basis, solve, BoundaryData, OseenData, OseenParameters};
use oseen_core::geometry::{classify_boundary_point, Domain, Region, TOL_N};
use oseen_core::helmholtz::{decompose, scalar_quadrature};
use oseen_core::legendre::Tensor;
use oseen_core::quadrature::Quadrature;
use oseen_core::transport::{solve_transport, transport_residual};
use proptest::prelude::*;

fn shipped() -> Vec<Domain> {
    vec![
        Domain::disk([0.0, 0.0], 1.0).unwrap(),
        Domain::ellipse([0.0, 0.0], 1.5, 1.0).unwrap(),
        Domain::power_cap(2.25).unwrap(),
        Domain::power_cap(2.5).unwrap(),
        Domain::power_cap(2.9).unwrap(),
        Domain::power_cap(3.0).unwrap(),
        Domain::power_cap(3.5).unwrap(),
        Domain::power_log_cap().unwrap(),
    ]
}

fn poly(shape: oseen_core::geometry::Shape, weight: Weight, coef: &[f64], degree: usize) -> ScalarField {
    let mut t = Tensor::zeros(degree, degree);
    let mut k = 0;
    for i in 0..=degree {
        for j in 0..=degree - i {
            t.set(i, j, coef[k % coef.len()]);
            k += 1;
        }
    }
    ScalarField::Spectral(Spectral::single(shape, weight, t))
}

fn height(domain: &Domain, s: f64) -> f64 {
    let (lo, hi) = domain.x2_range();
    lo + s * (hi - lo)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inflow_and_outflow_sides(idx in 0usize..8, s in 0.02f64..0.98) {
        let d = &shipped()[idx];
        let sec = d.section(height(d, s)).unwrap();
        let unit = |v: [f64; 2]| { let n = v[0].hypot(v[1]); [v[0] / n, v[1] / n] };
        let n_in = unit([-1.0, sec.dlo]);
        let n_out = unit([1.0, -sec.dhi]);
        prop_assert_eq!(classify_boundary_point(n_in, TOL_N).unwrap(), Region::Inflow);
        prop_assert_eq!(classify_boundary_point(n_out, TOL_N).unwrap(), Region::Outflow);
    }

    #[test]
    fn inflow_slope_matches_differences(idx in 0usize..8, s in 0.05f64..0.95) {
        let d = &shipped()[idx];
        let x2 = height(d, s);
        let h = 1e-5;
        let fd = (d.inflow_abscissa(x2 + h).unwrap() - d.inflow_abscissa(x2 - h).unwrap()) / (2.0 * h);
        let exact = d.inflow_slope(x2).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{} vs {}", fd, exact);
    }

    #[test]
    fn curvature_is_single_signed(idx in 0usize..8, t in 0.0f64..1.0) {
        let d = &shipped()[idx];
        prop_assert!(d.curvature(t) >= -1e-12);
    }

    #[test]
    fn singularity_points_are_equivariant(dx in -3.0f64..3.0, dy in -3.0f64..3.0, idx in 0usize..8) {
        let d = &shipped()[idx];
        let (lo, up) = d.singularity_points();
        let t = d.translated([dx, dy]).unwrap();
        let (tl, tu) = t.singularity_points();
        for (a, b) in [(lo, tl), (up, tu)] {
            prop_assert!((a[0] + dx - b[0]).abs() < 1e-9 && (a[1] + dy - b[1]).abs() < 1e-9);
        }
        let moved = d.translated([dx, 0.0]).unwrap();
        let r = moved.reflected().unwrap();
        let (ml, mu) = moved.singularity_points();
        let (rl, ru) = r.singularity_points();
        for (a, b) in [(ml, rl), (mu, ru)] {
            prop_assert!((a[0] + b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn divergence_theorem_on_quadrature(coef in prop::collection::vec(-1.0f64..1.0, 10), idx in 0usize..2) {
        let d = Arc::new(shipped().swap_remove(idx));
        let q = Quadrature::for_degree(d.clone(), 8);
        let phi = poly(d.shape, Weight::One, &coef, 3);
        let dphi = phi.diff(0).unwrap();
        let lhs = q.integrate(|x| dphi.eval(x).unwrap());
        let rhs = q.integrate_boundary(|b| phi.eval(b.x).unwrap() * b.normal[0]);
        prop_assert!((lhs - rhs).abs() < 1e-8, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn perp_grad_of_zero_trace_is_tangent(coef in prop::collection::vec(-1.0f64..1.0, 10), idx in 0usize..8) {
        let d = Arc::new(shipped().swap_remove(idx));
        let q = Quadrature::for_degree(d.clone(), 8);
        let phi = poly(d.shape, Weight::Bubble(0, 0), &coef, 3);
        prop_assert!(normal_trace_norm(&perp_grad(&phi).unwrap(), &q).unwrap() < 1e-8);
    }

    #[test]
    fn inflow_antiderivative_inverts_x1_derivative(coef in prop::collection::vec(-1.0f64..1.0, 6), idx in 0usize..8) {
        let d = Arc::new(shipped().swap_remove(idx));
        let q = Quadrature::for_degree(d.clone(), 6);
        let f = poly(d.shape, Weight::One, &coef, 2);
        let a = inflow_antiderivative(&q, f.clone());
        for p in q.points().step_by(37) {
            let h = 1e-4;
            let fd = (a.eval([p[0] + h, p[1]]).unwrap() - a.eval([p[0] - h, p[1]]).unwrap()) / (2.0 * h);
            prop_assert!((fd - f.eval(p).unwrap()).abs() < 1e-6);
        }
        for l in &q.lines {
            prop_assert!(a.eval([l.section.lo, l.section.x2]).unwrap().abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn galerkin_solve_is_linear(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, c3 in -2.0f64..2.0) {
        let d = Arc::new(Domain::ellipse([0.0, 0.0], 1.5, 1.0).unwrap());
        let basis = build_basis(d, 8, 1e4).unwrap();
        let p = OseenParameters::default();
        let a = OseenData {
            force: VectorField::parse("x2", "1").unwrap(),
            source: ScalarField::parse("x1*x2").unwrap(),
            boundary: BoundaryData::Field(ScalarField::parse("x1").unwrap()),
        };
        let b = OseenData {
            force: VectorField::parse("0", "x1^2").unwrap(),
            source: ScalarField::parse("1").unwrap(),
            boundary: BoundaryData::Zero,
        };
        let combo = OseenData {
            force: vlin(vec![(c1, a.force.clone()), (c2, b.force.clone())]),
            source: lin(vec![(c1, a.source.clone()), (c2, b.source.clone())]),
            boundary: BoundaryData::Field(ScalarField::parse(&format!("{c1}*x1")).unwrap()),
        };
        let sa = solve(&basis, &a, &p).unwrap();
        let sb = solve(&basis, &b, &p).unwrap();
        let sc = solve(&basis, &combo, &p).unwrap();
        let expect = &sa.coefficients * c1 + &sb.coefficients * c2;
        prop_assert!((&sc.coefficients - &expect).amax() < 1e-9 * (1.0 + expect.amax()));
        prop_assert!(sc.diagnostics.residual < 1e-10 * (1.0 + sc.coefficients.norm()));
        let _ = c3;
    }

    #[test]
    fn helmholtz_roundtrip_for_tangent_polynomials(coef in prop::collection::vec(-1.0f64..1.0, 10)) {
        let d = Arc::new(Domain::ellipse([0.1, -0.2], 1.3, 0.9).unwrap());
        let q = scalar_quadrature(d.clone(), 6);
        let a = poly(d.shape, Weight::Bubble(0, 0), &coef, 3);
        // grad of B^2 p is tangent as well; add it as a potential part.
        let b2 = ScalarField::Product(Box::new(poly(d.shape, Weight::Bubble(0, 0), &[1.0], 0)), Box::new(a.clone()));
        let u = vlin(vec![(1.0, perp_grad(&a).unwrap()), (0.5, oseen_core::fields::grad(&b2).unwrap())]);
        let (vn, _) = boundary_traces(&u, &q).unwrap();
        prop_assert!(vn.iter().all(|v| v.abs() < 1e-10));
        let parts = decompose(&q, &u, 8).unwrap();
        prop_assert!(parts.defect < 1e-8, "defect {}", parts.defect);
        let recon = vlin(vec![(1.0, parts.potential_part().unwrap()), (1.0, parts.stream_part().unwrap())]);
        prop_assert!(vector_l2(&vlin(vec![(1.0, recon), (-1.0, u)]), &q).unwrap() < 1e-8);
    }

    #[test]
    fn transport_identity_for_polynomials(coef in prop::collection::vec(-1.0f64..1.0, 10), rate in 0.05f64..2.0, idx in 0usize..8) {
        let d = Arc::new(shipped().swap_remove(idx));
        let q = Quadrature::for_degree(d.clone(), 8);
        let ht = poly(d.shape, Weight::One, &coef, 3);
        let w = solve_transport(&q, rate, &ht).unwrap();
        let r = transport_residual(&w, &ht, rate).unwrap().values(&q).unwrap();
        prop_assert!(r.iter().all(|v| v.abs() < 1e-8));
    }
}
