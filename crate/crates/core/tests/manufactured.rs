use std::sync::Arc;

use oseen_core::fields::{l2_norm, lin, normal_trace_norm, vector_h1, vlin, VectorField};
use oseen_core::galerkin::{build_basis, energy_report, solve, BoundaryData, OseenData, OseenParameters};
use oseen_core::geometry::Domain;
use oseen_core::verify::{strong_residuals, Manufactured};

fn ellipse() -> Arc<Domain> {
    Arc::new(Domain::ellipse([0.0, 0.0], 1.5, 1.0).unwrap())
}

#[test]
fn errors_decrease_with_basis_size() {
    let d = ellipse();
    let p = OseenParameters::default();
    let m = Manufactured::standard(d.shape, &p).unwrap();
    let mut last = (f64::INFINITY, f64::INFINITY);
    for n in [8, 16, 32] {
        let b = build_basis(d.clone(), n, 1e8).unwrap();
        let s = solve(&b, &m.data, &p).unwrap();
        let eu = vector_h1(&vlin(vec![(1.0, s.velocity.clone()), (-1.0, m.velocity.clone())]), &b.quad).unwrap();
        let ew = l2_norm(&lin(vec![(1.0, s.density.clone()), (-1.0, m.density.clone())]), &b.quad).unwrap();
        assert!(eu < last.0 && ew < last.1, "N={n}: {eu} {ew} after {last:?}");
        last = (eu, ew);
    }
    assert!(last.0 <= 1e-4, "{}", last.0);
}

#[test]
fn exact_in_span_residuals() {
    let d = ellipse();
    let p = OseenParameters::default();
    let m = Manufactured::standard(d.shape, &p).unwrap();
    let b = build_basis(d, 32, 1e8).unwrap();
    let s = solve(&b, &m.data, &p).unwrap();
    let r = strong_residuals(&b.quad, &s.velocity, &s.density, &m.data, &p).unwrap();
    for v in [r.momentum, r.continuity, r.friction, r.normal_trace, r.inflow_density] {
        assert!(v <= 1e-4, "{r:?}");
    }
}

#[test]
fn normal_trace_scales_with_penalty() {
    let d = ellipse();
    let p = OseenParameters::default();
    let data = OseenData {
        force: VectorField::parse("1 + x2", "x1*x2").unwrap(),
        source: oseen_core::fields::ScalarField::parse("x1").unwrap(),
        boundary: BoundaryData::Zero,
    };
    let trace = |sigma: f64| {
        let b = build_basis(d.clone(), 16, sigma).unwrap();
        let s = solve(&b, &data, &p).unwrap();
        normal_trace_norm(&s.velocity, &b.quad).unwrap()
    };
    let (lo, hi) = (trace(1e4), trace(1e6));
    let b = build_basis(d.clone(), 16, 1e4).unwrap();
    assert!(solve(&b, &data, &p).unwrap().diagnostics.residual <= 1e-10);
    assert!(hi * 10.0 <= lo, "{lo} {hi}");
}

#[test]
fn density_poincare_on_solutions() {
    let d = ellipse();
    let p = OseenParameters::default();
    let m = Manufactured::standard(d.shape, &p).unwrap();
    let b = build_basis(d.clone(), 16, 1e6).unwrap();
    let s = solve(&b, &m.data, &p).unwrap();
    let e = energy_report(&b.quad, &s.velocity, &s.density).unwrap();
    assert!(e.w_l2 <= d.diameter() * e.w_x1_l2);
}
