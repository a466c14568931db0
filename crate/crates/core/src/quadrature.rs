//! Interior and boundary quadrature on a [`Domain`].
//!
//! Interior nodes live on horizontal lines: `x2` follows a Gauss rule in a
//! parameter `t` clustered towards both singularity points, and on each line
//! `x1 = lo(x2) + s (hi(x2) - lo(x2))` with a Gauss rule in `s`.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::gauss::GaussRule;
use crate::geometry::{Domain, Pole, Section};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Node counts of a [`Quadrature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub n_x2: usize,
    pub n_s: usize,
    /// Nodes on each of the four boundary arcs between the singularity
    /// points and the widest section.
    pub n_arc: usize,
    /// Gauss nodes used for integrals along one horizontal line.
    pub n_line: usize,
}

impl QuadratureSpec {
    /// Counts for integrands built from polynomials of degree `p`.
    pub fn for_degree(p: usize) -> Self {
        let base = p + 4;
        Self {
            n_x2: (3 * base).max(36),
            n_s: (base + base % 2).max(8),
            n_arc: (2 * base).max(32),
            n_line: (base + 2).max(12),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorNode {
    pub x: [f64; 2],
    pub w: f64,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub section: Section,
    /// Weight of the line in `x2`.
    pub w: f64,
    pub nodes: Range<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryNode {
    pub x: [f64; 2],
    /// Arc-length weight.
    pub w: f64,
    pub t: f64,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    pub curvature: f64,
}

#[derive(Clone, Debug)]
pub struct Quadrature {
    pub id: u64,
    pub domain: Arc<Domain>,
    pub spec: QuadratureSpec,
    pub interior: Vec<InteriorNode>,
    pub lines: Vec<Line>,
    pub boundary: Vec<BoundaryNode>,
    pub line_rule: GaussRule,
}

/// `(1 - cos(pi t)) / 2` and its derivative.
fn cos_map(t: f64) -> (f64, f64) {
    (0.5 * (1.0 - (PI * t).cos()), 0.5 * PI * (PI * t).sin())
}

/// One-sided map `1 - cos(pi u / 2)` composed with itself: flat to fourth
/// order at `u = 0`, regular at `u = 1`. Returns the image and the Jacobian.
fn clustered_start(u: f64) -> (f64, f64) {
    let g = |u: f64| (1.0 - (0.5 * PI * u).cos(), 0.5 * PI * (0.5 * PI * u).sin());
    let (v, dv) = g(u);
    let (w, dw) = g(v);
    (w, dw * dv)
}

/// Twice-composed cosine map of `[0, 1]` onto itself, flat to fourth order at
/// both ends; returns the image measured from the nearer end, which end that
/// is, and the Jacobian.
fn clustered(t: f64) -> (f64, bool, f64) {
    let near_start = t <= 0.5;
    let u = if near_start { t } else { 1.0 - t };
    let (p, dp) = cos_map(u);
    let (pp, dpp) = cos_map(p);
    (pp, near_start, dpp * dp)
}

impl Quadrature {
    pub fn new(domain: Arc<Domain>, spec: QuadratureSpec) -> Self {
        let (x2lo, x2hi) = domain.x2_range();
        let height = x2hi - x2lo;
        let rule_x2 = GaussRule::new(spec.n_x2);
        let rule_s = GaussRule::new(spec.n_s);
        let mut interior = Vec::with_capacity(spec.n_x2 * spec.n_s);
        let mut lines = Vec::with_capacity(spec.n_x2);
        for (t, wt) in rule_x2.mapped(0.0, 1.0) {
            let (u, near_start, jac) = clustered(t);
            let section = if near_start {
                domain.section_near(Pole::Lower, height * u)
            } else {
                domain.section_near(Pole::Upper, height * u)
            };
            let w_line = wt * jac * height;
            let width = section.width();
            let start = interior.len();
            for (s, ws) in rule_s.mapped(0.0, 1.0) {
                interior.push(InteriorNode {
                    x: [section.lo + s * width, section.x2],
                    w: w_line * width * ws,
                    line: lines.len(),
                });
            }
            lines.push(Line { section, w: w_line, nodes: start..interior.len() });
        }
        let rule_b = GaussRule::new(spec.n_arc);
        let mut boundary = Vec::with_capacity(4 * spec.n_arc);
        // arcs run between the widest sections (t = 0, 1/2) and the
        // singularity points (t = 1/4, 3/4); nodes cluster at the latter
        for arc in 0..4 {
            let t0 = 0.25 * arc as f64;
            let towards_pole = arc % 2 == 0;
            for (u, wu) in rule_b.mapped(0.0, 1.0) {
                let (v, jac) = clustered_start(1.0 - u);
                let t = if towards_pole { t0 + 0.25 * (1.0 - v) } else { t0 + 0.25 * v };
                let speed = domain.speed(t);
                boundary.push(BoundaryNode {
                    x: domain.position(t),
                    w: 0.25 * wu * jac * speed,
                    t,
                    normal: domain.normal(t),
                    tangent: domain.tangent(t),
                    curvature: domain.curvature(t),
                });
            }
        }
        Self {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            domain,
            spec,
            interior,
            lines,
            boundary,
            line_rule: GaussRule::new(spec.n_line),
        }
    }

    pub fn for_degree(domain: Arc<Domain>, p: usize) -> Self {
        Self::new(domain, QuadratureSpec::for_degree(p))
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.interior.iter().map(|n| n.x)
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.interior.iter().map(|n| n.w * f(n.x)).sum()
    }

    pub fn integrate_boundary(&self, f: impl Fn(&BoundaryNode) -> f64) -> f64 {
        self.boundary.iter().map(|n| n.w * f(n)).sum()
    }

    pub fn area(&self) -> f64 {
        self.interior.iter().map(|n| n.w).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary.iter().map(|n| n.w).sum()
    }
}
