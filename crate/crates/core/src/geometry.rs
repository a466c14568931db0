//! Convex domains bounded by analytic curves.
//!
//! Every shipped domain is a "Lamé cap": the set
//! `c(|X1|/a) + (X2/b)^2 <= 1` with `X = x - center` and `c` an increasing
//! convex profile with `c(0) = 0`, `c(1) = 1`. A quadratic profile gives the
//! ellipse; `c(s) = s^q` produces boundaries that behave like `|x1|^q` near
//! the two points where the normal is horizontal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Default dead-band for classifying boundary points as singular.
pub const TOL_N: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `c(s) = s^2`.
    Quadratic,
    /// `c(s) = s^q`, `q > 1`.
    Power(f64),
    /// `c(s) = s^3 (1 - ln s)`.
    PowerLog,
}

fn falling(q: f64, k: usize) -> f64 {
    (0..k).map(|i| q - i as f64).product()
}

impl Profile {
    pub fn value(&self, s: f64) -> f64 {
        self.deriv(0, s)
    }

    /// `k`-th derivative of the profile at `s >= 0`.
    pub fn deriv(&self, k: usize, s: f64) -> f64 {
        match *self {
            Profile::Quadratic => match k {
                0 => s * s,
                1 => 2.0 * s,
                2 => 2.0,
                _ => 0.0,
            },
            Profile::Power(q) => {
                let coef = falling(q, k);
                if coef == 0.0 {
                    0.0
                } else {
                    coef * s.powf(q - k as f64)
                }
            }
            Profile::PowerLog => {
                if s == 0.0 {
                    return if k < 3 { 0.0 } else { f64::INFINITY };
                }
                let l = s.ln();
                match k {
                    0 => s * s * s * (1.0 - l),
                    1 => s * s * (2.0 - 3.0 * l),
                    2 => s * (1.0 - 6.0 * l),
                    3 => -5.0 - 6.0 * l,
                    _ => {
                        let m = k - 4;
                        let fact: f64 = (1..=m).map(|i| i as f64).product();
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        -6.0 * sign * fact / s.powi(k as i32 - 3)
                    }
                }
            }
        }
    }

    pub fn jet(&self, s: Jet) -> Jet {
        s.chain(self.deriv(0, s.v), self.deriv(1, s.v), self.deriv(2, s.v))
    }

    /// Solve `c(s) = nu` for `s` in `[0, 1]`.
    pub fn inverse(&self, nu: f64) -> f64 {
        if nu <= 0.0 {
            return 0.0;
        }
        match *self {
            Profile::Quadratic => nu.sqrt(),
            Profile::Power(q) => nu.powf(1.0 / q),
            Profile::PowerLog => {
                // in y = ln s: 3y + ln(1 - y) = ln nu, monotone for y <= 0
                let target = nu.ln();
                let mut y = (target / 3.0).min(0.0);
                for _ in 0..100 {
                    let f = 3.0 * y + (-y).ln_1p() - target;
                    let fp = 3.0 - 1.0 / (1.0 - y);
                    let step = f / fp;
                    y = (y - step).min(0.0);
                    if step.abs() <= 1e-16 * (1.0 + y.abs()) {
                        break;
                    }
                }
                y.exp()
            }
        }
    }

    /// Nominal flatness exponent of the caps.
    pub fn exponent(&self) -> f64 {
        match *self {
            Profile::Quadratic => 2.0,
            Profile::Power(q) => q,
            Profile::PowerLog => 3.0,
        }
    }
}

/// Analytic description of a Lamé cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub center: [f64; 2],
    pub a: f64,
    pub b: f64,
    pub profile: Profile,
}

impl Shape {
    /// `sqrt((1 - c(s)) / (1 - s^2))`-style ratio used by the parametrization.
    fn ratio(&self, s: Jet) -> Jet {
        let p = self.profile;
        if p == Profile::Quadratic {
            return Jet::constant(1.0);
        }
        let e = s - 1.0;
        if e.v.abs() < 1e-5 {
            let (c1, c2, c3) = (p.deriv(1, 1.0), p.deriv(2, 1.0), p.deriv(3, 1.0));
            let num = e * e * (c3 / 6.0) + e * (c2 / 2.0) + c1;
            num / (e + 2.0)
        } else {
            (1.0 - p.jet(s)) / (1.0 - s * s)
        }
    }

    fn position_jet(&self, t: f64) -> (Jet, Jet) {
        let th = Jet::variable(t) * (2.0 * PI);
        let (c, s) = (th.cos(), th.sin());
        let x1 = c * self.a + self.center[0];
        let x2 = s * self.ratio(c.abs()).sqrt() * self.b + self.center[1];
        (x1, x2)
    }

    /// Bubble `1 - c(|X1|/a) - (X2/b)^2`, positive inside.
    pub fn bubble(&self, x: [f64; 2]) -> f64 {
        let s = (x[0] - self.center[0]).abs() / self.a;
        let y = (x[1] - self.center[1]) / self.b;
        1.0 - self.profile.value(s) - y * y
    }

    /// Pure partial derivative `d^i/dx1^i d^j/dx2^j` of the bubble.
    pub fn bubble_deriv(&self, i: usize, j: usize, x: [f64; 2]) -> f64 {
        if i == 0 && j == 0 {
            return self.bubble(x);
        }
        if i > 0 && j > 0 {
            return 0.0;
        }
        if i == 0 {
            let y = x[1] - self.center[1];
            let b2 = self.b * self.b;
            return match j {
                1 => -2.0 * y / b2,
                2 => -2.0 / b2,
                _ => 0.0,
            };
        }
        let d = x[0] - self.center[0];
        let s = d.abs() / self.a;
        let sign = if d < 0.0 && i % 2 == 1 { -1.0 } else { 1.0 };
        -sign * self.profile.deriv(i, s) / self.a.powi(i as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Inflow,
    Outflow,
    Star,
}

/// Classify a boundary point by the sign of the first normal component.
pub fn classify_boundary_point(normal: [f64; 2], tol_n: f64) -> Result<Region> {
    let norm = normal[0].hypot(normal[1]);
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("normal has length {norm}, expected 1")));
    }
    Ok(if normal[0] < -tol_n {
        Region::Inflow
    } else if normal[0] > tol_n {
        Region::Outflow
    } else {
        Region::Star
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pole {
    Lower,
    Upper,
}

/// Horizontal section of the domain at one height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Section {
    pub x2: f64,
    /// Inflow abscissa.
    pub lo: f64,
    /// Outflow abscissa.
    pub hi: f64,
    /// Derivative of the inflow abscissa with respect to `x2`.
    pub dlo: f64,
    /// Derivative of the outflow abscissa with respect to `x2`.
    pub dhi: f64,
}

impl Section {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn beta(&self) -> f64 {
        self.width() * self.dlo.abs()
    }
}

/// Graph of the boundary over `x1` near a singularity point.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalGraph {
    pub pole: Pole,
    pub center: [f64; 2],
    pub half_width: f64,
    shape: Shape,
}

impl LocalGraph {
    /// Offset into the domain of the boundary above/below `center[0] + x1`.
    pub fn eval(&self, x1: f64) -> Result<f64> {
        if !(x1.abs() <= self.half_width) {
            return Err(Error::OutOfDomain(format!(
                "x1 = {x1} outside chart of half-width {}",
                self.half_width
            )));
        }
        let c = self.shape.profile.value(x1.abs() / self.shape.a);
        Ok(self.shape.b * c / (1.0 + (1.0 - c).sqrt()))
    }

    /// Same graph with offsets multiplied by `k` (used to test scale laws).
    pub fn scaled(&self, k: f64) -> ScaledGraph<'_> {
        ScaledGraph { graph: self, k }
    }
}

pub struct ScaledGraph<'a> {
    graph: &'a LocalGraph,
    k: f64,
}

/// Anything that behaves like a boundary chart `x1 -> l(x1)`.
pub trait Chart {
    fn half_width(&self) -> f64;
    fn eval(&self, x1: f64) -> Result<f64>;
}

impl Chart for LocalGraph {
    fn half_width(&self) -> f64 {
        self.half_width
    }
    fn eval(&self, x1: f64) -> Result<f64> {
        LocalGraph::eval(self, x1)
    }
}

impl Chart for ScaledGraph<'_> {
    fn half_width(&self) -> f64 {
        self.graph.half_width
    }
    fn eval(&self, x1: f64) -> Result<f64> {
        Ok(self.k * self.graph.eval(x1)?)
    }
}

/// A convex domain with its two singularity points located.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub name: String,
    pub shape: Shape,
    lower: [f64; 2],
    upper: [f64; 2],
    t_lower: f64,
    t_upper: f64,
    pub tol_n: f64,
}

impl Domain {
    pub fn new(name: impl Into<String>, shape: Shape) -> Result<Self> {
        if !(shape.a > 0.0 && shape.b > 0.0) || !shape.a.is_finite() || !shape.b.is_finite() {
            return Err(Error::InvalidInput("semi-axes must be positive".into()));
        }
        if let Profile::Power(q) = shape.profile {
            if !(q > 1.0 && q.is_finite()) {
                return Err(Error::InvalidInput(format!("cap exponent q = {q} must exceed 1")));
            }
        }
        let mut d = Domain {
            name: name.into(),
            shape,
            lower: [0.0; 2],
            upper: [0.0; 2],
            t_lower: 0.75,
            t_upper: 0.25,
            tol_n: TOL_N,
        };
        let roots = d.locate_singularities()?;
        d.t_lower = roots[0].0;
        d.lower = roots[0].1;
        d.t_upper = roots[1].0;
        d.upper = roots[1].1;
        Ok(d)
    }

    pub fn disk(center: [f64; 2], r: f64) -> Result<Self> {
        Self::new("disk", Shape { center, a: r, b: r, profile: Profile::Quadratic })
    }

    pub fn ellipse(center: [f64; 2], a: f64, b: f64) -> Result<Self> {
        Self::new("ellipse", Shape { center, a, b, profile: Profile::Quadratic })
    }

    /// Cap with `l(x1) ~ |x1|^q` at both singularity points.
    pub fn power_cap(q: f64) -> Result<Self> {
        Self::new(format!("power-{q}"), Shape { center: [0.0; 2], a: 1.0, b: 2.0, profile: Profile::Power(q) })
    }

    /// Cap with `l(x1) ~ |x1|^3 |ln |x1||` at both singularity points.
    pub fn power_log_cap() -> Result<Self> {
        Self::new("power-log", Shape { center: [0.0; 2], a: 1.0, b: 2.0, profile: Profile::PowerLog })
    }

    pub fn translated(&self, d: [f64; 2]) -> Result<Self> {
        let mut shape = self.shape;
        shape.center = [shape.center[0] + d[0], shape.center[1] + d[1]];
        Self::new(self.name.clone(), shape)
    }

    /// Mirror image under `x1 -> -x1`.
    pub fn reflected(&self) -> Result<Self> {
        let mut shape = self.shape;
        shape.center[0] = -shape.center[0];
        Self::new(self.name.clone(), shape)
    }

    // ---- boundary curve, parameter t in [0, 1), counterclockwise ----

    pub fn position(&self, t: f64) -> [f64; 2] {
        let (x, y) = self.shape.position_jet(t);
        [x.v, y.v]
    }

    pub fn derivative(&self, t: f64) -> [f64; 2] {
        let (x, y) = self.shape.position_jet(t);
        [x.d1, y.d1]
    }

    pub fn second_derivative(&self, t: f64) -> [f64; 2] {
        let (x, y) = self.shape.position_jet(t);
        [x.d2, y.d2]
    }

    pub fn is_counterclockwise(&self) -> bool {
        true
    }

    pub fn speed(&self, t: f64) -> f64 {
        let d = self.derivative(t);
        d[0].hypot(d[1])
    }

    /// Outward unit normal.
    pub fn normal(&self, t: f64) -> [f64; 2] {
        let d = self.derivative(t);
        let l = d[0].hypot(d[1]);
        [d[1] / l, -d[0] / l]
    }

    /// Counterclockwise unit tangent, `tau = (-n2, n1)`.
    pub fn tangent(&self, t: f64) -> [f64; 2] {
        let d = self.derivative(t);
        let l = d[0].hypot(d[1]);
        [d[0] / l, d[1] / l]
    }

    /// Signed curvature, positive for a convex counterclockwise curve.
    pub fn curvature(&self, t: f64) -> f64 {
        let (x, y) = self.shape.position_jet(t);
        let l = x.d1.hypot(y.d1);
        (x.d1 * y.d2 - y.d1 * x.d2) / (l * l * l)
    }

    pub fn region_at(&self, t: f64) -> Result<Region> {
        classify_boundary_point(self.normal(t), self.tol_n)
    }

    fn n1_and_slope(&self, t: f64) -> (f64, f64) {
        let (x, y) = self.shape.position_jet(t);
        let l = x.d1.hypot(y.d1);
        let dl = (x.d1 * x.d2 + y.d1 * y.d2) / l;
        (y.d1 / l, (y.d2 * l - y.d1 * dl) / (l * l))
    }

    fn locate_singularities(&self) -> Result<[(f64, [f64; 2]); 2]> {
        const M: usize = 2048;
        let sample = |i: usize| {
            let t = (i as f64 + 0.5) / M as f64;
            (t, self.n1_and_slope(t).0)
        };
        let mut brackets = Vec::new();
        for i in 0..M {
            let (ta, fa) = sample(i);
            let (mut tb, fb) = sample((i + 1) % M);
            if i + 1 == M {
                tb += 1.0;
            }
            if fa == 0.0 || fa.signum() != fb.signum() {
                brackets.push((ta, tb, fa));
            }
        }
        if brackets.len() != 2 {
            return Err(Error::GeometryUnsupported(format!(
                "n1 changes sign {} times along the boundary, expected 2",
                brackets.len()
            )));
        }
        let mut roots = Vec::with_capacity(2);
        for (mut a, mut b, fa) in brackets {
            let sa = fa.signum();
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = self.n1_and_slope(m.rem_euclid(1.0)).0;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            let mut t = 0.5 * (a + b);
            // Newton polish, kept inside the bracket; skipped where n1 is flat
            for _ in 0..3 {
                let (f, fp) = self.n1_and_slope(t.rem_euclid(1.0));
                if f == 0.0 || fp.abs() < 1e-8 {
                    break;
                }
                let next = t - f / fp;
                if next < a || next > b {
                    break;
                }
                if self.n1_and_slope(next.rem_euclid(1.0)).0.abs() >= f.abs() {
                    break;
                }
                t = next;
            }
            let t = t.rem_euclid(1.0);
            roots.push((t, self.position(t)));
        }
        roots.sort_by(|p, q| p.1[1].total_cmp(&q.1[1]));
        Ok([roots[0], roots[1]])
    }

    // ---- singularity points and sections ----

    /// `(x_*, x^*)`, ordered by `x2`.
    pub fn singularity_points(&self) -> ([f64; 2], [f64; 2]) {
        (self.lower, self.upper)
    }

    /// Boundary parameters of `(x_*, x^*)`.
    pub fn singularity_parameters(&self) -> (f64, f64) {
        (self.t_lower, self.t_upper)
    }

    pub fn pole_point(&self, pole: Pole) -> [f64; 2] {
        let c = self.shape.center;
        match pole {
            Pole::Lower => [c[0], c[1] - self.shape.b],
            Pole::Upper => [c[0], c[1] + self.shape.b],
        }
    }

    /// `(x2*, x2^*)`.
    pub fn x2_range(&self) -> (f64, f64) {
        let c = self.shape.center[1];
        (c - self.shape.b, c + self.shape.b)
    }

    /// Section at height `pole.x2 -/+ delta`, accurate for tiny `delta`.
    pub fn section_near(&self, pole: Pole, delta: f64) -> Section {
        let sh = &self.shape;
        let b = sh.b;
        let d = delta.clamp(0.0, 2.0 * b);
        let r = d / b;
        let nu = r * (2.0 - r);
        let s = sh.profile.inverse(nu);
        // d nu / d x2
        let dnu = match pole {
            Pole::Lower => 2.0 / b * (1.0 - r),
            Pole::Upper => -2.0 / b * (1.0 - r),
        };
        let cp = sh.profile.deriv(1, s);
        let ds = if cp == 0.0 {
            if dnu == 0.0 {
                0.0
            } else {
                dnu.signum() * f64::INFINITY
            }
        } else {
            dnu / cp
        };
        let (lo_pole, hi_pole) = self.x2_range();
        let x2 = match pole {
            Pole::Lower => lo_pole + d,
            Pole::Upper => hi_pole - d,
        };
        let c1 = sh.center[0];
        Section { x2, lo: c1 - sh.a * s, hi: c1 + sh.a * s, dlo: -sh.a * ds, dhi: sh.a * ds }
    }

    pub fn section(&self, x2: f64) -> Result<Section> {
        let (lo, hi) = self.x2_range();
        if !(x2 >= lo && x2 <= hi) {
            return Err(Error::OutOfDomain(format!("x2 = {x2} outside [{lo}, {hi}]")));
        }
        let (dl, du) = (x2 - lo, hi - x2);
        Ok(if dl <= du {
            self.section_near(Pole::Lower, dl)
        } else {
            self.section_near(Pole::Upper, du)
        })
    }

    pub fn inflow_abscissa(&self, x2: f64) -> Result<f64> {
        Ok(self.section(x2)?.lo)
    }

    pub fn outflow_abscissa(&self, x2: f64) -> Result<f64> {
        Ok(self.section(x2)?.hi)
    }

    /// Derivative of the inflow abscissa; infinite at the singularity points.
    pub fn inflow_slope(&self, x2: f64) -> Result<f64> {
        Ok(self.section(x2)?.dlo)
    }

    /// `(outflow - inflow) * |inflow'|`, defined strictly between the singularity points.
    pub fn beta(&self, x2: f64) -> Result<f64> {
        let (lo, hi) = self.x2_range();
        if !(x2 > lo && x2 < hi) {
            return Err(Error::OutOfDomain(format!(
                "beta requires x2 strictly inside ({lo}, {hi}), got {x2}"
            )));
        }
        Ok(self.section(x2)?.beta())
    }

    pub fn local_graph(&self, pole: Pole) -> LocalGraph {
        LocalGraph { pole, center: self.pole_point(pole), half_width: 0.5 * self.shape.a, shape: self.shape }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.shape.bubble(x) >= 0.0
    }

    /// Largest distance between two points of the closure.
    pub fn diameter(&self) -> f64 {
        // centrally symmetric: twice the largest distance from the center
        let c = self.shape.center;
        let dist = |t: f64| {
            let p = self.position(t);
            (p[0] - c[0]).hypot(p[1] - c[1])
        };
        const M: usize = 4096;
        let (mut best_t, mut best) = (0.0, 0.0);
        for i in 0..M {
            let t = i as f64 / M as f64;
            let v = dist(t);
            if v > best {
                best = v;
                best_t = t;
            }
        }
        // golden-section refinement around the best sample
        let (mut a, mut b) = (best_t - 1.0 / M as f64, best_t + 1.0 / M as f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if dist(x1) > dist(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        2.0 * best.max(dist(0.5 * (a + b)))
    }
}
