//! Scalar and vector fields on a domain, their exact derivatives, norms and
//! the inflow antiderivative along horizontal lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::gauss::GaussRule;
use crate::geometry::{Domain, Shape};
use crate::legendre::{legendre_values, Tensor};
use crate::quadrature::Quadrature;

/// Multiplier of a Legendre tensor inside a [`Spectral`] field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weight {
    One,
    /// Pure partial derivative `d^i/dx1^i d^j/dx2^j` of the domain bubble.
    Bubble(u8, u8),
}

impl Weight {
    fn is_identically_zero(self) -> bool {
        match self {
            Weight::One => false,
            Weight::Bubble(i, j) => (i > 0 && j > 0) || j > 2,
        }
    }
}

/// `sum_w W_w(x) T_w(xi)` with `xi = ((x1 - c1)/a, (x2 - c2)/b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectral {
    pub shape: Shape,
    pub terms: BTreeMap<Weight, Tensor>,
}

impl Spectral {
    pub fn new(shape: Shape) -> Self {
        Self { shape, terms: BTreeMap::new() }
    }

    pub fn single(shape: Shape, weight: Weight, t: Tensor) -> Self {
        let mut s = Self::new(shape);
        s.push(1.0, weight, &t);
        s
    }

    pub fn push(&mut self, k: f64, weight: Weight, t: &Tensor) {
        if k == 0.0 || t.is_zero() || weight.is_identically_zero() {
            return;
        }
        self.terms.entry(weight).or_insert_with(|| Tensor::zeros(0, 0)).axpy(k, t);
    }

    pub fn axpy(&mut self, k: f64, other: &Spectral) {
        for (w, t) in &other.terms {
            self.push(k, *w, t);
        }
    }

    pub fn reference(&self, x: [f64; 2]) -> [f64; 2] {
        [(x[0] - self.shape.center[0]) / self.shape.a, (x[1] - self.shape.center[1]) / self.shape.b]
    }

    /// Largest tensor degree along each axis.
    pub fn degrees(&self) -> (usize, usize) {
        self.terms.values().fold((0, 0), |acc, t| {
            let d = t.degrees();
            (acc.0.max(d.0), acc.1.max(d.1))
        })
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let (n1, n2) = self.degrees();
        let xi = self.reference(x);
        let mut p1 = Vec::with_capacity(n1 + 1);
        let mut p2 = Vec::with_capacity(n2 + 1);
        legendre_values(n1, xi[0], &mut p1);
        legendre_values(n2, xi[1], &mut p2);
        self.terms
            .iter()
            .map(|(w, t)| {
                let m = match w {
                    Weight::One => 1.0,
                    Weight::Bubble(i, j) => self.shape.bubble_deriv(*i as usize, *j as usize, x),
                };
                if m == 0.0 {
                    0.0
                } else {
                    m * t.eval_with(&p1, &p2)
                }
            })
            .sum()
    }

    pub fn diff(&self, axis: usize) -> Spectral {
        let scale = if axis == 0 { 1.0 / self.shape.a } else { 1.0 / self.shape.b };
        let mut out = Spectral::new(self.shape);
        for (w, t) in &self.terms {
            out.push(scale, *w, &t.derivative(axis));
            if let Weight::Bubble(i, j) = *w {
                let next = if axis == 0 { Weight::Bubble(i + 1, j) } else { Weight::Bubble(i, j + 1) };
                out.push(1.0, next, t);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|t| t.is_zero())
    }
}

/// Values tied to the interior nodes of one quadrature; no derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Nodal {
    pub quad_id: u64,
    pub values: Arc<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub enum ScalarField {
    Spectral(Spectral),
    Expr(Arc<Expr>),
    Nodal(Nodal),
    /// Linear combination; the empty sum is the zero field.
    Sum(Vec<(f64, ScalarField)>),
    Product(Box<ScalarField>, Box<ScalarField>),
    /// `int_{lo(x2)}^{x1} e^{rate (s - x1)} f(s, x2) ds`.
    Inflow { domain: Arc<Domain>, rule: Arc<GaussRule>, rate: f64, f: Box<ScalarField> },
    /// `-e^{rate lo(x2)} lo'(x2) f(lo(x2), x2)`, a function of `x2` alone.
    InflowTrace { domain: Arc<Domain>, rate: f64, f: Box<ScalarField> },
    /// `e^{rate x1} f`.
    ExpX1 { rate: f64, f: Box<ScalarField> },
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::Sum(Vec::new())
    }

    pub fn constant(v: f64) -> Self {
        if v == 0.0 {
            Self::zero()
        } else {
            ScalarField::Expr(Arc::new(Expr::Num(v)))
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(ScalarField::Expr(Expr::parse(text)?))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScalarField::Sum(v) => v.iter().all(|(k, f)| *k == 0.0 || f.is_zero()),
            ScalarField::Spectral(s) => s.is_zero(),
            ScalarField::Expr(e) => e.is_zero(),
            ScalarField::Product(a, b) => a.is_zero() || b.is_zero(),
            ScalarField::Inflow { f, .. } | ScalarField::InflowTrace { f, .. } | ScalarField::ExpX1 { f, .. } => {
                f.is_zero()
            }
            ScalarField::Nodal(n) => n.values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> Result<f64> {
        match self {
            ScalarField::Spectral(s) => Ok(s.eval(x)),
            ScalarField::Expr(e) => Ok(e.eval(x)),
            ScalarField::Nodal(_) => {
                Err(Error::Field("value-only field cannot be evaluated away from its nodes".into()))
            }
            ScalarField::Sum(terms) => {
                let mut acc = 0.0;
                for (k, f) in terms {
                    acc += k * f.eval(x)?;
                }
                Ok(acc)
            }
            ScalarField::Product(a, b) => Ok(a.eval(x)? * b.eval(x)?),
            ScalarField::Inflow { domain, rule, rate, f } => {
                let (lo, hi) = domain.x2_range();
                if !(x[1] > lo && x[1] < hi) {
                    return Ok(0.0);
                }
                let start = domain.section(x[1])?.lo;
                let mut acc = 0.0;
                for (s, w) in rule.mapped(start, x[0]) {
                    let g = f.eval([s, x[1]])?;
                    acc += if *rate == 0.0 { w * g } else { w * (rate * (s - x[0])).exp() * g };
                }
                Ok(acc)
            }
            ScalarField::InflowTrace { domain, rate, f } => {
                let (lo, hi) = domain.x2_range();
                if !(x[1] > lo && x[1] < hi) {
                    return Ok(0.0);
                }
                let sec = domain.section(x[1])?;
                Ok(-(rate * sec.lo).exp() * sec.dlo * f.eval([sec.lo, x[1]])?)
            }
            ScalarField::ExpX1 { rate, f } => Ok((rate * x[0]).exp() * f.eval(x)?),
        }
    }

    /// Values at the interior nodes of `quad`, in node order.
    pub fn values(&self, quad: &Quadrature) -> Result<Vec<f64>> {
        if let ScalarField::Nodal(n) = self {
            if n.quad_id != quad.id {
                return Err(Error::Field("nodal field belongs to a different quadrature".into()));
            }
            return Ok(n.values.as_ref().clone());
        }
        quad.interior.par_iter().map(|n| self.eval(n.x)).collect()
    }

    /// Values at the boundary nodes of `quad`.
    pub fn boundary_values(&self, quad: &Quadrature) -> Result<Vec<f64>> {
        quad.boundary.par_iter().map(|n| self.eval(n.x)).collect()
    }

    /// Freeze the values at the nodes of `quad`.
    pub fn to_nodal(&self, quad: &Quadrature) -> Result<ScalarField> {
        Ok(ScalarField::Nodal(Nodal { quad_id: quad.id, values: Arc::new(self.values(quad)?) }))
    }

    /// Exact partial derivative along `axis` (0 for `x1`, 1 for `x2`).
    pub fn diff(&self, axis: usize) -> Result<ScalarField> {
        Ok(match self {
            ScalarField::Spectral(s) => ScalarField::Spectral(s.diff(axis)),
            ScalarField::Expr(e) => ScalarField::Expr(e.diff(axis)),
            ScalarField::Nodal(_) => {
                return Err(Error::Field("value-only field has no derivatives".into()));
            }
            ScalarField::Sum(terms) => {
                let mut out = Vec::with_capacity(terms.len());
                for (k, f) in terms {
                    out.push((*k, f.diff(axis)?));
                }
                lin(out)
            }
            ScalarField::Product(a, b) => lin(vec![
                (1.0, product(a.diff(axis)?, (**b).clone())),
                (1.0, product((**a).clone(), b.diff(axis)?)),
            ]),
            ScalarField::Inflow { domain, rule, rate, f } => {
                if axis == 0 {
                    lin(vec![(1.0, (**f).clone()), (-rate, self.clone())])
                } else {
                    let trace = ScalarField::InflowTrace { domain: domain.clone(), rate: *rate, f: f.clone() };
                    let inner = ScalarField::Inflow {
                        domain: domain.clone(),
                        rule: rule.clone(),
                        rate: *rate,
                        f: Box::new(f.diff(1)?),
                    };
                    lin(vec![(1.0, exp_x1(-rate, trace)), (1.0, inner)])
                }
            }
            ScalarField::InflowTrace { .. } => {
                if axis == 0 {
                    ScalarField::zero()
                } else {
                    return Err(Error::Field(
                        "x2-derivative of an inflow boundary trace is not available".into(),
                    ));
                }
            }
            ScalarField::ExpX1 { rate, f } => {
                if axis == 0 {
                    lin(vec![(*rate, self.clone()), (1.0, exp_x1(*rate, f.diff(0)?))])
                } else {
                    exp_x1(*rate, f.diff(1)?)
                }
            }
        })
    }

    /// Total tensor degree of polynomial parts, used to size quadratures.
    pub fn degree(&self) -> usize {
        match self {
            ScalarField::Spectral(s) => {
                let (a, b) = s.degrees();
                a + b + if s.terms.keys().any(|w| *w != Weight::One) { 2 } else { 0 }
            }
            ScalarField::Sum(t) => t.iter().map(|(_, f)| f.degree()).max().unwrap_or(0),
            ScalarField::Product(a, b) => a.degree() + b.degree(),
            ScalarField::Inflow { f, .. } | ScalarField::InflowTrace { f, .. } | ScalarField::ExpX1 { f, .. } => {
                f.degree() + 1
            }
            _ => 0,
        }
    }
}

impl From<Spectral> for ScalarField {
    fn from(s: Spectral) -> Self {
        ScalarField::Spectral(s)
    }
}

fn flatten_into(k: f64, f: ScalarField, out: &mut Vec<(f64, ScalarField)>) {
    if k == 0.0 {
        return;
    }
    match f {
        ScalarField::Sum(terms) => {
            for (c, g) in terms {
                flatten_into(k * c, g, out);
            }
        }
        ScalarField::Spectral(s) if s.is_zero() => {}
        other => out.push((k, other)),
    }
}

/// Linear combination, flattening nested sums and merging spectral parts
/// that share a shape.
pub fn lin(terms: Vec<(f64, ScalarField)>) -> ScalarField {
    let mut flat = Vec::new();
    for (k, f) in terms {
        flatten_into(k, f, &mut flat);
    }
    let mut merged: Vec<(f64, ScalarField)> = Vec::new();
    let mut spectral: Vec<Spectral> = Vec::new();
    for (k, f) in flat {
        match f {
            ScalarField::Spectral(s) => {
                if let Some(acc) = spectral.iter_mut().find(|a| a.shape == s.shape) {
                    acc.axpy(k, &s);
                } else {
                    let mut acc = Spectral::new(s.shape);
                    acc.axpy(k, &s);
                    spectral.push(acc);
                }
            }
            other => merged.push((k, other)),
        }
    }
    for s in spectral {
        if !s.is_zero() {
            merged.insert(0, (1.0, ScalarField::Spectral(s)));
        }
    }
    if merged.len() == 1 && merged[0].0 == 1.0 {
        return merged.pop().map(|p| p.1).expect("one term");
    }
    ScalarField::Sum(merged)
}

pub fn product(a: ScalarField, b: ScalarField) -> ScalarField {
    if a.is_zero() || b.is_zero() {
        return ScalarField::zero();
    }
    ScalarField::Product(Box::new(a), Box::new(b))
}

pub fn exp_x1(rate: f64, f: ScalarField) -> ScalarField {
    if f.is_zero() {
        return ScalarField::zero();
    }
    if rate == 0.0 {
        return f;
    }
    ScalarField::ExpX1 { rate, f: Box::new(f) }
}

/// `F(x1, x2) = int_{lo(x2)}^{x1} f(s, x2) ds`, vanishing on the inflow boundary.
pub fn inflow_antiderivative(quad: &Quadrature, f: ScalarField) -> ScalarField {
    weighted_inflow(quad, 0.0, f)
}

/// `int_{lo(x2)}^{x1} e^{rate (s - x1)} f(s, x2) ds`.
pub fn weighted_inflow(quad: &Quadrature, rate: f64, f: ScalarField) -> ScalarField {
    if f.is_zero() {
        return ScalarField::zero();
    }
    ScalarField::Inflow {
        domain: quad.domain.clone(),
        rule: Arc::new(quad.line_rule.clone()),
        rate,
        f: Box::new(f),
    }
}

#[derive(Clone, Debug)]
pub struct VectorField {
    pub c: [ScalarField; 2],
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Self {
        Self { c: [u1, u2] }
    }

    pub fn zero() -> Self {
        Self::new(ScalarField::zero(), ScalarField::zero())
    }

    pub fn parse(u1: &str, u2: &str) -> Result<Self> {
        Ok(Self::new(ScalarField::parse(u1)?, ScalarField::parse(u2)?))
    }

    pub fn eval(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        Ok([self.c[0].eval(x)?, self.c[1].eval(x)?])
    }

    pub fn is_zero(&self) -> bool {
        self.c[0].is_zero() && self.c[1].is_zero()
    }

    pub fn diff(&self, axis: usize) -> Result<VectorField> {
        Ok(VectorField::new(self.c[0].diff(axis)?, self.c[1].diff(axis)?))
    }

    pub fn degree(&self) -> usize {
        self.c[0].degree().max(self.c[1].degree())
    }
}

pub fn vlin(terms: Vec<(f64, VectorField)>) -> VectorField {
    let mut a = Vec::with_capacity(terms.len());
    let mut b = Vec::with_capacity(terms.len());
    for (k, v) in terms {
        let [u1, u2] = v.c;
        a.push((k, u1));
        b.push((k, u2));
    }
    VectorField::new(lin(a), lin(b))
}

pub fn grad(f: &ScalarField) -> Result<VectorField> {
    Ok(VectorField::new(f.diff(0)?, f.diff(1)?))
}

/// `(d/dx2, -d/dx1) f`.
pub fn perp_grad(f: &ScalarField) -> Result<VectorField> {
    Ok(VectorField::new(f.diff(1)?, lin(vec![(-1.0, f.diff(0)?)])))
}

pub fn div(v: &VectorField) -> Result<ScalarField> {
    Ok(lin(vec![(1.0, v.c[0].diff(0)?), (1.0, v.c[1].diff(1)?)]))
}

/// `u2_x1 - u1_x2`.
pub fn rot(v: &VectorField) -> Result<ScalarField> {
    Ok(lin(vec![(1.0, v.c[1].diff(0)?), (-1.0, v.c[0].diff(1)?)]))
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    Ok(lin(vec![(1.0, f.diff(0)?.diff(0)?), (1.0, f.diff(1)?.diff(1)?)]))
}

fn sum_sq(quad: &Quadrature, values: &[f64]) -> f64 {
    quad.interior.iter().zip(values).map(|(n, v)| n.w * v * v).sum()
}

pub fn l2_norm(f: &ScalarField, quad: &Quadrature) -> Result<f64> {
    Ok(sum_sq(quad, &f.values(quad)?).sqrt())
}

/// `||f||_{H^1}` including the `L^2` part.
pub fn h1_norm(f: &ScalarField, quad: &Quadrature) -> Result<f64> {
    let a = sum_sq(quad, &f.values(quad)?);
    let b = sum_sq(quad, &f.diff(0)?.values(quad)?);
    let c = sum_sq(quad, &f.diff(1)?.values(quad)?);
    Ok((a + b + c).sqrt())
}

pub fn boundary_l2(f: &ScalarField, quad: &Quadrature) -> Result<f64> {
    let v = f.boundary_values(quad)?;
    Ok(quad.boundary.iter().zip(&v).map(|(n, v)| n.w * v * v).sum::<f64>().sqrt())
}

/// `||w|| + ||w_x1||`.
pub fn w_norm(f: &ScalarField, quad: &Quadrature) -> Result<f64> {
    Ok(l2_norm(f, quad)? + l2_norm(&f.diff(0)?, quad)?)
}

pub fn vector_l2(v: &VectorField, quad: &Quadrature) -> Result<f64> {
    Ok((l2_norm(&v.c[0], quad)?.powi(2) + l2_norm(&v.c[1], quad)?.powi(2)).sqrt())
}

pub fn vector_h1(v: &VectorField, quad: &Quadrature) -> Result<f64> {
    Ok((h1_norm(&v.c[0], quad)?.powi(2) + h1_norm(&v.c[1], quad)?.powi(2)).sqrt())
}

/// Boundary values of `v . n` and `v . tau`.
pub fn boundary_traces(v: &VectorField, quad: &Quadrature) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = v.c[0].boundary_values(quad)?;
    let b = v.c[1].boundary_values(quad)?;
    let mut vn = Vec::with_capacity(a.len());
    let mut vt = Vec::with_capacity(a.len());
    for (node, (p, q)) in quad.boundary.iter().zip(a.iter().zip(&b)) {
        vn.push(p * node.normal[0] + q * node.normal[1]);
        vt.push(p * node.tangent[0] + q * node.tangent[1]);
    }
    Ok((vn, vt))
}

/// `||v . n||_{L^2(boundary)}`.
pub fn normal_trace_norm(v: &VectorField, quad: &Quadrature) -> Result<f64> {
    let (vn, _) = boundary_traces(v, quad)?;
    Ok(quad.boundary.iter().zip(&vn).map(|(n, x)| n.w * x * x).sum::<f64>().sqrt())
}

/// Decimal rendering with 17 significant digits.
pub fn format_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (16 - mag).max(0) as usize;
    let mut s = String::new();
    write!(s, "{v:.decimals$}").expect("write to string");
    s
}

pub fn write_scalar_csv(out: &mut dyn Write, quad: &Quadrature, f: &ScalarField) -> io::Result<()> {
    let vals = f.values(quad).map_err(|e| io::Error::other(e.to_string()))?;
    writeln!(out, "x1,x2,value")?;
    for (n, v) in quad.interior.iter().zip(&vals) {
        writeln!(out, "{},{},{}", format_decimal(n.x[0]), format_decimal(n.x[1]), format_decimal(*v))?;
    }
    Ok(())
}

pub fn write_vector_csv(out: &mut dyn Write, quad: &Quadrature, v: &VectorField) -> io::Result<()> {
    let to_io = |e: Error| io::Error::other(e.to_string());
    let a = v.c[0].values(quad).map_err(to_io)?;
    let b = v.c[1].values(quad).map_err(to_io)?;
    writeln!(out, "x1,x2,v1,v2")?;
    for (n, (p, q)) in quad.interior.iter().zip(a.iter().zip(&b)) {
        writeln!(
            out,
            "{},{},{},{}",
            format_decimal(n.x[0]),
            format_decimal(n.x[1]),
            format_decimal(*p),
            format_decimal(*q)
        )?;
    }
    Ok(())
}
