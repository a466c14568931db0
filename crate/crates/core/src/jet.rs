//! Second-order forward-mode jets used to differentiate the analytic
//! boundary parametrizations.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value with first and second derivative with respect to one scalar parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }

    pub const fn variable(v: f64) -> Self {
        Self { v, d1: 1.0, d2: 0.0 }
    }

    /// Chain rule for a scalar function with known f, f', f'' at `self.v`.
    pub fn chain(self, f: f64, fp: f64, fpp: f64) -> Self {
        Self {
            v: f,
            d1: fp * self.d1,
            d2: fpp * self.d1 * self.d1 + fp * self.d2,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    /// `self^q` for `self >= 0`; derivatives at zero are taken as limits.
    pub fn powf(self, q: f64) -> Self {
        let x = self.v;
        let f = x.powf(q);
        let fp = if q == 1.0 { 1.0 } else { q * x.powf(q - 1.0) };
        let fpp = if q == 1.0 || q == 2.0 {
            if q == 2.0 { 2.0 } else { 0.0 }
        } else {
            q * (q - 1.0) * x.powf(q - 2.0)
        };
        self.chain(f, fp, fpp)
    }

    pub fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = o.chain(1.0 / o.v, -1.0 / (o.v * o.v), 2.0 / (o.v * o.v * o.v));
        self * inv
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        Jet { v: self.v - c, ..self }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        Jet { v: self.v * c, d1: self.d1 * c, d2: self.d2 * c }
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, j: Jet) -> Jet {
        -j + self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
        let h = 1e-4;
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        (d1, d2)
    }

    #[test]
    fn composite_matches_finite_differences() {
        let g = |t: Jet| (t.sin() * t.sin() + 2.0).sqrt() / (t.cos() + 3.0) * t.powf(2.5).ln();
        let x = 0.7;
        let j = g(Jet::variable(x));
        let (d1, d2) = fd(|t| g(Jet::constant(t)).v, x);
        assert!((j.d1 - d1).abs() < 1e-7);
        assert!((j.d2 - d2).abs() < 1e-5);
    }
}
