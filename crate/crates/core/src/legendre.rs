//! Tensor-product Legendre expansions on the reference square `[-1, 1]^2`.

/// Values `P_0(x), ..., P_n(x)`.
pub fn legendre_values(n: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if n == 0 {
        return;
    }
    out.push(x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
}

/// Legendre coefficients of the derivative of a Legendre series.
pub fn legendre_derivative(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut b = vec![0.0; n - 1];
    // b_k = (2k+1) * sum_{j > k, j - k odd} a_j, accumulated from the top
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in (0..n - 1).rev() {
        // parity of (k+1): contributions with j ≡ k+1 (mod 2)
        if (k + 1) % 2 == 0 {
            even += a[k + 1];
            b[k] = (2.0 * k as f64 + 1.0) * even;
        } else {
            odd += a[k + 1];
            b[k] = (2.0 * k as f64 + 1.0) * odd;
        }
    }
    b
}

/// Coefficients `c[i][j]` of `sum P_i(xi1) P_j(xi2)`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    n1: usize,
    n2: usize,
    c: Vec<f64>,
}

impl Tensor {
    pub fn zeros(deg1: usize, deg2: usize) -> Self {
        Self { n1: deg1 + 1, n2: deg2 + 1, c: vec![0.0; (deg1 + 1) * (deg2 + 1)] }
    }

    /// Single mode `P_i(xi1) P_j(xi2)`.
    pub fn unit(i: usize, j: usize) -> Self {
        let mut t = Self::zeros(i, j);
        t.set(i, j, 1.0);
        t
    }

    pub fn constant(v: f64) -> Self {
        let mut t = Self::zeros(0, 0);
        t.set(0, 0, v);
        t
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.n1 - 1, self.n2 - 1)
    }

    /// Largest `i + j` with a nonzero coefficient.
    pub fn total_degree(&self) -> usize {
        let mut d = 0;
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                if self.get(i, j) != 0.0 {
                    d = d.max(i + j);
                }
            }
        }
        d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n1 && j < self.n2 {
            self.c[i * self.n2 + j]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.grow(i, j);
        let n2 = self.n2;
        self.c[i * n2 + j] = v;
    }

    fn grow(&mut self, i: usize, j: usize) {
        if i < self.n1 && j < self.n2 {
            return;
        }
        let n1 = self.n1.max(i + 1);
        let n2 = self.n2.max(j + 1);
        let mut c = vec![0.0; n1 * n2];
        for a in 0..self.n1 {
            for b in 0..self.n2 {
                c[a * n2 + b] = self.c[a * self.n2 + b];
            }
        }
        self.n1 = n1;
        self.n2 = n2;
        self.c = c;
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Tensor) {
        if s == 0.0 {
            return;
        }
        self.grow(other.n1 - 1, other.n2 - 1);
        for i in 0..other.n1 {
            for j in 0..other.n2 {
                let v = other.c[i * other.n2 + j];
                if v != 0.0 {
                    self.c[i * self.n2 + j] += s * v;
                }
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Tensor {
        Tensor { n1: self.n1, n2: self.n2, c: self.c.iter().map(|v| v * s).collect() }
    }

    /// Derivative with respect to the reference coordinate `xi1` (axis 0) or `xi2` (axis 1).
    pub fn derivative(&self, axis: usize) -> Tensor {
        match axis {
            0 => {
                let mut out = Tensor::zeros(self.n1.saturating_sub(2), self.n2 - 1);
                for j in 0..self.n2 {
                    let col: Vec<f64> = (0..self.n1).map(|i| self.get(i, j)).collect();
                    for (i, v) in legendre_derivative(&col).into_iter().enumerate() {
                        if v != 0.0 {
                            out.set(i, j, v);
                        }
                    }
                }
                out
            }
            _ => {
                let mut out = Tensor::zeros(self.n1 - 1, self.n2.saturating_sub(2));
                for i in 0..self.n1 {
                    let row = &self.c[i * self.n2..(i + 1) * self.n2];
                    for (j, v) in legendre_derivative(row).into_iter().enumerate() {
                        if v != 0.0 {
                            out.set(i, j, v);
                        }
                    }
                }
                out
            }
        }
    }

    /// Evaluate with precomputed Legendre values along each axis.
    pub fn eval_with(&self, p1: &[f64], p2: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n1 {
            let row = &self.c[i * self.n2..(i + 1) * self.n2];
            let mut inner = 0.0;
            for (cj, pj) in row.iter().zip(p2) {
                inner += cj * pj;
            }
            sum += p1[i] * inner;
        }
        sum
    }

    pub fn eval(&self, xi1: f64, xi2: f64) -> f64 {
        let mut p1 = Vec::new();
        let mut p2 = Vec::new();
        legendre_values(self.n1 - 1, xi1, &mut p1);
        legendre_values(self.n2 - 1, xi2, &mut p2);
        self.eval_with(&p1, &p2)
    }
}
