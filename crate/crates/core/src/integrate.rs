//! One-dimensional adaptive quadrature and a divergence-aware engine for
//! integrals with an endpoint singularity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussRule;

/// Adaptive Gauss–Legendre integration by interval bisection.
///
/// Accepts a panel when the 15-point estimate on it agrees with the sum of
/// the estimates on its two halves to `abs_tol + rel_tol * |estimate|`.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let rule = GaussRule::new(15);
    let whole = rule.integrate(a, b, f);
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut total = 0.0;
    let mut evaluations = 0usize;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, f);
        let right = rule.integrate(mid, hi, f);
        evaluations += 2 * rule.len();
        let refined = left + right;
        if !refined.is_finite() {
            return Err(Error::Numerical(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        let width_share = (hi - lo) / (b - a).abs().max(f64::MIN_POSITIVE);
        let tol = (abs_tol * width_share).max(rel_tol * refined.abs());
        if (refined - est).abs() <= tol || depth >= 48 || mid <= lo || mid >= hi {
            total += refined;
            continue;
        }
        if evaluations > 4_000_000 {
            return Err(Error::Numerical(format!("adaptive quadrature on [{a}, {b}] did not converge")));
        }
        stack.push((mid, hi, right, depth + 1));
        stack.push((lo, mid, left, depth + 1));
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailVerdict {
    Converged,
    Diverged,
    Indeterminate,
}

/// Result of summing a dyadic tail towards a singular endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSum {
    pub value: f64,
    pub verdict: TailVerdict,
    /// Asymptotic ratio of consecutive dyadic increments.
    pub ratio: f64,
    pub terms: usize,
}

/// Increment ratios at or above this value count as divergence.
pub const DIVERGENCE_RATIO: f64 = 1.0 - 1e-3;

/// Sum `int_0^{delta0} g(d) dd` as dyadic increments over
/// `[delta0 2^{-k-1}, delta0 2^{-k}]`, deciding convergence from the
/// asymptotic ratio of consecutive increments. A power law `d^p` gives ratio
/// `2^{-(p+1)}`, so integrable singularities have ratio below one and
/// `1/d`-type or stronger singularities have ratio at or above one.
pub fn dyadic_tail(g: &dyn Fn(f64) -> f64, delta0: f64, min_delta: f64) -> TailSum {
    const WINDOW: usize = 8;
    let rule = GaussRule::new(20);
    let mut sum = 0.0;
    let mut incs: Vec<f64> = Vec::new();
    let mut hi = delta0;
    let mut k = 0;
    let finish = |sum: f64, incs: &[f64], verdict: TailVerdict, ratio: f64| TailSum {
        value: sum,
        verdict,
        ratio,
        terms: incs.len(),
    };
    loop {
        let lo = 0.5 * hi;
        let inc = rule.integrate(lo, hi, g);
        if !inc.is_finite() {
            return finish(f64::INFINITY, &incs, TailVerdict::Diverged, f64::INFINITY);
        }
        sum += inc;
        incs.push(inc.abs());
        k += 1;
        hi = lo;
        let n = incs.len();
        if incs.iter().all(|v| *v == 0.0) && n >= 2 * WINDOW {
            return finish(0.0, &incs, TailVerdict::Converged, 0.0);
        }
        let done = hi < min_delta || k >= 2000;
        if n > WINDOW + 1 {
            let ratios: Vec<f64> = (n - WINDOW..n)
                .map(|i| if incs[i - 1] > 0.0 { incs[i] / incs[i - 1] } else { 0.0 })
                .collect();
            let rho = ratios[WINDOW - 1];
            let spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
                - ratios.iter().cloned().fold(f64::MAX, f64::min);
            let stable = spread < 1e-3;
            if incs[n - 1] == 0.0 && incs[n - 2] == 0.0 {
                return finish(sum, &incs, TailVerdict::Converged, 0.0);
            }
            if stable && rho < DIVERGENCE_RATIO {
                let rest = incs[n - 1] * rho / (1.0 - rho);
                if rest <= 1e-15 * sum.abs() || done {
                    return finish(sum + rest.copysign(sum), &incs, TailVerdict::Converged, rho);
                }
            }
            if stable && rho >= DIVERGENCE_RATIO && n > 40 {
                return finish(f64::INFINITY, &incs, TailVerdict::Diverged, rho);
            }
            if done {
                let verdict = if rho >= DIVERGENCE_RATIO {
                    TailVerdict::Diverged
                } else if ratios.iter().all(|r| *r < 0.99) {
                    TailVerdict::Converged
                } else {
                    TailVerdict::Indeterminate
                };
                let value = if verdict == TailVerdict::Diverged { f64::INFINITY } else { sum };
                return finish(value, &incs, verdict, rho);
            }
        } else if done {
            return finish(sum, &incs, TailVerdict::Indeterminate, f64::NAN);
        }
    }
}
