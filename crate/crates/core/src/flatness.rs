//! Boundary flatness at the singularity points and the admissibility verdict
//! for the density-regularity argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Chart, Domain, Pole, Section};
use crate::integrate::{adaptive, dyadic_tail, TailSum, TailVerdict};

/// Ratios above this are taken to grow without bound.
pub const UPPER_CAP: f64 = 1e8;
/// Ratios below this are taken to vanish.
pub const LOWER_CAP: f64 = 1e-8;
/// Exponents scanned for `g_q = +inf`.
pub const Q_GRID: [f64; 5] = [2.0, 2.25, 2.5, 2.75, 2.9];
/// Exponent at which divergence is probed for inadmissible boundaries.
pub const PROBE_EPS: f64 = 0.5;
/// Exponents reported in the integrability table.
pub const EPS_GRID: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitKind {
    Zero,
    Finite,
    Infinite,
    Indeterminate,
}

/// Estimate of `lim l(x1)/|x1|^q` as `x1 -> 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GLimit {
    pub q: f64,
    pub kind: LimitKind,
    /// Limit value for `Finite`; last sampled ratio otherwise.
    pub value: f64,
    /// Tail of `log2(r_{k+1}/r_k)`: zero for a finite limit, the power gap otherwise.
    pub tail_slope: f64,
    /// Whether an unbounded ratio grows slower than any power (log-type).
    pub sub_power: bool,
    pub samples: usize,
}

impl GLimit {
    /// Estimated flatness exponent `q - slope`.
    pub fn q_hat(&self) -> f64 {
        self.q - self.tail_slope
    }

    /// `Zero` and `Finite` both count as finite.
    pub fn is_finite(&self) -> bool {
        matches!(self.kind, LimitKind::Zero | LimitKind::Finite)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct SideLimit {
    kind: LimitKind,
    value: f64,
    slope: f64,
    sub_power: bool,
    samples: usize,
}

fn one_side(chart: &dyn Chart, q: f64, sign: f64) -> Result<SideLimit> {
    let hw = chart.half_width();
    // log2 of l(x)/x^q; x^q alone underflows long before l does
    let mut logs = Vec::new();
    let mut x = hw / 16.0;
    for _ in 4..1200 {
        let l = chart.eval(sign * x)?;
        if !(l > 1e-290) || x < 1e-300 {
            break;
        }
        logs.push(l.log2() - q * x.log2());
        x *= 0.5;
    }
    let n = logs.len();
    if n < 24 {
        return Ok(SideLimit { kind: LimitKind::Indeterminate, value: f64::NAN, slope: f64::NAN, sub_power: false, samples: n });
    }
    let slopes: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &slopes[slopes.len() - 16..];
    let last = logs[n - 1].exp2();
    let slope = tail[tail.len() - 1];
    let mk = |kind, value, sub_power| SideLimit { kind, value, slope, sub_power, samples: n };

    let monotone_up = slopes[slopes.len() - 9..].iter().all(|d| *d > 0.0);
    let monotone_down = slopes[slopes.len() - 9..].iter().all(|d| *d < 0.0);
    // growth slowing down like 1/k rather than settling at a power gap
    let shrinking = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let sub_power = shrinking && tail[0] > 0.0 && tail[tail.len() - 1] < 0.8 * slopes[slopes.len() / 2];

    if tail.iter().all(|d| d.abs() < 1e-12) {
        // converged to rounding level; Aitken on the last three samples
        let (a, b, c) = (logs[n - 3].exp2(), logs[n - 2].exp2(), last);
        let den = c - 2.0 * b + a;
        let value = if den.abs() > 1e-300 && ((c - b) * (c - b) / den).abs() < 1e-10 * c.abs() {
            c - (c - b) * (c - b) / den
        } else {
            c
        };
        return Ok(SideLimit { slope: 0.0, ..mk(LimitKind::Finite, value, false) });
    }
    if last > UPPER_CAP && monotone_up {
        return Ok(mk(LimitKind::Infinite, last, sub_power));
    }
    if last < LOWER_CAP && monotone_down {
        return Ok(mk(LimitKind::Zero, last, false));
    }
    if tail.iter().all(|d| *d > 0.0) {
        return Ok(mk(LimitKind::Infinite, last, sub_power));
    }
    if tail.iter().all(|d| *d < 0.0) {
        return Ok(mk(LimitKind::Zero, last, false));
    }
    Ok(mk(LimitKind::Indeterminate, last, false))
}

/// Limit of `l(x1)/|x1|^q` sampled on `x1 = 2^{-k} * halfwidth`, both sides.
pub fn g_limit(chart: &dyn Chart, q: f64) -> Result<GLimit> {
    if !(q > 1.0 && q <= 4.0) {
        return Err(Error::InvalidParameter(format!("exponent q = {q} outside (1, 4]")));
    }
    let r = one_side(chart, q, 1.0)?;
    let l = one_side(chart, q, -1.0)?;
    let samples = r.samples.min(l.samples);
    let slope = if r.slope.is_nan() || l.slope.is_nan() { f64::NAN } else { 0.5 * (r.slope + l.slope) };
    let (kind, value) = match (r.kind, l.kind) {
        (LimitKind::Finite, LimitKind::Finite) => {
            if (r.value - l.value).abs() <= 1e-6 * r.value.abs().max(l.value.abs()) {
                (LimitKind::Finite, 0.5 * (r.value + l.value))
            } else {
                (LimitKind::Indeterminate, f64::NAN)
            }
        }
        (a, b) if a == b => (a, 0.5 * (r.value + l.value)),
        _ => (LimitKind::Indeterminate, f64::NAN),
    };
    Ok(GLimit { q, kind, value, tail_slope: slope, sub_power: r.sub_power && l.sub_power, samples })
}

/// Outcome of an integral over `(x2*, x2^*)` with possible blow-up at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularIntegral {
    pub value: f64,
    pub diverged: bool,
    pub verdict: TailVerdict,
    pub lower: TailSum,
    pub upper: TailSum,
}

/// Integrate `g(section(x2))` over the open range of `x2`, treating both
/// singularity points as possibly singular endpoints.
pub fn singular_line_integral(domain: &Domain, g: &dyn Fn(&Section) -> f64) -> Result<SingularIntegral> {
    let (lo, hi) = domain.x2_range();
    let d0 = (hi - lo) / 8.0;
    let mid = |x2: f64| domain.section(x2).map(|s| g(&s)).unwrap_or(f64::NAN);
    let bulk = adaptive(&mid, lo + d0, hi - d0, 1e-13, 1e-12)?;
    let lower = dyadic_tail(&|d| g(&domain.section_near(Pole::Lower, d)), d0, 1e-200);
    let upper = dyadic_tail(&|d| g(&domain.section_near(Pole::Upper, d)), d0, 1e-200);
    let verdict = match (lower.verdict, upper.verdict) {
        (TailVerdict::Diverged, _) | (_, TailVerdict::Diverged) => TailVerdict::Diverged,
        (TailVerdict::Converged, TailVerdict::Converged) => TailVerdict::Converged,
        _ => TailVerdict::Indeterminate,
    };
    let value = match verdict {
        TailVerdict::Diverged => f64::INFINITY,
        _ => bulk + lower.value + upper.value,
    };
    Ok(SingularIntegral { value, diverged: verdict == TailVerdict::Diverged, verdict, lower, upper })
}

pub fn beta(domain: &Domain, x2: f64) -> Result<f64> {
    domain.beta(x2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct War1 {
    pub eps: f64,
    pub integral: SingularIntegral,
}

/// `int beta^{1+eps} |lo'| dx2` over the open range of `x2`.
pub fn war1_integral(domain: &Domain, eps: f64) -> Result<War1> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be nonnegative")));
    }
    let g = |s: &Section| {
        let b = s.beta();
        if b == 0.0 {
            0.0
        } else {
            b.powf(1.0 + eps) * s.dlo.abs()
        }
    };
    Ok(War1 { eps, integral: singular_line_integral(domain, &g)? })
}

/// Whether `|x|^q` passes the `H^{1/2}` double-integral test near the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevCheck {
    pub q: f64,
    pub member: bool,
    pub value: f64,
    pub verdict: TailVerdict,
    /// Set at `q = 2`, where the integrand vanishes identically.
    pub edge: bool,
}

/// `int_0^1 int_0^1 |(x+h)^r - x^r|^2 / h^2 dh dx` with `r = q - 2`.
pub fn sobolev_half_check(q: f64) -> Result<SobolevCheck> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q = {q} must be positive")));
    }
    let r = q - 2.0;
    let edge = (q - 2.0).abs() < 1e-12;
    let rule = crate::gauss::GaussRule::new(20);
    let inner = |x: f64| -> f64 {
        let xr = x.powf(r);
        let f = |h: f64| {
            let d = xr * (r * (h / x).ln_1p()).exp_m1();
            d * d / (h * h)
        };
        let mut acc = rule.integrate(0.0, x.min(1.0), f);
        let mut a = x;
        while a < 1.0 {
            let b = (2.0 * a).min(1.0);
            acc += rule.integrate(a, b, f);
            a = b;
        }
        acc
    };
    let tail = dyadic_tail(&inner, 1.0, 1e-60);
    let member = tail.verdict == TailVerdict::Converged;
    Ok(SobolevCheck { q, member, value: tail.value, verdict: tail.verdict, edge })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Admissible,
    Inadmissible,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub pole: Pole,
    pub point: [f64; 2],
    pub g_grid: Vec<GLimit>,
    pub g3: GLimit,
    /// Estimated critical exponent.
    pub q_hat: f64,
    /// `(delta, h)` with `h = delta^{1/3} / |lo(x2) - x1*|` at `x2` offset `delta`.
    pub h_samples: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub domain: String,
    pub verdict: Verdict,
    pub reason: String,
    /// `(q, eps)` certifying admissibility.
    pub witness: Option<[f64; 2]>,
    pub poles: Vec<PoleRecord>,
    pub war1: Vec<War1>,
    /// Integral check backing the verdict, if one was run.
    pub war1_check: Option<War1>,
    pub sobolev: SobolevCheck,
}

/// Midpoint of the admissible `eps` interval for exponent `q`, clamped to `(0, 2]`.
pub fn witness_eps(q: f64) -> f64 {
    if q <= 2.0 {
        return 2.0;
    }
    (0.5 * (3.0 - q) / (q - 2.0)).clamp(1e-6, 2.0)
}

fn pole_record(domain: &Domain, pole: Pole) -> Result<PoleRecord> {
    let graph = domain.local_graph(pole);
    let g_grid = Q_GRID.iter().map(|&q| g_limit(&graph, q)).collect::<Result<Vec<_>>>()?;
    let g3 = g_limit(&graph, 3.0)?;
    let x1s = domain.pole_point(pole)[0];
    let h_samples = (4..=40)
        .step_by(4)
        .map(|k| {
            let d = 2f64.powi(-k) * (domain.x2_range().1 - domain.x2_range().0);
            let s = domain.section_near(pole, d);
            [d, d.cbrt() / (s.lo - x1s).abs()]
        })
        .collect();
    Ok(PoleRecord { pole, point: domain.pole_point(pole), g_grid, q_hat: g3.q_hat(), g3, h_samples })
}

pub fn classify_admissibility(domain: &Domain) -> Result<FlatnessReport> {
    let poles = vec![pole_record(domain, Pole::Lower)?, pole_record(domain, Pole::Upper)?];
    let war1 = EPS_GRID.iter().map(|&e| war1_integral(domain, e)).collect::<Result<Vec<_>>>()?;
    let q_hat = poles.iter().map(|p| p.q_hat).fold(f64::MIN, f64::max);
    let sobolev = sobolev_half_check(if q_hat.is_finite() && q_hat > 0.0 { q_hat } else { 2.0 })?;

    let mut verdict = Verdict::Indeterminate;
    let mut witness = None;
    let mut reason = String::from("no exponent q < 3 with g_q = +inf and g_3 not finite");

    if poles.iter().any(|p| p.g3.is_finite()) {
        verdict = Verdict::Inadmissible;
        reason = "g_3 is finite at a singularity point".into();
    } else if poles.iter().all(|p| {
        p.g3.kind == LimitKind::Infinite && p.g_grid.iter().all(|g| g.kind == LimitKind::Zero)
    }) {
        verdict = Verdict::Inadmissible;
        reason = "g_q = 0 for all sampled q < 3 while g_3 = +inf (log-type flatness)".into();
    } else {
        let inf_at_both = |q: f64| -> Result<bool> {
            for p in &poles {
                let g = match p.g_grid.iter().find(|g| g.q == q) {
                    Some(g) => *g,
                    None => g_limit(&domain.local_graph(p.pole), q)?,
                };
                if g.kind != LimitKind::Infinite {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        let mut candidates: Vec<f64> = Q_GRID.to_vec();
        let extra = 0.5 * (q_hat + 3.0);
        if extra.is_finite() && extra > 2.0 && extra < 3.0 {
            candidates.push(extra);
        }
        for q in candidates {
            if inf_at_both(q)? {
                verdict = Verdict::Admissible;
                witness = Some([q, witness_eps(q)]);
                reason = format!("g_q = +inf at both singularity points for q = {q}");
                break;
            }
        }
    }

    let mut war1_check = None;
    match verdict {
        Verdict::Admissible => {
            let eps = witness.expect("witness")[1];
            let check = war1_integral(domain, eps)?;
            if check.integral.verdict != TailVerdict::Converged {
                reason = format!("{reason}; but the integrability integral at eps = {eps} is not finite");
                verdict = Verdict::Indeterminate;
            }
            war1_check = Some(check);
        }
        Verdict::Inadmissible => {
            let check = war1_integral(domain, PROBE_EPS)?;
            if !check.integral.diverged {
                reason = format!("{reason}; but the integrability integral at eps = {PROBE_EPS} did not diverge");
                verdict = Verdict::Indeterminate;
            }
            war1_check = Some(check);
        }
        Verdict::Indeterminate => {}
    }

    Ok(FlatnessReport { domain: domain.name.clone(), verdict, reason, witness, poles, war1, war1_check, sobolev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LocalGraph;

    struct PowerChart(f64);
    impl Chart for PowerChart {
        fn half_width(&self) -> f64 {
            0.5
        }
        fn eval(&self, x1: f64) -> Result<f64> {
            Ok(x1.abs().powf(self.0))
        }
    }

    #[test]
    fn power_law_limits() {
        let c = PowerChart(2.5);
        assert_eq!(g_limit(&c, 2.0).unwrap().kind, LimitKind::Zero);
        let eq = g_limit(&c, 2.5).unwrap();
        assert_eq!(eq.kind, LimitKind::Finite);
        assert!((eq.value - 1.0).abs() < 1e-12);
        assert_eq!(g_limit(&c, 3.0).unwrap().kind, LimitKind::Infinite);
        assert!(g_limit(&c, 0.5).is_err());
    }

    #[test]
    fn disk_limits() {
        let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
        let g: LocalGraph = d.local_graph(Pole::Lower);
        let half = g_limit(&g, 2.0).unwrap();
        assert_eq!(half.kind, LimitKind::Finite);
        assert!((half.value - 0.5).abs() < 1e-12);
        assert_eq!(g_limit(&g, 2.5).unwrap().kind, LimitKind::Infinite);
        let scaled = g_limit(&g.scaled(3.0), 2.0).unwrap();
        assert!((scaled.value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn power_log_is_unbounded_at_three() {
        let d = Domain::power_log_cap().unwrap();
        let g = g_limit(&d.local_graph(Pole::Lower), 3.0).unwrap();
        assert_eq!(g.kind, LimitKind::Infinite);
        assert!(g.sub_power);
        assert_eq!(g_limit(&d.local_graph(Pole::Upper), 2.9).unwrap().kind, LimitKind::Zero);
    }

    #[test]
    fn war1_examples() {
        let disk = Domain::disk([0.0, 0.0], 1.0).unwrap();
        let w = war1_integral(&disk, 0.5).unwrap();
        assert_eq!(w.integral.verdict, TailVerdict::Converged);
        // closed form: 2 int_0^1 (2x)^{3/2} x / sqrt(1-x^2) dx
        let f = |x: f64| 2.0 * (2.0 * x).powf(1.5) * x / (1.0 - x * x).sqrt();
        let want = crate::integrate::adaptive(&|t: f64| f(t.sin()) * t.cos(), 0.0, std::f64::consts::FRAC_PI_2, 1e-13, 1e-12).unwrap();
        assert!((w.integral.value - want).abs() < 1e-9 * want, "{} {want}", w.integral.value);
        let cap3 = Domain::power_cap(3.0).unwrap();
        for eps in [0.0, 0.5, 1.0] {
            assert!(war1_integral(&cap3, eps).unwrap().integral.diverged, "eps={eps}");
        }
        let cap25 = Domain::power_cap(2.5).unwrap();
        assert_eq!(war1_integral(&cap25, 0.5).unwrap().integral.verdict, TailVerdict::Converged);
    }

    #[test]
    fn sobolev_examples() {
        assert!(sobolev_half_check(3.0).unwrap().member);
        assert!(sobolev_half_check(2.5).unwrap().member);
        assert!(!sobolev_half_check(1.5).unwrap().member);
        let edge = sobolev_half_check(2.0).unwrap();
        assert!(edge.edge && edge.member);
    }

    #[test]
    fn witness_midpoint() {
        assert_eq!(witness_eps(2.5), 0.5);
        assert_eq!(witness_eps(2.0), 2.0);
        assert!((witness_eps(2.9) - 0.5 * 0.1 / 0.9).abs() < 1e-15);
    }
}
