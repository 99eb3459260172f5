//! Scalar mathematics of the logarithmic Φ-function
//!
//! ```text
//! H_log(t) = t^p + μ t^q log(e + t)
//! ```
//!
//! together with its energy potential, the operator density and its
//! derivative, the auxiliary function `f_ε(t) = t^ε / log(e + t)` and the
//! constants `t₀` (positive root of `t = e·log(e + t)`) and `κ = e/(e + t₀)`.
//!
//! The inequality helpers return *gaps* (right-hand side minus left-hand side)
//! so callers can both test the sign and report the worst violation.

use std::f64::consts::E;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::roots;

/// Relative tolerance used by the inequality predicates.
pub const INEQ_TOL: f64 = 1e-12;

/// Pointwise exponents and weight `(p, q, μ)` with `1 < p ≤ q`, `μ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiParams {
    pub p: f64,
    pub q: f64,
    pub mu: f64,
}

impl PhiParams {
    pub fn new(p: f64, q: f64, mu: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return domain(format!("p = {p} must satisfy p > 1"));
        }
        if !(q >= p && q.is_finite()) {
            return domain(format!("q = {q} must satisfy q >= p = {p}"));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return domain(format!("mu = {mu} must be nonnegative"));
        }
        Ok(Self { p, q, mu })
    }
}

fn check_nonneg(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("argument t = {t} must be a finite nonnegative number"))
    }
}

/// `H_log(t) = t^p + μ t^q log(e + t)`.
pub fn hlog_eval(params: PhiParams, t: f64) -> Result<f64> {
    check_nonneg(t)?;
    Ok(hlog_unchecked(params, t))
}

#[inline]
pub(crate) fn hlog_unchecked(params: PhiParams, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    t.powf(params.p) + params.mu * t.powf(params.q) * (E + t).ln()
}

/// The energy integrand `t^p/p + μ t^q/q · log(e + t)` whose derivative is
/// [`hlog_density`].
pub fn hlog_potential(params: PhiParams, t: f64) -> Result<f64> {
    check_nonneg(t)?;
    Ok(potential_unchecked(params, t))
}

#[inline]
pub(crate) fn potential_unchecked(params: PhiParams, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let PhiParams { p, q, mu } = params;
    t.powf(p) / p + mu * t.powf(q) / q * (E + t).ln()
}

/// Operator density `a(t) = t^{p-1} + μ [log(e+t) + t/(q(e+t))] t^{q-1}`.
///
/// The operator integrand is `a(|∇u|) ∇u/|∇u|`; `a(0) = 0` since `p > 1`.
pub fn hlog_density(params: PhiParams, t: f64) -> Result<f64> {
    check_nonneg(t)?;
    Ok(density_unchecked(params, t))
}

#[inline]
pub(crate) fn density_unchecked(params: PhiParams, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let PhiParams { p, q, mu } = params;
    let et = E + t;
    t.powf(p - 1.0) + mu * (et.ln() + t / (q * et)) * t.powf(q - 1.0)
}

/// `a(t)/t`, the scalar weight multiplying `∇u` in the operator. Finite at
/// `a'(t)`, strictly positive for `t > 0`. Errors at `t ≤ 0`, where it is
/// singular for `p < 2`.
pub fn hlog_density_dt(params: PhiParams, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("density derivative needs t > 0, got {t}"));
    }
    Ok(density_dt_unchecked(params, t))
}

#[inline]
pub(crate) fn density_dt_unchecked(params: PhiParams, t: f64) -> f64 {
    let PhiParams { p, q, mu } = params;
    let et = E + t;
    let bracket = et.ln() + t / (q * et);
    let bracket_dt = 1.0 / et + E / (q * et * et);
    (p - 1.0) * t.powf(p - 2.0) + mu * ((q - 1.0) * t.powf(q - 2.0) * bracket + t.powf(q - 1.0) * bracket_dt)
}

/// `t₀` and `κ = e/(e + t₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogConstants {
    pub t0: f64,
    pub kappa: f64,
}

impl LogConstants {
    /// `|e·log(e + t₀) − t₀|`.
    pub fn residual(&self) -> f64 {
        h_fn(self.t0).abs()
    }
}

#[inline]
fn h_fn(t: f64) -> f64 {
    E * (E + t).ln() - t
}

/// Root of the strictly decreasing `h(t) = e·log(e+t) − t`: bisection on
/// `[1, 10]` until the bracket is below `1e-3`, then Newton.
pub fn compute_log_constants(tol: f64) -> Result<LogConstants> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let (mut lo, mut hi) = (1.0f64, 10.0f64);
    while hi - lo >= 1e-3 {
        let mid = 0.5 * (lo + hi);
        if h_fn(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..50 {
        let r = h_fn(t);
        if r.abs() <= tol {
            break;
        }
        let dr = E / (E + t) - 1.0;
        let next = t - r / dr;
        if next == t {
            break;
        }
        t = next;
    }
    Ok(LogConstants { t0: t, kappa: E / (E + t) })
}

/// Constants at full double precision, computed once.
pub fn log_constants() -> LogConstants {
    static CONSTS: OnceLock<LogConstants> = OnceLock::new();
    *CONSTS.get_or_init(|| compute_log_constants(1e-15).expect("positive tolerance"))
}

/// `g(t) = t / ((e+t) log(e+t))`; `f_ε' > 0` exactly where `g < ε`.
pub fn g_ratio(t: f64) -> f64 {
    let et = E + t;
    t / (et * et.ln())
}

/// `f_ε(t) = t^ε / log(e + t)`.
pub fn f_epsilon(eps: f64, t: f64) -> Result<f64> {
    if !(eps > 0.0) || !(t > 0.0) {
        return domain(format!("f_eps needs eps > 0 and t > 0, got eps={eps}, t={t}"));
    }
    Ok(t.powf(eps) / (E + t).ln())
}

/// Shape of `f_ε` for `0 < ε < κ`: local maximum at `t1`, local minimum at
/// `t2`, and the almost-increasing constant `a_eps = f_ε(t1)/f_ε(t2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FEpsilonShape {
    pub eps: f64,
    pub t1: f64,
    pub t2: f64,
    pub a_eps: f64,
}

/// Critical points of `f_ε`. Returns `None` when `ε ≥ κ` (then `f_ε` is
/// increasing and the constant is 1).
pub fn f_epsilon_shape(eps: f64) -> Result<Option<FEpsilonShape>> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    let LogConstants { t0, kappa } = log_constants();
    if eps >= kappa {
        return Ok(None);
    }
    let root = |x: f64| g_ratio(x) - eps;
    let t1 = roots::bisect(root, 1e-9, t0, 1e-15, 400)?;
    // g decays like 1/log t, so the upper root can be astronomically large
    let mut upper = 1e9f64;
    while root(upper) > 0.0 {
        upper *= 1e9;
        if !upper.is_finite() {
            return domain(format!("eps = {eps} too small: local minimum beyond f64 range"));
        }
    }
    let t2 = roots::bisect(root, t0, upper, 1e-15, 4000)?;
    let a_eps = f_epsilon(eps, t1)? / f_epsilon(eps, t2)?;
    Ok(Some(FEpsilonShape { eps, t1, t2, a_eps }))
}

/// `a_ε` for any `ε > 0` (1 when `ε ≥ κ`).
pub fn almost_increasing_constant(eps: f64) -> Result<f64> {
    Ok(f_epsilon_shape(eps)?.map_or(1.0, |s| s.a_eps))
}

/// Gap of the log-Young inequality
///
/// ```text
/// s t^{r-1}[log(e+t) + t/(r(e+t))] ≤ s^r/r log(e+s) + t^r[(r-1)/r log(e+t) + t/(r(e+t))]
/// ```
///
/// as right-hand side minus left-hand side. Always `≥ 0` up to round-off.
pub fn young_log_gap(s: f64, t: f64, r: f64) -> Result<f64> {
    let (lhs, rhs) = young_log_sides(s, t, r)?;
    Ok(rhs - lhs)
}

/// Both sides of the log-Young inequality, `(lhs, rhs)`.
pub fn young_log_sides(s: f64, t: f64, r: f64) -> Result<(f64, f64)> {
    check_nonneg(s)?;
    check_nonneg(t)?;
    if !(r > 1.0 && r.is_finite()) {
        return domain(format!("r = {r} must satisfy r > 1"));
    }
    let ets = E + s;
    let ett = E + t;
    let corr = t / (r * ett);
    let tr1 = if t == 0.0 { 0.0 } else { t.powf(r - 1.0) };
    let lhs = s * tr1 * (ett.ln() + corr);
    let rhs = s.powf(r) / r * ets.ln() + t * tr1 * ((r - 1.0) / r * ett.ln() + corr);
    Ok((lhs, rhs))
}

/// `C_r = min{2^{2-r}, 1/2}` for `r ≥ 2` and `r − 1` for `1 < r < 2`.
pub fn monotone_constant(r: f64) -> f64 {
    if r >= 2.0 {
        (2f64.powf(2.0 - r)).min(0.5)
    } else {
        r - 1.0
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Both sides of the monotonicity inequality for
/// `ξ ↦ h(|ξ|)|ξ|^{r-2}ξ`, with the constant `c_r` supplied by the caller.
///
/// For `r ≥ 2`: `lhs = (h(|ξ|)|ξ|^{r-2}ξ − h(|η|)|η|^{r-2}η)·(ξ−η)`,
/// `rhs = c_r |ξ−η|^r h(m)`. For `1 < r < 2` the left side carries the
/// factor `(|ξ|+|η|)^{2-r}` and the right side uses `|ξ−η|^2`. Here
/// `m = min{|ξ|, |η|}`.
pub fn monotone_sides<H: Fn(f64) -> f64>(xi: &[f64], eta: &[f64], r: f64, h: H, c_r: f64) -> Result<(f64, f64)> {
    if !(r > 1.0) {
        return domain(format!("r = {r} must satisfy r > 1"));
    }
    if xi.len() != eta.len() {
        return Err(crate::LogdpError::Shape { expected: xi.len(), got: eta.len() });
    }
    let (nx, ne) = (norm(xi), norm(eta));
    let wx = if nx == 0.0 { 0.0 } else { h(nx) * nx.powf(r - 2.0) };
    let we = if ne == 0.0 { 0.0 } else { h(ne) * ne.powf(r - 2.0) };
    let mut pairing = 0.0;
    let mut dist2 = 0.0;
    for (a, b) in xi.iter().zip(eta) {
        let d = a - b;
        pairing += (wx * a - we * b) * d;
        dist2 += d * d;
    }
    let hm = h(nx.min(ne));
    if r >= 2.0 {
        Ok((pairing, c_r * dist2.sqrt().powf(r) * hm))
    } else {
        let sum = nx + ne;
        let factor = if sum == 0.0 { 0.0 } else { sum.powf(2.0 - r) };
        Ok((factor * pairing, c_r * dist2 * hm))
    }
}

/// Gap (lhs − rhs) of the monotonicity inequality with the sharp `C_r`.
pub fn monotone_gap<H: Fn(f64) -> f64>(xi: &[f64], eta: &[f64], r: f64, h: H) -> Result<f64> {
    let (lhs, rhs) = monotone_sides(xi, eta, r, h, monotone_constant(r))?;
    Ok(lhs - rhs)
}

/// Maximum of `t ↦ t/(Q(e+t)log(e+t))`: attained at `t₀` with value `κ/Q`.
pub fn quotient_frac_log_max(big_q: f64) -> Result<(f64, f64)> {
    if !(big_q > 1.0) {
        return domain(format!("Q = {big_q} must exceed 1"));
    }
    let LogConstants { t0, kappa } = log_constants();
    Ok((t0, kappa / big_q))
}

/// Growth inequalities of the logarithm:
/// `log(e+xy) ≤ log(e+x) + log(e+y)`, `log(e+Cx) ≤ C log(e+x)` and
/// `(x+y)^q log(e+x+y) ≤ (2x)^q log(e+2x) + (2y)^q log(e+2y)
///  ≤ 2^{q+1}(x^q log(e+x) + y^q log(e+y))`.
pub fn log_growth_check(x: f64, y: f64, c: f64, q: f64) -> bool {
    if !(x >= 0.0 && y >= 0.0 && c >= 1.0 && q >= 1.0) {
        return false;
    }
    let le = |v: f64| (E + v).ln();
    let product = leq(le(x * y), le(x) + le(y));
    let scale = leq(le(c * x), c * le(x));
    let s = x + y;
    let a = s.powf(q) * le(s);
    let b = (2.0 * x).powf(q) * le(2.0 * x) + (2.0 * y).powf(q) * le(2.0 * y);
    let c2 = 2f64.powf(q + 1.0) * (x.powf(q) * le(x) + y.powf(q) * le(y));
    product && scale && leq(a, b) && leq(b, c2)
}

/// `a ≤ b` up to [`INEQ_TOL`] relative to the larger magnitude.
pub fn leq(a: f64, b: f64) -> bool {
    a <= b + INEQ_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Scale used to normalise gap tolerances.
pub fn gap_scale(a: f64, b: f64) -> f64 {
    a.abs().max(b.abs()).max(1.0)
}
