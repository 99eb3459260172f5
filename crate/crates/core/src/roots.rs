//! Bracketing root finders: bisection, Illinois regula falsi, geometric
//! bracket expansion, and a two-dimensional Poincaré-Miranda rectangle search.

use crate::error::{LogdpError, Result};

/// Closed interval `[lo, hi]` on which a continuous function changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn new<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<Self> {
        let (f_lo, f_hi) = (f(lo), f(hi));
        if !(f_lo.is_finite() && f_hi.is_finite()) {
            return Err(LogdpError::NoBracket(format!("non-finite values on [{lo:e}, {hi:e}]")));
        }
        if f_lo * f_hi > 0.0 {
            return Err(LogdpError::NoBracket(format!("f({lo:e}) = {f_lo:e} and f({hi:e}) = {f_hi:e} share a sign")));
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Plain bisection. Stops when the bracket is narrower than
/// `xtol_rel * |midpoint|` (or collapses to adjacent floats) or an exact zero
/// is hit.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol_rel: f64, max_iter: usize) -> Result<f64> {
    let mut b = Bracket::new(&mut f, lo, hi)?;
    bisect_bracket(&mut f, &mut b, xtol_rel, max_iter)
}

pub(crate) fn bisect_bracket<F: FnMut(f64) -> f64>(
    f: &mut F,
    b: &mut Bracket,
    xtol_rel: f64,
    max_iter: usize,
) -> Result<f64> {
    if b.f_lo == 0.0 {
        return Ok(b.lo);
    }
    if b.f_hi == 0.0 {
        return Ok(b.hi);
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (b.lo + b.hi);
        if mid <= b.lo || mid >= b.hi || b.width() <= xtol_rel * mid.abs() {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.is_nan() {
            return Err(LogdpError::Convergence(format!("NaN at x = {mid:e}")));
        }
        if (fm < 0.0) == (b.f_lo < 0.0) {
            b.lo = mid;
            b.f_lo = fm;
        } else {
            b.hi = mid;
            b.f_hi = fm;
        }
    }
    Err(LogdpError::Convergence(format!("bisection exhausted {max_iter} iterations on [{:e}, {:e}]", b.lo, b.hi)))
}

/// Illinois variant of regula falsi. Converges superlinearly on smooth
/// functions while keeping the bracket.
pub fn illinois<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol_rel: f64, max_iter: usize) -> Result<f64> {
    let mut b = Bracket::new(&mut f, lo, hi)?;
    if b.f_lo == 0.0 {
        return Ok(b.lo);
    }
    if b.f_hi == 0.0 {
        return Ok(b.hi);
    }
    // side: -1 when the last update moved `lo`, +1 when it moved `hi`
    let mut side = 0i8;
    for _ in 0..max_iter {
        let mut x = (b.lo * b.f_hi - b.hi * b.f_lo) / (b.f_hi - b.f_lo);
        if !(x > b.lo && x < b.hi) {
            x = 0.5 * (b.lo + b.hi);
            if !(x > b.lo && x < b.hi) {
                return Ok(if b.f_lo.abs() < b.f_hi.abs() { b.lo } else { b.hi });
            }
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.is_nan() {
            return Err(LogdpError::Convergence(format!("NaN at x = {x:e}")));
        }
        if (fx < 0.0) == (b.f_lo < 0.0) {
            b.lo = x;
            b.f_lo = fx;
            if side == -1 {
                b.f_hi *= 0.5;
            }
            side = -1;
        } else {
            b.hi = x;
            b.f_hi = fx;
            if side == 1 {
                b.f_lo *= 0.5;
            }
            side = 1;
        }
        let scale = b.lo.abs().max(b.hi.abs());
        if b.width() <= xtol_rel * scale {
            return Ok(if b.f_lo.abs() < b.f_hi.abs() { b.lo } else { b.hi });
        }
    }
    Err(LogdpError::Convergence(format!(
        "Illinois iteration exhausted {max_iter} iterations on [{:e}, {:e}]",
        b.lo, b.hi
    )))
}

/// Illinois iteration that stops on the residual: returns `x` with
/// `|f(x)| ≤ ftol`. Fails if the bracket collapses first.
pub fn illinois_ftol<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, ftol: f64, max_iter: usize) -> Result<f64> {
    let mut b = Bracket::new(&mut f, lo, hi)?;
    if b.f_lo.abs() <= ftol {
        return Ok(b.lo);
    }
    if b.f_hi.abs() <= ftol {
        return Ok(b.hi);
    }
    let mut side = 0i8;
    for it in 0..max_iter {
        // every fourth step is a bisection so the bracket always shrinks
        let mut x = if it % 4 == 3 { 0.5 * (b.lo + b.hi) } else { (b.lo * b.f_hi - b.hi * b.f_lo) / (b.f_hi - b.f_lo) };
        if !(x > b.lo && x < b.hi) {
            x = 0.5 * (b.lo + b.hi);
            if !(x > b.lo && x < b.hi) {
                break;
            }
        }
        let fx = f(x);
        if fx.is_nan() {
            return Err(LogdpError::Convergence(format!("NaN at x = {x:e}")));
        }
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if (fx < 0.0) == (b.f_lo < 0.0) {
            b.lo = x;
            b.f_lo = fx;
            if side == -1 {
                b.f_hi *= 0.5;
            }
            side = -1;
        } else {
            b.hi = x;
            b.f_hi = fx;
            if side == 1 {
                b.f_lo *= 0.5;
            }
            side = 1;
        }
    }
    Err(LogdpError::Convergence(format!("residual above {ftol:e} on [{:e}, {:e}]", b.lo, b.hi)))
}

/// Expands `[start, start]` geometrically by `factor` (downwards and upwards
/// alternately) inside `[min, max]` until `f` changes sign between two
/// consecutive probes. Returns the tightest bracket found.
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    f: &mut F,
    start: f64,
    factor: f64,
    min: f64,
    max: f64,
    max_steps: usize,
) -> Result<Bracket> {
    let f0 = f(start);
    if !f0.is_finite() {
        return Err(LogdpError::NoBracket(format!("f({start:e}) is not finite")));
    }
    let (mut up_x, mut up_f) = (start, f0);
    let (mut dn_x, mut dn_f) = (start, f0);
    for _ in 0..max_steps {
        let mut moved = false;
        if up_x < max {
            let x = (up_x * factor).min(max);
            let fx = f(x);
            if fx.is_finite() {
                if fx * up_f <= 0.0 {
                    return Ok(Bracket { lo: up_x, hi: x, f_lo: up_f, f_hi: fx });
                }
                up_x = x;
                up_f = fx;
                moved = true;
            }
        }
        if dn_x > min {
            let x = (dn_x / factor).max(min);
            let fx = f(x);
            if fx.is_finite() {
                if fx * dn_f <= 0.0 {
                    return Ok(Bracket { lo: x, hi: dn_x, f_lo: fx, f_hi: dn_f });
                }
                dn_x = x;
                dn_f = fx;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Err(LogdpError::NoBracket(format!("no sign change within [{min:e}, {max:e}]")))
}

/// Axis-aligned rectangle `[s_lo, s_hi] × [t_lo, t_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub s_lo: f64,
    pub s_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmZero {
    pub s: f64,
    pub t: f64,
    pub value: (f64, f64),
    pub evaluations: usize,
}

/// Checks the Poincaré-Miranda boundary conditions on `n` samples per edge:
/// `d.0 ≤ 0` on `s = s_lo`, `d.0 ≥ 0` on `s = s_hi`, `d.1 ≤ 0` on `t = t_lo`
/// and `d.1 ≥ 0` on `t = t_hi`. Returns the worst violation (0 when all hold).
pub fn poincare_miranda_violation<D: FnMut(f64, f64) -> (f64, f64)>(d: &mut D, rect: Rect, n: usize) -> f64 {
    let n = n.max(2);
    let mut worst = 0.0f64;
    for k in 0..n {
        let a = k as f64 / (n - 1) as f64;
        let s = rect.s_lo + a * (rect.s_hi - rect.s_lo);
        let t = rect.t_lo + a * (rect.t_hi - rect.t_lo);
        worst = worst.max(d(rect.s_lo, t).0);
        worst = worst.max(-d(rect.s_hi, t).0);
        worst = worst.max(d(s, rect.t_lo).1);
        worst = worst.max(-d(s, rect.t_hi).1);
    }
    worst
}

/// Finds a zero of a continuous map `d` on `rect` satisfying the
/// Poincaré-Miranda sign conditions, by nested bracketing: for fixed `s` the
/// second component is solved in `t`, then the first component along that
/// curve is solved in `s`.
pub fn poincare_miranda_zero<D: FnMut(f64, f64) -> (f64, f64)>(
    mut d: D,
    rect: Rect,
    xtol_rel: f64,
    max_iter: usize,
) -> Result<PmZero> {
    let mut evals = 0usize;
    let inner = |s: f64, d: &mut D, evals: &mut usize| -> Result<f64> {
        illinois(
            |t| {
                *evals += 1;
                d(s, t).1
            },
            rect.t_lo,
            rect.t_hi,
            xtol_rel,
            max_iter,
        )
    };
    let mut failure: Option<LogdpError> = None;
    let s = illinois(
        |s| match inner(s, &mut d, &mut evals) {
            Ok(t) => {
                evals += 1;
                d(s, t).0
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        rect.s_lo,
        rect.s_hi,
        xtol_rel,
        max_iter,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let s = s?;
    let t = inner(s, &mut d, &mut evals)?;
    let value = d(s, t);
    Ok(PmZero { s, t, value, evaluations: evals + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn illinois_matches_bisection() {
        let f = |x: f64| x.exp() - 3.0 * x;
        let a = bisect(f, 0.0, 1.0, 1e-15, 200).unwrap();
        let b = illinois(f, 0.0, 1.0, 1e-15, 200).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn residual_tolerance_is_met() {
        let x = illinois_ftol(|x: f64| x.powi(5) - 3.0, 0.0, 3.0, 1e-13, 500).unwrap();
        assert!((x.powi(5) - 3.0).abs() <= 1e-13);
    }

    #[test]
    fn missing_sign_change_is_reported() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100), Err(LogdpError::NoBracket(_))));
    }

    #[test]
    fn expansion_brackets_from_either_side() {
        let mut f = |t: f64| 1.0 - t / 1000.0;
        let b = expand_bracket(&mut f, 1.0, 4.0, 1e-8, 1e8, 60).unwrap();
        assert!(b.lo <= 1000.0 && b.hi >= 1000.0);
        let mut g = |t: f64| t - 1e-5;
        let b = expand_bracket(&mut g, 1.0, 4.0, 1e-8, 1e8, 60).unwrap();
        assert!(b.lo <= 1e-5 && b.hi >= 1e-5);
        let mut h = |_t: f64| 1.0;
        assert!(expand_bracket(&mut h, 1.0, 4.0, 1e-8, 1e8, 60).is_err());
    }

    #[test]
    fn poincare_miranda_on_a_coupled_linear_map() {
        // d(s,t) = (2s + 0.5t - 1, 0.3s + t - 0.2), zero at s = 0.9/1.85, t = 0.2 - 0.3s
        let d = |s: f64, t: f64| (2.0 * s + 0.5 * t - 1.0, 0.3 * s + t - 0.2);
        let rect = Rect { s_lo: -1.0, s_hi: 2.0, t_lo: -1.0, t_hi: 1.0 };
        let mut dd = d;
        assert_eq!(poincare_miranda_violation(&mut dd, rect, 16), 0.0);
        let z = poincare_miranda_zero(d, rect, 1e-14, 200).unwrap();
        let s0 = 0.9 / 1.85;
        assert!((z.s - s0).abs() < 1e-12, "{z:?}");
        assert!((z.t - (0.2 - 0.3 * s0)).abs() < 1e-12, "{z:?}");
    }
}
