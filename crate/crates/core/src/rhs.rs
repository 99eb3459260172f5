//! Right-hand sides `f(x,t)` with primitive `F(x,t) = ∫₀ᵗ f(x,s) ds`, the
//! builtin instance catalog and sampled validation of the growth assumptions.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LogdpError, Result};
use crate::mesh::{ExponentField, Mesh, StructuralFlags};
use crate::phi::log_constants;

type ScalarFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// Assumption flags an instance claims to satisfy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimedFlags {
    /// Carathéodory.
    pub f1: bool,
    /// Subcritical growth `|f| ≤ C(1 + |t|^{r-1})`, `r₊ < p*₋`.
    pub f2: bool,
    /// `F/(|s|^{q₊} log(e+|s|)) → ∞`.
    pub f3: bool,
    /// `t ↦ f(x,t)/|t|^{q₊}` increasing on each half line.
    pub f3_prime: bool,
    /// `F ≤ 0` near zero and `f(x,0) = 0`.
    pub f4: bool,
    /// `F(x,s)/|s|^{p(x)} → 0` as `s → 0`.
    pub f4_prime: bool,
    /// Cerami-type liminf bound with exponent `l`.
    pub f5: bool,
    /// `f t − q₊(1+κ/q₋) F ≥ 0`.
    pub f6: bool,
}

/// A right-hand side with analytic primitive and `t`-derivative.
#[derive(Clone)]
pub struct RhsSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    f: ScalarFn,
    primitive: ScalarFn,
    df: ScalarFn,
    pub r_minus: f64,
    pub r_plus: f64,
    /// Exponents `(l, l̃)` for the Cerami-type bound, when the instance has them.
    pub cerami_exponents: Option<(f64, f64)>,
    pub flags: ClaimedFlags,
    /// `Some(r)` when `F(x, λs) = λ^r F(x, s)` for all `λ > 0`.
    pub homogeneity: Option<f64>,
    /// True when `f` does not depend on `x`.
    pub x_independent: bool,
}

impl fmt::Debug for RhsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("r_minus", &self.r_minus)
            .field("r_plus", &self.r_plus)
            .field("cerami_exponents", &self.cerami_exponents)
            .field("flags", &self.flags)
            .field("homogeneity", &self.homogeneity)
            .finish()
    }
}

impl RhsSpec {
    /// Builds a custom right-hand side from closures.
    #[allow(clippy::too_many_arguments)]
    pub fn custom<F, P, D>(
        name: &str,
        f: F,
        primitive: P,
        df: D,
        r_minus: f64,
        r_plus: f64,
        flags: ClaimedFlags,
    ) -> Self
    where
        F: Fn([f64; 2], f64) -> f64 + Send + Sync + 'static,
        P: Fn([f64; 2], f64) -> f64 + Send + Sync + 'static,
        D: Fn([f64; 2], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            params: BTreeMap::new(),
            f: Arc::new(f),
            primitive: Arc::new(primitive),
            df: Arc::new(df),
            r_minus,
            r_plus,
            cerami_exponents: None,
            flags,
            homogeneity: None,
            x_independent: false,
        }
    }

    #[inline]
    pub fn f(&self, x: [f64; 2], t: f64) -> f64 {
        (self.f)(x, t)
    }

    /// The primitive `F(x,t)`.
    #[inline]
    pub fn big_f(&self, x: [f64; 2], t: f64) -> f64 {
        (self.primitive)(x, t)
    }

    /// `∂f/∂t`.
    #[inline]
    pub fn df(&self, x: [f64; 2], t: f64) -> f64 {
        (self.df)(x, t)
    }

    /// True when `f` does not depend on `t` (fixed right-hand side).
    pub fn is_fixed(&self) -> bool {
        matches!(self.name.as_str(), "constant" | "zero")
    }

    /// True when `f(x,−t) = −f(x,t)` by construction.
    pub fn is_odd(&self) -> bool {
        matches!(self.name.as_str(), "power" | "example_i" | "zero")
            || (self.name == "example_ii" && self.params.get("l") == self.params.get("l_tilde"))
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params.get(key).copied().ok_or_else(|| LogdpError::Config(format!("rhs parameter '{key}' is required")))
}

fn power_fns(r: f64) -> (ScalarFn, ScalarFn, ScalarFn) {
    (
        Arc::new(move |_, t: f64| if t == 0.0 { 0.0 } else { t.abs().powf(r - 2.0) * t }),
        Arc::new(move |_, t: f64| if t == 0.0 { 0.0 } else { t.abs().powf(r) / r }),
        Arc::new(move |_, t: f64| {
            if t == 0.0 {
                if r > 2.0 {
                    0.0
                } else if r == 2.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                (r - 1.0) * t.abs().powf(r - 2.0)
            }
        }),
    )
}

/// Builds a named instance from the catalog:
///
/// * `power` (`r`): `f = |t|^{r-2} t`;
/// * `example_i` (`eps`): `f = |t|^{q₊(1+κ/q₋)+ε-2} t` with `0 < ε < 1 − q₊κ/q₋`;
/// * `example_ii` (`l`, `l_tilde`, `m`): log-tilted powers outside `[-1,1]`,
///   `|t|^{m-2} t` inside;
/// * `constant` (`c`): `f ≡ c`, a fixed right-hand side;
/// * `zero`.
pub fn builtin_rhs(name: &str, params: &BTreeMap<String, f64>, exps: &ExponentField) -> Result<RhsSpec> {
    let kappa = log_constants().kappa;
    let (q_plus, q_minus) = (exps.q_plus, exps.q_minus);
    let c_star = q_plus * (1.0 + kappa / q_minus);
    let p_star = exps.structural_flags().p_star_minus;
    let mut spec = match name {
        "power" => {
            let r = param(params, "r")?;
            if !(r > 1.0) {
                return Err(LogdpError::Config(format!("power: r = {r} must exceed 1")));
            }
            let (f, primitive, df) = power_fns(r);
            RhsSpec {
                name: name.into(),
                params: BTreeMap::new(),
                f,
                primitive,
                df,
                r_minus: r,
                r_plus: r,
                cerami_exponents: (r > c_star).then_some((c_star, c_star)),
                flags: ClaimedFlags {
                    f1: true,
                    f2: r < p_star,
                    f3: r > q_plus,
                    f3_prime: r - 1.0 > q_plus,
                    f4: false,
                    f4_prime: r > exps.p_plus,
                    f5: r > c_star,
                    f6: r >= c_star,
                },
                homogeneity: None,
                x_independent: true,
            }
        }
        "example_i" => {
            let eps = param(params, "eps")?;
            let bound = 1.0 - q_plus * kappa / q_minus;
            if !(bound > 0.0) {
                return Err(LogdpError::Assumption(format!(
                    "example_i needs q+ kappa / q- < 1, got {}",
                    q_plus * kappa / q_minus
                )));
            }
            if !(eps > 0.0 && eps < bound) {
                return Err(LogdpError::Config(format!("example_i: eps = {eps} must lie in (0, {bound})")));
            }
            let r = c_star + eps;
            let (f, primitive, df) = power_fns(r);
            RhsSpec {
                name: name.into(),
                params: BTreeMap::new(),
                f,
                primitive,
                df,
                r_minus: r,
                r_plus: r,
                cerami_exponents: Some((c_star, c_star)),
                flags: ClaimedFlags {
                    f1: true,
                    f2: true,
                    f3: false,
                    f3_prime: true,
                    f4: false,
                    f4_prime: true,
                    f5: true,
                    f6: true,
                },
                homogeneity: None,
                x_independent: true,
            }
        }
        "example_ii" => {
            let l = param(params, "l")?;
            let lt = param(params, "l_tilde")?;
            let m = param(params, "m")?;
            let lo = l.min(lt).min(m);
            if !(q_plus + 1.0 <= lo) {
                return Err(LogdpError::Config(format!(
                    "example_ii: need q+ + 1 = {} <= min(l, l_tilde, m) = {lo}",
                    q_plus + 1.0
                )));
            }
            let hi = l.max(lt);
            if !(hi < p_star) {
                return Err(LogdpError::Config(format!("example_ii: need max(l, l_tilde) = {hi} < p*- = {p_star}")));
            }
            if !(hi / exps.p_minus - l.min(lt) / crate::mesh::DIM < 1.0) {
                return Err(LogdpError::Config("example_ii: compatibility max(l)/p- - min(l)/N < 1 fails".into()));
            }
            let branch =
                |e: f64, s: f64| s.powf(e) / e * (1.0 + s.ln()) - s.powf(e) / (e * e) - (1.0 / e - 1.0 / (e * e));
            let f: ScalarFn = Arc::new(move |_, t: f64| {
                let s = t.abs();
                if t >= 1.0 {
                    s.powf(l - 1.0) * (1.0 + s.ln())
                } else if t <= -1.0 {
                    -s.powf(lt - 1.0) * (1.0 + s.ln())
                } else if t == 0.0 {
                    0.0
                } else {
                    s.powf(m - 2.0) * t
                }
            });
            let primitive: ScalarFn = Arc::new(move |_, t: f64| {
                let s = t.abs();
                if t >= 1.0 {
                    1.0 / m + branch(l, s)
                } else if t <= -1.0 {
                    1.0 / m + branch(lt, s)
                } else if t == 0.0 {
                    0.0
                } else {
                    s.powf(m) / m
                }
            });
            let df: ScalarFn = Arc::new(move |_, t: f64| {
                let s = t.abs();
                let e = if t >= 1.0 {
                    l
                } else if t <= -1.0 {
                    lt
                } else if t == 0.0 {
                    return 0.0;
                } else {
                    return (m - 1.0) * s.powf(m - 2.0);
                };
                (e - 1.0) * s.powf(e - 2.0) * (1.0 + s.ln()) + s.powf(e - 2.0)
            });
            // f(x,t) ≤ C(1 + |t|^{r-1}) with r = max(l, l̃) + small slack
            let compat = (1.0 - (hi / exps.p_minus - l.min(lt) / crate::mesh::DIM)) * exps.p_minus;
            let room = if p_star.is_finite() { (p_star - hi).min(compat) } else { compat };
            let slack = 0.5 * room.min(0.2);
            RhsSpec {
                name: name.into(),
                params: BTreeMap::new(),
                f,
                primitive,
                df,
                r_minus: m.min(l).min(lt),
                r_plus: hi + slack,
                cerami_exponents: Some((l, lt)),
                flags: ClaimedFlags {
                    f1: true,
                    f2: true,
                    f3: false,
                    f3_prime: true,
                    f4: false,
                    f4_prime: true,
                    f5: true,
                    f6: true,
                },
                homogeneity: None,
                x_independent: true,
            }
        }
        "constant" => {
            let c = param(params, "c")?;
            RhsSpec {
                name: name.into(),
                params: BTreeMap::new(),
                f: Arc::new(move |_, _| c),
                primitive: Arc::new(move |_, t| c * t),
                df: Arc::new(|_, _| 0.0),
                r_minus: 1.0,
                r_plus: 1.0,
                cerami_exponents: None,
                flags: ClaimedFlags { f1: true, ..Default::default() },
                homogeneity: None,
                x_independent: true,
            }
        }
        "zero" => RhsSpec {
            name: name.into(),
            params: BTreeMap::new(),
            f: Arc::new(|_, _| 0.0),
            primitive: Arc::new(|_, _| 0.0),
            df: Arc::new(|_, _| 0.0),
            r_minus: 1.0,
            r_plus: 1.0,
            cerami_exponents: None,
            flags: ClaimedFlags { f1: true, f4: true, ..Default::default() },
            homogeneity: None,
            x_independent: true,
        },
        other => return Err(LogdpError::Config(format!("unknown rhs '{other}'"))),
    };
    spec.params = params.clone();
    spec.homogeneity = match name {
        "power" | "example_i" => Some(spec.r_plus),
        "constant" | "zero" => Some(1.0),
        _ => None,
    };
    Ok(spec)
}

/// One sampled assumption check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagCheck {
    pub name: String,
    pub claimed: bool,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub structural: StructuralFlags,
    /// `q₊ κ / q₋ < 1`, the standing condition of the example catalog.
    pub q_kappa_ratio_ok: bool,
    pub checks: Vec<FlagCheck>,
    /// Every claimed flag holds on the samples.
    pub claimed_hold: bool,
}

impl AssumptionReport {
    pub fn check(&self, name: &str) -> Option<&FlagCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Human-readable warnings: failing claimed flags and failing structural
    /// conditions.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.structural.h {
            w.push("(H) q(x) < p*(x) fails".to_string());
        }
        if !self.structural.h2 {
            w.push("(H2) q+ < p*- fails".to_string());
        }
        if !self.structural.h3 {
            w.push("(H3) q+ + 1 < p*- fails".to_string());
        }
        for c in &self.checks {
            if c.claimed && !c.holds {
                w.push(format!("{} claimed but fails on samples: {}", c.name, c.detail));
            }
        }
        w
    }
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let n = ((b - a) * per_decade as f64).round() as usize;
    (0..=n).map(|k| 10f64.powf(a + (b - a) * k as f64 / n as f64)).collect()
}

/// Samples `s` on a log grid up to `1e6` and `x` over (up to 64) element
/// barycenters; reports which flags hold empirically. Asymptotic conditions
/// can only be falsified by sampling, never certified.
pub fn validate_assumptions(mesh: &Mesh, exps: &ExponentField, rhs: &RhsSpec) -> AssumptionReport {
    let structural = exps.structural_flags();
    let kappa = log_constants().kappa;
    let (q_plus, q_minus) = (exps.q_plus, exps.q_minus);
    let c_star = q_plus * (1.0 + kappa / q_minus);
    let n_el = mesh.n_elements();
    let stride = n_el.div_ceil(64).max(1);
    let xs: Vec<(usize, [f64; 2])> = (0..n_el).step_by(stride).map(|e| (e, mesh.barycenter(e))).collect();
    let grid = log_grid(1e-6, 1e6, 10);
    let signs = [1.0, -1.0];
    let mut checks = Vec::new();
    let mut push = |name: &str, claimed: bool, holds: bool, detail: String| {
        checks.push(FlagCheck { name: name.into(), claimed, holds, detail });
    };

    let finite = xs.iter().all(|&(_, x)| {
        grid.iter().all(|&s| signs.iter().all(|&sg| rhs.f(x, sg * s).is_finite() && rhs.big_f(x, sg * s).is_finite()))
    });
    push("f1", rhs.flags.f1, finite, "finite values on the sample grid".into());

    let mut c_emp = 0.0f64;
    for &(_, x) in &xs {
        for &s in &grid {
            for sg in signs {
                let v = rhs.f(x, sg * s).abs() / (1.0 + s.powf(rhs.r_plus - 1.0));
                c_emp = c_emp.max(v);
            }
        }
    }
    let f2 = c_emp.is_finite() && rhs.r_plus < structural.p_star_minus;
    push("f2", rhs.flags.f2, f2, format!("C = {c_emp:.3e}, r+ = {} vs p*- = {}", rhs.r_plus, structural.p_star_minus));

    // F / (|s|^{q+} log(e+|s|)) grows without bound: increasing over the top
    // three decades and up by a factor ten
    let top = log_grid(1e3, 1e6, 10);
    let mut f3 = true;
    for &(_, x) in &xs {
        for sg in signs {
            let ratio: Vec<f64> = top.iter().map(|&s| rhs.big_f(x, sg * s) / (s.powf(q_plus) * (E + s).ln())).collect();
            let inc = ratio.windows(2).all(|w| w[1] > w[0]);
            f3 &= inc && ratio[ratio.len() - 1] > 10.0 * ratio[0].max(1e-300) && ratio[0] > 0.0;
        }
    }
    push("f3", rhs.flags.f3, f3, "F/(|s|^q+ log(e+|s|)) increasing on [1e3, 1e6]".into());

    let mut f3p = true;
    for &(_, x) in &xs {
        let pos: Vec<f64> = grid.iter().map(|&s| rhs.f(x, s) / s.powf(q_plus)).collect();
        let neg: Vec<f64> = grid.iter().rev().map(|&s| rhs.f(x, -s) / s.powf(q_plus)).collect();
        let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs());
        f3p &= nondecreasing(&pos) && nondecreasing(&neg);
    }
    push("f3'", rhs.flags.f3_prime, f3p, "f(x,t)/|t|^q+ increasing on both half lines".into());

    let theta = 1e-3;
    let near: Vec<f64> = grid.iter().copied().filter(|&s| s <= theta).collect();
    let f4 = xs
        .iter()
        .all(|&(_, x)| rhs.f(x, 0.0) == 0.0 && near.iter().all(|&s| rhs.big_f(x, s) <= 0.0 && rhs.big_f(x, -s) <= 0.0));
    push("f4", rhs.flags.f4, f4, format!("F <= 0 on |t| <= {theta}"));

    let mut f4p = true;
    for &(e, x) in &xs {
        let p = exps.p_at[e];
        for sg in signs {
            let seq: Vec<f64> = (1..=60)
                .map(|k| {
                    let s = 2f64.powi(-k);
                    rhs.big_f(x, sg * s).abs() / s.powf(p)
                })
                .collect();
            f4p &= seq.windows(2).all(|w| w[1] <= w[0]) && seq[59] <= 1e-2 * seq[0].max(1e-300);
        }
    }
    push("f4'", rhs.flags.f4_prime, f4p, "F/|s|^p(x) decreasing to 0 along s = 2^-k".into());

    let f5 = match rhs.cerami_exponents {
        Some((l, lt)) => xs.iter().all(|&(_, x)| {
            top.iter().all(|&s| {
                let pos = (rhs.f(x, s) * s - c_star * rhs.big_f(x, s)) / s.powf(l);
                let neg = (rhs.f(x, -s) * -s - c_star * rhs.big_f(x, -s)) / s.powf(lt);
                pos > 0.0 && neg > 0.0
            })
        }),
        None => false,
    };
    push("f5", rhs.flags.f5, f5, "Cerami quotient positive on [1e3, 1e6]".into());

    let mut worst6 = 0.0f64;
    for &(_, x) in &xs {
        for &s in &grid {
            for sg in signs {
                let t = sg * s;
                let ft = rhs.f(x, t) * t;
                let v = ft - c_star * rhs.big_f(x, t);
                worst6 = worst6.min(v / ft.abs().max(1e-300));
            }
        }
    }
    let f6 = worst6 >= -1e-12;
    push("f6", rhs.flags.f6, f6, format!("worst relative value {worst6:.3e}"));

    let claimed_hold = checks.iter().all(|c| !c.claimed || c.holds);
    AssumptionReport { structural, q_kappa_ratio_ok: q_plus * kappa / q_minus < 1.0, checks, claimed_hold }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;

    fn setup(p: f64, q: f64, mu: f64) -> (Mesh, ExponentField) {
        let m = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap();
        let ex = ExponentField::constant(&m, p, q, mu).unwrap();
        (m, ex)
    }

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn primitives_match_derivatives() {
        let (_, ex) = setup(2.6, 2.6, 0.5);
        let specs = [
            builtin_rhs("power", &params(&[("r", 3.5)]), &ex).unwrap(),
            builtin_rhs("example_i", &params(&[("eps", 0.3)]), &ex).unwrap(),
            builtin_rhs("example_ii", &params(&[("l", 3.8), ("l_tilde", 4.1), ("m", 3.7)]), &ex).unwrap(),
        ];
        for spec in &specs {
            assert_eq!(spec.big_f([0.5, 0.5], 0.0), 0.0);
            for t in [-7.3f64, -1.4, -0.6, 0.05, 0.8, 1.3, 9.1] {
                let h = 1e-6 * t.abs().max(1e-3);
                let x = [0.3, 0.2];
                let fd = (spec.big_f(x, t + h) - spec.big_f(x, t - h)) / (2.0 * h);
                let f = spec.f(x, t);
                assert!((fd - f).abs() <= 1e-5 * f.abs().max(1e-8), "{}: t={t} {fd} vs {f}", spec.name);
                let dfd = (spec.f(x, t + h) - spec.f(x, t - h)) / (2.0 * h);
                let df = spec.df(x, t);
                assert!((dfd - df).abs() <= 1e-5 * df.abs().max(1e-8), "{}: t={t} {dfd} vs {df}", spec.name);
            }
        }
    }

    #[test]
    fn example_i_exponent_and_constraints() {
        let (_, ex) = setup(2.6, 2.6, 0.5);
        let kappa = log_constants().kappa;
        let spec = builtin_rhs("example_i", &params(&[("eps", 0.1)]), &ex).unwrap();
        let r = 2.6 * (1.0 + kappa / 2.6) + 0.1;
        assert!((spec.r_plus - r).abs() < 1e-14);
        assert!((spec.f([0.0, 0.0], 2.0) - 2f64.powf(r - 1.0)).abs() < 1e-12);
        assert!(builtin_rhs("example_i", &params(&[("eps", 0.9)]), &ex).is_err());
        assert!(builtin_rhs("example_i", &params(&[]), &ex).is_err());
        assert!(builtin_rhs("nope", &params(&[]), &ex).is_err());
    }

    #[test]
    fn example_i_passes_validation() {
        let (m, ex) = setup(2.6, 2.6, 0.5);
        let spec = builtin_rhs("example_i", &params(&[("eps", 0.3)]), &ex).unwrap();
        let rep = validate_assumptions(&m, &ex, &spec);
        for c in &rep.checks {
            if c.name != "f3'" {
                assert!(!c.claimed || c.holds, "{c:?}");
            }
        }
        // the claimed quotient monotonicity fails: f/|t|^q+ = |t|^{r-1-q+} with
        // r - 1 - q+ = q+ kappa/q- + eps - 1 < 0 under the admissible eps range
        let f3p = rep.check("f3'").unwrap();
        assert!(f3p.claimed && !f3p.holds);
        assert!(!rep.claimed_hold);
        assert!(rep.check("f3").unwrap().holds);
        assert!(rep.structural.h3);
        assert!(!rep.check("f4").unwrap().holds);
    }

    #[test]
    fn example_ii_passes_validation() {
        let (m, ex) = setup(2.6, 2.6, 0.5);
        let spec = builtin_rhs("example_ii", &params(&[("l", 3.8), ("l_tilde", 4.1), ("m", 3.7)]), &ex).unwrap();
        let rep = validate_assumptions(&m, &ex, &spec);
        assert!(rep.claimed_hold, "{:#?}", rep.checks);
        assert!(builtin_rhs("example_ii", &params(&[("l", 3.0), ("l_tilde", 4.1), ("m", 3.7)]), &ex).is_err());
    }

    #[test]
    fn sublinear_power_fails_growth_at_infinity() {
        let (m, ex) = setup(2.2, 3.0, 1.0);
        let spec = builtin_rhs("power", &params(&[("r", ex.p_minus)]), &ex).unwrap();
        let rep = validate_assumptions(&m, &ex, &spec);
        assert!(!rep.check("f3").unwrap().holds);
        assert!(!rep.check("f3'").unwrap().holds);
    }

    #[test]
    fn h3_reduces_for_equal_exponents() {
        // mu = 0 and p = q: (H3) is p+ + 1 < p*-
        let (m, ex) = setup(1.8, 1.8, 0.0);
        let f = ex.structural_flags();
        let p_star = 2.0 * 1.8 / (2.0 - 1.8);
        assert_eq!(f.h3, 1.8 + 1.0 < p_star);
        let _ = m;
    }
}
