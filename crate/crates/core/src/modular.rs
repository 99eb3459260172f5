//! Modulars and Luxemburg norms of `H_log` and of variable-exponent
//! Lebesgue spaces for discrete fields, with sandwich bounds.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{LogdpError, Result};
use crate::mesh::{gradient_magnitudes, DiscreteFunction, ExponentField, Mesh};
use crate::phi::{f_epsilon_shape, log_constants};
use crate::roots::illinois_ftol;

/// Default residual tolerance for Luxemburg norm solves.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModularReport {
    pub p_part: f64,
    pub logq_part: f64,
    pub total: f64,
}

/// Weighted samples `(weight, element, value)` over which a modular is summed.
struct Samples {
    w: Vec<f64>,
    e: Vec<usize>,
    v: Vec<f64>,
}

impl Samples {
    fn per_element(g: &[f64], mesh: &Mesh) -> Result<Self> {
        if g.len() != mesh.n_elements() {
            return Err(LogdpError::Shape { expected: mesh.n_elements(), got: g.len() });
        }
        if let Some(bad) = g.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(LogdpError::Domain(format!("field value {bad} is not a finite nonnegative number")));
        }
        Ok(Self { w: mesh.areas().to_vec(), e: (0..g.len()).collect(), v: g.to_vec() })
    }

    /// Vertex rule for `|u|`: each element contributes `area/3` per vertex.
    fn vertex_rule(u: &DiscreteFunction, mesh: &Mesh) -> Self {
        let n = 3 * mesh.n_elements();
        let (mut w, mut e, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (k, tri) in mesh.elements().iter().enumerate() {
            let a = mesh.areas()[k] / 3.0;
            for &i in tri {
                w.push(a);
                e.push(k);
                v.push(u.values()[i].abs());
            }
        }
        Self { w, e, v }
    }

    fn modular(&self, exps: &ExponentField, scale: f64) -> ModularReport {
        let (mut pp, mut lq) = (0.0, 0.0);
        for k in 0..self.w.len() {
            let t = self.v[k] * scale;
            if t == 0.0 {
                continue;
            }
            let e = self.e[k];
            pp += self.w[k] * t.powf(exps.p_at[e]);
            let mu = exps.mu_at[e];
            if mu != 0.0 {
                lq += self.w[k] * mu * t.powf(exps.q_at[e]) * (E + t).ln();
            }
        }
        ModularReport { p_part: pp, logq_part: lq, total: pp + lq }
    }

    fn var_exp(&self, r: &[f64], scale: f64) -> f64 {
        (0..self.w.len())
            .map(|k| {
                let t = self.v[k] * scale;
                if t == 0.0 {
                    0.0
                } else {
                    self.w[k] * t.powf(r[self.e[k]])
                }
            })
            .sum()
    }

    fn is_zero(&self) -> bool {
        self.v.iter().all(|&v| v == 0.0)
    }
}

/// Solves `ρ(1/λ) = 1` for a strictly decreasing modular-of-scale map,
/// bracketing from `c = max(ρ(1), ρ(1)^{1/r₋})` and expanding by 10.
fn luxemburg_solve<R: Fn(f64) -> f64>(rho_at: R, r_minus: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(LogdpError::Domain(format!("tolerance {tol} must be positive")));
    }
    let rho1 = rho_at(1.0);
    let c = rho1.max(rho1.powf(1.0 / r_minus));
    let f = |lam: f64| rho_at(1.0 / lam) - 1.0;
    let (mut lo, mut hi) = (c * 1e-2, c * 1e2);
    let mut steps = 0;
    while f(lo) <= 0.0 || f(hi) >= 0.0 {
        if f(lo) <= 0.0 {
            lo /= 10.0;
        }
        if f(hi) >= 0.0 {
            hi *= 10.0;
        }
        steps += 1;
        if steps > 60 || !(lo > 0.0) || !hi.is_finite() {
            return Err(LogdpError::Convergence("Luxemburg bracket expansion failed".into()));
        }
    }
    // solve in log λ, where the map is close to linear; aim below `tol` so
    // that a differently summed modular still lands inside it
    let target = (tol * 1e-2).max(1e-14);
    let s = illinois_ftol(|s: f64| f(s.exp()), lo.ln(), hi.ln(), target, 400)?;
    Ok(s.exp())
}

/// `Σ_e area_e · H_log(x_e, g_e)` split into the power and log parts.
pub fn modular_hlog(g: &[f64], exps: &ExponentField, mesh: &Mesh) -> Result<ModularReport> {
    exps.check_mesh(mesh)?;
    Ok(Samples::per_element(g, mesh)?.modular(exps, 1.0))
}

/// Luxemburg norm of a per-element field: `λ` with `ρ(g/λ) = 1 ± tol`.
pub fn luxemburg_norm(g: &[f64], exps: &ExponentField, mesh: &Mesh, tol: f64) -> Result<f64> {
    exps.check_mesh(mesh)?;
    let s = Samples::per_element(g, mesh)?;
    if s.is_zero() {
        return Ok(0.0);
    }
    luxemburg_solve(|scale| s.modular(exps, scale).total, exps.p_minus, tol)
}

/// Modular of `|u|` under the vertex rule.
pub fn modular_hlog_nodal(u: &DiscreteFunction, exps: &ExponentField, mesh: &Mesh) -> Result<ModularReport> {
    exps.check_mesh(mesh)?;
    check_len(u, mesh)?;
    Ok(Samples::vertex_rule(u, mesh).modular(exps, 1.0))
}

/// Luxemburg norm `‖u‖_{H_log}` under the vertex rule.
pub fn norm_hlog_nodal(u: &DiscreteFunction, exps: &ExponentField, mesh: &Mesh, tol: f64) -> Result<f64> {
    exps.check_mesh(mesh)?;
    check_len(u, mesh)?;
    let s = Samples::vertex_rule(u, mesh);
    if s.is_zero() {
        return Ok(0.0);
    }
    luxemburg_solve(|scale| s.modular(exps, scale).total, exps.p_minus, tol)
}

/// `ρ(|u|) + ρ(|∇u|)`.
pub fn modular_sobolev(u: &DiscreteFunction, exps: &ExponentField, mesh: &Mesh) -> Result<ModularReport> {
    let a = modular_hlog_nodal(u, exps, mesh)?;
    let b = modular_hlog(&gradient_magnitudes(mesh, u), exps, mesh)?;
    Ok(ModularReport { p_part: a.p_part + b.p_part, logq_part: a.logq_part + b.logq_part, total: a.total + b.total })
}

/// `‖∇u‖_{H_log}`, the norm used on the zero-trace space.
pub fn norm_grad(u: &DiscreteFunction, exps: &ExponentField, mesh: &Mesh, tol: f64) -> Result<f64> {
    check_len(u, mesh)?;
    luxemburg_norm(&gradient_magnitudes(mesh, u), exps, mesh, tol)
}

fn check_len(u: &DiscreteFunction, mesh: &Mesh) -> Result<()> {
    if u.values().len() != mesh.n_nodes() {
        return Err(LogdpError::Shape { expected: mesh.n_nodes(), got: u.values().len() });
    }
    Ok(())
}

fn check_exponent(r: &[f64], mesh: &Mesh) -> Result<()> {
    if r.len() != mesh.n_elements() {
        return Err(LogdpError::Shape { expected: mesh.n_elements(), got: r.len() });
    }
    if let Some(bad) = r.iter().find(|v| !(**v > 1.0) || !v.is_finite()) {
        return Err(LogdpError::Domain(format!("exponent {bad} must exceed 1")));
    }
    Ok(())
}

/// `Σ_e area_e · g_e^{r_e}`.
pub fn modular_var_exp(g: &[f64], r: &[f64], mesh: &Mesh) -> Result<f64> {
    check_exponent(r, mesh)?;
    Ok(Samples::per_element(g, mesh)?.var_exp(r, 1.0))
}

/// Luxemburg norm in `L^{r(·)}` for a per-element field.
pub fn luxemburg_var_exp(g: &[f64], r: &[f64], mesh: &Mesh, tol: f64) -> Result<f64> {
    check_exponent(r, mesh)?;
    let s = Samples::per_element(g, mesh)?;
    if s.is_zero() {
        return Ok(0.0);
    }
    let r_minus = r.iter().copied().fold(f64::INFINITY, f64::min);
    luxemburg_solve(|scale| s.var_exp(r, scale), r_minus, tol)
}

/// `‖u‖_{H_log} / ‖∇u‖_{H_log}`.
pub fn poincare_ratio(u: &DiscreteFunction, exps: &ExponentField, mesh: &Mesh, tol: f64) -> Result<f64> {
    let den = norm_grad(u, exps, mesh, tol)?;
    if den == 0.0 {
        return Err(LogdpError::Domain("gradient vanishes identically".into()));
    }
    Ok(norm_hlog_nodal(u, exps, mesh, tol)? / den)
}

/// Bounds `lower ≤ ρ ≤ upper` implied by a norm value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichBounds {
    pub lower: f64,
    pub upper: f64,
    pub low_exp: f64,
    pub high_exp: f64,
}

impl SandwichBounds {
    /// Smallest relative slack of `rho` against both bounds; negative on
    /// violation.
    pub fn slack(&self, rho: f64) -> f64 {
        let a = (rho - self.lower) / self.lower.max(f64::MIN_POSITIVE);
        let b = (self.upper - rho) / self.upper.max(f64::MIN_POSITIVE);
        a.min(b)
    }
}

fn two_power_bounds(norm: f64, a: f64, b: f64, factor: f64) -> SandwichBounds {
    let (x, y) = (norm.powf(a), norm.powf(b));
    SandwichBounds { lower: x.min(y) / factor, upper: x.max(y) * factor, low_exp: a, high_exp: b }
}

/// `min{λ^{p₋}, λ^{q₊+κ}} ≤ ρ ≤ max{λ^{p₋}, λ^{q₊+κ}}`.
pub fn sandwich_kappa(norm: f64, exps: &ExponentField) -> SandwichBounds {
    two_power_bounds(norm, exps.p_minus, exps.q_plus + log_constants().kappa, 1.0)
}

/// `a_ε⁻¹ min{λ^{p₋}, λ^{q₊+ε}} ≤ ρ ≤ a_ε max{λ^{p₋}, λ^{q₊+ε}}` for
/// `0 < ε < κ`.
pub fn sandwich_eps(norm: f64, exps: &ExponentField, eps: f64) -> Result<SandwichBounds> {
    let shape = f_epsilon_shape(eps)?.ok_or_else(|| LogdpError::Domain(format!("eps = {eps} must lie below kappa")))?;
    Ok(two_power_bounds(norm, exps.p_minus, exps.q_plus + eps, shape.a_eps))
}

/// `min{λ^{r₋}, λ^{r₊}} ≤ ρ_{r(·)} ≤ max{λ^{r₋}, λ^{r₊}}`.
pub fn sandwich_var_exp(norm: f64, r_minus: f64, r_plus: f64) -> SandwichBounds {
    two_power_bounds(norm, r_minus, r_plus, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;

    fn unit(n: usize) -> Mesh {
        build_rect_mesh((0.0, 1.0), (0.0, 1.0), n, n).unwrap()
    }

    #[test]
    fn constant_field_closed_forms() {
        let m = unit(3);
        let ex = ExponentField::constant(&m, 2.0, 3.0, 1.0).unwrap();
        let g = vec![1.0; m.n_elements()];
        let r = modular_hlog(&g, &ex, &m).unwrap();
        assert!((r.total - (1.0 + (E + 1.0).ln())).abs() < 1e-13);
        assert!((r.p_part - 1.0).abs() < 1e-13);
        assert_eq!(r.total, r.p_part + r.logq_part);
        let zero = modular_hlog(&vec![0.0; m.n_elements()], &ex, &m).unwrap();
        assert_eq!(zero.total, 0.0);
        assert_eq!(luxemburg_norm(&vec![0.0; m.n_elements()], &ex, &m, NORM_TOL).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_norm_of_constant_is_the_constant() {
        let m = unit(4);
        let ex = ExponentField::constant(&m, 2.0, 2.0, 0.0).unwrap();
        for c in [0.01, 0.7, 3.0, 250.0] {
            let n = luxemburg_norm(&vec![c; m.n_elements()], &ex, &m, 1e-12).unwrap();
            assert!((n - c).abs() < 1e-10 * c, "{n} vs {c}");
        }
    }

    #[test]
    fn norm_solves_the_unit_modular_equation() {
        let m = unit(4);
        let ex = ExponentField::from_fns(&m, |x, _| 1.5 + x, |x, y| 2.6 + x * y, |_, y| y).unwrap();
        let g: Vec<f64> = (0..m.n_elements()).map(|e| 0.1 + (e as f64 * 0.77).sin().abs() * 40.0).collect();
        let n = luxemburg_norm(&g, &ex, &m, NORM_TOL).unwrap();
        let scaled: Vec<f64> = g.iter().map(|v| v / n).collect();
        let rho = modular_hlog(&scaled, &ex, &m).unwrap().total;
        assert!((rho - 1.0).abs() <= NORM_TOL);
        let rho_g = modular_hlog(&g, &ex, &m).unwrap().total;
        assert!(sandwich_kappa(n, &ex).slack(rho_g) >= -1e-9);
        assert!(sandwich_eps(n, &ex, 0.1).unwrap().slack(rho_g) >= -1e-9);
        assert!(sandwich_eps(n, &ex, 0.5).is_err());
    }

    #[test]
    fn var_exp_trivial_values_and_norm() {
        let m = unit(3);
        let r = vec![2.7; m.n_elements()];
        assert!((modular_var_exp(&vec![1.0; m.n_elements()], &r, &m).unwrap() - 1.0).abs() < 1e-13);
        let two = vec![2.0; m.n_elements()];
        assert!((modular_var_exp(&two, &vec![2.0; m.n_elements()], &m).unwrap() - 4.0).abs() < 1e-13);
        let n = luxemburg_var_exp(&two, &vec![2.0; m.n_elements()], &m, 1e-12).unwrap();
        assert!((n - 2.0).abs() < 1e-10);
        assert!(modular_var_exp(&two, &vec![1.0; m.n_elements()], &m).is_err());
    }

    #[test]
    fn sobolev_modular_dominates_gradient_part() {
        let m = unit(6);
        let ex = ExponentField::constant(&m, 1.8, 2.4, 0.6).unwrap();
        let u = DiscreteFunction::from_fn(&m, |x, y| x * (1.0 - x) * y * (1.0 - y) * 20.0);
        let s = modular_sobolev(&u, &ex, &m).unwrap();
        let g = modular_hlog(&gradient_magnitudes(&m, &u), &ex, &m).unwrap();
        assert!(s.total >= g.total);
        assert!(s.total > 0.0);
        assert_eq!(modular_sobolev(&DiscreteFunction::zeros(&m), &ex, &m).unwrap().total, 0.0);
    }

    #[test]
    fn poincare_ratio_of_a_hat_is_below_one() {
        let m = unit(16);
        let ex = ExponentField::constant(&m, 2.0, 2.0, 0.0).unwrap();
        let u = DiscreteFunction::from_fn(&m, |x, y| (1.0 - (2.0 * x - 1.0).abs()).min(1.0 - (2.0 * y - 1.0).abs()));
        let r = poincare_ratio(&u, &ex, &m, NORM_TOL).unwrap();
        assert!(r > 0.0 && r < 1.0, "{r}");
        assert!(poincare_ratio(&DiscreteFunction::zeros(&m), &ex, &m, NORM_TOL).is_err());
    }

    #[test]
    fn negative_or_misshaped_fields_are_rejected() {
        let m = unit(2);
        let ex = ExponentField::constant(&m, 2.0, 2.0, 0.0).unwrap();
        assert!(modular_hlog(&vec![-1.0; m.n_elements()], &ex, &m).is_err());
        assert!(modular_hlog(&[1.0], &ex, &m).is_err());
    }
}
