//! Browser bindings: the scalar function `H_log` with `f_ε`, the fibering
//! map of a bump, and a small-mesh solve. Everything returns flat `f64`
//! arrays so the page can draw them directly.

use std::collections::BTreeMap;

use logdp::mesh::{build_rect_mesh, DiscreteFunction, ExponentField, Mesh, Sign};
use logdp::phi::{f_epsilon, hlog_density, hlog_eval, log_constants, PhiParams};
use logdp::rhs::{builtin_rhs, RhsSpec};
use logdp::solvers::{fibering_profile, fibering_root, solve_constant_sign, solve_sign_changing, SolverConfig};
use wasm_bindgen::prelude::*;

fn js(e: impl ToString) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// `[t0, kappa]`.
pub fn constants() -> Vec<f64> {
    let c = log_constants();
    vec![c.t0, c.kappa]
}

/// Rows `t, H_log(t), a(t), f_ε(t)` at `n` points of `(0, t_max]`.
pub fn curves(p: f64, q: f64, mu: f64, eps: f64, t_max: f64, n: usize) -> Result<Vec<f64>, String> {
    let par = PhiParams::new(p, q, mu).map_err(|e| e.to_string())?;
    if !(t_max > 0.0 && n >= 2) {
        return Err("need t_max > 0 and at least two points".into());
    }
    let mut out = Vec::with_capacity(4 * n);
    for k in 1..=n {
        let t = t_max * k as f64 / n as f64;
        out.push(t);
        out.push(hlog_eval(par, t).map_err(|e| e.to_string())?);
        out.push(hlog_density(par, t).map_err(|e| e.to_string())?);
        out.push(f_epsilon(eps, t).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn problem(n: usize, p: f64, q: f64, mu: f64) -> Result<(Mesh, ExponentField), String> {
    if !(2..=48).contains(&n) {
        return Err("mesh size must lie in 2..=48".into());
    }
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), n, n).map_err(|e| e.to_string())?;
    let exps = ExponentField::constant(&mesh, p, q, mu).map_err(|e| e.to_string())?;
    Ok((mesh, exps))
}

fn rhs(name: &str, value: f64, exps: &ExponentField) -> Result<RhsSpec, String> {
    let key = match name {
        "power" => "r",
        "example_i" => "eps",
        other => return Err(format!("unknown right-hand side '{other}'")),
    };
    builtin_rhs(name, &BTreeMap::from([(key.to_string(), value)]), exps).map_err(|e| e.to_string())
}

/// Fibering map `θ(t) = φ(t u)` of the bump `u = sin(πx) sin(πy)` scaled by
/// `amp`. Returns `[t_u, θ(t_u), t₁, θ₁, t₂, θ₂, ...]` with `samples`
/// log-spaced points on `[t_u/100, 100 t_u]`.
#[allow(clippy::too_many_arguments)]
pub fn fibering(
    n: usize,
    p: f64,
    q: f64,
    mu: f64,
    rhs_name: &str,
    value: f64,
    amp: f64,
    samples: usize,
) -> Result<Vec<f64>, String> {
    let (mesh, exps) = problem(n, p, q, mu)?;
    let f = rhs(rhs_name, value, &exps)?;
    let pi = std::f64::consts::PI;
    let u = DiscreteFunction::from_fn(&mesh, |x, y| amp * (pi * x).sin() * (pi * y).sin());
    let root = fibering_root(&u, &exps, &mesh, &f, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let prof =
        fibering_profile(&u, &exps, &mesh, &f, root.t / 100.0, root.t * 100.0, samples).map_err(|e| e.to_string())?;
    let mut out = vec![root.t, root.energy];
    for pt in prof {
        out.push(pt.t);
        out.push(pt.theta);
    }
    Ok(out)
}

/// Solves on an `n × n` mesh of the unit square. `mode` is `positive`,
/// `negative` or `nodal`. Returns
/// `[energy, residual, n_pos, n_neg, iterations, x₀, y₀, u₀, x₁, ...]`.
#[allow(clippy::too_many_arguments)]
pub fn solve(n: usize, p: f64, q: f64, mu: f64, rhs_name: &str, value: f64, mode: &str) -> Result<Vec<f64>, String> {
    let (mesh, exps) = problem(n, p, q, mu)?;
    let f = rhs(rhs_name, value, &exps)?;
    let cfg = SolverConfig { max_iters: 800, ..SolverConfig::default() };
    let res = match mode {
        "positive" => solve_constant_sign(Sign::Plus, &exps, &mesh, &f, &cfg, None),
        "negative" => solve_constant_sign(Sign::Minus, &exps, &mesh, &f, &cfg, None),
        "nodal" => solve_sign_changing(&exps, &mesh, &f, &cfg, None),
        other => return Err(format!("unknown mode '{other}'")),
    }
    .map_err(|e| e.to_string())?;
    let mut out = vec![res.energy, res.residual, res.nodal.0 as f64, res.nodal.1 as f64, res.iterations as f64];
    for (xy, v) in mesh.nodes().iter().zip(res.u.values()) {
        out.extend([xy[0], xy[1], *v]);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = logConstants)]
pub fn log_constants_js() -> Vec<f64> {
    constants()
}

#[wasm_bindgen(js_name = scalarCurves)]
pub fn curves_js(p: f64, q: f64, mu: f64, eps: f64, t_max: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    curves(p, q, mu, eps, t_max, n).map_err(js)
}

#[wasm_bindgen(js_name = fiberingMap)]
#[allow(clippy::too_many_arguments)]
pub fn fibering_js(
    n: usize,
    p: f64,
    q: f64,
    mu: f64,
    rhs_name: &str,
    value: f64,
    amp: f64,
    samples: usize,
) -> Result<Vec<f64>, JsValue> {
    fibering(n, p, q, mu, rhs_name, value, amp, samples).map_err(js)
}

#[wasm_bindgen(js_name = solveProblem)]
pub fn solve_js(
    n: usize,
    p: f64,
    q: f64,
    mu: f64,
    rhs_name: &str,
    value: f64,
    mode: &str,
) -> Result<Vec<f64>, JsValue> {
    solve(n, p, q, mu, rhs_name, value, mode).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_have_four_columns() {
        let c = curves(2.0, 3.0, 1.0, 0.3, 10.0, 50).unwrap();
        assert_eq!(c.len(), 200);
        // H_log(10) = 100 + 1000 log(e + 10)
        let last = &c[196..];
        assert!((last[1] - (100.0 + 1000.0 * (std::f64::consts::E + 10.0).ln())).abs() < 1e-9);
        assert!(curves(2.0, 1.0, 1.0, 0.3, 10.0, 50).is_err());
    }

    #[test]
    fn fibering_peaks_at_the_root() {
        let out = fibering(8, 2.0, 2.0, 0.0, "power", 4.0, 1.0, 101).unwrap();
        let (t, peak) = (out[0], out[1]);
        let thetas: Vec<f64> = out[2..].chunks(2).map(|c| c[1]).collect();
        assert!(thetas.iter().all(|&v| v <= peak * (1.0 + 1e-12)));
        assert!((out[2 + 2 * 50] - t).abs() < 1e-9 * t);
    }

    #[test]
    fn small_solves() {
        let pos = solve(8, 2.6, 2.6, 0.5, "example_i", 0.5, "positive").unwrap();
        let nodal = solve(8, 2.6, 2.6, 0.5, "example_i", 0.5, "nodal").unwrap();
        assert_eq!((nodal[2], nodal[3]), (1.0, 1.0));
        assert!(nodal[0] > pos[0] && pos[0] > 0.0);
        assert_eq!(pos.len(), 5 + 3 * 81);
        assert!(pos[5..].chunks(3).all(|c| c[2] >= -1e-12));
        assert!(solve(8, 2.6, 2.6, 0.5, "example_i", 0.5, "sideways").is_err());
        assert!(solve(100, 2.6, 2.6, 0.5, "example_i", 0.5, "nodal").is_err());
    }
}
