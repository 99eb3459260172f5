//! Unique solution of `A(u) = g` for a right-hand side independent of `u`,
//! by damped Newton on the convex energy `I(u) − ⟨g, u⟩`.

use super::newton::norm;
use super::{dot, Precond, SolverConfig, SolverResult, Status};
use crate::energy::{apply_a, dual_residual, energy_i, hessian, load_vector, probe_set, DualVector, Part};
use crate::error::{LogdpError, Result};
use crate::mesh::{nodal_domains_default, DiscreteFunction, ExponentField, Mesh};
use crate::rhs::RhsSpec;

/// Dual vector of `v ↦ ∫ f(x) v` for a fixed right-hand side.
pub fn fixed_load(mesh: &Mesh, rhs: &RhsSpec) -> Result<DualVector> {
    if !rhs.is_fixed() {
        return Err(LogdpError::Config(format!("rhs '{}' depends on u", rhs.name)));
    }
    Ok(load_vector(&DiscreteFunction::zeros(mesh), mesh, rhs, Part::Full))
}

fn energy(u: &DiscreteFunction, g: &DualVector, exps: &ExponentField, mesh: &Mesh) -> f64 {
    energy_i(u, exps, mesh) - g.pair(mesh, u)
}

fn residual(u: &DiscreteFunction, g: &DualVector, exps: &ExponentField, mesh: &Mesh) -> Vec<f64> {
    apply_a(u, exps, mesh).sub(g).dof_values(mesh)
}

pub fn solve_fixed_rhs(
    g: &DualVector,
    exps: &ExponentField,
    mesh: &Mesh,
    cfg: &SolverConfig,
    u0: Option<&DiscreteFunction>,
) -> Result<SolverResult> {
    cfg.validate()?;
    if g.values.len() != mesh.n_nodes() {
        return Err(LogdpError::Shape { expected: mesh.n_nodes(), got: g.values.len() });
    }
    let mut u = match u0 {
        Some(u0) => DiscreteFunction::new(mesh, u0.values().to_vec())?,
        None => DiscreteFunction::zeros(mesh),
    };
    let precond = Precond::new(cfg.preconditioner, mesh)?;
    let (c1, back) = (cfg.line_search.c1, cfg.line_search.backtrack);
    let mut e = energy(&u, g, exps, mesh);
    let mut r = residual(&u, g, exps, mesh);
    let mut history = vec![norm(&r)];
    let mut iterations = 0;
    let mut status = Status::MaxIters;
    while iterations < cfg.max_iters {
        if norm(&r) <= cfg.tol_residual {
            status = Status::Converged;
            break;
        }
        iterations += 1;
        // Newton direction; the Hessian is SPD, so it is a descent direction
        let newton = hessian(&u, exps, mesh, None).factor().ok().map(|lu| lu.solve(&r));
        let mut accepted = false;
        for dir in [newton, Some(precond.apply(&r))].into_iter().flatten() {
            let slope = dot(&r, &dir);
            if !(slope > 0.0) || !slope.is_finite() {
                continue;
            }
            let step = DiscreteFunction::from_dofs(mesh, &dir)?;
            let mut alpha = 1.0;
            for _ in 0..80 {
                let trial = u.axpy(-alpha, &step);
                let et = energy(&trial, g, exps, mesh);
                if et <= e - c1 * alpha * slope {
                    u = trial;
                    e = et;
                    accepted = true;
                    break;
                }
                alpha *= back;
            }
            if accepted {
                break;
            }
        }
        r = residual(&u, g, exps, mesh);
        history.push(norm(&r));
        if !accepted {
            // energy decrease is below round-off: accept the current point as
            // final and let the residual decide the status
            status = if norm(&r) <= cfg.tol_residual { Status::Converged } else { Status::Diverged };
            break;
        }
        if !e.is_finite() {
            status = Status::Diverged;
            break;
        }
    }
    if status == Status::MaxIters && norm(&r) <= cfg.tol_residual {
        status = Status::Converged;
    }
    let rv = apply_a(&u, exps, mesh).sub(g);
    let dr = dual_residual(&rv, exps, mesh, &probe_set(mesh));
    let nd = nodal_domains_default(mesh, &u);
    Ok(SolverResult {
        energy: e,
        residual: dr.euclidean,
        probe_residual: dr.probe,
        iterations,
        newton_iterations: iterations,
        t_history: Vec::new(),
        residual_history: history,
        nodal: (nd.n_pos, nd.n_neg),
        status,
        restarts: 0,
        u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::laplace_stiffness;
    use crate::mesh::build_rect_mesh;
    use crate::rhs::builtin_rhs;
    use std::collections::BTreeMap;

    fn constant(ex: &ExponentField, c: f64) -> RhsSpec {
        let mut prm = BTreeMap::new();
        prm.insert("c".to_string(), c);
        builtin_rhs("constant", &prm, ex).unwrap()
    }

    #[test]
    fn zero_load_gives_zero() {
        let m = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 6, 6).unwrap();
        let ex = ExponentField::constant(&m, 1.7, 2.4, 1.0).unwrap();
        let g = DualVector::zeros(m.n_nodes());
        let res = solve_fixed_rhs(&g, &ex, &m, &SolverConfig::default(), None).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert!(res.u.is_zero());
    }

    #[test]
    fn linear_case_matches_stiffness_solve() {
        let m = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 16, 16).unwrap();
        let ex = ExponentField::constant(&m, 2.0, 2.0, 0.0).unwrap();
        let g = fixed_load(&m, &constant(&ex, 1.0)).unwrap();
        let cfg = SolverConfig { tol_residual: 1e-13, ..SolverConfig::default() };
        let res = solve_fixed_rhs(&g, &ex, &m, &cfg, None).unwrap();
        let direct = laplace_stiffness(&m).factor().unwrap().solve(&g.dof_values(&m));
        let direct = DiscreteFunction::from_dofs(&m, &direct).unwrap();
        assert!(res.u.axpy(-1.0, &direct).sup_norm() < 1e-12);
        assert!(res.u.values().iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn uniqueness_from_different_starts() {
        let m = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 10, 10).unwrap();
        let ex = ExponentField::from_fns(&m, |x, _| 1.6 + x, |x, y| 2.8 + 0.2 * y + 0.1 * x, |_, y| y).unwrap();
        let g = fixed_load(&m, &constant(&ex, 3.0)).unwrap();
        let cfg = SolverConfig { tol_residual: 1e-10, ..SolverConfig::default() };
        let a = solve_fixed_rhs(&g, &ex, &m, &cfg, None).unwrap();
        let start = DiscreteFunction::from_fn(&m, |x, y| -5.0 * (9.0 * x * y).sin());
        let b = solve_fixed_rhs(&g, &ex, &m, &cfg, Some(&start)).unwrap();
        assert_eq!((a.status, b.status), (Status::Converged, Status::Converged));
        assert!(a.u.axpy(-1.0, &b.u).sup_norm() <= 10.0 * cfg.tol_residual * 100.0);
        assert!(a.u.values().iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn u_dependent_rhs_is_rejected() {
        let m = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap();
        let ex = ExponentField::constant(&m, 2.0, 2.0, 0.0).unwrap();
        let mut prm = BTreeMap::new();
        prm.insert("r".to_string(), 3.0);
        let rhs = builtin_rhs("power", &prm, &ex).unwrap();
        assert!(matches!(fixed_load(&m, &rhs), Err(LogdpError::Config(_))));
    }
}
