//! Damped Newton iteration on `φ'` (or a truncated variant) with the
//! residual norm as merit function.

use super::SolverConfig;
use crate::energy::{grad_part, hessian, Part};
use crate::error::Result;
use crate::mesh::{DiscreteFunction, ExponentField, Mesh};
use crate::rhs::RhsSpec;

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: DiscreteFunction,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Runs at most `max_steps` damped Newton steps from `u`. Steps are halved
/// until `‖g(u + αd)‖ ≤ (1 − c₁α)‖g(u)‖`; the iteration stops (unconverged)
/// when no step below `α = 2⁻²⁰` is accepted.
#[allow(clippy::too_many_arguments)]
pub fn newton_polish(
    u: &DiscreteFunction,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    part: Part,
    cfg: &SolverConfig,
    max_steps: usize,
) -> Result<NewtonOutcome> {
    let mut u = u.clone();
    let mut g = grad_part(&u, exps, mesh, rhs, part).dof_values(mesh);
    let mut r = norm(&g);
    let mut history = vec![r];
    let c1 = cfg.line_search.c1;
    for it in 0..max_steps {
        if r <= cfg.tol_residual {
            return Ok(NewtonOutcome { u, residual: r, iterations: it, converged: true, history });
        }
        let h = hessian(&u, exps, mesh, Some((rhs, part)));
        let lu = match h.factor() {
            Ok(lu) => lu,
            Err(_) => break,
        };
        let d: Vec<f64> = lu.solve(&g).iter().map(|v| -v).collect();
        if d.iter().any(|v| !v.is_finite()) {
            break;
        }
        let step = DiscreteFunction::from_dofs(mesh, &d)?;
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= 1.0 / (1u64 << 20) as f64 {
            let trial = u.axpy(alpha, &step);
            let gt = grad_part(&trial, exps, mesh, rhs, part).dof_values(mesh);
            let rt = norm(&gt);
            if rt.is_finite() && rt <= (1.0 - c1 * alpha) * r {
                accepted = Some((trial, gt, rt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((nu, ng, nr)) = accepted else { break };
        u = nu;
        g = ng;
        r = nr;
        history.push(r);
    }
    let converged = r <= cfg.tol_residual;
    let iterations = history.len() - 1;
    Ok(NewtonOutcome { u, residual: r, iterations, converged, history })
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
