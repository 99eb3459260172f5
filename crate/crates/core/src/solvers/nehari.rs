//! Nehari-manifold descent for constant-sign solutions and nodal-Nehari
//! descent with a two-parameter projection for sign-changing solutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fiber::{ray_root, Ray};
use super::newton::{newton_polish, norm};
use super::{dot, sine_mode, Precond, SolverConfig, SolverResult, Status};
use crate::energy::{dual_residual, energy_part, energy_phi, grad_part, grad_phi, probe_set, Part};
use crate::error::{LogdpError, Result};
use crate::mesh::{nodal_domains_default, truncate, DiscreteFunction, ExponentField, Mesh, Sign};
use crate::phi::{density_dt_unchecked, density_unchecked, PhiParams};
use crate::rhs::RhsSpec;
use crate::roots::{poincare_miranda_violation, poincare_miranda_zero, Rect};

/// Multipliers `(s, t)` putting `s·u₊ + t·u₋` on the nodal Nehari set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nehari0 {
    pub s: f64,
    pub t: f64,
    /// False when the supports share no element and the two fibering roots
    /// were solved independently.
    pub coupled: bool,
    /// `(⟨φ'(w), s u₊⟩, ⟨φ'(w), t u₋⟩)` at `w = s u₊ + t u₋`.
    pub pairings: (f64, f64),
}

/// Two-parameter restriction `(s, t) ↦ φ(s a + t b)` for `a ≥ 0`, `b ≤ 0`
/// with disjoint nodal supports.
struct Plane<'a> {
    elems: Vec<(f64, PhiParams, [f64; 2], [f64; 2])>,
    ray_a: Ray<'a>,
    ray_b: Ray<'a>,
}

impl<'a> Plane<'a> {
    fn new(a: &DiscreteFunction, b: &DiscreteFunction, exps: &ExponentField, mesh: &Mesh, rhs: &'a RhsSpec) -> Self {
        let elems = (0..mesh.n_elements())
            .filter_map(|e| {
                let ga = mesh.gradient_of(a.values(), e);
                let gb = mesh.gradient_of(b.values(), e);
                (ga != [0.0, 0.0] || gb != [0.0, 0.0]).then(|| (mesh.areas()[e], exps.params(e), ga, gb))
            })
            .collect();
        Self { elems, ray_a: Ray::new(a, exps, mesh, rhs, Part::Full), ray_b: Ray::new(b, exps, mesh, rhs, Part::Full) }
    }

    /// `(⟨φ'(sa+tb), a⟩, ⟨φ'(sa+tb), b⟩)`.
    fn h(&self, s: f64, t: f64) -> (f64, f64) {
        let ((ea, na), (eb, nb)) = self.h_terms(s, t);
        (ea - na, eb - nb)
    }

    /// Operator and right-hand-side terms of each pairing.
    fn h_terms(&self, s: f64, t: f64) -> ((f64, f64), (f64, f64)) {
        let (mut h1, mut h2) = (0.0, 0.0);
        for &(area, p, ga, gb) in &self.elems {
            let g = [s * ga[0] + t * gb[0], s * ga[1] + t * gb[1]];
            let tau = g[0].hypot(g[1]);
            if tau == 0.0 {
                continue;
            }
            let c = area * density_unchecked(p, tau) / tau;
            h1 += c * (g[0] * ga[0] + g[1] * ga[1]);
            h2 += c * (g[0] * gb[0] + g[1] * gb[1]);
        }
        ((h1, self.ray_a.nodal_d(s)), (h2, self.ray_b.nodal_d(t)))
    }

    /// Each pairing relative to the size of its two terms. Unlike `|H|` this
    /// does not vanish as `(s, t) → 0`.
    fn relative(&self, s: f64, t: f64) -> (f64, f64) {
        let ((ea, na), (eb, nb)) = self.h_terms(s, t);
        let rel = |e: f64, n: f64| {
            let d = e.abs() + n.abs();
            if d > 0.0 {
                (e - n) / d
            } else {
                0.0
            }
        };
        (rel(ea, na), rel(eb, nb))
    }

    fn jac(&self, s: f64, t: f64) -> [[f64; 2]; 2] {
        let mut j = [[0.0; 2]; 2];
        for &(area, p, ga, gb) in &self.elems {
            let g = [s * ga[0] + t * gb[0], s * ga[1] + t * gb[1]];
            let tau = g[0].hypot(g[1]);
            let tf = tau.max(crate::energy::EPS_REG);
            let alpha = density_unchecked(p, tf) / tf;
            let (beta, n) = if tau > 0.0 {
                (density_dt_unchecked(p, tf) - alpha, [g[0] / tau, g[1] / tau])
            } else {
                (0.0, [0.0, 0.0])
            };
            let quad = |x: [f64; 2], y: [f64; 2]| {
                alpha * (x[0] * y[0] + x[1] * y[1]) + beta * (x[0] * n[0] + x[1] * n[1]) * (y[0] * n[0] + y[1] * n[1])
            };
            j[0][0] += area * quad(ga, ga);
            j[0][1] += area * quad(ga, gb);
            j[1][1] += area * quad(gb, gb);
        }
        j[1][0] = j[0][1];
        j[0][0] -= self.ray_a.nodal_d2(s);
        j[1][1] -= self.ray_b.nodal_d2(t);
        j
    }

    fn converged(&self, s: f64, t: f64, tol: f64) -> Option<(f64, f64)> {
        let (r1, r2) = self.relative(s, t);
        let (h1, h2) = self.h(s, t);
        (r1.abs() <= tol && r2.abs() <= tol).then_some((s * h1, t * h2))
    }
}

fn elementwise_disjoint(a: &DiscreteFunction, b: &DiscreteFunction, mesh: &Mesh) -> bool {
    mesh.elements().iter().all(|tri| {
        let pa = tri.iter().any(|&i| a.values()[i] != 0.0);
        let pb = tri.iter().any(|&i| b.values()[i] != 0.0);
        !(pa && pb)
    })
}

/// Finds `(s, t)` with `⟨φ'(w), s u₊⟩ = ⟨φ'(w), t u₋⟩ = 0` at
/// `w = s u₊ + t u₋`. Supports without a common element decouple into two
/// fibering roots; otherwise a damped two-dimensional Newton iteration runs
/// from the decoupled roots, with a Poincaré-Miranda rectangle search as
/// fallback.
pub fn nehari0_project(
    u_plus: &DiscreteFunction,
    u_minus: &DiscreteFunction,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    cfg: &SolverConfig,
) -> Result<Nehari0> {
    project0(u_plus, u_minus, exps, mesh, rhs, cfg, (1.0, 1.0))
}

#[allow(clippy::too_many_arguments)]
fn project0(
    a: &DiscreteFunction,
    b: &DiscreteFunction,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    cfg: &SolverConfig,
    start: (f64, f64),
) -> Result<Nehari0> {
    if a.values().iter().any(|&v| v < 0.0) || b.values().iter().any(|&v| v > 0.0) {
        return Err(LogdpError::Domain("need u_plus >= 0 and u_minus <= 0".into()));
    }
    if a.is_zero() || b.is_zero() {
        return Err(LogdpError::Collapse("one part of the sign-changing iterate vanished".into()));
    }
    if a.values().iter().zip(b.values()).any(|(x, y)| *x != 0.0 && *y != 0.0) {
        return Err(LogdpError::Domain("parts must have disjoint nodal supports".into()));
    }
    let plane = Plane::new(a, b, exps, mesh, rhs);
    let ra = ray_root(&plane.ray_a, cfg, start.0)?;
    let rb = ray_root(&plane.ray_b, cfg, start.1)?;
    if elementwise_disjoint(a, b, mesh) {
        return Ok(Nehari0 { s: ra.t, t: rb.t, coupled: false, pairings: (ra.t * ra.pairing, rb.t * rb.pairing) });
    }
    // coupled: Newton on H from the decoupled roots
    let (mut s, mut t) = (ra.t, rb.t);
    for _ in 0..60 {
        if let Some(p) = plane.converged(s, t, cfg.tol_fiber) {
            return Ok(Nehari0 { s, t, coupled: true, pairings: p });
        }
        let (h1, h2) = plane.h(s, t);
        let j = plane.jac(s, t);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            break;
        }
        let ds = -(j[1][1] * h1 - j[0][1] * h2) / det;
        let dt = -(-j[1][0] * h1 + j[0][0] * h2) / det;
        let merit = |(r1, r2): (f64, f64)| r1 * r1 + r2 * r2;
        let m0 = merit(plane.relative(s, t));
        let mut lam = 1.0;
        let mut moved = false;
        while lam > 1e-6 {
            let (ns, nt) = (s + lam * ds, t + lam * dt);
            if ns > 0.0 && nt > 0.0 && merit(plane.relative(ns, nt)) < (1.0 - 1e-4 * lam) * m0 {
                s = ns;
                t = nt;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if let Some(p) = plane.converged(s, t, cfg.tol_fiber) {
        return Ok(Nehari0 { s, t, coupled: true, pairings: p });
    }
    // Poincaré-Miranda on d = −H over a box around the decoupled roots
    let mut d = |s: f64, t: f64| {
        let (h1, h2) = plane.h(s, t);
        (-h1, -h2)
    };
    let mut widen = 8.0;
    for _ in 0..4 {
        let rect = Rect { s_lo: ra.t / widen, s_hi: ra.t * widen, t_lo: rb.t / widen, t_hi: rb.t * widen };
        if poincare_miranda_violation(&mut d, rect, 16) == 0.0 {
            let z = poincare_miranda_zero(&mut d, rect, 1e-15, 300)?;
            let (h1, h2) = plane.h(z.s, z.t);
            return Ok(Nehari0 { s: z.s, t: z.t, coupled: true, pairings: (z.s * h1, z.t * h2) });
        }
        widen *= 4.0;
    }
    Err(LogdpError::Convergence("nodal Nehari projection failed".into()))
}

/// Hooks distinguishing the constant-sign and sign-changing descents.
trait Scheme {
    fn part(&self) -> Part;
    /// Projects onto the constraint set; `hint` carries the last multipliers.
    fn project(&self, w: &DiscreteFunction, hint: &[f64]) -> Result<(DiscreteFunction, Vec<f64>)>;
    /// Whether a Newton limit is an acceptable solution.
    fn admissible(&self, w: &DiscreteFunction) -> bool;
}

struct ConstantSign<'a> {
    sign: Sign,
    exps: &'a ExponentField,
    mesh: &'a Mesh,
    rhs: &'a RhsSpec,
    cfg: &'a SolverConfig,
}

impl Scheme for ConstantSign<'_> {
    fn part(&self) -> Part {
        self.sign.into()
    }

    fn project(&self, w: &DiscreteFunction, hint: &[f64]) -> Result<(DiscreteFunction, Vec<f64>)> {
        let c = truncate(w, self.sign).scaled(self.sign.factor());
        if c.is_zero() {
            return Err(LogdpError::Collapse("iterate left the cone".into()));
        }
        let ray = Ray::new(&c, self.exps, self.mesh, self.rhs, self.part());
        let r = ray_root(&ray, self.cfg, hint.first().copied().unwrap_or(1.0))?;
        Ok((c.scaled(r.t), vec![r.t]))
    }

    fn admissible(&self, w: &DiscreteFunction) -> bool {
        let wrong = truncate(w, if self.sign == Sign::Plus { Sign::Minus } else { Sign::Plus }).sup_norm();
        !w.is_zero()
            && wrong <= 1e-8 * w.sup_norm()
            && energy_phi(w, self.exps, self.mesh, self.rhs) > 0.0
            && on_nehari(self, w)
    }
}

struct SignChanging<'a> {
    exps: &'a ExponentField,
    mesh: &'a Mesh,
    rhs: &'a RhsSpec,
    cfg: &'a SolverConfig,
}

impl Scheme for SignChanging<'_> {
    fn part(&self) -> Part {
        Part::Full
    }

    fn project(&self, w: &DiscreteFunction, hint: &[f64]) -> Result<(DiscreteFunction, Vec<f64>)> {
        let a = truncate(w, Sign::Plus);
        let b = truncate(w, Sign::Minus).neg();
        let start = (hint.first().copied().unwrap_or(1.0), hint.get(1).copied().unwrap_or(1.0));
        let p = project0(&a, &b, self.exps, self.mesh, self.rhs, self.cfg, start)?;
        Ok((a.scaled(p.s).axpy(p.t, &b), vec![p.s, p.t]))
    }

    fn admissible(&self, w: &DiscreteFunction) -> bool {
        let nd = nodal_domains_default(self.mesh, w);
        nd.n_pos >= 1 && nd.n_neg >= 1 && energy_phi(w, self.exps, self.mesh, self.rhs) > 0.0 && on_nehari(self, w)
    }
}

/// Largest deviation of a projection multiplier from 1 for a Newton limit to
/// count as lying on the constraint set. Newton can also land on the trivial
/// critical point, whose tiny iterates project with multipliers far above 1.
const NEHARI_SLACK: f64 = 1e-3;

fn on_nehari<S: Scheme>(scheme: &S, w: &DiscreteFunction) -> bool {
    scheme.project(w, &[1.0, 1.0]).is_ok_and(|(_, m)| m.iter().all(|t| (t - 1.0).abs() <= NEHARI_SLACK))
}

struct Descent {
    u: DiscreteFunction,
    iterations: usize,
    newton_iterations: usize,
    t_history: Vec<Vec<f64>>,
    residual_history: Vec<f64>,
    status: Status,
}

/// Newton is first attempted once the residual has dropped by this factor,
/// then every `NEWTON_RETRY` iterations.
const NEWTON_GATE: f64 = 1e-2;
const NEWTON_RETRY: usize = 25;
const NEWTON_STEPS: usize = 40;

fn descend<S: Scheme>(
    scheme: &S,
    w0: &DiscreteFunction,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    cfg: &SolverConfig,
) -> Result<Descent> {
    let precond = Precond::new(cfg.preconditioner, mesh)?;
    let part = scheme.part();
    let (mut w, mut mult) = scheme.project(w0, &[1.0, 1.0])?;
    let mut e = energy_part(&w, exps, mesh, rhs, part);
    let mut t_history = vec![mult.clone()];
    let mut residual_history = Vec::new();
    let mut alpha = 1.0;
    let mut r0: Option<f64> = None;
    let mut next_newton = 0usize;
    let mut newton_iterations = 0;
    let (c1, back) = (cfg.line_search.c1, cfg.line_search.backtrack);
    let mut it = 0;
    let finish = |u, it, ni, th, rh, status| Descent {
        u,
        iterations: it,
        newton_iterations: ni,
        t_history: th,
        residual_history: rh,
        status,
    };
    loop {
        let g = grad_part(&w, exps, mesh, rhs, part).dof_values(mesh);
        let r = norm(&g);
        residual_history.push(r);
        if !r.is_finite() || !e.is_finite() {
            return Ok(finish(w, it, newton_iterations, t_history, residual_history, Status::Diverged));
        }
        if r <= cfg.tol_residual {
            return Ok(finish(w, it, newton_iterations, t_history, residual_history, Status::Converged));
        }
        let r0v = *r0.get_or_insert(r);
        let stalled = it >= cfg.max_iters;
        if (it >= next_newton && r <= NEWTON_GATE * r0v) || stalled {
            let out = newton_polish(&w, exps, mesh, rhs, part, cfg, NEWTON_STEPS)?;
            newton_iterations += out.iterations;
            if out.converged && scheme.admissible(&out.u) {
                residual_history.extend_from_slice(&out.history[1..]);
                return Ok(finish(out.u, it, newton_iterations, t_history, residual_history, Status::Converged));
            }
            next_newton = it + NEWTON_RETRY;
        }
        if stalled {
            return Ok(finish(w, it, newton_iterations, t_history, residual_history, Status::MaxIters));
        }
        it += 1;
        let d = precond.apply(&g);
        let slope = dot(&g, &d);
        let step = DiscreteFunction::from_dofs(mesh, &d)?;
        let mut accepted = false;
        while alpha > 1e-16 {
            let trial = w.axpy(-alpha, &step);
            match scheme.project(&trial, &mult) {
                Ok((pw, pm)) => {
                    let et = energy_part(&pw, exps, mesh, rhs, part);
                    if et <= e - c1 * alpha * slope {
                        w = pw;
                        e = et;
                        mult = pm;
                        accepted = true;
                        break;
                    }
                }
                // a trial point off the constraint set's reach: shorten the step
                Err(
                    LogdpError::Collapse(_)
                    | LogdpError::NoBracket(_)
                    | LogdpError::Assumption(_)
                    | LogdpError::Convergence(_),
                ) => {}
                Err(err) => return Err(err),
            }
            alpha *= back;
        }
        if !accepted {
            // no admissible decrease: one last Newton attempt decides
            let out = newton_polish(&w, exps, mesh, rhs, part, cfg, NEWTON_STEPS)?;
            newton_iterations += out.iterations;
            if out.converged && scheme.admissible(&out.u) {
                residual_history.extend_from_slice(&out.history[1..]);
                return Ok(finish(out.u, it, newton_iterations, t_history, residual_history, Status::Converged));
            }
            return Ok(finish(w, it, newton_iterations, t_history, residual_history, Status::Diverged));
        }
        t_history.push(mult.clone());
        alpha = (alpha / back).min(1e6);
    }
}

fn finalize(
    d: Descent,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    cfg: &SolverConfig,
    restarts: usize,
) -> SolverResult {
    let gv = grad_phi(&d.u, exps, mesh, rhs);
    let dr = dual_residual(&gv, exps, mesh, &probe_set(mesh));
    let nd = nodal_domains_default(mesh, &d.u);
    let status = match d.status {
        Status::Converged if dr.euclidean > cfg.tol_residual => Status::MaxIters,
        s => s,
    };
    SolverResult {
        energy: energy_phi(&d.u, exps, mesh, rhs),
        residual: dr.euclidean,
        probe_residual: dr.probe,
        iterations: d.iterations,
        newton_iterations: d.newton_iterations,
        t_history: d.t_history,
        residual_history: d.residual_history,
        nodal: (nd.n_pos, nd.n_neg),
        status,
        restarts,
        u: d.u,
    }
}

/// Constant-sign critical point of `φ` of the requested sign: Nehari descent
/// on `φ±` restricted to the cone, polished by Newton on `φ±'`.
pub fn solve_constant_sign(
    sign: Sign,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    cfg: &SolverConfig,
    u0: Option<&DiscreteFunction>,
) -> Result<SolverResult> {
    cfg.validate()?;
    let start = match u0 {
        Some(u) => DiscreteFunction::new(mesh, u.values().to_vec())?,
        None => sine_mode(mesh, 1.0, 1.0).scaled(sign.factor()),
    };
    let scheme = ConstantSign { sign, exps, mesh, rhs, cfg };
    let d = descend(&scheme, &start, exps, mesh, rhs, cfg)?;
    let res = finalize(d, exps, mesh, rhs, cfg, 0);
    if res.u.is_zero() || !(res.energy > 0.0) {
        return Err(LogdpError::Collapse(format!("constant-sign iterate has energy {}", res.energy)));
    }
    Ok(res)
}

/// Positive bump on the left half, negative bump on the right, with the
/// negative lobe scaled by `ratio` and optional seeded noise.
fn two_bump(mesh: &Mesh, ratio: f64, noise: Option<(u64, f64)>) -> DiscreteFunction {
    let base = sine_mode(mesh, 2.0, 1.0);
    let mut vals: Vec<f64> = base.values().iter().map(|&v| if v < 0.0 { ratio * v } else { v }).collect();
    if let Some((seed, amp)) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (v, &b) in vals.iter_mut().zip(mesh.boundary_mask()) {
            if !b {
                *v += amp * (rng.gen::<f64>() - 0.5);
            }
        }
    }
    DiscreteFunction::new(mesh, vals).expect("boundary values stay zero")
}

/// Least-energy sign-changing critical point: descent on the nodal Nehari
/// set polished by Newton on `φ'`. Up to three restarts from rescaled,
/// perturbed two-bump data when a part collapses.
pub fn solve_sign_changing(
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    cfg: &SolverConfig,
    u0: Option<&DiscreteFunction>,
) -> Result<SolverResult> {
    cfg.validate()?;
    let scheme = SignChanging { exps, mesh, rhs, cfg };
    let mut last_err = None;
    for attempt in 0..4usize {
        let start = match (attempt, u0) {
            (0, Some(u)) => DiscreteFunction::new(mesh, u.values().to_vec())?,
            (0, None) => two_bump(mesh, 1.0, None),
            (k, _) => two_bump(mesh, 1.0 + 0.5 * k as f64, Some((cfg.seed.wrapping_add(k as u64), 0.2))),
        };
        match descend(&scheme, &start, exps, mesh, rhs, cfg) {
            Ok(d) => {
                let res = finalize(d, exps, mesh, rhs, cfg, attempt);
                if res.nodal.0 >= 1 && res.nodal.1 >= 1 {
                    return Ok(res);
                }
                last_err = Some(LogdpError::Collapse(format!("nodal count {:?} after descent", res.nodal)));
            }
            Err(e @ LogdpError::Collapse(_)) | Err(e @ LogdpError::NoBracket(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| LogdpError::Collapse("sign-changing descent failed".into())))
}
