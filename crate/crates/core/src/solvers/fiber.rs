//! Fibering maps `θ_u(t) = φ(tu)` and their unique critical point.

use serde::{Deserialize, Serialize};

use super::SolverConfig;
use crate::energy::Part;
use crate::error::{LogdpError, Result};
use crate::mesh::{DiscreteFunction, ExponentField, Mesh};
use crate::phi::{density_unchecked, potential_unchecked, PhiParams};
use crate::rhs::RhsSpec;
use crate::roots::{expand_bracket, illinois};

enum Nodal {
    /// `∫F(x, arg(tu)) = t^r · base`.
    Homogeneous { r: f64, base: f64 },
    /// Weighted samples `(weight, barycenter, u_i)`.
    Samples(Vec<(f64, [f64; 2], f64)>),
}

/// Precomputed restriction of `φ` (with the primitive restricted to `part`)
/// to the ray through `u`.
pub(crate) struct Ray<'a> {
    elems: Vec<(f64, PhiParams, f64)>,
    nodal: Nodal,
    rhs: &'a RhsSpec,
    part: Part,
}

impl<'a> Ray<'a> {
    pub(crate) fn new(u: &DiscreteFunction, exps: &ExponentField, mesh: &Mesh, rhs: &'a RhsSpec, part: Part) -> Self {
        let elems = (0..mesh.n_elements())
            .filter_map(|e| {
                let g = mesh.gradient_of(u.values(), e);
                let t = g[0].hypot(g[1]);
                (t > 0.0).then(|| (mesh.areas()[e], exps.params(e), t))
            })
            .collect();
        let nodal = match rhs.homogeneity {
            Some(r) => Nodal::Homogeneous { r, base: crate::energy::primitive_integral(u, mesh, rhs, part) },
            None => {
                let mut s = Vec::new();
                if rhs.x_independent {
                    for &i in mesh.dofs() {
                        let v = u.values()[i];
                        if v != 0.0 {
                            s.push((mesh.lumped_mass()[i], [0.0, 0.0], v));
                        }
                    }
                } else {
                    for (e, tri) in mesh.elements().iter().enumerate() {
                        let x = mesh.barycenter(e);
                        for &i in tri {
                            let v = u.values()[i];
                            if v != 0.0 {
                                s.push((mesh.areas()[e] / 3.0, x, v));
                            }
                        }
                    }
                }
                Nodal::Samples(s)
            }
        };
        Self { elems, nodal, rhs, part }
    }

    pub(crate) fn is_trivial(&self) -> bool {
        self.elems.is_empty()
    }

    pub(crate) fn theta(&self, t: f64) -> f64 {
        let i: f64 = self.elems.iter().map(|&(a, p, g)| a * potential_unchecked(p, t * g)).sum();
        i - self.nodal(t)
    }

    pub(crate) fn dtheta(&self, t: f64) -> f64 {
        let i: f64 = self.elems.iter().map(|&(a, p, g)| a * density_unchecked(p, t * g) * g).sum();
        i - self.nodal_d(t)
    }

    /// `∫F(x, arg(tu))`.
    pub(crate) fn nodal(&self, t: f64) -> f64 {
        match &self.nodal {
            Nodal::Homogeneous { r, base } => t.powf(*r) * base,
            Nodal::Samples(s) => s.iter().map(|&(w, x, v)| w * self.rhs.big_f(x, self.part.arg(t * v))).sum(),
        }
    }

    /// `d/dt ∫F(x, arg(tu))`.
    pub(crate) fn nodal_d(&self, t: f64) -> f64 {
        match &self.nodal {
            Nodal::Homogeneous { r, base } => r * t.powf(r - 1.0) * base,
            Nodal::Samples(s) => s
                .iter()
                .map(|&(w, x, v)| {
                    let tv = t * v;
                    if self.part.active(tv) {
                        w * self.rhs.f(x, self.part.arg(tv)) * v
                    } else {
                        0.0
                    }
                })
                .sum(),
        }
    }

    /// `d²/dt² ∫F(x, arg(tu))`.
    pub(crate) fn nodal_d2(&self, t: f64) -> f64 {
        match &self.nodal {
            Nodal::Homogeneous { r, base } => r * (r - 1.0) * t.powf(r - 2.0) * base,
            Nodal::Samples(s) => s
                .iter()
                .map(|&(w, x, v)| {
                    let tv = t * v;
                    if self.part.active(tv) {
                        w * self.rhs.df(x, self.part.arg(tv)) * v * v
                    } else {
                        0.0
                    }
                })
                .sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberRoot {
    pub t: f64,
    /// `θ'(t)`, i.e. `⟨φ'(tu), u⟩`.
    pub pairing: f64,
    /// `θ(t) = φ(tu)`.
    pub energy: f64,
}

/// Unique `t_u > 0` with `⟨φ'(t_u u), u⟩ = 0`.
pub fn fibering_root(
    u: &DiscreteFunction,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    cfg: &SolverConfig,
) -> Result<FiberRoot> {
    fibering_root_part(u, exps, mesh, rhs, cfg, Part::Full, 1.0)
}

/// As [`fibering_root`] for `φ` with the primitive restricted to `part`,
/// starting the bracket search at `start`.
pub fn fibering_root_part(
    u: &DiscreteFunction,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    cfg: &SolverConfig,
    part: Part,
    start: f64,
) -> Result<FiberRoot> {
    let ray = Ray::new(u, exps, mesh, rhs, part);
    ray_root(&ray, cfg, start)
}

pub(crate) fn ray_root(ray: &Ray<'_>, cfg: &SolverConfig, start: f64) -> Result<FiberRoot> {
    if ray.is_trivial() {
        return Err(LogdpError::Domain("fibering needs u with nonzero gradient".into()));
    }
    let mut d = |t: f64| ray.dtheta(t);
    let b = expand_bracket(&mut d, start.clamp(1e-8, 1e8), 4.0, 1e-8, 1e8, 60)
        .map_err(|e| LogdpError::NoBracket(format!("fibering derivative: {e}")))?;
    let t = illinois(|t| ray.dtheta(t), b.lo, b.hi, 1e-15, 300)?;
    let pairing = ray.dtheta(t);
    let energy = ray.theta(t);
    if !(ray.dtheta(0.5 * t) > 0.0 && ray.dtheta(2.0 * t) < 0.0) {
        return Err(LogdpError::Assumption(format!("fibering map is not unimodal around t = {t:e}")));
    }
    if pairing.abs() > cfg.tol_fiber * (1.0 + energy.abs()) {
        return Err(LogdpError::Convergence(format!("fibering pairing {pairing:e} above tolerance at t = {t:e}")));
    }
    Ok(FiberRoot { t, pairing, energy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub t: f64,
    pub theta: f64,
    pub dtheta: f64,
}

/// `θ_u` and `θ'_u` at `n` log-spaced points of `[t_min, t_max]`.
pub fn fibering_profile(
    u: &DiscreteFunction,
    exps: &ExponentField,
    mesh: &Mesh,
    rhs: &RhsSpec,
    t_min: f64,
    t_max: f64,
    n: usize,
) -> Result<Vec<FiberPoint>> {
    if !(t_min > 0.0 && t_max > t_min && n >= 2) {
        return Err(LogdpError::Domain("profile needs 0 < t_min < t_max and n >= 2".into()));
    }
    let ray = Ray::new(u, exps, mesh, rhs, Part::Full);
    let (a, b) = (t_min.ln(), t_max.ln());
    Ok((0..n)
        .map(|k| {
            let t = (a + (b - a) * k as f64 / (n - 1) as f64).exp();
            FiberPoint { t, theta: ray.theta(t), dtheta: ray.dtheta(t) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{energy_phi, grad_phi};
    use crate::mesh::build_rect_mesh;
    use crate::rhs::builtin_rhs;
    use std::collections::BTreeMap;

    #[test]
    fn ray_matches_full_energy() {
        let m = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 6, 6).unwrap();
        let ex = ExponentField::constant(&m, 2.3, 2.8, 0.7).unwrap();
        let u = DiscreteFunction::from_fn(&m, |x, y| (x * 7.0).sin() + y);
        let mut prm = BTreeMap::new();
        prm.insert("l".to_string(), 4.0);
        prm.insert("l_tilde".to_string(), 4.2);
        prm.insert("m".to_string(), 3.9);
        let ex2 = ExponentField::constant(&m, 2.6, 2.8, 0.7).unwrap();
        let rhs_ii = builtin_rhs("example_ii", &prm, &ex2).unwrap();
        let mut prm = BTreeMap::new();
        prm.insert("r".to_string(), 3.4);
        let rhs_pow = builtin_rhs("power", &prm, &ex).unwrap();
        for rhs in [&rhs_ii, &rhs_pow] {
            let ray = Ray::new(&u, &ex, &m, rhs, Part::Full);
            for t in [0.3, 1.0, 2.5] {
                let tu = u.scaled(t);
                let e = energy_phi(&tu, &ex, &m, rhs);
                assert!((ray.theta(t) - e).abs() < 1e-12 * e.abs().max(1.0));
                let d = grad_phi(&tu, &ex, &m, rhs).pair(&m, &u);
                assert!((ray.dtheta(t) - d).abs() < 1e-11 * d.abs().max(1.0), "{} vs {d}", ray.dtheta(t));
            }
        }
    }

    #[test]
    fn quadratic_closed_form_and_scaling() {
        let m = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8).unwrap();
        let ex = ExponentField::constant(&m, 2.0, 2.0, 0.0).unwrap();
        let mut prm = BTreeMap::new();
        prm.insert("r".to_string(), 4.0);
        let rhs = builtin_rhs("power", &prm, &ex).unwrap();
        let u = DiscreteFunction::from_fn(&m, |x, y| x * (1.0 - x) * y * (1.0 + y));
        let cfg = SolverConfig::default();
        let root = fibering_root(&u, &ex, &m, &rhs, &cfg).unwrap();
        let a = 2.0 * crate::energy::energy_i(&u, &ex, &m);
        let b = 4.0 * crate::energy::primitive_integral(&u, &m, &rhs, Part::Full);
        let closed = (a / b).sqrt();
        assert!((root.t - closed).abs() < 1e-12 * closed);
        let root2 = fibering_root(&u.scaled(2.0), &ex, &m, &rhs, &cfg).unwrap();
        assert!((2.0 * root2.t - root.t).abs() < 1e-12 * root.t);
    }

    #[test]
    fn sublinear_rhs_has_no_bracket() {
        let m = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap();
        let ex = ExponentField::constant(&m, 2.0, 2.0, 0.0).unwrap();
        let rhs = builtin_rhs("zero", &BTreeMap::new(), &ex).unwrap();
        let u = DiscreteFunction::from_fn(&m, |x, y| x * y);
        assert!(matches!(fibering_root(&u, &ex, &m, &rhs, &SolverConfig::default()), Err(LogdpError::NoBracket(_))));
        assert!(fibering_root(&DiscreteFunction::zeros(&m), &ex, &m, &rhs, &SolverConfig::default()).is_err());
    }
}
