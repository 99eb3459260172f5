//! Fixed right-hand-side solve, Nehari projections and the constant-sign and
//! sign-changing solvers.

mod fiber;
mod fixed;
mod nehari;
mod newton;

use serde::{Deserialize, Serialize};

use crate::banded::BandLu;
use crate::energy::laplace_stiffness;
use crate::error::{LogdpError, Result};
use crate::mesh::{DiscreteFunction, Mesh};

pub use fiber::{fibering_profile, fibering_root, fibering_root_part, FiberPoint, FiberRoot};
pub use fixed::{fixed_load, solve_fixed_rhs};
pub use nehari::{nehari0_project, solve_constant_sign, solve_sign_changing, Nehari0};
pub use newton::{newton_polish, NewtonOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    Diagonal,
    Laplace,
}

impl std::str::FromStr for Preconditioner {
    type Err = LogdpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "diagonal" => Ok(Self::Diagonal),
            "laplace" => Ok(Self::Laplace),
            other => Err(LogdpError::Config(format!("unknown preconditioner '{other}'"))),
        }
    }
}

impl Preconditioner {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Diagonal => "diagonal",
            Self::Laplace => "laplace",
        }
    }
}

/// Armijo parameters: accept `α` when `E(α) ≤ E(0) − c₁ α slope`, else
/// multiply `α` by `backtrack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    pub c1: f64,
    pub backtrack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol_residual: f64,
    pub tol_fiber: f64,
    pub max_iters: usize,
    pub line_search: LineSearch,
    pub seed: u64,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-7,
            tol_fiber: 1e-10,
            max_iters: 3000,
            line_search: LineSearch { c1: 1e-4, backtrack: 0.5 },
            seed: 1,
            preconditioner: Preconditioner::Laplace,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ls = self.line_search;
        if !(ls.c1 > 0.0 && ls.c1 < 1.0) {
            return Err(LogdpError::Config(format!("c1 = {} must lie in (0, 1)", ls.c1)));
        }
        if !(ls.backtrack > 0.0 && ls.backtrack < 1.0) {
            return Err(LogdpError::Config(format!("backtrack = {} must lie in (0, 1)", ls.backtrack)));
        }
        if !(self.tol_residual > 0.0 && self.tol_fiber > 0.0) {
            return Err(LogdpError::Config("tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(LogdpError::Config("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub u: DiscreteFunction,
    pub energy: f64,
    /// Euclidean norm of the interior dual residual.
    pub residual: f64,
    /// Probe-set estimate of the dual norm of the residual.
    pub probe_residual: f64,
    pub iterations: usize,
    pub newton_iterations: usize,
    /// Projection multipliers per accepted step: `[t]` or `[s, t]`.
    pub t_history: Vec<Vec<f64>>,
    pub residual_history: Vec<f64>,
    pub nodal: (usize, usize),
    pub status: Status,
    pub restarts: usize,
}

/// Descent preconditioner acting on interior-node vectors.
pub(crate) enum Precond {
    Identity,
    Diagonal(Vec<f64>),
    Laplace(BandLu),
}

impl Precond {
    pub(crate) fn new(kind: Preconditioner, mesh: &Mesh) -> Result<Self> {
        Ok(match kind {
            Preconditioner::None => Self::Identity,
            Preconditioner::Diagonal => {
                let k = laplace_stiffness(mesh);
                Self::Diagonal((0..k.n()).map(|i| k.get(i, i)).collect())
            }
            Preconditioner::Laplace => Self::Laplace(laplace_stiffness(mesh).factor()?),
        })
    }

    pub(crate) fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Self::Identity => r.to_vec(),
            Self::Diagonal(d) => r.iter().zip(d).map(|(a, b)| a / b).collect(),
            Self::Laplace(lu) => lu.solve(r),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sin(kπξ) sin(lπη)` over the bounding box, zero on the Dirichlet nodes.
pub(crate) fn sine_mode(mesh: &Mesh, k: f64, l: f64) -> DiscreteFunction {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in mesh.nodes() {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let pi = std::f64::consts::PI;
    DiscreteFunction::from_fn(mesh, |x, y| {
        (k * pi * (x - x0) / (x1 - x0)).sin() * (l * pi * (y - y0) / (y1 - y0)).sin()
    })
}
