//! Experiment configuration: a flat `key = value` text file.
//!
//! ```text
//! # unit square, 64x64
//! domain.x_min = 0
//! domain.x_max = 1
//! domain.y_min = 0
//! domain.y_max = 1
//! domain.mask = 0.25 - (x-0.5)^2 - (y-0.5)^2   # optional, keep where > 0
//! mesh.nx = 64
//! mesh.ny = 64
//! exponents.p = 2.6
//! exponents.q = 2.6 + 0.2*x
//! exponents.mu = 0.5
//! rhs.name = example_i
//! rhs.eps = 0.6
//! solver.tol_residual = 1e-7
//! solver.tol_fiber = 1e-10
//! solver.max_iters = 3000
//! solver.c1 = 1e-4
//! solver.backtrack = 0.5
//! solver.seed = 1
//! solver.preconditioner = laplace
//! output.dir = out
//! output.formats = csv, json, dat
//! ```
//!
//! Every key except `rhs.name` has a default. `rhs.<name>` keys other than
//! `rhs.name` are numeric parameters of the right-hand side.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::expr::Expr;
use crate::error::{LogdpError, Result};
use crate::mesh::{build_masked_mesh, ExponentField, Mesh, StructuralFlags};
use crate::rhs::{builtin_rhs, RhsSpec};
use crate::solvers::SolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Elements are kept where the mask is positive at the barycenter.
    pub mask: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentConfig {
    pub p: Expr,
    pub q: Expr,
    pub mu: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsConfig {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<String>,
}

impl OutputConfig {
    pub fn wants(&self, fmt: &str) -> bool {
        self.formats.iter().any(|f| f == fmt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub mesh: (usize, usize),
    pub exponents: ExponentConfig,
    pub rhs: RhsConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

const FORMATS: [&str; 3] = ["csv", "json", "dat"];

fn config_err(line: usize, msg: impl Into<String>) -> LogdpError {
    LogdpError::Config(format!("line {line}: {}", msg.into()))
}

fn num(line: usize, key: &str, v: &str) -> Result<f64> {
    let e = Expr::parse(v).map_err(|err| config_err(line, format!("{key}: {err}")))?;
    e.as_constant()
        .filter(|c| c.is_finite())
        .ok_or_else(|| config_err(line, format!("{key} must be a finite constant")))
}

fn int(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| config_err(line, format!("{key} must be a nonnegative integer, got '{v}'")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        let mut x_range = (0.0, 1.0);
        let mut y_range = (0.0, 1.0);
        let mut mask = None;
        let mut mesh = (32, 32);
        let mut p = Expr::Num(2.0);
        let mut q = Expr::Num(2.0);
        let mut mu = Expr::Num(0.0);
        let mut rhs_name = None;
        let mut rhs_params = BTreeMap::new();
        let mut solver = SolverConfig::default();
        let mut output = OutputConfig { dir: "out".into(), formats: FORMATS.iter().map(|s| s.to_string()).collect() };
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected 'key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(config_err(line, format!("{key} has no value")));
            }
            if let Some(prev) = seen.insert(key.to_string(), line) {
                return Err(config_err(line, format!("{key} already set on line {prev}")));
            }
            let expr = |v: &str| Expr::parse(v).map_err(|err| config_err(line, format!("{key}: {err}")));
            match key {
                "domain.x_min" => x_range.0 = num(line, key, value)?,
                "domain.x_max" => x_range.1 = num(line, key, value)?,
                "domain.y_min" => y_range.0 = num(line, key, value)?,
                "domain.y_max" => y_range.1 = num(line, key, value)?,
                "domain.mask" => mask = Some(expr(value)?),
                "mesh.nx" => mesh.0 = int(line, key, value)?,
                "mesh.ny" => mesh.1 = int(line, key, value)?,
                "exponents.p" => p = expr(value)?,
                "exponents.q" => q = expr(value)?,
                "exponents.mu" => mu = expr(value)?,
                "rhs.name" => rhs_name = Some(value.to_string()),
                "solver.tol_residual" => solver.tol_residual = num(line, key, value)?,
                "solver.tol_fiber" => solver.tol_fiber = num(line, key, value)?,
                "solver.max_iters" => solver.max_iters = int(line, key, value)?,
                "solver.c1" => solver.line_search.c1 = num(line, key, value)?,
                "solver.backtrack" => solver.line_search.backtrack = num(line, key, value)?,
                "solver.seed" => {
                    solver.seed = value.parse().map_err(|_| config_err(line, "solver.seed must be an integer"))?
                }
                "solver.preconditioner" => {
                    solver.preconditioner = value.parse().map_err(|e| config_err(line, format!("{e}")))?
                }
                "output.dir" => output.dir = value.to_string(),
                "output.formats" => {
                    let fs: Vec<String> =
                        value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                    if let Some(bad) = fs.iter().find(|f| !FORMATS.contains(&f.as_str())) {
                        return Err(config_err(line, format!("unknown output format '{bad}'")));
                    }
                    output.formats = fs;
                }
                _ => match key.strip_prefix("rhs.") {
                    Some(param) if !param.is_empty() && !param.contains('.') => {
                        rhs_params.insert(param.to_string(), num(line, key, value)?);
                    }
                    _ => return Err(config_err(line, format!("unknown key '{key}'"))),
                },
            }
        }
        let name = rhs_name.ok_or_else(|| LogdpError::Config("missing required key rhs.name".into()))?;
        solver.validate()?;
        Ok(Self {
            domain: DomainConfig { x_range, y_range, mask },
            mesh,
            exponents: ExponentConfig { p, q, mu },
            rhs: RhsConfig { name, params: rhs_params },
            solver,
            output,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Canonical text form; [`ExperimentConfig::parse`] inverts it exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let d = &self.domain;
        let _ = writeln!(s, "domain.x_min = {:?}", d.x_range.0);
        let _ = writeln!(s, "domain.x_max = {:?}", d.x_range.1);
        let _ = writeln!(s, "domain.y_min = {:?}", d.y_range.0);
        let _ = writeln!(s, "domain.y_max = {:?}", d.y_range.1);
        if let Some(m) = &d.mask {
            let _ = writeln!(s, "domain.mask = {m}");
        }
        let _ = writeln!(s, "mesh.nx = {}", self.mesh.0);
        let _ = writeln!(s, "mesh.ny = {}", self.mesh.1);
        let _ = writeln!(s, "exponents.p = {}", self.exponents.p);
        let _ = writeln!(s, "exponents.q = {}", self.exponents.q);
        let _ = writeln!(s, "exponents.mu = {}", self.exponents.mu);
        let _ = writeln!(s, "rhs.name = {}", self.rhs.name);
        for (k, v) in &self.rhs.params {
            let _ = writeln!(s, "rhs.{k} = {}", Expr::Num(*v));
        }
        let c = &self.solver;
        let _ = writeln!(s, "solver.tol_residual = {:?}", c.tol_residual);
        let _ = writeln!(s, "solver.tol_fiber = {:?}", c.tol_fiber);
        let _ = writeln!(s, "solver.max_iters = {}", c.max_iters);
        let _ = writeln!(s, "solver.c1 = {:?}", c.line_search.c1);
        let _ = writeln!(s, "solver.backtrack = {:?}", c.line_search.backtrack);
        let _ = writeln!(s, "solver.seed = {}", c.seed);
        let _ = writeln!(s, "solver.preconditioner = {}", c.preconditioner.as_str());
        let _ = writeln!(s, "output.dir = {}", self.output.dir);
        let _ = writeln!(s, "output.formats = {}", self.output.formats.join(", "));
        s
    }

    /// Builds mesh, exponents and right-hand side. Exponent fields that
    /// violate `1 < p ≤ q`, `μ ≥ 0` or `q < p*` fail with an assumption error
    /// naming (H).
    pub fn instantiate(&self) -> Result<Experiment> {
        let d = &self.domain;
        let mesh = match &d.mask {
            Some(m) => build_masked_mesh(d.x_range, d.y_range, self.mesh.0, self.mesh.1, |x, y| m.eval(x, y) > 0.0)?,
            None => build_masked_mesh(d.x_range, d.y_range, self.mesh.0, self.mesh.1, |_, _| true)?,
        };
        let ex = &self.exponents;
        let exps =
            ExponentField::from_fns(&mesh, |x, y| ex.p.eval(x, y), |x, y| ex.q.eval(x, y), |x, y| ex.mu.eval(x, y))
                .map_err(|e| LogdpError::Assumption(format!("(H) violated: {e}")))?;
        let flags = exps.structural_flags();
        if !flags.h {
            return Err(LogdpError::Assumption(format!(
                "(H) violated: q(x) < p*(x) fails somewhere (q+ = {}, p*- = {})",
                exps.q_plus, flags.p_star_minus
            )));
        }
        let rhs = builtin_rhs(&self.rhs.name, &self.rhs.params, &exps)?;
        Ok(Experiment { mesh, exps, rhs, flags })
    }
}

pub struct Experiment {
    pub mesh: Mesh,
    pub exps: ExponentField,
    pub rhs: RhsSpec,
    pub flags: StructuralFlags,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig { x_range: (0.0, 1.0), y_range: (0.0, 1.0), mask: None },
            mesh: (32, 32),
            exponents: ExponentConfig { p: Expr::Num(2.0), q: Expr::Num(2.0), mu: Expr::Num(0.0) },
            rhs: RhsConfig { name: "zero".into(), params: BTreeMap::new() },
            solver: SolverConfig::default(),
            output: OutputConfig { dir: "out".into(), formats: FORMATS.iter().map(|s| s.to_string()).collect() },
        }
    }
}

impl std::str::FromStr for ExperimentConfig {
    type Err = LogdpError;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Preconditioner;

    const SAMPLE: &str = "\
# variable exponents on a disc
domain.x_min = 0
domain.x_max = 1
domain.mask = 0.2 - (x-0.5)^2 - (y-0.5)^2
mesh.nx = 12
mesh.ny = 12
exponents.p = 2.2 + 0.2*x
exponents.q = 2.6 + 0.1*y   # mildly varying
exponents.mu = 0.5
rhs.name = example_i
rhs.eps = 0.3
solver.seed = 7
solver.preconditioner = diagonal
output.formats = csv, json
";

    #[test]
    fn parse_and_round_trip() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.mesh, (12, 12));
        assert_eq!(c.rhs.params["eps"], 0.3);
        assert_eq!(c.solver.seed, 7);
        assert_eq!(c.solver.preconditioner, Preconditioner::Diagonal);
        assert!(c.output.wants("json") && !c.output.wants("dat"));
        let again = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_text(), c.to_text());
        let exp = c.instantiate().unwrap();
        assert!(exp.mesh.n_elements() < 12 * 12 * 2);
        assert!(exp.exps.p_minus > 2.2 && exp.exps.p_plus < 2.4);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "rhs.name = zero\nmesh.nx = -3",
            "rhs.name = zero\nfoo.bar = 1",
            "rhs.name = zero\nrhs.name = power",
            "mesh.nx = 4",
            "rhs.name = zero\nexponents.p = 2 +",
            "rhs.name = zero\nsolver.c1 = 1.5",
            "rhs.name = zero\nsolver.preconditioner = multigrid",
            "rhs.name = zero\nrhs.eps = x",
            "rhs.name = zero\noutput.formats = csv, png",
            "rhs.name = zero\nmesh.nx",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(LogdpError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn exponent_violations_name_the_assumption() {
        let c = ExperimentConfig::parse("rhs.name = zero\nexponents.p = 2\nexponents.q = 1.5").unwrap();
        match c.instantiate() {
            Err(LogdpError::Assumption(msg)) => assert!(msg.contains("(H)"), "{msg}"),
            other => panic!("{:?}", other.err()),
        }
        let c = ExperimentConfig::parse("rhs.name = zero\nexponents.p = 1.5\nexponents.q = 6.5").unwrap();
        match c.instantiate() {
            Err(LogdpError::Assumption(msg)) => assert!(msg.contains("(H)") && msg.contains("p*"), "{msg}"),
            other => panic!("{:?}", other.err()),
        }
    }
}
