//! The `solve` command: runs the requested solvers for one configuration and
//! writes solution fields, fibering profiles and `summary.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{Experiment, ExperimentConfig};
use crate::error::{LogdpError, Result};
use crate::mesh::{DiscreteFunction, Sign};
use crate::rhs::validate_assumptions;
use crate::solvers::{
    fibering_profile, fixed_load, solve_constant_sign, solve_fixed_rhs, solve_sign_changing, SolverResult, Status,
};

pub const SUMMARY_SCHEMA: &str = "logdp-summary/1";

/// Number of log-spaced points in exported fibering profiles.
pub const PROFILE_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fixed,
    Positive,
    Negative,
    Nodal,
    All,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Positive => "positive",
            Mode::Negative => "negative",
            Mode::Nodal => "nodal",
            Mode::All => "all",
        }
    }
}

impl FromStr for Mode {
    type Err = LogdpError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fixed" => Mode::Fixed,
            "positive" => Mode::Positive,
            "negative" => Mode::Negative,
            "nodal" => Mode::Nodal,
            "all" => Mode::All,
            _ => return Err(LogdpError::Config(format!("unknown mode '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub force: bool,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
    /// Overrides `solver.seed`.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshInfo {
    pub nx: usize,
    pub ny: usize,
    pub n_nodes: usize,
    pub n_elements: usize,
    /// Largest element diameter.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub rhs: String,
    pub rhs_params: BTreeMap<String, f64>,
    pub p: String,
    pub q: String,
    pub mu: String,
    pub mask: Option<String>,
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub mesh: MeshInfo,
}

impl InstanceInfo {
    /// Identifies the continuous problem independently of the mesh.
    pub fn key(&self) -> String {
        let params: Vec<String> = self.rhs_params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "{}[{}] p={} q={} mu={}{}",
            self.rhs,
            params.join(","),
            self.p,
            self.q,
            self.mu,
            self.mask.as_ref().map(|m| format!(" mask={m}")).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagRecord {
    pub name: String,
    pub claimed: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionSummary {
    /// Infinite (serialized as null) when `p₋ ≥ N`.
    #[serde(deserialize_with = "null_as_inf")]
    pub p_star_minus: f64,
    pub h: bool,
    pub h2: bool,
    pub h3: bool,
    pub rhs_flags: Vec<FlagRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub file: Option<String>,
    pub status: String,
    #[serde(deserialize_with = "null_as_nan")]
    pub energy: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub residual: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub probe_residual: f64,
    pub iterations: usize,
    pub newton_iterations: usize,
    pub restarts: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    #[serde(deserialize_with = "null_as_nan")]
    pub min: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub max: f64,
    pub error: Option<String>,
}

impl SolutionSummary {
    fn from_result(r: &SolverResult, file: Option<String>) -> Self {
        let v = r.u.values();
        Self {
            file,
            status: status_str(r.status).into(),
            energy: r.energy,
            residual: r.residual,
            probe_residual: r.probe_residual,
            iterations: r.iterations,
            newton_iterations: r.newton_iterations,
            restarts: r.restarts,
            n_pos: r.nodal.0,
            n_neg: r.nodal.1,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            error: None,
        }
    }

    fn from_error(e: &LogdpError) -> Self {
        Self {
            file: None,
            status: "error".into(),
            energy: f64::NAN,
            residual: f64::NAN,
            probe_residual: f64::NAN,
            iterations: 0,
            newton_iterations: 0,
            restarts: 0,
            n_pos: 0,
            n_neg: 0,
            min: f64::NAN,
            max: f64::NAN,
            error: Some(e.to_string()),
        }
    }

    pub fn converged(&self) -> bool {
        self.status == "converged"
    }
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIters => "max_iters",
        Status::Diverged => "diverged",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingEntry {
    pub label: String,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyOrdering {
    /// Solutions sorted by decreasing energy.
    pub table: Vec<OrderingEntry>,
    /// `φ(w0) > max{φ(u0), φ(v0)} > 0`; present when all three were solved.
    pub nodal_above_constant_sign: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub mode: String,
    pub seed: u64,
    pub forced: bool,
    pub instance: InstanceInfo,
    pub assumptions: AssumptionSummary,
    pub warnings: Vec<String>,
    pub solutions: BTreeMap<String, SolutionSummary>,
    pub energy_ordering: EnergyOrdering,
    /// True when every requested solve converged.
    pub success: bool,
}

impl Summary {
    /// Pretty JSON; non-finite numbers become `null`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn null_as_inf<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Outcome of [`cmd_solve`]: the summary and the directory it was written to.
pub struct SolveRun {
    pub summary: Summary,
    pub dir: PathBuf,
}

/// Checks the structural assumptions required by `mode`: (H2) for the
/// constant-sign solutions, (H3) in addition for the nodal one.
pub fn assumption_gate(exp: &Experiment, mode: Mode) -> Vec<String> {
    let f = exp.flags;
    let mut failed = Vec::new();
    if mode != Mode::Fixed && !f.h2 {
        failed.push(format!("(H2) violated: q+ = {} is not below p*- = {}", exp.exps.q_plus, f.p_star_minus));
    }
    if matches!(mode, Mode::Nodal | Mode::All) && !f.h3 {
        failed.push(format!("(H3) violated: q+ + 1 = {} is not below p*- = {}", exp.exps.q_plus + 1.0, f.p_star_minus));
    }
    failed
}

pub fn cmd_solve(config: &ExperimentConfig, mode: Mode, opts: &SolveOptions) -> Result<SolveRun> {
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.solver.seed = seed;
    }
    let exp = cfg.instantiate()?;
    let mut warnings = Vec::new();
    let gate = assumption_gate(&exp, mode);
    if !gate.is_empty() {
        if !opts.force {
            return Err(LogdpError::Assumption(gate.join("; ")));
        }
        warnings.extend(gate.into_iter().map(|g| format!("forced: {g}")));
    }
    let rhs_flags = if mode == Mode::Fixed {
        Vec::new()
    } else {
        let report = validate_assumptions(&exp.mesh, &exp.exps, &exp.rhs);
        // structural conditions are reported by the gate above
        warnings.extend(report.warnings().into_iter().filter(|w| !w.starts_with("(H")));
        report.checks.iter().map(|c| FlagRecord { name: c.name.clone(), claimed: c.claimed, holds: c.holds }).collect()
    };
    if mode == Mode::Fixed && !exp.rhs.is_fixed() {
        return Err(LogdpError::Config(format!("mode fixed needs a constant right-hand side, got '{}'", exp.rhs.name)));
    }
    if mode != Mode::Fixed && exp.rhs.is_fixed() && exp.rhs.name != "zero" {
        return Err(LogdpError::Config(format!(
            "right-hand side '{}' does not depend on u; use mode fixed",
            exp.rhs.name
        )));
    }
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    fs::create_dir_all(&dir)?;
    let csv = cfg.output.wants("csv");
    let dat = cfg.output.wants("dat");
    if csv {
        fs::write(dir.join("config.txt"), cfg.to_text())?;
    }

    let (mesh, exps, rhs, solver) = (&exp.mesh, &exp.exps, &exp.rhs, &cfg.solver);
    let mut results: Vec<(&str, Result<SolverResult>)> = Vec::new();
    match mode {
        Mode::Fixed => {
            let g = fixed_load(mesh, rhs)?;
            results.push(("u", solve_fixed_rhs(&g, exps, mesh, solver, None)));
        }
        Mode::Positive => results.push(("u0", solve_constant_sign(Sign::Plus, exps, mesh, rhs, solver, None))),
        Mode::Negative => results.push(("v0", solve_constant_sign(Sign::Minus, exps, mesh, rhs, solver, None))),
        Mode::Nodal => results.push(("w0", solve_sign_changing(exps, mesh, rhs, solver, None))),
        Mode::All => {
            results.push(("u0", solve_constant_sign(Sign::Plus, exps, mesh, rhs, solver, None)));
            results.push(("v0", solve_constant_sign(Sign::Minus, exps, mesh, rhs, solver, None)));
            results.push(("w0", solve_sign_changing(exps, mesh, rhs, solver, None)));
        }
    }

    let mut solutions = BTreeMap::new();
    for (label, res) in &results {
        let entry = match res {
            Ok(r) => {
                let file = if csv {
                    let name = format!("{label}.csv");
                    r.u.write_csv(mesh, &dir.join(&name))?;
                    Some(name)
                } else {
                    None
                };
                if dat && mode != Mode::Fixed && !r.u.is_zero() {
                    write_profile(&r.u, &exp, &dir.join(format!("fibering_{label}.dat")), label)?;
                }
                SolutionSummary::from_result(r, file)
            }
            Err(e) => SolutionSummary::from_error(e),
        };
        solutions.insert(label.to_string(), entry);
    }

    let mut table: Vec<OrderingEntry> = solutions
        .iter()
        .filter(|(_, s)| s.error.is_none())
        .map(|(l, s)| OrderingEntry { label: l.clone(), energy: s.energy })
        .collect();
    table.sort_by(|a, b| b.energy.total_cmp(&a.energy).then_with(|| a.label.cmp(&b.label)));
    let energy = |l: &str| solutions.get(l).filter(|s| s.error.is_none()).map(|s| s.energy);
    let nodal_above = match (energy("u0"), energy("v0"), energy("w0")) {
        (Some(u), Some(v), Some(w)) => Some(w > u.max(v) && u.min(v) > 0.0),
        _ => None,
    };
    let success = solutions.values().all(|s| s.converged());

    let c = &cfg;
    let summary = Summary {
        schema: SUMMARY_SCHEMA.into(),
        mode: mode.as_str().into(),
        seed: c.solver.seed,
        forced: opts.force,
        instance: InstanceInfo {
            rhs: c.rhs.name.clone(),
            rhs_params: c.rhs.params.clone(),
            p: c.exponents.p.to_string(),
            q: c.exponents.q.to_string(),
            mu: c.exponents.mu.to_string(),
            mask: c.domain.mask.as_ref().map(|m| m.to_string()),
            p_minus: exps.p_minus,
            p_plus: exps.p_plus,
            q_minus: exps.q_minus,
            q_plus: exps.q_plus,
            mesh: MeshInfo {
                nx: c.mesh.0,
                ny: c.mesh.1,
                n_nodes: mesh.n_nodes(),
                n_elements: mesh.n_elements(),
                h: mesh.max_diameter(),
            },
        },
        assumptions: AssumptionSummary {
            p_star_minus: exp.flags.p_star_minus,
            h: exp.flags.h,
            h2: exp.flags.h2,
            h3: exp.flags.h3,
            rhs_flags,
        },
        warnings,
        solutions,
        energy_ordering: EnergyOrdering { table, nodal_above_constant_sign: nodal_above },
        success,
    };
    if cfg.output.wants("json") {
        fs::write(dir.join("summary.json"), summary.to_json()?)?;
    }
    Ok(SolveRun { summary, dir })
}

/// `θ_u(t) = φ(tu)` on `PROFILE_POINTS` log-spaced `t ∈ [10⁻², 10²]`; the
/// solution itself sits at `t = 1`.
fn write_profile(u: &DiscreteFunction, exp: &Experiment, path: &Path, label: &str) -> Result<()> {
    let pts = fibering_profile(u, &exp.exps, &exp.mesh, &exp.rhs, 1e-2, 1e2, PROFILE_POINTS)?;
    let mut s = format!("# fibering profile of {label}\n# t theta dtheta\n");
    for p in pts {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.t, p.theta, p.dtheta);
    }
    fs::write(path, s)?;
    Ok(())
}

/// Human-readable summary lines.
pub fn summary_table(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "instance: {}", s.instance.key());
    let _ = writeln!(
        out,
        "{:<4} {:>10} {:>22} {:>12} {:>6} {:>8}",
        "sol", "status", "energy", "residual", "nodal", "iters"
    );
    for (l, r) in &s.solutions {
        let _ = writeln!(
            out,
            "{:<4} {:>10} {:>22.14e} {:>12.3e} {:>6} {:>8}",
            l,
            r.status,
            r.energy,
            r.residual,
            format!("{},{}", r.n_pos, r.n_neg),
            r.iterations + r.newton_iterations
        );
        if let Some(e) = &r.error {
            let _ = writeln!(out, "     error: {e}");
        }
    }
    if let Some(ok) = s.energy_ordering.nodal_above_constant_sign {
        let _ = writeln!(out, "phi(w0) > max(phi(u0), phi(v0)) > 0: {ok}");
    }
    for w in &s.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
