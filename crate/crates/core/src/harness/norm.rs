//! The `norm` command: modular and Luxemburg norm of a stored field.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::mesh::{gradient_magnitudes, DiscreteFunction};
use crate::modular::{luxemburg_norm, modular_hlog, sandwich_kappa, ModularReport, SandwichBounds, NORM_TOL};

/// Relative slack tolerated by the sandwich check.
pub const SANDWICH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `ρ_{H_log}(|∇u|)`.
    pub modular: ModularReport,
    /// `‖∇u‖_{H_log}`, the norm of the zero-trace space.
    pub norm: f64,
    pub sandwich: SandwichBounds,
    pub sandwich_pass: bool,
}

pub fn field_norm(config: &ExperimentConfig, u: &DiscreteFunction) -> Result<NormReport> {
    let exp = config.instantiate()?;
    let g = gradient_magnitudes(&exp.mesh, u);
    let modular = modular_hlog(&g, &exp.exps, &exp.mesh)?;
    let norm = luxemburg_norm(&g, &exp.exps, &exp.mesh, NORM_TOL)?;
    let sandwich = sandwich_kappa(norm, &exp.exps);
    let sandwich_pass = if norm == 0.0 { modular.total == 0.0 } else { sandwich.slack(modular.total) >= -SANDWICH_TOL };
    Ok(NormReport { modular, norm, sandwich, sandwich_pass })
}

/// Reads `field` (CSV `id,x,y,value`) on the configured mesh.
pub fn cmd_norm(config: &ExperimentConfig, field: &Path) -> Result<NormReport> {
    let exp = config.instantiate()?;
    let u = DiscreteFunction::read_csv(&exp.mesh, field)?;
    field_norm(config, &u)
}

pub fn norm_table(r: &NormReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "p_part     {:.16e}", r.modular.p_part);
    let _ = writeln!(s, "logq_part  {:.16e}", r.modular.logq_part);
    let _ = writeln!(s, "modular    {:.16e}", r.modular.total);
    let _ = writeln!(s, "norm       {:.16e}", r.norm);
    let _ = writeln!(
        s,
        "sandwich   min(|u|^{}, |u|^{}) = {:.6e} <= {:.6e} <= {:.6e} = max(...)  {}",
        r.sandwich.low_exp,
        r.sandwich.high_exp,
        r.sandwich.lower,
        r.modular.total,
        r.sandwich.upper,
        if r.sandwich_pass { "pass" } else { "FAIL" }
    );
    s
}
