//! The `report` command: aggregates `summary.json` files below a directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::solve::{Summary, SUMMARY_SCHEMA};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Run directory relative to the report root.
    pub run: String,
    pub instance: String,
    pub mode: String,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Energies by solution label.
    pub energies: BTreeMap<String, f64>,
    pub max_residual: f64,
    /// Nodal counts of the sign-changing solution, when present.
    pub nodal_w0: Option<(usize, usize)>,
    pub h2: bool,
    pub h3: bool,
    pub claimed_flags_hold: bool,
    pub warnings: usize,
    pub success: bool,
    /// Change of the highest-labelled energy against the next coarser mesh
    /// of the same instance.
    pub energy_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    /// Summaries that could not be read, with the reason.
    pub problems: Vec<(String, String)>,
}

fn find_summaries(root: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = fs::read_dir(root)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            find_summaries(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "summary.json") {
            out.push(path);
        }
    }
    Ok(())
}

fn read_summary(path: &Path) -> std::result::Result<Summary, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let s: Summary = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if s.schema != SUMMARY_SCHEMA {
        return Err(format!("unknown schema '{}'", s.schema));
    }
    Ok(s)
}

/// Label whose energy is tracked across meshes: `w0` if present, else the
/// last label in order.
fn tracked(energies: &BTreeMap<String, f64>) -> Option<f64> {
    energies.get("w0").or_else(|| energies.values().last()).copied()
}

/// Collects every `summary.json` below `root` (sorted by path). Unreadable
/// files are listed in `problems`.
pub fn build_report(root: &Path) -> Result<Report> {
    let mut paths = Vec::new();
    find_summaries(root, &mut paths)?;
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for path in paths {
        let run = path
            .parent()
            .and_then(|d| d.strip_prefix(root).ok())
            .map(|d| if d.as_os_str().is_empty() { ".".to_string() } else { d.display().to_string() })
            .unwrap_or_default();
        match read_summary(&path) {
            Ok(s) => {
                let energies: BTreeMap<String, f64> =
                    s.solutions.iter().filter(|(_, v)| v.error.is_none()).map(|(k, v)| (k.clone(), v.energy)).collect();
                let max_residual = s.solutions.values().map(|v| v.residual).fold(0.0f64, f64::max);
                rows.push(ReportRow {
                    run,
                    instance: s.instance.key(),
                    mode: s.mode.clone(),
                    nx: s.instance.mesh.nx,
                    ny: s.instance.mesh.ny,
                    h: s.instance.mesh.h,
                    energies,
                    max_residual,
                    nodal_w0: s.solutions.get("w0").map(|w| (w.n_pos, w.n_neg)),
                    h2: s.assumptions.h2,
                    h3: s.assumptions.h3,
                    claimed_flags_hold: s.assumptions.rhs_flags.iter().all(|f| !f.claimed || f.holds),
                    warnings: s.warnings.len(),
                    success: s.success,
                    energy_diff: None,
                });
            }
            Err(e) => problems.push((path.display().to_string(), e)),
        }
    }
    // energy differences along increasing resolution within an instance
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        (&rows[a].instance, &rows[a].mode, rows[a].nx * rows[a].ny, &rows[a].run).cmp(&(
            &rows[b].instance,
            &rows[b].mode,
            rows[b].nx * rows[b].ny,
            &rows[b].run,
        ))
    });
    for pair in order.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if rows[a].instance == rows[b].instance && rows[a].mode == rows[b].mode {
            if let (Some(ea), Some(eb)) = (tracked(&rows[a].energies), tracked(&rows[b].energies)) {
                rows[b].energy_diff = Some(eb - ea);
            }
        }
    }
    let rows = order.into_iter().map(|i| rows[i].clone()).collect();
    Ok(Report { rows, problems })
}

pub fn report_table(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:>5} {:>5} {:>16} {:>16} {:>16} {:>11} {:>6} {:>6} {:>5} {:>12}  instance",
        "run", "nx", "ny", "E(u0)", "E(v0)", "E(w0)", "max res", "nodal", "H2/H3", "warn", "dE"
    );
    let e = |row: &ReportRow, l: &str| row.energies.get(l).map(|v| format!("{v:.9e}")).unwrap_or_else(|| "-".into());
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{:<20} {:>5} {:>5} {:>16} {:>16} {:>16} {:>11.3e} {:>6} {:>6} {:>5} {:>12}  {}",
            row.run,
            row.nx,
            row.ny,
            e(row, "u0"),
            e(row, "v0"),
            e(row, "w0"),
            row.max_residual,
            row.nodal_w0.map(|(a, b)| format!("{a},{b}")).unwrap_or_else(|| "-".into()),
            format!("{}/{}", yn(row.h2), yn(row.h3)),
            row.warnings,
            row.energy_diff.map(|d| format!("{d:.4e}")).unwrap_or_else(|| "-".into()),
            row.instance
        );
    }
    for (path, why) in &r.problems {
        let _ = writeln!(s, "unreadable: {path}: {why}");
    }
    s
}

fn yn(b: bool) -> &'static str {
    if b {
        "y"
    } else {
        "n"
    }
}

/// Columns `h nx ny E(u0) E(v0) E(w0)`, one gnuplot data block per instance.
pub fn energy_vs_h(r: &Report) -> String {
    let mut s = String::from("# h nx ny E(u0) E(v0) E(w0)\n");
    let mut current: Option<(&str, &str)> = None;
    for row in &r.rows {
        let key = (row.instance.as_str(), row.mode.as_str());
        if current != Some(key) {
            if current.is_some() {
                s.push_str("\n\n");
            }
            let _ = writeln!(s, "# {} ({})", row.instance, row.mode);
            current = Some(key);
        }
        let e = |l: &str| row.energies.get(l).map(|v| format!("{v:.16e}")).unwrap_or_else(|| "NaN".into());
        let _ = writeln!(s, "{:.16e} {} {} {} {} {}", row.h, row.nx, row.ny, e("u0"), e("v0"), e("w0"));
    }
    s
}

/// Concatenates the `fibering_*.dat` files of every run into gnuplot blocks.
pub fn fibering_profiles(root: &Path, r: &Report) -> Result<String> {
    let mut s = String::new();
    for row in &r.rows {
        let dir = if row.run == "." { root.to_path_buf() } else { root.join(&row.run) };
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("fibering_") && n.ends_with(".dat"))
            })
            .collect();
        files.sort();
        for f in files {
            let body = fs::read_to_string(&f)?;
            if !s.is_empty() {
                s.push_str("\n\n");
            }
            let _ = writeln!(s, "# run {} file {}", row.run, f.file_name().unwrap_or_default().to_string_lossy());
            s.push_str(&body);
        }
    }
    Ok(s)
}

/// Builds the report and writes `report.txt`, `report.json`,
/// `energy_vs_h.dat` and `fibering_profiles.dat` into `out`.
pub fn cmd_report(root: &Path, out: &Path) -> Result<Report> {
    let report = build_report(root)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("report.txt"), report_table(&report))?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    fs::write(out.join("energy_vs_h.dat"), energy_vs_h(&report))?;
    fs::write(out.join("fibering_profiles.dat"), fibering_profiles(root, &report)?)?;
    Ok(report)
}
