//! Executable property suites over the scalar inequalities, the modular
//! machinery, the operator and the solvers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{apply_a, energy_i, energy_phi, grad_phi, laplace_stiffness, primitive_integral, Part};
use crate::error::{LogdpError, Result};
use crate::mesh::{build_rect_mesh, DiscreteFunction, ExponentField, Mesh, Sign};
use crate::modular::{luxemburg_norm, modular_hlog, modular_sobolev, sandwich_eps, sandwich_kappa, NORM_TOL};
use crate::phi::{
    f_epsilon_shape, g_ratio, gap_scale, hlog_density, hlog_eval, hlog_potential, log_constants, monotone_constant,
    monotone_sides, quotient_frac_log_max, young_log_sides, PhiParams, INEQ_TOL,
};
use crate::rhs::builtin_rhs;
use crate::solvers::{
    fibering_root, fixed_load, solve_constant_sign, solve_fixed_rhs, solve_sign_changing, SolverConfig, Status,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Scalar,
    Modular,
    Operator,
    Solver,
    All,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Scalar => "scalar",
            Suite::Modular => "modular",
            Suite::Operator => "operator",
            Suite::Solver => "solver",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = LogdpError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "scalar" => Suite::Scalar,
            "modular" => Suite::Modular,
            "operator" => Suite::Operator,
            "solver" => Suite::Solver,
            "all" => Suite::All,
            _ => return Err(LogdpError::Config(format!("unknown suite '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Base sample count; each check scales it to its own cost.
    pub samples: usize,
    /// Test hook: multiplies the monotonicity constant `C_r`.
    pub corrupt_cr: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 1, samples: 1000, corrupt_cr: None }
    }
}

/// Result of one property check. `worst` is the largest observed violation
/// in the check's own units; the check passes when it is at most `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub samples: usize,
    pub worst: f64,
    pub bound: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(samples: usize, worst: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self { samples, worst, bound, pass: worst <= bound, detail: detail.into() }
    }

    fn failed(samples: usize, detail: impl Into<String>) -> Self {
        Self { samples, worst: f64::INFINITY, bound: 0.0, pass: false, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub samples: usize,
    pub worst_violation: f64,
    pub bound: f64,
    pub pass: bool,
    pub detail: String,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: u64,
    pub samples: usize,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn table(&self) -> String {
        let w = self.records.iter().map(|r| r.name.len()).max().unwrap_or(4).max(5);
        let mut s = String::new();
        let _ =
            writeln!(s, "{:<w$}  {:>8}  {:>12}  {:>10}  {:>10}  status", "check", "samples", "worst", "bound", "ms");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{:<w$}  {:>8}  {:>12.3e}  {:>10.1e}  {:>10.1}  {}",
                r.name,
                r.samples,
                r.worst_violation,
                r.bound,
                r.runtime_ms,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "overall: {}", if self.pass { "pass" } else { "FAIL" });
        s
    }

    /// The report with wall-clock times zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.runtime_ms = 0.0;
        }
        r
    }
}

type Check = fn(&mut ChaCha8Rng, &VerifyOptions) -> CheckOutcome;

fn checks(suite: Suite) -> Vec<(&'static str, Check)> {
    let scalar: Vec<(&'static str, Check)> = vec![
        ("scalar.log_constants", |_, _| check_log_constants()),
        ("scalar.hlog_shape", |rng, o| check_hlog_shape(rng, o.samples)),
        ("scalar.young_log", |rng, o| check_young(rng, o.samples * 100)),
        ("scalar.monotone", |rng, o| check_monotone(rng, o.samples * 100, o.corrupt_cr.unwrap_or(1.0))),
        ("scalar.f_eps_shape", |rng, _| check_f_eps_shape(rng, 10)),
        ("scalar.quotient_max", |rng, _| check_quotient_max(rng, 5)),
    ];
    let modular: Vec<(&'static str, Check)> = vec![
        ("modular.sandwich", |rng, o| check_sandwich(rng, o.samples.div_ceil(5).max(1))),
        ("modular.unit_ball", |rng, o| check_unit_ball(rng, o.samples.div_ceil(10).max(1))),
        ("modular.sobolev_dominance", |rng, o| check_sobolev_dominance(rng, o.samples.div_ceil(10).max(1))),
    ];
    let operator: Vec<(&'static str, Check)> = vec![
        ("operator.gradient_consistency", |rng, o| check_gradient_consistency(rng, 16, o.samples.div_ceil(20).max(1))),
        ("operator.strict_monotonicity", |rng, o| check_strict_monotonicity(rng, o.samples)),
        ("operator.coercivity", |rng, o| check_coercivity(rng, o.samples.div_ceil(20).max(1))),
    ];
    let solver: Vec<(&'static str, Check)> = vec![
        ("solver.linear_reduction", |_, _| check_linear_reduction(32)),
        ("solver.fibering_oracle", |rng, _| check_fibering_oracle(rng, 20)),
        ("solver.three_solutions", |_, o| check_three_solutions(16, o.seed)),
    ];
    match suite {
        Suite::Scalar => scalar,
        Suite::Modular => modular,
        Suite::Operator => operator,
        Suite::Solver => solver,
        Suite::All => [scalar, modular, operator, solver].concat(),
    }
}

/// Runs every check of `suite`. Each check draws from its own generator
/// seeded by `seed` and the check's name, so suites are reproducible
/// individually and as part of `all`.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> VerificationReport {
    let mut records = Vec::new();
    for (name, check) in checks(suite) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ name_hash(name));
        let start = Instant::now();
        let out = check(&mut rng, opts);
        records.push(CheckRecord {
            name: name.to_string(),
            samples: out.samples,
            worst_violation: out.worst,
            bound: out.bound,
            pass: out.pass,
            detail: out.detail,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let pass = records.iter().all(|r| r.pass);
    VerificationReport { suite: suite.as_str().to_string(), seed: opts.seed, samples: opts.samples, records, pass }
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a; stable across platforms and releases
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_params(rng: &mut ChaCha8Rng) -> PhiParams {
    let p = rng.gen_range(1.1..4.0);
    let q = p + rng.gen_range(0.0..2.0);
    let mu = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..3.0) };
    PhiParams { p, q, mu }
}

pub fn check_log_constants() -> CheckOutcome {
    let c = log_constants();
    let dist = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
    let worst = dist(c.t0, 5.8339, 5.8341).max(dist(c.kappa, 0.31783, 0.31785)).max(c.residual() - 1e-10).max(0.0);
    CheckOutcome::new(
        1,
        worst,
        0.0,
        format!("t0 = {:.10}, kappa = {:.10}, residual = {:.1e}", c.t0, c.kappa, c.residual()),
    )
}

/// Convexity, `(Inc)_{p}`, `(Dec)_{q+κ}` and `a = Φ'` on random parameters.
pub fn check_hlog_shape(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let kappa = log_constants().kappa;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let pr = random_params(rng);
        let t1 = log_uniform(rng, 1e-4, 1e4);
        let t2 = t1 * log_uniform(rng, 1.0001, 100.0);
        let lam = rng.gen_range(0.0..1.0);
        let h = |t: f64| hlog_eval(pr, t).unwrap();
        let mid = h(lam * t1 + (1.0 - lam) * t2);
        let chord = lam * h(t1) + (1.0 - lam) * h(t2);
        worst = worst.max((mid - chord) / gap_scale(mid, chord));
        let (a, b) = (h(t1) / t1.powf(pr.p), h(t2) / t2.powf(pr.p));
        worst = worst.max((a - b) / gap_scale(a, b));
        let (a, b) = (h(t1) / t1.powf(pr.q + kappa), h(t2) / t2.powf(pr.q + kappa));
        worst = worst.max((b - a) / gap_scale(a, b));
        let step = 1e-6 * t1;
        let fd = (hlog_potential(pr, t1 + step).unwrap() - hlog_potential(pr, t1 - step).unwrap()) / (2.0 * step);
        let d = hlog_density(pr, t1).unwrap();
        // finite-difference error is far above round-off; rescale it into
        // the same units as the predicate gaps
        worst = worst.max(((fd - d).abs() / d - 1e-6).max(0.0));
    }
    CheckOutcome::new(n, worst, INEQ_TOL, "relative gaps of convexity, (Inc)_p, (Dec)_{q+kappa}, a = Phi'")
}

pub fn check_young(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let mut worst = 0.0f64;
    for k in 0..n {
        let r = rng.gen_range(1.01..10.0);
        let s = if k % 97 == 0 { 0.0 } else { log_uniform(rng, 1e-6, 1e6) };
        let t = if k % 89 == 0 { 0.0 } else { log_uniform(rng, 1e-6, 1e6) };
        let (lhs, rhs) = young_log_sides(s, t, r).unwrap();
        worst = worst.max((lhs - rhs) / gap_scale(lhs, rhs));
    }
    CheckOutcome::new(n, worst, INEQ_TOL, "max (lhs - rhs)/scale")
}

/// Monotonicity inequality for several increasing weights `h`; `cr_factor`
/// scales the constant (1 for the sharp one).
pub fn check_monotone(rng: &mut ChaCha8Rng, n: usize, cr_factor: f64) -> CheckOutcome {
    let weights: [fn(f64) -> f64; 4] = [|_| 1.0, |t| (std::f64::consts::E + t).ln(), |t| t.sqrt(), |t| 1.0 + t * t];
    let mut worst = 0.0f64;
    for _ in 0..n {
        let dim = rng.gen_range(1..=3);
        let r = rng.gen_range(1.05..6.0);
        let vec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..dim).map(|_| log_uniform(rng, 1e-3, 1e3) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect()
        };
        let xi = vec(rng);
        let eta = if rng.gen_bool(0.1) { vec![0.0; dim] } else { vec(rng) };
        let h = weights[rng.gen_range(0..weights.len())];
        let (lhs, rhs) = monotone_sides(&xi, &eta, r, h, cr_factor * monotone_constant(r)).unwrap();
        worst = worst.max((rhs - lhs) / gap_scale(lhs, rhs));
    }
    let detail = if cr_factor == 1.0 { "sharp C_r".to_string() } else { format!("C_r scaled by {cr_factor}") };
    CheckOutcome::new(n, worst, INEQ_TOL, detail)
}

/// `f_ε` is increasing for `ε ≥ κ`; for `ε < κ` its derivative changes sign
/// exactly twice, at the reported critical points.
pub fn check_f_eps_shape(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let kappa = log_constants().kappa;
    let mut bad = 0usize;
    let mut notes = Vec::new();
    for k in 0..n {
        let above = kappa + rng.gen_range(0.0..1.0);
        // g < ε everywhere means f_ε' > 0
        let grid = |lo: f64, hi: f64, m: usize| {
            (0..m).map(move |i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (m - 1) as f64).exp())
        };
        if grid(1e-9, 1e12, 20_000).any(|t| g_ratio(t) >= above) || f_epsilon_shape(above).unwrap().is_some() {
            bad += 1;
            notes.push(format!("eps={above} not monotone"));
        }
        let eps = rng.gen_range(0.05..kappa * 0.98);
        match f_epsilon_shape(eps) {
            Ok(Some(sh)) => {
                let hi = sh.t2 * 10.0;
                let signs: Vec<bool> = grid(1e-9, hi, 40_000).map(|t| g_ratio(t) < eps).collect();
                let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
                let ok = changes == 2 && sh.t1 < log_constants().t0 && sh.t2 > log_constants().t0 && sh.a_eps > 1.0;
                if !ok {
                    bad += 1;
                    notes.push(format!("eps={eps}: {changes} sign changes"));
                }
            }
            other => {
                bad += 1;
                notes.push(format!("eps={eps}: {other:?}"));
            }
        }
        let _ = k;
    }
    CheckOutcome::new(
        2 * n,
        bad as f64,
        0.0,
        if notes.is_empty() { "two critical points below kappa, none above".into() } else { notes.join("; ") },
    )
}

/// Closed-form maximum of `t/(Q(e+t)log(e+t))` against a dense grid.
pub fn check_quotient_max(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let q = rng.gen_range(1.01..12.0);
        let (t_star, v) = quotient_frac_log_max(q).unwrap();
        let f = |t: f64| t / (q * (std::f64::consts::E + t) * (std::f64::consts::E + t).ln());
        let m = 400_000;
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        for i in 0..=m {
            let t = 50.0 * i as f64 / m as f64;
            let y = f(t);
            if y > best {
                best = y;
                arg = t;
            }
        }
        worst = worst.max((best - v).abs()).max(((arg - t_star).abs() - 1e-3).max(0.0));
    }
    CheckOutcome::new(n, worst, 1e-8, "|grid max - closed form|")
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    (0..n).map(|_| if rng.gen_bool(0.1) { 0.0 } else { scale * rng.gen_range(0.0..1.0) }).collect()
}

/// Five exponent configurations on an 8x8 mesh.
pub fn exponent_configs(mesh: &Mesh) -> Vec<(&'static str, ExponentField)> {
    vec![
        ("p=q=2", ExponentField::constant(mesh, 2.0, 2.0, 0.0).unwrap()),
        ("p=1.5,q=2.5,mu=1", ExponentField::constant(mesh, 1.5, 2.5, 1.0).unwrap()),
        ("p=2.6,q=2.6,mu=0.5", ExponentField::constant(mesh, 2.6, 2.6, 0.5).unwrap()),
        (
            "variable p,q,mu",
            ExponentField::from_fns(mesh, |x, y| 1.4 + 0.5 * x * y, |x, _| 2.0 + x, |_, y| (y - 0.5).max(0.0)).unwrap(),
        ),
        (
            "p<2 variable",
            ExponentField::from_fns(mesh, |x, _| 1.2 + 0.3 * x, |_, y| 1.6 + 0.8 * y, |x, y| 2.0 * x * y).unwrap(),
        ),
    ]
}

/// Sandwich bounds (κ and one ε per field) and `ρ(g/‖g‖) = 1`.
pub fn check_sandwich(rng: &mut ChaCha8Rng, fields_per_config: usize) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8).unwrap();
    let kappa = log_constants().kappa;
    let mut worst_slack = 0.0f64;
    let mut worst_unit = 0.0f64;
    let mut count = 0;
    for (_, ex) in exponent_configs(&mesh) {
        for _ in 0..fields_per_config {
            let g = random_field(rng, mesh.n_elements());
            let rho = modular_hlog(&g, &ex, &mesh).unwrap().total;
            let lam = luxemburg_norm(&g, &ex, &mesh, NORM_TOL).unwrap();
            count += 1;
            if lam == 0.0 {
                continue;
            }
            worst_slack = worst_slack.max(-sandwich_kappa(lam, &ex).slack(rho));
            let eps = rng.gen_range(0.02..kappa);
            worst_slack = worst_slack.max(-sandwich_eps(lam, &ex, eps).unwrap().slack(rho));
            let scaled: Vec<f64> = g.iter().map(|v| v / lam).collect();
            let unit = modular_hlog(&scaled, &ex, &mesh).unwrap().total;
            worst_unit = worst_unit.max((unit - 1.0).abs());
        }
    }
    // the unit-modular error has its own bound of 1e-10
    let worst = if worst_unit > 1e-10 { f64::INFINITY } else { worst_slack };
    CheckOutcome::new(
        count,
        worst,
        1e-9,
        format!("worst slack violation {worst_slack:.2e}, worst |rho(g/|g|) - 1| = {worst_unit:.2e}"),
    )
}

pub fn check_unit_ball(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8).unwrap();
    let mut bad = 0usize;
    let mut count = 0;
    for (_, ex) in exponent_configs(&mesh) {
        for _ in 0..n {
            let g = random_field(rng, mesh.n_elements());
            let lam = luxemburg_norm(&g, &ex, &mesh, NORM_TOL).unwrap();
            if lam == 0.0 {
                continue;
            }
            // both sides of 1, away from the tolerance band
            for target in [0.9, 1.1] {
                let h: Vec<f64> = g.iter().map(|v| v * target / lam).collect();
                let rho = modular_hlog(&h, &ex, &mesh).unwrap().total;
                count += 1;
                if (rho < 1.0) != (target < 1.0) {
                    bad += 1;
                }
            }
            // g/n decreases monotonically in norm and modular
            let (mut prev_rho, mut prev_lam) = (f64::INFINITY, f64::INFINITY);
            for k in 1..=6 {
                let h: Vec<f64> = g.iter().map(|v| v / k as f64).collect();
                let rho = modular_hlog(&h, &ex, &mesh).unwrap().total;
                let l = luxemburg_norm(&h, &ex, &mesh, NORM_TOL).unwrap();
                if !(rho < prev_rho && l < prev_lam) {
                    bad += 1;
                }
                prev_rho = rho;
                prev_lam = l;
            }
        }
    }
    CheckOutcome::new(count, bad as f64, 0.0, "sign of rho - 1 against norm - 1; monotone decay of g/n")
}

pub fn check_sobolev_dominance(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8).unwrap();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (_, ex) in exponent_configs(&mesh) {
        for _ in 0..n {
            let amp = 10f64.powf(rng.gen_range(-2.0..2.0));
            let u = random_function(rng, &mesh, amp);
            let full = modular_sobolev(&u, &ex, &mesh).unwrap().total;
            let grad = modular_hlog(&crate::mesh::gradient_magnitudes(&mesh, &u), &ex, &mesh).unwrap().total;
            worst = worst.max((grad - full) / gap_scale(grad, full));
            count += 1;
        }
    }
    CheckOutcome::new(count, worst, INEQ_TOL, "modular_sobolev(u) >= rho(|grad u|)")
}

pub fn random_function(rng: &mut ChaCha8Rng, mesh: &Mesh, amp: f64) -> DiscreteFunction {
    let vals: Vec<f64> = mesh.dofs().iter().map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    DiscreteFunction::from_dofs(mesh, &vals).expect("dof vector has mesh length")
}

/// Random function vanishing on the left third of the domain, so that some
/// elements carry an exactly zero gradient.
fn random_with_plateau(rng: &mut ChaCha8Rng, mesh: &Mesh, amp: f64) -> DiscreteFunction {
    let u = random_function(rng, mesh, amp);
    let vals = mesh.nodes().iter().zip(u.values()).map(|(p, &v)| if p[0] < 0.34 { 0.0 } else { v }).collect();
    DiscreteFunction::new(mesh, vals).expect("boundary stays zero")
}

/// Central differences of `I` and `φ` against `⟨A(u),v⟩` and `⟨φ'(u),v⟩`.
pub fn check_gradient_consistency(rng: &mut ChaCha8Rng, n_mesh: usize, pairs: usize) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), n_mesh, n_mesh).unwrap();
    let ex = ExponentField::from_fns(&mesh, |x, _| 1.8 + 0.6 * x, |x, y| 2.6 + 0.3 * y * x, |x, _| 0.5 + x).unwrap();
    let ex2 = ExponentField::constant(&mesh, 2.6, 2.6, 0.5).unwrap();
    let mut prm = BTreeMap::new();
    prm.insert("eps".to_string(), 0.6);
    let rhs = builtin_rhs("example_i", &prm, &ex2).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..pairs {
        let (exps, amp) = if k % 2 == 0 { (&ex, 1.0) } else { (&ex2, 0.5) };
        let u = random_function(rng, &mesh, amp);
        let v = random_function(rng, &mesh, 1.0);
        let an = apply_a(&u, exps, &mesh).pair(&mesh, &v);
        let fd = (energy_i(&u.axpy(h, &v), exps, &mesh) - energy_i(&u.axpy(-h, &v), exps, &mesh)) / (2.0 * h);
        worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()));
        let an = grad_phi(&u, &ex2, &mesh, &rhs).pair(&mesh, &v);
        let fd = (energy_phi(&u.axpy(h, &v), &ex2, &mesh, &rhs) - energy_phi(&u.axpy(-h, &v), &ex2, &mesh, &rhs))
            / (2.0 * h);
        worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()));
    }
    CheckOutcome::new(pairs, worst, 1e-5, format!("{n_mesh}x{n_mesh} mesh, h = 1e-6, relative error"))
}

/// `⟨A(u) − A(v), u − v⟩ > 0` for distinct pairs, for `p < 2` and `p ≥ 2`.
pub fn check_strict_monotonicity(rng: &mut ChaCha8Rng, pairs: usize) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8).unwrap();
    let configs = [
        ExponentField::constant(&mesh, 1.3, 1.8, 1.0).unwrap(),
        ExponentField::from_fns(&mesh, |x, _| 1.2 + 0.7 * x, |_, y| 2.0 + y, |x, y| x * y).unwrap(),
        ExponentField::constant(&mesh, 2.0, 3.0, 0.7).unwrap(),
        ExponentField::constant(&mesh, 3.5, 3.5, 0.0).unwrap(),
    ];
    let mut worst = f64::NEG_INFINITY;
    let mut nan = false;
    for k in 0..pairs {
        let ex = &configs[k % configs.len()];
        let amp = 10f64.powf(rng.gen_range(-2.0..1.5));
        let u = random_with_plateau(rng, &mesh, amp);
        let v = if k % 5 == 0 {
            u.axpy(1e-3 * amp, &random_function(rng, &mesh, 1.0))
        } else {
            random_with_plateau(rng, &mesh, amp)
        };
        if u == v {
            continue;
        }
        let d = u.axpy(-1.0, &v);
        let (au, av) = (apply_a(&u, ex, &mesh), apply_a(&v, ex, &mesh));
        nan |= au.values.iter().chain(&av.values).any(|x| !x.is_finite());
        let (a, b) = (au.pair(&mesh, &d), av.pair(&mesh, &d));
        let scale = a.abs() + b.abs();
        // violation is how far the pairing falls below 1e-14 scale
        worst = worst.max((1e-14 * scale - (a - b)) / scale.max(f64::MIN_POSITIVE));
    }
    let worst = if nan { f64::INFINITY } else { worst };
    CheckOutcome::new(pairs, worst, 0.0, "max of (1e-14 scale - <A(u)-A(v),u-v>)/scale; must stay negative")
}

/// `λ ↦ ⟨A(λu), λu⟩/‖∇(λu)‖` is nondecreasing over `λ ∈ {1, 10, 100}`.
pub fn check_coercivity(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8).unwrap();
    let configs = exponent_configs(&mesh);
    let mut worst = 0.0f64;
    for k in 0..n {
        let ex = &configs[k % configs.len()].1;
        let u = random_function(rng, &mesh, 0.1);
        let mut prev = f64::NEG_INFINITY;
        for lam in [1.0, 10.0, 100.0] {
            let w = u.scaled(lam);
            let norm = crate::modular::norm_grad(&w, ex, &mesh, NORM_TOL).unwrap();
            let ratio = apply_a(&w, ex, &mesh).pair(&mesh, &w) / norm;
            worst = worst.max((prev - ratio) / gap_scale(prev.max(0.0), ratio));
            prev = ratio;
        }
    }
    CheckOutcome::new(n, worst, INEQ_TOL, "decrease of <A(lu),lu>/|lu| over l = 1, 10, 100")
}

/// `p ≡ q ≡ 2`, `μ ≡ 0`, `f ≡ 1`: the nonlinear solve against one banded
/// factorization of the stiffness matrix. Worst = nodal sup-error.
pub fn check_linear_reduction(n_mesh: usize) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), n_mesh, n_mesh).unwrap();
    let ex = ExponentField::constant(&mesh, 2.0, 2.0, 0.0).unwrap();
    let mut prm = BTreeMap::new();
    prm.insert("c".to_string(), 1.0);
    let rhs = builtin_rhs("constant", &prm, &ex).unwrap();
    let g = fixed_load(&mesh, &rhs).unwrap();
    let cfg = SolverConfig { tol_residual: 1e-13, ..SolverConfig::default() };
    let res = match solve_fixed_rhs(&g, &ex, &mesh, &cfg, None) {
        Ok(r) => r,
        Err(e) => return CheckOutcome::failed(1, e.to_string()),
    };
    let direct = match laplace_stiffness(&mesh).factor() {
        Ok(lu) => lu.solve(&g.dof_values(&mesh)),
        Err(e) => return CheckOutcome::failed(1, e.to_string()),
    };
    let direct = DiscreteFunction::from_dofs(&mesh, &direct).unwrap();
    let err = res.u.axpy(-1.0, &direct).sup_norm();
    let min = res.u.values().iter().copied().fold(f64::INFINITY, f64::min);
    let worst = if min < -1e-10 { f64::INFINITY } else { err };
    CheckOutcome::new(1, worst, 1e-8, format!("{n_mesh}x{n_mesh}, status {:?}, min u = {min:.1e}", res.status))
}

/// Quadratic energy with `f = t³`: `t_u = (∫|∇u|²/∫u⁴)^{1/2}` and `t_u` is a
/// strict maximum along the ray.
pub fn check_fibering_oracle(rng: &mut ChaCha8Rng, n: usize) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 16, 16).unwrap();
    let ex = ExponentField::constant(&mesh, 2.0, 2.0, 0.0).unwrap();
    let mut prm = BTreeMap::new();
    prm.insert("r".to_string(), 4.0);
    let rhs = builtin_rhs("power", &prm, &ex).unwrap();
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for _ in 0..n {
        let amp = 10f64.powf(rng.gen_range(-1.0..1.0));
        let u = random_function(rng, &mesh, amp);
        let dir: f64 =
            crate::mesh::gradient_magnitudes(&mesh, &u).iter().zip(mesh.areas()).map(|(g, a)| a * g * g).sum();
        let quart = 4.0 * primitive_integral(&u, &mesh, &rhs, Part::Full);
        let closed = (dir / quart).sqrt();
        let root = match fibering_root(&u, &ex, &mesh, &rhs, &cfg) {
            Ok(r) => r,
            Err(e) => return CheckOutcome::failed(n, e.to_string()),
        };
        worst = worst.max((root.t - closed).abs() / closed);
        let top = energy_phi(&u.scaled(root.t), &ex, &mesh, &rhs);
        for t in [0.5 * root.t, 2.0 * root.t] {
            if energy_phi(&u.scaled(t), &ex, &mesh, &rhs) >= top {
                worst = f64::INFINITY;
            }
        }
    }
    CheckOutcome::new(n, worst, 1e-8, "relative error of t_u; strict maximum at t_u/2, 2 t_u")
}

/// Example (i) right-hand side, `p ≡ q ≡ 2.6`, `μ ≡ 0.5`: signs, nodal
/// count (1, 1), residuals and the energy ordering.
pub fn check_three_solutions(n_mesh: usize, seed: u64) -> CheckOutcome {
    let mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), n_mesh, n_mesh).unwrap();
    let ex = ExponentField::constant(&mesh, 2.6, 2.6, 0.5).unwrap();
    let mut prm = BTreeMap::new();
    prm.insert("eps".to_string(), 0.6);
    let rhs = builtin_rhs("example_i", &prm, &ex).unwrap();
    let cfg = SolverConfig { seed, ..SolverConfig::default() };
    let run = || -> Result<_> {
        Ok((
            solve_constant_sign(Sign::Plus, &ex, &mesh, &rhs, &cfg, None)?,
            solve_constant_sign(Sign::Minus, &ex, &mesh, &rhs, &cfg, None)?,
            solve_sign_changing(&ex, &mesh, &rhs, &cfg, None)?,
        ))
    };
    let (u, v, w) = match run() {
        Ok(r) => r,
        Err(e) => return CheckOutcome::failed(3, e.to_string()),
    };
    let mut problems = Vec::new();
    if u.u.values().iter().any(|&x| x < -1e-8) {
        problems.push("u0 has negative values");
    }
    if v.u.values().iter().any(|&x| x > 1e-8) {
        problems.push("v0 has positive values");
    }
    if w.nodal != (1, 1) {
        problems.push("w0 nodal count is not (1, 1)");
    }
    if [u.status, v.status, w.status].iter().any(|s| *s != Status::Converged) {
        problems.push("a solve did not converge");
    }
    if !(w.energy > u.energy.max(v.energy) && u.energy.min(v.energy) > 0.0) {
        problems.push("energy ordering fails");
    }
    let worst = u.residual.max(v.residual).max(w.residual);
    let worst = if problems.is_empty() { worst } else { f64::INFINITY };
    let detail = format!(
        "{n_mesh}x{n_mesh}: energies u0 {:.6e}, v0 {:.6e}, w0 {:.6e}, nodal {:?}{}{}",
        u.energy,
        v.energy,
        w.energy,
        w.nodal,
        if problems.is_empty() { "" } else { "; " },
        problems.join(", ")
    );
    CheckOutcome::new(3, worst, 1e-7, detail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_suite_passes_and_is_reproducible() {
        let opts = VerifyOptions { seed: 3, samples: 50, corrupt_cr: None };
        let a = run_suite(Suite::Scalar, &opts);
        assert!(a.pass, "{}", a.table());
        let b = run_suite(Suite::Scalar, &opts);
        assert_eq!(a.without_timing(), b.without_timing());
    }

    #[test]
    fn corrupted_constant_fails_the_named_check() {
        let opts = VerifyOptions { seed: 1, samples: 50, corrupt_cr: Some(1e3) };
        let r = run_suite(Suite::Scalar, &opts);
        assert!(!r.pass);
        let failing: Vec<_> = r.records.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        assert_eq!(failing, ["scalar.monotone"]);
    }

    #[test]
    fn modular_and_operator_suites_pass() {
        let opts = VerifyOptions { seed: 5, samples: 40, corrupt_cr: None };
        for suite in [Suite::Modular, Suite::Operator] {
            let r = run_suite(suite, &opts);
            assert!(r.pass, "{}", r.table());
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("everything".parse::<Suite>().is_err());
    }
}
