#![allow(clippy::needless_range_loop)]

use std::fs;

use logdp::harness::report::build_report;
use logdp::harness::{cmd_norm, cmd_report, cmd_solve, ExperimentConfig, Mode, SolveOptions, Summary};
use logdp::mesh::{build_rect_mesh, DiscreteFunction, Mesh};
use logdp::LogdpError;

fn square(n: usize) -> Mesh {
    build_rect_mesh((0.0, 1.0), (0.0, 1.0), n, n).unwrap()
}

fn config(text: &str, dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::parse(text).unwrap();
    c.output.dir = dir.display().to_string();
    c
}

const NODAL: &str = "
mesh.nx = 16
mesh.ny = 16
exponents.p = 2.6
exponents.q = 2.6
exponents.mu = 0.5
rhs.name = example_i
rhs.eps = 0.6
solver.seed = 7
";

#[test]
fn same_seed_gives_identical_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    cmd_solve(&config(NODAL, &a), Mode::All, &SolveOptions::default()).unwrap();
    cmd_solve(&config(NODAL, &b), Mode::All, &SolveOptions::default()).unwrap();
    let sa = fs::read(a.join("summary.json")).unwrap();
    let sb = fs::read(b.join("summary.json")).unwrap();
    assert_eq!(sa, sb);
    for f in ["u0.csv", "v0.csv", "w0.csv", "fibering_w0.dat"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let s: Summary = serde_json::from_slice(&sa).unwrap();
    assert!(s.success, "{s:?}");
    assert_eq!(s.solutions["w0"].n_pos, 1);
    assert_eq!(s.solutions["w0"].n_neg, 1);
    assert_eq!(s.energy_ordering.nodal_above_constant_sign, Some(true));
}

#[test]
fn gate_refuses_without_force_and_stamps_with_it() {
    let text = "
mesh.nx = 8
mesh.ny = 8
exponents.p = 1.5
exponents.q = 5.5
exponents.mu = 0.5
rhs.name = power
rhs.r = 5.8
solver.max_iters = 50
";
    let tmp = tempfile::tempdir().unwrap();
    let c = config(text, tmp.path());
    match cmd_solve(&c, Mode::Nodal, &SolveOptions::default()) {
        Err(LogdpError::Assumption(msg)) => assert!(msg.contains("(H3)"), "{msg}"),
        other => panic!("expected assumption error, got {:?}", other.map(|r| r.summary)),
    }
    assert!(!tmp.path().join("summary.json").exists());
    let run = cmd_solve(&c, Mode::Nodal, &SolveOptions { force: true, ..Default::default() }).unwrap();
    assert!(run.summary.forced);
    assert!(run.summary.warnings.iter().any(|w| w.starts_with("forced: (H3)")), "{:?}", run.summary.warnings);
    assert!(tmp.path().join("summary.json").exists());
    // (H2) still holds, so the constant-sign modes are not gated
    assert!(
        cmd_solve(&c, Mode::Positive, &SolveOptions { out: Some(tmp.path().join("p")), ..Default::default() }).is_ok()
    );
}

#[test]
fn fixed_mode_matches_a_linear_solve() {
    let text = "
mesh.nx = 24
mesh.ny = 24
rhs.name = constant
rhs.c = 1
solver.tol_residual = 1e-12
";
    let tmp = tempfile::tempdir().unwrap();
    let run = cmd_solve(&config(text, tmp.path()), Mode::Fixed, &SolveOptions::default()).unwrap();
    assert!(run.summary.success);
    let mesh = square(24);
    let u = DiscreteFunction::read_csv(&mesh, &tmp.path().join("u.csv")).unwrap();
    // independent oracle: dense Gaussian elimination on the P1 Laplacian
    let interior: Vec<usize> = (0..mesh.n_nodes()).filter(|&i| !mesh.boundary_mask()[i]).collect();
    let mut idx = vec![usize::MAX; mesh.n_nodes()];
    for (k, &i) in interior.iter().enumerate() {
        idx[i] = k;
    }
    let n = interior.len();
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for e in 0..mesh.n_elements() {
        let tri = mesh.elements()[e];
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.nodes()[v]).collect();
        let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
        let grads: Vec<[f64; 2]> = (0..3)
            .map(|k| {
                let (b, c) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                [(b[1] - c[1]) / (2.0 * area), (c[0] - b[0]) / (2.0 * area)]
            })
            .collect();
        for i in 0..3 {
            let ri = idx[tri[i]];
            if ri == usize::MAX {
                continue;
            }
            a[ri][n] += area / 3.0;
            for j in 0..3 {
                let cj = idx[tri[j]];
                if cj != usize::MAX {
                    a[ri][cj] += area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                }
            }
        }
    }
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    let err = interior.iter().enumerate().map(|(k, &i)| (u.values()[i] - x[k]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "sup error {err}");
}

#[test]
fn norm_of_zero_and_linear_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "
mesh.nx = 10
mesh.ny = 10
exponents.p = 2
exponents.q = 3
exponents.mu = 0.5
rhs.name = zero
";
    let c = config(text, tmp.path());
    let mesh = square(10);
    let zero = DiscreteFunction::zeros(&mesh);
    let path = tmp.path().join("zero.csv");
    zero.write_csv(&mesh, &path).unwrap();
    let r = cmd_norm(&c, &path).unwrap();
    assert_eq!((r.modular.p_part, r.modular.logq_part, r.modular.total, r.norm), (0.0, 0.0, 0.0, 0.0));
    assert!(r.sandwich_pass);

    // the pyramid 0.7·dist(x, ∂Ω) is piecewise linear on the union-jack mesh
    // with |∇u| = 0.7 on every element
    let lin = DiscreteFunction::from_fn(&mesh, |x, y| 0.7 * x.min(1.0 - x).min(y).min(1.0 - y));
    let path = tmp.path().join("lin.csv");
    lin.write_csv(&mesh, &path).unwrap();
    let r = cmd_norm(&c, &path).unwrap();
    let g: f64 = 0.7;
    let expect = g * g + 0.5 * g.powi(3) * (std::f64::consts::E + g).ln();
    assert!((r.modular.total - expect).abs() < 1e-13, "{} vs {expect}", r.modular.total);
    // ρ(g/λ) = 1 solved by bisection on the closed form
    let rho = |l: f64| (g / l).powi(2) + 0.5 * (g / l).powi(3) * (std::f64::consts::E + g / l).ln();
    let (mut lo, mut hi) = (1e-3, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    assert!((r.norm - lo).abs() < 1e-9 * lo, "{} vs {lo}", r.norm);
    assert!(r.sandwich_pass);
    assert_eq!(r.sandwich.low_exp, 2.0);

    let wrong = square(5);
    DiscreteFunction::zeros(&wrong).write_csv(&wrong, &path).unwrap();
    assert!(cmd_norm(&c, &path).is_err());
}

#[test]
fn report_aggregates_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let r = cmd_report(&empty, &tmp.path().join("rep0")).unwrap();
    assert!(r.rows.is_empty() && r.problems.is_empty());
    assert!(tmp.path().join("rep0/report.txt").exists());

    for n in [8, 12] {
        let text =
            NODAL.replace("mesh.nx = 16", &format!("mesh.nx = {n}")).replace("mesh.ny = 16", &format!("mesh.ny = {n}"));
        cmd_solve(&config(&text, &runs.join(format!("n{n}"))), Mode::Positive, &SolveOptions::default()).unwrap();
    }
    fs::create_dir_all(runs.join("broken")).unwrap();
    fs::write(runs.join("broken/summary.json"), "{ not json").unwrap();

    let out = tmp.path().join("rep");
    let r = cmd_report(&runs, &out).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.problems.len(), 1);
    assert_eq!((r.rows[0].nx, r.rows[1].nx), (8, 12));
    assert!(r.rows[0].energy_diff.is_none());
    let d = r.rows[1].energy_diff.unwrap();
    assert_eq!(d, r.rows[1].energies["u0"] - r.rows[0].energies["u0"]);
    assert_eq!(build_report(&runs).unwrap(), r);

    let dat = fs::read_to_string(out.join("energy_vs_h.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count(), 2);
    let prof = fs::read_to_string(out.join("fibering_profiles.dat")).unwrap();
    let data: Vec<Vec<f64>> = prof
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(data.len(), 400);
    // the stored solution lies on the Nehari manifold: θ′(1) ≈ 0 and θ peaks there
    let block = &data[..200];
    let imax = (0..200).max_by(|&a, &b| block[a][1].total_cmp(&block[b][1])).unwrap();
    assert!((block[imax][0].ln()).abs() < 2.0 * (1e4f64).ln() / 199.0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
}
