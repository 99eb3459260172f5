use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use logdp::harness::{
    cmd_norm, cmd_report, cmd_solve, norm_table, report_table, run_suite, summary_table, ExperimentConfig, Mode,
    SolveOptions, Suite, VerifyOptions,
};
use logdp::LogdpError;

#[derive(Parser)]
#[command(name = "logdp", version, about = "Logarithmic double phase solvers and property checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a property-check suite.
    Verify {
        /// scalar, modular, operator, solver or all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Multiply the monotonicity constant (negative control).
        #[arg(long, hide = true)]
        corrupt_cr: Option<f64>,
        /// Directory for verify.json and verify.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the problem described by a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// fixed, positive, negative, nodal or all
        #[arg(long, default_value = "all")]
        mode: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Run even if the structural assumptions fail.
        #[arg(long)]
        force: bool,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Modular and Luxemburg norm of the gradient of a stored field.
    Norm {
        #[arg(long)]
        config: PathBuf,
        /// CSV file with columns id,x,y,value.
        field: PathBuf,
    },
    /// Aggregate the summary.json files below a directory.
    Report {
        dir: PathBuf,
        /// Output directory (defaults to DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &LogdpError) -> u8 {
    match e {
        LogdpError::Config(_)
        | LogdpError::Assumption(_)
        | LogdpError::Expr { .. }
        | LogdpError::Shape { .. }
        | LogdpError::Io(_) => 2,
        _ => 1,
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, LogdpError> {
    ExperimentConfig::load(path).map_err(|e| match e {
        LogdpError::Io(io) => LogdpError::Config(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn run(cmd: Cmd) -> Result<bool, LogdpError> {
    match cmd {
        Cmd::Verify { suite, seed, samples, corrupt_cr, out } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite, &VerifyOptions { seed, samples, corrupt_cr });
            let table = report.table();
            print!("{table}");
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("verify.txt"), &table)?;
                fs::write(dir.join("verify.json"), serde_json::to_string_pretty(&report)? + "\n")?;
            }
            Ok(report.pass)
        }
        Cmd::Solve { config, mode, seed, force, out } => {
            let mode: Mode = mode.parse()?;
            let cfg = load(&config)?;
            let run = cmd_solve(&cfg, mode, &SolveOptions { force, out, seed })?;
            print!("{}", summary_table(&run.summary));
            println!("output: {}", run.dir.display());
            Ok(run.summary.success)
        }
        Cmd::Norm { config, field } => {
            let cfg = load(&config)?;
            let r = cmd_norm(&cfg, &field)?;
            print!("{}", norm_table(&r));
            Ok(r.sandwich_pass)
        }
        Cmd::Report { dir, out } => {
            if !dir.is_dir() {
                return Err(LogdpError::Config(format!("{} is not a directory", dir.display())));
            }
            let out = out.unwrap_or_else(|| dir.clone());
            let r = cmd_report(&dir, &out)?;
            print!("{}", report_table(&r));
            for (path, why) in &r.problems {
                eprintln!("warning: skipped {path}: {why}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    logdp::configure_threads_from_env();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
