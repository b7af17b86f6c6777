//! `vacflow` — vacuum-boundary Lagrangian flow laboratory.
//!
//! Exit codes: 0 success, 1 property-verification failure, 2 guardrail
//! breach, 3 solver failure, 4 usage or configuration error.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vacflow_core::config::SimConfig;
use vacflow_core::convergence::{run_study, StudyKind};
use vacflow_core::degelliptic::EllipticProblem;
use vacflow_core::dynamics::{self, Termination};
use vacflow_core::energies::EnergyReport;
use vacflow_core::error::Error as CoreError;
use vacflow_core::geometry::Kinematics;
use vacflow_core::{energies, io, verify};

const EXIT_OK: u8 = 0;
const EXIT_VERIFY: u8 = 1;
const EXIT_GUARDRAIL: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "vacflow",
    about = "Lagrangian free-boundary gas dynamics on a slab with a vacuum interface",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow and emit trace.csv, field dumps, manifest.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the fixed-point iteration scheme and emit picard.csv.
    Iterate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the degenerate elliptic equation for each field in a dump.
    EllipticSolve {
        #[arg(long)]
        config: PathBuf,
        /// Dump stem (reads <stem>.bin and <stem>.json).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the energy functionals of a state.
    EnergyReport {
        #[arg(long)]
        config: PathBuf,
        /// Optional state dump stem; the configured initial data otherwise.
        #[arg(long)]
        fields: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a refinement-order study.
    Convergence {
        /// One of: elliptic, energy-drift, curl-residual, piola.
        #[arg(long)]
        study: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the property-verification suite.
    Verify {
        #[arg(long, default_value_t = 0xC0FFEE)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through here as well.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::from(EXIT_OK)
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Map error causes onto the documented exit codes.
fn classify(e: &anyhow::Error) -> u8 {
    if let Some(core) = e.downcast_ref::<CoreError>() {
        match core {
            CoreError::GuardrailBreach { .. } => EXIT_GUARDRAIL,
            CoreError::SolverFailure { .. } => EXIT_SOLVER,
            _ => EXIT_USAGE,
        }
    } else {
        EXIT_USAGE
    }
}

fn termination_exit(t: &Termination) -> u8 {
    match t {
        Termination::Completed => EXIT_OK,
        Termination::GuardrailBreach { .. } => EXIT_GUARDRAIL,
        Termination::SolverFailure { .. } => EXIT_SOLVER,
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<u8> {
    match cmd {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Iterate {
            config,
            iterations,
            out,
        } => iterate(&config, iterations, &out),
        Command::EllipticSolve { config, input, out } => elliptic_solve(&config, &input, &out),
        Command::EnergyReport {
            config,
            fields,
            out,
        } => energy_report(&config, fields.as_deref(), out.as_deref()),
        Command::Convergence { study, out } => convergence(&study, out.as_deref()),
        Command::Verify { seed } => Ok(run_verify(seed)),
    }
}

fn load(config: &Path) -> anyhow::Result<(SimConfig, serde_json::Value)> {
    let cfg = SimConfig::from_path(config)?;
    let echo = serde_json::to_value(&cfg)?;
    Ok((cfg, echo))
}

fn simulate(config: &Path, out: &Path) -> anyhow::Result<u8> {
    let (cfg, echo) = load(config)?;
    std::fs::create_dir_all(out)?;
    let mut manifest = io::RunManifest::new(echo, io::unix_now());
    let grid = cfg.build_grid()?;

    let mut reports: Vec<EnergyReport> = Vec::new();
    let mut dumped: Vec<PathBuf> = Vec::new();
    let (termination, _final_state) = dynamics::simulate_stream(&cfg, |report, state| {
        let stem = out.join(format!("fields_{:06}", reports.len()));
        let (bin, json) = io::write_state(&stem, &grid, state)?;
        dumped.push(bin);
        dumped.push(json);
        reports.push(report.clone());
        Ok(())
    })?;

    let trace_path = out.join("trace.csv");
    io::write_trace(&trace_path, &reports)?;
    manifest.push_artifact(&trace_path);
    for p in &dumped {
        manifest.push_artifact(p);
    }
    manifest.record_termination(&termination);
    manifest.ended_unix = io::unix_now();
    let manifest_path = out.join("manifest.json");
    manifest.push_artifact(&manifest_path);
    manifest.write(&manifest_path)?;

    println!(
        "simulate: {} rows, termination {}",
        reports.len(),
        termination.as_str()
    );
    if let Termination::GuardrailBreach { t, a_dev, .. } = &termination {
        println!("guardrail breach at t = {t:.6} (max |A - I| = {a_dev:.4})");
    }
    Ok(termination_exit(&termination))
}

fn iterate(config: &Path, iterations: usize, out: &Path) -> anyhow::Result<u8> {
    let (cfg, echo) = load(config)?;
    std::fs::create_dir_all(out)?;
    let mut manifest = io::RunManifest::new(echo, io::unix_now());
    let grid = cfg.build_grid()?;

    let trace = dynamics::picard_run(&cfg, iterations)?;
    let picard_path = out.join("picard.csv");
    {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(&picard_path)?);
        writeln!(f, "iter,defect,Adev,Jmin,Jmax")?;
        for it in &trace.iters {
            writeln!(
                f,
                "{},{},{},{},{}",
                it.iter, it.defect, it.inv_dev, it.det_min, it.det_max
            )?;
        }
    }
    manifest.push_artifact(&picard_path);
    let stem = out.join("fields_final");
    let (bin, json) = io::write_state(&stem, &grid, &trace.final_state)?;
    manifest.push_artifact(&bin);
    manifest.push_artifact(&json);
    manifest.record_termination(&trace.termination);
    manifest.ended_unix = io::unix_now();
    let manifest_path = out.join("manifest.json");
    manifest.push_artifact(&manifest_path);
    manifest.write(&manifest_path)?;

    for it in &trace.iters {
        println!(
            "iteration {:2}: defect {:.6e}  max|A-I| {:.4}  J in [{:.4}, {:.4}]",
            it.iter, it.defect, it.inv_dev, it.det_min, it.det_max
        );
    }
    Ok(termination_exit(&trace.termination))
}

fn elliptic_solve(config: &Path, input: &Path, out: &Path) -> anyhow::Result<u8> {
    let (cfg, echo) = load(config)?;
    std::fs::create_dir_all(out)?;
    let mut manifest = io::RunManifest::new(echo, io::unix_now());

    let (grid, fields) = io::read_fields(input)?;
    let wf = cfg.build_weight(&grid)?;
    let prob = EllipticProblem::new(&wf, cfg.lambda, &grid, cfg.solver_tol, cfg.solver_max_iter)?;

    let mut solutions = Vec::new();
    let mut residual_rows = Vec::new();
    for (name, rhs) in &fields {
        match prob.solve_from(rhs, vacflow_core::ScalarField::zeros(&grid)) {
            Ok((u, report)) => {
                for (k, r) in report.history.iter().enumerate() {
                    residual_rows.push(format!("{name},{},{}", k + 1, r));
                }
                solutions.push((format!("u_{name}"), u));
            }
            Err(e) => {
                manifest.record_termination(&Termination::SolverFailure {
                    residual: f64::NAN,
                    iters: 0,
                });
                manifest.ended_unix = io::unix_now();
                manifest.write(&out.join("manifest.json"))?;
                return Err(e.into());
            }
        }
    }

    let stem = out.join("solution");
    let named: Vec<(&str, &vacflow_core::ScalarField)> =
        solutions.iter().map(|(n, f)| (n.as_str(), f)).collect();
    let (bin, json) = io::write_fields(&stem, &grid, &named)?;
    manifest.push_artifact(&bin);
    manifest.push_artifact(&json);

    let residuals_path = out.join("residuals.csv");
    std::fs::write(
        &residuals_path,
        format!("field,iter,rel_residual\n{}\n", residual_rows.join("\n")),
    )?;
    manifest.push_artifact(&residuals_path);
    manifest.ended_unix = io::unix_now();
    let manifest_path = out.join("manifest.json");
    manifest.push_artifact(&manifest_path);
    manifest.write(&manifest_path)?;

    println!("elliptic-solve: {} fields solved", solutions.len());
    Ok(EXIT_OK)
}

fn energy_report(config: &Path, fields: Option<&Path>, out: Option<&Path>) -> anyhow::Result<u8> {
    let (cfg, echo) = load(config)?;
    let (grid, state) = match fields {
        Some(stem) => io::read_state(stem, 0.0)?,
        None => {
            let grid = cfg.build_grid()?;
            let state = dynamics::FlowState::initial(&grid, cfg.initial_velocity(&grid));
            (grid, state)
        }
    };
    let wf = cfg.build_weight(&grid)?;
    let kin = Kinematics::from_displacement(&state.disp, &grid)?;
    let report = energies::total_energy(
        &state.disp,
        &state.vel,
        state.t,
        &kin,
        &wf,
        cfg.n_monitor,
        &grid,
        cfg.max_deriv_order,
    )?;
    println!("{}", EnergyReport::CSV_HEADER);
    println!("{}", report.csv_row());
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        let mut manifest = io::RunManifest::new(echo, io::unix_now());
        let path = out.join("energy.csv");
        io::write_trace(&path, std::slice::from_ref(&report))?;
        manifest.push_artifact(&path);
        manifest.ended_unix = io::unix_now();
        let manifest_path = out.join("manifest.json");
        manifest.push_artifact(&manifest_path);
        manifest.write(&manifest_path)?;
    }
    Ok(EXIT_OK)
}

fn convergence(study: &str, out: Option<&Path>) -> anyhow::Result<u8> {
    let kind: StudyKind = study.parse()?;
    let report = run_study(kind)?;
    print!("{}", report.render());
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        let mut rows = vec![format!("{},error", report.param_name)];
        rows.extend(
            report
                .levels
                .iter()
                .map(|l| format!("{},{}", l.param, l.error)),
        );
        std::fs::write(out.join("study.csv"), rows.join("\n") + "\n")?;
    }
    Ok(EXIT_OK)
}

fn run_verify(seed: u64) -> u8 {
    let checks = verify::run_all(seed);
    let mut failed = 0usize;
    for c in &checks {
        println!(
            "{} {} -- {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        if !c.pass {
            failed += 1;
        }
    }
    println!(
        "verify: {}/{} properties passed (seed {seed})",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}
