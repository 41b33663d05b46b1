//! Executes a validated config: builds each (geometry, resolution) once,
//! runs its jobs in config order, and funnels every report through one sink.
//!
//! Exit classes follow a fixed precedence. Structural problems found at run
//! time (wrong backend, out-of-range order, unusable input file) count as
//! config errors; measured hypothesis failures are flags on written reports;
//! numerical breakdowns are solver failures.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use schur_core::mesh::io::load_mesh;
use schur_core::verify::{
    estimate_c, prescribe_c, reports_to_csv, reports_to_json, run_theorem, verify_general_tensor,
    Domain, InequalityReport, TensorField, TheoremJob, VerifyError,
};

use crate::config::{
    parse_tensor_csv, Config, GeometryInput, JobSpec, OutputFormat, TaskSpec, TensorInput,
};

/// Process exit classes in precedence order: a config error wins over a
/// solver failure, which wins over a violated inequality, which wins over a
/// hypothesis flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Pass,
    Violation,
    BadConfig,
    HypothesisFail,
    SolverFail,
}

impl ExitClass {
    pub fn code(self) -> u8 {
        match self {
            ExitClass::Pass => 0,
            ExitClass::Violation => 1,
            ExitClass::BadConfig => 2,
            ExitClass::HypothesisFail => 3,
            ExitClass::SolverFail => 4,
        }
    }

    fn worst(a: ExitClass, b: ExitClass) -> ExitClass {
        use ExitClass::*;
        for c in [BadConfig, SolverFail, Violation, HypothesisFail] {
            if a == c || b == c {
                return c;
            }
        }
        Pass
    }
}

/// Run-time errors that mean the request itself was invalid, as opposed to
/// the solver breaking down on a valid one.
fn classify_error(e: &VerifyError) -> ExitClass {
    match e {
        VerifyError::Backend { .. }
        | VerifyError::OrderRange { .. }
        | VerifyError::BadParameter { .. }
        | VerifyError::NotConformallyFlat(_)
        | VerifyError::CNotEstimable
        | VerifyError::Generate(_)
        | VerifyError::ResolutionList(_) => ExitClass::BadConfig,
        VerifyError::Tensor(_)
        | VerifyError::Grid(_)
        | VerifyError::Mesh(_)
        | VerifyError::Elliptic(_)
        | VerifyError::ConsistencyGate { .. } => ExitClass::SolverFail,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReportStatus {
    Ok,
    Equality,
    Trivial,
    Hypothesis,
    Violated,
}

impl ReportStatus {
    fn label(self) -> &'static str {
        match self {
            ReportStatus::Ok => "ok",
            ReportStatus::Equality => "equality",
            ReportStatus::Trivial => "trivial",
            ReportStatus::Hypothesis => "hypothesis",
            ReportStatus::Violated => "VIOLATED",
        }
    }

    fn exit(self) -> ExitClass {
        match self {
            ReportStatus::Ok | ReportStatus::Equality | ReportStatus::Trivial => ExitClass::Pass,
            ReportStatus::Hypothesis => ExitClass::HypothesisFail,
            ReportStatus::Violated => ExitClass::Violation,
        }
    }
}

fn classify_report(r: &InequalityReport, eps_disc: f64) -> ReportStatus {
    if r.trivial {
        return ReportStatus::Trivial;
    }
    if !r.hypothesis.satisfied {
        return ReportStatus::Hypothesis;
    }
    if r.equality {
        return ReportStatus::Equality;
    }
    match r.ratio {
        Some(ratio) if ratio <= 1.0 + eps_disc => ReportStatus::Ok,
        // A missing ratio on a non-equality report means lhs > eps >= rhs.
        _ => ReportStatus::Violated,
    }
}

/// One (task, resolution) work item. Mesh files have no resolution sweep.
struct Unit<'a> {
    task_index: usize,
    task: &'a TaskSpec,
    resolution: Option<usize>,
}

struct UnitOutcome {
    reports: Vec<InequalityReport>,
    error: Option<(ExitClass, String)>,
}

fn build_domain(unit: &Unit) -> Result<Domain, (ExitClass, String)> {
    match &unit.task.geometry {
        GeometryInput::Spec(spec) => {
            let res = unit.resolution.expect("generated geometries always carry a resolution");
            Domain::build(spec, res).map_err(|e| {
                (
                    classify_error(&e),
                    format!("tasks[{}]: building {} at {res}: {e}", unit.task_index, spec.name()),
                )
            })
        }
        GeometryInput::MeshFile(path) => {
            let fail = |e: &dyn std::fmt::Display| {
                (
                    ExitClass::BadConfig,
                    format!("tasks[{}]: mesh file {}: {e}", unit.task_index, path.display()),
                )
            };
            let mesh = load_mesh(path).map_err(|e| fail(&e))?;
            let name = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            Domain::from_mesh(mesh, name, "file".to_string()).map_err(|e| fail(&e))
        }
    }
}

fn run_job(
    domain: &Domain,
    job: &JobSpec,
    job_path: &str,
) -> Result<Vec<InequalityReport>, (ExitClass, String)> {
    let verify_err = |e: VerifyError| (classify_error(&e), format!("{job_path}: {e}"));
    let theorem_job = match job {
        JobSpec::General { tensor: TensorInput::Choice(choice), c, convention, k_mode } => {
            TheoremJob::GeneralTensor { choice: *choice, c: *c, convention: *convention, k_mode: *k_mode }
        }
        JobSpec::General { tensor: TensorInput::FromFile(path), c, convention, k_mode } => {
            // File tensors are packed grid samples; there is no mesh layout.
            if domain.grid().is_none() {
                return Err((
                    ExitClass::BadConfig,
                    format!("{job_path}: custom-from-file tensors need a grid geometry"),
                ));
            }
            let text = fs::read_to_string(path).map_err(|e| {
                (ExitClass::BadConfig, format!("{job_path}: reading {}: {e}", path.display()))
            })?;
            let sym = parse_tensor_csv(&text, domain.n(), domain.size()).map_err(|e| {
                (ExitClass::BadConfig, format!("{job_path}: {}: {e}", path.display()))
            })?;
            let field = TensorField::Grid(sym);
            let fit = match c {
                Some(c) => prescribe_c(domain, &field, *c),
                None => estimate_c(domain, &field),
            }
            .map_err(verify_err)?;
            return verify_general_tensor(domain, &field, &fit, *convention, *k_mode)
                .map(|pair| pair.to_vec())
                .map_err(verify_err);
        }
        JobSpec::Hypersurface { r, k_mode } => TheoremJob::Hypersurface { r: *r, k_mode: *k_mode },
        JobSpec::KScalar { k, k_mode } => TheoremJob::KScalar { k: *k, k_mode: *k_mode },
        JobSpec::Perez => TheoremJob::Perez,
    };
    run_theorem(domain, &theorem_job).map_err(verify_err)
}

fn execute_unit(unit: &Unit) -> UnitOutcome {
    let domain = match build_domain(unit) {
        Ok(d) => d,
        Err(err) => return UnitOutcome { reports: Vec::new(), error: Some(err) },
    };
    let mut reports = Vec::new();
    for (j, job) in unit.task.jobs.iter().enumerate() {
        let job_path = format!(
            "tasks[{}].jobs[{j}] ({} on {} at {})",
            unit.task_index,
            job.theorem(),
            domain.name(),
            domain.resolution(),
        );
        match run_job(&domain, job, &job_path) {
            Ok(mut r) => reports.append(&mut r),
            // Later jobs on this geometry would mostly repeat the failure;
            // other units still run.
            Err(err) => return UnitOutcome { reports, error: Some(err) },
        }
    }
    UnitOutcome { reports, error: None }
}

fn summary_table(reports: &[InequalityReport], eps_disc: f64) -> String {
    let mut rows: Vec<[String; 5]> = vec![[
        "theorem".into(),
        "geometry".into(),
        "resolution".into(),
        "ratio".into(),
        "status".into(),
    ]];
    for r in reports {
        let ratio = match r.ratio {
            Some(v) => format!("{v:.6}"),
            None => "-".into(),
        };
        rows.push([
            format!("{}:{}", r.theorem, r.equation),
            r.geometry.clone(),
            r.resolution.clone(),
            ratio,
            classify_report(r, eps_disc).label().into(),
        ]);
    }
    let mut width = [0usize; 5];
    for row in &rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &rows {
        for (i, (w, cell)) in width.iter().zip(row).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(cell);
            if i + 1 < row.len() {
                for _ in cell.len()..*w {
                    out.push(' ');
                }
            }
        }
        out.push('\n');
    }
    out
}

fn write_reports(
    reports: &[InequalityReport],
    dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, String> {
    fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = dir.join("reports.csv");
        fs::write(&path, reports_to_csv(reports)).map_err(|e| format!("writing {}: {e}", path.display()))?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = dir.join("reports.json");
        let json = reports_to_json(reports).map_err(|e| format!("serializing reports: {e}"))?;
        fs::write(&path, json).map_err(|e| format!("writing {}: {e}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

/// Run every unit of `config`, print the summary table, write report files,
/// and fold the per-report statuses and per-unit errors into one exit class.
pub fn run_verify(
    config: &Config,
    out_override: Option<PathBuf>,
    format_override: Option<OutputFormat>,
) -> ExitClass {
    let units: Vec<Unit> = config
        .tasks
        .iter()
        .enumerate()
        .flat_map(|(task_index, task)| -> Vec<Unit> {
            if task.resolutions.is_empty() {
                vec![Unit { task_index, task, resolution: None }]
            } else {
                task.resolutions
                    .iter()
                    .map(|&r| Unit { task_index, task, resolution: Some(r) })
                    .collect()
            }
        })
        .collect();

    // Ordered collect keeps report order independent of scheduling.
    let outcomes: Vec<UnitOutcome> = units.par_iter().map(execute_unit).collect();

    let mut reports = Vec::new();
    let mut exit = ExitClass::Pass;
    let mut errors = Vec::new();
    for outcome in outcomes {
        for report in &outcome.reports {
            exit = ExitClass::worst(exit, classify_report(report, config.eps_disc).exit());
        }
        reports.extend(outcome.reports);
        if let Some((class, msg)) = outcome.error {
            exit = ExitClass::worst(exit, class);
            errors.push(msg);
        }
    }

    print!("{}", summary_table(&reports, config.eps_disc));
    let out_dir = out_override
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("schur-reports"));
    let format = format_override.or(config.format).unwrap_or(OutputFormat::Both);
    match write_reports(&reports, &out_dir, format) {
        Ok(written) => {
            let names: Vec<String> =
                written.iter().map(|p| p.display().to_string()).collect();
            println!("{} reports written: {}", reports.len(), names.join(", "));
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            exit = ExitClass::worst(exit, ExitClass::SolverFail);
        }
    }
    for msg in &errors {
        eprintln!("error: {msg}");
    }
    exit
}
