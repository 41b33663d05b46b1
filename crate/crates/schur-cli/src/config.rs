//! Versioned JSON run configuration.
//!
//! Parsing is two-stage: serde gets the shape (unknown keys rejected), then
//! every field is validated in place so error messages carry the path to the
//! offending field. Nothing is computed until the whole config is valid.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use schur_core::grid::build::{ConformalPhi, EmbeddedSpec, IntrinsicSpec};
use schur_core::grid::{sym_idx, SymField, MIN_RESOLUTION};
use schur_core::mesh::generate::MAX_SUBDIV;
use schur_core::verify::{GeometrySpec, KConvention, KMode, TensorChoice};

pub const CONFIG_VERSION: u64 = 1;
pub const DEFAULT_EPS_DISC: f64 = 0.05;

/// Config rejection with the path of the offending field.
#[derive(Debug, thiserror::Error)]
#[error("{path}: {msg}")]
pub struct ConfigError {
    pub path: String,
    pub msg: String,
}

fn bad(path: impl Display, msg: impl Into<String>) -> ConfigError {
    ConfigError { path: path.to_string(), msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    fn parse(path: &str, s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(bad(path, format!("unknown format '{other}', expected csv | json | both"))),
        }
    }
}

/// A geometry to build: a generator spec or a mesh file on disk.
#[derive(Debug, Clone)]
pub enum GeometryInput {
    Spec(GeometrySpec),
    MeshFile(PathBuf),
}

/// The tensor T of a general-statement job.
#[derive(Debug, Clone)]
pub enum TensorInput {
    Choice(TensorChoice),
    /// Packed symmetric components read from CSV at run time; grids only.
    FromFile(PathBuf),
}

/// One validated verification job.
#[derive(Debug, Clone)]
pub enum JobSpec {
    General { tensor: TensorInput, c: Option<f64>, convention: KConvention, k_mode: KMode },
    Hypersurface { r: usize, k_mode: KMode },
    KScalar { k: usize, k_mode: KMode },
    Perez,
}

impl JobSpec {
    /// Theorem id this job reports under.
    pub fn theorem(&self) -> &'static str {
        match self {
            JobSpec::General { k_mode: KMode::Measured, .. } => "thm-1.7",
            JobSpec::General { k_mode: KMode::ForcedZero, .. } => "thm-1.8",
            JobSpec::Hypersurface { k_mode: KMode::Measured, .. } => "thm-1.9",
            JobSpec::Hypersurface { k_mode: KMode::ForcedZero, .. } => "thm-1.10",
            JobSpec::KScalar { k_mode: KMode::Measured, .. } => "thm-1.11",
            JobSpec::KScalar { k_mode: KMode::ForcedZero, .. } => "thm-1.12",
            JobSpec::Perez => "perez-r1",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskSpec {
    pub geometry: GeometryInput,
    /// Per-axis resolution on grids, subdivision depth on meshes; empty
    /// exactly for mesh files.
    pub resolutions: Vec<usize>,
    pub jobs: Vec<JobSpec>,
}

#[derive(Debug)]
pub struct Config {
    pub eps_disc: f64,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub tasks: Vec<TaskSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u64,
    eps_disc: Option<f64>,
    out_dir: Option<String>,
    format: Option<String>,
    tasks: Vec<RawTask>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    geometry: RawGeometry,
    resolutions: Option<Vec<usize>>,
    jobs: Vec<RawJob>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    kind: String,
    n: Option<usize>,
    len: Option<f64>,
    phi: Option<String>,
    eps: Option<f64>,
    eps_axis: Option<Vec<f64>>,
    r1: Option<f64>,
    r: Option<f64>,
    d: Option<f64>,
    rho: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    l: Option<u32>,
    path: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJob {
    theorem: String,
    tensor: Option<RawTensor>,
    c: Option<f64>,
    convention: Option<String>,
    r: Option<usize>,
    k: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensor {
    kind: String,
    r: Option<usize>,
    k: Option<usize>,
    path: Option<String>,
}

/// Collects which optional fields are set so each kind can insist on exactly
/// its own parameter list.
struct FieldSet<'a> {
    path: &'a str,
    set: Vec<&'static str>,
}

impl<'a> FieldSet<'a> {
    fn new(path: &'a str) -> Self {
        Self { path, set: Vec::new() }
    }

    fn take<T>(&mut self, name: &'static str, v: &Option<T>) -> bool {
        if v.is_some() {
            self.set.push(name);
        }
        v.is_some()
    }

    fn require<T: Clone>(
        &self,
        kind: &str,
        name: &'static str,
        v: &Option<T>,
    ) -> Result<T, ConfigError> {
        v.clone()
            .ok_or_else(|| bad(format!("{}.{name}", self.path), format!("required for kind '{kind}'")))
    }

    /// Every set field must be in `allowed`.
    fn only(&self, kind: &str, allowed: &[&'static str]) -> Result<(), ConfigError> {
        for name in &self.set {
            if !allowed.contains(name) {
                return Err(bad(
                    format!("{}.{name}", self.path),
                    format!("field does not apply to kind '{kind}'"),
                ));
            }
        }
        Ok(())
    }
}

fn parse_phi(path: &str, s: &str) -> Result<ConformalPhi, ConfigError> {
    match s {
        "sin-x" => Ok(ConformalPhi::SinX),
        "sin-cos" => Ok(ConformalPhi::SinCos),
        "triple" => Ok(ConformalPhi::Triple),
        other => Err(bad(
            format!("{path}.phi"),
            format!("unknown profile '{other}', expected sin-x | sin-cos | triple"),
        )),
    }
}

fn validate_geometry(
    path: &str,
    raw: &RawGeometry,
    config_dir: &Path,
) -> Result<GeometryInput, ConfigError> {
    let mut f = FieldSet::new(path);
    f.take("n", &raw.n);
    f.take("len", &raw.len);
    f.take("phi", &raw.phi);
    f.take("eps", &raw.eps);
    f.take("eps_axis", &raw.eps_axis);
    f.take("r1", &raw.r1);
    f.take("r", &raw.r);
    f.take("d", &raw.d);
    f.take("rho", &raw.rho);
    f.take("a", &raw.a);
    f.take("b", &raw.b);
    f.take("c", &raw.c);
    f.take("l", &raw.l);
    f.take("path", &raw.path);
    let kind = raw.kind.as_str();
    let spec = match kind {
        "flat" => {
            f.only(kind, &["n", "len"])?;
            GeometrySpec::Intrinsic(IntrinsicSpec::Flat {
                n: f.require(kind, "n", &raw.n)?,
                len: f.require(kind, "len", &raw.len)?,
            })
        }
        "conformal" => {
            f.only(kind, &["n", "len", "phi", "eps"])?;
            GeometrySpec::Intrinsic(IntrinsicSpec::Conformal {
                n: f.require(kind, "n", &raw.n)?,
                len: f.require(kind, "len", &raw.len)?,
                phi: parse_phi(path, &f.require(kind, "phi", &raw.phi)?)?,
                eps: f.require(kind, "eps", &raw.eps)?,
            })
        }
        "product" => {
            f.only(kind, &["len", "eps", "eps_axis"])?;
            GeometrySpec::Intrinsic(IntrinsicSpec::Product {
                len: f.require(kind, "len", &raw.len)?,
                eps: f.require(kind, "eps", &raw.eps)?,
                eps_axis: f.require(kind, "eps_axis", &raw.eps_axis)?,
            })
        }
        "torus3" => {
            f.only(kind, &["r1", "r"])?;
            GeometrySpec::Embedded(EmbeddedSpec::Torus3 {
                r1: f.require(kind, "r1", &raw.r1)?,
                r: f.require(kind, "r", &raw.r)?,
            })
        }
        "spun-torus4" => {
            f.only(kind, &["r1", "r", "d"])?;
            GeometrySpec::Embedded(EmbeddedSpec::SpunTorus4 {
                r1: f.require(kind, "r1", &raw.r1)?,
                r: f.require(kind, "r", &raw.r)?,
                d: f.require(kind, "d", &raw.d)?,
            })
        }
        "icosphere" => {
            f.only(kind, &["rho"])?;
            GeometrySpec::Icosphere { rho: f.require(kind, "rho", &raw.rho)? }
        }
        "ellipsoid" => {
            f.only(kind, &["a", "b", "c"])?;
            GeometrySpec::Ellipsoid {
                a: f.require(kind, "a", &raw.a)?,
                b: f.require(kind, "b", &raw.b)?,
                c: f.require(kind, "c", &raw.c)?,
            }
        }
        "perturbed-sphere" => {
            f.only(kind, &["rho", "eps", "l"])?;
            GeometrySpec::PerturbedSphere {
                rho: f.require(kind, "rho", &raw.rho)?,
                eps: f.require(kind, "eps", &raw.eps)?,
                l: f.require(kind, "l", &raw.l)?,
            }
        }
        "mesh-file" => {
            f.only(kind, &["path"])?;
            let p = f.require(kind, "path", &raw.path)?;
            return Ok(GeometryInput::MeshFile(config_dir.join(p)));
        }
        other => {
            return Err(bad(
                format!("{path}.kind"),
                format!(
                    "unknown geometry '{other}', expected flat | conformal | product | torus3 \
                     | spun-torus4 | icosphere | ellipsoid | perturbed-sphere | mesh-file"
                ),
            ))
        }
    };
    Ok(GeometryInput::Spec(spec))
}

fn validate_tensor(
    path: &str,
    raw: &RawTensor,
    config_dir: &Path,
) -> Result<TensorInput, ConfigError> {
    let mut f = FieldSet::new(path);
    f.take("r", &raw.r);
    f.take("k", &raw.k);
    f.take("path", &raw.path);
    let kind = raw.kind.as_str();
    let choice = match kind {
        "metric" => {
            f.only(kind, &[])?;
            TensorChoice::Metric
        }
        "ricci" => {
            f.only(kind, &[])?;
            TensorChoice::Ricci
        }
        "shape" => {
            f.only(kind, &[])?;
            TensorChoice::Shape
        }
        "newton-shape" => {
            f.only(kind, &["r"])?;
            TensorChoice::NewtonShape { r: f.require(kind, "r", &raw.r)? }
        }
        "newton-schouten" => {
            f.only(kind, &["k"])?;
            TensorChoice::NewtonSchouten { k: f.require(kind, "k", &raw.k)? }
        }
        "custom-from-file" => {
            f.only(kind, &["path"])?;
            let p = f.require(kind, "path", &raw.path)?;
            return Ok(TensorInput::FromFile(config_dir.join(p)));
        }
        other => {
            return Err(bad(
                format!("{path}.kind"),
                format!(
                    "unknown tensor '{other}', expected metric | ricci | shape | newton-shape \
                     | newton-schouten | custom-from-file"
                ),
            ))
        }
    };
    Ok(TensorInput::Choice(choice))
}

fn parse_convention(path: &str, s: &str) -> Result<KConvention, ConfigError> {
    match s {
        "tensor-thm" => Ok(KConvention::TensorThm),
        "hypersurface-thm" => Ok(KConvention::HypersurfaceThm),
        other => Err(bad(
            format!("{path}.convention"),
            format!("unknown convention '{other}', expected tensor-thm | hypersurface-thm"),
        )),
    }
}

fn validate_job(path: &str, raw: &RawJob, config_dir: &Path) -> Result<JobSpec, ConfigError> {
    let reject = |name: &'static str, set: bool| -> Result<(), ConfigError> {
        if set {
            Err(bad(
                format!("{path}.{name}"),
                format!("field does not apply to theorem '{}'", raw.theorem),
            ))
        } else {
            Ok(())
        }
    };
    let general = |k_mode: KMode| -> Result<JobSpec, ConfigError> {
        reject("r", raw.r.is_some())?;
        reject("k", raw.k.is_some())?;
        let tensor = raw
            .tensor
            .as_ref()
            .ok_or_else(|| bad(format!("{path}.tensor"), "required for the general statement"))?;
        let convention = match &raw.convention {
            Some(s) => parse_convention(path, s)?,
            None => KConvention::TensorThm,
        };
        Ok(JobSpec::General {
            tensor: validate_tensor(&format!("{path}.tensor"), tensor, config_dir)?,
            c: raw.c,
            convention,
            k_mode,
        })
    };
    let specialized = |k_mode: KMode,
                       which: &'static str|
     -> Result<JobSpec, ConfigError> {
        reject("tensor", raw.tensor.is_some())?;
        reject("c", raw.c.is_some())?;
        reject("convention", raw.convention.is_some())?;
        match which {
            "r" => {
                reject("k", raw.k.is_some())?;
                let r = raw
                    .r
                    .ok_or_else(|| bad(format!("{path}.r"), "required for the hypersurface statement"))?;
                Ok(JobSpec::Hypersurface { r, k_mode })
            }
            "k" => {
                reject("r", raw.r.is_some())?;
                let k = raw
                    .k
                    .ok_or_else(|| bad(format!("{path}.k"), "required for the k-scalar statement"))?;
                Ok(JobSpec::KScalar { k, k_mode })
            }
            _ => {
                reject("r", raw.r.is_some())?;
                reject("k", raw.k.is_some())?;
                Ok(JobSpec::Perez)
            }
        }
    };
    match raw.theorem.as_str() {
        "thm-1.7" => general(KMode::Measured),
        "thm-1.8" => general(KMode::ForcedZero),
        "thm-1.9" => specialized(KMode::Measured, "r"),
        "thm-1.10" => specialized(KMode::ForcedZero, "r"),
        "thm-1.11" => specialized(KMode::Measured, "k"),
        "thm-1.12" => specialized(KMode::ForcedZero, "k"),
        "perez-r1" => specialized(KMode::Measured, "perez"),
        other => Err(bad(
            format!("{path}.theorem"),
            format!(
                "unknown theorem '{other}', expected thm-1.7 | thm-1.8 | thm-1.9 | thm-1.10 \
                 | thm-1.11 | thm-1.12 | perez-r1"
            ),
        )),
    }
}

fn validate_task(path: &str, raw: &RawTask, config_dir: &Path) -> Result<TaskSpec, ConfigError> {
    let geometry = validate_geometry(&format!("{path}.geometry"), &raw.geometry, config_dir)?;
    let resolutions = match (&raw.resolutions, &geometry) {
        (Some(_), GeometryInput::MeshFile(_)) => {
            return Err(bad(
                format!("{path}.resolutions"),
                "mesh files come at a fixed resolution; drop this field",
            ))
        }
        (None, GeometryInput::MeshFile(_)) => Vec::new(),
        (None, GeometryInput::Spec(_)) => {
            return Err(bad(format!("{path}.resolutions"), "required for generated geometries"))
        }
        (Some(r), GeometryInput::Spec(spec)) => {
            if r.is_empty() {
                return Err(bad(format!("{path}.resolutions"), "must not be empty"));
            }
            for (i, &res) in r.iter().enumerate() {
                if spec.is_mesh() && res > MAX_SUBDIV as usize {
                    return Err(bad(
                        format!("{path}.resolutions[{i}]"),
                        format!("subdivision {res} exceeds the supported maximum {MAX_SUBDIV}"),
                    ));
                }
                if !spec.is_mesh() && res < MIN_RESOLUTION {
                    return Err(bad(
                        format!("{path}.resolutions[{i}]"),
                        format!("grid stencils need at least {MIN_RESOLUTION} points per axis"),
                    ));
                }
            }
            r.clone()
        }
    };
    if raw.jobs.is_empty() {
        return Err(bad(format!("{path}.jobs"), "must not be empty"));
    }
    let jobs = raw
        .jobs
        .iter()
        .enumerate()
        .map(|(i, j)| validate_job(&format!("{path}.jobs[{i}]"), j, config_dir))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TaskSpec { geometry, resolutions, jobs })
}

/// Parse and validate a config document. `config_dir` anchors relative
/// mesh and tensor paths.
pub fn parse_config(text: &str, config_dir: &Path) -> Result<Config, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| bad("config", format!("invalid JSON or unknown field: {e}")))?;
    if raw.version != CONFIG_VERSION {
        return Err(bad(
            "config.version",
            format!("unsupported version {}, this build reads version {CONFIG_VERSION}", raw.version),
        ));
    }
    let eps_disc = raw.eps_disc.unwrap_or(DEFAULT_EPS_DISC);
    if !(eps_disc > 0.0 && eps_disc < 1.0) {
        return Err(bad("config.eps_disc", "must lie strictly between 0 and 1"));
    }
    let format = match &raw.format {
        Some(s) => Some(OutputFormat::parse("config.format", s)?),
        None => None,
    };
    if raw.tasks.is_empty() {
        return Err(bad("config.tasks", "must not be empty"));
    }
    let tasks = raw
        .tasks
        .iter()
        .enumerate()
        .map(|(i, t)| validate_task(&format!("config.tasks[{i}]"), t, config_dir))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Config {
        eps_disc,
        out_dir: raw.out_dir.as_ref().map(|d| config_dir.join(d)),
        format,
        tasks,
    })
}

/// Parse a packed symmetric tensor field from CSV text: one line per grid
/// point, n(n+1)/2 comma-separated components in row-major upper-triangle
/// order. Blank lines and `#` comments are skipped.
pub fn parse_tensor_csv(text: &str, n: usize, points: usize) -> Result<SymField, ConfigError> {
    let m = n * (n + 1) / 2;
    // Column order matches sym_idx: (0,0), (0,1), ..., (1,1), ...
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    debug_assert!(pairs.iter().enumerate().all(|(c, &(i, j))| sym_idx(n, i, j) == c));
    let mut field = SymField::zeros(n, points);
    let mut row = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if row >= points {
            return Err(bad(
                format!("tensor csv line {}", lineno + 1),
                format!("more than {points} data rows"),
            ));
        }
        let mut count = 0usize;
        for (col, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                bad(
                    format!("tensor csv line {} column {}", lineno + 1, col + 1),
                    format!("not a number: '{}'", cell.trim()),
                )
            })?;
            if !v.is_finite() {
                return Err(bad(
                    format!("tensor csv line {} column {}", lineno + 1, col + 1),
                    "components must be finite",
                ));
            }
            if col >= m {
                return Err(bad(
                    format!("tensor csv line {}", lineno + 1),
                    format!("expected {m} components per row"),
                ));
            }
            let (i, j) = pairs[col];
            field.set(row, i, j, v);
            count += 1;
        }
        if count != m {
            return Err(bad(
                format!("tensor csv line {}", lineno + 1),
                format!("expected {m} components per row, got {count}"),
            ));
        }
        row += 1;
    }
    if row != points {
        return Err(bad(
            "tensor csv",
            format!("expected {points} data rows, got {row}"),
        ));
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config, ConfigError> {
        parse_config(text, Path::new("."))
    }

    const MINIMAL: &str = r#"{
        "version": 1,
        "tasks": [{
            "geometry": {"kind": "icosphere", "rho": 1.0},
            "resolutions": [4],
            "jobs": [{"theorem": "perez-r1"}]
        }]
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.eps_disc, DEFAULT_EPS_DISC);
        assert_eq!(cfg.tasks.len(), 1);
        assert!(matches!(cfg.tasks[0].jobs[0], JobSpec::Perez));
        assert!(matches!(
            cfg.tasks[0].geometry,
            GeometryInput::Spec(GeometrySpec::Icosphere { rho }) if rho == 1.0
        ));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let text = MINIMAL.replace("\"rho\": 1.0", "\"rho\": 1.0, \"radius\": 2.0");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("radius"), "{err}");
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = MINIMAL.replace("\"version\": 1", "\"version\": 7");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn misplaced_fields_name_the_offender() {
        // A mesh parameter on a grid geometry.
        let text = r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "flat", "n": 3, "len": 1.0, "rho": 2.0},
                "resolutions": [16],
                "jobs": [{"theorem": "thm-1.11", "k": 2}]
            }]
        }"#;
        let err = parse(text).unwrap_err();
        assert!(err.path.contains("geometry.rho"), "{err}");

        // Hypersurface job with a tensor field.
        let text = r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "spun-torus4", "r1": 3.0, "r": 0.5, "d": 1.5},
                "resolutions": [16],
                "jobs": [{"theorem": "thm-1.9", "r": 2, "tensor": {"kind": "ricci"}}]
            }]
        }"#;
        let err = parse(text).unwrap_err();
        assert!(err.path.contains("jobs[0].tensor"), "{err}");
    }

    #[test]
    fn missing_required_fields_name_the_field() {
        let text = r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "flat", "n": 3, "len": 1.0},
                "resolutions": [16],
                "jobs": [{"theorem": "thm-1.9"}]
            }]
        }"#;
        let err = parse(text).unwrap_err();
        assert!(err.path.ends_with("jobs[0].r"), "{err}");
    }

    #[test]
    fn resolution_limits_are_enforced_per_backend() {
        let text = MINIMAL.replace("[4]", "[9]");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("subdivision"), "{err}");
        let text = r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "flat", "n": 3, "len": 1.0},
                "resolutions": [4],
                "jobs": [{"theorem": "thm-1.11", "k": 2}]
            }]
        }"#;
        let err = parse(text).unwrap_err();
        assert!(err.to_string().contains("per axis"), "{err}");
    }

    #[test]
    fn mesh_files_take_no_resolutions() {
        let text = r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "mesh-file", "path": "m.off"},
                "resolutions": [3],
                "jobs": [{"theorem": "perez-r1"}]
            }]
        }"#;
        let err = parse(text).unwrap_err();
        assert!(err.path.contains("resolutions"), "{err}");
        let ok = text.replace("\"resolutions\": [3],", "");
        let cfg = parse(&ok).unwrap();
        assert!(cfg.tasks[0].resolutions.is_empty());
    }

    #[test]
    fn general_jobs_resolve_tensor_and_convention() {
        let text = r#"{
            "version": 1,
            "eps_disc": 0.02,
            "out_dir": "out",
            "format": "csv",
            "tasks": [{
                "geometry": {"kind": "conformal", "n": 3, "len": 1.0, "phi": "sin-x", "eps": 0.1},
                "resolutions": [16, 24],
                "jobs": [
                    {"theorem": "thm-1.7", "tensor": {"kind": "ricci"}},
                    {"theorem": "thm-1.8", "tensor": {"kind": "newton-schouten", "k": 2}},
                    {"theorem": "thm-1.7", "tensor": {"kind": "metric"}, "convention": "hypersurface-thm"}
                ]
            }]
        }"#;
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.eps_disc, 0.02);
        assert_eq!(cfg.format, Some(OutputFormat::Csv));
        assert_eq!(cfg.tasks[0].resolutions, vec![16, 24]);
        match &cfg.tasks[0].jobs[0] {
            JobSpec::General { tensor: TensorInput::Choice(TensorChoice::Ricci), c: None, convention, k_mode } => {
                assert_eq!(*convention, KConvention::TensorThm);
                assert_eq!(*k_mode, KMode::Measured);
            }
            other => panic!("unexpected job {other:?}"),
        }
        match &cfg.tasks[0].jobs[2] {
            JobSpec::General { convention: KConvention::HypersurfaceThm, .. } => {}
            other => panic!("unexpected job {other:?}"),
        }
        assert_eq!(cfg.tasks[0].jobs[1].theorem(), "thm-1.8");
    }

    #[test]
    fn tensor_csv_round_trips_packed_components() {
        let text = "# packed upper triangle\n1, 2, 3\n4,5,6\n";
        let field = parse_tensor_csv(text, 2, 2).unwrap();
        assert_eq!(field.get(0, 0, 0), 1.0);
        assert_eq!(field.get(0, 0, 1), 2.0);
        assert_eq!(field.get(0, 1, 1), 3.0);
        assert_eq!(field.get(1, 1, 1), 6.0);
    }

    #[test]
    fn tensor_csv_rejects_malformed_rows() {
        assert!(parse_tensor_csv("1,2\n", 2, 1).is_err());
        assert!(parse_tensor_csv("1,2,3,4\n", 2, 1).is_err());
        assert!(parse_tensor_csv("1,2,3\n1,2,3\n", 2, 1).is_err());
        assert!(parse_tensor_csv("1,2,3\n", 2, 2).is_err());
        assert!(parse_tensor_csv("1,x,3\n", 2, 1).is_err());
        assert!(parse_tensor_csv("1,inf,3\n", 2, 1).is_err());
        let err = parse_tensor_csv("1,2,3\n1,nope,3\n", 2, 2).unwrap_err();
        assert!(err.path.contains("line 2 column 2"), "{err}");
    }
}
