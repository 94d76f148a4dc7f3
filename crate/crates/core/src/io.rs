//! Run configuration and CSV output.
//!
//! Every file starts with `#` comment lines carrying the resolved case as
//! one-line JSON, followed by a column header and comma-separated rows.
//! Two-dimensional fields are written in row-major order (x fastest).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::SolverError;
use crate::harness::{builtin, CaseDefinition, CellSample, ConvergenceReport, Physics, RunResult, BUILTIN_NAMES};
use crate::rk::{RkScheme, StepReport};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "PPWENO_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("unknown case '{0}' (try one of: {list})", list = BUILTIN_NAMES.join(", "))]
    UnknownCase(String),

    #[error("malformed configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Filesystem {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(SolverError),
}

impl IoError {
    pub fn fs(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Filesystem { path: path.into(), source }
    }

    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::UnknownCase(_) => 3,
            IoError::Config(_) => 4,
            IoError::Filesystem { .. } => 5,
            IoError::Solver(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            IoError::UnknownCase(_) => "unknown-case",
            IoError::Config(_) => "config",
            IoError::Filesystem { .. } => "filesystem",
            IoError::Solver(_) => "solver-abort",
        }
    }

    /// Single-line JSON record describing the failure.
    pub fn machine_line(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<SolverError> for IoError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(msg) => IoError::Config(msg),
            other => IoError::Solver(other),
        }
    }
}

pub type IoResult<T> = std::result::Result<T, IoError>;

/// Where a case definition comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseSource {
    Builtin(String),
    File(PathBuf),
}

impl CaseSource {
    /// A builtin name, or a path when the argument names an existing file
    /// or ends in `.json`.
    pub fn parse(arg: &str) -> Self {
        if arg.ends_with(".json") || Path::new(arg).is_file() {
            CaseSource::File(arg.into())
        } else {
            CaseSource::Builtin(arg.into())
        }
    }

    pub fn load(&self) -> IoResult<CaseDefinition> {
        match self {
            CaseSource::Builtin(name) => builtin(name).ok_or_else(|| IoError::UnknownCase(name.clone())),
            CaseSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| IoError::fs(path, e))?;
                Ok(CaseDefinition::from_json(&text)?)
            }
        }
    }
}

/// Case selection plus command-line overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: CaseSource,
    /// One grid for a run, a doubling sequence for a study. Empty keeps the
    /// case default.
    pub grids: Vec<usize>,
    pub limiter: Option<bool>,
    pub cfl: Option<f64>,
    pub eps_weno: Option<f64>,
    pub rk: Option<RkScheme>,
    pub t_end: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub verbosity: u8,
}

impl RunConfig {
    pub fn new(case: CaseSource) -> Self {
        RunConfig {
            case,
            grids: Vec::new(),
            limiter: None,
            cfl: None,
            eps_weno: None,
            rk: None,
            t_end: None,
            out_dir: None,
            verbosity: 0,
        }
    }

    /// Loads the case, applies the overrides and validates the result.
    pub fn resolve(&self) -> IoResult<CaseDefinition> {
        let mut case = self.case.load()?;
        if let Some(&n) = self.grids.first() {
            case.n = n;
        }
        if let Some(l) = self.limiter {
            case.limiter = l;
        }
        if let Some(c) = self.cfl {
            case.cfl = c;
        }
        if let Some(e) = self.eps_weno {
            case.weno.eps = e;
        }
        if let Some(rk) = self.rk {
            case.rk = rk;
        }
        if let Some(t) = self.t_end {
            case.t_end = t;
        }
        if self.grids.iter().any(|&n| n == 0) {
            return Err(IoError::Config("grid sizes must be positive".into()));
        }
        case.validate()?;
        Ok(case)
    }

    /// `--out` if given, else `$PPWENO_OUTPUT_ROOT/<case>`, else
    /// `output/<case>`.
    pub fn output_dir(&self, case_name: &str) -> PathBuf {
        if let Some(d) = &self.out_dir {
            return d.clone();
        }
        let root = std::env::var_os(OUTPUT_ROOT_VAR)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("output"));
        root.join(case_name)
    }
}

fn header(case: &CaseDefinition, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    let json = serde_json::to_string(case).expect("case definitions serialize");
    writeln!(s, "# case: {}", case.name).unwrap();
    for (k, v) in extra {
        writeln!(s, "# {k}: {v}").unwrap();
    }
    writeln!(s, "# config: {json}").unwrap();
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn grid_header(res: &RunResult) -> Vec<(&'static str, String)> {
    vec![
        ("grid", format!("{}x{}", res.nx, res.ny)),
        ("spacing", format!("{:e},{:e}", res.dx, res.dy)),
        ("t_end", format!("{:e}", res.case.t_end)),
    ]
}

/// One field as `x,value` (1D) or `x,y,value` (2D) rows; `columns` names the
/// value columns.
pub fn field_csv(res: &RunResult, columns: &[&str], values: impl Fn(&CellSample) -> Vec<f64>) -> String {
    let mut s = header(&res.case, &grid_header(res));
    let coords = if res.two_d { "x,y" } else { "x" };
    writeln!(s, "{coords},{}", columns.join(",")).unwrap();
    for c in &res.cells {
        if res.two_d {
            write!(s, "{:e},{:e}", c.x, c.y).unwrap();
        } else {
            write!(s, "{:e}", c.x).unwrap();
        }
        for v in values(c) {
            write!(s, ",{v:e}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn steplog_csv(case: &CaseDefinition, log: &[StepReport]) -> String {
    let mut s = header(case, &[]);
    s.push_str(
        "step,time,dt,limited_faces,min_theta,min_source_factor,density_floor,thermal_floor,\
         min_density,min_thermal,fallbacks,degenerate_sources\n",
    );
    for r in log {
        writeln!(
            s,
            "{},{:e},{:e},{},{:e},{:e},{:e},{},{:e},{},{},{}",
            r.step,
            r.time,
            r.dt,
            r.limited_faces,
            r.min_theta,
            r.min_source_factor,
            r.floors.density,
            opt(r.floors.thermal),
            r.min_density,
            opt(r.min_thermal),
            r.fallbacks,
            r.degenerate_sources
        )
        .unwrap();
    }
    s
}

pub fn convergence_csv(case: &CaseDefinition, report: &ConvergenceReport) -> String {
    let grids: Vec<String> = report.rows.iter().map(|r| r.n.to_string()).collect();
    let mut s = header(case, &[("grids", grids.join(","))]);
    s.push_str("n,l1,l1_mean,l1_order,linf,linf_order,min_value,max_value,upper_gap,min_pressure,steps,limited_faces\n");
    for r in &report.rows {
        writeln!(
            s,
            "{},{:e},{:e},{},{:e},{},{:e},{:e},{},{},{},{}",
            r.n,
            r.l1,
            r.l1_mean,
            r.l1_order.map(|o| format!("{o:.4}")).unwrap_or_default(),
            r.linf,
            r.linf_order.map(|o| format!("{o:.4}")).unwrap_or_default(),
            r.min_value,
            r.max_value,
            opt(r.upper_gap),
            opt(r.min_pressure),
            r.steps,
            r.limited_faces
        )
        .unwrap();
    }
    s
}

fn write_file(dir: &Path, name: &str, body: &str) -> IoResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| IoError::fs(&path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> IoResult<()> {
    fs::create_dir_all(dir).map_err(|e| IoError::fs(dir, e))
}

/// Writes the field files and step log of a run; returns the paths written.
///
/// Gas cases produce `density.csv`, `velocity.csv`, `pressure.csv`; scalar
/// cases produce `solution.csv` (with the exact solution when known).
pub fn write_run(dir: &Path, res: &RunResult) -> IoResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = Vec::new();
    if res.scalar {
        let body = if res.case.exact.is_some() {
            field_csv(res, &["value", "exact"], |c| vec![c.state[0], c.exact.unwrap_or(f64::NAN)])
        } else {
            field_csv(res, &["value"], |c| vec![c.state[0]])
        };
        out.push(write_file(dir, "solution.csv", &body)?);
    } else {
        out.push(write_file(dir, "density.csv", &field_csv(res, &["density"], |c| vec![c.density]))?);
        let vel = if res.two_d {
            field_csv(res, &["u", "v"], |c| c.velocity.to_vec())
        } else {
            field_csv(res, &["u"], |c| vec![c.velocity[0]])
        };
        out.push(write_file(dir, "velocity.csv", &vel)?);
        out.push(write_file(
            dir,
            "pressure.csv",
            &field_csv(res, &["pressure"], |c| vec![c.pressure.unwrap_or(f64::NAN)]),
        )?);
        if matches!(res.case.physics, Physics::Reactive { .. } | Physics::ThreeSpecies) {
            let names: Vec<String> = (0..res.cells.first().map_or(0, |c| c.state.len()))
                .map(|k| format!("u{k}"))
                .collect();
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            out.push(write_file(dir, "state.csv", &field_csv(res, &names, |c| c.state.clone()))?);
        }
    }
    out.push(write_file(dir, "steplog.csv", &steplog_csv(&res.case, &res.log))?);
    Ok(out)
}

pub fn write_convergence(dir: &Path, case: &CaseDefinition, report: &ConvergenceReport) -> IoResult<PathBuf> {
    ensure_dir(dir)?;
    write_file(dir, "convergence.csv", &convergence_csv(case, report))
}
