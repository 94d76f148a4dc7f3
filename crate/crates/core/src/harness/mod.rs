//! Benchmark case definitions, the case runner, error norms and
//! convergence studies.

mod cases;
pub mod exact;

pub use cases::{builtin, builtin_cases, BUILTIN_NAMES};

use crate::error::{Result, SolverError};
use crate::limiter::{LimiterMode, LimiterPolicy, LowerBound};
use crate::mesh::{apply_boundaries, corner_domain, BoundarySpec, EdgeKind, FieldGrid, InflowProfile, Rect};
use crate::physics::{
    GasModel, IdealGas, Model, Reactive, ScalarModel, ScalarSource, State, ThreeSpecies,
};
use crate::rk::{RkScheme, Solver, StepReport, StepRule, TimeStepPolicy};
use crate::weno::WenoConfig;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Problem family and its physical parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Physics {
    /// `u_t + a u_x (+ a u_y) = -k u`.
    Scalar {
        speed: f64,
        #[serde(default)]
        decay: f64,
    },
    Burgers,
    Euler1d {
        gamma: f64,
    },
    Euler2d {
        gamma: f64,
    },
    Reactive {
        gamma: f64,
        q: f64,
        activation: f64,
        rate: f64,
    },
    ThreeSpecies,
}

impl Physics {
    fn name(&self) -> &'static str {
        match self {
            Physics::Scalar { .. } => "scalar",
            Physics::Burgers => "burgers",
            Physics::Euler1d { .. } => "euler1d",
            Physics::Euler2d { .. } => "euler2d",
            Physics::Reactive { .. } => "reactive",
            Physics::ThreeSpecies => "three-species",
        }
    }

    fn is_scalar(&self) -> bool {
        matches!(self, Physics::Scalar { .. } | Physics::Burgers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    Interval { x0: f64, x1: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Union of rectangles on a common lattice; cells outside are blanked.
    Union { rects: Vec<RectSpec> },
}

impl Domain {
    pub fn is_2d(&self) -> bool {
        !matches!(self, Domain::Interval { .. })
    }

    /// Bounding box `[x0, x1, y0, y1]`.
    pub fn bounds(&self) -> [f64; 4] {
        match self {
            Domain::Interval { x0, x1 } => [*x0, *x1, 0.0, 0.0],
            Domain::Rectangle { x0, x1, y0, y1 } => [*x0, *x1, *y0, *y1],
            Domain::Union { rects } => [
                rects.iter().map(|r| r.x0).fold(f64::INFINITY, f64::min),
                rects.iter().map(|r| r.x1).fold(f64::NEG_INFINITY, f64::max),
                rects.iter().map(|r| r.y0).fold(f64::INFINITY, f64::min),
                rects.iter().map(|r| r.y1).fold(f64::NEG_INFINITY, f64::max),
            ],
        }
    }
}

/// A state given in whichever variables are natural for the case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Value {
        value: f64,
    },
    /// Mass components in storage order (`[rho]`, `[rho, Y]`,
    /// `[rho1, rho2, rho3]`), velocity and pressure.
    Primitive {
        mass: Vec<f64>,
        #[serde(default)]
        velocity: [f64; 2],
        pressure: f64,
    },
    /// Mass components, velocity and total energy per unit volume.
    TotalEnergy {
        mass: Vec<f64>,
        #[serde(default)]
        velocity: [f64; 2],
        energy: f64,
    },
    /// Partial densities, velocity and temperature (three-species only).
    Temperature {
        mass: Vec<f64>,
        #[serde(default)]
        velocity: [f64; 2],
        temperature: f64,
    },
    Conserved {
        values: Vec<f64>,
    },
    /// Gas behind a normal shock of the given Mach number running in +x
    /// into the quiescent state `(mass, pressure)`.
    Shocked {
        mach: f64,
        mass: Vec<f64>,
        pressure: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflowSegment {
    pub from: f64,
    pub to: f64,
    pub state: StateSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EdgeSpec {
    Periodic,
    #[default]
    Outflow,
    Reflective,
    /// Fixed state; `segments` override it on closed tangential intervals.
    Inflow {
        state: StateSpec,
        #[serde(default)]
        segments: Vec<InflowSegment>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundaries {
    pub left: EdgeSpec,
    pub right: EdgeSpec,
    #[serde(default)]
    pub bottom: EdgeSpec,
    #[serde(default)]
    pub top: EdgeSpec,
}

impl Boundaries {
    pub fn uniform(e: EdgeSpec) -> Self {
        Boundaries {
            left: e.clone(),
            right: e.clone(),
            bottom: e.clone(),
            top: e,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `mean + amplitude sin(k x)^power` (scalar families).
    Sine {
        mean: f64,
        amplitude: f64,
        power: i32,
        #[serde(default = "unit")]
        wavenumber: f64,
    },
    /// Isentropic vortex of the given strength on a unit mean flow
    /// `rho = p = u = v = 1`.
    Vortex { strength: f64, center: [f64; 2] },
    Uniform { state: StateSpec },
    /// `left` for `x < split`, `right` otherwise.
    Riemann { split: f64, left: StateSpec, right: StateSpec },
    /// Gas at rest with total energy `ambient_energy`, except the cell
    /// containing `at`, which holds `energy` divided by the cell volume.
    Sedov {
        density: f64,
        ambient_energy: f64,
        energy: f64,
        at: [f64; 2],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExactSolution {
    /// Initial data translated periodically with `velocity` and damped by
    /// `exp(-decay t)`.
    Advected {
        velocity: [f64; 2],
        #[serde(default)]
        decay: f64,
    },
    /// Smooth Burgers solution traced along characteristics.
    Burgers,
}

/// Bounds enforced by the limiter on scalar problems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarBounds {
    pub lower: LowerBound,
    #[serde(default)]
    pub upper: Option<f64>,
}

fn default_cfl() -> f64 {
    0.6
}

fn unit() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_rk() -> RkScheme {
    RkScheme::Rk4
}

/// Everything needed to run one benchmark; also the JSON case-file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDefinition {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub physics: Physics,
    pub domain: Domain,
    pub boundary: Boundaries,
    pub initial: InitialCondition,
    #[serde(default)]
    pub exact: Option<ExactSolution>,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub step_rule: StepRule,
    #[serde(default)]
    pub weno: WenoConfig,
    #[serde(default = "default_true")]
    pub limiter: bool,
    /// Run with every `theta` and source factor pinned to this value.
    #[serde(default)]
    pub force_theta: Option<f64>,
    #[serde(default)]
    pub bounds: Option<ScalarBounds>,
    #[serde(default = "default_rk")]
    pub rk: RkScheme,
    /// Cells along x; the y count follows from square cells.
    pub n: usize,
}

impl CaseDefinition {
    pub fn from_json(text: &str) -> Result<Self> {
        let case: CaseDefinition =
            serde_json::from_str(text).map_err(|e| SolverError::config(format!("case file: {e}")))?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case definitions serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(SolverError::config("t_end must be positive"));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(SolverError::config(format!("cfl {} outside (0, 1)", self.cfl)));
        }
        if self.n == 0 {
            return Err(SolverError::config("n must be positive"));
        }
        if let Some(t) = self.force_theta {
            if !(0.0..=1.0).contains(&t) {
                return Err(SolverError::config("force_theta must lie in [0, 1]"));
            }
        }
        self.weno.validate()?;
        let two_d = self.domain.is_2d();
        match (&self.physics, two_d) {
            (Physics::Euler1d { .. } | Physics::ThreeSpecies, true) => {
                return Err(SolverError::config(format!(
                    "{} needs an interval domain",
                    self.physics.name()
                )))
            }
            (Physics::Euler2d { .. } | Physics::Reactive { .. }, false) => {
                return Err(SolverError::config(format!(
                    "{} needs a two-dimensional domain",
                    self.physics.name()
                )))
            }
            _ => {}
        }
        if self.bounds.is_some() && !self.physics.is_scalar() {
            return Err(SolverError::config("bounds apply to scalar families only"));
        }
        if matches!(self.exact, Some(ExactSolution::Burgers)) && self.physics != Physics::Burgers {
            return Err(SolverError::config("the burgers exact solution needs the burgers family"));
        }
        Ok(())
    }

    /// Grid cells along y for `n` cells along x.
    pub fn ny_for(&self, n: usize) -> usize {
        let [x0, x1, y0, y1] = self.domain.bounds();
        if self.domain.is_2d() {
            ((y1 - y0) / (x1 - x0) * n as f64).round().max(1.0) as usize
        } else {
            1
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l1: f64,
    /// `l1` divided by the domain measure (mean absolute error).
    pub l1_mean: f64,
    pub linf: f64,
}

/// `L1 = sum |err| * cell volume`, `Linf = max |err|`.
pub fn error_norms(numeric: &[f64], exact: &[f64], cell_volume: f64) -> ErrorNorms {
    assert_eq!(numeric.len(), exact.len());
    let (sum, max) = numeric
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .fold((0.0, 0.0_f64), |(s, m), e| (s + e, m.max(e)));
    ErrorNorms {
        l1: sum * cell_volume,
        l1_mean: if numeric.is_empty() { 0.0 } else { sum / numeric.len() as f64 },
        linf: max,
    }
}

/// Final data of one active cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSample {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub state: Vec<f64>,
    /// Solution value for scalar families, total density otherwise.
    pub density: f64,
    pub velocity: [f64; 2],
    pub pressure: Option<f64>,
    pub exact: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub case: CaseDefinition,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub two_d: bool,
    pub scalar: bool,
    pub cells: Vec<CellSample>,
    pub log: Vec<StepReport>,
    pub norms: Option<ErrorNorms>,
    pub wall_seconds: f64,
}

impl RunResult {
    pub fn min_density(&self) -> f64 {
        self.cells.iter().map(|c| c.density).fold(f64::INFINITY, f64::min)
    }

    pub fn max_density(&self) -> f64 {
        self.cells.iter().map(|c| c.density).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_pressure(&self) -> Option<f64> {
        self.cells.iter().map(|c| c.pressure).try_fold(f64::INFINITY, |m, p| p.map(|p| m.min(p)))
    }

    /// Smallest mass component over all cells.
    pub fn min_mass_component(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.state[0])
            .chain(self.partial_masses())
            .fold(f64::INFINITY, f64::min)
    }

    fn partial_masses(&self) -> impl Iterator<Item = f64> + '_ {
        let extra: &[usize] = match self.case.physics {
            Physics::Reactive { .. } => &[4],
            Physics::ThreeSpecies => &[1, 2],
            _ => &[],
        };
        self.cells.iter().flat_map(move |c| extra.iter().map(move |&k| c.state[k]))
    }

    /// Total number of limited interfaces over the run.
    pub fn limiter_activations(&self) -> usize {
        self.log.iter().map(|r| r.limited_faces).sum()
    }

    pub fn steps(&self) -> usize {
        self.log.len()
    }
}

/// Run `case` on `n` cells along x (the case default when `None`).
pub fn run_case(
    case: &CaseDefinition,
    n: Option<usize>,
    observe: &mut dyn FnMut(&StepReport),
) -> Result<RunResult> {
    case.validate()?;
    let n = n.unwrap_or(case.n);
    if n == 0 {
        return Err(SolverError::config("n must be positive"));
    }
    match &case.physics {
        Physics::Scalar { speed, decay } => {
            let mut m = ScalarModel::advection(*speed);
            if *decay != 0.0 {
                m = m.with_source(ScalarSource::Decay { rate: *decay });
            }
            simulate::<1>(case, n, &Family { model: &m, gas: None, species: None }, observe)
        }
        Physics::Burgers => {
            let m = ScalarModel::burgers();
            simulate::<1>(case, n, &Family { model: &m, gas: None, species: None }, observe)
        }
        Physics::Euler1d { gamma } => {
            let g = IdealGas::new(*gamma);
            simulate::<3>(case, n, &Family { model: &g, gas: Some(&g), species: None }, observe)
        }
        Physics::Euler2d { gamma } => {
            let g = IdealGas::new(*gamma);
            simulate::<4>(case, n, &Family { model: &g, gas: Some(&g), species: None }, observe)
        }
        Physics::Reactive { gamma, q, activation, rate } => {
            let r = Reactive {
                gamma: *gamma,
                q: *q,
                activation: *activation,
                rate: *rate,
            };
            simulate::<5>(case, n, &Family { model: &r, gas: Some(&r), species: None }, observe)
        }
        Physics::ThreeSpecies => {
            let s = ThreeSpecies::new();
            simulate::<5>(case, n, &Family { model: &s, gas: Some(&s), species: Some(&s) }, observe)
        }
    }
}

struct Family<'a, const N: usize> {
    model: &'a dyn Model<N>,
    gas: Option<&'a dyn GasModel<N>>,
    species: Option<&'a ThreeSpecies>,
}

impl<const N: usize> Family<'_, N> {
    fn gas(&self) -> Result<&dyn GasModel<N>> {
        self.gas
            .ok_or_else(|| SolverError::config("gas-dynamics state given for a scalar family"))
    }

    fn energy_index(&self) -> usize {
        match N {
            3 => 2,
            4 | 5 if self.species.is_none() => 3,
            _ => 4,
        }
    }

    fn vector(values: Vec<f64>) -> Result<State<N>> {
        let len = values.len();
        values
            .try_into()
            .map_err(|_| SolverError::config(format!("state has {len} components, expected {N}")))
    }

    fn resolve(&self, spec: &StateSpec) -> Result<State<N>> {
        let u = match spec {
            StateSpec::Value { value } => Self::vector(vec![*value])?,
            StateSpec::Primitive { mass, velocity, pressure } => {
                self.check_mass(mass)?;
                self.gas()?.from_primitive(mass, *velocity, *pressure)
            }
            StateSpec::TotalEnergy { mass, velocity, energy } => {
                self.check_mass(mass)?;
                let mut u = self.gas()?.from_primitive(mass, *velocity, 1.0);
                u[self.energy_index()] = *energy;
                u
            }
            StateSpec::Temperature { mass, velocity, temperature } => {
                let s = self
                    .species
                    .ok_or_else(|| SolverError::config("temperature states need the three-species family"))?;
                let rho: [f64; 3] = mass
                    .as_slice()
                    .try_into()
                    .map_err(|_| SolverError::config("three-species states need three partial densities"))?;
                Self::vector(s.from_temperature(rho, velocity[0], *temperature).to_vec())?
            }
            StateSpec::Conserved { values } => Self::vector(values.clone())?,
            StateSpec::Shocked { mach, mass, pressure } => {
                self.check_mass(mass)?;
                let gas = self.gas()?;
                let ahead = gas.from_primitive(mass, [0.0, 0.0], *pressure);
                let gamma = gas.gamma_at(&ahead);
                let m2 = mach * mach;
                let ratio = (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0);
                let p = pressure * (1.0 + 2.0 * gamma / (gamma + 1.0) * (m2 - 1.0));
                let c = (gamma * pressure / mass[0]).sqrt();
                let speed = mach * c * (1.0 - 1.0 / ratio);
                let behind: Vec<f64> = mass.iter().enumerate().map(|(k, &m)| if k == 0 { m * ratio } else { m }).collect();
                gas.from_primitive(&behind, [speed, 0.0], p)
            }
        };
        if !self.model.is_admissible(&u) {
            return Err(SolverError::config(format!("inadmissible state {u:?}")));
        }
        Ok(u)
    }

    fn check_mass(&self, mass: &[f64]) -> Result<()> {
        let expected = match (N, self.species.is_some()) {
            (5, true) => 3,
            (5, false) => 2,
            _ => 1,
        };
        if mass.len() != expected {
            return Err(SolverError::config(format!(
                "expected {expected} mass components, got {}",
                mass.len()
            )));
        }
        Ok(())
    }

    fn edge(&self, e: &EdgeSpec) -> Result<EdgeKind<N>> {
        Ok(match e {
            EdgeSpec::Periodic => EdgeKind::Periodic,
            EdgeSpec::Outflow => EdgeKind::Outflow,
            EdgeSpec::Reflective => EdgeKind::Reflective,
            EdgeSpec::Inflow { state, segments } => EdgeKind::Inflow(InflowProfile {
                segments: segments
                    .iter()
                    .map(|s| Ok((s.from, s.to, self.resolve(&s.state)?)))
                    .collect::<Result<_>>()?,
                default: self.resolve(state)?,
            }),
        })
    }

    fn primitives(&self, u: &State<N>) -> (f64, [f64; 2], Option<f64>) {
        match self.gas {
            Some(g) => (g.density(u), g.velocity(u), Some(g.pressure(u))),
            None => (u[0], [0.0, 0.0], None),
        }
    }
}

enum Initial<'a, const N: usize> {
    Sine { mean: f64, amplitude: f64, power: i32, k: f64 },
    Vortex { strength: f64, center: [f64; 2], gamma: f64, gas: &'a dyn GasModel<N> },
    Uniform(State<N>),
    Riemann { split: f64, left: State<N>, right: State<N> },
}

impl<const N: usize> Initial<'_, N> {
    fn eval(&self, x: f64, y: f64) -> State<N> {
        match self {
            Initial::Sine { mean, amplitude, power, k } => [mean + amplitude * (k * x).sin().powi(*power); N],
            Initial::Vortex { strength, center, gamma, gas } => {
                let (xb, yb) = (x - center[0], y - center[1]);
                let r2 = xb * xb + yb * yb;
                let two_pi = 2.0 * std::f64::consts::PI;
                let a = strength / two_pi * (0.5 * (1.0 - r2)).exp();
                let dt = -(gamma - 1.0) * strength * strength / (8.0 * gamma * std::f64::consts::PI.powi(2))
                    * (1.0 - r2).exp();
                let t = 1.0 + dt;
                let rho = t.powf(1.0 / (gamma - 1.0));
                gas.from_primitive(&[rho], [1.0 - a * yb, 1.0 + a * xb], rho * t)
            }
            Initial::Uniform(u) => *u,
            Initial::Riemann { split, left, right } => {
                if x < *split {
                    *left
                } else {
                    *right
                }
            }
        }
    }
}

fn build_grid<const N: usize>(domain: &Domain, nx: usize, ny: usize) -> Result<FieldGrid<N>> {
    match domain {
        Domain::Interval { x0, x1 } => {
            if !(x1 > x0) {
                return Err(SolverError::config("empty interval"));
            }
            FieldGrid::new_1d(nx, *x0, (x1 - x0) / nx as f64)
        }
        Domain::Rectangle { x0, x1, y0, y1 } => {
            if !(x1 > x0 && y1 > y0) {
                return Err(SolverError::config("empty rectangle"));
            }
            FieldGrid::new_2d(nx, ny, [*x0, *y0], (x1 - x0) / nx as f64, (y1 - y0) / ny as f64)
        }
        Domain::Union { rects } => {
            let [x0, x1, y0, y1] = domain.bounds();
            let rects: Vec<Rect> = rects.iter().map(|r| Rect::new(r.x0, r.x1, r.y0, r.y1)).collect();
            corner_domain(&rects, (x1 - x0) / nx as f64, (y1 - y0) / ny as f64)
        }
    }
}

/// Cell containing `at`; a point on an interior cell face is ambiguous.
fn containing_cell(lo: f64, h: f64, n: usize, at: f64) -> Result<usize> {
    let s = (at - lo) / h;
    if s < 0.0 || s > n as f64 {
        return Err(SolverError::config(format!("point {at} lies outside the domain")));
    }
    let near = s.round();
    if (s - near).abs() < 1e-9 && near > 0.0 && near < n as f64 {
        return Err(SolverError::config(format!(
            "point {at} falls on a cell face; choose a cell count that centers a cell on it"
        )));
    }
    Ok((s.floor() as usize).min(n - 1))
}

fn limiter_policy(case: &CaseDefinition) -> LimiterPolicy {
    let base = match (case.physics.is_scalar(), case.bounds) {
        (true, Some(b)) => LimiterPolicy {
            mode: LimiterMode::On,
            lower: b.lower,
            upper: b.upper,
        },
        _ => LimiterPolicy::positivity(),
    };
    match (case.force_theta, case.limiter) {
        (Some(t), _) => base.with_mode(LimiterMode::Forced(t)),
        (None, true) => base,
        (None, false) => base.with_mode(LimiterMode::Off),
    }
}

fn simulate<const N: usize>(
    case: &CaseDefinition,
    n: usize,
    fam: &Family<N>,
    observe: &mut dyn FnMut(&StepReport),
) -> Result<RunResult> {
    let ny = case.ny_for(n);
    let mut grid = build_grid::<N>(&case.domain, n, ny)?;
    let two_d = case.domain.is_2d();

    let initial = match &case.initial {
        InitialCondition::Sine { mean, amplitude, power, wavenumber } => {
            if N != 1 {
                return Err(SolverError::config("sine data is for scalar families"));
            }
            Initial::Sine { mean: *mean, amplitude: *amplitude, power: *power, k: *wavenumber }
        }
        InitialCondition::Vortex { strength, center } => {
            let gas = fam.gas()?;
            if N != 4 {
                return Err(SolverError::config("the vortex needs the euler2d family"));
            }
            let gamma = gas.gamma_at(&gas.from_primitive(&[1.0], [1.0, 1.0], 1.0));
            Initial::Vortex { strength: *strength, center: *center, gamma, gas }
        }
        InitialCondition::Uniform { state } => Initial::Uniform(fam.resolve(state)?),
        InitialCondition::Riemann { split, left, right } => Initial::Riemann {
            split: *split,
            left: fam.resolve(left)?,
            right: fam.resolve(right)?,
        },
        InitialCondition::Sedov { density, ambient_energy, .. } => Initial::Uniform(fam.resolve(&StateSpec::TotalEnergy {
            mass: vec![*density],
            velocity: [0.0, 0.0],
            energy: *ambient_energy,
        })?),
    };
    grid.fill(|x, y| initial.eval(x, y));
    if let InitialCondition::Sedov { energy, at, .. } = &case.initial {
        let i = containing_cell(grid.origin[0] - 0.5 * grid.dx, grid.dx, grid.nx, at[0])?;
        let (j, volume) = if two_d {
            (containing_cell(grid.origin[1] - 0.5 * grid.dy, grid.dy, grid.ny, at[1])?, grid.dx * grid.dy)
        } else {
            (0, grid.dx)
        };
        if !grid.is_active(i, j) {
            return Err(SolverError::config("blast cell is blanked"));
        }
        grid.cell_mut(i, j)[fam.energy_index()] = energy / volume;
    }

    let boundary = BoundarySpec {
        left: fam.edge(&case.boundary.left)?,
        right: fam.edge(&case.boundary.right)?,
        bottom: if two_d { fam.edge(&case.boundary.bottom)? } else { EdgeKind::Outflow },
        top: if two_d { fam.edge(&case.boundary.top)? } else { EdgeKind::Outflow },
    };
    let solver = Solver::new(
        fam.model,
        boundary,
        case.weno,
        case.rk,
        TimeStepPolicy {
            cfl: case.cfl,
            source_aware: true,
            rule: case.step_rule,
        },
        limiter_policy(case),
    )?;

    let start = Instant::now();
    let log = solver.advance(&mut grid, 0.0, case.t_end, |r| observe(r))?;
    let wall_seconds = start.elapsed().as_secs_f64();
    apply_boundaries(&mut grid, &solver.boundary, fam.model, case.t_end);

    let exact = exact_evaluator(case, &initial)?;
    let cells: Vec<CellSample> = grid
        .active_cells()
        .map(|(i, j)| {
            let [x, y] = grid.center(i as isize, j as isize);
            let u = grid.cell(i, j);
            let (density, velocity, pressure) = fam.primitives(u);
            CellSample {
                i,
                j,
                x,
                y,
                state: u.to_vec(),
                density,
                velocity,
                pressure,
                exact: exact.as_ref().map(|f| f(x, y)),
            }
        })
        .collect();
    let norms = exact.as_ref().map(|_| {
        let num: Vec<f64> = cells.iter().map(|c| c.state[0]).collect();
        let ex: Vec<f64> = cells.iter().map(|c| c.exact.unwrap_or(f64::NAN)).collect();
        error_norms(&num, &ex, if two_d { grid.dx * grid.dy } else { grid.dx })
    });

    Ok(RunResult {
        case: CaseDefinition { n, ..case.clone() },
        nx: grid.nx,
        ny: grid.ny,
        dx: grid.dx,
        dy: grid.dy,
        two_d,
        scalar: case.physics.is_scalar(),
        cells,
        log,
        norms,
        wall_seconds,
    })
}

type ExactFn<'a> = Box<dyn Fn(f64, f64) -> f64 + 'a>;

fn exact_evaluator<'a, const N: usize>(
    case: &CaseDefinition,
    initial: &'a Initial<'a, N>,
) -> Result<Option<ExactFn<'a>>> {
    let t = case.t_end;
    let [x0, x1, y0, y1] = case.domain.bounds();
    Ok(match &case.exact {
        None => None,
        Some(ExactSolution::Advected { velocity, decay }) => {
            let (velocity, damp) = (*velocity, (-decay * t).exp());
            Some(Box::new(move |x, y| {
                let xs = x0 + (x - velocity[0] * t - x0).rem_euclid(x1 - x0);
                let ys = if y1 > y0 { y0 + (y - velocity[1] * t - y0).rem_euclid(y1 - y0) } else { y };
                damp * initial.eval(xs, ys)[0]
            }))
        }
        Some(ExactSolution::Burgers) => match *initial {
            Initial::Sine { mean, amplitude, power, k } => Some(Box::new(move |x, _| {
                let p = power as f64;
                exact::burgers_characteristic(
                    x,
                    t,
                    |s| mean + amplitude * (k * s).sin().powi(power),
                    |s| amplitude * p * k * (k * s).sin().powi(power - 1) * (k * s).cos(),
                )
            })),
            _ => return Err(SolverError::config("the burgers exact solution needs sine data")),
        },
    })
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub l1: f64,
    pub l1_mean: f64,
    pub l1_order: Option<f64>,
    pub linf: f64,
    pub linf_order: Option<f64>,
    /// Minimum of the first component (solution value or density).
    pub min_value: f64,
    pub max_value: f64,
    /// Upper bound minus the maximum value, for bounded scalar cases.
    pub upper_gap: Option<f64>,
    pub min_pressure: Option<f64>,
    pub steps: usize,
    pub limited_faces: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub case: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn last_l1_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.l1_order)
    }
}

/// Run `case` on each grid of a doubling sequence and tabulate errors and
/// observed orders `log2(e_N / e_2N)`.
pub fn convergence_study(
    case: &CaseDefinition,
    grids: &[usize],
    observe: &mut dyn FnMut(usize, &StepReport),
) -> Result<ConvergenceReport> {
    if grids.is_empty() {
        return Err(SolverError::config("no grids given"));
    }
    if grids.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(SolverError::config("grids must form a doubling sequence"));
    }
    if case.exact.is_none() {
        return Err(SolverError::config(format!("case {} has no exact solution", case.name)));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(grids.len());
    for &n in grids {
        let res = run_case(case, Some(n), &mut |r| observe(n, r))?;
        let norms = res.norms.expect("exact solution checked above");
        let first: Vec<f64> = res.cells.iter().map(|c| c.state[0]).collect();
        let min_value = first.iter().copied().fold(f64::INFINITY, f64::min);
        let max_value = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let order = |prev: f64, cur: f64| (prev / cur).log2();
        let prev = rows.last();
        rows.push(ConvergenceRow {
            n,
            l1: norms.l1,
            l1_mean: norms.l1_mean,
            l1_order: prev.map(|p| order(p.l1, norms.l1)),
            linf: norms.linf,
            linf_order: prev.map(|p| order(p.linf, norms.linf)),
            min_value,
            max_value,
            upper_gap: case.bounds.and_then(|b| b.upper).map(|u| u - max_value),
            min_pressure: res.min_pressure(),
            steps: res.steps(),
            limited_faces: res.limiter_activations(),
        });
    }
    Ok(ConvergenceReport {
        case: case.name.clone(),
        rows,
    })
}

/// Outermost position (beyond `center`) where the density first exceeds the
/// midpoint between `ambient` and the peak, scanning inward. Uses linear
/// interpolation between cell centers.
pub fn shock_position(xs: &[f64], rho: &[f64], center: f64, ambient: f64) -> Option<f64> {
    let peak = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let level = 0.5 * (ambient + peak);
    let pts: Vec<(f64, f64)> = xs.iter().copied().zip(rho.iter().copied()).filter(|(x, _)| *x >= center).collect();
    for w in pts.windows(2).rev() {
        let ((xa, ra), (xb, rb)) = (w[0], w[1]);
        if ra >= level && rb < level {
            return Some(xa + (ra - level) / (ra - rb) * (xb - xa));
        }
    }
    None
}
