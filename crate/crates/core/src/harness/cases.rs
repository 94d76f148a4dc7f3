use super::{
    Boundaries, CaseDefinition, Domain, EdgeSpec, ExactSolution, InflowSegment, InitialCondition, Physics,
    RectSpec, ScalarBounds, StateSpec,
};
use crate::limiter::LowerBound;
use crate::rk::{RkScheme, StepRule};
use crate::weno::{AlphaMode, WenoConfig};
use std::f64::consts::PI;

pub const BUILTIN_NAMES: [&str; 11] = [
    "scalar-source",
    "burgers",
    "vortex",
    "double-rarefaction",
    "sedov-1d",
    "sedov-2d",
    "shock-diffraction",
    "jet-mach80",
    "jet-mach2000",
    "detonation",
    "three-species",
];

pub fn builtin_cases() -> Vec<CaseDefinition> {
    BUILTIN_NAMES.iter().map(|n| builtin(n).expect("builtin")).collect()
}

fn base(name: &str, description: &str, physics: Physics, domain: Domain, boundary: Boundaries) -> CaseDefinition {
    CaseDefinition {
        name: name.into(),
        description: description.into(),
        physics,
        domain,
        boundary,
        initial: InitialCondition::Uniform {
            state: StateSpec::Value { value: 0.0 },
        },
        exact: None,
        t_end: 1.0,
        cfl: 0.6,
        step_rule: StepRule::WaveSpeed,
        weno: WenoConfig::default(),
        limiter: true,
        force_theta: None,
        bounds: None,
        rk: RkScheme::Rk4,
        n: 100,
    }
}

fn prim(rho: f64, u: f64, v: f64, p: f64) -> StateSpec {
    StateSpec::Primitive {
        mass: vec![rho],
        velocity: [u, v],
        pressure: p,
    }
}

fn jet(name: &str, description: &str, x1: f64, half: f64, speed: f64, t_end: f64, n: usize) -> CaseDefinition {
    let ambient = prim(0.5, 0.0, 0.0, 0.4127);
    CaseDefinition {
        initial: InitialCondition::Uniform { state: ambient },
        t_end,
        n,
        ..base(
            name,
            description,
            Physics::Euler2d { gamma: 5.0 / 3.0 },
            Domain::Rectangle { x0: 0.0, x1, y0: -half, y1: half },
            Boundaries {
                left: EdgeSpec::Inflow {
                    state: prim(5.0, 0.0, 0.0, 0.4127),
                    segments: vec![InflowSegment {
                        from: -0.05,
                        to: 0.05,
                        state: prim(5.0, speed, 0.0, 0.4127),
                    }],
                },
                ..Boundaries::uniform(EdgeSpec::Outflow)
            },
        )
    }
}

/// Partial densities of the three-species shock tube at 8000 K
/// (left: p = 1000, right: p = 1).
const SPECIES_LEFT: [f64; 3] = [5.251896311257204e-5, 3.748071704863518e-5, 2.962489471973072e-4];
const SPECIES_RIGHT: [f64; 3] = [8.341661837019181e-8, 9.455418692098664e-11, 2.748909430004963e-7];

pub fn builtin(name: &str) -> Option<CaseDefinition> {
    let two_pi = Domain::Interval { x0: 0.0, x1: 2.0 * PI };
    let case = match name {
        "scalar-source" => CaseDefinition {
            step_rule: StepRule::MeshRatio,
            initial: InitialCondition::Sine { mean: 0.0, amplitude: 1.0, power: 4, wavenumber: 1.0 },
            exact: Some(ExactSolution::Advected { velocity: [1.0, 0.0], decay: 1.0 }),
            t_end: 0.1,
            n: 40,
            ..base(
                name,
                "linear advection with decay, u_t + u_x = -u, sin^4 data",
                Physics::Scalar { speed: 1.0, decay: 1.0 },
                two_pi,
                Boundaries::uniform(EdgeSpec::Periodic),
            )
        },
        "burgers" => CaseDefinition {
            initial: InitialCondition::Sine { mean: 0.5, amplitude: 0.5, power: 1, wavenumber: 1.0 },
            exact: Some(ExactSolution::Burgers),
            t_end: 0.2,
            cfl: 0.886,
            weno: WenoConfig {
                alpha: AlphaMode::Fixed { value: 1.3 },
                linear_weights: true,
                ..WenoConfig::default()
            },
            bounds: Some(ScalarBounds {
                lower: LowerBound::Fixed(0.0),
                upper: Some(1.0),
            }),
            n: 80,
            ..base(
                name,
                "Burgers equation with global Lax-Friedrichs splitting at fixed alpha",
                Physics::Burgers,
                two_pi,
                Boundaries::uniform(EdgeSpec::Periodic),
            )
        },
        "vortex" => CaseDefinition {
            step_rule: StepRule::MeshRatio,
            initial: InitialCondition::Vortex { strength: 10.0828, center: [5.0, 5.0] },
            exact: Some(ExactSolution::Advected { velocity: [1.0, 1.0], decay: 0.0 }),
            t_end: 0.01,
            weno: WenoConfig { eps: 1e-5, ..WenoConfig::default() },
            n: 128,
            ..base(
                name,
                "isentropic vortex with near-vacuum core",
                Physics::Euler2d { gamma: 1.4 },
                Domain::Rectangle { x0: -5.0, x1: 15.0, y0: -5.0, y1: 15.0 },
                Boundaries::uniform(EdgeSpec::Periodic),
            )
        },
        "double-rarefaction" => CaseDefinition {
            initial: InitialCondition::Riemann {
                split: 0.0,
                left: prim(7.0, -1.0, 0.0, 0.2),
                right: prim(7.0, 1.0, 0.0, 0.2),
            },
            t_end: 0.6,
            n: 400,
            ..base(
                name,
                "two rarefactions leaving a near-vacuum at the center",
                Physics::Euler1d { gamma: 1.4 },
                Domain::Interval { x0: -1.0, x1: 1.0 },
                Boundaries::uniform(EdgeSpec::Outflow),
            )
        },
        "sedov-1d" => CaseDefinition {
            weno: WenoConfig { per_field_alpha: false, ..WenoConfig::default() },
            initial: InitialCondition::Sedov {
                density: 1.0,
                ambient_energy: 1e-12,
                energy: 3_200_000.0,
                at: [0.0, 0.0],
            },
            t_end: 0.001,
            n: 801,
            ..base(
                name,
                "planar point blast; odd cell counts center a cell on the origin",
                Physics::Euler1d { gamma: 1.4 },
                Domain::Interval { x0: -2.0025, x1: 2.0025 },
                Boundaries::uniform(EdgeSpec::Outflow),
            )
        },
        "sedov-2d" => CaseDefinition {
            weno: WenoConfig { per_field_alpha: false, ..WenoConfig::default() },
            initial: InitialCondition::Sedov {
                density: 1.0,
                ambient_energy: 1e-12,
                energy: 0.244816,
                at: [0.0, 0.0],
            },
            t_end: 1.0,
            n: 160,
            ..base(
                name,
                "cylindrical point blast in the corner of a quarter domain",
                Physics::Euler2d { gamma: 1.4 },
                Domain::Rectangle { x0: 0.0, x1: 1.1, y0: 0.0, y1: 1.1 },
                Boundaries {
                    left: EdgeSpec::Reflective,
                    right: EdgeSpec::Outflow,
                    bottom: EdgeSpec::Reflective,
                    top: EdgeSpec::Outflow,
                },
            )
        },
        "shock-diffraction" => {
            let shocked = StateSpec::Shocked { mach: 5.09, mass: vec![1.4], pressure: 1.0 };
            CaseDefinition {
                initial: InitialCondition::Riemann {
                    split: 0.5,
                    left: shocked.clone(),
                    right: prim(1.4, 0.0, 0.0, 1.0),
                },
                t_end: 2.3,
                n: 416,
                ..base(
                    name,
                    "Mach 5.09 shock diffracting around a backward-facing corner",
                    Physics::Euler2d { gamma: 1.4 },
                    Domain::Union {
                        rects: vec![
                            RectSpec { x0: 0.0, x1: 1.0, y0: 6.0, y1: 11.0 },
                            RectSpec { x0: 1.0, x1: 13.0, y0: 0.0, y1: 11.0 },
                        ],
                    },
                    Boundaries {
                        left: EdgeSpec::Inflow { state: shocked, segments: vec![] },
                        ..Boundaries::uniform(EdgeSpec::Outflow)
                    },
                )
            }
        }
        "jet-mach80" => jet(name, "Mach 80 jet", 2.0, 0.5, 30.0, 0.07, 448),
        "jet-mach2000" => jet(name, "Mach 2000 jet", 1.0, 0.25, 800.0, 0.001, 640),
        "detonation" => {
            let burnt = StateSpec::TotalEnergy { mass: vec![11.0, 1.0], velocity: [6.18, 0.0], energy: 970.0 };
            CaseDefinition {
                initial: InitialCondition::Riemann {
                    split: 0.5,
                    left: burnt.clone(),
                    right: StateSpec::TotalEnergy { mass: vec![1.0, 1.0], velocity: [0.0, 0.0], energy: 55.0 },
                },
                t_end: 0.6,
                n: 400,
                ..base(
                    name,
                    "detonation diffracting around a corner, one-step Arrhenius kinetics",
                    Physics::Reactive { gamma: 1.2, q: 50.0, activation: 50.0, rate: 2566.4 },
                    Domain::Union {
                        rects: vec![
                            RectSpec { x0: 0.0, x1: 1.0, y0: 2.0, y1: 5.0 },
                            RectSpec { x0: 1.0, x1: 5.0, y0: 0.0, y1: 5.0 },
                        ],
                    },
                    Boundaries {
                        left: EdgeSpec::Inflow { state: burnt, segments: vec![] },
                        ..Boundaries::uniform(EdgeSpec::Reflective)
                    },
                )
            }
        }
        "three-species" => CaseDefinition {
            initial: InitialCondition::Riemann {
                split: 1.0,
                left: StateSpec::Temperature { mass: SPECIES_LEFT.to_vec(), velocity: [0.0, 0.0], temperature: 8000.0 },
                right: StateSpec::Temperature { mass: SPECIES_RIGHT.to_vec(), velocity: [0.0, 0.0], temperature: 8000.0 },
            },
            t_end: 1e-4,
            weno: WenoConfig { eps: 1e-20, ..WenoConfig::default() },
            n: 4000,
            ..base(
                name,
                "three-species dissociating-gas shock tube",
                Physics::ThreeSpecies,
                Domain::Interval { x0: 0.0, x1: 2.0 },
                Boundaries::uniform(EdgeSpec::Outflow),
            )
        },
        _ => return None,
    };
    Some(case)
}
