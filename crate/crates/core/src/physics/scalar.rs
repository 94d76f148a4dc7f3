use super::{Axis, Model, SourceEval, State};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarFlux {
    /// `f(u) = a u`
    Advection { speed: f64 },
    /// `f(u) = u^2 / 2`
    Burgers,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarSource {
    None,
    /// `s(u) = -k u`
    Decay { rate: f64 },
}

/// One-component conservation law in one or two dimensions. The same flux
/// is used along both axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarModel {
    pub flux: ScalarFlux,
    pub source: ScalarSource,
}

impl ScalarModel {
    pub fn advection(speed: f64) -> Self {
        ScalarModel {
            flux: ScalarFlux::Advection { speed },
            source: ScalarSource::None,
        }
    }

    pub fn burgers() -> Self {
        ScalarModel {
            flux: ScalarFlux::Burgers,
            source: ScalarSource::None,
        }
    }

    pub fn with_source(mut self, source: ScalarSource) -> Self {
        self.source = source;
        self
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self.flux {
            ScalarFlux::Advection { speed } => speed,
            ScalarFlux::Burgers => u,
        }
    }
}

impl Model<1> for ScalarModel {
    fn flux(&self, u: &State<1>, _axis: Axis) -> State<1> {
        match self.flux {
            ScalarFlux::Advection { speed } => [speed * u[0]],
            ScalarFlux::Burgers => [0.5 * u[0] * u[0]],
        }
    }

    fn wave_speeds(&self, u: &State<1>, _axis: Axis) -> State<1> {
        [self.derivative(u[0])]
    }

    fn has_source(&self) -> bool {
        !matches!(self.source, ScalarSource::None)
    }

    fn source(&self, u: &State<1>) -> SourceEval<1> {
        match self.source {
            ScalarSource::None => SourceEval::zero(),
            ScalarSource::Decay { rate } => SourceEval {
                value: [-rate * u[0]],
                degenerate: false,
            },
        }
    }

    fn source_stiffness(&self, _u: &State<1>) -> f64 {
        match self.source {
            ScalarSource::None => 0.0,
            ScalarSource::Decay { rate } => rate.abs(),
        }
    }

    fn density_components(&self) -> &[usize] {
        &[0]
    }

    fn is_admissible(&self, u: &State<1>) -> bool {
        u[0].is_finite()
    }
}
