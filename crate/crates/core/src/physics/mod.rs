//! Flux functions, eigen-structure, closures and source terms.
//!
//! Every problem family implements [`Model`] for a fixed number of conserved
//! components `N`. Gas-dynamics families additionally implement
//! [`GasModel`], which exposes the thermodynamic closure used by the
//! positivity limiter.

mod gas;
mod ideal;
mod reactive;
mod scalar;
mod species;

pub use gas::invert;
pub use ideal::IdealGas;
pub use reactive::Reactive;
pub use scalar::{ScalarFlux, ScalarModel, ScalarSource};
pub use species::{ThreeSpecies, ThreeSpeciesConstants};

use crate::error::{Result, SolverError};

/// Conserved variables at one grid point.
pub type State<const N: usize> = [f64; N];

/// Coordinate direction of a flux or sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Right eigenvectors (columns of `right`) and left eigenvectors (rows of
/// `left`) of a flux Jacobian, with `left * right = I`.
#[derive(Clone, Debug)]
pub struct Eigen<const N: usize> {
    pub right: [[f64; N]; N],
    pub left: [[f64; N]; N],
}

impl<const N: usize> Eigen<N> {
    /// Project onto characteristic variables: `left * v`.
    #[inline]
    pub fn to_characteristic(&self, v: &State<N>) -> State<N> {
        let mut out = [0.0; N];
        for (o, row) in out.iter_mut().zip(self.left.iter()) {
            *o = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `|R|_inf |L|_inf`, an upper bound on the condition number.
    pub fn condition(&self) -> f64 {
        let norm = |m: &[[f64; N]; N]| {
            m.iter()
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0_f64, f64::max)
        };
        norm(&self.right) * norm(&self.left)
    }

    /// Map characteristic variables back: `right * w`.
    #[inline]
    pub fn from_characteristic(&self, w: &State<N>) -> State<N> {
        let mut out = [0.0; N];
        for (o, row) in out.iter_mut().zip(self.right.iter()) {
            *o = row.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Evaluated source term. `degenerate` flags a state whose reaction rate
/// could not be evaluated (non-positive temperature) and was set to zero.
#[derive(Clone, Copy, Debug)]
pub struct SourceEval<const N: usize> {
    pub value: State<N>,
    pub degenerate: bool,
}

impl<const N: usize> SourceEval<N> {
    pub fn zero() -> Self {
        SourceEval {
            value: [0.0; N],
            degenerate: false,
        }
    }
}

/// A hyperbolic system `u_t + f(u)_x + g(u)_y = s(u)` with `N` components.
pub trait Model<const N: usize>: Send + Sync {
    /// Physical flux along `axis`.
    fn flux(&self, u: &State<N>, axis: Axis) -> State<N>;

    /// Characteristic speeds along `axis`, ordered like the eigenvector
    /// columns returned by [`Model::eigensystem`]. Uses `|p|` and `|rho|`
    /// so that intermediate Runge-Kutta states with negative density or
    /// pressure still produce a finite sound speed.
    fn wave_speeds(&self, u: &State<N>, axis: Axis) -> State<N>;

    fn max_speed(&self, u: &State<N>, axis: Axis) -> f64 {
        self.wave_speeds(u, axis)
            .iter()
            .fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// Eigen-decomposition of the flux Jacobian at `u`; `None` for scalar
    /// problems or when the decomposition is not available at `u`.
    fn eigensystem(&self, _u: &State<N>, _axis: Axis) -> Option<Eigen<N>> {
        None
    }

    fn has_source(&self) -> bool {
        false
    }

    fn source(&self, _u: &State<N>) -> SourceEval<N> {
        SourceEval::zero()
    }

    /// Local bound on `|s'(u)|`, used in the source-aware time step.
    fn source_stiffness(&self, _u: &State<N>) -> f64 {
        0.0
    }

    /// Index of the momentum component normal to a boundary along `axis`.
    fn normal_momentum(&self, _axis: Axis) -> Option<usize> {
        None
    }

    /// Components that must stay above a positive floor (partial densities
    /// for gases, the solution itself for scalar problems).
    fn density_components(&self) -> &[usize];

    /// Quantity whose positivity is enforced by the nonlinear constraint
    /// (pressure, or thermal energy for general closures). `None` for
    /// scalar problems.
    fn thermal(&self, _u: &State<N>) -> Option<f64> {
        None
    }

    /// Size of the terms that cancel in [`Model::thermal`]; its rounding
    /// error is a small multiple of this times machine epsilon.
    fn thermal_magnitude(&self, _u: &State<N>) -> f64 {
        0.0
    }

    /// Whether `u` is an admissible physical state.
    fn is_admissible(&self, u: &State<N>) -> bool {
        u.iter().all(|v| v.is_finite())
            && self.density_components().iter().all(|&k| u[k] > 0.0)
            && self.thermal(u).map_or(true, |t| t > 0.0)
    }
}

/// Which pressure evaluation rule to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageMode {
    /// Final (limited) stage: density and pressure must be positive.
    Final,
    /// Intermediate Runge-Kutta stage: absolute values under the radical.
    Intermediate,
}

/// Thermodynamic closure of a gas-dynamics model.
pub trait GasModel<const N: usize>: Model<N> {
    fn density(&self, u: &State<N>) -> f64;
    fn pressure(&self, u: &State<N>) -> f64;
    /// Effective ratio of specific heats at `u`.
    fn gamma_at(&self, u: &State<N>) -> f64;
    fn temperature(&self, u: &State<N>) -> f64;
    /// Build a conserved state from density-like components, velocity and
    /// pressure. `mass` holds the model's mass components in storage order
    /// (e.g. `[rho]`, `[rho, Y]`, `[rho1, rho2, rho3]`).
    fn from_primitive(&self, mass: &[f64], velocity: [f64; 2], pressure: f64) -> State<N>;

    fn velocity(&self, u: &State<N>) -> [f64; 2];

    fn pressure_and_sound(&self, u: &State<N>, mode: StageMode) -> Result<(f64, f64)> {
        let rho = self.density(u);
        let p = self.pressure(u);
        let gamma = self.gamma_at(u);
        match mode {
            StageMode::Intermediate => Ok((p, (gamma * p.abs() / rho.abs()).sqrt())),
            StageMode::Final => {
                if !(rho > 0.0 && p > 0.0) {
                    return Err(SolverError::Positivity(format!(
                        "rho = {rho:e}, p = {p:e}"
                    )));
                }
                Ok((p, (gamma * p / rho).sqrt()))
            }
        }
    }
}
