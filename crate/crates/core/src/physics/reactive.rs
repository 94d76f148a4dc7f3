use super::gas::{gas_eigensystem, gas_wave_speeds, GasLayout};
use super::{Axis, Eigen, GasModel, Model, SourceEval, State};

/// Two-dimensional reactive Euler equations with one-step Arrhenius
/// kinetics. State layout `(rho, m_u, m_v, E, rho*Y)` with
/// `E = rho|v|^2/2 + p/(gamma-1) + rho q Y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reactive {
    pub gamma: f64,
    /// Heat release.
    pub q: f64,
    /// Activation temperature.
    pub activation: f64,
    /// Rate constant.
    pub rate: f64,
}

const LAYOUT: GasLayout<'static> = GasLayout {
    mass: &[0, 4],
    in_total: &[true, false],
    momentum: &[1, 2],
    energy: 3,
};

impl Reactive {
    /// Detonation-diffraction parameters.
    pub fn detonation() -> Self {
        Reactive {
            gamma: 1.2,
            q: 50.0,
            activation: 50.0,
            rate: 2566.4,
        }
    }

    #[inline]
    fn p(&self, u: &State<5>) -> f64 {
        (self.gamma - 1.0) * (u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0] - self.q * u[4])
    }

    /// Conserved state from `(rho, u, v, E, Y)` with total energy given.
    pub fn from_total_energy(&self, rho: f64, vx: f64, vy: f64, e: f64, y: f64) -> State<5> {
        [rho, rho * vx, rho * vy, e, rho * y]
    }
}

impl Model<5> for Reactive {
    fn flux(&self, u: &State<5>, axis: Axis) -> State<5> {
        let p = self.p(u);
        match axis {
            Axis::X => {
                let vx = u[1] / u[0];
                [u[1], u[1] * vx + p, u[2] * vx, (u[3] + p) * vx, u[4] * vx]
            }
            Axis::Y => {
                let vy = u[2] / u[0];
                [u[2], u[1] * vy, u[2] * vy + p, (u[3] + p) * vy, u[4] * vy]
            }
        }
    }

    fn wave_speeds(&self, u: &State<5>, axis: Axis) -> State<5> {
        let p = self.p(u);
        let un = match axis {
            Axis::X => u[1] / u[0],
            Axis::Y => u[2] / u[0],
        };
        gas_wave_speeds(un, (self.gamma * p.abs() / u[0].abs()).sqrt())
    }

    fn eigensystem(&self, u: &State<5>, axis: Axis) -> Option<Eigen<5>> {
        let g1 = self.gamma - 1.0;
        let v2 = (u[1] * u[1] + u[2] * u[2]) / (u[0] * u[0]);
        gas_eigensystem(u, axis, &LAYOUT, self.p(u), &[0.5 * g1 * v2, -g1 * self.q], g1)
    }

    fn has_source(&self) -> bool {
        true
    }

    fn source(&self, u: &State<5>) -> SourceEval<5> {
        let t = self.p(u) / u[0];
        if !(t > 0.0) || !t.is_finite() {
            return SourceEval {
                value: [0.0; 5],
                degenerate: true,
            };
        }
        let omega = -self.rate * u[4] * (-self.activation / t).exp();
        SourceEval {
            value: [0.0, 0.0, 0.0, 0.0, omega],
            degenerate: false,
        }
    }

    fn source_stiffness(&self, _u: &State<5>) -> f64 {
        self.rate
    }

    fn normal_momentum(&self, axis: Axis) -> Option<usize> {
        Some(match axis {
            Axis::X => 1,
            Axis::Y => 2,
        })
    }

    fn density_components(&self) -> &[usize] {
        &[0]
    }

    fn thermal(&self, u: &State<5>) -> Option<f64> {
        Some(self.p(u))
    }

    fn thermal_magnitude(&self, u: &State<5>) -> f64 {
        let kinetic = 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0].abs();
        (self.gamma - 1.0) * (u[3].abs() + kinetic + (self.q * u[4]).abs())
    }
}

impl GasModel<5> for Reactive {
    fn density(&self, u: &State<5>) -> f64 {
        u[0]
    }

    fn pressure(&self, u: &State<5>) -> f64 {
        self.p(u)
    }

    fn gamma_at(&self, _u: &State<5>) -> f64 {
        self.gamma
    }

    fn temperature(&self, u: &State<5>) -> f64 {
        self.p(u) / u[0]
    }

    /// `mass = [rho, Y]`.
    fn from_primitive(&self, mass: &[f64], velocity: [f64; 2], pressure: f64) -> State<5> {
        let (rho, y) = (mass[0], mass.get(1).copied().unwrap_or(0.0));
        let kinetic = 0.5 * rho * (velocity[0] * velocity[0] + velocity[1] * velocity[1]);
        [
            rho,
            rho * velocity[0],
            rho * velocity[1],
            kinetic + pressure / (self.gamma - 1.0) + rho * self.q * y,
            rho * y,
        ]
    }

    fn velocity(&self, u: &State<5>) -> [f64; 2] {
        [u[1] / u[0], u[2] / u[0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ideal::tests::check_eigenpairs;

    #[test]
    fn left_state_mass_flux() {
        let m = Reactive::detonation();
        let u = m.from_total_energy(11.0, 6.18, 0.0, 970.0, 1.0);
        let f = m.flux(&u, Axis::X);
        assert!((f[0] - 67.98).abs() < 1e-12);
        assert!((f[4] - 67.98).abs() < 1e-12);
    }

    #[test]
    fn energy_identity() {
        let m = Reactive::detonation();
        let u = m.from_primitive(&[2.0, 0.3], [1.5, -0.5], 4.0);
        let ideal = 0.5 * 2.0 * (1.5f64.powi(2) + 0.25) + 4.0 / (m.gamma - 1.0);
        assert!((u[3] - m.q * u[4] - ideal).abs() < 1e-12);
        assert!((m.pressure(&u) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn no_fuel_no_reaction() {
        let m = Reactive::detonation();
        let u = m.from_primitive(&[1.0, 0.0], [0.0, 0.0], 10.0);
        assert_eq!(m.source(&u).value[4], 0.0);
    }

    #[test]
    fn arrhenius_rate() {
        let m = Reactive::detonation();
        let u = m.from_primitive(&[2.0, 0.5], [0.0, 0.0], 50.0);
        // T = 25, omega = -K rho Y exp(-50/25)
        let expect = -2566.4 * 1.0 * (-2.0f64).exp();
        assert!((m.source(&u).value[4] - expect).abs() < 1e-10);
        let cold = [1.0, 0.0, 0.0, 0.0, 1.0];
        assert!(m.source(&cold).degenerate);
    }

    #[test]
    fn eigenvectors_diagonalize_jacobian() {
        let m = Reactive::detonation();
        let u = m.from_primitive(&[1.7, 0.4], [0.8, -1.1], 30.0);
        check_eigenpairs::<5>(&m, &u, Axis::X);
        check_eigenpairs::<5>(&m, &u, Axis::Y);
    }
}
