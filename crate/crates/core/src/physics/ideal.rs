use super::gas::{gas_eigensystem, gas_wave_speeds, GasLayout};
use super::{Axis, Eigen, GasModel, Model, State};

/// Polytropic ideal gas. Implements the 1D system `(rho, m, E)` as
/// `Model<3>` and the 2D system `(rho, m_u, m_v, E)` as `Model<4>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealGas {
    pub gamma: f64,
}

impl IdealGas {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma > 1.0, "gamma must exceed 1");
        IdealGas { gamma }
    }

    #[inline]
    fn pressure_from(&self, rho: f64, kinetic_m2: f64, e: f64) -> f64 {
        (self.gamma - 1.0) * (e - 0.5 * kinetic_m2 / rho)
    }

    #[inline]
    fn guarded_sound(&self, rho: f64, p: f64) -> f64 {
        (self.gamma * p.abs() / rho.abs()).sqrt()
    }
}

const LAYOUT_1D: GasLayout<'static> = GasLayout {
    mass: &[0],
    in_total: &[true],
    momentum: &[1],
    energy: 2,
};

const LAYOUT_2D: GasLayout<'static> = GasLayout {
    mass: &[0],
    in_total: &[true],
    momentum: &[1, 2],
    energy: 3,
};

impl Model<3> for IdealGas {
    fn flux(&self, u: &State<3>, _axis: Axis) -> State<3> {
        let vel = u[1] / u[0];
        let p = self.pressure_from(u[0], u[1] * u[1], u[2]);
        [u[1], u[1] * vel + p, (u[2] + p) * vel]
    }

    fn wave_speeds(&self, u: &State<3>, _axis: Axis) -> State<3> {
        let p = self.pressure_from(u[0], u[1] * u[1], u[2]);
        gas_wave_speeds(u[1] / u[0], self.guarded_sound(u[0], p))
    }

    fn eigensystem(&self, u: &State<3>, axis: Axis) -> Option<Eigen<3>> {
        let p = self.pressure_from(u[0], u[1] * u[1], u[2]);
        let v = u[1] / u[0];
        let g1 = self.gamma - 1.0;
        gas_eigensystem(u, axis, &LAYOUT_1D, p, &[0.5 * g1 * v * v], g1)
    }

    fn normal_momentum(&self, axis: Axis) -> Option<usize> {
        match axis {
            Axis::X => Some(1),
            Axis::Y => None,
        }
    }

    fn density_components(&self) -> &[usize] {
        &[0]
    }

    fn thermal(&self, u: &State<3>) -> Option<f64> {
        Some(self.pressure_from(u[0], u[1] * u[1], u[2]))
    }

    fn thermal_magnitude(&self, u: &State<3>) -> f64 {
        (self.gamma - 1.0) * (u[2].abs() + 0.5 * u[1] * u[1] / u[0].abs())
    }
}

impl GasModel<3> for IdealGas {
    fn density(&self, u: &State<3>) -> f64 {
        u[0]
    }

    fn pressure(&self, u: &State<3>) -> f64 {
        self.pressure_from(u[0], u[1] * u[1], u[2])
    }

    fn gamma_at(&self, _u: &State<3>) -> f64 {
        self.gamma
    }

    fn temperature(&self, u: &State<3>) -> f64 {
        self.pressure(u) / u[0]
    }

    fn from_primitive(&self, mass: &[f64], velocity: [f64; 2], pressure: f64) -> State<3> {
        let rho = mass[0];
        let m = rho * velocity[0];
        [rho, m, 0.5 * m * velocity[0] + pressure / (self.gamma - 1.0)]
    }

    fn velocity(&self, u: &State<3>) -> [f64; 2] {
        [u[1] / u[0], 0.0]
    }
}

impl Model<4> for IdealGas {
    fn flux(&self, u: &State<4>, axis: Axis) -> State<4> {
        let p = self.pressure_from(u[0], u[1] * u[1] + u[2] * u[2], u[3]);
        match axis {
            Axis::X => {
                let vx = u[1] / u[0];
                [u[1], u[1] * vx + p, u[2] * vx, (u[3] + p) * vx]
            }
            Axis::Y => {
                let vy = u[2] / u[0];
                [u[2], u[1] * vy, u[2] * vy + p, (u[3] + p) * vy]
            }
        }
    }

    fn wave_speeds(&self, u: &State<4>, axis: Axis) -> State<4> {
        let p = self.pressure_from(u[0], u[1] * u[1] + u[2] * u[2], u[3]);
        let un = match axis {
            Axis::X => u[1] / u[0],
            Axis::Y => u[2] / u[0],
        };
        gas_wave_speeds(un, self.guarded_sound(u[0], p))
    }

    fn eigensystem(&self, u: &State<4>, axis: Axis) -> Option<Eigen<4>> {
        let v2 = (u[1] * u[1] + u[2] * u[2]) / (u[0] * u[0]);
        let p = self.pressure_from(u[0], u[1] * u[1] + u[2] * u[2], u[3]);
        let g1 = self.gamma - 1.0;
        gas_eigensystem(u, axis, &LAYOUT_2D, p, &[0.5 * g1 * v2], g1)
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

    fn thermal(&self, u: &State<4>) -> Option<f64> {
        Some(self.pressure_from(u[0], u[1] * u[1] + u[2] * u[2], u[3]))
    }

    fn thermal_magnitude(&self, u: &State<4>) -> f64 {
        (self.gamma - 1.0) * (u[3].abs() + 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0].abs())
    }
}

impl GasModel<4> for IdealGas {
    fn density(&self, u: &State<4>) -> f64 {
        u[0]
    }

    fn pressure(&self, u: &State<4>) -> f64 {
        self.pressure_from(u[0], u[1] * u[1] + u[2] * u[2], u[3])
    }

    fn gamma_at(&self, _u: &State<4>) -> f64 {
        self.gamma
    }

    fn temperature(&self, u: &State<4>) -> f64 {
        GasModel::<4>::pressure(self, u) / u[0]
    }

    fn from_primitive(&self, mass: &[f64], velocity: [f64; 2], pressure: f64) -> State<4> {
        let rho = mass[0];
        let (mu, mv) = (rho * velocity[0], rho * velocity[1]);
        [
            rho,
            mu,
            mv,
            0.5 * (mu * velocity[0] + mv * velocity[1]) + pressure / (self.gamma - 1.0),
        ]
    }

    fn velocity(&self, u: &State<4>) -> [f64; 2] {
        [u[1] / u[0], u[2] / u[0]]
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::physics::StageMode;

    fn jacobian_fd<const N: usize>(m: &dyn Model<N>, u: &State<N>, axis: Axis) -> [[f64; N]; N] {
        let mut jac = [[0.0; N]; N];
        for c in 0..N {
            let h = if u[c] != 0.0 { 1e-6 * u[c].abs() } else { 1e-6 };
            let mut up = *u;
            let mut um = *u;
            up[c] += h;
            um[c] -= h;
            let fp = m.flux(&up, axis);
            let fm = m.flux(&um, axis);
            for r in 0..N {
                jac[r][c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        jac
    }

    pub(crate) fn check_eigenpairs<const N: usize>(m: &dyn Model<N>, u: &State<N>, axis: Axis) {
        let jac = jacobian_fd(m, u, axis);
        let eig = m.eigensystem(u, axis).expect("eigensystem");
        let speeds = m.wave_speeds(u, axis);
        for c in 0..N {
            for r in 0..N {
                let jr: f64 = (0..N).map(|k| jac[r][k] * eig.right[k][c]).sum();
                let lr = speeds[c] * eig.right[r][c];
                let scale = 1.0 + lr.abs() + jr.abs();
                assert!(
                    (jr - lr).abs() < 1e-6 * scale,
                    "column {c} row {r}: J r = {jr}, lambda r = {lr}"
                );
            }
        }
    }

    #[test]
    fn static_state_flux() {
        let gas = IdealGas::new(1.4);
        let u = [1.0, 0.0, 1.0 / 0.4];
        let f = Model::<3>::flux(&gas, &u, Axis::X);
        assert_eq!(f[0], 0.0);
        assert!((f[1] - 1.0).abs() < 1e-15);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn vortex_mean_flow_flux() {
        // rho = u = v = p = 1, gamma = 1.4: E = 1 + 2.5 = 3.5
        let gas = IdealGas::new(1.4);
        let u = gas.from_primitive(&[1.0], [1.0, 1.0], 1.0);
        assert!((u[3] - 3.5).abs() < 1e-15);
        let f = Model::<4>::flux(&gas, &u, Axis::X);
        let expect = [1.0, 2.0, 1.0, 4.5];
        for k in 0..4 {
            assert!((f[k] - expect[k]).abs() < 1e-14, "{k}: {}", f[k]);
        }
    }

    #[test]
    fn sound_speed_modes() {
        let gas = IdealGas::new(1.4);
        let u = gas.from_primitive(&[1.0], [0.0, 0.0], 1.4);
        let (_, c) = GasModel::<3>::pressure_and_sound(&gas, &u, StageMode::Final).unwrap();
        assert!((c - 1.4).abs() < 1e-14);

        let neg = [1.0, 0.0, -0.01 / 0.4];
        let (p, c) = GasModel::<3>::pressure_and_sound(&gas, &neg, StageMode::Intermediate).unwrap();
        assert!((p + 0.01).abs() < 1e-15);
        assert!((c - 0.014_f64.sqrt()).abs() < 1e-15);
        assert!(GasModel::<3>::pressure_and_sound(&gas, &neg, StageMode::Final).is_err());
    }

    #[test]
    fn eigenvectors_diagonalize_jacobian() {
        let gas = IdealGas::new(1.4);
        let u3 = gas.from_primitive(&[0.7], [0.3, 0.0], 2.1);
        check_eigenpairs::<3>(&gas, &u3, Axis::X);
        let u4 = gas.from_primitive(&[1.3], [-0.4, 0.9], 0.8);
        check_eigenpairs::<4>(&gas, &u4, Axis::X);
        check_eigenpairs::<4>(&gas, &u4, Axis::Y);
    }
}
