use super::gas::{gas_eigensystem, gas_wave_speeds, GasLayout};
use super::{Axis, Eigen, GasModel, Model, SourceEval, State};

/// Constants of the O / O2 / N2 dissociation model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeSpeciesConstants {
    /// Molar masses of O, O2, N2.
    pub molar_mass: [f64; 3],
    /// Heat-capacity factors: 3/2 for monoatomic, 5/2 for diatomic.
    pub heat_factor: [f64; 3],
    /// Formation enthalpy of atomic oxygen.
    pub h1: f64,
    /// Universal gas constant.
    pub r: f64,
    pub c0: f64,
    pub e0: f64,
    pub b: [f64; 5],
}

impl Default for ThreeSpeciesConstants {
    fn default() -> Self {
        ThreeSpeciesConstants {
            molar_mass: [0.016, 0.032, 0.028],
            heat_factor: [1.5, 2.5, 2.5],
            h1: 1.558e7,
            r: 8.31447215,
            c0: 2.9e17,
            e0: 59750.0,
            b: [2.855, 0.988, -6.181, -0.023, -0.001],
        }
    }
}

/// One-dimensional Euler equations for a reacting mixture of three ideal
/// gases. State layout `(rho1, rho2, rho3, m, E)` with
/// `E = sum rho_s e_s(T) + rho1 h1 + m^2 / (2 rho)` and
/// `p = R T sum rho_s / M_s`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ThreeSpecies {
    pub k: ThreeSpeciesConstants,
}

const LAYOUT: GasLayout<'static> = GasLayout {
    mass: &[0, 1, 2],
    in_total: &[true, true, true],
    momentum: &[3],
    energy: 4,
};

impl ThreeSpecies {
    pub fn new() -> Self {
        Self::default()
    }

    /// `sum rho_s c_s R / M_s`: volumetric heat capacity.
    #[inline]
    pub fn heat_capacity(&self, u: &State<5>) -> f64 {
        (0..3)
            .map(|s| u[s] * self.k.heat_factor[s] * self.k.r / self.k.molar_mass[s])
            .sum()
    }

    /// `R sum rho_s / M_s`.
    #[inline]
    pub fn gas_constant_density(&self, u: &State<5>) -> f64 {
        (0..3).map(|s| u[s] * self.k.r / self.k.molar_mass[s]).sum()
    }

    /// Thermal energy density `E - m^2/(2 rho) - rho1 h1`; positive exactly
    /// when the temperature is.
    #[inline]
    pub fn thermal_energy(&self, u: &State<5>) -> f64 {
        let rho = u[0] + u[1] + u[2];
        u[4] - 0.5 * u[3] * u[3] / rho - u[0] * self.k.h1
    }

    /// Temperature recovered from conserved variables.
    pub fn temperature_of(&self, u: &State<5>) -> f64 {
        self.thermal_energy(u) / self.heat_capacity(u)
    }

    /// State with the given partial densities, velocity and temperature.
    pub fn from_temperature(&self, rho_s: [f64; 3], velocity: f64, t: f64) -> State<5> {
        let rho: f64 = rho_s.iter().sum();
        let mut u = [rho_s[0], rho_s[1], rho_s[2], rho * velocity, 0.0];
        u[4] = self.heat_capacity(&u) * t + rho_s[0] * self.k.h1 + 0.5 * rho * velocity * velocity;
        u
    }

    /// Equilibrium ratio `k_f / k_b` at temperature `t`.
    pub fn equilibrium_constant(&self, t: f64) -> f64 {
        let z = 10000.0 / t;
        let b = &self.k.b;
        (b[0] + b[1] * z.ln() + b[2] * z + b[3] * z * z + b[4] * z * z * z).exp()
    }

    /// Net reaction rate `omega` at `u`, or `None` if `T <= 0`.
    pub fn reaction_rate(&self, u: &State<5>) -> Option<f64> {
        let t = self.temperature_of(u);
        if !(t > 0.0) || !t.is_finite() {
            return None;
        }
        let m = &self.k.molar_mass;
        let kf = self.k.c0 * t.powi(-2) * (-self.k.e0 / t).exp();
        let kb = kf / self.equilibrium_constant(t);
        let third_body: f64 = (0..3).map(|s| u[s] / m[s]).sum();
        Some((kf * u[1] / m[1] - kb * (u[0] / m[0]).powi(2)) * third_body)
    }

    fn pressure_derivatives(&self, u: &State<5>) -> ([f64; 3], f64) {
        let rho = u[0] + u[1] + u[2];
        let vel = u[3] / rho;
        let cv = self.heat_capacity(u);
        let rm = self.gas_constant_density(u);
        let t = self.thermal_energy(u) / cv;
        let mut dp = [0.0; 3];
        for (s, d) in dp.iter_mut().enumerate() {
            let de = 0.5 * vel * vel - if s == 0 { self.k.h1 } else { 0.0 };
            let rs = self.k.r / self.k.molar_mass[s];
            let dt = (de - t * self.k.heat_factor[s] * rs) / cv;
            *d = rm * dt + t * rs;
        }
        (dp, rm / cv)
    }
}

impl Model<5> for ThreeSpecies {
    fn flux(&self, u: &State<5>, _axis: Axis) -> State<5> {
        let rho = u[0] + u[1] + u[2];
        let vel = u[3] / rho;
        let p = GasModel::pressure(self, u);
        [u[0] * vel, u[1] * vel, u[2] * vel, u[3] * vel + p, (u[4] + p) * vel]
    }

    fn wave_speeds(&self, u: &State<5>, _axis: Axis) -> State<5> {
        let rho = u[0] + u[1] + u[2];
        let p = GasModel::pressure(self, u);
        let cv: f64 = (0..3)
            .map(|s| u[s].abs() * self.k.heat_factor[s] * self.k.r / self.k.molar_mass[s])
            .sum();
        let rm: f64 = (0..3).map(|s| u[s].abs() * self.k.r / self.k.molar_mass[s]).sum();
        let gamma = 1.0 + rm / cv;
        gas_wave_speeds(u[3] / rho, (gamma * p.abs() / rho.abs()).sqrt())
    }

    fn eigensystem(&self, u: &State<5>, axis: Axis) -> Option<Eigen<5>> {
        let (dp, dpe) = self.pressure_derivatives(u);
        gas_eigensystem(u, axis, &LAYOUT, GasModel::pressure(self, u), &dp, dpe)
    }

    fn has_source(&self) -> bool {
        true
    }

    fn source(&self, u: &State<5>) -> SourceEval<5> {
        match self.reaction_rate(u) {
            Some(w) => SourceEval {
                value: [2.0 * self.k.molar_mass[0] * w, -self.k.molar_mass[1] * w, 0.0, 0.0, 0.0],
                degenerate: false,
            },
            None => SourceEval {
                value: [0.0; 5],
                degenerate: true,
            },
        }
    }

    fn source_stiffness(&self, u: &State<5>) -> f64 {
        match self.reaction_rate(u) {
            Some(w) => {
                let m = &self.k.molar_mass;
                (m[1] * w / u[1]).abs().max((2.0 * m[0] * w / u[0]).abs())
            }
            None => 0.0,
        }
    }

    fn normal_momentum(&self, axis: Axis) -> Option<usize> {
        match axis {
            Axis::X => Some(3),
            Axis::Y => None,
        }
    }

    fn density_components(&self) -> &[usize] {
        &[0, 1, 2]
    }

    fn thermal(&self, u: &State<5>) -> Option<f64> {
        Some(self.thermal_energy(u))
    }

    fn thermal_magnitude(&self, u: &State<5>) -> f64 {
        let rho = (u[0] + u[1] + u[2]).abs();
        u[4].abs() + 0.5 * u[3] * u[3] / rho + (u[0] * self.k.h1).abs()
    }
}

impl GasModel<5> for ThreeSpecies {
    fn density(&self, u: &State<5>) -> f64 {
        u[0] + u[1] + u[2]
    }

    fn pressure(&self, u: &State<5>) -> f64 {
        self.temperature_of(u) * self.gas_constant_density(u)
    }

    fn gamma_at(&self, u: &State<5>) -> f64 {
        1.0 + self.gas_constant_density(u) / self.heat_capacity(u)
    }

    fn temperature(&self, u: &State<5>) -> f64 {
        self.temperature_of(u)
    }

    /// `mass = [rho1, rho2, rho3]`.
    fn from_primitive(&self, mass: &[f64], velocity: [f64; 2], pressure: f64) -> State<5> {
        let rho_s = [mass[0], mass[1], mass[2]];
        let probe = [rho_s[0], rho_s[1], rho_s[2], 0.0, 0.0];
        let t = pressure / self.gas_constant_density(&probe);
        self.from_temperature(rho_s, velocity[0], t)
    }

    fn velocity(&self, u: &State<5>) -> [f64; 2] {
        [u[3] / (u[0] + u[1] + u[2]), 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ideal::tests::check_eigenpairs;

    const LEFT: [f64; 3] = [5.251896311257204e-5, 3.748071704863518e-5, 2.962489471973072e-4];
    const RIGHT: [f64; 3] = [8.341661837019181e-8, 9.455418692098664e-11, 2.748909430004963e-7];

    #[test]
    fn temperature_inversion_single_species() {
        let m = ThreeSpecies::new();
        let rho3 = 0.7;
        let e = rho3 * 2.5 * m.k.r / m.k.molar_mass[2] * 300.0;
        let u = [0.0, 0.0, rho3, 0.0, e];
        assert!((m.temperature_of(&u) - 300.0).abs() < 1e-10);
    }

    #[test]
    fn left_state_pressure_and_round_trip() {
        let m = ThreeSpecies::new();
        let u = m.from_temperature(LEFT, 0.0, 8000.0);
        let p = m.pressure(&u);
        assert!((p - 1000.0).abs() / 1000.0 < 1e-3, "p = {p}");
        let t = m.temperature_of(&u);
        assert!((t - 8000.0).abs() / 8000.0 < 1e-10);
        let again = m.from_temperature(LEFT, 0.0, t);
        assert!((m.temperature_of(&again) - t).abs() / t < 1e-10);

        let ur = m.from_temperature(RIGHT, 0.0, 8000.0);
        assert!((m.pressure(&ur) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn initial_states_are_in_equilibrium() {
        let m = ThreeSpecies::new();
        for rho in [LEFT, RIGHT] {
            let u = m.from_temperature(rho, 0.0, 8000.0);
            let kf = m.k.c0 * 8000.0f64.powi(-2) * (-m.k.e0 / 8000.0).exp();
            let forward = kf * rho[1] / m.k.molar_mass[1];
            let w = m.reaction_rate(&u).unwrap();
            let third: f64 = (0..3).map(|s| rho[s] / m.k.molar_mass[s]).sum();
            // net rate is small against either one-way rate
            assert!(w.abs() < 1e-3 * forward * third, "omega = {w:e}");
        }
    }

    #[test]
    fn equilibrium_constant_regression() {
        let m = ThreeSpecies::new();
        let z: f64 = 1.25;
        let expect =
            (2.855 + 0.988 * z.ln() - 6.181 * z - 0.023 * z * z - 0.001 * z * z * z).exp();
        assert!((m.equilibrium_constant(8000.0) - expect).abs() < 1e-15);
        assert!((m.equilibrium_constant(8000.0) - 9.198868e-3).abs() < 1e-8);
    }

    #[test]
    fn sound_speed_matches_frozen_gamma() {
        let m = ThreeSpecies::new();
        let u = m.from_temperature(LEFT, 120.0, 8000.0);
        let (dp, dpe) = m.pressure_derivatives(&u);
        let rho: f64 = LEFT.iter().sum();
        let vel = u[3] / rho;
        let p = m.pressure(&u);
        let h = (u[4] + p) / rho;
        let c2: f64 = (0..3).map(|s| u[s] / rho * dp[s]).sum::<f64>() + dpe * (h - vel * vel);
        let frozen = m.gamma_at(&u) * p / rho;
        assert!((c2 - frozen).abs() / frozen < 1e-10);
    }

    #[test]
    fn pressure_derivatives_match_finite_differences() {
        let m = ThreeSpecies::new();
        let u = m.from_temperature(LEFT, 250.0, 7000.0);
        let (dp, dpe) = m.pressure_derivatives(&u);
        for s in 0..3 {
            let h = u[s] * 1e-6;
            let mut a = u;
            let mut b = u;
            a[s] += h;
            b[s] -= h;
            let fd = (m.pressure(&a) - m.pressure(&b)) / (2.0 * h);
            assert!((fd - dp[s]).abs() < 1e-6 * fd.abs().max(1.0), "{s}: {fd} vs {}", dp[s]);
        }
        let h = u[4] * 1e-6;
        let mut a = u;
        let mut b = u;
        a[4] += h;
        b[4] -= h;
        let fd = (m.pressure(&a) - m.pressure(&b)) / (2.0 * h);
        assert!((fd - dpe).abs() < 1e-6 * dpe);
    }

    #[test]
    fn thermal_energy_sign_tracks_temperature() {
        let m = ThreeSpecies::new();
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let rho = [next() + 1e-3, next() + 1e-3, next() + 1e-3];
            let t = (next() - 0.3) * 1e4;
            let u = m.from_temperature(rho, next() - 0.5, t);
            assert_eq!(m.thermal_energy(&u) > 0.0, m.temperature_of(&u) > 0.0);
        }
    }

    #[test]
    fn eigenvectors_diagonalize_jacobian() {
        let m = ThreeSpecies::new();
        let u = m.from_temperature(LEFT, 300.0, 6000.0);
        check_eigenpairs::<5>(&m, &u, Axis::X);
    }
}
