//! Reference solutions used by the benchmark cases.

/// Solution of `u_t + (u^2/2)_x = 0` from smooth data `u0` at time `t`
/// before shock formation, found by Newton iteration on the foot of the
/// characteristic through `x`.
pub fn burgers_characteristic(x: f64, t: f64, u0: impl Fn(f64) -> f64, du0: impl Fn(f64) -> f64) -> f64 {
    let mut xi = x - t * u0(x);
    for _ in 0..100 {
        let g = xi + t * u0(xi) - x;
        let step = g / (1.0 + t * du0(xi));
        xi -= step;
        if step.abs() <= 1e-15 * (1.0 + xi.abs()) {
            break;
        }
    }
    u0(xi)
}

/// Self-similar point-blast solution of a polytropic gas at rest
/// (`geometry` 1 planar, 2 cylindrical, 3 spherical).
#[derive(Clone, Debug)]
pub struct SedovSolution {
    pub gamma: f64,
    pub geometry: u32,
    /// `r_s = xi0 (E t^2 / rho0)^(1/(nu+2))`.
    pub xi0: f64,
}

impl SedovSolution {
    pub fn new(gamma: f64, geometry: u32) -> Self {
        assert!((1..=3).contains(&geometry) && gamma > 1.0);
        let nu = geometry as f64;
        let sigma = match geometry {
            1 => 2.0,
            2 => 2.0 * std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI,
        };
        let delta = 2.0 / (nu + 2.0);
        let integral = energy_integral(gamma, nu, delta);
        let xi0 = (sigma * delta * delta * integral).powf(-1.0 / (nu + 2.0));
        SedovSolution { gamma, geometry, xi0 }
    }

    /// Shock radius for blast energy `energy` (whole-space total; per unit
    /// area or length in lower dimensions) in ambient density `rho0`.
    pub fn shock_radius(&self, energy: f64, rho0: f64, t: f64) -> f64 {
        let nu = self.geometry as f64;
        self.xi0 * (energy * t * t / rho0).powf(1.0 / (nu + 2.0))
    }

    /// Post-shock density for ambient density `rho0` (strong shock).
    pub fn peak_density(&self, rho0: f64) -> f64 {
        rho0 * (self.gamma + 1.0) / (self.gamma - 1.0)
    }
}

/// `int_0^1 (G U^2 / 2 + P / (gamma-1)) eta^(nu-1) d eta` for the profiles
/// `u = D U`, `rho = rho0 G`, `p = rho0 D^2 P` integrated inward from the
/// strong-shock state at `eta = 1`.
fn energy_integral(gamma: f64, nu: f64, delta: f64) -> f64 {
    let rhs = |eta: f64, y: [f64; 3]| -> [f64; 3] {
        let [g, u, p] = y;
        let a = u - eta;
        let c2 = gamma * p / g;
        let du = (-(delta - 1.0) / delta * u * a + c2 * (nu - 1.0) * u / eta + 2.0 * (delta - 1.0) * p / (delta * g))
            / (a * a - c2);
        let dg = -g * (du + (nu - 1.0) * u / eta) / a;
        let dp = p * (gamma * dg / g - 2.0 * (delta - 1.0) / (delta * a));
        [dg, du, dp]
    };
    let density = |eta: f64, y: [f64; 3]| (0.5 * y[0] * y[1] * y[1] + y[2] / (gamma - 1.0)) * eta.powf(nu - 1.0);

    let mut y = [
        (gamma + 1.0) / (gamma - 1.0),
        2.0 / (gamma + 1.0),
        2.0 / (gamma + 1.0),
    ];
    let steps = 200_000;
    let stop = 1e-6;
    let h = -(1.0 - stop) / steps as f64;
    let mut eta = 1.0;
    let mut sum = 0.5 * density(eta, y);
    for k in 0..steps {
        let k1 = rhs(eta, y);
        let k2 = rhs(eta + 0.5 * h, std::array::from_fn(|c| y[c] + 0.5 * h * k1[c]));
        let k3 = rhs(eta + 0.5 * h, std::array::from_fn(|c| y[c] + 0.5 * h * k2[c]));
        let k4 = rhs(eta + h, std::array::from_fn(|c| y[c] + h * k3[c]));
        y = std::array::from_fn(|c| y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]));
        eta += h;
        let w = if k + 1 == steps { 0.5 } else { 1.0 };
        sum += w * density(eta, y);
    }
    sum * -h
}
