//! Independent oracles shared by the property tests and the acceptance
//! suite. Instances are built from streams of uniform numbers in `[0, 1)`
//! so proptest and a seeded RNG can drive the same checks.

#![allow(dead_code)]

use ppweno::limiter::{self, CellProblem, LimiterMode, LimiterPolicy};
use ppweno::mesh::{apply_boundaries, BoundarySpec, FieldGrid};
use ppweno::physics::{GasModel, IdealGas, Model, ScalarModel, State};
use ppweno::rk::{RkScheme, Solver, StepRule, TimeStepPolicy};
use ppweno::weno::WenoConfig;

pub const LATTICE_TOL: f64 = 1e-12;

/// Draws from a stream of uniforms.
pub struct Draw<'a> {
    next: &'a mut dyn FnMut() -> f64,
}

impl<'a> Draw<'a> {
    pub fn new(next: &'a mut dyn FnMut() -> f64) -> Self {
        Draw { next }
    }

    pub fn unit(&mut self) -> f64 {
        (self.next)()
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Value in `[lo, hi]` with a uniformly distributed exponent.
    pub fn log_range(&mut self, lo: f64, hi: f64) -> f64 {
        (lo.ln() + (hi.ln() - lo.ln()) * self.unit()).exp()
    }

    /// Zero with probability `p`, else uniform in `[lo, hi]`.
    pub fn maybe_zero(&mut self, p: f64, lo: f64, hi: f64) -> f64 {
        if self.unit() < p {
            0.0
        } else {
            self.range(lo, hi)
        }
    }
}

/// Points `0, b/(m-1), .., b`.
pub fn lattice(b: f64, m: usize) -> impl Iterator<Item = f64> + Clone {
    (0..m).map(move |k| b * k as f64 / (m - 1) as f64)
}

// ---- scalar bounds -------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct ScalarCell {
    pub u: f64,
    pub lambda: f64,
    /// High minus low fluxes on the left and right faces.
    pub f_minus: f64,
    pub f_plus: f64,
    pub h_minus: f64,
    pub h_plus: f64,
    pub dt_source: f64,
    pub slack: f64,
}

impl ScalarCell {
    pub fn draw(d: &mut Draw, with_source: bool) -> Self {
        ScalarCell {
            u: d.range(-1.0, 1.0),
            lambda: d.range(0.05, 1.0),
            f_minus: d.maybe_zero(0.1, -1.0, 1.0),
            f_plus: d.maybe_zero(0.1, -1.0, 1.0),
            h_minus: d.range(-1.0, 1.0),
            h_plus: d.range(-1.0, 1.0),
            dt_source: if with_source { d.range(-0.2, 0.2) } else { 0.0 },
            slack: d.maybe_zero(0.25, 0.0, 0.5),
        }
    }

    /// Update with the left and right faces blended by `tm`, `tp`.
    pub fn update(&self, tm: f64, tp: f64, source: bool) -> f64 {
        let left = self.h_minus + tm * self.f_minus;
        let right = self.h_plus + tp * self.f_plus;
        let s = if source { self.dt_source } else { 0.0 };
        self.u - self.lambda * (right - left) + s
    }
}

fn box_ok(b: (f64, f64)) -> Result<(), String> {
    if (0.0..=1.0).contains(&b.0) && (0.0..=1.0).contains(&b.1) {
        Ok(())
    } else {
        Err(format!("bounds {b:?} outside [0, 1]"))
    }
}

/// Upper bound on a 21 x 21 lattice of the returned box.
pub fn check_mpp_max(c: &ScalarCell) -> Result<(), String> {
    let u_max = c.update(0.0, 0.0, false) + c.slack;
    let b = limiter::mpp_bounds_max(c.u, u_max, c.lambda, c.f_minus, c.f_plus, c.h_minus, c.h_plus)
        .map_err(|e| e.to_string())?;
    box_ok(b)?;
    for tm in lattice(b.0, 21) {
        for tp in lattice(b.1, 21) {
            let v = c.update(tm, tp, false);
            if v > u_max + LATTICE_TOL {
                return Err(format!("{c:?}: u({tm}, {tp}) = {v} above {u_max}"));
            }
        }
    }
    Ok(())
}

pub fn check_mpp_min(c: &ScalarCell) -> Result<(), String> {
    let u_min = c.update(0.0, 0.0, true) - c.slack;
    let b = limiter::mpp_bounds_min(c.u, u_min, c.lambda, c.f_minus, c.f_plus, c.h_minus, c.h_plus, c.dt_source)
        .map_err(|e| e.to_string())?;
    box_ok(b)?;
    for tm in lattice(b.0, 21) {
        for tp in lattice(b.1, 21) {
            let v = c.update(tm, tp, true);
            if v < u_min - LATTICE_TOL {
                return Err(format!("{c:?}: u({tm}, {tp}) = {v} below {u_min}"));
            }
        }
    }
    Ok(())
}

/// Density box from high and low density fluxes with the floor `1e-13`.
pub fn check_density_bounds(d: &mut Draw) -> Result<(), String> {
    let eps = 1e-13;
    let lambda = d.range(0.05, 1.0);
    let low = [d.range(-1.0, 1.0), d.range(-1.0, 1.0)];
    let high = [low[0] + d.maybe_zero(0.1, -1.0, 1.0), low[1] + d.maybe_zero(0.1, -1.0, 1.0)];
    let rho = lambda * (low[1] - low[0]) + eps + d.maybe_zero(0.25, 0.0, 0.5);
    let b = limiter::density_bounds(rho, lambda, high, low, eps).map_err(|e| e.to_string())?;
    box_ok(b)?;
    for tm in lattice(b.0, 21) {
        for tp in lattice(b.1, 21) {
            let left = low[0] + tm * (high[0] - low[0]);
            let right = low[1] + tp * (high[1] - low[1]);
            let v = rho - lambda * (right - left);
            if v < eps - LATTICE_TOL {
                return Err(format!("rho({tm}, {tp}) = {v:e}"));
            }
        }
    }
    Ok(())
}

// ---- gas cells ------------------------------------------------------------

pub fn ideal_pressure(gamma: f64, u: &[f64]) -> f64 {
    let n = u.len();
    let kinetic: f64 = u[1..n - 1].iter().map(|m| m * m).sum::<f64>() / u[0];
    (gamma - 1.0) * (u[n - 1] - 0.5 * kinetic)
}

/// Admissible ideal-gas state with `N - 2` velocity components.
pub fn draw_gas_state<const N: usize>(d: &mut Draw) -> State<N> {
    let rho = d.log_range(1e-3, 10.0);
    let p = d.log_range(1e-4, 10.0);
    let gamma_dummy = 1.4;
    let mut u = [0.0; N];
    u[0] = rho;
    let mut kinetic = 0.0;
    for m in u[1..N - 1].iter_mut() {
        let v = d.range(-3.0, 3.0);
        *m = rho * v;
        kinetic += 0.5 * rho * v * v;
    }
    u[N - 1] = p / (gamma_dummy - 1.0) + kinetic;
    u
}

/// Single-cell positivity instance `u(theta) = base + sum theta_f dir_f`.
#[derive(Clone, Debug)]
pub struct GasCell<const N: usize, const F: usize> {
    pub gamma: f64,
    pub problem: CellProblem<N, F>,
    pub eps_rho: f64,
    pub eps_p: f64,
}

impl<const N: usize, const F: usize> GasCell<N, F> {
    pub fn draw(d: &mut Draw) -> Self {
        let gamma = 1.4;
        let base = draw_gas_state::<N>(d);
        let scale = d.log_range(1e-3, 10.0);
        let mut dir = [[0.0; N]; F];
        for f in 0..F {
            let s = draw_gas_state::<N>(d);
            let sign = if d.unit() < 0.5 { -1.0 } else { 1.0 };
            for k in 0..N {
                dir[f][k] = sign * scale * s[k] * d.range(0.0, 1.0) + d.range(-0.1, 0.1) * base[k];
            }
        }
        let p0 = ideal_pressure(gamma, &base);
        let eps_p = if d.unit() < 0.5 { 1e-13 } else { p0 * d.range(0.0, 0.9) };
        GasCell {
            gamma,
            problem: CellProblem { base, dir },
            eps_rho: 1e-13,
            eps_p,
        }
    }

    pub fn state(&self, theta: &[f64; F]) -> [f64; N] {
        let mut u = self.problem.base;
        for f in 0..F {
            for k in 0..N {
                u[k] += theta[f] * self.problem.dir[f][k];
            }
        }
        u
    }

    pub fn admissible(&self, theta: &[f64; F]) -> Result<(), String> {
        let u = self.state(theta);
        if u[0] < self.eps_rho - LATTICE_TOL {
            return Err(format!("rho {:e} at {theta:?}", u[0]));
        }
        let p = ideal_pressure(self.gamma, &u);
        if !(p >= self.eps_p - LATTICE_TOL) {
            return Err(format!("p {p:e} below {:e} at {theta:?}", self.eps_p));
        }
        Ok(())
    }
}

impl<const N: usize, const F: usize> GasCell<N, F>
where
    IdealGas: Model<N>,
{
    pub fn positivity_box(&self) -> Result<[f64; F], String> {
        let g = IdealGas::new(self.gamma);
        let b = self.problem.positivity_box(&g, self.eps_rho, self.eps_p).map_err(|e| e.to_string())?;
        if b.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(format!("box {b:?} outside [0, 1]"));
        }
        Ok(b)
    }
}

/// Every point of a 21 x 21 lattice of the 1D rectangle is admissible.
pub fn check_rectangle(cell: &GasCell<3, 2>) -> Result<(), String> {
    let b = cell.positivity_box()?;
    for tm in lattice(b[0], 21) {
        for tp in lattice(b[1], 21) {
            cell.admissible(&[tm, tp])?;
        }
    }
    Ok(())
}

/// Every point of an `m^4` lattice of the 2D tesseract is admissible.
pub fn check_tesseract(cell: &GasCell<4, 4>, m: usize) -> Result<(), String> {
    let b = cell.positivity_box()?;
    for a in lattice(b[0], m) {
        for c in lattice(b[1], m) {
            for e in lattice(b[2], m) {
                for g in lattice(b[3], m) {
                    cell.admissible(&[a, c, e, g])?;
                }
            }
        }
    }
    Ok(())
}

/// `p((t1 + t2) / 2) >= (p(t1) + p(t2)) / 2` for two points of the density box.
pub fn check_concavity(cell: &GasCell<4, 4>, d: &mut Draw) -> Result<(), String> {
    let g = IdealGas::new(cell.gamma);
    let rho_box = cell.problem.density_box(&g, cell.eps_rho).map_err(|e| e.to_string())?;
    let t1: [f64; 4] = std::array::from_fn(|f| rho_box[f] * d.unit());
    let t2: [f64; 4] = std::array::from_fn(|f| rho_box[f] * d.unit());
    let mid: [f64; 4] = std::array::from_fn(|f| 0.5 * (t1[f] + t2[f]));
    let p = |t: &[f64; 4]| ideal_pressure(cell.gamma, &cell.state(t));
    let (p1, p2, pm) = (p(&t1), p(&t2), p(&mid));
    let scale = 1.0_f64.max(p1.abs()).max(p2.abs());
    if pm < 0.5 * (p1 + p2) - LATTICE_TOL * scale {
        return Err(format!("p(mid) = {pm:e} < ({p1:e} + {p2:e}) / 2"));
    }
    Ok(())
}

/// Bisection on `p(base + r dir) >= floor`, independent of the solver's
/// quadratic root.
pub fn bisect_floor(gamma: f64, base: &[f64; 4], dir: &[f64; 4], floor: f64) -> f64 {
    let p = |r: f64| {
        let u: Vec<f64> = (0..4).map(|k| base[k] + r * dir[k]).collect();
        ideal_pressure(gamma, &u)
    };
    if p(1.0) >= floor {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if p(mid) >= floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn check_scale_to_floor(d: &mut Draw) -> Result<(), String> {
    let gamma = d.range(1.1, 5.0 / 3.0);
    let base = draw_gas_state::<4>(d);
    let base = {
        // re-express the drawn state for this gamma at the same pressure
        let p = ideal_pressure(1.4, &base);
        let mut b = base;
        b[3] += p / (gamma - 1.0) - p / 0.4;
        b
    };
    let mut dir = draw_gas_state::<4>(d);
    let shrink = d.range(0.0, 0.999);
    dir[0] = -shrink * base[0];
    for k in 1..3 {
        dir[k] = d.range(-3.0, 3.0) * base[0];
    }
    dir[3] = -d.range(0.0, 3.0) * base[3];
    let p0 = ideal_pressure(gamma, &base);
    let floor = if d.unit() < 0.3 { 1e-13 } else { p0 * d.range(0.0, 0.95) };
    let g = IdealGas::new(gamma);
    let r = limiter::scale_to_floor::<4>(&g, &base, &dir, floor).map_err(|e| e.to_string())?;
    let oracle = bisect_floor(gamma, &base, &dir, floor);
    if (r - oracle).abs() > 1e-10 {
        return Err(format!("r = {r} vs bisection {oracle} (base {base:?}, dir {dir:?}, floor {floor:e})"));
    }
    Ok(())
}

// ---- whole-step identities -------------------------------------------------

pub fn double_rarefaction_grid(n: usize) -> FieldGrid<3> {
    let g = IdealGas::new(1.4);
    let dx = 2.0 / n as f64;
    let mut grid = FieldGrid::<3>::new_1d(n, -1.0, dx).unwrap();
    let left = GasModel::<3>::from_primitive(&g, &[7.0], [-1.0, 0.0], 0.2);
    let right = GasModel::<3>::from_primitive(&g, &[7.0], [1.0, 0.0], 0.2);
    grid.fill(|x, _| if x < 0.0 { left } else { right });
    grid
}

pub fn gas_solver(gas: &IdealGas, boundary: BoundarySpec<3>, mode: LimiterMode) -> Solver<'_, 3> {
    Solver::new(
        gas,
        boundary,
        WenoConfig::default(),
        RkScheme::Rk4,
        TimeStepPolicy {
            cfl: 0.6,
            source_aware: true,
            rule: StepRule::WaveSpeed,
        },
        LimiterPolicy::positivity().with_mode(mode),
    )
    .unwrap()
}

/// First-order Lax-Friedrichs forward-Euler step of 1D Euler data with edge
/// copies at both ends.
pub fn lxf_euler_step(gamma: f64, u: &[[f64; 3]], dt: f64, dx: f64) -> Vec<[f64; 3]> {
    let flux = |s: &[f64; 3]| {
        let v = s[1] / s[0];
        let p = ideal_pressure(gamma, s);
        [s[1], s[1] * v + p, (s[2] + p) * v]
    };
    let speed = |s: &[f64; 3]| {
        let p = ideal_pressure(gamma, s);
        (s[1] / s[0]).abs() + (gamma * p.abs() / s[0].abs()).sqrt()
    };
    let alpha = u.iter().map(speed).fold(0.0_f64, f64::max);
    let n = u.len();
    let at = |i: isize| u[i.clamp(0, n as isize - 1) as usize];
    let h = |i: isize| {
        let (l, r) = (at(i), at(i + 1));
        let (fl, fr) = (flux(&l), flux(&r));
        let out: [f64; 3] = std::array::from_fn(|k| 0.5 * (fl[k] + fr[k]) - 0.5 * alpha * (r[k] - l[k]));
        out
    };
    (0..n as isize)
        .map(|i| {
            let (hl, hr) = (h(i - 1), h(i));
            std::array::from_fn(|k| u[i as usize][k] - dt / dx * (hr[k] - hl[k]))
        })
        .collect()
}

/// Largest relative deviation of `steps` steps with every `theta` forced to
/// zero from the independent first-order stepper. Also checks positivity of
/// the first-order states.
pub fn theta_zero_deviation(steps: usize) -> Result<f64, String> {
    let gas = IdealGas::new(1.4);
    let solver = gas_solver(&gas, BoundarySpec::outflow(), LimiterMode::Forced(0.0));
    let mut grid = double_rarefaction_grid(100);
    let mut t = 0.0;
    let mut worst = 0.0_f64;
    for _ in 0..steps {
        apply_boundaries(&mut grid, &solver.boundary, &gas, t);
        let dt = solver.compute_dt(&grid).map_err(|e| e.to_string())?;
        let before = grid.interior();
        let expected = lxf_euler_step(1.4, &before, dt, grid.dx);
        solver.step(&mut grid, t, dt).map_err(|e| e.to_string())?;
        for (a, b) in grid.interior().iter().zip(&expected) {
            if !(b[0] > 0.0 && ideal_pressure(1.4, b) > 0.0) {
                return Err(format!("first-order state {b:?} not positive"));
            }
            for k in 0..3 {
                worst = worst.max((a[k] - b[k]).abs() / b[k].abs().max(1.0));
            }
        }
        t += dt;
    }
    Ok(worst)
}

/// Whether runs with `theta` forced to one and with the limiter off agree
/// bit for bit.
pub fn theta_one_matches_unlimited(steps: usize) -> Result<bool, String> {
    let gas = IdealGas::new(1.4);
    let run = |mode| -> Result<Vec<[f64; 3]>, String> {
        let solver = gas_solver(&gas, BoundarySpec::outflow(), mode);
        let mut grid = double_rarefaction_grid(100);
        let mut t = 0.0;
        for _ in 0..steps {
            apply_boundaries(&mut grid, &solver.boundary, &gas, t);
            let dt = solver.compute_dt(&grid).map_err(|e| e.to_string())?;
            solver.step(&mut grid, t, dt).map_err(|e| e.to_string())?;
            t += dt;
        }
        Ok(grid.interior())
    };
    Ok(run(LimiterMode::Forced(1.0))? == run(LimiterMode::Off)?)
}

/// Worst relative per-step change of the component sums on periodic grids
/// with the limiter active: a bounded scalar problem and a gas problem.
pub fn periodic_conservation_drift(steps: usize) -> Result<f64, String> {
    let mut worst = 0.0_f64;

    let burgers = ScalarModel::burgers();
    let solver = Solver::new(
        &burgers,
        BoundarySpec::periodic(),
        WenoConfig::default(),
        RkScheme::Rk3,
        TimeStepPolicy { cfl: 0.6, source_aware: true, rule: StepRule::WaveSpeed },
        LimiterPolicy::bounded(0.0, 1.0),
    )
    .map_err(|e| e.to_string())?;
    let n = 64;
    let dx = 2.0 * std::f64::consts::PI / n as f64;
    let mut grid = FieldGrid::<1>::new_1d(n, 0.0, dx).unwrap();
    // square wave touching both bounds
    grid.fill(|x, _| [if x.sin() > 0.0 { 1.0 } else { 0.0 }]);
    let mut t = 0.0;
    for _ in 0..steps {
        apply_boundaries(&mut grid, &solver.boundary, &burgers, t);
        let before: f64 = grid.interior().iter().map(|u| u[0]).sum();
        let dt = solver.compute_dt(&grid).map_err(|e| e.to_string())?;
        solver.step(&mut grid, t, dt).map_err(|e| e.to_string())?;
        let after: f64 = grid.interior().iter().map(|u| u[0]).sum();
        worst = worst.max((after - before).abs() / before.abs().max(1.0));
        t += dt;
    }

    let gas = IdealGas::new(1.4);
    let solver = gas_solver(&gas, BoundarySpec::periodic(), LimiterMode::On);
    let dx = 1.0 / n as f64;
    let mut grid = FieldGrid::<3>::new_1d(n, 0.0, dx).unwrap();
    grid.fill(|x, _| {
        let rho = if (0.25..0.75).contains(&x) { 1.0 } else { 1e-3 };
        let p = if x < 0.5 { 1000.0 } else { 1e-2 };
        GasModel::<3>::from_primitive(&gas, &[rho], [1.0, 0.0], p)
    });
    let mut t = 0.0;
    for _ in 0..steps {
        apply_boundaries(&mut grid, &solver.boundary, &gas, t);
        let before = grid.interior();
        let dt = solver.compute_dt(&grid).map_err(|e| e.to_string())?;
        solver.step(&mut grid, t, dt).map_err(|e| e.to_string())?;
        let after = grid.interior();
        for k in 0..3 {
            let s0: f64 = before.iter().map(|u| u[k]).sum();
            let s1: f64 = after.iter().map(|u| u[k]).sum();
            let scale: f64 = before.iter().map(|u| u[k].abs()).sum::<f64>().max(1.0);
            worst = worst.max((s1 - s0).abs() / scale);
        }
        t += dt;
    }
    Ok(worst)
}
