//! Runge-Kutta time stepping in flux-accumulation form.
//!
//! Stage `k` is built from the level-`n` state and a combination of the
//! earlier stage fluxes, so the full step reads
//! `u^{n+1} = u^n - lambda (H_{j+1/2} - H_{j-1/2}) + dt s` with
//! `H = sum_k b_k H^(k)`. The limiter acts on `H` only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::limiter::{limit_final_stage, FaceLayout, Floors, LimiterMode, LimiterPolicy, StageFluxAccumulator};
use crate::mesh::{apply_boundaries, BoundarySpec, Dim, EdgeKind, FieldGrid, Line};
use crate::physics::{Axis, Model, State};
use crate::weno::{field_speeds, line_fluxes, line_monotone_fluxes, AlphaMode, FallbackCounter, WenoConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RkScheme {
    /// Three-stage TVD scheme.
    Rk3,
    /// Classical four-stage scheme.
    Rk4,
}

const RK3_A: [&[f64]; 3] = [&[], &[1.0], &[0.25, 0.25]];
const RK3_B: [f64; 3] = [1.0 / 6.0, 1.0 / 6.0, 4.0 / 6.0];
const RK3_C: [f64; 3] = [0.0, 1.0, 0.5];
const RK4_A: [&[f64]; 4] = [&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]];
const RK4_B: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];
const RK4_C: [f64; 4] = [0.0, 0.5, 0.5, 1.0];

impl RkScheme {
    pub fn stages(&self) -> usize {
        match self {
            RkScheme::Rk3 => 3,
            RkScheme::Rk4 => 4,
        }
    }

    /// Coefficients of earlier stages in stage `k`.
    pub fn stage_coefficients(&self, k: usize) -> &'static [f64] {
        match self {
            RkScheme::Rk3 => RK3_A[k],
            RkScheme::Rk4 => RK4_A[k],
        }
    }

    /// Final combination weights; they sum to one.
    pub fn weights(&self) -> &'static [f64] {
        match self {
            RkScheme::Rk3 => &RK3_B,
            RkScheme::Rk4 => &RK4_B,
        }
    }

    pub fn nodes(&self) -> &'static [f64] {
        match self {
            RkScheme::Rk3 => &RK3_C,
            RkScheme::Rk4 => &RK4_C,
        }
    }
}

/// How the step size follows from the CFL number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `dt = cfl / (lambda (1/dx + 1/dy) + source bound)`.
    #[default]
    WaveSpeed,
    /// `dt = cfl * min(dx, dy)`, capped by the wave-speed bound at `cfl = 1`.
    MeshRatio,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStepPolicy {
    pub cfl: f64,
    /// Include the source stiffness in the step bound.
    pub source_aware: bool,
    #[serde(default)]
    pub rule: StepRule,
}

impl TimeStepPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(SolverError::config(format!("CFL number {} outside (0, 1)", self.cfl)));
        }
        Ok(())
    }
}

/// Diagnostics of one completed step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Time at the end of the step.
    pub time: f64,
    pub dt: f64,
    /// Interfaces with `theta < 1`.
    pub limited_faces: usize,
    pub min_theta: f64,
    pub min_source_factor: f64,
    pub floors: Floors,
    pub min_density: f64,
    /// Minimum pressure (or internal energy); `None` for scalar problems.
    pub min_thermal: Option<f64>,
    /// Interfaces reconstructed component-wise for lack of eigenvectors.
    pub fallbacks: usize,
    /// Source evaluations at states with non-positive temperature.
    pub degenerate_sources: usize,
}

/// One discretization: model, boundaries, reconstruction, time stepping
/// and limiter settings.
pub struct Solver<'m, const N: usize> {
    pub model: &'m dyn Model<N>,
    pub boundary: BoundarySpec<N>,
    pub weno: WenoConfig,
    pub scheme: RkScheme,
    pub time_step: TimeStepPolicy,
    pub limiter: LimiterPolicy,
    fallbacks: FallbackCounter,
}

struct StageFluxes<const N: usize> {
    x: Vec<State<N>>,
    y: Vec<State<N>>,
    source: Vec<State<N>>,
    degenerate: usize,
}

impl<'m, const N: usize> Solver<'m, N> {
    pub fn new(
        model: &'m dyn Model<N>,
        boundary: BoundarySpec<N>,
        weno: WenoConfig,
        scheme: RkScheme,
        time_step: TimeStepPolicy,
        limiter: LimiterPolicy,
    ) -> Result<Self> {
        boundary.validate(model)?;
        weno.validate()?;
        time_step.validate()?;
        Ok(Solver {
            model,
            boundary,
            weno,
            scheme,
            time_step,
            limiter,
            fallbacks: FallbackCounter::default(),
        })
    }

    fn periodic(&self) -> [bool; 2] {
        [
            matches!(self.boundary.left, EdgeKind::Periodic),
            matches!(self.boundary.bottom, EdgeKind::Periodic),
        ]
    }

    fn axes(grid: &FieldGrid<N>) -> &'static [Axis] {
        match grid.dim {
            Dim::One => &[Axis::X],
            Dim::Two => &[Axis::X, Axis::Y],
        }
    }

    fn lines(&self, grid: &FieldGrid<N>, axis: Axis) -> Vec<(usize, Line<N>)> {
        let normal = self.model.normal_momentum(axis);
        (0..grid.line_count(axis))
            .into_par_iter()
            .filter_map(|k| grid.gather_line(axis, k, normal).map(|l| (k, l)))
            .collect()
    }

    fn speeds(&self, lines: &[(usize, Line<N>)], axis: Axis) -> State<N> {
        if let AlphaMode::Fixed { value } = self.weno.alpha {
            return [value; N];
        }
        lines
            .par_iter()
            .map(|(_, l)| field_speeds(self.model, l.states.iter(), axis))
            .reduce(
                || [0.0; N],
                |a, b| std::array::from_fn(|k| a[k].max(b[k])),
            )
    }

    /// Largest stable step for the level-`n` data in `grid` (ghosts filled).
    pub fn compute_dt(&self, grid: &FieldGrid<N>) -> Result<f64> {
        let mut lambda = 0.0_f64;
        for &axis in Self::axes(grid) {
            let s = self.speeds(&self.lines(grid, axis), axis);
            lambda = lambda.max(s.iter().fold(0.0, |m, &v| m.max(v)));
        }
        let stiffness = if self.time_step.source_aware && self.model.has_source() {
            let cells: Vec<(usize, usize)> = grid.active_cells().collect();
            cells
                .par_iter()
                .map(|&(i, j)| self.model.source_stiffness(grid.cell(i, j)))
                .reduce(|| 0.0, f64::max)
        } else {
            0.0
        };
        let inv_h = match grid.dim {
            Dim::One => 1.0 / grid.dx,
            Dim::Two => 1.0 / grid.dx + 1.0 / grid.dy,
        };
        let rate = lambda * inv_h + stiffness;
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(SolverError::config(format!(
                "no admissible time step: max wave speed {lambda:e}, source bound {stiffness:e}"
            )));
        }
        Ok(match self.time_step.rule {
            StepRule::WaveSpeed => self.time_step.cfl / rate,
            StepRule::MeshRatio => {
                let h = match grid.dim {
                    Dim::One => grid.dx,
                    Dim::Two => grid.dx.min(grid.dy),
                };
                (self.time_step.cfl * h).min(1.0 / rate)
            }
        })
    }

    fn stage_fluxes(&self, grid: &FieldGrid<N>, low_alpha: Option<&mut [f64; 2]>) -> (StageFluxes<N>, [Vec<State<N>>; 2]) {
        let lay = FaceLayout::of(grid);
        let mut x = vec![[0.0; N]; (lay.nx + 1) * lay.ny];
        let mut y = if lay.two_d { vec![[0.0; N]; lay.nx * (lay.ny + 1)] } else { Vec::new() };
        let mut low = [Vec::new(), Vec::new()];
        let want_low = low_alpha.is_some();
        let mut alphas = [0.0; 2];
        for &axis in Self::axes(grid) {
            let lines = self.lines(grid, axis);
            let alpha = self.speeds(&lines, axis);
            let alpha_low = alpha.iter().fold(0.0_f64, |m, &v| m.max(v));
            let ai = if axis == Axis::X { 0 } else { 1 };
            alphas[ai] = alpha_low;
            let computed: Vec<(usize, usize, Vec<State<N>>, Vec<State<N>>)> = lines
                .par_iter()
                .map(|(k, l)| {
                    let high = line_fluxes(self.model, &l.states, axis, &alpha, &self.weno, &self.fallbacks);
                    let lo = if want_low {
                        line_monotone_fluxes(self.model, &l.states, axis, alpha_low)
                    } else {
                        Vec::new()
                    };
                    (*k, l.start, high, lo)
                })
                .collect();
            let target = if axis == Axis::X { &mut x } else { &mut y };
            let mut low_target = if want_low { vec![[0.0; N]; target.len()] } else { Vec::new() };
            for (k, start, high, lo) in computed {
                for (p, h) in high.into_iter().enumerate() {
                    let idx = match axis {
                        Axis::X => lay.xf(start + p, k),
                        Axis::Y => lay.yf(k, start + p),
                    };
                    target[idx] = h;
                    if want_low {
                        low_target[idx] = lo[p];
                    }
                }
            }
            low[ai] = low_target;
        }
        if let Some(out) = low_alpha {
            *out = alphas;
        }

        let mut source = vec![[0.0; N]; lay.nx * lay.ny];
        let mut degenerate = 0;
        if self.model.has_source() {
            let cells: Vec<(usize, usize)> = grid.active_cells().collect();
            let evals: Vec<_> = cells
                .par_iter()
                .map(|&(i, j)| self.model.source(grid.cell(i, j)))
                .collect();
            for (&(i, j), e) in cells.iter().zip(evals) {
                source[lay.cell(i, j)] = e.value;
                degenerate += e.degenerate as usize;
            }
        }
        (StageFluxes { x, y, source, degenerate }, low)
    }

    /// `u^n - sum_faces lambda (C_out - C_in) + dt S` for cell `(i, j)` with
    /// face fluxes combined as `sum_l w_l F^(l)`.
    fn combined_update(
        lay: &FaceLayout,
        u_n: &State<N>,
        i: usize,
        j: usize,
        lx: f64,
        ly: f64,
        dt: f64,
        stages: &[StageFluxes<N>],
        w: &[f64],
    ) -> State<N> {
        let mut u = *u_n;
        for (s, &wl) in stages.iter().zip(w) {
            if wl == 0.0 {
                continue;
            }
            let (l, r) = (&s.x[lay.xf(i, j)], &s.x[lay.xf(i + 1, j)]);
            for k in 0..N {
                u[k] -= wl * lx * (r[k] - l[k]);
            }
            if lay.two_d {
                let (d, t) = (&s.y[lay.yf(i, j)], &s.y[lay.yf(i, j + 1)]);
                for k in 0..N {
                    u[k] -= wl * ly * (t[k] - d[k]);
                }
            }
            let src = &s.source[lay.cell(i, j)];
            for k in 0..N {
                u[k] += wl * dt * src[k];
            }
        }
        u
    }

    fn check_finite(grid: &FieldGrid<N>, stage: usize) -> Result<()> {
        for (i, j) in grid.active_cells() {
            if grid.cell(i, j).iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite { stage, i, j });
            }
        }
        Ok(())
    }

    /// Advance `grid` from `time` by `dt`, returning step diagnostics and the
    /// combined fluxes used by the final update.
    pub fn step_with_fluxes(
        &self,
        grid: &mut FieldGrid<N>,
        time: f64,
        dt: f64,
    ) -> Result<(StepReport, StageFluxAccumulator<N>)> {
        let lay = FaceLayout::of(grid);
        let (lx, ly) = (dt / grid.dx, if lay.two_d { dt / grid.dy } else { 0.0 });
        let cells: Vec<(usize, usize)> = grid.active_cells().collect();
        apply_boundaries(grid, &self.boundary, self.model, time);
        Self::check_finite(grid, 0)?;
        self.fallbacks.take();

        let mut stages: Vec<StageFluxes<N>> = Vec::with_capacity(self.scheme.stages());
        let mut low = [Vec::new(), Vec::new()];
        let mut degenerate = 0;
        let mut stage_grid = grid.clone();
        for k in 0..self.scheme.stages() {
            if k > 0 {
                let a = self.scheme.stage_coefficients(k);
                let updated: Vec<State<N>> = cells
                    .par_iter()
                    .map(|&(i, j)| Self::combined_update(&lay, grid.cell(i, j), i, j, lx, ly, dt, &stages, a))
                    .collect();
                for (&(i, j), u) in cells.iter().zip(updated) {
                    *stage_grid.cell_mut(i, j) = u;
                }
                apply_boundaries(&mut stage_grid, &self.boundary, self.model, time + self.scheme.nodes()[k] * dt);
                Self::check_finite(&stage_grid, k)?;
            }
            let source_grid = if k == 0 { &*grid } else { &stage_grid };
            let (fluxes, l) = if k == 0 {
                let mut a = [0.0; 2];
                self.stage_fluxes(source_grid, Some(&mut a))
            } else {
                self.stage_fluxes(source_grid, None)
            };
            if k == 0 {
                low = l;
            }
            degenerate += fluxes.degenerate;
            stages.push(fluxes);
        }

        let b = self.scheme.weights();
        let combine = |pick: &dyn Fn(&StageFluxes<N>) -> &Vec<State<N>>| -> Vec<State<N>> {
            let len = pick(&stages[0]).len();
            (0..len)
                .map(|idx| {
                    let mut acc = [0.0; N];
                    for (s, &w) in stages.iter().zip(b) {
                        let v = &pick(s)[idx];
                        for k in 0..N {
                            acc[k] += w * v[k];
                        }
                    }
                    acc
                })
                .collect()
        };
        let [low_x, low_y] = low;
        let acc = StageFluxAccumulator {
            high_x: combine(&|s| &s.x),
            high_y: combine(&|s| &s.y),
            low_x,
            low_y,
            source_rk: combine(&|s| &s.source),
            source_n: stages[0].source.clone(),
        };

        let limited = limit_final_stage(grid, self.model, &acc, dt, &self.limiter, self.periodic())?;
        let blend = |theta: f64, h: &State<N>, l: &State<N>| -> State<N> {
            std::array::from_fn(|k| theta * h[k] + (1.0 - theta) * l[k])
        };
        let updated: Vec<State<N>> = cells
            .par_iter()
            .map(|&(i, j)| {
                let mut u = *grid.cell(i, j);
                let (fl, fr) = (lay.xf(i, j), lay.xf(i + 1, j));
                let hl = blend(limited.theta_x[fl], &acc.high_x[fl], &acc.low_x[fl]);
                let hr = blend(limited.theta_x[fr], &acc.high_x[fr], &acc.low_x[fr]);
                for k in 0..N {
                    u[k] -= lx * (hr[k] - hl[k]);
                }
                if lay.two_d {
                    let (fd, fu) = (lay.yf(i, j), lay.yf(i, j + 1));
                    let hd = blend(limited.theta_y[fd], &acc.high_y[fd], &acc.low_y[fd]);
                    let hu = blend(limited.theta_y[fu], &acc.high_y[fu], &acc.low_y[fu]);
                    for k in 0..N {
                        u[k] -= ly * (hu[k] - hd[k]);
                    }
                }
                let s = &limited.dt_source[lay.cell(i, j)];
                for k in 0..N {
                    u[k] += s[k];
                }
                u
            })
            .collect();
        for (&(i, j), u) in cells.iter().zip(updated) {
            *grid.cell_mut(i, j) = u;
        }
        Self::check_finite(grid, self.scheme.stages())?;
        apply_boundaries(grid, &self.boundary, self.model, time + dt);

        let used_faces = |theta: &[f64]| theta.iter().filter(|&&t| t < 1.0).count();
        let min_face = |theta: &[f64]| theta.iter().copied().fold(1.0_f64, f64::min);
        let (limited_faces, min_theta) = if self.limiter.mode == LimiterMode::On {
            (
                used_faces(&limited.theta_x) + used_faces(&limited.theta_y),
                min_face(&limited.theta_x).min(min_face(&limited.theta_y)),
            )
        } else {
            (0, min_face(&limited.theta_x).min(min_face(&limited.theta_y)))
        };
        let dens = self.model.density_components();
        let grid: &FieldGrid<N> = grid;
        let min_density = cells
            .iter()
            .flat_map(|&(i, j)| dens.iter().map(move |&k| grid.cell(i, j)[k]))
            .fold(f64::INFINITY, f64::min);
        let min_thermal = cells
            .iter()
            .map(|&(i, j)| self.model.thermal(grid.cell(i, j)))
            .try_fold(f64::INFINITY, |m, x| x.map(|x| m.min(x)));

        let report = StepReport {
            step: 0,
            time: time + dt,
            dt,
            limited_faces,
            min_theta,
            min_source_factor: limited.source_factor_min,
            floors: limited.floors,
            min_density,
            min_thermal,
            fallbacks: self.fallbacks.take(),
            degenerate_sources: degenerate,
        };
        Ok((report, acc))
    }

    pub fn step(&self, grid: &mut FieldGrid<N>, time: f64, dt: f64) -> Result<StepReport> {
        self.step_with_fluxes(grid, time, dt).map(|(r, _)| r)
    }

    /// Step from `time` to `t_end`, clipping the last step to land on
    /// `t_end`. `observe` sees every report as it is produced.
    pub fn advance(
        &self,
        grid: &mut FieldGrid<N>,
        time: f64,
        t_end: f64,
        mut observe: impl FnMut(&StepReport),
    ) -> Result<Vec<StepReport>> {
        if !(t_end > time) {
            return Err(SolverError::config("final time must exceed the start time"));
        }
        let mut t = time;
        let mut log = Vec::new();
        while t < t_end {
            apply_boundaries(grid, &self.boundary, self.model, t);
            let mut dt = self.compute_dt(grid)?;
            if t + dt >= t_end - 1e-14 * t_end.abs() {
                dt = t_end - t;
            }
            let mut report = self.step(grid, t, dt)?;
            report.step = log.len() + 1;
            t = if t + dt >= t_end - 1e-14 * t_end.abs() { t_end } else { t + dt };
            report.time = t;
            observe(&report);
            log.push(report);
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ScalarModel;

    fn solver<'a>(model: &'a ScalarModel, limiter: LimiterPolicy) -> Solver<'a, 1> {
        Solver::new(
            model,
            BoundarySpec::periodic(),
            WenoConfig::default(),
            RkScheme::Rk3,
            TimeStepPolicy {
                cfl: 0.6,
                source_aware: true,
                rule: StepRule::WaveSpeed,
            },
            limiter,
        )
        .unwrap()
    }

    #[test]
    fn weights_sum_to_one() {
        for s in [RkScheme::Rk3, RkScheme::Rk4] {
            // rational weights, exact up to the rounding of 1/6 and 1/3
            assert!((s.weights().iter().sum::<f64>() - 1.0).abs() <= f64::EPSILON);
            for k in 0..s.stages() {
                assert_eq!(s.stage_coefficients(k).len(), k);
                let c: f64 = s.stage_coefficients(k).iter().sum();
                assert_eq!(c, s.nodes()[k]);
            }
        }
    }

    #[test]
    fn advection_dt() {
        let m = ScalarModel::advection(1.0);
        let s = solver(&m, LimiterPolicy::bounded(0.0, 1.0));
        let mut g = FieldGrid::<1>::new_1d(100, 0.0, 0.01).unwrap();
        g.fill(|_, _| [0.5]);
        apply_boundaries(&mut g, &s.boundary, &m, 0.0);
        assert!((s.compute_dt(&g).unwrap() - 0.006).abs() < 1e-15);

        let decay = ScalarModel::advection(1.0).with_source(crate::physics::ScalarSource::Decay { rate: 1.0 });
        let s = solver(&decay, LimiterPolicy::positivity());
        let dt = s.compute_dt(&g).unwrap();
        assert!((dt - 0.6 * 0.01 / (1.0 + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn constant_stays_constant() {
        let m = ScalarModel::advection(1.0);
        let s = solver(&m, LimiterPolicy::bounded(0.0, 1.0));
        let mut g = FieldGrid::<1>::new_1d(16, 0.0, 1.0 / 16.0).unwrap();
        g.fill(|_, _| [0.25]);
        s.advance(&mut g, 0.0, 0.1, |_| {}).unwrap();
        for i in 0..16 {
            assert!((g.cell(i, 0)[0] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_speed_is_a_configuration_error() {
        let m = ScalarModel::advection(0.0);
        let s = solver(&m, LimiterPolicy::bounded(0.0, 1.0));
        let mut g = FieldGrid::<1>::new_1d(8, 0.0, 0.125).unwrap();
        g.fill(|_, _| [0.5]);
        apply_boundaries(&mut g, &s.boundary, &m, 0.0);
        assert!(matches!(s.compute_dt(&g), Err(SolverError::Config(_))));
    }
}
