//! Parametrized flux limiters for the final Runge-Kutta stage.
//!
//! Each interface flux is replaced by `theta H + (1 - theta) h`, a blend of
//! the combined high-order flux `H` and the first-order flux `h`. The
//! updated value of a cell is then affine in the `theta`s of its faces:
//!
//! ```text
//! u(theta) = base + sum_f theta_f c_f
//! ```
//!
//! with `base` the first-order update and `c_f` the face's high-order
//! correction. Per-cell admissible boxes `[0, Lambda_f]` are found
//! independently per cell and combined at interfaces by taking the minimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::mesh::{Dim, FieldGrid};
use crate::physics::{Model, State};

/// Guard added to (or subtracted from) decoupling denominators.
pub const EPS_DIV: f64 = 1e-13;

/// Cap on the positivity floors.
pub const FLOOR_CAP: f64 = 1e-13;

/// Relative rounding allowance added to the thermal floor target.
pub const THERMAL_ROUNDOFF: f64 = 1024.0 * f64::EPSILON;

/// Thermal value the limiter aims for: `floor` raised by the rounding
/// allowance of the states between `base` and `base + reach`, but never
/// above the value at `base`.
///
/// Densities near the end of the segment that result from cancellation
/// carry a large relative error, which the kinetic part of the thermal
/// quantity inherits; the allowance grows with that conditioning.
fn thermal_target<const N: usize>(model: &dyn Model<N>, base: &State<N>, reach: &State<N>, floor: f64) -> f64 {
    let far: State<N> = std::array::from_fn(|k| base[k] + reach[k]);
    let cond = model
        .density_components()
        .iter()
        .map(|&k| (base[k].abs() + reach[k].abs()) / far[k].abs())
        .fold(1.0_f64, f64::max);
    let margin = THERMAL_ROUNDOFF * model.thermal_magnitude(base).max(cond * model.thermal_magnitude(&far));
    match model.thermal(base) {
        Some(x) if x.is_finite() => (floor + margin).min(x.max(floor)),
        _ => floor,
    }
}

/// Lower bound enforced on the density-like components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum LowerBound {
    /// `min(first-order minimum, 1e-13)`, recomputed every step.
    Floor,
    /// A fixed global minimum (maximum-principle problems).
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum LimiterMode {
    Off,
    On,
    /// Every `theta` and the source factor set to the given value.
    Forced(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimiterPolicy {
    pub mode: LimiterMode,
    pub lower: LowerBound,
    /// Upper bound of scalar problems.
    pub upper: Option<f64>,
}

impl LimiterPolicy {
    /// Positivity of densities and of the model's thermal quantity.
    pub fn positivity() -> Self {
        LimiterPolicy {
            mode: LimiterMode::On,
            lower: LowerBound::Floor,
            upper: None,
        }
    }

    /// Maximum principle `lo <= u <= hi`.
    pub fn bounded(lo: f64, hi: f64) -> Self {
        LimiterPolicy {
            mode: LimiterMode::On,
            lower: LowerBound::Fixed(lo),
            upper: Some(hi),
        }
    }

    pub fn with_mode(self, mode: LimiterMode) -> Self {
        LimiterPolicy { mode, ..self }
    }

    pub fn is_active(&self) -> bool {
        self.mode == LimiterMode::On
    }
}

/// Split the constraint `slack + sum_f Lambda_f c_f >= 0` (with
/// `slack >= 0`) into independent per-face bounds.
///
/// Faces with `c_f >= 0` can only help and get 1. A single harmful face is
/// cut to `slack / (|c_f| + eps)`; several harmful faces share the common
/// value `slack / (sum |c_f| + eps)` unless all of them fit at 1.
pub fn decouple_linear<const F: usize>(slack: f64, c: &[f64; F]) -> [f64; F] {
    let mut out = [1.0; F];
    let slack = slack.max(0.0);
    let mut count = 0;
    let mut total = 0.0;
    let mut last = 0;
    for (f, &cf) in c.iter().enumerate() {
        if cf < 0.0 {
            count += 1;
            total -= cf;
            last = f;
        }
    }
    match count {
        0 => {}
        1 => out[last] = (slack / (total + EPS_DIV)).min(1.0),
        _ => {
            if total > slack {
                let v = slack / (total + EPS_DIV);
                for (o, &cf) in out.iter_mut().zip(c) {
                    if cf < 0.0 {
                        *o = v;
                    }
                }
            }
        }
    }
    out
}

/// Bounds keeping `u_j(theta) <= u_max` for a 1D cell with high-minus-low
/// flux differences `f_minus`, `f_plus` and low-order fluxes `h_minus`,
/// `h_plus` on its left and right faces.
#[allow(clippy::too_many_arguments)]
pub fn mpp_bounds_max(
    u_j: f64,
    u_max: f64,
    lambda: f64,
    f_minus: f64,
    f_plus: f64,
    h_minus: f64,
    h_plus: f64,
) -> Result<(f64, f64)> {
    let gamma = u_max - u_j + lambda * (h_plus - h_minus);
    if gamma < -EPS_DIV {
        return Err(SolverError::Precondition {
            i: 0,
            j: 0,
            detail: format!("first-order update exceeds the maximum by {:e}", -gamma),
        });
    }
    let [a, b] = decouple_linear(gamma, &[-lambda * f_minus, lambda * f_plus]);
    Ok((a, b))
}

/// Bounds keeping `u_j(theta) >= u_min`; `dt_source` is `dt` times the
/// (modified) source, zero without one.
#[allow(clippy::too_many_arguments)]
pub fn mpp_bounds_min(
    u_j: f64,
    u_min: f64,
    lambda: f64,
    f_minus: f64,
    f_plus: f64,
    h_minus: f64,
    h_plus: f64,
    dt_source: f64,
) -> Result<(f64, f64)> {
    let gamma = u_min - u_j + lambda * (h_plus - h_minus) - dt_source;
    if gamma > EPS_DIV {
        return Err(SolverError::Precondition {
            i: 0,
            j: 0,
            detail: format!("first-order update below the minimum by {gamma:e}"),
        });
    }
    let [a, b] = decouple_linear(-gamma, &[lambda * f_minus, -lambda * f_plus]);
    Ok((a, b))
}

/// Density box of a 1D cell: `high`/`low` hold the density fluxes on the
/// left and right faces.
pub fn density_bounds(rho_n: f64, lambda: f64, high: [f64; 2], low: [f64; 2], eps_rho: f64) -> Result<(f64, f64)> {
    mpp_bounds_min(
        rho_n,
        eps_rho,
        lambda,
        high[0] - low[0],
        high[1] - low[1],
        low[0],
        low[1],
        0.0,
    )
}

/// Source factor of a scalar cell: the largest `r <= 1` with
/// `u1 + r dt (s_rk - s_n) >= eps_s`, where `u1` is the first-order update
/// with source `s_n`.
#[allow(clippy::too_many_arguments)]
pub fn source_factor(
    u_n: f64,
    h_minus: f64,
    h_plus: f64,
    dt: f64,
    lambda: f64,
    s_n: f64,
    s_rk: f64,
    eps_s: f64,
) -> f64 {
    let u1 = u_n - lambda * (h_plus - h_minus) + dt * s_n;
    scalar_source_factor(u1, dt * (s_rk - s_n), eps_s)
}

fn scalar_source_factor(u1: f64, dt_ds: f64, eps: f64) -> f64 {
    if u1 + dt_ds >= eps {
        return 1.0;
    }
    if dt_ds == 0.0 {
        return 0.0;
    }
    ((eps - u1) / dt_ds).clamp(0.0, 1.0)
}

/// `theta` at each of the `n + 1` interfaces of a 1D line from per-cell
/// `[Lambda_minus, Lambda_plus]`. Edge faces pair across the line when
/// periodic and otherwise take the interior cell alone.
pub fn combine_interface_theta(bounds: &[[f64; 2]], periodic: bool) -> Vec<f64> {
    let n = bounds.len();
    let mut theta = vec![1.0; n + 1];
    for (i, b) in bounds.iter().enumerate() {
        theta[i] = f64::min(theta[i], b[0]);
        theta[i + 1] = f64::min(theta[i + 1], b[1]);
    }
    if periodic && n > 0 {
        let t = theta[0].min(theta[n]);
        theta[0] = t;
        theta[n] = t;
    }
    theta
}

/// Single-cell limiting problem `u(theta) = base + sum_f theta_f dir_f`.
///
/// 1D faces are ordered `[minus, plus]`; 2D faces `[left, right, down, up]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellProblem<const N: usize, const F: usize> {
    pub base: State<N>,
    pub dir: [State<N>; F],
}

impl<const N: usize, const F: usize> CellProblem<N, F> {
    /// Build from the level-`n` state, per-face low (`low`) and combined
    /// high-order (`high`) fluxes, the face signs `+lambda` for inflow faces
    /// and `-lambda` for outflow faces, and `dt` times the modified source.
    pub fn new(
        u_n: &State<N>,
        low: &[State<N>; F],
        high: &[State<N>; F],
        signed_lambda: &[f64; F],
        dt_source: &State<N>,
    ) -> Self {
        let mut base = *u_n;
        let mut dir = [[0.0; N]; F];
        for f in 0..F {
            for k in 0..N {
                base[k] += signed_lambda[f] * low[f][k];
                dir[f][k] = signed_lambda[f] * (high[f][k] - low[f][k]);
            }
        }
        for k in 0..N {
            base[k] += dt_source[k];
        }
        CellProblem { base, dir }
    }

    pub fn at(&self, theta: &[f64; F]) -> State<N> {
        let mut u = self.base;
        for f in 0..F {
            for k in 0..N {
                u[k] += theta[f] * self.dir[f][k];
            }
        }
        u
    }

    /// Thermal quantity (pressure or internal energy) of `u(theta)`.
    pub fn thermal_at(&self, model: &dyn Model<N>, theta: &[f64; F]) -> Result<f64> {
        let u = self.at(theta);
        if model.density_components().iter().any(|&k| !(u[k] > 0.0)) {
            return Err(SolverError::Positivity(format!(
                "density not positive at theta = {theta:?}"
            )));
        }
        model
            .thermal(&u)
            .ok_or_else(|| SolverError::config("model has no thermal quantity"))
    }

    /// Intersection of the per-component density boxes.
    pub fn density_box(&self, model: &dyn Model<N>, floor: f64) -> Result<[f64; F]> {
        let mut out = [1.0_f64; F];
        for &k in model.density_components() {
            let slack = self.base[k] - floor;
            if slack < -EPS_DIV {
                return Err(SolverError::Precondition {
                    i: 0,
                    j: 0,
                    detail: format!("component {k} first-order update {:e} below floor {floor:e}", self.base[k]),
                });
            }
            let c: [f64; F] = std::array::from_fn(|f| self.dir[f][k]);
            let b = decouple_linear(slack, &c);
            for f in 0..F {
                out[f] = out[f].min(b[f]);
            }
        }
        Ok(out)
    }

    /// Box keeping component 0 at or below `upper`.
    pub fn upper_box(&self, upper: f64) -> Result<[f64; F]> {
        let slack = upper - self.base[0];
        if slack < -EPS_DIV {
            return Err(SolverError::Precondition {
                i: 0,
                j: 0,
                detail: format!("first-order update {:e} above maximum {upper:e}", self.base[0]),
            });
        }
        let c: [f64; F] = std::array::from_fn(|f| -self.dir[f][0]);
        Ok(decouple_linear(slack, &c))
    }

    /// The scaled vertices `B^k = r_k A^k` of the box `lambda_rho`, indexed
    /// by the bit mask `k` of the faces that are switched on (`B^0 = 0`).
    /// Each vertex aims slightly above `floor` by its own rounding allowance.
    pub fn scaled_vertices(&self, model: &dyn Model<N>, lambda_rho: &[f64; F], floor: f64) -> Result<Vec<[f64; F]>> {
        let count = 1usize << F;
        let mut out = vec![[0.0; F]; count];
        for (mask, vertex) in out.iter_mut().enumerate().skip(1) {
            let a: [f64; F] = std::array::from_fn(|f| if mask >> f & 1 == 1 { lambda_rho[f] } else { 0.0 });
            let mut dir = [0.0; N];
            for f in 0..F {
                for k in 0..N {
                    dir[k] += a[f] * self.dir[f][k];
                }
            }
            let r = scale_to_floor(model, &self.base, &dir, thermal_target(model, &self.base, &dir, floor))?;
            *vertex = a.map(|v| r * v);
        }
        Ok(out)
    }

    /// Largest box inside both the density box and the thermal-floor set.
    pub fn positivity_box(&self, model: &dyn Model<N>, eps_rho: f64, eps_p: f64) -> Result<[f64; F]> {
        let lambda_rho = self.density_box(model, eps_rho)?;
        if model.thermal(&self.base).is_none() {
            return Ok(lambda_rho);
        }
        let vertices = self.scaled_vertices(model, &lambda_rho, eps_p)?;
        Ok(decouple_box(&vertices))
    }
}

/// Box spanned by scaled vertices: the bound on face `f` is the smallest
/// `f` coordinate among all vertices that switch `f` on.
///
/// Every point of the resulting box is a convex combination of the origin
/// and the scaled vertices, so it inherits their admissibility under a
/// concave constraint.
pub fn decouple_box<const F: usize>(vertices: &[[f64; F]]) -> [f64; F] {
    let mut out = [1.0_f64; F];
    for (mask, v) in vertices.iter().enumerate().skip(1) {
        for f in 0..F {
            if mask >> f & 1 == 1 {
                out[f] = out[f].min(v[f]);
            }
        }
    }
    out
}

/// 1D rectangle from the scaled vertices `B1 = r1 (0, Lp)`,
/// `B2 = r2 (Lm, 0)` and `B3 = r3 (Lm, Lp)`.
pub fn decouple_rectangle_1d(b1: [f64; 2], b2: [f64; 2], b3: [f64; 2]) -> (f64, f64) {
    let b = decouple_box(&[[0.0; 2], b2, b1, b3]);
    (b[0], b[1])
}

/// 2D tesseract from the fifteen scaled vertices, indexed by face mask with
/// bit 0 = left, 1 = right, 2 = down, 3 = up.
pub fn decouple_tesseract_2d(vertices: &[[f64; 4]; 16]) -> [f64; 4] {
    decouple_box(vertices)
}

/// Largest `r` in `[0, 1]` with `X(base + r dir) >= floor`, `X` the
/// model's thermal quantity.
///
/// `D(r) (X(r) - floor)`, with `D` the total density, is quadratic in `r`
/// for every supported closure, so the root is found from three samples and
/// checked; bisection takes over if the check fails.
pub fn scale_to_floor<const N: usize>(
    model: &dyn Model<N>,
    base: &State<N>,
    dir: &State<N>,
    floor: f64,
) -> Result<f64> {
    let point = |r: f64| -> State<N> { std::array::from_fn(|k| base[k] + r * dir[k]) };
    let g = |r: f64| -> f64 {
        match model.thermal(&point(r)) {
            Some(x) if x.is_finite() => x - floor,
            _ => f64::NEG_INFINITY,
        }
    };
    let g0 = g(0.0);
    if g0 < -EPS_DIV || g0.is_nan() {
        return Err(SolverError::Precondition {
            i: 0,
            j: 0,
            detail: format!("thermal value {:e} below floor {floor:e} at theta = 0", g0 + floor),
        });
    }
    if g0 < 0.0 {
        return Ok(0.0);
    }
    if g(1.0) >= 0.0 {
        return Ok(1.0);
    }

    let q = |r: f64| {
        let u = point(r);
        let d: f64 = model.density_components().iter().map(|&k| u[k]).sum();
        d * g(r)
    };
    let (c, qh, q1) = (q(0.0), q(0.5), q(1.0));
    let a = 2.0 * q1 + 2.0 * c - 4.0 * qh;
    let b = q1 - c - a;
    if let Some(r) = quadratic_root(a, b, c) {
        let probe = (r + 1e-9).min(1.0);
        if g(r) >= 0.0 && g(probe) < 0.0 {
            return Ok(r);
        }
        // the candidate may sit a rounding error past the root
        let back = r * (1.0 - 1e-12);
        if g(back) >= 0.0 && g((back + 1e-9).min(1.0)) < 0.0 {
            return Ok(back);
        }
    }
    Ok(bisect(g, 0.0, 1.0))
}

/// Root in `[0, 1]` of `a r^2 + b r + c` with `c >= 0` and `a + b + c < 0`.
fn quadratic_root(a: f64, b: f64, c: f64) -> Option<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return None;
    }
    let scale = a.abs().max(b.abs()).max(c.abs());
    let r = if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return None;
        }
        -c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let s = -0.5 * (b + b.signum() * disc.sqrt());
        let r1 = s / a;
        let r2 = if s != 0.0 { c / s } else { r1 };
        let inside = |r: f64| (-1e-12..=1.0 + 1e-12).contains(&r);
        match (inside(r1), inside(r2)) {
            (true, false) => r1,
            (false, true) => r2,
            (true, true) => r1.min(r2),
            (false, false) => return None,
        }
    };
    Some(r.clamp(0.0, 1.0))
}

/// Bisection keeping `g(lo) >= 0`, to an interval of width `1e-12` or 200
/// halvings.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Combined fluxes and sources of one Runge-Kutta step.
///
/// `x` faces are indexed `j (nx + 1) + i` (left face of cell `i`), `y`
/// faces `j nx + i` (lower face of cell `(i, j)`); cell arrays `j nx + i`.
#[derive(Clone, Debug, Default)]
pub struct StageFluxAccumulator<const N: usize> {
    pub high_x: Vec<State<N>>,
    pub high_y: Vec<State<N>>,
    pub low_x: Vec<State<N>>,
    pub low_y: Vec<State<N>>,
    pub source_rk: Vec<State<N>>,
    pub source_n: Vec<State<N>>,
}

/// Per-step floors.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Floors {
    /// Lower bound applied to the density-like components.
    pub density: f64,
    /// Thermal floor, `None` for scalar problems.
    pub thermal: Option<f64>,
}

/// Result of limiting one step.
#[derive(Clone, Debug)]
pub struct LimitedStep<const N: usize> {
    pub theta_x: Vec<f64>,
    pub theta_y: Vec<f64>,
    /// `dt` times the modified source, per cell.
    pub dt_source: Vec<State<N>>,
    pub floors: Floors,
    pub source_factor_min: f64,
}

/// Grid geometry shared by the limiter and the stepper.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FaceLayout {
    pub nx: usize,
    pub ny: usize,
    pub two_d: bool,
}

impl FaceLayout {
    pub fn of<const N: usize>(grid: &FieldGrid<N>) -> Self {
        FaceLayout {
            nx: grid.nx,
            ny: grid.ny,
            two_d: grid.dim == Dim::Two,
        }
    }

    #[inline]
    pub fn xf(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn yf(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

fn cell_problem<const N: usize, const F: usize>(
    lay: &FaceLayout,
    acc: &StageFluxAccumulator<N>,
    u_n: &State<N>,
    i: usize,
    j: usize,
    lx: f64,
    ly: f64,
    dt_source: &State<N>,
) -> CellProblem<N, F> {
    let mut low = [[0.0; N]; F];
    let mut high = [[0.0; N]; F];
    let mut sl = [0.0; F];
    let faces = [
        (lay.xf(i, j), lx, true),
        (lay.xf(i + 1, j), -lx, true),
        (lay.yf(i, j), ly, false),
        (lay.yf(i, j + 1), -ly, false),
    ];
    for f in 0..F {
        let (idx, s, is_x) = faces[f];
        if is_x {
            low[f] = acc.low_x[idx];
            high[f] = acc.high_x[idx];
        } else {
            low[f] = acc.low_y[idx];
            high[f] = acc.high_y[idx];
        }
        sl[f] = s;
    }
    CellProblem::new(u_n, &low, &high, &sl, dt_source)
}

/// Compute floors, source factors and interface `theta`s for the final
/// stage of a step from level-`n` states in `grid`.
pub fn limit_final_stage<const N: usize>(
    grid: &FieldGrid<N>,
    model: &dyn Model<N>,
    acc: &StageFluxAccumulator<N>,
    dt: f64,
    policy: &LimiterPolicy,
    periodic: [bool; 2],
) -> Result<LimitedStep<N>> {
    let lay = FaceLayout::of(grid);
    let (lx, ly) = (dt / grid.dx, if lay.two_d { dt / grid.dy } else { 0.0 });
    let cells: Vec<(usize, usize)> = grid.active_cells().collect();
    let n_x = (lay.nx + 1) * lay.ny;
    let n_y = if lay.two_d { lay.nx * (lay.ny + 1) } else { 0 };

    let combined_source = |c: usize, r: f64| -> State<N> {
        std::array::from_fn(|k| dt * (r * acc.source_rk[c][k] + (1.0 - r) * acc.source_n[c][k]))
    };

    match policy.mode {
        LimiterMode::Off | LimiterMode::Forced(_) => {
            let t = match policy.mode {
                LimiterMode::Forced(t) => t,
                _ => 1.0,
            };
            let mut dt_source = vec![[0.0; N]; lay.nx * lay.ny];
            for &(i, j) in &cells {
                let c = lay.cell(i, j);
                dt_source[c] = combined_source(c, t);
            }
            return Ok(LimitedStep {
                theta_x: vec![t; n_x],
                theta_y: vec![t; n_y],
                dt_source,
                floors: Floors::default(),
                source_factor_min: t,
            });
        }
        LimiterMode::On => {}
    }

    // first-order update with the level-n source
    let first: Vec<(State<N>, State<N>)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let c = lay.cell(i, j);
            let zero = combined_source(c, 0.0);
            let p = if lay.two_d {
                cell_problem::<N, 4>(&lay, acc, grid.cell(i, j), i, j, lx, ly, &zero).base
            } else {
                cell_problem::<N, 2>(&lay, acc, grid.cell(i, j), i, j, lx, ly, &zero).base
            };
            let dds: State<N> = std::array::from_fn(|k| dt * (acc.source_rk[c][k] - acc.source_n[c][k]));
            (p, dds)
        })
        .collect();

    let has_thermal = model.thermal(&first.first().map_or([1.0; N], |f| f.0)).is_some();
    let density = match policy.lower {
        LowerBound::Fixed(v) => v,
        LowerBound::Floor => {
            let m = first
                .iter()
                .flat_map(|(u, _)| model.density_components().iter().map(move |&k| u[k]))
                .fold(f64::INFINITY, f64::min);
            if has_thermal && !(m > 0.0) {
                return Err(SolverError::Positivity(format!(
                    "first-order density update {m:e} is not positive; reduce the CFL number"
                )));
            }
            m.min(FLOOR_CAP)
        }
    };
    let thermal = if has_thermal {
        let m = first
            .iter()
            .map(|(u, _)| model.thermal(u).unwrap_or(f64::NAN))
            .fold(f64::INFINITY, f64::min);
        if !(m > 0.0) {
            return Err(SolverError::Positivity(format!(
                "first-order thermal update {m:e} is not positive; reduce the CFL number"
            )));
        }
        Some(m.min(FLOOR_CAP))
    } else {
        None
    };
    let floors = Floors { density, thermal };

    // source factor per cell
    let factors: Vec<f64> = first
        .par_iter()
        .map(|(u1, dds)| {
            if !model.has_source() {
                return Ok(1.0);
            }
            system_source_factor(model, u1, dds, &floors)
        })
        .collect::<Result<_>>()?;

    let mut dt_source = vec![[0.0; N]; lay.nx * lay.ny];
    for (&(i, j), &r) in cells.iter().zip(&factors) {
        let c = lay.cell(i, j);
        dt_source[c] = combined_source(c, r);
    }

    let tag = |e: SolverError, i: usize, j: usize| match e {
        SolverError::Precondition { detail, .. } => SolverError::Precondition { i, j, detail },
        other => other,
    };
    let cell_box = |&(i, j): &(usize, usize)| -> Result<Vec<f64>> {
        let c = lay.cell(i, j);
        let u_n = grid.cell(i, j);
        if lay.two_d {
            let p = cell_problem::<N, 4>(&lay, acc, u_n, i, j, lx, ly, &dt_source[c]);
            cell_box_for(&p, model, policy, &floors).map(|b| b.to_vec()).map_err(|e| tag(e, i, j))
        } else {
            let p = cell_problem::<N, 2>(&lay, acc, u_n, i, j, lx, ly, &dt_source[c]);
            cell_box_for(&p, model, policy, &floors).map(|b| b.to_vec()).map_err(|e| tag(e, i, j))
        }
    };
    let boxes: Vec<Vec<f64>> = cells.par_iter().map(cell_box).collect::<Result<_>>()?;

    let mut theta_x = vec![1.0_f64; n_x];
    let mut theta_y = vec![1.0_f64; n_y];
    for (&(i, j), b) in cells.iter().zip(&boxes) {
        let l = lay.xf(i, j);
        let r = lay.xf(i + 1, j);
        theta_x[l] = theta_x[l].min(b[0]);
        theta_x[r] = theta_x[r].min(b[1]);
        if lay.two_d {
            let d = lay.yf(i, j);
            let u = lay.yf(i, j + 1);
            theta_y[d] = theta_y[d].min(b[2]);
            theta_y[u] = theta_y[u].min(b[3]);
        }
    }
    if periodic[0] {
        for j in 0..lay.ny {
            let (a, b) = (lay.xf(0, j), lay.xf(lay.nx, j));
            let t = theta_x[a].min(theta_x[b]);
            theta_x[a] = t;
            theta_x[b] = t;
        }
    }
    if periodic[1] && lay.two_d {
        for i in 0..lay.nx {
            let (a, b) = (lay.yf(i, 0), lay.yf(i, lay.ny));
            let t = theta_y[a].min(theta_y[b]);
            theta_y[a] = t;
            theta_y[b] = t;
        }
    }

    Ok(LimitedStep {
        theta_x,
        theta_y,
        dt_source,
        floors,
        source_factor_min: factors.iter().copied().fold(1.0, f64::min),
    })
}

fn cell_box_for<const N: usize, const F: usize>(
    p: &CellProblem<N, F>,
    model: &dyn Model<N>,
    policy: &LimiterPolicy,
    floors: &Floors,
) -> Result<[f64; F]> {
    let mut b = match floors.thermal {
        Some(eps_p) => p.positivity_box(model, floors.density, eps_p)?,
        None => p.density_box(model, floors.density)?,
    };
    if let Some(upper) = policy.upper {
        let ub = p.upper_box(upper)?;
        for f in 0..F {
            b[f] = b[f].min(ub[f]);
        }
    }
    Ok(b)
}

/// One `r` per cell such that `u1 + r dds` satisfies every density floor
/// and the thermal floor.
fn system_source_factor<const N: usize>(
    model: &dyn Model<N>,
    u1: &State<N>,
    dds: &State<N>,
    floors: &Floors,
) -> Result<f64> {
    let mut r = 1.0_f64;
    for &k in model.density_components() {
        r = r.min(scalar_source_factor(u1[k], dds[k], floors.density));
    }
    if let Some(eps_p) = floors.thermal {
        if r > 0.0 {
            let dir: State<N> = std::array::from_fn(|k| r * dds[k]);
            r *= scale_to_floor(model, u1, &dir, thermal_target(model, u1, &dir, eps_p))?;
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{GasModel, IdealGas};

    #[test]
    fn max_case_a_is_unlimited() {
        assert_eq!(mpp_bounds_max(0.5, 1.0, 0.5, -0.2, 0.3, 0.1, 0.1).unwrap(), (1.0, 1.0));
        assert_eq!(mpp_bounds_max(0.5, 1.0, 0.5, 0.0, 0.0, 0.1, 0.1).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn min_cases() {
        assert_eq!(mpp_bounds_min(0.5, 0.0, 0.5, 0.5, -0.1, 0.1, 0.1, 0.0).unwrap(), (1.0, 1.0));
        // F- < 0, F+ > 0 but (1, 1) already fine
        assert_eq!(mpp_bounds_min(0.5, 0.0, 0.5, -0.1, 0.1, 0.1, 0.1, 0.0).unwrap(), (1.0, 1.0));
        // both harmful and too large: equal split
        let (a, b) = mpp_bounds_min(0.1, 0.0, 1.0, -0.2, 0.2, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(a, b);
        assert!((a - 0.25).abs() < 1e-12);
    }

    #[test]
    fn max_case_b_single_face() {
        // gamma = 1 - 0.5 + 0 = 0.5, harmful right face: 0.5 / 1
        let (a, b) = mpp_bounds_max(0.5, 1.0, 1.0, 0.0, -1.0, 0.0, 0.0).unwrap();
        assert_eq!(a, 1.0);
        assert!((b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn precondition_violations() {
        assert!(mpp_bounds_max(1.5, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(mpp_bounds_min(-0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn theta_is_min_of_neighbours() {
        let t = combine_interface_theta(&[[1.0, 0.7], [0.9, 1.0]], false);
        assert_eq!(t, vec![1.0, 0.7, 1.0]);
        let t = combine_interface_theta(&[[0.4, 1.0], [1.0, 0.6]], true);
        assert_eq!(t, vec![0.4, 1.0, 0.4]);
        assert!(combine_interface_theta(&[[1.0; 2]; 5], true).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn source_factor_cases() {
        assert_eq!(source_factor(1.0, 0.0, 0.0, 0.1, 0.5, -1.0, -1.0, 1e-13), 1.0);
        // u1 = 0.1, dt ds = -0.2
        let r = scalar_source_factor(0.1, -0.2, 1e-13);
        assert!((r - (1e-13 - 0.1) / -0.2).abs() < 1e-15);
        assert!(0.1 + r * -0.2 >= 1e-13 - 1e-17);
        assert_eq!(scalar_source_factor(-1.0, 0.0, 1e-13), 0.0);
    }

    #[test]
    fn scale_keeps_admissible_vertex() {
        let gas = IdealGas::new(1.4);
        let base = GasModel::<3>::from_primitive(&gas, &[1.0], [0.0, 0.0], 1.0);
        let r = scale_to_floor::<3>(&gas, &base, &[0.1, 0.0, 0.1], 1e-13).unwrap();
        assert_eq!(r, 1.0);
        let r = scale_to_floor::<3>(&gas, &base, &[0.0; 3], 1e-13).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn scale_finds_pressure_root() {
        let gas = IdealGas::new(1.4);
        let base = GasModel::<3>::from_primitive(&gas, &[1.0], [0.0, 0.0], 1.0);
        // energy drain: p(r) = 1 - 0.4 * 5 r, root at 0.5
        let r = scale_to_floor::<3>(&gas, &base, &[0.0, 0.0, -5.0], 0.0).unwrap();
        assert!((r - 0.5).abs() < 1e-12, "{r}");
        let p = Model::<3>::thermal(&gas, &[1.0, 0.0, base[2] - 5.0 * r]).unwrap();
        assert!(p >= 0.0);
    }

    #[test]
    fn rectangle_halves_with_scaled_corner() {
        let (lm, lp) = (0.8, 0.6);
        let out = decouple_rectangle_1d([0.0, lp], [lm, 0.0], [0.5 * lm, 0.5 * lp]);
        assert_eq!(out, (0.5 * lm, 0.5 * lp));
    }

    #[test]
    fn uniform_state_is_never_limited() {
        let gas = IdealGas::new(1.4);
        let u = GasModel::<3>::from_primitive(&gas, &[1.0], [0.5, 0.0], 1.0);
        let f = Model::<3>::flux(&gas, &u, crate::physics::Axis::X);
        let p = CellProblem::<3, 2>::new(&u, &[f, f], &[f, f], &[0.3, -0.3], &[0.0; 3]);
        assert_eq!(p.positivity_box(&gas, 1e-13, 1e-13).unwrap(), [1.0, 1.0]);
        let pr = p.thermal_at(&gas, &[0.3, 0.9]).unwrap();
        assert!((pr - 1.0).abs() < 1e-14);
    }
}
