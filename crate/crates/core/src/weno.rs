//! Fifth-order WENO flux reconstruction with global Lax-Friedrichs
//! splitting, and the first-order Lax-Friedrichs flux.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::mesh::GHOST;
use crate::physics::{Axis, Model, State};

/// How the splitting speed `alpha` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlphaMode {
    /// Per-field global maximum of `|lambda|`, recomputed every stage.
    GlobalMax,
    /// A fixed value used for every field and stage.
    Fixed { value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WenoConfig {
    /// Regularization in the nonlinear weights.
    pub eps: f64,
    pub alpha: AlphaMode,
    /// Reconstruct in characteristic variables (systems only).
    pub characteristic: bool,
    /// Use the optimal linear weights instead of the nonlinear ones.
    pub linear_weights: bool,
    /// Interfaces whose eigenvector matrices have a larger condition
    /// estimate `|R|_inf |L|_inf` are reconstructed component-wise.
    pub max_condition: f64,
    /// Split each characteristic field with its own speed instead of the
    /// largest one.
    pub per_field_alpha: bool,
}

impl Default for WenoConfig {
    fn default() -> Self {
        WenoConfig {
            eps: 1e-6,
            alpha: AlphaMode::GlobalMax,
            characteristic: true,
            linear_weights: false,
            max_condition: 1e8,
            per_field_alpha: true,
        }
    }
}

impl WenoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(SolverError::config("eps_weno must be positive"));
        }
        if !(self.max_condition >= 1.0) {
            return Err(SolverError::config("max_condition must be at least 1"));
        }
        if let AlphaMode::Fixed { value } = self.alpha {
            if !(value > 0.0) {
                return Err(SolverError::config("fixed alpha must be positive"));
            }
        }
        Ok(())
    }
}

/// Counts interfaces where the characteristic decomposition was not
/// available and component-wise reconstruction was used instead.
#[derive(Debug, Default)]
pub struct FallbackCounter(AtomicUsize);

impl FallbackCounter {
    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> usize {
        self.0.load(Ordering::Relaxed)
    }

    pub fn take(&self) -> usize {
        self.0.swap(0, Ordering::Relaxed)
    }
}

/// Split fluxes `f+ = (f + alpha u) / 2`, `f- = (f - alpha u) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitFluxPair {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

pub fn lxf_split(u: &[f64], f: &[f64], alpha: f64) -> Result<SplitFluxPair> {
    if !(alpha > 0.0) {
        return Err(SolverError::config("splitting speed alpha must be positive"));
    }
    if u.len() != f.len() {
        return Err(SolverError::config("state and flux samples differ in length"));
    }
    let plus = u.iter().zip(f).map(|(u, f)| 0.5 * (f + alpha * u)).collect();
    let minus = u.iter().zip(f).map(|(u, f)| 0.5 * (f - alpha * u)).collect();
    Ok(SplitFluxPair { plus, minus })
}

/// Which side of the interface the stencil leans toward.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `v = (f_{i-2}, .., f_{i+2})`, value at `i + 1/2` for right-moving
    /// waves.
    Left,
    /// `v = (f_{i-1}, .., f_{i+3})`, value at `i + 1/2` for left-moving
    /// waves.
    Right,
}

const LINEAR: [f64; 3] = [0.1, 0.6, 0.3];

/// Reconstructed value together with the three stencil weights.
#[inline]
pub fn weno5_weights(v: [f64; 5], side: Side, eps: f64, linear: bool) -> (f64, [f64; 3]) {
    let v = match side {
        Side::Left => v,
        Side::Right => [v[4], v[3], v[2], v[1], v[0]],
    };
    let q = [
        (2.0 * v[0] - 7.0 * v[1] + 11.0 * v[2]) / 6.0,
        (-v[1] + 5.0 * v[2] + 2.0 * v[3]) / 6.0,
        (2.0 * v[2] + 5.0 * v[3] - v[4]) / 6.0,
    ];
    if linear {
        let value = LINEAR[0] * q[0] + LINEAR[1] * q[1] + LINEAR[2] * q[2];
        return (value, LINEAR);
    }
    let sq = |x: f64| x * x;
    let beta = [
        13.0 / 12.0 * sq(v[0] - 2.0 * v[1] + v[2]) + 0.25 * sq(v[0] - 4.0 * v[1] + 3.0 * v[2]),
        13.0 / 12.0 * sq(v[1] - 2.0 * v[2] + v[3]) + 0.25 * sq(v[1] - v[3]),
        13.0 / 12.0 * sq(v[2] - 2.0 * v[3] + v[4]) + 0.25 * sq(3.0 * v[2] - 4.0 * v[3] + v[4]),
    ];
    let a = [
        LINEAR[0] / sq(eps + beta[0]),
        LINEAR[1] / sq(eps + beta[1]),
        LINEAR[2] / sq(eps + beta[2]),
    ];
    let total = a[0] + a[1] + a[2];
    let w = [a[0] / total, a[1] / total, a[2] / total];
    (w[0] * q[0] + w[1] * q[1] + w[2] * q[2], w)
}

#[inline]
pub fn weno5_face(v: [f64; 5], side: Side, eps: f64) -> f64 {
    weno5_weights(v, side, eps, false).0
}

/// First-order Lax-Friedrichs flux.
#[inline]
pub fn monotone_flux<const N: usize>(
    model: &dyn Model<N>,
    ul: &State<N>,
    ur: &State<N>,
    axis: Axis,
    alpha: f64,
) -> State<N> {
    let fl = model.flux(ul, axis);
    let fr = model.flux(ur, axis);
    let mut h = [0.0; N];
    for k in 0..N {
        h[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * alpha * (ur[k] - ul[k]);
    }
    h
}

/// Per-field splitting speeds over a set of states: the maximum `|lambda_k|`
/// for each characteristic field `k`.
pub fn field_speeds<'a, const N: usize>(
    model: &dyn Model<N>,
    states: impl Iterator<Item = &'a State<N>>,
    axis: Axis,
) -> State<N> {
    let mut alpha = [0.0_f64; N];
    for u in states {
        let s = model.wave_speeds(u, axis);
        for k in 0..N {
            alpha[k] = alpha[k].max(s[k].abs());
        }
    }
    alpha
}

/// WENO flux at the interface between window points 2 and 3 of a six-point
/// window `(i-2, .., i+3)`.
///
/// `alpha` holds per-field speeds. With characteristic reconstruction the
/// fields are projected with the eigenvectors at the arithmetic average of
/// the two interface states; if those are unavailable the interface falls
/// back to component-wise reconstruction and `fallbacks` is bumped. The
/// same happens when they are too ill-conditioned (cold gas, where the
/// acoustic and entropy eigenvectors nearly coincide).
pub fn characteristic_interface_flux<const N: usize>(
    states: &[State<N>; 6],
    fluxes: &[State<N>; 6],
    model: &dyn Model<N>,
    axis: Axis,
    alpha: &State<N>,
    cfg: &WenoConfig,
    fallbacks: &FallbackCounter,
) -> State<N> {
    if cfg.characteristic && N > 1 {
        let mut avg = [0.0; N];
        for k in 0..N {
            avg[k] = 0.5 * (states[2][k] + states[3][k]);
        }
        if let Some(eig) = model
            .eigensystem(&avg, axis)
            .filter(|e| e.condition() <= cfg.max_condition)
        {
            let mut wu = [[0.0; N]; 6];
            let mut wf = [[0.0; N]; 6];
            for m in 0..6 {
                wu[m] = eig.to_characteristic(&states[m]);
                wf[m] = eig.to_characteristic(&fluxes[m]);
            }
            let common = alpha.iter().fold(0.0_f64, |m, &v| m.max(v));
            let mut g = [0.0; N];
            for k in 0..N {
                let a = if cfg.per_field_alpha { alpha[k] } else { common };
                g[k] = split_reconstruct(|m| wu[m][k], |m| wf[m][k], a, cfg);
            }
            return eig.from_characteristic(&g);
        }
        fallbacks.bump();
    }
    let a = alpha.iter().fold(0.0_f64, |m, &v| m.max(v));
    let mut h = [0.0; N];
    for k in 0..N {
        h[k] = split_reconstruct(|m| states[m][k], |m| fluxes[m][k], a, cfg);
    }
    h
}

#[inline]
fn split_reconstruct(u: impl Fn(usize) -> f64, f: impl Fn(usize) -> f64, alpha: f64, cfg: &WenoConfig) -> f64 {
    let plus = |m: usize| 0.5 * (f(m) + alpha * u(m));
    let minus = |m: usize| 0.5 * (f(m) - alpha * u(m));
    let vp = [plus(0), plus(1), plus(2), plus(3), plus(4)];
    let vm = [minus(1), minus(2), minus(3), minus(4), minus(5)];
    weno5_weights(vp, Side::Left, cfg.eps, cfg.linear_weights).0
        + weno5_weights(vm, Side::Right, cfg.eps, cfg.linear_weights).0
}

/// High-order fluxes at the `len + 1` interfaces of a ghosted line of
/// `len + 2 GHOST` states.
pub fn line_fluxes<const N: usize>(
    model: &dyn Model<N>,
    states: &[State<N>],
    axis: Axis,
    alpha: &State<N>,
    cfg: &WenoConfig,
    fallbacks: &FallbackCounter,
) -> Vec<State<N>> {
    let len = states.len() - 2 * GHOST;
    let fluxes: Vec<State<N>> = states.iter().map(|u| model.flux(u, axis)).collect();
    (0..=len)
        .map(|p| {
            // interface between extended points e and e + 1
            let e = p + GHOST - 1;
            let w = e - 2;
            let s: &[State<N>; 6] = states[w..w + 6].try_into().unwrap();
            let f: &[State<N>; 6] = fluxes[w..w + 6].try_into().unwrap();
            characteristic_interface_flux(s, f, model, axis, alpha, cfg, fallbacks)
        })
        .collect()
}

/// Lax-Friedrichs fluxes at the `len + 1` interfaces of a ghosted line.
pub fn line_monotone_fluxes<const N: usize>(
    model: &dyn Model<N>,
    states: &[State<N>],
    axis: Axis,
    alpha: f64,
) -> Vec<State<N>> {
    let len = states.len() - 2 * GHOST;
    (0..=len)
        .map(|p| {
            let e = p + GHOST - 1;
            monotone_flux(model, &states[e], &states[e + 1], axis, alpha)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{GasModel, IdealGas, ScalarModel};

    #[test]
    fn burgers_split_values() {
        let s = lxf_split(&[1.0], &[0.5], 1.3).unwrap();
        assert!((s.plus[0] - 0.9).abs() < 1e-15);
        assert!((s.minus[0] + 0.4).abs() < 1e-15);
        let z = lxf_split(&[0.0], &[0.0], 2.0).unwrap();
        assert_eq!((z.plus[0], z.minus[0]), (0.0, 0.0));
        assert!(lxf_split(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn constant_is_reproduced() {
        for side in [Side::Left, Side::Right] {
            let (v, w) = weno5_weights([2.5; 5], side, 1e-6, false);
            assert_eq!(v, 2.5);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_weights_exact_for_quartic() {
        // point values of p(x) = x^4 - 2x^3 + x on a unit grid
        let p = |x: f64| x.powi(4) - 2.0 * x.powi(3) + x;
        let v = [p(-2.0), p(-1.0), p(0.0), p(1.0), p(2.0)];
        // the reconstruction h with avg of h over [x-1/2, x+1/2] = p(x)
        // satisfies h(x) = p(x) - p''(x)/24 + 7 p''''(x)/5760
        let h = |x: f64| p(x) - (12.0 * x * x - 12.0 * x) / 24.0 + 7.0 * 24.0 / 5760.0;
        let (val, _) = weno5_weights(v, Side::Left, 1e-6, true);
        assert!((val - h(0.5)).abs() < 1e-13, "{val} vs {}", h(0.5));
        let r = [p(-1.0), p(0.0), p(1.0), p(2.0), p(3.0)];
        let (val_r, _) = weno5_weights(r, Side::Right, 1e-6, true);
        assert!((val_r - h(0.5)).abs() < 1e-13);
    }

    #[test]
    fn nonlinear_weights_are_convex() {
        let mut x = 0.37_f64;
        for _ in 0..2000 {
            let mut v = [0.0; 5];
            for s in v.iter_mut() {
                x = (x * 97.13 + 0.31).fract();
                *s = 10.0 * x - 5.0;
            }
            let (_, w) = weno5_weights(v, Side::Left, 1e-6, false);
            assert!(w.iter().all(|&wk| (0.0..=1.0).contains(&wk)));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn step_does_not_overshoot() {
        for side in [Side::Left, Side::Right] {
            let v = weno5_face([0.0, 0.0, 0.0, 1.0, 1.0], side, 1e-6);
            assert!(v >= -1e-12 && v <= 1.0 + 1e-12, "{v}");
        }
    }

    #[test]
    fn monotone_flux_cases() {
        let adv = ScalarModel::advection(1.0);
        assert!((monotone_flux(&adv, &[0.3], &[0.9], Axis::X, 1.0)[0] - 0.3).abs() < 1e-15);
        let gas = IdealGas::new(1.4);
        let u = gas.from_primitive(&[1.2], [0.3, 0.0], 0.8);
        let f = Model::<3>::flux(&gas, &u, Axis::X);
        assert_eq!(monotone_flux::<3>(&gas, &u, &u, Axis::X, 2.0), f);
    }

    #[test]
    fn uniform_flow_gives_physical_flux() {
        let gas = IdealGas::new(1.4);
        let u = gas.from_primitive(&[1.0], [0.7, -0.2], 1.1);
        let states = [u; 6];
        let fluxes = [Model::<4>::flux(&gas, &u, Axis::Y); 6];
        let alpha = field_speeds::<4>(&gas, states.iter(), Axis::Y);
        let counter = FallbackCounter::default();
        for characteristic in [true, false] {
            let cfg = WenoConfig {
                characteristic,
                ..WenoConfig::default()
            };
            let h = characteristic_interface_flux::<4>(&states, &fluxes, &gas, Axis::Y, &alpha, &cfg, &counter);
            for k in 0..4 {
                assert!((h[k] - fluxes[0][k]).abs() < 1e-13);
            }
        }
        assert_eq!(counter.get(), 0);
    }

    #[test]
    fn singular_average_falls_back() {
        let gas = IdealGas::new(1.4);
        let states = [[0.0, 0.0, 1.0]; 6];
        let fluxes = [[0.0, 0.4, 0.0]; 6];
        let counter = FallbackCounter::default();
        let h = characteristic_interface_flux::<3>(
            &states,
            &fluxes,
            &gas,
            Axis::X,
            &[1.0; 3],
            &WenoConfig::default(),
            &counter,
        );
        assert_eq!(counter.get(), 1);
        assert!((h[1] - 0.4).abs() < 1e-14);
    }
}
