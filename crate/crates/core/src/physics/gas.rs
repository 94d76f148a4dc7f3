use super::{Axis, Eigen, State};

/// Storage layout of a gas-dynamics state.
pub(crate) struct GasLayout<'a> {
    /// Mass-like components (partial densities, total density, rho*Y).
    pub mass: &'a [usize],
    /// Whether each mass component contributes to the total density.
    pub in_total: &'a [bool],
    /// Momentum components, x first.
    pub momentum: &'a [usize],
    pub energy: usize,
}

/// Eigen-decomposition of the Euler Jacobian for a state carrying several
/// mass components and an arbitrary pressure `p(mass, m, E)`.
///
/// Columns are ordered `[un - c, mass waves.., shear, un + c]`. Each mass
/// wave perturbs one mass component at constant pressure and velocity; the
/// shear wave (2D only) perturbs tangential momentum. The sound speed is
/// taken from the same pressure derivatives so the vectors are exact.
pub(crate) fn gas_eigensystem<const N: usize>(
    u: &State<N>,
    axis: Axis,
    layout: &GasLayout<'_>,
    p: f64,
    dp_dmass: &[f64],
    dp_de: f64,
) -> Option<Eigen<N>> {
    let rho: f64 = layout
        .mass
        .iter()
        .zip(layout.in_total)
        .filter(|(_, &t)| t)
        .map(|(&k, _)| u[k])
        .sum();
    if !(rho > 0.0) || dp_de == 0.0 {
        return None;
    }
    let (normal, tangential) = match (axis, layout.momentum.len()) {
        (Axis::X, _) => (0, 1),
        (Axis::Y, 2) => (1, 0),
        (Axis::Y, _) => return None,
    };
    let mut vel = [0.0; 2];
    for (v, &k) in vel.iter_mut().zip(layout.momentum) {
        *v = u[k] / rho;
    }
    let v2 = vel[0] * vel[0] + vel[1] * vel[1];
    let un = vel[normal];
    let h = (u[layout.energy] + p) / rho;

    let mut c2 = dp_de * (h - v2);
    for (i, &k) in layout.mass.iter().enumerate() {
        c2 += u[k] / rho * dp_dmass[i];
    }
    let c = c2.abs().sqrt();
    if !c.is_finite() || c == 0.0 {
        return None;
    }

    let mut right = [[0.0; N]; N];
    let mut col = 0;
    let acoustic = |right: &mut [[f64; N]; N], col: usize, sign: f64| {
        for &k in layout.mass {
            right[k][col] = u[k] / rho;
        }
        for (d, &k) in layout.momentum.iter().enumerate() {
            right[k][col] = if d == normal { un + sign * c } else { vel[d] };
        }
        right[layout.energy][col] = h + sign * un * c;
    };
    acoustic(&mut right, col, -1.0);
    col += 1;
    for (i, &k) in layout.mass.iter().enumerate() {
        let drho = if layout.in_total[i] { 1.0 } else { 0.0 };
        right[k][col] = 1.0;
        for (d, &km) in layout.momentum.iter().enumerate() {
            right[km][col] = vel[d] * drho;
        }
        right[layout.energy][col] = v2 * drho - dp_dmass[i] / dp_de;
        col += 1;
    }
    if layout.momentum.len() == 2 {
        right[layout.momentum[tangential]][col] = 1.0;
        right[layout.energy][col] = vel[tangential];
        col += 1;
    }
    acoustic(&mut right, col, 1.0);

    let left = invert(&right)?;
    Some(Eigen { right, left })
}

/// Characteristic speeds in the column order of [`gas_eigensystem`].
pub(crate) fn gas_wave_speeds<const N: usize>(un: f64, c: f64) -> State<N> {
    let mut s = [un; N];
    s[0] = un - c;
    s[N - 1] = un + c;
    s
}

/// Gauss-Jordan inverse with partial pivoting. Returns `None` for singular
/// or non-finite input.
pub fn invert<const N: usize>(m: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut a = *m;
    let mut inv = [[0.0; N]; N];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..N {
        let mut piv = col;
        let mut best = a[col][col].abs();
        for r in col + 1..N {
            if a[r][col].abs() > best {
                best = a[r][col].abs();
                piv = r;
            }
        }
        if !(best > 1e-300) || !best.is_finite() {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = 1.0 / a[col][col];
        for k in 0..N {
            a[col][k] *= d;
            inv[col][k] *= d;
        }
        for r in 0..N {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in 0..N {
                        a[r][k] -= f * a[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    if inv.iter().flatten().all(|v| v.is_finite()) {
        Some(inv)
    } else {
        None
    }
}
