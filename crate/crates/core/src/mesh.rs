//! Structured grids with ghost layers, masks and boundary conditions.

use crate::error::{Result, SolverError};
use crate::physics::{Axis, Model, State};

/// Ghost layers on each side of a sweep direction; the WENO5 stencil
/// reaches three points upwind.
pub const GHOST: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

/// Cell-centred states on a uniform rectangular grid, with ghost frames
/// and an optional activity mask for non-rectangular domains.
///
/// 1D grids carry ghosts only in `x`; 2D grids carry them on all four
/// sides. Storage is row-major over the ghosted extent.
#[derive(Clone, Debug)]
pub struct FieldGrid<const N: usize> {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Centre of interior cell `(0, 0)`.
    pub origin: [f64; 2],
    pub dim: Dim,
    mask: Option<Vec<bool>>,
    data: Vec<State<N>>,
}

impl<const N: usize> FieldGrid<N> {
    /// `nx` cells covering `[x_lo, x_lo + nx dx]`.
    pub fn new_1d(nx: usize, x_lo: f64, dx: f64) -> Result<Self> {
        if nx == 0 || !(dx > 0.0) {
            return Err(SolverError::config("1D grid needs nx >= 1 and dx > 0"));
        }
        Ok(FieldGrid {
            nx,
            ny: 1,
            dx,
            dy: 1.0,
            origin: [x_lo + 0.5 * dx, 0.0],
            dim: Dim::One,
            mask: None,
            data: vec![[0.0; N]; nx + 2 * GHOST],
        })
    }

    /// `nx * ny` cells with lower-left corner at `lo`.
    pub fn new_2d(nx: usize, ny: usize, lo: [f64; 2], dx: f64, dy: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(dx > 0.0) || !(dy > 0.0) {
            return Err(SolverError::config("2D grid needs nx, ny >= 1 and dx, dy > 0"));
        }
        Ok(FieldGrid {
            nx,
            ny,
            dx,
            dy,
            origin: [lo[0] + 0.5 * dx, lo[1] + 0.5 * dy],
            dim: Dim::Two,
            mask: None,
            data: vec![[0.0; N]; (nx + 2 * GHOST) * (ny + 2 * GHOST)],
        })
    }

    pub fn ghost_width(&self) -> usize {
        GHOST
    }

    fn ghost_y(&self) -> usize {
        match self.dim {
            Dim::One => 0,
            Dim::Two => GHOST,
        }
    }

    fn width(&self) -> usize {
        self.nx + 2 * GHOST
    }

    /// Storage index of cell `(i, j)`; negative or past-the-end indices
    /// address ghost cells.
    #[inline]
    pub fn index(&self, i: isize, j: isize) -> usize {
        let col = (i + GHOST as isize) as usize;
        let row = (j + self.ghost_y() as isize) as usize;
        row * self.width() + col
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize) -> &State<N> {
        &self.data[self.index(i, j)]
    }

    #[inline]
    pub fn get_mut(&mut self, i: isize, j: isize) -> &mut State<N> {
        let k = self.index(i, j);
        &mut self.data[k]
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> &State<N> {
        self.get(i as isize, j as isize)
    }

    #[inline]
    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut State<N> {
        self.get_mut(i as isize, j as isize)
    }

    pub fn center(&self, i: isize, j: isize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.dx,
            self.origin[1] + j as f64 * self.dy,
        ]
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[j * self.nx + i])
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn set_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.nx * self.ny {
            return Err(SolverError::config("mask size does not match the grid"));
        }
        self.mask = Some(mask);
        self.check_segments()
    }

    pub fn active_count(&self) -> usize {
        self.mask
            .as_ref()
            .map_or(self.nx * self.ny, |m| m.iter().filter(|&&a| a).count())
    }

    /// Evaluate `f` at every interior cell centre (blanked cells included,
    /// so that they hold a valid placeholder state).
    pub fn fill(&mut self, f: impl Fn(f64, f64) -> State<N>) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let [x, y] = self.center(i as isize, j as isize);
                *self.cell_mut(i, j) = f(x, y);
            }
        }
    }

    /// Interior active cells as `(i, j)` pairs in row-major order.
    pub fn active_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny)
            .flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
            .filter(move |&(i, j)| self.is_active(i, j))
    }

    /// Number of sweep lines along `axis`.
    pub fn line_count(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.ny,
            Axis::Y => self.nx,
        }
    }

    /// Number of cells along a sweep line in direction `axis`.
    pub fn line_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
        }
    }

    /// Interior `(i, j)` of position `p` on sweep line `k`.
    #[inline]
    pub fn line_cell(axis: Axis, k: usize, p: isize) -> (isize, isize) {
        match axis {
            Axis::X => (p, k as isize),
            Axis::Y => (k as isize, p),
        }
    }

    /// Active range `[lo, hi)` along line `k`, or `None` if fully blanked.
    pub fn active_segment(&self, axis: Axis, k: usize) -> Option<(usize, usize)> {
        let n = self.line_len(axis);
        let active = |p: usize| {
            let (i, j) = Self::line_cell(axis, k, p as isize);
            self.is_active(i as usize, j as usize)
        };
        let lo = (0..n).find(|&p| active(p))?;
        let hi = (lo..n).find(|&p| !active(p)).unwrap_or(n);
        Some((lo, hi))
    }

    fn check_segments(&self) -> Result<()> {
        let axes: &[Axis] = match self.dim {
            Dim::One => &[Axis::X],
            Dim::Two => &[Axis::X, Axis::Y],
        };
        for &axis in axes {
            for k in 0..self.line_count(axis) {
                if let Some((_, hi)) = self.active_segment(axis, k) {
                    for p in hi..self.line_len(axis) {
                        let (i, j) = Self::line_cell(axis, k, p as isize);
                        if self.is_active(i as usize, j as usize) {
                            return Err(SolverError::config(
                                "mask must give each grid line a single active segment",
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// States along sweep line `k` in direction `axis`, covering the active
    /// segment plus `GHOST` points on each side.
    ///
    /// Ends of the segment that coincide with the domain edge read the ghost
    /// frame filled by [`apply_boundaries`]; ends that meet a blanked cell
    /// are reflective walls and are mirrored here, with the momentum
    /// component `normal_momentum` negated.
    pub fn gather_line(&self, axis: Axis, k: usize, normal_momentum: Option<usize>) -> Option<Line<N>> {
        let (lo, hi) = self.active_segment(axis, k)?;
        let n = self.line_len(axis);
        let g = GHOST as isize;
        let mut states = Vec::with_capacity(hi - lo + 2 * GHOST);
        for p in lo as isize - g..hi as isize + g {
            let wall_left = lo > 0 && p < lo as isize;
            let wall_right = hi < n && p >= hi as isize;
            let src = if wall_left {
                2 * lo as isize - 1 - p
            } else if wall_right {
                2 * hi as isize - 1 - p
            } else {
                p
            };
            let (i, j) = Self::line_cell(axis, k, src);
            let mut s = *self.get(i, j);
            if wall_left || wall_right {
                if let Some(m) = normal_momentum {
                    s[m] = -s[m];
                }
            }
            states.push(s);
        }
        Some(Line {
            states,
            start: lo,
            len: hi - lo,
        })
    }

    /// Copy interior states out in row-major order.
    pub fn interior(&self) -> Vec<State<N>> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(*self.cell(i, j));
            }
        }
        out
    }
}

/// One sweep line: `len` active cells starting at interior index `start`,
/// stored with `GHOST` extra points on each side.
#[derive(Clone, Debug)]
pub struct Line<const N: usize> {
    pub states: Vec<State<N>>,
    pub start: usize,
    pub len: usize,
}

/// Fixed inflow state, piecewise constant in the tangential coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct InflowProfile<const N: usize> {
    /// `(lo, hi, state)` closed intervals, checked in order.
    pub segments: Vec<(f64, f64, State<N>)>,
    pub default: State<N>,
}

impl<const N: usize> InflowProfile<N> {
    pub fn uniform(state: State<N>) -> Self {
        InflowProfile {
            segments: Vec::new(),
            default: state,
        }
    }

    pub fn state_at(&self, s: f64) -> State<N> {
        self.segments
            .iter()
            .find(|(lo, hi, _)| s >= *lo && s <= *hi)
            .map_or(self.default, |(_, _, st)| *st)
    }

    fn states(&self) -> impl Iterator<Item = &State<N>> {
        self.segments.iter().map(|(_, _, s)| s).chain(std::iter::once(&self.default))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EdgeKind<const N: usize> {
    Periodic,
    /// Zero-order extrapolation.
    Outflow,
    /// Mirror with negated normal momentum.
    Reflective,
    /// Fixed state evaluated at each ghost cell's tangential coordinate.
    Inflow(InflowProfile<N>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec<const N: usize> {
    pub left: EdgeKind<N>,
    pub right: EdgeKind<N>,
    pub bottom: EdgeKind<N>,
    pub top: EdgeKind<N>,
}

impl<const N: usize> BoundarySpec<N> {
    pub fn uniform(kind: EdgeKind<N>) -> Self {
        BoundarySpec {
            left: kind.clone(),
            right: kind.clone(),
            bottom: kind.clone(),
            top: kind,
        }
    }

    pub fn periodic() -> Self {
        Self::uniform(EdgeKind::Periodic)
    }

    pub fn outflow() -> Self {
        Self::uniform(EdgeKind::Outflow)
    }

    pub fn validate(&self, model: &dyn Model<N>) -> Result<()> {
        let pairs = [(&self.left, &self.right), (&self.bottom, &self.top)];
        for (a, b) in pairs {
            let pa = matches!(a, EdgeKind::Periodic);
            let pb = matches!(b, EdgeKind::Periodic);
            if pa != pb {
                return Err(SolverError::config(
                    "periodic boundaries must be set on both opposing edges",
                ));
            }
        }
        for edge in [&self.left, &self.right, &self.bottom, &self.top] {
            if let EdgeKind::Inflow(profile) = edge {
                if let Some(bad) = profile.states().find(|s| !model.is_admissible(s)) {
                    return Err(SolverError::config(format!(
                        "inflow state {bad:?} violates positivity"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Fill the ghost frame of `grid` according to `spec`.
///
/// `time` is accepted for time-dependent inflow; the built-in profiles are
/// steady.
pub fn apply_boundaries<const N: usize>(
    grid: &mut FieldGrid<N>,
    spec: &BoundarySpec<N>,
    model: &dyn Model<N>,
    _time: f64,
) {
    let g = GHOST as isize;
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);

    let mx = model.normal_momentum(Axis::X);
    for j in 0..ny {
        let y = grid.center(0, j)[1];
        for k in 1..=g {
            let left = edge_value(grid, &spec.left, mx, y, || (k - 1, j), || (nx - k, j), || (0, j));
            *grid.get_mut(-k, j) = left;
            let right =
                edge_value(grid, &spec.right, mx, y, || (nx - k, j), || (k - 1, j), || (nx - 1, j));
            *grid.get_mut(nx - 1 + k, j) = right;
        }
    }

    if grid.dim == Dim::Two {
        let my = model.normal_momentum(Axis::Y);
        for i in 0..nx {
            let x = grid.center(i, 0)[0];
            for k in 1..=g {
                let bottom =
                    edge_value(grid, &spec.bottom, my, x, || (i, k - 1), || (i, ny - k), || (i, 0));
                *grid.get_mut(i, -k) = bottom;
                let top =
                    edge_value(grid, &spec.top, my, x, || (i, ny - k), || (i, k - 1), || (i, ny - 1));
                *grid.get_mut(i, ny - 1 + k) = top;
            }
        }
    }
}

fn edge_value<const N: usize>(
    grid: &FieldGrid<N>,
    kind: &EdgeKind<N>,
    normal_momentum: Option<usize>,
    tangential: f64,
    mirror: impl Fn() -> (isize, isize),
    wrap: impl Fn() -> (isize, isize),
    nearest: impl Fn() -> (isize, isize),
) -> State<N> {
    match kind {
        EdgeKind::Periodic => {
            let (i, j) = wrap();
            *grid.get(i, j)
        }
        EdgeKind::Outflow => {
            let (i, j) = nearest();
            *grid.get(i, j)
        }
        EdgeKind::Reflective => {
            let (i, j) = mirror();
            let mut s = *grid.get(i, j);
            if let Some(m) = normal_momentum {
                s[m] = -s[m];
            }
            s
        }
        EdgeKind::Inflow(profile) => profile.state_at(tangential),
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }
}

/// Bounding-box grid of a union of rectangles, with cells outside the
/// union blanked. Blanked cells bordering active ones act as reflective
/// walls during sweeps.
pub fn corner_domain<const N: usize>(rects: &[Rect], dx: f64, dy: f64) -> Result<FieldGrid<N>> {
    if rects.is_empty() {
        return Err(SolverError::config("domain needs at least one rectangle"));
    }
    let x0 = rects.iter().map(|r| r.x0).fold(f64::INFINITY, f64::min);
    let x1 = rects.iter().map(|r| r.x1).fold(f64::NEG_INFINITY, f64::max);
    let y0 = rects.iter().map(|r| r.y0).fold(f64::INFINITY, f64::min);
    let y1 = rects.iter().map(|r| r.y1).fold(f64::NEG_INFINITY, f64::max);

    let cells = |len: f64, h: f64| -> Result<usize> {
        let n = (len / h).round();
        if n < 1.0 || (n * h - len).abs() > 1e-9 * len.abs().max(h) {
            return Err(SolverError::config(format!(
                "length {len} is not a multiple of the spacing {h}"
            )));
        }
        Ok(n as usize)
    };
    for r in rects {
        if !(r.x1 > r.x0 && r.y1 > r.y0) {
            return Err(SolverError::config("degenerate rectangle"));
        }
        cells(r.x0 - x0 + dx, dx)?;
        cells(r.x1 - x0, dx)?;
        cells(r.y0 - y0 + dy, dy)?;
        cells(r.y1 - y0, dy)?;
    }
    let nx = cells(x1 - x0, dx)?;
    let ny = cells(y1 - y0, dy)?;
    let mut grid = FieldGrid::new_2d(nx, ny, [x0, y0], dx, dy)?;
    let mut mask = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let [x, y] = grid.center(i as isize, j as isize);
            mask[j * nx + i] = rects.iter().any(|r| r.contains(x, y));
        }
    }
    grid.set_mask(mask)?;
    Ok(grid)
}
