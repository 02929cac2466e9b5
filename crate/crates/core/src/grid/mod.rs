//! Discrete sampling of `R^m x R^n` on a cell-centered product grid.
//!
//! Each axis of the box `[-L, L]` is cut into `N` cells of width `h = 2L/N`
//! and every function is represented by its value at the cell centers
//! `(i + 1/2) h - L`. With `N` even no center sits at a coordinate origin,
//! so power-law kernels are finite at every sample.
//!
//! Values are stored row-major with the `m` x-axes first, which makes the
//! storage a dense `N^m x N^n` matrix: one row per x-cell, one column per
//! y-cell. Integrals use midpoint quadrature and are truncated to the box.

mod io;

pub use io::GridHeader;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension of either coordinate group.
pub const MAX_GROUP_DIM: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductGrid {
    m: usize,
    n: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl ProductGrid {
    pub fn new(m: usize, n: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=MAX_GROUP_DIM).contains(&m) || !(1..=MAX_GROUP_DIM).contains(&n) {
            return Err(Error::InvalidGrid(format!(
                "group dimensions must lie in 1..={MAX_GROUP_DIM}, got m={m}, n={n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if points_per_axis == 0 || !points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and positive, got {points_per_axis}"
            )));
        }
        Ok(Self {
            m,
            n,
            half_width,
            points_per_axis,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Measure `h^(m+n)` of a single cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi((self.m + self.n) as i32)
    }

    pub fn x_group(&self) -> AxisGroup {
        AxisGroup::new(self.m, self.points_per_axis, self.half_width)
    }

    pub fn y_group(&self) -> AxisGroup {
        AxisGroup::new(self.n, self.points_per_axis, self.half_width)
    }

    pub fn group(&self, which: Group) -> AxisGroup {
        match which {
            Group::X => self.x_group(),
            Group::Y => self.y_group(),
        }
    }

    /// Total number of cells, `N^(m+n)`.
    pub fn len(&self) -> usize {
        self.x_group().len() * self.y_group().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, point: GridPoint) -> usize {
        point.x * self.y_group().len() + point.y
    }

    pub fn check_point(&self, point: GridPoint) -> Result<()> {
        if point.x < self.x_group().len() && point.y < self.y_group().len() {
            Ok(())
        } else {
            Err(Error::OutOfGrid(format!("{point:?}")))
        }
    }

    pub fn point_at(&self, index: usize) -> GridPoint {
        let ny = self.y_group().len();
        GridPoint {
            x: index / ny,
            y: index % ny,
        }
    }

    /// Builds a grid point from per-axis cell indices of each group.
    pub fn point(&self, x: &[usize], y: &[usize]) -> Result<GridPoint> {
        Ok(GridPoint {
            x: self.x_group().ravel(x)?,
            y: self.y_group().ravel(y)?,
        })
    }

    /// The cell whose closed box contains the given coordinates.
    pub fn locate(&self, x: &[f64], y: &[f64]) -> Result<GridPoint> {
        Ok(GridPoint {
            x: self.x_group().locate(x)?,
            y: self.y_group().locate(y)?,
        })
    }

    /// Cell closest to the origin in the positive orthant.
    pub fn center_point(&self) -> GridPoint {
        let half = self.points_per_axis / 2;
        let x = self.x_group().ravel_unchecked([half, half]);
        let y = self.y_group().ravel_unchecked([half, half]);
        GridPoint { x, y }
    }
}

/// Selects one of the two coordinate groups of the product space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    X,
    Y,
}

/// A grid location given as flat indices into the x-group and the y-group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: usize,
    pub y: usize,
}

/// The cells of one coordinate group (`R^m` or `R^n`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisGroup {
    dim: usize,
    points: usize,
    spacing: f64,
    half_width: f64,
}

impl AxisGroup {
    fn new(dim: usize, points: usize, half_width: f64) -> Self {
        Self {
            dim,
            points,
            spacing: 2.0 * half_width / points as f64,
            half_width,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn unravel(&self, index: usize) -> [usize; 2] {
        if self.dim == 1 {
            [index, 0]
        } else {
            [index / self.points, index % self.points]
        }
    }

    fn ravel_unchecked(&self, multi: [usize; 2]) -> usize {
        if self.dim == 1 {
            multi[0]
        } else {
            multi[0] * self.points + multi[1]
        }
    }

    pub fn ravel(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.dim {
            return Err(Error::OutOfGrid(format!(
                "expected {} indices, got {}",
                self.dim,
                multi.len()
            )));
        }
        if let Some(&bad) = multi.iter().find(|&&i| i >= self.points) {
            return Err(Error::OutOfGrid(format!(
                "index {bad} exceeds {} cells per axis",
                self.points
            )));
        }
        let mut full = [0usize; 2];
        full[..self.dim].copy_from_slice(multi);
        Ok(self.ravel_unchecked(full))
    }

    pub fn axis_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing - self.half_width
    }

    /// Cell-center coordinates; entries past `dim` are zero.
    pub fn center(&self, index: usize) -> [f64; 2] {
        let multi = self.unravel(index);
        let mut c = [0.0; 2];
        for (k, slot) in c.iter_mut().enumerate().take(self.dim) {
            *slot = self.axis_center(multi[k]);
        }
        c
    }

    /// Euclidean distance from the cell center to the origin.
    pub fn radius(&self, index: usize) -> f64 {
        let c = self.center(index);
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    }

    pub fn locate(&self, coords: &[f64]) -> Result<usize> {
        if coords.len() != self.dim {
            return Err(Error::OutOfGrid(format!(
                "expected {} coordinates, got {}",
                self.dim,
                coords.len()
            )));
        }
        let mut multi = [0usize; 2];
        for (k, &c) in coords.iter().enumerate() {
            multi[k] = self.cell_of(c).ok_or_else(|| {
                Error::OutOfGrid(format!("coordinate {c} outside [-L, L]"))
            })?;
        }
        Ok(self.ravel_unchecked(multi))
    }

    /// Cell containing coordinate `c`; the right edge `L` belongs to the last cell.
    fn cell_of(&self, c: f64) -> Option<usize> {
        if !c.is_finite() || c < -self.half_width || c > self.half_width {
            return None;
        }
        let i = ((c + self.half_width) / self.spacing).floor() as usize;
        Some(i.min(self.points - 1))
    }

    /// Cell index of the point `scale * center(index)`, if it lies inside the box.
    pub(crate) fn scaled_source(&self, index: usize, scale: f64) -> Option<usize> {
        let c = self.center(index);
        let mut multi = [0usize; 2];
        for k in 0..self.dim {
            let target = scale * c[k];
            if target < -self.half_width || target >= self.half_width {
                return None;
            }
            multi[k] = self.cell_of(target)?;
        }
        Some(self.ravel_unchecked(multi))
    }

    /// Moves `index` by an integer cell offset, `None` when it leaves the box.
    pub fn shift(&self, index: usize, offset: [i64; 2]) -> Option<usize> {
        let multi = self.unravel(index);
        let mut out = [0usize; 2];
        for k in 0..self.dim {
            let v = multi[k] as i64 + offset[k];
            if v < 0 || v >= self.points as i64 {
                return None;
            }
            out[k] = v as usize;
        }
        Some(self.ravel_unchecked(out))
    }

    /// Source cell `target - kernel + N/2` paired with kernel cell `kernel` in the
    /// half-cell shifted discrete convolution.
    pub(crate) fn convolution_source(&self, target: usize, kernel: usize) -> Option<usize> {
        let t = self.unravel(target);
        let k = self.unravel(kernel);
        let half = (self.points / 2) as i64;
        let mut out = [0usize; 2];
        for d in 0..self.dim {
            let v = t[d] as i64 - k[d] as i64 + half;
            if v < 0 || v >= self.points as i64 {
                return None;
            }
            out[d] = v as usize;
        }
        Some(self.ravel_unchecked(out))
    }
}

/// Sampled nonnegative values of `|f|` on a [`ProductGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: ProductGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: ProductGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidValue { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: ProductGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    /// Samples `profile(x, y)` at every cell center.
    pub fn from_fn<F>(grid: ProductGrid, mut profile: F) -> Result<Self>
    where
        F: FnMut(&[f64], &[f64]) -> f64,
    {
        let gx = grid.x_group();
        let gy = grid.y_group();
        let mut values = Vec::with_capacity(grid.len());
        for xi in 0..gx.len() {
            let x = gx.center(xi);
            for yi in 0..gy.len() {
                let y = gy.center(yi);
                values.push(profile(&x[..gx.dim()], &y[..gy.dim()]));
            }
        }
        Self::new(grid, values)
    }

    /// Outer product `a(x) b(y)` of an x-group sample and a y-group sample.
    pub fn tensor(grid: ProductGrid, a: &[f64], b: &[f64]) -> Result<Self> {
        let (nx, ny) = (grid.x_group().len(), grid.y_group().len());
        if a.len() != nx || b.len() != ny {
            return Err(Error::ShapeMismatch {
                expected: nx + ny,
                found: a.len() + b.len(),
            });
        }
        let values = a
            .iter()
            .flat_map(|&ax| b.iter().map(move |&by| ax * by))
            .collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_raw(grid: ProductGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { grid, values }
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, point: GridPoint) -> f64 {
        self.values[self.grid.index(point)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `c * f` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// `(sum f^p h^(m+n))^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_norm_exponent(p)?;
        let sum = power_sum(&self.values, p);
        Ok((sum * self.grid.cell_volume()).powf(1.0 / p))
    }

    /// `L^p` norm over the y-group of the slice at x-cell `x`.
    pub fn slice_lp_norm_x(&self, p: f64, x: &[usize]) -> Result<f64> {
        check_norm_exponent(p)?;
        let xi = self.grid.x_group().ravel(x)?;
        Ok(self.row_norm(xi, p))
    }

    /// `L^p` norm over the x-group of the slice at y-cell `y`.
    pub fn slice_lp_norm_y(&self, p: f64, y: &[usize]) -> Result<f64> {
        check_norm_exponent(p)?;
        let yi = self.grid.y_group().ravel(y)?;
        Ok(self.column_norm(yi, p))
    }

    /// Slice norms over y for every x-cell, indexed by flat x index.
    pub fn slice_norms_x(&self, p: f64) -> Result<Vec<f64>> {
        check_norm_exponent(p)?;
        Ok((0..self.grid.x_group().len())
            .map(|xi| self.row_norm(xi, p))
            .collect())
    }

    /// Slice norms over x for every y-cell, indexed by flat y index.
    pub fn slice_norms_y(&self, p: f64) -> Result<Vec<f64>> {
        check_norm_exponent(p)?;
        Ok((0..self.grid.y_group().len())
            .map(|yi| self.column_norm(yi, p))
            .collect())
    }

    fn row_norm(&self, xi: usize, p: f64) -> f64 {
        let ny = self.grid.y_group().len();
        let row = &self.values[xi * ny..(xi + 1) * ny];
        let hn = self.grid.y_group().spacing().powi(self.grid.n() as i32);
        (power_sum(row, p) * hn).powf(1.0 / p)
    }

    fn column_norm(&self, yi: usize, p: f64) -> f64 {
        let ny = self.grid.y_group().len();
        let nx = self.grid.x_group().len();
        let mut sum = 0.0;
        for xi in 0..nx {
            sum += pow_term(self.values[xi * ny + yi], p);
        }
        let hm = self.grid.x_group().spacing().powi(self.grid.m() as i32);
        (sum * hm).powf(1.0 / p)
    }

    /// Resamples `f(s x, t y)` by nearest-cell lookup, zero outside the box.
    pub fn dilate(&self, s: f64, t: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0 && t.is_finite() && t > 0.0) {
            return Err(Error::InvalidDilation { s, t });
        }
        let gx = self.grid.x_group();
        let gy = self.grid.y_group();
        let ny = gy.len();
        let y_sources: Vec<Option<usize>> = (0..ny).map(|yi| gy.scaled_source(yi, t)).collect();
        let mut values = Vec::with_capacity(self.values.len());
        for xi in 0..gx.len() {
            let xs = gx.scaled_source(xi, s);
            for ys in &y_sources {
                let v = match (xs, ys) {
                    (Some(a), Some(b)) => self.values[a * ny + b],
                    _ => 0.0,
                };
                values.push(v);
            }
        }
        Ok(Self::from_raw(self.grid, values))
    }
}

fn check_norm_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidNormExponent(p))
    }
}

#[inline]
fn pow_term(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v
    } else if p == 2.0 {
        v * v
    } else {
        v.powf(p)
    }
}

fn power_sum(values: &[f64], p: f64) -> f64 {
    values.iter().map(|&v| pow_term(v, p)).sum()
}
