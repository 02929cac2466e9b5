//! Discrete fractional convolution `f * Omega` and its four-region split.
//!
//! Kernel cell `l` sits at the offset `(l - N/2 + 1/2) h` on every axis, so
//! output cell `i` collects `f[i - l + N/2] k[l]`. Both operands are
//! zero-extended outside the box, and the kernel is truncated to the box.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisGroup, GridFunction, GridPoint, ProductGrid};
use crate::kernel::{riesz_factors, Exponents};

fn same_grid(f: &GridFunction, k: &GridFunction) -> Result<ProductGrid> {
    if f.grid() != k.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(*f.grid())
}

/// `(kernel cell, source cell)` pairs contributing to target cell `t`.
fn pairs(group: &AxisGroup, t: usize) -> Vec<(usize, usize)> {
    (0..group.len())
        .filter_map(|l| group.convolution_source(t, l).map(|s| (l, s)))
        .collect()
}

fn direct_sum(
    f: &[f64],
    k: &[f64],
    ny: usize,
    xs: &[(usize, usize)],
    ys: &[(usize, usize)],
) -> f64 {
    let mut acc = 0.0;
    for &(lx, sx) in xs {
        let frow = &f[sx * ny..(sx + 1) * ny];
        let krow = &k[lx * ny..(lx + 1) * ny];
        for &(ly, sy) in ys {
            acc += frow[sy] * krow[ly];
        }
    }
    acc
}

/// Direct summation, `O(N^(2(m+n)))`.
pub fn convolve_direct(f: &GridFunction, k: &GridFunction) -> Result<GridFunction> {
    let grid = same_grid(f, k)?;
    let gx = grid.x_group();
    let gy = grid.y_group();
    let ny = gy.len();
    let vol = grid.cell_volume();
    let y_pairs: Vec<Vec<(usize, usize)>> = (0..ny).map(|ty| pairs(&gy, ty)).collect();
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(ny).enumerate().for_each(|(tx, row)| {
        let xs = pairs(&gx, tx);
        for (ty, slot) in row.iter_mut().enumerate() {
            *slot = direct_sum(f.values(), k.values(), ny, &xs, &y_pairs[ty]) * vol;
        }
    });
    Ok(GridFunction::from_raw(grid, out))
}

/// Direct summation at a single output cell.
pub fn convolve_at(f: &GridFunction, k: &GridFunction, point: GridPoint) -> Result<f64> {
    let grid = same_grid(f, k)?;
    let gx = grid.x_group();
    let gy = grid.y_group();
    if point.x >= gx.len() || point.y >= gy.len() {
        return Err(Error::OutOfGrid(format!("{point:?}")));
    }
    let xs = pairs(&gx, point.x);
    let ys = pairs(&gy, point.y);
    Ok(direct_sum(f.values(), k.values(), gy.len(), &xs, &ys) * grid.cell_volume())
}

/// Per-axis cell indices of every grid cell, x axes first.
fn axis_indices(grid: &ProductGrid, index: usize, out: &mut Vec<usize>) {
    out.clear();
    let p = grid.point_at(index);
    let gx = grid.x_group();
    let gy = grid.y_group();
    out.extend_from_slice(&gx.unravel(p.x)[..gx.dim()]);
    out.extend_from_slice(&gy.unravel(p.y)[..gy.dim()]);
}

fn transform_axes(data: &mut [Complex64], rank: usize, len: usize, planner: &mut FftPlanner<f64>, inverse: bool) {
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    let mut line = vec![Complex64::default(); len];
    let total = data.len();
    for axis in 0..rank {
        let stride = len.pow((rank - 1 - axis) as u32);
        let block = stride * len;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Same contract as [`convolve_direct`], computed with zero-padded FFTs.
///
/// Every axis is padded to `2N`, which holds the full linear convolution
/// without wrap-around. Rounding noise below zero is clamped to zero.
pub fn convolve_fast(f: &GridFunction, k: &GridFunction) -> Result<GridFunction> {
    let grid = same_grid(f, k)?;
    let n = grid.points_per_axis();
    let rank = grid.m() + grid.n();
    let padded = 2 * n;
    let total = padded.pow(rank as u32);

    let mut idx = Vec::with_capacity(rank);
    let padded_index = |multi: &[usize], shift: usize| {
        multi.iter().fold(0usize, |acc, &i| acc * padded + i + shift)
    };

    let mut fa = vec![Complex64::default(); total];
    let mut ka = vec![Complex64::default(); total];
    for i in 0..grid.len() {
        axis_indices(&grid, i, &mut idx);
        let j = padded_index(&idx, 0);
        fa[j] = Complex64::new(f.values()[i], 0.0);
        ka[j] = Complex64::new(k.values()[i], 0.0);
    }

    let mut planner = FftPlanner::new();
    transform_axes(&mut fa, rank, padded, &mut planner, false);
    transform_axes(&mut ka, rank, padded, &mut planner, false);
    for (a, b) in fa.iter_mut().zip(&ka) {
        *a *= *b;
    }
    transform_axes(&mut fa, rank, padded, &mut planner, true);

    let scale = grid.cell_volume() / total as f64;
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        axis_indices(&grid, i, &mut idx);
        let v = fa[padded_index(&idx, n / 2)].re * scale;
        out.push(v.max(0.0));
    }
    Ok(GridFunction::from_raw(grid, out))
}

/// The four region integrals of `f * Omega` at one point, split at `|u| = r1`
/// and `|v| = r2`. Inner regions are closed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionBounds {
    /// `|u| <= r1, |v| <= r2`
    pub t11: f64,
    /// `|u| <= r1, |v| > r2`
    pub t12: f64,
    /// `|u| > r1, |v| <= r2`
    pub t21: f64,
    /// `|u| > r1, |v| > r2`
    pub t22: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RegionBounds {
    pub fn total(&self) -> f64 {
        self.t11 + self.t12 + self.t21 + self.t22
    }
}

/// Kernel factors and offset radii of every kernel cell, shared by many splits.
#[derive(Clone, Debug)]
pub(crate) struct SplitTable {
    grid: ProductGrid,
    kx: Vec<f64>,
    ky: Vec<f64>,
    rx: Vec<f64>,
    ry: Vec<f64>,
}

impl SplitTable {
    pub(crate) fn new(grid: &ProductGrid, exps: &Exponents) -> Result<Self> {
        let (kx, ky) = riesz_factors(grid, exps)?;
        let gx = grid.x_group();
        let gy = grid.y_group();
        Ok(Self {
            grid: *grid,
            kx,
            ky,
            rx: (0..gx.len()).map(|i| gx.radius(i)).collect(),
            ry: (0..gy.len()).map(|i| gy.radius(i)).collect(),
        })
    }

    pub(crate) fn split(&self, f: &GridFunction, point: GridPoint, r1: f64, r2: f64) -> Result<RegionBounds> {
        for r in [r1, r2] {
            if r.is_nan() || r <= 0.0 {
                return Err(Error::InvalidRadius(r));
            }
        }
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let gx = self.grid.x_group();
        let gy = self.grid.y_group();
        if point.x >= gx.len() || point.y >= gy.len() {
            return Err(Error::OutOfGrid(format!("{point:?}")));
        }
        let ny = gy.len();
        let xs = pairs(&gx, point.x);
        let ys = pairs(&gy, point.y);
        let vals = f.values();
        let mut t = [0.0f64; 4];
        for &(lx, sx) in &xs {
            let inner_x = self.rx[lx] <= r1;
            let frow = &vals[sx * ny..(sx + 1) * ny];
            let kxv = self.kx[lx];
            for &(ly, sy) in &ys {
                let inner_y = self.ry[ly] <= r2;
                let slot = match (inner_x, inner_y) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                t[slot] += frow[sy] * (kxv * self.ky[ly]);
            }
        }
        let vol = self.grid.cell_volume();
        Ok(RegionBounds {
            t11: t[0] * vol,
            t12: t[1] * vol,
            t21: t[2] * vol,
            t22: t[3] * vol,
            r1,
            r2,
        })
    }
}

/// Splits `(f * Omega)(point)` into the four regions of offsets `(u, v)`.
///
/// The kernel is evaluated from the offset radii, so splitting radii beyond
/// the box simply put every offset in the inner region.
pub fn region_split(
    f: &GridFunction,
    exps: &Exponents,
    point: GridPoint,
    r1: f64,
    r2: f64,
) -> Result<RegionBounds> {
    SplitTable::new(f.grid(), exps)?.split(f, point, r1, r2)
}
