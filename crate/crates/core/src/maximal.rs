//! Strong and partial maximal operators over dyadic windows.
//!
//! A window of radius `r` in a coordinate group holds the cells whose
//! centers lie at distance `< r` from the center cell, i.e. integer offsets
//! `o` with `|o| h < r`. Cells outside the box count as zero while the
//! average is still taken over the full window, so averages near the
//! boundary are underestimates.
//!
//! Product windows are products of group windows, and the strong maximal
//! average is computed separably: first every y-window average, then the
//! x-window averages of those. Sums run over nonnegative terms in a fixed
//! offset order, so the iterated bound `M f <= M1 (M2 f)` holds exactly in
//! floating point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisGroup, GridFunction, GridPoint, Group, ProductGrid};
use crate::kernel::Exponents;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFamily {
    x_radii: Vec<f64>,
    y_radii: Vec<f64>,
}

impl WindowFamily {
    /// Radii `h 2^k` from the single center cell up to the first radius that
    /// exceeds the box diameter `sqrt(d) N h` of the group, so every window
    /// family reaches the whole box from any cell. For one-dimensional
    /// groups this is `k = 0..=ceil(log2 N)`.
    pub fn dyadic(grid: &ProductGrid) -> Self {
        let radii = |d: usize| {
            let n = grid.points_per_axis() as f64;
            let reach = (d as f64).sqrt() * n;
            let mut out = vec![grid.spacing()];
            let mut k = 0;
            while 2f64.powi(k) < reach {
                k += 1;
                out.push(grid.spacing() * 2f64.powi(k));
            }
            out
        };
        Self {
            x_radii: radii(grid.m()),
            y_radii: radii(grid.n()),
        }
    }

    /// Arbitrary strictly increasing positive radii per group.
    pub fn new(x_radii: Vec<f64>, y_radii: Vec<f64>) -> Result<Self> {
        for radii in [&x_radii, &y_radii] {
            if radii.is_empty() {
                return Err(Error::InvalidWindows("empty radius list".into()));
            }
            if !radii.iter().all(|r| r.is_finite() && *r > 0.0) {
                return Err(Error::InvalidWindows(format!("nonpositive radius in {radii:?}")));
            }
            if !radii.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidWindows(format!("radii not increasing: {radii:?}")));
            }
        }
        Ok(Self { x_radii, y_radii })
    }

    pub fn x_radii(&self) -> &[f64] {
        &self.x_radii
    }

    pub fn y_radii(&self) -> &[f64] {
        &self.y_radii
    }

    fn radii(&self, which: Group) -> &[f64] {
        match which {
            Group::X => &self.x_radii,
            Group::Y => &self.y_radii,
        }
    }
}

/// Integer offsets of one group sorted by distance, with the prefix length
/// and full cell count of each window radius.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    offsets: Vec<[i64; 2]>,
    ends: Vec<usize>,
    counts: Vec<f64>,
}

impl Stencil {
    pub(crate) fn new(group: &AxisGroup, radii: &[f64]) -> Self {
        let h = group.spacing();
        let reach = group.points_per_axis() as i64 - 1;
        let limits: Vec<f64> = radii.iter().map(|r| (r / h) * (r / h)).collect();
        let outer = *limits.last().expect("nonempty radii");
        let bound = outer.sqrt().ceil() as i64;
        let second = if group.dim() == 2 { bound } else { 0 };

        let mut all = Vec::new();
        for a in -bound..=bound {
            for b in -second..=second {
                let d2 = (a * a + b * b) as f64;
                if d2 < outer {
                    all.push((a * a + b * b, [a, b]));
                }
            }
        }
        all.sort();

        let counts = limits
            .iter()
            .map(|&lim| all.iter().filter(|(d2, _)| (*d2 as f64) < lim).count() as f64)
            .collect();
        let offsets: Vec<[i64; 2]> = all
            .into_iter()
            .map(|(_, o)| o)
            .filter(|o| o[0].abs() <= reach && o[1].abs() <= reach)
            .collect();
        let ends = limits
            .iter()
            .map(|&lim| {
                offsets
                    .iter()
                    .take_while(|o| ((o[0] * o[0] + o[1] * o[1]) as f64) < lim)
                    .count()
            })
            .collect();
        Self {
            offsets,
            ends,
            counts,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.ends.len()
    }
}

/// Window averages of `values` over one group, one grid per radius.
fn window_averages(values: &[f64], grid: &ProductGrid, which: Group, st: &Stencil) -> Vec<Vec<f64>> {
    let gx = grid.x_group();
    let gy = grid.y_group();
    let (nx, ny) = (gx.len(), gy.len());
    let radii = st.len();
    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); nx];
    match which {
        Group::X => {
            rows.par_iter_mut().enumerate().for_each(|(x, out)| {
                let mut acc = vec![0.0; ny];
                let mut r = 0;
                *out = vec![Vec::new(); radii];
                for (j, o) in st.offsets.iter().enumerate() {
                    while r < radii && st.ends[r] == j {
                        out[r] = acc.iter().map(|s| s / st.counts[r]).collect();
                        r += 1;
                    }
                    if let Some(src) = gx.shift(x, *o) {
                        let row = &values[src * ny..(src + 1) * ny];
                        for (a, v) in acc.iter_mut().zip(row) {
                            *a += *v;
                        }
                    }
                }
                while r < radii {
                    out[r] = acc.iter().map(|s| s / st.counts[r]).collect();
                    r += 1;
                }
            });
        }
        Group::Y => {
            let shifts: Vec<Vec<Option<usize>>> = (0..ny)
                .map(|y| st.offsets.iter().map(|o| gy.shift(y, *o)).collect())
                .collect();
            rows.par_iter_mut().enumerate().for_each(|(x, out)| {
                let row = &values[x * ny..(x + 1) * ny];
                *out = vec![vec![0.0; ny]; radii];
                for (y, sh) in shifts.iter().enumerate() {
                    let mut acc = 0.0;
                    let mut r = 0;
                    for (j, src) in sh.iter().enumerate() {
                        while r < radii && st.ends[r] == j {
                            out[r][y] = acc / st.counts[r];
                            r += 1;
                        }
                        if let Some(s) = src {
                            acc += row[*s];
                        }
                    }
                    while r < radii {
                        out[r][y] = acc / st.counts[r];
                        r += 1;
                    }
                }
            });
        }
    }
    (0..radii)
        .map(|r| rows.iter().flat_map(|row| row[r].iter().copied()).collect())
        .collect()
}

fn elementwise_max(grids: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0f64; grids.first().map_or(0, Vec::len)];
    for g in grids {
        for (o, v) in out.iter_mut().zip(g) {
            *o = o.max(*v);
        }
    }
    out
}

fn group_maximal(values: &[f64], grid: &ProductGrid, which: Group, w: &WindowFamily) -> Vec<f64> {
    let st = Stencil::new(&grid.group(which), w.radii(which));
    elementwise_max(&window_averages(values, grid, which, &st))
}

/// Strong maximal function: the largest product-window average at each cell.
pub fn strong_maximal(f: &GridFunction, w: &WindowFamily) -> GridFunction {
    let grid = f.grid();
    let sx = Stencil::new(&grid.x_group(), w.x_radii());
    let sy = Stencil::new(&grid.y_group(), w.y_radii());
    let by_lambda = window_averages(f.values(), grid, Group::Y, &sy);
    let maxima: Vec<Vec<f64>> = by_lambda
        .iter()
        .map(|a| elementwise_max(&window_averages(a, grid, Group::X, &sx)))
        .collect();
    GridFunction::from_raw(*grid, elementwise_max(&maxima))
}

/// Reference path for [`strong_maximal`]: every product window summed cell
/// by cell. Quadratically slower; used for benchmarking and cross-checks.
pub fn strong_maximal_naive(f: &GridFunction, w: &WindowFamily) -> GridFunction {
    let grid = *f.grid();
    let gx = grid.x_group();
    let gy = grid.y_group();
    let ny = gy.len();
    let sx = Stencil::new(&gx, w.x_radii());
    let sy = Stencil::new(&gy, w.y_radii());
    let vals = f.values();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.point_at(i);
            let mut best = 0.0f64;
            for (rx, &ex) in sx.ends.iter().enumerate() {
                for (ry, &ey) in sy.ends.iter().enumerate() {
                    let mut sum = 0.0;
                    for ox in &sx.offsets[..ex] {
                        let Some(x) = gx.shift(p.x, *ox) else { continue };
                        for oy in &sy.offsets[..ey] {
                            if let Some(y) = gy.shift(p.y, *oy) {
                                sum += vals[x * ny + y];
                            }
                        }
                    }
                    best = best.max(sum / (sx.counts[rx] * sy.counts[ry]));
                }
            }
            best
        })
        .collect();
    GridFunction::from_raw(grid, out)
}

/// `M1`: maximal averages over x-windows with y frozen.
pub fn partial_maximal_x(f: &GridFunction, w: &WindowFamily) -> GridFunction {
    GridFunction::from_raw(*f.grid(), group_maximal(f.values(), f.grid(), Group::X, w))
}

/// `M2`: maximal averages over y-windows with x frozen.
pub fn partial_maximal_y(f: &GridFunction, w: &WindowFamily) -> GridFunction {
    GridFunction::from_raw(*f.grid(), group_maximal(f.values(), f.grid(), Group::Y, w))
}

#[derive(Clone, Debug)]
pub struct CompositionReport {
    /// Largest `M f / M1 (M2 f)` over the grid; `0/0` counts as 0.
    pub max_ratio: f64,
    pub worst: GridPoint,
    pub strong: GridFunction,
    pub iterated: GridFunction,
}

impl CompositionReport {
    pub fn ratio_at(&self, point: GridPoint) -> f64 {
        ratio(self.strong.get(point), self.iterated.get(point))
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Compares `M f` against `M1 (M2 f)` at every cell.
pub fn composition_check(f: &GridFunction, w: &WindowFamily) -> CompositionReport {
    let strong = strong_maximal(f, w);
    let iterated = partial_maximal_x(&partial_maximal_y(f, w), w);
    let (worst, max_ratio) = strong
        .values()
        .iter()
        .zip(iterated.values())
        .map(|(a, b)| ratio(*a, *b))
        .enumerate()
        .fold((0, 0.0f64), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    CompositionReport {
        max_ratio,
        worst: f.grid().point_at(worst),
        strong,
        iterated,
    }
}

/// Partial maximal functions and their slice norms, the ingredients of `G f`.
#[derive(Clone, Debug)]
pub struct MixedNorms {
    pub m1: GridFunction,
    pub m2: GridFunction,
    /// `||M1 f(x, .)||_p` per x-cell.
    pub n1: Vec<f64>,
    /// `||M2 f(., y)||_p` per y-cell.
    pub n2: Vec<f64>,
}

impl MixedNorms {
    pub fn compute(f: &GridFunction, p: f64, w: &WindowFamily) -> Result<Self> {
        let m1 = partial_maximal_x(f, w);
        let m2 = partial_maximal_y(f, w);
        let n1 = m1.slice_norms_x(p)?;
        let n2 = m2.slice_norms_y(p)?;
        Ok(Self { m1, m2, n1, n2 })
    }

    pub fn g_at(&self, point: GridPoint) -> f64 {
        self.n1[point.x] * self.n2[point.y]
    }

    pub fn g_function(&self) -> GridFunction {
        let grid = *self.m1.grid();
        let values = self
            .n1
            .iter()
            .flat_map(|a| self.n2.iter().map(move |b| a * b))
            .collect();
        GridFunction::from_raw(grid, values)
    }
}

/// `G f (x, y) = ||M1 f(x, .)||_p ||M2 f(., y)||_p`.
pub fn g_function(f: &GridFunction, exps: &Exponents, w: &WindowFamily) -> Result<GridFunction> {
    Ok(MixedNorms::compute(f, exps.p(), w)?.g_function())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GNormReport {
    pub g_norm: f64,
    pub m1_norm: f64,
    pub m2_norm: f64,
    /// `| ||G||_p - ||M1 f||_p ||M2 f||_p |` relative to the product.
    pub fubini_residual: f64,
    pub f_norm: f64,
    /// `||G f||_p / ||f||_p^2`, zero for `f = 0`.
    pub ratio: f64,
}

/// Measures `||G f||_p` against `||f||_p^2` with dyadic windows.
pub fn g_norm_bound(f: &GridFunction, exps: &Exponents) -> Result<GNormReport> {
    let p = exps.p();
    let w = WindowFamily::dyadic(f.grid());
    let mixed = MixedNorms::compute(f, p, &w)?;
    let g_norm = mixed.g_function().lp_norm(p)?;
    let m1_norm = mixed.m1.lp_norm(p)?;
    let m2_norm = mixed.m2.lp_norm(p)?;
    let product = m1_norm * m2_norm;
    let fubini_residual = if product == 0.0 {
        g_norm
    } else {
        (g_norm - product).abs() / product
    };
    let f_norm = f.lp_norm(p)?;
    let ratio = if f_norm == 0.0 { 0.0 } else { g_norm / (f_norm * f_norm) };
    Ok(GNormReport {
        g_norm,
        m1_norm,
        m2_norm,
        fubini_residual,
        f_norm,
        ratio,
    })
}
