//! The product Riesz kernel `|x|^(alpha-m) |y|^(beta-n)` and dyadic
//! layer-cake approximations of radial power profiles.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::grid::{AxisGroup, GridFunction, ProductGrid};

/// Tolerance for the exponent balance `1/p - 1/q = alpha/m = beta/n`.
pub const BALANCE_TOLERANCE: f64 = 1e-12;

/// Default number of dyadic levels in a [`LayerCake`].
pub const DEFAULT_DEPTH: usize = 40;

/// The first condition an exponent tuple fails.
#[derive(Clone, Debug, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "condition")]
pub enum ExponentViolation {
    #[error("alpha={alpha} must lie in (0, m={m})")]
    AlphaRange { alpha: f64, m: usize },
    #[error("beta={beta} must lie in (0, n={n})")]
    BetaRange { beta: f64, n: usize },
    #[error("p={p} must exceed 1")]
    PRange { p: f64 },
    #[error("q={q} must be finite and exceed p={p}")]
    QRange { p: f64, q: f64 },
    #[error("unbalanced: 1/p-1/q={gap}, alpha/m={alpha_over_m}, beta/n={beta_over_n}")]
    Unbalanced {
        gap: f64,
        alpha_over_m: f64,
        beta_over_n: f64,
    },
    #[error("kernel tail in the x-group is not in L^p' (need m - alpha p > 0, got {margin})")]
    TailX { margin: f64 },
    #[error("kernel tail in the y-group is not in L^p' (need n - beta p > 0, got {margin})")]
    TailY { margin: f64 },
}

/// The exponent tuple `(m, n, alpha, beta, p, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    m: usize,
    n: usize,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
}

impl Exponents {
    pub fn new(m: usize, n: usize, alpha: f64, beta: f64, p: f64, q: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidGrid(format!(
                "group dimensions must be positive, got m={m}, n={n}"
            )));
        }
        if !(alpha > 0.0 && alpha < m as f64) {
            return Err(ExponentViolation::AlphaRange { alpha, m }.into());
        }
        if !(beta > 0.0 && beta < n as f64) {
            return Err(ExponentViolation::BetaRange { beta, n }.into());
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(ExponentViolation::PRange { p }.into());
        }
        if !(q > p && q.is_finite()) {
            return Err(ExponentViolation::QRange { p, q }.into());
        }
        Ok(Self {
            m,
            n,
            alpha,
            beta,
            p,
            q,
        })
    }

    /// Balanced tuple: `beta = n alpha / m` and `1/q = 1/p - alpha/m`.
    pub fn balanced(m: usize, n: usize, alpha: f64, p: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidGrid(format!(
                "group dimensions must be positive, got m={m}, n={n}"
            )));
        }
        let theta = alpha / m as f64;
        let inv_q = 1.0 / p - theta;
        let q = if inv_q > 0.0 { 1.0 / inv_q } else { f64::INFINITY };
        Self::new(m, n, alpha, theta * n as f64, p, q)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Hölder conjugate `p/(p-1)`.
    pub fn dual_p(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `1/p - 1/q`.
    pub fn gap(&self) -> f64 {
        1.0 / self.p - 1.0 / self.q
    }

    pub fn is_balanced(&self) -> bool {
        let theta_x = self.alpha / self.m as f64;
        let theta_y = self.beta / self.n as f64;
        (self.gap() - theta_x).abs() <= BALANCE_TOLERANCE
            && (theta_x - theta_y).abs() <= BALANCE_TOLERANCE
    }

    /// Log-log slope of `||f_s * Omega||_q / ||f_s||_p` under `x -> s x`.
    pub fn x_dilation_slope(&self) -> f64 {
        self.m as f64 * self.gap() - self.alpha
    }

    /// Same for `y -> t y`.
    pub fn y_dilation_slope(&self) -> f64 {
        self.n as f64 * self.gap() - self.beta
    }
}

/// Surface measure of the unit sphere in `R^dim`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Lebesgue measure of the ball of radius `r` in `R^dim`.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    unit_sphere_area(dim) / dim as f64 * r.powi(dim as i32)
}

/// `int_{|u| <= r} |u|^(exponent - dim) du`, finite for `exponent > 0`.
pub fn inner_power_integral(dim: usize, exponent: f64, r: f64) -> f64 {
    unit_sphere_area(dim) * r.powf(exponent) / exponent
}

/// `int_{|u| > r} |u|^(-decay) du`, finite for `decay > dim`.
pub fn tail_power_integral(dim: usize, decay: f64, r: f64) -> f64 {
    let excess = decay - dim as f64;
    unit_sphere_area(dim) * r.powf(-excess) / excess
}

/// One factor `|u|^(exponent - dim)` of the product kernel.
#[inline]
pub fn riesz_factor(radius: f64, dim: usize, exponent: f64) -> f64 {
    radius.powf(exponent - dim as f64)
}

pub(crate) fn group_factor(group: &AxisGroup, exponent: f64) -> Vec<f64> {
    (0..group.len())
        .map(|i| riesz_factor(group.radius(i), group.dim(), exponent))
        .collect()
}

/// The x-group and y-group factors of the kernel at every cell center.
pub fn riesz_factors(grid: &ProductGrid, exps: &Exponents) -> Result<(Vec<f64>, Vec<f64>)> {
    if grid.m() != exps.m() || grid.n() != exps.n() {
        return Err(Error::GridMismatch);
    }
    Ok((
        group_factor(&grid.x_group(), exps.alpha()),
        group_factor(&grid.y_group(), exps.beta()),
    ))
}

/// `Omega(x, y) = |x|^(alpha-m) |y|^(beta-n)` sampled at cell centers.
pub fn riesz_kernel(grid: &ProductGrid, exps: &Exponents) -> Result<GridFunction> {
    let (kx, ky) = riesz_factors(grid, exps)?;
    GridFunction::tensor(*grid, &kx, &ky)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub coefficient: f64,
    pub radius: f64,
}

/// Step function `sum_j a_j 1_{B(r_j)}` approximating `r^(exponent - dim)`
/// on `(R 2^-depth, R]` with origin-centered balls of dyadic radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCake {
    dim: usize,
    exponent: f64,
    truncation_radius: f64,
    levels: Vec<Level>,
}

/// Builds the dyadic layer cake of `r^(exponent - dim)` up to radius `radius`.
///
/// Level `j` (1-based) is the ball of radius `R 2^-(j-1)` with height
/// `profile(R 2^-j) - profile(R 2^-(j-1))`, and `profile(R/2)` for `j = 1`, so
/// the partial sums equal the profile at the inner edge of each annulus.
pub fn layer_cake(exponent: f64, dim: usize, radius: f64, depth: usize) -> Result<LayerCake> {
    if !(1..=4).contains(&dim) {
        return Err(Error::InvalidLayerCake(format!("dimension {dim} unsupported")));
    }
    if !(exponent > 0.0 && exponent < dim as f64) {
        return Err(Error::InvalidLayerCake(format!(
            "profile exponent {exponent} must lie in (0, {dim})"
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidLayerCake(format!("radius {radius} must be positive")));
    }
    if depth == 0 {
        return Err(Error::InvalidLayerCake("depth must be at least 1".into()));
    }
    let profile = |r: f64| riesz_factor(r, dim, exponent);
    let mut levels = Vec::with_capacity(depth);
    let mut outer = radius;
    for j in 1..=depth {
        let inner = radius * 0.5f64.powi(j as i32);
        let coefficient = if j == 1 {
            profile(inner)
        } else {
            profile(inner) - profile(outer)
        };
        levels.push(Level {
            coefficient,
            radius: outer,
        });
        outer = inner;
    }
    Ok(LayerCake {
        dim,
        exponent,
        truncation_radius: radius,
        levels,
    })
}

impl LayerCake {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    /// Radius below which the step function is no longer an envelope.
    pub fn core_radius(&self) -> f64 {
        self.truncation_radius * 0.5f64.powi(self.levels.len() as i32)
    }

    pub fn profile(&self, r: f64) -> f64 {
        riesz_factor(r, self.dim, self.exponent)
    }

    /// Value of the step function at radius `r` (balls are closed).
    pub fn step(&self, r: f64) -> f64 {
        self.levels
            .iter()
            .take_while(|l| r <= l.radius)
            .map(|l| l.coefficient)
            .sum()
    }

    /// `sum_j a_j |B_j|`.
    pub fn ball_sum(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.coefficient * ball_volume(self.dim, l.radius))
            .sum()
    }

    /// `int_{|u| <= R} profile`.
    pub fn profile_integral(&self) -> f64 {
        inner_power_integral(self.dim, self.exponent, self.truncation_radius)
    }

    /// Ratio between consecutive annulus heights, `2^(dim - exponent)`.
    pub fn envelope_factor(&self) -> f64 {
        2f64.powf(self.dim as f64 - self.exponent)
    }
}

impl fmt::Display for LayerCake {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LayerCake(dim={}, exponent={}, R={}, depth={})",
            self.dim,
            self.exponent,
            self.truncation_radius,
            self.levels.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_ranges() {
        assert!(Exponents::new(1, 1, 0.5, 0.5, 4.0 / 3.0, 4.0).is_ok());
        assert!(matches!(
            Exponents::new(1, 1, 1.0, 0.5, 2.0, 4.0),
            Err(Error::Exponents(ExponentViolation::AlphaRange { .. }))
        ));
        assert!(matches!(
            Exponents::new(1, 1, 0.5, 0.0, 2.0, 4.0),
            Err(Error::Exponents(ExponentViolation::BetaRange { .. }))
        ));
        assert!(matches!(
            Exponents::new(1, 1, 0.5, 0.5, 1.0, 4.0),
            Err(Error::Exponents(ExponentViolation::PRange { .. }))
        ));
        assert!(matches!(
            Exponents::new(1, 1, 0.5, 0.5, 2.0, 2.0),
            Err(Error::Exponents(ExponentViolation::QRange { .. }))
        ));
    }

    #[test]
    fn balanced_derives_q() {
        let e = Exponents::balanced(1, 1, 0.5, 4.0 / 3.0).unwrap();
        assert!((e.q() - 4.0).abs() < 1e-12);
        assert!(e.is_balanced());
        let e = Exponents::balanced(2, 1, 1.0, 1.5).unwrap();
        assert!((e.q() - 6.0).abs() < 1e-12);
        assert_eq!(e.beta(), 0.5);
        // alpha/m >= 1/p leaves no finite q
        assert!(Exponents::balanced(1, 1, 0.8, 2.0).is_err());
    }

    #[test]
    fn dilation_slopes() {
        let e = Exponents::new(1, 1, 0.7, 0.5, 4.0 / 3.0, 4.0).unwrap();
        assert!(!e.is_balanced());
        assert!((e.x_dilation_slope() + 0.2).abs() < 1e-12);
        assert!(e.y_dilation_slope().abs() < 1e-12);
    }

    #[test]
    fn kernel_at_unit_radii() {
        // h = 2/3, centers at -1, -1/3, 1/3, 1
        let g = ProductGrid::new(1, 1, 4.0 / 3.0, 4).unwrap();
        for (a, b) in [(0.5, 0.5), (0.25, 0.9)] {
            let e = Exponents::new(1, 1, a, b, 1.1, 100.0).unwrap();
            let k = riesz_kernel(&g, &e).unwrap();
            let p = g.point(&[3], &[3]).unwrap();
            assert!((k.get(p) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_direct_value() {
        let g = ProductGrid::new(1, 1, 1.0, 4).unwrap();
        let e = Exponents::balanced(1, 1, 0.5, 4.0 / 3.0).unwrap();
        let k = riesz_kernel(&g, &e).unwrap();
        let p = g.locate(&[0.25], &[0.25]).unwrap();
        assert!((k.get(p) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_power_law_homogeneity() {
        // 3 (k + 1/2) h = (3k + 1 + 1/2) h keeps cell centers on cell centers
        let g = ProductGrid::new(1, 1, 1.0, 32).unwrap();
        let e = Exponents::balanced(1, 1, 0.5, 4.0 / 3.0).unwrap();
        let k = riesz_kernel(&g, &e).unwrap();
        let s: f64 = 3.0;
        for kx in 0..5usize {
            let src = g.point(&[16 + kx], &[20]).unwrap();
            let dst = g.point(&[16 + 3 * kx + 1], &[20]).unwrap();
            let expected = s.powf(-(1.0 - e.alpha())) * k.get(src);
            assert!((k.get(dst) - expected).abs() <= 1e-13 * expected);
        }
    }

    #[test]
    fn kernel_is_separable() {
        let g = ProductGrid::new(2, 1, 1.0, 8).unwrap();
        let e = Exponents::balanced(2, 1, 1.0, 1.5).unwrap();
        let k = riesz_kernel(&g, &e).unwrap();
        let (kx, ky) = riesz_factors(&g, &e).unwrap();
        let ny = ky.len();
        for (i, v) in k.values().iter().enumerate() {
            assert_eq!(*v, kx[i / ny] * ky[i % ny]);
        }
        let wrong = Exponents::balanced(1, 1, 0.5, 1.5).unwrap();
        assert!(matches!(riesz_kernel(&g, &wrong), Err(Error::GridMismatch)));
    }

    #[test]
    fn layer_cake_rejects_degenerate_profiles() {
        assert!(layer_cake(1.0, 1, 1.0, 10).is_err());
        assert!(layer_cake(0.0, 1, 1.0, 10).is_err());
        assert!(layer_cake(0.5, 1, 1.0, 0).is_err());
        assert!(layer_cake(0.5, 1, -1.0, 10).is_err());
    }

    #[test]
    fn layer_cake_radii_halve() {
        let lc = layer_cake(0.5, 1, 3.0, 12).unwrap();
        assert_eq!(lc.levels()[0].radius, 3.0);
        for w in lc.levels().windows(2) {
            assert_eq!(w[1].radius, w[0].radius / 2.0);
        }
        assert!(lc.levels().iter().all(|l| l.coefficient > 0.0));
    }
}
