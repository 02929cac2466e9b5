//! Test-function families. Every member is sampled analytically as
//! `f(s x, t y)` at cell centers. Widths are given as fractions of the
//! half-width `L`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, ProductGrid};

fn gaussian_sigma() -> f64 {
    1.0 / 10.0
}

fn box_half_width() -> f64 {
    1.0 / 8.0
}

fn tensor_x_half_width() -> f64 {
    3.0 / 16.0
}

fn tensor_y_half_width() -> f64 {
    3.0 / 32.0
}

fn spike_cells() -> usize {
    8
}

fn random_cell() -> f64 {
    1.0 / 64.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `exp(-(|x|^2 + |y|^2) / (2 sigma^2))`.
    Gaussian {
        #[serde(default = "gaussian_sigma")]
        sigma: f64,
    },
    /// Indicator of the cube `[-w, w]^(m+n)`.
    Box {
        #[serde(default = "box_half_width")]
        half_width: f64,
    },
    /// Indicator of `[-a, a]^m x [-b, b]^n`.
    TensorBox {
        #[serde(default = "tensor_x_half_width")]
        x_half_width: f64,
        #[serde(default = "tensor_y_half_width")]
        y_half_width: f64,
    },
    /// Indicator of the cube `[0, k h]^(m+n)`; a single cell once dilated by `k`.
    Spike {
        #[serde(default = "spike_cells")]
        cells: usize,
    },
    /// Uniform `[0, 1)` values on a cube lattice of side `cell` covering
    /// `[-support, support]^(m+n)`, drawn from the configuration seed.
    Random {
        #[serde(default = "box_half_width")]
        support: f64,
        #[serde(default = "random_cell")]
        cell: f64,
    },
    Zero,
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FamilySpec::Gaussian { .. } => "gaussian",
            FamilySpec::Box { .. } => "box",
            FamilySpec::TensorBox { .. } => "tensor-box",
            FamilySpec::Spike { .. } => "spike",
            FamilySpec::Random { .. } => "random",
            FamilySpec::Zero => "zero",
        };
        f.write_str(name)
    }
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        let widths: Vec<f64> = match self {
            FamilySpec::Gaussian { sigma } => vec![*sigma],
            FamilySpec::Box { half_width } => vec![*half_width],
            FamilySpec::TensorBox {
                x_half_width,
                y_half_width,
            } => vec![*x_half_width, *y_half_width],
            FamilySpec::Spike { cells } => vec![*cells as f64],
            FamilySpec::Random { support, cell } => {
                if cell > support {
                    return Err(Error::Config(format!(
                        "random cell {cell} exceeds support {support}"
                    )));
                }
                vec![*support, *cell]
            }
            FamilySpec::Zero => vec![],
        };
        if widths.iter().all(|w| w.is_finite() && *w > 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!("family {self} needs positive widths")))
        }
    }

    /// The member `f(s x, t y)` on `grid`.
    pub fn sample(&self, grid: &ProductGrid, s: f64, t: f64, seed: u64) -> Result<GridFunction> {
        if !(s > 0.0 && t > 0.0) {
            return Err(Error::InvalidDilation { s, t });
        }
        let l = grid.half_width();
        let h = grid.spacing();
        let scaled = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().map(|v| s * v).chain(y.iter().map(|v| t * v)).collect()
        };
        match *self {
            FamilySpec::Gaussian { sigma } => {
                let two_var = 2.0 * (sigma * l) * (sigma * l);
                GridFunction::from_fn(*grid, |x, y| {
                    let r2: f64 = scaled(x, y).iter().map(|v| v * v).sum();
                    (-r2 / two_var).exp()
                })
            }
            FamilySpec::Box { half_width } => {
                let w = half_width * l;
                GridFunction::from_fn(*grid, |x, y| indicator(scaled(x, y).iter().all(|v| v.abs() <= w)))
            }
            FamilySpec::TensorBox {
                x_half_width,
                y_half_width,
            } => {
                let (a, b) = (x_half_width * l, y_half_width * l);
                GridFunction::from_fn(*grid, |x, y| {
                    let inside = x.iter().all(|v| (s * v).abs() <= a) && y.iter().all(|v| (t * v).abs() <= b);
                    indicator(inside)
                })
            }
            FamilySpec::Spike { cells } => {
                let w = cells as f64 * h;
                GridFunction::from_fn(*grid, |x, y| {
                    indicator(scaled(x, y).iter().all(|v| (0.0..=w).contains(v)))
                })
            }
            FamilySpec::Random { support, cell } => {
                let a = support * l;
                let c = cell * l;
                let side = (2.0 * a / c).ceil() as usize;
                let dims = grid.m() + grid.n();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let table: Vec<f64> = (0..side.pow(dims as u32)).map(|_| rng.gen::<f64>()).collect();
                GridFunction::from_fn(*grid, |x, y| {
                    let mut flat = 0;
                    for v in scaled(x, y) {
                        if !(v >= -a && v < a) {
                            return 0.0;
                        }
                        let k = (((v + a) / c).floor() as usize).min(side - 1);
                        flat = flat * side + k;
                    }
                    table[flat]
                })
            }
            FamilySpec::Zero => Ok(GridFunction::zeros(*grid)),
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// The five families of the default suite with their default widths.
pub fn default_suite() -> Vec<FamilySpec> {
    vec![
        FamilySpec::Gaussian {
            sigma: gaussian_sigma(),
        },
        FamilySpec::Box {
            half_width: box_half_width(),
        },
        FamilySpec::TensorBox {
            x_half_width: tensor_x_half_width(),
            y_half_width: tensor_y_half_width(),
        },
        FamilySpec::Spike { cells: spike_cells() },
        FamilySpec::Random {
            support: box_half_width(),
            cell: random_cell(),
        },
    ]
}
