//! Fractional integration on product spaces `R^m x R^n`: discrete grids, the
//! product Riesz kernel, fast and direct convolution, strong and partial
//! maximal functions, and pointwise Hedberg certificates.

pub mod convolution;
pub mod error;
pub mod grid;
pub mod harness;
pub mod hedberg;
pub mod kernel;
pub mod maximal;

pub use convolution::{convolve_at, convolve_direct, convolve_fast, region_split, RegionBounds};
pub use error::{Error, Result};
pub use grid::{GridFunction, GridPoint, Group, ProductGrid};
pub use hedberg::{certify_point, check_exponents, HedbergCertificate, HedbergContext};
pub use kernel::{layer_cake, riesz_kernel, Exponents, LayerCake};
pub use maximal::{
    composition_check, g_function, g_norm_bound, partial_maximal_x, partial_maximal_y,
    strong_maximal, WindowFamily,
};
