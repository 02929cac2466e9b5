#![allow(dead_code)]

use hls_core::{GridFunction, ProductGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_function(grid: ProductGrid, rng: &mut ChaCha8Rng) -> GridFunction {
    let values = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
    GridFunction::new(grid, values).unwrap()
}

/// Cell centers of one group, one coordinate vector per flattened index.
pub fn centers(grid: &ProductGrid, dim: usize) -> Vec<Vec<f64>> {
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let l = grid.half_width();
    let c = |i: usize| (i as f64 + 0.5) * h - l;
    if dim == 1 {
        (0..n).map(|i| vec![c(i)]).collect()
    } else {
        (0..n * n).map(|i| vec![c(i / n), c(i % n)]).collect()
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
