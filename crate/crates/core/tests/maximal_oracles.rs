mod common;

use common::{random_function, rel, rng};
use hls_core::kernel::Exponents;
use hls_core::maximal::{strong_maximal_naive, MixedNorms};
use hls_core::{
    composition_check, g_function, g_norm_bound, partial_maximal_x, partial_maximal_y, strong_maximal,
    GridFunction, GridPoint, ProductGrid, WindowFamily,
};
use proptest::prelude::*;

/// Integer cell coordinates of a flat group index.
fn cell(i: usize, dim: usize, n: usize) -> Vec<i64> {
    if dim == 1 {
        vec![i as i64]
    } else {
        vec![(i / n) as i64, (i % n) as i64]
    }
}

fn dist2(a: &[i64], b: &[i64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| ((u - v) * (u - v)) as f64).sum()
}

/// Lattice points of `Z^dim` strictly inside the ball of radius `r / h`.
fn lattice_count(dim: usize, rh: f64) -> f64 {
    let b = rh.ceil() as i64;
    let mut count = 0;
    for a in -b..=b {
        if dim == 1 {
            count += ((a * a) as f64 <= rh * rh - 1e-9) as usize;
        } else {
            for c in -b..=b {
                count += (((a * a + c * c) as f64) < rh * rh - 1e-9) as usize;
            }
        }
    }
    count as f64
}

/// Max over window pairs of the window sum divided by the unclipped counts;
/// `use_x` / `use_y` freeze the other group to the single cell.
fn brute_maximal(f: &GridFunction, w: &WindowFamily, use_x: bool, use_y: bool) -> Vec<f64> {
    let g = f.grid();
    let n = g.points_per_axis();
    let h = g.spacing();
    let (m, d2) = (g.m(), g.n());
    let (sx, sy) = (n.pow(m as u32), n.pow(d2 as u32));
    let xr: Vec<f64> = if use_x { w.x_radii().to_vec() } else { vec![h] };
    let yr: Vec<f64> = if use_y { w.y_radii().to_vec() } else { vec![h] };
    let mut out = vec![0.0; g.len()];
    for ix in 0..sx {
        let cx = cell(ix, m, n);
        for iy in 0..sy {
            let cy = cell(iy, d2, n);
            let mut best = 0.0f64;
            for rx in &xr {
                let lx = (rx / h) * (rx / h);
                for ry in &yr {
                    let ly = (ry / h) * (ry / h);
                    let mut sum = 0.0;
                    for jx in 0..sx {
                        if dist2(&cell(jx, m, n), &cx) >= lx - 1e-9 {
                            continue;
                        }
                        for jy in 0..sy {
                            if dist2(&cell(jy, d2, n), &cy) < ly - 1e-9 {
                                sum += f.values()[jx * sy + jy];
                            }
                        }
                    }
                    let avg = sum / (lattice_count(m, rx / h) * lattice_count(d2, ry / h));
                    best = best.max(avg);
                }
            }
            out[ix * sy + iy] = best;
        }
    }
    out
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    for (u, v) in a.iter().zip(b) {
        assert!(rel(*u, *v) <= tol, "{u} vs {v}");
    }
}

#[test]
fn strong_maximal_matches_brute_force() {
    let mut r = rng(11);
    for (m, n, big_n) in [(1, 1, 8), (2, 1, 4), (1, 2, 4), (2, 2, 4)] {
        let g = ProductGrid::new(m, n, 1.0, big_n).unwrap();
        let f = random_function(g, &mut r);
        let w = WindowFamily::dyadic(&g);
        let oracle = brute_maximal(&f, &w, true, true);
        assert_close(strong_maximal(&f, &w).values(), &oracle, 1e-12);
        assert_close(strong_maximal_naive(&f, &w).values(), &oracle, 1e-12);
    }
}

#[test]
fn partial_maximal_matches_brute_force() {
    let g = ProductGrid::new(1, 1, 1.0, 16).unwrap();
    let f = random_function(g, &mut rng(12));
    let w = WindowFamily::dyadic(&g);
    assert_close(partial_maximal_x(&f, &w).values(), &brute_maximal(&f, &w, true, false), 1e-12);
    assert_close(partial_maximal_y(&f, &w).values(), &brute_maximal(&f, &w, false, true), 1e-12);
    let g = ProductGrid::new(2, 1, 1.0, 6).unwrap();
    let f = random_function(g, &mut rng(13));
    let w = WindowFamily::new(vec![0.2, 0.5, 0.9], vec![0.1, 0.7]).unwrap();
    assert_close(partial_maximal_x(&f, &w).values(), &brute_maximal(&f, &w, true, false), 1e-12);
}

#[test]
fn spike_seen_from_a_distance() {
    // the first dyadic window reaching d cells away has 2^(k+1) - 1 cells
    let g = ProductGrid::new(1, 1, 1.0, 16).unwrap();
    let spike = GridPoint { x: 3, y: 9 };
    let mut v = vec![0.0; g.len()];
    v[g.index(spike)] = 1.0;
    let f = GridFunction::new(g, v).unwrap();
    let mf = strong_maximal(&f, &WindowFamily::dyadic(&g));
    for d in 1..=12usize {
        let k = (0..).find(|k| 1usize << k > d).unwrap();
        let expected = 1.0 / ((1usize << (k + 1)) - 1) as f64;
        assert!(rel(mf.get(GridPoint { x: 3 + d, y: 9 }), expected) <= 1e-14, "d={d}");
    }
}

#[test]
fn single_cell_window_dominates() {
    let g = ProductGrid::new(1, 2, 1.0, 8).unwrap();
    let f = random_function(g, &mut rng(14));
    let w = WindowFamily::dyadic(&g);
    for mf in [strong_maximal(&f, &w), partial_maximal_x(&f, &w), partial_maximal_y(&f, &w)] {
        assert!(mf.values().iter().zip(f.values()).all(|(a, b)| a >= b));
    }
}

#[test]
fn g_is_quadratically_homogeneous() {
    let g = ProductGrid::new(1, 1, 1.0, 16).unwrap();
    let e = Exponents::balanced(1, 1, 0.5, 4.0 / 3.0).unwrap();
    let w = WindowFamily::dyadic(&g);
    let f = random_function(g, &mut rng(15));
    let base = g_function(&f, &e, &w).unwrap();
    let scaled = g_function(&f.scaled(3.0).unwrap(), &e, &w).unwrap();
    for (a, b) in scaled.values().iter().zip(base.values()) {
        assert!(rel(*a, 9.0 * b) <= 1e-12);
    }
}

/// One-dimensional dyadic maximal function by direct window averages.
fn maximal_1d(a: &[f64]) -> Vec<f64> {
    let n = a.len() as i64;
    (0..n)
        .map(|i| {
            let mut best = 0.0f64;
            let mut k = 0;
            loop {
                let r = 1i64 << k;
                let sum: f64 = (i - r + 1..i + r).filter(|j| (0..n).contains(j)).map(|j| a[j as usize]).sum();
                best = best.max(sum / (2 * r - 1) as f64);
                if r >= n {
                    break;
                }
                k += 1;
            }
            best
        })
        .collect()
}

fn norm_1d(a: &[f64], p: f64, h: f64) -> f64 {
    a.iter().map(|v| v.powf(p) * h).sum::<f64>().powf(1.0 / p)
}

#[test]
fn tensor_g_factorizes() {
    let g = ProductGrid::new(1, 1, 1.0, 32).unwrap();
    let h = g.spacing();
    let p = 4.0 / 3.0;
    let mut r = rng(16);
    let a: Vec<f64> = (0..32).map(|_| rand::Rng::gen::<f64>(&mut r)).collect();
    let b: Vec<f64> = (0..32).map(|_| rand::Rng::gen::<f64>(&mut r)).collect();
    let f = GridFunction::tensor(g, &a, &b).unwrap();
    let mixed = MixedNorms::compute(&f, p, &WindowFamily::dyadic(&g)).unwrap();
    let (ma, mb) = (maximal_1d(&a), maximal_1d(&b));
    let (na, nb) = (norm_1d(&a, p, h), norm_1d(&b, p, h));
    for x in 0..32 {
        for y in 0..32 {
            let expected = ma[x] * nb * na * mb[y];
            assert!(rel(mixed.g_at(GridPoint { x, y }), expected) <= 1e-12);
        }
    }
}

// ||G f||_p / ||f||_p^2 for the indicator of [-1/4, 1/4]^2 on N = 64, p = 4/3
const PINNED_TENSOR_G_RATIO: f64 = 1.9003383139154792;

#[test]
fn tensor_indicator_g_ratio() {
    let g = ProductGrid::new(1, 1, 1.0, 64).unwrap();
    let h = g.spacing();
    let p = 4.0 / 3.0;
    let e = Exponents::balanced(1, 1, 0.5, p).unwrap();
    let a: Vec<f64> = (0..64)
        .map(|i| if ((i as f64 + 0.5) * h - 1.0).abs() <= 0.25 { 1.0 } else { 0.0 })
        .collect();
    let f = GridFunction::tensor(g, &a, &a).unwrap();
    let one_d = norm_1d(&maximal_1d(&a), p, h) / norm_1d(&a, p, h);
    let report = g_norm_bound(&f, &e).unwrap();
    assert!(rel(report.ratio, one_d * one_d) <= 1e-12);
    assert!(report.fubini_residual <= 1e-10);
    assert!(rel(report.ratio, PINNED_TENSOR_G_RATIO) <= 1e-12);
}

#[test]
fn fubini_on_random_functions() {
    let e = Exponents::balanced(1, 1, 0.5, 4.0 / 3.0).unwrap();
    let mut r = rng(17);
    for n in [8, 16, 32] {
        let g = ProductGrid::new(1, 1, 1.0, n).unwrap();
        let f = random_function(g, &mut r);
        assert!(g_norm_bound(&f, &e).unwrap().fubini_residual <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_is_below_the_iterated_maximal(
        seed in 0u64..10_000,
        dims in prop_oneof![Just((1usize, 1usize, 16usize)), Just((2, 1, 6)), Just((1, 2, 6))],
    ) {
        let g = ProductGrid::new(dims.0, dims.1, 1.0, dims.2).unwrap();
        let f = random_function(g, &mut rng(seed));
        let report = composition_check(&f, &WindowFamily::dyadic(&g));
        prop_assert!(report.max_ratio <= 1.0 + 1e-12);
    }
}
