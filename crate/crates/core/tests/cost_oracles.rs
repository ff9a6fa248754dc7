mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use radial_mmot::coulomb::{
    cost_pi, cost_triangle, exact_cost, stationary_points, CriticalKind, RadiiTuple, SolverOptions,
};

use common::rng;
use rand::Rng;

/// Pair term `1/d` of charges at `(ri, ti)` and `(rj, tj)`, with its derivatives in the
/// angle difference.
fn pair(ri: f64, rj: f64, dt: f64) -> (f64, f64, f64) {
    let d2 = ri * ri + rj * rj - 2.0 * ri * rj * dt.cos();
    let d = d2.sqrt();
    let s = ri * rj * dt.sin();
    let d3 = d2 * d;
    let v = 1.0 / d;
    let dv = -s / d3;
    let ddv = -ri * rj * dt.cos() / d3 + 3.0 * s * s / (d3 * d2);
    (v, dv, ddv)
}

/// Potential with the first charge at angle 0, plus gradient and Hessian in (t2, t3).
fn potential(r: [f64; 3], t2: f64, t3: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let (v12, a12, b12) = pair(r[1], r[0], t2);
    let (v13, a13, b13) = pair(r[2], r[0], t3);
    let (v23, a23, b23) = pair(r[1], r[2], t2 - t3);
    let g = [a12 + a23, a13 - a23];
    let h = [[b12 + b23, -b23], [-b23, b13 + b23]];
    (v12 + v13 + v23, g, h)
}

fn newton(r: [f64; 3], mut t: [f64; 2]) -> f64 {
    for _ in 0..100 {
        let (_, g, h) = potential(r, t[0], t[1]);
        if g[0].abs().max(g[1].abs()) < 1e-14 {
            break;
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let dx = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dy = (h[0][0] * g[1] - h[1][0] * g[0]) / det;
        t = [t[0] - dx, t[1] - dy];
    }
    potential(r, t[0], t[1]).0
}

fn grid_values(r: [f64; 3], n: usize) -> Vec<f64> {
    let step = TAU / n as f64;
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = potential(r, i as f64 * step, j as f64 * step).0;
        }
    }
    v
}

/// Grid cells that beat (`sign = 1`) or exceed (`sign = -1`) all eight periodic neighbours.
fn grid_extrema(v: &[f64], n: usize, sign: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = sign * v[i * n + j];
            let strict = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    if di == 0 && dj == 0 {
                        return true;
                    }
                    let a = (i as i64 + di).rem_euclid(n as i64) as usize;
                    let b = (j as i64 + dj).rem_euclid(n as i64) as usize;
                    c < sign * v[a * n + b]
                })
            });
            if strict {
                out.push((i, j));
            }
        }
    }
    out
}

/// Global minimum from a dense grid, every grid local minimum polished by Newton.
fn dense_minimum(r: [f64; 3], n: usize) -> f64 {
    let v = grid_values(r, n);
    let step = TAU / n as f64;
    grid_extrema(&v, n, 1.0)
        .into_iter()
        .map(|(i, j)| newton(r, [i as f64 * step, j as f64 * step]))
        .fold(f64::INFINITY, f64::min)
}

fn triple(r: [f64; 3]) -> RadiiTuple {
    RadiiTuple::new(&r).unwrap()
}

#[test]
fn far_third_radius_matches_dense_grid_and_collinear_value() {
    let r = [1.0, 3.5, 1000.0];
    let c = exact_cost(&triple(r), &SolverOptions::default())
        .unwrap()
        .value;
    let oracle = dense_minimum(r, 512);
    assert!((c - oracle).abs() <= 1e-10 * oracle, "{c} vs {oracle}");
    let pi = cost_pi(&triple(r)).unwrap();
    assert!((c - pi).abs() <= 1e-10, "{c} vs {pi}");
}

#[test]
fn random_triples_match_dense_grid() {
    let mut g = rng(11);
    let opts = SolverOptions::default();
    for _ in 0..8 {
        let r = [
            g.gen_range(0.5..5.0),
            g.gen_range(0.5..5.0),
            g.gen_range(0.5..5.0),
        ];
        let c = exact_cost(&triple(r), &opts).unwrap().value;
        let oracle = dense_minimum(r, 256);
        assert!(
            (c - oracle).abs() <= 1e-10 * oracle,
            "{r:?}: {c} vs {oracle}"
        );
    }
}

#[test]
fn near_equal_radii_stationary_points_match_grid_classification() {
    let r = [1.0, 1.1, 1.2];
    let n = 1024;
    let v = grid_values(r, n);
    let grid_min = grid_extrema(&v, n, 1.0);
    let grid_max = grid_extrema(&v, n, -1.0);

    let pts = stationary_points(&triple(r), &SolverOptions::default()).unwrap();
    let count = |k: CriticalKind| pts.iter().filter(|p| p.kind == k).count();
    assert_eq!(count(CriticalKind::Minimum), grid_min.len(), "{pts:?}");
    assert_eq!(count(CriticalKind::Maximum), grid_max.len(), "{pts:?}");
    assert_eq!(count(CriticalKind::Degenerate), 0);
    // Euler characteristic of the torus.
    assert_eq!(count(CriticalKind::Saddle), grid_min.len() + grid_max.len());

    let mut grid_vals: Vec<f64> = grid_min.iter().map(|&(i, j)| v[i * n + j]).collect();
    let mut vals: Vec<f64> = pts
        .iter()
        .filter(|p| p.kind == CriticalKind::Minimum)
        .map(|p| p.value)
        .collect();
    grid_vals.sort_by(f64::total_cmp);
    vals.sort_by(f64::total_cmp);
    for (a, b) in vals.iter().zip(&grid_vals) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        assert!(a <= b);
    }
}

#[test]
fn triangle_value_exceeds_exact_cost_for_near_equal_radii() {
    let r = triple([1.0, 1.01, 1.02]);
    let c = exact_cost(&r, &SolverOptions::default()).unwrap().value;
    let t = cost_triangle(&r).unwrap();
    assert!(t > c, "{t} vs {c}");
    assert!(t - c < 1e-3);
}

#[test]
fn equal_radius_scaling() {
    let opts = SolverOptions::default();
    let one = exact_cost(&triple([1.0; 3]), &opts).unwrap().value;
    assert!((one - 3f64.sqrt()).abs() < 1e-12);
    let two = exact_cost(&triple([2.0; 3]), &opts).unwrap().value;
    assert!((two - 3f64.sqrt() / 2.0).abs() < 1e-12);
    let tilted = potential([1.0; 3], 2.0 * PI / 3.0, -2.0 * PI / 3.0).0;
    assert!((tilted - one).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frozen_angle_costs_bound_the_exact_cost(
        a in 0.2f64..20.0, b in 0.2f64..20.0, c in 0.2f64..20.0,
    ) {
        let r = triple([a, b, c]);
        let opts = SolverOptions::default();
        let found = exact_cost(&r, &opts).unwrap();
        let exact = found.value;
        let slack = 1e-10 * (1.0 + exact);
        prop_assert!(cost_pi(&r).unwrap() >= exact - slack);
        prop_assert!(cost_triangle(&r).unwrap() >= exact - slack);
        let t = found.argmin_angles.as_slice();
        let (v, g, _) = potential([a, b, c], t[0], t[1]);
        prop_assert!((v - exact).abs() <= 1e-12 * (1.0 + exact));
        prop_assert!(g[0].abs().max(g[1].abs()) <= 1e-9 * exact.max(1.0));
    }
}
