mod common;

use radial_mmot::coulomb::{ExactCost, SolverOptions};
use radial_mmot::kantorovich::{compare, cost_tensor, solve_mmot, AtomGrid, CostTensor};
use radial_mmot::measures::{Pattern, RadialMeasure};
use radial_mmot::report::{self, Report};

use common::rng;
use rand::Rng;

const N: usize = 3;
const CELLS: usize = N * N * N;
/// Marginal rows with one redundant row dropped from the second and third marginals.
const ROWS: usize = 3 * N - 2;

fn constraint_matrix() -> Vec<[f64; CELLS]> {
    let mut rows = Vec::new();
    for k in 0..3 {
        let atoms = if k == 0 { N } else { N - 1 };
        for a in 0..atoms {
            let mut row = [0.0; CELLS];
            for (lin, v) in row.iter_mut().enumerate() {
                let idx = [lin / (N * N), (lin / N) % N, lin % N];
                if idx[k] == a {
                    *v = 1.0;
                }
            }
            rows.push(row);
        }
    }
    rows
}

fn solve_square(mut m: [[f64; ROWS]; ROWS], mut b: [f64; ROWS]) -> Option<[f64; ROWS]> {
    for c in 0..ROWS {
        let p = (c..ROWS).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-9 {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in 0..ROWS {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..ROWS {
                    m[r][k] -= f * m[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = [0.0; ROWS];
    for i in 0..ROWS {
        x[i] = b[i] / m[i][i];
    }
    Some(x)
}

/// Minimum of the cost over every basic feasible solution of the marginal polytope.
fn vertex_minimum(cost: &[f64]) -> f64 {
    let a = constraint_matrix();
    let b = [1.0 / N as f64; ROWS];
    let mut best = f64::INFINITY;
    let mut cols: Vec<usize> = (0..ROWS).collect();
    loop {
        let mut m = [[0.0; ROWS]; ROWS];
        for (r, row) in a.iter().enumerate() {
            for (c, &col) in cols.iter().enumerate() {
                m[r][c] = row[col];
            }
        }
        if let Some(x) = solve_square(m, b) {
            if x.iter().all(|v| *v >= -1e-12) {
                let v: f64 = cols.iter().zip(&x).map(|(c, w)| cost[*c] * w).sum();
                best = best.min(v);
            }
        }
        // next combination in lexicographic order
        let Some(i) = (0..ROWS).rev().find(|&i| cols[i] < CELLS - ROWS + i) else {
            return best;
        };
        cols[i] += 1;
        for j in i + 1..ROWS {
            cols[j] = cols[j - 1] + 1;
        }
    }
}

#[test]
fn small_lp_matches_vertex_enumeration() {
    let mut g = rng(5);
    let mut tensors: Vec<CostTensor> = (0..3)
        .map(|_| {
            let data = (0..CELLS).map(|_| g.gen_range(0.0..1.0)).collect();
            CostTensor::from_raw(N, 3, data).unwrap()
        })
        .collect();
    let rho = RadialMeasure::equally_spaced(0.05, 3).unwrap();
    let grid = AtomGrid::discretize(&rho, N).unwrap();
    tensors.push(cost_tensor(&grid, 3, &ExactCost::new(SolverOptions::default())).unwrap());
    for t in &tensors {
        let s = solve_mmot(t).unwrap();
        let oracle = vertex_minimum(t.data());
        assert!(
            (s.value - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()),
            "{} vs {oracle}",
            s.value
        );
        assert!(s.certified());
        assert!(s.plan.marginal_error() < 1e-12);
        assert!((s.plan.cost(t) - s.value).abs() < 1e-12);
    }
}

#[test]
fn lp_value_scales_inversely_with_radii() {
    let rho = RadialMeasure::uniform(1.0, 2.0).unwrap();
    let grid = AtomGrid::discretize(&rho, 6).unwrap();
    let cost = ExactCost::new(SolverOptions::default());
    let base = solve_mmot(&cost_tensor(&grid, 3, &cost).unwrap())
        .unwrap()
        .value;
    for lambda in [0.5, 3.0] {
        let scaled = solve_mmot(&cost_tensor(&grid.scaled(lambda), 3, &cost).unwrap())
            .unwrap()
            .value;
        assert!(
            (scaled * lambda - base).abs() <= 1e-10 * base,
            "{lambda}: {scaled} vs {base}"
        );
    }
}

#[test]
fn equally_spaced_measure_map_plans_never_beat_the_lp() {
    let rho = RadialMeasure::equally_spaced(0.005, 3).unwrap();
    let c = compare(
        &rho,
        12,
        &Pattern::all_cyclical(3),
        &ExactCost::new(SolverOptions::default()),
    )
    .unwrap();
    assert!(c.min_reduced_cost >= -1e-9);
    for r in &c.rows {
        let gap = r.gap.unwrap();
        assert!(gap >= -1e-9, "{}: {gap}", r.pattern);
    }
    let ddi = c.row("DDI").unwrap().gap.unwrap();
    let did = c.row("DID").unwrap().gap.unwrap();
    println!("n = 12: DDI gap {ddi:.3e}, DID gap {did:.3e}");
    assert!(ddi > 0.0);
}

#[test]
fn nearly_concentrated_measure_plans_are_all_optimal() {
    let rho = RadialMeasure::uniform(1.0, 1.0 + 1e-6).unwrap();
    let c = compare(
        &rho,
        6,
        &Pattern::all_cyclical(3),
        &ExactCost::new(SolverOptions::default()),
    )
    .unwrap();
    for r in &c.rows {
        assert!(r.gap.unwrap().abs() <= 1e-6, "{}", r.pattern);
    }
}

#[test]
fn four_marginal_comparison_runs() {
    let rho = RadialMeasure::equally_spaced(0.05, 4).unwrap();
    let c = compare(
        &rho,
        4,
        &Pattern::all_cyclical(4),
        &ExactCost::new(SolverOptions::default()),
    )
    .unwrap();
    assert!(c.rows.iter().any(|r| r.gap.is_some()));
    assert!(c.lp_plan.marginal_error() < 1e-12);
}

#[test]
fn lp_report_artifacts() {
    let rho = RadialMeasure::equally_spaced(0.05, 3).unwrap();
    let pats: Vec<Pattern> = ["DDI", "DID"].iter().map(|s| s.parse().unwrap()).collect();
    let rep = report::lp(&rho, 6, &pats, true, &SolverOptions::default()).unwrap();
    let csv = rep.artifact();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "n,pattern,plan_value,lp_value,gap,lp_on_graph");
    assert_eq!(body.len(), 1 + 2 * 2);
    assert!(body[1].starts_with("6,DDI,") && body[3].starts_with("12,DDI,"));
    assert!(csv.lines().any(|l| l == "# command=lp"));

    let plan = rep.plan_json_lines();
    let mut lines = plan.lines();
    let meta: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(meta["meta"]["command"], "lp");
    assert_eq!(meta["meta"]["params"]["plan_n"], 6);
    let mut mass = 0.0;
    for l in lines {
        let e: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(e["index"].as_array().unwrap().len(), 3);
        mass += e["mass"].as_f64().unwrap();
    }
    assert!((mass - 1.0).abs() < 1e-12);
}
