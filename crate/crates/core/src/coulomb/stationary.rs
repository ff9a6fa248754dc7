use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::solver::{converged, polish};
use super::{evaluate, AngleConfig, RadiiTuple, SolverOptions};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Minimum,
    Saddle,
    Maximum,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub angles: AngleConfig,
    pub value: f64,
    pub kind: CriticalKind,
    pub eigenvalues: Vec<f64>,
}

/// Levenberg-Marquardt on the gradient field; converges to zeros of the gradient of
/// any index, unlike descent.
fn find_zero(r: &[f64], start: &[f64], opts: &SolverOptions) -> Option<Vec<f64>> {
    let dim = start.len();
    let mut theta = start.to_vec();
    let mut e = evaluate(r, &theta, 2).ok()?;
    let h0 = DMatrix::from_fn(dim, dim, |i, j| e.hess[i][j]);
    let mut mu = 1e-6 * (&h0 * &h0).trace() / dim as f64;
    for _ in 0..opts.max_iter {
        if converged(&e, opts.grad_tol) {
            polish(r, &mut theta, &mut e);
            return Some(theta);
        }
        let h = DMatrix::from_fn(dim, dim, |i, j| e.hess[i][j]);
        let g = DVector::from_column_slice(&e.grad[..dim]);
        let lhs = &h * &h + DMatrix::identity(dim, dim) * mu;
        let rhs = &h * &g;
        let mut step = lhs.cholesky()?.solve(&rhs);
        let cap = step.amax();
        if cap > 0.3 {
            step *= 0.3 / cap;
        }
        let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t - s).collect();
        match evaluate(r, &trial, 2) {
            Ok(next) if next.grad_sup() < e.grad_sup() => {
                theta = trial;
                e = next;
                mu /= 3.0;
            }
            _ => {
                mu = (mu * 4.0).max(1e-300);
                if !mu.is_finite() {
                    return None;
                }
            }
        }
    }
    None
}

fn classify(eigen: &[f64]) -> CriticalKind {
    let scale = eigen.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if eigen.iter().any(|l| l.abs() <= 1e-9 * scale) {
        CriticalKind::Degenerate
    } else if eigen.iter().all(|l| *l > 0.0) {
        CriticalKind::Minimum
    } else if eigen.iter().all(|l| *l < 0.0) {
        CriticalKind::Maximum
    } else {
        CriticalKind::Saddle
    }
}

/// All zeros of the angle gradient found from the collinear configurations and a grid of
/// starts (offset by half a cell so no start sits on a coincidence), deduplicated and classified by Hessian
/// eigenvalue signs. Sorted by value.
pub fn stationary_points(r: &RadiiTuple, opts: &SolverOptions) -> Result<Vec<StationaryPoint>> {
    let radii = r.as_slice();
    let dim = radii.len() - 1;
    let side: usize = match radii.len() {
        3 => 48,
        _ => 16,
    };
    // Collinear configurations are always critical but can have tiny basins.
    let axial =
        (0..1usize << dim).map(|bits| (0..dim).map(|d| PI * ((bits >> d) & 1) as f64).collect());
    let grid = (0..side.pow(dim as u32)).map(|lin| {
        let mut rem = lin;
        let mut start = vec![0.0; dim];
        for d in (0..dim).rev() {
            start[d] = TAU * ((rem % side) as f64 + 0.5) / side as f64;
            rem /= side;
        }
        start
    });
    let mut found: Vec<StationaryPoint> = Vec::new();
    for start in axial.chain(grid) {
        let start: Vec<f64> = start;
        let Some(theta) = find_zero(radii, &start, opts) else {
            continue;
        };
        let angles = AngleConfig::new(&theta)?;
        if found
            .iter()
            .any(|p| p.angles.torus_distance(&angles) < opts.dedup_tol)
        {
            continue;
        }
        let e = evaluate(radii, &theta, 2)?;
        let eig = SymmetricEigen::new(DMatrix::from_fn(dim, dim, |i, j| e.hess[i][j]));
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        found.push(StationaryPoint {
            angles,
            value: e.value,
            kind: classify(&eigenvalues),
            eigenvalues,
        });
    }
    if found.is_empty() {
        return Err(Error::ConvergenceFailure {
            tol: opts.grad_tol,
            best: f64::INFINITY,
        });
    }
    found.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(found)
}
