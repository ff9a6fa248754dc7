use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::{evaluate, AngleConfig, PotentialEval, RadiiTuple};
use crate::error::{Error, Result};

/// Settings for the grid-plus-Newton global minimization over the angle torus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Points per torus dimension; `None` picks 64 for three charges and 32 for four.
    pub grid: Option<usize>,
    /// Number of grid local minima refined by Newton.
    pub starts: usize,
    /// Sup-norm gradient tolerance, relative to `max(1, value)`.
    pub grad_tol: f64,
    /// Two stationary points closer than this (radians, sup-norm) are the same point.
    pub dedup_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid: None,
            starts: 8,
            grad_tol: 1e-11,
            dedup_tol: 1e-6,
            max_iter: 200,
        }
    }
}

impl SolverOptions {
    pub fn grid_points(&self, charges: usize) -> usize {
        self.grid.unwrap_or(if charges <= 3 { 64 } else { 32 })
    }

    /// Accuracy claimed for a returned cost value; used to size violation thresholds.
    pub fn tolerance(&self) -> f64 {
        self.grad_tol
    }
}

/// Global minimum of the potential for fixed radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostValue {
    pub value: f64,
    pub argmin_angles: AngleConfig,
    /// Distinct local minima reached from the refined grid cells.
    pub stationary_count: usize,
}

pub(crate) fn converged(e: &PotentialEval, tol: f64) -> bool {
    e.grad_sup() <= tol * e.value.max(1.0)
}

fn hess_matrix(e: &PotentialEval) -> DMatrix<f64> {
    DMatrix::from_fn(e.dim, e.dim, |i, j| e.hess[i][j])
}

fn value_at(r: &[f64], theta: &[f64]) -> f64 {
    evaluate(r, theta, 0)
        .map(|e| e.value)
        .unwrap_or(f64::INFINITY)
}

/// Damped Newton descent with an absolute-eigenvalue Hessian, followed by a few
/// undamped steps to polish the stationary point.
fn newton_minimize(
    r: &[f64],
    start: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, PotentialEval)> {
    let dim = start.len();
    let mut theta = start.to_vec();
    let mut e = evaluate(r, &theta, 2)?;
    for _ in 0..opts.max_iter {
        if converged(&e, opts.grad_tol) {
            break;
        }
        let g = DVector::from_column_slice(&e.grad[..dim]);
        let eig = SymmetricEigen::new(hess_matrix(&e));
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let floor = (lmax * 1e-10).max(1e-300);
        let mut step = DVector::zeros(dim);
        let mut positive = true;
        for k in 0..dim {
            let l = eig.eigenvalues[k];
            if l <= 0.0 {
                positive = false;
            }
            let v = eig.eigenvectors.column(k);
            step -= v * (v.dot(&g) / l.abs().max(floor));
        }
        let cap = step.amax();
        if cap > 0.5 {
            step *= 0.5 / cap;
        }
        let slope = g.dot(&step);
        let near = positive && e.grad_sup() < 1e-6 * e.value.max(1.0);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(t, s)| t + alpha * s)
                .collect();
            let v = value_at(r, &trial);
            if near || v <= e.value + 1e-4 * alpha * slope || alpha < 1e-12 {
                if v.is_finite() {
                    theta = trial;
                }
                break;
            }
            alpha *= 0.5;
        }
        e = evaluate(r, &theta, 2)?;
    }
    if !converged(&e, opts.grad_tol) {
        return Err(Error::ConvergenceFailure {
            tol: opts.grad_tol,
            best: e.grad_sup(),
        });
    }
    polish(r, &mut theta, &mut e);
    Ok((theta, e))
}

/// Up to three plain Newton steps, each kept only if it does not grow the gradient.
pub(crate) fn polish(r: &[f64], theta: &mut Vec<f64>, e: &mut PotentialEval) {
    let dim = theta.len();
    for _ in 0..3 {
        let g = DVector::from_column_slice(&e.grad[..dim]);
        let Some(step) = hess_matrix(e).lu().solve(&g) else {
            return;
        };
        let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t - s).collect();
        match evaluate(r, &trial, 2) {
            Ok(next) if next.grad_sup() <= e.grad_sup() => {
                *theta = trial;
                *e = next;
            }
            _ => return,
        }
    }
}

/// Newton refinement for a caller-chosen starting configuration. Used to follow a
/// particular branch of minimizers rather than the global one.
pub fn refine_stationary(
    r: &RadiiTuple,
    start: &AngleConfig,
    opts: &SolverOptions,
) -> Result<(AngleConfig, f64)> {
    if start.len() + 1 != r.len() {
        return Err(Error::ArityMismatch(r.len() - 1, start.len()));
    }
    let (theta, e) = newton_minimize(r.as_slice(), start.as_slice(), opts)?;
    Ok((AngleConfig::new(&theta)?, e.value))
}

/// Grid cells whose value does not exceed any torus neighbour, ordered by value and
/// then by linear index.
fn grid_local_minima(values: &[f64], side: usize, dim: usize) -> Vec<usize> {
    let offsets: Vec<[usize; 3]> = (0..3usize.pow(dim as u32))
        .filter(|code| *code != (3usize.pow(dim as u32) - 1) / 2)
        .map(|code| {
            let mut o = [0usize; 3];
            let mut c = code;
            for x in o.iter_mut().take(dim) {
                *x = side + c % 3 - 1;
                c /= 3;
            }
            o
        })
        .collect();
    let mut out = Vec::new();
    let mut coords = [0usize; 3];
    for lin in 0..values.len() {
        let v = values[lin];
        if lin > 0 {
            advance(&mut coords[..dim], side);
        }
        if !v.is_finite() {
            continue;
        }
        let is_min = offsets.iter().all(|o| {
            let nb = (0..dim).fold(0usize, |acc, d| {
                let c = coords[d] + o[d];
                acc * side
                    + if c >= 2 * side {
                        c - 2 * side
                    } else if c >= side {
                        c - side
                    } else {
                        c
                    }
            });
            values[nb] >= v
        });
        if is_min {
            out.push(lin);
        }
    }
    out.sort_by(|a, b| values[*a].total_cmp(&values[*b]).then(a.cmp(b)));
    out
}

pub(crate) fn grid_angles(lin: usize, side: usize, dim: usize) -> Vec<f64> {
    let mut theta = vec![0.0; dim];
    let mut rem = lin;
    for d in (0..dim).rev() {
        theta[d] = TAU * (rem % side) as f64 / side as f64;
        rem /= side;
    }
    theta
}

/// Potential on the uniform grid with `side` points per angle, laid out as in
/// [`grid_angles`]. Each pair term only depends on the difference of two grid indices,
/// so one table per pair replaces the trigonometry at every node.
fn grid_values(r: &[f64], side: usize) -> Vec<f64> {
    let n = r.len();
    let dim = n - 1;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let table: Vec<f64> = (0..side)
                .map(|k| value_at(&[r[i], r[j]], &[TAU * k as f64 / side as f64]))
                .collect();
            pairs.push((i, j, table));
        }
    }
    let total = side.pow(dim as u32);
    let mut idx = [0usize; 4];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        let mut v = 0.0;
        for (i, j, t) in &pairs {
            let k = idx[*j] + side - idx[*i];
            v += t[if k >= side { k - side } else { k }];
        }
        out.push(v);
        advance(&mut idx[1..n], side);
    }
    out
}

// Odometer step over grid coordinates, last coordinate fastest.
fn advance(idx: &mut [usize], side: usize) {
    for x in idx.iter_mut().rev() {
        *x += 1;
        if *x < side {
            return;
        }
        *x = 0;
    }
}

/// Reduced cost: global minimum of the potential over all angle placements.
///
/// A uniform grid over the torus is scanned, Newton is started from the lowest
/// `opts.starts` grid local minima, and the smallest converged value is returned.
/// Ties keep the start with the lowest grid index.
pub fn exact_cost(r: &RadiiTuple, opts: &SolverOptions) -> Result<CostValue> {
    let radii = r.as_slice();
    let dim = radii.len() - 1;
    let side = opts.grid_points(radii.len()).max(3);
    let values = grid_values(radii, side);
    let starts = grid_local_minima(&values, side, dim);

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut minima: Vec<AngleConfig> = Vec::new();
    let mut worst_grad = f64::INFINITY;
    for &lin in starts.iter().take(opts.starts.max(1)) {
        match newton_minimize(radii, &grid_angles(lin, side, dim), opts) {
            Ok((theta, e)) => {
                let cfg = AngleConfig::new(&theta)?;
                if !minima
                    .iter()
                    .any(|m| m.torus_distance(&cfg) < opts.dedup_tol)
                {
                    minima.push(cfg);
                }
                if best.as_ref().is_none_or(|(_, v)| e.value < *v) {
                    best = Some((theta, e.value));
                }
            }
            Err(Error::ConvergenceFailure { best, .. }) => worst_grad = worst_grad.min(best),
            Err(other) => return Err(other),
        }
    }
    let (theta, value) = best.ok_or(Error::ConvergenceFailure {
        tol: opts.grad_tol,
        best: worst_grad,
    })?;
    Ok(CostValue {
        value,
        argmin_angles: AngleConfig::new(&theta)?,
        stationary_count: minima.len(),
    })
}
