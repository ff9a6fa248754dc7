use nalgebra::DMatrix;

use super::{AngleConfig, RadiiTuple, COINCIDENCE_THRESHOLD};
use crate::error::{Error, Result};

/// Value, angle gradient and angle Hessian of the potential at one configuration.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PotentialEval {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
    pub dim: usize,
}

impl PotentialEval {
    pub fn grad_sup(&self) -> f64 {
        self.grad[..self.dim]
            .iter()
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Evaluate the potential and, for `order >= 1`, its angle derivatives.
///
/// `theta` holds the angles of charges `2..=N`; charge 1 is at angle 0. Squared
/// distances are formed as `(r_i - r_j)^2 + 4 r_i r_j sin^2(d/2)`, which stays accurate
/// when the two charges are close.
pub(crate) fn evaluate(r: &[f64], theta: &[f64], order: u8) -> Result<PotentialEval> {
    debug_assert_eq!(theta.len() + 1, r.len());
    let n = r.len();
    let dim = n - 1;
    let mut out = PotentialEval {
        value: 0.0,
        grad: [0.0; 3],
        hess: [[0.0; 3]; 3],
        dim,
    };
    let phi = |i: usize| if i == 0 { 0.0 } else { theta[i - 1] };
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = phi(i) - phi(j);
            let half = (0.5 * delta).sin();
            let d2 = (r[i] - r[j]).powi(2) + 4.0 * r[i] * r[j] * half * half;
            let d = d2.sqrt();
            if !(d >= COINCIDENCE_THRESHOLD) {
                return Err(Error::CoincidentCharges { distance: d });
            }
            let inv = 1.0 / d;
            out.value += inv;
            if order == 0 {
                continue;
            }
            let inv3 = inv * inv * inv;
            let rr = r[i] * r[j];
            let s = rr * delta.sin();
            // d(1/D)/d(phi_i) = -s / D^3, and the opposite sign for phi_j.
            let g = -s * inv3;
            if i > 0 {
                out.grad[i - 1] += g;
            }
            out.grad[j - 1] -= g;
            if order == 1 {
                continue;
            }
            let h = -rr * delta.cos() * inv3 + 3.0 * s * s * inv3 * inv * inv;
            if i > 0 {
                out.hess[i - 1][i - 1] += h;
                out.hess[i - 1][j - 1] -= h;
                out.hess[j - 1][i - 1] -= h;
            }
            out.hess[j - 1][j - 1] += h;
        }
    }
    Ok(out)
}

fn check_arity(r: &RadiiTuple, a: &AngleConfig) -> Result<()> {
    if a.len() + 1 != r.len() {
        return Err(Error::ArityMismatch(r.len() - 1, a.len()));
    }
    Ok(())
}

/// Sum of inverse pairwise distances of the charges `r_i (cos theta_i, sin theta_i)`.
pub fn coulomb_potential(r: &RadiiTuple, a: &AngleConfig) -> Result<f64> {
    check_arity(r, a)?;
    Ok(evaluate(r.as_slice(), a.as_slice(), 0)?.value)
}

/// Analytic partial derivatives of the potential with respect to `theta_2..theta_N`.
pub fn potential_angle_gradient(r: &RadiiTuple, a: &AngleConfig) -> Result<Vec<f64>> {
    check_arity(r, a)?;
    let e = evaluate(r.as_slice(), a.as_slice(), 1)?;
    Ok(e.grad[..e.dim].to_vec())
}

/// Analytic Hessian of the potential with respect to the angles.
pub fn potential_angle_hessian(r: &RadiiTuple, a: &AngleConfig) -> Result<DMatrix<f64>> {
    check_arity(r, a)?;
    let e = evaluate(r.as_slice(), a.as_slice(), 2)?;
    Ok(DMatrix::from_fn(e.dim, e.dim, |i, j| e.hess[i][j]))
}
