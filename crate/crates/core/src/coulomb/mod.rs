//! Coulomb potential of planar radial configurations and the reduced radial cost.
//!
//! A configuration is a tuple of radii `r_1..r_N` together with `N - 1` angles; the
//! first charge always sits on the positive x-axis. The exact cost is the minimum of
//! the potential over the `(N - 1)`-torus of angles.

mod cost;
mod potential;
mod solver;
mod stationary;
mod surrogate;

pub use cost::{ExactCost, PiCost, RadialCost, TriangleCost};
pub use potential::{coulomb_potential, potential_angle_gradient, potential_angle_hessian};
pub use solver::{exact_cost, refine_stationary, CostValue, SolverOptions};
pub use stationary::{stationary_points, CriticalKind, StationaryPoint};
pub use surrogate::{
    cost_1d, cost_pi, cost_pi_permuted, cost_triangle, hessian_pi_determinant_margin,
};

pub(crate) use potential::{evaluate, PotentialEval};

use std::f64::consts::TAU;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Pairwise distance below which two charges count as coincident.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-14;

/// Ordered tuple of 3 or 4 positive radii.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiiTuple {
    r: [f64; 4],
    len: usize,
}

impl RadiiTuple {
    pub fn new(radii: &[f64]) -> Result<Self> {
        if radii.len() != 3 && radii.len() != 4 {
            return Err(Error::InvalidRadii(format!(
                "expected 3 or 4 radii, got {}",
                radii.len()
            )));
        }
        if let Some(bad) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidRadii(format!("radius {bad} is not positive")));
        }
        let mut r = [0.0; 4];
        r[..radii.len()].copy_from_slice(radii);
        Ok(Self {
            r,
            len: radii.len(),
        })
    }

    pub fn triple(r1: f64, r2: f64, r3: f64) -> Result<Self> {
        Self::new(&[r1, r2, r3])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max(&self) -> f64 {
        self.as_slice().iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let v: Vec<f64> = self.as_slice().iter().map(|r| r * lambda).collect();
        Self::new(&v)
    }

    /// Copy with the radii in increasing order.
    pub fn sorted(&self) -> Self {
        let mut out = *self;
        out.r[..self.len].sort_by(|a, b| a.total_cmp(b));
        out
    }
}

impl Serialize for RadiiTuple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

/// Angles `theta_2..theta_N` of charges `2..N`, stored in `[0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleConfig {
    theta: [f64; 3],
    len: usize,
}

impl AngleConfig {
    pub fn new(theta: &[f64]) -> Result<Self> {
        if theta.is_empty() || theta.len() > 3 {
            return Err(Error::InvalidArgument(format!(
                "expected 1 to 3 angles, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        let mut out = [0.0; 3];
        for (o, t) in out.iter_mut().zip(theta) {
            *o = normalize_angle(*t);
        }
        Ok(Self {
            theta: out,
            len: theta.len(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sup-norm distance on the torus.
    pub fn torus_distance(&self, other: &AngleConfig) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| angle_distance(*a, *b))
            .fold(0.0, f64::max)
    }

    /// Reflected configuration `theta -> -theta`.
    pub fn reflected(&self) -> Self {
        let v: Vec<f64> = self.as_slice().iter().map(|t| -t).collect();
        Self::new(&v).expect("reflection of a valid configuration")
    }
}

impl Serialize for AngleConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

pub fn normalize_angle(t: f64) -> f64 {
    let v = t.rem_euclid(TAU);
    if v >= TAU {
        0.0
    } else {
        v
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
