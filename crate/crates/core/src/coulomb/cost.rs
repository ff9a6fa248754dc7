//! A common interface over the exact radial cost and its frozen-angle surrogates.

use super::{cost_pi, cost_triangle, exact_cost, RadiiTuple, SolverOptions};
use crate::error::Result;

/// A symmetric cost on tuples of radii.
pub trait RadialCost: Sync {
    fn eval(&self, r: &RadiiTuple) -> Result<f64>;

    /// Absolute accuracy of a single evaluation, relative to `max(1, value)`.
    fn tolerance(&self) -> f64;

    fn name(&self) -> &'static str;
}

/// Minimum of the potential over angles.
#[derive(Clone, Debug, Default)]
pub struct ExactCost {
    pub opts: SolverOptions,
}

impl ExactCost {
    pub fn new(opts: SolverOptions) -> Self {
        Self { opts }
    }
}

impl RadialCost for ExactCost {
    fn eval(&self, r: &RadiiTuple) -> Result<f64> {
        Ok(exact_cost(r, &self.opts)?.value)
    }

    fn tolerance(&self) -> f64 {
        self.opts.tolerance()
    }

    fn name(&self) -> &'static str {
        "exact"
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PiCost;

impl RadialCost for PiCost {
    fn eval(&self, r: &RadiiTuple) -> Result<f64> {
        cost_pi(r)
    }

    fn tolerance(&self) -> f64 {
        1e-14
    }

    fn name(&self) -> &'static str {
        "pi"
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TriangleCost;

impl RadialCost for TriangleCost {
    fn eval(&self, r: &RadiiTuple) -> Result<f64> {
        cost_triangle(r)
    }

    fn tolerance(&self) -> f64 {
        1e-14
    }

    fn name(&self) -> &'static str {
        "triangle"
    }
}
