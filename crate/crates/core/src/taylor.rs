//! Expansion of the cost around three unit radii, comparison functionals built from
//! it, and asymptotic forms of the cost when some radii are large.
//!
//! Radii are parametrized as `1 + a_i t`. The third `t`-derivative carries a leading
//! minus sign: at `a = (1, 1, 1)` the cost is `sqrt(3) / (1 + t)`, whose third
//! derivative at zero is `-6 sqrt(3)`.

use serde::Serialize;

use crate::coulomb::{exact_cost, RadiiTuple, SolverOptions};
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Slopes `a` and parameter `t` of the radii `1 + a_i t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorProbe {
    pub a: Vec<f64>,
    pub t: f64,
}

impl TaylorProbe {
    pub fn new(a: &[f64], t: f64) -> Result<Self> {
        if a.len() != 3 && a.len() != 4 {
            return Err(Error::InvalidArgument(format!(
                "expected 3 or 4 slopes, got {}",
                a.len()
            )));
        }
        if let Some(ai) = a.iter().find(|ai| 1.0 + *ai * t <= 0.0) {
            return Err(Error::InvalidRadii(format!(
                "radius 1 + {ai} * {t} is not positive"
            )));
        }
        Ok(Self { a: a.to_vec(), t })
    }

    pub fn radii(&self) -> Result<RadiiTuple> {
        let r: Vec<f64> = self.a.iter().map(|ai| 1.0 + ai * self.t).collect();
        RadiiTuple::new(&r)
    }
}

/// Value and first three `t`-derivatives at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpansionCoefficients {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

impl ExpansionCoefficients {
    fn combine(self, sign: f64, acc: &mut ExpansionCoefficients) {
        acc.g0 += sign * self.g0;
        acc.g1 += sign * self.g1;
        acc.g2 += sign * self.g2;
        acc.g3 += sign * self.g3;
    }
}

/// Exact cost at the radii `1 + a_i t`.
pub fn g_exact(p: &TaylorProbe, opts: &SolverOptions) -> Result<f64> {
    Ok(exact_cost(&p.radii()?, opts)?.value)
}

pub fn g_derivatives_analytic(a: [f64; 3]) -> ExpansionCoefficients {
    let [a1, a2, a3] = a;
    let sum = a1 + a2 + a3;
    let squares = a1 * a1 + a2 * a2 + a3 * a3;
    let pairs = a1 * a2 + a2 * a3 + a3 * a1;
    let cubes = a1.powi(3) + a2.powi(3) + a3.powi(3);
    let mixed =
        a1 * a1 * a2 + a1 * a2 * a2 + a2 * a2 * a3 + a2 * a3 * a3 + a3 * a3 * a1 + a3 * a1 * a1;
    let triple = a1 * a2 * a3;
    ExpansionCoefficients {
        g0: SQRT3,
        g1: -sum / SQRT3,
        g2: (4.0 * squares + 6.0 * pairs) / (5.0 * SQRT3),
        g3: -(308.0 * cubes + 888.0 * mixed + 498.0 * triple) / (375.0 * SQRT3),
    }
}

/// First-order drift of the minimizing angles away from `(2pi/3, -2pi/3)`.
pub fn optimal_angle_rate(a: [f64; 3]) -> [f64; 2] {
    let [a1, a2, a3] = a;
    let k = 1.0 / (5.0 * SQRT3);
    [k * (-a1 - a2 + 2.0 * a3), k * (a1 - 2.0 * a2 + a3)]
}

/// First-order drift of the four-charge minimizing angles away from `(pi/2, pi, 3pi/2)`,
/// the branch with charges `1, 2, 3, 4` in counterclockwise order.
pub fn fourmarginal_angle_rate(a: [f64; 4]) -> [f64; 3] {
    let [a1, a2, a3, a4] = a;
    let k = (6.0 - 2f64.sqrt()) / 34.0;
    [
        k * (-a1 - a2 + a3 + a4),
        k * (2.0 * a4 - 2.0 * a2),
        k * (a1 - a2 - a3 + a4),
    ]
}

/// Signed sum of exact costs at several slope triples, all sharing one parameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Functional {
    pub terms: Vec<(f64, [f64; 3])>,
}

impl Functional {
    /// Lowers the 146/235 pairing of six equally spaced radii against 145/236.
    pub fn pairing_146_vs_145() -> Self {
        Self {
            terms: vec![
                (1.0, [0.0, 3.0, 5.0]),
                (1.0, [1.0, 2.0, 4.0]),
                (-1.0, [0.0, 3.0, 4.0]),
                (-1.0, [1.0, 2.0, 5.0]),
            ],
        }
    }

    /// Positive when the two point pairs of the near part of the two-scale measure
    /// break c-monotonicity of the DDI map under the swap of the third coordinate.
    pub fn ddi_near_pair() -> Self {
        Self {
            terms: vec![
                (1.0, [0.5, 3.5, 4.5]),
                (1.0, [1.0, 3.0, 5.0]),
                (-1.0, [0.5, 3.5, 5.0]),
                (-1.0, [1.0, 3.0, 4.5]),
            ],
        }
    }

    pub fn value(&self, t: f64, opts: &SolverOptions) -> Result<f64> {
        let mut sum = 0.0;
        for (sign, a) in &self.terms {
            sum += sign * g_exact(&TaylorProbe::new(a, t)?, opts)?;
        }
        Ok(sum)
    }

    pub fn analytic(&self) -> ExpansionCoefficients {
        let mut acc = ExpansionCoefficients {
            g0: 0.0,
            g1: 0.0,
            g2: 0.0,
            g3: 0.0,
        };
        for (sign, a) in &self.terms {
            g_derivatives_analytic(*a).combine(*sign, &mut acc);
        }
        acc
    }
}

pub fn comparison_functional_big_f(t: f64, opts: &SolverOptions) -> Result<f64> {
    Functional::pairing_146_vs_145().value(t, opts)
}

pub fn comparison_functional_small_f(eps: f64, opts: &SolverOptions) -> Result<f64> {
    Functional::ddi_near_pair().value(eps, opts)
}

/// Outcome of the sign search for the largest parameter where `F < 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdSearch {
    /// Largest parameter confirmed to satisfy the predicate.
    pub value: f64,
    /// False when the predicate held across the whole scanned range.
    pub bracketed: bool,
    pub trace: Vec<(f64, f64)>,
}

/// Scan `t` upward by doubling from `start` until `F(t) >= 0` or `t > max`, then
/// bisect the bracket to relative width `rel_tol`.
pub fn empirical_t0(
    start: f64,
    max: f64,
    rel_tol: f64,
    opts: &SolverOptions,
) -> Result<ThresholdSearch> {
    let f = |t: f64| comparison_functional_big_f(t, opts);
    let mut trace = Vec::new();
    let mut lo = start;
    let v = f(lo)?;
    trace.push((lo, v));
    if v >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "F({start}) = {v} is not negative; start lower"
        )));
    }
    let mut hi = None;
    while lo < max {
        let t = (lo * 2.0).min(max);
        let v = f(t)?;
        trace.push((t, v));
        if v >= 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let Some(mut hi) = hi else {
        return Ok(ThresholdSearch {
            value: lo,
            bracketed: false,
            trace,
        });
    };
    while (hi - lo) > rel_tol * lo {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        trace.push((mid, v));
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdSearch {
        value: lo,
        bracketed: true,
        trace,
    })
}

/// `(1/2 + 2/sqrt(1 + r^2) - 4/r^4, c(1, 1, r))`.
///
/// The leading part is the potential with the near pair opposite each other and the far
/// charge perpendicular to them, which puts it at distance `sqrt(1 + r^2)` from both.
pub fn asymptotic_cost_two_near_one_far(r: f64, opts: &SolverOptions) -> Result<(f64, f64)> {
    if r <= 2.0 {
        return Err(Error::InvalidArgument(format!("need r > 2, got {r}")));
    }
    let approx = 0.5 + 2.0 / (1.0 + r * r).sqrt() - 4.0 / r.powi(4);
    let reference = exact_cost(&RadiiTuple::triple(1.0, 1.0, r)?, opts)?.value;
    Ok((approx, reference))
}

/// `(1/(2r) + 2/sqrt(1 + r^2) - 4/r^3, c(1, r, r))`.
pub fn asymptotic_cost_one_near_two_far(r: f64, opts: &SolverOptions) -> Result<(f64, f64)> {
    if r <= 2.0 {
        return Err(Error::InvalidArgument(format!("need r > 2, got {r}")));
    }
    let approx = 0.5 / r + 2.0 / (1.0 + r * r).sqrt() - 4.0 / r.powi(3);
    let reference = exact_cost(&RadiiTuple::triple(1.0, r, r)?, opts)?.value;
    Ok((approx, reference))
}
