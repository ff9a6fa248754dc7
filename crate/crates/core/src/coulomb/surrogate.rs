//! Frozen-angle surrogate costs and the closed-form Hessian test at `(pi, 0)`.

use super::{RadiiTuple, COINCIDENCE_THRESHOLD};
use crate::error::{Error, Result};

fn require_three(r: &RadiiTuple) -> Result<[f64; 3]> {
    match r.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        other => Err(Error::InvalidRadii(format!(
            "expected three radii, got {}",
            other.len()
        ))),
    }
}

/// Potential with the angles frozen at `+-2pi/3`.
pub fn cost_triangle(r: &RadiiTuple) -> Result<f64> {
    let [r1, r2, r3] = require_three(r)?;
    let side = |a: f64, b: f64| 1.0 / (a * a + a * b + b * b).sqrt();
    Ok(side(r1, r2) + side(r2, r3) + side(r1, r3))
}

/// Collinear cost: sorted radii, smallest and largest on the same ray, middle one opposite.
pub fn cost_pi(r: &RadiiTuple) -> Result<f64> {
    let mut s = require_three(r)?;
    s.sort_by(|a, b| a.total_cmp(b));
    collinear(s[0], s[1], s[2])
}

/// Collinear cost after reordering the radii by `perm` (`perm[k]` is the index placed
/// at slot `k`); no sorting is applied.
pub fn cost_pi_permuted(r: &RadiiTuple, perm: [usize; 3]) -> Result<f64> {
    let s = require_three(r)?;
    let mut seen = [false; 3];
    for &p in &perm {
        if p > 2 || seen[p] {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation"
            )));
        }
        seen[p] = true;
    }
    collinear(s[perm[0]], s[perm[1]], s[perm[2]])
}

fn collinear(r1: f64, r2: f64, r3: f64) -> Result<f64> {
    if r3 - r1 <= 0.0 {
        return Err(Error::DegenerateRadii(r1));
    }
    Ok(1.0 / (r1 + r2) + 1.0 / (r2 + r3) + 1.0 / (r3 - r1))
}

/// Coulomb cost of three charges on a line at signed positions.
pub fn cost_1d(v1: f64, v2: f64, v3: f64) -> Result<f64> {
    let d = [(v2 - v1).abs(), (v3 - v2).abs(), (v1 - v3).abs()];
    if let Some(&bad) = d.iter().find(|x| !(**x >= COINCIDENCE_THRESHOLD)) {
        return Err(Error::CoincidentCharges { distance: bad });
    }
    Ok(d.iter().map(|x| 1.0 / x).sum())
}

/// `r2 r3 (r3 - r2) - r1 (r2^2 + 5 r2 r3 + r3^2) - r1^3`, which is positive exactly
/// when the angle Hessian at `(pi, 0)` is positive definite.
pub fn hessian_pi_determinant_margin(r: &RadiiTuple) -> Result<f64> {
    let [r1, r2, r3] = require_three(r)?;
    if !(r1 <= r2 && r2 <= r3) {
        return Err(Error::UnsortedRadii(vec![r1, r2, r3]));
    }
    Ok(r2 * r3 * (r3 - r2) - r1 * (r2 * r2 + 5.0 * r2 * r3 + r3 * r3) - r1.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coulomb::{potential_angle_hessian, AngleConfig};
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rt(r: &[f64]) -> RadiiTuple {
        RadiiTuple::new(r).unwrap()
    }

    #[test]
    fn triangle_cost_examples() {
        assert!((cost_triangle(&rt(&[1.0, 1.0, 1.0])).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        let expect = 1.0 / 7f64.sqrt() + 1.0 / 19f64.sqrt() + 1.0 / 13f64.sqrt();
        assert!((cost_triangle(&rt(&[1.0, 2.0, 3.0])).unwrap() - expect).abs() < 1e-15);
        assert!(cost_triangle(&rt(&[1.0, 1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn collinear_cost_examples() {
        assert!((cost_pi(&rt(&[1.0, 2.0, 3.0])).unwrap() - 31.0 / 30.0).abs() < 1e-15);
        assert!((cost_pi(&rt(&[3.0, 1.0, 2.0])).unwrap() - 31.0 / 30.0).abs() < 1e-15);
        let m = 250.0;
        let expect = 0.25 + 1.0 / (3.0 + m) + 1.0 / (m - 1.0);
        assert!((cost_pi(&rt(&[1.0, 3.0, m])).unwrap() - expect).abs() < 1e-15);
        assert!(matches!(
            cost_pi(&rt(&[2.0, 2.0, 2.0])),
            Err(Error::DegenerateRadii(_))
        ));
        // identity permutation on sorted input agrees with the sorted form
        let r = rt(&[1.0, 2.0, 3.0]);
        assert_eq!(
            cost_pi_permuted(&r, [0, 1, 2]).unwrap(),
            cost_pi(&r).unwrap()
        );
        assert!(cost_pi_permuted(&r, [2, 1, 0]).is_err());
        assert!(cost_pi_permuted(&r, [0, 0, 1]).is_err());
    }

    #[test]
    fn one_dimensional_cost_examples() {
        assert!((cost_1d(0.0, 1.0, 2.0).unwrap() - 2.5).abs() < 1e-15);
        assert!((cost_1d(1.0, -2.0, 3.0).unwrap() - 31.0 / 30.0).abs() < 1e-15);
        let c = cost_pi(&rt(&[1.0, 4.0, 5.0])).unwrap();
        assert!((cost_1d(-4.0, 1.0, 5.0).unwrap() - c).abs() < 1e-15);
        assert!(cost_1d(1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn margin_examples() {
        assert_eq!(
            hessian_pi_determinant_margin(&rt(&[1.0, 2.0, 3.0])).unwrap(),
            -38.0
        );
        assert!(hessian_pi_determinant_margin(&rt(&[1.0, 100.0, 10000.0])).unwrap() > 0.0);
        assert!(matches!(
            hessian_pi_determinant_margin(&rt(&[2.0, 1.0, 3.0])),
            Err(Error::UnsortedRadii(_))
        ));
        // on the line r2 = r3 the first term vanishes
        for r2 in [1.5, 4.0, 12.0] {
            assert!(hessian_pi_determinant_margin(&rt(&[1.0, r2, r2])).unwrap() < 0.0);
        }
    }

    #[test]
    fn boundary_hugs_the_dotted_line_from_above() {
        // On r3 = r2 + 7 (with r1 = 1) the margin is identically -50, so the region
        // boundary lies strictly above the line and approaches it as r2 grows.
        for r2 in [2.0, 5.0, 9.0, 14.0] {
            let on = hessian_pi_determinant_margin(&rt(&[1.0, r2, r2 + 7.0])).unwrap();
            assert!((on + 50.0).abs() < 1e-9);
        }
        let mut prev = f64::INFINITY;
        for r2 in [6.0, 10.0, 15.0, 40.0] {
            let above = hessian_pi_determinant_margin(&rt(&[1.0, r2, r2 + 8.0])).unwrap();
            assert!(above > 0.0);
            // bisect the offset s in r3 = r2 + s where the margin changes sign
            let (mut lo, mut hi) = (7.0, 8.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hessian_pi_determinant_margin(&rt(&[1.0, r2, r2 + mid])).unwrap() > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!(hi < prev);
            prev = hi;
        }
    }

    proptest! {
        #[test]
        fn margin_sign_matches_hessian_definiteness(
            r1 in 0.5f64..2.0, d2 in 0.05f64..5.0, d3 in 0.05f64..60.0,
        ) {
            let r = rt(&[r1, r1 + d2, r1 + d2 + d3]);
            let m = hessian_pi_determinant_margin(&r).unwrap();
            let h = potential_angle_hessian(&r, &AngleConfig::new(&[PI, 0.0]).unwrap()).unwrap();
            let eig = SymmetricEigen::new(h);
            let pd = eig.eigenvalues.iter().all(|l| *l > 0.0);
            let scale = (r1 + d2 + d3).powi(3);
            prop_assume!(m.abs() > 1e-9 * scale);
            prop_assert_eq!(m > 0.0, pd);
        }

        #[test]
        fn collinear_equals_signed_line_cost(
            a in 0.1f64..10.0, db in 0.01f64..10.0, dc in 0.01f64..10.0,
        ) {
            let (b, c) = (a + db, a + db + dc);
            let p = cost_pi(&rt(&[a, b, c])).unwrap();
            let l = cost_1d(a, -b, c).unwrap();
            prop_assert!((p - l).abs() <= 1e-15 * p);
        }
    }
}
