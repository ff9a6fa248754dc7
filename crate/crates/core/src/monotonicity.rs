//! Coordinate-swap tests for c-monotonicity of pairs of support points, the stronger
//! test over all redistributions of the pooled coordinates, and lattice searches over
//! the orbits of a cyclical map.

use rayon::prelude::*;
use serde::Serialize;

use crate::coulomb::{cost_1d, cost_pi, RadialCost, RadiiTuple};
use crate::error::{Error, Result};
use crate::measures::MonotoneMap;

/// Subset `p` of the coordinate indices; coordinates in `p` stay, the others are exchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SwapPattern {
    mask: u8,
    arity: usize,
}

impl SwapPattern {
    /// `kept` holds 1-based indices.
    pub fn new(kept: &[usize], arity: usize) -> Result<Self> {
        let mut mask = 0u8;
        for &i in kept {
            if i == 0 || i > arity {
                return Err(Error::InvalidArgument(format!(
                    "index {i} outside 1..={arity}"
                )));
            }
            mask |= 1 << (i - 1);
        }
        Ok(Self { mask, arity })
    }

    /// All `2^N` subsets in binary order of their index masks.
    pub fn all(arity: usize) -> Vec<SwapPattern> {
        (0..1u8 << arity).map(|mask| Self { mask, arity }).collect()
    }

    pub fn keeps(&self, index0: usize) -> bool {
        self.mask >> index0 & 1 == 1
    }

    pub fn complement(&self) -> Self {
        Self {
            mask: !self.mask & ((1u8 << self.arity) - 1),
            arity: self.arity,
        }
    }

    /// 1-based kept indices.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.arity)
            .filter(|i| self.keeps(*i))
            .map(|i| i + 1)
            .collect()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl Serialize for SwapPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

/// Split of the `2N` pooled coordinates, sorted increasingly and numbered from 1, into two
/// groups of `N`; the first group always holds coordinate 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition(pub Vec<usize>, pub Vec<usize>);

impl Partition {
    /// Every split, lexicographic in the first group.
    pub fn all(arity: usize) -> Vec<Partition> {
        let total = 2 * arity;
        let mut out = Vec::new();
        let mut chosen = vec![1usize];
        fn rec(
            next: usize,
            total: usize,
            arity: usize,
            chosen: &mut Vec<usize>,
            out: &mut Vec<Partition>,
        ) {
            if chosen.len() == arity {
                let rest = (1..=total).filter(|i| !chosen.contains(i)).collect();
                out.push(Partition(chosen.clone(), rest));
                return;
            }
            for i in next..=total {
                chosen.push(i);
                rec(i + 1, total, arity, chosen, out);
                chosen.pop();
            }
        }
        rec(2, total, arity, &mut chosen, &mut out);
        out
    }

    pub fn label(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        format!("{}/{}", join(&self.0), join(&self.1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rearrangement {
    Pattern(SwapPattern),
    Partition(Partition),
}

/// One candidate rearrangement of a pair of support points.
///
/// `lhs = c(x) + c(y)` is the current pairing, `rhs` the rearranged one; a negative
/// `gap = rhs - lhs` means the rearrangement is cheaper.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationReport {
    pub x: RadiiTuple,
    pub y: RadiiTuple,
    #[serde(flatten)]
    pub rearrangement: Rearrangement,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl ViolationReport {
    /// `gap < -10 tol (1 + |lhs|)`.
    pub fn is_violation(&self, tol: f64) -> bool {
        self.gap < -violation_threshold(tol, self.lhs)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

pub fn violation_threshold(tol: f64, lhs: f64) -> f64 {
    10.0 * tol * (1.0 + lhs.abs())
}

pub fn swap(x: &RadiiTuple, y: &RadiiTuple, p: &SwapPattern) -> Result<(RadiiTuple, RadiiTuple)> {
    if x.len() != y.len() {
        return Err(Error::ArityMismatch(x.len(), y.len()));
    }
    if p.arity() != x.len() {
        return Err(Error::ArityMismatch(x.len(), p.arity()));
    }
    let (xs, ys) = (x.as_slice(), y.as_slice());
    let mut a = Vec::with_capacity(xs.len());
    let mut b = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        if p.keeps(i) {
            a.push(xs[i]);
            b.push(ys[i]);
        } else {
            a.push(ys[i]);
            b.push(xs[i]);
        }
    }
    Ok((RadiiTuple::new(&a)?, RadiiTuple::new(&b)?))
}

/// One report per subset `p`, in the order of [`SwapPattern::all`].
pub fn check_pair<C: RadialCost + ?Sized>(
    cost: &C,
    x: &RadiiTuple,
    y: &RadiiTuple,
) -> Result<Vec<ViolationReport>> {
    let lhs = cost.eval(x)? + cost.eval(y)?;
    check_pair_with(cost, x, y, lhs)
}

fn check_pair_with<C: RadialCost + ?Sized>(
    cost: &C,
    x: &RadiiTuple,
    y: &RadiiTuple,
    lhs: f64,
) -> Result<Vec<ViolationReport>> {
    if x.len() != y.len() {
        return Err(Error::ArityMismatch(x.len(), y.len()));
    }
    SwapPattern::all(x.len())
        .into_iter()
        .map(|p| {
            let (a, b) = swap(x, y, &p)?;
            let rhs = cost.eval(&a)? + cost.eval(&b)?;
            Ok(ViolationReport {
                x: *x,
                y: *y,
                rearrangement: Rearrangement::Pattern(p),
                lhs,
                rhs,
                gap: rhs - lhs,
            })
        })
        .collect()
}

/// One report per [`Partition`] of the pooled coordinates, in lexicographic order.
pub fn check_pair_strong<C: RadialCost + ?Sized>(
    cost: &C,
    x: &RadiiTuple,
    y: &RadiiTuple,
) -> Result<Vec<ViolationReport>> {
    let lhs = cost.eval(x)? + cost.eval(y)?;
    check_pair_strong_with(cost, x, y, lhs)
}

fn check_pair_strong_with<C: RadialCost + ?Sized>(
    cost: &C,
    x: &RadiiTuple,
    y: &RadiiTuple,
    lhs: f64,
) -> Result<Vec<ViolationReport>> {
    if x.len() != y.len() {
        return Err(Error::ArityMismatch(x.len(), y.len()));
    }
    let mut pooled: Vec<f64> = x.as_slice().iter().chain(y.as_slice()).copied().collect();
    pooled.sort_by(f64::total_cmp);
    if pooled.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DuplicateCoordinates);
    }
    let pick =
        |idx: &[usize]| RadiiTuple::new(&idx.iter().map(|i| pooled[i - 1]).collect::<Vec<_>>());
    Partition::all(x.len())
        .into_iter()
        .map(|part| {
            let rhs = cost.eval(&pick(&part.0)?)? + cost.eval(&pick(&part.1)?)?;
            Ok(ViolationReport {
                x: *x,
                y: *y,
                rearrangement: Rearrangement::Partition(part),
                lhs,
                rhs,
                gap: rhs - lhs,
            })
        })
        .collect()
}

/// Report with the smallest `rhs`; ties go to the earliest entry.
pub fn minimizing(reports: &[ViolationReport]) -> Option<&ViolationReport> {
    reports
        .iter()
        .reduce(|best, r| if r.rhs < best.rhs { r } else { best })
}

/// Orbit pairs drawn from a quantile lattice on the first cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerSpec {
    pub per_cell: usize,
    /// Largest lattice distance between the two orbits of a pair.
    pub window: usize,
    /// Check every pair regardless of `window`.
    pub exhaustive: bool,
    /// Also run the partition test.
    pub strong: bool,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            per_cell: 64,
            window: 8,
            exhaustive: false,
            strong: true,
        }
    }
}

/// Every violation on the lattice pairs, sorted by gap (most negative first, ties in
/// lattice order).
pub fn search_violations<C: RadialCost + ?Sized>(
    map: &MonotoneMap,
    cost: &C,
    spec: &SamplerSpec,
) -> Result<Vec<ViolationReport>> {
    let n = spec.per_cell;
    let cells = map.cells() as f64;
    let orbits = (0..n)
        .map(|i| {
            Ok(map
                .orbit_at_quantile((i as f64 + 0.5) / (n as f64 * cells))?
                .points)
        })
        .collect::<Result<Vec<_>>>()?;
    let base = orbits
        .par_iter()
        .map(|o| cost.eval(o))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if spec.exhaustive || j - i <= spec.window {
                pairs.push((i, j));
            }
        }
    }
    let tol = cost.tolerance();
    let found = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = (&orbits[i], &orbits[j]);
            let lhs = base[i] + base[j];
            let mut reports = check_pair_with(cost, x, y, lhs)?;
            if spec.strong {
                reports.extend(check_pair_strong_with(cost, x, y, lhs)?);
            }
            Ok(reports
                .into_iter()
                .filter(|r| r.is_violation(tol))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<ViolationReport> = found.into_iter().flatten().collect();
    all.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    Ok(all)
}

/// Outcome of the three frozen-angle comparisons for six increasing radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CpiCheck {
    pub holds: bool,
    /// Competitor minus the `145/236` value, for `146/235`, `136/245`, `135/246`; the
    /// comparison tolerates `1e-12` relative to that value.
    pub gaps: [f64; 3],
    /// Largest disagreement between the frozen-angle sums and the line-cost sums.
    pub line_mismatch: f64,
    /// Whether alternating positions of `(-r4, -r3, r1, r2, r5, r6)` minimize the line cost
    /// over all splits.
    pub line_alternating_is_min: bool,
}

pub fn cpi_partition_inequality(r: &[f64; 6]) -> Result<CpiCheck> {
    if !(r[0] > 0.0 && r.windows(2).all(|w| w[0] < w[1])) {
        return Err(Error::UnsortedInput(r.to_vec()));
    }
    let c =
        |i: usize, j: usize, k: usize| cost_pi(&RadiiTuple::triple(r[i - 1], r[j - 1], r[k - 1])?);
    let base = c(1, 4, 5)? + c(2, 3, 6)?;
    let rivals = [
        c(1, 4, 6)? + c(2, 3, 5)?,
        c(1, 3, 6)? + c(2, 4, 5)?,
        c(1, 3, 5)? + c(2, 4, 6)?,
    ];
    let gaps = rivals.map(|v| v - base);

    // positions on the line: the middle radius of each triple goes to the negative side
    let line = [-r[3], -r[2], r[0], r[1], r[4], r[5]];
    let lc = |a: usize, b: usize, k: usize| cost_1d(line[a], line[b], line[k]);
    let line_sums = [
        lc(0, 2, 4)? + lc(1, 3, 5)?,
        lc(0, 2, 5)? + lc(1, 3, 4)?,
        lc(1, 2, 5)? + lc(0, 3, 4)?,
        lc(1, 2, 4)? + lc(0, 3, 5)?,
    ];
    let pi_sums = [base, rivals[0], rivals[1], rivals[2]];
    let line_mismatch = pi_sums
        .iter()
        .zip(&line_sums)
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max);
    let mut line_min = f64::INFINITY;
    for part in Partition::all(3) {
        let sum = lc(part.0[0] - 1, part.0[1] - 1, part.0[2] - 1)?
            + lc(part.1[0] - 1, part.1[1] - 1, part.1[2] - 1)?;
        line_min = line_min.min(sum);
    }
    let line_alternating_is_min = line_sums[0] <= line_min * (1.0 + 1e-14);
    Ok(CpiCheck {
        holds: gaps.iter().all(|g| *g >= -1e-12 * base.max(1.0)),
        gaps,
        line_mismatch,
        line_alternating_is_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coulomb::{ExactCost, PiCost, TriangleCost};
    use proptest::prelude::*;

    fn rt(v: &[f64]) -> RadiiTuple {
        RadiiTuple::new(v).unwrap()
    }

    #[test]
    fn swap_examples() {
        let x = rt(&[1.0, 4.0, 6.0]);
        let y = rt(&[2.0, 3.0, 5.0]);
        let (a, b) = swap(&x, &y, &SwapPattern::new(&[3], 3).unwrap()).unwrap();
        assert_eq!(
            (a.as_slice(), b.as_slice()),
            (&[2.0, 3.0, 6.0][..], &[1.0, 4.0, 5.0][..])
        );
        let (a, b) = swap(&x, &y, &SwapPattern::new(&[1, 2, 3], 3).unwrap()).unwrap();
        assert_eq!((a, b), (x, y));
        let (a, b) = swap(&x, &y, &SwapPattern::new(&[], 3).unwrap()).unwrap();
        assert_eq!((a, b), (y, x));
        let (a, b) = swap(&x, &y, &SwapPattern::new(&[1], 3).unwrap()).unwrap();
        assert_eq!(
            (a.as_slice(), b.as_slice()),
            (&[1.0, 3.0, 5.0][..], &[2.0, 4.0, 6.0][..])
        );
        let four = rt(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            swap(&x, &four, &SwapPattern::new(&[1], 3).unwrap()),
            Err(Error::ArityMismatch(3, 4))
        ));
        assert!(SwapPattern::new(&[4], 3).is_err());
    }

    #[test]
    fn partition_enumeration() {
        let three = Partition::all(3);
        assert_eq!(three.len(), 10);
        assert_eq!(three[0], Partition(vec![1, 2, 3], vec![4, 5, 6]));
        assert_eq!(three[9], Partition(vec![1, 5, 6], vec![2, 3, 4]));
        assert_eq!(Partition::all(4).len(), 35);
        assert_eq!(three[3].label(), "1,2,6/3,4,5");
    }

    #[test]
    fn identical_points_have_zero_gaps() {
        let x = rt(&[1.0, 2.0, 3.0]);
        for r in check_pair(&ExactCost::default(), &x, &x).unwrap() {
            assert_eq!(r.gap, 0.0);
        }
        assert!(matches!(
            check_pair_strong(&TriangleCost, &x, &x),
            Err(Error::DuplicateCoordinates)
        ));
    }

    #[test]
    fn equally_spaced_pair_prefers_146() {
        let eps = 0.005;
        let at = |k: f64| 1.0 + k * eps;
        let x = rt(&[at(1.0), at(7.0), at(9.0)]);
        let y = rt(&[at(3.0), at(5.0), at(11.0)]);
        let cost = ExactCost::default();
        let reports = check_pair(&cost, &x, &y).unwrap();
        let p3 = reports
            .iter()
            .find(|r| r.rearrangement == Rearrangement::Pattern(SwapPattern::new(&[3], 3).unwrap()))
            .unwrap();
        assert!(p3.is_violation(cost.tolerance()), "gap {}", p3.gap);
        let strong = check_pair_strong(&cost, &x, &y).unwrap();
        let best = minimizing(&strong).unwrap();
        assert_eq!(
            best.rearrangement,
            Rearrangement::Partition(Partition(vec![1, 4, 6], vec![2, 3, 5]))
        );
    }

    #[test]
    fn spread_radii_prefer_145_under_pi_cost() {
        let x = rt(&[1.0, 4.0, 5.0]);
        let y = rt(&[2.0, 3.0, 6.0]);
        for r in check_pair(&PiCost, &x, &y).unwrap() {
            assert!(r.gap >= -1e-12, "{r:?}");
        }
        let x = rt(&[1.0, 10.0, 30.0]);
        let y = rt(&[1.5, 9.0, 40.0]);
        let strong = check_pair_strong(&PiCost, &x, &y).unwrap();
        assert_eq!(
            minimizing(&strong).unwrap().rearrangement,
            Rearrangement::Partition(Partition(vec![1, 4, 5], vec![2, 3, 6]))
        );
    }

    #[test]
    fn report_serialization() {
        let x = rt(&[1.0, 4.0, 6.0]);
        let y = rt(&[2.0, 3.0, 5.0]);
        let reports = check_pair(&TriangleCost, &x, &y).unwrap();
        let line = reports[4].to_json_line();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["pattern"], serde_json::json!([3]));
        assert_eq!(v["x"], serde_json::json!([1.0, 4.0, 6.0]));
        assert_eq!(v["gap"].as_f64().unwrap(), reports[4].gap);
        let strong = check_pair_strong(&TriangleCost, &x, &y).unwrap();
        let v: serde_json::Value = serde_json::from_str(&strong[0].to_json_line()).unwrap();
        assert_eq!(v["partition"], serde_json::json!([[1, 2, 3], [4, 5, 6]]));
    }

    #[test]
    fn cpi_examples() {
        for r in [
            [1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            [1.0, 1.1, 1.2, 10.0, 10.1, 10.2],
        ] {
            let check = cpi_partition_inequality(&r).unwrap();
            assert!(check.holds && check.line_alternating_is_min, "{check:?}");
            assert!(check.line_mismatch < 1e-15);
        }
        assert!(matches!(
            cpi_partition_inequality(&[1.0, 3.0, 2.0, 4.0, 5.0, 6.0]),
            Err(Error::UnsortedInput(_))
        ));
    }

    fn triple() -> impl Strategy<Value = RadiiTuple> {
        prop::array::uniform3(0.5f64..5.0).prop_map(|a| rt(&a))
    }

    proptest! {
        #[test]
        fn swap_is_an_involution(x in triple(), y in triple(), mask in 0u8..8) {
            let p = SwapPattern { mask, arity: 3 };
            let (a, b) = swap(&x, &y, &p).unwrap();
            let (c, d) = swap(&a, &b, &p).unwrap();
            prop_assert_eq!((c, d), (x, y));
        }

        #[test]
        fn complement_gives_the_same_gap(x in triple(), y in triple()) {
            let reports = check_pair(&TriangleCost, &x, &y).unwrap();
            for (k, r) in reports.iter().enumerate() {
                prop_assert_eq!(r.gap, reports[7 - k].gap);
            }
        }

        #[test]
        fn strong_minimum_is_below_every_swap(x in triple(), y in triple()) {
            let swaps = check_pair(&TriangleCost, &x, &y).unwrap();
            let strong = check_pair_strong(&TriangleCost, &x, &y).unwrap();
            let best = minimizing(&strong).unwrap().rhs;
            for r in swaps {
                prop_assert!(best <= r.rhs + 1e-14);
            }
        }

        #[test]
        fn cpi_four_set_inequality(mut r in prop::array::uniform6(0.1f64..50.0)) {
            r.sort_by(f64::total_cmp);
            prop_assume!(r.windows(2).all(|w| w[1] - w[0] > 1e-6));
            let check = cpi_partition_inequality(&r).unwrap();
            prop_assert!(check.holds, "{:?}", check);
            prop_assert!(check.line_mismatch < 1e-12);
        }
    }
}
