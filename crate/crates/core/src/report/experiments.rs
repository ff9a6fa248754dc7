use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    fmt_f64, json_lines, largest_satisfying, smallest_satisfying, ExperimentConfig, ParamSearch,
    Report, Status,
};
use crate::coulomb::{
    cost_pi, cost_triangle, exact_cost, ExactCost, PiCost, RadialCost, RadiiTuple, SolverOptions,
};
use crate::error::{Error, Result};
use crate::kantorovich::{compare, comparison_csv, Comparison, CERTIFICATE_TOL};
use crate::measures::{MonotoneMap, Pattern, RadialMeasure};
use crate::monotonicity::{
    check_pair, check_pair_strong, minimizing, violation_threshold, Partition, Rearrangement,
    SwapPattern, ViolationReport,
};
use crate::taylor::{comparison_functional_small_f, empirical_t0, Functional, ThresholdSearch};

/// Relative stopping width of every parameter search.
const SEARCH_REL_TOL: f64 = 1e-3;
/// Agreement required between the exact cost and the frozen-angle cost before one is
/// substituted for the other.
const SUBSTITUTION_TOL: f64 = 1e-10;

fn deg(x: f64) -> f64 {
    x.to_degrees()
}

fn tuple_str(r: &RadiiTuple) -> String {
    let parts: Vec<String> = r.as_slice().iter().map(|x| format!("{x:.10}")).collect();
    format!("({})", parts.join(", "))
}

fn substitution_error(r: &RadiiTuple, opts: &SolverOptions) -> Result<f64> {
    let exact = exact_cost(r, opts)?.value;
    Ok((exact - cost_pi(r)?).abs())
}

// ---------------------------------------------------------------------------- cost

#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub radii: RadiiTuple,
    pub value: f64,
    /// Angles of charges `2..N` in `(-pi, pi]`, charge 1 at angle zero.
    pub angles_rad: Vec<f64>,
    pub angles_deg: Vec<f64>,
    pub stationary_count: usize,
    pub cost_pi: Option<f64>,
    pub cost_triangle: Option<f64>,
    /// `c <= min(c_pi, c_triangle)` up to solver tolerance; three charges only.
    pub bound_holds: Option<bool>,
}

pub fn cost(radii: &[f64], opts: &SolverOptions) -> Result<CostReport> {
    let r = RadiiTuple::new(radii)?;
    let v = exact_cost(&r, opts)?;
    let angles_rad: Vec<f64> = v
        .argmin_angles
        .as_slice()
        .iter()
        .map(|a| {
            if *a > std::f64::consts::PI {
                a - std::f64::consts::TAU
            } else {
                *a
            }
        })
        .collect();
    let (pi, tri) = if r.len() == 3 {
        (cost_pi(&r).ok(), Some(cost_triangle(&r)?))
    } else {
        (None, None)
    };
    let bound_holds = tri.map(|t| {
        let bound = pi.map_or(t, |p| p.min(t));
        v.value <= bound + opts.tolerance() * bound.max(1.0)
    });
    Ok(CostReport {
        config: ExperimentConfig::new("cost")
            .with("radii", radii)
            .with("solver", opts),
        radii: r,
        value: v.value,
        angles_deg: angles_rad.iter().map(|a| deg(*a)).collect(),
        angles_rad,
        stationary_count: v.stationary_count,
        cost_pi: pi,
        cost_triangle: tri,
        bound_holds,
    })
}

impl Report for CostReport {
    fn status(&self) -> Status {
        if self.bound_holds == Some(false) {
            Status::Inconclusive
        } else {
            Status::Confirmed
        }
    }

    fn summary(&self) -> Vec<String> {
        let mut out = vec![
            format!("radii {}", tuple_str(&self.radii)),
            format!("cost {}", fmt_f64(self.value)),
        ];
        let rad: Vec<String> = self.angles_rad.iter().map(|a| format!("{a:.12}")).collect();
        let dg: Vec<String> = self.angles_deg.iter().map(|a| format!("{a:.8}")).collect();
        out.push(format!(
            "angles rad [{}] deg [{}]",
            rad.join(", "),
            dg.join(", ")
        ));
        if let Some(p) = self.cost_pi {
            out.push(format!("cost_pi {}", fmt_f64(p)));
        }
        if let Some(t) = self.cost_triangle {
            out.push(format!("cost_triangle {}", fmt_f64(t)));
        }
        if let Some(b) = self.bound_holds {
            out.push(format!(
                "bound c <= min(c_pi, c_triangle): {}",
                if b { "holds" } else { "FAILS" }
            ));
        }
        out
    }

    fn artifact(&self) -> String {
        json_lines(
            &self.config,
            &[self],
            &serde_json::json!({ "status": self.status() }),
        )
    }
}

// --------------------------------------------------------------------------- ce145

#[derive(Clone, Debug, Serialize)]
pub struct Ce145Report {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub eps: f64,
    pub eps_auto: bool,
    /// Sign search for the largest `t` with `F(t) < 0`, when `eps` was auto-selected.
    pub t0: Option<ThresholdSearch>,
    pub radii: [f64; 6],
    /// The two DDI orbits.
    pub orbits: (RadiiTuple, RadiiTuple),
    pub ddi_cost: f64,
    /// Orbits after exchanging the third coordinate.
    pub swapped: (RadiiTuple, RadiiTuple),
    pub swapped_cost: f64,
    pub gap: f64,
    pub threshold: f64,
    pub swaps: Vec<ViolationReport>,
    pub strong: Vec<ViolationReport>,
    pub strong_minimizer: String,
}

/// `eps = None` picks `min(t0 / 2, 0.005)` from the sign search.
pub fn ce145(eps: Option<f64>, opts: &SolverOptions) -> Result<Ce145Report> {
    let (eps, t0) = match eps {
        Some(e) => (e, None),
        None => {
            let search = empirical_t0(0.01, 1.0, SEARCH_REL_TOL, opts)?;
            ((search.value / 2.0).min(0.005), Some(search))
        }
    };
    let rho = RadialMeasure::equally_spaced(eps, 3)?;
    let map = MonotoneMap::new(&rho, "DDI", 3)?;
    let x = map.orbit(1.0 + eps)?.points;
    let y = map.orbit(1.0 + 3.0 * eps)?.points;
    let cost = ExactCost::new(opts.clone());
    let swaps = check_pair(&cost, &x, &y)?;
    let third = SwapPattern::new(&[1, 2], 3)?;
    let chosen = swaps
        .iter()
        .find(|r| r.rearrangement == Rearrangement::Pattern(third))
        .expect("every swap is reported")
        .clone();
    let strong = check_pair_strong(&cost, &x, &y)?;
    let strong_minimizer = match &minimizing(&strong).expect("ten partitions").rearrangement {
        Rearrangement::Partition(p) => p.label(),
        Rearrangement::Pattern(_) => unreachable!(),
    };
    let mut radii = [0.0; 6];
    for (slot, v) in radii
        .iter_mut()
        .zip(x.as_slice().iter().chain(y.as_slice()))
    {
        *slot = *v;
    }
    radii.sort_by(f64::total_cmp);
    let swapped = crate::monotonicity::swap(&x, &y, &third)?;
    let threshold = violation_threshold(cost.tolerance(), chosen.lhs);
    Ok(Ce145Report {
        config: ExperimentConfig::new("ce145")
            .with("eps", eps)
            .with("eps_auto", t0.is_some())
            .with("search_rel_tol", SEARCH_REL_TOL)
            .with("solver", opts),
        eps,
        eps_auto: t0.is_some(),
        t0,
        radii,
        orbits: (x, y),
        ddi_cost: chosen.lhs,
        swapped,
        swapped_cost: chosen.rhs,
        gap: chosen.gap,
        threshold,
        swaps,
        strong,
        strong_minimizer,
    })
}

impl Report for Ce145Report {
    fn status(&self) -> Status {
        if self.gap < -self.threshold {
            Status::Confirmed
        } else {
            Status::Inconclusive
        }
    }

    fn summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(t0) = &self.t0 {
            out.push(format!(
                "t0 search: {} probes, t0 >= {:.6}{}",
                t0.trace.len(),
                t0.value,
                if t0.bracketed {
                    ""
                } else {
                    " (no sign change up to the scan limit)"
                }
            ));
            for (t, f) in &t0.trace {
                out.push(format!("  F({t:.6}) = {f:.6e}"));
            }
        }
        out.push(format!(
            "eps {}{}",
            self.eps,
            if self.eps_auto { " (auto)" } else { "" }
        ));
        let r: Vec<String> = self.radii.iter().map(|v| format!("{v:.10}")).collect();
        out.push(format!("radii {}", r.join(" ")));
        out.push(format!(
            "145/236 (DDI orbits {} {}): {}",
            tuple_str(&self.orbits.0),
            tuple_str(&self.orbits.1),
            fmt_f64(self.ddi_cost)
        ));
        out.push(format!(
            "146/235 (third coordinate swapped {} {}): {}",
            tuple_str(&self.swapped.0),
            tuple_str(&self.swapped.1),
            fmt_f64(self.swapped_cost)
        ));
        out.push(format!(
            "gap {} (threshold {:.3e})",
            fmt_f64(self.gap),
            self.threshold
        ));
        out.push(format!("cheapest redistribution {}", self.strong_minimizer));
        out.push(match self.status() {
            Status::Confirmed => "DDI map not c-monotone: violation confirmed".into(),
            Status::Inconclusive => "no violation beyond tolerance at this eps".into(),
        });
        out
    }

    fn artifact(&self) -> String {
        let rows: Vec<&ViolationReport> = self.swaps.iter().chain(&self.strong).collect();
        let summary = serde_json::json!({
            "status": self.status(),
            "eps": self.eps,
            "t0": self.t0,
            "radii": self.radii,
            "ddi_cost": self.ddi_cost,
            "swapped_cost": self.swapped_cost,
            "gap": self.gap,
            "threshold": self.threshold,
            "strong_minimizer": self.strong_minimizer,
        });
        json_lines(&self.config, &rows, &summary)
    }
}

// ------------------------------------------------------------------------- ceclass

/// Best swap found for one map pattern.
#[derive(Clone, Debug, Serialize)]
pub struct PatternWitness {
    pub pattern: String,
    pub report: ViolationReport,
    pub threshold: f64,
    /// Whether exact and frozen-angle costs agreed at the four triples involved.
    pub substituted: bool,
    pub substitution_error: f64,
    /// Same comparison with the frozen-angle cost.
    pub pi_gap: f64,
    /// Gap used for the verdict: `pi_gap` when substituted, the exact gap otherwise.
    pub gap: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub value: f64,
    pub auto: bool,
    pub search: Option<ParamSearch>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CeClassReport {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub eps: SearchOutcome,
    pub far: SearchOutcome,
    /// `f(eps)`: cost of the near DDI pair minus its third-coordinate swap.
    pub f_value: f64,
    /// Analytic third derivative of `f` at zero.
    pub f_third_derivative: f64,
    /// `6 f(eps) / eps^3`.
    pub f_scaled: f64,
    /// Richardson combination of `6 f(h) / h^3` at `h = 0.01, 0.005`.
    pub f_third_estimate: f64,
    pub witnesses: Vec<PatternWitness>,
}

fn near_pair(rho: &RadialMeasure, eps: f64) -> Result<(MonotoneMap, RadiiTuple, RadiiTuple)> {
    let map = MonotoneMap::new(rho, "DDI", 3)?;
    let x = map.orbit_at_quantile(1.0 / 12.0)?.points;
    let y = map.orbit(1.0 + eps)?.points;
    Ok((map, x, y))
}

fn far_orbits(rho: &RadialMeasure, pattern: &str, far: f64) -> Result<(RadiiTuple, RadiiTuple)> {
    let map = MonotoneMap::new(rho, pattern, 3)?;
    Ok((
        map.orbit(far + 1.0 / 3.0)?.points,
        map.orbit(far + 2.0 / 3.0)?.points,
    ))
}

const FAR_PATTERNS: [&str; 3] = ["DID", "IDD", "III"];

/// Largest frozen-angle error over the far orbits and all their swaps.
fn far_substitution_error(eps: f64, far: f64, opts: &SolverOptions) -> Result<f64> {
    let rho = RadialMeasure::near_far(far, eps)?;
    let mut triples = Vec::new();
    for p in FAR_PATTERNS {
        let (x, y) = far_orbits(&rho, p, far)?;
        for s in SwapPattern::all(3) {
            let (a, b) = crate::monotonicity::swap(&x, &y, &s)?;
            triples.push(a);
            triples.push(b);
        }
    }
    let errs = triples
        .par_iter()
        .map(|t| substitution_error(t, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Step 1 uses the near DDI pair; Step 2 spreads far orbits of the other patterns.
/// Missing parameters are searched: `eps` upward from 0.005 to a cap of 0.1 while the
/// DDI violation is measurable, then the smallest far position where the exact cost
/// matches the frozen-angle cost on every probed triple.
pub fn ceclass(eps: Option<f64>, far: Option<f64>, opts: &SolverOptions) -> Result<CeClassReport> {
    let cost = ExactCost::new(opts.clone());
    let tol = cost.tolerance();
    let measurable = |e: f64| -> Result<bool> {
        let f = comparison_functional_small_f(e, opts)?;
        let scale = 2.0 * exact_cost(&RadiiTuple::triple(1.0, 1.0, 1.0)?, opts)?.value;
        Ok(f > violation_threshold(tol, scale))
    };
    let eps = match eps {
        Some(e) => SearchOutcome {
            value: e,
            auto: false,
            search: None,
        },
        None => {
            let s = largest_satisfying(0.005, 0.1, SEARCH_REL_TOL, measurable)?;
            SearchOutcome {
                value: s.value,
                auto: true,
                search: Some(s),
            }
        }
    };
    let e = eps.value;
    let far = match far {
        Some(m) => SearchOutcome {
            value: m,
            auto: false,
            search: None,
        },
        None => {
            let start = (2.0 * (1.0 + 5.0 * e)).max(8.0);
            let s = smallest_satisfying(start, 1e6, SEARCH_REL_TOL, |m| {
                Ok(far_substitution_error(e, m, opts)? <= SUBSTITUTION_TOL)
            })?;
            SearchOutcome {
                value: s.value,
                auto: true,
                search: Some(s),
            }
        }
    };
    let m = far.value;
    let rho = RadialMeasure::near_far(m, e)?;

    let mut witnesses = Vec::new();
    let (_, x, y) = near_pair(&rho, e)?;
    let third = SwapPattern::new(&[1, 2], 3)?;
    let step1 = check_pair(&cost, &x, &y)?
        .into_iter()
        .find(|r| r.rearrangement == Rearrangement::Pattern(third))
        .expect("every swap is reported");
    let thr = violation_threshold(tol, step1.lhs);
    witnesses.push(PatternWitness {
        pattern: "DDI".into(),
        pi_gap: f64::NAN,
        gap: step1.gap,
        violated: step1.gap < -thr,
        threshold: thr,
        substituted: false,
        substitution_error: f64::NAN,
        report: step1.clone(),
    });

    for p in FAR_PATTERNS {
        let (x, y) = far_orbits(&rho, p, m)?;
        let exact = check_pair(&cost, &x, &y)?;
        let pi = check_pair(&PiCost, &x, &y)?;
        let (k, best) = exact
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.gap.total_cmp(&b.1.gap))
            .expect("eight swaps");
        let Rearrangement::Pattern(s) = best.rearrangement else {
            unreachable!()
        };
        let (a, b) = crate::monotonicity::swap(&x, &y, &s)?;
        let mut err: f64 = 0.0;
        for t in [&x, &y, &a, &b] {
            err = err.max(substitution_error(t, opts)?);
        }
        let substituted = err <= SUBSTITUTION_TOL;
        let pi_gap = pi[k].gap;
        let gap = if substituted { pi_gap } else { best.gap };
        let threshold = violation_threshold(tol, best.lhs);
        witnesses.push(PatternWitness {
            pattern: p.into(),
            report: best.clone(),
            threshold,
            substituted,
            substitution_error: err,
            pi_gap,
            gap,
            violated: gap < -threshold && best.gap < -threshold,
        });
    }

    let f_value = -step1.gap;
    let scaled =
        |h: f64| -> Result<f64> { Ok(6.0 * comparison_functional_small_f(h, opts)? / h.powi(3)) };
    let f_third_estimate = 2.0 * scaled(0.005)? - scaled(0.01)?;
    Ok(CeClassReport {
        config: ExperimentConfig::new("ceclass")
            .with("eps", e)
            .with("eps_auto", eps.auto)
            .with("M", m)
            .with("M_auto", far.auto)
            .with("search_rel_tol", SEARCH_REL_TOL)
            .with("substitution_tol", SUBSTITUTION_TOL)
            .with("solver", opts),
        f_value,
        f_third_derivative: Functional::ddi_near_pair().analytic().g3,
        f_scaled: 6.0 * f_value / e.powi(3),
        f_third_estimate,
        eps,
        far,
        witnesses,
    })
}

impl Report for CeClassReport {
    fn status(&self) -> Status {
        if self.witnesses.iter().all(|w| w.violated) {
            Status::Confirmed
        } else {
            Status::Inconclusive
        }
    }

    fn summary(&self) -> Vec<String> {
        let mut out = vec![
            format!(
                "eps {}{}",
                self.eps.value,
                if self.eps.auto { " (auto)" } else { "" }
            ),
            format!(
                "M {}{}",
                self.far.value,
                if self.far.auto { " (auto)" } else { "" }
            ),
            format!(
                "f(eps) {} ; 6 f / eps^3 = {:.6}",
                fmt_f64(self.f_value),
                self.f_scaled
            ),
            format!(
                "f'''(0) analytic {:.6}, finite differences {:.6}",
                self.f_third_derivative, self.f_third_estimate
            ),
        ];
        for w in &self.witnesses {
            let how = match &w.report.rearrangement {
                Rearrangement::Pattern(p) => format!("p = {:?}", p.indices()),
                Rearrangement::Partition(p) => p.label(),
            };
            out.push(format!(
                "{} {} {} -> {} gap {:.6e} ({}) {}",
                w.pattern,
                tuple_str(&w.report.x),
                tuple_str(&w.report.y),
                how,
                w.gap,
                if w.substituted {
                    "frozen-angle cost, validated"
                } else {
                    "exact cost"
                },
                if w.violated {
                    "violated"
                } else {
                    "inconclusive"
                }
            ));
        }
        out
    }

    fn artifact(&self) -> String {
        let summary = serde_json::json!({
            "status": self.status(),
            "eps": self.eps,
            "M": self.far,
            "f_value": self.f_value,
            "f_third_derivative": self.f_third_derivative,
            "f_scaled": self.f_scaled,
            "f_third_estimate": self.f_third_estimate,
        });
        json_lines(&self.config, &self.witnesses, &summary)
    }
}

// --------------------------------------------------------------------- example_cpi

#[derive(Clone, Debug, Serialize)]
pub struct CpiCertReport {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub far: SearchOutcome,
    pub samples: usize,
    pub seed: u64,
    pub checks: usize,
    pub violations: Vec<ViolationReport>,
    /// Smallest gap over swaps that actually change the pair.
    pub min_gap: Option<f64>,
    pub evidence: &'static str,
}

fn cpi_probe_holds(far: f64, opts: &SolverOptions) -> Result<bool> {
    let steps = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut triples = Vec::new();
    for a in steps {
        for b in steps {
            for c in [far, far + 0.5, far + 1.0, 2.0 * far, 10.0 * far] {
                triples.push(RadiiTuple::triple(1.0 + a, 3.0 + b, c)?);
            }
        }
    }
    let errs = triples
        .par_iter()
        .map(|t| substitution_error(t, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.iter().all(|e| *e <= SUBSTITUTION_TOL))
}

/// DDI map of the three-block measure, `samples` random orbit pairs, every swap.
pub fn example_cpi(
    far: Option<f64>,
    samples: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<CpiCertReport> {
    let far = match far {
        Some(m) => SearchOutcome {
            value: m,
            auto: false,
            search: None,
        },
        None => {
            let s = smallest_satisfying(5.0, 1e6, SEARCH_REL_TOL, |m| cpi_probe_holds(m, opts))?;
            SearchOutcome {
                value: s.value,
                auto: true,
                search: Some(s),
            }
        }
    };
    let rho = RadialMeasure::three_blocks(far.value)?;
    let map = MonotoneMap::new(&rho, "DDI", 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels: Vec<(f64, f64)> = (0..samples)
        .map(|_| (rng.gen_range(0.0..1.0 / 3.0), rng.gen_range(0.0..1.0 / 3.0)))
        .collect();
    let cost = ExactCost::new(opts.clone());
    let tol = cost.tolerance();
    let per_pair = levels
        .par_iter()
        .map(|&(p, q)| {
            let x = map.orbit_at_quantile(p)?.points;
            let y = map.orbit_at_quantile(q)?.points;
            check_pair(&cost, &x, &y)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    let mut min_gap: Option<f64> = None;
    let mut checks = 0;
    for r in per_pair.into_iter().flatten() {
        checks += 1;
        let Rearrangement::Pattern(s) = r.rearrangement else {
            unreachable!()
        };
        let trivial = s.indices().is_empty() || s.indices().len() == s.arity();
        if !trivial {
            min_gap = Some(min_gap.map_or(r.gap, |g| g.min(r.gap)));
        }
        if r.is_violation(tol) {
            violations.push(r);
        }
    }
    violations.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    Ok(CpiCertReport {
        config: ExperimentConfig::new("example-cpi")
            .with("M", far.value)
            .with("M_auto", far.auto)
            .with("samples", samples)
            .with("seed", seed)
            .with("search_rel_tol", SEARCH_REL_TOL)
            .with("substitution_tol", SUBSTITUTION_TOL)
            .with("solver", opts),
        far,
        samples,
        seed,
        checks,
        violations,
        min_gap,
        evidence: "sampled evidence, not a proof",
    })
}

impl Report for CpiCertReport {
    fn status(&self) -> Status {
        if self.violations.is_empty() {
            Status::Confirmed
        } else {
            Status::Inconclusive
        }
    }

    fn summary(&self) -> Vec<String> {
        vec![
            format!(
                "M {}{}",
                self.far.value,
                if self.far.auto { " (auto)" } else { "" }
            ),
            format!(
                "{} orbit pairs (seed {}), {} swap checks: {} violations",
                self.samples,
                self.seed,
                self.checks,
                self.violations.len()
            ),
            format!(
                "smallest nontrivial gap {}",
                self.min_gap.map_or_else(|| "n/a".into(), fmt_f64)
            ),
            self.evidence.to_string(),
        ]
    }

    fn artifact(&self) -> String {
        let summary = serde_json::json!({
            "status": self.status(),
            "M": self.far,
            "samples": self.samples,
            "checks": self.checks,
            "violations": self.violations.len(),
            "min_gap": self.min_gap,
            "evidence": self.evidence,
        });
        json_lines(&self.config, &self.violations, &summary)
    }
}

// ------------------------------------------------------------------------ fourmarg

#[derive(Clone, Debug, Serialize)]
pub struct FourMargRun {
    pub eps: f64,
    /// Every split of the eight radii with its total cost, lexicographic.
    pub partitions: Vec<(String, f64)>,
    pub minimizer: String,
    pub min_value: f64,
    /// Whether the minimum is shared by every split (equal radii).
    pub all_tied: bool,
    pub reference_value: f64,
    /// Split induced by the two orbits of each cyclical four-cell map.
    pub map_pairings: Vec<(String, String)>,
    /// Patterns whose orbit pairing attains the minimizer.
    pub realized_by: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FourMargReport {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub eps: f64,
    pub reference: String,
    pub runs: Vec<FourMargRun>,
    pub stable: bool,
    pub matches_reference: bool,
    pub discrepancy: Option<String>,
}

fn reference_partition() -> Partition {
    Partition(vec![1, 5, 6, 7], vec![2, 3, 4, 8])
}

fn normalized(mut a: Vec<usize>, mut b: Vec<usize>) -> Partition {
    a.sort_unstable();
    b.sort_unstable();
    if a[0] == 1 {
        Partition(a, b)
    } else {
        Partition(b, a)
    }
}

fn fourmarg_run(eps: f64, cost: &ExactCost) -> Result<FourMargRun> {
    let radii: Vec<f64> = (1..=8).map(|i| 1.0 + (2 * i - 1) as f64 * eps).collect();
    let reference = reference_partition();
    let pick =
        |idx: &[usize]| RadiiTuple::new(&idx.iter().map(|i| radii[i - 1]).collect::<Vec<_>>());
    let parts = Partition::all(4);
    let values = if eps == 0.0 {
        // pooled coordinates coincide, so the pair test refuses them
        let v = 2.0 * cost.eval(&RadiiTuple::new(&[1.0; 4])?)?;
        vec![v; parts.len()]
    } else {
        let x = pick(&[1, 3, 5, 7])?;
        let y = pick(&[2, 4, 6, 8])?;
        check_pair_strong(cost, &x, &y)?
            .iter()
            .map(|r| r.rhs)
            .collect()
    };
    let (k, &min_value) = values
        .iter()
        .enumerate()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("35 splits");
    let tol = cost.tolerance() * min_value.max(1.0);
    let all_tied = values.iter().all(|v| (v - min_value).abs() <= tol);
    let reference_value = values[parts.iter().position(|p| *p == reference).expect("listed")];

    let mut map_pairings = Vec::new();
    let mut realized_by = Vec::new();
    if eps > 0.0 {
        let rho = RadialMeasure::equally_spaced(eps, 4)?;
        let index = |r: f64| (((r - 1.0) / eps + 1.0) / 2.0).round() as usize;
        for p in Pattern::all_cyclical(4) {
            let map = MonotoneMap::from_pattern(&rho, p.clone(), 4)?;
            let a = map
                .orbit(radii[0])?
                .points
                .as_slice()
                .iter()
                .map(|r| index(*r))
                .collect();
            let b = map
                .orbit(radii[1])?
                .points
                .as_slice()
                .iter()
                .map(|r| index(*r))
                .collect();
            let split = normalized(a, b);
            if split == parts[k] {
                realized_by.push(p.to_string());
            }
            map_pairings.push((p.to_string(), split.label()));
        }
    }
    Ok(FourMargRun {
        eps,
        partitions: parts
            .iter()
            .map(|p| p.label())
            .zip(values.iter().copied())
            .collect(),
        minimizer: parts[k].label(),
        min_value,
        all_tied,
        reference_value,
        map_pairings,
        realized_by,
    })
}

/// Splits of `1 + (2i - 1) eps`, `i = 1..8`, at `eps` and each sweep value.
pub fn fourmarg(eps: f64, sweep: &[f64], opts: &SolverOptions) -> Result<FourMargReport> {
    if !(eps >= 0.0) || sweep.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InvalidArgument("eps must be nonnegative".into()));
    }
    let cost = ExactCost::new(opts.clone());
    let mut values: Vec<f64> = sweep.to_vec();
    if !values.contains(&eps) {
        values.push(eps);
    }
    let runs = values
        .iter()
        .map(|e| fourmarg_run(*e, &cost))
        .collect::<Result<Vec<_>>>()?;
    let main = runs.iter().find(|r| r.eps == eps).expect("main eps is run");
    let reference = reference_partition().label();
    let stable = runs
        .iter()
        .all(|r| r.minimizer == main.minimizer && !r.all_tied);
    let matches_reference = !main.all_tied && main.minimizer == reference;
    let discrepancy = if main.all_tied {
        Some("all splits tie; no minimizer to compare".to_string())
    } else if !matches_reference {
        Some(format!(
            "numerical minimizer {} (total {}) differs from {} (total {}, excess {:.3e})",
            main.minimizer,
            fmt_f64(main.min_value),
            reference,
            fmt_f64(main.reference_value),
            main.reference_value - main.min_value
        ))
    } else if !stable {
        Some("minimizer changes across the eps sweep".to_string())
    } else if !main.realized_by.is_empty() {
        Some(format!("minimizer is realized by {:?}", main.realized_by))
    } else {
        None
    };
    Ok(FourMargReport {
        config: ExperimentConfig::new("fourmarg")
            .with("eps", eps)
            .with("sweep", sweep)
            .with("solver", opts),
        eps,
        reference,
        runs,
        stable,
        matches_reference,
        discrepancy,
    })
}

impl Report for FourMargReport {
    fn status(&self) -> Status {
        if self.discrepancy.is_none() {
            Status::Confirmed
        } else {
            Status::Inconclusive
        }
    }

    fn summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.runs {
            out.push(format!(
                "eps {}: minimizer {} total {}{}",
                r.eps,
                r.minimizer,
                fmt_f64(r.min_value),
                if r.all_tied { " (all splits tie)" } else { "" }
            ));
            out.push(format!(
                "  {} total {} excess {:.3e}",
                self.reference,
                fmt_f64(r.reference_value),
                r.reference_value - r.min_value
            ));
            if !r.map_pairings.is_empty() {
                let pairs: Vec<String> = r
                    .map_pairings
                    .iter()
                    .map(|(p, s)| format!("{p}:{s}"))
                    .collect();
                out.push(format!("  map pairings {}", pairs.join(" ")));
                out.push(format!(
                    "  minimizer realized by a map: {}",
                    if r.realized_by.is_empty() {
                        "no".to_string()
                    } else {
                        r.realized_by.join(",")
                    }
                ));
            }
        }
        out.push(format!("stable across sweep: {}", self.stable));
        if let Some(d) = &self.discrepancy {
            out.push(format!("discrepancy: {d}"));
        }
        out
    }

    fn artifact(&self) -> String {
        let summary = serde_json::json!({
            "status": self.status(),
            "reference": self.reference,
            "stable": self.stable,
            "matches_reference": self.matches_reference,
            "discrepancy": self.discrepancy,
        });
        json_lines(&self.config, &self.runs, &summary)
    }
}

// ------------------------------------------------------------------------------ lp

#[derive(Clone, Debug, Serialize)]
pub struct LpReport {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub comparisons: Vec<Comparison>,
    /// Gap below which a map plan counts as matching the optimum.
    pub threshold: f64,
}

/// LP optimum against each pattern's plan at `n` atoms and, with `refine`, at `2n`.
pub fn lp(
    rho: &RadialMeasure,
    n: usize,
    patterns: &[Pattern],
    refine: bool,
    opts: &SolverOptions,
) -> Result<LpReport> {
    if patterns.is_empty() {
        return Err(Error::InvalidArgument("no patterns given".into()));
    }
    if patterns.iter().any(|p| p.len() != patterns[0].len()) {
        return Err(Error::InvalidArgument("patterns differ in length".into()));
    }
    let cost = ExactCost::new(opts.clone());
    let mut sizes = vec![n];
    if refine {
        sizes.push(2 * n);
    }
    let comparisons = sizes
        .iter()
        .map(|m| compare(rho, *m, patterns, &cost))
        .collect::<Result<Vec<_>>>()?;
    let scale = comparisons[0].lp_value.abs();
    let threshold = 10.0 * (CERTIFICATE_TOL + cost.tolerance()) * (1.0 + scale);
    let labels: Vec<String> = patterns.iter().map(|p| p.to_string()).collect();
    Ok(LpReport {
        config: ExperimentConfig::new("lp")
            .with("n", n)
            .with("refine", refine)
            .with("patterns", labels)
            .with("measure", rho.pieces())
            .with("solver", opts),
        comparisons,
        threshold,
    })
}

impl LpReport {
    /// JSON lines of the LP plan at the first resolution, metadata first.
    pub fn plan_json_lines(&self) -> String {
        let c = &self.comparisons[0];
        let mut cfg = self.config.clone();
        cfg.set("plan_n", c.n);
        cfg.set("lp_value", c.lp_value);
        let mut out = cfg.json_header();
        out.push('\n');
        out.push_str(&c.lp_plan.to_json_lines());
        out
    }
}

impl Report for LpReport {
    fn status(&self) -> Status {
        let certified = self
            .comparisons
            .iter()
            .all(|c| c.min_reduced_cost >= -CERTIFICATE_TOL);
        let separated = self.comparisons[0]
            .rows
            .iter()
            .all(|r| r.gap.is_some_and(|g| g > self.threshold));
        if certified && separated {
            Status::Confirmed
        } else {
            Status::Inconclusive
        }
    }

    fn summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.comparisons {
            out.push(format!(
                "n {}: lp {} (min reduced cost {:.3e})",
                c.n,
                fmt_f64(c.lp_value),
                c.min_reduced_cost
            ));
            for r in &c.rows {
                match (r.plan_value, r.gap) {
                    (Some(v), Some(g)) => out.push(format!(
                        "  {} plan {} gap {:.6e} lp on graph {}",
                        r.pattern,
                        fmt_f64(v),
                        g,
                        r.lp_on_graph.unwrap_or(false)
                    )),
                    _ => out.push(format!(
                        "  {} no plan: {}",
                        r.pattern,
                        r.error.as_deref().unwrap_or("unknown")
                    )),
                }
            }
        }
        out
    }

    fn artifact(&self) -> String {
        let mut header = vec![
            ("command".to_string(), self.config.command.clone()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            (
                "threads".to_string(),
                rayon::current_num_threads().to_string(),
            ),
        ];
        for (k, v) in &self.config.params {
            header.push((k.clone(), v.to_string()));
        }
        header.push(("threshold".to_string(), format!("{:.16e}", self.threshold)));
        comparison_csv(&header, &self.comparisons)
    }
}
