use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::{fmt_f64, ExperimentConfig, Report, Status};
use crate::coulomb::{
    angle_distance, hessian_pi_determinant_margin, normalize_angle, stationary_points, AngleConfig,
    RadiiTuple, SolverOptions,
};
use crate::error::{Error, Result};

/// `NxM:lo:hi`: `N` values of `r2` and `M` values of `r3`, both evenly spaced over
/// `[lo, hi]` with the endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("grid spec {s:?} is not NxM:lo:hi"));
        let mut parts = s.split(':');
        let (Some(dims), Some(lo), Some(hi), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad());
        };
        let (nx, ny) = dims.split_once(['x', 'X']).ok_or_else(bad)?;
        let spec = GridSpec {
            nx: nx.trim().parse().map_err(|_| bad())?,
            ny: ny.trim().parse().map_err(|_| bad())?,
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
        };
        if spec.nx < 2 || spec.ny < 2 || !(spec.lo < spec.hi) || !(spec.lo > 0.0) {
            return Err(bad());
        }
        Ok(spec)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

// -------------------------------------------------------------------------- region

#[derive(Clone, Debug, Serialize)]
pub struct RegionReport {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub r1: f64,
    pub grid: GridSpec,
    /// `(r2, r3, margin)` for every grid point with `r1 <= r2 <= r3`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Grid points outside the sorted wedge.
    pub skipped: usize,
    /// Per `r2` column, `(r2, r3 - r2)` at the first grid point with positive margin.
    pub boundary: Vec<(f64, f64)>,
}

pub fn region(r1: f64, grid: GridSpec) -> Result<RegionReport> {
    if !(r1 > 0.0) {
        return Err(Error::InvalidRadii(format!("r1 = {r1} is not positive")));
    }
    let mut rows = Vec::new();
    let mut skipped = 0;
    let mut boundary = Vec::new();
    for r2 in linspace(grid.lo, grid.hi, grid.nx) {
        let mut first = None;
        for r3 in linspace(grid.lo, grid.hi, grid.ny) {
            if !(r1 <= r2 && r2 <= r3) {
                skipped += 1;
                continue;
            }
            let m = hessian_pi_determinant_margin(&RadiiTuple::triple(r1, r2, r3)?)?;
            if m > 0.0 && first.is_none() {
                first = Some(r3 - r2);
            }
            rows.push((r2, r3, m));
        }
        if let Some(d) = first {
            boundary.push((r2, d));
        }
    }
    Ok(RegionReport {
        config: ExperimentConfig::new("region")
            .with("r1", r1)
            .with("grid", grid),
        r1,
        grid,
        rows,
        skipped,
        boundary,
    })
}

impl Report for RegionReport {
    fn status(&self) -> Status {
        Status::Confirmed
    }

    fn summary(&self) -> Vec<String> {
        let positive = self.rows.iter().filter(|r| r.2 > 0.0).count();
        let mut out = vec![format!(
            "{} points ({} with positive margin), {} outside r1 <= r2 <= r3",
            self.rows.len(),
            positive,
            self.skipped
        )];
        let step = (self.boundary.len() / 8).max(1);
        for (r2, d) in self.boundary.iter().step_by(step) {
            out.push(format!(
                "  r2 {r2:.4}: margin turns positive at r3 - r2 = {d:.4}"
            ));
        }
        out
    }

    /// Columns `r1,r2,r3,margin,sign` with `sign` in `{-1, 0, 1}`.
    fn artifact(&self) -> String {
        let mut out = self.config.csv_header();
        out.push_str("r1,r2,r3,margin,sign\n");
        for (r2, r3, m) in &self.rows {
            let sign = if *m > 0.0 {
                1
            } else if *m < 0.0 {
                -1
            } else {
                0
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{sign}",
                fmt_f64(self.r1),
                fmt_f64(*r2),
                fmt_f64(*r3),
                fmt_f64(*m)
            );
        }
        out
    }
}

// -------------------------------------------------------------------------- curves

/// Branches in CSV order.
const BRANCHES: [&str; 4] = ["vertical_0", "vertical_pi", "diagonal_0", "diagonal_pi"];

/// One sample of a branch; `theta2` is `None` where the root count was wrong.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub branch: &'static str,
    pub theta3: f64,
    pub theta2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Intersection {
    pub vertical: &'static str,
    pub diagonal: &'static str,
    pub theta2: f64,
    pub theta3: f64,
    /// A stationary point of the potential lies within `1e-6` rad.
    pub matched: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvesReport {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub radii: RadiiTuple,
    pub points: Vec<CurvePoint>,
    pub gaps: usize,
    pub intersections: Vec<Intersection>,
    pub stationary_count: usize,
    /// Largest distance of a vertical branch from its reference angle `0` or `pi`.
    pub max_vertical_deviation: f64,
}

fn dist3(a: f64, b: f64, t: f64) -> f64 {
    let s = (0.5 * t).sin();
    ((a - b) * (a - b) + 4.0 * a * b * s * s).powf(1.5)
}

struct Curves {
    r: [f64; 3],
    scan: usize,
}

impl Curves {
    /// Zero set is where the angle gradient is orthogonal to `(1, 1)`.
    fn vertical(&self, t2: f64, t3: f64) -> f64 {
        let [r1, r2, r3] = self.r;
        r1 * r2 * t2.sin() / dist3(r1, r2, t2) + r1 * r3 * t3.sin() / dist3(r1, r3, t3)
    }

    /// Zero set is where the `theta3` derivative vanishes.
    fn diagonal(&self, t2: f64, t3: f64) -> f64 {
        let [r1, r2, r3] = self.r;
        -r1 * r3 * t3.sin() / dist3(r1, r3, t3) + r2 * r3 * (t2 - t3).sin() / dist3(r2, r3, t2 - t3)
    }

    fn roots(&self, t3: f64, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let n = self.scan;
        let at = |i: usize| TAU * i as f64 / n as f64;
        let mut out = Vec::new();
        let first = f(at(0), t3);
        let mut prev = first;
        for i in 1..=n {
            let cur = if i == n { first } else { f(at(i), t3) };
            if prev == 0.0 {
                out.push(at(i - 1));
            } else if prev * cur < 0.0 {
                let (mut a, mut b, mut fa) = (at(i - 1), at(i), prev);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    let fm = f(m, t3);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if (fm < 0.0) == (fa < 0.0) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                out.push(normalize_angle(0.5 * (a + b)));
            }
            prev = cur;
        }
        out.dedup_by(|a, b| angle_distance(*a, *b) < 1e-9);
        if out.len() > 1 && angle_distance(out[0], out[out.len() - 1]) < 1e-9 {
            out.pop();
        }
        out
    }

    /// `theta2` on the named branch, if exactly one root falls in its class.
    fn branch(&self, name: &str, t3: f64) -> Option<f64> {
        let (roots, offset) = match name {
            "vertical_0" | "vertical_pi" => (self.roots(t3, |a, b| self.vertical(a, b)), 0.0),
            _ => (self.roots(t3, |a, b| self.diagonal(a, b)), t3),
        };
        let near_zero = name.ends_with("_0");
        let mut hits = roots.into_iter().filter(|t2| {
            let psi = t2 - offset;
            (angle_distance(psi, 0.0) < angle_distance(psi, PI)) == near_zero
        });
        let first = hits.next()?;
        hits.next().is_none().then_some(first)
    }
}

fn wrapped(d: f64) -> f64 {
    let v = d.rem_euclid(TAU);
    if v > PI {
        v - TAU
    } else {
        v
    }
}

/// Samples `theta3` at `samples` points and root-finds `theta2` on each branch; the
/// crossings of vertical and diagonal branches are refined by bisection in `theta3`.
pub fn curves(radii: [f64; 3], samples: usize, opts: &SolverOptions) -> Result<CurvesReport> {
    if samples < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 samples, got {samples}"
        )));
    }
    let r = RadiiTuple::triple(radii[0], radii[1], radii[2])?;
    let c = Curves {
        r: radii,
        scan: 720,
    };
    let t3s: Vec<f64> = (0..samples)
        .map(|i| TAU * (i as f64 + 0.25) / samples as f64)
        .collect();
    let mut points = Vec::new();
    let mut gaps = 0;
    let mut max_vertical_deviation: f64 = 0.0;
    let mut table = vec![Vec::with_capacity(samples); BRANCHES.len()];
    for name in BRANCHES {
        let col = BRANCHES.iter().position(|b| *b == name).expect("listed");
        for &t3 in &t3s {
            let t2 = c.branch(name, t3);
            match t2 {
                None => gaps += 1,
                Some(v) if name == "vertical_0" => {
                    max_vertical_deviation = max_vertical_deviation.max(angle_distance(v, 0.0))
                }
                Some(v) if name == "vertical_pi" => {
                    max_vertical_deviation = max_vertical_deviation.max(angle_distance(v, PI))
                }
                Some(_) => {}
            }
            table[col].push(t2);
            points.push(CurvePoint {
                branch: name,
                theta3: t3,
                theta2: t2,
            });
        }
    }

    let stationary = stationary_points(&r, opts)?;
    let mut intersections = Vec::new();
    for v in 0..2 {
        for d in 2..4 {
            let h = |t3: f64| {
                Some(wrapped(
                    c.branch(BRANCHES[v], t3)? - c.branch(BRANCHES[d], t3)?,
                ))
            };
            for i in 0..samples {
                let (a, b) = (
                    t3s[i],
                    if i + 1 < samples {
                        t3s[i + 1]
                    } else {
                        t3s[0] + TAU
                    },
                );
                let (Some(ha), Some(hb)) = (
                    table[v][i].zip(table[d][i]).map(|(x, y)| wrapped(x - y)),
                    h(b),
                ) else {
                    continue;
                };
                if ha.abs() > 1.0 || hb.abs() > 1.0 || (ha < 0.0) == (hb < 0.0) && ha != 0.0 {
                    continue;
                }
                let (mut lo, mut hi, mut hlo) = (a, b, ha);
                let mut ok = true;
                for _ in 0..60 {
                    let m = 0.5 * (lo + hi);
                    let Some(hm) = h(m) else {
                        ok = false;
                        break;
                    };
                    if (hm < 0.0) == (hlo < 0.0) {
                        lo = m;
                        hlo = hm;
                    } else {
                        hi = m;
                    }
                }
                let t3 = normalize_angle(0.5 * (lo + hi));
                let Some(t2) = c.branch(BRANCHES[v], t3).filter(|_| ok) else {
                    continue;
                };
                let here = AngleConfig::new(&[t2, t3])?;
                let matched = stationary
                    .iter()
                    .any(|p| p.angles.torus_distance(&here) < 1e-6);
                intersections.push(Intersection {
                    vertical: BRANCHES[v],
                    diagonal: BRANCHES[d],
                    theta2: t2,
                    theta3: t3,
                    matched,
                });
            }
        }
    }
    Ok(CurvesReport {
        config: ExperimentConfig::new("curves")
            .with("r", radii)
            .with("samples", samples)
            .with("solver", opts),
        radii: r,
        points,
        gaps,
        intersections,
        stationary_count: stationary.len(),
        max_vertical_deviation,
    })
}

impl Report for CurvesReport {
    fn status(&self) -> Status {
        let complete = self.gaps == 0
            && self.intersections.len() == 4
            && self.stationary_count == 4
            && self.intersections.iter().all(|i| i.matched);
        if complete {
            Status::Confirmed
        } else {
            Status::Inconclusive
        }
    }

    fn summary(&self) -> Vec<String> {
        let mut out = vec![
            format!(
                "{} curve samples, {} gaps, max vertical deviation {:.3e}",
                self.points.len(),
                self.gaps,
                self.max_vertical_deviation
            ),
            format!(
                "{} intersections, {} stationary points",
                self.intersections.len(),
                self.stationary_count
            ),
        ];
        for i in &self.intersections {
            out.push(format!(
                "  {} x {}: theta2 {:.9} theta3 {:.9} {}",
                i.vertical,
                i.diagonal,
                i.theta2,
                i.theta3,
                if i.matched {
                    "matches a stationary point"
                } else {
                    "UNMATCHED"
                }
            ));
        }
        out
    }

    /// Columns `branch,theta3,theta2`; gaps have `theta2 = nan`, and intersections follow
    /// the four branches with `branch = intersection`.
    fn artifact(&self) -> String {
        let mut cfg = self.config.clone();
        cfg.set("gaps", self.gaps);
        cfg.set("max_vertical_deviation", self.max_vertical_deviation);
        cfg.set("stationary_count", self.stationary_count);
        let mut out = cfg.csv_header();
        out.push_str("branch,theta3,theta2\n");
        for p in &self.points {
            let t2 = p.theta2.map_or_else(|| "nan".to_string(), fmt_f64);
            let _ = writeln!(out, "{},{},{t2}", p.branch, fmt_f64(p.theta3));
        }
        for i in &self.intersections {
            let _ = writeln!(
                out,
                "intersection,{},{}",
                fmt_f64(i.theta3),
                fmt_f64(i.theta2)
            );
        }
        out
    }
}
