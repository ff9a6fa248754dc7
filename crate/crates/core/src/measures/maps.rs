use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::RadialMeasure;
use crate::coulomb::{RadialCost, RadiiTuple};
use crate::error::{Error, Result};

/// Points this close to a breakpoint have no well-defined image.
pub const BREAKPOINT_GAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

impl Monotonicity {
    pub fn letter(self) -> char {
        match self {
            Monotonicity::Increasing => 'I',
            Monotonicity::Decreasing => 'D',
        }
    }
}

/// Word over `{D, I}`; letter `k` says how cell `k` is sent onto cell `k + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<Monotonicity>);

impl Pattern {
    pub fn letters(&self) -> &[Monotonicity] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Going once around the cycle composes the pieces; the result is an increasing
    /// self-map of the first cell, hence the identity, exactly when it reverses
    /// orientation an even number of times.
    pub fn is_cyclical(&self) -> bool {
        self.0
            .iter()
            .filter(|m| **m == Monotonicity::Decreasing)
            .count()
            % 2
            == 0
    }

    /// All cyclical patterns of the given length, ordered as binary numbers with `D = 1`
    /// and the first letter most significant (`III, IDD, DID, DDI` for three cells).
    pub fn all_cyclical(cells: usize) -> Vec<Pattern> {
        (0..1usize << cells)
            .map(|bits| {
                Pattern(
                    (0..cells)
                        .map(|k| {
                            if bits >> (cells - 1 - k) & 1 == 1 {
                                Monotonicity::Decreasing
                            } else {
                                Monotonicity::Increasing
                            }
                        })
                        .collect(),
                )
            })
            .filter(Pattern::is_cyclical)
            .collect()
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Monotonicity::Increasing),
                'D' => Ok(Monotonicity::Decreasing),
                _ => Err(Error::InadmissiblePattern(format!("letter {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Pattern)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.0 {
            write!(f, "{}", m.letter())?;
        }
        Ok(())
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `(x, T(x), ..., T^(N-1)(x))` together with the cell of each coordinate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Orbit {
    pub points: RadiiTuple,
    pub cells: Vec<usize>,
}

/// Cyclical map sending each equal-mass cell monotonically onto the next one.
///
/// On cell `k` write `u = F(x) - k/N`. An increasing piece sends `x` to
/// `Q((k+1)/N + u)` and a decreasing one to `Q((k+2)/N - u)`, cell indices mod `N`.
#[derive(Clone, Debug)]
pub struct MonotoneMap {
    measure: RadialMeasure,
    pattern: Pattern,
    breakpoints: Vec<f64>,
}

impl MonotoneMap {
    pub fn new(measure: &RadialMeasure, pattern: &str, cells: usize) -> Result<Self> {
        Self::from_pattern(measure, pattern.parse()?, cells)
    }

    pub fn from_pattern(measure: &RadialMeasure, pattern: Pattern, cells: usize) -> Result<Self> {
        if cells != 3 && cells != 4 {
            return Err(Error::InvalidArgument(format!(
                "need 3 or 4 cells, got {cells}"
            )));
        }
        if pattern.len() != cells {
            return Err(Error::InadmissiblePattern(format!(
                "{pattern} has {} letters for {cells} cells",
                pattern.len()
            )));
        }
        if !pattern.is_cyclical() {
            return Err(Error::InadmissiblePattern(format!(
                "{pattern} does not return to the identity after {cells} steps"
            )));
        }
        Ok(Self {
            measure: measure.clone(),
            breakpoints: measure.breakpoints(cells),
            pattern,
        })
    }

    pub fn cells(&self) -> usize {
        self.pattern.len()
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn measure(&self) -> &RadialMeasure {
        &self.measure
    }

    fn step(&self, cell: usize, u: f64) -> (usize, f64) {
        let n = self.cells();
        let next = (cell + 1) % n;
        let u = match self.pattern.0[cell] {
            Monotonicity::Increasing => u,
            Monotonicity::Decreasing => 1.0 / n as f64 - u,
        };
        (next, u)
    }

    fn locate(&self, q: f64) -> (usize, f64) {
        let n = self.cells();
        let cell = ((q * n as f64).floor() as usize).min(n - 1);
        (cell, q - cell as f64 / n as f64)
    }

    fn check_point(&self, x: f64) -> Result<()> {
        if !self.measure.pieces().iter().any(|p| p.lo <= x && x <= p.hi) {
            return Err(Error::InvalidArgument(format!(
                "{x} is outside the support"
            )));
        }
        if let Some(&b) = self
            .breakpoints
            .iter()
            .find(|b| (x - **b).abs() <= BREAKPOINT_GAP)
        {
            return Err(Error::BreakpointHit { x, breakpoint: b });
        }
        Ok(())
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        self.check_point(x)?;
        let (cell, u) = self.locate(self.measure.cdf(x));
        let (next, u) = self.step(cell, u);
        Ok(self.measure.quantile(next as f64 / self.cells() as f64 + u))
    }

    pub fn orbit(&self, x: f64) -> Result<Orbit> {
        self.check_point(x)?;
        self.trace(self.measure.cdf(x), Some(x))
    }

    /// Orbit of `Q(q)`. Cell boundaries are allowed: they carry no mass and the
    /// left-continuous quantile picks one of the two images.
    pub fn orbit_at_quantile(&self, q: f64) -> Result<Orbit> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!(
                "quantile level {q} outside [0, 1]"
            )));
        }
        self.trace(q, None)
    }

    fn trace(&self, q: f64, start: Option<f64>) -> Result<Orbit> {
        let n = self.cells();
        let (mut cell, mut u) = self.locate(q);
        let mut points = Vec::with_capacity(n);
        let mut cells = Vec::with_capacity(n);
        points.push(start.unwrap_or_else(|| self.measure.quantile(q)));
        cells.push(cell);
        for _ in 1..n {
            (cell, u) = self.step(cell, u);
            points.push(self.measure.quantile(cell as f64 / n as f64 + u));
            cells.push(cell);
        }
        Ok(Orbit {
            points: RadiiTuple::new(&points)?,
            cells,
        })
    }

    /// Equal-mass sample points `Q((i - 1/2) / n)`, `i = 1..n`.
    pub fn quadrature_levels(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| (i as f64 + 0.5) / n as f64)
    }
}

/// `integral of c(x, T(x), ...) d rho(x)` by the equal-mass midpoint rule on `n_quad` cells.
pub fn map_cost<C: RadialCost + ?Sized>(map: &MonotoneMap, cost: &C, n_quad: usize) -> Result<f64> {
    if n_quad < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n_quad >= 2, got {n_quad}"
        )));
    }
    let values = MonotoneMap::quadrature_levels(n_quad)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|q| cost.eval(&map.orbit_at_quantile(q)?.points))
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.iter().sum::<f64>() / n_quad as f64)
}
