//! Piecewise-constant radial measures and the cyclical monotone maps built on them.

mod maps;

pub use maps::{map_cost, MonotoneMap, Monotonicity, Orbit, Pattern, BREAKPOINT_GAP};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a measure given by the user.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// One interval `[lo, hi)` carrying a constant density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
}

impl DensityPiece {
    pub fn mass(&self) -> f64 {
        self.density * (self.hi - self.lo)
    }
}

/// Probability measure on the positive half-line with piecewise-constant density.
///
/// Pieces are kept sorted; pieces with zero density are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialMeasure {
    pieces: Vec<DensityPiece>,
    // mass to the left of each piece
    cum: Vec<f64>,
}

impl RadialMeasure {
    pub fn new(mut pieces: Vec<DensityPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidMeasure("no pieces".into()));
        }
        for p in &pieces {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.density.is_finite()) {
                return Err(Error::InvalidMeasure(format!("non-finite piece {p:?}")));
            }
            if p.lo < 0.0 || p.lo >= p.hi {
                return Err(Error::InvalidMeasure(format!(
                    "interval [{}, {}) is empty or negative",
                    p.lo, p.hi
                )));
            }
            if p.density < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "negative density {}",
                    p.density
                )));
            }
        }
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in pieces.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::InvalidMeasure(format!(
                    "intervals [{}, {}) and [{}, {}) overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        let total: f64 = pieces.iter().map(DensityPiece::mass).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "total mass {total} is not 1"
            )));
        }
        pieces.retain(|p| p.density > 0.0);
        let mut cum = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            cum.push(acc);
            acc += p.mass();
        }
        Ok(Self { pieces, cum })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![DensityPiece {
            lo,
            hi,
            density: 1.0 / (hi - lo),
        }])
    }

    /// Uniform on `[1, 1 + 4 k eps]`, the equally spaced measure for `k`-marginal problems
    /// (`k = 3` gives `[1, 1 + 12 eps]`).
    pub fn equally_spaced(eps: f64, marginals: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps must be positive, got {eps}"
            )));
        }
        Self::uniform(1.0, 1.0 + 4.0 * marginals as f64 * eps)
    }

    /// Mass 5/6 spread over `[1, 1 + 5 eps]` and 1/6 over `[far, far + 1]`.
    pub fn near_far(far: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || far <= 1.0 + 5.0 * eps {
            return Err(Error::InvalidArgument(format!(
                "need eps > 0 and far > 1 + 5 eps, got eps = {eps}, far = {far}"
            )));
        }
        Self::new(vec![
            DensityPiece {
                lo: 1.0,
                hi: 1.0 + 5.0 * eps,
                density: 1.0 / (6.0 * eps),
            },
            DensityPiece {
                lo: far,
                hi: far + 1.0,
                density: 1.0 / 6.0,
            },
        ])
    }

    /// Mass 1/3 on each of `[1, 2]`, `[3, 4]` and `[far, far + 1]`.
    pub fn three_blocks(far: f64) -> Result<Self> {
        if far < 4.0 {
            return Err(Error::InvalidArgument(format!("need far >= 4, got {far}")));
        }
        let third = 1.0 / 3.0;
        Self::new(vec![
            DensityPiece {
                lo: 1.0,
                hi: 2.0,
                density: third,
            },
            DensityPiece {
                lo: 3.0,
                hi: 4.0,
                density: third,
            },
            DensityPiece {
                lo: far,
                hi: far + 1.0,
                density: third,
            },
        ])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pieces: Vec<DensityPiece> =
            serde_json::from_str(text).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        Self::new(pieces)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidMeasure(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.pieces).expect("pieces serialize")
    }

    /// Pieces with positive density, sorted.
    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn support_min(&self) -> f64 {
        self.pieces[0].lo
    }

    pub fn support_max(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].hi
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for p in &self.pieces {
            if x <= p.lo {
                break;
            }
            acc += p.density * (x.min(p.hi) - p.lo);
        }
        acc.min(1.0)
    }

    /// Left-continuous inverse CDF, `inf { x : F(x) >= q }`; `q` is clamped to `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        if q <= 0.0 {
            return self.support_min();
        }
        for (p, &before) in self.pieces.iter().zip(&self.cum) {
            let after = before + p.mass();
            // `hi - lo` cancels, so `after` is only good to about `density * ulp(hi)`
            let slack = 4.0 * f64::EPSILON * (1.0 + p.density * (p.lo.abs() + p.hi.abs()));
            if q <= after + slack {
                return (p.lo + (q - before) / p.density).clamp(p.lo, p.hi);
            }
        }
        self.support_max()
    }

    /// `d_i = quantile(i / n)` for `i = 1..n-1`.
    pub fn breakpoints(&self, cells: usize) -> Vec<f64> {
        (1..cells)
            .map(|i| self.quantile(i as f64 / cells as f64))
            .collect()
    }

    /// Mass of `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.cdf(b) - self.cdf(a)
    }
}
