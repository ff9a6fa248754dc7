//! Named experiments behind the command-line tool. Each returns a typed report with a
//! status, a short human summary and a machine-readable artifact carrying a metadata
//! header.

mod experiments;
mod figures;

pub use experiments::{
    ce145, ceclass, cost, example_cpi, fourmarg, lp, Ce145Report, CeClassReport, CostReport,
    CpiCertReport, FourMargReport, FourMargRun, LpReport, PatternWitness, SearchOutcome,
};
pub use figures::{curves, region, CurvePoint, CurvesReport, GridSpec, Intersection, RegionReport};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Outcome of an experiment, mapped onto the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Confirmed,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Confirmed => 0,
            Status::Inconclusive => 2,
        }
    }
}

/// Command name plus every parameter that influenced the result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub params: BTreeMap<String, Value>,
}

impl ExperimentConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.params.insert(
            key.to_string(),
            serde_json::to_value(value).expect("parameter serializes"),
        );
    }

    fn meta(&self) -> Value {
        serde_json::json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": rayon::current_num_threads(),
            "params": self.params,
        })
    }

    /// First line of a JSON-lines artifact.
    pub fn json_header(&self) -> String {
        serde_json::json!({ "meta": self.meta() }).to_string()
    }

    /// `# key=value` lines opening a CSV artifact.
    pub fn csv_header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# command={}", self.command);
        let _ = writeln!(out, "# version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# threads={}", rayon::current_num_threads());
        for (k, v) in &self.params {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }
}

/// Common surface of every experiment report.
pub trait Report {
    fn status(&self) -> Status;
    /// Human-readable lines for the terminal.
    fn summary(&self) -> Vec<String>;
    /// File contents for `--out`, metadata header included.
    fn artifact(&self) -> String;
}

/// `{:.16e}`, i.e. 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn json_lines<T: Serialize>(
    config: &ExperimentConfig,
    rows: &[T],
    summary: &impl Serialize,
) -> String {
    let mut out = config.json_header();
    out.push('\n');
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("row serializes"));
        out.push('\n');
    }
    out.push_str(&serde_json::json!({ "summary": summary }).to_string());
    out.push('\n');
    out
}

/// Result of a one-sided parameter search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamSearch {
    pub value: f64,
    /// False when the scan ran into its limit without the predicate changing.
    pub bracketed: bool,
    /// Every probe as `(parameter, predicate)`.
    pub trace: Vec<(f64, bool)>,
}

/// Smallest parameter in `[start, max]` where `pred` holds, assuming it holds from some
/// point on: doubling from `start`, then bisection to relative width `rel_tol`.
pub fn smallest_satisfying(
    start: f64,
    max: f64,
    rel_tol: f64,
    mut pred: impl FnMut(f64) -> Result<bool>,
) -> Result<ParamSearch> {
    let mut trace = Vec::new();
    let mut x = start;
    let mut fails: Option<f64> = None;
    loop {
        let ok = pred(x)?;
        trace.push((x, ok));
        if ok {
            break;
        }
        fails = Some(x);
        if x >= max {
            return Err(Error::ConvergenceFailure {
                tol: rel_tol,
                best: x,
            });
        }
        x = (2.0 * x).min(max);
    }
    let Some(mut lo) = fails else {
        return Ok(ParamSearch {
            value: x,
            bracketed: false,
            trace,
        });
    };
    let mut hi = x;
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        let ok = pred(mid)?;
        trace.push((mid, ok));
        if ok {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ParamSearch {
        value: hi,
        bracketed: true,
        trace,
    })
}

/// Largest parameter in `[start, max]` where `pred` holds, assuming it holds below some
/// point: doubling from `start`, then bisection to relative width `rel_tol`.
pub fn largest_satisfying(
    start: f64,
    max: f64,
    rel_tol: f64,
    mut pred: impl FnMut(f64) -> Result<bool>,
) -> Result<ParamSearch> {
    let mut trace = Vec::new();
    let ok = pred(start)?;
    trace.push((start, ok));
    if !ok {
        return Err(Error::ConvergenceFailure {
            tol: rel_tol,
            best: start,
        });
    }
    let mut lo = start;
    let mut hi = None;
    while lo < max {
        let x = (2.0 * lo).min(max);
        let ok = pred(x)?;
        trace.push((x, ok));
        if !ok {
            hi = Some(x);
            break;
        }
        lo = x;
    }
    let Some(mut hi) = hi else {
        return Ok(ParamSearch {
            value: lo,
            bracketed: false,
            trace,
        });
    };
    while hi - lo > rel_tol * lo {
        let mid = 0.5 * (lo + hi);
        let ok = pred(mid)?;
        trace.push((mid, ok));
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ParamSearch {
        value: lo,
        bracketed: true,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn searches_find_thresholds() {
        let s = smallest_satisfying(1.0, 1e6, 1e-3, |x| Ok(x >= 37.0)).unwrap();
        assert!(s.bracketed && s.value >= 37.0 && s.value <= 37.0 * 1.001);
        let s = smallest_satisfying(50.0, 1e6, 1e-3, |x| Ok(x >= 37.0)).unwrap();
        assert!(!s.bracketed && s.value == 50.0);
        assert!(smallest_satisfying(1.0, 8.0, 1e-3, |_| Ok(false)).is_err());
        let s = largest_satisfying(0.001, 1.0, 1e-3, |x| Ok(x <= 0.3)).unwrap();
        assert!(s.bracketed && s.value <= 0.3 && s.value >= 0.3 / 1.001);
        let s = largest_satisfying(0.001, 0.1, 1e-3, |_| Ok(true)).unwrap();
        assert!(!s.bracketed && s.value == 0.1);
    }

    #[test]
    fn headers_echo_parameters() {
        let c = ExperimentConfig::new("ce145")
            .with("eps", 0.005)
            .with("auto", false);
        let v: Value = serde_json::from_str(&c.json_header()).unwrap();
        assert_eq!(v["meta"]["command"], "ce145");
        assert_eq!(v["meta"]["params"]["eps"], 0.005);
        let csv = c.csv_header();
        assert!(csv.contains("# eps=0.005"));
        assert!(csv.lines().all(|l| l.starts_with("# ")));
        assert_eq!(fmt_f64(1.0 / 3.0), "3.3333333333333331e-1");
    }
}
