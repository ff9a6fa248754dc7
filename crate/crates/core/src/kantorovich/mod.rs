//! Equal-mass discretization of a radial measure and the exact discrete multimarginal
//! problem, with plans induced by cyclical maps for comparison.

mod simplex;

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::coulomb::{RadialCost, RadiiTuple};
use crate::error::{Error, Result};
use crate::measures::{MonotoneMap, Pattern, RadialMeasure};

/// Largest number of tensor cells the solver accepts.
pub const MAX_CELLS: usize = 1_000_000;

/// Reduced costs below this void the optimality certificate.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// `n` atoms at the equal-mass midpoints `Q((i - 1/2) / n)`, each of mass `1/n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomGrid {
    pub atoms: Vec<f64>,
}

impl AtomGrid {
    pub fn discretize(rho: &RadialMeasure, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one atom".into()));
        }
        let atoms: Vec<f64> = MonotoneMap::quadrature_levels(n)
            .map(|q| rho.quantile(q))
            .collect();
        if atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMeasure(format!(
                "atoms are not strictly increasing for n = {n}"
            )));
        }
        Ok(Self { atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| a * lambda).collect(),
        }
    }

    /// Index of the closest atom; ties go to the lower one.
    pub fn nearest(&self, x: f64) -> usize {
        let pos = self.atoms.partition_point(|a| *a < x);
        if pos == 0 {
            0
        } else if pos == self.atoms.len() || x - self.atoms[pos - 1] <= self.atoms[pos] - x {
            pos - 1
        } else {
            pos
        }
    }
}

/// Dense `n^N` cost array, row-major in the multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTensor {
    n: usize,
    arity: usize,
    data: Vec<f64>,
}

fn check_size(n: usize, arity: usize) -> Result<usize> {
    let cells = (n as u128).pow(arity as u32);
    if cells > MAX_CELLS as u128 {
        return Err(Error::ResourceLimit(format!(
            "{n}^{arity} = {cells} cells exceeds {MAX_CELLS}"
        )));
    }
    Ok(cells as usize)
}

impl CostTensor {
    pub fn from_raw(n: usize, arity: usize, data: Vec<f64>) -> Result<Self> {
        if !(2..=4).contains(&arity) || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad tensor shape {n}^{arity}"
            )));
        }
        let cells = check_size(n, arity)?;
        if data.len() != cells {
            return Err(Error::InvalidArgument(format!(
                "expected {cells} entries, got {}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite cost {bad}")));
        }
        Ok(Self { n, arity, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, i| acc * self.n + i)
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.arity];
        for slot in idx.iter_mut().rev() {
            *slot = lin % self.n;
            lin /= self.n;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear(idx)]
    }

    /// Tensor with axis `k` of the result equal to axis `perm[k]` of `self`.
    pub fn permuted_axes(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.arity];
        if perm.len() != self.arity
            || perm
                .iter()
                .any(|p| *p >= self.arity || std::mem::replace(&mut seen[*p], true))
        {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation"
            )));
        }
        let data = (0..self.data.len())
            .map(|lin| {
                let idx = self.multi_index(lin);
                let mut src = vec![0; self.arity];
                for (k, p) in perm.iter().enumerate() {
                    src[*p] = idx[k];
                }
                self.get(&src)
            })
            .collect();
        Ok(Self { data, ..*self })
    }
}

/// Cost of every cell, evaluated once per sorted multi-index.
pub fn cost_tensor<C: RadialCost + ?Sized>(
    grid: &AtomGrid,
    arity: usize,
    cost: &C,
) -> Result<CostTensor> {
    let n = grid.len();
    if !(3..=4).contains(&arity) {
        return Err(Error::InvalidArgument(format!(
            "need 3 or 4 marginals, got {arity}"
        )));
    }
    let cells = check_size(n, arity)?;
    let mut sorted = Vec::new();
    let mut idx = vec![0usize; arity];
    fn rec(pos: usize, from: usize, n: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == idx.len() {
            out.push(idx.clone());
            return;
        }
        for i in from..n {
            idx[pos] = i;
            rec(pos + 1, i, n, idx, out);
        }
    }
    rec(0, 0, n, &mut idx, &mut sorted);
    let values = sorted
        .par_iter()
        .map(|s| {
            let radii: Vec<f64> = s.iter().map(|i| grid.atoms[*i]).collect();
            cost.eval(&RadiiTuple::new(&radii)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lookup: HashMap<Vec<usize>, f64> = sorted.into_iter().zip(values).collect();
    let tensor = CostTensor {
        n,
        arity,
        data: vec![0.0; cells],
    };
    let data = (0..cells)
        .map(|lin| {
            let mut key = tensor.multi_index(lin);
            key.sort_unstable();
            lookup[&key]
        })
        .collect();
    Ok(CostTensor { data, ..tensor })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanEntry {
    pub index: Vec<usize>,
    pub mass: f64,
}

/// Sparse coupling of `N` copies of an atom grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscretePlan {
    pub n: usize,
    pub arity: usize,
    pub entries: Vec<PlanEntry>,
}

impl DiscretePlan {
    fn new(n: usize, arity: usize, mut entries: Vec<PlanEntry>) -> Self {
        entries.sort_by(|a, b| a.index.cmp(&b.index));
        Self { n, arity, entries }
    }

    /// `marginals()[k][i]` is the mass with coordinate `k` equal to atom `i`.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.arity];
        for e in &self.entries {
            for (k, i) in e.index.iter().enumerate() {
                out[k][*i] += e.mass;
            }
        }
        out
    }

    /// Largest deviation of any marginal from the uniform weights.
    pub fn marginal_error(&self) -> f64 {
        let w = 1.0 / self.n as f64;
        self.marginals()
            .iter()
            .flatten()
            .map(|m| (m - w).abs())
            .fold(0.0, f64::max)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn cost(&self, tensor: &CostTensor) -> f64 {
        self.entries
            .iter()
            .map(|e| e.mass * tensor.get(&e.index))
            .sum()
    }

    /// One JSON object per entry, `{"index": [i, j, k], "mass": m}`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSolution {
    pub plan: DiscretePlan,
    pub value: f64,
    /// Smallest reduced cost over the nonbasic cells at the final basis.
    pub min_reduced_cost: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn certified(&self) -> bool {
        self.min_reduced_cost >= -CERTIFICATE_TOL
    }
}

/// Exact minimum of `sum c_ijk gamma_ijk` over couplings with uniform marginals.
pub fn solve_mmot(tensor: &CostTensor) -> Result<LpSolution> {
    let n = tensor.n;
    check_size(n, tensor.arity)?;
    let out = simplex::solve(n, tensor.arity, &tensor.data)?;
    let w = 1.0 / n as f64;
    let entries = out
        .basic
        .iter()
        .filter(|(_, x)| *x > 1e-12)
        .map(|(j, x)| PlanEntry {
            index: tensor.multi_index(*j),
            mass: x * w,
        })
        .collect();
    Ok(LpSolution {
        plan: DiscretePlan::new(n, tensor.arity, entries),
        value: out.objective * w,
        min_reduced_cost: out.min_reduced_cost,
        iterations: out.iterations,
    })
}

/// Plan putting mass `1/n` on the atom orbit of each atom. Fails if rounding the orbit
/// points to atoms does not give a coupling.
pub fn plan_from_map(map: &MonotoneMap, grid: &AtomGrid) -> Result<DiscretePlan> {
    let n = grid.len();
    let arity = map.cells();
    let mut used = vec![vec![false; n]; arity];
    let mut entries = Vec::with_capacity(n);
    for &x in &grid.atoms {
        let orbit = map.orbit(x)?;
        let index: Vec<usize> = orbit
            .points
            .as_slice()
            .iter()
            .map(|p| grid.nearest(*p))
            .collect();
        for (k, i) in index.iter().enumerate() {
            if std::mem::replace(&mut used[k][*i], true) {
                return Err(Error::RoundingInfeasible(n));
            }
        }
        entries.push(PlanEntry {
            index,
            mass: 1.0 / n as f64,
        });
    }
    Ok(DiscretePlan::new(n, arity, entries))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternComparison {
    pub pattern: String,
    pub plan_value: Option<f64>,
    /// `plan_value - lp_value`.
    pub gap: Option<f64>,
    /// Every LP support cell is within one atom, per coordinate, of this map's orbit
    /// from the same first atom.
    pub lp_on_graph: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub n: usize,
    pub lp_value: f64,
    pub min_reduced_cost: f64,
    pub rows: Vec<PatternComparison>,
    #[serde(skip)]
    pub lp_plan: DiscretePlan,
}

impl Comparison {
    pub fn row(&self, pattern: &str) -> Option<&PatternComparison> {
        self.rows.iter().find(|r| r.pattern == pattern)
    }
}

fn on_graph(lp: &DiscretePlan, map_plan: &DiscretePlan) -> bool {
    let by_first: HashMap<usize, &Vec<usize>> = map_plan
        .entries
        .iter()
        .map(|e| (e.index[0], &e.index))
        .collect();
    lp.entries.iter().all(|e| {
        by_first.get(&e.index[0]).is_some_and(|m| {
            e.index
                .iter()
                .zip(m.iter())
                .all(|(a, b)| a.abs_diff(*b) <= 1)
        })
    })
}

/// LP optimum next to the value of each pattern's induced plan on the same atoms.
pub fn compare<C: RadialCost + ?Sized>(
    rho: &RadialMeasure,
    n: usize,
    patterns: &[Pattern],
    cost: &C,
) -> Result<Comparison> {
    let arity = patterns.first().map_or(3, Pattern::len);
    let grid = AtomGrid::discretize(rho, n)?;
    let tensor = cost_tensor(&grid, arity, cost)?;
    let lp = solve_mmot(&tensor)?;
    let rows = patterns
        .iter()
        .map(|p| {
            let plan = MonotoneMap::from_pattern(rho, p.clone(), p.len())
                .and_then(|map| plan_from_map(&map, &grid));
            match plan {
                Ok(plan) => {
                    let v = plan.cost(&tensor);
                    PatternComparison {
                        pattern: p.to_string(),
                        plan_value: Some(v),
                        gap: Some(v - lp.value),
                        lp_on_graph: Some(on_graph(&lp.plan, &plan)),
                        error: None,
                    }
                }
                Err(e) => PatternComparison {
                    pattern: p.to_string(),
                    plan_value: None,
                    gap: None,
                    lp_on_graph: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(Comparison {
        n,
        lp_value: lp.value,
        min_reduced_cost: lp.min_reduced_cost,
        rows,
        lp_plan: lp.plan,
    })
}

/// CSV with columns `n,pattern,plan_value,lp_value,gap,lp_on_graph`; lines of `header`
/// are written first as `# ` comments.
pub fn comparison_csv(header: &[(String, String)], reports: &[Comparison]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("n,pattern,plan_value,lp_value,gap,lp_on_graph\n");
    let num = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.16e}"));
    for c in reports {
        for r in &c.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.16e},{},{}",
                c.n,
                r.pattern,
                num(r.plan_value),
                c.lp_value,
                num(r.gap),
                r.lp_on_graph
                    .map_or("", |b| if b { "true" } else { "false" })
            );
        }
    }
    out
}
