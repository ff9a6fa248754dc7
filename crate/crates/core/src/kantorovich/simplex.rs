//! Revised simplex for the multimarginal assignment polytope.
//!
//! Variables are the `n^N` cells of the tensor, scaled by `n` so every marginal row sums
//! to one. Block 0 keeps all `n` rows and the other blocks drop their last row, which
//! removes the `N - 1` redundant equations and leaves `N n - N + 1` independent rows.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const ENTER_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_STREAK: usize = 50;

pub(crate) struct SimplexOutcome {
    /// Basic cells with their scaled level (marginal rows sum to one).
    pub basic: Vec<(usize, f64)>,
    pub objective: f64,
    pub min_reduced_cost: f64,
    pub iterations: usize,
}

struct Simplex<'a> {
    n: usize,
    arity: usize,
    m: usize,
    ncols: usize,
    cost: &'a [f64],
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    xb: Vec<f64>,
    binv: DMatrix<f64>,
    since_refactor: usize,
    iterations: usize,
    phase_one: bool,
}

impl<'a> Simplex<'a> {
    fn new(n: usize, arity: usize, cost: &'a [f64]) -> Self {
        let m = arity * n - (arity - 1);
        let ncols = cost.len();
        let mut in_basis = vec![false; ncols + m];
        for flag in in_basis.iter_mut().skip(ncols) {
            *flag = true;
        }
        Self {
            n,
            arity,
            m,
            ncols,
            cost,
            basis: (ncols..ncols + m).collect(),
            in_basis,
            xb: vec![1.0; m],
            binv: DMatrix::identity(m, m),
            since_refactor: 0,
            iterations: 0,
            phase_one: true,
        }
    }

    /// Rows with a unit entry in column `j`; artificial `ncols + r` covers row `r` only.
    fn rows_of(&self, j: usize, out: &mut [usize; 8]) -> usize {
        if j >= self.ncols {
            out[0] = j - self.ncols;
            return 1;
        }
        let mut rem = j;
        let mut count = 0;
        for block in (0..self.arity).rev() {
            let a = rem % self.n;
            rem /= self.n;
            if block == 0 {
                out[count] = a;
                count += 1;
            } else if a + 1 < self.n {
                out[count] = self.n + (block - 1) * (self.n - 1) + a;
                count += 1;
            }
        }
        count
    }

    fn col_cost(&self, j: usize) -> f64 {
        match (self.phase_one, j >= self.ncols) {
            (true, true) => 1.0,
            (true, false) => 0.0,
            (false, true) => 0.0,
            (false, false) => self.cost[j],
        }
    }

    fn duals(&self) -> Vec<f64> {
        let mut pi = vec![0.0; self.m];
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = self.col_cost(j);
            if cb != 0.0 {
                for (r, p) in pi.iter_mut().enumerate() {
                    *p += cb * self.binv[(i, r)];
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, pi: &[f64]) -> f64 {
        let mut rows = [0usize; 8];
        let k = self.rows_of(j, &mut rows);
        self.col_cost(j) - rows[..k].iter().map(|r| pi[*r]).sum::<f64>()
    }

    fn direction(&self, j: usize) -> Vec<f64> {
        let mut rows = [0usize; 8];
        let k = self.rows_of(j, &mut rows);
        let mut u = vec![0.0; self.m];
        for &r in &rows[..k] {
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += self.binv[(i, r)];
            }
        }
        u
    }

    fn pivot(&mut self, leave: usize, enter: usize, u: &[f64]) {
        let theta = self.xb[leave].max(0.0) / u[leave];
        for (i, x) in self.xb.iter_mut().enumerate() {
            if i != leave {
                *x -= theta * u[i];
            }
        }
        self.xb[leave] = theta;
        let ur = u[leave];
        for c in 0..self.m {
            self.binv[(leave, c)] /= ur;
        }
        for i in 0..self.m {
            if i != leave && u[i] != 0.0 {
                let f = u[i];
                for c in 0..self.m {
                    let v = self.binv[(leave, c)];
                    self.binv[(i, c)] -= f * v;
                }
            }
        }
        self.in_basis[self.basis[leave]] = false;
        self.in_basis[enter] = true;
        self.basis[leave] = enter;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    fn refactor(&mut self) -> Result<()> {
        let mut b = DMatrix::zeros(self.m, self.m);
        let mut rows = [0usize; 8];
        for (i, &j) in self.basis.iter().enumerate() {
            let k = self.rows_of(j, &mut rows);
            for &r in &rows[..k] {
                b[(r, i)] = 1.0;
            }
        }
        self.binv = b
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Lp("basis matrix became singular".into()))?;
        for i in 0..self.m {
            self.xb[i] = self.binv.row(i).sum();
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn run(&mut self, max_iter: usize) -> Result<()> {
        let mut bland = false;
        let mut streak = 0;
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            if self.iterations >= max_iter {
                return Err(Error::Lp(format!("no optimum after {max_iter} pivots")));
            }
            let pi = self.duals();
            let mut enter = None;
            let mut best = -ENTER_TOL;
            for j in 0..self.ncols {
                if self.in_basis[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &pi);
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(j) = enter else {
                return Ok(());
            };
            let u = self.direction(j);
            let mut leave: Option<usize> = None;
            let mut tmin = f64::INFINITY;
            for i in 0..self.m {
                if u[i] <= PIVOT_TOL {
                    continue;
                }
                let t = self.xb[i].max(0.0) / u[i];
                let better = match leave {
                    None => true,
                    Some(_) if t < tmin - 1e-12 => true,
                    Some(l) if t <= tmin + 1e-12 => {
                        if bland {
                            self.basis[i] < self.basis[l]
                        } else {
                            u[i] > u[l]
                        }
                    }
                    Some(_) => false,
                };
                if better {
                    leave = Some(i);
                    tmin = tmin.min(t);
                }
            }
            let Some(r) = leave else {
                return Err(Error::Lp("problem is unbounded".into()));
            };
            if tmin <= 1e-12 {
                streak += 1;
                if streak > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
            self.pivot(r, j, &u);
        }
    }

    /// Replace artificials still basic at level zero by real columns.
    fn drive_out_artificials(&mut self) -> Result<()> {
        self.refactor()?;
        for i in 0..self.m {
            if self.basis[i] < self.ncols {
                continue;
            }
            self.xb[i] = 0.0;
            let mut rows = [0usize; 8];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                if self.in_basis[j] {
                    continue;
                }
                let k = self.rows_of(j, &mut rows);
                let v: f64 = rows[..k].iter().map(|r| self.binv[(i, *r)]).sum();
                if v.abs() > 1e-7 && best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((j, v.abs()));
                }
            }
            let Some((j, _)) = best else {
                return Err(Error::Lp("redundant marginal row".into()));
            };
            let u = self.direction(j);
            self.pivot(i, j, &u);
        }
        Ok(())
    }
}

pub(crate) fn solve(n: usize, arity: usize, cost: &[f64]) -> Result<SimplexOutcome> {
    debug_assert_eq!(cost.len(), n.pow(arity as u32));
    let mut s = Simplex::new(n, arity, cost);
    let max_iter = 200 * (s.m + 10) + 10 * s.ncols;
    s.run(max_iter)?;
    s.refactor()?;
    let infeasibility: f64 = s
        .basis
        .iter()
        .zip(&s.xb)
        .filter(|(j, _)| **j >= s.ncols)
        .map(|(_, x)| *x)
        .sum();
    if infeasibility > 1e-9 {
        return Err(Error::Lp(format!("phase one ended at {infeasibility}")));
    }
    s.drive_out_artificials()?;
    s.phase_one = false;
    s.run(max_iter)?;
    s.refactor()?;
    let pi = s.duals();
    let min_reduced_cost = (0..s.ncols)
        .filter(|j| !s.in_basis[*j])
        .map(|j| s.reduced_cost(j, &pi))
        .fold(f64::INFINITY, f64::min);
    let basic: Vec<(usize, f64)> = s.basis.iter().copied().zip(s.xb.iter().copied()).collect();
    let objective = basic.iter().map(|(j, x)| cost[*j] * x).sum();
    Ok(SimplexOutcome {
        basic,
        objective,
        min_reduced_cost,
        iterations: s.iterations,
    })
}
