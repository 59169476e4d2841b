//! Small dense linear-programming kernel.
//!
//! Two-phase primal simplex on a full tableau with Bland's pivoting rule.
//! Intended for the little feasibility and multiplier systems built by the
//! cone and certificate code, i.e. a few hundred rows and columns at most.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute pivot tolerance.
pub const PIVOT_TOL: f64 = 1e-10;
/// Phase-one optimum above this value certifies infeasibility.
pub const INFEASIBILITY_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 100_000;

/// `minimize c·x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x_j >= 0 unless free`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    /// `true` means the variable has lower bound `-inf`, otherwise `0`.
    pub free: Vec<bool>,
}

impl LinearProgram {
    /// An LP over `n` nonnegative variables with zero objective and no rows.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            free: vec![false; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn minimize(mut self, c: Vec<f64>) -> Self {
        self.objective = c;
        self
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_ub.push(row.into_iter().map(|v| -v).collect());
        self.b_ub.push(-rhs);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.free.len() != n {
            return Err(Error::dim("lp bounds", n, self.free.len()));
        }
        if self.a_eq.len() != self.b_eq.len() {
            return Err(Error::dim("lp equality rhs", self.a_eq.len(), self.b_eq.len()));
        }
        if self.a_ub.len() != self.b_ub.len() {
            return Err(Error::dim("lp inequality rhs", self.a_ub.len(), self.b_ub.len()));
        }
        for row in self.a_eq.iter().chain(self.a_ub.iter()) {
            if row.len() != n {
                return Err(Error::dim("lp row", n, row.len()));
            }
        }
        let finite = self
            .objective
            .iter()
            .chain(self.b_eq.iter())
            .chain(self.b_ub.iter())
            .chain(self.a_eq.iter().flatten())
            .chain(self.a_ub.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Input("linear program has non-finite data".into()));
        }
        Ok(())
    }

    /// Worst violation of the constraints (including sign bounds) at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let eq = self
            .a_eq
            .iter()
            .zip(&self.b_eq)
            .map(|(r, b)| (dot(r) - b).abs())
            .fold(0.0, f64::max);
        let ub = self
            .a_ub
            .iter()
            .zip(&self.b_ub)
            .map(|(r, b)| dot(r) - b)
            .fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(&self.free)
            .filter(|(_, &f)| !f)
            .map(|(v, _)| -v)
            .fold(0.0, f64::max);
        eq.max(ub).max(bounds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    /// Phase-one optimum (sum of artificial variables).
    pub phase_one: f64,
    pub primal_residual: f64,
    /// `sum |x_j d_j|` over standard-form columns with final reduced costs `d`.
    pub complementarity: f64,
    /// Recession direction of the feasible set along which the objective
    /// decreases without bound.
    pub ray: Option<Vec<f64>>,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solve the LP to optimality.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpResult> {
    Simplex::build(lp)?.run(lp, true)
}

/// Phase one only: finds a feasible point, ignoring the objective.
pub fn feasibility(lp: &LinearProgram) -> Result<LpResult> {
    Simplex::build(lp)?.run(lp, false)
}

/// Column origin of a standard-form variable.
#[derive(Clone, Copy, Debug)]
enum Col {
    Pos(usize),
    Neg(usize),
    Slack,
    Artificial,
}

struct Simplex {
    rows: usize,
    cols: usize,
    /// Row-major `rows x (cols + 1)`; last column is the right-hand side.
    tab: Vec<f64>,
    /// Unmodified standard-form data for the final basis refinement.
    a_std: Vec<f64>,
    b_std: Vec<f64>,
    basis: Vec<usize>,
    kind: Vec<Col>,
    cost: Vec<f64>,
    active_row: Vec<bool>,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Result<Self> {
        lp.validate()?;
        let n = lp.num_vars();
        let mut kind = Vec::new();
        let mut col_of_pos = vec![0; n];
        for (j, slot) in col_of_pos.iter_mut().enumerate() {
            *slot = kind.len();
            kind.push(Col::Pos(j));
            if lp.free[j] {
                kind.push(Col::Neg(j));
            }
        }
        let n_struct = kind.len();
        let n_ub = lp.a_ub.len();
        for _ in 0..n_ub {
            kind.push(Col::Slack);
        }
        let rows = lp.a_eq.len() + n_ub;
        for _ in 0..rows {
            kind.push(Col::Artificial);
        }
        let cols = kind.len();
        let width = cols + 1;

        let mut tab = vec![0.0; rows * width];
        let mut a_std = vec![0.0; rows * cols];
        let mut b_std = vec![0.0; rows];
        let all_rows = lp.a_eq.iter().zip(&lp.b_eq).map(|(r, b)| (r, *b, None)).chain(
            lp.a_ub
                .iter()
                .zip(&lp.b_ub)
                .enumerate()
                .map(|(k, (r, b))| (r, *b, Some(n_struct + k))),
        );
        for (i, (row, rhs, slack)) in all_rows.enumerate() {
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                let c = col_of_pos[j];
                a_std[i * cols + c] = sign * row[j];
                if lp.free[j] {
                    a_std[i * cols + c + 1] = -sign * row[j];
                }
            }
            if let Some(s) = slack {
                a_std[i * cols + s] = sign;
            }
            a_std[i * cols + n_struct + n_ub + i] = 1.0;
            b_std[i] = sign * rhs;
            tab[i * width..i * width + cols].copy_from_slice(&a_std[i * cols..(i + 1) * cols]);
            tab[i * width + cols] = b_std[i];
        }

        let mut cost = vec![0.0; cols];
        for (c, k) in cost.iter_mut().zip(&kind) {
            *c = match *k {
                Col::Pos(j) => lp.objective[j],
                Col::Neg(j) => -lp.objective[j],
                _ => 0.0,
            };
        }
        let basis = (0..rows).map(|i| n_struct + n_ub + i).collect();
        Ok(Simplex {
            rows,
            cols,
            tab,
            a_std,
            b_std,
            basis,
            kind,
            cost,
            active_row: vec![true; rows],
        })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.tab[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.tab[i * (self.cols + 1) + self.cols]
    }

    fn is_artificial(&self, j: usize) -> bool {
        matches!(self.kind[j], Col::Artificial)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let p = self.at(r, c);
        for v in &mut self.tab[r * width..(r + 1) * width] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.tab[r * width..(r + 1) * width].to_vec();
        for i in 0..self.rows {
            if i == r || !self.active_row[i] {
                continue;
            }
            let f = self.at(i, c);
            if f != 0.0 {
                let row = &mut self.tab[i * width..(i + 1) * width];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            if !self.active_row[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.at(i, j);
                }
            }
        }
        d
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        (0..self.rows)
            .filter(|&i| self.active_row[i])
            .map(|i| cost[self.basis[i]] * self.rhs(i))
            .sum()
    }

    /// Bland's rule iterations for `cost`. Returns `Some(col)` when an
    /// unbounded column is found.
    fn iterate(&mut self, cost: &[f64], allow_artificial: bool) -> Result<Option<usize>> {
        for _ in 0..MAX_PIVOTS {
            let d = self.reduced_costs(cost);
            let entering = (0..self.cols).find(|&j| {
                (allow_artificial || !self.is_artificial(j)) && !self.basis.contains(&j) && d[j] < -PIVOT_TOL
            });
            let Some(c) = entering else {
                return Ok(None);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                if !self.active_row[i] {
                    continue;
                }
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(Some(c)),
                Some((r, _)) => self.pivot(r, c),
            }
        }
        Err(Error::Numerical(
            "simplex pivot budget exhausted (cycling guard)".into(),
        ))
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.rows {
            if !self.active_row[i] || !self.is_artificial(self.basis[i]) {
                continue;
            }
            let col = (0..self.cols)
                .filter(|&j| !self.is_artificial(j))
                .find(|&j| self.at(i, j).abs() > PIVOT_TOL && !self.basis.contains(&j));
            match col {
                Some(j) => self.pivot(i, j),
                None => self.active_row[i] = false,
            }
        }
    }

    /// Standard-form point from the current basis, re-solved with an LU of
    /// the original basis columns to shed accumulated tableau round-off.
    fn standard_point(&self) -> Vec<f64> {
        let mut xs = vec![0.0; self.cols];
        for i in 0..self.rows {
            if self.active_row[i] {
                xs[self.basis[i]] = self.rhs(i).max(0.0);
            }
        }
        let active: Vec<usize> = (0..self.rows).filter(|&i| self.active_row[i]).collect();
        let k = active.len();
        if k == 0 {
            return xs;
        }
        let basic: Vec<usize> = active.iter().map(|&i| self.basis[i]).collect();
        let b = DMatrix::from_fn(k, k, |r, c| self.a_std[active[r] * self.cols + basic[c]]);
        let rhs = DVector::from_fn(k, |r, _| self.b_std[active[r]]);
        if let Some(sol) = b.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite() && *v >= -1e-9) {
                let mut refined = vec![0.0; self.cols];
                for (c, &j) in basic.iter().enumerate() {
                    refined[j] = sol[c].max(0.0);
                }
                let resid = |x: &[f64]| {
                    (0..self.rows)
                        .map(|i| {
                            let ax: f64 = (0..self.cols).map(|j| self.a_std[i * self.cols + j] * x[j]).sum();
                            (ax - self.b_std[i]).abs()
                        })
                        .fold(0.0, f64::max)
                };
                if resid(&refined) <= resid(&xs) {
                    return refined;
                }
            }
        }
        xs
    }

    fn to_original(&self, xs: &[f64], n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (v, k) in xs.iter().zip(&self.kind) {
            match *k {
                Col::Pos(j) => x[j] += v,
                Col::Neg(j) => x[j] -= v,
                _ => {}
            }
        }
        x
    }

    fn run(mut self, lp: &LinearProgram, optimize: bool) -> Result<LpResult> {
        let n = lp.num_vars();
        let phase_one_cost: Vec<f64> = (0..self.cols)
            .map(|j| if self.is_artificial(j) { 1.0 } else { 0.0 })
            .collect();
        self.iterate(&phase_one_cost, true)?;
        let phase_one = self.objective_value(&phase_one_cost);
        if phase_one > INFEASIBILITY_TOL {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                x: None,
                objective: f64::NAN,
                phase_one,
                primal_residual: f64::NAN,
                complementarity: f64::NAN,
                ray: None,
            });
        }
        self.drive_out_artificials();

        let cost = if optimize {
            self.cost.clone()
        } else {
            vec![0.0; self.cols]
        };
        if let Some(c) = self.iterate(&cost, false)? {
            // x_B(t) = x_B - t * column, x_c = t
            let mut dir = vec![0.0; self.cols];
            dir[c] = 1.0;
            for i in 0..self.rows {
                if self.active_row[i] {
                    dir[self.basis[i]] = -self.at(i, c);
                }
            }
            let xs = self.standard_point();
            let x = self.to_original(&xs, n);
            return Ok(LpResult {
                status: LpStatus::Unbounded,
                primal_residual: lp.primal_residual(&x),
                x: Some(x),
                objective: f64::NEG_INFINITY,
                phase_one,
                complementarity: f64::NAN,
                ray: Some(self.to_original(&dir, n)),
            });
        }

        let xs = self.standard_point();
        let d = self.reduced_costs(&cost);
        let complementarity = xs.iter().zip(&d).map(|(x, d)| (x * d).abs()).sum();
        let x = self.to_original(&xs, n);
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpResult {
            status: LpStatus::Optimal,
            primal_residual: lp.primal_residual(&x),
            x: Some(x),
            objective,
            phase_one,
            complementarity,
            ray: None,
        })
    }
}
