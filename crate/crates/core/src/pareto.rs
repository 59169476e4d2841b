//! Brute-force oracles on grids: weak-Pareto scans, the penalized objective
//! `f + (l/sigma) phi e`, transfer of weak efficiency to the penalized
//! problem, a projected pattern search, and dominance refutations.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::certify::Problem;
use crate::error::{check_dim, Error, Result};
use crate::regularity::grid_points;

/// Axis-aligned grid `lo + (hi - lo) k / (res - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub res: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>) -> Result<Self> {
        check_dim("grid bounds", lo.len(), hi.len())?;
        check_dim("grid resolution", lo.len(), res.len())?;
        if res.iter().any(|&r| r < 3) {
            return Err(Error::Input("grid resolution must be at least 3 per axis".into()));
        }
        Ok(GridSpec { lo, hi, res })
    }

    /// Cube of `cells` grid steps around `center`, `res` nodes per axis.
    pub fn around(center: &DVector<f64>, half_width: f64, res: usize) -> Result<Self> {
        GridSpec::new(
            center.iter().map(|c| c - half_width).collect(),
            center.iter().map(|c| c + half_width).collect(),
            vec![res; center.len()],
        )
    }

    pub fn points(&self) -> Result<Vec<DVector<f64>>> {
        grid_points(&self.lo, &self.hi, &self.res)
    }
}

/// `a - b in int K` with absolute margin on the unit rows of `K`.
pub fn strictly_dominates(problem: &Problem, b: &DVector<f64>, a: &DVector<f64>) -> Result<bool> {
    problem.k.interior_contains(&(a - b), problem.tolerances.dominance)
}

/// `a - b in K \ {0}`.
fn dominates(problem: &Problem, b: &DVector<f64>, a: &DVector<f64>) -> Result<bool> {
    let d = a - b;
    let m = problem.tolerances.dominance;
    Ok(d.norm() > m && problem.k.contains(&d, m)?)
}

/// Smallest row slack of `a - b` against `K`; positive means strict dominance.
fn dominance_depth(problem: &Problem, b: &DVector<f64>, a: &DVector<f64>) -> f64 {
    let d = a - b;
    problem
        .k
        .halfspace_rows()
        .expect("ordering cone is kept in halfspace form")
        .iter()
        .map(|r| r.dot(&d))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScan {
    pub grid: GridSpec,
    pub points: Vec<DVector<f64>>,
    pub values: Vec<DVector<f64>>,
    pub phi: Vec<f64>,
    pub feasible: Vec<bool>,
    pub weak_efficient: Vec<bool>,
    pub efficient: Vec<bool>,
    /// Number of feasible nodes strictly dominating each node.
    pub dominated_by: Vec<usize>,
}

impl GridScan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: &DVector<f64>) -> Option<usize> {
        (0..self.len()).min_by(|&i, &j| {
            (&self.points[i] - x)
                .norm()
                .partial_cmp(&(&self.points[j] - x).norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    /// Delimiter-separated export: coordinates, objective values, `phi`
    /// and the three flags.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.grid.lo.len();
        let m = self.values.first().map_or(0, |v| v.len());
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.extend((1..=m).map(|i| format!("f{i}")));
        header.extend(["phi", "feasible", "weak_efficient", "efficient"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.points[i].iter().map(|v| v.to_string()).collect();
            rec.extend(self.values[i].iter().map(|v| v.to_string()));
            rec.push(self.phi[i].to_string());
            for flag in [self.feasible[i], self.weak_efficient[i], self.efficient[i]] {
                rec.push(u8::from(flag).to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Evaluates every node and marks feasibility, weak efficiency and efficiency
/// relative to the feasible nodes (a global-on-grid surrogate for local
/// efficiency; locality comes from the choice of box).
pub fn grid_scan_weak_pareto(problem: &Problem, grid: &GridSpec) -> Result<GridScan> {
    check_dim("grid", problem.n(), grid.lo.len())?;
    scan_with(
        problem,
        grid,
        |x| problem.objective.value(x),
        |x| problem.is_feasible(x),
    )
}

fn scan_with<F, P>(problem: &Problem, grid: &GridSpec, value: F, admissible: P) -> Result<GridScan>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    P: Fn(&DVector<f64>) -> Result<bool>,
{
    let points = grid.points()?;
    let mut values = Vec::with_capacity(points.len());
    let mut phi = Vec::with_capacity(points.len());
    let mut feasible = Vec::with_capacity(points.len());
    for x in &points {
        values.push(value(x)?);
        phi.push(problem.merit(x)?);
        feasible.push(admissible(x)?);
    }
    let feas_idx: Vec<usize> = (0..points.len()).filter(|&i| feasible[i]).collect();
    let mut weak_efficient = vec![false; points.len()];
    let mut efficient = vec![false; points.len()];
    let mut dominated_by = vec![0usize; points.len()];
    for i in 0..points.len() {
        let mut strict = 0;
        let mut any = false;
        for &j in &feas_idx {
            if strictly_dominates(problem, &values[j], &values[i])? {
                strict += 1;
            }
            if !any && dominates(problem, &values[j], &values[i])? {
                any = true;
            }
        }
        dominated_by[i] = strict;
        weak_efficient[i] = feasible[i] && strict == 0;
        efficient[i] = feasible[i] && !any;
    }
    Ok(GridScan {
        grid: grid.clone(),
        points,
        values,
        phi,
        feasible,
        weak_efficient,
        efficient,
        dominated_by,
    })
}

/// Value oracle of the penalized criterion `f(x) + (l/sigma) phi(x) e`.
#[derive(Debug, Clone, Copy)]
pub struct PenalizedObjective<'a> {
    pub problem: &'a Problem,
    pub ell: f64,
    pub sigma: f64,
}

impl PenalizedObjective<'_> {
    pub fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.problem.objective.value(x)?;
        if self.ell == 0.0 {
            return Ok(f);
        }
        let phi = self.problem.merit(x)?;
        Ok(f + &self.problem.e * (self.ell / self.sigma * phi))
    }
}

/// Builds the penalized objective. `ell_hat`, when known, is the
/// K-Lipschitz estimate the weight should dominate.
pub fn build_penalized(
    problem: &Problem,
    ell: f64,
    sigma: f64,
    ell_hat: Option<f64>,
) -> Result<PenalizedObjective<'_>> {
    if !(sigma > 0.0) {
        return Err(Error::Input("penalization modulus sigma must be positive".into()));
    }
    if !(ell >= 0.0) {
        return Err(Error::Input("penalty weight must be nonnegative".into()));
    }
    if ell == 0.0 {
        log::warn!("penalty weight is zero; the penalized objective is the plain objective");
    } else if let Some(h) = ell_hat {
        if ell < h {
            log::warn!("penalty weight {ell} is below the K-Lipschitz estimate {h}");
        }
    }
    Ok(PenalizedObjective { problem, ell, sigma })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub ell: f64,
    pub sigma: f64,
    pub pass: bool,
    /// A node of `S` whose penalized value strictly dominates `f(x_bar)`.
    pub dominating: Option<Vec<f64>>,
    pub nodes: usize,
}

/// Checks that a grid weakly efficient `x_bar` of the constrained problem
/// stays weakly efficient for the penalized criterion over `S` alone.
pub fn check_penalization_transfer(
    problem: &Problem,
    x_bar: &DVector<f64>,
    ell: f64,
    sigma: f64,
    grid: &GridSpec,
) -> Result<TransferReport> {
    check_dim("reference point", problem.n(), x_bar.len())?;
    if let Some(w) = refute_efficiency(problem, x_bar, grid)?.witness {
        return Err(Error::Precondition(format!(
            "reference point is not weakly efficient on the constrained grid (dominated by {w:?})"
        )));
    }
    if !problem.is_feasible(x_bar)? {
        return Err(Error::Precondition("reference point is not feasible".into()));
    }
    let pen = build_penalized(problem, ell, sigma, None)?;
    let fx = pen.value(x_bar)?;
    let mut best: Option<(f64, DVector<f64>)> = None;
    let nodes = grid.points()?;
    for y in &nodes {
        if !problem.s.contains(y, problem.tolerances.active)? {
            continue;
        }
        let fy = pen.value(y)?;
        if strictly_dominates(problem, &fy, &fx)? {
            let depth = dominance_depth(problem, &fy, &fx);
            if best.as_ref().is_none_or(|(d, _)| depth > *d) {
                best = Some((depth, y.clone()));
            }
        }
    }
    Ok(TransferReport {
        ell,
        sigma,
        pass: best.is_none(),
        dominating: best.map(|(_, y)| y.iter().copied().collect()),
        nodes: nodes.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// Best surrogate value after each schedule; nonincreasing.
    pub trace: Vec<f64>,
    pub stalled: bool,
}

/// Projected coordinate pattern search on `w . (f + (l/sigma) phi e)` over `S`.
///
/// Each schedule tries `x +- step e_i` (projected onto `S`), moves to the best
/// improvement, and halves the step when none improves. `budget` is the
/// number of schedules. The run is flagged as stalled when it ends without a
/// decrease during its last three schedules or with a zero budget.
pub fn descent_solve(
    problem: &Problem,
    start: &DVector<f64>,
    weights: &DVector<f64>,
    ell: f64,
    sigma: f64,
    budget: usize,
) -> Result<SolveResult> {
    check_dim("start point", problem.n(), start.len())?;
    check_dim("weights", problem.m(), weights.len())?;
    if !(weights.dot(&problem.e) > 0.0) {
        return Err(Error::Precondition("weights must pair positively with e".into()));
    }
    let pen = build_penalized(problem, ell, sigma, None)?;
    let h = |x: &DVector<f64>| -> Result<f64> { Ok(weights.dot(&pen.value(x)?)) };
    let mut x = problem.s.project(start)?;
    let mut fx = h(&x)?;
    let mut trace = vec![fx];
    let mut step = 0.5 * start.amax().max(1.0);
    let mut since_decrease = 0usize;
    let n = problem.n();
    for _ in 0..budget {
        if step < 1e-12 {
            break;
        }
        let mut best: Option<(f64, DVector<f64>)> = None;
        for i in 0..n {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sgn * step;
                let y = problem.s.project(&y)?;
                let fy = h(&y)?;
                if fy < fx - 1e-15 && best.as_ref().is_none_or(|(b, _)| fy < *b) {
                    best = Some((fy, y));
                }
            }
        }
        match best {
            Some((fy, y)) => {
                x = y;
                fx = fy;
                since_decrease = 0;
            }
            None => {
                step *= 0.5;
                since_decrease += 1;
            }
        }
        trace.push(fx);
    }
    Ok(SolveResult {
        point: x.iter().copied().collect(),
        value: fx,
        trace,
        stalled: budget == 0 || since_decrease >= 3,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refutation {
    /// Feasible node with `f(x_bar) - f(y) in int K`, the deepest one found.
    pub witness: Option<Vec<f64>>,
    /// Set when `x_bar` itself is infeasible; no search is made then.
    pub infeasible_reference: bool,
}

/// Searches the feasible nodes of `grid` for a point strictly dominating `x_bar`.
pub fn refute_efficiency(problem: &Problem, x_bar: &DVector<f64>, grid: &GridSpec) -> Result<Refutation> {
    check_dim("reference point", problem.n(), x_bar.len())?;
    if !problem.is_feasible(x_bar)? {
        return Ok(Refutation {
            witness: None,
            infeasible_reference: true,
        });
    }
    let fx = problem.objective.value(x_bar)?;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for y in grid.points()? {
        if !problem.is_feasible(&y)? {
            continue;
        }
        let fy = problem.objective.value(&y)?;
        if strictly_dominates(problem, &fy, &fx)? {
            let depth = dominance_depth(problem, &fy, &fx);
            if best.as_ref().is_none_or(|(d, _)| depth > *d) {
                best = Some((depth, y));
            }
        }
    }
    Ok(Refutation {
        witness: best.map(|(_, y)| y.iter().copied().collect()),
        infeasible_reference: false,
    })
}
