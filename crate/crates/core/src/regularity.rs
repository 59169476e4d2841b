//! Constraint-qualification checks: metric C-increase of the scenario map,
//! the modulus `sigma = alpha - 1` it yields, and grid validation of the
//! resulting local error bound `dist(x, Solv) <= phi(x) / sigma`.

use nalgebra::DVector;
use serde::Serialize;

use crate::cone::Cone;
use crate::error::{check_dim, Error, Result};
use crate::sampling;
use crate::scenario::{merit, PointCloud, ScenarioMap};
use crate::variational::PolyhedralSet;

/// Upper end of the search range for the increase constant.
pub const ALPHA_MAX: f64 = 10.0;
/// Smallest constant the estimator tries; failing it means the
/// qualification cannot be certified.
pub const ALPHA_MIN: f64 = 1.0 + 1e-3;

/// Sampling budget for the increase test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncreaseGrid {
    /// Points `x` drawn from `B(x_bar, delta)` (the center is always added).
    pub points: usize,
    /// Radii `r = delta * 2^-k`, `k < radii`, slightly shrunk to stay in `(0, delta)`.
    pub radii: usize,
    /// Candidate directions for the move `x -> z`.
    pub moves: usize,
    /// Directions `u` probing the ball `B(G(z), alpha r)`.
    pub probes: usize,
    pub seed: u64,
}

impl Default for IncreaseGrid {
    fn default() -> Self {
        IncreaseGrid {
            points: 24,
            radii: 4,
            moves: 32,
            probes: 64,
            seed: sampling::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncreaseWitness {
    pub x: Vec<f64>,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncreaseReport {
    pub alpha_tested: f64,
    pub delta: f64,
    pub pass: bool,
    /// A pair `(x, r)` for which no sampled `z` works.
    pub witness: Option<IncreaseWitness>,
    /// Largest `alpha` passing on the same samples (capped at the tested value).
    pub alpha_hat: f64,
}

/// Data shared by every `(x, r)` test.
struct IncreaseProblem<'a> {
    g: &'a ScenarioMap,
    c: &'a Cone,
    s: &'a PolyhedralSet,
    probes: Vec<DVector<f64>>,
    moves: Vec<DVector<f64>>,
}

const BISECT_STEPS: usize = 60;

impl IncreaseProblem<'_> {
    /// Length of the initial piece of the ray `p + s u` (capped at `smax`)
    /// that stays within distance `r` of `gx + C`. Each translate `q + C`
    /// contributes a convex sublevel interval; the connected component of
    /// their union containing `s = 0` is followed.
    fn exit_time(&self, gx: &PointCloud, p: &DVector<f64>, u: &DVector<f64>, r: f64, smax: f64) -> Result<f64> {
        let tol = r * 1e-12;
        let dist = |q: &DVector<f64>, s: f64| self.c.distance(&(p + u * s - q));
        // fast path: one convex translate covers the whole segment
        for q in &gx.points {
            if dist(q, 0.0)? <= r + tol && dist(q, smax)? <= r + tol {
                return Ok(smax);
            }
        }
        let mut intervals = Vec::with_capacity(gx.len());
        for q in &gx.points {
            let f = |s: f64| dist(q, s);
            let f0 = f(0.0)?;
            let (lo, hi_start) = if f0 <= r + tol {
                (0.0, 0.0)
            } else {
                // golden-section search for the minimum of a convex function
                let (mut a, mut b) = (0.0, smax);
                let gr = 0.5 * (5f64.sqrt() - 1.0);
                let mut c1 = b - gr * (b - a);
                let mut c2 = a + gr * (b - a);
                let (mut f1, mut f2) = (f(c1)?, f(c2)?);
                for _ in 0..BISECT_STEPS {
                    if f1 <= f2 {
                        b = c2;
                        c2 = c1;
                        f2 = f1;
                        c1 = b - gr * (b - a);
                        f1 = f(c1)?;
                    } else {
                        a = c1;
                        c1 = c2;
                        f1 = f2;
                        c2 = a + gr * (b - a);
                        f2 = f(c2)?;
                    }
                }
                let m = 0.5 * (a + b);
                if f(m)? > r + tol {
                    continue;
                }
                // entry point on [0, m]
                let (mut a, mut b) = (0.0, m);
                for _ in 0..BISECT_STEPS {
                    let mid = 0.5 * (a + b);
                    if f(mid)? <= r + tol {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                (b, m)
            };
            let hi = if f(smax)? <= r + tol {
                smax
            } else {
                let (mut a, mut b) = (hi_start, smax);
                for _ in 0..BISECT_STEPS {
                    let mid = 0.5 * (a + b);
                    if f(mid)? <= r + tol {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                a
            };
            intervals.push((lo, hi));
        }
        let mut reach = 0.0f64;
        let mut started = false;
        loop {
            let mut grew = false;
            for &(lo, hi) in &intervals {
                let joins = if started { lo <= reach + tol } else { lo <= tol };
                if joins && (hi > reach || !started) {
                    reach = reach.max(hi);
                    started = true;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        Ok(if started { reach } else { 0.0 })
    }

    /// `max_z min_{p, u} exit / r`, capped at `cap`: the largest `alpha`
    /// for which some sampled `z` realizes the inclusion at `(x, r)`.
    fn score(&self, x: &DVector<f64>, r: f64, cap: f64) -> Result<f64> {
        let gx = self.g.evaluate(x)?;
        let mut candidates = vec![x.clone()];
        for rho in [r, 0.5 * r] {
            for d in &self.moves {
                let z = self.s.project(&(x + d * rho))?;
                if (&z - x).norm() <= r * (1.0 + 1e-12) {
                    candidates.push(z);
                }
            }
        }
        let mut best = 0.0f64;
        for z in &candidates {
            let mut running = cap;
            'probe: for p in self.g.evaluate(z)?.points {
                for u in &self.probes {
                    let e = self.exit_time(&gx, &p, u, r, running * r)? / r;
                    running = running.min(e);
                    if running <= best {
                        break 'probe;
                    }
                }
            }
            best = best.max(running);
            if best >= cap {
                break;
            }
        }
        Ok(best)
    }
}

fn x_samples(s: &PolyhedralSet, x_bar: &DVector<f64>, delta: f64, grid: &IncreaseGrid) -> Result<Vec<DVector<f64>>> {
    let mut raw = vec![x_bar.clone()];
    raw.extend(sampling::ball_points(x_bar, delta, grid.points, grid.seed));
    let mut xs = Vec::with_capacity(raw.len());
    for x in raw {
        let p = s.project(&x)?;
        if (&p - x_bar).norm() <= delta && !xs.contains(&p) {
            xs.push(p);
        }
    }
    if xs.is_empty() {
        return Err(Error::Diagnostic(
            "empty sample of the set near the reference point".into(),
        ));
    }
    Ok(xs)
}

/// Runs every `(x, r)` test with scores capped at `cap`; returns the
/// smallest score and the pair attaining it.
fn min_score(
    g: &ScenarioMap,
    c: &Cone,
    s: &PolyhedralSet,
    x_bar: &DVector<f64>,
    delta: f64,
    grid: &IncreaseGrid,
    cap: f64,
) -> Result<(f64, IncreaseWitness)> {
    check_dim("increase: scenario/cone", g.out_dim(), c.dim())?;
    check_dim("increase: scenario/set", g.in_dim(), s.dim())?;
    check_dim("increase: reference point", g.in_dim(), x_bar.len())?;
    if !(delta > 0.0) {
        return Err(Error::Input("increase radius must be positive".into()));
    }
    let mut probes = sampling::sphere_directions(g.out_dim(), grid.probes, grid.seed ^ 0x51);
    probes.extend(sampling::coordinate_directions(g.out_dim()));
    let mut moves = sampling::sphere_directions(g.in_dim(), grid.moves, grid.seed ^ 0x3c);
    moves.extend(sampling::coordinate_directions(g.in_dim()));
    let prob = IncreaseProblem { g, c, s, probes, moves };
    let radii: Vec<f64> = (0..grid.radii.max(1))
        .map(|k| delta * (1.0 - 1e-9) / f64::powi(2.0, k as i32))
        .collect();
    let mut worst = (f64::INFINITY, IncreaseWitness { x: vec![], r: 0.0 });
    for x in x_samples(s, x_bar, delta, grid)? {
        for &r in &radii {
            let sc = prob.score(&x, r, cap)?;
            if sc < worst.0 {
                worst = (
                    sc,
                    IncreaseWitness {
                        x: x.iter().copied().collect(),
                        r,
                    },
                );
            }
        }
    }
    Ok(worst)
}

/// Sampled test of `B(G(z), alpha r) ⊆ B(G(x) + C, r)` for some
/// `z in B(x, r) ∩ S`, over sampled `x in B(x_bar, delta) ∩ S` and
/// `r in (0, delta)`. Rays `p + s u` from every `p in G(z)` are followed out
/// to length `alpha r`, so the whole ball is probed along each direction and
/// a pass at `alpha` implies a pass at every smaller constant.
pub fn check_metric_increase(
    g: &ScenarioMap,
    c: &Cone,
    s: &PolyhedralSet,
    x_bar: &DVector<f64>,
    alpha: f64,
    delta: f64,
    grid: &IncreaseGrid,
) -> Result<IncreaseReport> {
    if !(alpha > 1.0) {
        return Err(Error::Input("increase constant must exceed 1".into()));
    }
    let (sc, wit) = min_score(g, c, s, x_bar, delta, grid, alpha)?;
    let pass = sc >= alpha * (1.0 - 1e-9);
    Ok(IncreaseReport {
        alpha_tested: alpha,
        delta,
        pass,
        witness: if pass { None } else { Some(wit) },
        alpha_hat: sc.max(1.0),
    })
}

/// Grid estimate of the increase bound: the largest `alpha <= ALPHA_MAX`
/// passing `check_metric_increase` on the samples. `None` when even
/// `ALPHA_MIN` fails. This is an indication, not the exact bound.
pub fn estimate_increase_bound(
    g: &ScenarioMap,
    c: &Cone,
    s: &PolyhedralSet,
    x_bar: &DVector<f64>,
    delta: f64,
    grid: &IncreaseGrid,
) -> Result<Option<f64>> {
    let (sc, _) = min_score(g, c, s, x_bar, delta, grid, ALPHA_MAX)?;
    Ok(if sc >= ALPHA_MIN { Some(sc.min(ALPHA_MAX)) } else { None })
}

/// Modulus and radius of the qualification inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CqModulus {
    pub sigma: f64,
    pub radius: f64,
}

/// `sigma = alpha_hat - 1` with radius `delta`.
pub fn cq_sigma(alpha_hat: f64, delta: f64) -> Result<CqModulus> {
    if !(alpha_hat > 1.0) {
        return Err(Error::Input(format!("increase estimate {alpha_hat} does not exceed 1")));
    }
    Ok(CqModulus {
        sigma: alpha_hat - 1.0,
        radius: delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    pub sigma: f64,
    pub radius: f64,
    /// Largest `dist(x, Solv) - phi(x)/sigma - slack` over the checked points.
    pub max_violation: f64,
    pub slack: f64,
    pub checked: usize,
    pub feasible: usize,
    pub pass: bool,
    pub witness: Option<Vec<f64>>,
}

/// Points of the regular grid on `[lo, hi]` with `res` nodes per axis.
pub(crate) fn grid_points(lo: &[f64], hi: &[f64], res: &[usize]) -> Result<Vec<DVector<f64>>> {
    check_dim("grid resolution", lo.len(), res.len())?;
    check_dim("grid bounds", lo.len(), hi.len())?;
    let mut total: usize = 1;
    for (i, &k) in res.iter().enumerate() {
        if k < 1 || !lo[i].is_finite() || !hi[i].is_finite() || lo[i] > hi[i] {
            return Err(Error::Input(format!("grid axis {i} is invalid")));
        }
        total = total
            .checked_mul(k)
            .filter(|&t| t <= 1_000_000)
            .ok_or_else(|| Error::Input("grid exceeds 1e6 points".into()))?;
    }
    let n = lo.len();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        out.push(DVector::from_fn(n, |i, _| {
            if res[i] == 1 {
                lo[i]
            } else {
                lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (res[i] - 1) as f64
            }
        }));
        for i in 0..n {
            idx[i] += 1;
            if idx[i] < res[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(out)
}

/// Grid validation of `dist(x, Solv) <= phi(x) / sigma` on `B(x_bar, radius/2) ∩ S`.
///
/// `Solv` is approximated by the feasible nodes of a grid with `res` nodes
/// per axis over the cube of half-width `radius` around `x_bar`; the slack is
/// twice the grid spacing. On feasible nodes both sides vanish.
pub fn verify_error_bound(
    g: &ScenarioMap,
    c: &Cone,
    s: &PolyhedralSet,
    x_bar: &DVector<f64>,
    sigma: f64,
    radius: f64,
    res: usize,
) -> Result<ErrorBoundReport> {
    if !(sigma > 0.0) {
        return Err(Error::Input("error-bound modulus must be positive".into()));
    }
    if !(radius > 0.0) || res < 2 {
        return Err(Error::Input(
            "error-bound grid needs a positive radius and two nodes per axis".into(),
        ));
    }
    check_dim("error bound: reference point", g.in_dim(), x_bar.len())?;
    let n = x_bar.len();
    let lo: Vec<f64> = x_bar.iter().map(|v| v - radius).collect();
    let hi: Vec<f64> = x_bar.iter().map(|v| v + radius).collect();
    let nodes = grid_points(&lo, &hi, &vec![res; n])?;
    let spacing = 2.0 * radius / (res - 1) as f64;
    let slack = 2.0 * spacing;
    let mut solv: Vec<DVector<f64>> = Vec::new();
    let mut checks: Vec<(DVector<f64>, f64)> = Vec::new();
    for x in nodes {
        if !s.contains(&x, 1e-12)? {
            continue;
        }
        let phi = merit(g, c, &x)?;
        if phi <= 1e-9 {
            solv.push(x.clone());
        }
        if (&x - x_bar).norm() <= 0.5 * radius + 1e-12 {
            checks.push((x, phi));
        }
    }
    if solv.is_empty() {
        return Err(Error::Diagnostic(
            "no feasible grid point near the reference point".into(),
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for (x, phi) in &checks {
        let d = if *phi <= 1e-9 {
            0.0
        } else {
            solv.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min)
        };
        let viol = d - phi / sigma - slack;
        if viol > worst {
            worst = viol;
            witness = Some(x.iter().copied().collect());
        }
    }
    let pass = worst <= 0.0;
    Ok(ErrorBoundReport {
        sigma,
        radius,
        max_violation: worst,
        slack,
        checked: checks.len(),
        feasible: solv.len(),
        pass,
        witness: if pass { None } else { witness },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn identity_map(n: usize) -> ScenarioMap {
        ScenarioMap::new(vec![Scenario::new(DMatrix::identity(n, n), DVector::zeros(n)).unwrap()]).unwrap()
    }

    fn e1() -> ScenarioMap {
        let id = DMatrix::identity(2, 2);
        ScenarioMap::new(vec![
            Scenario::new(id.clone(), v(&[0.0, 0.0])).unwrap(),
            Scenario::new(id, v(&[-0.5, 0.0])).unwrap(),
        ])
        .unwrap()
    }

    fn small_grid() -> IncreaseGrid {
        IncreaseGrid {
            points: 8,
            radii: 2,
            moves: 32,
            probes: 32,
            seed: 1,
        }
    }

    #[test]
    fn identity_map_increases() {
        let g = identity_map(2);
        let c = Cone::orthant(2);
        let s = PolyhedralSet::whole_space(2);
        let x = v(&[0.0, 0.0]);
        let r = check_metric_increase(&g, &c, &s, &x, 1.5, 0.5, &small_grid()).unwrap();
        assert!(r.pass && r.witness.is_none());
        let r = check_metric_increase(&g, &c, &s, &x, 5.0, 0.5, &small_grid()).unwrap();
        assert!(!r.pass && r.witness.is_some());
        // true bound is 1 + 1/sqrt(2)
        let a = estimate_increase_bound(&g, &c, &s, &x, 0.5, &small_grid())
            .unwrap()
            .unwrap();
        assert!(a >= 1.5 && a <= 1.0 + 0.5f64.sqrt() + 1e-6, "{a}");
    }

    #[test]
    fn e1_increase_estimate() {
        let a = estimate_increase_bound(
            &e1(),
            &Cone::orthant(2),
            &PolyhedralSet::whole_space(2),
            &v(&[1.0, 0.0]),
            0.5,
            &small_grid(),
        )
        .unwrap()
        .unwrap();
        assert!(a >= 1.3, "{a}");
    }

    #[test]
    fn decreasing_map_fails() {
        let g = ScenarioMap::new(vec![Scenario::new(-DMatrix::identity(2, 2), v(&[0.0, 0.0])).unwrap()]).unwrap();
        let c = Cone::orthant(2);
        let s = PolyhedralSet::boxed(v(&[0.0, 0.0]), v(&[f64::INFINITY, f64::INFINITY])).unwrap();
        let x = v(&[0.0, 0.0]);
        assert_eq!(
            estimate_increase_bound(&g, &c, &s, &x, 0.5, &small_grid()).unwrap(),
            None
        );
        let r = check_metric_increase(&g, &c, &s, &x, 1.2, 0.5, &small_grid()).unwrap();
        assert!(!r.pass);
        assert!(r.witness.is_some());
    }

    #[test]
    fn sigma_from_increase() {
        assert_eq!(cq_sigma(1.5, 0.3).unwrap().sigma, 0.5);
        assert_eq!(cq_sigma(2.0, 0.3).unwrap().sigma, 1.0);
        assert!(cq_sigma(1.0, 0.3).is_err());
    }

    #[test]
    fn e1_error_bound() {
        let g = e1();
        let c = Cone::orthant(2);
        let s = PolyhedralSet::whole_space(2);
        let x = v(&[1.0, 0.0]);
        let r = verify_error_bound(&g, &c, &s, &x, 0.9, 1.2, 61).unwrap();
        assert!(r.pass, "{r:?}");
        let r = verify_error_bound(&g, &c, &s, &x, 100.0, 1.2, 61).unwrap();
        assert!(!r.pass);
        assert!(r.witness.is_some());
        assert!(verify_error_bound(&g, &c, &s, &x, 0.0, 1.2, 61).is_err());
    }

    #[test]
    fn error_bound_without_feasible_nodes() {
        let g = e1();
        let r = verify_error_bound(
            &g,
            &Cone::orthant(2),
            &PolyhedralSet::whole_space(2),
            &v(&[-5.0, -5.0]),
            1.0,
            1.0,
            11,
        );
        assert!(matches!(r, Err(Error::Diagnostic(_))));
    }

    #[test]
    fn grid_enumeration() {
        let pts = grid_points(&[0.0, 0.0], &[1.0, 2.0], &[2, 3]).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], v(&[0.0, 0.0]));
        assert_eq!(pts[5], v(&[1.0, 2.0]));
        assert!(grid_points(&[0.0; 3], &[1.0; 3], &[101, 101, 101]).is_err());
    }
}
