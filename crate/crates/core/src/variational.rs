//! First-order geometry of the problem data: tangent and normal cones of a
//! polyhedral set, derivatives of the objective, the strong slope and upper
//! subgradients of the merit function, and fans generated by matrix bundles.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cone::{self, Cone};
use crate::error::{check_dim, Error, Result};
use crate::sampling;
use crate::scenario::{excess, hausdorff, PointCloud, ScenarioMap, Target};

/// Absolute tolerance (after row normalization) for calling a constraint active.
pub const ACTIVE_TOL: f64 = 1e-7;

/// A closed convex polyhedron, either a box with possibly infinite bounds or
/// an intersection of halfspaces `a_j . x <= b_j`.
#[derive(Debug, Clone, PartialEq)]
pub enum PolyhedralSet {
    Box {
        lo: DVector<f64>,
        hi: DVector<f64>,
    },
    Halfspaces {
        normals: Vec<DVector<f64>>,
        offsets: Vec<f64>,
        dim: usize,
    },
}

impl PolyhedralSet {
    pub fn whole_space(dim: usize) -> Self {
        PolyhedralSet::Box {
            lo: DVector::from_element(dim, f64::NEG_INFINITY),
            hi: DVector::from_element(dim, f64::INFINITY),
        }
    }

    pub fn boxed(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        check_dim("box bounds", lo.len(), hi.len())?;
        for i in 0..lo.len() {
            if lo[i].is_nan() || hi[i].is_nan() || lo[i] > hi[i] || lo[i] == f64::INFINITY || hi[i] == f64::NEG_INFINITY
            {
                return Err(Error::Input(format!("box bound {i}: need lo <= hi")));
            }
        }
        Ok(PolyhedralSet::Box { lo, hi })
    }

    /// `{x : a_j . x <= b_j}`; rows are rescaled to unit length.
    pub fn halfspaces(dim: usize, normals: Vec<DVector<f64>>, offsets: Vec<f64>) -> Result<Self> {
        check_dim("halfspace offsets", normals.len(), offsets.len())?;
        let mut ns = Vec::with_capacity(normals.len());
        let mut bs = Vec::with_capacity(normals.len());
        for (i, (a, b)) in normals.into_iter().zip(offsets).enumerate() {
            check_dim("halfspace normal", dim, a.len())?;
            if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("halfspace {i} has non-finite data")));
            }
            let n = a.norm();
            let u = cone::unit(a).ok_or_else(|| Error::Input(format!("halfspace {i} has a zero normal")))?;
            let scale = if (n - 1.0).abs() <= 4.0 * f64::EPSILON { 1.0 } else { n };
            ns.push(u);
            bs.push(b / scale);
        }
        Ok(PolyhedralSet::Halfspaces {
            normals: ns,
            offsets: bs,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            PolyhedralSet::Box { lo, .. } => lo.len(),
            PolyhedralSet::Halfspaces { dim, .. } => *dim,
        }
    }

    /// Finite constraints as `(unit normal, offset)` pairs meaning `a . x <= b`.
    pub fn constraints(&self) -> Vec<(DVector<f64>, f64)> {
        match self {
            PolyhedralSet::Box { lo, hi } => {
                let n = lo.len();
                let mut out = Vec::new();
                for i in 0..n {
                    let mut e = DVector::zeros(n);
                    e[i] = 1.0;
                    if lo[i].is_finite() {
                        out.push((-&e, -lo[i]));
                    }
                    if hi[i].is_finite() {
                        out.push((e, hi[i]));
                    }
                }
                out
            }
            PolyhedralSet::Halfspaces { normals, offsets, .. } => {
                normals.iter().cloned().zip(offsets.iter().copied()).collect()
            }
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim("set membership", self.dim(), x.len())?;
        Ok(match self {
            PolyhedralSet::Box { lo, hi } => (0..x.len()).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol),
            PolyhedralSet::Halfspaces { normals, offsets, .. } => {
                normals.iter().zip(offsets).all(|(a, b)| a.dot(x) <= b + tol)
            }
        })
    }

    /// Unit outward normals of the constraints active at `x` within `tol`.
    pub fn active_normals(&self, x: &DVector<f64>, tol: f64) -> Vec<DVector<f64>> {
        let mut out: Vec<DVector<f64>> = Vec::new();
        for (a, b) in self.constraints() {
            if (a.dot(x) - b).abs() <= tol && !out.iter().any(|g| (g - &a).norm() < 1e-12) {
                out.push(a);
            }
        }
        out
    }

    pub fn is_interior(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.constraints().iter().all(|(a, b)| a.dot(x) < b - tol)
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("set projection", self.dim(), x.len())?;
        match self {
            PolyhedralSet::Box { lo, hi } => Ok(DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))),
            PolyhedralSet::Halfspaces { normals, offsets, .. } => {
                if self.contains(x, 0.0)? {
                    return Ok(x.clone());
                }
                cone::dykstra_halfspaces(normals, offsets, x, 1e-12, cone::DYKSTRA_SWEEPS)
            }
        }
    }
}

/// Contingent cone `T(S, x_bar)`; for a convex polyhedron it coincides with
/// the closure of the feasible-direction cone, and the feasible-direction
/// cone is already closed.
pub fn contingent_cone(s: &PolyhedralSet, x_bar: &DVector<f64>, tol: f64) -> Result<Cone> {
    if !s.contains(x_bar, tol)? {
        return Err(Error::Precondition("reference point is not in the set".into()));
    }
    let rows = s.active_normals(x_bar, tol).into_iter().map(|a| -a).collect();
    Cone::halfspaces(s.dim(), rows)
}

/// Normal cone `N(S, x_bar)` generated by the active outward normals.
pub fn normal_cone(s: &PolyhedralSet, x_bar: &DVector<f64>, tol: f64) -> Result<Cone> {
    if !s.contains(x_bar, tol)? {
        return Err(Error::Precondition("reference point is not in the set".into()));
    }
    Cone::rays(s.dim(), s.active_normals(x_bar, tol))
}

/// Vector criterion `f : R^n -> R^m`.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `f(x) = J x + c`.
    Affine {
        jacobian: DMatrix<f64>,
        offset: DVector<f64>,
    },
    /// `f_k(x) = x' Q_k x + j_k . x + c_k` with symmetric `Q_k`.
    Quadratic {
        q: Vec<DMatrix<f64>>,
        linear: Vec<DVector<f64>>,
        constant: DVector<f64>,
    },
}

impl Objective {
    pub fn affine(jacobian: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        check_dim("objective offset", jacobian.nrows(), offset.len())?;
        Ok(Objective::Affine { jacobian, offset })
    }

    pub fn quadratic(q: Vec<DMatrix<f64>>, linear: Vec<DVector<f64>>, constant: DVector<f64>) -> Result<Self> {
        let m = constant.len();
        check_dim("quadratic components", m, q.len())?;
        check_dim("quadratic linear terms", m, linear.len())?;
        let n = linear.first().map_or(0, |l| l.len());
        for (k, (qk, jk)) in q.iter().zip(&linear).enumerate() {
            check_dim("quadratic rows", n, qk.nrows())?;
            check_dim("quadratic columns", n, qk.ncols())?;
            check_dim("quadratic linear term", n, jk.len())?;
            let asym = (qk - qk.transpose()).amax();
            if asym > 1e-12 * qk.amax().max(1.0) {
                return Err(Error::Input(format!("quadratic component {k} is not symmetric")));
            }
        }
        Ok(Objective::Quadratic { q, linear, constant })
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Objective::Affine { jacobian, .. } => jacobian.ncols(),
            Objective::Quadratic { linear, .. } => linear.first().map_or(0, |l| l.len()),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Objective::Affine { jacobian, .. } => jacobian.nrows(),
            Objective::Quadratic { constant, .. } => constant.len(),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Objective::Affine { .. })
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("objective argument", self.in_dim(), x.len())?;
        Ok(match self {
            Objective::Affine { jacobian, offset } => jacobian * x + offset,
            Objective::Quadratic { q, linear, constant } => DVector::from_fn(constant.len(), |k, _| {
                x.dot(&(&q[k] * x)) + linear[k].dot(x) + constant[k]
            }),
        })
    }

    /// Jacobian at `x`; row `k` is the gradient of component `k`.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("objective argument", self.in_dim(), x.len())?;
        Ok(match self {
            Objective::Affine { jacobian, .. } => jacobian.clone(),
            Objective::Quadratic { q, linear, .. } => {
                let n = x.len();
                let mut jac = DMatrix::zeros(q.len(), n);
                for (k, (qk, jk)) in q.iter().zip(linear).enumerate() {
                    let g = qk * x * 2.0 + jk;
                    jac.row_mut(k).copy_from(&g.transpose());
                }
                jac
            }
        })
    }

    /// `f'(x_bar; v)`. Both objective kinds are differentiable, so this is
    /// also the B-derivative and the action of the Frechet derivative.
    pub fn directional_derivative(&self, x_bar: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("direction", self.in_dim(), v.len())?;
        Ok(self.jacobian(x_bar)? * v)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SlopeOptions {
    pub shells: usize,
    pub directions_per_dim: usize,
    pub seed: u64,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        SlopeOptions {
            shells: 6,
            directions_per_dim: 64,
            seed: sampling::DEFAULT_SEED,
        }
    }
}

/// Sampled strong slope of `phi` at `x_bar` relative to `s`.
///
/// Descent quotients `(phi(x_bar) - phi(x)) / |x - x_bar|` are evaluated on
/// shells of radius `r, r/2, ..., r/2^(shells-1)` (points projected onto `s`),
/// and the largest one is returned, clamped at zero. Sampling a supremum only
/// ever underestimates it.
pub fn strong_slope<F>(phi: F, s: &PolyhedralSet, x_bar: &DVector<f64>, radius: f64, opts: SlopeOptions) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let n = x_bar.len();
    let phi0 = phi(x_bar)?;
    if !phi0.is_finite() {
        return Err(Error::Precondition(
            "merit value at the reference point is not finite".into(),
        ));
    }
    let mut dirs = sampling::sphere_directions(n, opts.directions_per_dim * n, opts.seed);
    dirs.extend(sampling::coordinate_directions(n));
    let grad = upper_subgradient_candidate(&phi, x_bar, (radius * 1e-3).min(1e-5))?;
    if let Some(g) = cone::unit(grad) {
        dirs.push(g.clone());
        dirs.push(-g);
    }
    let mut best = f64::NEG_INFINITY;
    let mut samples = 0usize;
    for k in 0..opts.shells {
        let rho = radius / f64::powi(2.0, k as i32);
        for d in &dirs {
            let x = s.project(&(x_bar + d * rho))?;
            let dist = (&x - x_bar).norm();
            if dist < 1e-14 {
                continue;
            }
            samples += 1;
            best = best.max((phi0 - phi(&x)?) / dist);
        }
    }
    if samples == 0 {
        return Err(Error::Diagnostic(
            "no feasible sample around the reference point".into(),
        ));
    }
    Ok(best.max(0.0))
}

/// Central finite-difference gradient of `phi`, used as a candidate element
/// of the Frechet upper subdifferential.
pub fn upper_subgradient_candidate<F>(phi: F, x_bar: &DVector<f64>, step: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let n = x_bar.len();
    let mut g = DVector::zeros(n);
    for i in 0..n {
        let mut xp = x_bar.clone();
        let mut xm = x_bar.clone();
        xp[i] += step;
        xm[i] -= step;
        g[i] = (phi(&xp)? - phi(&xm)?) / (2.0 * step);
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledVerdict {
    pub pass: bool,
    /// Largest sampled violation (negative when every sample has slack).
    pub worst: f64,
    pub witness: Option<Vec<f64>>,
    pub samples: usize,
}

/// Tests `phi(x) <= phi(x_bar) + x*.(x - x_bar) + eps |x - x_bar|` on samples of
/// the ball. A pass is evidence only.
pub fn check_upper_subgradient<F>(
    phi: F,
    x_bar: &DVector<f64>,
    x_star: &DVector<f64>,
    radius: f64,
    samples: usize,
    eps: f64,
    seed: u64,
) -> Result<SampledVerdict>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    check_dim("upper subgradient", x_bar.len(), x_star.len())?;
    let phi0 = phi(x_bar)?;
    let mut pts = sampling::ball_points(x_bar, radius, samples, seed);
    for k in 0..4 {
        let rho = radius / f64::powi(4.0, k);
        for d in sampling::coordinate_directions(x_bar.len()) {
            pts.push(x_bar + d * rho);
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for x in &pts {
        let u = x - x_bar;
        let viol = phi(x)? - phi0 - x_star.dot(&u) - eps * u.norm();
        if viol > worst {
            worst = viol;
            witness = Some(x.iter().copied().collect());
        }
    }
    let pass = worst <= 1e-12;
    Ok(SampledVerdict {
        pass,
        worst,
        witness: if pass { None } else { witness },
        samples: pts.len(),
    })
}

/// Set-valued map `u -> conv{L_1 u, ..., L_p u}` generated by a finite bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Fan {
    bundle: Vec<DMatrix<f64>>,
    in_dim: usize,
    out_dim: usize,
}

impl Fan {
    pub fn new(bundle: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = bundle
            .first()
            .ok_or_else(|| Error::Input("fan bundle must contain at least one matrix".into()))?;
        let (out_dim, in_dim) = first.shape();
        for m in &bundle {
            check_dim("fan bundle rows", out_dim, m.nrows())?;
            check_dim("fan bundle columns", in_dim, m.ncols())?;
        }
        Ok(Fan {
            bundle,
            in_dim,
            out_dim,
        })
    }

    /// The bundle `{A_w}` of an affine scenario map. It is an exact outer
    /// prederivative at every point since `A x + b = (A x_bar + b) + A (x - x_bar)`.
    pub fn from_scenarios(g: &ScenarioMap) -> Fan {
        let mut bundle: Vec<DMatrix<f64>> = Vec::new();
        for s in g.scenarios() {
            if !bundle.contains(&s.a) {
                bundle.push(s.a.clone());
            }
        }
        Fan {
            bundle,
            in_dim: g.in_dim(),
            out_dim: g.out_dim(),
        }
    }

    pub fn bundle(&self) -> &[DMatrix<f64>] {
        &self.bundle
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Vertices `{L_i u}` of the polytope `H(u)`.
    pub fn image(&self, u: &DVector<f64>) -> Result<PointCloud> {
        check_dim("fan argument", self.in_dim, u.len())?;
        Ok(PointCloud {
            points: self.bundle.iter().map(|l| l * u).collect(),
        })
    }

    /// `H^{+1}(C) = {v : L_i v in C for every i}`.
    pub fn upper_inverse_cone(&self, c: &Cone) -> Result<Cone> {
        check_dim("fan codomain", self.out_dim, c.dim())?;
        let pre: Vec<Cone> = self.bundle.iter().map(|l| c.preimage(l)).collect::<Result<_>>()?;
        let refs: Vec<&Cone> = pre.iter().collect();
        Cone::intersect(self.in_dim, &refs)
    }

    /// Largest operator norm over the bundle, a Lipschitz constant of `H` in
    /// the Hausdorff distance.
    pub fn lipschitz_bound(&self) -> f64 {
        self.bundle.iter().map(operator_norm).fold(0.0, f64::max)
    }
}

/// Spectral norm by power iteration on `L'L`; falls back to the Frobenius
/// norm (an upper bound) when the iteration does not settle.
pub fn operator_norm(l: &DMatrix<f64>) -> f64 {
    let n = l.ncols();
    if n == 0 || l.amax() == 0.0 {
        return 0.0;
    }
    let gram = l.tr_mul(l);
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64).normalize();
    let mut prev = 0.0;
    for _ in 0..500 {
        let w = &gram * &v;
        let lam = w.norm();
        if lam == 0.0 {
            return l.norm();
        }
        v = w / lam;
        if (lam - prev).abs() <= 1e-10 * lam {
            return lam.sqrt();
        }
        prev = lam;
    }
    l.norm()
}

/// Distance from `w` to the polytope `conv(vertices)`, from above: exact when
/// a vertex matches, otherwise the best of a barycentric sampling at
/// resolution `1e-2`.
fn polytope_distance(w: &DVector<f64>, vertices: &[DVector<f64>], seed: u64) -> f64 {
    let mut best = vertices.iter().map(|h| (w - h).norm()).fold(f64::INFINITY, f64::min);
    let p = vertices.len();
    if best <= 1e-14 || p == 1 {
        return best;
    }
    const STEPS: usize = 100;
    let mut eval = |lam: &[f64]| {
        let mut h = DVector::zeros(w.len());
        for (v, &c) in vertices.iter().zip(lam) {
            h += v * c;
        }
        best = best.min((w - h).norm());
    };
    if p == 2 {
        for k in 0..=STEPS {
            let t = k as f64 / STEPS as f64;
            eval(&[t, 1.0 - t]);
        }
    } else if p == 3 {
        for a in 0..=STEPS {
            for b in 0..=(STEPS - a) {
                let (x, y) = (a as f64 / STEPS as f64, b as f64 / STEPS as f64);
                eval(&[x, y, 1.0 - x - y]);
            }
        }
    } else {
        for i in 0..p {
            for j in (i + 1)..p {
                for k in 0..=STEPS {
                    let t = k as f64 / STEPS as f64;
                    let mut lam = vec![0.0; p];
                    lam[i] = t;
                    lam[j] = 1.0 - t;
                    eval(&lam);
                }
            }
        }
        let mut seq = sampling::Halton::new(p.min(24), seed);
        for _ in 0..5000 {
            let u = seq.next_point();
            let e: Vec<f64> = u.iter().map(|x| -(x.max(1e-300)).ln()).collect();
            let s: f64 = e.iter().sum();
            let mut lam: Vec<f64> = e.iter().map(|x| x / s).collect();
            lam.resize(p, 0.0);
            eval(&lam);
        }
    }
    best
}

/// Sampled check of `G(x) <= G(x_bar) + H(x - x_bar) + eps |x - x_bar| B` on
/// `B(x_bar, delta)`. `worst` is the largest `exc(...) - eps |x - x_bar|`.
#[allow(clippy::too_many_arguments)]
pub fn check_outer_prederivative(
    g: &ScenarioMap,
    x_bar: &DVector<f64>,
    fan: &Fan,
    eps: f64,
    delta: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<SampledVerdict> {
    check_dim("prederivative domain", g.in_dim(), fan.in_dim())?;
    check_dim("prederivative codomain", g.out_dim(), fan.out_dim())?;
    if delta <= 0.0 {
        return Ok(SampledVerdict {
            pass: true,
            worst: 0.0,
            witness: None,
            samples: 0,
        });
    }
    let base = g.evaluate(x_bar)?;
    let mut pts = sampling::ball_points(x_bar, delta, samples, seed);
    for d in sampling::sphere_directions(x_bar.len(), 16, seed ^ 1) {
        pts.push(x_bar + d * delta);
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for x in &pts {
        let u = x - x_bar;
        let hull = fan.image(&u)?;
        let mut exc = 0.0f64;
        for p in g.evaluate(x)?.points {
            let d = base
                .points
                .iter()
                .map(|q| polytope_distance(&(&p - q), &hull.points, seed))
                .fold(f64::INFINITY, f64::min);
            exc = exc.max(d);
        }
        let r = exc - eps * u.norm();
        if r > worst {
            worst = r;
            witness = Some(x.iter().copied().collect());
        }
    }
    let pass = worst <= tol;
    Ok(SampledVerdict {
        pass,
        worst,
        witness: if pass { None } else { witness },
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FanAxiomReport {
    /// `max haus(H(t x), t H(x))`.
    pub homogeneity: f64,
    /// `dist(0, H(0))`.
    pub zero_in_image: f64,
    /// `max |(sum l_i L_i) x - sum l_i (L_i x)|` over convex weights.
    pub convexity: f64,
    /// `max exc(H(x1 + x2), H(x1) + H(x2))`.
    pub subadditivity: f64,
    pub pass: bool,
}

/// Sampled check of the fan axioms for a bundle-generated fan.
pub fn check_fan_axioms(fan: &Fan, samples: usize, seed: u64) -> Result<FanAxiomReport> {
    let n = fan.in_dim();
    let zero = DVector::zeros(n);
    let pts = sampling::ball_points(&zero, 2.0, 2 * samples, seed);
    let mut homogeneity = 0.0f64;
    let mut convexity = 0.0f64;
    let mut subadditivity = 0.0f64;
    let zero_in_image = fan.image(&zero)?.point_distance(&DVector::zeros(fan.out_dim()));
    let mut weights = sampling::Halton::new(fan.bundle().len().min(24), seed ^ 7);
    for pair in pts.chunks(2) {
        let (x1, x2) = (&pair[0], &pair[1]);
        let h1 = fan.image(x1)?;
        for t in [0.5, 2.0, 10.0] {
            let scaled = PointCloud {
                points: h1.points.iter().map(|p| p * t).collect(),
            };
            homogeneity = homogeneity.max(hausdorff(&fan.image(&(x1 * t))?, &scaled)?);
        }
        let u = weights.next_point();
        let mut lam: Vec<f64> = u.iter().map(|x| -(x.max(1e-300)).ln()).collect();
        lam.resize(fan.bundle().len(), 1.0);
        let s: f64 = lam.iter().sum();
        lam.iter_mut().for_each(|l| *l /= s);
        let mut mixed = DMatrix::zeros(fan.out_dim(), n);
        let mut combo = DVector::zeros(fan.out_dim());
        for (l, &c) in fan.bundle().iter().zip(&lam) {
            mixed += l * c;
            combo += (l * x1) * c;
        }
        convexity = convexity.max((mixed * x1 - combo).norm());
        let h2 = fan.image(x2)?;
        let mut sum = Vec::with_capacity(h1.len() * h2.len());
        for a in &h1.points {
            for b in &h2.points {
                sum.push(a + b);
            }
        }
        let sum = PointCloud { points: sum };
        subadditivity = subadditivity.max(excess(&fan.image(&(x1 + x2))?, Target::Points(&sum))?);
    }
    let tol = 1e-9;
    Ok(FanAxiomReport {
        pass: homogeneity <= tol && zero_in_image <= tol && convexity <= tol && subadditivity <= tol,
        homogeneity,
        zero_in_image,
        convexity,
        subadditivity,
    })
}
