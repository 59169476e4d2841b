//! First-order necessary conditions for local weak efficiency: directional
//! checks, scalarized certificates and the fan multiplier rule, each backed
//! by a small LP where a multiplier has to be found.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cone::{self, Cone, ConeRep};
use crate::error::{check_dim, Error, Result};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::sampling;
use crate::scenario::{merit, ScenarioMap};
use crate::variational::{contingent_cone, normal_cone, Fan, Objective, PolyhedralSet};

/// Generator cap for every double-description enumeration.
pub const GENERATOR_CAP: usize = 64;

/// Numerical tolerances shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `phi(x) <= feasibility` counts as robustly feasible.
    pub feasibility: f64,
    /// Constraint activity in the set `S`.
    pub active: f64,
    /// Relative margin for strict interior tests (`1e-7 |v|`).
    pub interior_margin: f64,
    /// Residual accepted for a multiplier identity.
    pub residual: f64,
    /// Absolute margin for dominance in `int K`.
    pub dominance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-9,
            active: 1e-7,
            interior_margin: 1e-7,
            residual: 1e-8,
            dominance: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        Tolerances {
            feasibility: self.feasibility * factor,
            active: self.active * factor,
            interior_margin: self.interior_margin * factor,
            residual: self.residual * factor,
            dominance: self.dominance * factor,
        }
    }
}

/// A validated instance: minimize `f` over `S` w.r.t. `K` subject to
/// `G(x) ⊆ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub objective: Objective,
    pub k: Cone,
    pub c: Cone,
    pub s: PolyhedralSet,
    pub g: ScenarioMap,
    /// Interior direction of `K` with `|e| <= 1`.
    pub e: DVector<f64>,
    /// User-supplied fan replacing the scenario bundle.
    pub fan: Option<Fan>,
    pub tolerances: Tolerances,
}

/// Error tagged with the offending document field.
fn field(path: &str, message: impl Into<String>) -> Error {
    Error::validation(path, message)
}

impl Problem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        objective: Objective,
        k: Cone,
        c: Cone,
        s: PolyhedralSet,
        g: ScenarioMap,
        e: Option<DVector<f64>>,
        fan: Option<Fan>,
        tolerances: Tolerances,
    ) -> Result<Problem> {
        let n = objective.in_dim();
        let m = objective.out_dim();
        let p = g.out_dim();
        if g.in_dim() != n {
            return Err(field("scenarios", format!("expected {n} columns, got {}", g.in_dim())));
        }
        if s.dim() != n {
            return Err(field("s", format!("expected dimension {n}, got {}", s.dim())));
        }
        if k.dim() != m {
            return Err(field("k", format!("expected dimension {m}, got {}", k.dim())));
        }
        if c.dim() != p {
            return Err(field("c", format!("expected dimension {p}, got {}", c.dim())));
        }
        if let Some(f) = &fan {
            if f.in_dim() != n || f.out_dim() != p {
                return Err(field("fan", format!("bundle matrices must be {p}x{n}")));
            }
        }
        let k = match k.rep() {
            ConeRep::Rays(_) => k
                .to_halfspaces(GENERATOR_CAP)
                .ok_or_else(|| field("k", "too many facets to convert the ray form"))?,
            _ => k,
        };
        let (t, z) = k.interior_witness()?;
        if t <= 1e-9 {
            return Err(field("k", "ordering cone must have nonempty interior"));
        }
        if !c.is_nontrivial()? {
            return Err(field("c", "constraint cone must be proper (C != {0})"));
        }
        let c = match c.rep() {
            ConeRep::Rays(_) => c
                .to_halfspaces(GENERATOR_CAP)
                .ok_or_else(|| field("c", "too many facets to convert the ray form"))?,
            _ => c,
        };
        let e = match e {
            Some(e) => {
                if e.len() != m {
                    return Err(field("e", format!("expected dimension {m}, got {}", e.len())));
                }
                if e.norm() > 1.0 + 1e-12 {
                    return Err(field("e", "must lie in the closed unit ball"));
                }
                if !k.interior_contains(&e, 1e-12)? || e.norm() == 0.0 {
                    return Err(field("e", "must lie in the interior of k"));
                }
                e
            }
            None => match k.rep() {
                ConeRep::Orthant => DVector::from_element(m, 1.0 / (m as f64).sqrt()),
                _ => z.normalize(),
            },
        };
        Ok(Problem {
            objective,
            k,
            c,
            s,
            g,
            e,
            fan,
            tolerances,
        })
    }

    pub fn n(&self) -> usize {
        self.objective.in_dim()
    }

    pub fn m(&self) -> usize {
        self.objective.out_dim()
    }

    pub fn p(&self) -> usize {
        self.g.out_dim()
    }

    pub fn merit(&self, x: &DVector<f64>) -> Result<f64> {
        merit(&self.g, &self.c, x)
    }

    pub fn is_feasible(&self, x: &DVector<f64>) -> Result<bool> {
        Ok(self.s.contains(x, self.tolerances.active)? && self.merit(x)? <= self.tolerances.feasibility)
    }

    /// The fan used for prederivative-based conditions.
    pub fn fan(&self) -> Fan {
        self.fan.clone().unwrap_or_else(|| Fan::from_scenarios(&self.g))
    }

    /// Generators of `K+`: the unit rows of `K`.
    fn k_dual_generators(&self) -> Vec<DVector<f64>> {
        self.k
            .halfspace_rows()
            .expect("ordering cone is kept in halfspace form")
    }

    /// Normalization row for `K+` multipliers: all ones for the orthant,
    /// `e` otherwise.
    fn normalization(&self) -> DVector<f64> {
        match self.k.rep() {
            ConeRep::Orthant => DVector::from_element(self.m(), 1.0),
            _ => self.e.clone(),
        }
    }

    /// `z in -int K` with margin `interior_margin * scale`.
    fn in_negative_interior(&self, z: &DVector<f64>, scale: f64) -> Result<bool> {
        self.k.interior_contains(&-z, self.tolerances.interior_margin * scale)
    }

    fn require_feasible(&self, x_bar: &DVector<f64>) -> Result<()> {
        check_dim("reference point", self.n(), x_bar.len())?;
        if !self.s.contains(x_bar, self.tolerances.active)? {
            return Err(Error::Precondition("reference point is outside S".into()));
        }
        let phi = self.merit(x_bar)?;
        if phi > self.tolerances.feasibility {
            return Err(Error::Precondition(format!(
                "reference point is not robustly feasible (phi = {phi:e})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    PenalizationDirectional,
    ConvexScalarized,
    TangentialDirectional,
    ScalarizedFan,
    MultiplierRule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CertificateStatus {
    Holds,
    Violated { witness: Vec<f64> },
    LpInfeasible,
    Inconclusive { note: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub status: CertificateStatus,
    /// `y*` (scalarized kinds) or `v` (multiplier rule).
    pub multiplier: Option<Vec<f64>>,
    /// One `c_i in C-` per bundle matrix.
    pub constraint_multipliers: Vec<Vec<f64>>,
    /// Component of `N(S, x_bar)`.
    pub normal: Option<Vec<f64>>,
    /// `-grad f' y*`, a member of the negative dual of the tested cone.
    pub dual_element: Option<Vec<f64>>,
    pub residual: f64,
    /// Number of directions or generators examined.
    pub directions: usize,
}

impl Certificate {
    fn new(kind: CertificateKind, status: CertificateStatus) -> Self {
        Certificate {
            kind,
            status,
            multiplier: None,
            constraint_multipliers: Vec::new(),
            normal: None,
            dual_element: None,
            residual: 0.0,
            directions: 0,
        }
    }

    pub fn holds(&self) -> bool {
        self.status == CertificateStatus::Holds
    }

    /// Recomputes the residual of the stored multipliers without solving
    /// anything. Directional certificates carry no multipliers and replay to
    /// their stored residual.
    pub fn replay(&self, problem: &Problem, x_bar: &DVector<f64>, fan: &Fan) -> Result<f64> {
        let Some(y) = &self.multiplier else {
            return Ok(self.residual);
        };
        let y = DVector::from_column_slice(y);
        match self.kind {
            CertificateKind::MultiplierRule => {
                let c: Vec<DVector<f64>> = self
                    .constraint_multipliers
                    .iter()
                    .map(|c| DVector::from_column_slice(c))
                    .collect();
                let n = self.normal.as_ref().map(|n| DVector::from_column_slice(n));
                multiplier_residual(problem, x_bar, fan, &y, &c, n.as_ref())
            }
            CertificateKind::ScalarizedFan => {
                let d = tangent_fan_cone(problem, x_bar, fan)?;
                let gens = d.generators(GENERATOR_CAP).unwrap_or_default();
                let jac = problem.objective.jacobian(x_bar)?;
                let pair = gens.iter().map(|g| (-(&jac * g).dot(&y)).max(0.0)).fold(0.0, f64::max);
                Ok(pair.max(dual_membership(problem, &y)?))
            }
            _ => dual_membership(problem, &y),
        }
    }
}

/// Violation of `y in K+` plus the normalization gap.
fn dual_membership(problem: &Problem, y: &DVector<f64>) -> Result<f64> {
    let kd = problem.k.positive_dual();
    Ok(kd.distance(y)?.max((problem.normalization().dot(y) - 1.0).abs()))
}

/// `|J'v + sum L_i' c_i + n|_inf` together with the membership gaps of every
/// multiplier.
pub fn multiplier_residual(
    problem: &Problem,
    x_bar: &DVector<f64>,
    fan: &Fan,
    v: &DVector<f64>,
    c: &[DVector<f64>],
    n: Option<&DVector<f64>>,
) -> Result<f64> {
    check_dim("constraint multipliers", fan.bundle().len(), c.len())?;
    let jac = problem.objective.jacobian(x_bar)?;
    let mut sum = jac.tr_mul(v);
    let c_minus = problem.c.negative_dual();
    let mut gap = dual_membership(problem, v)?;
    for (l, ci) in fan.bundle().iter().zip(c) {
        sum += l.tr_mul(ci);
        gap = gap.max(c_minus.distance(ci)?);
    }
    if let Some(n) = n {
        sum += n;
        let nc = normal_cone(&problem.s, x_bar, problem.tolerances.active)?;
        gap = gap.max(nc.distance(n)?);
    }
    Ok(sum.amax().max(gap))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KLipschitzEstimate {
    pub ell_hat: f64,
    pub e: Vec<f64>,
    pub radius: f64,
    pub pairs: usize,
}

const ELL_CEILING: f64 = 1e6;

/// Smallest `l` with `f(x1) - f(x2) + l |x1 - x2| e in K` over sampled pairs of
/// `B(x_bar, radius)`. Each row `k_j` of `K` gives the exact threshold
/// `-k_j.(f(x1) - f(x2)) / (|x1 - x2| k_j.e)`, so no bisection is needed.
pub fn estimate_k_lipschitz(
    problem: &Problem,
    x_bar: &DVector<f64>,
    radius: f64,
    pairs: usize,
    seed: u64,
) -> Result<KLipschitzEstimate> {
    check_dim("reference point", problem.n(), x_bar.len())?;
    let n = problem.n();
    let mut pts = sampling::ball_points(x_bar, radius, 2 * pairs, seed);
    for d in sampling::coordinate_directions(n) {
        pts.push(x_bar + &d * radius);
        pts.push(x_bar.clone());
    }
    for d in sampling::coordinate_directions(n).chunks(2) {
        pts.push(x_bar + &d[0] * radius);
        pts.push(x_bar + &d[1] * radius);
    }
    let rows = problem.k_dual_generators();
    let ke: Vec<f64> = rows.iter().map(|r| r.dot(&problem.e)).collect();
    let mut ell = 0.0f64;
    let mut count = 0;
    for pair in pts.chunks(2) {
        if pair.len() < 2 {
            break;
        }
        let t = (&pair[0] - &pair[1]).norm();
        if t < 1e-14 {
            continue;
        }
        count += 1;
        let d = problem.objective.value(&pair[0])? - problem.objective.value(&pair[1])?;
        for (r, &re) in rows.iter().zip(&ke) {
            ell = ell.max(-r.dot(&d) / (t * re));
        }
    }
    if ell > ELL_CEILING {
        return Err(Error::Diagnostic(format!(
            "K-Lipschitz estimate exceeds {ELL_CEILING:e}"
        )));
    }
    Ok(KLipschitzEstimate {
        ell_hat: ell,
        e: problem.e.iter().copied().collect(),
        radius,
        pairs: count,
    })
}

/// Directions spread over a polyhedral cone: its generators when few, the
/// projections of sphere samples, and the projections of `extra`.
fn cone_directions(d: &Cone, samples: usize, seed: u64, extra: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::new();
    let mut push = |v: DVector<f64>| {
        if v.norm() > 1e-12 {
            out.push(v.normalize());
        }
    };
    if let Some(gens) = d.generators(GENERATOR_CAP) {
        gens.into_iter().for_each(&mut push);
    }
    for v in sampling::sphere_directions(d.dim(), samples, seed) {
        push(d.project(&v)?);
    }
    for v in sampling::coordinate_directions(d.dim()) {
        push(d.project(&v)?);
    }
    for v in extra {
        push(d.project(v)?);
    }
    Ok(out)
}

/// Directions whose image under the Jacobian points against `K`.
fn descent_hints(problem: &Problem, x_bar: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let jac = problem.objective.jacobian(x_bar)?;
    let mut out = vec![-jac.tr_mul(&problem.e)];
    for r in problem.k_dual_generators() {
        out.push(-jac.tr_mul(&r));
    }
    if let Ok(pinv) = jac.clone().pseudo_inverse(1e-12) {
        out.push(-(pinv * &problem.e));
    }
    Ok(out)
}

/// Sampled check that `f'(x_bar; v) + (l/(alpha-1)) (x*.v) e` never lies in
/// `-int K` for `v` in the contingent cone of `S`.
#[allow(clippy::too_many_arguments)]
pub fn check_penalization_condition(
    problem: &Problem,
    x_bar: &DVector<f64>,
    alpha: f64,
    ell: f64,
    x_star: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> Result<Certificate> {
    problem.require_feasible(x_bar)?;
    if !(alpha > 1.0) {
        return Err(Error::Precondition("penalization needs alpha > 1".into()));
    }
    if !(ell >= 0.0) {
        return Err(Error::Precondition("penalty weight must be nonnegative".into()));
    }
    check_dim("upper subgradient", problem.n(), x_star.len())?;
    let t = contingent_cone(&problem.s, x_bar, problem.tolerances.active)?;
    let dirs = cone_directions(&t, samples, seed, &descent_hints(problem, x_bar)?)?;
    let kappa = ell / (alpha - 1.0);
    let mut cert = Certificate::new(CertificateKind::PenalizationDirectional, CertificateStatus::Holds);
    cert.directions = dirs.len();
    for v in &dirs {
        let w = problem.objective.directional_derivative(x_bar, v)? + &problem.e * (kappa * x_star.dot(v));
        if problem.in_negative_interior(&w, v.norm())? {
            cert.status = CertificateStatus::Violated {
                witness: v.iter().copied().collect(),
            };
            break;
        }
    }
    Ok(cert)
}

/// One-sided difference quotient of the merit function.
fn merit_derivative(problem: &Problem, x_bar: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let h = 1e-6;
    Ok((problem.merit(&(x_bar + v * h))? - problem.merit(x_bar)?) / h)
}

/// Solves `y in K+`, `normalization . y = 1` and `y . (J g) >= rhs_g` for
/// every `g`. Returns `None` when infeasible.
fn scalarization_lp(
    problem: &Problem,
    jac: &DMatrix<f64>,
    gens: &[DVector<f64>],
    rhs: &[f64],
) -> Result<Option<DVector<f64>>> {
    let m = problem.m();
    // y = sum mu_j k_j over the rows of K, which generate K+
    let kr = problem.k_dual_generators();
    let mut lp = LinearProgram::new(kr.len());
    let norm = problem.normalization();
    lp.add_eq(kr.iter().map(|r| r.dot(&norm)).collect(), 1.0);
    for (g, &b) in gens.iter().zip(rhs) {
        let jg = jac * g;
        lp.add_ge(kr.iter().map(|r| r.dot(&jg)).collect(), b);
    }
    let res = lp::feasibility(&lp)?;
    Ok(match res.status {
        LpStatus::Optimal => {
            let mu = res.x.expect("optimal LP carries a point");
            let mut y = DVector::zeros(m);
            for (r, c) in kr.iter().zip(mu) {
                y += r * c;
            }
            Some(y)
        }
        _ => None,
    })
}

/// LP certificate of the convex penalization condition: some normalized
/// `y* in K+` with `y*.f'(x_bar; v) + (l/(alpha-1)) D phi(x_bar; v) >= 0` on the
/// generators of the tangent cone.
pub fn convex_scalarized_certificate(
    problem: &Problem,
    x_bar: &DVector<f64>,
    alpha: f64,
    ell: f64,
) -> Result<Certificate> {
    problem.require_feasible(x_bar)?;
    if !(alpha > 1.0) {
        return Err(Error::Precondition("penalization needs alpha > 1".into()));
    }
    let t = contingent_cone(&problem.s, x_bar, problem.tolerances.active)?;
    let Some(gens) = t.generators(GENERATOR_CAP) else {
        return Ok(Certificate::new(
            CertificateKind::ConvexScalarized,
            CertificateStatus::Inconclusive {
                note: "tangent cone has too many generators".into(),
            },
        ));
    };
    let kappa = ell / (alpha - 1.0);
    let slack = problem.tolerances.residual;
    let rhs: Vec<f64> = gens
        .iter()
        .map(|g| Ok(-slack - kappa * merit_derivative(problem, x_bar, g)?))
        .collect::<Result<_>>()?;
    let jac = problem.objective.jacobian(x_bar)?;
    let mut cert = Certificate::new(CertificateKind::ConvexScalarized, CertificateStatus::LpInfeasible);
    cert.directions = gens.len();
    if let Some(y) = scalarization_lp(problem, &jac, &gens, &rhs)? {
        let gap = gens
            .iter()
            .zip(&rhs)
            .map(|(g, &b)| (b + slack - (&jac * g).dot(&y)).max(0.0))
            .fold(0.0, f64::max);
        cert.residual = gap.max(dual_membership(problem, &y)?);
        cert.multiplier = Some(y.iter().copied().collect());
        cert.status = if cert.residual <= slack {
            CertificateStatus::Holds
        } else {
            CertificateStatus::Inconclusive {
                note: format!("multiplier residual {:e} above tolerance", cert.residual),
            }
        };
    }
    Ok(cert)
}

/// `H^{+1}(C) ∩ T(S, x_bar)` in halfspace form.
pub fn tangent_fan_cone(problem: &Problem, x_bar: &DVector<f64>, fan: &Fan) -> Result<Cone> {
    let t = contingent_cone(&problem.s, x_bar, problem.tolerances.active)?;
    let h = fan.upper_inverse_cone(&problem.c)?;
    Cone::intersect(problem.n(), &[&h, &t])
}

/// Sampled check that `f'(x_bar; v)` avoids `-int K` on
/// `H^{+1}(C) ∩ T(S, x_bar)`. A violation refutes local weak efficiency
/// when the fan is an outer prederivative.
pub fn check_tangential_condition(
    problem: &Problem,
    x_bar: &DVector<f64>,
    fan: &Fan,
    samples: usize,
    seed: u64,
) -> Result<Certificate> {
    problem.require_feasible(x_bar)?;
    let d = tangent_fan_cone(problem, x_bar, fan)?;
    if !d.is_nontrivial()? {
        return Ok(Certificate::new(
            CertificateKind::TangentialDirectional,
            CertificateStatus::Inconclusive {
                note: "tested cone reduces to {0}".into(),
            },
        ));
    }
    let dirs = cone_directions(&d, samples, seed, &descent_hints(problem, x_bar)?)?;
    let mut cert = Certificate::new(CertificateKind::TangentialDirectional, CertificateStatus::Holds);
    cert.directions = dirs.len();
    for v in &dirs {
        if !d.contains(v, 1e-9)? {
            continue;
        }
        let w = problem.objective.directional_derivative(x_bar, v)?;
        if problem.in_negative_interior(&w, v.norm())? {
            cert.status = CertificateStatus::Violated {
                witness: v.iter().copied().collect(),
            };
            break;
        }
    }
    Ok(cert)
}

/// LP certificate: normalized `y* in K+` with `(grad f' y*).v_g >= 0` on the
/// generators of `H^{+1}(C) ∩ T(S, x_bar)`; also emits `-grad f' y*`.
pub fn scalarized_fan_certificate(problem: &Problem, x_bar: &DVector<f64>, fan: &Fan) -> Result<Certificate> {
    problem.require_feasible(x_bar)?;
    let inconclusive = |note: &str| {
        Ok(Certificate::new(
            CertificateKind::ScalarizedFan,
            CertificateStatus::Inconclusive { note: note.into() },
        ))
    };
    if !problem.objective.is_affine() {
        return inconclusive("objective is not affine");
    }
    let d = tangent_fan_cone(problem, x_bar, fan)?;
    let rows = d.halfspace_rows().map_or(0, |r| r.len());
    if d.dim() > 4 || rows > 12 {
        return inconclusive("cone too large for generator enumeration");
    }
    let Some(gens) = d.generators(GENERATOR_CAP) else {
        return inconclusive("generator enumeration overflow");
    };
    let jac = problem.objective.jacobian(x_bar)?;
    let slack = problem.tolerances.residual;
    let rhs = vec![0.0; gens.len()];
    let mut cert = Certificate::new(CertificateKind::ScalarizedFan, CertificateStatus::LpInfeasible);
    cert.directions = gens.len();
    if let Some(y) = scalarization_lp(problem, &jac, &gens, &rhs)? {
        // pairing re-verified outside the LP
        let dual = -jac.tr_mul(&y);
        let pairing = gens.iter().map(|g| dual.dot(g).max(0.0)).fold(0.0, f64::max);
        cert.residual = pairing.max(dual_membership(problem, &y)?);
        cert.multiplier = Some(y.iter().copied().collect());
        cert.dual_element = Some(dual.iter().copied().collect());
        cert.status = if cert.residual <= slack {
            CertificateStatus::Holds
        } else {
            CertificateStatus::Inconclusive {
                note: format!("pairing residual {:e} above tolerance", cert.residual),
            }
        };
    }
    Ok(cert)
}

/// Multiplier rule `J'v + sum_i L_i' c_i + n = 0` with `v in K+` normalized,
/// `c_i in C-` and `n in N(S, x_bar)`, found by LP over the generator
/// coefficients. Among solutions the one with smallest `sum` of constraint and
/// normal coefficients is returned.
pub fn multiplier_certificate(problem: &Problem, x_bar: &DVector<f64>, fan: &Fan) -> Result<Certificate> {
    problem.require_feasible(x_bar)?;
    check_dim("fan domain", problem.n(), fan.in_dim())?;
    check_dim("fan codomain", problem.p(), fan.out_dim())?;
    let n = problem.n();
    let jac = problem.objective.jacobian(x_bar)?;
    let kr = problem.k_dual_generators();
    let cr = problem
        .c
        .negative_dual()
        .generators(GENERATOR_CAP)
        .ok_or_else(|| Error::Numerical("constraint dual has too many generators".into()))?;
    let normals = problem.s.active_normals(x_bar, problem.tolerances.active);
    let bundle = fan.bundle();

    // columns: mu (K rows), lambda_i (C- generators per bundle matrix), nu (normals)
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for r in &kr {
        cols.push(jac.tr_mul(r));
    }
    for l in bundle {
        for h in &cr {
            cols.push(l.tr_mul(h));
        }
    }
    cols.extend(normals.iter().cloned());
    let nv = cols.len();
    let mut lp = LinearProgram::new(nv);
    for i in 0..n {
        lp.add_eq(cols.iter().map(|c| c[i]).collect(), 0.0);
    }
    let norm = problem.normalization();
    let mut nrow = vec![0.0; nv];
    for (j, r) in kr.iter().enumerate() {
        nrow[j] = r.dot(&norm);
    }
    lp.add_eq(nrow, 1.0);
    let mut cost = vec![1.0; nv];
    cost[..kr.len()].iter_mut().for_each(|c| *c = 0.0);
    let res = lp::solve_lp(&lp.minimize(cost))?;

    let mut cert = Certificate::new(CertificateKind::MultiplierRule, CertificateStatus::LpInfeasible);
    cert.directions = nv;
    if res.status != LpStatus::Optimal {
        return Ok(cert);
    }
    let x = res.x.expect("optimal LP carries a point");
    let mut v = DVector::zeros(problem.m());
    for (r, &mu) in kr.iter().zip(&x) {
        v += r * mu;
    }
    let mut off = kr.len();
    let mut cs = Vec::with_capacity(bundle.len());
    for _ in bundle {
        let mut c = DVector::zeros(problem.p());
        for (h, &lam) in cr.iter().zip(&x[off..]) {
            c += h * lam;
        }
        off += cr.len();
        cs.push(c);
    }
    let mut nvec = DVector::zeros(n);
    for (a, &nu) in normals.iter().zip(&x[off..]) {
        nvec += a * nu;
    }
    cert.residual = multiplier_residual(problem, x_bar, fan, &v, &cs, Some(&nvec))?;
    cert.multiplier = Some(v.iter().copied().collect());
    cert.constraint_multipliers = cs.iter().map(|c| c.iter().copied().collect()).collect();
    cert.normal = Some(nvec.iter().copied().collect());
    cert.status = if cert.residual <= problem.tolerances.residual {
        CertificateStatus::Holds
    } else {
        CertificateStatus::Inconclusive {
            note: format!("multiplier residual {:e} above tolerance", cert.residual),
        }
    };
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlaterReport {
    /// `int C` nonempty and `x_bar in int S`.
    pub applicable: bool,
    pub t: f64,
    pub witness: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualificationReport {
    /// Largest common slack of the preimage rows and the tangent rows.
    pub t: f64,
    pub witness: Vec<f64>,
    pub pass: bool,
    pub slater: SlaterReport,
}

/// LP test for a point strictly inside every `L_i`-preimage of `C` and the
/// tangent cone of `S`, plus the Slater-type variant `L_i x0 in int C`.
pub fn qualification_check(problem: &Problem, fan: &Fan, x_bar: &DVector<f64>) -> Result<QualificationReport> {
    check_dim("reference point", problem.n(), x_bar.len())?;
    let n = problem.n();
    let t_cone = contingent_cone(&problem.s, x_bar, problem.tolerances.active)?;
    let mut rows = t_cone.halfspace_rows().unwrap_or_default();
    let c_rows = problem
        .c
        .halfspace_rows()
        .ok_or(Error::UnsupportedRepresentation("qualification"))?;
    let mut slater_rows = Vec::new();
    let mut annihilated = false;
    for l in fan.bundle() {
        for r in &c_rows {
            match cone::unit(l.tr_mul(r)) {
                Some(u) => {
                    rows.push(u.clone());
                    slater_rows.push(u);
                }
                None => annihilated = true,
            }
        }
    }
    let (t, z) = cone::slack_lp(&rows, n)?;
    let pass = t > 1e-8;
    let (ts, zs) = if annihilated {
        (0.0, DVector::zeros(n))
    } else {
        cone::slack_lp(&slater_rows, n)?
    };
    let int_c = problem.c.interior_witness()?.0 > 1e-9;
    let applicable = int_c && problem.s.is_interior(x_bar, problem.tolerances.active);
    Ok(QualificationReport {
        t,
        witness: z.iter().copied().collect(),
        pass,
        slater: SlaterReport {
            applicable,
            t: ts,
            witness: zs.iter().copied().collect(),
            pass: ts > 1e-8,
        },
    })
}
