//! Polyhedral convex cones: membership, projection, distance, duals and
//! preimages under linear maps.
//!
//! A cone is kept in one of three representations. Halfspace normals and ray
//! generators are stored unit-normalized so every tolerance is measured on the
//! same scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::lp::{self, LinearProgram};

/// Tolerance on successive iterates for the alternating-projection scheme.
pub const DYKSTRA_TOL: f64 = 1e-10;
pub const DYKSTRA_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ConeRep {
    /// Nonnegative orthant.
    Orthant,
    /// `{z : m_j . z >= 0 for all j}`. No rows means the whole space.
    Halfspaces(Vec<DVector<f64>>),
    /// `{sum_i l_i r_i : l_i >= 0}`. No generators means `{0}`.
    Rays(Vec<DVector<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    dim: usize,
    rep: ConeRep,
    proper: bool,
}

/// A coordinate vector together with its cached Euclidean length.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalVector {
    coords: DVector<f64>,
    norm: f64,
}

impl DirectionalVector {
    pub fn new(coords: DVector<f64>) -> Self {
        let norm = coords.norm();
        DirectionalVector { coords, norm }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn unit(&self) -> Option<DVector<f64>> {
        (self.norm > 0.0).then(|| &self.coords / self.norm)
    }
}

impl From<DVector<f64>> for DirectionalVector {
    fn from(v: DVector<f64>) -> Self {
        DirectionalVector::new(v)
    }
}

/// Unit-normalize `v`; `None` when it is (numerically) zero. Vectors already of
/// unit length are returned untouched so normalization is idempotent.
pub(crate) fn unit(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    if !(n > 1e-14) {
        return None;
    }
    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        Some(v)
    } else {
        Some(v / n)
    }
}

fn normalize_all(vs: Vec<DVector<f64>>, dim: usize, what: &str) -> Result<Vec<DVector<f64>>> {
    vs.into_iter()
        .enumerate()
        .map(|(i, v)| {
            check_dim("cone vector", dim, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input(format!("{what} {i} has non-finite entries")));
            }
            unit(v).ok_or_else(|| Error::Input(format!("{what} {i} is zero")))
        })
        .collect()
}

fn identity_rows(dim: usize) -> Vec<DVector<f64>> {
    (0..dim)
        .map(|i| {
            let mut e = DVector::zeros(dim);
            e[i] = 1.0;
            e
        })
        .collect()
}

impl Cone {
    pub fn orthant(dim: usize) -> Self {
        Cone {
            dim,
            rep: ConeRep::Orthant,
            proper: dim > 0,
        }
    }

    /// `{z : row . z >= 0}` for every row. Rows must be nonzero.
    pub fn halfspaces(dim: usize, rows: Vec<DVector<f64>>) -> Result<Self> {
        let rows = normalize_all(rows, dim, "halfspace row")?;
        Ok(Cone {
            dim,
            proper: !rows.is_empty(),
            rep: ConeRep::Halfspaces(rows),
        })
    }

    /// Conic hull of the generators. Generators must be nonzero.
    pub fn rays(dim: usize, gens: Vec<DVector<f64>>) -> Result<Self> {
        let gens = normalize_all(gens, dim, "ray generator")?;
        let proper = !positively_spans(&gens, dim);
        Ok(Cone {
            dim,
            proper,
            rep: ConeRep::Rays(gens),
        })
    }

    pub fn whole_space(dim: usize) -> Self {
        Cone {
            dim,
            rep: ConeRep::Halfspaces(Vec::new()),
            proper: false,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Cone {
            dim,
            rep: ConeRep::Rays(Vec::new()),
            proper: dim > 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rep(&self) -> &ConeRep {
        &self.rep
    }

    /// `true` when the cone is known to differ from the whole space.
    pub fn is_proper(&self) -> bool {
        self.proper
    }

    /// Inequality rows describing the cone, when available without conversion.
    pub fn halfspace_rows(&self) -> Option<Vec<DVector<f64>>> {
        match &self.rep {
            ConeRep::Orthant => Some(identity_rows(self.dim)),
            ConeRep::Halfspaces(rows) => Some(rows.clone()),
            ConeRep::Rays(_) => None,
        }
    }

    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim("cone membership", self.dim, z.len())?;
        Ok(match &self.rep {
            ConeRep::Orthant => z.iter().all(|&v| v >= -tol),
            ConeRep::Halfspaces(rows) => rows.iter().all(|m| m.dot(z) >= -tol),
            ConeRep::Rays(_) => self.distance(z)? <= tol,
        })
    }

    /// Strict membership: every defining row evaluates to at least `margin`.
    pub fn interior_contains(&self, z: &DVector<f64>, margin: f64) -> Result<bool> {
        check_dim("cone interior membership", self.dim, z.len())?;
        match &self.rep {
            ConeRep::Orthant => Ok(z.iter().all(|&v| v >= margin)),
            ConeRep::Halfspaces(rows) => Ok(rows.iter().all(|m| m.dot(z) >= margin)),
            ConeRep::Rays(_) => Err(Error::UnsupportedRepresentation("interior membership")),
        }
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("cone projection", self.dim, z.len())?;
        match &self.rep {
            ConeRep::Orthant => Ok(z.map(|v| v.max(0.0))),
            ConeRep::Halfspaces(rows) => {
                if rows.is_empty() {
                    return Ok(z.clone());
                }
                // Moreau: z = P_K(z) + P_{K polar}(z), polar = cone{-m_j}
                let polar: Vec<DVector<f64>> = rows.iter().map(|m| -m).collect();
                let (_, q) = nnls_cone(&polar, z)?;
                let mut p = z - q;
                // clean up rows violated only by round-off
                for m in rows {
                    let s = m.dot(&p);
                    if s < 0.0 && s > -1e-12 {
                        p -= m * s;
                    }
                }
                Ok(p)
            }
            ConeRep::Rays(gens) => Ok(nnls_cone(gens, z)?.1),
        }
    }

    pub fn distance(&self, z: &DVector<f64>) -> Result<f64> {
        check_dim("cone distance", self.dim, z.len())?;
        match &self.rep {
            ConeRep::Orthant => Ok(z.iter().map(|&v| v.min(0.0).powi(2)).sum::<f64>().sqrt()),
            _ => Ok((z - self.project(z)?).norm()),
        }
    }

    /// `{y : y . z <= 0 for all z in the cone}`.
    pub fn negative_dual(&self) -> Cone {
        match &self.rep {
            ConeRep::Orthant => Cone {
                dim: self.dim,
                rep: ConeRep::Rays(identity_rows(self.dim).into_iter().map(|e| -e).collect()),
                proper: self.dim > 0,
            },
            ConeRep::Halfspaces(rows) => {
                let gens: Vec<DVector<f64>> = rows.iter().map(|m| -m).collect();
                let proper = !positively_spans(&gens, self.dim);
                Cone {
                    dim: self.dim,
                    rep: ConeRep::Rays(gens),
                    proper,
                }
            }
            ConeRep::Rays(gens) => Cone {
                dim: self.dim,
                proper: !gens.is_empty(),
                rep: ConeRep::Halfspaces(gens.iter().map(|r| -r).collect()),
            },
        }
    }

    /// `{y : y . z >= 0 for all z in the cone}`.
    pub fn positive_dual(&self) -> Cone {
        let neg = self.negative_dual();
        let rep = match neg.rep {
            ConeRep::Orthant => unreachable!("negative dual is never an orthant"),
            ConeRep::Halfspaces(rows) => ConeRep::Halfspaces(rows.into_iter().map(|m| -m).collect()),
            ConeRep::Rays(gens) => ConeRep::Rays(gens.into_iter().map(|r| -r).collect()),
        };
        Cone { rep, ..neg }
    }

    /// `{v : lambda v in cone}` in halfspace form. `lambda` maps the result's
    /// space into the cone's space.
    pub fn preimage(&self, lambda: &DMatrix<f64>) -> Result<Cone> {
        check_dim("preimage rows", self.dim, lambda.nrows())?;
        let rows = self
            .halfspace_rows()
            .ok_or(Error::UnsupportedRepresentation("preimage"))?;
        let n = lambda.ncols();
        let mut out = Vec::with_capacity(rows.len());
        for m in rows {
            let r = lambda.tr_mul(&m);
            match unit(r) {
                Some(u) => out.push(u),
                None => log::warn!("preimage: dropped a row annihilated by the linear map"),
            }
        }
        Ok(Cone {
            dim: n,
            proper: !out.is_empty(),
            rep: ConeRep::Halfspaces(out),
        })
    }

    /// Intersection of cones given by halfspaces (or orthants).
    pub fn intersect(dim: usize, cones: &[&Cone]) -> Result<Cone> {
        let mut rows = Vec::new();
        for c in cones {
            check_dim("cone intersection", dim, c.dim)?;
            rows.extend(
                c.halfspace_rows()
                    .ok_or(Error::UnsupportedRepresentation("intersection"))?,
            );
        }
        Cone::halfspaces(dim, rows)
    }

    /// Generators of the cone, enumerating them by double description for the
    /// halfspace form. `None` when more than `cap` generators would be needed.
    pub fn generators(&self, cap: usize) -> Option<Vec<DVector<f64>>> {
        match &self.rep {
            ConeRep::Orthant => Some(identity_rows(self.dim)),
            ConeRep::Rays(g) => Some(g.clone()),
            ConeRep::Halfspaces(rows) => double_description(rows, self.dim, cap),
        }
    }

    /// Same cone in halfspace form (facets of a ray cone via its dual).
    pub fn to_halfspaces(&self, cap: usize) -> Option<Cone> {
        match &self.rep {
            ConeRep::Orthant | ConeRep::Halfspaces(_) => {
                let rows = self.halfspace_rows()?;
                Some(Cone {
                    dim: self.dim,
                    proper: !rows.is_empty(),
                    rep: ConeRep::Halfspaces(rows),
                })
            }
            ConeRep::Rays(gens) => {
                let facets = double_description(gens, self.dim, cap)?;
                Some(Cone {
                    dim: self.dim,
                    proper: self.proper,
                    rep: ConeRep::Halfspaces(facets),
                })
            }
        }
    }

    /// Largest `t <= 1` with `m_j . z >= t`, `|z_i| <= 1`; a positive value
    /// certifies a nonempty interior. Returns `(t, z)`.
    pub fn interior_witness(&self) -> Result<(f64, DVector<f64>)> {
        let rows = self
            .halfspace_rows()
            .ok_or(Error::UnsupportedRepresentation("interior witness"))?;
        slack_lp(&rows, self.dim)
    }

    /// Whether the cone contains a nonzero vector.
    pub fn is_nontrivial(&self) -> Result<bool> {
        match &self.rep {
            ConeRep::Orthant => Ok(self.dim > 0),
            ConeRep::Rays(g) => Ok(!g.is_empty()),
            ConeRep::Halfspaces(rows) => {
                let n = self.dim;
                for i in 0..n {
                    for s in [1.0, -1.0] {
                        let mut lp = LinearProgram::new(n);
                        for j in 0..n {
                            lp.set_free(j);
                        }
                        for m in rows {
                            lp.add_ge(m.iter().copied().collect(), 0.0);
                        }
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        lp.add_eq(e, s);
                        if lp::feasibility(&lp)?.is_optimal() {
                            return Ok(true);
                        }
                    }
                }
                Ok(false)
            }
        }
    }
}

/// `max t s.t. r . z >= t for every row, |z_i| <= 1, t <= 1`.
pub(crate) fn slack_lp(rows: &[DVector<f64>], dim: usize) -> Result<(f64, DVector<f64>)> {
    let nv = dim + 1;
    let mut c = vec![0.0; nv];
    c[dim] = -1.0;
    let mut lp = LinearProgram::new(nv).minimize(c);
    for j in 0..nv {
        lp.set_free(j);
    }
    for r in rows {
        let mut row: Vec<f64> = r.iter().map(|v| -v).collect();
        row.push(1.0);
        lp.add_le(row, 0.0);
    }
    for j in 0..dim {
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        lp.add_le(row.clone(), 1.0);
        row[j] = -1.0;
        lp.add_le(row, 1.0);
    }
    let mut row = vec![0.0; nv];
    row[dim] = 1.0;
    lp.add_le(row, 1.0);
    let res = lp::solve_lp(&lp)?;
    let x = res
        .x
        .ok_or_else(|| Error::Numerical("slack LP has no solution".into()))?;
    Ok((x[dim], DVector::from_iterator(dim, x[..dim].iter().copied())))
}

/// Whether the generators' conic hull is the whole space. It is iff it
/// contains the positive basis `e_1, ..., e_n, -(e_1 + ... + e_n)`.
fn positively_spans(gens: &[DVector<f64>], dim: usize) -> bool {
    if dim == 0 {
        return true;
    }
    if gens.len() <= dim {
        return false;
    }
    let mut targets = identity_rows(dim);
    targets.push(DVector::from_element(dim, -1.0));
    targets.iter().all(|t| match nnls_cone(gens, t) {
        Ok((_, p)) => (t - p).norm() <= 1e-9 * t.norm(),
        Err(_) => false,
    })
}

fn lstsq(cols: &[&DVector<f64>], b: &DVector<f64>) -> DVector<f64> {
    let a = DMatrix::from_fn(b.len(), cols.len(), |i, j| cols[j][i]);
    let svd = a.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(1.0);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(cols.len()))
}

/// Lawson-Hanson active set for `min ||R l - z||, l >= 0` where the columns
/// of `R` are `gens`. Returns `(l, R l)`.
pub fn nnls_cone(gens: &[DVector<f64>], z: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let k = gens.len();
    let dim = z.len();
    if k == 0 {
        return Ok((DVector::zeros(0), DVector::zeros(dim)));
    }
    let combine = |l: &DVector<f64>| {
        let mut p = DVector::zeros(dim);
        for (g, &c) in gens.iter().zip(l.iter()) {
            if c != 0.0 {
                p += g * c;
            }
        }
        p
    };
    let tol = 1e-13 * z.norm().max(1.0);
    let mut lam = DVector::zeros(k);
    let mut passive = vec![false; k];
    let mut blocked = vec![false; k];
    let max_outer = 30 * k + 100;
    for _ in 0..max_outer {
        let resid = z - combine(&lam);
        let w: Vec<f64> = gens.iter().map(|g| g.dot(&resid)).collect();
        let entering = (0..k)
            .filter(|&j| !passive[j] && !blocked[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(t) = entering else {
            let p = combine(&lam);
            return Ok((lam, p));
        };
        passive[t] = true;
        let mut first = true;
        loop {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let cols: Vec<&DVector<f64>> = idx.iter().map(|&j| &gens[j]).collect();
            let sol = lstsq(&cols, z);
            let mut s = DVector::zeros(k);
            for (c, &j) in idx.iter().enumerate() {
                s[j] = sol[c];
            }
            if first && s[t] <= 0.0 {
                // degenerate entering column; skip it until the iterate moves
                passive[t] = false;
                blocked[t] = true;
                break;
            }
            first = false;
            if idx.iter().all(|&j| s[j] > 0.0) {
                lam = s;
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            let mut alpha = f64::INFINITY;
            for &j in &idx {
                if s[j] <= 0.0 {
                    let d = lam[j] - s[j];
                    if d > 0.0 {
                        alpha = alpha.min(lam[j] / d);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            lam = &lam + (&s - &lam) * alpha;
            for &j in &idx {
                if lam[j] <= 1e-15 {
                    lam[j] = 0.0;
                    passive[j] = false;
                }
            }
            blocked.iter_mut().for_each(|b| *b = false);
        }
    }
    let p = combine(&lam);
    Err(Error::NonConvergence {
        what: "nonnegative least squares",
        residual: (z - &p).norm(),
        last_iterate: p.iter().copied().collect(),
    })
}

/// Dykstra's alternating projection onto `{x : a_j . x <= b_j}`.
///
/// Stops when a full sweep moves the iterate by less than `tol`.
pub fn dykstra_halfspaces(
    normals: &[DVector<f64>],
    offsets: &[f64],
    z: &DVector<f64>,
    tol: f64,
    max_sweeps: usize,
) -> Result<DVector<f64>> {
    let mut x = z.clone();
    if normals.is_empty() {
        return Ok(x);
    }
    let mut incr: Vec<DVector<f64>> = normals.iter().map(|_| DVector::zeros(z.len())).collect();
    for _ in 0..max_sweeps {
        let start = x.clone();
        for (j, (a, &b)) in normals.iter().zip(offsets).enumerate() {
            let y = &x + &incr[j];
            let aa = a.norm_squared();
            let viol = a.dot(&y) - b;
            let p = if viol > 0.0 { &y - a * (viol / aa) } else { y.clone() };
            incr[j] = &y - &p;
            x = p;
        }
        if (&x - &start).norm() <= tol {
            return Ok(x);
        }
    }
    let residual = normals
        .iter()
        .zip(offsets)
        .map(|(a, &b)| (a.dot(&x) - b).max(0.0))
        .fold(0.0, f64::max);
    Err(Error::NonConvergence {
        what: "alternating projection",
        last_iterate: x.iter().copied().collect(),
        residual,
    })
}

/// Projection onto a halfspace-form cone by Dykstra's scheme with the default
/// tolerance and sweep budget.
pub fn dykstra_project(cone: &Cone, z: &DVector<f64>) -> Result<DVector<f64>> {
    let rows = cone
        .halfspace_rows()
        .ok_or(Error::UnsupportedRepresentation("alternating projection"))?;
    let normals: Vec<DVector<f64>> = rows.iter().map(|m| -m).collect();
    let offsets = vec![0.0; normals.len()];
    dykstra_halfspaces(&normals, &offsets, z, DYKSTRA_TOL, DYKSTRA_SWEEPS)
}

fn dedup_push(set: &mut Vec<DVector<f64>>, v: DVector<f64>) {
    if !set.iter().any(|g| (g - &v).norm() < 1e-9) {
        set.push(v);
    }
}

fn prune_redundant(gens: &mut Vec<DVector<f64>>) {
    let mut i = 0;
    while i < gens.len() {
        let others: Vec<DVector<f64>> = gens
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, g)| g.clone())
            .collect();
        let redundant = match nnls_cone(&others, &gens[i]) {
            Ok((_, p)) => (&gens[i] - p).norm() <= 1e-9,
            Err(_) => false,
        };
        if redundant {
            gens.remove(i);
        } else {
            i += 1;
        }
    }
}

/// Generators of `{x : a . x >= 0 for every row}` by the double description
/// method, starting from the positive basis `{+-e_i}` of the whole space.
fn double_description(rows: &[DVector<f64>], dim: usize, cap: usize) -> Option<Vec<DVector<f64>>> {
    let mut gens: Vec<DVector<f64>> = Vec::new();
    for e in identity_rows(dim) {
        gens.push(e.clone());
        gens.push(-e);
    }
    let tol = 1e-10;
    for a in rows {
        let vals: Vec<f64> = gens.iter().map(|g| a.dot(g)).collect();
        let mut next = Vec::new();
        for (g, &v) in gens.iter().zip(&vals) {
            if v >= -tol {
                dedup_push(&mut next, g.clone());
            }
        }
        for (p, &vp) in gens.iter().zip(&vals) {
            if vp <= tol {
                continue;
            }
            for (n, &vn) in gens.iter().zip(&vals) {
                if vn >= -tol {
                    continue;
                }
                if let Some(u) = unit(n * vp - p * vn) {
                    dedup_push(&mut next, u);
                }
            }
        }
        prune_redundant(&mut next);
        if next.len() > cap {
            return None;
        }
        gens = next;
    }
    Some(gens)
}
