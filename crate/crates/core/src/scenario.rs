//! Finite scenario families `x -> {A_w x + b_w : w in Omega}` and the
//! excess-based merit function that measures robust infeasibility.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cone::Cone;
use crate::error::{check_dim, Error, Result};

/// One realization `x -> A x + b` of the uncertain constraint map.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Scenario {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim("scenario offset", a.nrows(), b.len())?;
        Ok(Scenario { a, b })
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }
}

/// Set-valued constraint map realized by a nonempty list of affine scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMap {
    scenarios: Vec<Scenario>,
    in_dim: usize,
    out_dim: usize,
}

impl ScenarioMap {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self> {
        let first = scenarios
            .first()
            .ok_or_else(|| Error::Input("scenario map needs at least one scenario".into()))?;
        let (out_dim, in_dim) = first.a.shape();
        for s in &scenarios {
            check_dim("scenario input dimension", in_dim, s.a.ncols())?;
            check_dim("scenario output dimension", out_dim, s.a.nrows())?;
            check_dim("scenario offset", out_dim, s.b.len())?;
        }
        Ok(ScenarioMap {
            scenarios,
            in_dim,
            out_dim,
        })
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// The image `G(x)`.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<PointCloud> {
        check_dim("scenario evaluation", self.in_dim, x.len())?;
        Ok(PointCloud {
            points: self.scenarios.iter().map(|s| s.apply(x)).collect(),
        })
    }

    /// Largest scenario operator norm; a Lipschitz constant of the merit
    /// function.
    pub fn lipschitz_constant(&self) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.a.singular_values().max())
            .fold(0.0, f64::max)
    }
}

/// A finite set of points, e.g. an image `G(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<DVector<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .ok_or_else(|| Error::Input("point cloud is empty".into()))?
            .len();
        for p in &points {
            check_dim("point cloud", dim, p.len())?;
        }
        Ok(PointCloud { points })
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance from `z` to the nearest point of the cloud.
    pub fn point_distance(&self, z: &DVector<f64>) -> f64 {
        self.points.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// A set `W` whose distance function is available in closed form.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Cone(&'a Cone),
    /// Minkowski sum `cloud + cone`, a finite union of translated cones.
    Shifted(&'a PointCloud, &'a Cone),
    Points(&'a PointCloud),
}

impl Target<'_> {
    pub fn distance(&self, z: &DVector<f64>) -> Result<f64> {
        match *self {
            Target::Cone(c) => c.distance(z),
            Target::Shifted(cloud, c) => {
                let mut best = f64::INFINITY;
                for p in &cloud.points {
                    best = best.min(c.distance(&(z - p))?);
                    if best == 0.0 {
                        break;
                    }
                }
                Ok(best)
            }
            Target::Points(cloud) => Ok(cloud.point_distance(z)),
        }
    }
}

/// `exc(A, W) = max_{a in A} dist(a, W)`.
pub fn excess(a: &PointCloud, w: Target<'_>) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Input("excess of an empty cloud".into()));
    }
    a.points.iter().try_fold(0.0f64, |acc, p| Ok(acc.max(w.distance(p)?)))
}

/// Merit function `phi(x) = exc(G(x), C)`; zero exactly on the robustly
/// feasible points.
pub fn merit(g: &ScenarioMap, c: &Cone, x: &DVector<f64>) -> Result<f64> {
    check_dim("merit cone", g.out_dim(), c.dim())?;
    excess(&g.evaluate(x)?, Target::Cone(c))
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("Hausdorff distance of an empty cloud".into()));
    }
    Ok(excess(a, Target::Points(b))?.max(excess(b, Target::Points(a))?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CBoundedness {
    pub holds: bool,
    pub reason: String,
}

/// Whether `G(x) \ C` stays bounded near `x_bar`. Always true for a finite
/// scenario family, whose images are finite sets.
pub fn c_bounded_check(
    _g: &ScenarioMap,
    _c: &Cone,
    _x_bar: &DVector<f64>,
    _delta: f64,
    _samples: usize,
) -> CBoundedness {
    CBoundedness {
        holds: true,
        reason: "finite scenario family".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn e1() -> ScenarioMap {
        let id = DMatrix::identity(2, 2);
        ScenarioMap::new(vec![
            Scenario::new(id.clone(), v(&[0.0, 0.0])).unwrap(),
            Scenario::new(id, v(&[-0.5, 0.0])).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn evaluates_each_scenario() {
        let g = e1();
        assert_eq!(
            g.evaluate(&v(&[1.0, 1.0])).unwrap().points,
            vec![v(&[1.0, 1.0]), v(&[0.5, 1.0])]
        );
        assert_eq!(
            g.evaluate(&v(&[0.0, 0.0])).unwrap().points,
            vec![v(&[0.0, 0.0]), v(&[-0.5, 0.0])]
        );
        assert_eq!(
            g.evaluate(&v(&[0.0, -1.0])).unwrap().points,
            vec![v(&[0.0, -1.0]), v(&[-0.5, -1.0])]
        );
        assert!(g.evaluate(&v(&[1.0])).is_err());
    }

    #[test]
    fn excess_values() {
        let k = Cone::orthant(2);
        let inside = PointCloud::new(vec![v(&[1.0, 2.0])]).unwrap();
        assert_eq!(excess(&inside, Target::Cone(&k)).unwrap(), 0.0);
        let a = PointCloud::new(vec![v(&[0.0, -1.0]), v(&[-0.5, -1.0])]).unwrap();
        assert!((excess(&a, Target::Cone(&k)).unwrap() - 1.25f64.sqrt()).abs() < 1e-15);
        let z = PointCloud::new(vec![v(&[0.3, -0.7])]).unwrap();
        assert_eq!(excess(&z, Target::Points(&z)).unwrap(), 0.0);
        assert!(PointCloud::new(vec![]).is_err());
    }

    #[test]
    fn shifted_target_is_union_of_translates() {
        let k = Cone::orthant(2);
        let base = PointCloud::new(vec![v(&[0.0, 0.0]), v(&[-0.5, 0.0])]).unwrap();
        let t = Target::Shifted(&base, &k);
        assert_eq!(t.distance(&v(&[-0.5, 3.0])).unwrap(), 0.0);
        assert!((t.distance(&v(&[-1.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn merit_on_e1() {
        let g = e1();
        let k = Cone::orthant(2);
        assert_eq!(merit(&g, &k, &v(&[1.0, 1.0])).unwrap(), 0.0);
        assert!((merit(&g, &k, &v(&[0.25, 1.0])).unwrap() - 0.25).abs() < 1e-15);
        assert!((merit(&g, &k, &v(&[0.0, -1.0])).unwrap() - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_values() {
        let a = PointCloud::new(vec![v(&[0.0, 0.0])]).unwrap();
        let b = PointCloud::new(vec![v(&[3.0, 4.0])]).unwrap();
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn finite_maps_are_c_bounded() {
        let r = c_bounded_check(&e1(), &Cone::orthant(2), &v(&[0.0, 0.0]), 1.0, 10);
        assert!(r.holds);
        assert_eq!(r.reason, "finite scenario family");
    }

    #[test]
    fn lipschitz_constant_is_largest_operator_norm() {
        let g = ScenarioMap::new(vec![
            Scenario::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]), v(&[0.0, 0.0])).unwrap(),
            Scenario::new(DMatrix::identity(2, 2), v(&[1.0, 0.0])).unwrap(),
        ])
        .unwrap();
        assert!((g.lipschitz_constant() - 3.0).abs() < 1e-12);
    }
}
