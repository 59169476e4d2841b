//! JSON problem documents: parsing with line/column diagnostics, validation
//! into a [`Problem`] with field-path errors, and serialization back.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certify::{Problem, Tolerances};
use crate::cone::{Cone, ConeRep};
use crate::error::{Error, Result};
use crate::scenario::{Scenario, ScenarioMap};
use crate::variational::{Fan, Objective, PolyhedralSet};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveDoc {
    Affine {
        jacobian: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    Quadratic {
        q: Vec<Vec<Vec<f64>>>,
        linear: Vec<Vec<f64>>,
        constant: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeDoc {
    Orthant { dim: usize },
    Halfspaces { dim: usize, rows: Vec<Vec<f64>> },
    Rays { dim: usize, gens: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDoc {
    /// `null` bounds are infinite.
    Box { lo: Vec<Option<f64>>, hi: Vec<Option<f64>> },
    /// `a x <= rhs` row by row.
    Halfspaces { a: Vec<Vec<f64>>, rhs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanDoc {
    pub bundle: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interior_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance: Option<f64>,
}

/// On-disk form of a problem. Every block is optional at parse time so that
/// a missing block is reported by its field path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub version: Option<u32>,
    pub dims: Option<Dims>,
    pub objective: Option<ObjectiveDoc>,
    pub k: Option<ConeDoc>,
    pub c: Option<ConeDoc>,
    pub s: Option<SetDoc>,
    pub scenarios: Option<Vec<ScenarioDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fan: Option<FanDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesDoc>,
}

fn required<T>(v: Option<T>, path: &str) -> Result<T> {
    v.ok_or_else(|| Error::validation(path, "required"))
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, path: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(Error::validation(
            path,
            format!("expected {nrows} rows, got {}", rows.len()),
        ));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::validation(
                format!("{path}[{i}]"),
                format!("expected {ncols} entries, got {}", r.len()),
            ));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("{path}[{i}]"), "entries must be finite"));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn vector(v: &[f64], len: usize, path: &str) -> Result<DVector<f64>> {
    if v.len() != len {
        return Err(Error::validation(
            path,
            format!("expected {len} entries, got {}", v.len()),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation(path, "entries must be finite"));
    }
    Ok(DVector::from_column_slice(v))
}

fn vectors(rows: &[Vec<f64>], len: usize, path: &str) -> Result<Vec<DVector<f64>>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| vector(r, len, &format!("{path}[{i}]")))
        .collect()
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn cone_from_doc(doc: &ConeDoc, dim: usize, path: &str) -> Result<Cone> {
    let d = match doc {
        ConeDoc::Orthant { dim } | ConeDoc::Halfspaces { dim, .. } | ConeDoc::Rays { dim, .. } => *dim,
    };
    if d != dim {
        return Err(Error::validation(
            format!("{path}.dim"),
            format!("expected {dim}, got {d}"),
        ));
    }
    let wrap = |e: Error| Error::validation(path, e.to_string());
    match doc {
        ConeDoc::Orthant { .. } => Ok(Cone::orthant(dim)),
        ConeDoc::Halfspaces { rows, .. } => {
            Cone::halfspaces(dim, vectors(rows, dim, &format!("{path}.rows"))?).map_err(wrap)
        }
        ConeDoc::Rays { gens, .. } => Cone::rays(dim, vectors(gens, dim, &format!("{path}.gens"))?).map_err(wrap),
    }
}

fn cone_to_doc(c: &Cone) -> ConeDoc {
    let list = |vs: &[DVector<f64>]| vs.iter().map(|v| v.iter().copied().collect()).collect();
    match c.rep() {
        ConeRep::Orthant => ConeDoc::Orthant { dim: c.dim() },
        ConeRep::Halfspaces(rows) => ConeDoc::Halfspaces {
            dim: c.dim(),
            rows: list(rows),
        },
        ConeRep::Rays(gens) => ConeDoc::Rays {
            dim: c.dim(),
            gens: list(gens),
        },
    }
}

impl ProblemDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem documents always serialize")
    }

    /// Validates every block and builds the problem.
    pub fn into_problem(self) -> Result<Problem> {
        let version = required(self.version, "version")?;
        if version != FORMAT_VERSION {
            return Err(Error::validation("version", format!("unsupported version {version}")));
        }
        let Dims { n, m, p } = required(self.dims, "dims")?;
        if n == 0 || m == 0 || p == 0 {
            return Err(Error::validation("dims", "dimensions must be positive"));
        }
        let objective = match required(self.objective, "objective")? {
            ObjectiveDoc::Affine { jacobian, offset } => Objective::affine(
                matrix(&jacobian, m, n, "objective.jacobian")?,
                vector(&offset, m, "objective.offset")?,
            )?,
            ObjectiveDoc::Quadratic { q, linear, constant } => {
                if q.len() != m {
                    return Err(Error::validation(
                        "objective.q",
                        format!("expected {m} matrices, got {}", q.len()),
                    ));
                }
                let qs = q
                    .iter()
                    .enumerate()
                    .map(|(k, qk)| matrix(qk, n, n, &format!("objective.q[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                if linear.len() != m {
                    return Err(Error::validation(
                        "objective.linear",
                        format!("expected {m} rows, got {}", linear.len()),
                    ));
                }
                Objective::quadratic(
                    qs,
                    vectors(&linear, n, "objective.linear")?,
                    vector(&constant, m, "objective.constant")?,
                )
                .map_err(|e| Error::validation("objective.q", e.to_string()))?
            }
        };
        let k = cone_from_doc(&required(self.k, "k")?, m, "k")?;
        let c = cone_from_doc(&required(self.c, "c")?, p, "c")?;
        let s = match required(self.s, "s")? {
            SetDoc::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return Err(Error::validation("s", format!("box bounds need {n} entries")));
                }
                let lo = DVector::from_iterator(n, lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)));
                let hi = DVector::from_iterator(n, hi.iter().map(|v| v.unwrap_or(f64::INFINITY)));
                PolyhedralSet::boxed(lo, hi).map_err(|e| Error::validation("s", e.to_string()))?
            }
            SetDoc::Halfspaces { a, rhs } => {
                let rows = vectors(&a, n, "s.a")?;
                if rhs.len() != rows.len() {
                    return Err(Error::validation(
                        "s.rhs",
                        format!("expected {} entries, got {}", rows.len(), rhs.len()),
                    ));
                }
                PolyhedralSet::halfspaces(n, rows, rhs).map_err(|e| Error::validation("s", e.to_string()))?
            }
        };
        let docs = required(self.scenarios, "scenarios")?;
        if docs.is_empty() {
            return Err(Error::validation("scenarios", "at least one scenario is required"));
        }
        let mut scenarios = Vec::with_capacity(docs.len());
        for (i, sd) in docs.iter().enumerate() {
            scenarios.push(Scenario::new(
                matrix(&sd.a, p, n, &format!("scenarios[{i}].A"))?,
                vector(&sd.b, p, &format!("scenarios[{i}].b"))?,
            )?);
        }
        let g = ScenarioMap::new(scenarios)?;
        let fan = match self.fan {
            None => None,
            Some(f) => {
                if f.bundle.is_empty() {
                    return Err(Error::validation("fan.bundle", "at least one matrix is required"));
                }
                let ms = f
                    .bundle
                    .iter()
                    .enumerate()
                    .map(|(i, l)| matrix(l, p, n, &format!("fan.bundle[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                Some(Fan::new(ms)?)
            }
        };
        let e = match self.e {
            None => None,
            Some(e) => Some(vector(&e, m, "e")?),
        };
        let mut tol = Tolerances::default();
        if let Some(t) = self.tolerances {
            for (val, slot, name) in [
                (t.feasibility, &mut tol.feasibility, "feasibility"),
                (t.active, &mut tol.active, "active"),
                (t.interior_margin, &mut tol.interior_margin, "interior_margin"),
                (t.residual, &mut tol.residual, "residual"),
                (t.dominance, &mut tol.dominance, "dominance"),
            ] {
                if let Some(v) = val {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::validation(
                            format!("tolerances.{name}"),
                            "must be a nonnegative number",
                        ));
                    }
                    *slot = v;
                }
            }
        }
        Problem::new(objective, k, c, s, g, e, fan, tol)
    }

    /// Document describing `problem` exactly; `e` and all tolerances are
    /// written out so a reload reproduces the same values.
    pub fn from_problem(problem: &Problem) -> Self {
        let objective = match &problem.objective {
            Objective::Affine { jacobian, offset } => ObjectiveDoc::Affine {
                jacobian: rows_of(jacobian),
                offset: offset.iter().copied().collect(),
            },
            Objective::Quadratic { q, linear, constant } => ObjectiveDoc::Quadratic {
                q: q.iter().map(rows_of).collect(),
                linear: linear.iter().map(|l| l.iter().copied().collect()).collect(),
                constant: constant.iter().copied().collect(),
            },
        };
        let finite = |v: f64| v.is_finite().then_some(v);
        let s = match &problem.s {
            PolyhedralSet::Box { lo, hi } => SetDoc::Box {
                lo: lo.iter().copied().map(finite).collect(),
                hi: hi.iter().copied().map(finite).collect(),
            },
            PolyhedralSet::Halfspaces { normals, offsets, .. } => SetDoc::Halfspaces {
                a: normals.iter().map(|a| a.iter().copied().collect()).collect(),
                rhs: offsets.clone(),
            },
        };
        let t = problem.tolerances;
        ProblemDocument {
            version: Some(FORMAT_VERSION),
            dims: Some(Dims {
                n: problem.n(),
                m: problem.m(),
                p: problem.p(),
            }),
            objective: Some(objective),
            k: Some(cone_to_doc(&problem.k)),
            c: Some(cone_to_doc(&problem.c)),
            s: Some(s),
            scenarios: Some(
                problem
                    .g
                    .scenarios()
                    .iter()
                    .map(|sc| ScenarioDoc {
                        a: rows_of(&sc.a),
                        b: sc.b.iter().copied().collect(),
                    })
                    .collect(),
            ),
            fan: problem.fan.as_ref().map(|f| FanDoc {
                bundle: f.bundle().iter().map(rows_of).collect(),
            }),
            e: Some(problem.e.iter().copied().collect()),
            tolerances: Some(TolerancesDoc {
                feasibility: Some(t.feasibility),
                active: Some(t.active),
                interior_margin: Some(t.interior_margin),
                residual: Some(t.residual),
                dominance: Some(t.dominance),
            }),
        }
    }
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    ProblemDocument::parse(text)?.into_problem()
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<Problem> {
    parse_problem(&std::fs::read_to_string(path)?)
}

pub fn problem_to_json(problem: &Problem) -> String {
    ProblemDocument::from_problem(problem).to_json()
}
