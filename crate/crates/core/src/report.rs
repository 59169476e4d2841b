//! End-to-end analysis of one reference point: every check runs in a fixed
//! order, failures are captured per stage, and the result is a
//! deterministic JSON document with a hypothesis audit and a verdict.

use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::certify::{
    check_penalization_condition, check_tangential_condition, convex_scalarized_certificate, estimate_k_lipschitz,
    multiplier_certificate, qualification_check, scalarized_fan_certificate, Certificate, CertificateStatus, Problem,
};
use crate::error::{check_dim, Result};
use crate::io::ProblemDocument;
use crate::pareto::{refute_efficiency, GridSpec};
use crate::regularity::{cq_sigma, estimate_increase_bound, verify_error_bound, IncreaseGrid};
use crate::sampling;
use crate::variational::{check_outer_prederivative, check_upper_subgradient, upper_subgradient_candidate};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportOptions {
    pub seed: u64,
    /// Radius of the neighborhood used by the regularity and Lipschitz stages.
    pub delta: f64,
    pub increase_grid: IncreaseGrid,
    /// Direction samples for the directional conditions.
    pub directions: usize,
    /// Nodes per axis of the error-bound grid; `0` picks one from the dimension.
    pub error_bound_res: usize,
    /// Half-width of the oracle box in grid cells.
    pub oracle_cells: usize,
    pub oracle_spacing: f64,
    pub skip_cq: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            seed: sampling::DEFAULT_SEED,
            delta: 0.5,
            increase_grid: IncreaseGrid::default(),
            directions: 64,
            error_bound_res: 0,
            oracle_cells: 10,
            oracle_spacing: 0.05,
            skip_cq: false,
        }
    }
}

impl ReportOptions {
    pub fn with_seed(seed: u64) -> Self {
        let mut o = ReportOptions {
            seed,
            ..Default::default()
        };
        o.increase_grid.seed = seed;
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOutcome {
    Ok,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: &'static str,
    pub outcome: StageOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisState {
    Verified,
    VerifiedOnSamples,
    AssumedByUser,
    NotCertified,
    Refuted,
    NotApplicable,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: &'static str,
    pub state: HypothesisState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Refuted,
    Inconclusive,
    Error,
}

impl Verdict {
    /// Process exit code for the CLI.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Consistent => 0,
            Verdict::Error => 1,
            Verdict::Refuted => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub verdict: Verdict,
    pub headline: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: u32,
    pub seed: u64,
    pub x_bar: Vec<f64>,
    pub options: ReportOptions,
    pub instance: ProblemDocument,
    pub stages: Vec<Stage>,
    pub hypotheses: Vec<Hypothesis>,
    pub summary: Summary,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("stage results always serialize")
}

fn cert_value(c: &Certificate) -> Value {
    to_value(c)
}

struct Recorder {
    stages: Vec<Stage>,
}

impl Recorder {
    fn ok(&mut self, name: &'static str, result: Value) {
        self.stages.push(Stage {
            name,
            outcome: StageOutcome::Ok,
            reason: None,
            result: Some(result),
        });
    }

    fn skip(&mut self, name: &'static str, reason: &str) {
        self.stages.push(Stage {
            name,
            outcome: StageOutcome::Skipped,
            reason: Some(reason.to_string()),
            result: None,
        });
    }

    fn error(&mut self, name: &'static str, err: &crate::Error) {
        self.stages.push(Stage {
            name,
            outcome: StageOutcome::Error,
            reason: Some(err.to_string()),
            result: None,
        });
    }

    /// Records `r` and hands back its value when it succeeded.
    fn run<T>(&mut self, name: &'static str, r: Result<T>, show: impl Fn(&T) -> Value) -> Option<T> {
        match r {
            Ok(v) => {
                self.ok(name, show(&v));
                Some(v)
            }
            Err(e) => {
                self.error(name, &e);
                None
            }
        }
    }
}

const STAGES: [&str; 13] = [
    "merit",
    "increase",
    "sigma",
    "error_bound",
    "k_lipschitz",
    "penalization",
    "convex_scalarized",
    "tangential",
    "scalarized_fan",
    "multiplier",
    "qualification",
    "oracle",
    "replay",
];

fn hyp(name: &'static str, state: HypothesisState, detail: Option<String>) -> Hypothesis {
    Hypothesis { name, state, detail }
}

fn error_bound_res(n: usize, requested: usize) -> usize {
    if requested > 0 {
        return requested;
    }
    let per_axis = (20_000f64).powf(1.0 / n as f64).floor() as usize;
    per_axis.clamp(3, 101)
}

/// Runs every stage at `x_bar`. Only a dimension mismatch of `x_bar` is an
/// error; stage failures are recorded in the report.
pub fn run_report(problem: &Problem, x_bar: &DVector<f64>, options: &ReportOptions) -> Result<Report> {
    check_dim("reference point", problem.n(), x_bar.len())?;
    let mut rec = Recorder { stages: Vec::new() };
    let mut hyps = vec![
        hyp("ordering cone has nonempty interior", HypothesisState::Verified, None),
        hyp("constraint cone is proper", HypothesisState::Verified, None),
        hyp("S is a convex polyhedron", HypothesisState::Verified, None),
        hyp(
            "scenario map is affine, hence C-concave",
            HypothesisState::Verified,
            None,
        ),
        hyp(
            "G is C-bounded near the reference point",
            HypothesisState::Verified,
            Some("finite scenario family".into()),
        ),
    ];
    let seed = options.seed;
    let delta = options.delta;

    // merit and feasibility
    let merit = (|| -> Result<(f64, bool)> {
        Ok((
            problem.merit(x_bar)?,
            problem.s.contains(x_bar, problem.tolerances.active)?,
        ))
    })();
    let Some((phi, in_s)) = rec.run("merit", merit, |&(phi, in_s)| {
        json!({
            "phi": phi,
            "in_s": in_s,
            "feasible": in_s && phi <= problem.tolerances.feasibility,
        })
    }) else {
        for name in &STAGES[1..] {
            rec.skip(name, "merit stage failed");
        }
        return Ok(finish(
            problem,
            x_bar,
            options,
            rec,
            hyps,
            Summary {
                verdict: Verdict::Error,
                headline: "error: merit stage failed".into(),
            },
        ));
    };
    if !(in_s && phi <= problem.tolerances.feasibility) {
        for name in &STAGES[1..] {
            rec.skip(name, "reference point is infeasible");
        }
        return Ok(finish(
            problem,
            x_bar,
            options,
            rec,
            hyps,
            Summary {
                verdict: Verdict::Refuted,
                headline: "refuted: reference point is infeasible".into(),
            },
        ));
    }

    // constraint qualification chain
    let alpha_hat = rec
        .run(
            "increase",
            estimate_increase_bound(&problem.g, &problem.c, &problem.s, x_bar, delta, &options.increase_grid),
            |a| {
                json!({
                    "alpha_hat": a,
                    "delta": delta,
                    "label": if a.is_some() { "grid estimate, certified on samples" } else { "qualification not certified" },
                })
            },
        )
        .flatten();
    hyps.push(match alpha_hat {
        Some(a) => hyp(
            "metric C-increase (CQ)",
            HypothesisState::VerifiedOnSamples,
            Some(format!("alpha_hat = {a}")),
        ),
        None => hyp("metric C-increase (CQ)", HypothesisState::NotCertified, None),
    });
    let sigma = match alpha_hat {
        Some(a) => rec.run("sigma", cq_sigma(a, delta), to_value),
        None => {
            rec.skip("sigma", "increase bound not certified");
            None
        }
    };
    match sigma {
        Some(m) => {
            let res = error_bound_res(problem.n(), options.error_bound_res);
            let eb = rec.run(
                "error_bound",
                verify_error_bound(&problem.g, &problem.c, &problem.s, x_bar, m.sigma, m.radius, res),
                to_value,
            );
            hyps.push(match eb {
                Some(r) if r.pass => hyp("local error bound", HypothesisState::VerifiedOnSamples, None),
                Some(r) => hyp(
                    "local error bound",
                    HypothesisState::Refuted,
                    Some(format!("witness {:?}", r.witness.unwrap_or_default())),
                ),
                None => hyp("local error bound", HypothesisState::Skipped, None),
            });
        }
        None => {
            rec.skip("error_bound", "no modulus available");
            hyps.push(hyp("local error bound", HypothesisState::Skipped, None));
        }
    }

    let ell = rec
        .run(
            "k_lipschitz",
            estimate_k_lipschitz(problem, x_bar, delta, 200, seed),
            to_value,
        )
        .map(|e| e.ell_hat);
    hyps.push(match ell {
        Some(l) => hyp(
            "f is K-Lipschitz",
            HypothesisState::VerifiedOnSamples,
            Some(format!("ell_hat = {l}")),
        ),
        None => hyp("f is K-Lipschitz", HypothesisState::NotCertified, None),
    });

    // penalization conditions
    let mut refutations: Vec<&'static str> = Vec::new();
    let phi_fn = |x: &DVector<f64>| problem.merit(x);
    let usub = (|| -> Result<_> {
        let x_star = upper_subgradient_candidate(phi_fn, x_bar, 1e-6)?;
        let check = check_upper_subgradient(phi_fn, x_bar, &x_star, 0.25 * delta, 200, 0.0, seed)?;
        Ok((x_star, check))
    })();
    let usub_ok = matches!(&usub, Ok((_, c)) if c.pass);
    hyps.push(match &usub {
        Ok((_, c)) if c.pass => hyp(
            "upper subdifferential of phi is nonempty",
            HypothesisState::VerifiedOnSamples,
            None,
        ),
        Ok((_, c)) => hyp(
            "upper subdifferential of phi is nonempty",
            HypothesisState::Refuted,
            Some(format!(
                "candidate fails at {:?}",
                c.witness.clone().unwrap_or_default()
            )),
        ),
        Err(e) => hyp(
            "upper subdifferential of phi is nonempty",
            HypothesisState::Skipped,
            Some(e.to_string()),
        ),
    });
    match (alpha_hat, ell, &usub) {
        (Some(a), Some(l), Ok((x_star, check))) => {
            let r = check_penalization_condition(problem, x_bar, a, l, x_star, options.directions, seed);
            if let Some(c) = rec.run("penalization", r, |c| {
                json!({
                    "alpha": a,
                    "ell": l,
                    "x_star": x_star.iter().copied().collect::<Vec<_>>(),
                    "upper_subgradient_check": check,
                    "applicable": usub_ok,
                    "certificate": cert_value(c),
                })
            }) {
                if usub_ok && matches!(c.status, CertificateStatus::Violated { .. }) {
                    refutations.push("penalization condition violated");
                }
            }
        }
        _ => rec.skip(
            "penalization",
            "needs the increase estimate, the Lipschitz estimate and a subgradient candidate",
        ),
    }
    match (alpha_hat, ell) {
        (Some(a), Some(l)) => {
            if let Some(c) = rec.run(
                "convex_scalarized",
                convex_scalarized_certificate(problem, x_bar, a, l),
                cert_value,
            ) {
                if c.status == CertificateStatus::LpInfeasible {
                    refutations.push("convex scalarized LP infeasible");
                }
            }
        }
        _ => rec.skip(
            "convex_scalarized",
            "needs the increase estimate and the Lipschitz estimate",
        ),
    }

    // fan conditions
    let fan = problem.fan();
    let pre = check_outer_prederivative(&problem.g, x_bar, &fan, 0.0, delta, 100, 1e-12, seed);
    let pre_ok = matches!(&pre, Ok(v) if v.pass);
    hyps.push(match (&pre, problem.fan.is_some()) {
        (Ok(v), false) if v.pass => hyp(
            "fan is an outer prederivative",
            HypothesisState::Verified,
            Some("bundle of the affine scenarios".into()),
        ),
        (Ok(v), true) if v.pass => hyp(
            "fan is an outer prederivative",
            HypothesisState::VerifiedOnSamples,
            None,
        ),
        (Ok(v), _) => hyp(
            "fan is an outer prederivative",
            HypothesisState::Refuted,
            Some(format!("worst excess {:e}", v.worst)),
        ),
        (Err(e), _) => hyp(
            "fan is an outer prederivative",
            HypothesisState::Skipped,
            Some(e.to_string()),
        ),
    });
    let tang = check_tangential_condition(problem, x_bar, &fan, options.directions, seed);
    if let Some(c) = rec.run("tangential", tang, |c| {
        json!({
            "prederivative": pre.as_ref().ok(),
            "certificate": cert_value(c),
        })
    }) {
        if pre_ok && matches!(c.status, CertificateStatus::Violated { .. }) {
            refutations.push("tangential condition violated");
        }
    }
    if let Some(c) = rec.run(
        "scalarized_fan",
        scalarized_fan_certificate(problem, x_bar, &fan),
        cert_value,
    ) {
        if c.status == CertificateStatus::LpInfeasible {
            refutations.push("scalarized LP infeasible");
        }
    }
    let mult = rec.run("multiplier", multiplier_certificate(problem, x_bar, &fan), cert_value);
    let qual = if options.skip_cq {
        rec.skip("qualification", "skipped by request");
        hyps.push(hyp(
            "fan-tangent qualification",
            HypothesisState::AssumedByUser,
            None,
        ));
        None
    } else {
        let q = rec.run("qualification", qualification_check(problem, &fan, x_bar), to_value);
        match &q {
            Some(q) => {
                hyps.push(hyp(
                    "fan-tangent qualification",
                    if q.pass {
                        HypothesisState::Verified
                    } else {
                        HypothesisState::Refuted
                    },
                    Some(format!("t = {}", q.t)),
                ));
                hyps.push(hyp(
                    "Slater-type condition",
                    match (q.slater.applicable, q.slater.pass) {
                        (false, _) => HypothesisState::NotApplicable,
                        (true, true) => HypothesisState::Verified,
                        (true, false) => HypothesisState::Refuted,
                    },
                    Some(format!("t = {}", q.slater.t)),
                ));
            }
            None => hyps.push(hyp("fan-tangent qualification", HypothesisState::Skipped, None)),
        }
        q
    };

    let half = options.oracle_cells as f64 * options.oracle_spacing;
    let grid = GridSpec::around(x_bar, half, 2 * options.oracle_cells + 1);
    let oracle = grid.and_then(|g| refute_efficiency(problem, x_bar, &g));
    let witness = rec
        .run("oracle", oracle, |r| json!({ "half_width": half, "refutation": r }))
        .and_then(|r| r.witness);

    match &mult {
        Some(c) => {
            let replay = c.replay(problem, x_bar, &fan);
            rec.run("replay", replay, |r| json!({ "multiplier_residual": r }));
        }
        None => rec.skip("replay", "no multiplier certificate"),
    }

    // Without the qualification condition an infeasible multiplier LP proves nothing.
    let qualified = options.skip_cq || matches!(&qual, Some(q) if q.pass);
    let mult_infeasible = qualified && matches!(&mult, Some(c) if c.status == CertificateStatus::LpInfeasible);
    let mut headline_parts: Vec<&str> = Vec::new();
    if mult_infeasible {
        headline_parts.push("multiplier LP infeasible");
    }
    if witness.is_some() {
        headline_parts.push("dominating witness found");
    }
    if headline_parts.is_empty() {
        headline_parts = refutations.clone();
    }
    let summary = if !headline_parts.is_empty() {
        Summary {
            verdict: Verdict::Refuted,
            headline: format!("refuted: {}", headline_parts.join("; ")),
        }
    } else {
        match &mult {
            Some(c) if c.holds() => {
                let note = match &qual {
                    Some(q) if !q.pass => " (multiplier holds without the qualification guarantee)",
                    _ => "",
                };
                Summary {
                    verdict: Verdict::Consistent,
                    headline: format!("consistent with necessary conditions{note}"),
                }
            }
            Some(c) => Summary {
                verdict: Verdict::Inconclusive,
                headline: format!(
                    "inconclusive: multiplier certificate {}{}",
                    status_word(&c.status),
                    if qualified { "" } else { " and qualification fails" }
                ),
            },
            None => Summary {
                verdict: Verdict::Inconclusive,
                headline: "inconclusive: multiplier stage failed".into(),
            },
        }
    };
    Ok(finish(problem, x_bar, options, rec, hyps, summary))
}

fn status_word(s: &CertificateStatus) -> &'static str {
    match s {
        CertificateStatus::Holds => "holds",
        CertificateStatus::Violated { .. } => "violated",
        CertificateStatus::LpInfeasible => "infeasible",
        CertificateStatus::Inconclusive { .. } => "inconclusive",
    }
}

fn finish(
    problem: &Problem,
    x_bar: &DVector<f64>,
    options: &ReportOptions,
    rec: Recorder,
    hypotheses: Vec<Hypothesis>,
    summary: Summary,
) -> Report {
    Report {
        version: REPORT_VERSION,
        seed: options.seed,
        x_bar: x_bar.iter().copied().collect(),
        options: options.clone(),
        instance: ProblemDocument::from_problem(problem),
        stages: rec.stages,
        hypotheses,
        summary,
    }
}
