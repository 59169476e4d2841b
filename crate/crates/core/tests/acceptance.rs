//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero when any criterion fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::*;
use rvopt::certify::{
    check_tangential_condition, estimate_k_lipschitz, multiplier_certificate, qualification_check, CertificateStatus,
    Problem,
};
use rvopt::cone::{Cone, ConeRep};
use rvopt::lp::{solve_lp, LinearProgram};
use rvopt::pareto::{check_penalization_transfer, grid_scan_weak_pareto, refute_efficiency, GridSpec};
use rvopt::regularity::{cq_sigma, estimate_increase_bound, verify_error_bound, IncreaseGrid};
use rvopt::report::{run_report, ReportOptions};
use rvopt::scenario::merit;
use rvopt::variational::{check_fan_axioms, check_outer_prederivative, Fan};

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- cones

fn random_cone(rng: &mut ChaCha8Rng, d: usize, kind: usize) -> Cone {
    // every generated ray or row makes an acute angle with `w`, so the cone
    // is pointed (rays) or solid (rows)
    let w = random_vec(rng, d, 1.0).normalize();
    let acute = |rng: &mut ChaCha8Rng| {
        let mut r = random_vec(rng, d, 1.0);
        if r.dot(&w) < 0.0 {
            r = -r;
        }
        r + &w * 0.3
    };
    match kind {
        0 => Cone::orthant(d),
        1 => {
            let k = d + rng.gen_range(0..3);
            Cone::halfspaces(d, (0..k).map(|_| acute(rng)).collect()).unwrap()
        }
        _ => {
            let k = d + rng.gen_range(0..4);
            Cone::rays(d, (0..k).map(|_| acute(rng)).collect()).unwrap()
        }
    }
}

/// Members of a cone sampled from its own representation.
fn members(rng: &mut ChaCha8Rng, cone: &Cone, count: usize) -> Vec<DVector<f64>> {
    let d = cone.dim();
    let mut out = Vec::new();
    match cone.rep() {
        ConeRep::Orthant => {
            for _ in 0..count {
                out.push(random_vec(rng, d, 1.0).abs());
            }
        }
        ConeRep::Rays(gens) => {
            for _ in 0..count {
                let mut z = DVector::zeros(d);
                for g in gens {
                    // sparse combinations reach the boundary faces as well
                    if rng.gen_bool(0.5) {
                        z += g * rng.gen_range(0.0..1.0);
                    }
                }
                out.push(z);
            }
        }
        ConeRep::Halfspaces(rows) => {
            let mut tries = 0;
            while out.len() < count && tries < 200 * count {
                tries += 1;
                let z = random_vec(rng, d, 1.0);
                if rows.iter().all(|m| m.dot(&z) >= 0.0) {
                    out.push(z);
                }
            }
        }
    }
    out
}

/// The same cone in the other representation (rows for rays, rays for rows).
fn converted(cone: &Cone) -> Option<Cone> {
    match cone.rep() {
        ConeRep::Rays(_) => cone.to_halfspaces(64),
        _ => cone.generators(64).map(|g| Cone::rays(cone.dim(), g).unwrap()),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = rng(1);
    let mut worst_opt = f64::NEG_INFINITY;
    let mut worst_idem = 0.0f64;
    let mut worst_pair = 0.0f64;
    let mut mismatches = 0;
    let mut points = 0;
    let mut cones = 0;
    while points < 1000 {
        let d = 2 + cones % 4;
        let cone = random_cone(&mut rng, d, cones % 3);
        cones += 1;
        let Some(other) = converted(&cone) else {
            return Err(format!("conversion overflow for {:?}", cone.rep()));
        };
        let mem = members(&mut rng, &cone, 300);
        ensure!(mem.len() >= 30, "too few members sampled for {:?}", cone.rep());
        let dual = cone.negative_dual();
        let dual_mem = members(&mut rng, &dual, 100);
        for q in &mem {
            for w in &dual_mem {
                worst_pair = worst_pair.max(w.dot(q) / (w.norm() * q.norm()).max(1e-300));
            }
        }
        for _ in 0..20 {
            let z = random_vec(&mut rng, d, 3.0);
            let p = ok(cone.project(&z))?;
            ensure!(ok(cone.contains(&p, 1e-9))?, "projection left the cone: {p:?}");
            ensure!(ok(other.contains(&p, 1e-7))?, "projection outside converted cone");
            let dz = (&z - &p).norm();
            for q in &mem {
                worst_opt = worst_opt.max(dz - (&z - q).norm());
            }
            worst_idem = worst_idem.max((ok(cone.project(&p))? - &p).norm());
            // Moreau: the residual lies in the negative dual and is orthogonal to p
            let r = &z - &p;
            worst_pair = worst_pair.max(r.dot(&p).abs() / (1.0 + z.norm_squared()));
            ensure!(
                ok(dual.contains(&r, 1e-7))?,
                "projection residual not in the negative dual"
            );
            let dist = ok(cone.distance(&z))?;
            if (dist == 0.0 || dist > 1e-6) && ok(cone.contains(&z, 1e-9))? != ok(other.contains(&z, 1e-9))? {
                mismatches += 1;
            }
            points += 1;
        }
    }
    ensure!(worst_opt <= 1e-7, "projection not optimal: excess {worst_opt:e}");
    ensure!(worst_idem <= 1e-9, "projection not idempotent: {worst_idem:e}");
    ensure!(worst_pair <= 1e-9, "dual pairing violated: {worst_pair:e}");
    ensure!(mismatches == 0, "{mismatches} bipolar membership mismatches");
    Ok(format!(
        "{points} points on {cones} cones; optimality {worst_opt:.1e}, idempotence {worst_idem:.1e}, pairing {worst_pair:.1e}"
    ))
}

// ---------------------------------------------------------------- LP

fn criterion_2() -> Outcome {
    let mut hand = LinearProgram::new(2).minimize(vec![-1.0, -1.0]);
    hand.add_le(vec![1.0, 2.0], 4.0);
    hand.add_le(vec![3.0, 1.0], 6.0);
    let r = ok(solve_lp(&hand))?;
    let x = r.x.clone().ok_or("hand LP has no solution")?;
    ensure!(
        (x[0] - 1.6).abs() <= 1e-8 && (x[1] - 1.2).abs() <= 1e-8 && (r.objective + 2.8).abs() <= 1e-8,
        "hand LP gave {x:?}, {}",
        r.objective
    );

    // min c.x s.t. Ax >= b, x >= 0, built from a complementary primal-dual pair
    let mut rng = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..7);
        let m = rng.gen_range(2..9);
        let a = random_matrix(&mut rng, m, n);
        let x_star: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    rng.gen_range(0.1..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        let y_star: Vec<f64> = (0..m)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    rng.gen_range(0.1..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        let ax = &a * DVector::from_vec(x_star.clone());
        let aty = a.transpose() * DVector::from_vec(y_star.clone());
        let b: Vec<f64> = (0..m)
            .map(|i| {
                if y_star[i] > 0.0 {
                    ax[i]
                } else {
                    ax[i] - rng.gen_range(0.1..1.0)
                }
            })
            .collect();
        let c: Vec<f64> = (0..n)
            .map(|j| {
                if x_star[j] > 0.0 {
                    aty[j]
                } else {
                    aty[j] + rng.gen_range(0.1..1.0)
                }
            })
            .collect();
        let optimum: f64 = c.iter().zip(&x_star).map(|(c, x)| c * x).sum();
        let dual_value: f64 = b.iter().zip(&y_star).map(|(b, y)| b * y).sum();
        ensure!((optimum - dual_value).abs() <= 1e-9, "constructed pair has a gap");
        let mut lp = LinearProgram::new(n).minimize(c.clone());
        for (i, &bi) in b.iter().enumerate() {
            lp.add_ge(a.row(i).iter().copied().collect(), bi);
        }
        let r = ok(solve_lp(&lp))?;
        ensure!(r.is_optimal(), "constructed LP reported {:?}", r.status);
        let x = r.x.unwrap();
        let err = (r.objective - optimum).abs();
        let viol = (0..m)
            .map(|i| b[i] - a.row(i).iter().zip(&x).map(|(a, x)| a * x).sum::<f64>())
            .chain(x.iter().map(|&v| -v))
            .fold(0.0, f64::max);
        worst = worst.max(err).max(viol);
    }
    ensure!(worst <= 1e-8, "random LP error {worst:e}");
    Ok(format!("hand LP exact; 100 random LPs within {worst:.1e}"))
}

// ---------------------------------------------------------------- merit

fn criterion_3() -> Outcome {
    let p = fixture("e1.json");
    let phi = |x: &[f64]| merit(&p.g, &p.c, &v(x));
    ensure!(ok(phi(&[1.0, 1.0]))? == 0.0, "phi(1,1) != 0");
    let a = ok(phi(&[0.25, 1.0]))?;
    ensure!((a - 0.25).abs() <= 1e-12, "phi(0.25,1) = {a}");
    let b = ok(phi(&[0.0, -1.0]))?;
    ensure!((b - 1.25f64.sqrt()).abs() <= 1e-12, "phi(0,-1) = {b}");
    let mut bad = 0;
    let nodes = grid(&[-1.0, -1.0], &[2.0, 2.0], 201);
    for x in &nodes {
        let lib = ok(merit(&p.g, &p.c, x))? <= 1e-9;
        let oracle = orthant_merit(&p.g, x) <= 1e-9;
        let set = x[0] >= 0.5 && x[1] >= 0.0;
        if lib != set || oracle != set {
            bad += 1;
        }
    }
    ensure!(bad == 0, "{bad} grid nodes disagree with the solvability set");
    Ok(format!("hand values exact; {} grid nodes match", nodes.len()))
}

fn criterion_4() -> Outcome {
    let mut rng = rng(4);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..10 {
        let n = 2 + k % 3;
        let p = 2 + (k / 3) % 2;
        let g = random_map(&mut rng, n, p, 1 + k % 4);
        let c = if k % 2 == 0 {
            Cone::orthant(p)
        } else {
            random_cone(&mut rng, p, 1 + k % 2)
        };
        for _ in 0..1000 {
            let x = random_vec(&mut rng, n, 3.0);
            let y = random_vec(&mut rng, n, 3.0);
            let t: f64 = rng.gen_range(0.0..1.0);
            let mid = &x * t + &y * (1.0 - t);
            let lhs = ok(merit(&g, &c, &mid))?;
            let rhs = t * ok(merit(&g, &c, &x))? + (1.0 - t) * ok(merit(&g, &c, &y))?;
            worst = worst.max(lhs - rhs);
        }
    }
    ensure!(worst <= 1e-9, "convexity violated by {worst:e}");
    Ok(format!("10^4 triples, worst excess {worst:.1e}"))
}

// ---------------------------------------------------------------- regularity

fn criterion_5(sigma_out: &mut Option<f64>) -> Outcome {
    let p = fixture("e1.json");
    let x_bar = v(&[1.0, 0.0]);
    let delta = 0.5;
    let alpha = ok(estimate_increase_bound(
        &p.g,
        &p.c,
        &p.s,
        &x_bar,
        delta,
        &IncreaseGrid::default(),
    ))?
    .ok_or("increase bound not certified")?;
    ensure!(alpha >= 1.3, "alpha_hat = {alpha} < 1.3");
    let m = ok(cq_sigma(alpha, delta))?;
    *sigma_out = Some(m.sigma);
    let r = ok(verify_error_bound(&p.g, &p.c, &p.s, &x_bar, m.sigma, m.radius, 101))?;
    ensure!(
        r.pass,
        "error bound fails: violation {:e} beyond slack {:e} at {:?}",
        r.max_violation,
        r.slack,
        r.witness
    );
    // the distance in the bound is checked against the closed form dist to {x1 >= 0.5, x2 >= 0}
    for x in grid(&[x_bar[0] - m.radius, -m.radius], &[x_bar[0] + m.radius, m.radius], 41) {
        let dist = ((0.5 - x[0]).max(0.0).powi(2) + (-x[1]).max(0.0).powi(2)).sqrt();
        let phi = orthant_merit(&p.g, &x);
        ensure!(dist <= phi / m.sigma + 1e-12, "closed-form bound fails at {x:?}");
    }
    Ok(format!(
        "alpha_hat = {alpha:.4}, sigma = {:.4}, {} nodes, max violation {:.1e}",
        m.sigma, r.checked, r.max_violation
    ))
}

// ---------------------------------------------------------------- certificates

/// Independent check of a multiplier certificate for an affine objective,
/// orthant `K` and `C`, and box `S`.
fn multiplier_residual_oracle(
    problem: &Problem,
    x: &DVector<f64>,
    cert: &rvopt::certify::Certificate,
    lo: &[f64],
    hi: &[f64],
) -> std::result::Result<f64, String> {
    let y = v(cert.multiplier.as_ref().ok_or("no multiplier")?);
    ensure!(y.iter().all(|&t| t >= -1e-12), "multiplier not in K+: {y:?}");
    ensure!((y.sum() - 1.0).abs() <= 1e-9, "multiplier not normalized");
    let jac = ok(problem.objective.jacobian(x))?;
    let mut total = jac.transpose() * &y;
    let fan = problem.fan();
    ensure!(
        cert.constraint_multipliers.len() == fan.bundle().len(),
        "one constraint multiplier per matrix"
    );
    for (l, c) in fan.bundle().iter().zip(&cert.constraint_multipliers) {
        let c = v(c);
        ensure!(c.iter().all(|&t| t <= 1e-12), "constraint multiplier not in C-: {c:?}");
        total += l.transpose() * c;
    }
    let n = cert.normal.as_ref().ok_or("no normal")?;
    ensure!(in_box_normal_cone(lo, hi, x, n, 1e-12), "normal {n:?} not in N(S, x)");
    total += v(n);
    Ok(total.norm())
}

fn criterion_6() -> Outcome {
    let p = fixture("e3.json");
    let (lo, hi) = ([0.0, 0.0], [2.0, 2.0]);
    let nodes = grid(&lo, &hi, 41);
    let feasible: Vec<bool> = nodes.iter().map(|x| x[0] >= 0.5 && x[1] >= 0.0).collect();
    // w-eff on the grid: no feasible node strictly smaller in both coordinates
    let weak: Vec<bool> = (0..nodes.len())
        .map(|i| {
            feasible[i]
                && !(0..nodes.len()).any(|j| feasible[j] && nodes[j][0] < nodes[i][0] && nodes[j][1] < nodes[i][1])
        })
        .collect();
    let scan = ok(grid_scan_weak_pareto(
        &p,
        &ok(GridSpec::new(lo.to_vec(), hi.to_vec(), vec![41, 41]))?,
    ))?;
    for (i, x) in nodes.iter().enumerate() {
        let j = scan.nearest(x).ok_or("scan is empty")?;
        ensure!(
            scan.weak_efficient[j] == weak[i],
            "grid scan disagrees with the oracle at {x:?}"
        );
    }
    let fan = p.fan();
    let oracle_grid = ok(GridSpec::new(lo.to_vec(), hi.to_vec(), vec![41, 41]))?;
    let (mut holds, mut refuted, mut worst) = (0, 0, 0.0f64);
    for (i, x) in nodes.iter().enumerate() {
        if !feasible[i] {
            continue;
        }
        let cert = ok(multiplier_certificate(&p, x, &fan))?;
        match cert.status {
            CertificateStatus::Holds => {
                let r = multiplier_residual_oracle(&p, x, &cert, &lo, &hi)?;
                ensure!(r <= 1e-8, "residual {r:e} at {x:?}");
                worst = worst.max(r);
                holds += 1;
            }
            CertificateStatus::LpInfeasible => {
                ensure!(!weak[i], "multiplier LP infeasible at weak-Pareto node {x:?}");
                if ok(qualification_check(&p, &fan, x))?.pass {
                    let w = ok(refute_efficiency(&p, x, &oracle_grid))?
                        .witness
                        .ok_or_else(|| format!("no dominating witness at {x:?}"))?;
                    ensure!(
                        w[0] < x[0] && w[1] < x[1] && w[0] >= 0.5 && w[1] >= 0.0,
                        "bogus witness {w:?}"
                    );
                    refuted += 1;
                }
            }
            ref s => return Err(format!("unexpected status {s:?} at {x:?}")),
        }
    }
    ensure!(weak.iter().filter(|&&w| w).count() > 0, "no weak-Pareto nodes");
    Ok(format!(
        "{holds} holds (max residual {worst:.1e}), {refuted} refuted with witnesses, 0 exceptions"
    ))
}

fn criterion_7() -> Outcome {
    let open = fixture("e2_open.json");
    let x = v(&[-1.0, -1.0]);
    let fan = open.fan();
    let m = ok(multiplier_certificate(&open, &x, &fan))?;
    ensure!(
        m.status == CertificateStatus::LpInfeasible,
        "multiplier status {:?}",
        m.status
    );
    let t = ok(check_tangential_condition(&open, &x, &fan, 64, 7))?;
    let CertificateStatus::Violated { witness } = t.status else {
        return Err(format!("tangential status {:?}", t.status));
    };
    // the witness must be a direction of the preimage cone with f'v in -int K
    let wv = v(&witness);
    ensure!(
        wv.iter().all(|&c| c < 0.0),
        "tangential witness {witness:?} is not in -int K"
    );
    let boxed = ok(GridSpec::new(vec![-2.0, -2.0], vec![0.0, 0.0], vec![21, 21]))?;
    let w = ok(refute_efficiency(&open, &x, &boxed))?
        .witness
        .ok_or("no dominating witness")?;
    ensure!(
        w[0] < -1.0 && w[1] < -1.0 && w[0] <= 0.0 && w[1] <= 0.0,
        "bogus witness {w:?}"
    );

    let closed = fixture("e2.json");
    let x = v(&[-1.0, 0.0]);
    let c = ok(multiplier_certificate(&closed, &x, &closed.fan()))?;
    ensure!(c.status == CertificateStatus::Holds, "boundary status {:?}", c.status);
    let r = multiplier_residual_oracle(&closed, &x, &c, &[-1.0, -1.0], &[0.0, 0.0])?;
    ensure!(r <= 1e-9, "residual {r:e}");
    let y = c.multiplier.clone().unwrap();
    ensure!(
        (y[0] - 1.0).abs() <= 1e-9 && y[1].abs() <= 1e-9,
        "multiplier {y:?} != (1, 0)"
    );
    let n = c.normal.clone().unwrap();
    ensure!(
        (n[0] + 1.0).abs() <= 1e-9 && n[1].abs() <= 1e-9,
        "normal {n:?} != (-1, 0)"
    );
    ensure!(
        c.constraint_multipliers[0].iter().all(|t| t.abs() <= 1e-9),
        "constraint multiplier != 0"
    );
    Ok(format!(
        "interior point refuted (witness {w:?}); boundary multipliers reproduced, residual {r:.1e}"
    ))
}

fn criterion_8(sigma: Option<f64>) -> Outcome {
    let p = fixture("e3.json");
    let sigma = match sigma {
        Some(s) => s,
        None => {
            let e1 = fixture("e1.json");
            let a = ok(estimate_increase_bound(
                &e1.g,
                &e1.c,
                &e1.s,
                &v(&[1.0, 0.0]),
                0.5,
                &IncreaseGrid::default(),
            ))?
            .ok_or("no sigma available")?;
            a - 1.0
        }
    };
    let x = v(&[0.5, 1.0]);
    let ell_hat = ok(estimate_k_lipschitz(&p, &x, 0.5, 200, 8))?.ell_hat;
    let g = ok(GridSpec::new(vec![0.0, 0.0], vec![2.0, 2.0], vec![41, 41]))?;
    let with = ok(check_penalization_transfer(&p, &x, 2.0 * ell_hat, sigma, &g))?;
    ensure!(
        with.pass,
        "penalized scan lost the point: dominated by {:?}",
        with.dominating
    );
    let without = ok(check_penalization_transfer(&p, &x, 0.0, sigma, &g))?;
    ensure!(!without.pass, "unpenalized scan kept the point");
    let d = without.dominating.clone().unwrap_or_default();
    ensure!(
        d.len() == 2 && d[0] < 0.5 && d[1] < 1.0,
        "dominating point {d:?} does not dominate"
    );
    Ok(format!(
        "ell = {:.4}, sigma = {sigma:.4}: kept; ell = 0: dominated by {d:?}",
        2.0 * ell_hat
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = rng(9);
    let mut worst_pre = f64::NEG_INFINITY;
    let mut worst_lip = f64::NEG_INFINITY;
    for k in 0..10 {
        let n = 2 + k % 3;
        let p = 2 + k % 2;
        let g = random_map(&mut rng, n, p, 1 + k % 3);
        let fan = Fan::from_scenarios(&g);
        let x_bar = random_vec(&mut rng, n, 2.0);
        let r = ok(check_outer_prederivative(
            &g, &x_bar, &fan, 0.0, 1.0, 200, 1e-12, k as u64,
        ))?;
        ensure!(r.pass, "prederivative residual {:e}", r.worst);
        worst_pre = worst_pre.max(r.worst);
        let ax = ok(check_fan_axioms(&fan, 100, k as u64))?;
        ensure!(ax.pass, "fan axioms fail: {ax:?}");
        let lip = fan.lipschitz_bound();
        for _ in 0..100 {
            let x = random_vec(&mut rng, n, 3.0);
            let y = random_vec(&mut rng, n, 3.0);
            let hx: Vec<DVector<f64>> = fan.bundle().iter().map(|l| l * &x).collect();
            let hy: Vec<DVector<f64>> = fan.bundle().iter().map(|l| l * &y).collect();
            worst_lip = worst_lip.max(hausdorff(&hx, &hy) - lip * (&x - &y).norm());
        }
    }
    ensure!(worst_pre <= 1e-12, "prederivative residual {worst_pre:e}");
    ensure!(worst_lip <= 1e-8, "Lipschitz inequality violated by {worst_lip:e}");
    Ok(format!(
        "residual {worst_pre:.1e}, axioms pass, Lipschitz slack {worst_lip:.1e}"
    ))
}

fn criterion_10() -> Outcome {
    let p = fixture("e2.json");
    let opts = ReportOptions::with_seed(42);
    let a = ok(run_report(&p, &v(&[-1.0, 0.0]), &opts))?.to_json();
    let b = ok(run_report(&p, &v(&[-1.0, 0.0]), &opts))?.to_json();
    ensure!(a == b, "reports differ");
    for name in ["e1.json", "e2.json", "e2_open.json", "e3.json"] {
        let p = fixture(name);
        let again = ok(rvopt::io::parse_problem(&rvopt::io::problem_to_json(&p)))?;
        ensure!(again == p, "{name} does not round-trip");
    }
    Ok(format!("{} report bytes identical; 4 fixtures round-trip", a.len()))
}

fn main() -> ExitCode {
    let mut sigma = None;
    type Run<'a> = Box<dyn FnOnce() -> Outcome + 'a>;
    let mut failures = 0;
    let budgets = [10, 5, 60, 60, 60, 120, 60, 60, 60, 60];
    let mut results: Vec<(usize, Outcome, Duration)> = Vec::new();
    {
        let runs: Vec<Run> = vec![
            Box::new(criterion_1),
            Box::new(criterion_2),
            Box::new(criterion_3),
            Box::new(criterion_4),
            Box::new(|| criterion_5(&mut sigma)),
        ];
        for (i, run) in runs.into_iter().enumerate() {
            let t = Instant::now();
            let r = run();
            results.push((i + 1, r, t.elapsed()));
        }
    }
    let runs: Vec<Run> = vec![
        Box::new(criterion_6),
        Box::new(criterion_7),
        Box::new(move || criterion_8(sigma)),
        Box::new(criterion_9),
        Box::new(criterion_10),
    ];
    for (i, run) in runs.into_iter().enumerate() {
        let t = Instant::now();
        let r = run();
        results.push((i + 6, r, t.elapsed()));
    }
    for (k, r, dt) in results {
        let over = dt > Duration::from_secs(budgets[k - 1]);
        let secs = dt.as_secs_f64();
        match r {
            Ok(msg) if !over => println!("PASS criterion {k:2} ({secs:.2}s): {msg}"),
            Ok(msg) => {
                failures += 1;
                println!(
                    "FAIL criterion {k:2} ({secs:.2}s): over the {}s budget; {msg}",
                    budgets[k - 1]
                );
            }
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {k:2} ({secs:.2}s): {msg}");
            }
        }
    }
    if failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
