//! Fixtures and independent oracles shared by the integration tests. The
//! oracles are written from the definitions and never call the solver paths
//! they are used to check.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rvopt::certify::Problem;
use rvopt::scenario::{Scenario, ScenarioMap};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> Problem {
    rvopt::io::load_problem(fixture_path(name)).expect("fixture loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-2.0..2.0))
}

pub fn random_map(rng: &mut ChaCha8Rng, n: usize, p: usize, count: usize) -> ScenarioMap {
    let scenarios = (0..count)
        .map(|_| Scenario::new(random_matrix(rng, p, n), random_vec(rng, p, 1.0)).unwrap())
        .collect();
    ScenarioMap::new(scenarios).unwrap()
}

/// `max_i |min(A_i x + b_i, 0)|`: the merit function for `C` the orthant.
pub fn orthant_merit(g: &ScenarioMap, x: &DVector<f64>) -> f64 {
    g.scenarios()
        .iter()
        .map(|s| (&s.a * x + &s.b).map(|t| t.min(0.0)).norm())
        .fold(0.0, f64::max)
}

/// Distance from `z` to a finite point set.
pub fn point_set_distance(z: &DVector<f64>, set: &[DVector<f64>]) -> f64 {
    set.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
}

pub fn hausdorff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let ab = a.iter().map(|p| point_set_distance(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|p| point_set_distance(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Normal cone of a box `[lo, hi]` at `x`, membership test.
pub fn in_box_normal_cone(lo: &[f64], hi: &[f64], x: &DVector<f64>, n: &[f64], tol: f64) -> bool {
    (0..x.len()).all(|i| {
        let at_lo = (x[i] - lo[i]).abs() <= 1e-9;
        let at_hi = (x[i] - hi[i]).abs() <= 1e-9;
        match (at_lo, at_hi) {
            (true, true) => true,
            (true, false) => n[i] <= tol,
            (false, true) => n[i] >= -tol,
            (false, false) => n[i].abs() <= tol,
        }
    })
}

/// Grid nodes of a box, first coordinate varying slowest.
pub fn grid(lo: &[f64], hi: &[f64], res: usize) -> Vec<DVector<f64>> {
    let n = lo.len();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        out.push(DVector::from_fn(n, |i, _| {
            lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (res - 1) as f64
        }));
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < res {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Proptest settings with a fixed seed so runs are reproducible, and without
/// failure persistence (there is no `src/` next to the test files).
pub fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        ..Default::default()
    }
}
