mod common;

use common::*;
use proptest::prelude::*;
use rvopt::regularity::{check_metric_increase, IncreaseGrid};

fn small_grid(seed: u64) -> IncreaseGrid {
    IncreaseGrid {
        points: 6,
        radii: 2,
        seed,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(proptest_config(12))]

    /// A pass at some constant implies a pass at every smaller one.
    #[test]
    fn increase_verdict_is_monotone(a in 1.01f64..3.0, b in 1.01f64..3.0, seed in 0u64..1000) {
        let p = fixture("e1.json");
        let x = v(&[1.0, 0.0]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let grid = small_grid(seed);
        let r_hi = check_metric_increase(&p.g, &p.c, &p.s, &x, hi, 0.5, &grid).unwrap();
        let r_lo = check_metric_increase(&p.g, &p.c, &p.s, &x, lo, 0.5, &grid).unwrap();
        if r_hi.pass {
            prop_assert!(r_lo.pass);
            prop_assert!(r_hi.alpha_hat >= hi * (1.0 - 1e-9));
        }
        if !r_lo.pass {
            prop_assert!(!r_hi.pass);
        }
    }
}

#[test]
fn failing_constant_reports_a_witness() {
    let p = fixture("e1.json");
    let r = check_metric_increase(&p.g, &p.c, &p.s, &v(&[1.0, 0.0]), 9.0, 0.5, &small_grid(3)).unwrap();
    assert!(!r.pass);
    let w = r.witness.unwrap();
    assert!(w.r > 0.0 && w.r < 0.5);
}
