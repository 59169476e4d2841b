mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rvopt::certify::{multiplier_certificate, scalarized_fan_certificate, CertificateStatus, Problem};
use rvopt::variational::Objective;

fn e3_node() -> impl Strategy<Value = DVector<f64>> {
    (10usize..=40, 0usize..=40).prop_map(|(i, j)| v(&[i as f64 * 0.05, j as f64 * 0.05]))
}

fn scaled_objective(p: &Problem, t: f64) -> Problem {
    let Objective::Affine { jacobian, offset } = &p.objective else {
        unreachable!("fixtures are affine")
    };
    let mut q = p.clone();
    q.objective = Objective::affine(jacobian * t, offset * t).unwrap();
    q
}

proptest! {
    #![proptest_config(proptest_config(48))]

    #[test]
    fn holding_certificates_replay(x in e3_node()) {
        let p = fixture("e3.json");
        let fan = p.fan();
        let c = multiplier_certificate(&p, &x, &fan).unwrap();
        prop_assert_eq!(&c.status, &CertificateStatus::Holds);
        prop_assert!(c.replay(&p, &x, &fan).unwrap() <= 1e-8);
        let s = scalarized_fan_certificate(&p, &x, &fan).unwrap();
        if s.holds() {
            prop_assert!(s.replay(&p, &x, &fan).unwrap() <= 1e-8);
        }
    }

    /// Rescaling the objective by a positive factor never changes a verdict.
    #[test]
    fn verdicts_ignore_objective_scale(x in e3_node(), t in 0.1f64..20.0) {
        let p = fixture("e3.json");
        let q = scaled_objective(&p, t);
        let (pf, qf) = (p.fan(), q.fan());
        let a = scalarized_fan_certificate(&p, &x, &pf).unwrap();
        let b = scalarized_fan_certificate(&q, &x, &qf).unwrap();
        prop_assert_eq!(a.holds(), b.holds());
        let a = multiplier_certificate(&p, &x, &pf).unwrap();
        let b = multiplier_certificate(&q, &x, &qf).unwrap();
        prop_assert_eq!(a.holds(), b.holds());
    }

    /// Any interior direction of the orthant normalizes the multiplier to the same verdict.
    #[test]
    fn verdicts_ignore_normalization(x in e3_node(), a in 0.1f64..1.0, b in 0.1f64..1.0) {
        let p = fixture("e3.json");
        let mut q = p.clone();
        q.e = v(&[a, b]).normalize();
        let fan = p.fan();
        prop_assert_eq!(
            scalarized_fan_certificate(&p, &x, &fan).unwrap().holds(),
            scalarized_fan_certificate(&q, &x, &fan).unwrap().holds()
        );
    }
}

#[test]
fn refuting_instance() {
    let p = fixture("e2_open.json");
    let x = v(&[-1.0, -1.0]);
    let c = multiplier_certificate(&p, &x, &p.fan()).unwrap();
    assert_eq!(c.status, CertificateStatus::LpInfeasible);
}

#[test]
fn unconstrained_identity_has_no_scalarization() {
    let p = fixture("e2_open.json");
    let mut q = p.clone();
    // a zero constraint matrix leaves every direction admissible
    q.g = rvopt::scenario::ScenarioMap::new(vec![rvopt::scenario::Scenario::new(
        DMatrix::zeros(2, 2),
        DVector::zeros(2),
    )
    .unwrap()])
    .unwrap();
    let x = v(&[0.0, 0.0]);
    let c = scalarized_fan_certificate(&q, &x, &q.fan()).unwrap();
    assert_eq!(c.status, CertificateStatus::LpInfeasible);
}
