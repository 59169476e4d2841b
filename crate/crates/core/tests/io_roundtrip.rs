mod common;

use common::*;
use proptest::prelude::*;
use rvopt::io::{parse_problem, problem_to_json, ProblemDocument};
use rvopt::Error;

fn num() -> impl Strategy<Value = f64> {
    prop_oneof![-5.0f64..5.0, (-50i32..50).prop_map(|k| k as f64 * 0.1)]
}

fn matrix(r: usize, c: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(num(), c), r)
}

fn document() -> impl Strategy<Value = String> {
    (1usize..4, 1usize..4, 1usize..4)
        .prop_flat_map(|(n, m, p)| {
            (
                Just((n, m, p)),
                matrix(m, n),
                prop::collection::vec(num(), m),
                prop::collection::vec((matrix(p, n), prop::collection::vec(num(), p)), 1..4),
                prop::collection::vec(prop::option::of(-3.0f64..-0.5), n),
                prop::collection::vec(prop::option::of(0.5f64..3.0), n),
                any::<bool>(),
            )
        })
        .prop_map(|((n, m, p), jac, off, scen, lo, hi, rays)| {
            let c = if rays {
                let gens: Vec<Vec<f64>> = (0..p)
                    .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.25 }).collect())
                    .collect();
                serde_json::json!({"kind": "rays", "dim": p, "gens": gens})
            } else {
                serde_json::json!({"kind": "orthant", "dim": p})
            };
            let scenarios: Vec<_> = scen
                .into_iter()
                .map(|(a, b)| serde_json::json!({"A": a, "b": b}))
                .collect();
            serde_json::json!({
                "version": 1,
                "dims": {"n": n, "m": m, "p": p},
                "objective": {"kind": "affine", "jacobian": jac, "offset": off},
                "k": {"kind": "orthant", "dim": m},
                "c": c,
                "s": {"kind": "box", "lo": lo, "hi": hi},
                "scenarios": scenarios,
            })
            .to_string()
        })
}

proptest! {
    #![proptest_config(proptest_config(64))]

    #[test]
    fn load_serialize_load_is_identity(text in document()) {
        let p = parse_problem(&text).unwrap();
        let json = problem_to_json(&p);
        let q = parse_problem(&json).unwrap();
        prop_assert_eq!(&p, &q);
        prop_assert_eq!(json, problem_to_json(&q));
    }
}

#[test]
fn fixtures_round_trip() {
    for name in ["e1.json", "e2.json", "e2_open.json", "e3.json"] {
        let p = fixture(name);
        assert_eq!(parse_problem(&problem_to_json(&p)).unwrap(), p, "{name}");
    }
}

#[test]
fn validation_errors_name_the_field() {
    let text = std::fs::read_to_string(fixture_path("e1.json")).unwrap();
    let no_k = text.replace(r#""k": {"kind": "orthant", "dim": 2},"#, "");
    assert_eq!(parse_problem(&no_k).unwrap_err().to_string(), "k: required");

    let zero_c = text.replace(
        r#""c": {"kind": "orthant", "dim": 2}"#,
        r#""c": {"kind": "rays", "dim": 2, "gens": []}"#,
    );
    let err = parse_problem(&zero_c).unwrap_err();
    assert!(matches!(&err, Error::Validation { path, .. } if path == "c"), "{err}");
    assert!(err.to_string().contains("proper"));

    let unknown = text.replace(r#""version": 1,"#, r#""version": 1, "extra": 0,"#);
    assert!(matches!(parse_problem(&unknown).unwrap_err(), Error::Parse { .. }));
}

#[test]
fn documents_are_versioned() {
    let doc = ProblemDocument::from_problem(&fixture("e1.json"));
    assert_eq!(doc.version, Some(rvopt::io::FORMAT_VERSION));
}
