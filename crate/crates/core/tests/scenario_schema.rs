use epl_core::runner::{self, CheckSpec, RunOptions, SelectionSpec};
use epl_core::family::{FamilyKind, RateLaw};
use epl_core::Error;
use proptest::prelude::*;
use serde_json::{json, Value};

const FIXTURE: &str = include_str!("fixtures/km_scenario.json");

fn issues(text: &str) -> Vec<(String, String)> {
    match runner::parse_scenario(text) {
        Err(Error::Schema(v)) => v.into_iter().map(|i| (i.pointer, i.message)).collect(),
        other => panic!("expected schema errors, got {other:?}"),
    }
}

fn projection_doc() -> Value {
    json!({
        "version": "v1",
        "name": "p",
        "seed": 1,
        "checks": [{ "spec": { "check": "projection", "set": { "family": "ball", "center": [0.0, 0.0], "radius": 1.0 }, "point": [2.0, 0.0] } }]
    })
}

#[test]
fn builtin_reference_expands() {
    let s = runner::parse_scenario(r#"{"builtin": "parabola_pair"}"#).unwrap();
    assert_eq!(s.name, "parabola_pair");
    assert_eq!(s.checks.len(), 4);
    let s = runner::parse_scenario(r#"{"builtin": "parabola_pair", "seed": 9}"#).unwrap();
    assert_eq!(s.seed, 9);
    let errs = issues(r#"{"builtin": "no_such_example"}"#);
    assert_eq!(errs[0].0, "/builtin");
}

#[test]
fn every_listed_builtin_resolves_and_validates() {
    let list = runner::list_builtins();
    assert!(list.iter().any(|b| b.name == "parabola_pair"));
    assert!(list.iter().any(|b| b.name == "neg_norm_rank_one"));
    for name in ["km_rated_normals", "km_non_equicontinuity", "km_aqc", "sip_demo"] {
        assert!(list.iter().any(|b| b.name == name), "{name}");
    }
    for b in list {
        let s = runner::builtin(&b.name).unwrap();
        s.validate().unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(runner::parse_scenario(&text).unwrap(), s, "{}", b.name);
    }
}

#[test]
fn rank_one_alpha_is_rejected_with_pointer() {
    let doc = json!({
        "version": "v1",
        "name": "bad",
        "seed": 0,
        "checks": [{ "spec": {
            "check": "rated_extremality",
            "sets": [{ "family": "halfspace", "normal": [0.0, 1.0], "offset": 0.0 }],
            "base": [0.0, 0.0],
            "query": { "alpha": 1.0, "gamma": 0.5 },
            "schedule": { "kind": "geometric", "directions": [[0.0, 1.0]], "base": 4.0, "rungs": 3 }
        } }]
    });
    let errs = issues(&doc.to_string());
    assert!(errs.iter().any(|(p, m)| p == "/checks/0/spec/query/alpha" && m.contains("alpha must lie in [0,1)")), "{errs:?}");
}

#[test]
fn all_violations_are_listed() {
    let mut doc = projection_doc();
    doc.as_object_mut().unwrap().remove("seed");
    doc["checks"][0]["spec"]["set"] = json!({ "family": "torus", "radius": 1.0 });
    doc["extra"] = json!(true);
    let errs = issues(&doc.to_string());
    let pointers: Vec<&str> = errs.iter().map(|(p, _)| p.as_str()).collect();
    assert!(errs.iter().any(|(p, m)| p == "/seed" && m.contains("required")), "{errs:?}");
    assert!(pointers.contains(&"/extra"), "{errs:?}");
    assert!(pointers.contains(&"/checks/0/spec/set/family"), "{errs:?}");
    assert!(errs.len() >= 3);
}

#[test]
fn unknown_family_tag_in_indexed_family() {
    let mut doc: Value = serde_json::from_str(FIXTURE).unwrap();
    doc["checks"][2]["spec"]["family"]["kind"]["kind"] = json!("spirals");
    let errs = issues(&doc.to_string());
    assert!(errs.iter().any(|(p, m)| p == "/checks/2/spec/family/kind/kind" && m.contains("spirals")), "{errs:?}");
}

#[test]
fn non_decreasing_ladders_are_schema_errors() {
    let mut doc: Value = serde_json::from_str(FIXTURE).unwrap();
    doc["checks"][0]["spec"]["radii"] = json!([1e-3, 1e-2, 1e-4]);
    let errs = issues(&doc.to_string());
    assert!(errs.iter().any(|(p, m)| p == "/checks/0/spec/radii" && m.contains("strictly decreasing")), "{errs:?}");
}

#[test]
fn unknown_fields_are_rejected() {
    let mut doc = projection_doc();
    doc["checks"][0]["spec"]["colour"] = json!("red");
    let errs = issues(&doc.to_string());
    assert!(errs.iter().any(|(p, _)| p == "/checks/0/spec/colour"), "{errs:?}");
    let mut doc = projection_doc();
    doc["version"] = json!("v2");
    assert!(issues(&doc.to_string()).iter().any(|(p, _)| p == "/version"));
}

#[test]
fn fixture_round_trips() {
    let s = runner::parse_scenario(FIXTURE).unwrap();
    assert_eq!((s.name.as_str(), s.seed, s.checks.len()), ("km_full", 7, 3));
    let CheckSpec::RNormal(q) = &s.checks[0].spec else { panic!("first check is a rated normal") };
    assert!(matches!(q.family.kind, FamilyKind::KmParabolaEpigraphs { m } if m == 4.0));
    assert_eq!(q.radii, vec![1e-2, 1e-3, 1e-4]);
    assert!(matches!(q.selection, SelectionSpec::K0 { m, alpha } if m == 4.0 && alpha == 0.1));
    let RateLaw::Power { exponent, .. } = q.rate.law;
    assert!((1.0 - exponent - 0.1).abs() < 1e-15);
    let k0: Vec<usize> = q.selection.resolve(&q.radii).unwrap().sets.iter().map(Vec::len).collect();
    assert_eq!(k0, vec![8, 27, 90]);
    let again = runner::parse_scenario(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(again, s);
}

#[test]
fn report_json_round_trips() {
    let s = runner::parse_scenario(&projection_doc().to_string()).unwrap();
    let report = runner::run_scenario(&s, &RunOptions::default()).unwrap();
    let text = runner::render_json(&report);
    let back = runner::parse_report(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(runner::render_json(&back), text);
}

fn arb_json() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(|v| json!(v)),
        (-1e6f64..1e6).prop_map(|v| json!(v)),
        prop_oneof![Just(-1.0), Just(0.0), Just(1.0), Just(1e300)].prop_map(|v: f64| json!(v)),
        "[a-z_]{0,12}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 16, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::btree_map("[a-z_]{1,8}", inner, 0..4).prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

/// Walks `path` through the document and replaces (or removes) what it lands on.
fn mutate(cur: &mut Value, path: &[usize], replacement: Option<Value>) {
    let Some((&sel, rest)) = path.split_first() else {
        if let Some(v) = replacement {
            *cur = v;
        }
        return;
    };
    match cur {
        Value::Object(m) if !m.is_empty() => {
            let key = m.keys().nth(sel % m.len()).unwrap().clone();
            if rest.is_empty() && replacement.is_none() {
                m.remove(&key);
            } else {
                mutate(m.get_mut(&key).unwrap(), rest, replacement);
            }
        }
        Value::Array(a) if !a.is_empty() => {
            let i = sel % a.len();
            if rest.is_empty() && replacement.is_none() {
                a.remove(i);
            } else {
                mutate(&mut a[i], rest, replacement);
            }
        }
        _ => mutate(cur, &[], replacement),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn malformed_scenarios_never_panic(
        path in prop::collection::vec(any::<usize>(), 1..8),
        replacement in prop::option::of(arb_json()),
        builtin in any::<bool>(),
    ) {
        let mut doc: Value = if builtin {
            serde_json::to_value(runner::builtin("sip_demo").unwrap()).unwrap()
        } else {
            serde_json::from_str(FIXTURE).unwrap()
        };
        mutate(&mut doc, &path, replacement);
        match runner::scenario_from_value(&doc) {
            Ok(s) => prop_assert!(s.validate().is_ok()),
            Err(Error::Schema(v)) => prop_assert!(!v.is_empty()),
            Err(e) => prop_assert!(false, "unstructured error {e}"),
        }
    }

    #[test]
    fn arbitrary_text_never_panics(text in ".{0,200}") {
        let _ = runner::parse_scenario(&text);
    }
}
