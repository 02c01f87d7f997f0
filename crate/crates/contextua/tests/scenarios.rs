use contextua::bundled::ALL;
use contextua::scenario::{parse_scenario, Scenario};
use contextua::{run, Options, RunError};

#[test]
fn bundled_scenarios_round_trip() {
    for (name, text) in ALL {
        let first = parse_scenario(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let emitted = first.to_pretty_string();
        let second = parse_scenario(&emitted).unwrap();
        assert_eq!(first, second, "{name}");
        assert_eq!(emitted, second.to_pretty_string(), "{name}");
    }
}

#[test]
fn bundled_scenarios_have_expected_kinds() {
    let kinds: Vec<&str> = ALL.iter().map(|(_, t)| parse_scenario(t).unwrap().kind()).collect();
    assert_eq!(kinds.iter().filter(|k| **k == "single").count(), 3);
    assert_eq!(kinds.iter().filter(|k| **k == "bipartite").count(), 3);
}

#[test]
fn expressions_are_kept_on_emit() {
    let doc = r#"{"kind":"single","name":"h","dim":2,
        "rays":[["1/sqrt(2)","1/sqrt(2)"],["1/sqrt(2)","-1/sqrt(2)"]],"contexts":[[0,1]]}"#;
    let s = parse_scenario(doc).unwrap();
    let out = s.to_pretty_string();
    assert!(out.contains("\"1/sqrt(2)\""));
    assert!(out.contains("\"-1/sqrt(2)\""));
    match parse_scenario(&out).unwrap() {
        Scenario::Single(t) => {
            let v = t.catalog.ray(0);
            assert!((v.vector()[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16);
        }
        Scenario::Bipartite(_) => panic!("kind changed"),
    }
}

fn error_path(doc: &str) -> String {
    parse_scenario(doc).unwrap_err().path
}

#[test]
fn errors_point_at_the_offending_field() {
    let head = r#"{"kind":"single","name":"x","dim":3,"#;
    assert_eq!(error_path(&format!(r#"{head}"rays":[[1,0,0],[0,1]],"contexts":[]}}"#)), "$.rays[1]");
    assert_eq!(error_path(&format!(r#"{head}"rays":[[1,0,0],[0,0,0]],"contexts":[]}}"#)), "$.rays[1]");
    assert_eq!(error_path(&format!(r#"{head}"rays":[[1,0,0],[0,"x",0]],"contexts":[]}}"#)), "$.rays[1][1]");
    assert_eq!(error_path(&format!(r#"{head}"rays":[[1,0,0],[0,1,0]],"contexts":[[0,5]]}}"#)), "$.contexts[0][1]");
    assert_eq!(error_path(&format!(r#"{head}"rays":[[1,0,0],[0,1,0]],"contexts":[[0,0]]}}"#)), "$.contexts[0][1]");
    assert_eq!(error_path(&format!(r#"{head}"rays":[[1,0,0],[1,1,0]],"contexts":[[0,1]]}}"#)), "$.contexts[0]");
    assert!(error_path(r#"{"kind":"single","name":"x","dim":3"#).starts_with('$'));
    let e = parse_scenario(&format!(r#"{head}"rays":[[1,0,0],[1,1e-8,0]],"contexts":[]}}"#)).unwrap_err();
    assert!(e.message.contains("nearly duplicates"));
}

#[test]
fn library_run_matches_verdicts() {
    let opts = Options::default();
    let r = run("ks-check", contextua::bundled::C4_CABELLO18, &opts).unwrap();
    assert_eq!(r.verdict, "non_colorable");
    assert_eq!(r.exit_code(), 2);
    assert!(matches!(run("nope", contextua::bundled::C3_MUB, &opts), Err(RunError::UnknownCommand(_))));
}
