use algograph_demo::{chunk_plan_json, cost_curve_json, error_curve_json, mock_profiles};
use serde_json::Value;

const LINEAR: &str = r#"{"kind":"compute-bound-linear","c_pre":1.0,"c_dec":0.0}"#;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn cost_curve_finds_latency_optimum() {
    let v = parse(&cost_curve_json("counting", 200, "4", 0, LINEAR).unwrap());
    assert_eq!(v["decomposition"], "disjoint");
    assert_eq!(v["points"].as_array().unwrap().len(), 200);
    assert_eq!(v["best_latency"]["m"], 50);
    assert_eq!(v["best_latency"]["value"], 50.0);
    let m67 = v["points"].as_array().unwrap().iter().find(|p| p["m"] == 67).unwrap();
    assert_eq!((m67["k"].as_u64(), m67["latency"].as_f64()), (Some(3), Some(67.0)));
}

#[test]
fn cost_curve_uses_even_sizes_for_overlap() {
    let v = parse(&cost_curve_json("retrieval", 1000, "inf", 10, LINEAR).unwrap());
    assert_eq!(v["decomposition"], "overlapping");
    assert!(v["points"].as_array().unwrap().iter().all(|p| p["m"].as_u64().unwrap() % 2 == 0));
}

#[test]
fn cost_curve_rejects_bad_input() {
    assert!(cost_curve_json("counting", 0, "4", 0, LINEAR).is_err());
    assert!(cost_curve_json("juggling", 10, "4", 0, LINEAR).is_err());
    assert!(cost_curve_json("counting", 10, "0", 0, LINEAR).is_err());
    assert!(cost_curve_json("counting", 10, "4", 0, r#"{"kind":"free"}"#).is_err());
}

#[test]
fn chunk_plan_layouts() {
    let v = parse(&chunk_plan_json(10, 4, true).unwrap());
    assert_eq!(v["k"], 4);
    assert_eq!(v["segments"], parse("[[0,4],[2,4],[4,4],[6,4]]"));
    let v = parse(&chunk_plan_json(10, 4, false).unwrap());
    assert_eq!(v["segments"], parse("[[0,4],[4,4],[8,2]]"));
    let v = parse(&chunk_plan_json(10, 20, false).unwrap());
    assert_eq!(v["k"], 1);
    assert!(v["note"].is_string());
    assert!(chunk_plan_json(10, 1, true).is_err());
}

#[test]
fn error_curve_is_zero_for_exact_mock() {
    let v = parse(&error_curve_json("retrieval", 3000, "[200, 1000, 3000]", "exact", 5, 1).unwrap());
    let points = v.as_array().unwrap();
    assert_eq!(points.len(), 3);
    assert!(points.iter().all(|p| p["mean"] == 0.0));
    let v = parse(&error_curve_json("rag", 3000, "[1000]", "exact", 3, 1).unwrap());
    assert_eq!(v[0]["mean"], 0.0);
}

#[test]
fn error_curve_is_seeded() {
    let a = error_curve_json("retrieval", 4000, "[400, 4000]", "default", 10, 9).unwrap();
    assert_eq!(a, error_curve_json("retrieval", 4000, "[400, 4000]", "default", 10, 9).unwrap());
    assert!(error_curve_json("counting", 4000, "[400]", "exact", 1, 0).is_err());
    assert!(error_curve_json("retrieval", 4000, "[10]", "exact", 1, 0).is_err());
    assert!(error_curve_json("retrieval", 4000, "[400]", "nope", 1, 0).is_err());
}

#[test]
fn lists_profiles() {
    assert_eq!(parse(&mock_profiles()), parse(r#"["exact","default","type1","type2"]"#));
}
