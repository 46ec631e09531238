use serde_json::Value;
use wigfluct_web::{histogram_json, pairings_json, phi2_json};

#[test]
fn pairing_viewer_lists_kreweras_cycles() {
    let v: Value = serde_json::from_str(&pairings_json(2, 2).unwrap()).unwrap();
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 2);
    assert_eq!(list[0]["label"], "(1,3)(2,4)");
    assert_eq!(list[0]["through"], 2);
    assert_eq!(list[0]["through_cycles"].as_array().unwrap().len(), 2);
    assert!(pairings_json(0, 2).is_err());
    assert!(pairings_json(10, 4).is_err());
}

#[test]
fn explorer_terms_add_up() {
    let v: Value = serde_json::from_str(&phi2_json("x1 x1", "x1 x1", 0.5, 1.0, 1.0, 16).unwrap()).unwrap();
    let sum: f64 = ["s1", "s2", "s3", "s4"].iter().map(|k| v[k].as_f64().unwrap()).sum();
    assert!((sum - v["total_re"].as_f64().unwrap()).abs() < 1e-12);
    // 2 + 2k₄ + 2θ²
    assert!((sum - 4.5).abs() < 1e-12);
    assert!(phi2_json("x2 a0", "x1", 0.0, 1.0, 0.0, 16).is_err());
    assert!(phi2_json("x1 a7", "x1", 0.0, 1.0, 0.0, 16).is_err());
    assert!(phi2_json("x1", "x1", 2.0, 1.0, 0.0, 16).is_err());
}

#[test]
fn histogram_variance_matches_theory() {
    let v: Value = serde_json::from_str(&histogram_json("x1 a1 x1 a1", "goe", 100, 1000, 3).unwrap()).unwrap();
    let theory = v["theory_variance"].as_f64().unwrap();
    let sample = v["sample_variance"].as_f64().unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 1000);
    assert!((sample / theory - 1.0).abs() < 0.2, "{sample} vs {theory}");
    assert!(histogram_json("x1", "nope", 10, 10, 1).is_err());
    assert!(histogram_json("x1", "gue", 10, 1, 1).is_err());
}
