use serde_json::Value;
use slq_web::{estimate_decay_json, plan_curves_json, ritz_nodes_json};

#[test]
fn curves_cover_the_grid_and_optimized_is_cheaper() {
    let v: Value = serde_json::from_str(&plan_curves_json(500, 0.5, 0.1).unwrap()).unwrap();
    let (rel, opt) = (
        v["relative"].as_array().unwrap(),
        v["optimized"].as_array().unwrap(),
    );
    assert_eq!((rel.len(), opt.len()), (20, 20));
    for (a, b) in rel.iter().zip(opt) {
        assert!(b["mvm"].as_u64() < a["mvm"].as_u64());
    }
    assert_eq!(rel[9]["m"], 18);
    assert_eq!(rel[9]["N"], 7190);
}

#[test]
fn case_one_nodes_are_symmetric() {
    let v: Value = serde_json::from_str(&ritz_nodes_json(1, 9).unwrap()).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 10);
    assert_eq!(v["symmetric"], true);
    assert_eq!(v["masses"].as_array().unwrap().len(), 50);
    assert!(ritz_nodes_json(4, 9).is_err());
    assert!(ritz_nodes_json(9, 9).is_err());
}

#[test]
fn estimate_is_deterministic() {
    let a = estimate_decay_json(300, 1.0, 0.99, 15, 50, 4).unwrap();
    assert_eq!(a, estimate_decay_json(300, 1.0, 0.99, 15, 50, 4).unwrap());
    let v: Value = serde_json::from_str(&a).unwrap();
    assert!(v["rel_err"].as_f64().unwrap() < 0.05);
    assert_eq!(v["mvm_total"], 50 * 16);
}
