mod common;

use std::f64::consts::PI;

use common::*;
use quilt_core::chipspec::{is_native, NativeStatus, ParamPattern};
use quilt_core::frontend::ParamExpr;
use quilt_core::ir::Gate;
use quilt_core::rules::{nativize_gate, Registry, RuleClass, RuleContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn apply(reg: &Registry, rule: &str, window: &[Gate], chip: &quilt_core::chipspec::ChipSpecification) -> Option<Vec<Gate>> {
    reg.get(rule).unwrap().apply(window, &RuleContext::new(chip))
}

fn shown(gates: &[Gate]) -> Vec<String> {
    gates.iter().map(|g| g.to_string()).collect()
}

#[test]
fn classification_examples() {
    let reg = Registry::default();
    let rz_rx = chip(2, &[(0, 1)], &["CZ"]);
    let classes = reg.classify(&rz_rx);
    assert_eq!(classes["euler-zyz"], RuleClass::Nativizer);
    assert_eq!(classes["agglutinate-RZs"], RuleClass::Optimizer);
    assert_eq!(classes["CCNOT-to-CNOT"], RuleClass::Nativizer);
    assert_eq!(classes["CNOT-to-CZ"], RuleClass::Nativizer);

    let cphase_chip = quilt_core::chipspec::ChipSpecification::uniform(
        &[0, 1],
        &[(0, 1)],
        vec![
            record("RZ", vec![ParamPattern::Wildcard], 1),
            record("RY", vec![ParamPattern::Wildcard], 1),
        ],
        entangler_records(&["CPHASE"]),
    );
    let classes = reg.classify(&cphase_chip);
    assert_eq!(classes["eliminate-full-CPHASE"], RuleClass::Optimizer);
    assert_eq!(classes["agglutinate-RZs"], RuleClass::Optimizer);
}

#[test]
fn agglutinate_examples() {
    let reg = Registry::default();
    let c = chip(2, &[(0, 1)], &["CZ"]);
    let out = apply(&reg, "agglutinate-RZs", &[Gate::rot("RZ", -PI, &[0]), Gate::rot("RZ", PI, &[0])], &c).unwrap();
    assert_eq!(shown(&out), ["RZ(0) 0"]);
    let a = ParamExpr::var("a");
    let w = [
        Gate::new("RZ", vec![a.clone()], vec![0]),
        Gate::new("RZ", vec![a * 0.5], vec![0]),
    ];
    assert_eq!(shown(&apply(&reg, "agglutinate-RZs", &w, &c).unwrap()), ["RZ(1.5*a) 0"]);
    assert!(apply(&reg, "agglutinate-RZs", &[Gate::rot("RZ", 0.3, &[0]), Gate::rot("RZ", 0.4, &[1])], &c).is_none());
}

#[test]
fn full_cphase_examples() {
    let reg = Registry::default();
    let c = chip(2, &[(0, 1)], &["CPHASE"]);
    let rule = "eliminate-full-CPHASE";
    assert_eq!(apply(&reg, rule, &[Gate::rot("CPHASE", 2.0 * PI, &[1, 0])], &c), Some(vec![]));
    assert_eq!(apply(&reg, rule, &[Gate::rot("CPHASE", 0.0, &[0, 1])], &c), Some(vec![]));
    let t = Gate::new("CPHASE", vec![ParamExpr::var("t")], vec![0, 1]);
    assert!(apply(&reg, rule, &[t], &c).is_none());
    assert!(apply(&reg, rule, &[Gate::rot("CPHASE", 1.0, &[0, 1])], &c).is_none());
}

#[test]
fn ccnot_listing() {
    let reg = Registry::default();
    let c = chip(3, &line(3), &["CZ"]);
    let out = apply(&reg, "CCNOT-to-CNOT", &[Gate::fixed("CCNOT", &[0, 1, 2])], &c).unwrap();
    let expected = [
        "H 2",
        "CNOT 1 2",
        "RZ(-pi/4) 2",
        "CNOT 0 2",
        "RZ(pi/4) 2",
        "CNOT 1 2",
        "RZ(-pi/4) 2",
        "CNOT 0 2",
        "RZ(pi/4) 1",
        "RZ(pi/4) 2",
        "CNOT 0 1",
        "H 2",
        "RZ(pi/4) 0",
        "RZ(-pi/4) 1",
        "CNOT 0 1",
    ];
    assert_eq!(shown(&out), expected);
    assert_eq!(out.iter().filter(|g| g.name == "CNOT").count(), 6);
    let u = oracle_unitary(&out, &[0, 1, 2]);
    assert!(equiv(&u, &oracle_gate(&Gate::fixed("CCNOT", &[0, 1, 2])), 1e-12));
    assert!(apply(&reg, "CCNOT-to-CNOT", &[Gate::fixed("CNOT", &[0, 1])], &c).is_none());
}

#[test]
fn commute_rz_through_cz() {
    let reg = Registry::default();
    let c = chip(2, &[(0, 1)], &["CZ"]);
    let w = [Gate::rot("RZ", 0.7, &[0]), Gate::fixed("CZ", &[0, 1])];
    let out = apply(&reg, "commute-RZ-through-CZ", &w, &c).unwrap();
    assert_eq!(shown(&out), ["CZ 0 1", "RZ(0.7) 0"]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let a = rng.gen_range(-PI..PI);
        let w = [Gate::rot("RZ", a, &[1]), Gate::fixed("CZ", &[0, 1])];
        let out = apply(&reg, "commute-RZ-through-CZ", &w, &c).unwrap();
        let (x, y) = (oracle_unitary(&w, &[0, 1]), oracle_unitary(&out, &[0, 1]));
        assert!((x - y).iter().all(|d| d.norm() < 1e-14));
    }
    let w = [Gate::rot("RZ", 0.7, &[2]), Gate::fixed("CZ", &[0, 1])];
    assert!(apply(&reg, "commute-RZ-through-CZ", &w, &c).is_none());
}

#[test]
fn cnot_on_a_two_qubit_cz_chip() {
    let reg = Registry::default();
    let c = quilt_core::chipspec::ChipSpecification::uniform(
        &[4, 5],
        &[(4, 5)],
        vec![
            record("RX", vec![ParamPattern::Fixed(PI / 2.0)], 1),
            record("RZ", vec![ParamPattern::Wildcard], 1),
        ],
        entangler_records(&["CZ"]),
    );
    let g = Gate::fixed("CNOT", &[5, 4]);
    let out = nativize_gate(&g, &RuleContext::new(&c), &reg).unwrap();
    for x in &out {
        assert_eq!(is_native(&c, x), NativeStatus::Native, "{x}");
    }
    assert_eq!(out.iter().filter(|x| x.name == "CZ").count(), 1);
    assert!(equiv(&oracle_unitary(&out, &[4, 5]), &oracle_unitary(&[g], &[4, 5]), 1e-8));
}

#[test]
fn symbolic_cphase_template() {
    let reg = Registry::default();
    let c = chip(2, &[(0, 1)], &["CZ"]);
    let g = Gate::new("CPHASE", vec![ParamExpr::var("t") * (1.0 / 3.0)], vec![0, 1]);
    let out = nativize_gate(&g, &RuleContext::new(&c), &reg).unwrap();
    let text = shown(&out);
    assert_eq!(out.len(), 10, "{text:?}");
    for needle in ["RZ(-t/6)", "RZ(t/6)", "RZ(pi/2 + t/6)"] {
        assert!(text.iter().any(|s| s.starts_with(needle)), "{needle} missing from {text:?}");
    }
    for t in [-2.0, -0.7, 0.0, 0.4, 1.1, 2.5, 3.0, 4.4, 6.0, 9.1] {
        let env = [("t".to_string(), t)].into_iter().collect();
        let bound: Vec<Gate> = out
            .iter()
            .map(|x| Gate::new(&x.name, x.params.iter().map(|p| p.substitute(&env)).collect(), x.qubits.clone()))
            .collect();
        let want = Gate::rot("CPHASE", t / 3.0, &[0, 1]);
        assert!(equiv(&oracle_unitary(&bound, &[0, 1]), &oracle_gate(&want), 1e-8));
    }
}

#[test]
fn native_gate_passes_through() {
    let reg = Registry::default();
    let c = chip(1, &[], &[]);
    let g = Gate::rot("RZ", 0.3, &[0]);
    assert_eq!(nativize_gate(&g, &RuleContext::new(&c), &reg).unwrap(), vec![g]);
}

#[test]
fn disabled_rules_are_skipped() {
    let mut reg = Registry::default();
    assert!(reg.disable("kak"));
    assert!(!reg.disable("no-such-rule"));
    assert!(reg.get("kak").is_none());
    assert!(reg.is_known("kak"));
    assert!(!reg.classify(&chip(2, &[(0, 1)], &["CZ"])).contains_key("kak"));
}
