mod common;

use std::collections::BTreeMap;

use common::*;
use quilt_core::chipspec::{is_native, ChipSpecification, NativeStatus};
use quilt_core::cfg::Edge;
use quilt_core::ir::{Gate, Op};
use quilt_core::pipeline::{front_end, run_pipeline, CompileConfig, CompileOutput, Stage};
use quilt_core::sim::{verify_block, VerifyMode};

const BRANCHY: &str = "DECLARE ro BIT
H 0
CNOT 0 2
MEASURE 0 ro
JUMP-WHEN @skip ro
X 1
CNOT 2 1
CNOT 1 0
LABEL @skip
CNOT 2 0
H 3
CNOT 3 1
";

const LOOP: &str = "DECLARE ro BIT
LABEL @top
CNOT 0 3
CNOT 1 3
MEASURE 3 ro
JUMP-WHEN @top ro
CNOT 2 0
";

fn gates(ops: &[Op]) -> Vec<Gate> {
    ops.iter().filter_map(Op::as_gate).cloned().collect()
}

/// Basis state with a 1 on exactly the physical qubit `p`.
fn one_hot(p: usize, reg: &[usize]) -> usize {
    let i = reg.iter().position(|&q| q == p).unwrap();
    1 << (reg.len() - 1 - i)
}

fn check_all_blocks(src: &str, out: &CompileOutput, chip: &ChipSpecification) {
    let (_, graph) = front_end(src).unwrap();
    assert_eq!(graph.blocks.len(), out.blocks.len());
    for (i, (block, res)) in graph.blocks.iter().zip(&out.blocks).enumerate() {
        for g in gates(&res.body).iter().chain(&gates(&res.taken_fixup)).chain(&gates(&res.fallthrough_fixup)) {
            assert_eq!(is_native(chip, g), NativeStatus::Native, "block {i}: {g}");
        }
        // the gates before any measurement implement their source
        let cut = |ops: &[Op]| ops.iter().take_while(|o| o.as_gate().is_some()).count();
        if cut(&block.ops) == block.ops.len() && cut(&res.body) == res.body.len() {
            let ok = verify_block(&gates(&block.ops), &gates(&res.body), &res.entry, &res.permutation, VerifyMode::Unitary, 1e-7);
            assert!(ok.unwrap(), "block {i} differs from its source");
        }
        // fix-ups carry each logical qubit from this exit to the successor's entry
        for (j, edge) in graph.successors(i) {
            let fix = gates(match edge {
                Edge::Taken => &res.taken_fixup,
                Edge::Fallthrough => &res.fallthrough_fixup,
            });
            let target = &out.blocks[j].entry;
            let reg: Vec<usize> = chip.qubit_ids().collect();
            let u = oracle_unitary(&fix, &reg);
            for (l, p) in res.exit.pairs() {
                let q = target.physical(l).expect("successor places every logical qubit");
                let amp = u[(one_hot(q, &reg), one_hot(p, &reg))].norm();
                assert!((amp - 1.0).abs() < 1e-7, "edge {i}->{j} loses logical {l}");
            }
        }
    }
}

#[test]
fn branches_and_fixups_line_up() {
    let chip = ChipSpecification::with_defaults(4, &line(4));
    let out = run_pipeline(BRANCHY, &chip, &CompileConfig::default()).unwrap();
    assert!(out.text.contains("LABEL @skip"));
    assert!(out.text.contains("JUMP-WHEN @skip ro"));
    check_all_blocks(BRANCHY, &out, &chip);
    quilt_core::frontend::parse_program(&out.text).unwrap();
}

#[test]
fn loops_return_to_their_entry_placement() {
    let chip = ChipSpecification::with_defaults(4, &line(4));
    let out = run_pipeline(LOOP, &chip, &CompileConfig::default()).unwrap();
    check_all_blocks(LOOP, &out, &chip);
}

#[test]
fn report_counts_are_consistent() {
    let chip = chip(3, &line(3), &["CZ"]);
    let out = run_pipeline("H 0\nCNOT 0 2\nCCNOT 0 1 2\n", &chip, &CompileConfig::default()).unwrap();
    let r = &out.report;
    assert_eq!(r.gate_counts.values().sum::<usize>(), r.instruction_count);
    assert_eq!(r.gate_counts.get("CZ").copied().unwrap_or(0), r.two_qubit_count);
    assert!(r.depth <= r.instruction_count && r.depth > 0);
    assert_eq!(r.blocks, 1);
    assert!(serde_json::to_string(r).unwrap().contains("\"two_qubit_count\""));
}

#[test]
fn naive_rewiring_keeps_the_identity_placement() {
    let chip = ChipSpecification::with_defaults(5, &line(5));
    let cfg = CompileConfig { naive_rewiring: true, ..CompileConfig::default() };
    let out = run_pipeline("CNOT 0 4\n", &chip, &cfg).unwrap();
    assert_eq!(out.report.initial_rewiring, BTreeMap::from([(0, 0), (4, 4)]));
    assert!(out.report.swap_count > 0);
    check_all_blocks("CNOT 0 4\n", &out, &chip);
}

#[test]
fn search_modes_agree_on_meaning() {
    let chip = ChipSpecification::with_defaults(5, &ring(5));
    let src = "CNOT 0 1\nCNOT 0 2\nCNOT 0 3\nCNOT 0 4\nCNOT 1 3\n";
    for search in ["greedy", "a-star"] {
        let cfg = CompileConfig { search: Some(search.parse().unwrap()), ..CompileConfig::default() };
        let out = run_pipeline(src, &chip, &cfg).unwrap();
        check_all_blocks(src, &out, &chip);
    }
}

#[test]
fn errors_name_their_stage() {
    let chip = ChipSpecification::with_defaults(2, &line(2));
    let e = run_pipeline("H 0\nFOO 1\n", &chip, &CompileConfig::default()).unwrap_err();
    assert_eq!(e.line, Some(2));
    let e = run_pipeline("CCNOT 0 1 2\n", &chip, &CompileConfig::default()).unwrap_err();
    assert_eq!(e.stage, Stage::Address);
    let e = run_pipeline("JUMP @nowhere\n", &chip, &CompileConfig::default()).unwrap_err();
    assert_eq!(e.stage, Stage::Parse);
}

#[test]
fn disconnected_chips_are_rejected() {
    let chip = ChipSpecification::with_defaults(4, &[(0, 1), (2, 3)]);
    assert!(run_pipeline("CNOT 0 1\nCNOT 1 2\nCNOT 2 3\n", &chip, &CompileConfig::default()).is_err());
}

#[test]
fn defgate_and_defcircuit_compile() {
    let src = "DEFGATE SQX:
    0.5+0.5i, 0.5-0.5i
    0.5-0.5i, 0.5+0.5i
DEFCIRCUIT BELL a b:
    H a
    CNOT a b
BELL 0 1
SQX 1
";
    let chip = chip(2, &line(2), &["CZ"]);
    let out = run_pipeline(src, &chip, &CompileConfig::default()).unwrap();
    assert_eq!(out.report.two_qubit_count, 1);
    let env = BTreeMap::new();
    assert!(quilt_core::sim::verify_compiled(src, &out, &env, VerifyMode::Unitary, 1e-7).unwrap());
}
