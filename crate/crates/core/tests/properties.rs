mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use quilt_core::addresser::Rewiring;
use quilt_core::chipspec::{ChipSpecification, CostMode};
use quilt_core::compressor::{compress, DEFAULT_COMPRESSION_LIMIT};
use quilt_core::ir::{Gate, Op};
use quilt_core::pipeline::{run_pipeline, token_swaps, CompileConfig};
use quilt_core::rules::{Registry, RuleContext, SeqCost};
use quilt_core::statesim::{partial_simulate, DEFAULT_ENTANGLEMENT_LIMIT};

fn cz_line() -> ChipSpecification {
    chip(3, &line(3), &["CZ"])
}

/// Native gates on a 3-qubit CZ line.
fn native_gate() -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0..3usize, -4i32..=4, any::<bool>()).prop_map(|(q, k, exact)| {
            let a = if exact { k as f64 * PI / 4.0 } else { k as f64 * 0.37 };
            Gate::rot("RZ", a, &[q])
        }),
        (0..3usize, prop::sample::select(vec![PI / 2.0, -PI / 2.0, PI, -PI])).prop_map(|(q, a)| Gate::rot("RX", a, &[q])),
        (0..2usize, any::<bool>()).prop_map(|(a, flip)| {
            let (x, y) = if flip { (a + 1, a) } else { (a, a + 1) };
            Gate::fixed("CZ", &[x, y])
        }),
    ]
}

/// Arbitrary builtin gates on up to 3 qubits.
fn program_gate() -> impl Strategy<Value = String> {
    let angle = -6.3f64..6.3;
    prop_oneof![
        (prop::sample::select(vec!["H", "X", "Y", "Z", "S", "T"]), 0..3usize).prop_map(|(n, q)| format!("{n} {q}")),
        (prop::sample::select(vec!["RX", "RY", "RZ"]), angle.clone(), 0..3usize).prop_map(|(n, a, q)| format!("{n}({a:?}) {q}")),
        (prop::sample::select(vec!["CNOT", "CZ", "SWAP", "ISWAP"]), 0..3usize, 1..3usize)
            .prop_map(|(n, a, d)| format!("{n} {a} {}", (a + d) % 3)),
        (angle, 0..3usize, 1..3usize).prop_map(|(t, a, d)| format!("CPHASE({t:?}) {a} {}", (a + d) % 3)),
    ]
}

fn gates(ops: &[Op]) -> Vec<Gate> {
    ops.iter().filter_map(Op::as_gate).cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compression_preserves_the_unitary(seq in prop::collection::vec(native_gate(), 0..24)) {
        let c = cz_line();
        let reg = Registry::default();
        let ops: Vec<Op> = seq.iter().cloned().map(Op::Gate).collect();
        let out = gates(&compress(&ops, &RuleContext::new(&c), &reg, DEFAULT_COMPRESSION_LIMIT));
        let d = phase_distance(&oracle_unitary(&seq, &[0, 1, 2]), &oracle_unitary(&out, &[0, 1, 2]));
        prop_assert!(d < 1e-8, "off by {d}");
    }

    #[test]
    fn compression_never_makes_things_worse(seq in prop::collection::vec(native_gate(), 0..24)) {
        let c = cz_line();
        let reg = Registry::default();
        let ops: Vec<Op> = seq.iter().cloned().map(Op::Gate).collect();
        let out = gates(&compress(&ops, &RuleContext::new(&c), &reg, DEFAULT_COMPRESSION_LIMIT));
        let before = SeqCost::of(&seq, &c, CostMode::Duration);
        let after = SeqCost::of(&out, &c, CostMode::Duration);
        prop_assert!(!before.better_than(&after), "{before:?} -> {after:?}");
    }

    #[test]
    fn compression_reaches_a_fixpoint(seq in prop::collection::vec(native_gate(), 0..24)) {
        let c = cz_line();
        let reg = Registry::default();
        let ctx = RuleContext::new(&c);
        let ops: Vec<Op> = seq.into_iter().map(Op::Gate).collect();
        let once = compress(&ops, &ctx, &reg, DEFAULT_COMPRESSION_LIMIT);
        let twice = compress(&once, &ctx, &reg, DEFAULT_COMPRESSION_LIMIT);
        let a = SeqCost::of(&gates(&once), &c, CostMode::Duration);
        let b = SeqCost::of(&gates(&twice), &c, CostMode::Duration);
        prop_assert!(!b.better_than(&a), "second pass improved {a:?} to {b:?}");
    }

    #[test]
    fn rewiring_stays_a_partial_bijection(
        assigns in prop::collection::vec((0..6usize, 0..6usize), 0..6),
        swaps in prop::collection::vec((0..6usize, 0..6usize), 0..12),
    ) {
        let mut rew = Rewiring::new();
        let mut used_l = BTreeSet::new();
        let mut used_p = BTreeSet::new();
        for (l, p) in assigns {
            if used_l.insert(l) && used_p.insert(p) {
                rew.assign(l, p);
            }
        }
        for (a, b) in swaps {
            if a != b {
                rew.swap_physical(a, b);
            }
        }
        let pairs: Vec<(usize, usize)> = rew.pairs().collect();
        let ls: BTreeSet<usize> = pairs.iter().map(|&(l, _)| l).collect();
        let ps: BTreeSet<usize> = pairs.iter().map(|&(_, p)| p).collect();
        prop_assert_eq!(ls.len(), pairs.len());
        prop_assert_eq!(ps.len(), pairs.len());
        for (l, p) in pairs {
            prop_assert_eq!(rew.physical(l), Some(p));
            prop_assert_eq!(rew.logical(p), Some(l));
        }
    }

    #[test]
    fn token_swaps_reach_the_target(perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
        let c = ChipSpecification::with_defaults(6, &line(6));
        let from = Rewiring::identity(0..6);
        let mut to = Rewiring::new();
        for (l, &p) in perm.iter().enumerate() {
            to.assign(l, p);
        }
        let mut at = from.clone();
        for (a, b) in token_swaps(&c, &from, &to).unwrap() {
            prop_assert!(c.adjacent(a, b));
            at.swap_physical(a, b);
        }
        prop_assert_eq!(at, to);
    }

    #[test]
    fn tracked_states_stay_normalized(lines in prop::collection::vec(program_gate(), 1..16)) {
        let src = lines.join("\n");
        let (_, cfg) = quilt_core::pipeline::front_end(&src).unwrap();
        for state in partial_simulate(&cfg.blocks[0].ops, DEFAULT_ENTANGLEMENT_LIMIT).into_iter().flatten() {
            for comp in state.components() {
                let norm: f64 = comp.amplitudes.iter().map(|a| a.norm_sqr()).sum();
                prop_assert!((norm - 1.0).abs() < 1e-9, "norm {norm}");
                prop_assert_eq!(comp.amplitudes.len(), 1 << comp.qubits.len());
            }
        }
    }

    #[test]
    fn compilation_is_deterministic(lines in prop::collection::vec(program_gate(), 1..12)) {
        let src = lines.join("\n");
        let c = cz_line();
        let a = run_pipeline(&src, &c, &CompileConfig::default()).unwrap();
        let b = run_pipeline(&src, &c, &CompileConfig::default()).unwrap();
        prop_assert_eq!(a.text, b.text);
    }
}
