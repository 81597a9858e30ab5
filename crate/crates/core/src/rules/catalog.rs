//! The shipped rules.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::nativize::{native_1q, resynthesize_2q};
use super::{RewriteRule, RuleContext, SeqCost, Shape};
use crate::chipspec::ChipSpecification;
use crate::frontend::ParamExpr;
use crate::ir::Gate;
use crate::linalg::{generic::generic_lower, gate_matrix, sequence_matrix};
use crate::statesim;

/// Concrete angles within this distance of a multiple of 2π count as zero.
pub const ZERO_ANGLE_TOL: f64 = 1e-10;

/// The registry's default contents, in priority order.
pub fn catalog() -> Vec<Box<dyn RewriteRule>> {
    vec![
        Box::new(Agglutinate { name: "agglutinate-RZs", gate: "RZ" }),
        Box::new(Agglutinate { name: "agglutinate-RXs", gate: "RX" }),
        Box::new(Agglutinate { name: "agglutinate-RYs", gate: "RY" }),
        Box::new(EliminateZeroRotation),
        Box::new(EliminateFullCphase),
        Box::new(CommuteThrough { name: "commute-RZ-through-CZ", two_qubit: "CZ" }),
        Box::new(CommuteThrough { name: "commute-diagonal-through-CPHASE", two_qubit: "CPHASE" }),
        Box::new(CnotToCz),
        Box::new(CzToCnot),
        Box::new(SwapToCnots),
        Box::new(CphaseToCz),
        Box::new(CcnotToCnot),
        Box::new(EulerZyz),
        Box::new(Kak),
        Box::new(GenericSynthesis),
        Box::new(FuseTwoQubitBlock),
        Box::new(ElideOnEigenvector),
        Box::new(StatePrep),
    ]
}

fn rot(name: &str, p: impl Into<ParamExpr>, q: usize) -> Gate {
    Gate::new(name, vec![p.into()], vec![q])
}

fn is_zero_mod_2pi(x: f64) -> bool {
    let r = x.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r) < ZERO_ANGLE_TOL
}

/// Single-qubit gates diagonal in the computational basis.
pub fn is_diagonal_1q(g: &Gate) -> bool {
    g.arity() == 1
        && match &g.matrix {
            Some(m) => m.get(0, 1).norm() < 1e-12 && m.get(1, 0).norm() < 1e-12,
            None => matches!(g.name.as_str(), "RZ" | "Z" | "S" | "T" | "I"),
        }
}

struct Agglutinate {
    name: &'static str,
    gate: &'static str,
}

impl RewriteRule for Agglutinate {
    fn name(&self) -> &'static str {
        self.name
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Named(self.gate, 1)], vec![Shape::Named(self.gate, 1)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::Named(self.gate, 1)]
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(1)
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [a, b] if a.name == self.gate
                && b.name == self.gate
                && a.matrix.is_none()
                && b.matrix.is_none()
                && a.qubits == b.qubits =>
            {
                Some(vec![rot(self.gate, a.params[0].clone() + b.params[0].clone(), a.qubits[0])])
            }
            _ => None,
        }
    }
}

struct EliminateZeroRotation;

impl RewriteRule for EliminateZeroRotation {
    fn name(&self) -> &'static str {
        "eliminate-zero-rotation"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Named("RX", 1), Shape::Named("RY", 1), Shape::Named("RZ", 1)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        Vec::new()
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(0)
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if matches!(g.name.as_str(), "RX" | "RY" | "RZ")
                && g.matrix.is_none()
                && g.param(0).is_some_and(is_zero_mod_2pi) =>
            {
                Some(Vec::new())
            }
            _ => None,
        }
    }
}

struct EliminateFullCphase;

impl RewriteRule for EliminateFullCphase {
    fn name(&self) -> &'static str {
        "eliminate-full-CPHASE"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Named("CPHASE", 2)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        Vec::new()
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(0)
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if g.name == "CPHASE" && g.matrix.is_none() && g.param(0).is_some_and(is_zero_mod_2pi) => {
                Some(Vec::new())
            }
            _ => None,
        }
    }
}

/// Move a diagonal single-qubit gate later, past a diagonal two-qubit gate.
struct CommuteThrough {
    name: &'static str,
    two_qubit: &'static str,
}

impl RewriteRule for CommuteThrough {
    fn name(&self) -> &'static str {
        self.name
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![
            vec![Shape::Named("RZ", 1), Shape::Named("Z", 1), Shape::Named("S", 1), Shape::Named("T", 1)],
            vec![Shape::Named(self.two_qubit, 2)],
        ]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::Named(self.two_qubit, 2), Shape::Named("RZ", 1)]
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(2)
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [d, g] if is_diagonal_1q(d)
                && g.name == self.two_qubit
                && g.matrix.is_none()
                && g.acts_on(d.qubits[0]) =>
            {
                Some(vec![g.clone(), d.clone()])
            }
            _ => None,
        }
    }
}

struct CnotToCz;

impl RewriteRule for CnotToCz {
    fn name(&self) -> &'static str {
        "CNOT-to-CZ"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Named("CNOT", 2)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::Named("Z", 1), Shape::Named("RY", 1), Shape::Named("CZ", 2)]
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(5)
    }
    fn is_template(&self) -> bool {
        true
    }
    fn is_total(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if g.name == "CNOT" && g.matrix.is_none() => {
                let (c, t) = (g.qubits[0], g.qubits[1]);
                Some(vec![
                    Gate::fixed("Z", &[t]),
                    rot("RY", FRAC_PI_2, t),
                    Gate::fixed("CZ", &[c, t]),
                    rot("RY", -FRAC_PI_2, t),
                    Gate::fixed("Z", &[t]),
                ])
            }
            _ => None,
        }
    }
}

struct CzToCnot;

impl RewriteRule for CzToCnot {
    fn name(&self) -> &'static str {
        "CZ-to-CNOT"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Named("CZ", 2)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::Named("H", 1), Shape::Named("CNOT", 2)]
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(3)
    }
    fn is_template(&self) -> bool {
        true
    }
    fn is_total(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if g.name == "CZ" && g.matrix.is_none() => {
                let (c, t) = (g.qubits[0], g.qubits[1]);
                Some(vec![Gate::fixed("H", &[t]), Gate::fixed("CNOT", &[c, t]), Gate::fixed("H", &[t])])
            }
            _ => None,
        }
    }
}

struct SwapToCnots;

impl RewriteRule for SwapToCnots {
    fn name(&self) -> &'static str {
        "SWAP-to-CNOTs"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Named("SWAP", 2)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::Named("CNOT", 2)]
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(3)
    }
    fn is_template(&self) -> bool {
        true
    }
    fn is_total(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if g.name == "SWAP" && g.matrix.is_none() => {
                let (a, b) = (g.qubits[0], g.qubits[1]);
                Some(vec![
                    Gate::fixed("CNOT", &[a, b]),
                    Gate::fixed("CNOT", &[b, a]),
                    Gate::fixed("CNOT", &[a, b]),
                ])
            }
            _ => None,
        }
    }
}

/// `CPHASE(θ)` with two CZs, valid for symbolic `θ`.
struct CphaseToCz;

impl RewriteRule for CphaseToCz {
    fn name(&self) -> &'static str {
        "CPHASE-to-CZ"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Named("CPHASE", 2)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::Named("RZ", 1), Shape::Named("RX", 1), Shape::Named("CZ", 2)]
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(10)
    }
    fn is_template(&self) -> bool {
        true
    }
    fn is_total(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if g.name == "CPHASE" && g.matrix.is_none() => {
                let (p, q) = (g.qubits[0], g.qubits[1]);
                let half = g.params[0].clone() * 0.5;
                Some(vec![
                    rot("RZ", -FRAC_PI_2, q),
                    rot("RX", FRAC_PI_2, q),
                    Gate::fixed("CZ", &[q, p]),
                    rot("RX", -FRAC_PI_2, q),
                    rot("RZ", -half.clone(), q),
                    rot("RX", FRAC_PI_2, q),
                    Gate::fixed("CZ", &[q, p]),
                    rot("RZ", half.clone(), p),
                    rot("RX", -FRAC_PI_2, q),
                    rot("RZ", half + FRAC_PI_2, q),
                ])
            }
            _ => None,
        }
    }
}

struct CcnotToCnot;

impl RewriteRule for CcnotToCnot {
    fn name(&self) -> &'static str {
        "CCNOT-to-CNOT"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Named("CCNOT", 3)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::Named("H", 1), Shape::Named("CNOT", 2), Shape::Named("RZ", 1)]
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(15)
    }
    fn is_template(&self) -> bool {
        true
    }
    fn is_total(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        let [g] = w else { return None };
        if g.name != "CCNOT" || g.matrix.is_some() {
            return None;
        }
        let (q0, q1, q2) = (g.qubits[0], g.qubits[1], g.qubits[2]);
        let cnot = |a, b| Gate::fixed("CNOT", &[a, b]);
        Some(vec![
            Gate::fixed("H", &[q2]),
            cnot(q1, q2),
            rot("RZ", -FRAC_PI_4, q2),
            cnot(q0, q2),
            rot("RZ", FRAC_PI_4, q2),
            cnot(q1, q2),
            rot("RZ", -FRAC_PI_4, q2),
            cnot(q0, q2),
            rot("RZ", FRAC_PI_4, q1),
            rot("RZ", FRAC_PI_4, q2),
            cnot(q0, q1),
            Gate::fixed("H", &[q2]),
            rot("RZ", FRAC_PI_4, q0),
            rot("RZ", -FRAC_PI_4, q1),
            cnot(q0, q1),
        ])
    }
}

/// Single-qubit nativizer built on Euler decompositions.
struct EulerZyz;

impl RewriteRule for EulerZyz {
    fn name(&self) -> &'static str {
        "euler-zyz"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Any(1)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::ChipNative]
    }
    fn max_output_len(&self) -> Option<usize> {
        None
    }
    fn is_total(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], ctx: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if g.arity() == 1 => native_1q(g, ctx),
            _ => None,
        }
    }
}

/// Two-qubit nativizer: canonical decomposition with the link's entanglers.
struct Kak;

impl RewriteRule for Kak {
    fn name(&self) -> &'static str {
        "kak"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Any(2)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::ChipNative]
    }
    fn max_output_len(&self) -> Option<usize> {
        None
    }
    fn is_total(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], ctx: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if g.arity() == 2 && g.is_concrete() => {
                let m = gate_matrix(g).ok()?;
                resynthesize_2q(&m, [g.qubits[0], g.qubits[1]], ctx)
            }
            _ => None,
        }
    }
}

/// Lowers three- and four-qubit gates to one- and two-qubit matrix gates.
struct GenericSynthesis;

impl RewriteRule for GenericSynthesis {
    fn name(&self) -> &'static str {
        "generic-synthesis"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Any(3), Shape::Any(4)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::Any(1), Shape::Any(2)]
    }
    fn max_output_len(&self) -> Option<usize> {
        None
    }
    fn is_total(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], _: &RuleContext) -> Option<Vec<Gate>> {
        match w {
            [g] if (3..=4).contains(&g.arity()) && g.is_concrete() => {
                let m = gate_matrix(g).ok()?;
                let lowered = generic_lower(&m).ok()?;
                Some(lowered.into_iter().map(|x| x.remap(|q| g.qubits[q])).collect())
            }
            _ => None,
        }
    }
}

/// Resynthesize two consecutive gates on the same pair when that is cheaper.
struct FuseTwoQubitBlock;

impl RewriteRule for FuseTwoQubitBlock {
    fn name(&self) -> &'static str {
        "fuse-2Q-block"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Any(2)], vec![Shape::Any(2)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::ChipNative]
    }
    fn max_output_len(&self) -> Option<usize> {
        None
    }
    fn never_worse(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], ctx: &RuleContext) -> Option<Vec<Gate>> {
        let [a, b] = w else { return None };
        if a.arity() != 2 || b.arity() != 2 || !a.is_concrete() || !b.is_concrete() {
            return None;
        }
        let pair = [a.qubits[0], a.qubits[1]];
        if !(b.acts_on(pair[0]) && b.acts_on(pair[1])) {
            return None;
        }
        let m = sequence_matrix(w, &pair).ok()?;
        let out = resynthesize_2q(&m, pair, ctx)?;
        SeqCost::of(&out, ctx.chip, ctx.mode)
            .better_than(&SeqCost::of(w, ctx.chip, ctx.mode))
            .then_some(out)
    }
}

struct ElideOnEigenvector;

impl RewriteRule for ElideOnEigenvector {
    fn name(&self) -> &'static str {
        "elide-applications-on-eigenvectors"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        vec![vec![Shape::Any(1), Shape::Any(2)]]
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        Vec::new()
    }
    fn max_output_len(&self) -> Option<usize> {
        Some(0)
    }
    fn state_aware(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], ctx: &RuleContext) -> Option<Vec<Gate>> {
        let ([g], Some(state)) = (w, ctx.state) else { return None };
        statesim::is_eigenvector_application(state, g).then(Vec::new)
    }
}

/// Replace a gate sequence acting on |0…0⟩ with a direct preparation of the
/// state it produces.
struct StatePrep;

impl RewriteRule for StatePrep {
    fn name(&self) -> &'static str {
        "state-prep"
    }
    fn inputs(&self) -> Vec<Vec<Shape>> {
        Vec::new()
    }
    fn outputs(&self, _: &ChipSpecification) -> Vec<Shape> {
        vec![Shape::ChipNative]
    }
    fn max_output_len(&self) -> Option<usize> {
        None
    }
    fn never_worse(&self) -> bool {
        true
    }
    fn state_aware(&self) -> bool {
        true
    }
    fn apply(&self, w: &[Gate], ctx: &RuleContext) -> Option<Vec<Gate>> {
        let out = statesim::prepare_from_zero(w, ctx)?;
        SeqCost::of(&out, ctx.chip, ctx.mode)
            .better_than(&SeqCost::of(w, ctx.chip, ctx.mode))
            .then_some(out)
    }
}
