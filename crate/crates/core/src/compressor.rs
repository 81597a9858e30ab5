//! Compression: group instructions on few resources, then shrink each group
//! by peephole rewriting and by resynthesizing its composite unitary.

use std::collections::BTreeSet;

use crate::addresser::{resources, Resource};
use crate::chipspec::{is_native, NativeStatus};
use crate::ir::{Gate, Op};
use crate::linalg::generic::generic_synthesize;
use crate::linalg::{sequence_matrix, support};
use crate::rules::{
    is_diagonal_1q, native_1q, nativize_sequence, resynthesize_2q, slot_matches, Registry, RewriteRule,
    RuleClass, RuleContext, SeqCost,
};

pub const DEFAULT_COMPRESSION_LIMIT: usize = 3;
/// Nested re-walks of a group's rewritten output.
const MAX_REWALK: usize = 3;
/// Full passes over a block before giving up on reaching a fixpoint.
const MAX_ROUNDS: usize = 8;
/// Three-qubit rollup is only tried on groups with more entanglers than this.
const ROLLUP_3Q_MIN_ENTANGLERS: usize = 8;

/// Qubits and classical addresses used by a group of instructions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResourceSet {
    pub items: BTreeSet<Resource>,
}

impl ResourceSet {
    pub fn of(op: &Op) -> ResourceSet {
        ResourceSet {
            items: resources(op).into_iter().collect(),
        }
    }

    pub fn meets(&self, other: &ResourceSet) -> bool {
        !self.items.is_disjoint(&other.items)
    }

    pub fn union(&self, other: &ResourceSet) -> ResourceSet {
        ResourceSet {
            items: self.items.union(&other.items).cloned().collect(),
        }
    }

    pub fn contains(&self, other: &ResourceSet) -> bool {
        other.items.is_subset(&self.items)
    }

    pub fn qubit_count(&self) -> usize {
        self.items.iter().filter(|r| matches!(r, Resource::Qubit(_))).count()
    }
}

#[derive(Clone, Debug)]
struct Subgraph {
    members: Vec<Op>,
    tag: ResourceSet,
}

pub struct Compressor<'a> {
    ctx: &'a RuleContext<'a>,
    reg: &'a Registry,
    rules: Vec<&'a dyn RewriteRule>,
    limit: usize,
}

impl<'a> Compressor<'a> {
    pub fn new(ctx: &'a RuleContext<'a>, reg: &'a Registry, limit: usize) -> Compressor<'a> {
        let classes = reg.classify(ctx.chip);
        let rules = reg
            .enabled()
            .filter(|r| !r.state_aware() && classes.get(r.name()) == Some(&RuleClass::Optimizer))
            .collect();
        Compressor { ctx, reg, rules, limit }
    }

    /// Names of the rules the peephole rewriter will use.
    pub fn rule_names(&self) -> Vec<&'static str> {
        self.rules.iter().map(|r| r.name()).collect()
    }

    pub fn compress(&self, ops: &[Op]) -> Vec<Op> {
        let mut cur = ops.to_vec();
        for _ in 0..MAX_ROUNDS {
            let next = self.walk(&cur, &mut Vec::new(), 0);
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }

    fn walk(&self, ops: &[Op], forbidden: &mut Vec<ResourceSet>, depth: usize) -> Vec<Op> {
        let mut out = Vec::new();
        let mut groups: Vec<Subgraph> = Vec::new();
        let is_forbidden = |s: &ResourceSet, forbidden: &[ResourceSet]| forbidden.iter().any(|f| s.contains(f));
        for op in ops {
            let res = ResourceSet::of(op);
            let met: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].tag.meets(&res)).collect();
            let gate = matches!(op, Op::Gate(_));
            if met.is_empty() && gate && !is_forbidden(&res, forbidden) {
                groups.push(Subgraph {
                    members: vec![op.clone()],
                    tag: res,
                });
                continue;
            }
            let sum = met.iter().fold(res.clone(), |acc, &i| acc.union(&groups[i].tag));
            let prohibited = is_forbidden(&sum, forbidden);
            let over = sum.qubit_count() > self.limit;
            if prohibited || over || !gate {
                let mut taken = Vec::new();
                for &i in met.iter().rev() {
                    taken.push(groups.remove(i));
                }
                taken.reverse();
                for g in taken {
                    let mark = forbidden.len();
                    if prohibited {
                        forbidden.push(g.tag.clone());
                    }
                    if over {
                        forbidden.push(sum.clone());
                    }
                    out.extend(self.flush(g, forbidden, depth));
                    forbidden.truncate(mark);
                }
                out.push(op.clone());
                continue;
            }
            let mut merged = Subgraph {
                members: Vec::new(),
                tag: sum,
            };
            for &i in met.iter().rev() {
                let g = groups.remove(i);
                let mut m = g.members;
                m.extend(merged.members);
                merged.members = m;
            }
            merged.members.push(op.clone());
            groups.push(merged);
        }
        for g in groups {
            out.extend(self.flush(g, forbidden, depth));
        }
        out
    }

    fn flush(&self, g: Subgraph, forbidden: &mut Vec<ResourceSet>, depth: usize) -> Vec<Op> {
        let gates: Vec<Gate> = g.members.iter().filter_map(|o| o.as_gate().cloned()).collect();
        let reduced = self.reduce(&gates);
        if reduced == gates {
            return g.members;
        }
        let ops: Vec<Op> = reduced.into_iter().map(Op::Gate).collect();
        if depth < MAX_REWALK {
            self.walk(&ops, forbidden, depth + 1)
        } else {
            ops
        }
    }

    /// Peephole rewriting, single-qubit fusion, pair fusion and rollup of one
    /// group's gate sequence.
    pub fn reduce(&self, gates: &[Gate]) -> Vec<Gate> {
        let mut cur = self.peephole(gates);
        cur = self.fuse_1q_runs(cur);
        cur = self.fuse_pair_blocks(cur);
        if let Some(r) = self.rollup(&cur) {
            cur = r;
        }
        if self.improves(&cur, gates) {
            cur
        } else {
            gates.to_vec()
        }
    }

    /// The single order every rewrite must strictly decrease: entanglers,
    /// length, cost, then how early diagonal 1Q gates sit.
    fn improves(&self, new: &[Gate], old: &[Gate]) -> bool {
        let (a, b) = (SeqCost::of(new, self.ctx.chip, self.ctx.mode), SeqCost::of(old, self.ctx.chip, self.ctx.mode));
        if a.better_than(&b) {
            return true;
        }
        let tie = (a.two_qubit, a.total) == (b.two_qubit, b.total) && (a.duration - b.duration).abs() <= 1e-9;
        tie && diagonal_potential(new) < diagonal_potential(old)
    }

    fn all_native(&self, gates: &[Gate]) -> bool {
        gates.iter().all(|g| is_native(self.ctx.chip, g) == NativeStatus::Native)
    }

    /// Apply optimizer rules to the first improving window until none applies.
    pub fn peephole(&self, gates: &[Gate]) -> Vec<Gate> {
        self.rewrite(gates, true)
    }

    fn rewrite(&self, gates: &[Gate], log: bool) -> Vec<Gate> {
        let mut cur = gates.to_vec();
        'outer: loop {
            for rule in &self.rules {
                let slots = rule.inputs();
                for i in 0..cur.len() {
                    if !slot_matches(&slots[0], &cur[i]) {
                        continue;
                    }
                    let (window, at) = match slots.len() {
                        1 => (vec![cur[i].clone()], i),
                        2 => {
                            let Some(j) = (i + 1..cur.len()).find(|&j| shares_qubit(&cur[i], &cur[j])) else {
                                continue;
                            };
                            if !slot_matches(&slots[1], &cur[j]) {
                                continue;
                            }
                            (vec![cur[i].clone(), cur[j].clone()], j)
                        }
                        _ => continue,
                    };
                    let Some(rep) = rule.apply(&window, self.ctx) else { continue };
                    if !self.all_native(&rep) {
                        continue;
                    }
                    let mut next: Vec<Gate> = Vec::with_capacity(cur.len() + rep.len());
                    for (k, g) in cur.iter().enumerate() {
                        if k == at {
                            next.extend(rep.iter().cloned());
                        } else if k != i {
                            next.push(g.clone());
                        }
                    }
                    if self.improves(&next, &cur) {
                        if let Some(t) = self.ctx.trace.filter(|_| log) {
                            t.rule("compress", rule.name(), &window, &rep);
                        }
                        cur = next;
                        continue 'outer;
                    }
                }
            }
            return cur;
        }
    }

    /// Replace each run of concrete 1Q gates on one qubit by its cheapest
    /// native form.
    fn fuse_1q_runs(&self, gates: Vec<Gate>) -> Vec<Gate> {
        let mut cur = gates;
        let qubits: BTreeSet<usize> = cur.iter().flat_map(|g| g.qubits.iter().copied()).collect();
        for q in qubits {
            let mut start = 0;
            loop {
                let run = one_qubit_run(&cur, q, start);
                let Some(&last) = run.last() else { break };
                start = last + 1;
                if run.len() < 2 {
                    continue;
                }
                let members: Vec<Gate> = run.iter().map(|&k| cur[k].clone()).collect();
                let Ok(m) = sequence_matrix(&members, &[q]) else { continue };
                let rep = if m.is_identity_up_to_phase(1e-10) {
                    Vec::new()
                } else {
                    match native_1q(&Gate::from_matrix("U", m, vec![q]), self.ctx) {
                        Some(r) => r,
                        None => continue,
                    }
                };
                if !self.improves(&rep, &members) {
                    continue;
                }
                if let Some(t) = self.ctx.trace {
                    t.rule("compress", "fuse-1Q-run", &members, &rep);
                }
                start = last + 1 + rep.len() - run.len();
                cur = splice(&cur, &run, rep);
            }
        }
        cur
    }

    /// Resynthesize maximal blocks of gates confined to one linked pair.
    fn fuse_pair_blocks(&self, gates: Vec<Gate>) -> Vec<Gate> {
        let mut cur = gates;
        let pairs: BTreeSet<(usize, usize)> = cur
            .iter()
            .filter(|g| g.arity() == 2)
            .map(|g| (g.qubits[0].min(g.qubits[1]), g.qubits[0].max(g.qubits[1])))
            .collect();
        for (a, b) in pairs {
            let mut start = 0;
            loop {
                let block = pair_block(&cur, a, b, start);
                let Some(&last) = block.last() else { break };
                start = last + 1;
                let members: Vec<Gate> = block.iter().map(|&k| cur[k].clone()).collect();
                if members.iter().filter(|g| g.arity() == 2).count() < 2 {
                    continue;
                }
                let Ok(m) = sequence_matrix(&members, &[a, b]) else { continue };
                let Some(rep) = resynthesize_2q(&m, [a, b], self.ctx) else { continue };
                let rep = self.rewrite(&rep, false);
                if !self.all_native(&rep) || !self.improves(&rep, &members) {
                    continue;
                }
                if let Some(t) = self.ctx.trace {
                    t.rule("compress", "fuse-2Q-block", &members, &rep);
                }
                start = last + 1 + rep.len() - block.len();
                cur = splice(&cur, &block, rep);
            }
        }
        cur
    }

    /// Resynthesize the whole group from its composite unitary.
    fn rollup(&self, gates: &[Gate]) -> Option<Vec<Gate>> {
        if gates.is_empty() || !gates.iter().all(Gate::is_concrete) {
            return None;
        }
        let qs = support(gates);
        let entanglers = gates.iter().filter(|g| g.arity() >= 2).count();
        let cand = match qs.len() {
            1 => {
                let m = sequence_matrix(gates, &qs).ok()?;
                if m.is_identity_up_to_phase(1e-10) {
                    Vec::new()
                } else {
                    native_1q(&Gate::from_matrix("U", m, qs.clone()), self.ctx)?
                }
            }
            2 => resynthesize_2q(&sequence_matrix(gates, &qs).ok()?, [qs[0], qs[1]], self.ctx)?,
            3 if self.limit >= 3 && entanglers > ROLLUP_3Q_MIN_ENTANGLERS => {
                let m = sequence_matrix(gates, &qs).ok()?;
                let local = generic_synthesize(&m).ok()?;
                let placed: Vec<Gate> = local.iter().map(|g| g.remap(|k| qs[k])).collect();
                if placed.iter().any(|g| g.arity() == 2 && !self.ctx.chip.adjacent(g.qubits[0], g.qubits[1])) {
                    return None;
                }
                nativize_sequence(&placed, self.ctx, self.reg).ok()?
            }
            _ => return None,
        };
        let cand = self.rewrite(&cand, false);
        if !self.all_native(&cand) {
            return None;
        }
        let better = self.improves(&cand, gates);
        if better {
            if let Some(t) = self.ctx.trace {
                t.rule("compress", "rollup", gates, &cand);
            }
        }
        better.then_some(cand)
    }
}

fn shares_qubit(a: &Gate, b: &Gate) -> bool {
    a.qubits.iter().any(|q| b.qubits.contains(q))
}

/// Σ (len − position) over diagonal 1Q gates; pushing them later lowers it.
fn diagonal_potential(gates: &[Gate]) -> usize {
    let n = gates.len();
    gates
        .iter()
        .enumerate()
        .filter(|(_, g)| is_diagonal_1q(g))
        .map(|(i, _)| n - i)
        .sum()
}

/// Indices of the first run of 1Q gates on `q` at or after `start`, ending at
/// the next multi-qubit gate on `q`.
fn one_qubit_run(gates: &[Gate], q: usize, start: usize) -> Vec<usize> {
    let mut run = Vec::new();
    for (k, g) in gates.iter().enumerate().skip(start) {
        if !g.acts_on(q) {
            continue;
        }
        if g.arity() == 1 && g.is_concrete() {
            run.push(k);
        } else if run.is_empty() {
            continue;
        } else {
            break;
        }
    }
    run
}

/// Indices of the first maximal block of gates confined to `{a, b}` at or
/// after `start`. A gate coupling either qubit to a third one ends it.
fn pair_block(gates: &[Gate], a: usize, b: usize, start: usize) -> Vec<usize> {
    let mut block = Vec::new();
    for (k, g) in gates.iter().enumerate().skip(start) {
        let touches = g.acts_on(a) || g.acts_on(b);
        if !touches {
            continue;
        }
        let inside = g.qubits.iter().all(|&q| q == a || q == b) && g.is_concrete();
        if inside {
            block.push(k);
        } else if block.iter().any(|&i| gates[i].arity() == 2) {
            break;
        } else {
            block.clear();
        }
    }
    block
}

/// Remove `picked` (sorted) and put `rep` where the last of them was. Every
/// picked gate only commutes past gates on other qubits to get there.
fn splice(gates: &[Gate], picked: &[usize], rep: Vec<Gate>) -> Vec<Gate> {
    let last = *picked.last().expect("non-empty selection");
    let mut out = Vec::with_capacity(gates.len() + rep.len());
    let mut rep = Some(rep);
    for (k, g) in gates.iter().enumerate() {
        if k == last {
            out.extend(rep.take().unwrap());
        } else if !picked.contains(&k) {
            out.push(g.clone());
        }
    }
    out
}

/// Compress a block of native instructions.
pub fn compress(ops: &[Op], ctx: &RuleContext, reg: &Registry, limit: usize) -> Vec<Op> {
    Compressor::new(ctx, reg, limit).compress(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chipspec::ChipSpecification;
    use crate::linalg::sequence_matrix;

    fn g(name: &str, qs: &[usize]) -> Gate {
        Gate::fixed(name, qs)
    }

    fn r(name: &str, a: f64, q: usize) -> Gate {
        Gate::rot(name, a, &[q])
    }

    fn ops(gs: &[Gate]) -> Vec<Op> {
        gs.iter().cloned().map(Op::Gate).collect()
    }

    fn run(gs: &[Gate], chip: &ChipSpecification) -> Vec<Gate> {
        let ctx = RuleContext::new(chip);
        let reg = Registry::default();
        compress(&ops(gs), &ctx, &reg, DEFAULT_COMPRESSION_LIMIT)
            .into_iter()
            .map(|o| o.as_gate().unwrap().clone())
            .collect()
    }

    #[test]
    fn empty_block() {
        let chip = ChipSpecification::with_defaults(2, &[(0, 1)]);
        assert!(run(&[], &chip).is_empty());
    }

    #[test]
    fn minimal_block_is_kept() {
        let chip = ChipSpecification::with_defaults(2, &[(0, 1)]);
        assert_eq!(run(&[g("CZ", &[0, 1])], &chip), [g("CZ", &[0, 1])]);
    }

    #[test]
    fn opposite_rotations_cancel() {
        let chip = ChipSpecification::with_defaults(1, &[]);
        assert!(run(&[r("RZ", 0.7, 0), r("RZ", -0.7, 0)], &chip).is_empty());
    }

    #[test]
    fn repeated_cz_collapses() {
        let chip = ChipSpecification::with_defaults(2, &[(0, 1)]);
        let out = run(&[g("CZ", &[0, 1]), g("CZ", &[0, 1]), g("CZ", &[0, 1])], &chip);
        assert_eq!(out, [g("CZ", &[0, 1])]);
    }

    #[test]
    fn rz_moves_through_cz_and_merges() {
        let chip = ChipSpecification::with_defaults(2, &[(0, 1)]);
        let input = [r("RZ", 0.3, 0), g("CZ", &[0, 1]), r("RZ", 0.4, 0)];
        let out = run(&input, &chip);
        assert_eq!(out.len(), 2);
        let a = sequence_matrix(&input, &[0, 1]).unwrap();
        let b = sequence_matrix(&out, &[0, 1]).unwrap();
        assert!(a.equiv_up_to_phase(&b, 1e-9).unwrap());
    }

    #[test]
    fn independent_groups_keep_order_per_qubit() {
        let chip = ChipSpecification::with_defaults(4, &[(0, 1), (1, 2), (2, 3)]);
        let input = [
            g("CZ", &[0, 1]),
            r("RX", 1.5707963267948966, 2),
            g("CZ", &[2, 3]),
            g("CZ", &[1, 2]),
            r("RZ", 0.2, 0),
        ];
        let out = run(&input, &chip);
        let a = sequence_matrix(&input, &[0, 1, 2, 3]).unwrap();
        let b = sequence_matrix(&out, &[0, 1, 2, 3]).unwrap();
        assert!(a.equiv_up_to_phase(&b, 1e-9).unwrap());
    }

    #[test]
    fn resource_sets() {
        let a = ResourceSet::of(&Op::Gate(g("CZ", &[0, 1])));
        let b = ResourceSet::of(&Op::Gate(g("RX", &[1])));
        assert!(a.meets(&b));
        assert!(a.contains(&b));
        assert_eq!(a.union(&b).qubit_count(), 2);
    }
}
