//! Placement of logical qubits on the chip, SWAP insertion and nativization.

mod dag;
mod search;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use dag::{resources, InstructionDag, Resource};
pub use search::{heuristic_cost, CostModel, SearchMode};

use crate::chipspec::{ChipSpecification, CostMode, CostTable};
use crate::ir::{Gate, Op};
use crate::linalg::{entangler_count, sequence_matrix, Entangler};
use crate::rules::{best_entangler, lower_gate, nativize_sequence, NativizeError, Registry, RuleContext, SeqCost};

/// Largest gate arity accepted by the addresser.
pub const MAX_ARITY: usize = 4;
/// Node budget for one A* routing search before falling back to greedy.
const ASTAR_BUDGET: usize = 4000;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AddressError {
    #[error("program needs more qubits than the chip's {0}")]
    ChipExhausted(usize),
    #[error("physical qubits {0} and {1} are not connected")]
    Disconnected(usize, usize),
    #[error("qubit {0} is not on the chip")]
    UnknownQubit(usize),
    #[error("{0} acts on more than {MAX_ARITY} qubits")]
    TooManyQubits(String),
    #[error(transparent)]
    Nativize(#[from] NativizeError),
}

/// A partial injective map from logical to physical qubits.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Rewiring {
    l2p: BTreeMap<usize, usize>,
    p2l: BTreeMap<usize, usize>,
}

impl Rewiring {
    pub fn new() -> Rewiring {
        Rewiring::default()
    }

    pub fn identity(qubits: impl IntoIterator<Item = usize>) -> Rewiring {
        let mut r = Rewiring::new();
        for q in qubits {
            r.assign(q, q);
        }
        r
    }

    pub fn physical(&self, l: usize) -> Option<usize> {
        self.l2p.get(&l).copied()
    }

    pub fn logical(&self, p: usize) -> Option<usize> {
        self.p2l.get(&p).copied()
    }

    /// Map `l` to `p`; both must be unused.
    pub fn assign(&mut self, l: usize, p: usize) {
        assert!(!self.l2p.contains_key(&l) && !self.p2l.contains_key(&p), "rewiring must stay injective");
        self.l2p.insert(l, p);
        self.p2l.insert(p, l);
    }

    /// Exchange whatever logical qubits sit on physical `a` and `b`.
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        let la = self.p2l.remove(&a);
        let lb = self.p2l.remove(&b);
        if let Some(l) = la {
            self.p2l.insert(b, l);
            self.l2p.insert(l, b);
        }
        if let Some(l) = lb {
            self.p2l.insert(a, l);
            self.l2p.insert(l, a);
        }
    }

    pub fn len(&self) -> usize {
        self.l2p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l2p.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.l2p.iter().map(|(&l, &p)| (l, p))
    }

    pub fn as_map(&self) -> &BTreeMap<usize, usize> {
        &self.l2p
    }
}

impl fmt::Display for Rewiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs().map(|(l, p)| format!("{l}->{p}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Clone, Debug)]
pub struct AddressConfig {
    pub mode: CostMode,
    pub search: SearchMode,
    pub discount: f64,
    pub lookahead: usize,
    /// Seed for randomized restarts of the initial placement.
    pub seed: Option<u64>,
}

impl Default for AddressConfig {
    fn default() -> Self {
        AddressConfig {
            mode: CostMode::Duration,
            search: SearchMode::Greedy,
            discount: 0.5,
            lookahead: 20,
            seed: None,
        }
    }
}

/// Native physical code for a block and how it moved the logical qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct AddressedBlock {
    pub ops: Vec<Op>,
    pub entry: Rewiring,
    pub exit: Rewiring,
    /// Where the contents of each physical qubit at entry end up at exit.
    pub permutation: BTreeMap<usize, usize>,
    pub swaps: usize,
}

struct Router<'a> {
    chip: &'a ChipSpecification,
    table: &'a CostTable,
    model: &'a CostModel,
    cfg: &'a AddressConfig,
    rewiring: Rewiring,
    entry: Rewiring,
    /// For each physical qubit, the entry position of the contents it holds.
    origin: BTreeMap<usize, usize>,
    out: Vec<Op>,
    swaps: usize,
}

#[derive(PartialEq)]
struct Node {
    f: f64,
    g: f64,
    swaps: Vec<(usize, usize)>,
    rew: Rewiring,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.swaps.cmp(&self.swaps))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Router<'_> {
    fn heuristic(&self, rew: &Rewiring, pending: &[(usize, usize)]) -> f64 {
        heuristic_cost(self.model, rew, pending, self.cfg.discount)
    }

    fn assign_fresh(&mut self, l: usize, pending: &[(usize, usize)]) -> Result<(), AddressError> {
        let mut best: Option<(f64, usize)> = None;
        for p in self.chip.qubit_ids() {
            if self.rewiring.logical(p).is_some() {
                continue;
            }
            let mut r = self.rewiring.clone();
            r.assign(l, p);
            let c = self.heuristic(&r, pending);
            if best.is_none_or(|(b, _)| c < b - 1e-9) {
                best = Some((c, p));
            }
        }
        let (_, p) = best.ok_or(AddressError::ChipExhausted(self.chip.qubits.len()))?;
        self.rewiring.assign(l, p);
        self.entry.assign(l, self.origin[&p]);
        Ok(())
    }

    fn push(&mut self, op: Op) {
        self.out.push(op);
    }

    fn emit(&mut self, op: &Op) {
        let phys = op.remap(|l| self.rewiring.physical(l).expect("assigned before emission"));
        self.push(phys);
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        self.push(Op::Gate(Gate::fixed("SWAP", &[a, b])));
        self.rewiring.swap_physical(a, b);
        let (oa, ob) = (self.origin[&a], self.origin[&b]);
        self.origin.insert(a, ob);
        self.origin.insert(b, oa);
        self.swaps += 1;
    }

    /// SWAP cost after accounting for recombination with the previous gate.
    fn swap_cost(&self, a: usize, b: usize) -> f64 {
        let full = self.chip.swap_cost(a, b, self.cfg.mode).unwrap_or(f64::INFINITY);
        let Some(block) = fusable_block(self.out.iter().map(Some), a, b) else { return full };
        let e = best_entangler(self.chip, a, b).first().copied().unwrap_or(Entangler::Cz);
        let pair = [a, b];
        let gates: Vec<Gate> = block.iter().map(|&i| self.out[i].as_gate().unwrap().clone()).collect();
        let mut with_swap = gates.clone();
        with_swap.push(Gate::fixed("SWAP", &pair));
        match (sequence_matrix(&gates, &pair), sequence_matrix(&with_swap, &pair)) {
            (Ok(x), Ok(y)) => {
                let extra = entangler_count(&y, e) as f64 - entangler_count(&x, e) as f64;
                full * extra.max(0.0) / 3.0
            }
            _ => full,
        }
    }

    fn swapped(&self, rew: &Rewiring, a: usize, b: usize) -> Rewiring {
        let mut r = rew.clone();
        r.swap_physical(a, b);
        r
    }

    fn positions(rew: &Rewiring, la: usize, lb: usize) -> (usize, usize) {
        (rew.physical(la).unwrap(), rew.physical(lb).unwrap())
    }

    fn candidate_links(&self, pa: usize, pb: usize) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = [pa, pb]
            .iter()
            .flat_map(|&x| self.chip.neighbors(x).into_iter().map(move |y| (x.min(y), x.max(y))))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn route_greedy(&mut self, la: usize, lb: usize, pending: &[(usize, usize)]) -> Result<(), AddressError> {
        loop {
            let (pa, pb) = Self::positions(&self.rewiring, la, lb);
            if self.chip.adjacent(pa, pb) {
                return Ok(());
            }
            let hops = self.table.hops(pa, pb);
            if hops == usize::MAX {
                return Err(AddressError::Disconnected(pa, pb));
            }
            let mut best: Option<(f64, (usize, usize))> = None;
            for (x, y) in self.candidate_links(pa, pb) {
                let r = self.swapped(&self.rewiring, x, y);
                let (na, nb) = Self::positions(&r, la, lb);
                if self.table.hops(na, nb) >= hops {
                    continue;
                }
                let score = self.swap_cost(x, y) + self.heuristic(&r, pending);
                if best.is_none_or(|(b, _)| score < b - 1e-9) {
                    best = Some((score, (x, y)));
                }
            }
            let (_, (x, y)) = best.ok_or(AddressError::Disconnected(pa, pb))?;
            self.apply_swap(x, y);
        }
    }

    fn route_astar(&mut self, la: usize, lb: usize, pending: &[(usize, usize)]) -> Result<(), AddressError> {
        let (pa, pb) = Self::positions(&self.rewiring, la, lb);
        if self.table.hops(pa, pb) == usize::MAX {
            return Err(AddressError::Disconnected(pa, pb));
        }
        let lower = |a: usize, b: usize| (self.table.hops(a, b).saturating_sub(1)) as f64 * self.model.min_swap;
        let mut open = BinaryHeap::new();
        let mut seen: HashSet<Rewiring> = HashSet::new();
        open.push(Node {
            f: lower(pa, pb),
            g: 0.0,
            swaps: Vec::new(),
            rew: self.rewiring.clone(),
        });
        let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
        let mut expanded = 0;
        while let Some(node) = open.pop() {
            if best.as_ref().is_some_and(|(b, _)| *b <= node.f) || expanded >= ASTAR_BUDGET {
                break;
            }
            if !seen.insert(node.rew.clone()) {
                continue;
            }
            expanded += 1;
            let (a, b) = Self::positions(&node.rew, la, lb);
            if self.chip.adjacent(a, b) {
                let obj = node.g + self.heuristic(&node.rew, pending);
                if best.as_ref().is_none_or(|(c, _)| obj < c - 1e-9) {
                    best = Some((obj, node.swaps));
                }
                continue;
            }
            for (x, y) in self.candidate_links(a, b) {
                let r = self.swapped(&node.rew, x, y);
                if seen.contains(&r) {
                    continue;
                }
                let step = if node.swaps.is_empty() {
                    self.swap_cost(x, y)
                } else {
                    self.chip.swap_cost(x, y, self.cfg.mode).unwrap_or(f64::INFINITY)
                };
                let (na, nb) = Self::positions(&r, la, lb);
                let mut swaps = node.swaps.clone();
                swaps.push((x, y));
                open.push(Node {
                    f: node.g + step + lower(na, nb),
                    g: node.g + step,
                    swaps,
                    rew: r,
                });
            }
        }
        match best {
            Some((_, swaps)) => {
                for (x, y) in swaps {
                    self.apply_swap(x, y);
                }
                Ok(())
            }
            None => self.route_greedy(la, lb, pending),
        }
    }

    fn run(&mut self, ops: &[Op]) -> Result<(), AddressError> {
        let dag = InstructionDag::build(ops);
        let mut indeg: Vec<usize> = dag.preds.iter().map(Vec::len).collect();
        let mut done = vec![false; ops.len()];
        let mut frontier: BTreeSet<usize> = (0..ops.len()).filter(|&i| indeg[i] == 0).collect();
        let two_qubit: Vec<usize> = (0..ops.len()).filter(|&i| ops[i].qubits().len() == 2).collect();
        let pending = |done: &[bool]| -> Vec<(usize, usize)> {
            two_qubit
                .iter()
                .filter(|&&i| !done[i])
                .take(self.cfg.lookahead)
                .map(|&i| {
                    let q = ops[i].qubits();
                    (q[0], q[1])
                })
                .collect()
        };
        while !frontier.is_empty() {
            let mut progressed = false;
            for i in frontier.clone() {
                let qs = ops[i].qubits();
                for &q in &qs {
                    if self.rewiring.physical(q).is_none() {
                        let p = pending(&done);
                        self.assign_fresh(q, &p)?;
                    }
                }
                if qs.len() == 2 {
                    let (pa, pb) = Self::positions(&self.rewiring, qs[0], qs[1]);
                    if !self.chip.adjacent(pa, pb) {
                        continue;
                    }
                }
                self.emit(&ops[i]);
                done[i] = true;
                frontier.remove(&i);
                for &s in &dag.succs[i] {
                    indeg[s] -= 1;
                    if indeg[s] == 0 {
                        frontier.insert(s);
                    }
                }
                progressed = true;
            }
            if progressed {
                continue;
            }
            let blocked = frontier
                .iter()
                .map(|&i| {
                    let q = ops[i].qubits();
                    (self.model.gate(&self.rewiring, q[0], q[1]), i)
                })
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
                .map(|(_, i)| ops[i].qubits())
                .expect("frontier is non-empty");
            let p = pending(&done);
            match self.cfg.search {
                SearchMode::Greedy => self.route_greedy(blocked[0], blocked[1], &p)?,
                SearchMode::AStar => self.route_astar(blocked[0], blocked[1], &p)?,
            }
        }
        Ok(())
    }
}

/// Indices of the trailing gates on `a` and `b` that a SWAP on that pair can
/// absorb: one concrete 2Q gate on exactly the pair, followed only by
/// concrete 1Q gates on either qubit.
fn fusable_block<'a>(ops: impl DoubleEndedIterator<Item = Option<&'a Op>> + ExactSizeIterator, a: usize, b: usize) -> Option<Vec<usize>> {
    let mut picked = Vec::new();
    for (i, op) in ops.enumerate().rev() {
        let Some(op) = op else { continue };
        let qs = op.qubits();
        if !qs.contains(&a) && !qs.contains(&b) {
            continue;
        }
        let Op::Gate(g) = op else { return None };
        if !g.is_concrete() {
            return None;
        }
        picked.push(i);
        match g.arity() {
            1 => {}
            2 if qs.contains(&a) && qs.contains(&b) => {
                picked.reverse();
                return Some(picked);
            }
            _ => return None,
        }
    }
    None
}

/// Fuse each SWAP with the 2Q gate before it on the same pair, together with
/// any 1Q gates in between, into one matrix gate.
pub fn recombine_swaps(ops: Vec<Op>) -> Vec<Op> {
    let mut slots: Vec<Option<Op>> = ops.into_iter().map(Some).collect();
    for i in 0..slots.len() {
        let Some(Op::Gate(s)) = &slots[i] else { continue };
        if s.name != "SWAP" || s.matrix.is_some() {
            continue;
        }
        let pair = [s.qubits[0], s.qubits[1]];
        let Some(block) = fusable_block(slots[..i].iter().map(Option::as_ref), pair[0], pair[1]) else { continue };
        let mut gates: Vec<Gate> = block.iter().map(|&k| slots[k].as_ref().unwrap().as_gate().unwrap().clone()).collect();
        gates.push(s.clone());
        let Ok(m) = sequence_matrix(&gates, &pair) else { continue };
        for k in block {
            slots[k] = None;
        }
        slots[i] = Some(Op::Gate(Gate::from_matrix("U", m, pair.to_vec())));
    }
    slots.into_iter().flatten().collect()
}

fn nativize_ops(ops: &[Op], ctx: &RuleContext, reg: &Registry) -> Result<Vec<Op>, AddressError> {
    let mut out = Vec::with_capacity(ops.len());
    let mut run: Vec<Gate> = Vec::new();
    let flush = |run: &mut Vec<Gate>, out: &mut Vec<Op>| -> Result<(), AddressError> {
        out.extend(nativize_sequence(run, ctx, reg)?.into_iter().map(Op::Gate));
        run.clear();
        Ok(())
    };
    for op in ops {
        match op {
            Op::Gate(g) => run.push(g.clone()),
            m => {
                flush(&mut run, &mut out)?;
                out.push(m.clone());
            }
        }
    }
    flush(&mut run, &mut out)?;
    Ok(out)
}

/// Lower gates on three or more qubits to one- and two-qubit gates.
pub fn lower_block(ops: &[Op], ctx: &RuleContext, reg: &Registry) -> Result<Vec<Op>, AddressError> {
    let mut out = Vec::with_capacity(ops.len());
    for op in ops {
        match op {
            Op::Gate(g) if g.arity() > MAX_ARITY => return Err(AddressError::TooManyQubits(g.to_string())),
            Op::Gate(g) if g.arity() > 2 => {
                let lowered = lower_gate(g, ctx, reg)?;
                if let Some(t) = ctx.trace {
                    t.rule("address", "lower", std::slice::from_ref(g), &lowered);
                }
                out.extend(lowered.into_iter().map(Op::Gate));
            }
            other => out.push(other.clone()),
        }
    }
    Ok(out)
}

fn address_once(
    ops: &[Op],
    chip: &ChipSpecification,
    table: &CostTable,
    model: &CostModel,
    cfg: &AddressConfig,
    initial: Option<&Rewiring>,
    ctx: &RuleContext,
    reg: &Registry,
) -> Result<AddressedBlock, AddressError> {
    let mut router = Router {
        chip,
        table,
        model,
        cfg,
        rewiring: initial.cloned().unwrap_or_default(),
        entry: initial.cloned().unwrap_or_default(),
        origin: chip.qubit_ids().map(|q| (q, q)).collect(),
        out: Vec::new(),
        swaps: 0,
    };
    for (_, p) in router.rewiring.pairs() {
        if !chip.has_qubit(p) {
            return Err(AddressError::UnknownQubit(p));
        }
    }
    router.run(ops)?;
    let fused = recombine_swaps(std::mem::take(&mut router.out));
    let native = nativize_ops(&fused, ctx, reg)?;
    let permutation = router.origin.iter().map(|(&now, &from)| (from, now)).collect();
    Ok(AddressedBlock {
        ops: native,
        entry: router.entry,
        exit: router.rewiring,
        permutation,
        swaps: router.swaps,
    })
}

fn block_cost(b: &AddressedBlock, ctx: &RuleContext) -> SeqCost {
    let gates: Vec<Gate> = b.ops.iter().filter_map(|o| o.as_gate().cloned()).collect();
    SeqCost::of(&gates, ctx.chip, ctx.mode)
}

/// Address and nativize one block. With `initial` the placement is fixed at
/// entry; otherwise qubits are placed lazily as they are first used.
pub fn address_block(
    ops: &[Op],
    chip: &ChipSpecification,
    table: &CostTable,
    cfg: &AddressConfig,
    initial: Option<&Rewiring>,
    ctx: &RuleContext,
    reg: &Registry,
) -> Result<AddressedBlock, AddressError> {
    let lowered = lower_block(ops, ctx, reg)?;
    let model = CostModel::new(chip, table, cfg.mode);
    let mut best = address_once(&lowered, chip, table, &model, cfg, initial, ctx, reg)?;
    if let (Some(seed), None) = (cfg.seed, initial) {
        let logical: BTreeSet<usize> = lowered.iter().flat_map(Op::qubits).collect();
        let physical: Vec<usize> = chip.qubit_ids().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 {
            let mut slots = physical.clone();
            slots.shuffle(&mut rng);
            if slots.len() < logical.len() {
                break;
            }
            let start = Rewiring {
                l2p: logical.iter().copied().zip(slots.iter().copied()).collect(),
                p2l: slots.iter().copied().zip(logical.iter().copied()).collect(),
            };
            let quiet = RuleContext { trace: None, ..*ctx };
            if let Ok(b) = address_once(&lowered, chip, table, &model, cfg, Some(&start), &quiet, reg) {
                if block_cost(&b, ctx).better_than(&block_cost(&best, ctx)) {
                    best = b;
                }
            }
        }
    }
    if let Some(t) = ctx.trace {
        t.note(format!("[address] entry rewiring {}, exit rewiring {}, {} SWAPs", best.entry, best.exit, best.swaps));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chipspec::{build_cost_table, is_native, NativeStatus};

    fn line(n: usize) -> ChipSpecification {
        let links: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        ChipSpecification::with_defaults(n, &links)
    }

    fn run(ops: &[Op], chip: &ChipSpecification, search: SearchMode) -> AddressedBlock {
        let table = build_cost_table(chip, CostMode::Duration);
        let cfg = AddressConfig {
            search,
            ..Default::default()
        };
        let reg = Registry::default();
        address_block(ops, chip, &table, &cfg, None, &RuleContext::new(chip), &reg).unwrap()
    }

    fn g(name: &str, qs: &[usize]) -> Op {
        Op::Gate(Gate::fixed(name, qs))
    }

    #[test]
    fn rewiring_stays_injective() {
        let mut r = Rewiring::identity([0, 1, 2]);
        r.swap_physical(0, 2);
        assert_eq!(r.physical(0), Some(2));
        assert_eq!(r.logical(0), Some(2));
        r.swap_physical(2, 5);
        assert_eq!(r.physical(0), Some(5));
        assert_eq!(r.logical(2), None);
    }

    #[test]
    fn adjacent_gate_needs_no_swaps() {
        let chip = line(2);
        let b = run(&[g("CZ", &[0, 1])], &chip, SearchMode::Greedy);
        assert_eq!(b.swaps, 0);
        assert_eq!(b.ops, [g("CZ", &[0, 1])]);
        assert_eq!(b.entry, Rewiring::identity([0, 1]));
    }

    #[test]
    fn first_qubit_goes_to_zero() {
        let chip = ChipSpecification::with_defaults(1, &[]);
        let b = run(&[Op::Gate(Gate::rot("RZ", 0.3, &[7]))], &chip, SearchMode::Greedy);
        assert_eq!(b.entry.physical(7), Some(0));
    }

    #[test]
    fn partner_lands_next_to_its_peer() {
        let chip = line(5);
        let ops = [Op::Gate(Gate::rot("RZ", 0.3, &[0])), g("CZ", &[0, 1])];
        let b = run(&ops, &chip, SearchMode::Greedy);
        let (p0, p1) = (b.entry.physical(0).unwrap(), b.entry.physical(1).unwrap());
        assert!(chip.adjacent(p0, p1));
        assert_eq!(b.swaps, 0);
    }

    #[test]
    fn ends_of_a_line_need_swaps() {
        let chip = line(5);
        let start = Rewiring::identity(0..5);
        let table = build_cost_table(&chip, CostMode::Duration);
        let reg = Registry::default();
        for search in [SearchMode::Greedy, SearchMode::AStar] {
            let cfg = AddressConfig {
                search,
                ..Default::default()
            };
            let b = address_block(&[g("CZ", &[0, 4])], &chip, &table, &cfg, Some(&start), &RuleContext::new(&chip), &reg)
                .unwrap();
            assert_eq!(b.swaps, 3, "{search}");
            for op in &b.ops {
                assert_eq!(is_native(&chip, op.as_gate().unwrap()), NativeStatus::Native);
            }
        }
    }

    #[test]
    fn permutation_tracks_swaps() {
        let chip = line(3);
        let table = build_cost_table(&chip, CostMode::Duration);
        let start = Rewiring::identity(0..3);
        let b = address_block(
            &[g("CZ", &[0, 2])],
            &chip,
            &table,
            &AddressConfig::default(),
            Some(&start),
            &RuleContext::new(&chip),
            &Registry::default(),
        )
        .unwrap();
        assert_eq!(b.swaps, 1);
        for (l, p) in b.exit.pairs() {
            assert_eq!(b.permutation[&b.entry.physical(l).unwrap()], p);
        }
    }

    #[test]
    fn swap_after_gate_on_pair_is_fused() {
        let ops = vec![g("CZ", &[0, 1]), g("H", &[2]), g("X", &[1]), g("SWAP", &[0, 1]), g("H", &[0])];
        let out = recombine_swaps(ops);
        assert_eq!(out.len(), 3);
        assert_eq!(out[1].as_gate().unwrap().name, "U");
        let blocked = recombine_swaps(vec![g("CZ", &[0, 1]), g("CZ", &[1, 2]), g("SWAP", &[0, 1])]);
        assert_eq!(blocked.len(), 3);
    }
}
