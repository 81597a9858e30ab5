//! The whole compiler: parse, split into blocks, address, compress, reassemble.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::addresser::{address_block, AddressConfig, AddressError, InstructionDag, Rewiring, SearchMode};
use crate::cfg::{build_cfg, reassemble, CfgError, CompiledBlock, ControlFlowGraph, Edge, Terminator};
use crate::chipspec::{build_cost_table, ChipSpecification, CostMode};
use crate::compressor::{compress, DEFAULT_COMPRESSION_LIMIT};
use crate::frontend::{expand_circuits, parse_program, Program};
use crate::ir::{Gate, Op};
use crate::rules::{gate_cost, nativize_sequence, Registry, RuleContext, RuleOptions, Trace};
use crate::statesim::{state_aware_pass, DEFAULT_ENTANGLEMENT_LIMIT};

#[derive(Clone, Debug)]
pub struct CompileConfig {
    /// Cost measure; chosen from the chip when absent.
    pub cost: Option<CostMode>,
    /// Routing search; chosen from the chip when absent.
    pub search: Option<SearchMode>,
    pub discount: f64,
    pub lookahead: usize,
    pub compression_limit: usize,
    pub state_prep: bool,
    pub verbose: bool,
    pub seed: Option<u64>,
    /// Place logical qubit `q` on physical qubit `q` at program start.
    pub naive_rewiring: bool,
    pub disabled_rules: Vec<String>,
    pub entanglement_limit: usize,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig {
            cost: None,
            search: None,
            discount: 0.5,
            lookahead: 20,
            compression_limit: DEFAULT_COMPRESSION_LIMIT,
            state_prep: false,
            verbose: false,
            seed: None,
            naive_rewiring: false,
            disabled_rules: Vec::new(),
            entanglement_limit: DEFAULT_ENTANGLEMENT_LIMIT,
        }
    }
}

impl CompileConfig {
    pub fn validate(&self) -> Result<(), CompileError> {
        let bad = |m: String| Err(CompileError::new(Stage::Config, m));
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad(format!("discount must lie strictly between 0 and 1, got {}", self.discount));
        }
        if !(1..=4).contains(&self.compression_limit) {
            return bad(format!("compression limit must be between 1 and 4, got {}", self.compression_limit));
        }
        if self.entanglement_limit == 0 {
            return bad("entanglement limit must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Parse,
    Expand,
    Cfg,
    Address,
    Compress,
    Fixup,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "configuration",
            Stage::Parse => "parse",
            Stage::Expand => "circuit expansion",
            Stage::Cfg => "control flow",
            Stage::Address => "addressing",
            Stage::Compress => "compression",
            Stage::Fixup => "rewiring fix-up",
        })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{stage} error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
pub struct CompileError {
    pub stage: Stage,
    pub message: String,
    pub line: Option<usize>,
}

impl CompileError {
    pub fn new(stage: Stage, message: impl Into<String>) -> CompileError {
        CompileError {
            stage,
            message: message.into(),
            line: None,
        }
    }
}

/// Statistics about a compiled program.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CompileReport {
    pub gate_counts: BTreeMap<String, usize>,
    pub instruction_count: usize,
    pub two_qubit_count: usize,
    pub depth: usize,
    pub duration_estimate: f64,
    pub swap_count: usize,
    pub blocks: usize,
    pub cost_mode: String,
    pub search_mode: String,
    pub initial_rewiring: BTreeMap<usize, usize>,
    pub final_rewiring: BTreeMap<usize, usize>,
    pub timings_ms: BTreeMap<String, f64>,
}

/// A compiled basic block with the placements it assumes and produces.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockResult {
    pub body: Vec<Op>,
    pub taken_fixup: Vec<Op>,
    pub fallthrough_fixup: Vec<Op>,
    pub entry: Rewiring,
    pub exit: Rewiring,
    /// Where the contents of each physical qubit move over the body.
    pub permutation: BTreeMap<usize, usize>,
    pub swaps: usize,
}

#[derive(Clone, Debug)]
pub struct CompileOutput {
    pub program: Program,
    pub text: String,
    pub report: CompileReport,
    pub trace: Vec<String>,
    pub cfg: ControlFlowGraph,
    pub blocks: Vec<BlockResult>,
}

fn resolve_modes(chip: &ChipSpecification, cfg: &CompileConfig) -> (CostMode, SearchMode) {
    let fidelity = chip.has_fidelity_data();
    let cost = cfg.cost.unwrap_or(if fidelity { CostMode::Fidelity } else { CostMode::Duration });
    let search = cfg.search.unwrap_or(if fidelity { SearchMode::AStar } else { SearchMode::Greedy });
    (cost, search)
}

fn cfg_error(e: CfgError) -> CompileError {
    CompileError::new(Stage::Cfg, e.to_string())
}

fn address_error(e: AddressError) -> CompileError {
    CompileError::new(Stage::Address, e.to_string())
}

/// Parse, expand and split a program into blocks.
pub fn front_end(text: &str) -> Result<(Program, ControlFlowGraph), CompileError> {
    let parsed = parse_program(text).map_err(|e| CompileError {
        stage: Stage::Parse,
        message: format!("column {}: {}", e.column, e.message),
        line: Some(e.line),
    })?;
    let expanded = expand_circuits(&parsed).map_err(|e| CompileError::new(Stage::Expand, e.to_string()))?;
    let graph = build_cfg(&expanded).map_err(cfg_error)?;
    Ok((expanded, graph))
}

/// Compile program text for `chip`.
pub fn run_pipeline(text: &str, chip: &ChipSpecification, cfg: &CompileConfig) -> Result<CompileOutput, CompileError> {
    cfg.validate()?;
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        let now = Instant::now();
        *timings.entry(name.to_string()).or_insert(0.0) += (now - clock).as_secs_f64() * 1e3;
        clock = now;
    };
    let (program, graph) = front_end(text)?;
    lap("parse", &mut timings);

    let mut reg = Registry::default();
    for name in &cfg.disabled_rules {
        if !reg.disable(name) {
            return Err(CompileError::new(Stage::Config, format!("unknown rule {name}")));
        }
    }
    let (mode, search) = resolve_modes(chip, cfg);
    let trace = Trace::default();
    let ctx = RuleContext {
        chip,
        mode,
        state: None,
        options: RuleOptions::default(),
        trace: cfg.verbose.then_some(&trace),
    };
    let logical: BTreeSet<usize> = graph.blocks.iter().flat_map(|b| b.ops.iter().flat_map(Op::qubits)).collect();
    if logical.len() > chip.qubits.len() {
        return Err(address_error(AddressError::ChipExhausted(chip.qubits.len())));
    }
    trace.note(format!(
        "[cfg] {} block(s), {} logical qubit(s), cost {}, search {search}",
        graph.blocks.len(),
        logical.len(),
        mode_name(mode)
    ));
    let table = build_cost_table(chip, mode);
    let acfg = AddressConfig {
        mode,
        search,
        discount: cfg.discount,
        lookahead: cfg.lookahead,
        seed: cfg.seed,
    };
    lap("setup", &mut timings);

    let mut results: Vec<Option<BlockResult>> = vec![None; graph.blocks.len()];
    let mut entries: Vec<Option<Rewiring>> = vec![None; graph.blocks.len()];
    if cfg.naive_rewiring {
        let mut r = Rewiring::new();
        let mut spare = chip.qubit_ids().filter(|p| !logical.contains(p));
        for &l in &logical {
            let p = if chip.has_qubit(l) { l } else { spare.next().expect("chip has room") };
            r.assign(l, p);
        }
        entries[graph.entry()] = Some(r);
    }
    for b in graph.compile_order() {
        let block = &graph.blocks[b];
        trace.note(format!("[address] block {}", block.label.as_deref().unwrap_or("<entry>")));
        let initial = entries[b].clone();
        let addressed =
            address_block(&block.ops, chip, &table, &acfg, initial.as_ref(), &ctx, &reg).map_err(address_error)?;
        lap("address", &mut timings);
        let (entry, exit) = complete(&addressed.entry, &addressed.exit, &addressed.permutation, &logical, chip);
        let mut body = compress(&addressed.ops, &ctx, &reg, cfg.compression_limit);
        let from_start = b == graph.entry() && graph.predecessors(b).is_empty();
        if cfg.state_prep && from_start {
            let sctx = RuleContext {
                options: RuleOptions {
                    state_prep: true,
                    ..ctx.options
                },
                ..ctx
            };
            body = state_aware_pass(&body, &sctx, &reg, cfg.entanglement_limit);
            body = compress(&body, &ctx, &reg, cfg.compression_limit);
        }
        lap("compress", &mut timings);
        entries[b] = Some(entry.clone());
        results[b] = Some(BlockResult {
            body,
            taken_fixup: Vec::new(),
            fallthrough_fixup: Vec::new(),
            entry,
            exit,
            permutation: addressed.permutation,
            swaps: addressed.swaps,
        });
        for (s, _) in graph.successors(b) {
            if entries[s].is_none() {
                entries[s] = results[b].as_ref().map(|r| r.exit.clone());
            }
        }
    }

    for b in 0..graph.blocks.len() {
        for (s, edge) in graph.successors(b) {
            let from = results[b].as_ref().unwrap().exit.clone();
            let to = entries[s].clone().unwrap();
            if from == to {
                continue;
            }
            let swaps = token_swaps(chip, &from, &to).map_err(|e| CompileError::new(Stage::Fixup, e.to_string()))?;
            let gates: Vec<Gate> = swaps.iter().map(|&(x, y)| Gate::fixed("SWAP", &[x, y])).collect();
            let native = nativize_sequence(&gates, &ctx, &reg).map_err(|e| CompileError::new(Stage::Fixup, e.to_string()))?;
            let ops = compress(&native.into_iter().map(Op::Gate).collect::<Vec<_>>(), &ctx, &reg, cfg.compression_limit);
            trace.note(format!("[fixup] block {b} -> block {s}: {from} to {to}, {} SWAPs", swaps.len()));
            let r = results[b].as_mut().unwrap();
            r.swaps += swaps.len();
            match edge {
                Edge::Taken => r.taken_fixup = ops,
                Edge::Fallthrough => r.fallthrough_fixup = ops,
            }
        }
    }
    lap("fixup", &mut timings);

    let results: Vec<BlockResult> = results.into_iter().map(|r| r.expect("every block compiled")).collect();
    let compiled: Vec<CompiledBlock> = results
        .iter()
        .map(|r| CompiledBlock {
            body: r.body.clone(),
            taken_fixup: r.taken_fixup.clone(),
            fallthrough_fixup: r.fallthrough_fixup.clone(),
        })
        .collect();
    let out_program = Program {
        declarations: program.declarations.clone(),
        gate_defs: Vec::new(),
        circuit_defs: Vec::new(),
        body: reassemble(&graph, &compiled),
    };
    let text = out_program.to_string();
    lap("reassemble", &mut timings);

    let last = graph
        .blocks
        .iter()
        .rposition(|b| b.terminator == Terminator::Halt)
        .unwrap_or(graph.blocks.len() - 1);
    let mut report = report_for(&results, chip);
    report.cost_mode = mode_name(mode).to_string();
    report.search_mode = search.to_string();
    report.initial_rewiring = results[graph.entry()].entry.as_map().clone();
    report.final_rewiring = results[last].exit.as_map().clone();
    report.blocks = results.len();
    report.timings_ms = timings;
    Ok(CompileOutput {
        program: out_program,
        text,
        report,
        trace: trace.take(),
        cfg: graph,
        blocks: results,
    })
}

fn mode_name(mode: CostMode) -> &'static str {
    match mode {
        CostMode::Duration => "duration",
        CostMode::Fidelity => "fidelity",
    }
}

fn report_for(results: &[BlockResult], chip: &ChipSpecification) -> CompileReport {
    let mut report = CompileReport::default();
    for r in results {
        let all: Vec<Op> = r.body.iter().chain(&r.taken_fixup).chain(&r.fallthrough_fixup).cloned().collect();
        for op in &all {
            let name = match op {
                Op::Gate(g) => g.name.clone(),
                Op::Measure { .. } => "MEASURE".to_string(),
            };
            *report.gate_counts.entry(name).or_insert(0) += 1;
            if op.qubits().len() >= 2 {
                report.two_qubit_count += 1;
            }
        }
        report.instruction_count += all.len();
        let dag = InstructionDag::build(&r.body);
        report.depth += dag.depth();
        let duration = |i: usize| match &r.body[i] {
            Op::Gate(g) => gate_cost(chip, g, CostMode::Duration),
            Op::Measure { .. } => 0.0,
        };
        report.duration_estimate += dag.longest_path(duration);
        report.swap_count += r.swaps;
    }
    report
}

/// Extend the block's placements to every program qubit. Qubits the block
/// does not touch go to the lowest free physical qubits and follow the
/// block's permutation.
fn complete(
    entry: &Rewiring,
    exit: &Rewiring,
    permutation: &BTreeMap<usize, usize>,
    logical: &BTreeSet<usize>,
    chip: &ChipSpecification,
) -> (Rewiring, Rewiring) {
    let (mut entry, mut exit) = (entry.clone(), exit.clone());
    let mut free = chip.qubit_ids().filter(|&p| entry.logical(p).is_none()).collect::<Vec<_>>().into_iter();
    for &l in logical {
        if entry.physical(l).is_some() {
            continue;
        }
        let p = free.next().expect("chip has room for every program qubit");
        entry.assign(l, p);
        exit.assign(l, permutation.get(&p).copied().unwrap_or(p));
    }
    (entry, exit)
}

/// SWAPs on chip links that move every logical qubit from its place in `from`
/// to its place in `to`, by routing tokens to the leaves of a spanning tree.
pub fn token_swaps(chip: &ChipSpecification, from: &Rewiring, to: &Rewiring) -> Result<Vec<(usize, usize)>, AddressError> {
    let start = match from.pairs().next() {
        Some((_, p)) => p,
        None => return Ok(Vec::new()),
    };
    let mut parent: BTreeMap<usize, Option<usize>> = BTreeMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for n in chip.neighbors(v) {
            if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(n) {
                e.insert(Some(v));
                queue.push_back(n);
            }
        }
    }
    for (l, p) in from.pairs() {
        let q = to.physical(l).ok_or(AddressError::UnknownQubit(l))?;
        if !parent.contains_key(&p) || !parent.contains_key(&q) {
            return Err(AddressError::Disconnected(p, q));
        }
    }
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = parent.keys().map(|&v| (v, BTreeSet::new())).collect();
    for (&v, &p) in &parent {
        if let Some(p) = p {
            adj.get_mut(&v).unwrap().insert(p);
            adj.get_mut(&p).unwrap().insert(v);
        }
    }
    let mut at: BTreeMap<usize, Option<usize>> = parent.keys().map(|&p| (p, from.logical(p))).collect();
    let mut swaps = Vec::new();
    while !adj.is_empty() {
        let v = *adj.iter().find(|(_, n)| n.len() <= 1).expect("a tree has a leaf").0;
        let wanted = to.logical(v);
        let holds_right = match wanted {
            Some(l) => at[&v] == Some(l),
            None => at[&v].is_none_or(|l| to.physical(l) == Some(v)),
        };
        if !holds_right {
            let src = match wanted {
                Some(l) => *at.iter().find(|(_, t)| **t == Some(l)).unwrap().0,
                None => nearest_free(&adj, &at, v),
            };
            let path = tree_path(&adj, src, v);
            for w in path.windows(2) {
                let (x, y) = (w[0], w[1]);
                if at[&x].is_some() || at[&y].is_some() {
                    swaps.push((x.min(y), x.max(y)));
                }
                let (tx, ty) = (at[&x], at[&y]);
                at.insert(x, ty);
                at.insert(y, tx);
            }
        }
        let ns = adj.remove(&v).unwrap();
        for n in ns {
            adj.get_mut(&n).unwrap().remove(&v);
        }
    }
    Ok(swaps)
}

fn tree_path(adj: &BTreeMap<usize, BTreeSet<usize>>, from: usize, to: usize) -> Vec<usize> {
    let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for &n in &adj[&v] {
            if seen.insert(n) {
                prev.insert(n, v);
                queue.push_back(n);
            }
        }
    }
    let mut path = vec![to];
    while let Some(&p) = prev.get(path.last().unwrap()) {
        path.push(p);
    }
    path.reverse();
    path
}

fn nearest_free(adj: &BTreeMap<usize, BTreeSet<usize>>, at: &BTreeMap<usize, Option<usize>>, v: usize) -> usize {
    let mut queue = VecDeque::from([v]);
    let mut seen = BTreeSet::from([v]);
    while let Some(x) = queue.pop_front() {
        if at[&x].is_none() {
            return x;
        }
        for &n in &adj[&x] {
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    unreachable!("a vertex no logical qubit wants always leaves a free slot")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> ChipSpecification {
        let links: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        ChipSpecification::with_defaults(n, &links)
    }

    fn rew(pairs: &[(usize, usize)]) -> Rewiring {
        let mut r = Rewiring::new();
        for &(l, p) in pairs {
            r.assign(l, p);
        }
        r
    }

    fn apply(from: &Rewiring, swaps: &[(usize, usize)]) -> Rewiring {
        let mut r = from.clone();
        for &(a, b) in swaps {
            r.swap_physical(a, b);
        }
        r
    }

    #[test]
    fn token_swapping_reaches_target() {
        let chip = line(4);
        let from = rew(&[(0, 0), (1, 1), (2, 2), (3, 3)]);
        let to = rew(&[(0, 3), (1, 2), (2, 1), (3, 0)]);
        let s = token_swaps(&chip, &from, &to).unwrap();
        assert_eq!(apply(&from, &s), to);
        for (a, b) in &s {
            assert!(chip.adjacent(*a, *b));
        }
    }

    #[test]
    fn token_swapping_with_free_qubits() {
        let chip = line(5);
        let from = rew(&[(0, 0), (1, 4)]);
        let to = rew(&[(0, 2), (1, 3)]);
        let s = token_swaps(&chip, &from, &to).unwrap();
        assert_eq!(apply(&from, &s), to);
    }

    #[test]
    fn empty_program() {
        let chip = line(2);
        let out = run_pipeline("", &chip, &CompileConfig::default()).unwrap();
        assert_eq!(out.text, "");
        assert_eq!(out.report.instruction_count, 0);
        assert_eq!(out.report.two_qubit_count, 0);
    }

    #[test]
    fn config_limits() {
        let cfg = CompileConfig {
            discount: 1.0,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().stage, Stage::Config);
        let cfg = CompileConfig {
            compression_limit: 5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = run_pipeline("H 0\nFOO(\n", &line(2), &CompileConfig::default()).unwrap_err();
        assert_eq!(e.stage, Stage::Parse);
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn back_edge_restores_the_loop_entry() {
        use crate::sim::{verify_block, VerifyMode};
        let chip = line(3);
        let src = "DECLARE c BIT\nLABEL @top\nCNOT 0 2\nJUMP-WHEN @top c\nH 1\n";
        let out = run_pipeline(src, &chip, &CompileConfig::default()).unwrap();
        let b = &out.blocks[0];
        assert_eq!(b.swaps % 2, 0, "routing SWAPs are undone on the back edge");
        let gates = |ops: &[Op]| ops.iter().map(|o| o.as_gate().unwrap().clone()).collect::<Vec<_>>();
        let mut looped = gates(&b.body);
        looped.extend(gates(&b.taken_fixup));
        let input = [Gate::fixed("CNOT", &[0, 2])];
        assert!(verify_block(&input, &looped, &b.entry, &BTreeMap::new(), VerifyMode::Unitary, 1e-7).unwrap());
        crate::frontend::parse_program(&out.text).unwrap();
    }
}
