//! Basic blocks of quantum instructions joined by classical control flow.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{
    builtin_signature, Argument, GateApplication, Instruction, MemoryRef, Program,
};
use crate::ir::{Gate, Op};
use crate::linalg::gates::defgate_matrix;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CfgError {
    #[error("jump to undefined label @{0}")]
    UnresolvedLabel(String),
    #[error("label @{0} is defined twice")]
    DuplicateLabel(String),
    #[error("{0}: qubit arguments must be integers after circuit expansion")]
    SymbolicQubit(String),
    #[error("unknown gate {0}")]
    UnknownGate(String),
    #[error("{gate}: expected {expected} qubits, got {got}")]
    Arity {
        gate: String,
        expected: usize,
        got: usize,
    },
    #[error("{0}: DEFGATE parameters must be numeric")]
    SymbolicDefgate(String),
    #[error("{gate}: {message}")]
    BadMatrix { gate: String, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Terminator {
    /// End of program.
    Halt,
    /// Continue with the next block.
    Fallthrough,
    Jump(String),
    JumpWhen { label: String, condition: MemoryRef },
    JumpUnless { label: String, condition: MemoryRef },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasicBlock {
    pub label: Option<String>,
    /// Pragmas are kept and re-emitted at the head of their block.
    pub pragmas: Vec<String>,
    pub ops: Vec<Op>,
    pub terminator: Terminator,
}

/// Whether control reaches a successor by taking a jump or by falling through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Edge {
    Taken,
    Fallthrough,
}

/// Blocks in source order; block 0 is the entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlFlowGraph {
    pub blocks: Vec<BasicBlock>,
    labels: BTreeMap<String, usize>,
}

/// Convert a gate application into a gate on concrete qubits.
pub fn lower_application(app: &GateApplication, program: &Program) -> Result<Gate, CfgError> {
    let qubits = app.qubits().ok_or_else(|| CfgError::SymbolicQubit(app.to_string()))?;
    if let Some((_, arity)) = builtin_signature(&app.name) {
        if arity != qubits.len() {
            return Err(CfgError::Arity {
                gate: app.to_string(),
                expected: arity,
                got: qubits.len(),
            });
        }
        return Ok(Gate::new(&app.name, app.params.clone(), qubits));
    }
    let def = program
        .gate_def(&app.name)
        .ok_or_else(|| CfgError::UnknownGate(app.name.clone()))?;
    if def.qubit_count() != qubits.len() {
        return Err(CfgError::Arity {
            gate: app.to_string(),
            expected: def.qubit_count(),
            got: qubits.len(),
        });
    }
    let values: Vec<f64> = app
        .params
        .iter()
        .map(|p| p.value().ok_or_else(|| CfgError::SymbolicDefgate(app.to_string())))
        .collect::<Result<_, _>>()?;
    let m = defgate_matrix(def, &values).map_err(|e| CfgError::BadMatrix {
        gate: app.to_string(),
        message: e.to_string(),
    })?;
    let mut g = Gate::from_matrix(&app.name, m, qubits);
    g.params = app.params.clone();
    Ok(g)
}

impl ControlFlowGraph {
    pub fn entry(&self) -> usize {
        0
    }

    pub fn block_of(&self, label: &str) -> Option<usize> {
        self.labels.get(label).copied()
    }

    pub fn successors(&self, i: usize) -> Vec<(usize, Edge)> {
        let next = || (i + 1 < self.blocks.len()).then_some((i + 1, Edge::Fallthrough));
        match &self.blocks[i].terminator {
            Terminator::Halt => Vec::new(),
            Terminator::Fallthrough => next().into_iter().collect(),
            Terminator::Jump(l) => vec![(self.labels[l], Edge::Taken)],
            Terminator::JumpWhen { label, .. } | Terminator::JumpUnless { label, .. } => {
                let mut v = vec![(self.labels[label], Edge::Taken)];
                v.extend(next());
                v
            }
        }
    }

    pub fn predecessors(&self, i: usize) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&p| self.successors(p).iter().any(|(s, _)| *s == i))
            .collect()
    }

    /// Reverse post-order from the entry, followed by unreachable blocks in
    /// source order.
    pub fn compile_order(&self) -> Vec<usize> {
        let n = self.blocks.len();
        let mut seen = vec![false; n];
        let mut post = Vec::with_capacity(n);
        if n > 0 {
            // iterative DFS keeping a successor cursor per frame
            let mut stack = vec![(0usize, 0usize)];
            seen[0] = true;
            while let Some(&mut (b, ref mut k)) = stack.last_mut() {
                let succ = self.successors(b);
                if *k < succ.len() {
                    let s = succ[*k].0;
                    *k += 1;
                    if !seen[s] {
                        seen[s] = true;
                        stack.push((s, 0));
                    }
                } else {
                    post.push(b);
                    stack.pop();
                }
            }
        }
        post.reverse();
        post.extend((0..n).filter(|&i| !seen[i]));
        post
    }

    pub fn reachable(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut todo = vec![0];
        while let Some(b) = todo.pop() {
            if b < self.blocks.len() && seen.insert(b) {
                todo.extend(self.successors(b).into_iter().map(|(s, _)| s));
            }
        }
        seen
    }
}

/// Split an expanded program at every label and after every jump.
pub fn build_cfg(p: &Program) -> Result<ControlFlowGraph, CfgError> {
    let mut blocks = Vec::new();
    let mut cur = BasicBlock {
        label: None,
        pragmas: Vec::new(),
        ops: Vec::new(),
        terminator: Terminator::Halt,
    };
    let mut open = true;
    let fresh = |label: Option<String>| BasicBlock {
        label,
        pragmas: Vec::new(),
        ops: Vec::new(),
        terminator: Terminator::Halt,
    };
    for ins in &p.body {
        match ins {
            Instruction::Label(l) => {
                let empty = cur.label.is_none() && cur.ops.is_empty() && cur.pragmas.is_empty();
                if open && !empty {
                    cur.terminator = Terminator::Fallthrough;
                    blocks.push(std::mem::replace(&mut cur, fresh(None)));
                }
                cur = fresh(Some(l.clone()));
                open = true;
                continue;
            }
            _ if !open => {
                cur = fresh(None);
                open = true;
            }
            _ => {}
        }
        match ins {
            Instruction::Gate(app) => cur.ops.push(Op::Gate(lower_application(app, p)?)),
            Instruction::Measure { qubit, target } => match qubit {
                Argument::Qubit(q) => cur.ops.push(Op::Measure {
                    qubit: *q,
                    target: target.clone(),
                }),
                other => return Err(CfgError::SymbolicQubit(format!("MEASURE {other}"))),
            },
            Instruction::Pragma(text) => cur.pragmas.push(text.clone()),
            Instruction::Jump(l) => cur.terminator = Terminator::Jump(l.clone()),
            Instruction::JumpWhen { label, condition } => {
                cur.terminator = Terminator::JumpWhen {
                    label: label.clone(),
                    condition: condition.clone(),
                }
            }
            Instruction::JumpUnless { label, condition } => {
                cur.terminator = Terminator::JumpUnless {
                    label: label.clone(),
                    condition: condition.clone(),
                }
            }
            Instruction::Label(_) => unreachable!(),
        }
        if ins.is_jump() {
            blocks.push(std::mem::replace(&mut cur, fresh(None)));
            open = false;
        }
    }
    if open {
        // the last block, or an entry block for an empty program
        let keep = blocks.is_empty() || cur.label.is_some() || !cur.ops.is_empty() || !cur.pragmas.is_empty();
        if keep {
            cur.terminator = Terminator::Halt;
            blocks.push(cur);
        }
    }
    if blocks.is_empty() {
        blocks.push(fresh(None));
    }
    let mut labels = BTreeMap::new();
    for (i, b) in blocks.iter().enumerate() {
        if let Some(l) = &b.label {
            if labels.insert(l.clone(), i).is_some() {
                return Err(CfgError::DuplicateLabel(l.clone()));
            }
        }
    }
    for b in &blocks {
        match &b.terminator {
            Terminator::Jump(l) | Terminator::JumpWhen { label: l, .. } | Terminator::JumpUnless { label: l, .. } => {
                if !labels.contains_key(l) {
                    return Err(CfgError::UnresolvedLabel(l.clone()));
                }
            }
            _ => {}
        }
    }
    Ok(ControlFlowGraph { blocks, labels })
}

/// Compiled code for one block plus the rewiring fix-ups on its out-edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompiledBlock {
    pub body: Vec<Op>,
    /// Runs only when the block's jump is taken.
    pub taken_fixup: Vec<Op>,
    /// Runs when control falls through or the jump is unconditional.
    pub fallthrough_fixup: Vec<Op>,
}

fn op_instruction(op: &Op) -> Instruction {
    match op {
        Op::Gate(g) => Instruction::Gate(GateApplication {
            name: g.name.clone(),
            params: g.params.clone(),
            args: g.qubits.iter().map(|&q| Argument::Qubit(q)).collect(),
        }),
        Op::Measure { qubit, target } => Instruction::Measure {
            qubit: Argument::Qubit(*qubit),
            target: target.clone(),
        },
    }
}

fn fresh_label(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut k = 0;
    loop {
        let l = format!("{base}{k}");
        if taken.insert(l.clone()) {
            return l;
        }
        k += 1;
    }
}

/// Linearize compiled blocks back into an instruction list. Fix-ups for taken
/// conditional jumps go into trampolines placed after the program's end.
pub fn reassemble(cfg: &ControlFlowGraph, compiled: &[CompiledBlock]) -> Vec<Instruction> {
    let mut labels: BTreeSet<String> = cfg.labels.keys().cloned().collect();
    let mut out = Vec::new();
    let mut trampolines = Vec::new();
    let emit = |ops: &[Op], out: &mut Vec<Instruction>| out.extend(ops.iter().map(op_instruction));
    for (b, c) in cfg.blocks.iter().zip(compiled) {
        if let Some(l) = &b.label {
            out.push(Instruction::Label(l.clone()));
        }
        out.extend(b.pragmas.iter().map(|p| Instruction::Pragma(p.clone())));
        emit(&c.body, &mut out);
        match &b.terminator {
            Terminator::Halt | Terminator::Fallthrough => emit(&c.fallthrough_fixup, &mut out),
            Terminator::Jump(l) => {
                emit(&c.taken_fixup, &mut out);
                out.push(Instruction::Jump(l.clone()));
            }
            Terminator::JumpWhen { label, condition } | Terminator::JumpUnless { label, condition } => {
                let target = if c.taken_fixup.is_empty() {
                    label.clone()
                } else {
                    let t = fresh_label("fixup", &mut labels);
                    trampolines.push((t.clone(), c.taken_fixup.clone(), label.clone()));
                    t
                };
                out.push(match b.terminator {
                    Terminator::JumpWhen { .. } => Instruction::JumpWhen {
                        label: target,
                        condition: condition.clone(),
                    },
                    _ => Instruction::JumpUnless {
                        label: target,
                        condition: condition.clone(),
                    },
                });
                emit(&c.fallthrough_fixup, &mut out);
            }
        }
    }
    if !trampolines.is_empty() {
        let end = fresh_label("end", &mut labels);
        out.push(Instruction::Jump(end.clone()));
        for (t, ops, target) in trampolines {
            out.push(Instruction::Label(t));
            emit(&ops, &mut out);
            out.push(Instruction::Jump(target));
        }
        out.push(Instruction::Label(end));
    }
    out
}
