//! Dependency graph of a block's instructions.

use std::collections::BTreeMap;

use crate::ir::Op;

/// Resources an instruction uses: its qubits and, for a measurement, the
/// classical address it writes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resource {
    Qubit(usize),
    Memory(String, usize),
}

pub fn resources(op: &Op) -> Vec<Resource> {
    let mut r: Vec<Resource> = op.qubits().into_iter().map(Resource::Qubit).collect();
    if let Op::Measure { target: Some(t), .. } = op {
        r.push(Resource::Memory(t.name.clone(), t.offset()));
    }
    r
}

/// Edges join consecutive users of each resource.
#[derive(Clone, Debug, PartialEq)]
pub struct InstructionDag {
    pub preds: Vec<Vec<usize>>,
    pub succs: Vec<Vec<usize>>,
}

impl InstructionDag {
    pub fn build(ops: &[Op]) -> InstructionDag {
        let mut last: BTreeMap<Resource, usize> = BTreeMap::new();
        let mut preds = vec![Vec::new(); ops.len()];
        let mut succs = vec![Vec::new(); ops.len()];
        for (i, op) in ops.iter().enumerate() {
            for r in resources(op) {
                if let Some(&j) = last.get(&r) {
                    if !preds[i].contains(&j) {
                        preds[i].push(j);
                        succs[j].push(i);
                    }
                }
                last.insert(r, i);
            }
        }
        InstructionDag { preds, succs }
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.preds.iter().map(Vec::len).sum()
    }

    /// Number of instructions on the longest path.
    pub fn depth(&self) -> usize {
        self.longest_path(|_| 1.0) as usize
    }

    /// Heaviest path under per-instruction weights.
    pub fn longest_path(&self, weight: impl Fn(usize) -> f64) -> f64 {
        let mut finish = vec![0.0f64; self.len()];
        for i in 0..self.len() {
            let start = self.preds[i].iter().map(|&p| finish[p]).fold(0.0, f64::max);
            finish[i] = start + weight(i);
        }
        finish.into_iter().fold(0.0, f64::max)
    }
}
