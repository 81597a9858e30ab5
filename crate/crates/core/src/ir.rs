//! Gate-level instructions used after parsing.

use std::fmt;
use std::sync::Arc;

use crate::frontend::{MemoryRef, ParamExpr};
use crate::linalg::UnitaryMatrix;

/// A gate applied to concrete qubits. Gates built from a matrix carry it in
/// `matrix`, which then takes precedence over the name.
#[derive(Clone, Debug)]
pub struct Gate {
    pub name: String,
    pub params: Vec<ParamExpr>,
    pub qubits: Vec<usize>,
    pub matrix: Option<Arc<UnitaryMatrix>>,
}

impl Gate {
    pub fn new(name: &str, params: Vec<ParamExpr>, qubits: Vec<usize>) -> Gate {
        Gate {
            name: name.to_string(),
            params,
            qubits,
            matrix: None,
        }
    }

    /// A gate with no parameters.
    pub fn fixed(name: &str, qubits: &[usize]) -> Gate {
        Gate::new(name, Vec::new(), qubits.to_vec())
    }

    /// A one-parameter gate with a numeric parameter.
    pub fn rot(name: &str, angle: f64, qubits: &[usize]) -> Gate {
        Gate::new(name, vec![ParamExpr::constant(angle)], qubits.to_vec())
    }

    pub fn from_matrix(name: &str, matrix: UnitaryMatrix, qubits: Vec<usize>) -> Gate {
        Gate {
            name: name.to_string(),
            params: Vec::new(),
            qubits,
            matrix: Some(Arc::new(matrix)),
        }
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_concrete(&self) -> bool {
        self.params.iter().all(ParamExpr::is_concrete)
    }

    /// Numeric parameter `i`, if concrete.
    pub fn param(&self, i: usize) -> Option<f64> {
        self.params.get(i).and_then(ParamExpr::value)
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }

    /// The same gate on relabelled qubits.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        Gate {
            qubits: self.qubits.iter().map(|&q| f(q)).collect(),
            ..self.clone()
        }
    }
}

impl PartialEq for Gate {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.qubits == other.qubits
            && match (&self.matrix, &other.matrix) {
                (None, None) => true,
                (Some(a), Some(b)) => a.approx_eq(b, 1e-12),
                _ => false,
            }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", ps.join(", "))?;
        }
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

/// An element of a basic block.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Gate(Gate),
    Measure {
        qubit: usize,
        target: Option<MemoryRef>,
    },
}

impl Op {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Op::Gate(g) => g.qubits.clone(),
            Op::Measure { qubit, .. } => vec![*qubit],
        }
    }

    pub fn as_gate(&self) -> Option<&Gate> {
        match self {
            Op::Gate(g) => Some(g),
            _ => None,
        }
    }

    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Op {
        match self {
            Op::Gate(g) => Op::Gate(g.remap(f)),
            Op::Measure { qubit, target } => Op::Measure {
                qubit: f(*qubit),
                target: target.clone(),
            },
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Gate(g) => write!(f, "{g}"),
            Op::Measure {
                qubit,
                target: Some(t),
            } => write!(f, "MEASURE {qubit} {t}"),
            Op::Measure { qubit, target: None } => write!(f, "MEASURE {qubit}"),
        }
    }
}

/// Number of gates acting on two or more qubits.
pub fn two_qubit_count(gates: &[Gate]) -> usize {
    gates.iter().filter(|g| g.arity() >= 2).count()
}
