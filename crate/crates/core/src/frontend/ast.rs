//! Program representation produced by the parser.

use std::collections::BTreeMap;
use std::fmt;

use super::expr::{Expr, ParamExpr};

/// Builtin gates as `(name, parameter count, qubit count)`.
pub const BUILTIN_GATES: &[(&str, usize, usize)] = &[
    ("I", 0, 1),
    ("X", 0, 1),
    ("Y", 0, 1),
    ("Z", 0, 1),
    ("H", 0, 1),
    ("S", 0, 1),
    ("T", 0, 1),
    ("RX", 1, 1),
    ("RY", 1, 1),
    ("RZ", 1, 1),
    ("CNOT", 0, 2),
    ("CZ", 0, 2),
    ("SWAP", 0, 2),
    ("ISWAP", 0, 2),
    ("CPHASE", 1, 2),
    ("CCNOT", 0, 3),
];

/// `(parameter count, qubit count)` of a builtin gate.
pub fn builtin_signature(name: &str) -> Option<(usize, usize)> {
    BUILTIN_GATES
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|&(_, p, q)| (p, q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryKind {
    Bit,
    Real,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Declaration {
    pub name: String,
    pub kind: MemoryKind,
    pub length: usize,
}

/// A classical memory reference. A bare name has no index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MemoryRef {
    pub name: String,
    pub index: Option<usize>,
}

impl MemoryRef {
    pub fn new(name: impl Into<String>, index: Option<usize>) -> Self {
        MemoryRef {
            name: name.into(),
            index,
        }
    }

    /// Index with a bare name read as element zero.
    pub fn offset(&self) -> usize {
        self.index.unwrap_or(0)
    }
}

/// A gate or circuit argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Argument {
    Qubit(usize),
    /// A formal name inside a circuit body, or a bare memory name.
    Name(String),
    Memory(MemoryRef),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateApplication {
    pub name: String,
    pub params: Vec<ParamExpr>,
    pub args: Vec<Argument>,
}

impl GateApplication {
    /// Concrete qubit indices, or `None` if any argument is symbolic.
    pub fn qubits(&self) -> Option<Vec<usize>> {
        self.args
            .iter()
            .map(|a| match a {
                Argument::Qubit(q) => Some(*q),
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate(GateApplication),
    Measure {
        qubit: Argument,
        target: Option<MemoryRef>,
    },
    Label(String),
    Jump(String),
    JumpWhen {
        label: String,
        condition: MemoryRef,
    },
    JumpUnless {
        label: String,
        condition: MemoryRef,
    },
    Pragma(String),
}

impl Instruction {
    pub fn is_jump(&self) -> bool {
        matches!(
            self,
            Instruction::Jump(_) | Instruction::JumpWhen { .. } | Instruction::JumpUnless { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateDefinition {
    pub name: String,
    pub params: Vec<String>,
    pub matrix: Vec<Vec<Expr>>,
}

impl GateDefinition {
    pub fn dimension(&self) -> usize {
        self.matrix.len()
    }

    pub fn qubit_count(&self) -> usize {
        self.dimension().trailing_zeros() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitDefinition {
    pub name: String,
    pub params: Vec<String>,
    pub formals: Vec<String>,
    pub body: Vec<Instruction>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub declarations: Vec<Declaration>,
    pub gate_defs: Vec<GateDefinition>,
    pub circuit_defs: Vec<CircuitDefinition>,
    pub body: Vec<Instruction>,
}

impl Program {
    pub fn gate_def(&self, name: &str) -> Option<&GateDefinition> {
        self.gate_defs.iter().find(|d| d.name == name)
    }

    pub fn circuit_def(&self, name: &str) -> Option<&CircuitDefinition> {
        self.circuit_defs.iter().find(|d| d.name == name)
    }

    pub fn declaration(&self, name: &str) -> Option<&Declaration> {
        self.declarations.iter().find(|d| d.name == name)
    }

    /// Every qubit index used by the body.
    pub fn qubits(&self) -> Vec<usize> {
        let mut qs = std::collections::BTreeSet::new();
        for ins in &self.body {
            match ins {
                Instruction::Gate(g) => qs.extend(g.qubits().unwrap_or_default()),
                Instruction::Measure {
                    qubit: Argument::Qubit(q),
                    ..
                } => {
                    qs.insert(*q);
                }
                _ => {}
            }
        }
        qs.into_iter().collect()
    }

    /// Variables of REAL declarations, as referenced in parameter expressions.
    pub fn real_variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        for d in self.declarations.iter().filter(|d| d.kind == MemoryKind::Real) {
            if d.length == 1 {
                out.push(d.name.clone());
            }
            for i in 0..d.length {
                out.push(format!("{}[{}]", d.name, i));
            }
        }
        out
    }

    /// Replace every classical parameter variable with the given value.
    pub fn substitute_params(&self, env: &BTreeMap<String, f64>) -> Program {
        let mut p = self.clone();
        for ins in &mut p.body {
            if let Instruction::Gate(g) = ins {
                for e in &mut g.params {
                    *e = e.substitute(env);
                }
            }
        }
        p
    }
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            MemoryKind::Bit => "BIT",
            MemoryKind::Real => "REAL",
        };
        if self.length == 1 {
            write!(f, "DECLARE {} {}", self.name, kind)
        } else {
            write!(f, "DECLARE {} {}[{}]", self.name, kind, self.length)
        }
    }
}

impl fmt::Display for MemoryRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]", self.name, i),
            None => f.write_str(&self.name),
        }
    }
}

impl fmt::Display for Argument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Argument::Qubit(q) => write!(f, "{q}"),
            Argument::Name(n) => f.write_str(n),
            Argument::Memory(m) => write!(f, "{m}"),
        }
    }
}

impl fmt::Display for GateApplication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", ps.join(", "))?;
        }
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Gate(g) => write!(f, "{g}"),
            Instruction::Measure { qubit, target } => match target {
                Some(t) => write!(f, "MEASURE {qubit} {t}"),
                None => write!(f, "MEASURE {qubit}"),
            },
            Instruction::Label(l) => write!(f, "LABEL @{l}"),
            Instruction::Jump(l) => write!(f, "JUMP @{l}"),
            Instruction::JumpWhen { label, condition } => {
                write!(f, "JUMP-WHEN @{label} {condition}")
            }
            Instruction::JumpUnless { label, condition } => {
                write!(f, "JUMP-UNLESS @{label} {condition}")
            }
            Instruction::Pragma(text) => write!(f, "PRAGMA {text}"),
        }
    }
}

impl fmt::Display for GateDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DEFGATE {}", self.name)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| format!("%{p}")).collect();
            write!(f, "({})", ps.join(", "))?;
        }
        writeln!(f, ":")?;
        for row in &self.matrix {
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            writeln!(f, "    {}", cells.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Display for CircuitDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DEFCIRCUIT {}", self.name)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| format!("%{p}")).collect();
            write!(f, "({})", ps.join(", "))?;
        }
        for q in &self.formals {
            write!(f, " {q}")?;
        }
        writeln!(f, ":")?;
        for ins in &self.body {
            writeln!(f, "    {ins}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        for d in &self.gate_defs {
            write!(f, "{d}")?;
        }
        for d in &self.circuit_defs {
            write!(f, "{d}")?;
        }
        for ins in &self.body {
            writeln!(f, "{ins}")?;
        }
        Ok(())
    }
}
