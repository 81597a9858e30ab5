//! Inline `DEFCIRCUIT` calls.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::expr::ParamExpr;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExpandError {
    #[error("circuit {0} expands recursively")]
    Recursive(String),
    #[error("circuit {circuit}: argument {arg} cannot stand for {formal}")]
    BadArgument {
        circuit: String,
        formal: String,
        arg: String,
    },
}

const MAX_DEPTH: usize = 32;

struct Expander<'a> {
    program: &'a Program,
    used_labels: BTreeSet<String>,
    counter: usize,
}

/// Replace every circuit call by its body. Labels inside each expansion are
/// renamed with a fresh numeric suffix so repeated calls stay distinct.
pub fn expand_circuits(program: &Program) -> Result<Program, ExpandError> {
    let used_labels = program
        .body
        .iter()
        .chain(program.circuit_defs.iter().flat_map(|c| c.body.iter()))
        .filter_map(|i| match i {
            Instruction::Label(l) => Some(l.clone()),
            _ => None,
        })
        .collect();
    let mut ex = Expander {
        program,
        used_labels,
        counter: 0,
    };
    let body = ex.expand_body(&program.body, 0)?;
    Ok(Program {
        declarations: program.declarations.clone(),
        gate_defs: program.gate_defs.clone(),
        circuit_defs: Vec::new(),
        body,
    })
}

impl Expander<'_> {
    fn expand_body(&mut self, body: &[Instruction], depth: usize) -> Result<Vec<Instruction>, ExpandError> {
        let mut out = Vec::new();
        for ins in body {
            match ins {
                Instruction::Gate(g) if self.program.circuit_def(&g.name).is_some() => {
                    let def = self.program.circuit_def(&g.name).unwrap();
                    if depth >= MAX_DEPTH {
                        return Err(ExpandError::Recursive(def.name.clone()));
                    }
                    let inlined = self.instantiate(def, g)?;
                    out.extend(self.expand_body(&inlined, depth + 1)?);
                }
                other => out.push(other.clone()),
            }
        }
        Ok(out)
    }

    fn fresh_suffix(&mut self, labels: &[String]) -> usize {
        loop {
            self.counter += 1;
            let k = self.counter;
            if labels
                .iter()
                .all(|l| !self.used_labels.contains(&format!("{l}_{k}")))
            {
                for l in labels {
                    self.used_labels.insert(format!("{l}_{k}"));
                }
                return k;
            }
        }
    }

    fn instantiate(&mut self, def: &CircuitDefinition, call: &GateApplication) -> Result<Vec<Instruction>, ExpandError> {
        let bindings: BTreeMap<&str, &Argument> = def
            .formals
            .iter()
            .map(String::as_str)
            .zip(call.args.iter())
            .collect();
        let params: BTreeMap<String, ParamExpr> = def
            .params
            .iter()
            .map(|p| format!("%{p}"))
            .zip(call.params.iter().cloned())
            .collect();
        let local_labels: Vec<String> = def
            .body
            .iter()
            .filter_map(|i| match i {
                Instruction::Label(l) => Some(l.clone()),
                _ => None,
            })
            .collect();
        let suffix = if local_labels.is_empty() { 0 } else { self.fresh_suffix(&local_labels) };
        let relabel = |l: &String| -> String {
            if local_labels.contains(l) {
                format!("{l}_{suffix}")
            } else {
                l.clone()
            }
        };
        let bad = |formal: &str, arg: &Argument| ExpandError::BadArgument {
            circuit: def.name.clone(),
            formal: formal.to_string(),
            arg: arg.to_string(),
        };
        let qubit = |a: &Argument| -> Result<Argument, ExpandError> {
            match a {
                Argument::Name(n) => match bindings.get(n.as_str()) {
                    Some(Argument::Qubit(q)) => Ok(Argument::Qubit(*q)),
                    Some(Argument::Name(m)) => Ok(Argument::Name(m.clone())),
                    Some(other) => Err(bad(n, other)),
                    None => Ok(a.clone()),
                },
                _ => Ok(a.clone()),
            }
        };
        let memory = |m: &MemoryRef| -> Result<MemoryRef, ExpandError> {
            if m.index.is_some() {
                return Ok(m.clone());
            }
            match bindings.get(m.name.as_str()) {
                Some(Argument::Memory(r)) => Ok(r.clone()),
                Some(Argument::Name(n)) => Ok(MemoryRef::new(n.clone(), None)),
                Some(other) => Err(bad(&m.name, other)),
                None => Ok(m.clone()),
            }
        };
        let mut out = Vec::new();
        for ins in &def.body {
            out.push(match ins {
                Instruction::Gate(g) => Instruction::Gate(GateApplication {
                    name: g.name.clone(),
                    params: g.params.iter().map(|p| substitute_formals(p, &params)).collect(),
                    args: g.args.iter().map(qubit).collect::<Result<_, _>>()?,
                }),
                Instruction::Measure { qubit: q, target } => Instruction::Measure {
                    qubit: qubit(q)?,
                    target: target.as_ref().map(memory).transpose()?,
                },
                Instruction::Label(l) => Instruction::Label(relabel(l)),
                Instruction::Jump(l) => Instruction::Jump(relabel(l)),
                Instruction::JumpWhen { label, condition } => Instruction::JumpWhen {
                    label: relabel(label),
                    condition: memory(condition)?,
                },
                Instruction::JumpUnless { label, condition } => Instruction::JumpUnless {
                    label: relabel(label),
                    condition: memory(condition)?,
                },
                Instruction::Pragma(p) => Instruction::Pragma(p.clone()),
            });
        }
        Ok(out)
    }
}

fn substitute_formals(p: &ParamExpr, params: &BTreeMap<String, ParamExpr>) -> ParamExpr {
    let mut out = ParamExpr::constant(p.constant_part());
    for (name, coef) in p.terms() {
        out = out
            + match params.get(name) {
                Some(actual) => actual.clone() * *coef,
                None => ParamExpr::var(name.clone()) * *coef,
            };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    const RESET: &str = "DECLARE s BIT\nDEFCIRCUIT RESET q scratch:\n    MEASURE q scratch\n    JUMP-UNLESS @done scratch\n    X q\n    LABEL @done\n";

    #[test]
    fn reset_expands_with_fresh_label() {
        let p = parse_program(&format!("{RESET}RESET 3 s\n")).unwrap();
        let e = expand_circuits(&p).unwrap();
        let text: Vec<String> = e.body.iter().map(|i| i.to_string()).collect();
        assert_eq!(text, ["MEASURE 3 s", "JUMP-UNLESS @done_1 s", "X 3", "LABEL @done_1"]);
    }

    #[test]
    fn repeated_calls_get_distinct_labels() {
        let p = parse_program(&format!("{RESET}RESET 0 s\nRESET 1 s\n")).unwrap();
        let e = expand_circuits(&p).unwrap();
        let labels: Vec<&Instruction> = e.body.iter().filter(|i| matches!(i, Instruction::Label(_))).collect();
        assert_eq!(labels.len(), 2);
        assert_ne!(labels[0], labels[1]);
    }

    #[test]
    fn parameters_are_substituted() {
        let src = "DECLARE t REAL\nDEFCIRCUIT ROT(%a) q:\n    RZ(%a/2) q\n    RX(2*%a + 1) q\nROT(t) 5\n";
        let e = expand_circuits(&parse_program(src).unwrap()).unwrap();
        let text: Vec<String> = e.body.iter().map(|i| i.to_string()).collect();
        assert_eq!(text, ["RZ(t/2) 5", "RX(1 + 2*t) 5"]);
    }

    #[test]
    fn nested_circuits_expand() {
        let src = "DEFCIRCUIT A q:\n    H q\nDEFCIRCUIT B q r:\n    A q\n    CNOT q r\nB 1 2\n";
        let e = expand_circuits(&parse_program(src).unwrap()).unwrap();
        let text: Vec<String> = e.body.iter().map(|i| i.to_string()).collect();
        assert_eq!(text, ["H 1", "CNOT 1 2"]);
    }

    #[test]
    fn recursion_is_reported() {
        let src = "DEFCIRCUIT A q:\n    A q\nA 0\n";
        assert!(matches!(
            expand_circuits(&parse_program(src).unwrap()),
            Err(ExpandError::Recursive(_))
        ));
    }
}
