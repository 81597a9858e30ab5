//! Rewrite rules, their registry, and classification against a chip.

mod catalog;
mod nativize;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::chipspec::{ChipSpecification, CostMode};
use crate::ir::Gate;
use crate::statesim::PartialState;

pub use catalog::{catalog, is_diagonal_1q};
pub(crate) use nativize::slot_matches;
pub use nativize::{
    best_entangler, lower_gate, native_1q, nativize_gate, nativize_sequence, resynthesize_2q,
    NativizeError,
};

/// A gate shape used to describe what a rule consumes or emits.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Shape {
    Named(&'static str, usize),
    /// Any gate on this many qubits.
    Any(usize),
    /// Whatever the chip offers natively on the relevant qubits.
    ChipNative,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Named(n, _) => f.write_str(n),
            Shape::Any(k) => write!(f, "<any {k}Q>"),
            Shape::ChipNative => f.write_str("<native>"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RuleOptions {
    pub state_prep: bool,
    pub tolerance: f64,
}

impl Default for RuleOptions {
    fn default() -> Self {
        RuleOptions {
            state_prep: false,
            tolerance: 1e-9,
        }
    }
}

/// Collects one line per applied rewrite for verbose output.
#[derive(Debug, Default)]
pub struct Trace {
    lines: RefCell<Vec<String>>,
}

impl Trace {
    pub fn note(&self, line: impl Into<String>) {
        self.lines.borrow_mut().push(line.into());
    }

    pub fn rule(&self, stage: &str, rule: &str, window: &[Gate], out: &[Gate]) {
        let show = |gs: &[Gate]| gs.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("; ");
        self.note(format!("[{stage}] {rule}: {} => {}", show(window), show(out)));
    }

    pub fn take(&self) -> Vec<String> {
        std::mem::take(&mut self.lines.borrow_mut())
    }
}

/// What a rule may consult besides its window.
#[derive(Clone, Copy)]
pub struct RuleContext<'a> {
    pub chip: &'a ChipSpecification,
    pub mode: CostMode,
    pub state: Option<&'a PartialState>,
    pub options: RuleOptions,
    pub trace: Option<&'a Trace>,
}

impl<'a> RuleContext<'a> {
    pub fn new(chip: &'a ChipSpecification) -> Self {
        RuleContext {
            chip,
            mode: CostMode::Duration,
            state: None,
            options: RuleOptions::default(),
            trace: None,
        }
    }
}

pub trait RewriteRule: Send + Sync {
    fn name(&self) -> &'static str;
    /// Alternatives accepted in each window slot.
    fn inputs(&self) -> Vec<Vec<Shape>>;
    fn outputs(&self, chip: &ChipSpecification) -> Vec<Shape>;
    /// Upper bound on the number of emitted instructions, when known.
    fn max_output_len(&self) -> Option<usize>;
    /// An exact circuit identity for one specific gate, as opposed to synthesis.
    fn is_template(&self) -> bool {
        false
    }
    /// Whether every input of the declared shapes is accepted.
    fn is_total(&self) -> bool {
        false
    }
    fn state_aware(&self) -> bool {
        false
    }
    /// Whether applying the rule never makes the cost measure worse.
    fn never_worse(&self) -> bool {
        self.max_output_len().is_some_and(|m| m <= self.inputs().len())
    }
    fn apply(&self, window: &[Gate], ctx: &RuleContext) -> Option<Vec<Gate>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleClass {
    Nativizer,
    Optimizer,
    Neither,
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleClass::Nativizer => "nativizer",
            RuleClass::Optimizer => "optimizer",
            RuleClass::Neither => "neither",
        })
    }
}

/// The ordered rule catalog with a set of disabled names.
pub struct Registry {
    rules: Vec<Box<dyn RewriteRule>>,
    disabled: BTreeSet<String>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry {
            rules: catalog(),
            disabled: BTreeSet::new(),
        }
    }
}

impl Registry {
    pub fn all(&self) -> impl Iterator<Item = &dyn RewriteRule> {
        self.rules.iter().map(|r| r.as_ref())
    }

    pub fn enabled(&self) -> impl Iterator<Item = &dyn RewriteRule> {
        self.all().filter(|r| !self.disabled.contains(r.name()))
    }

    pub fn get(&self, name: &str) -> Option<&dyn RewriteRule> {
        self.enabled().find(|r| r.name() == name)
    }

    pub fn is_known(&self, name: &str) -> bool {
        self.rules.iter().any(|r| r.name() == name)
    }

    pub fn disable(&mut self, name: &str) -> bool {
        if self.is_known(name) {
            self.disabled.insert(name.to_string());
            true
        } else {
            false
        }
    }

    pub fn is_enabled(&self, name: &str) -> bool {
        self.is_known(name) && !self.disabled.contains(name)
    }

    /// Classify every enabled rule against `chip`.
    pub fn classify(&self, chip: &ChipSpecification) -> BTreeMap<&'static str, RuleClass> {
        let natives = native_names(chip);
        let mut reach = Reach {
            names: natives.clone(),
            any: BTreeSet::new(),
        };
        let mut nativizers = BTreeSet::new();
        loop {
            let mut changed = false;
            for rule in self.enabled() {
                let inputs = rule.inputs();
                if inputs.len() != 1 || rule.state_aware() || nativizers.contains(rule.name()) {
                    continue;
                }
                if rule.outputs(chip).iter().all(|s| reach.contains(s)) {
                    nativizers.insert(rule.name());
                    changed = true;
                    if rule.is_total() {
                        for s in &inputs[0] {
                            reach.insert(s);
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.enabled()
            .map(|rule| {
                let native_in = rule.inputs().iter().all(|slot| {
                    slot.iter().any(|s| match s {
                        Shape::Named(n, k) => natives.contains(&(n.to_string(), *k)),
                        Shape::Any(_) => true,
                        Shape::ChipNative => true,
                    })
                });
                let native_out = rule.outputs(chip).iter().all(|s| match s {
                    Shape::Named(n, k) => natives.contains(&(n.to_string(), *k)),
                    Shape::ChipNative => true,
                    Shape::Any(_) => false,
                });
                let class = if native_in && native_out && rule.never_worse() {
                    RuleClass::Optimizer
                } else if nativizers.contains(rule.name()) {
                    RuleClass::Nativizer
                } else {
                    RuleClass::Neither
                };
                (rule.name(), class)
            })
            .collect()
    }
}

/// Classify one rule in the context of the registry it belongs to.
pub fn classify_rule(registry: &Registry, rule: &str, chip: &ChipSpecification) -> RuleClass {
    registry.classify(chip).get(rule).copied().unwrap_or(RuleClass::Neither)
}

struct Reach {
    names: BTreeSet<(String, usize)>,
    any: BTreeSet<usize>,
}

impl Reach {
    fn contains(&self, s: &Shape) -> bool {
        match s {
            Shape::Named(n, k) => self.any.contains(k) || self.names.contains(&(n.to_string(), *k)),
            Shape::Any(k) => self.any.contains(k),
            Shape::ChipNative => true,
        }
    }

    fn insert(&mut self, s: &Shape) {
        match s {
            Shape::Named(n, k) => {
                self.names.insert((n.to_string(), *k));
            }
            Shape::Any(k) => {
                self.any.insert(*k);
            }
            Shape::ChipNative => {}
        }
    }
}

fn native_names(chip: &ChipSpecification) -> BTreeSet<(String, usize)> {
    chip.qubits
        .values()
        .chain(chip.links.values())
        .flat_map(|s| s.gates.iter().map(|g| (g.operator.clone(), g.arguments.len())))
        .collect()
}

/// Cost of a gate sequence, compared lexicographically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeqCost {
    pub two_qubit: usize,
    pub total: usize,
    pub duration: f64,
}

impl SeqCost {
    pub fn of(gates: &[Gate], chip: &ChipSpecification, mode: CostMode) -> SeqCost {
        SeqCost {
            two_qubit: crate::ir::two_qubit_count(gates),
            total: gates.len(),
            duration: gates.iter().map(|g| gate_cost(chip, g, mode)).sum(),
        }
    }

    pub fn better_than(&self, other: &SeqCost) -> bool {
        (self.two_qubit, self.total) < (other.two_qubit, other.total)
            || ((self.two_qubit, self.total) == (other.two_qubit, other.total)
                && self.duration < other.duration - 1e-9)
    }
}

/// Cost of one gate: its native record's cost, or a default by arity.
pub fn gate_cost(chip: &ChipSpecification, g: &Gate, mode: CostMode) -> f64 {
    match chip.native_record(g) {
        Some(r) => r.cost(mode),
        None => match mode {
            CostMode::Duration if g.arity() >= 2 => 150.0,
            CostMode::Duration => 50.0,
            CostMode::Fidelity => 1e-6,
        },
    }
}
