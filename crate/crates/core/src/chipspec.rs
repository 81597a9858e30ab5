//! Device model: qubits and links tagged with native gate records.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::cmp::Ordering;
use std::f64::consts::PI;

use serde_json::{json, Map, Value};

use crate::ir::Gate;

pub const DEFAULT_1Q_DURATION: f64 = 50.0;
pub const DEFAULT_2Q_DURATION: f64 = 150.0;
const PARAM_TOL: f64 = 1e-10;
/// Smallest per-gate cost in fidelity mode, so perfect gates still count hops.
const MIN_FIDELITY_COST: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ChipError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("malformed chip description: {0}")]
    Malformed(String),
    #[error("malformed key {0:?}")]
    BadKey(String),
    #[error("link {0}-{1} refers to a missing qubit")]
    DanglingLink(usize, usize),
    #[error("native gates on three or more qubits are not supported")]
    HigherSimplex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamPattern {
    Fixed(f64),
    Wildcard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgPattern {
    /// Position within the simplex (0 is the lower-numbered qubit).
    Position(usize),
    Wildcard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NativeGateRecord {
    pub operator: String,
    pub parameters: Vec<ParamPattern>,
    pub arguments: Vec<ArgPattern>,
    pub duration: Option<f64>,
    pub fidelity: Option<f64>,
}

impl NativeGateRecord {
    pub fn new(operator: &str, parameters: Vec<ParamPattern>, arguments: Vec<ArgPattern>) -> Self {
        NativeGateRecord {
            operator: operator.to_string(),
            parameters,
            arguments,
            duration: None,
            fidelity: None,
        }
    }

    pub fn duration(&self) -> f64 {
        self.duration.unwrap_or(if self.arguments.len() >= 2 {
            DEFAULT_2Q_DURATION
        } else {
            DEFAULT_1Q_DURATION
        })
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity.unwrap_or(1.0)
    }

    /// Cost of one application under the given metric.
    pub fn cost(&self, mode: CostMode) -> f64 {
        match mode {
            CostMode::Duration => self.duration(),
            CostMode::Fidelity => (-self.fidelity().ln()).max(MIN_FIDELITY_COST),
        }
    }

    fn params_match(&self, gate: &Gate) -> bool {
        self.parameters.len() == gate.params.len()
            && self.parameters.iter().zip(&gate.params).all(|(pat, p)| match pat {
                ParamPattern::Wildcard => true,
                ParamPattern::Fixed(v) => p.value().is_some_and(|x| (x - v).abs() <= PARAM_TOL),
            })
    }

    /// Whether the record admits `gate` acting on the simplex `simplex`.
    pub fn matches(&self, gate: &Gate, simplex: &[usize]) -> bool {
        if self.operator != gate.name || gate.matrix.is_some() || !self.params_match(gate) {
            return false;
        }
        if self.arguments.len() != gate.qubits.len() {
            return false;
        }
        let in_order = self.arguments.iter().zip(&gate.qubits).all(|(a, q)| match a {
            ArgPattern::Wildcard => true,
            ArgPattern::Position(i) => simplex.get(*i) == Some(q),
        });
        in_order || (is_symmetric(&gate.name) && {
            let rev: Vec<usize> = gate.qubits.iter().rev().copied().collect();
            self.arguments.iter().zip(&rev).all(|(a, q)| match a {
                ArgPattern::Wildcard => true,
                ArgPattern::Position(i) => simplex.get(*i) == Some(q),
            })
        })
    }
}

/// Two-qubit gates whose matrix is invariant under exchanging the qubits.
pub fn is_symmetric(name: &str) -> bool {
    matches!(name, "CZ" | "SWAP" | "ISWAP" | "CPHASE")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexRecord {
    pub gates: Vec<NativeGateRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostMode {
    Duration,
    Fidelity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NativeStatus {
    Native,
    NonNativeGate,
    NonAdjacent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChipSpecification {
    pub qubits: BTreeMap<usize, SimplexRecord>,
    pub links: BTreeMap<(usize, usize), SimplexRecord>,
}

fn default_qubit_gates() -> Vec<NativeGateRecord> {
    let mut gates: Vec<NativeGateRecord> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|k| {
            NativeGateRecord::new(
                "RX",
                vec![ParamPattern::Fixed(k * PI / 2.0)],
                vec![ArgPattern::Position(0)],
            )
        })
        .collect();
    gates.push(NativeGateRecord::new(
        "RZ",
        vec![ParamPattern::Wildcard],
        vec![ArgPattern::Position(0)],
    ));
    gates
}

fn default_link_gates() -> Vec<NativeGateRecord> {
    vec![NativeGateRecord::new(
        "CZ",
        Vec::new(),
        vec![ArgPattern::Position(0), ArgPattern::Position(1)],
    )]
}

fn parse_link_key(key: &str) -> Result<(usize, usize), ChipError> {
    let parts: Vec<&str> = key.split('-').collect();
    if parts.len() != 2 {
        if parts.len() > 2 {
            return Err(ChipError::HigherSimplex);
        }
        return Err(ChipError::BadKey(key.to_string()));
    }
    let a: usize = parts[0].trim().parse().map_err(|_| ChipError::BadKey(key.to_string()))?;
    let b: usize = parts[1].trim().parse().map_err(|_| ChipError::BadKey(key.to_string()))?;
    if a == b {
        return Err(ChipError::BadKey(key.to_string()));
    }
    Ok((a.min(b), a.max(b)))
}

fn parse_record(v: &Value, dim: usize) -> Result<NativeGateRecord, ChipError> {
    let bad = |m: &str| ChipError::Malformed(m.to_string());
    let obj = v.as_object().ok_or_else(|| bad("gate record must be an object"))?;
    let operator = obj
        .get("operator")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("gate record needs an \"operator\" string"))?
        .to_string();
    let parameters = match obj.get("parameters") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|p| match p {
                Value::String(s) if s == "_" => Ok(ParamPattern::Wildcard),
                Value::Number(n) => Ok(ParamPattern::Fixed(n.as_f64().unwrap_or(f64::NAN))),
                _ => Err(bad("parameters must be numbers or \"_\"")),
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(bad("\"parameters\" must be a list")),
    };
    let arguments: Vec<ArgPattern> = match obj.get("arguments") {
        None => (0..dim).map(ArgPattern::Position).collect(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|a| match a {
                Value::String(s) if s == "_" => Ok(ArgPattern::Wildcard),
                Value::Number(n) => n
                    .as_u64()
                    .map(|i| ArgPattern::Position(i as usize))
                    .ok_or_else(|| bad("arguments must be non-negative integers or \"_\"")),
                _ => Err(bad("arguments must be integers or \"_\"")),
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(bad("\"arguments\" must be a list")),
    };
    if arguments.len() > 2 {
        return Err(ChipError::HigherSimplex);
    }
    if arguments.len() != dim {
        return Err(bad(&format!(
            "{operator} has {} argument(s) on a {dim}-qubit simplex",
            arguments.len()
        )));
    }
    if arguments
        .iter()
        .any(|a| matches!(a, ArgPattern::Position(i) if *i >= dim))
    {
        return Err(bad(&format!("{operator} refers outside its simplex")));
    }
    let duration = obj.get("duration").map(|d| d.as_f64().ok_or_else(|| bad("duration must be a number"))).transpose()?;
    let fidelity = obj.get("fidelity").map(|d| d.as_f64().ok_or_else(|| bad("fidelity must be a number"))).transpose()?;
    if let Some(f) = fidelity {
        if !(f > 0.0 && f <= 1.0) {
            return Err(bad("fidelity must lie in (0, 1]"));
        }
    }
    if duration.is_some_and(|d| d.is_nan() || d < 0.0) {
        return Err(bad("duration must be non-negative"));
    }
    Ok(NativeGateRecord {
        operator,
        parameters,
        arguments,
        duration,
        fidelity,
    })
}

fn parse_simplex(v: &Value, dim: usize) -> Result<SimplexRecord, ChipError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ChipError::Malformed("simplex entries must be objects".into()))?;
    let gates = match obj.get("gates") {
        None => {
            if dim == 1 {
                default_qubit_gates()
            } else {
                default_link_gates()
            }
        }
        Some(Value::Array(items)) => items.iter().map(|g| parse_record(g, dim)).collect::<Result<_, _>>()?,
        Some(_) => return Err(ChipError::Malformed("\"gates\" must be a list".into())),
    };
    Ok(SimplexRecord { gates })
}

/// Load a chip from its JSON description.
pub fn load_chip(text: &str) -> Result<ChipSpecification, ChipError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ChipError::Json(e.to_string()))?;
    let root = match root.get("isa") {
        Some(inner) => inner.clone(),
        None => root,
    };
    let obj = root
        .as_object()
        .ok_or_else(|| ChipError::Malformed("top level must be an object".into()))?;
    for key in obj.keys() {
        if key != "1Q" && key != "2Q" {
            if key.ends_with('Q') {
                return Err(ChipError::HigherSimplex);
            }
            return Err(ChipError::BadKey(key.clone()));
        }
    }
    let mut qubits = BTreeMap::new();
    if let Some(ones) = obj.get("1Q") {
        let ones = ones
            .as_object()
            .ok_or_else(|| ChipError::Malformed("\"1Q\" must be an object".into()))?;
        for (k, v) in ones {
            let q: usize = k.trim().parse().map_err(|_| ChipError::BadKey(k.clone()))?;
            qubits.insert(q, parse_simplex(v, 1)?);
        }
    }
    let mut links = BTreeMap::new();
    if let Some(twos) = obj.get("2Q") {
        let twos = twos
            .as_object()
            .ok_or_else(|| ChipError::Malformed("\"2Q\" must be an object".into()))?;
        for (k, v) in twos {
            let (a, b) = parse_link_key(k)?;
            if !qubits.contains_key(&a) || !qubits.contains_key(&b) {
                return Err(ChipError::DanglingLink(a, b));
            }
            if links.insert((a, b), parse_simplex(v, 2)?).is_some() {
                return Err(ChipError::BadKey(k.clone()));
            }
        }
    }
    Ok(ChipSpecification { qubits, links })
}

fn record_json(r: &NativeGateRecord) -> Value {
    let params: Vec<Value> = r
        .parameters
        .iter()
        .map(|p| match p {
            ParamPattern::Wildcard => json!("_"),
            ParamPattern::Fixed(v) => json!(v),
        })
        .collect();
    let args: Vec<Value> = r
        .arguments
        .iter()
        .map(|a| match a {
            ArgPattern::Wildcard => json!("_"),
            ArgPattern::Position(i) => json!(i),
        })
        .collect();
    let mut m = Map::new();
    m.insert("operator".into(), json!(r.operator));
    m.insert("parameters".into(), Value::Array(params));
    m.insert("arguments".into(), Value::Array(args));
    if let Some(d) = r.duration {
        m.insert("duration".into(), json!(d));
    }
    if let Some(f) = r.fidelity {
        m.insert("fidelity".into(), json!(f));
    }
    Value::Object(m)
}

impl ChipSpecification {
    /// Canonical JSON form; default gate sets are written out explicitly.
    pub fn serialize(&self) -> String {
        let simplex = |s: &SimplexRecord| json!({ "gates": s.gates.iter().map(record_json).collect::<Vec<_>>() });
        let mut ones = Map::new();
        for (q, s) in &self.qubits {
            ones.insert(q.to_string(), simplex(s));
        }
        let mut twos = Map::new();
        for ((a, b), s) in &self.links {
            twos.insert(format!("{a}-{b}"), simplex(s));
        }
        serde_json::to_string_pretty(&json!({ "1Q": ones, "2Q": twos })).expect("serializable")
    }

    /// A chip with default gate sets on the given qubits and links.
    pub fn with_defaults(n: usize, links: &[(usize, usize)]) -> ChipSpecification {
        let qubits = (0..n)
            .map(|q| (q, SimplexRecord { gates: default_qubit_gates() }))
            .collect();
        let links = links
            .iter()
            .map(|&(a, b)| ((a.min(b), a.max(b)), SimplexRecord { gates: default_link_gates() }))
            .collect();
        ChipSpecification { qubits, links }
    }

    /// A chip whose qubits and links all carry the same gate records.
    pub fn uniform(
        qubits: &[usize],
        links: &[(usize, usize)],
        qubit_gates: Vec<NativeGateRecord>,
        link_gates: Vec<NativeGateRecord>,
    ) -> ChipSpecification {
        ChipSpecification {
            qubits: qubits.iter().map(|&q| (q, SimplexRecord { gates: qubit_gates.clone() })).collect(),
            links: links
                .iter()
                .map(|&(a, b)| ((a.min(b), a.max(b)), SimplexRecord { gates: link_gates.clone() }))
                .collect(),
        }
    }

    pub fn qubit_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.qubits.keys().copied()
    }

    pub fn has_qubit(&self, q: usize) -> bool {
        self.qubits.contains_key(&q)
    }

    pub fn link(&self, a: usize, b: usize) -> Option<&SimplexRecord> {
        self.links.get(&(a.min(b), a.max(b)))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.link(a, b).is_some()
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        self.links
            .keys()
            .filter_map(|&(a, b)| {
                if a == q {
                    Some(b)
                } else if b == q {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Whether any record carries explicit fidelity data.
    pub fn has_fidelity_data(&self) -> bool {
        self.qubits
            .values()
            .chain(self.links.values())
            .flat_map(|s| s.gates.iter())
            .any(|g| g.fidelity.is_some())
    }

    fn simplex_of(&self, qubits: &[usize]) -> Option<(Vec<usize>, &SimplexRecord)> {
        match qubits {
            [q] => self.qubits.get(q).map(|s| (vec![*q], s)),
            [a, b] => self
                .link(*a, *b)
                .map(|s| (vec![(*a).min(*b), (*a).max(*b)], s)),
            _ => None,
        }
    }

    /// The record matching `gate`, if any.
    pub fn native_record(&self, gate: &Gate) -> Option<&NativeGateRecord> {
        let (simplex, rec) = self.simplex_of(&gate.qubits)?;
        rec.gates.iter().find(|r| r.matches(gate, &simplex))
    }

    /// Native gate records on the simplex spanned by `qubits`.
    pub fn records(&self, qubits: &[usize]) -> &[NativeGateRecord] {
        self.simplex_of(qubits).map_or(&[], |(_, s)| s.gates.as_slice())
    }

    /// Cost of one 2Q gate on the link's cheapest native 2Q record.
    pub fn link_unit_cost(&self, a: usize, b: usize, mode: CostMode) -> Option<f64> {
        self.link(a, b)?
            .gates
            .iter()
            .map(|g| g.cost(mode))
            .min_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal))
    }

    /// Cost of a SWAP on a link: three applications of its best 2Q gate.
    pub fn swap_cost(&self, a: usize, b: usize, mode: CostMode) -> Option<f64> {
        self.link_unit_cost(a, b, mode).map(|c| 3.0 * c)
    }
}

/// Classify an instruction against the chip.
pub fn is_native(chip: &ChipSpecification, gate: &Gate) -> NativeStatus {
    match gate.qubits.len() {
        1 => {
            if chip.native_record(gate).is_some() {
                NativeStatus::Native
            } else {
                NativeStatus::NonNativeGate
            }
        }
        2 => {
            if !chip.adjacent(gate.qubits[0], gate.qubits[1]) {
                NativeStatus::NonAdjacent
            } else if chip.native_record(gate).is_some() {
                NativeStatus::Native
            } else {
                NativeStatus::NonNativeGate
            }
        }
        _ => NativeStatus::NonNativeGate,
    }
}

/// All-pairs SWAP-path costs plus hop counts.
#[derive(Clone, Debug)]
pub struct CostTable {
    pub mode: CostMode,
    index: BTreeMap<usize, usize>,
    ids: Vec<usize>,
    dist: Vec<Vec<f64>>,
    hops: Vec<Vec<usize>>,
    paths: Vec<Vec<Vec<usize>>>,
}

#[derive(PartialEq)]
struct Frontier {
    cost: f64,
    path: Vec<usize>,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.path.cmp(&self.path))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest SWAP-cost paths between all qubit pairs. Equal-cost paths are
/// broken toward the lexicographically smallest qubit sequence.
pub fn build_cost_table(chip: &ChipSpecification, mode: CostMode) -> CostTable {
    let ids: Vec<usize> = chip.qubit_ids().collect();
    let index: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let n = ids.len();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    let mut paths = vec![vec![Vec::new(); n]; n];
    for (si, &s) in ids.iter().enumerate() {
        let mut settled = BTreeSet::new();
        let mut heap = BinaryHeap::new();
        heap.push(Frontier { cost: 0.0, path: vec![s] });
        while let Some(Frontier { cost, path }) = heap.pop() {
            let u = *path.last().unwrap();
            if !settled.insert(u) {
                continue;
            }
            let ui = index[&u];
            dist[si][ui] = cost;
            for v in chip.neighbors(u) {
                if settled.contains(&v) {
                    continue;
                }
                let w = chip.swap_cost(u, v, mode).unwrap_or(f64::INFINITY);
                let mut p = path.clone();
                p.push(v);
                heap.push(Frontier { cost: cost + w, path: p });
            }
            paths[si][ui] = path;
        }
    }
    let mut hops = vec![vec![usize::MAX; n]; n];
    for (si, &s) in ids.iter().enumerate() {
        let mut queue = VecDeque::from([s]);
        hops[si][si] = 0;
        while let Some(u) = queue.pop_front() {
            let du = hops[si][index[&u]];
            for v in chip.neighbors(u) {
                let vi = index[&v];
                if hops[si][vi] == usize::MAX {
                    hops[si][vi] = du + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    CostTable {
        mode,
        index,
        ids,
        dist,
        hops,
        paths,
    }
}

impl CostTable {
    pub fn cost(&self, a: usize, b: usize) -> f64 {
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&i), Some(&j)) => self.dist[i][j],
            _ => f64::INFINITY,
        }
    }

    /// Number of links on the shortest unweighted path, `usize::MAX` if none.
    pub fn hops(&self, a: usize, b: usize) -> usize {
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&i), Some(&j)) => self.hops[i][j],
            _ => usize::MAX,
        }
    }

    /// The chosen cheapest path from `a` to `b`, endpoints included.
    pub fn path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let (&i, &j) = (self.index.get(&a)?, self.index.get(&b)?);
        let p = &self.paths[i][j];
        (!p.is_empty()).then(|| p.clone())
    }

    pub fn qubits(&self) -> &[usize] {
        &self.ids
    }
}
