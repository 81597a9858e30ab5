//! Turning arbitrary gates into the chip's native gates.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use thiserror::Error;

use super::{Registry, RewriteRule, RuleContext, SeqCost, Shape};
use crate::chipspec::{is_native, ArgPattern, ChipSpecification, NativeStatus, ParamPattern};
use crate::frontend::ParamExpr;
use crate::ir::Gate;
use crate::linalg::gates::{rx, ry, rz};
use crate::linalg::{
    builtin_matrix, gate_matrix, kak_synthesize, sequence_matrix, zyz_decompose, Entangler, UnitaryMatrix, C64,
};

const MATCH_TOL: f64 = 1e-9;
const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NativizeError {
    #[error("{0} acts on qubits that are not linked")]
    NotAdjacent(String),
    #[error("{0} acts on too many qubits to nativize directly")]
    TooManyQubits(String),
    #[error("no native decomposition found for {0}")]
    NoNativization(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::X => "RX",
            Axis::Y => "RY",
            Axis::Z => "RZ",
        }
    }

    fn of(name: &str) -> Option<Axis> {
        match name {
            "RX" => Some(Axis::X),
            "RY" => Some(Axis::Y),
            "RZ" => Some(Axis::Z),
            _ => None,
        }
    }

    fn rotation(self, theta: f64) -> UnitaryMatrix {
        match self {
            Axis::X => rx(theta),
            Axis::Y => ry(theta),
            Axis::Z => rz(theta),
        }
    }

    fn pauli(self) -> UnitaryMatrix {
        builtin_matrix(
            match self {
                Axis::X => "X",
                Axis::Y => "Y",
                Axis::Z => "Z",
            },
            &[],
        )
        .expect("Pauli")
    }
}

const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Angle reduced to (−π, π].
fn normalize(x: f64) -> f64 {
    let mut r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if (r + PI).abs() < 1e-12 {
        r = PI;
    }
    if r.abs() < 1e-14 {
        0.0
    } else {
        r
    }
}

fn near_zero_angle(x: f64) -> bool {
    normalize(x).abs() < 1e-10
}

/// The 24 single-qubit Clifford unitaries, up to phase.
fn cliffords() -> &'static [UnitaryMatrix] {
    static CELL: OnceLock<Vec<UnitaryMatrix>> = OnceLock::new();
    CELL.get_or_init(|| {
        let gens = [builtin_matrix("H", &[]).unwrap(), builtin_matrix("S", &[]).unwrap()];
        let mut out = vec![UnitaryMatrix::identity(1)];
        let mut i = 0;
        while i < out.len() {
            for g in &gens {
                let next = g.mul(&out[i]);
                if !out.iter().any(|m| m.phase_distance(&next) < 1e-9) {
                    out.push(next);
                }
            }
            i += 1;
        }
        out
    })
}

/// Whether `a ≈ s·b` for `s = ±1`; returns `s`.
fn signed_match(a: &UnitaryMatrix, b: &UnitaryMatrix) -> Option<f64> {
    if a.approx_eq(b, 1e-9) {
        Some(1.0)
    } else if a.approx_eq(&b.scale(C64::new(-1.0, 0.0)), 1e-9) {
        Some(-1.0)
    } else {
        None
    }
}

/// A Clifford `W` with `W·Z·W† = s_o·σ_o` and `W·Y·W† = s_m·σ_m`, so that
/// `W·RZ(θ)·W† = R_o(s_o·θ)` and likewise for `Y`.
fn frame(outer: Axis, middle: Axis) -> Option<(UnitaryMatrix, f64, f64)> {
    let z = Axis::Z.pauli();
    let y = Axis::Y.pauli();
    cliffords().iter().find_map(|w| {
        let so = signed_match(&w.mul(&z).mul(&w.adjoint()), &outer.pauli())?;
        let sm = signed_match(&w.mul(&y).mul(&w.adjoint()), &middle.pauli())?;
        Some((w.clone(), so, sm))
    })
}

struct OneQubitNatives {
    wild: Vec<Axis>,
    fixed: Vec<Gate>,
}

fn one_qubit_natives(chip: &ChipSpecification, q: usize) -> OneQubitNatives {
    let mut wild = Vec::new();
    let mut fixed = Vec::new();
    for r in chip.records(&[q]) {
        match (Axis::of(&r.operator), r.parameters.as_slice()) {
            (Some(a), [ParamPattern::Wildcard]) => {
                if !wild.contains(&a) {
                    wild.push(a);
                }
            }
            (_, ps) if ps.iter().all(|p| matches!(p, ParamPattern::Fixed(_))) => {
                let params = ps
                    .iter()
                    .map(|p| match p {
                        ParamPattern::Fixed(v) => ParamExpr::constant(*v),
                        ParamPattern::Wildcard => unreachable!(),
                    })
                    .collect();
                let g = Gate::new(&r.operator, params, vec![q]);
                if gate_matrix(&g).is_ok() {
                    fixed.push(g);
                }
            }
            _ => {}
        }
    }
    wild.sort();
    OneQubitNatives { wild, fixed }
}

fn rot_gate(axis: Axis, angle: impl Into<ParamExpr>, q: usize) -> Gate {
    Gate::new(axis.name(), vec![angle.into()], vec![q])
}

/// Sequence `[R_o(a), middle…, R_o(c)]`, omitting outer rotations by zero.
fn wrap(outer: Axis, a: f64, middle: Vec<Gate>, c: f64, q: usize) -> Vec<Gate> {
    let mut out = Vec::new();
    if !near_zero_angle(a) {
        out.push(rot_gate(outer, normalize(a), q));
    }
    out.extend(middle);
    if !near_zero_angle(c) {
        out.push(rot_gate(outer, normalize(c), q));
    }
    out
}

fn implements(seq: &[Gate], u: &UnitaryMatrix, q: usize) -> bool {
    sequence_matrix(seq, &[q]).is_ok_and(|m| m.phase_distance(u) < MATCH_TOL)
}

/// Angle `φ` with `u ∝ R_axis(φ)`, if any.
fn rotation_angle(u: &UnitaryMatrix, axis: Axis) -> Option<f64> {
    let v = u.scale(C64::new(1.0, 0.0) / u.determinant().sqrt());
    let p = axis.pauli();
    let c0 = (v.get(0, 0) + v.get(1, 1)) / 2.0;
    let ca = (p.mul(&v).get(0, 0) + p.mul(&v).get(1, 1)) / 2.0;
    // v = cos(φ/2)·I − i·sin(φ/2)·σ
    let phi = 2.0 * (C64::new(0.0, 1.0) * ca).re.atan2(c0.re);
    (axis.rotation(phi).phase_distance(u) < MATCH_TOL).then_some(phi)
}

/// Outer angles `(a, c)` with `v ∝ RZ(c)·m·RZ(a)`, if the middle fits.
fn outer_angles(v: &UnitaryMatrix, m: &UnitaryMatrix) -> Option<(f64, f64)> {
    let t = zyz_decompose(v).ok()?;
    let f = zyz_decompose(m).ok()?;
    if (t.beta - f.beta).abs() > 1e-7 {
        return None;
    }
    Some((t.alpha - f.alpha, t.gamma - f.gamma))
}

fn candidates_concrete(u: &UnitaryMatrix, nat: &OneQubitNatives, q: usize, long_forms: bool) -> Vec<Vec<Gate>> {
    let mut out: Vec<Vec<Gate>> = Vec::new();
    if u.is_identity_up_to_phase(MATCH_TOL) {
        return vec![Vec::new()];
    }
    for &a in &nat.wild {
        if let Some(phi) = rotation_angle(u, a) {
            out.push(vec![rot_gate(a, normalize(phi), q)]);
        }
    }
    for f in &nat.fixed {
        if gate_matrix(f).is_ok_and(|m| m.phase_distance(u) < MATCH_TOL) {
            out.push(vec![f.clone()]);
        }
    }
    if !out.is_empty() {
        return out;
    }
    for &o in &nat.wild {
        for &m in nat.wild.iter().filter(|&&m| m != o) {
            let Some((w, so, sm)) = frame(o, m) else { continue };
            let v = w.adjoint().mul(u).mul(&w);
            let Ok(t) = zyz_decompose(&v) else { continue };
            let seq = wrap(o, so * t.alpha, vec![rot_gate(m, normalize(sm * t.beta), q)], so * t.gamma, q);
            if implements(&seq, u, q) {
                out.push(seq);
            }
        }
        let Some(&m_any) = AXES.iter().find(|&&m| m != o) else { continue };
        let Some((w, so, _)) = frame(o, m_any) else { continue };
        let v = w.adjoint().mul(u).mul(&w);
        for f in &nat.fixed {
            let Ok(fm) = gate_matrix(f) else { continue };
            let fv = w.adjoint().mul(&fm).mul(&w);
            if let Some((a, c)) = outer_angles(&v, &fv) {
                let seq = wrap(o, so * a, vec![f.clone()], so * c, q);
                if implements(&seq, u, q) {
                    out.push(seq);
                }
            }
        }
    }
    if !out.is_empty() || !long_forms {
        return out;
    }
    for &o in &nat.wild {
        let Some(&m_any) = AXES.iter().find(|&&m| m != o) else { continue };
        let Some((w, so, _)) = frame(o, m_any) else { continue };
        let v = w.adjoint().mul(u).mul(&w);
        for f1 in &nat.fixed {
            for f2 in &nat.fixed {
                let (Ok(m1), Ok(m2)) = (gate_matrix(f1), gate_matrix(f2)) else { continue };
                let m1 = w.adjoint().mul(&m1).mul(&w);
                let m2 = w.adjoint().mul(&m2).mul(&w);
                let middle = |b: f64| m2.mul(&rz(b)).mul(&m1);
                for b in middle_angle_roots(&m1, &m2, v.get(0, 0).norm()) {
                    let Some((a, c)) = outer_angles(&v, &middle(b)) else { continue };
                    let inner = vec![f1.clone(), rot_gate(o, normalize(so * b), q), f2.clone()];
                    let seq = wrap(o, so * a, inner, so * c, q);
                    if implements(&seq, u, q) {
                        out.push(seq);
                        break;
                    }
                }
            }
        }
    }
    out
}

/// Angles `b` with |(m2·RZ(b)·m1)[0][0]| = t. Writing the entry as
/// A·e^{−ib/2} + B·e^{ib/2}, its squared modulus is |A|² + |B|² + 2·Re(A·B̄·e^{−ib}).
fn middle_angle_roots(m1: &UnitaryMatrix, m2: &UnitaryMatrix, t: f64) -> Vec<f64> {
    let a = m2.get(0, 0) * m1.get(0, 0);
    let b = m2.get(0, 1) * m1.get(1, 0);
    let cross = a * b.conj();
    let r = cross.norm();
    let rhs = t * t - a.norm_sqr() - b.norm_sqr();
    if r < 1e-12 {
        return if rhs.abs() < 1e-9 { vec![0.0] } else { Vec::new() };
    }
    let x = rhs / (2.0 * r);
    if x.abs() > 1.0 + 1e-9 {
        return Vec::new();
    }
    let d = x.clamp(-1.0, 1.0).acos();
    let phi = cross.arg();
    if d < 1e-12 {
        vec![phi]
    } else {
        vec![phi - d, phi + d]
    }
}

const OFFSETS: [f64; 4] = [0.0, FRAC_PI_2, -FRAC_PI_2, PI];

/// Decompositions of a symbolic rotation that keep the parameter in a single
/// native wildcard rotation.
fn candidates_symbolic(g: &Gate, nat: &OneQubitNatives, q: usize) -> Option<Vec<Gate>> {
    let axis = Axis::of(&g.name)?;
    if g.matrix.is_some() || g.params.len() != 1 {
        return None;
    }
    let theta = &g.params[0];
    let samples = [0.3711, -1.2137];
    let check = |seq: &[Gate]| {
        samples.iter().all(|&s| {
            let env = theta.variables().into_iter().map(|v| (v.to_string(), s)).collect();
            let target = axis.rotation(theta.substitute(&env).value().unwrap_or(f64::NAN));
            let concrete: Vec<Gate> = seq
                .iter()
                .map(|x| Gate { params: x.params.iter().map(|p| p.substitute(&env)).collect(), ..x.clone() })
                .collect();
            implements(&concrete, &target, q)
        })
    };
    let with = |sign: f64, b: f64| theta.clone() * sign + b;
    for &o in &nat.wild {
        for &m in &nat.wild {
            for sign in [1.0, -1.0] {
                for a in OFFSETS {
                    for b in OFFSETS {
                        for c in OFFSETS {
                            let seq = wrap(o, a, vec![rot_gate(m, with(sign, b), q)], c, q);
                            if check(&seq) {
                                return Some(seq);
                            }
                        }
                    }
                }
            }
        }
    }
    for &o in &nat.wild {
        for f1 in &nat.fixed {
            for f2 in &nat.fixed {
                for sign in [1.0, -1.0] {
                    for a in OFFSETS {
                        for b in OFFSETS {
                            for c in OFFSETS {
                                let inner = vec![f1.clone(), rot_gate(o, with(sign, b), q), f2.clone()];
                                let seq = wrap(o, a, inner, c, q);
                                if check(&seq) {
                                    return Some(seq);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    None
}

/// Native single-qubit sequence for `g`, choosing the fewest instructions and
/// then the lowest cost.
pub fn native_1q(g: &Gate, ctx: &RuleContext) -> Option<Vec<Gate>> {
    if g.arity() != 1 {
        return None;
    }
    if is_native(ctx.chip, g) == NativeStatus::Native {
        return Some(vec![g.clone()]);
    }
    let q = g.qubits[0];
    let nat = one_qubit_natives(ctx.chip, q);
    if !g.is_concrete() {
        return candidates_symbolic(g, &nat, q);
    }
    let u = gate_matrix(g).ok()?;
    let mut cands = candidates_concrete(&u, &nat, q, false);
    if cands.is_empty() {
        cands = candidates_concrete(&u, &nat, q, true);
    }
    cands
        .into_iter()
        .filter(|s| s.iter().all(|x| is_native(ctx.chip, x) == NativeStatus::Native))
        .min_by(|a, b| {
            let ca = SeqCost::of(a, ctx.chip, ctx.mode);
            let cb = SeqCost::of(b, ctx.chip, ctx.mode);
            (ca.total, ca.duration).partial_cmp(&(cb.total, cb.duration)).unwrap()
        })
}

/// Entanglers usable on the link between `a` and `b`, for a gate whose
/// qubit order is `[a, b]`.
pub fn best_entangler(chip: &ChipSpecification, a: usize, b: usize) -> Vec<Entangler> {
    let mut out = Vec::new();
    let lo = a.min(b);
    for r in chip.records(&[a, b]) {
        match (r.operator.as_str(), r.parameters.as_slice()) {
            ("CZ", []) => out.push(Entangler::Cz),
            ("ISWAP", []) => out.push(Entangler::Iswap),
            ("CPHASE", [ParamPattern::Wildcard]) => out.push(Entangler::Cphase),
            ("CNOT", []) => match r.arguments.first() {
                Some(ArgPattern::Position(i)) => {
                    let control = if *i == 0 { lo } else { a.max(b) };
                    out.push(Entangler::Cnot { reversed: control != a });
                }
                _ => {
                    out.push(Entangler::Cnot { reversed: false });
                    out.push(Entangler::Cnot { reversed: true });
                }
            },
            _ => {}
        }
    }
    let rank = |e: &Entangler| match e {
        Entangler::Cnot { .. } => 0,
        Entangler::Cz => 1,
        Entangler::Iswap => 2,
        Entangler::Cphase => 3,
    };
    out.sort_by_key(|e| (rank(e), *e));
    out.dedup();
    out
}

/// Cheapest native realization of a two-qubit unitary on the ordered pair.
pub fn resynthesize_2q(m: &UnitaryMatrix, pair: [usize; 2], ctx: &RuleContext) -> Option<Vec<Gate>> {
    if !ctx.chip.adjacent(pair[0], pair[1]) {
        return None;
    }
    let mut best: Option<(SeqCost, Vec<Gate>)> = None;
    for e in best_entangler(ctx.chip, pair[0], pair[1]) {
        let Ok(seq) = kak_synthesize(m, e) else { continue };
        let mut out = Vec::new();
        let mut ok = true;
        for g in seq {
            let g = g.remap(|i| pair[i]);
            if g.arity() == 1 {
                match native_1q(&g, ctx) {
                    Some(s) => out.extend(s),
                    None => {
                        ok = false;
                        break;
                    }
                }
            } else if is_native(ctx.chip, &g) == NativeStatus::Native {
                out.push(g);
            } else {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let cost = SeqCost::of(&out, ctx.chip, ctx.mode);
        if best.as_ref().is_none_or(|(c, _)| cost.better_than(c)) {
            best = Some((cost, out));
        }
    }
    best.map(|(_, s)| s)
}

pub(crate) fn slot_matches(slot: &[Shape], g: &Gate) -> bool {
    slot.iter().any(|s| match s {
        Shape::Named(n, k) => g.matrix.is_none() && g.name == *n && g.arity() == *k,
        Shape::Any(k) => g.arity() == *k,
        Shape::ChipNative => false,
    })
}

fn single_input_rules(reg: &Registry) -> impl Iterator<Item = &dyn RewriteRule> {
    reg.enabled().filter(|r| !r.state_aware() && r.inputs().len() == 1)
}

struct Nativizer<'a> {
    ctx: &'a RuleContext<'a>,
    reg: &'a Registry,
    memo: HashMap<String, Option<Vec<Gate>>>,
    stack: Vec<String>,
}

impl Nativizer<'_> {
    fn run(&mut self, g: &Gate, depth: usize) -> Option<Vec<Gate>> {
        match is_native(self.ctx.chip, g) {
            NativeStatus::Native => return Some(vec![g.clone()]),
            NativeStatus::NonAdjacent => return None,
            NativeStatus::NonNativeGate => {}
        }
        if depth > MAX_DEPTH || g.arity() > 2 {
            return None;
        }
        let key = (g.matrix.is_none()).then(|| g.to_string());
        if let Some(k) = &key {
            if let Some(hit) = self.memo.get(k) {
                return hit.clone();
            }
            if self.stack.contains(k) {
                return None;
            }
            self.stack.push(k.clone());
        }
        // templates are preferred unless synthesis saves entanglers
        let mut best: Option<((usize, usize, usize, f64), &'static str, Vec<Gate>)> = None;
        let rules: Vec<&dyn RewriteRule> = single_input_rules(self.reg).collect();
        for rule in rules {
            if !slot_matches(&rule.inputs()[0], g) {
                continue;
            }
            let Some(out) = rule.apply(std::slice::from_ref(g), self.ctx) else { continue };
            let mut full = Vec::new();
            let mut ok = true;
            for o in &out {
                match self.run(o, depth + 1) {
                    Some(s) => full.extend(s),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let c = SeqCost::of(&full, self.ctx.chip, self.ctx.mode);
            let key = (c.two_qubit, usize::from(!rule.is_template()), c.total, c.duration);
            if best.as_ref().is_none_or(|(k, _, _)| key.partial_cmp(k) == Some(std::cmp::Ordering::Less)) {
                best = Some((key, rule.name(), full));
            }
        }
        if let (Some(t), Some((_, name, out))) = (self.ctx.trace, &best) {
            t.rule("nativize", name, std::slice::from_ref(g), out);
        }
        let result = best.map(|(_, _, s)| s);
        if let Some(k) = key {
            self.stack.pop();
            self.memo.insert(k, result.clone());
        }
        result
    }
}

/// Native sequence for one gate on physical qubits; two-qubit gates must act
/// on a link.
pub fn nativize_gate(g: &Gate, ctx: &RuleContext, reg: &Registry) -> Result<Vec<Gate>, NativizeError> {
    nativize_sequence(std::slice::from_ref(g), ctx, reg)
}

pub fn nativize_sequence(gates: &[Gate], ctx: &RuleContext, reg: &Registry) -> Result<Vec<Gate>, NativizeError> {
    let mut n = Nativizer {
        ctx,
        reg,
        memo: HashMap::new(),
        stack: Vec::new(),
    };
    let mut out = Vec::new();
    for g in gates {
        if g.arity() > 2 {
            return Err(NativizeError::TooManyQubits(g.to_string()));
        }
        if g.arity() == 2 && !ctx.chip.adjacent(g.qubits[0], g.qubits[1]) {
            return Err(NativizeError::NotAdjacent(g.to_string()));
        }
        match n.run(g, 0) {
            Some(s) => out.extend(s),
            None => return Err(NativizeError::NoNativization(g.to_string())),
        }
    }
    Ok(out)
}

/// Rewrite a gate on three or more qubits into gates on at most two, using
/// templates when enabled and generic synthesis otherwise.
pub fn lower_gate(g: &Gate, ctx: &RuleContext, reg: &Registry) -> Result<Vec<Gate>, NativizeError> {
    if g.arity() <= 2 {
        return Ok(vec![g.clone()]);
    }
    let rules: Vec<&dyn RewriteRule> = single_input_rules(reg).collect();
    let order = rules.iter().filter(|r| r.is_template()).chain(rules.iter().filter(|r| !r.is_template()));
    for rule in order {
        if !slot_matches(&rule.inputs()[0], g) {
            continue;
        }
        if let Some(out) = rule.apply(std::slice::from_ref(g), ctx) {
            let mut full = Vec::new();
            for o in &out {
                full.extend(lower_gate(o, ctx, reg)?);
            }
            return Ok(full);
        }
    }
    if g.is_concrete() {
        Err(NativizeError::NoNativization(g.to_string()))
    } else {
        Err(NativizeError::TooManyQubits(g.to_string()))
    }
}
