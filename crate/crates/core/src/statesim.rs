//! Partial pure-state simulation from |0…0⟩ and the state-aware rewrites
//! built on it.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, Matrix2};

use crate::ir::{Gate, Op};
use crate::linalg::{apply_to_state, gate_matrix, sequence_matrix, support, UnitaryMatrix, C64};
use crate::rules::{native_1q, Registry, RuleContext, SeqCost};

pub const DEFAULT_ENTANGLEMENT_LIMIT: usize = 3;
const EIGEN_TOL: f64 = 1e-9;
const SPLIT_TOL: f64 = 1e-10;

/// A tracked group of qubits and its state vector; `qubits[0]` is the most
/// significant bit of the amplitude index.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub qubits: Vec<usize>,
    pub amplitudes: Vec<C64>,
}

impl Component {
    fn zero(q: usize) -> Component {
        Component {
            qubits: vec![q],
            amplitudes: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        }
    }

    fn tensor(&self, other: &Component) -> Component {
        let mut amps = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        let mut qubits = self.qubits.clone();
        qubits.extend(&other.qubits);
        Component { qubits, amplitudes: amps }
    }

    fn normalize(&mut self) {
        let n: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            for z in &mut self.amplitudes {
                *z /= n;
            }
        }
    }

    /// Split off qubit position `i` when it is unentangled with the rest.
    fn split(&self, i: usize) -> Option<(Component, Component)> {
        let k = self.qubits.len();
        if k < 2 {
            return None;
        }
        let rest = 1usize << (k - 1);
        let bit = 1usize << (k - 1 - i);
        let index = |b: usize, r: usize| {
            let high = (r >> (k - 1 - i)) << (k - i);
            let low = r & (bit - 1);
            high | (b * bit) | low
        };
        let m = DMatrix::from_fn(2, rest, |b, r| self.amplitudes[index(b, r)]);
        let svd = m.svd(true, true);
        let s = &svd.singular_values;
        if s.len() < 2 || s[1] > SPLIT_TOL {
            return None;
        }
        let u = svd.u.as_ref()?;
        let vt = svd.v_t.as_ref()?;
        let one = Component {
            qubits: vec![self.qubits[i]],
            amplitudes: vec![u[(0, 0)] * s[0], u[(1, 0)]],
        };
        let one = Component {
            amplitudes: vec![one.amplitudes[0] / s[0] * s[0], one.amplitudes[1] * s[0]],
            ..one
        };
        let mut others: Vec<usize> = self.qubits.clone();
        others.remove(i);
        let mut a = one;
        a.normalize();
        let mut b = Component {
            qubits: others,
            amplitudes: (0..rest).map(|r| vt[(0, r)]).collect(),
        };
        b.normalize();
        Some((a, b))
    }
}

/// Tracked components plus the set of qubits whose state is no longer known.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialState {
    components: Vec<Component>,
    unknown: BTreeSet<usize>,
    limit: usize,
}

impl PartialState {
    /// Every qubit starts in |0⟩, tracked lazily on first use.
    pub fn new(limit: usize) -> PartialState {
        PartialState {
            components: Vec::new(),
            unknown: BTreeSet::new(),
            limit,
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn unknown(&self) -> &BTreeSet<usize> {
        &self.unknown
    }

    pub fn is_known(&self, q: usize) -> bool {
        !self.unknown.contains(&q)
    }

    fn index_of(&mut self, q: usize) -> usize {
        if let Some(i) = self.components.iter().position(|c| c.qubits.contains(&q)) {
            return i;
        }
        self.components.push(Component::zero(q));
        self.components.len() - 1
    }

    /// The product of the components holding `qubits`, with their indices.
    fn joint(&mut self, qubits: &[usize]) -> Option<(Vec<usize>, Component)> {
        if qubits.iter().any(|q| self.unknown.contains(q)) {
            return None;
        }
        let mut idx: Vec<usize> = qubits.iter().map(|&q| self.index_of(q)).collect();
        idx.sort_unstable();
        idx.dedup();
        let mut joint = self.components[idx[0]].clone();
        for &i in &idx[1..] {
            joint = joint.tensor(&self.components[i]);
        }
        Some((idx, joint))
    }

    fn forget(&mut self, qubits: &[usize]) {
        let mut drop = BTreeSet::new();
        for &q in qubits {
            self.unknown.insert(q);
            if let Some(i) = self.components.iter().position(|c| c.qubits.contains(&q)) {
                drop.insert(i);
            }
        }
        for &i in drop.iter().rev() {
            let c = self.components.remove(i);
            self.unknown.extend(c.qubits);
        }
    }

    /// The state of `qubits` after applying `g`, without committing it.
    fn applied(&mut self, g: &Gate) -> Option<(Vec<usize>, Component, Component)> {
        if !g.is_concrete() {
            return None;
        }
        let u = gate_matrix(g).ok()?;
        let (idx, before) = self.joint(&g.qubits)?;
        let mut after = before.clone();
        let targets: Vec<usize> = g
            .qubits
            .iter()
            .map(|q| after.qubits.iter().position(|x| x == q).expect("joint holds gate qubits"))
            .collect();
        apply_to_state(&mut after.amplitudes, after.qubits.len(), &u, &targets);
        Some((idx, before, after))
    }

    pub fn apply_gate(&mut self, g: &Gate) {
        let touched = match self.joint(&g.qubits) {
            Some((_, j)) => j.qubits.len(),
            None => usize::MAX,
        };
        if touched > self.limit || !g.is_concrete() {
            self.forget(&g.qubits);
            return;
        }
        let Some((idx, _, mut after)) = self.applied(g) else {
            self.forget(&g.qubits);
            return;
        };
        after.normalize();
        for &i in idx.iter().rev() {
            self.components.remove(i);
        }
        let mut pending = vec![after];
        while let Some(c) = pending.pop() {
            match (0..c.qubits.len()).find_map(|i| c.split(i)) {
                Some((a, b)) => {
                    pending.push(a);
                    pending.push(b);
                }
                None => self.components.push(c),
            }
        }
        self.components.sort_by_key(|c| c.qubits.iter().min().copied());
    }

    /// Measurement makes the measured qubit's whole component unknown.
    pub fn measure(&mut self, q: usize) {
        self.forget(&[q]);
    }

    pub fn apply_op(&mut self, op: &Op) {
        match op {
            Op::Gate(g) => self.apply_gate(g),
            Op::Measure { qubit, .. } => self.measure(*qubit),
        }
    }

    /// State vector of a tracked component.
    pub fn component_of(&self, q: usize) -> Option<&Component> {
        self.components.iter().find(|c| c.qubits.contains(&q))
    }

    pub fn limit(&self) -> usize {
        self.limit
    }
}

/// The partial state before each instruction, absent once any of its
/// qubits are untracked.
pub fn partial_simulate(ops: &[Op], limit: usize) -> Vec<Option<PartialState>> {
    let mut state = PartialState::new(limit);
    let mut out = Vec::with_capacity(ops.len());
    for op in ops {
        let known = op.qubits().iter().all(|&q| state.is_known(q));
        out.push(known.then(|| state.clone()));
        state.apply_op(op);
    }
    out
}

/// Whether `g` only multiplies the current state by a phase.
pub fn is_eigenvector_application(state: &PartialState, g: &Gate) -> bool {
    let mut s = state.clone();
    match s.applied(g) {
        Some((_, before, after)) => {
            let overlap: C64 = before
                .amplitudes
                .iter()
                .zip(&after.amplitudes)
                .map(|(a, b)| a.conj() * b)
                .sum();
            (overlap.norm() - 1.0).abs() < EIGEN_TOL
        }
        None => false,
    }
}

/// Native gates taking |0…0⟩ on `qubits` (one or two) to `target` up to phase.
pub fn state_prep_resynthesize(target: &[C64], qubits: &[usize], ctx: &RuleContext) -> Option<Vec<Gate>> {
    match qubits {
        [q] => prep_1q(target[0], target[1], *q, ctx),
        [a, b] => prep_2q(target, [*a, *b], ctx),
        _ => None,
    }
}

fn local_prep(alpha: C64, beta: C64) -> UnitaryMatrix {
    // RZ(φ)·RY(θ) up to phase
    let theta = 2.0 * beta.norm().atan2(alpha.norm());
    let phi = beta.arg() - alpha.arg();
    crate::linalg::gates::rz(phi).mul(&crate::linalg::gates::ry(theta))
}

fn prep_1q(alpha: C64, beta: C64, q: usize, ctx: &RuleContext) -> Option<Vec<Gate>> {
    if beta.norm() < 1e-12 {
        return Some(Vec::new());
    }
    let u = local_prep(alpha, beta);
    native_1q(&Gate::from_matrix("U", u, vec![q]), ctx)
}

fn prep_2q(target: &[C64], pair: [usize; 2], ctx: &RuleContext) -> Option<Vec<Gate>> {
    let m = Matrix2::new(target[0], target[1], target[2], target[3]);
    let svd = m.svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let s = svd.singular_values;
    let (s0, s1) = (s[0], s[1]);
    let to_u = |m: Matrix2<C64>| UnitaryMatrix::from_raw(DMatrix::from_fn(2, 2, |r, c| m[(r, c)])).ok();
    if s1 < 1e-10 {
        let mut out = prep_1q(u[(0, 0)], u[(1, 0)], pair[0], ctx)?;
        out.extend(prep_1q(vt[(0, 0)], vt[(0, 1)], pair[1], ctx)?);
        return Some(out);
    }
    let a = to_u(u)?;
    let b = to_u(vt.transpose())?;
    let theta = 2.0 * s1.atan2(s0);
    let core = vec![
        Gate::rot("RY", theta, &[0]),
        Gate::fixed("CNOT", &[0, 1]),
        Gate::from_matrix("U", a, vec![0]),
        Gate::from_matrix("U", b, vec![1]),
    ];
    let w = sequence_matrix(&core, &[0, 1]).ok()?;
    crate::rules::resynthesize_2q(&w, pair, ctx)
}

/// Resynthesize a gate run acting on |0…0⟩ as a direct state preparation.
pub fn prepare_from_zero(window: &[Gate], ctx: &RuleContext) -> Option<Vec<Gate>> {
    if window.is_empty() || !window.iter().all(Gate::is_concrete) {
        return None;
    }
    let qubits = support(window);
    if qubits.len() > 2 {
        return None;
    }
    let m = sequence_matrix(window, &qubits).ok()?;
    let target: Vec<C64> = (0..m.dim()).map(|r| m.get(r, 0)).collect();
    state_prep_resynthesize(&target, &qubits, ctx)
}

/// Apply the state-aware rules to a block that starts from |0…0⟩:
/// eigenvector elision throughout, then state preparation of the leading
/// one- and two-qubit segments.
pub fn state_aware_pass(ops: &[Op], ctx: &RuleContext, reg: &Registry, limit: usize) -> Vec<Op> {
    let mut state = PartialState::new(limit);
    let mut kept = Vec::with_capacity(ops.len());
    let elide = reg.get("elide-applications-on-eigenvectors");
    for op in ops {
        if let (Op::Gate(g), Some(rule)) = (op, elide) {
            let local = RuleContext {
                state: Some(&state),
                ..*ctx
            };
            if rule.apply(std::slice::from_ref(g), &local).is_some_and(|o| o.is_empty()) {
                continue;
            }
        }
        state.apply_op(op);
        kept.push(op.clone());
    }
    match reg.get("state-prep") {
        Some(rule) => leading_state_prep(&kept, ctx, rule),
        None => kept,
    }
}

fn leading_state_prep(ops: &[Op], ctx: &RuleContext, rule: &dyn crate::rules::RewriteRule) -> Vec<Op> {
    // groups of at most two qubits whose gates all precede any other use
    let mut groups: Vec<(BTreeSet<usize>, Vec<usize>)> = Vec::new();
    let mut blocked: BTreeSet<usize> = BTreeSet::new();
    for (i, op) in ops.iter().enumerate() {
        let qs = op.qubits();
        let gate = op.as_gate().filter(|g| g.is_concrete());
        let mut joined: BTreeSet<usize> = qs.iter().copied().collect();
        let involved: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, (set, _))| qs.iter().any(|q| set.contains(q)))
            .map(|(k, _)| k)
            .collect();
        for &k in &involved {
            joined.extend(&groups[k].0);
        }
        let free = qs.iter().all(|q| !blocked.contains(q));
        if gate.is_some() && free && joined.len() <= 2 {
            let mut members = vec![i];
            for &k in involved.iter().rev() {
                let (_, m) = groups.remove(k);
                members.extend(m);
            }
            members.sort_unstable();
            groups.push((joined, members));
        } else {
            blocked.extend(joined.iter().copied());
            for &k in involved.iter().rev() {
                let (set, m) = groups.remove(k);
                groups.push((set, m));
            }
            for (set, _) in groups.iter_mut() {
                if set.iter().any(|q| blocked.contains(q)) {
                    set.insert(usize::MAX);
                }
            }
        }
    }
    let mut removed = BTreeSet::new();
    let mut prefix = Vec::new();
    for (_, members) in &groups {
        let window: Vec<Gate> = members.iter().filter_map(|&i| ops[i].as_gate().cloned()).collect();
        if let Some(out) = rule.apply(&window, ctx) {
            if SeqCost::of(&out, ctx.chip, ctx.mode).better_than(&SeqCost::of(&window, ctx.chip, ctx.mode)) {
                removed.extend(members.iter().copied());
                prefix.extend(out.into_iter().map(Op::Gate));
            }
        }
    }
    prefix.extend(ops.iter().enumerate().filter(|(i, _)| !removed.contains(i)).map(|(_, o)| o.clone()));
    prefix
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chipspec::ChipSpecification;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &[C64], b: &[C64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-10)
    }

    #[test]
    fn x_from_zero() {
        let mut s = PartialState::new(3);
        s.apply_gate(&Gate::fixed("X", &[0]));
        let c = s.component_of(0).unwrap();
        assert!(close(&c.amplitudes, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]));
    }

    #[test]
    fn bell_pair_is_one_component() {
        let mut s = PartialState::new(3);
        s.apply_gate(&Gate::fixed("H", &[0]));
        s.apply_gate(&Gate::fixed("CNOT", &[0, 1]));
        let c = s.component_of(0).unwrap();
        assert_eq!(c.qubits, vec![0, 1]);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        assert!(close(&c.amplitudes, &[h, z, z, h]));
    }

    #[test]
    fn product_states_split_back() {
        let mut s = PartialState::new(3);
        s.apply_gate(&Gate::fixed("H", &[1]));
        s.apply_gate(&Gate::fixed("CNOT", &[0, 1]));
        assert_eq!(s.components().len(), 2);
    }

    #[test]
    fn symbolic_gate_forgets_qubit() {
        let mut s = PartialState::new(3);
        s.apply_gate(&Gate::new("RZ", vec![crate::frontend::ParamExpr::var("t")], vec![0]));
        assert!(!s.is_known(0));
    }

    #[test]
    fn limit_is_respected() {
        let mut s = PartialState::new(2);
        for q in 0..3 {
            s.apply_gate(&Gate::fixed("H", &[q]));
        }
        s.apply_gate(&Gate::fixed("CZ", &[0, 1]));
        s.apply_gate(&Gate::fixed("CZ", &[1, 2]));
        assert!(!s.is_known(2) && !s.is_known(0));
        assert!(s.components().iter().all(|c| c.qubits.len() <= 2));
    }

    #[test]
    fn measurement_forgets_component() {
        let mut s = PartialState::new(3);
        s.apply_gate(&Gate::fixed("H", &[0]));
        s.apply_gate(&Gate::fixed("CNOT", &[0, 1]));
        s.measure(0);
        assert!(!s.is_known(1));
    }

    #[test]
    fn eigenvector_checks() {
        let s = PartialState::new(3);
        assert!(is_eigenvector_application(&s, &Gate::fixed("CZ", &[0, 1])));
        assert!(is_eigenvector_application(&s, &Gate::rot("RZ", 0.8, &[0])));
        assert!(!is_eigenvector_application(&s, &Gate::fixed("H", &[0])));
    }

    #[test]
    fn bell_state_prep_uses_one_cz() {
        let chip = ChipSpecification::with_defaults(2, &[(0, 1)]);
        let ctx = RuleContext::new(&chip);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        let target = [h, z, z, h];
        let seq = state_prep_resynthesize(&target, &[0, 1], &ctx).unwrap();
        assert_eq!(seq.iter().filter(|g| g.name == "CZ").count(), 1);
        let m = sequence_matrix(&seq, &[0, 1]).unwrap();
        let out: Vec<C64> = (0..4).map(|r| m.get(r, 0)).collect();
        let overlap: C64 = out.iter().zip(&target).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_target_needs_nothing() {
        let chip = ChipSpecification::with_defaults(1, &[]);
        let ctx = RuleContext::new(&chip);
        let seq = state_prep_resynthesize(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &[0], &ctx).unwrap();
        assert!(seq.is_empty());
    }
}
