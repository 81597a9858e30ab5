//! Dense simulation used to check compiled blocks against their source.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::addresser::Rewiring;
use crate::ir::{Gate, Op};
use crate::pipeline::{front_end, CompileOutput};
use crate::linalg::{apply_to_state, c, gate_matrix, sequence_matrix, UnitaryMatrix, C64};

/// Largest register compared as full unitaries.
pub const MAX_UNITARY_QUBITS: usize = 8;
/// Largest register compared as states from |0...0>.
pub const MAX_STATE_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("{0} qubits is too many to simulate (limit {1})")]
    TooManyQubits(usize, usize),
    #[error("parameter {0} has no value")]
    Unassigned(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("cannot simulate {0}")]
    BadGate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    /// Equal as unitaries up to global phase.
    Unitary,
    /// Equal action on |0...0> up to global phase.
    State,
}

/// Substitute values for symbolic parameters and require the result concrete.
pub fn assign(gates: &[Gate], env: &BTreeMap<String, f64>) -> Result<Vec<Gate>, VerifyError> {
    gates
        .iter()
        .map(|g| {
            let mut g = g.clone();
            for p in &mut g.params {
                *p = p.substitute(env);
                if let Some(v) = p.variables().next() {
                    return Err(VerifyError::Unassigned(v.to_string()));
                }
            }
            Ok(g)
        })
        .collect()
}

/// Unitary that moves the contents of each `reg` qubit `p` to `perm[p]`.
pub fn permutation_matrix(reg: &[usize], perm: &BTreeMap<usize, usize>) -> UnitaryMatrix {
    let n = reg.len();
    let dim = 1usize << n;
    let pos: BTreeMap<usize, usize> = reg.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut m = DMatrix::from_element(dim, dim, c(0.0, 0.0));
    for b in 0..dim {
        let mut image = 0;
        for (i, &q) in reg.iter().enumerate() {
            if b >> (n - 1 - i) & 1 == 1 {
                let to = pos[&perm.get(&q).copied().unwrap_or(q)];
                image |= 1 << (n - 1 - to);
            }
        }
        m[(image, b)] = c(1.0, 0.0);
    }
    UnitaryMatrix::from_raw(m).expect("permutations are unitary")
}

fn run_state(gates: &[Gate], reg: &[usize]) -> Result<Vec<C64>, VerifyError> {
    let n = reg.len();
    let pos: BTreeMap<usize, usize> = reg.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut state = vec![c(0.0, 0.0); 1 << n];
    state[0] = c(1.0, 0.0);
    for g in gates {
        let u = gate_matrix(g).map_err(|_| VerifyError::BadGate(g.to_string()))?;
        let targets: Vec<usize> = g.qubits.iter().map(|q| pos[q]).collect();
        apply_to_state(&mut state, n, &u, &targets);
    }
    Ok(state)
}

fn permute_state(state: &[C64], reg: &[usize], perm: &BTreeMap<usize, usize>) -> Vec<C64> {
    let n = reg.len();
    let pos: BTreeMap<usize, usize> = reg.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut out = vec![c(0.0, 0.0); state.len()];
    for (b, &amp) in state.iter().enumerate() {
        let mut image = 0;
        for (i, &q) in reg.iter().enumerate() {
            if b >> (n - 1 - i) & 1 == 1 {
                image |= 1 << (n - 1 - pos[&perm.get(&q).copied().unwrap_or(q)]);
            }
        }
        out[image] = amp;
    }
    out
}

/// Whether two states agree up to global phase.
pub fn states_equivalent(a: &[C64], b: &[C64], tol: f64) -> bool {
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 1e-12 { overlap / overlap.norm() } else { c(1.0, 0.0) };
    a.iter().zip(b).all(|(x, y)| (x * phase - y).norm() <= tol)
}

/// Check that `output`, on physical qubits, implements `input`, on logical
/// qubits placed by `entry`, followed by moving each physical qubit `p` to
/// `permutation[p]`.
pub fn verify_block(
    input: &[Gate],
    output: &[Gate],
    entry: &Rewiring,
    permutation: &BTreeMap<usize, usize>,
    mode: VerifyMode,
    tol: f64,
) -> Result<bool, VerifyError> {
    for g in input {
        if let Some(l) = g.qubits.iter().find(|&&l| entry.physical(l).is_none()) {
            return Err(VerifyError::Unsupported(format!("logical qubit {l} has no placement")));
        }
    }
    let placed: Vec<Gate> = input.iter().map(|g| g.remap(|l| entry.physical(l).unwrap())).collect();
    let mut reg: BTreeSet<usize> = placed.iter().chain(output).flat_map(|g| g.qubits.iter().copied()).collect();
    reg.extend(permutation.iter().filter(|(a, b)| a != b).flat_map(|(&a, &b)| [a, b]));
    let reg: Vec<usize> = reg.into_iter().collect();
    let concrete = |gs: &[Gate]| gs.iter().find(|g| !g.is_concrete()).map(|g| g.to_string());
    if let Some(g) = concrete(&placed).or_else(|| concrete(output)) {
        return Err(VerifyError::Unsupported(format!("{g} has symbolic parameters")));
    }
    match mode {
        VerifyMode::Unitary => {
            if reg.len() > MAX_UNITARY_QUBITS {
                return Err(VerifyError::TooManyQubits(reg.len(), MAX_UNITARY_QUBITS));
            }
            let bad = |e: crate::linalg::LinalgError| VerifyError::BadGate(e.to_string());
            let u_in = sequence_matrix(&placed, &reg).map_err(bad)?;
            let u_out = sequence_matrix(output, &reg).map_err(bad)?;
            let expected = permutation_matrix(&reg, permutation).mul(&u_in);
            Ok(expected.phase_distance(&u_out) <= tol)
        }
        VerifyMode::State => {
            if reg.len() > MAX_STATE_QUBITS {
                return Err(VerifyError::TooManyQubits(reg.len(), MAX_STATE_QUBITS));
            }
            let s_in = permute_state(&run_state(&placed, &reg)?, &reg, permutation);
            let s_out = run_state(output, &reg)?;
            Ok(states_equivalent(&s_in, &s_out, tol))
        }
    }
}

/// Check a compiled single-block program against its source. Symbolic
/// parameters take their values from `env`.
pub fn verify_compiled(
    source: &str,
    out: &CompileOutput,
    env: &BTreeMap<String, f64>,
    mode: VerifyMode,
    tol: f64,
) -> Result<bool, VerifyError> {
    let (_, graph) = front_end(source).map_err(|e| VerifyError::Unsupported(e.to_string()))?;
    if graph.blocks.len() != 1 || out.blocks.len() != 1 {
        return Err(VerifyError::Unsupported("only straight-line programs can be verified".into()));
    }
    let gates = |ops: &[Op]| -> Result<Vec<Gate>, VerifyError> {
        ops.iter()
            .map(|o| {
                o.as_gate()
                    .cloned()
                    .ok_or_else(|| VerifyError::Unsupported("programs with MEASURE cannot be verified".into()))
            })
            .collect()
    };
    let block = &out.blocks[0];
    let input = assign(&gates(&graph.blocks[0].ops)?, env)?;
    let mut output = gates(&block.body)?;
    output.extend(gates(&block.fallthrough_fixup)?);
    let output = assign(&output, env)?;
    verify_block(&input, &output, &block.entry, &block.permutation, mode, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(name: &str, qs: &[usize]) -> Gate {
        Gate::fixed(name, qs)
    }

    #[test]
    fn program_matches_itself() {
        let gs = [g("H", &[0]), g("CNOT", &[0, 1]), Gate::rot("RZ", 0.4, &[1])];
        let id = Rewiring::identity([0, 1]);
        for mode in [VerifyMode::Unitary, VerifyMode::State] {
            assert!(verify_block(&gs, &gs, &id, &BTreeMap::new(), mode, 1e-9).unwrap());
        }
    }

    #[test]
    fn perturbed_angle_is_caught() {
        let a = [g("H", &[0]), Gate::rot("RZ", 0.4, &[0])];
        let b = [g("H", &[0]), Gate::rot("RZ", 0.401, &[0])];
        let id = Rewiring::identity([0]);
        assert!(!verify_block(&a, &b, &id, &BTreeMap::new(), VerifyMode::Unitary, 1e-7).unwrap());
    }

    #[test]
    fn swap_is_a_permutation() {
        let id = Rewiring::identity([0, 1]);
        let perm = BTreeMap::from([(0, 1), (1, 0)]);
        let input = [g("H", &[0])];
        let output = [g("H", &[0]), g("SWAP", &[0, 1])];
        assert!(verify_block(&input, &output, &id, &perm, VerifyMode::Unitary, 1e-9).unwrap());
        assert!(!verify_block(&input, &output, &id, &BTreeMap::new(), VerifyMode::Unitary, 1e-9).unwrap());
    }

    #[test]
    fn relabeled_entry() {
        let entry = Rewiring::identity([]).tap_assign(&[(0, 5), (1, 4)]);
        let input = [g("CNOT", &[0, 1])];
        let output = [g("CNOT", &[5, 4])];
        assert!(verify_block(&input, &output, &entry, &BTreeMap::new(), VerifyMode::Unitary, 1e-9).unwrap());
    }

    #[test]
    fn state_mode_ignores_action_on_other_inputs() {
        let id = Rewiring::identity([0]);
        let input = [g("Z", &[0])];
        assert!(verify_block(&input, &[], &id, &BTreeMap::new(), VerifyMode::State, 1e-9).unwrap());
        assert!(!verify_block(&input, &[], &id, &BTreeMap::new(), VerifyMode::Unitary, 1e-9).unwrap());
    }

    #[test]
    fn symbolic_parameters_need_values() {
        use crate::frontend::ParamExpr;
        let gs = [Gate::new("RZ", vec![ParamExpr::var("t")], vec![0])];
        assert_eq!(assign(&gs, &BTreeMap::new()), Err(VerifyError::Unassigned("t".into())));
        let env = BTreeMap::from([("t".to_string(), 0.5)]);
        assert!(assign(&gs, &env).unwrap()[0].is_concrete());
    }

    trait TapAssign {
        fn tap_assign(self, pairs: &[(usize, usize)]) -> Self;
    }

    impl TapAssign for Rewiring {
        fn tap_assign(mut self, pairs: &[(usize, usize)]) -> Self {
            for &(l, p) in pairs {
                self.assign(l, p);
            }
            self
        }
    }
}
