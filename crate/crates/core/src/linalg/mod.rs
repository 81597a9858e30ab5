//! Matrices, gate semantics and unitary synthesis.

mod matrix;
pub mod gates;
pub mod generic;
pub mod kak;
pub mod zyz;

use std::collections::BTreeMap;

use rand_distr::StandardNormal;
use thiserror::Error;

pub use gates::{apply_to_state, builtin_matrix, gate_matrix, sequence_matrix, support};
pub use kak::{entangler_count, kak_synthesize, weyl_coordinates, Entangler};
pub use matrix::{c, UnitaryMatrix, C64, DEFAULT_EQUIV_TOL, UNITARY_TOL};
pub use zyz::{zyz_decompose, ZyzAngles};

use crate::ir::Gate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("matrix of shape {0}x{1} is not a square power-of-two matrix")]
    BadShape(usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cannot evaluate matrix entry: {0}")]
    Evaluation(String),
    #[error("gate {0} has symbolic parameters")]
    Symbolic(String),
    #[error("unknown gate {0}")]
    UnknownGate(String),
    #[error("qubit {0} is outside the register")]
    QubitOutsideRegister(usize),
    #[error("synthesis failed to reproduce the target unitary")]
    SynthesisFailed,
    #[error("synthesis supports at most {0} qubits")]
    TooManyQubits(usize),
}

/// Merge maximal runs of concrete single-qubit gates on each qubit into one
/// matrix gate named `U`. Runs that multiply to the identity are dropped.
pub fn fuse_single_qubit_runs(gates: &[Gate]) -> Vec<Gate> {
    let mut out = Vec::with_capacity(gates.len());
    let mut pending: BTreeMap<usize, UnitaryMatrix> = BTreeMap::new();
    let flush = |q: usize, pending: &mut BTreeMap<usize, UnitaryMatrix>, out: &mut Vec<Gate>| {
        if let Some(m) = pending.remove(&q) {
            if !m.is_identity_up_to_phase(1e-12) {
                out.push(Gate::from_matrix("U", m, vec![q]));
            }
        }
    };
    for g in gates {
        if g.qubits.len() == 1 && g.is_concrete() {
            if let Ok(m) = gate_matrix(g) {
                let q = g.qubits[0];
                let acc = match pending.remove(&q) {
                    Some(prev) => m.mul(&prev),
                    None => m,
                };
                pending.insert(q, acc);
                continue;
            }
        }
        for &q in &g.qubits {
            flush(q, &mut pending, &mut out);
        }
        out.push(g.clone());
    }
    let qs: Vec<usize> = pending.keys().copied().collect();
    for q in qs {
        flush(q, &mut pending, &mut out);
    }
    out
}

/// Haar-random unitary on `num_qubits` qubits, from the QR decomposition of a
/// complex Gaussian matrix with the phases of `R`'s diagonal removed.
pub fn random_unitary<R: rand::Rng>(num_qubits: usize, rng: &mut R) -> UnitaryMatrix {
    let d = 1usize << num_qubits;
    let g = nalgebra::DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let (q, r) = g.qr().unpack();
    let mut q = q;
    for j in 0..d {
        let z = r[(j, j)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    UnitaryMatrix::from_raw(q).expect("power-of-two dimension")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fusion_preserves_the_product() {
        let seq = vec![
            Gate::rot("RX", 0.3, &[0]),
            Gate::rot("RZ", 0.2, &[1]),
            Gate::rot("RY", 0.5, &[0]),
            Gate::fixed("CZ", &[0, 1]),
            Gate::rot("RX", 0.1, &[1]),
            Gate::rot("RX", -0.1, &[1]),
        ];
        let fused = fuse_single_qubit_runs(&seq);
        assert_eq!(fused.len(), 3);
        let a = sequence_matrix(&seq, &[0, 1]).unwrap();
        let b = sequence_matrix(&fused, &[0, 1]).unwrap();
        assert!(a.approx_eq(&b, 1e-12));
    }
}
