//! Matrices of builtin gates and products of gate sequences.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::{c, UnitaryMatrix, C64};
use super::LinalgError;
use crate::frontend::GateDefinition;
use crate::ir::Gate;

pub fn rx(theta: f64) -> UnitaryMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    UnitaryMatrix::from_rows(&[&[c(co, 0.), c(0., -s)], &[c(0., -s), c(co, 0.)]])
}

pub fn ry(theta: f64) -> UnitaryMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    UnitaryMatrix::from_rows(&[&[c(co, 0.), c(-s, 0.)], &[c(s, 0.), c(co, 0.)]])
}

pub fn rz(theta: f64) -> UnitaryMatrix {
    let h = theta / 2.0;
    UnitaryMatrix::from_rows(&[
        &[C64::from_polar(1.0, -h), c(0., 0.)],
        &[c(0., 0.), C64::from_polar(1.0, h)],
    ])
}

fn diag(entries: &[C64]) -> UnitaryMatrix {
    let n = entries.len();
    UnitaryMatrix::from_raw(DMatrix::from_fn(n, n, |r, col| if r == col { entries[r] } else { c(0., 0.) }))
        .expect("power-of-two diagonal")
}

fn permutation(images: &[usize]) -> UnitaryMatrix {
    let n = images.len();
    UnitaryMatrix::from_raw(DMatrix::from_fn(n, n, |r, col| {
        if images[col] == r {
            c(1., 0.)
        } else {
            c(0., 0.)
        }
    }))
    .expect("power-of-two permutation")
}

/// Matrix of a builtin gate with numeric parameters.
pub fn builtin_matrix(name: &str, params: &[f64]) -> Option<UnitaryMatrix> {
    let (o, z, i) = (c(1., 0.), c(0., 0.), c(0., 1.));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let p = |k: usize| params.get(k).copied();
    Some(match name {
        "I" => UnitaryMatrix::identity(1),
        "X" => UnitaryMatrix::from_rows(&[&[z, o], &[o, z]]),
        "Y" => UnitaryMatrix::from_rows(&[&[z, -i], &[i, z]]),
        "Z" => diag(&[o, -o]),
        "H" => UnitaryMatrix::from_rows(&[&[c(h, 0.), c(h, 0.)], &[c(h, 0.), c(-h, 0.)]]),
        "S" => diag(&[o, i]),
        "T" => diag(&[o, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]),
        "RX" => rx(p(0)?),
        "RY" => ry(p(0)?),
        "RZ" => rz(p(0)?),
        "CNOT" => permutation(&[0, 1, 3, 2]),
        "CZ" => diag(&[o, o, o, -o]),
        "SWAP" => permutation(&[0, 2, 1, 3]),
        "ISWAP" => UnitaryMatrix::from_rows(&[
            &[o, z, z, z],
            &[z, z, i, z],
            &[z, i, z, z],
            &[z, z, z, o],
        ]),
        "CPHASE" => diag(&[o, o, o, C64::from_polar(1.0, p(0)?)]),
        "CCNOT" => permutation(&[0, 1, 2, 3, 4, 5, 7, 6]),
        _ => return None,
    })
}

/// Evaluate a `DEFGATE` at numeric parameters.
pub fn defgate_matrix(def: &GateDefinition, params: &[f64]) -> Result<UnitaryMatrix, LinalgError> {
    let env: BTreeMap<String, f64> = def.params.iter().cloned().zip(params.iter().copied()).collect();
    let n = def.dimension();
    let mut m = DMatrix::from_element(n, n, c(0., 0.));
    for (r, row) in def.matrix.iter().enumerate() {
        for (col, e) in row.iter().enumerate() {
            m[(r, col)] = e
                .eval_complex(&env)
                .map_err(|err| LinalgError::Evaluation(err.to_string()))?;
        }
    }
    UnitaryMatrix::new(m)
}

/// Matrix of a gate, which must have numeric parameters.
pub fn gate_matrix(g: &Gate) -> Result<UnitaryMatrix, LinalgError> {
    if let Some(m) = &g.matrix {
        return Ok((**m).clone());
    }
    let params: Vec<f64> = g
        .params
        .iter()
        .map(|p| p.value().ok_or(LinalgError::Symbolic(g.name.clone())))
        .collect::<Result<_, _>>()?;
    let m = builtin_matrix(&g.name, &params).ok_or_else(|| LinalgError::UnknownGate(g.name.clone()))?;
    if m.num_qubits() != g.qubits.len() {
        return Err(LinalgError::DimensionMismatch(m.dim(), 1 << g.qubits.len()));
    }
    Ok(m)
}

/// Apply `u` to the qubits at register positions `targets` of a state on
/// `n` qubits (position 0 is the most significant bit).
pub fn apply_to_state(state: &mut [Complex64], n: usize, u: &UnitaryMatrix, targets: &[usize]) {
    let k = targets.len();
    let dim = 1usize << k;
    let masks: Vec<usize> = targets.iter().map(|&t| 1usize << (n - 1 - t)).collect();
    let all: usize = masks.iter().sum();
    let m = u.as_matrix();
    let mut idx = vec![0usize; dim];
    let mut amp = vec![Complex64::new(0.0, 0.0); dim];
    for base in 0..(1usize << n) {
        if base & all != 0 {
            continue;
        }
        for (local, slot) in idx.iter_mut().enumerate() {
            let mut s = base;
            for (j, mask) in masks.iter().enumerate() {
                if local & (1 << (k - 1 - j)) != 0 {
                    s |= mask;
                }
            }
            *slot = s;
        }
        for (local, a) in amp.iter_mut().enumerate() {
            *a = state[idx[local]];
        }
        for r in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for (col, a) in amp.iter().enumerate() {
                acc += m[(r, col)] * a;
            }
            state[idx[r]] = acc;
        }
    }
}

/// Product of a gate sequence over the ordered register `qubits`.
pub fn sequence_matrix(gates: &[Gate], qubits: &[usize]) -> Result<UnitaryMatrix, LinalgError> {
    let n = qubits.len();
    let pos: BTreeMap<usize, usize> = qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let dim = 1usize << n;
    let mut cols = DMatrix::<Complex64>::identity(dim, dim);
    let mut state = vec![Complex64::new(0.0, 0.0); dim];
    let mats: Vec<(UnitaryMatrix, Vec<usize>)> = gates
        .iter()
        .map(|g| {
            let targets = g
                .qubits
                .iter()
                .map(|q| pos.get(q).copied().ok_or(LinalgError::QubitOutsideRegister(*q)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((gate_matrix(g)?, targets))
        })
        .collect::<Result<_, LinalgError>>()?;
    for col in 0..dim {
        for (r, s) in state.iter_mut().enumerate() {
            *s = cols[(r, col)];
        }
        for (m, t) in &mats {
            apply_to_state(&mut state, n, m, t);
        }
        for (r, s) in state.iter().enumerate() {
            cols[(r, col)] = *s;
        }
    }
    UnitaryMatrix::from_raw(cols)
}

/// Sorted distinct qubits touched by a sequence.
pub fn support(gates: &[Gate]) -> Vec<usize> {
    let mut qs: Vec<usize> = gates.iter().flat_map(|g| g.qubits.iter().copied()).collect();
    qs.sort_unstable();
    qs.dedup();
    qs
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rotation_identities() {
        // RY(b) = RZ(pi/2) RX(b) RZ(-pi/2)
        let b = 0.7;
        let lhs = ry(b);
        let rhs = rz(PI / 2.0).mul(&rx(b)).mul(&rz(-PI / 2.0));
        assert!(lhs.approx_eq(&rhs, 1e-12));
        // H = i RZ(pi)... up to phase: H ~ RZ(0) RY(pi/2) RZ(pi)
        let h = builtin_matrix("H", &[]).unwrap();
        assert!(h.equiv_up_to_phase(&ry(PI / 2.0).mul(&rz(PI)), 1e-12).unwrap());
    }

    #[test]
    fn cnot_is_cz_conjugated_by_hadamard() {
        let h = builtin_matrix("H", &[]).unwrap();
        let ih = UnitaryMatrix::identity(1).kron(&h);
        let cz = builtin_matrix("CZ", &[]).unwrap();
        let cnot = builtin_matrix("CNOT", &[]).unwrap();
        assert!(ih.mul(&cz).mul(&ih).approx_eq(&cnot, 1e-12));
    }

    #[test]
    fn sequence_respects_register_order() {
        let g = vec![Gate::fixed("CNOT", &[5, 2])];
        let m = sequence_matrix(&g, &[2, 5]).unwrap();
        let swap = builtin_matrix("SWAP", &[]).unwrap();
        let cnot = builtin_matrix("CNOT", &[]).unwrap();
        assert!(m.approx_eq(&swap.mul(&cnot).mul(&swap), 1e-12));
    }

    #[test]
    fn sequence_applies_first_gate_first() {
        let g = vec![Gate::rot("RX", 0.3, &[0]), Gate::rot("RZ", 0.5, &[0])];
        let m = sequence_matrix(&g, &[0]).unwrap();
        assert!(m.approx_eq(&rz(0.5).mul(&rx(0.3)), 1e-12));
    }

    #[test]
    fn symbolic_gates_have_no_matrix() {
        let g = Gate::new("RZ", vec![crate::frontend::ParamExpr::var("a")], vec![0]);
        assert!(matches!(gate_matrix(&g), Err(LinalgError::Symbolic(_))));
    }

    #[test]
    fn all_builtins_are_unitary() {
        for (name, np, _) in crate::frontend::BUILTIN_GATES {
            let params = vec![0.37; *np];
            let m = builtin_matrix(name, &params).unwrap();
            assert!(m.is_unitary(1e-12), "{name}");
        }
    }
}
