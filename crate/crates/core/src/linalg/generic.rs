//! Synthesis of unitaries on up to four qubits.
//!
//! The target is reduced column by column with two-level rotations ordered
//! along a Gray code, so each rotation touches basis states differing in one
//! bit and is therefore a multi-controlled single-qubit gate. Those are
//! expanded with the standard square-root construction down to controlled
//! single-qubit gates.

use nalgebra::DMatrix;

use super::gates::sequence_matrix;
use super::kak::{kak_synthesize, Entangler};
use super::matrix::{c, UnitaryMatrix, C64};
use super::{fuse_single_qubit_runs, LinalgError};
use crate::ir::Gate;

pub const MAX_GENERIC_QUBITS: usize = 4;
const ZERO_TOL: f64 = 1e-13;
const VERIFY_TOL: f64 = 1e-7;

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn mat2(m: [[C64; 2]; 2]) -> UnitaryMatrix {
    UnitaryMatrix::from_rows(&[&m[0], &m[1]])
}

/// A square root of a 2×2 unitary.
pub fn sqrt_2x2(w: &UnitaryMatrix) -> UnitaryMatrix {
    let det = w.determinant();
    let root = det.sqrt();
    let v = w.scale(c(1.0, 0.0) / root);
    // v = cos t·I − i sin t·(n·σ)
    let cos_t = ((v.get(0, 0) + v.get(1, 1)).re / 2.0).clamp(-1.0, 1.0);
    let t = cos_t.acos();
    let sin_t = t.sin();
    let n = if sin_t.abs() < 1e-12 {
        // ±I: any axis works
        [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
    } else {
        let k = c(0.0, 1.0) / sin_t;
        [
            [(v.get(0, 0) - cos_t) * k, v.get(0, 1) * k],
            [v.get(1, 0) * k, (v.get(1, 1) - cos_t) * k],
        ]
    };
    let (sh, ch) = (t / 2.0).sin_cos();
    let phase = root.sqrt();
    let m = |r: usize, col: usize| {
        let id = if r == col { ch } else { 0.0 };
        (c(id, 0.0) - c(0.0, sh) * n[r][col]) * phase
    };
    mat2([[m(0, 0), m(0, 1)], [m(1, 0), m(1, 1)]])
}

fn controlled(w: &UnitaryMatrix) -> UnitaryMatrix {
    let mut m = DMatrix::identity(4, 4);
    for r in 0..2 {
        for col in 0..2 {
            m[(2 + r, 2 + col)] = w.get(r, col);
        }
    }
    UnitaryMatrix::from_raw(m).expect("4x4")
}

/// Gate sequence for `w` on `target` controlled on every qubit in
/// `controls` being |1⟩. Singly-controlled pieces are 2Q matrix gates `CU`.
fn multi_controlled(w: &UnitaryMatrix, controls: &[usize], target: usize, out: &mut Vec<Gate>) {
    match controls {
        [] => out.push(Gate::from_matrix("U", w.clone(), vec![target])),
        [ctl] => out.push(Gate::from_matrix("CU", controlled(w), vec![*ctl, target])),
        [rest @ .., last] => {
            let v = sqrt_2x2(w);
            let x = mat2([[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]]);
            multi_controlled(&v, &[*last], target, out);
            multi_controlled(&x, rest, *last, out);
            multi_controlled(&v.adjoint(), &[*last], target, out);
            multi_controlled(&x, rest, *last, out);
            multi_controlled(&v, rest, target, out);
        }
    }
}

/// Emit a gate applying `w` to `target` when the other qubits hold
/// `pattern` (bit `n-1-q` of `pattern` is qubit `q`).
fn pattern_controlled(w: &UnitaryMatrix, n: usize, target: usize, pattern: usize, out: &mut Vec<Gate>) {
    let controls: Vec<usize> = (0..n).filter(|&q| q != target).collect();
    let zeros: Vec<usize> = controls
        .iter()
        .copied()
        .filter(|&q| pattern & (1 << (n - 1 - q)) == 0)
        .collect();
    for &q in &zeros {
        out.push(Gate::fixed("X", &[q]));
    }
    multi_controlled(w, &controls, target, out);
    for &q in &zeros {
        out.push(Gate::fixed("X", &[q]));
    }
}

/// If `u` is a single-qubit gate controlled on one value pattern of all the
/// other qubits, return `(target, pattern, w)`.
fn as_pattern_controlled(u: &UnitaryMatrix) -> Option<(usize, usize, UnitaryMatrix)> {
    let n = u.num_qubits();
    let dim = u.dim();
    for t in 0..n {
        let bit = 1usize << (n - 1 - t);
        for base in (0..dim).filter(|b| b & bit == 0) {
            let w = mat2([
                [u.get(base, base), u.get(base, base | bit)],
                [u.get(base | bit, base), u.get(base | bit, base | bit)],
            ]);
            if !w.is_unitary(1e-9) {
                continue;
            }
            let ok = (0..dim).all(|r| {
                (0..dim).all(|col| {
                    let inside = (r & !bit) == base && (col & !bit) == base;
                    let expect = if inside {
                        w.get(((r & bit) != 0) as usize, ((col & bit) != 0) as usize)
                    } else if r == col {
                        c(1.0, 0.0)
                    } else {
                        c(0.0, 0.0)
                    };
                    (u.get(r, col) - expect).norm() < 1e-9
                })
            });
            if ok {
                return Some((t, base, w));
            }
        }
    }
    None
}

/// Decompose into single-qubit matrix gates (`U`), two-qubit matrix gates
/// (`CU`) and `X`, on qubits `0..n`.
pub fn generic_lower(u: &UnitaryMatrix) -> Result<Vec<Gate>, LinalgError> {
    let n = u.num_qubits();
    if n > MAX_GENERIC_QUBITS {
        return Err(LinalgError::TooManyQubits(MAX_GENERIC_QUBITS));
    }
    if u.is_identity_up_to_phase(1e-12) {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Gate::from_matrix("U", u.clone(), vec![0])]);
    }
    if n == 2 {
        return Ok(vec![Gate::from_matrix("CU", u.clone(), vec![0, 1])]);
    }
    let mut out = Vec::new();
    if let Some((t, pattern, w)) = as_pattern_controlled(u) {
        pattern_controlled(&w, n, t, pattern, &mut out);
        return Ok(out);
    }
    let dim = u.dim();
    let mut w = DMatrix::from_fn(dim, dim, |r, col| u.get(gray(r), gray(col)));
    let mut applied: Vec<(usize, [[C64; 2]; 2])> = Vec::new();
    for j in 0..dim - 1 {
        for k in ((j + 1)..dim).rev() {
            let g = if j == dim - 2 {
                let b = |r: usize, col: usize| w[(dim - 2 + r, dim - 2 + col)].conj();
                [[b(0, 0), b(1, 0)], [b(0, 1), b(1, 1)]]
            } else {
                let x = w[(k - 1, j)];
                let y = w[(k, j)];
                if y.norm() < ZERO_TOL && k != j + 1 {
                    continue;
                }
                let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
                [[x.conj() / r, y.conj() / r], [-y / r, x / r]]
            };
            for col in 0..dim {
                let a = w[(k - 1, col)];
                let b = w[(k, col)];
                w[(k - 1, col)] = g[0][0] * a + g[0][1] * b;
                w[(k, col)] = g[1][0] * a + g[1][1] * b;
            }
            applied.push((k, g));
            if j == dim - 2 {
                break;
            }
        }
    }
    // w is now the identity; u = G₁†·G₂†·…, so the last rotation's inverse acts first
    for (k, g) in applied.into_iter().rev() {
        let (a, b) = (gray(k - 1), gray(k));
        let diff = a ^ b;
        let t = n - 1 - diff.trailing_zeros() as usize;
        let dag = [[g[0][0].conj(), g[1][0].conj()], [g[0][1].conj(), g[1][1].conj()]];
        let local = if a & diff == 0 {
            dag
        } else {
            [[dag[1][1], dag[1][0]], [dag[0][1], dag[0][0]]]
        };
        let m = mat2(local);
        if m.is_identity_up_to_phase(1e-13) && (m.get(0, 0) - c(1.0, 0.0)).norm() < 1e-13 {
            continue;
        }
        pattern_controlled(&m, n, t, a & !diff, &mut out);
    }
    Ok(out)
}

/// Decompose into single-qubit matrix gates and CNOTs, on qubits `0..n`.
pub fn generic_synthesize(u: &UnitaryMatrix) -> Result<Vec<Gate>, LinalgError> {
    let n = u.num_qubits();
    let lowered = generic_lower(u)?;
    let mut out = Vec::new();
    for g in lowered {
        if g.qubits.len() == 2 {
            let m = g.matrix.as_ref().expect("lowered gates carry matrices");
            let seq = kak_synthesize(m, Entangler::Cnot { reversed: false })?;
            out.extend(seq.into_iter().map(|s| s.remap(|q| g.qubits[q])));
        } else {
            out.push(g);
        }
    }
    let out = fuse_single_qubit_runs(&out);
    let qubits: Vec<usize> = (0..n).collect();
    let product = sequence_matrix(&out, &qubits)?;
    if product.phase_distance(u) > VERIFY_TOL {
        return Err(LinalgError::SynthesisFailed);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gates::builtin_matrix;
    use crate::linalg::random_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check(u: &UnitaryMatrix) -> Vec<Gate> {
        let seq = generic_synthesize(u).unwrap();
        let qs: Vec<usize> = (0..u.num_qubits()).collect();
        let m = sequence_matrix(&seq, &qs).unwrap();
        assert!(m.equiv_up_to_phase(u, 1e-7).unwrap());
        assert!(seq.iter().all(|g| g.arity() == 1 || g.name == "CNOT"));
        seq
    }

    #[test]
    fn square_root_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = random_unitary(1, &mut rng);
            let v = sqrt_2x2(&w);
            assert!(v.mul(&v).approx_eq(&w, 1e-10));
        }
        for name in ["X", "Z", "I"] {
            let w = builtin_matrix(name, &[]).unwrap();
            let v = sqrt_2x2(&w);
            assert!(v.mul(&v).approx_eq(&w, 1e-10), "{name}");
            let minus = w.scale(c(-1.0, 0.0));
            let v = sqrt_2x2(&minus);
            assert!(v.mul(&v).approx_eq(&minus, 1e-10), "-{name}");
        }
    }

    #[test]
    fn identity_gives_nothing() {
        assert!(generic_synthesize(&UnitaryMatrix::identity(3)).unwrap().is_empty());
    }

    #[test]
    fn ccnot_is_recognized_as_controlled() {
        let seq = check(&builtin_matrix("CCNOT", &[]).unwrap());
        assert!(seq.iter().filter(|g| g.name == "CNOT").count() <= 9);
    }

    #[test]
    fn random_three_and_four_qubit_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            check(&random_unitary(3, &mut rng));
        }
        check(&random_unitary(4, &mut rng));
    }

    #[test]
    fn rejects_five_qubits() {
        assert!(matches!(
            generic_lower(&UnitaryMatrix::identity(5)),
            Err(LinalgError::TooManyQubits(4))
        ));
    }
}
