//! Two-qubit synthesis with at most three entanglers.
//!
//! A 4×4 unitary is classified by the spectrum of `M = Uᴮ·Uᴮᵀ`, where `Uᴮ`
//! is the unitary written in the magic basis. Two unitaries with the same
//! spectrum differ only by single-qubit gates on each side, and those gates
//! are recovered by simultaneously diagonalizing both `M` matrices with real
//! orthogonal eigenvectors. Synthesis picks a parametrized template circuit
//! in the same class as the target and solves for the outer corrections.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use super::fuse_single_qubit_runs;
use super::gates::{builtin_matrix, sequence_matrix};
use super::matrix::{UnitaryMatrix, C64};
use super::LinalgError;
use crate::frontend::ParamExpr;
use crate::ir::Gate;

type M4 = Matrix4<C64>;

const CLASS_TOL: f64 = 1e-7;
const SPECTRUM_TOL: f64 = 1e-6;
const VERIFY_TOL: f64 = 1e-9;

/// Native two-qubit gate used as the entangling resource.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entangler {
    Cz,
    /// CNOT with control on the first qubit, or on the second when reversed.
    Cnot { reversed: bool },
    Iswap,
    Cphase,
}

impl Entangler {
    pub fn name(&self) -> &'static str {
        match self {
            Entangler::Cz => "CZ",
            Entangler::Cnot { .. } => "CNOT",
            Entangler::Iswap => "ISWAP",
            Entangler::Cphase => "CPHASE",
        }
    }
}

fn to_m4(u: &UnitaryMatrix) -> M4 {
    M4::from_fn(|r, col| u.get(r, col))
}

fn from_m4(m: &M4) -> UnitaryMatrix {
    UnitaryMatrix::from_raw(nalgebra::DMatrix::from_fn(4, 4, |r, col| m[(r, col)])).expect("4x4")
}

fn magic() -> M4 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let o = C64::new(s, 0.0);
    let i = C64::new(0.0, s);
    let z = C64::new(0.0, 0.0);
    M4::new(o, z, z, i, z, i, o, z, z, i, -o, z, o, z, z, -i)
}

/// Scale to determinant one.
fn special(u: &M4) -> M4 {
    let det = u.determinant();
    u * (C64::new(1.0, 0.0) / det.powf(0.25))
}

fn gamma_matrix(u: &M4) -> M4 {
    let q = magic();
    let ub = q.adjoint() * u * q;
    ub * ub.transpose()
}

/// Real orthogonal `P` (det +1) and eigenvalues with `M = P·diag(d)·Pᵀ`.
fn diagonalize_symmetric(m: &M4) -> Option<(Matrix4<f64>, [C64; 4])> {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    // a fixed sequence of mixing weights; the first generic one succeeds
    for k in 0..16 {
        let t = 0.4142135623 + 0.7853981634 * k as f64 + 0.123 * (k * k) as f64;
        let mix = re * t.cos() + im * t.sin();
        let eig = SymmetricEigen::new(mix);
        let mut p = eig.eigenvectors;
        if p.determinant() < 0.0 {
            let mut col = p.column_mut(0);
            col *= -1.0;
        }
        let pc = p.map(|x| C64::new(x, 0.0));
        let d = pc.transpose() * m * pc;
        let off = (0..4)
            .flat_map(|r| (0..4).map(move |col| (r, col)))
            .filter(|(r, col)| r != col)
            .map(|(r, col)| d[(r, col)].norm())
            .fold(0.0, f64::max);
        if off <= 1e-10 * scale {
            return Some((p, [d[(0, 0)], d[(1, 1)], d[(2, 2)], d[(3, 3)]]));
        }
    }
    None
}

/// Eigenvalues of a unitary (hence normal) matrix. A generic Hermitian
/// combination of its real and imaginary parts shares its eigenvectors;
/// this avoids unshifted Schur iterations, which can stall on unitaries.
fn unitary_eigenvalues(m: &M4) -> [C64; 4] {
    let adj = m.adjoint();
    let h1 = (m + adj) * C64::new(0.5, 0.0);
    let h2 = (m - adj) * C64::new(0.0, -0.5);
    let mut best = ([C64::new(1.0, 0.0); 4], f64::INFINITY);
    for k in 0..16 {
        let t = 0.4142135623 + 0.7853981634 * k as f64 + 0.123 * (k * k) as f64;
        let h = h1 * C64::new(t.cos(), 0.0) + h2 * C64::new(t.sin(), 0.0);
        let v = SymmetricEigen::new(h).eigenvectors;
        let d = v.adjoint() * m * v;
        let off = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| d[(r, c)].norm())
            .fold(0.0, f64::max);
        if off < best.1 {
            best = ([d[(0, 0)], d[(1, 1)], d[(2, 2)], d[(3, 3)]], off);
        }
        if off <= 1e-10 {
            break;
        }
    }
    best.0
}

/// Canonical coordinates `(a, b, c)` with the target locally equivalent to
/// `exp(i(a·XX + b·YY + c·ZZ))`. Each is determined modulo π/2 up to
/// permutation and paired sign flips.
pub fn weyl_coordinates(u: &UnitaryMatrix) -> [f64; 3] {
    let m = gamma_matrix(&special(&to_m4(u)));
    let eig = diagonalize_symmetric(&m)
        .map(|(_, d)| d)
        .unwrap_or_else(|| unitary_eigenvalues(&m));
    let mut ph: Vec<f64> = eig.iter().map(|z| z.arg()).collect();
    ph.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let s = (ph.iter().sum::<f64>() / (2.0 * PI)).round() as i64;
    for k in 0..s.unsigned_abs() as usize {
        if s > 0 {
            ph[k] -= 2.0 * PI;
        } else {
            ph[3 - k] += 2.0 * PI;
        }
    }
    let l: Vec<f64> = ph.iter().map(|p| p / 2.0).collect();
    [(l[0] + l[2]) / 2.0, (l[1] + l[2]) / 2.0, (l[0] + l[1]) / 2.0]
}

fn congruent(x: f64, target: f64) -> bool {
    let d = (x - target).rem_euclid(FRAC_PI_2);
    d.min(FRAC_PI_2 - d) < CLASS_TOL
}

fn class_counts(coords: &[f64; 3]) -> (usize, usize) {
    let zeros = coords.iter().filter(|&&x| congruent(x, 0.0)).count();
    let quarters = coords.iter().filter(|&&x| congruent(x, FRAC_PI_4)).count();
    (zeros, quarters)
}

/// Entanglers needed for `u` with the given resource.
pub fn entangler_count(u: &UnitaryMatrix, entangler: Entangler) -> usize {
    let coords = weyl_coordinates(u);
    let (zeros, quarters) = class_counts(&coords);
    match entangler {
        Entangler::Cz | Entangler::Cnot { .. } => match (zeros, quarters) {
            (3, _) => 0,
            (2, 1) => 1,
            (z, _) if z >= 1 => 2,
            _ => 3,
        },
        Entangler::Iswap => match (zeros, quarters) {
            (3, _) => 0,
            (1, 2) => 1,
            (z, _) if z >= 1 => 2,
            _ => 3,
        },
        Entangler::Cphase => 3 - zeros,
    }
}

/// Sorted spectrum of the class invariant, for both determinant branches.
fn class_spectra(u: &M4) -> [Vec<C64>; 2] {
    let m = gamma_matrix(&special(u));
    let mut a: Vec<C64> = unitary_eigenvalues(&m).to_vec();
    let mut b: Vec<C64> = a.iter().map(|z| -z).collect();
    let key = |z: &C64| (z.arg() * 1e6).round() as i64;
    a.sort_by_key(key);
    b.sort_by_key(key);
    [a, b]
}

fn spectra_match(a: &[C64], b: &[C64]) -> bool {
    let mut used = [false; 4];
    a.iter().all(|x| {
        if let Some(j) = (0..4).find(|&j| !used[j] && (b[j] - x).norm() < SPECTRUM_TOL) {
            used[j] = true;
            true
        } else {
            false
        }
    })
}

fn same_class(target: &[Vec<C64>; 2], candidate: &M4) -> bool {
    let c = class_spectra(candidate);
    spectra_match(&target[0], &c[0]) || spectra_match(&target[0], &c[1])
}

/// Split a 4×4 tensor product `A⊗B` into its factors.
fn split_product(k: &M4) -> (UnitaryMatrix, UnitaryMatrix) {
    let mut best = (0, 0, -1.0);
    for bi in 0..2 {
        for bj in 0..2 {
            let n: f64 = (0..2)
                .flat_map(|r| (0..2).map(move |col| (r, col)))
                .map(|(r, col)| k[(2 * bi + r, 2 * bj + col)].norm_sqr())
                .sum();
            if n > best.2 {
                best = (bi, bj, n);
            }
        }
    }
    let (bi, bj, _) = best;
    let block = Matrix2::from_fn(|r, col| k[(2 * bi + r, 2 * bj + col)]);
    let det = block.determinant();
    let b = block * (C64::new(1.0, 0.0) / det.sqrt());
    let a = Matrix2::from_fn(|r, col| {
        let sub = Matrix2::from_fn(|i, j| k[(2 * r + i, 2 * col + j)]);
        (b.adjoint() * sub).trace() / 2.0
    });
    let to_u = |m: Matrix2<C64>| {
        UnitaryMatrix::from_raw(nalgebra::DMatrix::from_fn(2, 2, |r, col| m[(r, col)])).expect("2x2")
    };
    (to_u(a), to_u(b))
}

/// Find `K1, K2 ∈ SU(2)⊗SU(2)` with `u ∝ K1·c·K2`.
fn local_factors(u: &M4, c: &M4) -> Option<(M4, M4)> {
    let q = magic();
    let us = special(u);
    let cs = special(c);
    let cb = q.adjoint() * cs * q;
    let mc = cb * cb.transpose();
    let (pc, dc) = diagonalize_symmetric(&mc)?;
    for scale in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
        let up = us * scale;
        let ub = q.adjoint() * up * q;
        let mu = ub * ub.transpose();
        let Some((mut pu, du)) = diagonalize_symmetric(&mu) else { continue };
        let mut perm = [usize::MAX; 4];
        let mut used = [false; 4];
        let mut ok = true;
        for j in 0..4 {
            let best = (0..4)
                .filter(|&k| !used[k])
                .min_by(|&x, &y| (dc[x] - du[j]).norm().partial_cmp(&(dc[y] - du[j]).norm()).unwrap());
            match best {
                Some(k) if (dc[k] - du[j]).norm() < SPECTRUM_TOL => {
                    used[k] = true;
                    perm[j] = k;
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let pcp = Matrix4::<f64>::from_fn(|r, j| pc[(r, perm[j])]);
        if pcp.determinant() * pu.determinant() < 0.0 {
            let mut col = pu.column_mut(0);
            col *= -1.0;
        }
        let o1 = (pu * pcp.transpose()).map(|x| C64::new(x, 0.0));
        let o2 = cb.adjoint() * o1.transpose() * ub;
        let k1 = q * o1 * q.adjoint();
        let k2 = q * o2 * q.adjoint();
        return Some((k1, k2));
    }
    None
}

fn one_q(m: UnitaryMatrix, q: usize) -> Gate {
    Gate::from_matrix("U", m, vec![q])
}

fn rot(name: &str, theta: f64, q: usize) -> Gate {
    Gate::new(name, vec![ParamExpr::constant(theta)], vec![q])
}

fn cz() -> Gate {
    Gate::fixed("CZ", &[0, 1])
}

fn hadamard(q: usize) -> Gate {
    Gate::fixed("H", &[q])
}

/// A CNOT onto `target` written with CZ.
fn cnot_via_cz(target: usize) -> Vec<Gate> {
    vec![hadamard(target), cz(), hadamard(target)]
}

fn sign_variants(values: &[f64]) -> Vec<Vec<f64>> {
    let n = values.len();
    (0..(1usize << n))
        .map(|mask| {
            values
                .iter()
                .enumerate()
                .map(|(i, v)| if mask & (1 << i) != 0 { -v } else { *v })
                .collect()
        })
        .collect()
}

fn permutations3(v: [f64; 3]) -> Vec<[f64; 3]> {
    let idx = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    idx.iter().map(|p| [v[p[0]], v[p[1]], v[p[2]]]).collect()
}

/// Candidate template circuits with `k` entanglers in the class of the target.
fn templates(coords: [f64; 3], k: usize, entangler: Entangler) -> Vec<Vec<Gate>> {
    let nonzero: Vec<f64> = coords.iter().copied().filter(|&x| !congruent(x, 0.0)).collect();
    let mut out = Vec::new();
    match (entangler, k) {
        (_, 0) => out.push(Vec::new()),
        (Entangler::Cphase, _) => {
            // one exp(iθ·PP) factor per nonzero coordinate; conjugating a ZZ
            // factor by H⊗H or RX(π/2)⊗RX(π/2) turns it into XX or YY
            let mut vals = nonzero.clone();
            while vals.len() < k {
                vals.push(0.0);
            }
            for signs in sign_variants(&vals[..k]) {
                let mut seq = Vec::new();
                for (axis, theta) in signs.iter().enumerate() {
                    let zz = vec![
                        rot("RZ", -2.0 * theta, 0),
                        rot("RZ", -2.0 * theta, 1),
                        Gate::new("CPHASE", vec![ParamExpr::constant(4.0 * theta)], vec![0, 1]),
                    ];
                    match axis {
                        0 => seq.extend(zz),
                        1 => {
                            seq.extend([hadamard(0), hadamard(1)]);
                            seq.extend(zz);
                            seq.extend([hadamard(0), hadamard(1)]);
                        }
                        _ => {
                            seq.extend([rot("RX", FRAC_PI_2, 0), rot("RX", FRAC_PI_2, 1)]);
                            seq.extend(zz);
                            seq.extend([rot("RX", -FRAC_PI_2, 0), rot("RX", -FRAC_PI_2, 1)]);
                        }
                    }
                }
                out.push(seq);
            }
        }
        (Entangler::Iswap, 1) => out.push(vec![Gate::fixed("ISWAP", &[0, 1])]),
        (Entangler::Iswap, 2) => {
            let (p, r) = two_active(&coords);
            for (x, y) in pair_candidates(p, r) {
                out.push(vec![
                    Gate::fixed("ISWAP", &[0, 1]),
                    rot("RX", 2.0 * x, 0),
                    rot("RX", 2.0 * y, 1),
                    Gate::fixed("ISWAP", &[0, 1]),
                ]);
            }
        }
        (_, 1) => out.push(vec![cz()]),
        (_, 2) => {
            let (p, r) = two_active(&coords);
            for (x, z) in pair_candidates(p, r) {
                out.push(vec![cz(), rot("RX", -2.0 * x, 0), rot("RX", -2.0 * z, 1), cz()]);
            }
        }
        (_, _) => {
            for perm in permutations3(coords) {
                for s in sign_variants(&perm) {
                    let (alpha, beta, gamma) = (s[0], s[1], s[2]);
                    let t1 = FRAC_PI_2 - 2.0 * gamma;
                    let t2 = 2.0 * alpha - FRAC_PI_2;
                    let t3 = FRAC_PI_2 - 2.0 * beta;
                    let mut seq = cnot_via_cz(0);
                    seq.push(rot("RY", t3, 1));
                    seq.extend(cnot_via_cz(1));
                    seq.push(rot("RZ", t1, 0));
                    seq.push(rot("RY", t2, 1));
                    seq.extend(cnot_via_cz(0));
                    out.push(seq);
                }
            }
        }
    }
    out
}

/// The two coordinates not congruent to zero (or the two largest).
fn two_active(coords: &[f64; 3]) -> (f64, f64) {
    let mut idx = [0usize, 1, 2];
    let dist0 = |x: f64| {
        let d = x.rem_euclid(FRAC_PI_2);
        d.min(FRAC_PI_2 - d)
    };
    idx.sort_by(|&a, &b| dist0(coords[b]).partial_cmp(&dist0(coords[a])).unwrap());
    (coords[idx[0]], coords[idx[1]])
}

fn pair_candidates(p: f64, r: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (a, b) in [(p, r), (r, p)] {
        for s in sign_variants(&[a, b]) {
            out.push((s[0], s[1]));
        }
    }
    out
}

fn try_template(target: &M4, spectra: &[Vec<C64>; 2], template: &[Gate]) -> Option<Vec<Gate>> {
    let c = if template.is_empty() {
        M4::identity()
    } else {
        to_m4(&sequence_matrix(template, &[0, 1]).ok()?)
    };
    if !same_class(spectra, &c) {
        return None;
    }
    let (k1, k2) = local_factors(target, &c)?;
    let (a1, b1) = split_product(&k1);
    let (a2, b2) = split_product(&k2);
    let mut seq = vec![one_q(a2, 0), one_q(b2, 1)];
    seq.extend(template.iter().cloned());
    seq.push(one_q(a1, 0));
    seq.push(one_q(b1, 1));
    let product = sequence_matrix(&seq, &[0, 1]).ok()?;
    if product.phase_distance(&from_m4(target)) <= VERIFY_TOL {
        Some(seq)
    } else {
        None
    }
}

fn synthesize_cz_family(u: &M4, min_k: usize) -> Result<Vec<Gate>, LinalgError> {
    let um = from_m4(u);
    let coords = weyl_coordinates(&um);
    let spectra = class_spectra(u);
    for k in min_k..=3 {
        for t in templates(coords, k, Entangler::Cz) {
            if let Some(seq) = try_template(u, &spectra, &t) {
                return Ok(seq);
            }
        }
    }
    Err(LinalgError::SynthesisFailed)
}

/// Replace each CZ with three ISWAP-side pieces: `CZ = SWAP·ISWAP·(S†⊗S†)`.
/// The SWAPs are then absorbed by relabelling wires.
fn iswap_from_cz_circuit(v_seq: &[Gate]) -> Vec<Gate> {
    let sdg = builtin_matrix("RZ", &[-FRAC_PI_2]).expect("RZ");
    // a leading SWAP, so the circuit implements V·SWAP
    let mut swapped = true;
    let mut out = Vec::new();
    let wire = |q: usize, swapped: bool| if swapped { 1 - q } else { q };
    for g in v_seq {
        if g.name == "CZ" && g.matrix.is_none() {
            out.push(one_q(sdg.clone(), wire(0, swapped)));
            out.push(one_q(sdg.clone(), wire(1, swapped)));
            out.push(Gate::fixed("ISWAP", &[0, 1]));
            swapped ^= true;
        } else {
            out.push(g.remap(|q| wire(q, swapped)));
        }
    }
    debug_assert!(!swapped);
    out
}

/// Synthesize a two-qubit unitary on qubits `[0, 1]` using the fewest
/// applications of `entangler`. Single-qubit pieces are returned as matrix
/// gates named `U`.
pub fn kak_synthesize(u: &UnitaryMatrix, entangler: Entangler) -> Result<Vec<Gate>, LinalgError> {
    if u.dim() != 4 {
        return Err(LinalgError::DimensionMismatch(u.dim(), 4));
    }
    let target = to_m4(u);
    let k = entangler_count(u, entangler);
    let seq = match entangler {
        Entangler::Cz => synthesize_cz_family(&target, k)?,
        Entangler::Cnot { reversed } => {
            let base = synthesize_cz_family(&target, k)?;
            let (c, t) = if reversed { (1, 0) } else { (0, 1) };
            let h = builtin_matrix("H", &[]).expect("H");
            base.into_iter()
                .flat_map(|g| {
                    if g.name == "CZ" && g.matrix.is_none() {
                        vec![one_q(h.clone(), t), Gate::fixed("CNOT", &[c, t]), one_q(h.clone(), t)]
                    } else {
                        vec![g]
                    }
                })
                .collect()
        }
        Entangler::Iswap => {
            let coords = weyl_coordinates(u);
            let spectra = class_spectra(&target);
            let mut found = None;
            'search: for kk in k..=2 {
                for t in templates(coords, kk, Entangler::Iswap) {
                    if let Some(seq) = try_template(&target, &spectra, &t) {
                        found = Some(seq);
                        break 'search;
                    }
                }
            }
            match found {
                Some(seq) => seq,
                None => {
                    let swap = to_m4(&builtin_matrix("SWAP", &[]).expect("SWAP"));
                    let v = target * swap;
                    let v_seq = synthesize_cz_family(&v, 3)?;
                    iswap_from_cz_circuit(&v_seq)
                }
            }
        }
        Entangler::Cphase => {
            let coords = weyl_coordinates(u);
            let spectra = class_spectra(&target);
            let mut found = None;
            for kk in k..=3 {
                for t in templates(coords, kk, Entangler::Cphase) {
                    if let Some(seq) = try_template(&target, &spectra, &t) {
                        found = Some(seq);
                        break;
                    }
                }
                if found.is_some() {
                    break;
                }
            }
            found.ok_or(LinalgError::SynthesisFailed)?
        }
    };
    let fused = fuse_single_qubit_runs(&seq);
    let product = sequence_matrix(&fused, &[0, 1])?;
    if product.phase_distance(u) > VERIFY_TOL * 10.0 {
        return Err(LinalgError::SynthesisFailed);
    }
    Ok(fused)
}

/// Phase-free CZ count helper used by cost estimates.
pub fn entangler_count_for_gates(gates: &[Gate], entangler: Entangler) -> Option<usize> {
    let m = sequence_matrix(gates, &super::gates::support(gates)).ok()?;
    (m.num_qubits() == 2).then(|| entangler_count(&m, entangler))
}
