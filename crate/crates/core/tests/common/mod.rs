//! Shared fixtures: chips and an independent dense-matrix oracle.

#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use quilt_core::chipspec::{ArgPattern, ChipSpecification, NativeGateRecord, ParamPattern};
use quilt_core::frontend::ParamExpr;
use quilt_core::ir::Gate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type M = DMatrix<Complex64>;

fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn record(op: &str, params: Vec<ParamPattern>, arity: usize) -> NativeGateRecord {
    NativeGateRecord::new(op, params, (0..arity).map(ArgPattern::Position).collect())
}

pub fn rz_rx_records() -> Vec<NativeGateRecord> {
    let mut v: Vec<NativeGateRecord> = [-PI / 2.0, PI / 2.0, PI, -PI]
        .iter()
        .map(|&a| record("RX", vec![ParamPattern::Fixed(a)], 1))
        .collect();
    v.push(record("RZ", vec![ParamPattern::Wildcard], 1));
    v
}

/// Link records for a set of entangler names among CZ, ISWAP, CPHASE, CNOT.
pub fn entangler_records(names: &[&str]) -> Vec<NativeGateRecord> {
    names
        .iter()
        .map(|&n| match n {
            "CPHASE" => record("CPHASE", vec![ParamPattern::Wildcard], 2),
            other => record(other, Vec::new(), 2),
        })
        .collect()
}

pub fn line(n: usize) -> Vec<(usize, usize)> {
    (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect()
}

pub fn ring(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect()
}

pub fn chip(n: usize, links: &[(usize, usize)], entanglers: &[&str]) -> ChipSpecification {
    let qubits: Vec<usize> = (0..n).collect();
    ChipSpecification::uniform(&qubits, links, rz_rx_records(), entangler_records(entanglers))
}

fn one(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> M {
    M::from_row_slice(2, 2, &[a, b, c, d])
}

fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

/// Matrix of a named gate on its own qubits, first qubit most significant.
pub fn oracle_gate(g: &Gate) -> M {
    if let Some(m) = &g.matrix {
        return m.as_matrix().clone();
    }
    let p = |i: usize| g.param(i).expect("concrete parameter");
    let o = z(0.0, 0.0);
    let l = z(1.0, 0.0);
    let i = z(0.0, 1.0);
    let h = z(FRAC_1_SQRT_2, 0.0);
    let diag = |d: &[Complex64]| M::from_diagonal(&nalgebra::DVector::from_row_slice(d));
    match g.name.as_str() {
        "I" => M::identity(2, 2),
        "H" => one(h, h, h, -h),
        "X" => one(o, l, l, o),
        "Y" => one(o, -i, i, o),
        "Z" => diag(&[l, -l]),
        "S" => diag(&[l, i]),
        "T" => diag(&[l, Complex64::from_polar(1.0, PI / 4.0)]),
        "PHASE" => diag(&[l, Complex64::from_polar(1.0, p(0))]),
        "RX" => {
            let (c, s) = ((p(0) / 2.0).cos(), (p(0) / 2.0).sin());
            one(z(c, 0.0), z(0.0, -s), z(0.0, -s), z(c, 0.0))
        }
        "RY" => {
            let (c, s) = ((p(0) / 2.0).cos(), (p(0) / 2.0).sin());
            one(z(c, 0.0), z(-s, 0.0), z(s, 0.0), z(c, 0.0))
        }
        "RZ" => diag(&[Complex64::from_polar(1.0, -p(0) / 2.0), Complex64::from_polar(1.0, p(0) / 2.0)]),
        "CZ" => diag(&[l, l, l, -l]),
        "CPHASE" => diag(&[l, l, l, Complex64::from_polar(1.0, p(0))]),
        "CNOT" => permutation(&[0, 1, 3, 2]),
        "SWAP" => permutation(&[0, 2, 1, 3]),
        "ISWAP" => {
            let mut m = M::zeros(4, 4);
            m[(0, 0)] = l;
            m[(1, 2)] = i;
            m[(2, 1)] = i;
            m[(3, 3)] = l;
            m
        }
        "CCNOT" => permutation(&[0, 1, 2, 3, 4, 5, 7, 6]),
        "CSWAP" => permutation(&[0, 1, 2, 3, 4, 6, 5, 7]),
        other => panic!("oracle has no matrix for {other}"),
    }
}

fn permutation(p: &[usize]) -> M {
    let mut m = M::zeros(p.len(), p.len());
    for (col, &row) in p.iter().enumerate() {
        m[(row, col)] = z(1.0, 0.0);
    }
    m
}

/// Embed `u` acting on `targets` into the register `qubits` by explicit
/// basis-state enumeration.
fn embed(u: &M, targets: &[usize], qubits: &[usize]) -> M {
    let n = qubits.len();
    let pos: Vec<usize> = targets
        .iter()
        .map(|t| qubits.iter().position(|q| q == t).expect("target in register"))
        .collect();
    let d = 1 << n;
    let k = targets.len();
    let mut out = M::zeros(d, d);
    for col in 0..d {
        let bit = |x: usize, p: usize| (x >> (n - 1 - p)) & 1;
        let sub_in = pos.iter().fold(0, |acc, &p| (acc << 1) | bit(col, p));
        for sub_out in 0..(1 << k) {
            let amp = u[(sub_out, sub_in)];
            if amp.norm() == 0.0 {
                continue;
            }
            let mut row = col;
            for (j, &p) in pos.iter().enumerate() {
                let b = (sub_out >> (k - 1 - j)) & 1;
                let mask = 1 << (n - 1 - p);
                row = if b == 1 { row | mask } else { row & !mask };
            }
            out[(row, col)] += amp;
        }
    }
    out
}

/// Unitary of a gate sequence on `qubits`, applied left to right in time.
pub fn oracle_unitary(gates: &[Gate], qubits: &[usize]) -> M {
    let d = 1 << qubits.len();
    gates
        .iter()
        .fold(M::identity(d, d), |acc, g| embed(&oracle_gate(g), &g.qubits, qubits) * acc)
}

/// Distance between unitaries after removing the best global phase.
pub fn phase_distance(a: &M, b: &M) -> f64 {
    let tr: Complex64 = (a.adjoint() * b).trace();
    let ph = if tr.norm() > 1e-300 { tr / tr.norm() } else { z(1.0, 0.0) };
    (a * ph - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn equiv(a: &M, b: &M, tol: f64) -> bool {
    a.shape() == b.shape() && phase_distance(a, b) < tol
}

// Random gates and rule windows.

pub const NAMES_1Q: &[&str] = &["H", "X", "Y", "Z", "S", "T", "RX", "RY", "RZ", "PHASE"];
pub const NAMES_2Q: &[&str] = &["CZ", "CNOT", "SWAP", "ISWAP", "CPHASE"];

pub fn angle(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.4) {
        rng.gen_range(-4i32..=4) as f64 * PI / 2.0
    } else {
        rng.gen_range(-2.0 * PI..2.0 * PI)
    }
}

pub fn random_gate(rng: &mut ChaCha8Rng, arity: usize, name: Option<&str>) -> Gate {
    let mut qs: Vec<usize> = (0..arity.max(3)).collect();
    let mut pick = Vec::new();
    for _ in 0..arity {
        let i = rng.gen_range(0..qs.len());
        pick.push(qs.remove(i));
    }
    let name = name.unwrap_or_else(|| match arity {
        1 => NAMES_1Q[rng.gen_range(0..NAMES_1Q.len())],
        2 => NAMES_2Q[rng.gen_range(0..NAMES_2Q.len())],
        _ => "CCNOT",
    });
    if arity >= 3 && rng.gen_bool(0.5) {
        let m = quilt_core::linalg::random_unitary(arity, rng);
        return Gate::from_matrix("U", m, pick);
    }
    if arity == 2 && name == "U" {
        return Gate::from_matrix("U", quilt_core::linalg::random_unitary(2, rng), pick);
    }
    let params = match name {
        "RX" | "RY" | "RZ" | "PHASE" | "CPHASE" => vec![ParamExpr::from(angle(rng))],
        _ => Vec::new(),
    };
    Gate::new(name, params, pick)
}

pub fn random_window(rng: &mut ChaCha8Rng, slots: &[Vec<quilt_core::rules::Shape>]) -> Vec<Gate> {
    use quilt_core::rules::Shape;
    slots
        .iter()
        .map(|slot| {
            let shape = &slot[rng.gen_range(0..slot.len())];
            match shape {
                Shape::Named(n, k) => random_gate(rng, *k, Some(n)),
                Shape::Any(k) => {
                    let n = if *k == 2 && rng.gen_bool(0.3) { Some("U") } else { None };
                    random_gate(rng, *k, n)
                }
                Shape::ChipNative => random_gate(rng, 1, Some("RZ")),
            }
        })
        .collect()
}

pub const REGISTER: [usize; 4] = [0, 1, 2, 3];

#[test]
fn oracle_sanity() {
    let h = Gate::fixed("H", &[0]);
    let cz = Gate::fixed("CZ", &[0, 1]);
    let cnot = oracle_unitary(&[Gate::fixed("H", &[1]), cz, Gate::fixed("H", &[1])], &[0, 1]);
    assert!(equiv(&cnot, &oracle_gate(&Gate::fixed("CNOT", &[0, 1])), 1e-12));
    let hh = oracle_unitary(&[h.clone(), h], &[0]);
    assert!(equiv(&hh, &M::identity(2, 2), 1e-12));
    let _ = kron(&hh, &hh);
}
