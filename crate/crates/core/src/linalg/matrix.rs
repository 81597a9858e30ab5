use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LinalgError;

pub type C64 = Complex64;

pub const UNITARY_TOL: f64 = 1e-9;
pub const DEFAULT_EQUIV_TOL: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A square unitary matrix on `num_qubits` qubits. The first qubit is the
/// most significant bit of the basis index.
#[derive(Clone, PartialEq)]
pub struct UnitaryMatrix {
    m: DMatrix<C64>,
    num_qubits: usize,
}

impl fmt::Debug for UnitaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "UnitaryMatrix({} qubits)", self.num_qubits)?;
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|col| {
                    let z = self.m[(r, col)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl UnitaryMatrix {
    /// Validate shape and unitarity.
    pub fn new(m: DMatrix<C64>) -> Result<Self, LinalgError> {
        let u = Self::from_raw(m)?;
        if !u.is_unitary(UNITARY_TOL) {
            return Err(LinalgError::NotUnitary);
        }
        Ok(u)
    }

    /// Check the shape only; used for products of already-unitary factors.
    pub fn from_raw(m: DMatrix<C64>) -> Result<Self, LinalgError> {
        let d = m.nrows();
        if d != m.ncols() || d == 0 || !d.is_power_of_two() {
            return Err(LinalgError::BadShape(m.nrows(), m.ncols()));
        }
        Ok(UnitaryMatrix {
            num_qubits: d.trailing_zeros() as usize,
            m,
        })
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        Self::from_raw(DMatrix::from_fn(n, n, |r, col| rows[r][col])).expect("square power-of-two matrix")
    }

    pub fn identity(num_qubits: usize) -> Self {
        let d = 1 << num_qubits;
        UnitaryMatrix {
            m: DMatrix::identity(d, d),
            num_qubits,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn get(&self, r: usize, col: usize) -> C64 {
        self.m[(r, col)]
    }

    /// Matrix product `self · other`, i.e. `other` acts first.
    pub fn mul(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix {
            m: &self.m * &other.m,
            num_qubits: self.num_qubits,
        }
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix {
            m: self.m.adjoint(),
            num_qubits: self.num_qubits,
        }
    }

    pub fn transpose(&self) -> UnitaryMatrix {
        UnitaryMatrix {
            m: self.m.transpose(),
            num_qubits: self.num_qubits,
        }
    }

    pub fn scale(&self, z: C64) -> UnitaryMatrix {
        UnitaryMatrix {
            m: &self.m * z,
            num_qubits: self.num_qubits,
        }
    }

    /// Tensor product with `self` on the leading qubits.
    pub fn kron(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix {
            m: self.m.kronecker(&other.m),
            num_qubits: self.num_qubits + other.num_qubits,
        }
    }

    pub fn determinant(&self) -> C64 {
        self.m.clone().determinant()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self.m.adjoint() * &self.m;
        let d = self.dim();
        (0..d).all(|r| {
            (0..d).all(|col| {
                let expect = if r == col { 1.0 } else { 0.0 };
                (prod[(r, col)] - C64::new(expect, 0.0)).norm() <= tol
            })
        })
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &UnitaryMatrix) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &UnitaryMatrix, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_diff(other) <= tol
    }

    /// The phase `z` minimizing `|other - z·self|` at the largest entry of `self`.
    pub fn relative_phase(&self, other: &UnitaryMatrix) -> C64 {
        let (idx, _) = self
            .m
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
        let a = self.m.as_slice()[idx];
        let b = other.m.as_slice()[idx];
        if b.norm() < 1e-300 {
            return C64::new(1.0, 0.0);
        }
        let z = b / a;
        z / z.norm()
    }

    /// Largest entrywise distance after aligning global phases.
    pub fn phase_distance(&self, other: &UnitaryMatrix) -> f64 {
        let z = self.relative_phase(other);
        self.scale(z).max_diff(other)
    }

    /// Equality up to a global phase.
    pub fn equiv_up_to_phase(&self, other: &UnitaryMatrix, tol: f64) -> Result<bool, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self.phase_distance(other) <= tol)
    }

    /// Whether this is the identity up to phase.
    pub fn is_identity_up_to_phase(&self, tol: f64) -> bool {
        self.phase_distance(&UnitaryMatrix::identity(self.num_qubits)) <= tol
    }
}
