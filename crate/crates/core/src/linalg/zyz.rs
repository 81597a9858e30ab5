//! Euler decomposition of single-qubit unitaries.

use num_complex::Complex64;

use super::gates::{ry, rz};
use super::matrix::UnitaryMatrix;
use super::LinalgError;

const DEGENERATE_TOL: f64 = 1e-12;

/// `U = e^{i·phase} RZ(gamma) RY(beta) RZ(alpha)`; as instructions,
/// `RZ(alpha)` runs first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZyzAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub phase: f64,
}

impl ZyzAngles {
    pub fn matrix(&self) -> UnitaryMatrix {
        rz(self.gamma)
            .mul(&ry(self.beta))
            .mul(&rz(self.alpha))
            .scale(Complex64::from_polar(1.0, self.phase))
    }
}

/// Decompose a 2×2 unitary. `beta` lies in `[0, π]`; when only the sum or
/// the difference of `alpha` and `gamma` is determined, `gamma` is zero.
pub fn zyz_decompose(u: &UnitaryMatrix) -> Result<ZyzAngles, LinalgError> {
    if u.dim() != 2 {
        return Err(LinalgError::DimensionMismatch(u.dim(), 2));
    }
    let det = u.determinant();
    let root = det.sqrt();
    let v = u.scale(Complex64::new(1.0, 0.0) / root);
    let v00 = v.get(0, 0);
    let v10 = v.get(1, 0);
    let v11 = v.get(1, 1);
    let beta = 2.0 * v10.norm().atan2(v00.norm());
    let (alpha, gamma) = if v10.norm() < DEGENERATE_TOL {
        (2.0 * v11.arg(), 0.0)
    } else if v11.norm() < DEGENERATE_TOL {
        (-2.0 * v10.arg(), 0.0)
    } else {
        let sum = 2.0 * v11.arg();
        let diff = 2.0 * v10.arg();
        ((sum - diff) / 2.0, (sum + diff) / 2.0)
    };
    let mut angles = ZyzAngles {
        alpha,
        beta,
        gamma,
        phase: 0.0,
    };
    angles.phase = angles.matrix().relative_phase(u).arg();
    Ok(angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gates::builtin_matrix;
    use std::f64::consts::PI;

    #[test]
    fn hadamard_angles() {
        let a = zyz_decompose(&builtin_matrix("H", &[]).unwrap()).unwrap();
        assert!((a.alpha - PI).abs() < 1e-12, "{a:?}");
        assert!((a.beta - PI / 2.0).abs() < 1e-12);
        assert!(a.gamma.abs() < 1e-12);
    }

    #[test]
    fn identity_is_degenerate() {
        let a = zyz_decompose(&UnitaryMatrix::identity(1)).unwrap();
        assert!(a.beta.abs() < 1e-12);
        assert_eq!(a.gamma, 0.0);
    }

    #[test]
    fn reconstruction_is_exact() {
        for name in ["X", "Y", "Z", "H", "S", "T"] {
            let u = builtin_matrix(name, &[]).unwrap();
            let a = zyz_decompose(&u).unwrap();
            assert!(a.matrix().approx_eq(&u, 1e-12), "{name}");
            assert!((0.0..=PI).contains(&a.beta));
        }
    }

    #[test]
    fn rejects_wrong_size() {
        assert!(zyz_decompose(&UnitaryMatrix::identity(2)).is_err());
    }
}
