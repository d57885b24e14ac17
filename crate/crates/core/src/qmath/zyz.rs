//! Euler decomposition `U = e^{iα} Rz(β) Ry(γ) Rz(δ)` of a single-qubit unitary.
//!
//! The rotations are the usual half-angle ones, `Rz(φ) = diag(e^{−iφ/2}, e^{iφ/2})`
//! and `Ry(φ) = e^{−iφσy/2}`. These match the OpenQASM 3 `rz`/`ry` gates used
//! by the exporter.

use std::f64::consts::PI;

use super::{expi, wrap_angle, ComplexMatrix, Tolerances, Unitarity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZyzAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// `diag(e^{−iφ/2}, e^{iφ/2})`.
pub fn rz_half(phi: f64) -> ComplexMatrix {
    ComplexMatrix::diag(&[expi(-phi / 2.0), expi(phi / 2.0)]).assume(Unitarity::Unitary)
}

/// `e^{−iφσy/2}`.
pub fn ry(phi: f64) -> ComplexMatrix {
    let (s, c) = (phi / 2.0).sin_cos();
    ComplexMatrix::real2(c, -s, s, c).assume(Unitarity::Unitary)
}

impl ZyzAngles {
    pub fn to_matrix(&self) -> ComplexMatrix {
        let m = &(&rz_half(self.beta) * &ry(self.gamma)) * &rz_half(self.delta);
        m.scaled(expi(self.alpha)).assume(Unitarity::Unitary)
    }
}

/// Decomposes a 2×2 unitary. Angles come back with `γ ∈ [0, π]` and
/// `α, β, δ ∈ (−π, π]`.
pub fn zyz_decompose(u: &ComplexMatrix) -> Result<ZyzAngles> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            found: format!("{}x{}", u.rows(), u.cols()),
        });
    }
    let deviation = u.unitarity_deviation();
    if u.unitarity() == Unitarity::Nonunitary || deviation > Tolerances::DEFAULT.unitarity {
        return Err(Error::NotUnitary { deviation });
    }

    let det = u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0);
    let mut alpha = det.arg() / 2.0;
    // W = e^{−iα} U is special unitary:
    // W = [[e^{−i(β+δ)/2} c, −e^{−i(β−δ)/2} s], [e^{i(β−δ)/2} s, e^{i(β+δ)/2} c]].
    let phase = expi(-alpha);
    let w00 = u.get(0, 0) * phase;
    let w10 = u.get(1, 0) * phase;
    let w11 = u.get(1, 1) * phase;

    let gamma = 2.0 * w10.norm().atan2(w00.norm());
    let sum = if w11.norm() > 1e-14 {
        2.0 * w11.arg()
    } else {
        0.0
    };
    let diff = if w10.norm() > 1e-14 {
        2.0 * w10.arg()
    } else {
        0.0
    };
    let (mut beta, mut delta) = if w11.norm() <= 1e-14 {
        (diff, 0.0)
    } else if w10.norm() <= 1e-14 {
        (sum, 0.0)
    } else {
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };

    // Rz(φ + 2π) = −Rz(φ): each wrap of β or δ costs a factor −1 = e^{iπ}.
    for angle in [&mut beta, &mut delta] {
        let wrapped = wrap_angle(*angle);
        let turns = ((*angle - wrapped) / (2.0 * PI)).round() as i64;
        if turns % 2 != 0 {
            alpha += PI;
        }
        *angle = wrapped;
    }
    alpha = wrap_angle(alpha);

    Ok(ZyzAngles {
        alpha,
        beta,
        gamma,
        delta,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::qmath::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn random_angles<R: Rng>(rng: &mut R) -> ZyzAngles {
        ZyzAngles {
            alpha: rng.random_range(-PI..PI),
            beta: rng.random_range(-PI..PI),
            gamma: rng.random_range(0.0..PI),
            delta: rng.random_range(-PI..PI),
        }
    }

    fn angle_eq(a: f64, b: f64) -> bool {
        wrap_angle(a - b).abs() < 1e-12
    }

    #[test]
    fn identity_is_all_zero() {
        let z = zyz_decompose(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!((z.alpha, z.beta, z.gamma, z.delta), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn hadamard_angles() {
        let h = ComplexMatrix::real2(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
        let z = zyz_decompose(&h).unwrap();
        // Oracle: e^{iπ/2} Ry(π/2) Rz(π) multiplied out by hand equals H.
        let oracle = &ry(PI / 2.0) * &rz_half(PI);
        assert!(oracle.scaled(expi(PI / 2.0)).max_abs_diff(&h) < 1e-15);
        assert!(angle_eq(z.alpha, PI / 2.0));
        assert!(angle_eq(z.beta, 0.0));
        assert!((z.gamma - PI / 2.0).abs() < 1e-12);
        assert!(angle_eq(z.delta, PI));
        assert!(z.to_matrix().max_abs_diff(&h) <= 1e-10);
    }

    #[test]
    fn random_unitaries_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let u = random_angles(&mut rng).to_matrix();
            let z = zyz_decompose(&u).unwrap();
            assert!(z.to_matrix().max_abs_diff(&u) <= 1e-10);
            assert!((0.0..=PI).contains(&z.gamma));
            for a in [z.alpha, z.beta, z.delta] {
                assert!(a > -PI && a <= PI);
            }
        }
    }

    #[test]
    fn diagonal_and_antidiagonal_edge_cases() {
        for u in [
            ComplexMatrix::real2(0.0, 1.0, 1.0, 0.0),
            ComplexMatrix::real2(1.0, 0.0, 0.0, -1.0),
            ComplexMatrix::mat2(
                C64::new(0.0, 1.0),
                0.0.into(),
                0.0.into(),
                C64::new(0.0, 1.0),
            ),
            ComplexMatrix::real2(0.0, -1.0, 1.0, 0.0),
        ] {
            let z = zyz_decompose(&u).unwrap();
            assert!(z.to_matrix().max_abs_diff(&u) <= 1e-10, "{u}");
        }
    }

    #[test]
    fn rejects_nonunitary() {
        let n = ComplexMatrix::real2(1.0, 0.0, 0.0, 0.5);
        assert!(matches!(zyz_decompose(&n), Err(Error::NotUnitary { .. })));
    }
}
