//! Closed-form singular value decomposition of a complex 2×2 matrix.
//!
//! Convention: singular values descending; the first nonzero entry of each
//! left column is real and positive; the right factor is derived from the
//! left factor and the source matrix. When the two singular values coincide
//! (to 1e-12) the matrix is a scaled unitary and the left factor is taken
//! as the source divided by `σ₀`, column-phase fixed.

use super::{ComplexMatrix, Unitarity, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Threshold below which a complex entry counts as zero when fixing phases.
const PHASE_EPS: f64 = 1e-14;
/// `|σ₀ − σ₁|` at or below this is reported as a degenerate spectrum.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Svd2x2 {
    pub left: ComplexMatrix,
    pub singulars: [f64; 2],
    pub right_dagger: ComplexMatrix,
    /// Set when `|σ₀ − σ₁| ≤ 1e-12`; the factors are then convention-chosen.
    pub degenerate: bool,
}

impl Svd2x2 {
    /// `left · diag(singulars) · right_dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::diag(&[self.singulars[0].into(), self.singulars[1].into()]);
        &(&self.left * &d) * &self.right_dagger
    }

    /// `σ₁ / σ₀`, or 1 for the zero matrix.
    pub fn ratio(&self) -> f64 {
        if self.singulars[0] == 0.0 {
            1.0
        } else {
            self.singulars[1] / self.singulars[0]
        }
    }

    pub fn right(&self) -> ComplexMatrix {
        self.right_dagger.dagger()
    }
}

/// Decomposes `m = left · diag(σ₀, σ₁) · right_dagger`.
pub fn svd_2x2(m: &ComplexMatrix) -> Result<Svd2x2> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            found: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    if m.entries()
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Domain {
            name: "matrix entry",
            value: f64::NAN,
            domain: "finite complex numbers",
        });
    }

    // Hermitian H = M M† = [[a, b], [b*, d]].
    let (m00, m01, m10, m11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let a = m00.norm_sqr() + m01.norm_sqr();
    let d = m10.norm_sqr() + m11.norm_sqr();
    let b = m00 * m10.conj() + m01 * m11.conj();

    let half_gap = ((a - d) / 2.0).hypot(b.norm());
    let lambda0 = (a + d) / 2.0 + half_gap;
    // σ₀σ₁ = |det M| is better conditioned than sqrt(λ₁) when σ₁ ≪ σ₀.
    let det_abs = (m00 * m11 - m01 * m10).norm();
    let s0 = lambda0.max(0.0).sqrt();
    let s1 = if s0 > 0.0 {
        (det_abs / s0).min(s0)
    } else {
        0.0
    };

    if s0 == 0.0 {
        return Ok(Svd2x2 {
            left: ComplexMatrix::identity(2),
            singulars: [0.0, 0.0],
            right_dagger: ComplexMatrix::identity(2),
            degenerate: true,
        });
    }

    if s0 - s1 <= DEGENERACY_TOL {
        return Ok(degenerate_svd(m, s0, s1));
    }

    // Leading eigenvector of H: pick the better-conditioned of two candidates.
    let cand_a = [b, C64::from(lambda0 - a)];
    let cand_b = [C64::from(lambda0 - d), b.conj()];
    let norm2 = |v: &[C64; 2]| v[0].norm_sqr() + v[1].norm_sqr();
    let mut u0 = if norm2(&cand_a) >= norm2(&cand_b) {
        cand_a
    } else {
        cand_b
    };
    let n0 = norm2(&u0).sqrt();
    if n0 == 0.0 {
        // b = 0 and a = d would have been degenerate; here the diagonal decides.
        u0 = if a >= d { [ONE, ZERO] } else { [ZERO, ONE] };
    } else {
        u0 = [u0[0] / n0, u0[1] / n0];
    }
    let u0 = phase_fix(u0);
    let u1 = phase_fix([-u0[1].conj(), u0[0].conj()]);

    // Row r0 = u0† M / σ₀; row r1 is the unit row orthogonal to r0 with the
    // phase of u1† M.
    let row = |u: &[C64; 2]| {
        [
            u[0].conj() * m00 + u[1].conj() * m10,
            u[0].conj() * m01 + u[1].conj() * m11,
        ]
    };
    let w0 = row(&u0);
    let sigma0 = (w0[0].norm_sqr() + w0[1].norm_sqr()).sqrt();
    let r0 = [w0[0] / sigma0, w0[1] / sigma0];
    let orth = [-r0[1].conj(), r0[0].conj()];
    let w1 = row(&u1);
    let proj = w1[0] * orth[0].conj() + w1[1] * orth[1].conj();
    let sigma1 = proj.norm().min(sigma0);
    let phase = if proj.norm() > 0.0 {
        proj / proj.norm()
    } else {
        ONE
    };
    let r1 = [orth[0] * phase, orth[1] * phase];

    Ok(Svd2x2 {
        left: ComplexMatrix::mat2(u0[0], u1[0], u0[1], u1[1]).assume(Unitarity::Unitary),
        singulars: [sigma0, sigma1],
        right_dagger: ComplexMatrix::mat2(r0[0], r0[1], r1[0], r1[1]).assume(Unitarity::Unitary),
        degenerate: false,
    })
}

fn degenerate_svd(m: &ComplexMatrix, s0: f64, s1: f64) -> Svd2x2 {
    // M = σ W with W unitary; left = W·P, right_dagger = P†, P diagonal phases.
    let sigma = (s0 + s1) / 2.0;
    let inv = C64::from(1.0 / sigma);
    let c0 = [m.get(0, 0) * inv, m.get(1, 0) * inv];
    let c0 = normalize(c0);
    let (c0_fixed, p0) = phase_fix_with(c0);
    // Second column orthogonal to the first, phase chosen to match M.
    let orth = [-c0_fixed[1].conj(), c0_fixed[0].conj()];
    let c1 = [m.get(0, 1) * inv, m.get(1, 1) * inv];
    let proj = orth[0].conj() * c1[0] + orth[1].conj() * c1[1];
    let p1 = if proj.norm() > 0.0 {
        proj / proj.norm()
    } else {
        ONE
    };
    let (c1_fixed, p1_extra) = phase_fix_with([orth[0], orth[1]]);
    let p1 = p1 * p1_extra;

    Svd2x2 {
        left: ComplexMatrix::mat2(c0_fixed[0], c1_fixed[0], c0_fixed[1], c1_fixed[1])
            .assume(Unitarity::Unitary),
        singulars: [sigma, sigma],
        right_dagger: ComplexMatrix::diag(&[p0, p1]).assume(Unitarity::Unitary),
        degenerate: true,
    }
}

fn normalize(v: [C64; 2]) -> [C64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if n == 0.0 {
        [ONE, ZERO]
    } else {
        [v[0] / n, v[1] / n]
    }
}

fn phase_fix(v: [C64; 2]) -> [C64; 2] {
    phase_fix_with(v).0
}

/// Rotates `v` so its first nonzero entry is real-positive. Returns the
/// rotated vector and the removed phase `p` with `v = p · fixed`.
fn phase_fix_with(v: [C64; 2]) -> ([C64; 2], C64) {
    let pivot = if v[0].norm() > PHASE_EPS { v[0] } else { v[1] };
    if pivot.norm() == 0.0 {
        return (v, ONE);
    }
    let p = pivot / pivot.norm();
    ([v[0] * p.conj(), v[1] * p.conj()], p)
}
