//! Dense complex linear algebra for registers of at most four qubits.
//!
//! Everything here is small: vectors of dimension ≤ 16 and square matrices of
//! the same size. Matrices are row-major and carry a [`Unitarity`] flag so that
//! gate code can tell a checked unitary from an arbitrary operator without
//! re-multiplying.
//!
//! The 2×2 singular value decomposition and the ZYZ Euler decomposition live
//! in the [`svd`] and [`zyz`] submodules.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub mod svd;
pub mod zyz;

pub use svd::{svd_2x2, Svd2x2};
pub use zyz::{zyz_decompose, ZyzAngles};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numeric tolerances shared by every check in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// State, matrix and probability equality.
    pub equality: f64,
    /// Deviation of `M†M` from the identity.
    pub unitarity: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        equality: 1e-10,
        unitarity: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// `e^{iφ}`.
pub fn expi(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

/// `cos θ` evaluated as `sin(π/2 − θ)`, which is exactly 0 at `θ = π/2` and
/// exactly 1 at `θ = 0`.
pub fn cos_exact(theta: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 - theta).sin()
}

/// `e^{−iθ}` with [`cos_exact`] for the real part.
pub fn exp_minus_i(theta: f64) -> C64 {
    C64::new(cos_exact(theta), -theta.sin())
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(phi: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = phi.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        assert!(
            !amplitudes.is_empty(),
            "vector must have at least one entry"
        );
        ComplexVector(amplitudes)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![ZERO; dim])
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Number of qubits, if the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &ComplexVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        ComplexVector(self.0.iter().map(|a| a * factor).collect())
    }

    /// Unit vector in the same direction. A zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(C64::new(1.0 / n, 0.0))
    }

    pub fn conj(&self) -> Self {
        ComplexVector(self.0.iter().map(|a| a.conj()).collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &ComplexVector) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        ComplexVector(out)
    }

    /// Phase-insensitive overlap `|⟨a|b⟩|² / (‖a‖²‖b‖²)`.
    pub fn fidelity(&self, other: &ComplexVector) -> Result<f64> {
        let overlap = self.inner(other)?.norm_sqr();
        let denom = self.norm_sqr() * other.norm_sqr();
        if denom == 0.0 {
            return Ok(0.0);
        }
        Ok(overlap / denom)
    }

    pub fn max_abs_diff(&self, other: &ComplexVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// The vector as a `dim × 1` matrix.
    pub fn to_column(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(self.dim(), 1, self.0.clone()).expect("shape matches")
    }
}

impl From<Vec<C64>> for ComplexVector {
    fn from(v: Vec<C64>) -> Self {
        ComplexVector::new(v)
    }
}

impl fmt::Display for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write_complex(f, *a)?;
        }
        write!(f, ")")
    }
}

fn write_complex(f: &mut fmt::Formatter<'_>, z: C64) -> fmt::Result {
    let prec = f.precision().unwrap_or(6);
    if z.im < 0.0 {
        write!(f, "{:.*}-{:.*}i", prec, z.re, prec, -z.im)
    } else {
        write!(f, "{:.*}+{:.*}i", prec, z.re, prec, z.im)
    }
}

/// What is known about `M†M = I` for a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unitarity {
    Unitary,
    Nonunitary,
    Unchecked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
    unitarity: Unitarity,
}

impl ComplexMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows}x{cols} = {} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        Ok(ComplexMatrix {
            rows,
            cols,
            data,
            unitarity: Unitarity::Unchecked,
        })
    }

    /// 2×2 matrix from its rows.
    pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> Self {
        ComplexMatrix {
            rows: 2,
            cols: 2,
            data: vec![a, b, c, d],
            unitarity: Unitarity::Unchecked,
        }
    }

    pub fn real2(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::mat2(a.into(), b.into(), c.into(), d.into())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec(rows, cols, vec![ZERO; rows * cols]).expect("nonzero shape")
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = ONE;
        }
        m.unitarity = Unitarity::Unitary;
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (k, e) in entries.iter().enumerate() {
            m.data[k * n + k] = *e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: C64) {
        self.data[r * self.cols + c] = value;
        self.unitarity = Unitarity::Unchecked;
    }

    pub fn unitarity(&self) -> Unitarity {
        self.unitarity
    }

    /// Overrides the flag. Only for constructors that know the answer
    /// analytically; everything else should use [`Self::checked`].
    pub(crate) fn assume(mut self, unitarity: Unitarity) -> Self {
        self.unitarity = unitarity;
        self
    }

    /// `max |(M†M − I)_{jk}|`, or infinity for a non-square matrix.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let mut s = ZERO;
                for r in 0..n {
                    s += self.get(r, j).conj() * self.get(r, k);
                }
                if j == k {
                    s -= ONE;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Sets the unitarity flag from an explicit `M†M` check.
    pub fn checked(mut self, tol: f64) -> Self {
        self.unitarity = if self.is_unitary(tol) {
            Unitarity::Unitary
        } else {
            Unitarity::Nonunitary
        };
        self
    }

    pub fn dagger(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c).conj());
            }
        }
        ComplexMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
            unitarity: self.unitarity,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        ComplexMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
            unitarity: self.unitarity,
        }
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                found: format!("{} rows", other.rows),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        out.unitarity = match (self.unitarity, other.unitarity) {
            (Unitarity::Unitary, Unitarity::Unitary) => Unitarity::Unitary,
            _ => Unitarity::Unchecked,
        };
        Ok(out)
    }

    pub fn matvec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.cols, v.dim())?;
        let amps = v.amplitudes();
        let out = (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(amps)
                    .map(|(m, a)| m * a)
                    .sum()
            })
            .collect();
        Ok(ComplexVector(out))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let unitary = factor.norm() == 1.0 && self.unitarity == Unitarity::Unitary;
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
            unitarity: if unitary {
                Unitarity::Unitary
            } else {
                Unitarity::Unchecked
            },
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self.get(k, k)).sum()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn column(&self, c: usize) -> ComplexVector {
        ComplexVector((0..self.rows).map(|r| self.get(r, c)).collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &ComplexMatrix) -> Self {
        tensor(self, other)
    }
}

/// Kronecker product with row-major block layout.
///
/// The result is flagged unitary iff both factors are; if either factor is
/// unchecked the result is unchecked.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut data = vec![ZERO; rows * cols];
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a.get(ar, ac);
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    data[(ar * b.rows + br) * cols + ac * b.cols + bc] = x * b.get(br, bc);
                }
            }
        }
    }
    let unitarity = match (a.unitarity, b.unitarity) {
        (Unitarity::Unitary, Unitarity::Unitary) => Unitarity::Unitary,
        (Unitarity::Unchecked, _) | (_, Unitarity::Unchecked) => Unitarity::Unchecked,
        _ => Unitarity::Nonunitary,
    };
    ComplexMatrix {
        rows,
        cols,
        data,
        unitarity,
    }
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.dagger()
}

pub fn norm(v: &ComplexVector) -> f64 {
    v.norm()
}

pub fn matvec(m: &ComplexMatrix, v: &ComplexVector) -> Result<ComplexVector> {
    m.matvec(v)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on a shape mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix shapes must agree")
    }
}

impl Mul<&ComplexVector> for &ComplexMatrix {
    type Output = ComplexVector;

    fn mul(self, rhs: &ComplexVector) -> ComplexVector {
        self.matvec(rhs)
            .expect("matrix and vector shapes must agree")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix::from_vec(self.rows, self.cols, data).expect("same shape")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix::from_vec(self.rows, self.cols, data).expect("same shape")
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write_complex(f, self.get(r, c))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Reduced density matrix of one qubit of a two-qubit pure state.
///
/// `trace_out` is 0 to trace out the first (more significant) qubit and 1 to
/// trace out the second.
pub fn reduced_density(state: &ComplexVector, trace_out: usize) -> Result<ComplexMatrix> {
    check_dim(4, state.dim())?;
    if trace_out > 1 {
        return Err(Error::QubitOutOfRange {
            index: trace_out,
            n_qubits: 2,
        });
    }
    let psi = |first: usize, second: usize| state.amplitudes()[2 * first + second];
    let mut rho = ComplexMatrix::zeros(2, 2);
    for j in 0..2 {
        for k in 0..2 {
            let v: C64 = (0..2)
                .map(|t| {
                    if trace_out == 0 {
                        psi(t, j) * psi(t, k).conj()
                    } else {
                        psi(j, t) * psi(k, t).conj()
                    }
                })
                .sum();
            rho.set(j, k, v);
        }
    }
    Ok(rho)
}

/// Bloch vector `(Tr ρσx, Tr ρσy, Tr ρσz)` of a single-qubit density matrix.
pub fn bloch_vector(rho: &ComplexMatrix) -> [f64; 3] {
    let off = rho.get(0, 1);
    [
        2.0 * off.re,
        -2.0 * off.im,
        (rho.get(0, 0) - rho.get(1, 1)).re,
    ]
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::real2(h, h, h, -h)
    }

    #[test]
    fn identity_tensor_identity() {
        let i4 = tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert_eq!(i4, ComplexMatrix::identity(4));
        assert_eq!(i4.unitarity(), Unitarity::Unitary);
    }

    #[test]
    fn basis_vector_tensor() {
        let zero_one = ComplexVector::basis(2, 1).to_column();
        let one_zero = ComplexVector::basis(2, 0).to_column();
        let t = tensor(&zero_one, &one_zero);
        assert_eq!((t.rows(), t.cols()), (4, 1));
        assert_eq!(t.column(0), ComplexVector::basis(4, 2));
    }

    #[test]
    fn h_tensor_i_matches_explicit_product() {
        // (H ⊗ I)|ab⟩ by brute force over the 4×4 index structure.
        let h = hadamard();
        let hi = tensor(&h, &ComplexMatrix::identity(2));
        for r in 0..4 {
            for c in 0..4 {
                let expected = if r % 2 == c % 2 {
                    h.get(r / 2, c / 2)
                } else {
                    ZERO
                };
                assert!((hi.get(r, c) - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn tensor_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_matrix(&mut rng, 2);
            let b = random_matrix(&mut rng, 2);
            let c = random_matrix(&mut rng, 2);
            let left = tensor(&tensor(&a, &b), &c);
            let right = tensor(&a, &tensor(&b, &c));
            assert!(left.max_abs_diff(&right) <= 1e-14);
        }
    }

    #[test]
    fn tensor_flag_follows_operands() {
        let h = hadamard().checked(1e-12);
        let n = ComplexMatrix::real2(1.0, 0.0, 0.0, 0.5).checked(1e-12);
        assert_eq!(tensor(&h, &h).unitarity(), Unitarity::Unitary);
        assert_eq!(tensor(&h, &n).unitarity(), Unitarity::Nonunitary);
        assert_eq!(tensor(&h, &hadamard()).unitarity(), Unitarity::Unchecked);
    }

    #[test]
    fn dagger_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 4);
            assert_eq!(m.dagger().dagger(), m);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let m = ComplexMatrix::identity(2);
        let v = ComplexVector::zeros(4);
        assert!(matches!(m.matvec(&v), Err(Error::DimensionMismatch { .. })));
        assert!(m.matmul(&ComplexMatrix::identity(4)).is_err());
        assert!(ComplexMatrix::from_vec(2, 2, vec![ONE; 3]).is_err());
        assert!(v.inner(&ComplexVector::zeros(2)).is_err());
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let v = ComplexVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let w = v.scaled(expi(1.234));
        assert!((v.fidelity(&w).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduced_density_of_product_state() {
        // |0⟩ ⊗ |+⟩: tracing out qubit 1 leaves |+⟩⟨+|, Bloch (1, 0, 0).
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexVector::new(vec![h.into(), h.into()]);
        let state = ComplexVector::basis(2, 0).tensor(&plus);
        let b = bloch_vector(&reduced_density(&state, 0).unwrap());
        assert!((b[0] - 1.0).abs() < 1e-15 && b[1].abs() < 1e-15 && b[2].abs() < 1e-15);
        let b = bloch_vector(&reduced_density(&state, 1).unwrap());
        assert!((b[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn cos_exact_endpoints() {
        assert_eq!(cos_exact(std::f64::consts::FRAC_PI_2), 0.0);
        assert_eq!(cos_exact(0.0), 1.0);
    }
}
