//! The elegant joint measurement (EJM).
//!
//! A one-parameter family of two-qubit orthonormal bases, `θ ∈ [0, π/2]`,
//! with
//!
//! ```text
//! |e00⟩ = ½ (e^{−iπ/4},  r₋,  r₊, e^{−3iπ/4})†
//! |e01⟩ = ½ (e^{3iπ/4},  r₋,  r₊, e^{iπ/4})†
//! |e10⟩ = ½ (e^{iπ/4},  −r₊, −r₋, e^{3iπ/4})†
//! |e11⟩ = ½ (e^{−3iπ/4}, −r₊, −r₋, e^{−iπ/4})†
//! r± = (1 ± e^{−iθ}) / √2
//! ```
//!
//! The dagger conjugates each row; amplitudes are ordered
//! `|00⟩, |01⟩, |10⟩, |11⟩` with the first qubit most significant. All four
//! states are equally entangled, and their one-qubit marginals sit on a
//! regular tetrahedron of radius `(√3/2) cos θ` on either side. At `θ = π/2`
//! the basis is a Bell basis up to local unitaries.
//!
//! [`ejm_circuit`] maps `|e_i⟩` to the computational state `|i⟩` (up to the
//! phase `(−1)^{m₁⊕m₂} i`), so measuring after it realizes the EJM.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gates::{check_theta, GateKind, GateSpec};
use crate::qmath::{
    bloch_vector, exp_minus_i, expi, reduced_density, ComplexVector, Tolerances, C64, ONE,
};

/// EJM outcome `i = m₁m₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    E00,
    E01,
    E10,
    E11,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::E00, Label::E01, Label::E10, Label::E11];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Self::ALL.get(index).copied()
    }

    /// `(m₁, m₂)`.
    pub fn bits(self) -> (u8, u8) {
        let i = self.index() as u8;
        (i >> 1, i & 1)
    }

    pub fn from_bits(m1: u8, m2: u8) -> Option<Label> {
        if m1 > 1 || m2 > 1 {
            return None;
        }
        Self::from_index(((m1 << 1) | m2) as usize)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.bits();
        write!(f, "{a}{b}")
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "00" => Ok(Label::E00),
            "01" => Ok(Label::E01),
            "10" => Ok(Label::E10),
            "11" => Ok(Label::E11),
            other => Err(Error::InvalidLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EjmBasis {
    pub theta: f64,
    pub states: [ComplexVector; 4],
    pub r_plus: C64,
    pub r_minus: C64,
}

impl EjmBasis {
    pub fn state(&self, label: Label) -> &ComplexVector {
        &self.states[label.index()]
    }

    /// Largest deviation of the Gram matrix from `I₄`.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, a) in self.states.iter().enumerate() {
            for (k, b) in self.states.iter().enumerate() {
                let expected = if j == k { ONE } else { C64::new(0.0, 0.0) };
                let ip = a.inner(b).expect("dimension 4");
                worst = worst.max((ip - expected).norm());
            }
        }
        worst
    }

    /// Largest deviation of `Σ_i |e_i⟩⟨e_i|` from `I₄`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                let s: C64 = self
                    .states
                    .iter()
                    .map(|e| e.amplitudes()[r] * e.amplitudes()[c].conj())
                    .sum();
                let expected = if r == c { ONE } else { C64::new(0.0, 0.0) };
                worst = worst.max((s - expected).norm());
            }
        }
        worst
    }

    /// Born probabilities `|⟨e_i|φ⟩|²` in label order.
    pub fn outcome_distribution(&self, phi: &ComplexVector) -> Result<[f64; 4]> {
        let mut p = [0.0; 4];
        for (k, e) in self.states.iter().enumerate() {
            p[k] = e.inner(phi)?.norm_sqr();
        }
        Ok(p)
    }
}

/// Builds the four basis states at `theta ∈ [0, π/2]`.
pub fn build_basis(theta: f64) -> Result<EjmBasis> {
    check_theta(theta)?;
    let s = FRAC_1_SQRT_2;
    let e = exp_minus_i(theta);
    let r_plus = (ONE + e) * s;
    let r_minus = (ONE - e) * s;
    let q = FRAC_PI_4;
    let rows: [[C64; 4]; 4] = [
        [expi(-q), r_minus, r_plus, expi(-3.0 * q)],
        [expi(3.0 * q), r_minus, r_plus, expi(q)],
        [expi(q), -r_plus, -r_minus, expi(3.0 * q)],
        [expi(-3.0 * q), -r_plus, -r_minus, expi(-q)],
    ];
    let states = rows.map(|row| ComplexVector::new(row.iter().map(|a| a.conj() * 0.5).collect()));
    Ok(EjmBasis {
        theta,
        states,
        r_plus,
        r_minus,
    })
}

/// Which qubit is traced out before reading off Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOut {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TetrahedronReport {
    pub side: TraceOut,
    pub bloch_vectors: [[f64; 3]; 4],
    pub lengths: [f64; 4],
    pub common_radius: f64,
    /// Cosines of the angles between pairs `(0,1), (0,2), (0,3), (1,2), (1,3), (2,3)`.
    /// `None` when the vectors vanish (θ = π/2) and the angles are undefined.
    pub pairwise_cosines: Option<[f64; 6]>,
}

impl TetrahedronReport {
    pub fn is_degenerate(&self) -> bool {
        self.pairwise_cosines.is_none()
    }
}

/// Bloch vectors of the four one-qubit marginals of an EJM basis.
pub fn reduced_tetrahedron(basis: &EjmBasis, side: TraceOut) -> TetrahedronReport {
    let trace_out = match side {
        TraceOut::First => 0,
        TraceOut::Second => 1,
    };
    let bloch_vectors = basis
        .states
        .clone()
        .map(|e| bloch_vector(&reduced_density(&e, trace_out).expect("two-qubit state")));
    let lengths = bloch_vectors.map(|b| (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt());
    let common_radius = lengths.iter().sum::<f64>() / 4.0;

    // Below this the directions are numerical noise.
    let pairwise_cosines = (common_radius > 1e-9).then(|| {
        let mut out = [0.0; 6];
        let mut k = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                let dot: f64 = (0..3)
                    .map(|a| bloch_vectors[i][a] * bloch_vectors[j][a])
                    .sum();
                out[k] = dot / (lengths[i] * lengths[j]);
                k += 1;
            }
        }
        out
    });

    TetrahedronReport {
        side,
        bloch_vectors,
        lengths,
        common_radius,
        pairwise_cosines,
    }
}

/// Pure-state concurrence `|⟨ψ*| σy⊗σy |ψ⟩| = 2|ψ₀₀ψ₁₁ − ψ₀₁ψ₁₀|`.
pub fn concurrence(state: &ComplexVector) -> Result<f64> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: "4".into(),
            found: state.dim().to_string(),
        });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > Tolerances::DEFAULT.equality {
        return Err(Error::NotNormalized { norm });
    }
    let a = state.amplitudes();
    Ok((2.0 * (a[0] * a[3] - a[1] * a[2]).norm()).min(1.0))
}

/// Gates that rotate the EJM basis onto the computational basis, on qubits
/// 0 and 1: CNOT(0→1), H(0), C-Rz(π/2 − θ)(0→1), S on both, H on both.
pub fn ejm_circuit(theta: f64) -> Result<Vec<GateSpec>> {
    check_theta(theta)?;
    Ok(vec![
        GateSpec::controlled(GateKind::Cnot, 0, 1),
        GateSpec::single(GateKind::H, 0),
        GateSpec::controlled(GateKind::ControlledRz(FRAC_PI_2 - theta), 0, 1),
        GateSpec::single(GateKind::S, 0),
        GateSpec::single(GateKind::S, 1),
        GateSpec::single(GateKind::H, 0),
        GateSpec::single(GateKind::H, 1),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::ComplexMatrix;

    fn grid(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |k| FRAC_PI_2 * k as f64 / (n - 1) as f64)
    }

    #[test]
    fn theta_zero_first_state() {
        // r₋ = 0 and r₊ = √2 at θ = 0; conjugating the first row gives
        // ½(e^{iπ/4}, 0, √2, e^{3iπ/4}).
        let b = build_basis(0.0).unwrap();
        let expected = ComplexVector::new(vec![
            expi(FRAC_PI_4) * 0.5,
            C64::new(0.0, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
            expi(3.0 * FRAC_PI_4) * 0.5,
        ]);
        assert!(b.state(Label::E00).max_abs_diff(&expected) < 1e-15);
        assert_eq!(b.r_minus, C64::new(0.0, 0.0));
    }

    #[test]
    fn orthonormal_and_complete_on_grid() {
        for theta in grid(50) {
            let b = build_basis(theta).unwrap();
            assert!(b.gram_deviation() <= 1e-12);
            assert!(b.completeness_deviation() <= 1e-12);
            for e in &b.states {
                assert!((e.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn r_plus_minus_definition() {
        let theta = 0.83;
        let b = build_basis(theta).unwrap();
        let e = expi(-theta);
        assert!((b.r_plus - (ONE + e) * FRAC_1_SQRT_2).norm() < 1e-15);
        assert!((b.r_minus - (ONE - e) * FRAC_1_SQRT_2).norm() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_theta() {
        assert!(build_basis(-0.01).is_err());
        assert!(build_basis(FRAC_PI_2 + 1e-9).is_err());
        assert!(ejm_circuit(2.0).is_err());
    }

    #[test]
    fn tetrahedron_radius_and_shape() {
        for theta in grid(50) {
            let b = build_basis(theta).unwrap();
            for side in [TraceOut::First, TraceOut::Second] {
                let r = reduced_tetrahedron(&b, side);
                let expected = 3f64.sqrt() / 2.0 * theta.cos();
                for l in r.lengths {
                    assert!((l - r.common_radius).abs() <= 1e-10);
                }
                assert!((r.common_radius - expected).abs() <= 1e-10);
                if theta < FRAC_PI_2 {
                    for c in r.pairwise_cosines.unwrap() {
                        assert!((c + 1.0 / 3.0).abs() <= 1e-8, "θ={theta} cos={c}");
                    }
                } else {
                    assert!(r.is_degenerate());
                }
            }
        }
    }

    #[test]
    fn tetrahedron_endpoints() {
        let r0 = reduced_tetrahedron(&build_basis(0.0).unwrap(), TraceOut::First);
        assert!((r0.common_radius - 3f64.sqrt() / 2.0).abs() <= 1e-12);
        let r1 = reduced_tetrahedron(&build_basis(FRAC_PI_2).unwrap(), TraceOut::Second);
        assert!(r1.common_radius.abs() <= 1e-12);
        let r3 = reduced_tetrahedron(
            &build_basis(std::f64::consts::FRAC_PI_3).unwrap(),
            TraceOut::First,
        );
        assert!((r3.common_radius - 3f64.sqrt() / 4.0).abs() <= 1e-12);
    }

    #[test]
    fn concurrence_reference_states() {
        assert_eq!(concurrence(&ComplexVector::basis(4, 0)).unwrap(), 0.0);
        let s = FRAC_1_SQRT_2;
        let singlet = ComplexVector::new(vec![0.0.into(), s.into(), (-s).into(), 0.0.into()]);
        assert!((concurrence(&singlet).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            concurrence(&ComplexVector::new(vec![ONE; 4])),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn equal_entanglement_matches_radius() {
        for theta in grid(50) {
            let b = build_basis(theta).unwrap();
            let c: Vec<f64> = b.states.iter().map(|e| concurrence(e).unwrap()).collect();
            let max = c.iter().cloned().fold(f64::MIN, f64::max);
            let min = c.iter().cloned().fold(f64::MAX, f64::min);
            assert!(max - min <= 1e-10);
            // Pure two-qubit state: C = √(1 − r²) with r the marginal Bloch length.
            let r = reduced_tetrahedron(&b, TraceOut::First).common_radius;
            assert!((c[0] - (1.0 - r * r).sqrt()).abs() <= 1e-10);
        }
        let b0 = build_basis(0.0).unwrap();
        assert!((concurrence(&b0.states[0]).unwrap() - 0.5).abs() <= 1e-12);
        let b1 = build_basis(FRAC_PI_2).unwrap();
        for e in &b1.states {
            assert!((concurrence(e).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    fn circuit_unitary(theta: f64) -> ComplexMatrix {
        let mut u = ComplexMatrix::identity(4);
        for g in ejm_circuit(theta).unwrap() {
            let m = crate::sim::expand(&g, 2).unwrap();
            u = &m * &u;
        }
        u
    }

    #[test]
    fn circuit_maps_basis_to_computational_states() {
        for theta in [0.0, 0.3, 0.9, FRAC_PI_2] {
            let u = circuit_unitary(theta);
            let b = build_basis(theta).unwrap();
            for label in Label::ALL {
                let out = &u * b.state(label);
                let target = ComplexVector::basis(4, label.index());
                assert!((out.fidelity(&target).unwrap() - 1.0).abs() <= 1e-10);
                // Phase (−1)^{m₁⊕m₂} i.
                let (m1, m2) = label.bits();
                let phase = if m1 ^ m2 == 1 {
                    -crate::qmath::I
                } else {
                    crate::qmath::I
                };
                assert!((out.amplitudes()[label.index()] - phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn label_round_trips() {
        for l in Label::ALL {
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
            let (a, b) = l.bits();
            assert_eq!(Label::from_bits(a, b), Some(l));
        }
        assert!("2".parse::<Label>().is_err());
    }
}
