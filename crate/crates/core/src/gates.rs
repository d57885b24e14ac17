//! Gate library.
//!
//! Phase conventions follow the teleportation circuits rather than OpenQASM:
//! [`GateKind::Rz`] is `e^{iξ/2} e^{−iξσz/2} = diag(1, e^{iξ})`, so `Rz(π/2)` is
//! exactly `S`. The `Qasm*` kinds carry OpenQASM 3 `stdgates.inc` semantics
//! and exist so that exported programs parse back into gates that re-emit
//! to the same text.
//!
//! The nonunitary gate `N(d) = diag(1, d)` is realized with one ancilla: a
//! controlled `U(d)` followed by post-selecting the ancilla on `|0⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::fmt;

use crate::error::{Error, Result};
use crate::qmath::{
    cos_exact, expi, tensor, zyz::ry, zyz::rz_half, ComplexMatrix, ComplexVector, Svd2x2,
    Tolerances, Unitarity, I, ONE, ZERO,
};

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    S,
    X,
    Y,
    Z,
    /// `e^{−iζσy/2}`.
    Ry(f64),
    /// `diag(1, e^{iξ})`.
    Rz(f64),
    Cnot,
    /// Controlled [`GateKind::Rz`].
    ControlledRz(f64),
    ControlledU(ComplexMatrix),
    /// `diag(1, d)` with `0 ≤ d ≤ 1`.
    N(f64),
    Custom(ComplexMatrix),
    /// OpenQASM `rz`: `diag(e^{−iλ/2}, e^{iλ/2})`.
    QasmRz(f64),
    /// OpenQASM `crz`.
    QasmCrz(f64),
    /// OpenQASM `cu(θ, φ, λ, γ)`: controlled `e^{iγ} U(θ, φ, λ)`.
    QasmCu {
        theta: f64,
        phi: f64,
        lambda: f64,
        gamma: f64,
    },
    /// `e^{iα}` on the whole register.
    GlobalPhase(f64),
}

impl GateKind {
    /// `(controls, targets)` this kind takes.
    pub fn arity(&self) -> (usize, usize) {
        use GateKind::*;
        match self {
            GlobalPhase(_) => (0, 0),
            Cnot | ControlledRz(_) | ControlledU(_) | QasmCrz(_) | QasmCu { .. } => (1, 1),
            Custom(m) => (0, m.rows().trailing_zeros() as usize),
            _ => (0, 1),
        }
    }

    pub fn name(&self) -> String {
        use GateKind::*;
        match self {
            H => "H".into(),
            S => "S".into(),
            X => "X".into(),
            Y => "Y".into(),
            Z => "Z".into(),
            Ry(a) => format!("Ry({a})"),
            Rz(a) => format!("Rz({a})"),
            Cnot => "CNOT".into(),
            ControlledRz(a) => format!("C-Rz({a})"),
            ControlledU(_) => "C-U".into(),
            N(d) => format!("N({d})"),
            Custom(m) => format!("Custom({}x{})", m.rows(), m.cols()),
            QasmRz(a) => format!("rz({a})"),
            QasmCrz(a) => format!("crz({a})"),
            QasmCu { .. } => "cu".into(),
            GlobalPhase(a) => format!("gphase({a})"),
        }
    }

    /// Matrix acting on the target qubits when every control is `|1⟩`.
    /// For [`GateKind::GlobalPhase`] this is the 1×1 matrix `[e^{iα}]`.
    pub fn target_matrix(&self) -> ComplexMatrix {
        use GateKind::*;
        let h = FRAC_1_SQRT_2;
        match self {
            H => ComplexMatrix::real2(h, h, h, -h).assume(Unitarity::Unitary),
            S => ComplexMatrix::diag(&[ONE, I]).assume(Unitarity::Unitary),
            X | Cnot => ComplexMatrix::real2(0.0, 1.0, 1.0, 0.0).assume(Unitarity::Unitary),
            Y => ComplexMatrix::mat2(ZERO, -I, I, ZERO).assume(Unitarity::Unitary),
            Z => ComplexMatrix::real2(1.0, 0.0, 0.0, -1.0).assume(Unitarity::Unitary),
            Ry(a) => ry(*a),
            Rz(a) | ControlledRz(a) => rz(*a),
            ControlledU(m) | Custom(m) => m.clone(),
            N(d) => n_gate(*d),
            QasmRz(a) | QasmCrz(a) => rz_half(*a),
            QasmCu {
                theta,
                phi,
                lambda,
                gamma,
            } => qasm_u(*theta, *phi, *lambda).scaled(expi(*gamma)),
            GlobalPhase(a) => ComplexMatrix::diag(&[expi(*a)]).assume(Unitarity::Unitary),
        }
    }
}

/// `e^{iξ/2} e^{−iξσz/2} = diag(1, e^{iξ})`.
pub fn rz(xi: f64) -> ComplexMatrix {
    ComplexMatrix::diag(&[ONE, expi(xi)]).assume(Unitarity::Unitary)
}

fn n_gate(d: f64) -> ComplexMatrix {
    let flag = if d == 1.0 {
        Unitarity::Unitary
    } else {
        Unitarity::Nonunitary
    };
    ComplexMatrix::real2(1.0, 0.0, 0.0, d).assume(flag)
}

/// OpenQASM 3 `U(θ, φ, λ)`.
pub fn qasm_u(theta: f64, phi: f64, lambda: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::mat2(
        c.into(),
        -expi(lambda) * s,
        expi(phi) * s,
        expi(phi + lambda) * c,
    )
    .assume(Unitarity::Unitary)
}

/// A gate kind placed on concrete qubits.
///
/// Qubit 0 is the most significant bit of the amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl GateSpec {
    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<usize>) -> Result<Self> {
        let (nc, nt) = kind.arity();
        if controls.len() != nc || targets.len() != nt {
            return Err(Error::MalformedGate(format!(
                "{} takes {nc} control(s) and {nt} target(s), got {} and {}",
                kind.name(),
                controls.len(),
                targets.len()
            )));
        }
        let mut all: Vec<usize> = controls.iter().chain(&targets).copied().collect();
        all.sort_unstable();
        all.dedup();
        if all.len() != nc + nt {
            return Err(Error::MalformedGate(format!(
                "{}: control and target qubits must be distinct",
                kind.name()
            )));
        }
        match &kind {
            GateKind::N(d) if !(0.0..=1.0).contains(d) => {
                return Err(Error::Domain {
                    name: "d",
                    value: *d,
                    domain: "[0, 1]",
                })
            }
            GateKind::ControlledU(m) if m.rows() != 2 || m.cols() != 2 => {
                return Err(Error::MalformedGate("controlled U must be 2x2".into()))
            }
            GateKind::Custom(m)
                if !m.is_square() || !m.rows().is_power_of_two() || m.rows() < 2 =>
            {
                return Err(Error::MalformedGate(
                    "custom gate must be square with a power-of-two dimension".into(),
                ))
            }
            _ => {}
        }
        Ok(GateSpec {
            kind,
            targets,
            controls,
        })
    }

    /// Single-target gate without controls. Panics on a malformed kind.
    pub fn single(kind: GateKind, target: usize) -> Self {
        Self::new(kind, vec![target], vec![]).expect("single-qubit gate")
    }

    /// One control, one target. Panics on a malformed kind.
    pub fn controlled(kind: GateKind, control: usize, target: usize) -> Self {
        Self::new(kind, vec![target], vec![control]).expect("controlled gate")
    }

    pub fn global_phase(alpha: f64) -> Self {
        Self::new(GateKind::GlobalPhase(alpha), vec![], vec![]).expect("global phase")
    }

    /// Qubits touched, controls first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls.iter().chain(&self.targets).copied()
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        let qs: Vec<String> = self.qubits().map(|q| format!("q{q}")).collect();
        if !qs.is_empty() {
            write!(f, " {}", qs.join(","))?;
        }
        Ok(())
    }
}

/// Dense matrix of a gate on its own qubits, ordered controls first.
pub fn matrix_of(g: &GateSpec) -> ComplexMatrix {
    let base = g.kind.target_matrix();
    if g.controls.is_empty() {
        return base;
    }
    let inner = base.rows();
    let dim = inner << g.controls.len();
    let offset = dim - inner;
    let mut m = ComplexMatrix::identity(dim);
    for r in 0..inner {
        for c in 0..inner {
            m.set(offset + r, offset + c, base.get(r, c));
        }
    }
    let flag = base.unitarity();
    m.assume(if flag == Unitarity::Unitary {
        Unitarity::Unitary
    } else {
        Unitarity::Unchecked
    })
}

/// `d_θ = d₋/d₊ = √(4 − 3cos²θ) / (2 + √3 cos θ)` for `θ ∈ [0, π/2]`.
pub fn d_theta(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let c = cos_exact(theta);
    Ok((4.0 - 3.0 * c * c).sqrt() / (2.0 + 3f64.sqrt() * c))
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            domain: "[0, π/2]",
        });
    }
    Ok(())
}

/// `U(d) = [[d, √(1−d²)], [√(1−d²), −d]]`.
pub fn u_of_d(d: f64) -> Result<ComplexMatrix> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain {
            name: "d",
            value: d,
            domain: "[0, 1]",
        });
    }
    let s = (1.0 - d * d).sqrt();
    Ok(ComplexMatrix::real2(d, s, s, -d).assume(Unitarity::Unitary))
}

/// Ancilla circuit for `U · N(d) · V†`, where `U` and `V†` come from an SVD.
///
/// Qubit 0 is the system and qubit 1 the ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct NonunitaryRealization {
    pub d: f64,
    pub pre_rotation: GateSpec,
    pub controlled_step: GateSpec,
    pub post_projection: GateSpec,
    pub post_rotation: GateSpec,
}

/// Builds the ancilla realization for the SVD of a correction matrix at `theta`.
///
/// At `d = 1` (θ = π/2) the controlled step is a controlled identity; any
/// `U` with `⟨0|U|0⟩ = 1` would do and the identity needs no gates.
pub fn realize_nonunitary(svd: &Svd2x2, theta: f64) -> Result<NonunitaryRealization> {
    let d = d_theta(theta)?;
    let controlled = if 1.0 - d <= Tolerances::DEFAULT.unitarity {
        ComplexMatrix::identity(2)
    } else {
        u_of_d(d)?
    };
    Ok(NonunitaryRealization {
        d,
        pre_rotation: GateSpec::single(GateKind::Custom(svd.right_dagger.clone()), 0),
        controlled_step: GateSpec::controlled(GateKind::ControlledU(controlled), 0, 1),
        post_projection: GateSpec::single(GateKind::N(0.0), 1),
        post_rotation: GateSpec::single(GateKind::Custom(svd.left.clone()), 0),
    })
}

impl NonunitaryRealization {
    /// The same gates with the system on `system` and the ancilla on `ancilla`.
    pub fn placed(&self, system: usize, ancilla: usize) -> [GateSpec; 4] {
        let mv = |g: &GateSpec| {
            let map = |q: usize| if q == 0 { system } else { ancilla };
            GateSpec {
                kind: g.kind.clone(),
                targets: g.targets.iter().map(|&q| map(q)).collect(),
                controls: g.controls.iter().map(|&q| map(q)).collect(),
            }
        };
        [
            mv(&self.pre_rotation),
            mv(&self.controlled_step),
            mv(&self.post_rotation),
            mv(&self.post_projection),
        ]
    }

    /// Full 4×4 operator on `system ⊗ ancilla`, projection included.
    pub fn composite(&self) -> ComplexMatrix {
        let id = ComplexMatrix::identity(2);
        let pre = tensor(&matrix_of(&self.pre_rotation), &id);
        let ctrl = matrix_of(&self.controlled_step);
        let post = tensor(&matrix_of(&self.post_rotation), &id);
        let proj = tensor(&id, &matrix_of(&self.post_projection));
        &(&(&proj * &post) * &ctrl) * &pre
    }

    /// The 2×2 block of [`Self::composite`] that maps `|·⟩|0⟩` to `|·⟩|0⟩`.
    pub fn kept_block(&self) -> ComplexMatrix {
        let full = self.composite();
        let mut block = ComplexMatrix::zeros(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                block.set(r, c, full.get(2 * r, 2 * c));
            }
        }
        block
    }

    /// Output of the composite on `system ⊗ |0⟩`, ancilla-`|0⟩` component only.
    pub fn apply_kept(&self, system: &ComplexVector) -> Result<ComplexVector> {
        self.kept_block().matvec(system)
    }
}

/// Squared norm of the kept block applied to a normalized `a|0⟩ + b|1⟩`:
/// the probability that post-selection succeeds.
pub fn keep_probability(
    realization: &NonunitaryRealization,
    system: &ComplexVector,
) -> Result<f64> {
    Ok(realization.apply_kept(system)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{svd_2x2, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn n_endpoints() {
        let n1 = matrix_of(&GateSpec::single(GateKind::N(1.0), 0));
        assert_eq!(n1, ComplexMatrix::identity(2));
        let n0 = matrix_of(&GateSpec::single(GateKind::N(0.0), 0));
        assert_eq!(
            n0.entries(),
            ComplexMatrix::real2(1.0, 0.0, 0.0, 0.0).entries()
        );
        assert_eq!(n0.unitarity(), Unitarity::Nonunitary);
    }

    #[test]
    fn n_gates_dagger_product_is_diag() {
        for d in [0.0, 0.25, 0.5, 0.999] {
            let m = matrix_of(&GateSpec::single(GateKind::N(d), 0));
            let mm = &m.dagger() * &m;
            assert_eq!(
                mm.entries(),
                ComplexMatrix::real2(1.0, 0.0, 0.0, d * d).entries()
            );
            assert!(!m.is_unitary(1e-12));
        }
    }

    #[test]
    fn unitary_kinds_are_unitary() {
        let kinds = [
            GateKind::H,
            GateKind::S,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::Ry(0.37),
            GateKind::Rz(1.1),
            GateKind::QasmRz(-2.0),
        ];
        for k in kinds {
            let m = matrix_of(&GateSpec::single(k.clone(), 0));
            assert!(m.is_unitary(1e-12), "{}", k.name());
        }
        for k in [
            GateKind::Cnot,
            GateKind::ControlledRz(0.4),
            GateKind::QasmCrz(0.4),
        ] {
            let m = matrix_of(&GateSpec::controlled(k.clone(), 0, 1));
            assert_eq!(m.rows(), 4);
            assert!(m.is_unitary(1e-12), "{}", k.name());
        }
    }

    #[test]
    fn rz_half_pi_is_s() {
        let s = matrix_of(&GateSpec::single(GateKind::S, 0));
        let rz = matrix_of(&GateSpec::single(GateKind::Rz(FRAC_PI_2), 0));
        assert!(s.max_abs_diff(&rz) < 1e-16);
        assert_eq!(s.get(1, 1), I);
    }

    #[test]
    fn d_theta_values() {
        assert_eq!(d_theta(FRAC_PI_2).unwrap(), 1.0);
        assert!((d_theta(0.0).unwrap() - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        // θ = π/3 by hand: √(13/4) / (2 + √3/2).
        let expected = (13f64).sqrt() / 2.0 / (2.0 + 3f64.sqrt() / 2.0);
        assert!((d_theta(std::f64::consts::FRAC_PI_3).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.629015).abs() < 1e-6);
        assert!(d_theta(-0.1).is_err());
        assert!(d_theta(1.6).is_err());
    }

    #[test]
    fn d_theta_forms_agree() {
        let s3 = 3f64.sqrt();
        for k in 0..=100 {
            let theta = FRAC_PI_2 * k as f64 / 100.0;
            let c = theta.cos();
            let ratio = (4.0 - 2.0 * s3 * c).sqrt() / (4.0 + 2.0 * s3 * c).sqrt();
            assert!((d_theta(theta).unwrap() - ratio).abs() <= 1e-14);
        }
    }

    #[test]
    fn u_of_d_cases() {
        let z = u_of_d(1.0).unwrap();
        assert_eq!(
            z.entries(),
            ComplexMatrix::real2(1.0, 0.0, 0.0, -1.0).entries()
        );
        let x = u_of_d(0.0).unwrap();
        assert_eq!(
            x.entries(),
            ComplexMatrix::real2(0.0, 1.0, 1.0, 0.0).entries()
        );
        let u = u_of_d(2.0 - 3f64.sqrt()).unwrap();
        assert!((&u * &u).max_abs_diff(&ComplexMatrix::identity(2)) <= 1e-14);
        assert!(u.max_abs_diff(&u.dagger()) == 0.0);
        assert!(u.unitarity_deviation() <= 1e-14);
        assert!(u_of_d(1.5).is_err());
    }

    #[test]
    fn controlled_u_at_half_pi_is_identity() {
        let svd = svd_2x2(&ComplexMatrix::identity(2)).unwrap();
        let r = realize_nonunitary(&svd, FRAC_PI_2).unwrap();
        match &r.controlled_step.kind {
            GateKind::ControlledU(m) => assert_eq!(m, &ComplexMatrix::identity(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ancilla_identity_random_triples() {
        // [I ⊗ N(0)] C_U(d) (a|0⟩ + b|1⟩)|0⟩ = N(d)(a|0⟩ + b|1⟩), as 4-vectors.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let b = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let d: f64 = rng.random_range(0.0..=1.0);
            let input = ComplexVector::new(vec![a, b]).normalized();
            let joint = input.tensor(&ComplexVector::basis(2, 0));
            let cu = matrix_of(&GateSpec::controlled(
                GateKind::ControlledU(u_of_d(d).unwrap()),
                0,
                1,
            ));
            let proj = tensor(&ComplexMatrix::identity(2), &n_gate(0.0));
            let out = &(&proj * &cu) * &joint;
            let expected = (&n_gate(d) * &input).tensor(&ComplexVector::basis(2, 0));
            assert!(out.max_abs_diff(&expected) <= 1e-12);
            let p = input.amplitudes()[0].norm_sqr() + d * d * input.amplitudes()[1].norm_sqr();
            assert!((out.norm_sqr() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn ground_state_passes_undamped() {
        let svd = svd_2x2(&ComplexMatrix::identity(2)).unwrap();
        let mut r = realize_nonunitary(&svd, 1.0).unwrap();
        r.controlled_step = GateSpec::controlled(GateKind::ControlledU(u_of_d(0.5).unwrap()), 0, 1);
        let out = r.apply_kept(&ComplexVector::basis(2, 0)).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-15);
        assert!((out.fidelity(&ComplexVector::basis(2, 0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kept_block_is_u_n_vdag() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..50 {
            let theta = rng.random_range(0.0..FRAC_PI_2);
            let m = crate::qmath::testutil::random_matrix(&mut rng, 2);
            let svd = svd_2x2(&m).unwrap();
            let r = realize_nonunitary(&svd, theta).unwrap();
            let expected = &(&svd.left * &n_gate(r.d)) * &svd.right_dagger;
            assert!(r.kept_block().max_abs_diff(&expected) <= 1e-12);
        }
    }

    #[test]
    fn malformed_specs_are_rejected() {
        assert!(GateSpec::new(GateKind::Cnot, vec![0], vec![0]).is_err());
        assert!(GateSpec::new(GateKind::H, vec![0, 1], vec![]).is_err());
        assert!(GateSpec::new(GateKind::N(1.5), vec![0], vec![]).is_err());
        assert!(GateSpec::new(
            GateKind::Custom(ComplexMatrix::zeros(3, 3)),
            vec![0],
            vec![]
        )
        .is_err());
    }
}
