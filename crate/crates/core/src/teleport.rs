//! Teleportation of one qubit through a singlet, with the EJM as the joint
//! measurement.
//!
//! Alice holds the input on qubit 1 and one half of `(|01⟩ − |10⟩)/√2` on
//! qubit 2; Bob holds qubit 3. After an EJM outcome `i` Bob's qubit is left in
//! an unnormalized branch state `|ψ_i⟩`, and the nonunitary correction `A_i`
//! maps it back to the input. `A_i` is realized probabilistically by the Kraus
//! pair `M₀ ∝ A_i`, `M₁ = √(I − M₀†M₀)`.
//!
//! Every closed form here is computed twice where possible (explicit formula
//! and a generic route) so the tests can tie them together.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

use rand::Rng;

use crate::ejm::{build_basis, Label};
use crate::error::{Error, Result};
use crate::gates::check_theta;
use crate::qmath::{
    cos_exact, exp_minus_i, expi, svd_2x2, ComplexMatrix, ComplexVector, Svd2x2, Tolerances,
    Unitarity, C64, I, ONE, ZERO,
};

fn sqrt3() -> f64 {
    3f64.sqrt()
}

/// `a± = √(6 ± 2√3)`.
pub fn a_plus() -> f64 {
    (6.0 + 2.0 * sqrt3()).sqrt()
}

pub fn a_minus() -> f64 {
    (6.0 - 2.0 * sqrt3()).sqrt()
}

/// `d±(θ) = √(4 ± 2√3 cos θ)`.
pub fn d_plus(theta: f64) -> f64 {
    (4.0 + 2.0 * sqrt3() * cos_exact(theta)).sqrt()
}

pub fn d_minus(theta: f64) -> f64 {
    (4.0 - 2.0 * sqrt3() * cos_exact(theta)).sqrt()
}

/// The scalar `√2 / (3 − e^{−2iθ})` in front of every `A_i`.
pub fn correction_prefactor(theta: f64) -> C64 {
    let e = exp_minus_i(theta);
    C64::from(SQRT_2) / (C64::from(3.0) - e * e)
}

/// The state `α|0⟩ + β|1⟩` to be teleported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputState {
    pub alpha: C64,
    pub beta: C64,
}

impl InputState {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if (norm * norm - 1.0).abs() > Tolerances::DEFAULT.unitarity {
            return Err(Error::NotNormalized { norm });
        }
        Ok(InputState { alpha, beta })
    }

    /// `cos(ζ/2)|0⟩ + e^{iξ} sin(ζ/2)|1⟩`, what `Rz(ξ)Ry(ζ)|0⟩` prepares.
    pub fn from_angles(zeta: f64, xi: f64) -> Self {
        let (s, c) = (zeta / 2.0).sin_cos();
        InputState {
            alpha: c.into(),
            beta: expi(xi) * s,
        }
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u: f64 = rng.random();
        let phase_a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let phase_b: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        InputState {
            alpha: expi(phase_a) * u.sqrt(),
            beta: expi(phase_b) * (1.0 - u).sqrt(),
        }
    }

    /// Preparation angles `(ζ, ξ)` with `ζ ∈ [0, π]`, `ξ ∈ [0, 2π)`; the
    /// prepared state equals this one up to a global phase.
    pub fn angles(&self) -> (f64, f64) {
        let zeta = 2.0 * self.beta.norm().atan2(self.alpha.norm());
        let xi = if self.alpha.norm() == 0.0 || self.beta.norm() == 0.0 {
            0.0
        } else {
            (self.beta.arg() - self.alpha.arg()).rem_euclid(std::f64::consts::TAU)
        };
        (zeta, xi)
    }

    pub fn vector(&self) -> ComplexVector {
        ComplexVector::new(vec![self.alpha, self.beta])
    }

    /// `(2 Re α*β, 2 Im α*β, |α|² − |β|²)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let ab = self.alpha.conj() * self.beta;
        [
            2.0 * ab.re,
            2.0 * ab.im,
            self.alpha.norm_sqr() - self.beta.norm_sqr(),
        ]
    }
}

/// `|ψ₀⟩₁ ⊗ (|01⟩ − |10⟩)₂₃/√2` over `|000⟩ … |111⟩`, qubit 1 most significant.
pub fn prepare_joint_state(input: &InputState) -> ComplexVector {
    let s = FRAC_1_SQRT_2;
    let singlet = ComplexVector::new(vec![ZERO, s.into(), (-s).into(), ZERO]);
    input.vector().tensor(&singlet)
}

/// Bob's qubit after EJM outcome `label`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutcome {
    pub label: Label,
    pub post_state_unnormalized: ComplexVector,
    /// `N_i = 1/‖ψ_i‖`.
    pub normalization: f64,
    /// `p_i = ‖ψ_i‖²/8 = 1/(8N_i²)`.
    pub probability: f64,
}

impl BranchOutcome {
    pub fn normalized_state(&self) -> ComplexVector {
        self.post_state_unnormalized
            .scaled(C64::from(self.normalization))
    }
}

/// Explicit branch states:
///
/// ```text
/// ψ00 = (−r₋α − e^{−3iπ/4}β)|0⟩ + (e^{−iπ/4}α + r₊β)|1⟩
/// ψ01 = (−r₋α − e^{iπ/4}β)|0⟩   + (e^{3iπ/4}α + r₊β)|1⟩
/// ψ10 = (r₊α − e^{3iπ/4}β)|0⟩   + (e^{iπ/4}α − r₋β)|1⟩
/// ψ11 = (r₊α − e^{−iπ/4}β)|0⟩   + (e^{−3iπ/4}α − r₋β)|1⟩
/// ```
pub fn branch(input: &InputState, theta: f64, label: Label) -> Result<BranchOutcome> {
    check_theta(theta)?;
    let e = exp_minus_i(theta);
    let rp = (ONE + e) * FRAC_1_SQRT_2;
    let rm = (ONE - e) * FRAC_1_SQRT_2;
    let q = FRAC_PI_4;
    let (a, b) = (input.alpha, input.beta);
    let (c0, c1) = match label {
        Label::E00 => (-rm * a - expi(-3.0 * q) * b, expi(-q) * a + rp * b),
        Label::E01 => (-rm * a - expi(q) * b, expi(3.0 * q) * a + rp * b),
        Label::E10 => (rp * a - expi(3.0 * q) * b, expi(q) * a - rm * b),
        Label::E11 => (rp * a - expi(-q) * b, expi(-3.0 * q) * a - rm * b),
    };
    Ok(outcome(label, ComplexVector::new(vec![c0, c1])))
}

fn outcome(label: Label, state: ComplexVector) -> BranchOutcome {
    let norm_sqr = state.norm_sqr();
    BranchOutcome {
        label,
        normalization: 1.0 / norm_sqr.sqrt(),
        probability: norm_sqr / 8.0,
        post_state_unnormalized: state,
    }
}

/// Branch state by contracting the joint state with `⟨e_i| ⊗ I`, scaled by
/// `2√2` so that it matches [`branch`].
pub fn branch_by_projection(input: &InputState, theta: f64, label: Label) -> Result<BranchOutcome> {
    let basis = build_basis(theta)?;
    let joint = prepare_joint_state(input);
    let e = basis.state(label);
    let amps = joint.amplitudes();
    let mut bob = [ZERO; 2];
    for (k, ek) in e.amplitudes().iter().enumerate() {
        for (b, slot) in bob.iter_mut().enumerate() {
            *slot += ek.conj() * amps[2 * k + b];
        }
    }
    let scale = 2.0 * SQRT_2;
    Ok(outcome(
        label,
        ComplexVector::new(vec![bob[0] * scale, bob[1] * scale]),
    ))
}

/// The explicit correction `A_i` with `A_i |ψ_i⟩ = |ψ₀⟩`.
pub fn correction_matrix(theta: f64, label: Label) -> Result<ComplexMatrix> {
    check_theta(theta)?;
    let e = exp_minus_i(theta);
    let one_i = C64::new(1.0, 1.0);
    let one_mi = C64::new(1.0, -1.0);
    let m = match label {
        Label::E00 => ComplexMatrix::mat2(-ONE - e, one_i, one_mi, ONE - e),
        Label::E01 => ComplexMatrix::mat2(-ONE - e, -one_i, -one_mi, ONE - e),
        Label::E10 => ComplexMatrix::mat2(ONE - e, one_mi, one_i, -ONE - e),
        Label::E11 => ComplexMatrix::mat2(ONE - e, -one_mi, -one_i, -ONE - e),
    };
    Ok(m.scaled(correction_prefactor(theta)))
}

/// SVD factors of `A_i` transcribed from their closed forms:
/// `A_i = prefactor · U_i · diag(d₊, d₋) · V_i†`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSvd {
    pub u: ComplexMatrix,
    pub d: [f64; 2],
    pub v_dagger: ComplexMatrix,
    pub prefactor: C64,
}

impl ClosedFormSvd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::diag(&[self.d[0].into(), self.d[1].into()]);
        (&(&self.u * &d) * &self.v_dagger).scaled(self.prefactor)
    }
}

pub fn closed_form_svd(theta: f64, label: Label) -> Result<ClosedFormSvd> {
    check_theta(theta)?;
    let s3 = C64::from(sqrt3());
    let s2 = C64::from(SQRT_2);
    let (ap, am) = (a_plus(), a_minus());
    let (dp, dm) = (d_plus(theta), d_minus(theta));
    let e = exp_minus_i(theta);
    let q = FRAC_PI_4;
    let two = C64::from(2.0);
    let one_p = ONE + e;
    let one_m = ONE - e;

    let (u, v_dagger) = match label {
        Label::E00 => {
            let ph = expi(-q);
            let vp = expi(-3.0 * q);
            (
                ComplexMatrix::mat2(
                    (-one_p * (s3 + 1.0) - two) / (ap * dp),
                    (one_p * (s3 - 1.0) - two) / (am * dm),
                    s2 * ph * (s3 + e) / (ap * dp),
                    -s2 * ph * (s3 - e) / (am * dm),
                ),
                ComplexMatrix::mat2(
                    (s3 + 1.0) / ap,
                    s2 * vp / ap,
                    -(s3 - 1.0) / am,
                    s2 * vp / am,
                ),
            )
        }
        Label::E01 => {
            let ph = expi(3.0 * q);
            let vp = expi(q);
            (
                ComplexMatrix::mat2(
                    (-one_p * (s3 + 1.0) - two) / (ap * dp),
                    (-one_p * (s3 - 1.0) + two) / (am * dm),
                    s2 * ph * (s3 + e) / (ap * dp),
                    s2 * ph * (s3 - e) / (am * dm),
                ),
                ComplexMatrix::mat2(
                    (s3 + 1.0) / ap,
                    s2 * vp / ap,
                    (s3 - 1.0) / am,
                    -s2 * vp / am,
                ),
            )
        }
        Label::E10 => {
            let ph = expi(q);
            let vp = expi(3.0 * q);
            (
                ComplexMatrix::mat2(
                    (-one_m * (s3 - 1.0) + two) / (am * dp),
                    (one_m * (s3 + 1.0) + two) / (ap * dm),
                    -s2 * ph * (s3 + e) / (am * dp),
                    s2 * ph * (s3 - e) / (ap * dm),
                ),
                ComplexMatrix::mat2(
                    -(s3 - 1.0) / am,
                    -s2 * vp / am,
                    (s3 + 1.0) / ap,
                    -s2 * vp / ap,
                ),
            )
        }
        Label::E11 => {
            let ph = expi(-3.0 * q);
            let vp = expi(-q);
            (
                ComplexMatrix::mat2(
                    (one_m * (s3 - 1.0) - two) / (am * dp),
                    (one_m * (s3 + 1.0) + two) / (ap * dm),
                    s2 * ph * (s3 + e) / (am * dp),
                    s2 * ph * (s3 - e) / (ap * dm),
                ),
                ComplexMatrix::mat2(
                    (s3 - 1.0) / am,
                    s2 * vp / am,
                    (s3 + 1.0) / ap,
                    -s2 * vp / ap,
                ),
            )
        }
    };
    Ok(ClosedFormSvd {
        u,
        d: [dp, dm],
        v_dagger,
        prefactor: correction_prefactor(theta),
    })
}

/// Everything Bob needs for outcome `label`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionPlan {
    pub label: Label,
    pub theta: f64,
    pub a: ComplexMatrix,
    pub svd: Svd2x2,
    /// `M₀ = A/σ₀`, top singular value exactly 1.
    pub kraus_keep: ComplexMatrix,
    /// `M₁ = √(I − M₀†M₀)`, principal root.
    pub kraus_fail: ComplexMatrix,
    /// `|c|² = 1/σ₀²`, which equals `2 − √3 cos θ`.
    pub c_magnitude_sq: f64,
}

impl CorrectionPlan {
    /// `M₀†M₀ + M₁†M₁`.
    pub fn completeness(&self) -> ComplexMatrix {
        let keep = &self.kraus_keep.dagger() * &self.kraus_keep;
        let fail = &self.kraus_fail.dagger() * &self.kraus_fail;
        &keep + &fail
    }

    /// `d_θ = σ₁/σ₀`.
    pub fn d(&self) -> f64 {
        self.svd.ratio()
    }
}

pub fn correction_plan(theta: f64, label: Label) -> Result<CorrectionPlan> {
    let a = correction_matrix(theta, label)?;
    let svd = svd_2x2(&a)?;
    let sigma0 = svd.singulars[0];
    let d = svd.ratio();
    let kraus_keep = a.scaled(C64::from(1.0 / sigma0));
    // M₀†M₀ = R diag(1, d²) R†, so √(I − M₀†M₀) = R diag(0, √(1 − d²)) R†.
    let right = svd.right();
    let root = ComplexMatrix::diag(&[ZERO, (1.0 - d * d).max(0.0).sqrt().into()]);
    let kraus_fail = &(&right * &root) * &svd.right_dagger;
    let flag = if svd.degenerate {
        Unitarity::Unitary
    } else {
        Unitarity::Nonunitary
    };
    Ok(CorrectionPlan {
        label,
        theta,
        kraus_keep: kraus_keep.assume(flag),
        kraus_fail,
        c_magnitude_sq: 1.0 / (sigma0 * sigma0),
        svd,
        a,
    })
}

/// `N_i²(2 − √3 cos θ)`: probability that the ancilla post-selection
/// succeeds for branch `label`.
pub fn success_probability(input: &InputState, theta: f64, label: Label) -> Result<f64> {
    let b = branch(input, theta, label)?;
    Ok(b.normalization * b.normalization * (2.0 - sqrt3() * cos_exact(theta)))
}

/// The expanded branch-10 form
/// `(2 − √3 cos θ) / (2 + cos θ(|α|² − |β|²) + 2 cos θ Re[(1 − i)α*β])`.
pub fn success_probability_branch10(input: &InputState, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let c = cos_exact(theta);
    let (a, b) = (input.alpha, input.beta);
    let cross = ((ONE - I) * a.conj() * b).re;
    let denom = 2.0 + c * (a.norm_sqr() - b.norm_sqr()) + 2.0 * c * cross;
    Ok((2.0 - sqrt3() * c) / denom)
}

/// Tetrahedron vertex `n_i` with `‖ψ_i‖² = 2 + cos θ (n_i · r)`.
pub fn branch_direction(label: Label) -> [f64; 3] {
    match label {
        Label::E00 => [1.0, -1.0, -1.0],
        Label::E01 => [-1.0, 1.0, -1.0],
        Label::E10 => [1.0, 1.0, 1.0],
        Label::E11 => [-1.0, -1.0, 1.0],
    }
}

/// `(2 − √3 cos θ) / (2 + cos θ (n_i · r))` with `r` the input's Bloch
/// vector; the branch-10 form generalized to every outcome.
pub fn success_probability_closed_form(
    input: &InputState,
    theta: f64,
    label: Label,
) -> Result<f64> {
    check_theta(theta)?;
    let c = cos_exact(theta);
    let r = input.bloch_vector();
    let n = branch_direction(label);
    let dot = n[0] * r[0] + n[1] * r[1] + n[2] * r[2];
    Ok((2.0 - sqrt3() * c) / (2.0 + c * dot))
}

/// Range `[min, max]` of the per-branch success probability over real
/// inputs (`ξ = 0`, `ζ ∈ [0, 2π]`): `(2 − √3 cos θ)/(2 ± √2 cos θ)`.
pub fn success_range(theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    let c = cos_exact(theta);
    let num = 2.0 - sqrt3() * c;
    Ok((num / (2.0 + SQRT_2 * c), num / (2.0 - SQRT_2 * c)))
}

/// Range over all inputs: `(2 − √3 cos θ)/(2 ± √3 cos θ)`. The denominator
/// of each branch is `2 + cos θ (n·r)` with `r` the input's Bloch vector and
/// `|n| = √3`, so the upper end is always 1.
pub fn success_range_all_inputs(theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    let c = cos_exact(theta);
    let num = 2.0 - sqrt3() * c;
    Ok((num / (2.0 + sqrt3() * c), num / (2.0 - sqrt3() * c)))
}

/// `Σ_i p_i · p(ψ_i) = 1 − (√3/2) cos θ`, independent of the input.
pub fn total_success_probability(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(1.0 - sqrt3() / 2.0 * cos_exact(theta))
}

/// `Σ_i p_i · success_probability(i)` evaluated branch by branch.
pub fn total_success_from_branches(input: &InputState, theta: f64) -> Result<f64> {
    Label::ALL.iter().try_fold(0.0, |acc, &l| {
        let b = branch(input, theta, l)?;
        Ok(acc + b.probability * success_probability(input, theta, l)?)
    })
}
