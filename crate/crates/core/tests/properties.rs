use std::f64::consts::{FRAC_PI_2, PI};

use ejm_teleport::circuit::{Circuit, Op};
use ejm_teleport::ejm::Label;
use ejm_teleport::gates::{GateKind, GateSpec};
use ejm_teleport::qmath::zyz::{zyz_decompose, ZyzAngles};
use ejm_teleport::qmath::{svd_2x2, tensor, ComplexMatrix, ComplexVector, C64};
use ejm_teleport::sim::{circuit_action, Register};
use ejm_teleport::teleport::{
    branch, success_probability, success_probability_closed_form, success_range_all_inputs,
    InputState,
};
use ejm_teleport::tooling::qasm::{emit_qasm, parse_qasm_subset};
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(c64(), n * n)
        .prop_map(move |data| ComplexMatrix::from_vec(n, n, data).unwrap())
}

fn angles() -> impl Strategy<Value = ZyzAngles> {
    (-PI..PI, -PI..PI, 0.0..PI, -PI..PI).prop_map(|(alpha, beta, gamma, delta)| ZyzAngles {
        alpha,
        beta,
        gamma,
        delta,
    })
}

fn input() -> impl Strategy<Value = InputState> {
    (0.0..=2.0 * PI, 0.0..2.0 * PI).prop_map(|(z, x)| InputState::from_angles(z, x))
}

fn label() -> impl Strategy<Value = Label> {
    (0usize..4).prop_map(|i| Label::from_index(i).unwrap())
}

fn theta() -> impl Strategy<Value = f64> {
    0.0..=FRAC_PI_2
}

fn gate(n: usize) -> impl Strategy<Value = Op> {
    let angle = -PI..PI;
    let q = 0..n;
    let pair = (0..n, 1..n).prop_map(move |(a, k)| (a, (a + k) % n));
    prop_oneof![
        (q.clone(), 0usize..5).prop_map(|(t, k)| {
            let kind = [
                GateKind::H,
                GateKind::S,
                GateKind::X,
                GateKind::Y,
                GateKind::Z,
            ][k]
                .clone();
            Op::Gate(GateSpec::single(kind, t))
        }),
        (q.clone(), angle.clone())
            .prop_map(|(t, a)| Op::Gate(GateSpec::single(GateKind::Ry(a), t))),
        (q.clone(), angle.clone())
            .prop_map(|(t, a)| Op::Gate(GateSpec::single(GateKind::Rz(a), t))),
        pair.clone()
            .prop_map(|(c, t)| Op::Gate(GateSpec::controlled(GateKind::Cnot, c, t))),
        (pair.clone(), angle.clone()).prop_map(|((c, t), a)| Op::Gate(GateSpec::controlled(
            GateKind::ControlledRz(a),
            c,
            t
        ))),
        (pair, angles()).prop_map(|((c, t), z)| {
            Op::Gate(GateSpec::controlled(
                GateKind::ControlledU(z.to_matrix()),
                c,
                t,
            ))
        }),
        (q.clone(), angles())
            .prop_map(|(t, z)| Op::Gate(GateSpec::single(GateKind::Custom(z.to_matrix()), t))),
        q.clone()
            .prop_map(|t| Op::Gate(GateSpec::single(GateKind::N(0.0), t))),
        q.prop_map(Op::PostSelect),
    ]
}

fn circuit() -> impl Strategy<Value = Circuit> {
    (2usize..=3)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(gate(n), 0..12)))
        .prop_map(|(n, ops)| Circuit::from_ops(n, ops).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 128,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn svd_reconstructs(m in matrix(2)) {
        let s = svd_2x2(&m).unwrap();
        prop_assert!(s.singulars[0] >= s.singulars[1] && s.singulars[1] >= 0.0);
        prop_assert!(s.reconstruct().max_abs_diff(&m) <= 1e-10);
        prop_assert!(s.left.is_unitary(1e-10));
        prop_assert!(s.right_dagger.is_unitary(1e-10));
    }

    #[test]
    fn zyz_round_trip(z in angles()) {
        let u = z.to_matrix();
        let back = zyz_decompose(&u).unwrap();
        prop_assert!(back.to_matrix().max_abs_diff(&u) <= 1e-10);
        prop_assert!((0.0..=PI).contains(&back.gamma));
    }

    #[test]
    fn tensor_mixed_product(a in matrix(2), b in matrix(2), c in matrix(2), d in matrix(2)) {
        let lhs = &tensor(&a, &b) * &tensor(&c, &d);
        let rhs = tensor(&(&a * &c), &(&b * &d));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn unitary_gates_preserve_norm(c in circuit()) {
        let mut reg = Register::new(c.n_qubits()).unwrap();
        for op in c.ops() {
            if let Op::Gate(g) = op {
                if g.kind.target_matrix().is_unitary(1e-10) {
                    reg.apply(g).unwrap();
                }
            }
        }
        prop_assert!((reg.state().norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn branch_probabilities_sum_to_one(i in input(), t in theta()) {
        let total: f64 = Label::ALL.iter().map(|&l| branch(&i, t, l).unwrap().probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn success_probability_in_range(i in input(), t in theta(), l in label()) {
        let p = success_probability(&i, t, l).unwrap();
        let (lo, hi) = success_range_all_inputs(t).unwrap();
        prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
        prop_assert!(p <= 1.0 + 1e-12);
        prop_assert!((p - success_probability_closed_form(&i, t, l).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn qasm_round_trip_is_idempotent(c in circuit()) {
        let text = emit_qasm(&c).unwrap().source_text;
        let parsed = parse_qasm_subset(&text).unwrap();
        prop_assert_eq!(&emit_qasm(&parsed).unwrap().source_text, &text);
        // N(0) comes back as a post-selected measurement; the operator is the same.
        let (m1, _) = circuit_action(&c).unwrap();
        let (m2, _) = circuit_action(&parsed).unwrap();
        prop_assert!(m1.max_abs_diff(&m2) <= 1e-10);
    }

    #[test]
    fn register_projection_weights(amps in prop::collection::vec(c64(), 8), q in 0usize..3) {
        let v = ComplexVector::new(amps);
        prop_assume!(v.norm() > 1e-3);
        let reg = Register::from_state(v.normalized()).unwrap();
        let w = reg.weights(&[q]).unwrap();
        prop_assert!((w[0] + w[1] - 1.0).abs() <= 1e-12);
        let mut kept = reg.clone();
        let p0 = kept.project(&[q], 0).unwrap();
        prop_assert!((p0 - w[0]).abs() <= 1e-12);
    }
}
