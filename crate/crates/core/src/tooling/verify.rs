//! The invariant suite behind `ejm verify`.
//!
//! Every check reports its worst deviation against a fixed tolerance. Random
//! draws come from ChaCha8 streams of the configured seed, one stream per
//! check, so a failing line can be reproduced in isolation.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::ejm::{build_basis, concurrence, ejm_circuit, reduced_tetrahedron, Label, TraceOut};
use crate::error::Result;
use crate::gates::{d_theta, matrix_of, realize_nonunitary, u_of_d, GateKind, GateSpec};
use crate::qmath::{
    cos_exact, reduced_density, svd_2x2, tensor, zyz_decompose, ComplexMatrix, ComplexVector,
    ZyzAngles, C64,
};
use crate::sim::{circuit_action, monte_carlo_with, ProtocolCircuits, Register};
use crate::teleport::{
    branch, branch_by_projection, closed_form_svd, correction_matrix, correction_plan,
    correction_prefactor, d_minus, d_plus, success_probability, success_probability_branch10,
    success_probability_closed_form, total_success_from_branches, total_success_probability,
    InputState,
};
use crate::tooling::qasm::{emit_qasm, parse_qasm_subset};
use crate::tooling::sweep::{evaluate, theta_grid, zeta_grid, SweepConfig, DEFAULT_ZETA_STEPS};

pub const DEFAULT_THETA_POINTS: usize = 50;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub theta_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            theta_grid: theta_grid(DEFAULT_THETA_POINTS),
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {}::{} ({})",
            self.module, self.name, self.detail
        )
    }
}

/// Worst deviation seen against a tolerance.
struct Worst {
    value: f64,
    tol: f64,
}

impl Worst {
    fn new(tol: f64) -> Self {
        Worst { value: 0.0, tol }
    }

    fn see(&mut self, deviation: f64) {
        // NaN must fail the check.
        if deviation.is_nan() || deviation > self.value {
            self.value = deviation;
        }
    }

    fn ok(&self) -> bool {
        self.value <= self.tol
    }

    fn detail(&self) -> String {
        format!(
            "max deviation {:.3e}, tolerance {:.0e}",
            self.value, self.tol
        )
    }
}

type Outcome = (bool, String);

fn from_worst(checks: &[&Worst]) -> Outcome {
    let passed = checks.iter().all(|w| w.ok());
    let detail = checks
        .iter()
        .map(|w| w.detail())
        .collect::<Vec<_>>()
        .join("; ");
    (passed, detail)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_vec(n, n, (0..n * n).map(|_| gaussian_c64(rng)).collect()).expect("square")
}

fn random_input<R: Rng>(rng: &mut R) -> InputState {
    InputState::random(rng)
}

struct Suite<'a> {
    config: &'a VerifyConfig,
    results: Vec<CheckResult>,
}

impl Suite<'_> {
    fn run(
        &mut self,
        module: &'static str,
        name: &'static str,
        f: impl FnOnce(&VerifyConfig, &mut ChaCha8Rng) -> Result<Outcome>,
    ) {
        let mut rng = rng_for(self.config.seed, self.results.len() as u64);
        let (passed, detail) = match f(self.config, &mut rng) {
            Ok(o) => o,
            Err(e) => (false, format!("error: {e}")),
        };
        self.results.push(CheckResult {
            module,
            name,
            passed,
            detail,
        });
    }
}

/// Runs every check and returns one result per check, in a fixed order.
pub fn run_all(config: &VerifyConfig) -> Vec<CheckResult> {
    let mut s = Suite {
        config,
        results: Vec::new(),
    };
    s.run("qmath", "tensor_mixed_product", tensor_mixed_product);
    s.run("qmath", "tensor_associativity", tensor_associativity);
    s.run("qmath", "dagger_rules", dagger_rules);
    s.run("qmath", "svd_reconstruction", svd_reconstruction);
    s.run("qmath", "svd_of_unitaries", svd_of_unitaries);
    s.run("qmath", "zyz_round_trip", zyz_round_trip);
    s.run("qmath", "zyz_from_angles", zyz_from_angles);
    s.run(
        "qmath",
        "partial_trace_product_state",
        partial_trace_product_state,
    );
    s.run("gates", "unitary_kinds", unitary_kinds);
    s.run("gates", "n_gate_definition", n_gate_definition);
    s.run("gates", "ancilla_identity", ancilla_identity);
    s.run("gates", "u_of_d_unitary", u_of_d_unitary);
    s.run(
        "gates",
        "d_theta_matches_svd_ratio",
        d_theta_matches_svd_ratio,
    );
    s.run("gates", "ancilla_realization", ancilla_realization);
    s.run("ejm", "orthonormal_complete", orthonormal_complete);
    s.run("ejm", "tetrahedron", tetrahedron);
    s.run("ejm", "equal_entanglement", equal_entanglement);
    s.run("ejm", "circuit_rotates_basis", circuit_rotates_basis);
    s.run("teleport", "branch_states", branch_states);
    s.run(
        "teleport",
        "theta_zero_distribution",
        theta_zero_distribution,
    );
    s.run("teleport", "recovery_exact", recovery_exact);
    s.run("teleport", "closed_form_svd", closed_form_svd_check);
    s.run("teleport", "kraus_completeness", kraus_completeness);
    s.run("teleport", "success_formulas", success_formulas);
    s.run(
        "teleport",
        "total_success_state_independent",
        total_success_state_independent,
    );
    s.run(
        "teleport",
        "proportional_unitarity_boundary",
        proportional_unitarity_boundary,
    );
    s.run("sim", "circuit_keep_probability", circuit_keep_probability);
    s.run("sim", "seeded_determinism", seeded_determinism);
    s.run("sim", "monte_carlo", monte_carlo_check);
    s.run("tooling", "qasm_round_trip", qasm_round_trip);
    s.run("tooling", "sweep_extremes", sweep_extremes);
    s.results
}

fn tensor_mixed_product(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for _ in 0..100 {
        let [a, b, c, d] = [0; 4].map(|_| random_matrix(rng, 2));
        let lhs = tensor(&a, &b).matmul(&tensor(&c, &d))?;
        let rhs = tensor(&a.matmul(&c)?, &b.matmul(&d)?);
        w.see(lhs.max_abs_diff(&rhs));
    }
    Ok(from_worst(&[&w]))
}

fn tensor_associativity(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-14);
    for _ in 0..100 {
        let [a, b, c] = [0; 3].map(|_| random_matrix(rng, 2));
        w.see(tensor(&tensor(&a, &b), &c).max_abs_diff(&tensor(&a, &tensor(&b, &c))));
    }
    Ok(from_worst(&[&w]))
}

fn random_zyz<R: Rng>(rng: &mut R) -> ZyzAngles {
    ZyzAngles {
        alpha: rng.random_range(-PI..PI),
        beta: rng.random_range(-PI..PI),
        gamma: rng.random_range(0.0..PI),
        delta: rng.random_range(-PI..PI),
    }
}

fn svd_of_unitaries(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for _ in 0..500 {
        let s = svd_2x2(&random_zyz(rng).to_matrix())?;
        w.see((s.singulars[0] - 1.0).abs());
        w.see((s.singulars[1] - 1.0).abs());
    }
    Ok(from_worst(&[&w]))
}

fn zyz_from_angles(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-10);
    for _ in 0..1000 {
        let u = random_zyz(rng).to_matrix();
        w.see(zyz_decompose(&u)?.to_matrix().max_abs_diff(&u));
    }
    Ok(from_worst(&[&w]))
}

fn dagger_rules(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for _ in 0..100 {
        let a = random_matrix(rng, 4);
        let b = random_matrix(rng, 4);
        w.see(a.dagger().dagger().max_abs_diff(&a));
        w.see(
            a.matmul(&b)?
                .dagger()
                .max_abs_diff(&b.dagger().matmul(&a.dagger())?),
        );
    }
    Ok(from_worst(&[&w]))
}

fn svd_reconstruction(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut rec = Worst::new(1e-12);
    let mut unit = Worst::new(1e-12);
    let mut order = true;
    for _ in 0..1000 {
        let m = random_matrix(rng, 2);
        let s = svd_2x2(&m)?;
        rec.see(s.reconstruct().max_abs_diff(&m));
        unit.see(s.left.unitarity_deviation());
        unit.see(s.right_dagger.unitarity_deviation());
        order &= s.singulars[0] >= s.singulars[1] && s.singulars[1] >= 0.0;
    }
    let (passed, detail) = from_worst(&[&rec, &unit]);
    Ok((
        passed && order,
        format!("{detail}; singular values ordered: {order}"),
    ))
}

fn zyz_round_trip(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for _ in 0..500 {
        let u = svd_2x2(&random_matrix(rng, 2))?.left;
        w.see(zyz_decompose(&u)?.to_matrix().max_abs_diff(&u));
    }
    Ok(from_worst(&[&w]))
}

fn partial_trace_product_state(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for _ in 0..100 {
        let a = random_input(rng).vector();
        let b = random_input(rng).vector();
        let joint = a.tensor(&b);
        let first = reduced_density(&joint, 1)?;
        let second = reduced_density(&joint, 0)?;
        w.see(first.max_abs_diff(&outer(&a)));
        w.see(second.max_abs_diff(&outer(&b)));
    }
    Ok(from_worst(&[&w]))
}

fn outer(v: &ComplexVector) -> ComplexMatrix {
    let col = v.to_column();
    col.matmul(&col.dagger()).expect("column times row")
}

fn unitary_kinds(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    let a = rng.random_range(-PI..PI);
    let kinds = [
        GateKind::H,
        GateKind::S,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::Ry(a),
        GateKind::Rz(a),
        GateKind::QasmRz(a),
        GateKind::N(1.0),
    ];
    for k in kinds {
        let m = k.target_matrix();
        w.see((&m.dagger() * &m).max_abs_diff(&ComplexMatrix::identity(2)));
    }
    Ok(from_worst(&[&w]))
}

fn n_gate_definition(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut exact = true;
    for &theta in &config.theta_grid {
        let d = d_theta(theta)?;
        let n = matrix_of(&GateSpec::single(GateKind::N(d), 0));
        let expected = ComplexMatrix::real2(1.0, 0.0, 0.0, d * d);
        let ndn = &n.dagger() * &n;
        exact &= ndn.entries() == expected.entries();
        if d < 1.0 {
            exact &= ndn.max_abs_diff(&ComplexMatrix::identity(2)) > 0.0;
        }
    }
    Ok((
        exact,
        format!("N(d)†N(d) = diag(1, d²) exactly and ≠ I for d < 1: {exact}"),
    ))
}

fn ancilla_identity(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut state = Worst::new(1e-12);
    let mut prob = Worst::new(1e-12);
    for _ in 0..1000 {
        let psi = random_input(rng);
        let d = rng.random_range(0.0..=1.0);
        // System controls, ancilla target, ancilla starts in |0⟩.
        let cu = matrix_of(&GateSpec::controlled(
            GateKind::ControlledU(u_of_d(d)?),
            0,
            1,
        ));
        let out = cu.matvec(&psi.vector().tensor(&ComplexVector::basis(2, 0)))?;
        let amps = out.amplitudes();
        let kept = ComplexVector::new(vec![amps[0], amps[2]]);
        let expected = ComplexVector::new(vec![psi.alpha, psi.beta * d]);
        state.see(kept.max_abs_diff(&expected));
        let p = psi.alpha.norm_sqr() + d * d * psi.beta.norm_sqr();
        prob.see((kept.norm_sqr() - p).abs());
    }
    Ok(from_worst(&[&state, &prob]))
}

fn u_of_d_unitary(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for &theta in &config.theta_grid {
        let d = d_theta(theta)?;
        let u = u_of_d(d)?;
        w.see(u.unitarity_deviation());
        w.see((u.get(0, 0) - C64::from(d)).norm());
    }
    Ok(from_worst(&[&w]))
}

fn d_theta_matches_svd_ratio(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    let mut in_range = true;
    for &theta in &config.theta_grid {
        let d = d_theta(theta)?;
        in_range &= (0.0..=1.0).contains(&d);
        w.see((d - d_minus(theta) / d_plus(theta)).abs());
        for l in Label::ALL {
            w.see((correction_plan(theta, l)?.d() - d).abs());
        }
    }
    let (passed, detail) = from_worst(&[&w]);
    Ok((
        passed && in_range,
        format!("{detail}; d in [0,1]: {in_range}"),
    ))
}

fn ancilla_realization(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for &theta in &config.theta_grid {
        for l in Label::ALL {
            let plan = correction_plan(theta, l)?;
            let r = realize_nonunitary(&plan.svd, theta)?;
            w.see(r.kept_block().max_abs_diff(&plan.kraus_keep));
        }
    }
    Ok(from_worst(&[&w]))
}

fn orthonormal_complete(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for &theta in &config.theta_grid {
        let b = build_basis(theta)?;
        w.see(b.gram_deviation());
        w.see(b.completeness_deviation());
    }
    Ok(from_worst(&[&w]))
}

fn tetrahedron(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut radius = Worst::new(1e-10);
    let mut angles = Worst::new(1e-8);
    let mut missing = 0;
    for &theta in &config.theta_grid {
        let b = build_basis(theta)?;
        let expected = 3f64.sqrt() / 2.0 * cos_exact(theta);
        let first = reduced_tetrahedron(&b, TraceOut::First).common_radius;
        let second = reduced_tetrahedron(&b, TraceOut::Second).common_radius;
        radius.see((first - second).abs());
        for side in [TraceOut::First, TraceOut::Second] {
            let t = reduced_tetrahedron(&b, side);
            for len in t.lengths {
                radius.see((len - expected).abs());
            }
            if theta < FRAC_PI_2 {
                match t.pairwise_cosines {
                    Some(cs) => cs.iter().for_each(|c| angles.see((c + 1.0 / 3.0).abs())),
                    None => missing += 1,
                }
            }
        }
    }
    let (passed, detail) = from_worst(&[&radius, &angles]);
    Ok((passed && missing == 0, detail))
}

fn equal_entanglement(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-10);
    for &theta in &config.theta_grid {
        let c = cos_exact(theta);
        let expected = (1.0 - 0.75 * c * c).sqrt();
        let values = build_basis(theta)?
            .states
            .iter()
            .map(concurrence)
            .collect::<Result<Vec<f64>>>()?;
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        w.see(hi - lo);
        for v in values {
            w.see((v - expected).abs());
        }
    }
    Ok(from_worst(&[&w]))
}

fn ejm_unitary(theta: f64) -> Result<ComplexMatrix> {
    let c = Circuit::from_gates(2, ejm_circuit(theta)?)?;
    Ok(circuit_action(&c)?.0)
}

fn circuit_rotates_basis(config: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut fid = Worst::new(1e-10);
    let mut tv = Worst::new(1e-10);
    for &theta in &config.theta_grid {
        let u = ejm_unitary(theta)?;
        let b = build_basis(theta)?;
        for l in Label::ALL {
            let out = u.matvec(b.state(l))?;
            fid.see(1.0 - out.fidelity(&ComplexVector::basis(4, l.index()))?);
        }
        for _ in 0..100 / config.theta_grid.len().max(1) + 1 {
            let phi = ComplexVector::new((0..4).map(|_| gaussian_c64(rng)).collect()).normalized();
            let projector = b.outcome_distribution(&phi)?;
            let reg = Register::from_state(u.matvec(&phi)?)?;
            let measured = reg.weights(&[0, 1])?;
            let distance: f64 = (0..4)
                .map(|k| (projector[k] - measured[k]).abs())
                .sum::<f64>()
                / 2.0;
            tv.see(distance);
        }
    }
    Ok(from_worst(&[&fid, &tv]))
}

fn branch_states(config: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut states = Worst::new(1e-12);
    let mut probs = Worst::new(1e-10);
    for &theta in &config.theta_grid {
        let input = random_input(rng);
        let mut total = 0.0;
        for l in Label::ALL {
            let explicit = branch(&input, theta, l)?;
            let projected = branch_by_projection(&input, theta, l)?;
            states.see(
                explicit
                    .post_state_unnormalized
                    .max_abs_diff(&projected.post_state_unnormalized),
            );
            let n = explicit.normalization;
            probs.see((explicit.probability - 1.0 / (8.0 * n * n)).abs());
            total += explicit.probability;
        }
        probs.see((total - 1.0).abs());
    }
    Ok(from_worst(&[&states, &probs]))
}

fn theta_zero_distribution(_: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    let input = InputState::new(1.0.into(), 0.0.into())?;
    let expected = [0.125, 0.125, 0.375, 0.375];
    for l in Label::ALL {
        w.see((branch(&input, 0.0, l)?.probability - expected[l.index()]).abs());
    }
    Ok(from_worst(&[&w]))
}

fn recovery_exact(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-10);
    for _ in 0..1000 {
        let input = random_input(rng);
        let theta = rng.random_range(0.0..=FRAC_PI_2);
        let l = Label::ALL[rng.random_range(0..4)];
        let a = correction_matrix(theta, l)?;
        let out = a.matvec(&branch(&input, theta, l)?.normalized_state())?;
        w.see(1.0 - out.normalized().fidelity(&input.vector())?);
    }
    Ok(from_worst(&[&w]))
}

fn closed_form_svd_check(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut rec = Worst::new(1e-10);
    let mut sv = Worst::new(1e-10);
    for &theta in &config.theta_grid {
        let scale = correction_prefactor(theta).norm();
        for l in Label::ALL {
            let a = correction_matrix(theta, l)?;
            rec.see(closed_form_svd(theta, l)?.reconstruct().max_abs_diff(&a));
            let s = svd_2x2(&a)?;
            sv.see((s.singulars[0] - scale * d_plus(theta)).abs());
            sv.see((s.singulars[1] - scale * d_minus(theta)).abs());
        }
    }
    Ok(from_worst(&[&rec, &sv]))
}

fn kraus_completeness(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for &theta in &config.theta_grid {
        for l in Label::ALL {
            let plan = correction_plan(theta, l)?;
            w.see(
                plan.completeness()
                    .max_abs_diff(&ComplexMatrix::identity(2)),
            );
            w.see((svd_2x2(&plan.kraus_keep)?.singulars[0] - 1.0).abs());
        }
    }
    Ok(from_worst(&[&w]))
}

fn success_formulas(config: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for &theta in &config.theta_grid {
        let input = random_input(rng);
        for l in Label::ALL {
            let a = success_probability(&input, theta, l)?;
            w.see((a - success_probability_closed_form(&input, theta, l)?).abs());
        }
        let b10 = success_probability(&input, theta, Label::E10)?;
        w.see((b10 - success_probability_branch10(&input, theta)?).abs());
        w.see(
            (total_success_from_branches(&input, theta)? - total_success_probability(theta)?).abs(),
        );
    }
    w.see((total_success_probability(0.0)? - (1.0 - 3f64.sqrt() / 2.0)).abs());
    w.see((total_success_probability(FRAC_PI_2)? - 1.0).abs());
    Ok(from_worst(&[&w]))
}

fn total_success_state_independent(config: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-24);
    for &theta in &config.theta_grid {
        let values: Vec<f64> = (0..100)
            .map(|_| total_success_from_branches(&random_input(rng), theta))
            .collect::<Result<_>>()?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        w.see(var);
    }
    Ok(from_worst(&[&w]))
}

fn proportional_unitarity_boundary(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut at_boundary = Worst::new(1e-12);
    let mut violated_inside = true;
    for &theta in config.theta_grid.iter().chain([FRAC_PI_2].iter()) {
        for l in Label::ALL {
            let a = correction_matrix(theta, l)?;
            let ata = &a.dagger() * &a;
            let scale = ata.trace() / 2.0;
            let dev = ata.max_abs_diff(&ComplexMatrix::identity(2).scaled(scale));
            if theta == FRAC_PI_2 {
                at_boundary.see(dev);
            } else {
                violated_inside &= dev > 1e-12;
            }
        }
    }
    let (passed, detail) = from_worst(&[&at_boundary]);
    Ok((
        passed && violated_inside,
        format!("{detail} at θ=π/2; violated for every θ < π/2: {violated_inside}"),
    ))
}

fn seeded_determinism(config: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut identical = true;
    let mut fid = Worst::new(1e-10);
    let mut successes = 0;
    for &theta in &config.theta_grid {
        let input = random_input(rng);
        let p = ProtocolCircuits::new(&input, theta)?.compile(&input)?;
        for k in 0..20 {
            let a = p.run(config.seed, k)?;
            identical &= a == p.run(config.seed, k)?;
            if a.success {
                successes += 1;
                fid.see(1.0 - a.output_fidelity);
            }
        }
    }
    let (passed, detail) = from_worst(&[&fid]);
    Ok((
        passed && identical && successes > 0,
        format!("{detail} over {successes} successful runs; identical records: {identical}"),
    ))
}

fn circuit_keep_probability(config: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut w = Worst::new(1e-12);
    for &theta in &config.theta_grid {
        let input = random_input(rng);
        let p = ProtocolCircuits::new(&input, theta)?.compile(&input)?;
        let branch_p = p.branch_probabilities()?;
        let mut total = 0.0;
        for l in Label::ALL {
            let keep = p.keep_probability(l)?;
            w.see((keep - success_probability(&input, theta, l)?).abs());
            w.see((branch_p[l.index()] - branch(&input, theta, l)?.probability).abs());
            total += branch_p[l.index()] * keep;
        }
        w.see((total - total_success_probability(theta)?).abs());
    }
    Ok(from_worst(&[&w]))
}

fn monte_carlo_check(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let shots = 20_000;
    let input = InputState::new(1.0.into(), 0.0.into())?;
    let protocol = ProtocolCircuits::new(&input, 0.0)?.compile(&input)?;
    let a = monte_carlo_with(&protocol, shots, config.seed)?;
    let b = monte_carlo_with(&protocol, shots, config.seed)?;
    let mut sigmas: f64 = 0.0;
    let exact = [0.125, 0.125, 0.375, 0.375];
    for l in Label::ALL {
        let p = exact[l.index()];
        let se = (p * (1.0 - p) / shots as f64).sqrt();
        sigmas = sigmas.max((a.branch_frequency(l) - p).abs() / se);
    }
    let p = total_success_probability(0.0)?;
    let se = (p * (1.0 - p) / shots as f64).sqrt();
    sigmas = sigmas.max((a.success_rate() - p).abs() / se);

    let half = ProtocolCircuits::new(&input, FRAC_PI_2)?.compile(&input)?;
    let h = monte_carlo_with(&half, 2_000, config.seed)?;

    let passed = sigmas <= 4.0 && a == b && h.successes() == h.shots && a.imperfect_successes == 0;
    Ok((
        passed,
        format!(
            "worst {sigmas:.2}σ of 4σ; reproducible: {}; θ=π/2 successes {}/{}; imperfect successes {}",
            a == b,
            h.successes(),
            h.shots,
            a.imperfect_successes
        ),
    ))
}

fn qasm_round_trip(config: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut action = Worst::new(1e-10);
    let mut textual = true;
    let mut same_runs = true;
    for &theta in &config.theta_grid {
        let input = random_input(rng);
        let circuits = ProtocolCircuits::new(&input, theta)?;
        let mut parsed = Vec::new();
        let all: Vec<&Circuit> = [&circuits.prep, &circuits.alice]
            .into_iter()
            .chain(circuits.corrections.iter())
            .collect();
        for c in all {
            let text = emit_qasm(c)?.source_text;
            let back = parse_qasm_subset(&text)?;
            textual &= emit_qasm(&back)?.source_text == text;
            let (m1, r1) = circuit_action(c)?;
            let (m2, r2) = circuit_action(&back)?;
            action.see(m1.max_abs_diff(&m2));
            textual &= r1 == r2;
            parsed.push(back);
        }
        let reparsed = ProtocolCircuits {
            theta,
            prep: parsed[0].clone(),
            alice: parsed[1].clone(),
            corrections: [
                parsed[2].clone(),
                parsed[3].clone(),
                parsed[4].clone(),
                parsed[5].clone(),
            ],
        };
        let direct = circuits.compile(&input)?;
        let round = reparsed.compile(&input)?;
        for k in 0..20 {
            let x = direct.run(config.seed, k)?;
            let y = round.run(config.seed, k)?;
            same_runs &= x.ejm_outcome == y.ejm_outcome
                && x.ancilla_outcome == y.ancilla_outcome
                && (x.output_fidelity - y.output_fidelity).abs() <= 1e-10;
        }
    }
    let (passed, detail) = from_worst(&[&action]);
    Ok((
        passed && textual && same_runs,
        format!("{detail}; idempotent text: {textual}; identical seeded runs: {same_runs}"),
    ))
}

fn sweep_extremes(config: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let sweep = SweepConfig {
        theta_grid: vec![0.0, FRAC_PI_2],
        zeta_grid: zeta_grid(DEFAULT_ZETA_STEPS),
        xi: 0.0,
        branch: None,
        shots: None,
        seed: config.seed,
        output_path: "unused.csv".into(),
    };
    let report = evaluate(&sweep)?;
    let s3 = 3f64.sqrt();
    let s2 = 2f64.sqrt();
    let (lo, hi) = ((2.0 - s3) / (2.0 + s2), (2.0 - s3) / (2.0 - s2));
    let mut w = Worst::new(1e-3);
    for e in report.extremes.iter().filter(|e| e.theta == 0.0) {
        w.see((e.p_min - lo).abs());
        w.see((e.p_max - hi).abs());
    }
    let ones = report
        .rows
        .iter()
        .filter(|r| r.theta == FRAC_PI_2)
        .all(|r| r.p_analytic == 1.0);
    let (passed, detail) = from_worst(&[&w]);
    Ok((
        passed && ones,
        format!("{detail}; θ=π/2 all exactly 1: {ones}"),
    ))
}
