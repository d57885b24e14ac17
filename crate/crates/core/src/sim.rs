//! Dense statevector simulation for registers of up to four qubits.
//!
//! Qubit 0 is the most significant bit of the amplitude index. In the
//! teleportation protocol qubits 0 and 1 are Alice's (input and her half of
//! the singlet), qubit 2 is Bob's and qubit 3 is the ancilla used by the
//! nonunitary correction.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64(seed)` and split per run with `set_stream(stream)`. Run
//! `k` of a Monte Carlo batch uses stream `k`, so a batch is reproducible
//! bit-for-bit and shots can be evaluated in any order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Circuit, Op};
use crate::ejm::{ejm_circuit, Label};
use crate::error::{Error, Result};
use crate::gates::{realize_nonunitary, GateKind, GateSpec};
use crate::qmath::{ComplexMatrix, ComplexVector, Tolerances, C64, ZERO};
use crate::teleport::{correction_plan, InputState};

pub const MAX_QUBITS: usize = 4;

pub const ALICE_INPUT: usize = 0;
pub const ALICE_HALF: usize = 1;
pub const BOB: usize = 2;
pub const ANCILLA: usize = 3;

/// The ChaCha8 stream used for run `stream` of a batch seeded with `seed`.
pub fn run_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn bit_of(index: usize, qubit: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - qubit)) & 1
}

/// Expands a gate to a dense `2ⁿ × 2ⁿ` matrix on the full register.
pub fn expand(g: &GateSpec, n_qubits: usize) -> Result<ComplexMatrix> {
    for q in g.qubits() {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
    }
    let dim = 1usize << n_qubits;
    let base = g.kind.target_matrix();
    if let GateKind::GlobalPhase(_) = g.kind {
        return Ok(ComplexMatrix::identity(dim).scaled(base.get(0, 0)));
    }
    let t = g.targets.len();
    let target_mask: usize = g
        .targets
        .iter()
        .map(|&q| 1usize << (n_qubits - 1 - q))
        .sum();
    // Local index of the target bits, targets[0] most significant.
    let local = |index: usize| {
        g.targets
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | bit_of(index, q, n_qubits))
    };
    let with_local = |index: usize, value: usize| {
        let mut out = index & !target_mask;
        for (k, &q) in g.targets.iter().enumerate() {
            let bit = (value >> (t - 1 - k)) & 1;
            out |= bit << (n_qubits - 1 - q);
        }
        out
    };

    let mut m = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let active = g.controls.iter().all(|&c| bit_of(col, c, n_qubits) == 1);
        if !active {
            m.set(col, col, C64::from(1.0));
            continue;
        }
        let lc = local(col);
        for lr in 0..(1 << t) {
            let v = base.get(lr, lc);
            if v != ZERO {
                m.set(with_local(col, lr), col, v);
            }
        }
    }
    Ok(m)
}

/// A circuit with every gate expanded once to the full register.
#[derive(Debug, Clone)]
pub struct Program {
    n_qubits: usize,
    steps: Vec<Step>,
}

#[derive(Debug, Clone)]
enum Step {
    Apply(ComplexMatrix),
    Measure(usize),
    PostSelect(usize),
}

impl Program {
    pub fn compile(circuit: &Circuit) -> Result<Program> {
        let n = circuit.n_qubits();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Domain {
                name: "n_qubits",
                value: n as f64,
                domain: "1..=4",
            });
        }
        let steps = circuit
            .ops()
            .iter()
            .map(|op| {
                Ok(match op {
                    Op::Gate(g) => Step::Apply(expand(g, n)?),
                    Op::Measure(q) => Step::Measure(*q),
                    Op::PostSelect(q) => Step::PostSelect(*q),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Program { n_qubits: n, steps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
}

/// How post-selections are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Project onto `|0⟩` without renormalizing; the lost weight accumulates
    /// in [`Register::accumulated_keep_probability`]. Measurements are an error.
    Exact,
    /// Sample every measurement and post-selection from the Born rule.
    Sampled,
}

/// Outcome of a computational-basis measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub qubits: Vec<usize>,
    /// One bit per measured qubit, same order as `qubits`.
    pub bits: Vec<u8>,
    /// Exact Born probability of this outcome.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    n_qubits: usize,
    state: ComplexVector,
    accumulated_keep_probability: f64,
}

impl Register {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Domain {
                name: "n_qubits",
                value: n_qubits as f64,
                domain: "1..=4",
            });
        }
        Ok(Register {
            n_qubits,
            state: ComplexVector::basis(1 << n_qubits, 0),
            accumulated_keep_probability: 1.0,
        })
    }

    pub fn from_state(state: ComplexVector) -> Result<Self> {
        let n = state.n_qubits().filter(|&n| (1..=MAX_QUBITS).contains(&n));
        let n_qubits = n.ok_or_else(|| Error::DimensionMismatch {
            expected: "2, 4, 8 or 16 amplitudes".into(),
            found: state.dim().to_string(),
        })?;
        let norm = state.norm();
        if (norm - 1.0).abs() > Tolerances::DEFAULT.equality {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Register {
            n_qubits,
            state,
            accumulated_keep_probability: 1.0,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn state(&self) -> &ComplexVector {
        &self.state
    }

    pub fn accumulated_keep_probability(&self) -> f64 {
        self.accumulated_keep_probability
    }

    pub fn apply(&mut self, g: &GateSpec) -> Result<()> {
        let m = expand(g, self.n_qubits)?;
        self.apply_matrix(&m)
    }

    pub fn apply_matrix(&mut self, m: &ComplexMatrix) -> Result<()> {
        self.state = m.matvec(&self.state)?;
        Ok(())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        match qubits.iter().find(|&&q| q >= self.n_qubits) {
            Some(&index) => Err(Error::QubitOutOfRange {
                index,
                n_qubits: self.n_qubits,
            }),
            None => Ok(()),
        }
    }

    fn outcome_of(&self, index: usize, qubits: &[usize]) -> usize {
        qubits
            .iter()
            .fold(0, |acc, &q| (acc << 1) | bit_of(index, q, self.n_qubits))
    }

    /// Born weights of every outcome on `qubits`, first listed qubit most
    /// significant. Weights sum to the squared norm of the state.
    pub fn weights(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_qubits(qubits)?;
        let mut w = vec![0.0; 1 << qubits.len()];
        for (index, a) in self.state.amplitudes().iter().enumerate() {
            w[self.outcome_of(index, qubits)] += a.norm_sqr();
        }
        Ok(w)
    }

    /// Zeroes every amplitude inconsistent with `outcome` and returns the
    /// weight kept. Does not renormalize.
    pub fn project(&mut self, qubits: &[usize], outcome: usize) -> Result<f64> {
        self.check_qubits(qubits)?;
        let n = self.n_qubits;
        let mut kept = 0.0;
        for (index, a) in self.state.amplitudes_mut().iter_mut().enumerate() {
            let o = qubits
                .iter()
                .fold(0, |acc, &q| (acc << 1) | bit_of(index, q, n));
            if o == outcome {
                kept += a.norm_sqr();
            } else {
                *a = ZERO;
            }
        }
        Ok(kept)
    }

    pub fn normalize(&mut self) {
        self.state = self.state.normalized();
    }

    /// Samples an outcome on `qubits`, collapses and renormalizes.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<Measurement> {
        let weights = self.weights(qubits)?;
        let total: f64 = weights.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut cumulative = 0.0;
        let mut chosen = None;
        for (k, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            cumulative += w;
            chosen = Some(k);
            if u < cumulative {
                break;
            }
        }
        let outcome = chosen.ok_or(Error::NotNormalized { norm: 0.0 })?;
        let probability = weights[outcome] / total;
        self.project(qubits, outcome)?;
        self.normalize();
        let k = qubits.len();
        Ok(Measurement {
            qubits: qubits.to_vec(),
            bits: (0..k)
                .map(|j| ((outcome >> (k - 1 - j)) & 1) as u8)
                .collect(),
            probability,
        })
    }

    /// Runs a compiled program. Returns `(qubit, bit)` for each measurement
    /// and post-selection in order.
    pub fn execute<R: Rng + ?Sized>(
        &mut self,
        program: &Program,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Vec<(usize, u8)>> {
        if program.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: format!("{} qubits", self.n_qubits),
                found: format!("{} qubits", program.n_qubits),
            });
        }
        let mut record = Vec::new();
        for step in &program.steps {
            match (step, mode) {
                (Step::Apply(m), _) => self.apply_matrix(m)?,
                (Step::Measure(q), Mode::Sampled) | (Step::PostSelect(q), Mode::Sampled) => {
                    let m = self.measure(&[*q], rng)?;
                    record.push((*q, m.bits[0]));
                }
                (Step::PostSelect(q), Mode::Exact) => {
                    self.project(&[*q], 0)?;
                    self.accumulated_keep_probability = self.state.norm_sqr();
                    record.push((*q, 0));
                }
                (Step::Measure(_), Mode::Exact) => {
                    return Err(Error::Unsupported(
                        "measurement in exact mode; project explicitly".into(),
                    ))
                }
            }
        }
        Ok(record)
    }

    /// State of `qubit` given the other qubits' basis values in `fixed`.
    pub fn extract_qubit(&self, qubit: usize, fixed: &[(usize, u8)]) -> Result<ComplexVector> {
        self.check_qubits(&[qubit])?;
        let n = self.n_qubits;
        let mut base = 0usize;
        for &(q, b) in fixed {
            self.check_qubits(&[q])?;
            base |= (b as usize) << (n - 1 - q);
        }
        let shift = n - 1 - qubit;
        let amps = self.state.amplitudes();
        Ok(ComplexVector::new(vec![
            amps[base & !(1 << shift)],
            amps[base | (1 << shift)],
        ]))
    }
}

/// Linear operator of a circuit with every post-selection replaced by the
/// projector onto `|0⟩`, plus the measured and post-selected qubits in order.
/// Plain measurements do not enter the operator.
pub fn circuit_action(circuit: &Circuit) -> Result<(ComplexMatrix, Vec<Op>)> {
    let n = circuit.n_qubits();
    let mut op = ComplexMatrix::identity(1 << n);
    let mut readouts = Vec::new();
    for step in circuit.ops() {
        match step {
            Op::Gate(g) => op = expand(g, n)?.matmul(&op)?,
            Op::Measure(_) => readouts.push(step.clone()),
            Op::PostSelect(q) => {
                let projector = GateSpec::single(GateKind::N(0.0), *q);
                op = expand(&projector, n)?.matmul(&op)?;
                readouts.push(step.clone());
            }
        }
    }
    Ok((op, readouts))
}

/// Every circuit the protocol needs, on the four-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolCircuits {
    pub theta: f64,
    /// From `|0000⟩`: input on qubit 0, singlet on qubits 1–2.
    pub prep: Circuit,
    /// EJM rotation on qubits 0–1 followed by their measurement.
    pub alice: Circuit,
    /// Bob's correction per EJM outcome, ending in the ancilla post-selection.
    pub corrections: [Circuit; 4],
}

/// `Ry(ζ)`, `Rz(ξ)` on qubit 0 and the singlet on qubits 1–2.
pub fn preparation_circuit(zeta: f64, xi: f64) -> Circuit {
    let mut c = Circuit::new(MAX_QUBITS);
    let gates = [
        GateSpec::single(GateKind::X, ALICE_HALF),
        GateSpec::single(GateKind::X, BOB),
        GateSpec::single(GateKind::Ry(zeta), ALICE_INPUT),
        GateSpec::single(GateKind::Rz(xi), ALICE_INPUT),
    ];
    for g in gates {
        c.gate(g).expect("qubits in range");
    }
    c.extend(&singlet_circuit(MAX_QUBITS, ALICE_HALF, BOB))
        .expect("qubits in range");
    c
}

/// `H` then `CNOT` on `|1⟩|1⟩`, giving `(|01⟩ − |10⟩)/√2`.
pub fn singlet_circuit(n_qubits: usize, first: usize, second: usize) -> Circuit {
    Circuit::from_gates(
        n_qubits,
        [
            GateSpec::single(GateKind::H, first),
            GateSpec::controlled(GateKind::Cnot, first, second),
        ],
    )
    .expect("qubits must lie inside the register")
}

/// Bob's circuit for outcome `label`: `V†`, controlled `U(d_θ)` onto the
/// ancilla, `U`, then post-selection of the ancilla on `|0⟩`.
pub fn correction_circuit(theta: f64, label: Label) -> Result<Circuit> {
    let plan = correction_plan(theta, label)?;
    let realization = realize_nonunitary(&plan.svd, theta)?;
    let [pre, ctrl, post, _projection] = realization.placed(BOB, ANCILLA);
    Circuit::from_ops(
        MAX_QUBITS,
        vec![
            Op::Gate(pre),
            Op::Gate(ctrl),
            Op::Gate(post),
            Op::PostSelect(ANCILLA),
        ],
    )
}

impl ProtocolCircuits {
    pub fn new(input: &InputState, theta: f64) -> Result<Self> {
        let (zeta, xi) = input.angles();
        let mut alice = Circuit::from_gates(MAX_QUBITS, ejm_circuit(theta)?)?;
        alice.push(Op::Measure(ALICE_INPUT))?;
        alice.push(Op::Measure(ALICE_HALF))?;
        let corrections = [
            correction_circuit(theta, Label::E00)?,
            correction_circuit(theta, Label::E01)?,
            correction_circuit(theta, Label::E10)?,
            correction_circuit(theta, Label::E11)?,
        ];
        Ok(ProtocolCircuits {
            theta,
            prep: preparation_circuit(zeta, xi),
            alice,
            corrections,
        })
    }

    pub fn compile(&self, input: &InputState) -> Result<CompiledProtocol> {
        CompiledProtocol::new(self, input)
    }
}

/// Compiled protocol plus the deterministic state just before Alice measures.
#[derive(Debug, Clone)]
pub struct CompiledProtocol {
    pub theta: f64,
    pub input: InputState,
    prep: Program,
    alice: Program,
    corrections: [Program; 4],
    before_measurement: Register,
}

impl CompiledProtocol {
    pub fn new(circuits: &ProtocolCircuits, input: &InputState) -> Result<Self> {
        let prep = Program::compile(&circuits.prep)?;
        let alice = Program::compile(&circuits.alice)?;
        let corrections = [
            Program::compile(&circuits.corrections[0])?,
            Program::compile(&circuits.corrections[1])?,
            Program::compile(&circuits.corrections[2])?,
            Program::compile(&circuits.corrections[3])?,
        ];
        let mut reg = Register::new(MAX_QUBITS)?;
        // Neither preparation nor the EJM rotation samples anything.
        let mut unused = run_rng(0, 0);
        reg.execute(&prep, Mode::Sampled, &mut unused)?;
        let rotation_only = Program {
            n_qubits: alice.n_qubits,
            steps: alice
                .steps
                .iter()
                .filter(|s| matches!(s, Step::Apply(_)))
                .cloned()
                .collect(),
        };
        reg.execute(&rotation_only, Mode::Sampled, &mut unused)?;
        Ok(CompiledProtocol {
            theta: circuits.theta,
            input: *input,
            prep,
            alice,
            corrections,
            before_measurement: reg,
        })
    }

    /// Exact probability that Bob's post-selection succeeds after EJM
    /// outcome `label`, computed through the correction circuit.
    pub fn keep_probability(&self, label: Label) -> Result<f64> {
        let mut reg = self.before_measurement.clone();
        let weight = reg.project(&[ALICE_INPUT, ALICE_HALF], label.index())?;
        if weight == 0.0 {
            return Ok(0.0);
        }
        reg.normalize();
        let mut unused = run_rng(0, 0);
        reg.execute(&self.corrections[label.index()], Mode::Exact, &mut unused)?;
        Ok(reg.accumulated_keep_probability())
    }

    /// Exact EJM outcome distribution of the compiled circuit.
    pub fn branch_probabilities(&self) -> Result<[f64; 4]> {
        let w = self
            .before_measurement
            .weights(&[ALICE_INPUT, ALICE_HALF])?;
        Ok([w[0], w[1], w[2], w[3]])
    }

    /// One sampled run, executing every circuit from `|0000⟩`.
    pub fn run(&self, seed: u64, stream: u64) -> Result<RunRecord> {
        let mut reg = Register::new(MAX_QUBITS)?;
        let mut rng = run_rng(seed, stream);
        reg.execute(&self.prep, Mode::Sampled, &mut rng)?;
        self.finish(reg, seed, stream, rng)
    }

    /// Like [`Self::run`] but starting from the cached pre-measurement state.
    /// Produces identical records; used for large batches.
    pub fn run_from_cache(&self, seed: u64, stream: u64) -> Result<RunRecord> {
        let reg = self.before_measurement.clone();
        let rng = run_rng(seed, stream);
        self.finish_after_rotation(reg, seed, stream, rng)
    }

    fn finish(
        &self,
        mut reg: Register,
        seed: u64,
        stream: u64,
        mut rng: ChaCha8Rng,
    ) -> Result<RunRecord> {
        let record = reg.execute(&self.alice, Mode::Sampled, &mut rng)?;
        self.correct(reg, &record, seed, stream, rng)
    }

    fn finish_after_rotation(
        &self,
        mut reg: Register,
        seed: u64,
        stream: u64,
        mut rng: ChaCha8Rng,
    ) -> Result<RunRecord> {
        let measure_only = Program {
            n_qubits: self.alice.n_qubits,
            steps: self
                .alice
                .steps
                .iter()
                .filter(|s| !matches!(s, Step::Apply(_)))
                .cloned()
                .collect(),
        };
        let record = reg.execute(&measure_only, Mode::Sampled, &mut rng)?;
        self.correct(reg, &record, seed, stream, rng)
    }

    fn correct(
        &self,
        mut reg: Register,
        alice_record: &[(usize, u8)],
        seed: u64,
        stream: u64,
        mut rng: ChaCha8Rng,
    ) -> Result<RunRecord> {
        let bit = |q: usize| {
            alice_record
                .iter()
                .find(|(qq, _)| *qq == q)
                .map(|(_, b)| *b)
                .ok_or_else(|| Error::Unsupported(format!("qubit {q} was not measured")))
        };
        let (m1, m2) = (bit(ALICE_INPUT)?, bit(ALICE_HALF)?);
        let label = Label::from_bits(m1, m2).expect("bits are 0 or 1");
        let bob_record = reg.execute(&self.corrections[label.index()], Mode::Sampled, &mut rng)?;
        let ancilla = bob_record
            .iter()
            .rev()
            .find(|(q, _)| *q == ANCILLA)
            .map(|(_, b)| *b)
            .ok_or_else(|| {
                Error::Unsupported("correction circuit never measures the ancilla".into())
            })?;
        let bob = reg.extract_qubit(
            BOB,
            &[(ALICE_INPUT, m1), (ALICE_HALF, m2), (ANCILLA, ancilla)],
        )?;
        let output_fidelity = bob.fidelity(&self.input.vector())?;
        let (zeta, xi) = self.input.angles();
        Ok(RunRecord {
            seed,
            stream,
            theta: self.theta,
            zeta,
            xi,
            ejm_outcome: label,
            ancilla_outcome: ancilla,
            success: ancilla == 0,
            output_fidelity,
        })
    }
}

/// One end-to-end teleportation attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub stream: u64,
    pub theta: f64,
    pub zeta: f64,
    pub xi: f64,
    pub ejm_outcome: Label,
    pub ancilla_outcome: u8,
    pub success: bool,
    pub output_fidelity: f64,
}

/// Prepares, measures and corrects once, with ChaCha8 stream 0 of `seed`.
pub fn run_teleportation(input: &InputState, theta: f64, seed: u64) -> Result<RunRecord> {
    ProtocolCircuits::new(input, theta)?
        .compile(input)?
        .run(seed, 0)
}

/// Counts from a batch of seeded runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub seed: u64,
    pub shots: u64,
    pub branch_counts: [u64; 4],
    pub success_counts: [u64; 4],
    /// Successful runs whose output fidelity fell below `1 − 1e-10`.
    pub imperfect_successes: u64,
    pub min_success_fidelity: f64,
}

impl MonteCarloSummary {
    fn empty(seed: u64) -> Self {
        MonteCarloSummary {
            seed,
            shots: 0,
            branch_counts: [0; 4],
            success_counts: [0; 4],
            imperfect_successes: 0,
            min_success_fidelity: 1.0,
        }
    }

    fn record(&mut self, r: &RunRecord) {
        let k = r.ejm_outcome.index();
        self.shots += 1;
        self.branch_counts[k] += 1;
        if r.success {
            self.success_counts[k] += 1;
            if r.output_fidelity < 1.0 - Tolerances::DEFAULT.equality {
                self.imperfect_successes += 1;
            }
            self.min_success_fidelity = self.min_success_fidelity.min(r.output_fidelity);
        }
    }

    /// Combines two summaries of the same seed. Associative and commutative.
    pub fn merge(mut self, other: &MonteCarloSummary) -> Self {
        self.shots += other.shots;
        for k in 0..4 {
            self.branch_counts[k] += other.branch_counts[k];
            self.success_counts[k] += other.success_counts[k];
        }
        self.imperfect_successes += other.imperfect_successes;
        self.min_success_fidelity = self.min_success_fidelity.min(other.min_success_fidelity);
        self
    }

    pub fn successes(&self) -> u64 {
        self.success_counts.iter().sum()
    }

    pub fn branch_frequency(&self, label: Label) -> f64 {
        self.branch_counts[label.index()] as f64 / self.shots as f64
    }

    pub fn branch_stderr(&self, label: Label) -> f64 {
        binomial_stderr(self.branch_frequency(label), self.shots)
    }

    pub fn success_rate(&self) -> f64 {
        self.successes() as f64 / self.shots as f64
    }

    pub fn success_stderr(&self) -> f64 {
        binomial_stderr(self.success_rate(), self.shots)
    }

    /// Success frequency among runs that produced `label`.
    pub fn conditional_success_rate(&self, label: Label) -> Option<f64> {
        let n = self.branch_counts[label.index()];
        (n > 0).then(|| self.success_counts[label.index()] as f64 / n as f64)
    }
}

/// `√(p(1 − p)/n)`.
pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `shots` seeded runs; run `k` uses ChaCha8 stream `k` of `seed`.
pub fn monte_carlo(
    input: &InputState,
    theta: f64,
    shots: u64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    let protocol = ProtocolCircuits::new(input, theta)?.compile(input)?;
    monte_carlo_with(&protocol, shots, seed)
}

pub fn monte_carlo_with(
    protocol: &CompiledProtocol,
    shots: u64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if shots == 0 {
        return Err(Error::Domain {
            name: "shots",
            value: 0.0,
            domain: "≥ 1",
        });
    }
    (0..shots)
        .into_par_iter()
        .try_fold(
            || MonteCarloSummary::empty(seed),
            |mut acc, k| {
                acc.record(&protocol.run_from_cache(seed, k)?);
                Ok(acc)
            },
        )
        .try_reduce(|| MonteCarloSummary::empty(seed), |a, b| Ok(a.merge(&b)))
}

/// Samples only Bob's correction for a fixed branch: `(successes, shots)`.
pub fn sample_branch_success(
    input: &InputState,
    theta: f64,
    label: Label,
    shots: u64,
    seed: u64,
    stream: u64,
) -> Result<u64> {
    let branch = crate::teleport::branch(input, theta, label)?;
    let circuit = correction_circuit(theta, label)?;
    // Bob's qubit and the ancilla only: remap to a two-qubit register.
    let local = Circuit::from_ops(
        2,
        circuit
            .ops()
            .iter()
            .map(|op| remap(op, |q| q - BOB))
            .collect(),
    )?;
    let program = Program::compile(&local)?;
    let start = branch
        .normalized_state()
        .tensor(&ComplexVector::basis(2, 0));
    let mut rng = run_rng(seed, stream);
    let mut successes = 0;
    for _ in 0..shots {
        let mut reg = Register::from_state(start.clone())?;
        let rec = reg.execute(&program, Mode::Sampled, &mut rng)?;
        if rec.last().map(|(_, b)| *b) == Some(0) {
            successes += 1;
        }
    }
    Ok(successes)
}

fn remap(op: &Op, f: impl Fn(usize) -> usize) -> Op {
    match op {
        Op::Gate(g) => Op::Gate(GateSpec {
            kind: g.kind.clone(),
            targets: g.targets.iter().map(|&q| f(q)).collect(),
            controls: g.controls.iter().map(|&q| f(q)).collect(),
        }),
        Op::Measure(q) => Op::Measure(f(*q)),
        Op::PostSelect(q) => Op::PostSelect(f(*q)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teleport::{success_probability, total_success_probability};
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    #[test]
    fn h_then_cnot_on_one_one_gives_singlet() {
        let mut reg = Register::new(2).unwrap();
        reg.apply(&GateSpec::single(GateKind::X, 0)).unwrap();
        reg.apply(&GateSpec::single(GateKind::X, 1)).unwrap();
        reg.apply(&GateSpec::single(GateKind::H, 0)).unwrap();
        reg.apply(&GateSpec::controlled(GateKind::Cnot, 0, 1))
            .unwrap();
        let s = FRAC_1_SQRT_2;
        let singlet = ComplexVector::new(vec![ZERO, s.into(), (-s).into(), ZERO]);
        assert!(reg.state().max_abs_diff(&singlet) < 1e-15);
    }

    #[test]
    fn ry_pi_flips_zero() {
        let mut reg = Register::new(1).unwrap();
        reg.apply(&GateSpec::single(GateKind::Ry(PI), 0)).unwrap();
        reg.apply(&GateSpec::single(GateKind::Rz(0.0), 0)).unwrap();
        let f = reg.state().fidelity(&ComplexVector::basis(2, 1)).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_gates_preserve_norm() {
        let mut rng = run_rng(1, 0);
        let mut reg = Register::new(4).unwrap();
        let kinds = [
            GateKind::H,
            GateKind::Ry(0.3),
            GateKind::Rz(1.2),
            GateKind::S,
            GateKind::Y,
        ];
        for step in 0..200 {
            let q = rng.random_range(0..4);
            let g = if step % 3 == 0 {
                GateSpec::controlled(GateKind::ControlledRz(0.7), q, (q + 1) % 4)
            } else {
                GateSpec::single(kinds[step % kinds.len()].clone(), q)
            };
            let before = reg.state().norm();
            reg.apply(&g).unwrap();
            assert!((reg.state().norm() - before).abs() <= 1e-14);
        }
    }

    #[test]
    fn out_of_range_qubit_is_rejected() {
        let mut reg = Register::new(2).unwrap();
        assert!(matches!(
            reg.apply(&GateSpec::single(GateKind::H, 2)),
            Err(Error::QubitOutOfRange { index: 2, .. })
        ));
        assert!(Register::new(5).is_err());
    }

    #[test]
    fn expand_matches_tensor_products() {
        let h = GateKind::H.target_matrix();
        let id = ComplexMatrix::identity(2);
        let full = expand(&GateSpec::single(GateKind::H, 1), 3).unwrap();
        let expected = id.tensor(&h).tensor(&id);
        assert!(full.max_abs_diff(&expected) < 1e-16);
        // Control below target.
        let cx = expand(&GateSpec::controlled(GateKind::Cnot, 1, 0), 2).unwrap();
        let expected = ComplexMatrix::from_vec(
            4,
            4,
            [1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0]
                .iter()
                .map(|&x| C64::from(x as f64))
                .collect(),
        )
        .unwrap();
        assert_eq!(cx, expected);
    }

    #[test]
    fn measuring_zero_is_certain() {
        let mut reg = Register::new(1).unwrap();
        let mut rng = run_rng(0, 0);
        let m = reg.measure(&[0], &mut rng).unwrap();
        assert_eq!(m.bits, vec![0]);
        assert_eq!(m.probability, 1.0);
    }

    #[test]
    fn singlet_qubit_is_fair_coin() {
        let s = FRAC_1_SQRT_2;
        let singlet = ComplexVector::new(vec![ZERO, s.into(), (-s).into(), ZERO]);
        let mut rng = run_rng(9, 0);
        let mut ones = 0;
        for _ in 0..2000 {
            let mut reg = Register::from_state(singlet.clone()).unwrap();
            let m = reg.measure(&[0], &mut rng).unwrap();
            assert!((m.probability - 0.5).abs() < 1e-15);
            ones += m.bits[0] as usize;
            // Perfect anticorrelation after collapse.
            let other = reg.measure(&[1], &mut rng).unwrap();
            assert_eq!(other.bits[0], 1 - m.bits[0]);
        }
        assert!((ones as f64 - 1000.0).abs() < 4.0 * (500.0f64).sqrt());
    }

    #[test]
    fn zero_probability_branch_never_sampled() {
        let mut rng = run_rng(5, 0);
        for _ in 0..1000 {
            let mut reg = Register::new(2).unwrap();
            reg.apply(&GateSpec::single(GateKind::H, 1)).unwrap();
            let m = reg.measure(&[0, 1], &mut rng).unwrap();
            assert_eq!(m.bits[0], 0);
        }
    }

    #[test]
    fn ejm_measurement_frequencies() {
        // Exact p_i from the branch norms versus 10⁵ sampled EJM outcomes.
        let input = InputState::from_angles(0.0, 0.0);
        let protocol = ProtocolCircuits::new(&input, 0.0)
            .unwrap()
            .compile(&input)
            .unwrap();
        let summary = monte_carlo_with(&protocol, 100_000, 2024).unwrap();
        let exact = [0.125, 0.125, 0.375, 0.375];
        for l in Label::ALL {
            let p = exact[l.index()];
            let sigma = binomial_stderr(p, summary.shots);
            assert!((summary.branch_frequency(l) - p).abs() <= 4.0 * sigma);
        }
    }

    #[test]
    fn half_pi_always_succeeds_with_fidelity_one() {
        let mut rng = run_rng(77, 0);
        for seed in 0..50 {
            let input = InputState::random(&mut rng);
            let r = run_teleportation(&input, FRAC_PI_2, seed).unwrap();
            assert!(r.success);
            assert!((r.output_fidelity - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn successful_runs_are_perfect() {
        let mut rng = run_rng(78, 0);
        let mut seen = 0;
        for seed in 0..300 {
            let input = InputState::random(&mut rng);
            let theta = rng.random_range(0.0..FRAC_PI_2);
            let r = run_teleportation(&input, theta, seed).unwrap();
            assert_eq!(r.success, r.ancilla_outcome == 0);
            if r.success {
                seen += 1;
                assert!((r.output_fidelity - 1.0).abs() <= 1e-10);
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn cached_and_full_runs_agree() {
        let input = InputState::from_angles(1.1, 0.4);
        let protocol = ProtocolCircuits::new(&input, 0.6)
            .unwrap()
            .compile(&input)
            .unwrap();
        for k in 0..200 {
            assert_eq!(
                protocol.run(3, k).unwrap(),
                protocol.run_from_cache(3, k).unwrap()
            );
        }
    }

    #[test]
    fn circuit_keep_probability_matches_formula() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(79);
        for _ in 0..40 {
            let input = InputState::random(&mut rng);
            let theta = rng.random_range(0.0..=FRAC_PI_2);
            let protocol = ProtocolCircuits::new(&input, theta)
                .unwrap()
                .compile(&input)
                .unwrap();
            let branch_p = protocol.branch_probabilities().unwrap();
            let mut total = 0.0;
            for l in Label::ALL {
                let circuit = protocol.keep_probability(l).unwrap();
                let formula = success_probability(&input, theta, l).unwrap();
                assert!((circuit - formula).abs() <= 1e-12);
                total += branch_p[l.index()] * circuit;
            }
            assert!((total - total_success_probability(theta).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let input = InputState::from_angles(0.9, 2.0);
        let a = monte_carlo(&input, 0.4, 2000, 11).unwrap();
        let b = monte_carlo(&input, 0.4, 2000, 11).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo(&input, 0.4, 2000, 12).unwrap();
        assert_ne!(a.branch_counts, c.branch_counts);
    }

    #[test]
    fn summaries_merge_associatively() {
        let input = InputState::from_angles(0.5, 0.1);
        let p = ProtocolCircuits::new(&input, 0.2)
            .unwrap()
            .compile(&input)
            .unwrap();
        let part = |range: std::ops::Range<u64>| {
            let mut s = MonteCarloSummary::empty(1);
            for k in range {
                s.record(&p.run_from_cache(1, k).unwrap());
            }
            s
        };
        let (a, b, c) = (part(0..100), part(100..250), part(250..300));
        let left = a.clone().merge(&b).merge(&c);
        let right = a.merge(&b.merge(&c));
        assert_eq!(left, right);
        assert_eq!(left, monte_carlo_with(&p, 300, 1).unwrap());
    }

    #[test]
    fn zero_shots_rejected() {
        let input = InputState::from_angles(0.0, 0.0);
        assert!(monte_carlo(&input, 0.1, 0, 0).is_err());
    }

    #[test]
    fn branch_sampler_tracks_formula() {
        let input = InputState::from_angles(0.0, 0.0);
        let shots = 20_000;
        let k = sample_branch_success(&input, 0.0, Label::E10, shots, 4, 0).unwrap();
        let p = success_probability(&input, 0.0, Label::E10).unwrap();
        let freq = k as f64 / shots as f64;
        assert!((freq - p).abs() <= 4.0 * binomial_stderr(p, shots));
    }
}
