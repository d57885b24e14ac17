use crate::error::{Error, Result};
use crate::gates::GateSpec;

/// One step of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Gate(GateSpec),
    /// Computational-basis measurement of one qubit.
    Measure(usize),
    /// Measurement whose only accepted outcome is `|0⟩`. Executed exactly it
    /// is the projector `N(0)`; executed with sampling it is a measurement
    /// whose outcome decides success.
    PostSelect(usize),
}

impl Op {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Op::Gate(g) => g.qubits().collect(),
            Op::Measure(q) | Op::PostSelect(q) => vec![*q],
        }
    }
}

/// An ordered list of operations on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            ops: Vec::new(),
        }
    }

    pub fn from_ops(n_qubits: usize, ops: Vec<Op>) -> Result<Self> {
        let mut c = Circuit::new(n_qubits);
        for op in ops {
            c.push(op)?;
        }
        Ok(c)
    }

    pub fn from_gates(n_qubits: usize, gates: impl IntoIterator<Item = GateSpec>) -> Result<Self> {
        Self::from_ops(n_qubits, gates.into_iter().map(Op::Gate).collect())
    }

    pub fn push(&mut self, op: Op) -> Result<()> {
        if let Some(&index) = op.qubits().iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::QubitOutOfRange {
                index,
                n_qubits: self.n_qubits,
            });
        }
        self.ops.push(op);
        Ok(())
    }

    pub fn gate(&mut self, g: GateSpec) -> Result<()> {
        self.push(Op::Gate(g))
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        for op in &other.ops {
            self.push(op.clone())?;
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn gates(&self) -> impl Iterator<Item = &GateSpec> {
        self.ops.iter().filter_map(|op| match op {
            Op::Gate(g) => Some(g),
            _ => None,
        })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}
