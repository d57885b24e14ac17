//! CLI support: QASM export, parameter sweeps and the invariant suite.

pub mod cli;
pub mod qasm;
pub mod sweep;
pub mod verify;
