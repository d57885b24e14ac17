//! Probabilistic teleportation of a qubit through the elegant joint
//! measurement (EJM).
//!
//! Alice measures her input qubit together with one half of a singlet in the
//! θ-parametrized EJM basis. Each of the four outcomes leaves Bob with a
//! state related to the input by a fixed invertible but (for θ < π/2)
//! nonunitary matrix `A_i`. Bob applies `A_i` with one ancilla and a
//! post-selection; it succeeds with probability `1 − (√3/2) cos θ` on
//! average and, when it succeeds, recovers the input exactly.
//!
//! ```
//! use ejm_teleport::sim::run_teleportation;
//! use ejm_teleport::teleport::InputState;
//!
//! let input = InputState::from_angles(0.8, 0.3);
//! let run = run_teleportation(&input, std::f64::consts::FRAC_PI_2, 7).unwrap();
//! assert!(run.success);
//! assert!((run.output_fidelity - 1.0).abs() < 1e-10);
//! ```

pub mod circuit;
pub mod ejm;
pub mod error;
pub mod gates;
pub mod qmath;
pub mod sim;
pub mod teleport;
pub mod tooling;

pub use circuit::{Circuit, Op};
pub use ejm::{build_basis, EjmBasis, Label};
pub use error::{Error, Result};
pub use gates::{GateKind, GateSpec};
pub use qmath::{ComplexMatrix, ComplexVector, C64};
pub use teleport::InputState;
