//! Truncated Fock-space simulation of a heralded Hadamard gate for
//! coherent-state qubits.
//!
//! The crate covers the analytic gate models, the full four-mode conditioned
//! evolution with lossy detectors, figures of merit (fidelity, Wigner function,
//! Bloch-sphere maps, process fidelity), and maximum-likelihood homodyne
//! tomography.
//!
//! Quadrature convention used throughout: `x̂ = (â + â†)/√2`, so the vacuum
//! variance is 1/2 and `⟨x|n⟩ = π^{-1/4} (2ⁿ n!)^{-1/2} Hₙ(x) e^{-x²/2}`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod detectors;
pub mod error;
pub mod fock;
pub mod gate;
pub mod numerics;
pub mod optics;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
pub use fock::{
    apply_unitary, expect, partial_trace, tensor, DensityOperator, EmbeddedOperator, FockKet,
    ModeOperator, OperatorKind, TensorProduct,
};

pub use num_complex::Complex64 as C64;
