//! Path signatures, randomised unitary path developments and their kernels.
//!
//! The crate covers four routes to the GUE signature kernel: the free
//! semicircular law expanded against the signature, a Goursat-type integral
//! equation, finite-N Monte Carlo over GUE matrices, and a simulated
//! one-clean-qubit circuit built from Trotterised random Pauli rotations.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod kernels;
pub mod law;
pub mod path;
pub mod pauli;
pub mod qsim;
pub mod rng;
pub mod signature;
pub mod words;

pub use error::{Error, Result};
pub use path::PiecewiseLinearPath;
pub use signature::{signature_coefficient, truncated_signature, TensorSeries};
pub use words::Word;
