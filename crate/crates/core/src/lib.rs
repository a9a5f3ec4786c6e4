//! Statevector laboratory for studying how classical data encodings shape
//! variational quantum circuits.
//!
//! The crate is organised bottom-up:
//!
//! * [`statevector`]: dense few-qubit simulation, gates and Möttönen state preparation.
//! * [`encodings`]: the encoding block, the basic entangling ansatz and data reuploading.
//! * [`metrics`]: expressibility, Meyer-Wallach entanglement capability and
//!   normalized effective dimension.
//! * [`fourier`]: univariate Fourier spectra of circuit outputs and the
//!   degrees-of-freedom count for parallel ansätze.
//! * [`qccnn`]: the hybrid quantum-classical convolutional classifier and its training loop.

pub mod encodings;
pub mod error;
pub mod fourier;
pub mod metrics;
pub mod qccnn;
pub mod rng;
pub mod statevector;

pub use encodings::{AnsatzKind, CircuitSpec, EncodingKind, ParamVector};
pub use error::{QclabError, Result};
pub use statevector::{Gate, Statevector};
