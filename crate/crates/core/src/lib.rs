//! Exact Fock-basis simulation of multi-crystal two-mode squeezing
//! interferometers.
//!
//! States are sparse maps from occupation vectors to complex amplitudes.
//! Two-mode squeezers act through their closed-form Fock-basis matrix
//! elements, so no Hilbert-space dimension has to be fixed up front; every
//! truncation is tracked as an ℓ2 tail bound on the state.
//!
//! ```
//! use sqfock::{amplitude, standard_circuit, CircuitKind, OccupationVector};
//!
//! let circuit = standard_circuit(CircuitKind::SingleSeeded, &[1f64.asinh()]).unwrap();
//! let pattern = OccupationVector::new(&[1, 1]).unwrap();
//! let a = amplitude(&circuit, &pattern, &CircuitKind::SingleSeeded.default_policy()).unwrap();
//! assert!(a.amplitude.norm() < 1e-12);
//! ```

pub mod closed_forms;
pub mod engine;
pub mod error;
pub mod fock;
pub mod interferometer;
pub mod oracle;
pub mod series;
mod special;
pub mod zeros;

pub use engine::{
    apply_phase, apply_squeezer, pair_coefficient, squeeze_pair_coefficients, squeezed_vacuum, PairExpansion,
    PhaseShifter, TwoModeSqueezer,
};
pub use error::{Error, Result};
pub use fock::{Amplitude, OccupationVector, SparseFockState, TruncationPolicy, MAX_MODES};
pub use interferometer::{amplitude, run, standard_circuit, AmplitudeResult, Circuit, CircuitKind, Element};
