//! Design and validation toolkit for engineered Heisenberg-model dynamics in a
//! laser-driven chain of trapped ions.
//!
//! The crate covers the full desk-scale workflow:
//!
//! * [`ion_chain`] — equilibrium positions, transverse/axial normal modes,
//!   Lamb-Dicke parameters and Raman-beam geometry;
//! * [`target`] — target spin Hamiltonians (lattice Schwinger model in
//!   pure-spin form, 2D XY and dual-Ising models) behind a name-keyed registry;
//! * [`coupling`] — the forward map from laser drives and normal modes to
//!   effective spin-spin coupling matrices and local fields;
//! * [`optimizer`] — the inverse problem: beatnote schedules and per-ion Rabi
//!   amplitudes that realize a requested coupling matrix under experimental
//!   constraints;
//! * [`magnus`] — closed-form evaluation of the second-order evolution
//!   exponent, secular extraction of couplings, and error-budget reports;
//! * [`dynamics`] — exact state-vector evolution, vacuum-persistence series
//!   and perturbed-Hamiltonian ensemble bands;
//! * [`raman`] — angular-momentum algebra and the polarization/detuning
//!   solution that removes the bias force term.
//!
//! All frequencies are stored internally as angular frequencies in rad/s;
//! conversion from the Hz-based file formats happens in [`io`] only.

pub mod coupling;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod ion_chain;
pub mod magnus;
pub mod optimizer;
pub mod raman;
pub mod target;
pub mod units;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
