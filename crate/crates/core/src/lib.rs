//! Ground states of the two-qubit quantum Rabi model.
//!
//! Two independent routes:
//!
//! * a variational polaron ansatz built from displaced, width-renormalized
//!   Gaussian packets ([`ansatz`], [`optimizer`]), and
//! * exact diagonalization in a truncated Fock basis ([`ed`]),
//!
//! plus observables for either route ([`observables`]) and the sweep/report
//! machinery behind the `rabi2q` command-line tool ([`cli`]).

pub mod ansatz;
pub mod cli;
pub mod ed;
pub mod error;
pub mod gaussian;
pub mod model;
pub mod observables;
pub mod optimizer;

#[cfg(test)]
mod quadrature;

pub use ansatz::PolaronAnsatz;
pub use ed::{converged_ground, ground_state, FockHamiltonian, GroundState};
pub use error::{Error, Result};
pub use gaussian::GaussianPacket;
pub use model::{DerivedScales, ModelParams};
pub use observables::ObservableSet;
pub use optimizer::{minimize, OptimConfig, OptimResult};
