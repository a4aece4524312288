//! Exact-numerics simulator for confined charges and string breaking in the
//! Z2 lattice gauge theory, realized as a long-range quantum Ising chain.
//!
//! Module map:
//! - [`model`]: Ising Hamiltonian, virtual static environments, classical energies.
//! - [`duality`]: gauge/spin state mapping and a spectral oracle for the duality.
//! - [`evolve`]: Krylov quench dynamics, observables, shot noise and fits.
//! - [`twobody`]: perturbative two-charge description of string breaking.
//! - [`thermal`]: canonical Gibbs baselines from a dense spectrum.
//! - [`couplings`]: trapped-ion coupling synthesis and profile fits.
//! - [`scenario`]: TOML scenario runner writing CSV/JSON artifacts.
//! - [`acceptance`]: the acceptance suite used by `stringsim accept`.

pub mod acceptance;
pub mod couplings;
pub mod duality;
pub mod error;
pub mod evolve;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod scenario;
pub mod thermal;
pub mod twobody;

pub use error::{Error, Result};
pub use evolve::{SpatiotemporalMap, Wavefunction};
pub use model::{CouplingMatrix, Environment, HamiltonianSpec, IsingOperator, SpinConfiguration};
