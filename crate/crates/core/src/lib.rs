//! Simulator for a programmable square lattice of hard-core photons in an
//! artificial magnetic field.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] - geometry, Peierls phases, couplings and on-site potentials.
//! * [`basis`], [`hamiltonian`], [`spectrum`] - photon-number sectors, sparse
//!   Hamiltonian assembly and dense exact diagonalization.
//! * [`schedule`], [`evolve`] - piecewise-linear drive schedules and fixed-step
//!   RK4 integration of pure states and dephasing Lindblad dynamics.
//! * [`observables`] - densities, g2 maps, bond currents, bulk density, fidelity.
//! * [`protocols`] - reproducible experiment procedures built on the above.
//! * [`record`] - tabular experiment records with deterministic CSV/JSON output.
//!
//! Units: configuration and reports use ordinary frequency (MHz) and time (us).
//! Internally every Hamiltonian carries the factor 2*pi, i.e. rad/us.

pub mod basis;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod hamiltonian;
pub mod lattice;
pub mod observables;
pub mod protocols;
pub mod record;
pub mod schedule;
pub mod spectral;
pub mod spectrum;
pub mod state;

pub use num_complex::Complex64 as C64;

pub use basis::SectorBasis;
pub use error::{Error, Result};
pub use evolve::{Dephasing, EvolveOptions, Observable, Trajectory};
pub use hamiltonian::{build_hamiltonian, HamiltonianTemplate, SparseHermitian};
pub use lattice::{Couplings, GaugeField, Lattice, Potential};
pub use record::ExperimentRecord;
pub use schedule::DriveSchedule;
pub use spectrum::{diagonalize, SpectrumResult};
pub use state::{DensityMatrix, QuantumState, StateVector};

/// Hardware cap on the hopping rate, MHz.
pub const J_MAX_MHZ: f64 = 5.0;

/// Default integrator step, us.
pub const DEFAULT_DT_US: f64 = 2e-4;
