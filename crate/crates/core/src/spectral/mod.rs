//! Fourier pseudo-spectral machinery on `T^d`: fields, Helmholtz and Leray
//! operators, nonlinear tendencies, time stepping and energy diagnostics.

pub mod energy;
pub mod field;
pub mod grid;
pub mod io;
pub mod path;
pub mod random;
pub mod rhs;
pub mod solver;

pub use energy::{energy_report, write_energy_csv, EnergyRow};
pub use field::{SparseField, SpectralField};
pub use grid::{wavenumber, SpectralGrid};
pub use io::{read_snapshot, write_snapshot, SnapshotHeader};
pub use path::DriftPath;
pub use random::{random_field, random_solenoidal};
pub use rhs::{dealias_cutoff, viscous_term, Equation, Nonlinear, PseudoSpectral};
pub use solver::{Solver, SolverConfig};
