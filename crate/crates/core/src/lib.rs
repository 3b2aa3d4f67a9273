//! Sudden trap-reduction preparation of atom-number (Fock) states for
//! spin-polarized fermions and Tonks-Girardeau gases in one dimension.
//!
//! The pipeline: build the initial and final traps ([`trap`]), compute their
//! bound spectra by finite differences ([`spectrum`]), occupy the initial
//! levels ([`occupation`]), and project onto the final bound subspace to get
//! the full atom-number distribution ([`counting`]). [`experiments`] wires
//! these into scenarios and parameter sweeps; [`io`] holds the configuration
//! schema and the CSV/JSON writers used by the `fockprep` binary.

pub mod counting;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod occupation;
pub mod spectrum;
pub mod trap;
pub mod tridiag;

pub use counting::{CountingStatistics, KernelMatrix, OverlapMatrix};
pub use error::{Error, Result};
pub use grid::{Grid, GridPolicy};
pub use occupation::OccupationState;
pub use spectrum::{BoundSpectrum, TridiagonalHamiltonian};
pub use trap::{TrapShape, TrapSpec};
