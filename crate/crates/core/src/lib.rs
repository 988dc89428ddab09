//! Numerical laboratory for the fibre Hamiltonians of a Dirac particle
//! coupled to a quantized radiation field on a finite momentum grid.

pub mod cutoff;
pub mod dirac;
pub mod error;
pub mod fock;
pub mod grid;
pub mod lab;
pub mod model;
pub mod operator;
pub mod polarization;
pub mod report;
pub mod second_quant;
pub mod spectral;
pub mod symmetry;

pub use cutoff::CutoffProfile;
pub use dirac::{dirac_matrices, DiracAlgebra};
pub use error::{Error, Result};
pub use fock::{build_fock_basis, FockBasis, ModeAmplitude};
pub use grid::{build_cylindrical_grid, Mode, ModeGrid, SymmetryTag};
pub use lab::{ground_energy, EnergyLab, EnergySurface, ScanSpec};
pub use model::{assemble, coupling_amplitudes, FibreOperators, PolaronHamiltonian, PolaronModel, PolaronParams};
pub use operator::{OperatorMatrix, C64};
pub use polarization::{make_polarization, PolarizationField, PolarizationKind};
pub use report::{CheckReport, Status, Tolerances};
pub use spectral::{degeneracy_clusters, dense_spectrum, krylov_lowest, SolverSettings, SpectrumResult};
