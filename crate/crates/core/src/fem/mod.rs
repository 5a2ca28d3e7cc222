//! Finite element spaces, assembly and linear solves.

pub mod assembly;
pub mod coefficient;
pub mod field;
pub mod solve;
pub mod sparse;

pub use assembly::{
    assemble_interface_load, assemble_load, assemble_mass_vector, assemble_stiffness, assemble_volume_load,
    LoadData, Region,
};
pub use coefficient::{verify_ellipticity, CoefficientField, EllipticityReport, SubdomainData};
pub use field::{BasisOrder, DiscreteField, FeSpace};
pub use solve::{solve_dirichlet, solve_mean_zero, MeanZeroSolution, SolverOptions, SolverStats};
pub use sparse::CsrMatrix;
