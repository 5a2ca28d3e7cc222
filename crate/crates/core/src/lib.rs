//! Interface-fitted finite elements for elliptic transmission problems in 2D.
//!
//! The crate solves
//!
//! ```text
//!   D_k(A^{kl} D_l u) = div F + f     in each subdomain,
//!   u = 0                             on the outer boundary,
//!   [u] = 0,  [(A∇u − F)·ν] = g_j     across every interface Γ_j,
//! ```
//!
//! where `ν` points into the enclosed subdomain and `[·]` is inner trace minus
//! outer trace. Two solution routes are provided: a single weak-form solve
//! with interface line loads ([`transmission::solve_direct`]) and a reduction
//! that first solves a pure Neumann problem for the Laplacian inside every
//! inclusion and then one divergence-form Dirichlet problem with piecewise
//! data ([`transmission::solve_by_reduction`]).
//!
//! The [`analysis`] module measures what the regularity theory predicts:
//! norms and errors against manufactured solutions, recovered flux jumps,
//! sampled Hölder quotients of the discrete gradient, mean oscillation decay
//! and the piecewise L2 mean-oscillation modulus of coefficients.
//!
//! Everything here is `no_std` with `alloc`; IO, configuration and the
//! command line live in the companion `transmission-cli` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
mod delaunay;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod math;
pub mod mesh;
pub mod quadrature;
pub mod transmission;

pub use error::{Error, Result};
pub use geometry::{CurveShape, DomainPartition, InterfaceCurve, Location, OuterBoundary, Point};
pub use mesh::TriMesh;
