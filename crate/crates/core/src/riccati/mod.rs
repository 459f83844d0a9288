//! Generalized Riccati equations for `(phi, psi)` and the transforms built on them.

mod boundary;
mod dopri;
mod rhs;
mod solve;

pub use boundary::{boundary_limit, BoundaryLimit, Extrapolation, ExtrapolationChoice, LimitLevel};
pub use dopri::DenseSegment;
pub use rhs::{rhs_phi, rhs_psi, RiccatiRhs, RiccatiSystem, TruncatedRhs};
pub use solve::{
    characteristic_function, generator_exp, integrate, solve, solve_boundary, transform, transform_with_solution,
    Diagnostics, RiccatiSolution, SolverConfig,
};
