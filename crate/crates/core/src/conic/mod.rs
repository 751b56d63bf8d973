//! Conic standard form, the subproblem lowerings and the solver backend.

mod lowering;
mod program;
mod solver;

pub use lowering::{build_beamforming_program, build_boresight_program, BeamformingProgram, BoresightProgram};
pub use program::{AffineExpr, ConicProgram, Constraint};
pub use solver::{solve, solve_with, SolveOutcome, SolveStatus, SolverSettings, FEASIBILITY_TOL};
