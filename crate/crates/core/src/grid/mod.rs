//! Staggered-grid solvers on a box with no-slip walls: Stokes, Brinkman,
//! steady Navier–Stokes by damped Picard, and perforated domains by volume
//! penalization.

pub mod analysis;
pub mod field;
pub mod io;
pub mod layout;
pub mod multigrid;
pub mod ops;
pub mod poisson;
pub mod stokes;

pub use analysis::{check_h1l4, poincare_and_nu0, weak_residual, L4Check, PoincareNu0};
pub use field::StaggeredField;
pub use layout::GridLayout;
pub use stokes::{
    grid_l2_norm, solve_brinkman, solve_perforated, solve_stokes_with_boundary, BrinkmanProblem, BrinkmanSolution,
    PerforatedSolution, SolveStats, SolverConfig, StokesOperator,
};
