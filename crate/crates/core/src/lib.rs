//! Fourth-order ghost-point finite differences for the Poisson equation
//! `-Δu = f` on domains given by a level set, embedded in `[-1, 1]²`.
//!
//! The domain boundary is split into a Dirichlet and a Neumann part. Nodes
//! just outside the domain carry ghost unknowns whose equations impose the
//! boundary condition at the projection of the ghost onto the zero level set,
//! through biquartic interpolation on an upwind 5×5 stencil.
//!
//! Three discretizations are provided (see [`Method`]): two based on the
//! 9-point star Laplacian and one on the compact box (Mehrstellen) stencil.
//!
//! ```
//! use ghost_elliptic::{run_single, DomainSpec, Method, SinProduct, StudyConfig};
//!
//! let run = run_single(Method::M3, &DomainSpec::circle(), &SinProduct, 80, &StudyConfig::default())
//!     .unwrap();
//! assert!(run.row.e1_u < 1e-4);
//! assert!(run.report.residual_norm <= 1e-12);
//! ```

// `!(a > b)` comparisons deliberately send NaN down the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod boundary;
pub mod domains;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod method;
pub mod solver;

pub use analysis::{
    fit_growth, fit_order, gradient_field, relative_error, relative_gradient_error,
    run_convergence_study, run_convergence_study_with, run_single, ConvergenceReport, FittedOrders,
    GradientField, Norm, ProjectionMode, SingleRun, StudyConfig, StudyFailure, StudyRow,
    CSV_HEADER,
};
pub use assembly::{
    assemble, extend_source, ghost_row, interior_row_box, interior_row_star, Assembled,
    AssemblyOptions, Manufactured, ProblemData, Row, RowKind, SourceMode, SparseSystem,
};
pub use boundary::{
    build_ghost_records, project_to_boundary, quadrant_signs, small_pivot_fraction, upwind_stencil,
    write_ghost_diagnostics, BcKind, BcSplit, BoundaryOptions, GhostRecord, LevelSet,
    LevelSetSource, ProjectionOptions, UpwindStencil,
};
pub use domains::{
    boundary_margin_check, parse_levelset, read_levelset, sample_levelset, write_levelset, Circle,
    DomainSpec, ExactSolution, Flower, LogProduct, Polynomial, Shape, SinProduct, SolutionId,
};
pub use error::{Error, Node, Result};
pub use geometry::{
    classify_points, close_ghost_set, neighbor_set, Classification, GridField, GridSpec,
    NeighborKind, NodeClass, StencilFamily,
};
pub use interp::{
    biquartic_eval, biquartic_grad, quartic_derivative_weights, quartic_value_weights,
};
pub use method::Method;
pub use solver::{condition_estimate, solve, SolveOptions, SolveReport, SolverKind};
