//! Static modeling and feasible-static-workspace optimization of a
//! multi-segment tendon-driven continuum robot.

pub mod error;
pub mod geometry;
pub mod optimizer;
pub mod solver;
pub mod statics;
pub mod workspace;

pub use error::{ModelError, OptimizeError, SolveError};
pub use geometry::{
    chain_transforms, curvature_polar, subsegment_transform, tendon_anchor, tip_norm,
    tip_transform, Configuration, HomTransform, RobotParams, SubsegmentState, TendonId,
};
pub use optimizer::{
    fsw_objective, ga_engine_selftest, ga_optimize, penalty_objective, run_ga, ForceBounds,
    GAConfig, GAResult, GaRun, GenerationStats, TestFunction,
};
pub use solver::{
    numeric_jacobian, solve_equilibrium, EquilibriumSolution, Iterations, SolverSettings,
};
pub use statics::{
    elastic_moments, equilibrium_residual, external_tip_wrench, friction_coefficient,
    gravity_wrench, local_bend_angle, propagate_tensions, residual_with_tensions,
    tendon_wrench_and_propagate, DiskWrench, FrictionLaw, LoadCase, TendonForceSet, TensionProfile,
};
pub use workspace::{converged_fraction, sample_workspace, shape_polyline, WorkspaceSample};
