//! Monte-Carlo sampling of the reachable static workspace.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{OptimizeError, SolveError};
use crate::geometry::{chain_transforms, RobotParams};
use crate::optimizer::ForceBounds;
use crate::solver::{solve_equilibrium, EquilibriumSolution, SolverSettings};
use crate::statics::{LoadCase, TendonForceSet};

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceSample {
    pub sample_index: usize,
    pub forces: TendonForceSet,
    pub tip_position: Vector3<f64>,
    pub tip_norm: f64,
    pub converged: bool,
    pub residual_norm: f64,
    /// Present when the solver returned a configuration.
    pub solution: Option<EquilibriumSolution>,
}

/// Draws `n` force sets uniformly inside `bounds` and solves each.
///
/// Non-converged samples are kept and flagged. Output is ordered by
/// `sample_index` and depends only on `seed`.
pub fn sample_workspace(
    n: usize,
    bounds: &ForceBounds,
    load: &LoadCase,
    params: &RobotParams,
    settings: &SolverSettings,
    seed: u64,
) -> Result<Vec<WorkspaceSample>, OptimizeError> {
    params.validate()?;
    load.validate()?;
    settings.validate()?;
    bounds.validate(params)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<TendonForceSet> = (0..n)
        .map(|_| {
            TendonForceSet::new(
                bounds
                    .lower
                    .iter()
                    .zip(&bounds.upper)
                    .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                    .collect(),
            )
        })
        .collect();

    Ok(draws
        .into_par_iter()
        .enumerate()
        .map(|(sample_index, forces)| {
            match solve_equilibrium(&forces, load, params, settings, None) {
                Ok(s) => WorkspaceSample {
                    sample_index,
                    tip_position: s.tip_pose.translation,
                    tip_norm: s.tip_norm(),
                    converged: s.converged,
                    residual_norm: s.residual_norm,
                    forces,
                    solution: Some(s),
                },
                Err(e) => {
                    log::debug!("sample {sample_index} failed: {e}");
                    WorkspaceSample {
                        sample_index,
                        forces,
                        tip_position: Vector3::from_element(f64::NAN),
                        tip_norm: f64::NAN,
                        converged: false,
                        residual_norm: f64::NAN,
                        solution: None,
                    }
                }
            }
        })
        .collect())
}

/// Fraction of samples whose solve converged (1 for an empty list).
pub fn converged_fraction(samples: &[WorkspaceSample]) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    samples.iter().filter(|s| s.converged).count() as f64 / samples.len() as f64
}

/// Disk centers from the base (origin) to the tip.
pub fn shape_polyline(
    solution: &EquilibriumSolution,
    params: &RobotParams,
) -> Result<Vec<Vector3<f64>>, SolveError> {
    if !solution.converged {
        return Err(SolveError::NotConverged {
            residual_norm: solution.residual_norm,
        });
    }
    let chain = chain_transforms(&solution.config, params)?;
    let mut points = Vec::with_capacity(chain.len() + 1);
    points.push(Vector3::zeros());
    points.extend(chain.iter().map(|t| t.translation));
    Ok(points)
}
