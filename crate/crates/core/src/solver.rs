//! Static equilibrium solver.
//!
//! The unknowns are `(beta, gamma, twist)` for every subsegment. An outer
//! loop refreshes the friction-reduced tendon tensions on the current shape;
//! an inner damped Newton iteration solves the moment balance with those
//! tensions frozen.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, SolveError};
use crate::geometry::{ChainFrames, Configuration, HomTransform, RobotParams};
use crate::statics::{
    norm, propagate_all, residual_from_frames, FrictionLaw, LoadCase, TendonForceSet,
    TensionProfile,
};

/// Sufficient-decrease constant of the backtracking line search.
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Converged when the moment residual norm drops below this (N m).
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    /// Smallest line-search step before the Newton iteration gives up.
    pub damping_min: f64,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
    /// Largest tension change (N) accepted between friction refreshes.
    pub friction_loop_tol: f64,
    pub max_friction_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_newton_iters: 100,
            damping_min: 1e-4,
            fd_step: 1e-7,
            friction_loop_tol: 1e-6,
            max_friction_iters: 20,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolveError> {
        let positive = [
            ("residual_tol", self.residual_tol),
            ("damping_min", self.damping_min),
            ("fd_step", self.fd_step),
            ("friction_loop_tol", self.friction_loop_tol),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(SolveError::InvalidSettings(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        if self.damping_min > 1.0 {
            return Err(SolveError::InvalidSettings(
                "damping_min must not exceed 1".into(),
            ));
        }
        if self.max_newton_iters == 0 || self.max_friction_iters == 0 {
            return Err(SolveError::InvalidSettings(
                "iteration budgets must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Iterations {
    /// Newton steps summed over all friction refreshes.
    pub newton: usize,
    /// Friction refreshes (outer iterations).
    pub friction: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub config: Configuration,
    /// Norm of the residual with tensions propagated on `config` (N m).
    pub residual_norm: f64,
    pub tensions: TensionProfile,
    pub tip_pose: HomTransform,
    pub converged: bool,
    pub iterations: Iterations,
    /// Largest tension change after each friction refresh.
    pub friction_deltas: Vec<f64>,
}

impl EquilibriumSolution {
    pub fn tip_norm(&self) -> f64 {
        self.tip_pose.translation.norm()
    }

    /// True when the tension change did not grow over the last three
    /// friction refreshes.
    pub fn friction_loop_settled(&self) -> bool {
        let d = &self.friction_deltas;
        let tail = &d[d.len().saturating_sub(3)..];
        tail.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Residual of the moment balance on a flat unknown vector, tensions frozen.
struct FrozenProblem<'a> {
    tensions: &'a TensionProfile,
    load: &'a LoadCase,
    params: &'a RobotParams,
}

impl FrozenProblem<'_> {
    /// `None` for unknowns outside the valid configuration set.
    fn residual(&self, x: &[f64]) -> Result<Option<Vec<f64>>, ModelError> {
        let config = Configuration::from_unknowns(x);
        if config.validate(self.params).is_err() {
            return Ok(None);
        }
        let frames = ChainFrames::new(&config, self.params.subsegment_length);
        residual_from_frames(&config, &frames, self.tensions, self.load, self.params).map(Some)
    }

    fn jacobian(&self, x: &[f64], fd_step: f64) -> Result<DMatrix<f64>, SolveError> {
        let n = x.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut probe = x.to_vec();
        for q in 0..n {
            let h = fd_step * x[q].abs().max(1.0);
            probe[q] = x[q] + h;
            let plus = self.residual(&probe)?;
            probe[q] = x[q] - h;
            let minus = self.residual(&probe)?;
            probe[q] = x[q];
            let (Some(plus), Some(minus)) = (plus, minus) else {
                return Err(SolveError::NonFiniteJacobian { unknown: q });
            };
            for r in 0..n {
                let d = (plus[r] - minus[r]) / (2.0 * h);
                if !d.is_finite() {
                    return Err(SolveError::NonFiniteJacobian { unknown: q });
                }
                jac[(r, q)] = d;
            }
        }
        Ok(jac)
    }
}

fn condition_estimate(jac: &DMatrix<f64>) -> f64 {
    let sv = jac.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

struct NewtonOutcome {
    x: Vec<f64>,
    iterations: usize,
}

/// Damped Newton iteration with backtracking on the residual norm.
fn newton(
    problem: &FrozenProblem<'_>,
    mut x: Vec<f64>,
    target: f64,
    settings: &SolverSettings,
) -> Result<NewtonOutcome, SolveError> {
    let mut r = problem.residual(&x)?.ok_or_else(|| {
        SolveError::Model(ModelError::InvalidState {
            index: 0,
            reason: "initial guess outside the valid set".into(),
        })
    })?;
    let mut r_norm = norm(&r);
    let mut iterations = 0;
    while r_norm > target && iterations < settings.max_newton_iters {
        let jac = problem.jacobian(&x, settings.fd_step)?;
        let rhs = -DVector::from_column_slice(&r);
        let step = jac
            .clone()
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| SolveError::SingularJacobian {
                condition: condition_estimate(&jac),
            })?;
        iterations += 1;

        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= settings.damping_min {
            let trial: Vec<f64> = x
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + alpha * d)
                .collect();
            if let Some(rt) = problem.residual(&trial)? {
                let nt = norm(&rt);
                if nt <= (1.0 - ARMIJO * alpha) * r_norm {
                    accepted = Some((trial, rt, nt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, rt, nt)) => {
                x = trial;
                r = rt;
                r_norm = nt;
            }
            None => {
                log::debug!("line search stalled at residual {r_norm:.3e}");
                break;
            }
        }
    }
    Ok(NewtonOutcome { x, iterations })
}

fn check_inputs(
    forces: &TendonForceSet,
    load: &LoadCase,
    params: &RobotParams,
    settings: &SolverSettings,
) -> Result<(), SolveError> {
    params.validate()?;
    forces.validate(params)?;
    load.validate()?;
    settings.validate()
}

/// Finite-difference Jacobian of the moment residual at `config`.
///
/// Tensions are propagated once on `config` and held fixed, matching the
/// system the Newton iteration solves. Central differences with step
/// `fd_step * max(|x|, 1)` per unknown.
pub fn numeric_jacobian(
    config: &Configuration,
    forces: &TendonForceSet,
    load: &LoadCase,
    params: &RobotParams,
    settings: &SolverSettings,
) -> Result<DMatrix<f64>, SolveError> {
    check_inputs(forces, load, params, settings)?;
    config.validate(params)?;
    let frames = ChainFrames::new(config, params.subsegment_length);
    let tensions = propagate_all(&frames, forces, params, FrictionLaw::default());
    let problem = FrozenProblem {
        tensions: &tensions,
        load,
        params,
    };
    problem.jacobian(&config.to_unknowns(), settings.fd_step)
}

/// Static configuration for the given base tensions and load.
///
/// Starts from `initial` when given, otherwise from the straight shape.
/// Solutions that miss the tolerance are returned with `converged = false`.
pub fn solve_equilibrium(
    forces: &TendonForceSet,
    load: &LoadCase,
    params: &RobotParams,
    settings: &SolverSettings,
    initial: Option<&Configuration>,
) -> Result<EquilibriumSolution, SolveError> {
    check_inputs(forces, load, params, settings)?;
    let start = match initial {
        Some(c) => {
            c.validate(params)?;
            c.clone()
        }
        None => Configuration::straight(params.num_subsegments()),
    };

    let law = FrictionLaw::default();
    let frames = ChainFrames::new(&start, params.subsegment_length);
    let mut tensions = propagate_all(&frames, forces, params, law);
    let mut x = start.to_unknowns();
    let mut iterations = Iterations::default();
    let mut deltas = Vec::new();
    let mut converged = false;
    let mut residual_norm;
    let newton_target = 1e-2 * settings.residual_tol;

    loop {
        iterations.friction += 1;
        let problem = FrozenProblem {
            tensions: &tensions,
            load,
            params,
        };
        let outcome = newton(&problem, x, newton_target, settings)?;
        x = outcome.x;
        iterations.newton += outcome.iterations;

        let config = Configuration::from_unknowns(&x);
        let frames = ChainFrames::new(&config, params.subsegment_length);
        let refreshed = propagate_all(&frames, forces, params, law);
        let delta = refreshed.max_abs_diff(&tensions);
        deltas.push(delta);
        tensions = refreshed;
        residual_norm = norm(&residual_from_frames(
            &config, &frames, &tensions, load, params,
        )?);

        if delta < settings.friction_loop_tol && residual_norm < settings.residual_tol {
            converged = true;
            break;
        }
        if iterations.friction >= settings.max_friction_iters {
            break;
        }
    }

    let config = Configuration::from_unknowns(&x);
    let tip_pose = ChainFrames::new(&config, params.subsegment_length)
        .global
        .last()
        .copied()
        .unwrap_or_else(HomTransform::identity);
    let mut solution = EquilibriumSolution {
        config,
        residual_norm,
        tensions,
        tip_pose,
        converged,
        iterations,
        friction_deltas: deltas,
    };
    if solution.converged && !solution.friction_loop_settled() {
        log::warn!("friction loop converged without settling; flagging solve");
        solution.converged = false;
    }
    if !solution.converged {
        log::debug!(
            "solve not converged: residual {:.3e}, {} friction refreshes",
            solution.residual_norm,
            solution.iterations.friction
        );
    }
    Ok(solution)
}
