//! Real-coded genetic algorithm and the reach objective.
//!
//! The GA minimizes; the robot objective is the reciprocal of the tip
//! distance, so minimizing it maximizes reach. All random draws of a
//! generation happen before its fitness evaluations are dispatched, so
//! results do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::OptimizeError;
use crate::geometry::{Configuration, RobotParams};
use crate::solver::{solve_equilibrium, EquilibriumSolution, SolverSettings};
use crate::statics::{LoadCase, TendonForceSet};

/// Penalty multiplier applied to the straight-pose objective for failed solves.
pub const PENALTY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GAConfig {
    pub population_size: usize,
    /// Generations evaluated, counting the initial population.
    pub max_generations: usize,
    /// Best-objective improvement below which a generation counts as stalled.
    pub convergence_tol: f64,
    /// Consecutive stalled generations that end the run.
    pub stall_generations: usize,
    pub elitism_count: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_sigma: f64,
    pub rng_seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            max_generations: 50,
            convergence_tol: 1e-6,
            stall_generations: 1,
            elitism_count: 1,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_sigma: 0.05,
            rng_seed: 0,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let fail = |m: String| Err(OptimizeError::InvalidConfig(m));
        if self.population_size < 2 {
            return fail("population_size must be at least 2".into());
        }
        if self.max_generations == 0 {
            return fail("max_generations must be at least 1".into());
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return fail(format!(
                "convergence_tol must be positive, got {}",
                self.convergence_tol
            ));
        }
        if self.stall_generations == 0 {
            return fail("stall_generations must be at least 1".into());
        }
        if self.elitism_count >= self.population_size {
            return fail("elitism_count must be smaller than population_size".into());
        }
        if self.tournament_size == 0 {
            return fail("tournament_size must be at least 1".into());
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return fail(format!("{name} must lie in [0, 1], got {rate}"));
            }
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            return fail(format!(
                "mutation_sigma must be non-negative, got {}",
                self.mutation_sigma
            ));
        }
        Ok(())
    }
}

/// Box bounds on the base tensions (N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ForceBounds {
    pub fn uniform(count: usize, lower: f64, upper: f64) -> Self {
        Self {
            lower: vec![lower; count],
            upper: vec![upper; count],
        }
    }

    /// `[0, 10]` N on every tendon.
    pub fn default_for(params: &RobotParams) -> Self {
        Self::uniform(params.num_tendons(), 0.0, 10.0)
    }

    pub fn validate(&self, params: &RobotParams) -> Result<(), OptimizeError> {
        let n = params.num_tendons();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(OptimizeError::InvalidBounds(format!(
                "expected {n} lower and upper bounds, got {} and {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo < hi) {
                return Err(OptimizeError::InvalidBounds(format!(
                    "tendon {}: need 0 <= lower < upper, got [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, forces: &TendonForceSet) -> bool {
        forces
            .base_tensions
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(f, (lo, hi))| lo <= f && f <= hi)
    }
}

/// Best and mean objective of one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub best: f64,
    pub mean: f64,
}

/// Outcome of a GA run on an arbitrary fitness function.
#[derive(Debug, Clone, PartialEq)]
pub struct GaRun<P> {
    pub best_genes: Vec<f64>,
    pub best_objective: f64,
    pub best_payload: P,
    pub history: Vec<GenerationStats>,
    pub generations_run: usize,
    /// True when the run stopped on the improvement tolerance rather than
    /// the generation budget.
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct Individual<P> {
    genes: Vec<f64>,
    objective: f64,
    payload: P,
}

/// Offspring recipe drawn before evaluation.
struct Child {
    genes: Vec<f64>,
    parent: usize,
}

struct Breeder<'a> {
    lower: &'a [f64],
    upper: &'a [f64],
    ga: &'a GAConfig,
    rng: ChaCha8Rng,
    unit_normal: Normal<f64>,
}

impl Breeder<'_> {
    fn tournament<P>(&mut self, population: &[Individual<P>]) -> usize {
        let mut best = self.rng.random_range(0..population.len());
        for _ in 1..self.ga.tournament_size {
            let challenger = self.rng.random_range(0..population.len());
            if population[challenger].objective < population[best].objective {
                best = challenger;
            }
        }
        best
    }

    fn random_genes(&mut self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(self.upper)
            .map(|(lo, hi)| self.rng.random_range(*lo..=*hi))
            .collect()
    }

    fn mutate(&mut self, genes: &mut [f64]) {
        for (g, (lo, hi)) in genes.iter_mut().zip(self.lower.iter().zip(self.upper)) {
            if self.rng.random_bool(self.ga.mutation_rate) {
                let step =
                    self.unit_normal.sample(&mut self.rng) * self.ga.mutation_sigma * (hi - lo);
                *g = (*g + step).clamp(*lo, *hi);
            }
        }
    }

    fn offspring<P>(&mut self, population: &[Individual<P>], count: usize) -> Vec<Child> {
        let mut children = Vec::with_capacity(count);
        while children.len() < count {
            let a = self.tournament(population);
            let b = self.tournament(population);
            let mut first = population[a].genes.clone();
            let mut second = population[b].genes.clone();
            if self.rng.random_bool(self.ga.crossover_rate) {
                for (x, y) in first.iter_mut().zip(second.iter_mut()) {
                    if self.rng.random_bool(0.5) {
                        std::mem::swap(x, y);
                    }
                }
            }
            self.mutate(&mut first);
            self.mutate(&mut second);
            children.push(Child {
                genes: first,
                parent: a,
            });
            if children.len() < count {
                children.push(Child {
                    genes: second,
                    parent: b,
                });
            }
        }
        children
    }
}

fn stats<P>(population: &[Individual<P>]) -> GenerationStats {
    let best = population
        .iter()
        .map(|i| i.objective)
        .fold(f64::INFINITY, f64::min);
    let mean = population.iter().map(|i| i.objective).sum::<f64>() / population.len() as f64;
    GenerationStats { best, mean }
}

fn sort_population<P>(population: &mut [Individual<P>]) {
    // Stable sort keeps evaluation order among ties.
    population.sort_by(|a, b| a.objective.total_cmp(&b.objective));
}

/// Minimizes `fitness` over the box `[lower, upper]`.
///
/// `fitness` receives the genes and the payload of the individual's first
/// parent (none for the initial population) and returns the objective plus
/// a payload kept with the individual.
pub fn run_ga<P, F>(
    lower: &[f64],
    upper: &[f64],
    ga: &GAConfig,
    fitness: F,
) -> Result<GaRun<P>, OptimizeError>
where
    P: Clone + Send + Sync,
    F: Fn(&[f64], Option<&P>) -> (f64, P) + Sync,
{
    ga.validate()?;
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(OptimizeError::InvalidBounds(
            "bounds must be non-empty and matched".into(),
        ));
    }
    if lower
        .iter()
        .zip(upper)
        .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi))
    {
        return Err(OptimizeError::InvalidBounds(
            "need finite lower < upper".into(),
        ));
    }

    let mut breeder = Breeder {
        lower,
        upper,
        ga,
        rng: ChaCha8Rng::seed_from_u64(ga.rng_seed),
        unit_normal: Normal::new(0.0, 1.0).expect("unit normal"),
    };

    let initial: Vec<Vec<f64>> = (0..ga.population_size)
        .map(|_| breeder.random_genes())
        .collect();
    let mut population: Vec<Individual<P>> = initial
        .into_par_iter()
        .map(|genes| {
            let (objective, payload) = fitness(&genes, None);
            Individual {
                genes,
                objective,
                payload,
            }
        })
        .collect();
    sort_population(&mut population);

    let mut history = vec![stats(&population)];
    let mut best = population[0].clone();
    let mut stalled = 0;
    let mut converged = false;

    while history.len() < ga.max_generations {
        let children = breeder.offspring(&population, ga.population_size - ga.elitism_count);
        let evaluated: Vec<Individual<P>> = children
            .into_par_iter()
            .map(|child| {
                let (objective, payload) =
                    fitness(&child.genes, Some(&population[child.parent].payload));
                Individual {
                    genes: child.genes,
                    objective,
                    payload,
                }
            })
            .collect();
        let mut next: Vec<Individual<P>> = population[..ga.elitism_count].to_vec();
        next.extend(evaluated);
        sort_population(&mut next);
        population = next;

        let previous_best = best.objective;
        if population[0].objective < best.objective {
            best = population[0].clone();
        }
        let mut generation = stats(&population);
        generation.best = best.objective;
        history.push(generation);
        log::debug!(
            "generation {}: best {:.9} mean {:.9}",
            history.len() - 1,
            generation.best,
            generation.mean
        );

        if previous_best - best.objective < ga.convergence_tol {
            stalled += 1;
            if stalled >= ga.stall_generations {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    Ok(GaRun {
        generations_run: history.len(),
        best_genes: best.genes,
        best_objective: best.objective,
        best_payload: best.payload,
        history,
        converged,
    })
}

/// Benchmark functions for exercising the GA on its own.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `sum (x_i - c_i)^2`, minimum 0 at `c`.
    Sphere { center: Vec<f64> },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Sphere { center } => {
                x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum()
            }
        }
    }
}

/// Runs the GA on a standard test function.
pub fn ga_engine_selftest(
    function: &TestFunction,
    lower: &[f64],
    upper: &[f64],
    ga: &GAConfig,
) -> Result<GaRun<()>, OptimizeError> {
    run_ga(lower, upper, ga, |x, _| (function.eval(x), ()))
}

/// Objective of an unreachable or failed pose.
pub fn penalty_objective(params: &RobotParams) -> f64 {
    PENALTY_FACTOR / params.total_length()
}

/// Reciprocal tip distance of the equilibrium reached under `forces`.
///
/// Failed or non-converged solves score [`penalty_objective`]. A warm start
/// is tried first when given; a cold start is the fallback.
pub fn fsw_objective(
    forces: &TendonForceSet,
    load: &LoadCase,
    params: &RobotParams,
    settings: &SolverSettings,
    warm_start: Option<&Configuration>,
) -> (f64, Option<EquilibriumSolution>) {
    let mut solution = warm_start
        .and_then(|c| solve_equilibrium(forces, load, params, settings, Some(c)).ok())
        .filter(|s| s.converged);
    if solution.is_none() {
        solution = solve_equilibrium(forces, load, params, settings, None).ok();
    }
    match solution {
        Some(s) if s.converged && s.tip_norm() > 0.0 => (1.0 / s.tip_norm(), Some(s)),
        other => (penalty_objective(params), other),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GAResult {
    pub best_forces: TendonForceSet,
    /// Reciprocal of `best_tip_norm` (1/m).
    pub best_objective: f64,
    pub best_tip_norm: f64,
    pub history: Vec<GenerationStats>,
    pub generations_run: usize,
    pub converged: bool,
    pub best_solution: EquilibriumSolution,
}

/// Maximizes the tip distance over the base tensions with a GA.
pub fn ga_optimize(
    load: &LoadCase,
    bounds: &ForceBounds,
    ga: &GAConfig,
    params: &RobotParams,
    settings: &SolverSettings,
) -> Result<GAResult, OptimizeError> {
    params.validate()?;
    load.validate()?;
    settings.validate()?;
    bounds.validate(params)?;

    let run = run_ga(&bounds.lower, &bounds.upper, ga, |genes, parent| {
        let forces = TendonForceSet::new(genes.to_vec());
        let warm = parent
            .and_then(|p: &Option<EquilibriumSolution>| p.as_ref())
            .filter(|s| s.converged)
            .map(|s| &s.config);
        fsw_objective(&forces, load, params, settings, warm)
    })?;

    let best_solution = match run.best_payload {
        Some(s) if s.converged => s,
        _ => return Err(OptimizeError::AllPenalized),
    };
    Ok(GAResult {
        best_forces: TendonForceSet::new(run.best_genes),
        best_objective: run.best_objective,
        best_tip_norm: best_solution.tip_norm(),
        history: run.history,
        generations_run: run.generations_run,
        converged: run.converged,
        best_solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_run(center: Vec<f64>, seed: u64) -> GaRun<()> {
        let ga = GAConfig {
            max_generations: 100,
            rng_seed: seed,
            stall_generations: 100,
            ..GAConfig::default()
        };
        ga_engine_selftest(&TestFunction::Sphere { center }, &[-5.0; 8], &[5.0; 8], &ga).unwrap()
    }

    #[test]
    fn sphere_is_minimized() {
        let run = sphere_run(vec![0.0; 8], 7);
        assert!(run.best_objective < 1e-3, "{}", run.best_objective);
        assert!(run.best_genes.iter().all(|g| g.abs() < 0.05));
    }

    #[test]
    fn shifted_sphere_finds_the_shift() {
        let center = vec![1.0, -2.0, 3.0, -4.0, 0.5, 2.5, -1.5, 4.0];
        let run = sphere_run(center.clone(), 3);
        assert!(run.best_objective < 1e-3);
        for (g, c) in run.best_genes.iter().zip(&center) {
            assert!((g - c).abs() < 0.05);
        }
    }

    #[test]
    fn same_seed_same_history() {
        let a = sphere_run(vec![0.0; 8], 11);
        let b = sphere_run(vec![0.0; 8], 11);
        assert_eq!(a, b);
        let c = sphere_run(vec![0.0; 8], 12);
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn best_trace_never_worsens() {
        let run = sphere_run(vec![0.3; 8], 5);
        assert_eq!(run.history.len(), run.generations_run);
        for w in run.history.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
    }

    #[test]
    fn genes_stay_within_bounds() {
        let lower = [0.0, 1.0, -3.0];
        let upper = [0.5, 2.0, -2.0];
        let ga = GAConfig {
            mutation_rate: 1.0,
            mutation_sigma: 2.0,
            max_generations: 20,
            stall_generations: 20,
            ..GAConfig::default()
        };
        run_ga(&lower, &upper, &ga, |x, _| {
            for (v, (lo, hi)) in x.iter().zip(lower.iter().zip(&upper)) {
                assert!(lo <= v && v <= hi);
            }
            (x.iter().sum(), ())
        })
        .unwrap();
    }

    #[test]
    fn stops_on_tolerance() {
        let ga = GAConfig {
            max_generations: 200,
            stall_generations: 1,
            convergence_tol: 1e3,
            ..GAConfig::default()
        };
        let run = run_ga(&[0.0], &[1.0], &ga, |x, _| (x[0], ())).unwrap();
        assert!(run.converged);
        assert_eq!(run.generations_run, 2);
    }

    #[test]
    fn config_validation() {
        let bad = [
            GAConfig {
                population_size: 1,
                ..GAConfig::default()
            },
            GAConfig {
                crossover_rate: 1.5,
                ..GAConfig::default()
            },
            GAConfig {
                convergence_tol: 0.0,
                ..GAConfig::default()
            },
            GAConfig {
                elitism_count: 50,
                ..GAConfig::default()
            },
            GAConfig {
                stall_generations: 0,
                ..GAConfig::default()
            },
        ];
        for ga in bad {
            assert!(ga.validate().is_err());
        }
        let p = RobotParams::default();
        assert!(ForceBounds::default_for(&p).validate(&p).is_ok());
        assert!(ForceBounds::uniform(8, 5.0, 5.0).validate(&p).is_err());
        assert!(ForceBounds::uniform(8, -1.0, 5.0).validate(&p).is_err());
        assert!(ForceBounds::uniform(7, 0.0, 5.0).validate(&p).is_err());
    }

    #[test]
    fn objective_values() {
        let p = RobotParams::default();
        let s = SolverSettings::default();
        let (obj, sol) = fsw_objective(
            &TendonForceSet::zeros(&p),
            &LoadCase::unloaded(),
            &p,
            &s,
            None,
        );
        assert!((obj - 2.5).abs() < 1e-12);
        assert!(sol.unwrap().converged);
        assert!((penalty_objective(&p) - 25.0).abs() < 1e-12);

        // A one-step budget cannot converge under load.
        let tight = SolverSettings {
            max_newton_iters: 1,
            max_friction_iters: 1,
            ..s
        };
        let (obj, _) = fsw_objective(
            &TendonForceSet::uniform(&p, 3.0),
            &LoadCase::reference_scenario(),
            &p,
            &tight,
            None,
        );
        assert_eq!(obj, 25.0);
    }
}
