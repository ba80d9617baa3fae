use nalgebra::Vector3;
use tdcr_core::{
    chain_transforms, converged_fraction, ga_optimize, sample_workspace, solve_equilibrium,
    Configuration, OptimizeError, RobotParams, TendonForceSet,
};

use crate::output::{csv_string, fmt_f64, svg_document, OutputSet, Plot, Series, COLORS};
use crate::{CliError, CommonArgs, ScenarioFile};

/// Largest sample count for which individual shapes are drawn.
const MAX_SHAPES: usize = 10;

fn polyline(config: &Configuration, params: &RobotParams) -> Vec<Vector3<f64>> {
    let mut pts = vec![Vector3::zeros()];
    if let Ok(chain) = chain_transforms(config, params) {
        pts.extend(chain.iter().map(|t| t.translation));
    }
    pts
}

fn shape_plots(shapes: &[Vec<Vector3<f64>>]) -> Vec<Plot> {
    let projection = |title: &str, x_label: &str, pick: fn(&Vector3<f64>) -> f64| Plot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: "z (m)".into(),
        series: shapes
            .iter()
            .enumerate()
            .map(|(i, pts)| Series {
                points: pts.iter().map(|p| (pick(p), p.z)).collect(),
                color: COLORS[i % COLORS.len()],
                scatter: false,
            })
            .collect(),
        equal_axes: true,
    };
    vec![
        projection("x-z projection", "x (m)", |p| p.x),
        projection("y-z projection", "y (m)", |p| p.y),
    ]
}

fn force_header(params: &RobotParams) -> Vec<String> {
    (1..=params.num_tendons())
        .map(|k| format!("f{k}"))
        .collect()
}

pub fn solve(scenario: &ScenarioFile, args: &CommonArgs) -> Result<(), CliError> {
    let params = &scenario.robot;
    let forces = TendonForceSet::new(
        scenario
            .forces
            .clone()
            .ok_or_else(|| scenario.missing(&args.config, "forces"))?,
    );
    let solution = solve_equilibrium(&forces, &scenario.load, params, &scenario.solver, None)
        .map_err(|e| CliError::NotConverged(e.to_string()))?;
    log::info!(
        "tip {:?}, residual {:.3e}, {} Newton / {} friction iterations",
        solution.tip_pose.translation.as_slice(),
        solution.residual_norm,
        solution.iterations.newton,
        solution.iterations.friction
    );

    let mut header: Vec<String> = ["disk", "beta", "gamma", "twist", "x", "y", "z"]
        .map(String::from)
        .to_vec();
    header.extend((1..=params.num_tendons()).map(|k| format!("t{k}")));
    let chain = chain_transforms(&solution.config, params)
        .map_err(|e| CliError::NotConverged(e.to_string()))?;
    let rows: Vec<Vec<String>> = solution
        .config
        .states
        .iter()
        .zip(&chain)
        .enumerate()
        .map(|(i, (s, frame))| {
            let disk = i + 1;
            let mut row = vec![
                disk.to_string(),
                fmt_f64(s.beta),
                fmt_f64(s.gamma),
                fmt_f64(s.twist),
            ];
            row.extend(frame.translation.iter().map(|v| fmt_f64(*v)));
            row.extend(params.tendons().map(|t| {
                solution
                    .tensions
                    .at(t, disk, params)
                    .map(fmt_f64)
                    .unwrap_or_default()
            }));
            row
        })
        .collect();

    let mut out = OutputSet::default();
    out.add("solution.csv", csv_string(&header, &rows));
    out.add(
        "shape.svg",
        svg_document(&shape_plots(&[polyline(&solution.config, params)])),
    );
    out.write(&args.out)?;

    if solution.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "equilibrium residual {:.3e} after {} Newton iterations",
            solution.residual_norm, solution.iterations.newton
        )))
    }
}

pub fn sample(scenario: &ScenarioFile, args: &CommonArgs) -> Result<(), CliError> {
    let params = &scenario.robot;
    let count = scenario
        .sample_count
        .ok_or_else(|| scenario.missing(&args.config, "sample_count"))?;
    let samples = sample_workspace(
        count,
        &scenario.bounds(),
        &scenario.load,
        params,
        &scenario.solver,
        scenario.seed.unwrap_or(0),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    log::info!(
        "{count} samples, {:.1}% converged",
        100.0 * converged_fraction(&samples)
    );

    let mut header = vec!["sample_index".to_string()];
    header.extend(force_header(params));
    header.extend(
        [
            "tip_x",
            "tip_y",
            "tip_z",
            "tip_norm",
            "converged",
            "residual",
        ]
        .map(String::from),
    );
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            let mut row = vec![s.sample_index.to_string()];
            row.extend(s.forces.base_tensions.iter().map(|f| fmt_f64(*f)));
            row.extend(s.tip_position.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(s.tip_norm));
            row.push(s.converged.to_string());
            row.push(fmt_f64(s.residual_norm));
            row
        })
        .collect();

    let tips: Vec<&Vector3<f64>> = samples
        .iter()
        .filter(|s| s.converged)
        .map(|s| &s.tip_position)
        .collect();
    let cloud =
        |title: &str, x_label: &str, y_label: &str, pick: fn(&Vector3<f64>) -> (f64, f64)| Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: vec![Series {
                points: tips.iter().map(|p| pick(p)).collect(),
                color: COLORS[0],
                scatter: true,
            }],
            equal_axes: true,
        };

    let mut out = OutputSet::default();
    out.add("workspace.csv", csv_string(&header, &rows));
    out.add(
        "workspace.svg",
        svg_document(&[
            cloud("tips, top view", "x (m)", "y (m)", |p| (p.x, p.y)),
            cloud("tips, side view", "x (m)", "z (m)", |p| (p.x, p.z)),
        ]),
    );
    if (1..=MAX_SHAPES).contains(&count) {
        let shapes: Vec<_> = samples
            .iter()
            .filter_map(|s| s.solution.as_ref().filter(|sol| sol.converged))
            .map(|sol| polyline(&sol.config, params))
            .collect();
        out.add("shapes.svg", svg_document(&shape_plots(&shapes)));
    }
    out.write(&args.out)?;

    let failed = samples.iter().filter(|s| !s.converged).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "{failed} of {count} samples did not converge"
        )))
    }
}

pub fn optimize(scenario: &ScenarioFile, args: &CommonArgs) -> Result<(), CliError> {
    let params = &scenario.robot;
    let result = ga_optimize(
        &scenario.load,
        &scenario.bounds(),
        &scenario.ga,
        params,
        &scenario.solver,
    )
    .map_err(|e| match e {
        OptimizeError::AllPenalized | OptimizeError::Solve(_) => {
            CliError::NotConverged(e.to_string())
        }
        other => CliError::Usage(other.to_string()),
    })?;
    log::info!(
        "best tip distance {:.6} m after {} generations",
        result.best_tip_norm,
        result.generations_run
    );

    let history_rows: Vec<Vec<String>> = result
        .history
        .iter()
        .enumerate()
        .map(|(g, s)| vec![g.to_string(), fmt_f64(s.best), fmt_f64(s.mean)])
        .collect();
    let history_header = ["generation", "best_objective", "mean_objective"].map(String::from);

    let mut best_header = force_header(params);
    best_header.extend(
        [
            "tip_x",
            "tip_y",
            "tip_z",
            "tip_norm",
            "objective",
            "residual",
            "generations",
            "converged",
        ]
        .map(String::from),
    );
    let mut best = result
        .best_forces
        .base_tensions
        .iter()
        .map(|f| fmt_f64(*f))
        .collect::<Vec<_>>();
    best.extend(
        result
            .best_solution
            .tip_pose
            .translation
            .iter()
            .map(|v| fmt_f64(*v)),
    );
    best.push(fmt_f64(result.best_tip_norm));
    best.push(fmt_f64(result.best_objective));
    best.push(fmt_f64(result.best_solution.residual_norm));
    best.push(result.generations_run.to_string());
    best.push(result.converged.to_string());

    let trace = |pick: fn(&tdcr_core::GenerationStats) -> f64, color| Series {
        points: result
            .history
            .iter()
            .enumerate()
            .map(|(g, s)| (g as f64, pick(s)))
            .collect(),
        color,
        scatter: false,
    };
    let plot = Plot {
        title: "best (blue) and mean (red) objective".into(),
        x_label: "generation".into(),
        y_label: "objective (1/m)".into(),
        series: vec![trace(|s| s.best, COLORS[0]), trace(|s| s.mean, COLORS[1])],
        equal_axes: false,
    };

    let mut out = OutputSet::default();
    out.add("ga_history.csv", csv_string(&history_header, &history_rows));
    out.add("best.csv", csv_string(&best_header, &[best]));
    out.add("convergence.svg", svg_document(&[plot]));
    out.write(&args.out)?;

    if result.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "GA did not settle within {} generations",
            scenario.ga.max_generations
        )))
    }
}
