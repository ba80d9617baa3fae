//! Loads on every disk and the moment-balance residual.
//!
//! All wrenches are expressed in the frame of the proximal disk `i-1` and
//! moments are taken about its origin `O_{i-1}`. Tendon chord `i` runs from
//! the hole on disk `i-1` to the hole on disk `i`; its tension is the
//! `i-1`-th entry of the tendon's [`TensionProfile`] row.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::{
    subsegment_transform, ChainFrames, Configuration, RobotParams, SubsegmentState, TendonId,
};

/// Tensions applied to the tendons at the base, in canonical tendon order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TendonForceSet {
    pub base_tensions: Vec<f64>,
}

impl TendonForceSet {
    pub fn new(base_tensions: Vec<f64>) -> Self {
        Self { base_tensions }
    }

    pub fn zeros(params: &RobotParams) -> Self {
        Self::uniform(params, 0.0)
    }

    pub fn uniform(params: &RobotParams, tension: f64) -> Self {
        Self::new(vec![tension; params.num_tendons()])
    }

    pub fn get(&self, tendon: TendonId, params: &RobotParams) -> f64 {
        self.base_tensions[tendon.index(params)]
    }

    pub fn set(&mut self, tendon: TendonId, params: &RobotParams, tension: f64) {
        self.base_tensions[tendon.index(params)] = tension;
    }

    pub fn validate(&self, params: &RobotParams) -> Result<(), ModelError> {
        if self.base_tensions.len() != params.num_tendons() {
            return Err(ModelError::DimensionMismatch {
                what: "tendon tensions",
                expected: params.num_tendons(),
                found: self.base_tensions.len(),
            });
        }
        if let Some((i, t)) = self
            .base_tensions
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t >= 0.0))
        {
            return Err(ModelError::InvalidForces(format!(
                "tension {} is {t}; tendons cannot push",
                i + 1
            )));
        }
        Ok(())
    }
}

/// Gravity switch and external tip wrench, both given in the base frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadCase {
    pub gravity_on: bool,
    /// Force applied at the tip (N).
    pub external_force: [f64; 3],
    /// Torque applied at the tip (N m).
    pub external_torque: [f64; 3],
}

impl Default for LoadCase {
    fn default() -> Self {
        Self::unloaded()
    }
}

impl LoadCase {
    pub fn unloaded() -> Self {
        Self {
            gravity_on: false,
            external_force: [0.0; 3],
            external_torque: [0.0; 3],
        }
    }

    /// Gravity plus a tip force of (0.1, 0.1, -0.1) N and a tip torque of
    /// (-0.1, 0.1, 0.1) N m.
    pub fn reference_scenario() -> Self {
        Self {
            gravity_on: true,
            external_force: [0.1, 0.1, -0.1],
            external_torque: [-0.1, 0.1, 0.1],
        }
    }

    pub fn force(&self) -> Vector3<f64> {
        Vector3::from(self.external_force)
    }

    pub fn torque(&self) -> Vector3<f64> {
        Vector3::from(self.external_torque)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self
            .external_force
            .iter()
            .chain(&self.external_torque)
            .any(|v| !v.is_finite())
        {
            return Err(ModelError::InvalidLoad("non-finite external wrench".into()));
        }
        Ok(())
    }
}

/// Chord tensions along every tendon route, base to anchor.
///
/// `tendons[t][j]` is the tension between disks `j` and `j+1` of tendon `t`
/// (canonical order).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TensionProfile {
    pub tendons: Vec<Vec<f64>>,
}

impl TensionProfile {
    /// Friction-free profile: every chord carries the base tension.
    pub fn lossless(forces: &TendonForceSet, params: &RobotParams) -> Self {
        Self {
            tendons: params
                .tendons()
                .map(|t| vec![forces.get(t, params); t.anchor_disk(params)])
                .collect(),
        }
    }

    /// Tension of `tendon` in the chord that ends at `disk` (1-based).
    pub fn at(&self, tendon: TendonId, disk: usize, params: &RobotParams) -> Option<f64> {
        self.tendons
            .get(tendon.index(params))?
            .get(disk.checked_sub(1)?)
            .copied()
    }

    /// Largest absolute chord-wise difference between two profiles.
    pub fn max_abs_diff(&self, other: &TensionProfile) -> f64 {
        self.tendons
            .iter()
            .zip(&other.tendons)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.tendons
            .iter()
            .all(|row| row.iter().all(|t| *t >= 0.0) && row.windows(2).all(|w| w[1] <= w[0]))
    }
}

/// Force and moment (about the proximal disk origin) in a local frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiskWrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl DiskWrench {
    pub fn zero() -> Self {
        Self::default()
    }

    fn is_finite(&self) -> bool {
        self.force
            .iter()
            .chain(self.moment.iter())
            .all(|v| v.is_finite())
    }
}

impl std::ops::AddAssign for DiskWrench {
    fn add_assign(&mut self, rhs: Self) {
        self.force += rhs.force;
        self.moment += rhs.moment;
    }
}

/// Exponential friction law `mu = scale * exp(-decay * sigma)`, sigma in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionLaw {
    pub scale: f64,
    pub decay: f64,
}

impl Default for FrictionLaw {
    fn default() -> Self {
        Self {
            scale: 0.689,
            decay: 0.027,
        }
    }
}

impl FrictionLaw {
    pub fn frictionless() -> Self {
        Self {
            scale: 0.0,
            decay: 0.0,
        }
    }

    pub fn coefficient(&self, sigma_deg: f64) -> f64 {
        self.scale * (-self.decay * sigma_deg).exp()
    }
}

/// Friction coefficient for a local bending angle `sigma_deg` given in degrees.
pub fn friction_coefficient(sigma_deg: f64) -> f64 {
    FrictionLaw::default().coefficient(sigma_deg)
}

#[derive(Debug, Clone, Copy)]
struct Route {
    id: TendonId,
    hole: Vector3<f64>,
    anchor: usize,
}

fn routes(params: &RobotParams) -> Vec<Route> {
    params
        .tendons()
        .map(|id| Route {
            id,
            hole: id.hole(params),
            anchor: id.anchor_disk(params),
        })
        .collect()
}

/// Hole positions on disks `i-1`, `i` and (if it exists) `i+1`, all in frame `i-1`.
fn hole_triplet(
    frames: &ChainFrames,
    hole: &Vector3<f64>,
    disk: usize,
    with_next: bool,
) -> (Vector3<f64>, Vector3<f64>, Option<Vector3<f64>>) {
    let t = &frames.local[disk - 1];
    let here = t.transform_point(hole);
    let next = with_next.then(|| t.transform_point(&frames.local[disk].transform_point(hole)));
    (*hole, here, next)
}

fn unit(v: Vector3<f64>) -> Vector3<f64> {
    v / v.norm()
}

fn bend_angle(prev: &Vector3<f64>, here: &Vector3<f64>, next: &Vector3<f64>) -> f64 {
    let u_prev = unit(prev - here);
    let u_next = unit(next - here);
    u_prev.dot(&u_next).clamp(-1.0, 1.0).acos()
}

/// Chord tensions of one tendon after friction losses at every interior disk.
fn propagate_route(
    route: &Route,
    base_tension: f64,
    frames: &ChainFrames,
    law: FrictionLaw,
) -> Vec<f64> {
    let mut tensions = Vec::with_capacity(route.anchor);
    let mut current = base_tension;
    tensions.push(current);
    for disk in 1..route.anchor {
        let (prev, here, next) = hole_triplet(frames, &route.hole, disk, true);
        let next = next.unwrap();
        let u_prev = unit(prev - here);
        let u_next = unit(next - here);
        let sigma = u_prev.dot(&u_next).clamp(-1.0, 1.0).acos().to_degrees();
        let mu = law.coefficient(sigma);
        // Resultant pull with the incoming tension on both sides; its
        // component in the disk plane presses the tendon against the hole.
        let resultant = current * (u_prev + u_next);
        let normal_axis = frames.local[disk - 1].rotation.column(2).into_owned();
        let in_plane = resultant - resultant.dot(&normal_axis) * normal_axis;
        current = (current - mu * in_plane.norm()).max(0.0);
        tensions.push(current);
    }
    tensions
}

fn tendon_route_wrenches(route: &Route, tensions: &[f64], frames: &ChainFrames) -> Vec<DiskWrench> {
    (1..=route.anchor)
        .map(|disk| {
            let terminal = disk == route.anchor;
            let (prev, here, next) = hole_triplet(frames, &route.hole, disk, !terminal);
            let mut force = tensions[disk - 1] * unit(prev - here);
            if let Some(next) = next {
                force += tensions[disk] * unit(next - here);
            }
            DiskWrench {
                force,
                moment: here.cross(&force),
            }
        })
        .collect()
}

fn check_inputs(config: &Configuration, params: &RobotParams) -> Result<(), ModelError> {
    params.validate()?;
    config.validate(params)
}

/// Gravity on disk `disk_index` and on the backbone of subsegment
/// `disk_index`, in frame `disk_index - 1` with moments about its origin.
///
/// The backbone weight acts at the arc midpoint.
pub fn gravity_wrench(
    disk_index: usize,
    config: &Configuration,
    params: &RobotParams,
) -> Result<DiskWrench, ModelError> {
    check_inputs(config, params)?;
    check_disk(disk_index, params)?;
    let frames = ChainFrames::new(config, params.subsegment_length);
    Ok(gravity_on_disk(disk_index, config, &frames, params))
}

fn check_disk(disk_index: usize, params: &RobotParams) -> Result<(), ModelError> {
    if disk_index == 0 || disk_index > params.num_subsegments() {
        return Err(ModelError::DimensionMismatch {
            what: "disk index bound",
            expected: params.num_subsegments(),
            found: disk_index,
        });
    }
    Ok(())
}

fn gravity_on_disk(
    disk: usize,
    config: &Configuration,
    frames: &ChainFrames,
    params: &RobotParams,
) -> DiskWrench {
    let down = frames.global[disk - 1].rotation.transpose()
        * Vector3::new(0.0, 0.0, -params.gravity_accel);
    let disk_force = params.disk_mass * down;
    let backbone_force = params.backbone_mass_per_subsegment * down;
    let disk_center = frames.local[disk - 1].translation;
    let backbone_center =
        subsegment_transform(&config.states[disk - 1], 0.5 * params.subsegment_length).translation;
    DiskWrench {
        force: disk_force + backbone_force,
        moment: disk_center.cross(&disk_force) + backbone_center.cross(&backbone_force),
    }
}

/// External tip load in frame `n-1`, moments about `O_{n-1}`.
///
/// The moment is the lever-arm term of the tip force plus the applied torque.
pub fn external_tip_wrench(
    config: &Configuration,
    params: &RobotParams,
    load: &LoadCase,
) -> Result<DiskWrench, ModelError> {
    check_inputs(config, params)?;
    load.validate()?;
    let frames = ChainFrames::new(config, params.subsegment_length);
    Ok(tip_load(&frames, load))
}

fn tip_load(frames: &ChainFrames, load: &LoadCase) -> DiskWrench {
    let n = frames.local.len();
    let to_local = frames.global[n - 1].rotation.transpose();
    let force = to_local * load.force();
    let lever = frames.local[n - 1].translation;
    DiskWrench {
        force,
        moment: lever.cross(&force) + to_local * load.torque(),
    }
}

/// Angle (rad) between the two chords of `tendon` meeting at `disk_index`.
///
/// A straight tendon gives `pi`. Terminal and base disks have no angle.
pub fn local_bend_angle(
    disk_index: usize,
    tendon: TendonId,
    config: &Configuration,
    params: &RobotParams,
) -> Result<f64, ModelError> {
    check_inputs(config, params)?;
    tendon.check(params)?;
    let anchor = tendon.anchor_disk(params);
    if disk_index == 0 || disk_index > anchor {
        return Err(ModelError::NotOnRoute {
            disk: disk_index,
            segment: tendon.segment,
            slot: tendon.slot,
        });
    }
    if disk_index == anchor {
        return Err(ModelError::TerminalDisk {
            disk: disk_index,
            segment: tendon.segment,
            slot: tendon.slot,
        });
    }
    let frames = ChainFrames::new(config, params.subsegment_length);
    let (prev, here, next) = hole_triplet(&frames, &tendon.hole(params), disk_index, true);
    Ok(bend_angle(&prev, &here, &next.unwrap()))
}

/// Wrenches a tendon exerts on every disk of its route (frame `i-1`, about
/// `O_{i-1}`) and the chord tensions after friction losses.
///
/// Only the base tension of `tendon` in `tensions_in` is used; the rest of
/// the row is recomputed.
pub fn tendon_wrench_and_propagate(
    tendon: TendonId,
    tensions_in: &TensionProfile,
    config: &Configuration,
    params: &RobotParams,
) -> Result<(Vec<DiskWrench>, TensionProfile), ModelError> {
    tendon_wrench_and_propagate_with(tendon, tensions_in, config, params, FrictionLaw::default())
}

/// [`tendon_wrench_and_propagate`] with an explicit friction law.
pub fn tendon_wrench_and_propagate_with(
    tendon: TendonId,
    tensions_in: &TensionProfile,
    config: &Configuration,
    params: &RobotParams,
    law: FrictionLaw,
) -> Result<(Vec<DiskWrench>, TensionProfile), ModelError> {
    check_inputs(config, params)?;
    tendon.check(params)?;
    let index = tendon.index(params);
    let base = tensions_in
        .tendons
        .get(index)
        .and_then(|row| row.first())
        .copied()
        .ok_or(ModelError::DimensionMismatch {
            what: "tension rows",
            expected: params.num_tendons(),
            found: tensions_in.tendons.len(),
        })?;
    if !(base.is_finite() && base >= 0.0) {
        return Err(ModelError::InvalidForces(format!("base tension {base}")));
    }
    let frames = ChainFrames::new(config, params.subsegment_length);
    let route = Route {
        id: tendon,
        hole: tendon.hole(params),
        anchor: tendon.anchor_disk(params),
    };
    let row = propagate_route(&route, base, &frames, law);
    let wrenches = tendon_route_wrenches(&route, &row, &frames);
    let mut out = tensions_in.clone();
    out.tendons[index] = row;
    Ok((wrenches, out))
}

/// Restoring bending and torsion moments of the backbone in frame `i-1`.
///
/// Bending is `K E I k` about the bending axis `(-sin phi, cos phi, 0)`,
/// torsion is `2 G I twist / l` about local z.
pub fn elastic_moments(
    state: &SubsegmentState,
    params: &RobotParams,
) -> (Vector3<f64>, Vector3<f64>) {
    let ei = params.bending_stiffness();
    let bending = Vector3::new(-ei * state.gamma, ei * state.beta, 0.0);
    let torsion = Vector3::new(
        0.0,
        0.0,
        params.torsional_stiffness() * state.twist / params.subsegment_length,
    );
    (bending, torsion)
}

/// Friction-reduced chord tensions for every tendon on `config`.
pub fn propagate_tensions(
    config: &Configuration,
    forces: &TendonForceSet,
    params: &RobotParams,
) -> Result<TensionProfile, ModelError> {
    check_inputs(config, params)?;
    forces.validate(params)?;
    let frames = ChainFrames::new(config, params.subsegment_length);
    Ok(propagate_all(
        &frames,
        forces,
        params,
        FrictionLaw::default(),
    ))
}

pub(crate) fn propagate_all(
    frames: &ChainFrames,
    forces: &TendonForceSet,
    params: &RobotParams,
    law: FrictionLaw,
) -> TensionProfile {
    TensionProfile {
        tendons: routes(params)
            .iter()
            .map(|r| propagate_route(r, forces.get(r.id, params), frames, law))
            .collect(),
    }
}

fn check_profile(tensions: &TensionProfile, params: &RobotParams) -> Result<(), ModelError> {
    if tensions.tendons.len() != params.num_tendons() {
        return Err(ModelError::DimensionMismatch {
            what: "tension rows",
            expected: params.num_tendons(),
            found: tensions.tendons.len(),
        });
    }
    for (row, id) in tensions.tendons.iter().zip(params.tendons()) {
        if row.len() != id.anchor_disk(params) {
            return Err(ModelError::DimensionMismatch {
                what: "chord tensions",
                expected: id.anchor_disk(params),
                found: row.len(),
            });
        }
    }
    Ok(())
}

/// Net load carried by the backbone at the start of every subsegment.
///
/// Element `i-1` is the wrench of all loads on disks `i..n` (and the
/// backbone distal to `O_{i-1}`), in frame `i-1` about `O_{i-1}`. Computed by
/// the tip-to-base recursion.
pub fn cut_wrenches(
    config: &Configuration,
    tensions: &TensionProfile,
    load: &LoadCase,
    params: &RobotParams,
) -> Result<Vec<DiskWrench>, ModelError> {
    check_inputs(config, params)?;
    check_profile(tensions, params)?;
    load.validate()?;
    let frames = ChainFrames::new(config, params.subsegment_length);
    accumulate_cuts(config, &frames, tensions, load, params)
}

/// Loads applied directly to each disk (and its backbone portion), frame
/// `i-1`, about `O_{i-1}`.
pub(crate) fn disk_loads(
    config: &Configuration,
    frames: &ChainFrames,
    tensions: &TensionProfile,
    load: &LoadCase,
    params: &RobotParams,
) -> Vec<DiskWrench> {
    let n = config.len();
    let mut loads = vec![DiskWrench::zero(); n];
    if load.gravity_on {
        for (i, w) in loads.iter_mut().enumerate() {
            *w += gravity_on_disk(i + 1, config, frames, params);
        }
    }
    for (route, row) in routes(params).iter().zip(&tensions.tendons) {
        for (i, w) in tendon_route_wrenches(route, row, frames)
            .into_iter()
            .enumerate()
        {
            loads[i] += w;
        }
    }
    if n > 0 {
        loads[n - 1] += tip_load(frames, load);
    }
    loads
}

pub(crate) fn accumulate_cuts(
    config: &Configuration,
    frames: &ChainFrames,
    tensions: &TensionProfile,
    load: &LoadCase,
    params: &RobotParams,
) -> Result<Vec<DiskWrench>, ModelError> {
    let loads = disk_loads(config, frames, tensions, load, params);
    let n = loads.len();
    let mut cuts = vec![DiskWrench::zero(); n];
    let mut distal = DiskWrench::zero();
    for i in (0..n).rev() {
        let t = &frames.local[i];
        let carried_force = t.rotation * distal.force;
        let w = DiskWrench {
            force: loads[i].force + carried_force,
            moment: loads[i].moment
                + t.rotation * distal.moment
                + t.translation.cross(&carried_force),
        };
        if !w.is_finite() {
            return Err(ModelError::NonFinite { disk: i + 1 });
        }
        cuts[i] = w;
        distal = w;
    }
    Ok(cuts)
}

pub(crate) fn residual_from_frames(
    config: &Configuration,
    frames: &ChainFrames,
    tensions: &TensionProfile,
    load: &LoadCase,
    params: &RobotParams,
) -> Result<Vec<f64>, ModelError> {
    let cuts = accumulate_cuts(config, frames, tensions, load, params)?;
    let mut residual = Vec::with_capacity(3 * cuts.len());
    for (cut, state) in cuts.iter().zip(&config.states) {
        let (bending, torsion) = elastic_moments(state, params);
        let r = cut.moment - bending - torsion;
        residual.extend_from_slice(r.as_slice());
    }
    Ok(residual)
}

/// Moment balance with tendon tensions held fixed.
///
/// Three entries per subsegment: load moment at `O_{i-1}` minus the elastic
/// bending and torsion moments, along local x, y, z.
pub fn residual_with_tensions(
    config: &Configuration,
    tensions: &TensionProfile,
    load: &LoadCase,
    params: &RobotParams,
) -> Result<Vec<f64>, ModelError> {
    check_inputs(config, params)?;
    check_profile(tensions, params)?;
    load.validate()?;
    let frames = ChainFrames::new(config, params.subsegment_length);
    residual_from_frames(config, &frames, tensions, load, params)
}

/// Moment balance with tensions propagated on `config` in one friction pass.
///
/// A zero vector characterizes static equilibrium.
pub fn equilibrium_residual(
    config: &Configuration,
    forces: &TendonForceSet,
    load: &LoadCase,
    params: &RobotParams,
) -> Result<Vec<f64>, ModelError> {
    check_inputs(config, params)?;
    forces.validate(params)?;
    load.validate()?;
    let frames = ChainFrames::new(config, params.subsegment_length);
    let tensions = propagate_all(&frames, forces, params, FrictionLaw::default());
    residual_from_frames(config, &frames, &tensions, load, params)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
