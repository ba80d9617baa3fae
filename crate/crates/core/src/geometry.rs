//! Piecewise-constant-curvature kinematics.
//!
//! Every subsegment (the backbone between two consecutive disks) is a circular
//! arc described by two curvature components and a twist. Frame `i` is attached
//! to disk `i`; disk 0 is the fixed base.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Below this bend angle the arc functions switch to their Taylor series.
const SMALL_ANGLE: f64 = 1e-6;

/// Geometry, material, mass and routing constants of the robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotParams {
    pub num_segments: usize,
    pub disks_per_segment: usize,
    /// Backbone length between consecutive disks (m).
    pub subsegment_length: f64,
    /// Distance of the tendon holes from the disk center (m).
    pub tendon_pitch_radius: f64,
    pub tendons_per_segment: usize,
    /// Young's modulus of the backbone (Pa).
    pub backbone_young_modulus: f64,
    /// Shear modulus of the backbone (Pa).
    pub backbone_shear_modulus: f64,
    /// Second moment of area of the backbone cross-section (m^4).
    pub backbone_second_moment: f64,
    /// Dimensionless correction applied to the bending stiffness `E I`.
    pub bending_stiffness_coeff: f64,
    /// Mass of one disk (kg).
    pub disk_mass: f64,
    /// Mass of the backbone between two disks (kg).
    pub backbone_mass_per_subsegment: f64,
    /// Gravitational acceleration, acting along global -z (m/s^2).
    pub gravity_accel: f64,
}

impl Default for RobotParams {
    /// Two segments of ten disks, 0.4 m overall. Only the layout and the
    /// length come from the reference robot; the material, mass and hole
    /// radius values are implementer defaults.
    fn default() -> Self {
        let diameter: f64 = 2.0e-3;
        Self {
            num_segments: 2,
            disks_per_segment: 10,
            subsegment_length: 0.02,
            tendon_pitch_radius: 6.0e-3,
            tendons_per_segment: 4,
            backbone_young_modulus: 60.0e9,
            backbone_shear_modulus: 23.0e9,
            backbone_second_moment: PI * (diameter * diameter) * (diameter * diameter) / 64.0,
            bending_stiffness_coeff: 1.0,
            disk_mass: 2.0e-3,
            backbone_mass_per_subsegment: 0.3e-3,
            gravity_accel: 9.81,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let counts = [
            ("num_segments", self.num_segments),
            ("disks_per_segment", self.disks_per_segment),
            ("tendons_per_segment", self.tendons_per_segment),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(ModelError::InvalidParams(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        let positives = [
            ("subsegment_length", self.subsegment_length),
            ("tendon_pitch_radius", self.tendon_pitch_radius),
            ("backbone_young_modulus", self.backbone_young_modulus),
            ("backbone_shear_modulus", self.backbone_shear_modulus),
            ("backbone_second_moment", self.backbone_second_moment),
            ("bending_stiffness_coeff", self.bending_stiffness_coeff),
            ("disk_mass", self.disk_mass),
            (
                "backbone_mass_per_subsegment",
                self.backbone_mass_per_subsegment,
            ),
            ("gravity_accel", self.gravity_accel),
        ];
        for (name, value) in positives {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParams(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Number of subsegments, which equals the number of non-base disks.
    pub fn num_subsegments(&self) -> usize {
        self.num_segments * self.disks_per_segment
    }

    pub fn total_length(&self) -> f64 {
        self.num_subsegments() as f64 * self.subsegment_length
    }

    pub fn num_tendons(&self) -> usize {
        self.num_segments * self.tendons_per_segment
    }

    /// Effective bending stiffness `K E I` (N m^2).
    pub fn bending_stiffness(&self) -> f64 {
        self.bending_stiffness_coeff * self.backbone_young_modulus * self.backbone_second_moment
    }

    /// Torsional stiffness `2 G I` of a circular rod (N m^2).
    pub fn torsional_stiffness(&self) -> f64 {
        2.0 * self.backbone_shear_modulus * self.backbone_second_moment
    }

    /// Tendons in canonical order: segment 1 slots 1..n, then segment 2, ...
    pub fn tendons(&self) -> impl Iterator<Item = TendonId> + '_ {
        (1..=self.num_segments).flat_map(move |segment| {
            (1..=self.tendons_per_segment).map(move |slot| TendonId { segment, slot })
        })
    }
}

/// Bending and twist of one subsegment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SubsegmentState {
    /// Curvature component that bends the arc toward local +x (1/m).
    pub beta: f64,
    /// Curvature component that bends the arc toward local +y (1/m).
    pub gamma: f64,
    /// Twist about the local z axis (rad).
    pub twist: f64,
}

impl SubsegmentState {
    pub const STRAIGHT: Self = Self {
        beta: 0.0,
        gamma: 0.0,
        twist: 0.0,
    };

    pub fn new(beta: f64, gamma: f64, twist: f64) -> Self {
        Self { beta, gamma, twist }
    }

    /// Checks finiteness and that neither curvature folds the arc past a half circle.
    pub fn check(&self, length: f64) -> Result<(), String> {
        if !(self.beta.is_finite() && self.gamma.is_finite() && self.twist.is_finite()) {
            return Err("non-finite component".into());
        }
        if (self.beta * length).abs() >= PI || (self.gamma * length).abs() >= PI {
            return Err(format!(
                "curvature ({}, {}) folds a {length} m subsegment past a half circle",
                self.beta, self.gamma
            ));
        }
        Ok(())
    }
}

/// Subsegment states ordered from base to tip.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Configuration {
    pub states: Vec<SubsegmentState>,
}

impl Configuration {
    pub fn straight(num_subsegments: usize) -> Self {
        Self {
            states: vec![SubsegmentState::STRAIGHT; num_subsegments],
        }
    }

    pub fn uniform(num_subsegments: usize, state: SubsegmentState) -> Self {
        Self {
            states: vec![state; num_subsegments],
        }
    }

    /// Builds a configuration from the flat `(beta, gamma, twist)*` unknown vector.
    pub fn from_unknowns(unknowns: &[f64]) -> Self {
        debug_assert_eq!(unknowns.len() % 3, 0);
        Self {
            states: unknowns
                .chunks_exact(3)
                .map(|c| SubsegmentState::new(c[0], c[1], c[2]))
                .collect(),
        }
    }

    pub fn to_unknowns(&self) -> Vec<f64> {
        self.states
            .iter()
            .flat_map(|s| [s.beta, s.gamma, s.twist])
            .collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn validate(&self, params: &RobotParams) -> Result<(), ModelError> {
        if self.states.len() != params.num_subsegments() {
            return Err(ModelError::DimensionMismatch {
                what: "subsegment states",
                expected: params.num_subsegments(),
                found: self.states.len(),
            });
        }
        for (index, state) in self.states.iter().enumerate() {
            state
                .check(params.subsegment_length)
                .map_err(|reason| ModelError::InvalidState { index, reason })?;
        }
        Ok(())
    }
}

/// Rigid transform `[R | t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for HomTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl HomTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// `self * other`.
    pub fn compose(&self, other: &HomTransform) -> HomTransform {
        HomTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> HomTransform {
        let rt = self.rotation.transpose();
        HomTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Row-major 4x4 homogeneous matrix.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }
}

/// A tendon, addressed by 1-based segment and slot indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TendonId {
    pub segment: usize,
    pub slot: usize,
}

impl TendonId {
    pub fn new(segment: usize, slot: usize) -> Self {
        Self { segment, slot }
    }

    pub fn check(&self, params: &RobotParams) -> Result<(), ModelError> {
        if self.segment == 0
            || self.segment > params.num_segments
            || self.slot == 0
            || self.slot > params.tendons_per_segment
        {
            return Err(ModelError::UnknownTendon {
                segment: self.segment,
                slot: self.slot,
            });
        }
        Ok(())
    }

    /// Position in the canonical tendon ordering.
    pub fn index(&self, params: &RobotParams) -> usize {
        (self.segment - 1) * params.tendons_per_segment + (self.slot - 1)
    }

    pub fn from_index(index: usize, params: &RobotParams) -> Self {
        Self {
            segment: index / params.tendons_per_segment + 1,
            slot: index % params.tendons_per_segment + 1,
        }
    }

    /// Disk where the tendon is anchored: the last disk of its segment.
    pub fn anchor_disk(&self, params: &RobotParams) -> usize {
        self.segment * params.disks_per_segment
    }

    /// Angular position of the tendon hole on every disk it crosses.
    ///
    /// Slots of one segment are evenly spaced; each further segment is offset
    /// by a fraction of that spacing so the holes interleave.
    pub fn hole_angle(&self, params: &RobotParams) -> f64 {
        let spacing = 2.0 * PI / params.tendons_per_segment as f64;
        spacing * (self.slot - 1) as f64
            + spacing * (self.segment - 1) as f64 / params.num_segments as f64
    }

    /// Hole position in the frame of any disk on the route.
    pub fn hole(&self, params: &RobotParams) -> Vector3<f64> {
        let angle = self.hole_angle(params);
        let r = params.tendon_pitch_radius;
        Vector3::new(r * angle.cos(), r * angle.sin(), 0.0)
    }
}

/// `sin(x) / x`, smooth through zero.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < SMALL_ANGLE {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `(1 - cos(x)) / x^2`, written without cancellation.
pub(crate) fn versinc(x: f64) -> f64 {
    let s = sinc(0.5 * x);
    0.5 * s * s
}

fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Total curvature `k` and bending-plane angle `phi` of a subsegment.
///
/// A straight subsegment reports `phi = 0`.
pub fn curvature_polar(state: &SubsegmentState) -> (f64, f64) {
    let k = state.beta.hypot(state.gamma);
    if k == 0.0 {
        return (0.0, 0.0);
    }
    let mut phi = state.gamma.atan2(state.beta);
    if phi <= -PI {
        phi = PI;
    }
    (k, phi)
}

/// Transform from the frame of disk `i-1` to the frame of disk `i`.
///
/// The bend is the rotation `Rz(phi) Ry(theta) Rz(-phi)` about the axis
/// `(-sin phi, cos phi, 0)` with `theta = k l`, followed by the twist about
/// the end z-axis. The arc functions are evaluated in a form that stays
/// smooth at zero curvature.
pub fn subsegment_transform(state: &SubsegmentState, length: f64) -> HomTransform {
    // Rotation vector of the bend.
    let wx = -state.gamma * length;
    let wy = state.beta * length;
    let theta = wx.hypot(wy);
    let a = sinc(theta);
    let b = versinc(theta);

    // Rodrigues: I + a [w]x + b [w]x^2 with w = (wx, wy, 0).
    let bend = Matrix3::new(
        1.0 - b * wy * wy,
        b * wx * wy,
        a * wy,
        b * wx * wy,
        1.0 - b * wx * wx,
        -a * wx,
        -a * wy,
        a * wx,
        1.0 - b * (wx * wx + wy * wy),
    );

    let l2 = length * length;
    let translation = Vector3::new(state.beta * l2 * b, state.gamma * l2 * b, length * a);

    let rotation = if state.twist == 0.0 {
        bend
    } else {
        bend * rot_z(state.twist)
    };
    HomTransform {
        rotation,
        translation,
    }
}

/// Per-subsegment transforms `{i-1}T_i`, without validation.
pub(crate) fn local_transforms(config: &Configuration, length: f64) -> Vec<HomTransform> {
    config
        .states
        .iter()
        .map(|s| subsegment_transform(s, length))
        .collect()
}

/// Cumulative transforms `0T_i` for `i = 1..n`.
pub fn chain_transforms(
    config: &Configuration,
    params: &RobotParams,
) -> Result<Vec<HomTransform>, ModelError> {
    config.validate(params)?;
    let mut acc = HomTransform::identity();
    Ok(local_transforms(config, params.subsegment_length)
        .iter()
        .map(|t| {
            acc = acc.compose(t);
            acc
        })
        .collect())
}

/// Tip pose `0T_n`.
pub fn tip_transform(
    config: &Configuration,
    params: &RobotParams,
) -> Result<HomTransform, ModelError> {
    Ok(chain_transforms(config, params)?
        .last()
        .copied()
        .unwrap_or_else(HomTransform::identity))
}

/// Distance from the base origin to the tip.
pub fn tip_norm(config: &Configuration, params: &RobotParams) -> Result<f64, ModelError> {
    Ok(tip_transform(config, params)?.translation.norm())
}

/// Hole of `tendon` on disk `disk_index`, in that disk's frame.
///
/// Disk 0 is the base; a tendon crosses every disk up to its anchor.
pub fn tendon_anchor(
    disk_index: usize,
    tendon: TendonId,
    params: &RobotParams,
) -> Result<Vector3<f64>, ModelError> {
    tendon.check(params)?;
    if disk_index > tendon.anchor_disk(params) {
        return Err(ModelError::NotOnRoute {
            disk: disk_index,
            segment: tendon.segment,
            slot: tendon.slot,
        });
    }
    Ok(tendon.hole(params))
}

/// Cached frames of one configuration.
///
/// `local[i]` is `{i}T_{i+1}` and `global[i]` is `0T_i` (so `global[0]` is
/// the base frame).
#[derive(Debug, Clone)]
pub(crate) struct ChainFrames {
    pub local: Vec<HomTransform>,
    pub global: Vec<HomTransform>,
}

impl ChainFrames {
    pub fn new(config: &Configuration, length: f64) -> Self {
        let local = local_transforms(config, length);
        let mut global = Vec::with_capacity(local.len() + 1);
        global.push(HomTransform::identity());
        for t in &local {
            let next = global.last().unwrap().compose(t);
            global.push(next);
        }
        Self { local, global }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> RobotParams {
        RobotParams::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn polar_coordinates() {
        assert_eq!(
            curvature_polar(&SubsegmentState::new(1.0, 0.0, 0.0)),
            (1.0, 0.0)
        );
        assert_eq!(curvature_polar(&SubsegmentState::STRAIGHT), (0.0, 0.0));
        let (k, phi) = curvature_polar(&SubsegmentState::new(3.0, 4.0, 0.0));
        assert!(close(k, 5.0, 1e-15));
        assert!(close(phi, 0.927_295_218_001_612_2, 1e-15));
        let (_, phi) = curvature_polar(&SubsegmentState::new(-1.0, -0.0, 0.0));
        assert_eq!(phi, PI);
    }

    #[test]
    fn straight_subsegment() {
        let t = subsegment_transform(&SubsegmentState::STRAIGHT, 0.02);
        assert_eq!(t.rotation, Matrix3::identity());
        assert_eq!(t.translation, Vector3::new(0.0, 0.0, 0.02));
    }

    #[test]
    fn quarter_circle_subsegment() {
        let l = 0.02;
        let beta = PI / (2.0 * l);
        let r = 1.0 / beta;
        let t = subsegment_transform(&SubsegmentState::new(beta, 0.0, 0.0), l);
        assert!((t.translation - Vector3::new(r, 0.0, r)).norm() < 1e-15);
        assert!(close(r, 0.012_732_395_447_351_627, 1e-15));
        // The end tangent points along +x.
        assert!((t.rotation.column(2) - Vector3::x()).norm() < 1e-15);

        let t = subsegment_transform(&SubsegmentState::new(0.0, beta, 0.0), l);
        assert!((t.translation - Vector3::new(0.0, r, r)).norm() < 1e-15);
    }

    #[test]
    fn matches_rz_ry_rz_product() {
        let s = SubsegmentState::new(12.0, -7.0, 0.3);
        let l = 0.02;
        let (k, phi) = curvature_polar(&s);
        let theta = k * l;
        let (st, ct) = theta.sin_cos();
        let ry = Matrix3::new(ct, 0.0, st, 0.0, 1.0, 0.0, -st, 0.0, ct);
        let expected = rot_z(phi) * ry * rot_z(-phi) * rot_z(s.twist);
        let t = subsegment_transform(&s, l);
        assert!((t.rotation - expected).norm() < 1e-14);
        let r = 1.0 / k;
        let d = Vector3::new(
            r * phi.cos() * (1.0 - ct),
            r * phi.sin() * (1.0 - ct),
            r * st,
        );
        assert!((t.translation - d).norm() < 1e-15);
    }

    #[test]
    fn straight_chain_reaches_full_length() {
        let p = params();
        let config = Configuration::straight(p.num_subsegments());
        let tip = tip_transform(&config, &p).unwrap();
        assert!((tip.translation - Vector3::new(0.0, 0.0, 0.4)).norm() < 1e-15);
        assert!(close(tip_norm(&config, &p).unwrap(), 0.4, 1e-15));
    }

    #[test]
    fn single_subsegment_chain() {
        let p = RobotParams {
            num_segments: 1,
            disks_per_segment: 1,
            ..params()
        };
        let s = SubsegmentState::new(20.0, 5.0, 0.1);
        let chain = chain_transforms(&Configuration::uniform(1, s), &p).unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain[0], subsegment_transform(&s, p.subsegment_length));
    }

    #[test]
    fn two_arcs_compose_into_one() {
        let p = RobotParams {
            num_segments: 1,
            disks_per_segment: 2,
            ..params()
        };
        // theta = pi/4 per subsegment, so pi/2 over 0.04 m.
        let beta = PI / 4.0 / 0.02;
        let config = Configuration::uniform(2, SubsegmentState::new(beta, 0.0, 0.0));
        let tip = tip_transform(&config, &p).unwrap();
        let single = subsegment_transform(&SubsegmentState::new(beta, 0.0, 0.0), 0.04);
        assert!((tip.translation - single.translation).norm() < 1e-15);
        let r = 0.04 / (PI / 2.0);
        assert!((tip.translation - Vector3::new(r, 0.0, r)).norm() < 1e-15);
    }

    #[test]
    fn semicircle_chord() {
        let p = params();
        let k = PI / 0.4;
        let config = Configuration::uniform(20, SubsegmentState::new(k, 0.0, 0.0));
        let norm = tip_norm(&config, &p).unwrap();
        assert!(close(norm, 0.8 / PI, 1e-14));
        assert!(close(norm, 0.254_647_908_947_032_5, 1e-14));
    }

    #[test]
    fn invalid_configs_rejected() {
        let p = params();
        let short = Configuration::straight(3);
        assert!(matches!(
            chain_transforms(&short, &p),
            Err(ModelError::DimensionMismatch { .. })
        ));
        let mut folded = Configuration::straight(20);
        folded.states[4].beta = PI / 0.02;
        assert!(matches!(
            tip_norm(&folded, &p),
            Err(ModelError::InvalidState { index: 4, .. })
        ));
        folded.states[4].beta = f64::NAN;
        assert!(tip_norm(&folded, &p).is_err());
    }

    #[test]
    fn tendon_holes() {
        let p = params();
        let a = tendon_anchor(1, TendonId::new(1, 1), &p).unwrap();
        assert!((a - Vector3::new(0.006, 0.0, 0.0)).norm() < 1e-18);
        let a = tendon_anchor(15, TendonId::new(2, 1), &p).unwrap();
        let h = 0.006 * std::f64::consts::FRAC_1_SQRT_2;
        assert!((a - Vector3::new(h, h, 0.0)).norm() < 1e-18);
        let a = tendon_anchor(3, TendonId::new(1, 3), &p).unwrap();
        assert!((a - Vector3::new(-0.006, 0.0, 0.0)).norm() < 1e-17);
        assert_eq!(a.z, 0.0);

        assert!(matches!(
            tendon_anchor(11, TendonId::new(1, 2), &p),
            Err(ModelError::NotOnRoute { disk: 11, .. })
        ));
        assert!(tendon_anchor(20, TendonId::new(2, 4), &p).is_ok());
        assert!(matches!(
            tendon_anchor(1, TendonId::new(3, 1), &p),
            Err(ModelError::UnknownTendon { .. })
        ));
        assert!(tendon_anchor(1, TendonId::new(1, 5), &p).is_err());
    }

    #[test]
    fn tendon_ordering_round_trips() {
        let p = params();
        let ids: Vec<_> = p.tendons().collect();
        assert_eq!(ids.len(), 8);
        for (i, id) in ids.iter().enumerate() {
            assert_eq!(id.index(&p), i);
            assert_eq!(TendonId::from_index(i, &p), *id);
        }
        // 45 degree spacing across both segments.
        let mut angles: Vec<f64> = ids.iter().map(|t| t.hole_angle(&p)).collect();
        angles.sort_by(f64::total_cmp);
        for w in angles.windows(2) {
            assert!(close(w[1] - w[0], PI / 4.0, 1e-15));
        }
    }

    #[test]
    fn straight_limit_is_continuous() {
        let zero = subsegment_transform(&SubsegmentState::STRAIGHT, 0.02);
        for s in [
            SubsegmentState::new(1e-12, 0.0, 0.0),
            SubsegmentState::new(0.0, -1e-12, 0.0),
            SubsegmentState::new(7e-13, 7e-13, 0.0),
        ] {
            let t = subsegment_transform(&s, 0.02);
            assert!((t.rotation - zero.rotation).amax() < 1e-9);
            assert!((t.translation - zero.translation).amax() < 1e-9);
        }
        // Both branches of the series agree at the switch point.
        let below = subsegment_transform(&SubsegmentState::new(0.999e-6 / 0.02, 0.0, 0.0), 0.02);
        let above = subsegment_transform(&SubsegmentState::new(1.001e-6 / 0.02, 0.0, 0.0), 0.02);
        assert!((below.translation - above.translation).amax() < 1e-10);
    }

    fn state_strategy() -> impl Strategy<Value = SubsegmentState> {
        let kmax = 0.99 * PI / 0.02;
        (-kmax..kmax, -kmax..kmax, -PI..PI).prop_map(|(b, g, e)| SubsegmentState::new(b, g, e))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn rotations_are_proper(s in state_strategy()) {
            let t = subsegment_transform(&s, 0.02);
            let r = t.rotation;
            prop_assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn chord_never_exceeds_arc(s in state_strategy()) {
            let t = subsegment_transform(&s, 0.02);
            let n = t.translation.norm();
            prop_assert!(n <= 0.02 + 1e-17);
            if s.beta != 0.0 || s.gamma != 0.0 {
                prop_assert!(n < 0.02);
            }
        }

        #[test]
        fn bending_plane_rotation_is_equivariant(s in state_strategy(), delta in -PI..PI) {
            let (sd, cd) = delta.sin_cos();
            let rotated = SubsegmentState::new(
                cd * s.beta - sd * s.gamma,
                sd * s.beta + cd * s.gamma,
                s.twist,
            );
            let a = subsegment_transform(&s, 0.02).translation;
            let b = subsegment_transform(&rotated, 0.02).translation;
            prop_assert!((rot_z(delta) * a - b).amax() < 1e-10);
        }
    }
}
