//! Head pose, actuator routing and the force Jacobian.
//!
//! Frames: the torso frame has its origin at the neck joint centre with x toward
//! the right shoulder, y forward and z up along the neck. The head frame
//! coincides with it at the neutral pose. Head orientation is the body-fixed
//! x-y-z Euler sequence `R = Rx(θx)·Ry(θy)·Rz(θz)` mapping head-frame vectors
//! into the torso frame.
//!
//! Sign conventions: flexion is negative θx, rightward lateral deviation is
//! positive θy and a right turn is negative θz.

use nalgebra::{Matrix3, Matrix3xX, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpam::FpamParams;

pub const CHANNELS: usize = 5;
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Below this the head mount and last fixed point are treated as coincident.
const DEGENERATE_SEGMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeadPose {
    /// Flexion-extension, degrees.
    pub theta_x: f64,
    /// Lateral deviation, degrees.
    pub theta_y: f64,
    /// Axial rotation, degrees.
    pub theta_z: f64,
}

impl HeadPose {
    pub const NEUTRAL: HeadPose = HeadPose { theta_x: 0.0, theta_y: 0.0, theta_z: 0.0 };

    pub fn new(theta_x: f64, theta_y: f64, theta_z: f64) -> Self {
        HeadPose { theta_x, theta_y, theta_z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        HeadPose::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.theta_x, self.theta_y, self.theta_z]
    }

    /// Pose with only `axis` set to `angle`.
    pub fn on_axis(axis: Axis, angle: f64) -> Self {
        let mut a = [0.0; 3];
        a[axis.index()] = angle;
        HeadPose::from_array(a)
    }

    pub fn angle(&self, axis: Axis) -> f64 {
        self.to_array()[axis.index()]
    }

    /// Every angle finite and within (−180°, 180°].
    pub fn validate(&self) -> Result<()> {
        for a in self.to_array() {
            if !a.is_finite() || a <= -180.0 || a > 180.0 {
                return Err(Error::Domain(format!(
                    "pose angle {a} outside (-180, 180] degrees"
                )));
            }
        }
        Ok(())
    }

    /// Head-to-torso rotation matrix.
    pub fn rotation(&self) -> Matrix3<f64> {
        let [x, y, z] = self.to_array().map(f64::to_radians);
        rot_x(x) * rot_y(y) * rot_z(z)
    }

    /// Inverse of [`HeadPose::rotation`]; θy is taken in [−90°, 90°].
    pub fn from_rotation(r: &Matrix3<f64>) -> Self {
        let theta_y = r[(0, 2)].clamp(-1.0, 1.0).asin();
        let (theta_x, theta_z) = if r[(0, 2)].abs() < 1.0 - 1e-12 {
            ((-r[(1, 2)]).atan2(r[(2, 2)]), (-r[(0, 1)]).atan2(r[(0, 0)]))
        } else {
            // Gimbal lock: only θx ± θz is determined; put it all in θx.
            (r[(2, 1)].atan2(r[(1, 1)]), 0.0)
        };
        HeadPose::new(
            wrap_degrees(theta_x.to_degrees()),
            theta_y.to_degrees(),
            wrap_degrees(theta_z.to_degrees()),
        )
    }

    /// Reflection across the sagittal plane.
    pub fn mirrored(&self) -> Self {
        HeadPose::new(self.theta_x, -self.theta_y, -self.theta_z)
    }
}

fn wrap_degrees(a: f64) -> f64 {
    if a <= -180.0 { a + 360.0 } else { a }
}

pub(crate) fn rot_x(a: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Vector3::x_axis(), a).into_inner()
}

pub(crate) fn rot_y(a: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Vector3::y_axis(), a).into_inner()
}

pub(crate) fn rot_z(a: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), a).into_inner()
}

/// Principal rotation axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    FE,
    LD,
    AR,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::FE, Axis::LD, Axis::AR];

    pub fn index(self) -> usize {
        match self {
            Axis::FE => 0,
            Axis::LD => 1,
            Axis::AR => 2,
        }
    }

    /// Biological range of motion from the resting pose, degrees.
    pub fn biological_range(self) -> (f64, f64) {
        match self {
            Axis::FE => (-59.5, 73.7),
            Axis::LD => (-40.9, 43.1),
            Axis::AR => (-80.8, 77.7),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::FE => "FE",
            Axis::LD => "LD",
            Axis::AR => "AR",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FE" => Ok(Axis::FE),
            "LD" => Ok(Axis::LD),
            "AR" => Ok(Axis::AR),
            other => Err(Error::Config(format!("unknown axis `{other}` (expected FE, LD or AR)"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorGroup {
    FrontLong,
    FrontShort,
    BackMiddle,
    BackCrossLeft,
    BackCrossRight,
}

/// Straight-line routing of one actuator.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorPath {
    /// Attachment on the headpiece, head frame, m.
    pub head_mount: Vector3<f64>,
    /// Routing points on the vest, torso frame, ordered from the vest mount
    /// toward the head.
    pub waypoints: Vec<Vector3<f64>>,
    /// Anchor on the vest, torso frame, m.
    pub vest_mount: Vector3<f64>,
    /// Pressure channel, 1-based.
    pub channel: usize,
    pub group: ActuatorGroup,
}

impl ActuatorPath {
    /// The fixed point the head-side segment pulls toward.
    pub fn last_fixed_point(&self) -> Vector3<f64> {
        *self.waypoints.last().unwrap_or(&self.vest_mount)
    }

    /// Length of the fixed part: vest mount through every routing point.
    pub fn fixed_length(&self) -> f64 {
        let mut prev = self.vest_mount;
        let mut total = 0.0;
        for w in &self.waypoints {
            total += (w - prev).norm();
            prev = *w;
        }
        total
    }

    /// Reflection across the sagittal plane (x → −x).
    pub fn mirrored(&self) -> Self {
        let m = |v: &Vector3<f64>| Vector3::new(-v.x, v.y, v.z);
        ActuatorPath {
            head_mount: m(&self.head_mount),
            waypoints: self.waypoints.iter().map(m).collect(),
            vest_mount: m(&self.vest_mount),
            channel: self.channel,
            group: match self.group {
                ActuatorGroup::BackCrossLeft => ActuatorGroup::BackCrossRight,
                ActuatorGroup::BackCrossRight => ActuatorGroup::BackCrossLeft,
                g => g,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Actuator {
    pub path: ActuatorPath,
    pub params: FpamParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    pub mass: f64,
    /// Head centre of mass, head frame, m.
    pub com_offset: Vector3<f64>,
    /// Magnitude of gravity along global −z, m/s².
    pub gravity: f64,
}

impl Default for BodyParams {
    fn default() -> Self {
        BodyParams {
            mass: 4.6,
            com_offset: Vector3::new(0.0, 0.0, 0.17),
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::Domain(format!("body mass must be positive, got {}", self.mass)));
        }
        if !self.com_offset.iter().all(|c| c.is_finite()) || !self.gravity.is_finite() {
            return Err(Error::Domain("non-finite body parameter".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuitConfig {
    pub name: String,
    pub body: BodyParams,
    pub actuators: Vec<Actuator>,
}

impl SuitConfig {
    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        for (i, a) in self.actuators.iter().enumerate() {
            a.params.validate()?;
            let p = &a.path;
            if !(1..=CHANNELS).contains(&p.channel) {
                return Err(Error::Config(format!(
                    "actuator {i}: channel {} outside 1..={CHANNELS}",
                    p.channel
                )));
            }
            if p.head_mount.norm() == 0.0 {
                return Err(Error::Config(format!("actuator {i}: head mount at the joint centre")));
            }
            let finite = p.head_mount.iter().chain(p.vest_mount.iter()).all(|c| c.is_finite())
                && p.waypoints.iter().flat_map(|w| w.iter()).all(|c| c.is_finite());
            if !finite {
                return Err(Error::Config(format!("actuator {i}: non-finite coordinate")));
            }
        }
        Ok(())
    }

    /// Channel (0-based) of each actuator.
    pub fn channel_index(&self, actuator: usize) -> usize {
        self.actuators[actuator].path.channel - 1
    }
}

/// Per-pose kinematic state of one actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorState {
    pub length: f64,
    pub eps: f64,
    /// `(R·b) × ĉ`, torso frame, m.
    pub moment_arm: Vector3<f64>,
    /// Unit direction of the tension acting on the head, torso frame.
    pub direction: Vector3<f64>,
    /// Rotated head mount, torso frame.
    pub head_point: Vector3<f64>,
}

pub fn actuator_state(path: &ActuatorPath, params: &FpamParams, pose: &HeadPose) -> Result<ActuatorState> {
    state_with_rotation(path, params, &pose.rotation())
}

pub(crate) fn state_with_rotation(
    path: &ActuatorPath,
    params: &FpamParams,
    rotation: &Matrix3<f64>,
) -> Result<ActuatorState> {
    let head_point = rotation * path.head_mount;
    let last = path.last_fixed_point();
    let segment = last - head_point;
    let seg_len = segment.norm();
    if seg_len < DEGENERATE_SEGMENT {
        return Err(Error::DegenerateGeometry(format!(
            "head mount coincides with its routing point on channel {}",
            path.channel
        )));
    }
    let direction = segment / seg_len;
    let length = path.fixed_length() + seg_len;
    Ok(ActuatorState {
        length,
        eps: params.contraction(length)?,
        moment_arm: head_point.cross(&direction),
        direction,
        head_point,
    })
}

/// States of all actuators at one pose.
pub fn suit_states(suit: &SuitConfig, pose: &HeadPose) -> Result<Vec<ActuatorState>> {
    suit_states_with_rotation(suit, &pose.rotation())
}

pub(crate) fn suit_states_with_rotation(suit: &SuitConfig, rotation: &Matrix3<f64>) -> Result<Vec<ActuatorState>> {
    suit.actuators
        .iter()
        .map(|a| state_with_rotation(&a.path, &a.params, rotation))
        .collect()
}

/// 3 × n force Jacobian; column i is `b_i × ĉ_i`, so `τ = J·f`.
pub fn jacobian(suit: &SuitConfig, pose: &HeadPose) -> Result<Matrix3xX<f64>> {
    let states = suit_states(suit, pose)?;
    Ok(Matrix3xX::from_columns(
        &states.iter().map(|s| s.moment_arm).collect::<Vec<_>>(),
    ))
}

/// Gravitational moment on the head about the neck joint, torso frame, N·m.
pub fn gravity_torque(body: &BodyParams, pose: &HeadPose) -> Vector3<f64> {
    gravity_torque_with_rotation(body, &pose.rotation())
}

pub(crate) fn gravity_torque_with_rotation(body: &BodyParams, rotation: &Matrix3<f64>) -> Vector3<f64> {
    (rotation * body.com_offset).cross(&Vector3::new(0.0, 0.0, -body.mass * body.gravity))
}

/// Analytic d(length)/d(θx, θy, θz), metres per radian.
pub fn length_gradient(path: &ActuatorPath, pose: &HeadPose) -> Result<Vector3<f64>> {
    let [x, y, z] = pose.to_array().map(f64::to_radians);
    let (rx, ry, rz) = (rot_x(x), rot_y(y), rot_z(z));
    let head_point = rx * ry * rz * path.head_mount;
    let segment = path.last_fixed_point() - head_point;
    let seg_len = segment.norm();
    if seg_len < DEGENERATE_SEGMENT {
        return Err(Error::DegenerateGeometry("zero-length head segment".into()));
    }
    let c_hat = segment / seg_len;
    // dR/dθ for each factor is the factor pre-multiplied by the axis' skew matrix.
    let skew = |v: Vector3<f64>| v.cross_matrix();
    let d = [
        skew(Vector3::x()) * rx * ry * rz,
        rx * skew(Vector3::y()) * ry * rz,
        rx * ry * skew(Vector3::z()) * rz,
    ];
    Ok(Vector3::from_iterator(d.iter().map(|dr| -c_hat.dot(&(dr * path.head_mount)))))
}
