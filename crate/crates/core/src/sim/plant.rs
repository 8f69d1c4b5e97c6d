//! Rigid head on a spherical neck joint driven by the suit's actuators.
//!
//! State is the head orientation (unit quaternion, body to torso frame), the
//! body-frame angular velocity and the actual channel pressures, which follow
//! the commanded pressures with a first-order lag.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{HeadPose, SuitConfig, CHANNELS};
use crate::statics::{PoseLinearization, PressureVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// Body-frame inertia about the joint, kg·m².
    pub inertia: Matrix3<f64>,
    /// Viscous damping per body axis, N·m·s/rad.
    pub damping: Vector3<f64>,
    /// Pneumatic lag, s. Zero makes pressures follow commands instantly.
    pub pneumatic_time_constant: f64,
    pub timestep: f64,
    /// Constant external torque in the torso frame, N·m.
    #[serde(default)]
    pub bias_torque: Vector3<f64>,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            inertia: Matrix3::from_diagonal(&Vector3::new(0.133, 0.133, 0.02)),
            damping: Vector3::repeat(0.5),
            pneumatic_time_constant: 0.3,
            timestep: 0.005,
            bias_torque: Vector3::zeros(),
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        if !self.inertia.iter().all(|v| v.is_finite()) || (self.inertia - self.inertia.transpose()).amax() > 1e-12 {
            return Err(Error::Config("inertia must be finite and symmetric".into()));
        }
        if self.inertia.cholesky().is_none() {
            return Err(Error::Config("inertia must be positive definite".into()));
        }
        if !self.damping.iter().all(|d| d.is_finite() && *d >= 0.0) {
            return Err(Error::Config("damping must be finite and nonnegative".into()));
        }
        if !(self.pneumatic_time_constant >= 0.0 && self.pneumatic_time_constant.is_finite()) {
            return Err(Error::Config("pneumatic time constant must be finite and nonnegative".into()));
        }
        if !(self.timestep > 0.0 && self.timestep.is_finite()) {
            return Err(Error::Config(format!("timestep must be positive, got {}", self.timestep)));
        }
        if !self.bias_torque.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("bias torque must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub time: f64,
    pub orientation: UnitQuaternion<f64>,
    /// Body frame, rad/s.
    pub angular_velocity: Vector3<f64>,
    pub pressures: PressureVector,
}

impl PlantState {
    pub fn at_rest(pose: &HeadPose, pressures: PressureVector) -> Self {
        PlantState {
            time: 0.0,
            orientation: UnitQuaternion::from_matrix(&pose.rotation()),
            angular_velocity: Vector3::zeros(),
            pressures,
        }
    }

    pub fn pose(&self) -> HeadPose {
        HeadPose::from_rotation(self.orientation.to_rotation_matrix().matrix())
    }

    fn is_finite(&self) -> bool {
        self.orientation.coords.iter().chain(self.angular_velocity.iter()).chain(self.pressures.0.iter()).all(|v| v.is_finite())
    }
}

/// Total energy of the unactuated, undamped pendulum: rotational kinetic plus
/// gravitational potential with the joint as datum.
pub fn pendulum_energy(state: &PlantState, params: &PlantParams, suit: &SuitConfig) -> f64 {
    let w = state.angular_velocity;
    let body = &suit.body;
    let height = (state.orientation * body.com_offset).z;
    0.5 * w.dot(&(params.inertia * w)) + body.mass * body.gravity * height
}

#[derive(Clone, Copy)]
struct Derivative {
    q: Vector4<f64>,
    w: Vector3<f64>,
    p: [f64; CHANNELS],
}

struct Dynamics<'a> {
    suit: &'a SuitConfig,
    params: &'a PlantParams,
    inertia_inv: Matrix3<f64>,
    command: &'a PressureVector,
}

impl Dynamics<'_> {
    fn eval(&self, q: &Vector4<f64>, w: &Vector3<f64>, p: &[f64; CHANNELS]) -> Result<Derivative> {
        let unit = UnitQuaternion::from_quaternion(Quaternion::from(*q));
        let rot = unit.to_rotation_matrix().into_inner();
        let lin = PoseLinearization::with_rotation(self.suit, &rot)?;
        let torso = lin.tau_fpam(&PressureVector(*p)) + lin.tau_gravity + self.params.bias_torque;
        let body = rot.transpose() * torso - self.params.damping.component_mul(w);
        let w_dot = self.inertia_inv * (body - w.cross(&(self.params.inertia * w)));
        let q_dot = (Quaternion::from(*q) * Quaternion::from_imag(*w)).coords * 0.5;
        let mut p_dot = [0.0; CHANNELS];
        if self.params.pneumatic_time_constant > 0.0 {
            for ((d, c), a) in p_dot.iter_mut().zip(self.command.0).zip(p) {
                *d = (c - a) / self.params.pneumatic_time_constant;
            }
        }
        Ok(Derivative { q: q_dot, w: w_dot, p: p_dot })
    }
}

fn advance(q: &Vector4<f64>, w: &Vector3<f64>, p: &[f64; CHANNELS], d: &Derivative, h: f64) -> (Vector4<f64>, Vector3<f64>, [f64; CHANNELS]) {
    let mut pn = *p;
    for (v, dv) in pn.iter_mut().zip(d.p) {
        *v += h * dv;
    }
    (q + d.q * h, w + d.w * h, pn)
}

/// One fixed RK4 step of length `params.timestep`.
pub fn step(state: &PlantState, command: &PressureVector, params: &PlantParams, suit: &SuitConfig) -> Result<PlantState> {
    let fault = |reason: String| Error::SimulationFault { time: state.time, reason };
    let inertia_inv = params.inertia.try_inverse().ok_or_else(|| fault("singular inertia".into()))?;
    let dyn_ = Dynamics { suit, params, inertia_inv, command };
    let h = params.timestep;
    let q0 = state.orientation.coords;
    let w0 = state.angular_velocity;
    let p0 = if params.pneumatic_time_constant > 0.0 { state.pressures.0 } else { command.0 };

    let wrap = |r: Result<Derivative>| r.map_err(|e| fault(e.to_string()));
    let k1 = wrap(dyn_.eval(&q0, &w0, &p0))?;
    let (q, w, p) = advance(&q0, &w0, &p0, &k1, 0.5 * h);
    let k2 = wrap(dyn_.eval(&q, &w, &p))?;
    let (q, w, p) = advance(&q0, &w0, &p0, &k2, 0.5 * h);
    let k3 = wrap(dyn_.eval(&q, &w, &p))?;
    let (q, w, p) = advance(&q0, &w0, &p0, &k3, h);
    let k4 = wrap(dyn_.eval(&q, &w, &p))?;

    let q = q0 + (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) * (h / 6.0);
    let w = w0 + (k1.w + k2.w * 2.0 + k3.w * 2.0 + k4.w) * (h / 6.0);
    let mut pressures = p0;
    for (i, v) in pressures.iter_mut().enumerate() {
        *v += (k1.p[i] + 2.0 * k2.p[i] + 2.0 * k3.p[i] + k4.p[i]) * (h / 6.0);
    }
    let next = PlantState {
        time: state.time + h,
        orientation: UnitQuaternion::from_quaternion(Quaternion::from(q)),
        angular_velocity: w,
        pressures: PressureVector(pressures),
    };
    if !next.is_finite() || q.norm() == 0.0 {
        return Err(fault("non-finite state".into()));
    }
    Ok(next)
}

/// Anything `track` can drive: it reports a pose and actual pressures and
/// advances under a held pressure command.
pub trait Plant {
    fn time(&self) -> f64;
    fn pose(&self) -> HeadPose;
    fn pressures(&self) -> PressureVector;
    fn advance(&mut self, command: &PressureVector, duration: f64) -> Result<()>;
}

/// The pendulum model integrated with [`step`].
#[derive(Debug, Clone)]
pub struct PendulumPlant<'a> {
    pub suit: &'a SuitConfig,
    pub params: PlantParams,
    pub state: PlantState,
}

impl<'a> PendulumPlant<'a> {
    pub fn new(suit: &'a SuitConfig, params: PlantParams, initial: PlantState) -> Result<Self> {
        params.validate()?;
        Ok(PendulumPlant { suit, params, state: initial })
    }
}

impl Plant for PendulumPlant<'_> {
    fn time(&self) -> f64 {
        self.state.time
    }

    fn pose(&self) -> HeadPose {
        self.state.pose()
    }

    fn pressures(&self) -> PressureVector {
        self.state.pressures
    }

    /// Whole timesteps covering `duration`, at least one.
    fn advance(&mut self, command: &PressureVector, duration: f64) -> Result<()> {
        let n = ((duration / self.params.timestep).round() as usize).max(1);
        for _ in 0..n {
            self.state = step(&self.state, command, &self.params, self.suit)?;
        }
        Ok(())
    }
}
