//! Closed-loop trajectory tracking on a dynamic head-neck model.

pub mod controller;
pub mod metrics;
pub mod plant;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Axis, HeadPose};
use crate::statics::PressureVector;

pub use controller::{antagonistic_controller, AntagonisticController, AxisLoop, ControllerConfig};
pub use metrics::{metrics, TrackingMetrics};
pub use plant::{step, PendulumPlant, Plant, PlantParams, PlantState};

/// Sinusoid about the resting pose on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub axis: Axis,
    /// Degrees; the sign sets the initial direction.
    #[serde(default = "default_amplitude")]
    pub amplitude_deg: f64,
    #[serde(default = "default_period")]
    pub period_s: f64,
    #[serde(default = "default_cycles")]
    pub cycles: u32,
}

fn default_amplitude() -> f64 {
    20.0
}

fn default_period() -> f64 {
    25.0
}

fn default_cycles() -> u32 {
    4
}

impl TrajectorySpec {
    pub fn new(axis: Axis) -> Self {
        TrajectorySpec { axis, amplitude_deg: default_amplitude(), period_s: default_period(), cycles: default_cycles() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude_deg.is_finite() || self.amplitude_deg.abs() >= 90.0 {
            return Err(Error::Config(format!("amplitude {} outside (-90, 90)", self.amplitude_deg)));
        }
        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            return Err(Error::Config(format!("period must be positive, got {}", self.period_s)));
        }
        if self.cycles == 0 {
            return Err(Error::Config("at least one cycle is required".into()));
        }
        Ok(())
    }

    pub fn reference_angle(&self, t: f64) -> f64 {
        self.amplitude_deg * (2.0 * PI * t / self.period_s).sin()
    }

    pub fn reference_pose(&self, t: f64) -> HeadPose {
        HeadPose::on_axis(self.axis, self.reference_angle(t))
    }

    pub fn duration(&self) -> f64 {
        self.period_s * self.cycles as f64
    }
}

/// Series sampled at each controller update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySeries {
    pub axis: Axis,
    pub dt: f64,
    pub time: Vec<f64>,
    pub reference: Vec<HeadPose>,
    pub measured: Vec<HeadPose>,
    /// Commanded pressures, kPa.
    pub pressures: Vec<PressureVector>,
}

impl TrajectorySeries {
    fn new(axis: Axis, dt: f64, capacity: usize) -> Self {
        TrajectorySeries {
            axis,
            dt,
            time: Vec::with_capacity(capacity),
            reference: Vec::with_capacity(capacity),
            measured: Vec::with_capacity(capacity),
            pressures: Vec::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn reference_angles(&self) -> Vec<f64> {
        self.reference.iter().map(|p| p.angle(self.axis)).collect()
    }

    pub fn measured_angles(&self) -> Vec<f64> {
        self.measured.iter().map(|p| p.angle(self.axis)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub series: TrajectorySeries,
    pub delay_s: f64,
    pub rmse_deg: f64,
}

/// A failed run with whatever was recorded before the fault.
#[derive(Debug)]
pub struct TrackFailure {
    pub error: Error,
    pub partial: TrajectorySeries,
}

impl fmt::Display for TrackFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} samples recorded)", self.error, self.partial.len())
    }
}

impl std::error::Error for TrackFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<TrackFailure> for Error {
    fn from(f: TrackFailure) -> Self {
        f.error
    }
}

/// Runs the controller against `plant` for the whole trajectory. The command
/// is held between controller updates while the plant integrates at its own
/// timestep.
pub fn track<P: Plant>(
    plant: &mut P,
    controller: &ControllerConfig,
    spec: &TrajectorySpec,
) -> std::result::Result<TrajectoryResult, Box<TrackFailure>> {
    let dt = 1.0 / controller.rate_hz;
    let fail = |error: Error, partial: TrajectorySeries| Box::new(TrackFailure { error, partial });
    if let Err(e) = spec.validate() {
        return Err(fail(e, TrajectorySeries::new(spec.axis, dt, 0)));
    }
    let mut ctl = match AntagonisticController::new(controller.clone()) {
        Ok(c) => c,
        Err(e) => return Err(fail(e, TrajectorySeries::new(spec.axis, dt, 0))),
    };
    let n = (spec.duration() * controller.rate_hz).round() as usize;
    let mut series = TrajectorySeries::new(spec.axis, dt, n);
    let t0 = plant.time();
    for k in 0..n {
        let t = k as f64 * dt;
        let reference = spec.reference_pose(t);
        let measured = plant.pose();
        let command = ctl.update(&reference, &measured, dt);
        series.time.push(t);
        series.reference.push(reference);
        series.measured.push(measured);
        series.pressures.push(command);
        if let Err(e) = plant.advance(&command, t0 + (k + 1) as f64 * dt - plant.time()) {
            return Err(fail(e, series));
        }
    }
    let max_lag = (spec.period_s * controller.rate_hz).round() as usize;
    match metrics(&series.reference_angles(), &series.measured_angles(), dt, max_lag) {
        Ok(m) => Ok(TrajectoryResult { series, delay_s: m.delay_s, rmse_deg: m.rmse_deg }),
        Err(e) => Err(fail(e, series)),
    }
}

/// Pendulum plant starting at rest in the neutral pose with all channels at
/// the controller's baseline pressure.
pub fn track_pendulum(
    suit: &crate::geometry::SuitConfig,
    params: &PlantParams,
    controller: &ControllerConfig,
    spec: &TrajectorySpec,
) -> std::result::Result<TrajectoryResult, Box<TrackFailure>> {
    let initial = PlantState::at_rest(&HeadPose::NEUTRAL, PressureVector::uniform(controller.initial_pressure_kpa));
    let mut plant = match PendulumPlant::new(suit, params.clone(), initial) {
        Ok(p) => p,
        Err(error) => {
            let partial = TrajectorySeries::new(spec.axis, 1.0 / controller.rate_hz, 0);
            return Err(Box::new(TrackFailure { error, partial }));
        }
    };
    track(&mut plant, controller, spec)
}
