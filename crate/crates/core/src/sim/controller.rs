//! Antagonistic per-axis feedback on channel pressures.
//!
//! Each active axis computes `u = kp·e + ki·∫e` from the angle error
//! `e = reference − measured` (degrees). `u` is added to the axis' agonist
//! channels and subtracted from its antagonist channels, starting from a common
//! baseline, and the result is clamped to the pressure bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Axis, HeadPose, CHANNELS};
use crate::statics::PressureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisLoop {
    pub axis: Axis,
    /// kPa per degree.
    pub kp: f64,
    /// kPa per degree-second.
    #[serde(default)]
    pub ki: f64,
    /// 1-based channels raised by a positive error.
    pub agonists: Vec<usize>,
    /// 1-based channels lowered by a positive error.
    pub antagonists: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub loops: Vec<AxisLoop>,
    #[serde(default = "default_initial")]
    pub initial_pressure_kpa: f64,
    #[serde(default = "default_bounds")]
    pub pressure_bounds_kpa: (f64, f64),
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
}

fn default_initial() -> f64 {
    34.5
}

fn default_bounds() -> (f64, f64) {
    (0.0, 138.0)
}

fn default_rate() -> f64 {
    100.0
}

const FE_JSON: &str = include_str!("../../configs/controller_fe.json");
const AR_JSON: &str = include_str!("../../configs/controller_ar.json");
const LD_JSON: &str = include_str!("../../configs/controller_ld.json");

impl ControllerConfig {
    /// Shipped tuning for tracking along `axis`. AR tracking also stabilises FE
    /// with the front pairs against the back-middle actuator.
    pub fn for_axis(axis: Axis) -> Self {
        let json = match axis {
            Axis::FE => FE_JSON,
            Axis::AR => AR_JSON,
            Axis::LD => LD_JSON,
        };
        let c: ControllerConfig = serde_json::from_str(json).expect("shipped controller config parses");
        c.validate().expect("shipped controller config is valid");
        c
    }

    pub fn parse(json: &str) -> Result<Self> {
        let c: ControllerConfig =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("controller config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.pressure_bounds_kpa;
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::Config(format!("invalid pressure bounds ({lo}, {hi})")));
        }
        if !(self.rate_hz > 0.0) {
            return Err(Error::Config(format!("controller rate must be positive, got {}", self.rate_hz)));
        }
        let mut owner: [Option<Axis>; CHANNELS] = [None; CHANNELS];
        let mut seen_axes = Vec::new();
        for l in &self.loops {
            if seen_axes.contains(&l.axis) {
                return Err(Error::Config(format!("axis {} configured twice", l.axis)));
            }
            seen_axes.push(l.axis);
            if !(l.kp.is_finite() && l.ki.is_finite()) {
                return Err(Error::Config(format!("non-finite gain on axis {}", l.axis)));
            }
            for &ch in l.agonists.iter().chain(&l.antagonists) {
                if !(1..=CHANNELS).contains(&ch) {
                    return Err(Error::Config(format!("channel {ch} outside 1..={CHANNELS}")));
                }
                if let Some(other) = owner[ch - 1] {
                    return Err(Error::Config(format!(
                        "channel {ch} claimed by both {other} and {} controllers",
                        l.axis
                    )));
                }
                owner[ch - 1] = Some(l.axis);
            }
        }
        Ok(())
    }
}

/// Stateless part of the controller: pressures for given feedback terms.
pub fn antagonistic_command(config: &ControllerConfig, feedback: &[f64]) -> PressureVector {
    let mut p = PressureVector::uniform(config.initial_pressure_kpa);
    for (l, u) in config.loops.iter().zip(feedback) {
        for &ch in &l.agonists {
            p.0[ch - 1] += u;
        }
        for &ch in &l.antagonists {
            p.0[ch - 1] -= u;
        }
    }
    let (lo, hi) = config.pressure_bounds_kpa;
    for v in &mut p.0 {
        *v = v.clamp(lo, hi);
    }
    p
}

/// Pressures for a proportional-only step from `reference` and `measured`.
pub fn antagonistic_controller(reference: &HeadPose, measured: &HeadPose, config: &ControllerConfig) -> PressureVector {
    let feedback: Vec<f64> = config
        .loops
        .iter()
        .map(|l| l.kp * (reference.angle(l.axis) - measured.angle(l.axis)))
        .collect();
    antagonistic_command(config, &feedback)
}

/// Controller with integral state.
#[derive(Debug, Clone)]
pub struct AntagonisticController {
    config: ControllerConfig,
    integrals: Vec<f64>,
}

impl AntagonisticController {
    pub fn new(config: ControllerConfig) -> Result<Self> {
        config.validate()?;
        let integrals = vec![0.0; config.loops.len()];
        Ok(AntagonisticController { config, integrals })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn update(&mut self, reference: &HeadPose, measured: &HeadPose, dt: f64) -> PressureVector {
        let span = self.config.pressure_bounds_kpa.1 - self.config.pressure_bounds_kpa.0;
        let feedback: Vec<f64> = self
            .config
            .loops
            .iter()
            .zip(self.integrals.iter_mut())
            .map(|(l, acc)| {
                let e = reference.angle(l.axis) - measured.angle(l.axis);
                if l.ki != 0.0 {
                    // Integral contribution limited to half the pressure span.
                    let cap = 0.5 * span / l.ki.abs();
                    *acc = (*acc + e * dt).clamp(-cap, cap);
                }
                l.kp * e + l.ki * *acc
            })
            .collect();
        antagonistic_command(&self.config, &feedback)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe_front_agonist(kp: f64) -> ControllerConfig {
        ControllerConfig {
            loops: vec![AxisLoop { axis: Axis::FE, kp, ki: 0.0, agonists: vec![1, 2], antagonists: vec![3, 4, 5] }],
            initial_pressure_kpa: 34.5,
            pressure_bounds_kpa: (0.0, 138.0),
            rate_hz: 100.0,
        }
    }

    #[test]
    fn zero_error_holds_baseline() {
        let c = fe_front_agonist(2.0);
        let pose = HeadPose::new(-12.0, 3.0, 4.0);
        assert_eq!(antagonistic_controller(&pose, &pose, &c), PressureVector::uniform(34.5));
    }

    #[test]
    fn feedback_split() {
        let c = fe_front_agonist(2.0);
        let p = antagonistic_controller(&HeadPose::new(5.0, 0.0, 0.0), &HeadPose::NEUTRAL, &c);
        assert_eq!(p.0, [44.5, 44.5, 24.5, 24.5, 24.5]);
    }

    #[test]
    fn saturation() {
        let c = fe_front_agonist(2.0);
        let p = antagonistic_controller(&HeadPose::new(40.0, 0.0, 0.0), &HeadPose::NEUTRAL, &c);
        assert_eq!(p.0[2..], [0.0, 0.0, 0.0]);
        assert_eq!(p.0[..2], [114.5, 114.5]);
        let p = antagonistic_controller(&HeadPose::new(80.0, 0.0, 0.0), &HeadPose::NEUTRAL, &c);
        assert_eq!(p.0[..2], [138.0, 138.0]);
    }

    #[test]
    fn conflicting_channels_rejected() {
        let mut c = fe_front_agonist(1.0);
        c.loops.push(AxisLoop { axis: Axis::AR, kp: 1.0, ki: 0.0, agonists: vec![4], antagonists: vec![5] });
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(AntagonisticController::new(c).is_err());
    }

    #[test]
    fn shipped_configs_valid() {
        for axis in Axis::ALL {
            let c = ControllerConfig::for_axis(axis);
            assert!(c.loops.iter().any(|l| l.axis == axis));
            assert_eq!(c.initial_pressure_kpa, 34.5);
        }
        let ar = ControllerConfig::for_axis(Axis::AR);
        assert!(ar.loops.iter().any(|l| l.axis == Axis::FE));
    }

    #[test]
    fn integral_accumulates() {
        let mut c = fe_front_agonist(0.0);
        c.loops[0].ki = 1.0;
        let mut ctl = AntagonisticController::new(c).unwrap();
        let r = HeadPose::new(1.0, 0.0, 0.0);
        ctl.update(&r, &HeadPose::NEUTRAL, 0.5);
        let p = ctl.update(&r, &HeadPose::NEUTRAL, 0.5);
        assert_eq!(p.0[0], 35.5);
    }
}
