//! Gravity-compensating pressures and the per-pose feasibility conditions.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{HeadPose, SuitConfig, CHANNELS};
use crate::nnls::{self, NnlsProblem, DEFAULT_OMEGA};
use crate::statics::{PoseLinearization, PressureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensationSettings {
    pub omega: f64,
    /// Accepted torque error as a fraction of the gravitational torque.
    pub relative_tolerance: f64,
    /// Accepted torque error regardless of the gravitational torque, N·m.
    pub absolute_tolerance: f64,
}

impl Default for CompensationSettings {
    fn default() -> Self {
        CompensationSettings {
            omega: DEFAULT_OMEGA,
            relative_tolerance: 0.25,
            absolute_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitingCondition {
    None,
    Reachability,
    TorqueError,
    PressureLimit,
    SolverNonConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub pose: HeadPose,
    /// Every actuator at or below its stretched length.
    pub reachable: bool,
    pub grav_ok: bool,
    /// Solved pressures; absent only when the solver did not converge.
    pub pressures: Option<PressureVector>,
    pub tau_gravity: Vector3<f64>,
    /// `τ_fpam + τ_grav` at the solved pressures, N·m.
    pub torque_error: Vector3<f64>,
    /// `‖τ_err‖ / ‖τ_grav‖`; absent when the gravitational torque vanishes.
    pub relative_error: Option<f64>,
    /// N, at the solved pressures.
    pub compression: f64,
    pub limiting_condition: LimitingCondition,
}

/// Channel limits: the smallest `P_max` among the actuators on each channel.
pub fn channel_limits(suit: &SuitConfig) -> [f64; CHANNELS] {
    let mut limits = [f64::INFINITY; CHANNELS];
    for a in &suit.actuators {
        let l = &mut limits[a.path.channel - 1];
        *l = l.min(a.params.p_max_kpa);
    }
    limits
}

pub fn solve_pose(suit: &SuitConfig, pose: &HeadPose) -> Result<FeasibilityReport> {
    solve_pose_with(suit, pose, &CompensationSettings::default())
}

pub fn solve_pose_with(
    suit: &SuitConfig,
    pose: &HeadPose,
    settings: &CompensationSettings,
) -> Result<FeasibilityReport> {
    pose.validate()?;
    let lin = PoseLinearization::new(suit, pose)?;
    let reachable = lin.states.iter().all(|s| s.eps >= 0.0);

    let tau_des = -lin.tau_elastic - lin.tau_gravity;
    let problem = NnlsProblem::new(
        DMatrix::from_iterator(3, CHANNELS, lin.a.iter().copied()),
        DVector::from_iterator(3, tau_des.iter().copied()),
        settings.omega,
    );
    let sol = nnls::solve(&problem);
    let pressures = PressureVector::from_vector(&sol.x.fixed_rows::<CHANNELS>(0).into_owned());
    let evaluated = if sol.converged { pressures } else { PressureVector::zeros() };

    let torque_error = lin.tau_fpam(&evaluated) + lin.tau_gravity;
    let err = torque_error.norm();
    let grav = lin.tau_gravity.norm();
    let relative_error = (grav > 0.0).then(|| err / grav);
    let torque_ok = err <= settings.absolute_tolerance
        || relative_error.is_some_and(|r| r <= settings.relative_tolerance);
    let limits = channel_limits(suit);
    let within_limits = evaluated.0.iter().zip(&limits).all(|(p, l)| *p <= *l);
    let grav_ok = sol.converged && torque_ok && within_limits;

    let limiting_condition = if !sol.converged {
        LimitingCondition::SolverNonConvergence
    } else if !torque_ok {
        LimitingCondition::TorqueError
    } else if !within_limits {
        LimitingCondition::PressureLimit
    } else if !reachable {
        LimitingCondition::Reachability
    } else {
        LimitingCondition::None
    };

    Ok(FeasibilityReport {
        pose: *pose,
        reachable,
        grav_ok,
        pressures: sol.converged.then_some(pressures),
        tau_gravity: lin.tau_gravity,
        torque_error,
        relative_error,
        compression: lin.compression(&evaluated),
        limiting_condition,
    })
}

/// The three feasibility conditions at one pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub reachable: bool,
    pub grav_ok: bool,
    pub compression_ok: bool,
}

/// Per-pose outcome consumed by the range-of-motion and workspace scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseEvaluation {
    pub reachable: bool,
    pub grav_ok: bool,
    pub compression: f64,
    pub pressures: Option<PressureVector>,
}

impl PoseEvaluation {
    pub fn conditions(&self, compression_limit: Option<f64>) -> Conditions {
        Conditions {
            reachable: self.reachable,
            grav_ok: self.grav_ok,
            compression_ok: compression_limit.is_none_or(|l| self.compression <= l),
        }
    }
}

/// Anything that can judge a head pose.
pub trait FeasibilityModel: Sync {
    fn evaluate(&self, pose: &HeadPose) -> Result<PoseEvaluation>;
}

impl FeasibilityModel for SuitConfig {
    fn evaluate(&self, pose: &HeadPose) -> Result<PoseEvaluation> {
        let r = solve_pose(self, pose)?;
        Ok(PoseEvaluation {
            reachable: r.reachable,
            grav_ok: r.grav_ok,
            compression: r.compression,
            pressures: r.pressures,
        })
    }
}

/// Conditions are evaluated independently; the compression condition is true
/// when no limit is given.
pub fn classify<M: FeasibilityModel + ?Sized>(
    model: &M,
    pose: &HeadPose,
    compression_limit: Option<f64>,
) -> Result<Conditions> {
    Ok(model.evaluate(pose)?.conditions(compression_limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_suit;
    use crate::statics;

    #[test]
    fn neutral_pose_is_compensated() {
        let suit = default_suit();
        let r = solve_pose(&suit, &HeadPose::NEUTRAL).unwrap();
        assert_eq!(r.tau_gravity, Vector3::zeros());
        assert!(r.relative_error.is_none());
        assert!(r.grav_ok, "{r:?}");
        assert!(r.torque_error.norm() <= 0.01);
        assert!(r.pressures.is_some());
    }

    #[test]
    fn zero_moment_arms_cannot_compensate() {
        let pose = HeadPose::new(-30.0, 0.0, 0.0);
        let rt = pose.rotation().transpose();
        let mut suit = default_suit();
        for a in &mut suit.actuators {
            // Rotated head mount on the line through the joint and the routing point.
            let last = a.path.last_fixed_point();
            a.path.head_mount = rt * (-last.normalize() * 0.1);
        }
        let r = solve_pose(&suit, &pose).unwrap();
        assert!(!r.grav_ok);
        assert_eq!(r.limiting_condition, LimitingCondition::TorqueError);
        assert_eq!(r.pressures.unwrap(), PressureVector::zeros());
    }

    #[test]
    fn unreachable_pose_still_evaluates_gravity() {
        let suit = default_suit();
        let pose = HeadPose::new(0.0, 42.0, 0.0);
        let r = solve_pose(&suit, &pose).unwrap();
        assert!(!r.reachable);
        let lin = PoseLinearization::new(&suit, &pose).unwrap();
        assert!(lin.states.iter().any(|s| s.eps < 0.0));
        assert!(r.pressures.is_some());
    }

    #[test]
    fn grav_ok_survives_re_evaluation() {
        let suit = default_suit();
        for pose in [HeadPose::new(-30.0, 0.0, 0.0), HeadPose::new(20.0, 10.0, 0.0)] {
            let r = solve_pose(&suit, &pose).unwrap();
            if !r.grav_ok {
                continue;
            }
            let p = r.pressures.unwrap();
            let b = statics::evaluate(&suit, &pose, &p).unwrap();
            let err = (b.tau_fpam + b.tau_gravity).norm();
            assert!(err <= (0.25 * b.tau_gravity.norm()).max(0.01) + 1e-12);
        }
    }

    #[test]
    fn compression_limits() {
        let suit = default_suit();
        let pose = HeadPose::new(-20.0, 0.0, 0.0);
        assert!(classify(&suit, &pose, None).unwrap().compression_ok);
        assert!(classify(&suit, &pose, Some(f64::INFINITY)).unwrap().compression_ok);
        let c = suit.evaluate(&pose).unwrap().compression;
        assert!(c > 0.0);
        assert!(!classify(&suit, &pose, Some(0.0)).unwrap().compression_ok);
        let mut prev = false;
        for i in 0..200 {
            let ok = classify(&suit, &pose, Some(i as f64)).unwrap().compression_ok;
            assert!(ok || !prev);
            prev = ok;
        }
    }

    #[test]
    fn deterministic() {
        let suit = default_suit();
        let pose = HeadPose::new(-12.5, 7.5, 22.5);
        let a = solve_pose(&suit, &pose).unwrap();
        let b = solve_pose(&suit, &pose).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
