//! Quasi-static torques and neck compression for a pose and pressure vector.
//!
//! Compression is reported in newtons: each tension is projected onto the unit
//! vector from the neck joint toward the head centre of mass, negated so that
//! tensions pulling the head down onto the neck count as positive.

use nalgebra::{Matrix3, Matrix3x5, Vector3, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpam::PA_PER_KPA;
use crate::geometry::{self, ActuatorState, HeadPose, SuitConfig, CHANNELS};

/// Channel pressures, kPa.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PressureVector(pub [f64; CHANNELS]);

impl PressureVector {
    pub fn zeros() -> Self {
        PressureVector([0.0; CHANNELS])
    }

    pub fn uniform(kpa: f64) -> Self {
        PressureVector([kpa; CHANNELS])
    }

    pub fn as_vector(&self) -> Vector5<f64> {
        Vector5::from(self.0)
    }

    pub fn from_vector(v: &Vector5<f64>) -> Self {
        PressureVector([v[0], v[1], v[2], v[3], v[4]])
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticsBreakdown {
    pub tau_fpam: Vector3<f64>,
    pub tau_elastic: Vector3<f64>,
    pub tau_gravity: Vector3<f64>,
    /// N, positive when pressing the head toward the torso.
    pub compression: f64,
    pub tensions: Vec<f64>,
    pub epsilons: Vec<f64>,
}

/// Pose-dependent quantities that make torque affine in pressure:
/// `τ_fpam = τ_elastic + A·p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseLinearization {
    pub states: Vec<ActuatorState>,
    /// N·m per kPa, one column per channel.
    pub a: Matrix3x5<f64>,
    pub tau_elastic: Vector3<f64>,
    pub tau_gravity: Vector3<f64>,
    /// Unit vector from the joint toward the head CoM, torso frame.
    pub com_direction: Vector3<f64>,
    /// Pa-scaled ideal coefficients per actuator, N per kPa.
    gains: Vec<f64>,
    elastic: Vec<f64>,
    channels: Vec<usize>,
}

impl PoseLinearization {
    pub fn new(suit: &SuitConfig, pose: &HeadPose) -> Result<Self> {
        Self::with_rotation(suit, &pose.rotation())
    }

    pub(crate) fn with_rotation(suit: &SuitConfig, rotation: &Matrix3<f64>) -> Result<Self> {
        let states = geometry::suit_states_with_rotation(suit, rotation)?;
        let mut a = Matrix3x5::zeros();
        let mut tau_elastic = Vector3::zeros();
        let mut gains = Vec::with_capacity(states.len());
        let mut elastic = Vec::with_capacity(states.len());
        let mut channels = Vec::with_capacity(states.len());
        for (act, s) in suit.actuators.iter().zip(&states) {
            let ch = act.path.channel - 1;
            let gain = act.params.ideal_force_coefficient(s.eps) * PA_PER_KPA;
            let f0 = act.params.elastic_force(s.eps);
            a.column_mut(ch).axpy(gain, &s.moment_arm, 1.0);
            tau_elastic.axpy(f0, &s.moment_arm, 1.0);
            gains.push(gain);
            elastic.push(f0);
            channels.push(ch);
        }
        let com = rotation * suit.body.com_offset;
        let com_direction = if com.norm() > 0.0 { com.normalize() } else { Vector3::z() };
        Ok(PoseLinearization {
            states,
            a,
            tau_elastic,
            tau_gravity: geometry::gravity_torque_with_rotation(&suit.body, rotation),
            com_direction,
            gains,
            elastic,
            channels,
        })
    }

    pub fn tensions(&self, p: &PressureVector) -> Vec<f64> {
        self.gains
            .iter()
            .zip(&self.elastic)
            .zip(&self.channels)
            .map(|((g, e), &ch)| g * p.0[ch] + e)
            .collect()
    }

    pub fn tau_fpam(&self, p: &PressureVector) -> Vector3<f64> {
        self.tau_elastic + self.a * p.as_vector()
    }

    pub fn compression(&self, p: &PressureVector) -> f64 {
        compression_from(&self.states, &self.tensions(p), &self.com_direction)
    }
}

fn compression_from(states: &[ActuatorState], tensions: &[f64], com_direction: &Vector3<f64>) -> f64 {
    -states
        .iter()
        .zip(tensions)
        .map(|(s, f)| f * s.direction.dot(com_direction))
        .sum::<f64>()
}

fn check_pressures(suit: &SuitConfig, p: &PressureVector) -> Result<()> {
    for (ch, &v) in p.0.iter().enumerate() {
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("channel {} pressure {v} kPa is negative", ch + 1)));
        }
    }
    for a in &suit.actuators {
        let v = p.0[a.path.channel - 1];
        if v > a.params.p_max_kpa {
            return Err(Error::Domain(format!(
                "channel {} pressure {v} kPa exceeds the {} kPa limit",
                a.path.channel, a.params.p_max_kpa
            )));
        }
    }
    Ok(())
}

/// Full torque and compression breakdown; pressures must lie in `[0, P_max]`.
pub fn evaluate(suit: &SuitConfig, pose: &HeadPose, pressures: &PressureVector) -> Result<StaticsBreakdown> {
    check_pressures(suit, pressures)?;
    let states = geometry::suit_states(suit, pose)?;
    let mut tensions = Vec::with_capacity(states.len());
    let mut tau_fpam = Vector3::zeros();
    let mut tau_elastic = Vector3::zeros();
    for (act, s) in suit.actuators.iter().zip(&states) {
        let f = act.params.force(s.eps, pressures.0[act.path.channel - 1])?;
        tau_fpam += s.moment_arm * f;
        tau_elastic += s.moment_arm * act.params.elastic_force(s.eps);
        tensions.push(f);
    }
    let rotation = pose.rotation();
    let com = rotation * suit.body.com_offset;
    let com_direction = if com.norm() > 0.0 { com.normalize() } else { Vector3::z() };
    Ok(StaticsBreakdown {
        tau_fpam,
        tau_elastic,
        tau_gravity: geometry::gravity_torque(&suit.body, pose),
        compression: compression_from(&states, &tensions, &com_direction),
        epsilons: states.iter().map(|s| s.eps).collect(),
        tensions,
    })
}

/// 3 × 5 matrix with `τ_fpam − τ_elastic = A·p` (p in kPa).
pub fn coefficient_matrix(suit: &SuitConfig, pose: &HeadPose) -> Result<Matrix3x5<f64>> {
    Ok(PoseLinearization::new(suit, pose)?.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpam::FpamParams;
    use crate::geometry::{Actuator, ActuatorGroup, ActuatorPath, BodyParams};
    use approx::assert_relative_eq;

    fn single(head: Vector3<f64>, vest: Vector3<f64>) -> SuitConfig {
        SuitConfig {
            name: "single".into(),
            body: BodyParams::default(),
            actuators: vec![Actuator {
                path: ActuatorPath {
                    head_mount: head,
                    waypoints: vec![],
                    vest_mount: vest,
                    channel: 2,
                    group: ActuatorGroup::FrontLong,
                },
                params: FpamParams::reference(0.3),
            }],
        }
    }

    #[test]
    fn zero_pressure_gives_elastic_torque() {
        let suit = single(Vector3::new(0.03, 0.06, 0.1), Vector3::new(0.05, 0.12, -0.12));
        let b = evaluate(&suit, &HeadPose::new(-10.0, 5.0, 3.0), &PressureVector::zeros()).unwrap();
        assert_eq!(b.tau_fpam, b.tau_elastic);
    }

    #[test]
    fn aligned_actuator_compression_equals_tension() {
        // Pulls straight down the neck line.
        let suit = single(Vector3::new(0.0, 0.0, 0.1), Vector3::new(0.0, 0.0, -0.15));
        let b = evaluate(&suit, &HeadPose::NEUTRAL, &PressureVector::uniform(20.0)).unwrap();
        assert_relative_eq!(b.compression, b.tensions[0], epsilon = 1e-12);
        assert_eq!(b.tau_fpam, Vector3::zeros());
    }

    #[test]
    fn single_actuator_column() {
        let suit = single(Vector3::new(0.03, 0.06, 0.1), Vector3::new(0.05, 0.12, -0.12));
        let pose = HeadPose::new(-10.0, 5.0, 3.0);
        let a = coefficient_matrix(&suit, &pose).unwrap();
        let s = geometry::actuator_state(&suit.actuators[0].path, &suit.actuators[0].params, &pose).unwrap();
        let expected = s.moment_arm * suit.actuators[0].params.ideal_force_coefficient(s.eps) * 1000.0;
        assert_relative_eq!(a.column(1).into_owned(), expected, epsilon = 1e-15);
        for ch in [0, 2, 3, 4] {
            assert_eq!(a.column(ch).norm(), 0.0);
        }
    }

    #[test]
    fn parallel_mount_contributes_nothing() {
        let suit = single(Vector3::new(0.0, 0.0, 0.1), Vector3::new(0.0, 0.0, -0.2));
        let a = coefficient_matrix(&suit, &HeadPose::NEUTRAL).unwrap();
        assert_eq!(a.norm(), 0.0);
    }

    #[test]
    fn pressure_range_checked() {
        let suit = single(Vector3::new(0.0, 0.0, 0.1), Vector3::new(0.0, 0.0, -0.2));
        let mut p = PressureVector::zeros();
        p.0[1] = 138.5;
        assert!(matches!(evaluate(&suit, &HeadPose::NEUTRAL, &p), Err(Error::Domain(_))));
        p.0[1] = -0.1;
        assert!(matches!(evaluate(&suit, &HeadPose::NEUTRAL, &p), Err(Error::Domain(_))));
        // Channels without actuators may still exceed the limit of other channels.
        let mut q = PressureVector::zeros();
        q.0[0] = 500.0;
        assert!(evaluate(&suit, &HeadPose::NEUTRAL, &q).is_ok());
    }

    #[test]
    fn linearization_matches_evaluate() {
        let suit = single(Vector3::new(0.03, 0.06, 0.1), Vector3::new(0.05, 0.12, -0.12));
        let pose = HeadPose::new(-25.0, 10.0, -5.0);
        let p = PressureVector([0.0, 71.0, 0.0, 0.0, 0.0]);
        let lin = PoseLinearization::new(&suit, &pose).unwrap();
        let b = evaluate(&suit, &pose, &p).unwrap();
        assert_relative_eq!(lin.tau_fpam(&p), b.tau_fpam, epsilon = 1e-12);
        assert_relative_eq!(lin.compression(&p), b.compression, epsilon = 1e-12);
        assert_eq!(lin.tau_gravity, b.tau_gravity);
    }
}
