//! Torque profiles of alternative actuator placements.
//!
//! Configurations, all taken from the right-hand side of the suit:
//!
//! 1. long and short front actuators
//! 2. long front actuator only
//! 3. crossed back actuator anchored on the back of the vest
//! 4. as 3 but attached at the headpiece mid-point (upside-down "V")
//! 5. as 3 with routing point and vest anchor mirrored to the front of the vest
//! 6. as 4 with the front anchoring of 5
//!
//! Re-routed actuators keep the contraction they have at the resting pose, so
//! their stretched length scales with the new path length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Actuator, ActuatorGroup, Axis, HeadPose, SuitConfig};

const MEASURED_CSV: &str = include_str!("../data/measured_force.csv");
const BOUNDARY_BISECTIONS: usize = 60;
const GAUSS_LEGENDRE_3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementConfig {
    pub id: u8,
    pub actuators: Vec<Actuator>,
    pub axes: Vec<Axis>,
}

/// +1 when the configuration's pulling direction is the positive axis direction.
pub fn promoting_sign(axis: Axis) -> f64 {
    match axis {
        // Flexion and right turns are negative rotations.
        Axis::FE | Axis::AR => -1.0,
        Axis::LD => 1.0,
    }
}

fn find(suit: &SuitConfig, group: ActuatorGroup, right: bool) -> Result<Actuator> {
    suit.actuators
        .iter()
        .find(|a| a.path.group == group && (!right || a.path.head_mount.x > 0.0))
        .cloned()
        .ok_or_else(|| Error::Config(format!("suit has no right-side {group:?} actuator")))
}

fn rerouted(base: &Actuator, edit: impl FnOnce(&mut Actuator)) -> Result<Actuator> {
    let neutral = |a: &Actuator| -> Result<f64> {
        Ok(geometry::actuator_state(&a.path, &a.params, &HeadPose::NEUTRAL)?.length)
    };
    let base_length = neutral(base)?;
    let mut a = base.clone();
    edit(&mut a);
    let length = neutral(&a)?;
    a.params.l0 = base.params.l0 * length / base_length;
    Ok(a)
}

impl PlacementConfig {
    pub fn from_suit(suit: &SuitConfig, id: u8) -> Result<Self> {
        let front_axes = vec![Axis::FE, Axis::LD];
        let midpoint = |a: &mut Actuator| a.path.head_mount.x = 0.0;
        let to_front = |a: &mut Actuator| {
            for w in &mut a.path.waypoints {
                w.y = -w.y;
            }
            a.path.vest_mount.y = -a.path.vest_mount.y;
        };
        let cross = || find(suit, ActuatorGroup::BackCrossRight, false);
        let (actuators, axes) = match id {
            1 => (
                vec![find(suit, ActuatorGroup::FrontLong, true)?, find(suit, ActuatorGroup::FrontShort, true)?],
                front_axes,
            ),
            2 => (vec![find(suit, ActuatorGroup::FrontLong, true)?], front_axes),
            3 => (vec![cross()?], vec![Axis::AR]),
            4 => (vec![rerouted(&cross()?, midpoint)?], vec![Axis::AR]),
            5 => (vec![rerouted(&cross()?, to_front)?], vec![Axis::AR]),
            6 => (
                vec![rerouted(&cross()?, |a| {
                    midpoint(a);
                    to_front(a);
                })?],
                vec![Axis::AR],
            ),
            other => return Err(Error::Config(format!("unknown placement configuration {other} (expected 1-6)"))),
        };
        Ok(PlacementConfig { id, actuators, axes })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorqueProfile {
    pub config: u8,
    pub axis: Axis,
    pub angles: Vec<f64>,
    /// Torque component along the evaluated axis, N·m.
    pub torque: Vec<f64>,
    /// Every actuator at or below its stretched length.
    pub valid: Vec<bool>,
    /// Integral of the pulling-direction torque over the valid range, N·m·deg.
    pub integral: f64,
    /// Measure of the valid range, degrees.
    pub angle_range: f64,
    /// Axis torque at the resting pose, N·m.
    pub torque_at_zero: f64,
}

/// `(valid, axis torque)` at `angle` on `axis`; `pressure` None means each actuator's P_max.
fn sample(config: &PlacementConfig, axis: Axis, angle: f64, pressure: Option<f64>) -> Result<(bool, f64)> {
    let pose = HeadPose::on_axis(axis, angle);
    let rotation = pose.rotation();
    let mut valid = true;
    let mut torque = 0.0;
    for a in &config.actuators {
        let s = geometry::state_with_rotation(&a.path, &a.params, &rotation)?;
        valid &= s.eps >= 0.0;
        let p = pressure.unwrap_or(a.params.p_max_kpa);
        torque += s.moment_arm[axis.index()] * a.params.force(s.eps, p)?;
    }
    Ok((valid, torque))
}

pub fn torque_profile(
    config: &PlacementConfig,
    axis: Axis,
    pressure: Option<f64>,
    resolution: f64,
) -> Result<TorqueProfile> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::Domain(format!("resolution must be positive, got {resolution}")));
    }
    let (lo, hi) = axis.biological_range();
    let n = ((hi - lo) / resolution - 1e-9).ceil() as usize;
    let angles: Vec<f64> = (0..=n).map(|i| (lo + resolution * i as f64).min(hi)).collect();
    let mut valid = Vec::with_capacity(angles.len());
    let mut torque = Vec::with_capacity(angles.len());
    for &a in &angles {
        let (v, t) = sample(config, axis, a, pressure)?;
        valid.push(v);
        torque.push(t);
    }

    let sign = promoting_sign(axis);
    // Three-point Gauss–Legendre on each valid piece of each sweep interval.
    let piece = |a: f64, b: f64| -> Result<f64> {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut sum = 0.0;
        for (x, w) in GAUSS_LEGENDRE_3 {
            sum += w * sample(config, axis, mid + half * x, pressure)?.1;
        }
        Ok(sign * half * sum)
    };
    let mut integral = 0.0;
    let mut angle_range = 0.0;
    for i in 0..angles.len().saturating_sub(1) {
        let (a0, a1) = (angles[i], angles[i + 1]);
        let (from, to) = match (valid[i], valid[i + 1]) {
            (true, true) => (a0, a1),
            (false, false) => continue,
            (start_valid, _) => {
                // Locate the stretch limit inside the interval.
                let (mut good, mut bad) = if start_valid { (a0, a1) } else { (a1, a0) };
                for _ in 0..BOUNDARY_BISECTIONS {
                    let mid = 0.5 * (good + bad);
                    if sample(config, axis, mid, pressure)?.0 {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                if start_valid { (a0, good) } else { (good, a1) }
            }
        };
        integral += piece(from, to)?;
        angle_range += to - from;
    }
    let torque_at_zero = sample(config, axis, 0.0, pressure)?.1;
    Ok(TorqueProfile {
        config: config.id,
        axis,
        angles,
        torque,
        valid,
        integral,
        angle_range,
        torque_at_zero,
    })
}

/// Benchtop force readings kept for side-by-side reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredForce {
    pub config: u8,
    pub axis: Axis,
    pub measured_force_n: f64,
}

pub fn measured_reference() -> Vec<MeasuredForce> {
    let mut rdr = csv::Reader::from_reader(MEASURED_CSV.as_bytes());
    rdr.deserialize()
        .collect::<std::result::Result<Vec<MeasuredForce>, _>>()
        .expect("shipped measured-force table is well formed")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub config: u8,
    pub axis: Axis,
    pub torque_integral_nm_deg: f64,
    pub angle_range_deg: f64,
    pub torque_at_zero_nm: f64,
    /// Torque at rest along the pulling direction, N·m.
    pub promoting_torque_at_zero_nm: f64,
    pub measured_force_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisRanking {
    pub axis: Axis,
    /// Configuration ids, strongest pulling torque at rest first.
    pub order: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignComparison {
    pub pressure_kpa: Option<f64>,
    pub resolution_deg: f64,
    pub summaries: Vec<DesignSummary>,
    pub rankings: Vec<AxisRanking>,
    #[serde(skip)]
    pub profiles: Vec<TorqueProfile>,
}

pub fn compare(suit: &SuitConfig, ids: &[u8], pressure: Option<f64>, resolution: f64) -> Result<DesignComparison> {
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let measured = measured_reference();
    let mut summaries = Vec::new();
    let mut profiles = Vec::new();
    for &id in &ids {
        let config = PlacementConfig::from_suit(suit, id)?;
        for &axis in &config.axes {
            let p = torque_profile(&config, axis, pressure, resolution)?;
            summaries.push(DesignSummary {
                config: id,
                axis,
                torque_integral_nm_deg: p.integral,
                angle_range_deg: p.angle_range,
                torque_at_zero_nm: p.torque_at_zero,
                promoting_torque_at_zero_nm: promoting_sign(axis) * p.torque_at_zero,
                measured_force_n: measured
                    .iter()
                    .find(|m| m.config == id && m.axis == axis)
                    .map(|m| m.measured_force_n),
            });
            profiles.push(p);
        }
    }
    let mut rankings = Vec::new();
    for axis in Axis::ALL {
        let mut rows: Vec<&DesignSummary> = summaries.iter().filter(|s| s.axis == axis).collect();
        if rows.is_empty() {
            continue;
        }
        rows.sort_by(|a, b| {
            b.promoting_torque_at_zero_nm
                .total_cmp(&a.promoting_torque_at_zero_nm)
                .then(a.config.cmp(&b.config))
        });
        rankings.push(AxisRanking { axis, order: rows.iter().map(|s| s.config).collect() });
    }
    Ok(DesignComparison {
        pressure_kpa: pressure,
        resolution_deg: resolution,
        summaries,
        rankings,
        profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpam::FpamParams;
    use crate::geometry::ActuatorPath;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn synthetic(scale: f64) -> PlacementConfig {
        let head = Vector3::new(0.05, -0.06, 0.1) * scale;
        let offset = Vector3::new(-0.15, -0.05, -0.25);
        PlacementConfig {
            id: 3,
            actuators: vec![Actuator {
                path: ActuatorPath {
                    head_mount: head,
                    waypoints: vec![],
                    vest_mount: head + offset,
                    channel: 4,
                    group: ActuatorGroup::BackCrossRight,
                },
                params: FpamParams::reference(0.34),
            }],
            axes: vec![Axis::AR],
        }
    }

    #[test]
    fn zero_pressure_zero_polynomial_is_flat() {
        let mut c = synthetic(1.0);
        c.actuators[0].params.p = [0.0; 4];
        let p = torque_profile(&c, Axis::AR, Some(0.0), 1.0).unwrap();
        assert!(p.torque.iter().all(|t| *t == 0.0));
        assert_eq!(p.integral, 0.0);
    }

    #[test]
    fn doubled_moment_arm_doubles_torque() {
        let a = torque_profile(&synthetic(1.0), Axis::AR, None, 1.0).unwrap();
        let b = torque_profile(&synthetic(2.0), Axis::AR, None, 1.0).unwrap();
        assert!(a.torque_at_zero.abs() > 1e-3);
        assert_relative_eq!(b.torque_at_zero, 2.0 * a.torque_at_zero, max_relative = 1e-12);
    }

    #[test]
    fn sweep_covers_range() {
        let p = torque_profile(&synthetic(1.0), Axis::AR, None, 0.7).unwrap();
        assert_eq!(p.angles[0], -80.8);
        assert_eq!(*p.angles.last().unwrap(), 77.7);
        assert!(p.angles.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.7 + 1e-12));
        assert!(torque_profile(&synthetic(1.0), Axis::AR, None, 0.0).is_err());
    }

    #[test]
    fn measured_table() {
        let m = measured_reference();
        assert_eq!(m.len(), 6);
        assert!(m.iter().any(|r| r.config == 5 && r.axis == Axis::AR && r.measured_force_n == 23.2));
    }

    #[test]
    fn unknown_config() {
        let suit = crate::config::default_suit();
        assert!(matches!(PlacementConfig::from_suit(&suit, 7), Err(Error::Config(_))));
        assert!(compare(&suit, &[0], None, 1.0).is_err());
    }

    #[test]
    fn order_independent() {
        let suit = crate::config::default_suit();
        let a = compare(&suit, &[3, 4, 5, 6], None, 1.0).unwrap();
        let b = compare(&suit, &[6, 4, 3, 5], None, 1.0).unwrap();
        assert_eq!(a.rankings, b.rankings);
        assert_eq!(a.summaries, b.summaries);
        let single = compare(&suit, &[4], None, 1.0).unwrap();
        assert_eq!(single.rankings[0].order, vec![4]);
    }

    #[test]
    fn derived_configs_share_geometry() {
        let suit = crate::config::default_suit();
        let c = |id| PlacementConfig::from_suit(&suit, id).unwrap().actuators[0].path.clone();
        assert_eq!(c(4).head_mount, c(6).head_mount);
        assert_eq!(c(4).head_mount.x, 0.0);
        assert_eq!(c(5).vest_mount.y, -c(3).vest_mount.y);
        assert_eq!(c(6).vest_mount, c(5).vest_mount);
        assert_eq!(c(3).vest_mount, c(4).vest_mount);
    }
}
