//! JSON documents for suit geometry.
//!
//! ```json
//! {"name": "...",
//!  "body": {"mass_kg": 4.6, "com_m": [0, 0, 0.17]},
//!  "actuators": [{"head_mount_m": [..], "waypoints_m": [[..]], "vest_mount_m": [..],
//!                 "channel": 1, "group": "front_long",
//!                 "fpam": {"r0_m": .., "alpha0_deg": .., "p": [..], "L0_m": .., "P_max_kpa": ..}}]}
//! ```

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpam::{FpamParams, SignConvention, DEFAULT_P_MAX_KPA};
use crate::geometry::{Actuator, ActuatorGroup, ActuatorPath, BodyParams, SuitConfig, STANDARD_GRAVITY};

const DEFAULT_SUIT_JSON: &str = include_str!("../configs/default_suit.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuitDocument {
    pub name: String,
    pub body: BodyDocument,
    pub actuators: Vec<ActuatorDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyDocument {
    pub mass_kg: f64,
    pub com_m: [f64; 3],
    #[serde(default = "default_gravity", skip_serializing_if = "is_standard_gravity")]
    pub gravity_mps2: f64,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

fn is_standard_gravity(g: &f64) -> bool {
    *g == STANDARD_GRAVITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorDocument {
    pub head_mount_m: [f64; 3],
    #[serde(default)]
    pub waypoints_m: Vec<[f64; 3]>,
    pub vest_mount_m: [f64; 3],
    pub channel: usize,
    pub group: ActuatorGroup,
    pub fpam: FpamDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpamDocument {
    pub r0_m: f64,
    pub alpha0_deg: f64,
    pub p: [f64; 4],
    #[serde(rename = "L0_m")]
    pub l0_m: f64,
    #[serde(rename = "P_max_kpa", default = "default_p_max")]
    pub p_max_kpa: f64,
    #[serde(default)]
    pub sign_convention: SignConvention,
}

fn default_p_max() -> f64 {
    DEFAULT_P_MAX_KPA
}

impl From<&FpamParams> for FpamDocument {
    fn from(p: &FpamParams) -> Self {
        FpamDocument {
            r0_m: p.r0,
            alpha0_deg: p.alpha0_deg,
            p: p.p,
            l0_m: p.l0,
            p_max_kpa: p.p_max_kpa,
            sign_convention: p.sign_convention,
        }
    }
}

impl From<&FpamDocument> for FpamParams {
    fn from(d: &FpamDocument) -> Self {
        FpamParams {
            r0: d.r0_m,
            alpha0_deg: d.alpha0_deg,
            p: d.p,
            l0: d.l0_m,
            p_max_kpa: d.p_max_kpa,
            sign_convention: d.sign_convention,
        }
    }
}

impl SuitDocument {
    pub fn into_suit(self) -> Result<SuitConfig> {
        let suit = SuitConfig {
            name: self.name,
            body: BodyParams {
                mass: self.body.mass_kg,
                com_offset: Vector3::from(self.body.com_m),
                gravity: self.body.gravity_mps2,
            },
            actuators: self
                .actuators
                .iter()
                .map(|a| Actuator {
                    path: ActuatorPath {
                        head_mount: Vector3::from(a.head_mount_m),
                        waypoints: a.waypoints_m.iter().map(|w| Vector3::from(*w)).collect(),
                        vest_mount: Vector3::from(a.vest_mount_m),
                        channel: a.channel,
                        group: a.group,
                    },
                    params: FpamParams::from(&a.fpam),
                })
                .collect(),
        };
        suit.validate()?;
        Ok(suit)
    }

    pub fn from_suit(suit: &SuitConfig) -> Self {
        let arr = |v: &Vector3<f64>| [v.x, v.y, v.z];
        SuitDocument {
            name: suit.name.clone(),
            body: BodyDocument {
                mass_kg: suit.body.mass,
                com_m: arr(&suit.body.com_offset),
                gravity_mps2: suit.body.gravity,
            },
            actuators: suit
                .actuators
                .iter()
                .map(|a| ActuatorDocument {
                    head_mount_m: arr(&a.path.head_mount),
                    waypoints_m: a.path.waypoints.iter().map(arr).collect(),
                    vest_mount_m: arr(&a.path.vest_mount),
                    channel: a.path.channel,
                    group: a.path.group,
                    fpam: FpamDocument::from(&a.params),
                })
                .collect(),
        }
    }
}

pub fn parse_suit(json: &str) -> Result<SuitConfig> {
    serde_json::from_str::<SuitDocument>(json)
        .map_err(|e| Error::Config(format!("suit config: {e}")))?
        .into_suit()
}

pub fn load_suit(path: &Path) -> Result<SuitConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_suit(&text)
}

/// The shipped seven-actuator suit.
///
/// Mount coordinates are a symmetric stand-in built to the prototype's layout
/// (two front pairs on shared channels with chest routing, a back-middle
/// actuator, two crossed back actuators); they were not measured on a body.
pub fn default_suit() -> SuitConfig {
    parse_suit(DEFAULT_SUIT_JSON).expect("shipped suit config is valid")
}

pub fn default_suit_json() -> &'static str {
    DEFAULT_SUIT_JSON
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CHANNELS;

    #[test]
    fn default_suit_layout() {
        let suit = default_suit();
        assert_eq!(suit.actuators.len(), 7);
        let mut channels: Vec<usize> = suit.actuators.iter().map(|a| a.path.channel).collect();
        channels.sort();
        channels.dedup();
        assert_eq!(channels.len(), CHANNELS);
        assert_eq!(suit.body.mass, 4.6);
        assert_eq!(suit.body.com_offset, Vector3::new(0.0, 0.0, 0.17));
        // Front actuators share channels in pairs.
        for ch in [1, 2] {
            let groups: Vec<_> = suit
                .actuators
                .iter()
                .filter(|a| a.path.channel == ch)
                .map(|a| a.path.group)
                .collect();
            assert_eq!(groups.len(), 2);
            assert!(groups.contains(&ActuatorGroup::FrontLong));
            assert!(groups.contains(&ActuatorGroup::FrontShort));
        }
        for a in &suit.actuators {
            assert_eq!(a.params.r0, FpamParams::TABLE_R0);
            assert_eq!(a.params.alpha0_deg, FpamParams::TABLE_ALPHA0_DEG);
            assert_eq!(a.params.p, FpamParams::TABLE_P);
            assert_eq!(a.params.p_max_kpa, 138.0);
        }
    }

    #[test]
    fn document_round_trip() {
        let suit = default_suit();
        let json = serde_json::to_string(&SuitDocument::from_suit(&suit)).unwrap();
        assert_eq!(parse_suit(&json).unwrap(), suit);
    }

    #[test]
    fn malformed_documents_rejected() {
        assert!(matches!(parse_suit("{"), Err(Error::Config(_))));
        assert!(matches!(parse_suit(r#"{"name":"x","body":{"mass_kg":4.6},"actuators":[]}"#), Err(Error::Config(_))));
        let bad_mass = r#"{"name":"x","body":{"mass_kg":-1,"com_m":[0,0,0.17]},"actuators":[]}"#;
        assert!(matches!(parse_suit(bad_mass), Err(Error::Domain(_))));
        let bad_channel = r#"{"name":"x","body":{"mass_kg":4.6,"com_m":[0,0,0.17]},"actuators":[
            {"head_mount_m":[0,0.05,0.1],"vest_mount_m":[0,0.1,-0.2],"channel":6,"group":"front_long",
             "fpam":{"r0_m":0.0136,"alpha0_deg":37,"p":[12.3,-182.9,791.3,-1121.4],"L0_m":0.4}}]}"#;
        assert!(matches!(parse_suit(bad_channel), Err(Error::Config(_))));
    }
}
