//! Modelling and analysis toolkit for a head-neck exosuit driven by fabric
//! pneumatic artificial muscles.
//!
//! The pieces build on each other:
//!
//! - [`fpam`]: actuator force law and its tensile-test fit
//! - [`geometry`]: head pose, actuator routing, force Jacobian, gravity torque
//! - [`statics`]: actuator, elastic and gravitational torques and neck compression
//! - [`nnls`]: nonnegative least squares with ridge rows
//! - [`gravity`]: gravity-compensating pressures and feasibility conditions
//! - [`workspace`]: range-of-motion scans and the visual-target workspace
//! - [`design`]: torque profiles of alternative actuator placements
//! - [`sim`]: closed-loop antagonistic control of a head-neck pendulum

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod design;
pub mod error;
pub mod fpam;
pub mod geometry;
pub mod gravity;
pub mod io;
pub mod nnls;
pub mod sim;
pub mod statics;
pub mod workspace;

pub use config::{default_suit, load_suit, parse_suit, SuitDocument};
pub use error::{Error, Result};
pub use fpam::{FitReport, FpamParams, SignConvention, TensileSample};
pub use geometry::{ActuatorGroup, ActuatorPath, Axis, BodyParams, HeadPose, SuitConfig};
pub use gravity::{Conditions, FeasibilityModel, FeasibilityReport, LimitingCondition};
pub use statics::{PressureVector, StaticsBreakdown};
