//! Range-of-motion scans along the principal axes and the visual-target workspace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rot_x, rot_z, Axis, HeadPose};
use crate::gravity::{FeasibilityModel, PoseEvaluation};

pub const ROM_SAMPLES: usize = 100;
pub const HORIZONTAL_RANGE: (f64, f64) = (-90.0, 90.0);
pub const VERTICAL_RANGE: (f64, f64) = (-50.0, 50.0);
pub const GRID_STEP: f64 = 2.5;

/// Head orientation that points the forward axis at a visual target.
///
/// The head first yaws toward the target (a target to the right, positive
/// `horizontal`, is a right turn and so negative θz), then pitches about its own
/// x axis to the target elevation (up is positive), with no roll about the
/// line of sight. The result is re-expressed in the body-fixed x-y-z Euler
/// convention.
pub fn target_to_pose(horizontal: f64, vertical: f64) -> Result<HeadPose> {
    if !horizontal.is_finite() || horizontal.abs() > 180.0 {
        return Err(Error::Domain(format!("horizontal target angle {horizontal} outside ±180°")));
    }
    if !vertical.is_finite() || vertical.abs() >= 90.0 {
        return Err(Error::Domain(format!(
            "vertical target angle {vertical} must lie strictly within ±90°"
        )));
    }
    let r = rot_z(-horizontal.to_radians()) * rot_x(vertical.to_radians());
    Ok(HeadPose::from_rotation(&r))
}

/// Flags for each condition plus their conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerCondition<T> {
    pub reachable: T,
    pub grav_ok: T,
    pub compression_ok: T,
    pub all: T,
}

impl<T> PerCondition<T> {
    fn map<U>(self, mut f: impl FnMut(T) -> U) -> PerCondition<U> {
        PerCondition {
            reachable: f(self.reachable),
            grav_ok: f(self.grav_ok),
            compression_ok: f(self.compression_ok),
            all: f(self.all),
        }
    }
}

fn flags(e: &PoseEvaluation, limit: Option<f64>) -> PerCondition<bool> {
    let c = e.conditions(limit);
    PerCondition {
        reachable: c.reachable,
        grav_ok: c.grav_ok,
        compression_ok: c.compression_ok,
        all: c.reachable && c.grav_ok && c.compression_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomScan {
    pub axis: Axis,
    pub compression_limit: Option<f64>,
    pub angles: Vec<f64>,
    pub flags: Vec<PerCondition<bool>>,
    pub compression: Vec<f64>,
    /// Contiguous flagged interval around the resting pose, degrees.
    pub intervals: PerCondition<Option<(f64, f64)>>,
    /// Interval length relative to the biological range, percent.
    pub percent_of_biological: PerCondition<f64>,
}

/// `samples` evenly spaced angles over the axis' biological range.
pub fn rom_angles(axis: Axis, samples: usize) -> Vec<f64> {
    let (lo, hi) = axis.biological_range();
    if samples == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect()
}

pub fn scan_rom<M: FeasibilityModel + ?Sized>(
    model: &M,
    axis: Axis,
    samples: usize,
    compression_limit: Option<f64>,
) -> Result<RomScan> {
    if samples < 2 {
        return Err(Error::Domain("a range-of-motion scan needs at least 2 samples".into()));
    }
    let angles = rom_angles(axis, samples);
    let evals = angles
        .iter()
        .map(|&a| model.evaluate(&HeadPose::on_axis(axis, a)))
        .collect::<Result<Vec<_>>>()?;
    let flags: Vec<_> = evals.iter().map(|e| flags(e, compression_limit)).collect();

    let (lo, hi) = axis.biological_range();
    let rest = angles
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    let interval = |pick: fn(&PerCondition<bool>) -> bool| -> Option<(f64, f64)> {
        if !pick(&flags[rest]) {
            return None;
        }
        let mut first = rest;
        while first > 0 && pick(&flags[first - 1]) {
            first -= 1;
        }
        let mut last = rest;
        while last + 1 < flags.len() && pick(&flags[last + 1]) {
            last += 1;
        }
        Some((angles[first], angles[last]))
    };
    let intervals = PerCondition {
        reachable: interval(|f| f.reachable),
        grav_ok: interval(|f| f.grav_ok),
        compression_ok: interval(|f| f.compression_ok),
        all: interval(|f| f.all),
    };
    let percent_of_biological =
        intervals.map(|iv| iv.map_or(0.0, |(a, b)| 100.0 * (b - a) / (hi - lo)));
    Ok(RomScan {
        axis,
        compression_limit,
        compression: evals.iter().map(|e| e.compression).collect(),
        angles,
        flags,
        intervals,
        percent_of_biological,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceCell {
    pub h_deg: f64,
    pub v_deg: f64,
    pub pose: HeadPose,
    pub reachable: bool,
    pub grav_ok: bool,
    pub compression: f64,
    /// One flag per compression limit.
    pub compression_ok: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCoverage {
    pub limit_n: f64,
    /// Cells within the compression limit, percent.
    pub compression_ok: f64,
    /// Cells meeting all three conditions, percent.
    pub all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub reachable: f64,
    pub grav_ok: f64,
    pub reachable_and_grav_ok: f64,
    pub limits: Vec<LimitCoverage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceGrid {
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
    pub limits: Vec<f64>,
    /// Horizontal-major: cell `(i, j)` is at `i * vertical.len() + j`.
    pub cells: Vec<WorkspaceCell>,
    pub coverage: Coverage,
}

impl WorkspaceGrid {
    pub fn cell(&self, hi: usize, vi: usize) -> &WorkspaceCell {
        &self.cells[hi * self.vertical.len() + vi]
    }
}

fn grid_axis((lo, hi): (f64, f64)) -> Vec<f64> {
    let n = ((hi - lo) / GRID_STEP).round() as usize;
    (0..=n).map(|i| lo + GRID_STEP * i as f64).collect()
}

pub fn scan_workspace<M: FeasibilityModel + ?Sized>(model: &M, compression_limits: &[f64]) -> Result<WorkspaceGrid> {
    let horizontal = grid_axis(HORIZONTAL_RANGE);
    let vertical = grid_axis(VERTICAL_RANGE);
    let mut cells = Vec::with_capacity(horizontal.len() * vertical.len());
    for &h in &horizontal {
        for &v in &vertical {
            let pose = target_to_pose(h, v)?;
            let e = model.evaluate(&pose)?;
            cells.push(WorkspaceCell {
                h_deg: h,
                v_deg: v,
                pose,
                reachable: e.reachable,
                grav_ok: e.grav_ok,
                compression: e.compression,
                compression_ok: compression_limits.iter().map(|&l| e.compression <= l).collect(),
            });
        }
    }
    let n = cells.len() as f64;
    let pct = |pred: &dyn Fn(&WorkspaceCell) -> bool| 100.0 * cells.iter().filter(|c| pred(c)).count() as f64 / n;
    let coverage = Coverage {
        reachable: pct(&|c| c.reachable),
        grav_ok: pct(&|c| c.grav_ok),
        reachable_and_grav_ok: pct(&|c| c.reachable && c.grav_ok),
        limits: compression_limits
            .iter()
            .enumerate()
            .map(|(k, &limit_n)| LimitCoverage {
                limit_n,
                compression_ok: pct(&|c| c.compression_ok[k]),
                all: pct(&|c| c.compression_ok[k] && c.reachable && c.grav_ok),
            })
            .collect(),
    };
    Ok(WorkspaceGrid {
        horizontal,
        vertical,
        limits: compression_limits.to_vec(),
        cells,
        coverage,
    })
}
