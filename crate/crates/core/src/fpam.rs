//! Fabric pneumatic artificial muscle force law and its tensile-test fit.
//!
//! The actuator tension at contraction `ε = (L0 − L) / L0` and gauge pressure `P` is
//!
//! ```text
//! F = F_ideal(ε)·P + p3·ε³ + p2·ε² + p1·ε + p0
//! F_ideal(ε) = π·r0²·(1/sin²α0 − 3(ε − 1)²/tan²α0)
//! ```
//!
//! Pressures are carried in kPa and converted to Pa only when the ideal term
//! is multiplied out.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pascals per kilopascal.
pub const PA_PER_KPA: f64 = 1000.0;

/// Regulator limit used throughout the model, kPa.
pub const DEFAULT_P_MAX_KPA: f64 = 138.0;

/// Sign applied to the pressure-gain term.
///
/// `AsPrinted` evaluates the ideal term exactly as written above, which gives a
/// negative gain at small contraction for α0 = 37°. `FlippedIdealTerm` negates it,
/// which is the usual McKibben orientation (positive gain at ε = 0 that vanishes
/// at the maximum contraction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    #[default]
    AsPrinted,
    FlippedIdealTerm,
}

impl SignConvention {
    fn factor(self) -> f64 {
        match self {
            SignConvention::AsPrinted => 1.0,
            SignConvention::FlippedIdealTerm => -1.0,
        }
    }
}

/// Physical parameters of one actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpamParams {
    /// Initial radius, m.
    pub r0: f64,
    /// Initial weave angle, degrees.
    pub alpha0_deg: f64,
    /// Elastic polynomial coefficients `[p0, p1, p2, p3]`, N.
    pub p: [f64; 4],
    /// Fully stretched length, m.
    pub l0: f64,
    /// Maximum allowed pressure, kPa.
    pub p_max_kpa: f64,
    #[serde(default)]
    pub sign_convention: SignConvention,
}

impl FpamParams {
    pub const TABLE_R0: f64 = 0.0136;
    pub const TABLE_ALPHA0_DEG: f64 = 37.0;
    pub const TABLE_P: [f64; 4] = [12.3, -182.9, 791.3, -1121.4];

    /// Tensile-test parameter set with the given stretched length.
    pub fn reference(l0: f64) -> Self {
        FpamParams {
            r0: Self::TABLE_R0,
            alpha0_deg: Self::TABLE_ALPHA0_DEG,
            p: Self::TABLE_P,
            l0,
            p_max_kpa: DEFAULT_P_MAX_KPA,
            sign_convention: SignConvention::AsPrinted,
        }
    }

    pub fn with_convention(mut self, convention: SignConvention) -> Self {
        self.sign_convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.r0.is_finite()
            && self.alpha0_deg.is_finite()
            && self.l0.is_finite()
            && self.p_max_kpa.is_finite()
            && self.p.iter().all(|c| c.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite actuator parameter".into()));
        }
        if self.r0 <= 0.0 {
            return Err(Error::Domain(format!("r0 must be positive, got {}", self.r0)));
        }
        if self.l0 <= 0.0 {
            return Err(Error::Domain(format!("L0 must be positive, got {}", self.l0)));
        }
        if !(self.alpha0_deg > 0.0 && self.alpha0_deg < 90.0) {
            return Err(Error::Domain(format!(
                "alpha0 must lie in (0, 90) degrees, got {}",
                self.alpha0_deg
            )));
        }
        if self.p_max_kpa <= 0.0 {
            return Err(Error::Domain(format!(
                "P_max must be positive, got {}",
                self.p_max_kpa
            )));
        }
        Ok(())
    }

    /// `(L0 − length) / L0`. Negative when over-stretched.
    pub fn contraction(&self, length: f64) -> Result<f64> {
        if !(length > 0.0) {
            return Err(Error::Domain(format!(
                "actuator length must be positive, got {length}"
            )));
        }
        Ok((self.l0 - length) / self.l0)
    }

    /// Multiplier of the pressure (in Pa) in the force law, m².
    pub fn ideal_force_coefficient(&self, eps: f64) -> f64 {
        self.sign_convention.factor() * ideal_shape(self.r0, self.alpha0_deg.to_radians(), eps)
    }

    /// Zero-pressure force, N.
    pub fn elastic_force(&self, eps: f64) -> f64 {
        let [p0, p1, p2, p3] = self.p;
        ((p3 * eps + p2) * eps + p1) * eps + p0
    }

    /// Tension at contraction `eps` and pressure `pressure_kpa`.
    pub fn force(&self, eps: f64, pressure_kpa: f64) -> Result<f64> {
        if !(pressure_kpa >= 0.0) {
            return Err(Error::Domain(format!(
                "pressure must be non-negative, got {pressure_kpa} kPa"
            )));
        }
        Ok(self.force_unchecked(eps, pressure_kpa))
    }

    pub(crate) fn force_unchecked(&self, eps: f64, pressure_kpa: f64) -> f64 {
        self.ideal_force_coefficient(eps) * pressure_kpa * PA_PER_KPA + self.elastic_force(eps)
    }
}

fn ideal_shape(r0: f64, alpha0: f64, eps: f64) -> f64 {
    let s = alpha0.sin();
    let t = alpha0.tan();
    let d = eps - 1.0;
    PI * (1.0 / (s * s) - 3.0 * d * d / (t * t)) * r0 * r0
}

/// d(ideal_shape)/dα0 with α0 in radians.
fn ideal_shape_dalpha(r0: f64, alpha0: f64, eps: f64) -> f64 {
    let s = alpha0.sin();
    let d = eps - 1.0;
    PI * r0 * r0 * 2.0 * alpha0.cos() / (s * s * s) * (3.0 * d * d - 1.0)
}

/// One tensile-test reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensileSample {
    pub pressure_kpa: f64,
    pub length_m: f64,
    pub force_n: f64,
}

/// Fit error statistics at one pressure level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRmse {
    pub pressure_kpa: f64,
    pub samples: usize,
    pub rmse_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: FpamParams,
    pub level_rmse: Vec<LevelRmse>,
    pub overall_rmse_n: f64,
    /// False when no pressurized samples were present; r0 and α0 then keep
    /// their tensile-table values.
    pub geometric_identifiable: bool,
    pub diagnostics: Vec<String>,
}

/// Bounds on the geometric search.
const ALPHA_BOUNDS_DEG: (f64, f64) = (5.0, 85.0);
const R0_BOUNDS: (f64, f64) = (1.0e-3, 0.1);
const SEEDS: usize = 5;
const ZERO_PRESSURE_TOL: f64 = 1e-9;

/// Fits the force law to tensile data.
///
/// The elastic cubic comes from ordinary least squares on the unpressurized
/// samples. r0 and α0 then come from a bounded Levenberg–Marquardt fit of the
/// pressurized residuals `F − F_elastic(ε)`, multi-started from evenly spaced
/// weave angles.
pub fn fit_params(
    samples: &[TensileSample],
    l0: f64,
    convention: SignConvention,
) -> Result<FitReport> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    if !(l0 > 0.0) {
        return Err(Error::Domain(format!("L0 must be positive, got {l0}")));
    }
    for (i, s) in samples.iter().enumerate() {
        if !(s.length_m > 0.0) || !(s.pressure_kpa >= 0.0) || !s.force_n.is_finite() {
            return Err(Error::Domain(format!(
                "sample {i} invalid: length {} m, pressure {} kPa, force {} N",
                s.length_m, s.pressure_kpa, s.force_n
            )));
        }
    }
    let eps_of = |s: &TensileSample| (l0 - s.length_m) / l0;

    let (unpressurized, pressurized): (Vec<_>, Vec<_>) = samples
        .iter()
        .partition(|s| s.pressure_kpa.abs() <= ZERO_PRESSURE_TOL);
    if unpressurized.is_empty() {
        return Err(Error::Fit(
            "no zero-pressure samples; the elastic polynomial cannot be fitted".into(),
        ));
    }

    let design = DMatrix::from_fn(unpressurized.len(), 4, |r, c| {
        eps_of(unpressurized[r]).powi(c as i32)
    });
    let rhs = DVector::from_iterator(unpressurized.len(), unpressurized.iter().map(|s| s.force_n));
    let poly = least_squares(&design, &rhs).ok_or_else(|| {
        Error::Fit("rank-deficient elastic design matrix (need ≥ 4 distinct lengths at 0 kPa)".into())
    })?;
    let p = [poly[0], poly[1], poly[2], poly[3]];

    let mut params = FpamParams {
        r0: FpamParams::TABLE_R0,
        alpha0_deg: FpamParams::TABLE_ALPHA0_DEG,
        p,
        l0,
        p_max_kpa: DEFAULT_P_MAX_KPA,
        sign_convention: convention,
    };
    let mut diagnostics = Vec::new();
    let geometric_identifiable = !pressurized.is_empty();

    if geometric_identifiable {
        // (pressure in Pa, ε, force residual after the elastic part)
        let points: Vec<(f64, f64, f64)> = pressurized
            .iter()
            .map(|s| {
                let eps = eps_of(s);
                (s.pressure_kpa * PA_PER_KPA, eps, s.force_n - params.elastic_force(eps))
            })
            .collect();
        check_geometric_rank(&points)?;
        let sign = convention.factor();
        let (r0, alpha) = fit_geometry(&points, sign);
        params.r0 = r0;
        params.alpha0_deg = alpha.to_degrees();
        let at_bound = |v: f64, (lo, hi): (f64, f64)| {
            (v - lo).abs() <= 1e-9 * hi || (v - hi).abs() <= 1e-9 * hi
        };
        if at_bound(params.alpha0_deg, ALPHA_BOUNDS_DEG) || at_bound(params.r0, R0_BOUNDS) {
            diagnostics.push("geometric parameters reached a search bound".to_string());
        }
    } else {
        diagnostics.push(
            "geometric parameters not identifiable: no pressurized samples; r0 and alpha0 left at defaults"
                .to_string(),
        );
    }

    let (level_rmse, overall_rmse_n) = residual_stats(samples, &params);
    Ok(FitReport {
        params,
        level_rmse,
        overall_rmse_n,
        geometric_identifiable,
        diagnostics,
    })
}

/// Noiseless samples on a pressure × length grid.
pub fn generate_samples(params: &FpamParams, pressures_kpa: &[f64], lengths_m: &[f64]) -> Vec<TensileSample> {
    let mut out = Vec::with_capacity(pressures_kpa.len() * lengths_m.len());
    for &pressure_kpa in pressures_kpa {
        for &length_m in lengths_m {
            let eps = (params.l0 - length_m) / params.l0;
            out.push(TensileSample {
                pressure_kpa,
                length_m,
                force_n: params.force_unchecked(eps, pressure_kpa),
            });
        }
    }
    out
}

fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if design.nrows() < design.ncols() {
        return None;
    }
    // Column scaling keeps the rank test meaningful for badly scaled columns.
    let scales: Vec<f64> = design
        .column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 { n } else { 1.0 }
        })
        .collect();
    let mut scaled = design.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-12 {
        return None;
    }
    let mut x = svd.solve(rhs, 0.0).ok()?;
    for (j, s) in scales.iter().enumerate() {
        x[j] /= s;
    }
    Some(x)
}

fn check_geometric_rank(points: &[(f64, f64, f64)]) -> Result<()> {
    // The ideal term is a combination of P and P·(ε − 1)²; both must be resolvable.
    let design = DMatrix::from_fn(points.len(), 2, |r, c| {
        let (pa, eps, _) = points[r];
        if c == 0 { pa } else { pa * (eps - 1.0).powi(2) }
    });
    let rhs = DVector::zeros(points.len());
    if least_squares(&design, &rhs).is_none() {
        return Err(Error::Fit(
            "rank-deficient pressure design (need ≥ 2 distinct lengths under pressure)".into(),
        ));
    }
    Ok(())
}

fn geometry_cost(points: &[(f64, f64, f64)], sign: f64, r0: f64, alpha: f64) -> f64 {
    points
        .iter()
        .map(|&(pa, eps, y)| {
            let r = y - sign * ideal_shape(r0, alpha, eps) * pa;
            r * r
        })
        .sum()
}

fn fit_geometry(points: &[(f64, f64, f64)], sign: f64) -> (f64, f64) {
    let (alo, ahi) = (ALPHA_BOUNDS_DEG.0.to_radians(), ALPHA_BOUNDS_DEG.1.to_radians());
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 0..SEEDS {
        let alpha = alo + (ahi - alo) * (k as f64 + 0.5) / SEEDS as f64;
        // r0² enters linearly, so the seed radius is the 1-D least-squares optimum.
        let (num, den) = points.iter().fold((0.0, 0.0), |(n, d), &(pa, eps, y)| {
            let h = sign * ideal_shape(1.0, alpha, eps) * pa;
            (n + h * y, d + h * h)
        });
        let r0_seed = if den > 0.0 && num > 0.0 { (num / den).sqrt() } else { 0.01 };
        let r0_seed = r0_seed.clamp(R0_BOUNDS.0, R0_BOUNDS.1);
        let (r0, a, cost) = levenberg_marquardt(points, sign, r0_seed, alpha, (alo, ahi));
        if best.is_none_or(|(_, _, c)| cost < c) {
            best = Some((r0, a, cost));
        }
    }
    let (r0, a, _) = best.expect("at least one seed");
    (r0, a)
}

fn levenberg_marquardt(
    points: &[(f64, f64, f64)],
    sign: f64,
    mut r0: f64,
    mut alpha: f64,
    alpha_bounds: (f64, f64),
) -> (f64, f64, f64) {
    let mut cost = geometry_cost(points, sign, r0, alpha);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for &(pa, eps, y) in points {
            let g = sign * ideal_shape(r0, alpha, eps) * pa;
            let dr = 2.0 * g / r0;
            let da = sign * ideal_shape_dalpha(r0, alpha, eps) * pa;
            let j = Vector2::new(dr, da);
            jtj += j * j.transpose();
            jtr += j * (y - g);
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut lhs = jtj;
            lhs[(0, 0)] *= 1.0 + lambda;
            lhs[(1, 1)] *= 1.0 + lambda;
            let Some(step) = lhs.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let r_new = (r0 + step[0]).clamp(R0_BOUNDS.0, R0_BOUNDS.1);
            let a_new = (alpha + step[1]).clamp(alpha_bounds.0, alpha_bounds.1);
            let c_new = geometry_cost(points, sign, r_new, a_new);
            if c_new <= cost {
                let moved = (r_new - r0).abs() / r0 + (a_new - alpha).abs() / alpha;
                let drop = cost - c_new;
                r0 = r_new;
                alpha = a_new;
                cost = c_new;
                lambda = (lambda * 0.3).max(1e-12);
                improved = moved > 1e-15 && drop > cost * 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (r0, alpha, cost)
}

fn residual_stats(samples: &[TensileSample], params: &FpamParams) -> (Vec<LevelRmse>, f64) {
    let mut levels: Vec<(f64, usize, f64)> = Vec::new();
    let mut total = 0.0;
    for s in samples {
        let eps = (params.l0 - s.length_m) / params.l0;
        let r = s.force_n - params.force_unchecked(eps, s.pressure_kpa);
        total += r * r;
        match levels
            .iter_mut()
            .find(|(p, _, _)| (p - s.pressure_kpa).abs() <= ZERO_PRESSURE_TOL)
        {
            Some(level) => {
                level.1 += 1;
                level.2 += r * r;
            }
            None => levels.push((s.pressure_kpa, 1, r * r)),
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let level_rmse = levels
        .into_iter()
        .map(|(pressure_kpa, n, ss)| LevelRmse {
            pressure_kpa,
            samples: n,
            rmse_n: (ss / n as f64).sqrt(),
        })
        .collect();
    (level_rmse, (total / samples.len() as f64).sqrt())
}
