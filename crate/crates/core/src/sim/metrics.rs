//! Tracking delay and error between a reference and a measured series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingMetrics {
    /// Positive when the measured series lags the reference, s.
    pub delay_s: f64,
    pub lag_samples: i64,
    /// RMSE after shifting the measured series back by the delay, degrees.
    pub rmse_deg: f64,
}

pub const TIE_TOLERANCE: f64 = 1e-9;

fn check(reference: &[f64], measured: &[f64]) -> Result<()> {
    if reference.len() != measured.len() {
        return Err(Error::Domain(format!(
            "series lengths differ: {} vs {}",
            reference.len(),
            measured.len()
        )));
    }
    if reference.len() < 2 {
        return Err(Error::Domain("metrics need at least 2 samples".into()));
    }
    Ok(())
}

/// RMSE between `reference[i]` and `measured[i + lag]` over the overlap.
pub fn rmse_at_lag(reference: &[f64], measured: &[f64], lag: i64) -> Result<f64> {
    check(reference, measured)?;
    let n = reference.len() as i64;
    let (start, end) = (0.max(-lag), n.min(n - lag));
    if end <= start {
        return Err(Error::Domain(format!("lag {lag} leaves no overlap")));
    }
    let ss: f64 = (start..end)
        .map(|i| {
            let d = measured[(i + lag) as usize] - reference[i as usize];
            d * d
        })
        .sum();
    Ok((ss / (end - start) as f64).sqrt())
}

/// Lag in `[-max_lag, max_lag]` maximising the Pearson correlation between
/// `reference[i]` and `measured[i + lag]` over their overlap. Correlations within
/// [`TIE_TOLERANCE`] of the peak count as ties and go to the smaller |lag|.
pub fn best_lag(reference: &[f64], measured: &[f64], max_lag: usize) -> Result<i64> {
    check(reference, measured)?;
    for s in [reference, measured] {
        if s.iter().all(|v| *v == s[0]) {
            return Err(Error::ZeroVariance("constant series has no defined delay".into()));
        }
    }
    let n = reference.len() as i64;
    let max_lag = (max_lag as i64).min(n - 2);
    let corr = |lag: i64| -> Option<f64> {
        let (start, end) = (0.max(-lag), n.min(n - lag));
        let r = &reference[start as usize..end as usize];
        let m = &measured[(start + lag) as usize..(end + lag) as usize];
        let len = r.len() as f64;
        let (mr, mm) = (r.iter().sum::<f64>() / len, m.iter().sum::<f64>() / len);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in r.iter().zip(m) {
            let (dx, dy) = (x - mr, y - mm);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
    };
    // Periodic signals correlate equally well at whole-period shifts, so
    // near-ties resolve to the smallest |lag|.
    let scored: Vec<(i64, f64)> = std::iter::once(0)
        .chain((1..=max_lag).flat_map(|k| [k, -k]))
        .filter_map(|lag| corr(lag).map(|c| (lag, c)))
        .collect();
    let peak = scored
        .iter()
        .map(|(_, c)| *c)
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
        .ok_or_else(|| Error::ZeroVariance("no overlap with nonzero variance".into()))?;
    Ok(scored.iter().find(|(_, c)| *c >= peak - TIE_TOLERANCE).map(|(lag, _)| *lag).unwrap_or(0))
}

pub fn metrics(reference: &[f64], measured: &[f64], dt: f64, max_lag: usize) -> Result<TrackingMetrics> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("sample spacing must be positive, got {dt}")));
    }
    let lag = best_lag(reference, measured, max_lag)?;
    Ok(TrackingMetrics {
        delay_s: lag as f64 * dt,
        lag_samples: lag,
        rmse_deg: rmse_at_lag(reference, measured, lag)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sine(n: usize, dt: f64, shift: f64) -> Vec<f64> {
        (0..n).map(|i| 20.0 * (2.0 * PI * (i as f64 * dt - shift) / 25.0).sin()).collect()
    }

    #[test]
    fn identical_series() {
        let s = sine(1000, 0.01, 0.0);
        let m = metrics(&s, &s, 0.01, 500).unwrap();
        assert_eq!(m.lag_samples, 0);
        assert_eq!(m.rmse_deg, 0.0);
    }

    #[test]
    fn constructed_shift() {
        let dt = 0.01;
        let r = sine(10_000, dt, 0.0);
        let m = sine(10_000, dt, 2.0);
        let out = metrics(&r, &m, dt, 2500).unwrap();
        assert!((out.delay_s - 2.0).abs() <= dt + 1e-12, "{out:?}");
        assert!(out.rmse_deg <= 1e-6);
        // Leading series gives a negative delay.
        let lead = metrics(&m, &r, dt, 2500).unwrap();
        assert_eq!(lead.lag_samples, -out.lag_samples);
    }

    #[test]
    fn constant_offset() {
        let r = sine(10_000, 0.01, 0.0);
        let m: Vec<f64> = r.iter().map(|v| v + 3.0).collect();
        let out = metrics(&r, &m, 0.01, 2500).unwrap();
        assert_eq!(out.lag_samples, 0);
        assert_relative_eq!(out.rmse_deg, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn constant_series() {
        let r = vec![1.0; 50];
        let m = sine(50, 0.01, 0.0);
        assert!(matches!(metrics(&r, &m, 0.01, 10), Err(Error::ZeroVariance(_))));
        assert!(rmse_at_lag(&r, &m, 0).is_ok());
    }

    #[test]
    fn bad_inputs() {
        assert!(metrics(&[1.0], &[1.0], 0.01, 1).is_err());
        assert!(metrics(&[1.0, 2.0], &[1.0], 0.01, 1).is_err());
        assert!(rmse_at_lag(&[1.0, 2.0], &[1.0, 2.0], 5).is_err());
    }
}
