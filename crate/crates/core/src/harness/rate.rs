//! Power-law fits of suboptimality gaps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::Trace;

/// Minimum number of usable points for a fit.
pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least squares of `log(f - fstar)` on `log t` over `lo <= t <= hi`.
///
/// Points with a nonpositive gap are dropped.
pub fn rate_fit_points(
    points: &[(usize, f64)],
    fstar: f64,
    lo: usize,
    hi: usize,
) -> Result<RateFit> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, _)| *t >= lo && *t <= hi && *t > 0)
        .filter_map(|&(t, f)| {
            let gap = f - fstar;
            (gap > 0.0 && gap.is_finite()).then(|| ((t as f64).ln(), gap.ln()))
        })
        .collect();
    if xy.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            found: xy.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config(
            "rate fit needs at least two distinct t".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: xy.len(),
    })
}

/// Which trace column to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Column {
    #[default]
    Individual,
    Averaged,
}

pub fn rate_fit(
    trace: &Trace,
    fstar: f64,
    lo: usize,
    hi: usize,
    column: Column,
) -> Result<RateFit> {
    let pts: Vec<(usize, f64)> = trace
        .rows()
        .iter()
        .map(|r| {
            (
                r.t,
                match column {
                    Column::Individual => r.f_individual,
                    Column::Averaged => r.f_averaged,
                },
            )
        })
        .collect();
    rate_fit_points(&pts, fstar, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn power(exp: f64, ts: impl Iterator<Item = usize>) -> Vec<(usize, f64)> {
        ts.map(|t| (t, (t as f64).powf(exp))).collect()
    }

    #[test]
    fn exact_power_law() {
        let pts = power(-0.5, 1..=100);
        let fit = rate_fit_points(&pts, 0.0, 1, 100).unwrap();
        assert_abs_diff_eq!(fit.slope, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_gap_has_zero_slope() {
        let pts: Vec<_> = (1..=20).map(|t| (t, 3.0)).collect();
        let fit = rate_fit_points(&pts, 1.0, 1, 20).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_points() {
        let pts = power(-1.0, 1..=9);
        assert!(matches!(
            rate_fit_points(&pts, 0.0, 1, 100),
            Err(Error::InsufficientPoints { found: 9, .. })
        ));
        let mut pts = power(-1.0, 1..=12);
        for p in pts.iter_mut().take(3) {
            p.1 = 0.0;
        }
        assert!(rate_fit_points(&pts, 0.0, 1, 100).is_err());
    }

    #[test]
    fn subsampling_by_two_keeps_slope() {
        let pts: Vec<_> = (1..=400)
            .map(|t| (t, 2.0 * (t as f64).powf(-1.3)))
            .collect();
        let half: Vec<_> = pts.iter().copied().step_by(2).collect();
        let a = rate_fit_points(&pts, 0.0, 10, 400).unwrap();
        let b = rate_fit_points(&half, 0.0, 10, 400).unwrap();
        assert!((a.slope - b.slope).abs() <= 0.05);
    }
}
