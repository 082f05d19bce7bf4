//! Estimators used by the experiments.

use crate::error::{Result, SdeError};

fn check_pair(reference: &[f64], approx: &[f64]) -> Result<()> {
    if reference.len() != approx.len() {
        return Err(SdeError::LengthMismatch {
            expected: reference.len(),
            actual: approx.len(),
        });
    }
    if reference.is_empty() {
        return Err(SdeError::EmptySample);
    }
    Ok(())
}

/// Root mean square difference of two equally long samples.
pub fn rmse(reference: &[f64], approx: &[f64]) -> Result<f64> {
    check_pair(reference, approx)?;
    let sum: f64 = reference.iter().zip(approx).map(|(r, a)| (r - a) * (r - a)).sum();
    Ok((sum / reference.len() as f64).sqrt())
}

/// `mean |r² − a²|`: the error of a Lamperti-transformed CIR approximation
/// measured in the original variable `X = Y²`.
pub fn mean_abs_squared_diff(reference: &[f64], approx: &[f64]) -> Result<f64> {
    check_pair(reference, approx)?;
    let sum: f64 = reference.iter().zip(approx).map(|(r, a)| (r * r - a * a).abs()).sum();
    Ok(sum / reference.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Empirical order: OLS slope of `log₂ error` against `log₂ dt`.
    pub slope: f64,
    pub intercept: f64,
    pub points_used: usize,
    /// Points with zero error, left out of the regression.
    pub dropped_zero: usize,
}

/// Least-squares fit of `log₂(error) = slope · log₂(dt) + intercept`.
pub fn fit_rate(dts: &[f64], errors: &[f64]) -> Result<RateFit> {
    if dts.len() != errors.len() {
        return Err(SdeError::LengthMismatch {
            expected: dts.len(),
            actual: errors.len(),
        });
    }
    let mut xs = Vec::with_capacity(dts.len());
    let mut ys = Vec::with_capacity(dts.len());
    let mut dropped_zero = 0;
    for (&dt, &e) in dts.iter().zip(errors) {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SdeError::invalid("dt", format!("step sizes must be positive, got {dt}")));
        }
        if e == 0.0 {
            dropped_zero += 1;
            continue;
        }
        if !(e > 0.0 && e.is_finite()) {
            return Err(SdeError::invalid("error", format!("errors must be positive and finite, got {e}")));
        }
        xs.push(dt.log2());
        ys.push(e.log2());
    }
    if xs.len() < 2 {
        return Err(SdeError::invalid("errors", "need at least two nonzero errors to fit a rate"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(SdeError::invalid("dt", "need at least two distinct step sizes"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        points_used: xs.len(),
        dropped_zero,
    })
}

/// Half-width of the normal-approximation 95% interval, `1.96 √(p(1−p)/M)`.
pub fn binomial_ci(p_hat: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.96 * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MomentSign {
    Positive,
    Negative,
}

impl MomentSign {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentSign::Positive => "+",
            MomentSign::Negative => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub p: f64,
    pub sign: MomentSign,
    /// Sample mean of `x^{±p}`.
    pub mean: f64,
    /// Some `x^{±p}` overflowed to infinity.
    pub overflow: bool,
}

/// Sample means of `x^p` and `x^{−p}` for every requested pair.
pub fn estimate_moments(samples: &[f64], p_list: &[f64], signs: &[MomentSign]) -> Result<Vec<MomentEstimate>> {
    if samples.is_empty() {
        return Err(SdeError::EmptySample);
    }
    if let Some(bad) = samples.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(SdeError::invalid("samples", format!("moment samples must be positive and finite, got {bad}")));
    }
    let mut out = Vec::with_capacity(p_list.len() * signs.len());
    for &p in p_list {
        if !(p > 0.0 && p.is_finite()) {
            return Err(SdeError::invalid("p", format!("moment order must be positive, got {p}")));
        }
        for &sign in signs {
            let e = match sign {
                MomentSign::Positive => p,
                MomentSign::Negative => -p,
            };
            let mut sum = 0.0;
            let mut overflow = false;
            for &x in samples {
                let v = x.powf(e);
                overflow |= v.is_infinite();
                sum += v;
            }
            out.push(MomentEstimate {
                p,
                sign,
                mean: sum / samples.len() as f64,
                overflow,
            });
        }
    }
    Ok(out)
}
