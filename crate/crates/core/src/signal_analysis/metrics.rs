use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

use super::fit::DampedSineFit;

/// Coherence figures read off a damped-sine fit.
///
/// `None` marks an unbounded decay time (b = 0) or an unavailable
/// uncertainty (degenerate covariance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitMetrics {
    /// 1/b, s.
    pub decay_time: Option<f64>,
    pub decay_time_err: Option<f64>,
    /// c/2π, Hz.
    pub hopping_frequency_hz: f64,
    pub hopping_frequency_hz_err: Option<f64>,
    /// c/(2πb).
    pub num_oscillations: Option<f64>,
    pub num_oscillations_err: Option<f64>,
}

pub fn metrics_from_fit(fit: &DampedSineFit) -> Result<FitMetrics> {
    if !fit.converged {
        return Err(Error::Fit("metrics need a converged fit".into()));
    }
    if !(fit.b >= 0.0) || !(fit.c > 0.0) {
        return Err(Error::Fit(format!("fit has b = {}, c = {}", fit.b, fit.c)));
    }
    let cov = &fit.covariance;
    let known = |x: f64| if x.is_finite() { Some(x) } else { None };
    let (var_b, var_c, cov_bc) = (cov[1][1], cov[2][2], cov[1][2]);
    let hopping_frequency_hz = fit.c / (2.0 * PI);
    let hopping_frequency_hz_err = known(var_c.sqrt() / (2.0 * PI));

    if fit.b == 0.0 {
        return Ok(FitMetrics {
            decay_time: None,
            decay_time_err: None,
            hopping_frequency_hz,
            hopping_frequency_hz_err,
            num_oscillations: None,
            num_oscillations_err: None,
        });
    }
    let (b, c) = (fit.b, fit.c);
    let decay_time = 1.0 / b;
    let num_oscillations = c / (2.0 * PI * b);
    let relative = (var_c / (c * c) + var_b / (b * b) - 2.0 * cov_bc / (b * c)).max(0.0).sqrt();
    Ok(FitMetrics {
        decay_time: Some(decay_time),
        decay_time_err: known(var_b.sqrt() / (b * b)),
        hopping_frequency_hz,
        hopping_frequency_hz_err,
        num_oscillations: Some(num_oscillations),
        num_oscillations_err: known(num_oscillations * relative),
    })
}
