use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::kerr_model::HoppingTrace;

/// Fewest samples accepted for a five-parameter fit.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(domain(format!("{} times but {} values", times.len(), values.len())));
        }
        if times.len() < MIN_POINTS {
            return Err(domain(format!("need at least {MIN_POINTS} points, got {}", times.len())));
        }
        if !times.iter().chain(&values).all(|x| x.is_finite()) {
            return Err(domain("times and values must be finite"));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(domain(format!("times are not strictly increasing at index {}", i + 1)));
        }
        if let Some(s) = &sigma {
            if s.len() != times.len() {
                return Err(domain(format!("{} times but {} sigmas", times.len(), s.len())));
            }
            if !s.iter().all(|x| x.is_finite() && *x > 0.0) {
                return Err(domain("sigma values must be positive and finite"));
            }
        }
        Ok(Self { times, values, sigma })
    }

    pub fn from_trace(trace: &HoppingTrace) -> Result<Self> {
        Self::new(trace.times.clone(), trace.values.clone(), None)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Least-squares weights: 1/σ² when uncertainties are present, else 1.
    pub fn weights(&self) -> Vec<f64> {
        match &self.sigma {
            Some(s) => s.iter().map(|x| 1.0 / (x * x)).collect(),
            None => vec![1.0; self.times.len()],
        }
    }

    /// Copy with `offset` added to every value.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v + offset).collect(),
            sigma: self.sigma.clone(),
        }
    }
}

/// (a, b, c, d, f) of a·e^{−bt}·sin(ct + d) + f·t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampedSineParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
}

impl DampedSineParams {
    pub fn to_array(self) -> [f64; 5] {
        [self.a, self.b, self.c, self.d, self.f]
    }

    pub fn from_array([a, b, c, d, f]: [f64; 5]) -> Self {
        Self { a, b, c, d, f }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}
