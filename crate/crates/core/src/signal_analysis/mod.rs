//! Fitting of hopping traces to a·e^{−bt}·sin(ct + d) + f·t.

mod fit;
mod guess;
mod metrics;
mod series;

pub use fit::{fit_damped_sine, fit_series, model_jacobian, model_value, DampedSineFit, FitOptions};
pub use guess::{initial_guess, GuessWarning, InitialGuess};
pub use metrics::{metrics_from_fit, FitMetrics};
pub use series::{DampedSineParams, TimeSeries, MIN_POINTS};
