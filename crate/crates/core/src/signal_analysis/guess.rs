use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::series::{DampedSineParams, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuessWarning {
    /// The record covers fewer than two periods of the detected frequency.
    FewPeriods { periods: f64 },
    /// Nothing oscillates once the linear trend is removed.
    NoDominantFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialGuess {
    pub params: DampedSineParams,
    /// Intercept of the linear trend. Not part of the fit model.
    pub offset: f64,
    pub warnings: Vec<GuessWarning>,
}

/// Least-squares line through (x, y): (intercept, slope).
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Resample onto a uniform grid with the same number of points, linearly.
fn uniform_resample(times: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = times.len();
    let (t0, t1) = (times[0], times[n - 1]);
    let dt = (t1 - t0) / (n - 1) as f64;
    let uniform = times.iter().enumerate().all(|(i, t)| (t - (t0 + i as f64 * dt)).abs() <= 1e-9 * dt);
    if uniform {
        return (times.to_vec(), values.to_vec());
    }
    let grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { t1 } else { t0 + i as f64 * dt }).collect();
    let mut j = 0;
    let resampled = grid
        .iter()
        .map(|&t| {
            while j + 2 < n && times[j + 1] < t {
                j += 1;
            }
            let w = (t - times[j]) / (times[j + 1] - times[j]);
            values[j] + w * (values[j + 1] - values[j])
        })
        .collect();
    (grid, resampled)
}

fn dtft(times: &[f64], values: &[f64], omega: f64) -> Complex64 {
    times.iter().zip(values).map(|(t, v)| v * Complex64::from_polar(1.0, -omega * t)).sum()
}

/// Maximise |X(ω)| on [lo, hi] by golden-section search.
fn refine_peak(times: &[f64], values: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let power = |w: f64| dtft(times, values, w).norm_sqr();
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (power(x1), power(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = power(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = power(x1);
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Starting point for [`fit_damped_sine`](super::fit_damped_sine).
///
/// The frequency comes from the strongest nonzero bin of the FFT of the
/// detrended record, refined inside its neighbouring bins by maximising the
/// DTFT magnitude; the phase is read off at that frequency. The slope comes
/// from a straight-line fit, the amplitude is twice the rms of the
/// detrended values and the decay rate is the negated slope of a log-linear
/// fit through per-period peaks of |detrended|.
pub fn initial_guess(data: &TimeSeries) -> InitialGuess {
    let times = data.times();
    let values = data.values();
    let span = data.span();
    let (offset, slope) = linear_fit(times, values);
    let detrended: Vec<f64> = times.iter().zip(values).map(|(t, y)| y - offset - slope * t).collect();
    let rms = (detrended.iter().map(|r| r * r).sum::<f64>() / detrended.len() as f64).sqrt();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);

    let mut warnings = Vec::new();
    let fallback = DampedSineParams { a: 2.0 * rms, b: 1.0 / span, c: 2.0 * PI / span, d: 0.0, f: slope };
    if rms <= 1e-12 * scale {
        warnings.push(GuessWarning::NoDominantFrequency);
        return InitialGuess { params: fallback, offset, warnings };
    }

    let (grid, uniform) = uniform_resample(times, &detrended);
    let n = grid.len();
    let mut buffer: Vec<Complex64> = uniform.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let (peak, peak_power) = buffer[1..=n / 2]
        .iter()
        .enumerate()
        .map(|(i, z)| (i + 1, z.norm_sqr()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if peak == 0 || peak_power == 0.0 {
        warnings.push(GuessWarning::NoDominantFrequency);
        return InitialGuess { params: fallback, offset, warnings };
    }
    let dt = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let bin = 2.0 * PI / (n as f64 * dt);
    let centre = peak as f64 * bin;
    let c = refine_peak(&grid, &uniform, (centre - bin).max(0.5 * centre), centre + bin);
    let d = dtft(&grid, &uniform, c).arg() + 0.5 * PI;
    let d = (d + PI).rem_euclid(2.0 * PI) - PI;

    let periods = c * span / (2.0 * PI);
    if periods < 2.0 {
        warnings.push(GuessWarning::FewPeriods { periods });
    }

    // Envelope peaks, one per period.
    let period = 2.0 * PI / c;
    let mut peak_t = Vec::new();
    let mut peak_ln = Vec::new();
    let mut window_start = times[0];
    let mut best: Option<(f64, f64)> = None;
    for (&t, r) in times.iter().zip(&detrended) {
        while t >= window_start + period {
            if let Some((bt, br)) = best.take() {
                if br > 0.0 {
                    peak_t.push(bt);
                    peak_ln.push(br.ln());
                }
            }
            window_start += period;
        }
        if best.is_none_or(|(_, br)| r.abs() > br) {
            best = Some((t, r.abs()));
        }
    }
    let b = if peak_t.len() >= 3 {
        let (_, envelope_slope) = linear_fit(&peak_t, &peak_ln);
        -envelope_slope
    } else {
        0.0
    };
    let b = if b > 0.0 { b } else { 0.1 / span };

    InitialGuess { params: DampedSineParams { a: 2.0 * rms, b, c, d, f: slope }, offset, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, n: usize, dt: f64) -> TimeSeries {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let y = t.iter().map(|&t| f(t)).collect();
        TimeSeries::new(t, y, None).unwrap()
    }

    /// Brute-force DFT magnitude peak over bins 1..N/2.
    fn brute_force_peak(values: &[f64]) -> usize {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        (1..=n / 2)
            .map(|k| {
                let z: Complex64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| (v - mean) * Complex64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n as f64))
                    .sum();
                (k, z.norm())
            })
            .fold((0, 0.0), |b, c| if c.1 > b.1 { c } else { b })
            .0
    }

    #[test]
    fn frequency_within_one_bin() {
        let (n, dt) = (200, 1.0 / 50e3);
        let data = series(|t| (2.0 * PI * 7900.0 * t).sin(), n, dt);
        let k = brute_force_peak(data.values());
        let bin = 2.0 * PI / (n as f64 * dt);
        assert_eq!(k, 32);
        let g = initial_guess(&data);
        assert!((g.params.c - k as f64 * bin).abs() <= bin);
        assert!((g.params.c - 2.0 * PI * 7900.0).abs() <= bin);
        assert!(g.warnings.is_empty());
    }

    #[test]
    fn damped_signal_guess_is_close() {
        let data = series(|t| 0.45 * (-500.0 * t).exp() * (2.0 * PI * 7900.0 * t + 0.3).sin(), 400, 1e-5);
        let g = initial_guess(&data).params;
        assert!((g.c / (2.0 * PI * 7900.0) - 1.0).abs() < 0.01, "{}", g.c);
        assert!((g.d - 0.3).abs() < 0.5, "{}", g.d);
        assert!(g.b > 250.0 && g.b < 1000.0, "{}", g.b);
    }

    #[test]
    fn constant_series_warns() {
        let data = series(|_| 0.5, 50, 1e-3);
        let g = initial_guess(&data);
        assert_eq!(g.warnings, vec![GuessWarning::NoDominantFrequency]);
        assert!(g.params.c > 0.0 && g.params.b > 0.0);
    }

    #[test]
    fn ramp_gives_slope_and_no_amplitude() {
        let data = series(|t| 0.1 * t, 100, 0.01);
        let g = initial_guess(&data);
        assert!((g.params.f - 0.1).abs() < 1e-12);
        assert!(g.params.a.abs() < 1e-12);
        assert!(g.offset.abs() < 1e-12);
    }

    #[test]
    fn short_record_warns() {
        let data = series(|t| (2.0 * PI * t).sin(), 64, 1.5 / 63.0);
        let g = initial_guess(&data);
        assert!(g.warnings.iter().any(|w| matches!(w, GuessWarning::FewPeriods { .. })));
    }

    #[test]
    fn nonuniform_grid_is_resampled() {
        let t: Vec<f64> = (0..300).map(|i| i as f64 * 1e-5 + if i % 2 == 1 { 2e-6 } else { 0.0 }).collect();
        let y: Vec<f64> = t.iter().map(|t| (2.0 * PI * 5000.0 * t).sin()).collect();
        let g = initial_guess(&TimeSeries::new(t, y, None).unwrap());
        assert!((g.params.c / (2.0 * PI * 5000.0) - 1.0).abs() < 0.01);
    }
}
