//! Rocking/stretch Kerr coupling and the thermally averaged hopping signal.
//!
//! The cross-Kerr term ħχ n_r n_s shifts the radial rocking mode by χ n_s,
//! so a thermal stretch-mode population turns the single hopping frequency
//! κ into a distribution of frequencies κ − χn. Averaging
//! sin²((κ − χn)t/2) over the geometric occupation law gives the decaying
//! (and eventually reviving) hopping signal h(t).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, require_non_negative, require_positive, Error, Result};
use crate::trap_physics::{ModeSpectrum, CONSTANTS};

/// Default truncation tolerance for the thermal sum.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Upper bound on the number of retained Fock levels.
const MAX_LEVELS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KerrCoupling {
    /// rad/s, signed.
    pub chi: f64,
}

/// χ = −ω_s (1/2 + (ω_s²/2)/(4ω_r² − ω_s²)) (ω_z/ω_r) (2ħω_z/(α² m c²))^{1/3}.
pub fn kerr_chi(spectrum: &ModeSpectrum, omega_z: f64, mass: f64) -> Result<KerrCoupling> {
    require_positive("omega_stretch", spectrum.omega_stretch)?;
    require_positive("omega_rock", spectrum.omega_rock)?;
    require_positive("omega_z", omega_z)?;
    require_positive("mass", mass)?;
    let ws2 = spectrum.omega_stretch * spectrum.omega_stretch;
    let wr2 = spectrum.omega_rock * spectrum.omega_rock;
    let detuning = 4.0 * wr2 - ws2;
    if detuning.abs() <= 4.0 * f64::EPSILON * (4.0 * wr2) {
        return Err(Error::ResonanceSingularity {
            omega_rock: spectrum.omega_rock,
            omega_stretch: spectrum.omega_stretch,
        });
    }
    let c = &CONSTANTS;
    let rest_energy = c.fine_structure * c.fine_structure * mass * c.speed_of_light * c.speed_of_light;
    let scale = (2.0 * c.reduced_planck * omega_z / rest_energy).cbrt();
    let bracket = 0.5 + 0.5 * ws2 / detuning;
    let chi = -spectrum.omega_stretch * bracket * (omega_z / spectrum.omega_rock) * scale;
    Ok(KerrCoupling { chi })
}

/// δω_r = χ n_s.
pub fn rocking_shift(coupling: KerrCoupling, n_s: i64) -> Result<f64> {
    if n_s < 0 {
        return Err(domain(format!("stretch-mode quantum number must be non-negative, got {n_s}")));
    }
    Ok(coupling.chi * n_s as f64)
}

/// Truncated thermal (geometric) occupation law P_n = n̄ⁿ/(n̄+1)^{n+1}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalDistribution {
    pub mean_n: f64,
    pub probabilities: Vec<f64>,
    pub n_max: usize,
    pub tail_bound: f64,
}

impl ThermalDistribution {
    /// Ratio P_{n+1}/P_n = n̄/(n̄+1).
    pub fn ratio(&self) -> f64 {
        self.mean_n / (self.mean_n + 1.0)
    }

    /// Σ P_n over the retained levels.
    pub fn retained_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Smallest `n_max` whose cumulative probability reaches `1 − tail_tol`.
pub fn thermal_distribution(mean_n: f64, tail_tol: f64) -> Result<ThermalDistribution> {
    require_non_negative("mean_n", mean_n)?;
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(domain(format!("tail_tol must lie in (0, 1), got {tail_tol}")));
    }
    let q = mean_n / (mean_n + 1.0);
    // Cumulative mass up to n is 1 − q^{n+1}, so the tail beyond n is q^{n+1}.
    let n_max = if q == 0.0 {
        0
    } else {
        let log_q = q.ln();
        if log_q == 0.0 {
            return Err(domain(format!("mean_n = {mean_n} is too large to truncate")));
        }
        let mut n = ((tail_tol.ln() / log_q).ceil() - 1.0).max(0.0);
        if n > MAX_LEVELS as f64 {
            return Err(domain(format!("mean_n = {mean_n} needs more than {MAX_LEVELS} levels")));
        }
        // ceil() may land one level off after rounding
        while n > 0.0 && q.powf(n) <= tail_tol {
            n -= 1.0;
        }
        while q.powf(n + 1.0) > tail_tol {
            n += 1.0;
        }
        n as usize
    };

    let mut probabilities = Vec::with_capacity(n_max + 1);
    let mut p = 1.0 / (mean_n + 1.0);
    for _ in 0..=n_max {
        probabilities.push(p);
        p *= q;
    }
    Ok(ThermalDistribution { mean_n, probabilities, n_max, tail_bound: tail_tol })
}

/// Which population a trace reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationConvention {
    /// Probability that the phonon has left ion 1; zero at t = 0.
    #[default]
    LeftIon1,
    /// Probability that the phonon is still on ion 1; one at t = 0.
    OnIon1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceSource {
    Model { kappa: f64, chi: f64, mean_n: f64 },
    MonteCarlo { kappa: f64, chi: f64, mean_n: f64, samples: u64, seed: u64 },
    Ingested,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoppingTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub source: TraceSource,
    pub convention: ExcitationConvention,
}

impl HoppingTrace {
    /// The same trace under the other population convention.
    pub fn complement(&self) -> HoppingTrace {
        let convention = match self.convention {
            ExcitationConvention::LeftIon1 => ExcitationConvention::OnIon1,
            ExcitationConvention::OnIon1 => ExcitationConvention::LeftIon1,
        };
        HoppingTrace {
            times: self.times.clone(),
            values: self.values.iter().map(|v| 1.0 - v).collect(),
            source: self.source.clone(),
            convention,
        }
    }
}

pub(crate) fn validate_time_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(domain("time grid is empty"));
    }
    if !times.iter().all(|t| t.is_finite()) {
        return Err(domain("time grid contains non-finite values"));
    }
    if times[0] < 0.0 {
        return Err(domain(format!("time grid must start at t >= 0, got {}", times[0])));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(domain(format!("time grid is not strictly increasing at index {}", i + 1)));
    }
    Ok(())
}

/// h(t) = Σ_n P_n sin²((κ − χn)t/2) over the retained levels.
pub fn hopping_signal(kappa: f64, chi: f64, dist: &ThermalDistribution, times: &[f64]) -> Result<HoppingTrace> {
    validate_time_grid(times)?;
    if !kappa.is_finite() || !chi.is_finite() {
        return Err(domain("kappa and chi must be finite"));
    }
    let values = times
        .iter()
        .map(|&t| {
            dist.probabilities
                .iter()
                .enumerate()
                .map(|(n, p)| {
                    let s = (0.5 * (kappa - chi * n as f64) * t).sin();
                    p * s * s
                })
                .sum()
        })
        .collect();
    Ok(HoppingTrace {
        times: times.to_vec(),
        values,
        source: TraceSource::Model { kappa, chi, mean_n: dist.mean_n },
        convention: ExcitationConvention::LeftIon1,
    })
}

/// Envelope of the untruncated thermal average at time `t`.
///
/// Σ P_n e^{−iχnt} = 1/((n̄+1) − n̄e^{−iχt}) = contrast·e^{i·phase}, and
/// h(t) = ½ − ½·contrast·cos(κt + phase).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub contrast: f64,
    pub phase: f64,
}

impl Envelope {
    pub fn signal(&self, kappa: f64, t: f64) -> f64 {
        0.5 - 0.5 * self.contrast * (kappa * t + self.phase).cos()
    }
}

/// The envelope does not depend on κ; it is accepted so call sites read like the signal.
pub fn envelope_closed_form(_kappa: f64, chi: f64, mean_n: f64, t: f64) -> Result<Envelope> {
    require_non_negative("mean_n", mean_n)?;
    let theta = chi * t;
    // |(n̄+1) − n̄e^{−iθ}|² = 1 + 4n̄(n̄+1) sin²(θ/2)
    let half = (0.5 * theta).sin();
    let contrast = 1.0 / (1.0 + 4.0 * mean_n * (mean_n + 1.0) * half * half).sqrt();
    let denominator = Complex64::new(mean_n + 1.0, 0.0) - mean_n * Complex64::from_polar(1.0, -theta);
    let phase = -denominator.arg();
    Ok(Envelope { contrast, phase })
}

pub fn closed_form_signal(kappa: f64, chi: f64, mean_n: f64, times: &[f64]) -> Result<HoppingTrace> {
    validate_time_grid(times)?;
    let values = times
        .iter()
        .map(|&t| envelope_closed_form(kappa, chi, mean_n, t).map(|e| e.signal(kappa, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(HoppingTrace {
        times: times.to_vec(),
        values,
        source: TraceSource::Model { kappa, chi, mean_n },
        convention: ExcitationConvention::LeftIon1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceMetrics {
    /// First time the contrast reaches 1/e, seconds. `None` if it never does.
    pub decay_time: Option<f64>,
    /// κ − χn̄, rad/s.
    pub hopping_frequency: f64,
    /// Hopping cycles completed within `decay_time`. `None` if unbounded.
    pub num_oscillations: Option<f64>,
}

/// Decay time, effective hopping frequency and number of oscillations of the
/// model signal.
///
/// The 1/e crossing is searched by bisection inside the first half revival
/// period (0 < |χ|t ≤ π), where the contrast decreases monotonically.
pub fn coherence_metrics(kappa: f64, chi: f64, mean_n: f64) -> Result<CoherenceMetrics> {
    require_positive("kappa", kappa)?;
    require_non_negative("mean_n", mean_n)?;
    if !chi.is_finite() {
        return Err(domain("chi must be finite"));
    }
    let hopping_frequency = kappa - chi * mean_n;
    let unbounded = CoherenceMetrics { decay_time: None, hopping_frequency, num_oscillations: None };
    if chi == 0.0 || mean_n == 0.0 {
        return Ok(unbounded);
    }

    let target = (-1.0f64).exp();
    let contrast = |t: f64| envelope_closed_form(kappa, chi, mean_n, t).map(|e| e.contrast);
    let revival = 2.0 * PI / chi.abs();
    let mut hi = 0.5 * revival;
    if contrast(hi)? > target {
        return Ok(unbounded);
    }
    let mut lo = 0.0;
    let tolerance = 1e-9 * revival;
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if contrast(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let decay_time = 0.5 * (lo + hi);
    Ok(CoherenceMetrics {
        decay_time: Some(decay_time),
        hopping_frequency,
        num_oscillations: Some(hopping_frequency * decay_time / (2.0 * PI)),
    })
}

/// κ, χ, n̄ and the thermal distribution for one trap setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelPoint {
    pub spectrum: ModeSpectrum,
    pub chi: f64,
    pub mean_n: f64,
}

impl ModelPoint {
    pub fn from_config(config: &crate::trap_physics::TrapConfig) -> Result<Self> {
        use crate::trap_physics::{mean_stretch_occupation, mode_spectrum, rms_velocity};
        let spectrum = mode_spectrum(config)?;
        let chi = kerr_chi(&spectrum, config.omega_z, config.mass)?.chi;
        let v_rms = rms_velocity(config.axial_temperature, config.mass)?;
        let mean_n = mean_stretch_occupation(v_rms, spectrum.omega_stretch, config.mass)?;
        Ok(Self { spectrum, chi, mean_n })
    }

    pub fn kappa(&self) -> f64 {
        self.spectrum.kappa
    }

    pub fn metrics(&self) -> Result<CoherenceMetrics> {
        coherence_metrics(self.spectrum.kappa, self.chi, self.mean_n)
    }
}
