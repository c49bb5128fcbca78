//! Physical constants and quantities derived from the trap parameters of a
//! two-ion ⁴⁰Ca⁺ crystal: equilibrium separation, collective-mode spectrum,
//! radial hopping rate, Doppler temperature, thermal occupations and the
//! thermally broadened Lamb-Dicke parameter.
//!
//! Every angular frequency here is in rad/s. Helpers that accept ordinary
//! frequencies carry a `_hz` suffix.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, require_non_negative, require_positive, Error, Result};

/// CODATA-2018 constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub elementary_charge: f64,
    pub vacuum_permittivity: f64,
    pub reduced_planck: f64,
    pub boltzmann: f64,
    pub fine_structure: f64,
    pub speed_of_light: f64,
    pub ca40_mass: f64,
}

const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    elementary_charge: 1.602_176_634e-19,
    vacuum_permittivity: 8.854_187_812_8e-12,
    reduced_planck: 1.054_571_817e-34,
    boltzmann: 1.380_649e-23,
    fine_structure: 7.297_352_569_3e-3,
    speed_of_light: 299_792_458.0,
    ca40_mass: 39.962_590_9 * ATOMIC_MASS_UNIT,
};

impl PhysicalConstants {
    /// e²/(4πε₀), in J·m.
    pub fn coulomb_constant(&self) -> f64 {
        self.elementary_charge * self.elementary_charge / (4.0 * PI * self.vacuum_permittivity)
    }
}

/// Natural linewidth of the ⁴⁰Ca⁺ S1/2–P1/2 cooling transition, Γ/2π in Hz.
pub const CA40_COOLING_LINEWIDTH_HZ: f64 = 20.4e6;

/// 2π·f.
pub fn angular(frequency_hz: f64) -> f64 {
    2.0 * PI * frequency_hz
}

/// ω/2π.
pub fn hertz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Trap parameters from which every other quantity is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Ion mass, kg.
    pub mass: f64,
    /// Radial (y) trap angular frequency, rad/s.
    pub omega_y: f64,
    /// Axial trap angular frequency, rad/s.
    pub omega_z: f64,
    /// Axial motional temperature, K.
    pub axial_temperature: f64,
}

impl TrapConfig {
    pub fn new(mass: f64, omega_y: f64, omega_z: f64, axial_temperature: f64) -> Result<Self> {
        let config = Self { mass, omega_y, omega_z, axial_temperature };
        config.validate()?;
        Ok(config)
    }

    /// ⁴⁰Ca⁺ at the Doppler limit of the cooling transition, from ω/2π values.
    pub fn calcium_hz(omega_y_hz: f64, omega_z_hz: f64) -> Result<Self> {
        let temperature = doppler_temperature(angular(CA40_COOLING_LINEWIDTH_HZ))?;
        Self::new(CONSTANTS.ca40_mass, angular(omega_y_hz), angular(omega_z_hz), temperature)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("mass", self.mass)?;
        require_positive("omega_z", self.omega_z)?;
        require_positive("omega_y", self.omega_y)?;
        require_non_negative("axial_temperature", self.axial_temperature)?;
        if self.omega_y <= self.omega_z {
            return Err(Error::Configuration(format!(
                "omega_y ({:.6e} rad/s) must exceed omega_z ({:.6e} rad/s): zigzag instability / imaginary rocking frequency",
                self.omega_y, self.omega_z
            )));
        }
        Ok(())
    }

    pub fn with_omega_y(self, omega_y: f64) -> Result<Self> {
        Self::new(self.mass, omega_y, self.omega_z, self.axial_temperature)
    }

    pub fn with_omega_z(self, omega_z: f64) -> Result<Self> {
        Self::new(self.mass, self.omega_y, omega_z, self.axial_temperature)
    }
}

/// How the inter-ion distance d₀ relates to the axial trap frequency.
///
/// All three share the length scale ℓ = (e²/(4πε₀ m ω_z²))^{1/3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceConvention {
    /// d₀ = 2^{1/3} ℓ, the true equilibrium separation of two ions.
    #[default]
    Exact,
    /// d₀ = ℓ. Reproduces the tabulated (d₀, ω_z) pairs of the experiment.
    LengthScale,
    /// d₀ = ℓ · 2.018 / 2^{0.559}.
    JamesFit,
}

impl DistanceConvention {
    pub const ALL: [DistanceConvention; 3] =
        [DistanceConvention::Exact, DistanceConvention::LengthScale, DistanceConvention::JamesFit];

    /// d₀ / ℓ.
    pub fn factor(self) -> f64 {
        match self {
            DistanceConvention::Exact => 2f64.cbrt(),
            DistanceConvention::LengthScale => 1.0,
            DistanceConvention::JamesFit => 2.018 / 2f64.powf(0.559),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistanceConvention::Exact => "exact",
            DistanceConvention::LengthScale => "length_scale",
            DistanceConvention::JamesFit => "james_fit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Inter-ion distance for axial angular frequency `omega_z`.
pub fn axial_freq_to_distance(omega_z: f64, mass: f64, convention: DistanceConvention) -> Result<f64> {
    require_positive("omega_z", omega_z)?;
    require_positive("mass", mass)?;
    let length_scale = (CONSTANTS.coulomb_constant() / (mass * omega_z * omega_z)).cbrt();
    Ok(convention.factor() * length_scale)
}

/// Inverse of [`axial_freq_to_distance`].
pub fn distance_to_axial_freq(d0: f64, mass: f64, convention: DistanceConvention) -> Result<f64> {
    require_positive("d0", d0)?;
    require_positive("mass", mass)?;
    let length_scale = d0 / convention.factor();
    Ok((CONSTANTS.coulomb_constant() / (mass * length_scale.powi(3))).sqrt())
}

/// Collective-mode angular frequencies of the two-ion crystal plus the
/// radial hopping rate, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub omega_com_z: f64,
    pub omega_stretch: f64,
    pub omega_com_y: f64,
    pub omega_rock: f64,
    pub kappa: f64,
}

pub fn mode_spectrum(config: &TrapConfig) -> Result<ModeSpectrum> {
    config.validate()?;
    let TrapConfig { omega_y, omega_z, .. } = *config;
    Ok(ModeSpectrum {
        omega_com_z: omega_z,
        omega_stretch: 3f64.sqrt() * omega_z,
        omega_com_y: omega_y,
        omega_rock: ((omega_y - omega_z) * (omega_y + omega_z)).sqrt(),
        kappa: hopping_rate(config)?,
    })
}

/// κ = e²/(4πε₀ m ω_y d₀³), with d₀ the exact equilibrium separation.
///
/// The radial frequency enters to the first power so that ħκ is an energy.
pub fn hopping_rate(config: &TrapConfig) -> Result<f64> {
    config.validate()?;
    let d0 = axial_freq_to_distance(config.omega_z, config.mass, DistanceConvention::Exact)?;
    Ok(CONSTANTS.coulomb_constant() / (config.mass * config.omega_y * d0.powi(3)))
}

/// κ = ω_z²/(2ω_y); algebraically identical to [`hopping_rate`] at equilibrium.
pub fn hopping_rate_from_frequencies(omega_y: f64, omega_z: f64) -> Result<f64> {
    require_positive("omega_y", omega_y)?;
    require_positive("omega_z", omega_z)?;
    Ok(omega_z * omega_z / (2.0 * omega_y))
}

/// T_D = ħΓ/(2k_B) for a cooling transition of natural linewidth Γ (rad/s).
pub fn doppler_temperature(gamma: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    Ok(CONSTANTS.reduced_planck * gamma / (2.0 * CONSTANTS.boltzmann))
}

/// v_rms = √(k_B T / m).
pub fn rms_velocity(temperature: f64, mass: f64) -> Result<f64> {
    require_non_negative("temperature", temperature)?;
    require_positive("mass", mass)?;
    Ok((CONSTANTS.boltzmann * temperature / mass).sqrt())
}

/// ⟨n_s⟩ = m v_rms² / (ħ ω_s).
pub fn mean_stretch_occupation(v_rms: f64, omega_s: f64, mass: f64) -> Result<f64> {
    require_positive("omega_s", omega_s)?;
    require_non_negative("v_rms", v_rms)?;
    require_positive("mass", mass)?;
    Ok(mass * v_rms * v_rms / (CONSTANTS.reduced_planck * omega_s))
}

/// Classical (equipartition) occupation k_B T/(ħω) of a mode at `omega`.
pub fn thermal_occupation(temperature: f64, omega: f64) -> Result<f64> {
    require_non_negative("temperature", temperature)?;
    require_positive("omega", omega)?;
    Ok(CONSTANTS.boltzmann * temperature / (CONSTANTS.reduced_planck * omega))
}

/// η√n̄ with η = k cosθ √(ħ/(2mω)).
pub fn modified_lamb_dicke(
    wavenumber: f64,
    projection_cosine: f64,
    omega: f64,
    mass: f64,
    mean_n: f64,
) -> Result<f64> {
    require_positive("omega", omega)?;
    require_positive("mass", mass)?;
    require_non_negative("wavenumber", wavenumber)?;
    require_non_negative("mean_n", mean_n)?;
    if !(projection_cosine.abs() <= 1.0) {
        return Err(domain(format!("projection_cosine must lie in [-1, 1], got {projection_cosine}")));
    }
    let eta = wavenumber * projection_cosine.abs() * (CONSTANTS.reduced_planck / (2.0 * mass * omega)).sqrt();
    Ok(eta * mean_n.sqrt())
}

/// The eight (ω_y/2π, ω_z/2π) settings of the systematic scan, in Hz: four
/// axial frequencies at ω_y/2π = 2.87 MHz, then four radial frequencies at
/// ω_z/2π = 140 kHz (d₀ = 16.4 μm).
pub const SCAN_SETTINGS_HZ: [(f64, f64); 8] = [
    (2.87e6, 213e3),
    (2.87e6, 140e3),
    (2.87e6, 105e3),
    (2.87e6, 50e3),
    (2.43e6, 140e3),
    (2.64e6, 140e3),
    (2.87e6, 140e3),
    (3.11e6, 140e3),
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn khz(f: f64) -> f64 {
        angular(f * 1e3)
    }

    /// Solve m ω_z² (d/2) = e²/(4πε₀ d²) for d by bisection.
    fn equilibrium_by_bisection(omega_z: f64, mass: f64) -> f64 {
        let k = CONSTANTS.coulomb_constant();
        let force = |d: f64| mass * omega_z * omega_z * d / 2.0 - k / (d * d);
        let (mut lo, mut hi) = (1e-7, 1e-3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if force(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn tabulated_distances_use_length_scale() {
        let m = CONSTANTS.ca40_mass;
        let d = axial_freq_to_distance(khz(213.0), m, DistanceConvention::LengthScale).unwrap();
        assert_relative_eq!(d, 12.5e-6, max_relative = 0.01);
        let d = axial_freq_to_distance(khz(50.0), m, DistanceConvention::LengthScale).unwrap();
        assert_relative_eq!(d, 32.6e-6, max_relative = 0.01);
        let w = distance_to_axial_freq(32.6e-6, m, DistanceConvention::LengthScale).unwrap();
        assert_relative_eq!(w, khz(50.0), max_relative = 0.01);
    }

    #[test]
    fn exact_distance_matches_force_balance() {
        let m = CONSTANTS.ca40_mass;
        let oracle = equilibrium_by_bisection(khz(213.0), m);
        let d = axial_freq_to_distance(khz(213.0), m, DistanceConvention::Exact).unwrap();
        assert_relative_eq!(d, oracle, max_relative = 1e-12);
        assert_relative_eq!(d, 15.7e-6, max_relative = 0.01);
        let w = distance_to_axial_freq(15.7e-6, m, DistanceConvention::Exact).unwrap();
        assert_relative_eq!(w, khz(213.0), max_relative = 0.01);
    }

    #[test]
    fn distance_scales_as_inverse_two_thirds_power() {
        let m = CONSTANTS.ca40_mass;
        for convention in DistanceConvention::ALL {
            let d1 = axial_freq_to_distance(khz(100.0), m, convention).unwrap();
            let d4 = axial_freq_to_distance(khz(400.0), m, convention).unwrap();
            assert_relative_eq!(d4, d1 / 4f64.powf(2.0 / 3.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn non_positive_inputs_are_rejected() {
        let m = CONSTANTS.ca40_mass;
        assert!(axial_freq_to_distance(0.0, m, DistanceConvention::Exact).is_err());
        assert!(axial_freq_to_distance(1.0, -m, DistanceConvention::Exact).is_err());
        assert!(distance_to_axial_freq(-1e-6, m, DistanceConvention::Exact).is_err());
        assert!(doppler_temperature(0.0).is_err());
        assert!(rms_velocity(-1.0, m).is_err());
        assert!(mean_stretch_occupation(1.0, 0.0, m).is_err());
        assert!(modified_lamb_dicke(1.0, 1.0, 0.0, m, 1.0).is_err());
        assert!(modified_lamb_dicke(1.0, 1.5, 1.0, m, 1.0).is_err());
    }

    #[test]
    fn unstable_configuration_is_rejected() {
        let err = TrapConfig::calcium_hz(100e3, 213e3).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
        assert!(err.to_string().contains("zigzag"));
        assert!(TrapConfig::calcium_hz(213e3, 213e3).is_err());
    }

    #[test]
    fn spectrum_of_reference_trap() {
        let config = TrapConfig::calcium_hz(2.87e6, 213e3).unwrap();
        let s = mode_spectrum(&config).unwrap();
        assert_relative_eq!(hertz(s.omega_stretch), 3f64.sqrt() * 213e3, max_relative = 1e-12);
        assert_relative_eq!(hertz(s.omega_stretch), 368.9e3, max_relative = 1e-4);
        assert_relative_eq!(hertz(s.omega_rock), (2.87e6f64.powi(2) - 213e3f64.powi(2)).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(hertz(s.omega_rock), 2.862e6, max_relative = 1e-3);
    }

    #[test]
    fn kappa_reference_values() {
        // hand evaluation of ω_z²/(2ω_y): 213²/(2·2870) kHz = 7.904 kHz, 50²/5740 kHz = 0.4355 kHz
        let k = hopping_rate(&TrapConfig::calcium_hz(2.87e6, 213e3).unwrap()).unwrap();
        assert_relative_eq!(hertz(k), 7.904e3, max_relative = 1e-3);
        let k = hopping_rate(&TrapConfig::calcium_hz(2.87e6, 50e3).unwrap()).unwrap();
        assert_relative_eq!(hertz(k), 0.4355e3, max_relative = 1e-3);
    }

    #[test]
    fn kappa_routes_agree() {
        for (fy, fz) in SCAN_SETTINGS_HZ {
            let config = TrapConfig::calcium_hz(fy, fz).unwrap();
            let eq3 = hopping_rate(&config).unwrap();
            let direct = hopping_rate_from_frequencies(config.omega_y, config.omega_z).unwrap();
            assert_relative_eq!(eq3, direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn kappa_inverse_in_omega_y() {
        let a = hopping_rate(&TrapConfig::calcium_hz(2.0e6, 140e3).unwrap()).unwrap();
        let b = hopping_rate(&TrapConfig::calcium_hz(4.0e6, 140e3).unwrap()).unwrap();
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn weak_axial_limit_decouples() {
        let config = TrapConfig::calcium_hz(2.87e6, 1.0).unwrap();
        let s = mode_spectrum(&config).unwrap();
        assert_relative_eq!(s.omega_rock, s.omega_com_y, max_relative = 1e-12);
        assert!(s.kappa < 1e-5);
    }

    #[test]
    fn mode_splitting_tracks_kappa() {
        for (fy, fz) in SCAN_SETTINGS_HZ {
            let s = mode_spectrum(&TrapConfig::calcium_hz(fy, fz).unwrap()).unwrap();
            let split = s.omega_com_y - s.omega_rock;
            assert!(((split - s.kappa) / s.kappa).abs() < 0.01);
        }
    }

    #[test]
    fn doppler_limit_of_calcium() {
        let t = doppler_temperature(angular(20.4e6)).unwrap();
        assert_relative_eq!(t, 490e-6, max_relative = 0.01);
        assert_relative_eq!(doppler_temperature(angular(10.2e6)).unwrap(), t / 2.0, max_relative = 1e-12);
        assert_relative_eq!(doppler_temperature(angular(40.8e6)).unwrap(), 2.0 * t, max_relative = 1e-12);
    }

    #[test]
    fn velocity_and_occupation() {
        let m = CONSTANTS.ca40_mass;
        assert_eq!(rms_velocity(0.0, m).unwrap(), 0.0);
        let v = rms_velocity(490e-6, m).unwrap();
        assert_relative_eq!(v, (1.380_649e-23 * 490e-6 / m).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(rms_velocity(4.0 * 490e-6, m).unwrap(), 2.0 * v, max_relative = 1e-12);

        let omega_s = angular(368.9e3);
        let n = mean_stretch_occupation(v, omega_s, m).unwrap();
        // k_B T/(ħ ω_s) evaluated directly
        let direct = 1.380_649e-23 * 490e-6 / (1.054_571_817e-34 * omega_s);
        assert_relative_eq!(n, direct, max_relative = 1e-12);
        assert_relative_eq!(n, 27.7, max_relative = 0.01);
        assert_relative_eq!(n, thermal_occupation(490e-6, omega_s).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(mean_stretch_occupation(v, 2.0 * omega_s, m).unwrap(), n / 2.0, max_relative = 1e-12);
        assert_eq!(mean_stretch_occupation(0.0, omega_s, m).unwrap(), 0.0);
    }

    #[test]
    fn lamb_dicke_scaling() {
        let m = CONSTANTS.ca40_mass;
        let k = 2.0 * PI / 729e-9;
        let t = 490e-6;
        let at = |f_khz: f64| {
            let w = khz(f_khz);
            modified_lamb_dicke(k, 1.0, w, m, thermal_occupation(t, w).unwrap()).unwrap()
        };
        assert_relative_eq!(at(50.0) / at(213.0), 213.0 / 50.0, max_relative = 1e-12);
        let v = at(213.0);
        assert!(v > 0.1 && v < 10.0, "η√n̄ = {v}");
        assert_eq!(modified_lamb_dicke(k, 1.0, khz(213.0), m, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn convention_names_round_trip() {
        for c in DistanceConvention::ALL {
            assert_eq!(DistanceConvention::from_name(c.name()), Some(c));
        }
        assert_eq!(DistanceConvention::from_name("bogus"), None);
    }
}
