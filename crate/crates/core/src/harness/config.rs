//! Run configuration: a flat `key = value` file split into `[section]`s.
//!
//! ```text
//! # trap at the Doppler limit
//! [trap]
//! omega_y_hz = 2.87e6
//! omega_z_hz = 213e3
//!
//! [sweep]
//! point = 2.87e6, 213e3        # omega_y_hz, omega_z_hz
//! point_d0 = 2.87e6, 16.4e-6   # omega_y_hz, d0 in metres
//! ```
//!
//! `point` and `point_d0` may repeat; every other key may appear once.
//! Unknown sections and keys are rejected with the offending line number.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kerr_model::DEFAULT_TAIL_TOL;
use crate::signal_analysis::FitOptions;
use crate::trap_physics::{
    angular, distance_to_axial_freq, doppler_temperature, DistanceConvention, TrapConfig,
    CA40_COOLING_LINEWIDTH_HZ, CONSTANTS,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapSection {
    pub mass_kg: f64,
    pub omega_y_hz: f64,
    pub omega_z_hz: f64,
    /// Defaults to the Doppler limit of `cooling_linewidth_hz`.
    pub axial_temperature_k: Option<f64>,
    pub cooling_linewidth_hz: f64,
    /// Probe wavelength for the Lamb-Dicke estimate.
    pub wavelength_m: f64,
    pub projection_cosine: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        Self {
            mass_kg: CONSTANTS.ca40_mass,
            omega_y_hz: 2.87e6,
            omega_z_hz: 213e3,
            axial_temperature_k: None,
            cooling_linewidth_hz: CA40_COOLING_LINEWIDTH_HZ,
            wavelength_m: 729e-9,
            projection_cosine: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AxialSetting {
    OmegaZHz(f64),
    DistanceM(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub omega_y_hz: f64,
    pub axial: AxialSetting,
    /// Line of the config file that declared the point, 0 if built in code.
    #[serde(skip)]
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSection {
    pub points: Vec<SweepPoint>,
    /// Also fit a noiseless synthetic trace at every point.
    pub fit_pipeline: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { points: Vec::new(), fit_pipeline: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSection {
    pub tail_tol: f64,
    /// Used to turn `point_d0` distances into axial frequencies.
    pub distance_convention: DistanceConvention,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { tail_tol: DEFAULT_TAIL_TOL, distance_convention: DistanceConvention::Exact }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct SynthSection {
    /// Gaussian noise added by `simulate`; 0 disables.
    pub noise_sigma: f64,
    /// Binomial shots per point for `simulate`; 0 disables. Takes precedence
    /// over `noise_sigma`.
    pub shots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct OutputSection {
    pub format: OutputFormat,
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct RunConfig {
    pub trap: TrapSection,
    pub sweep: SweepSection,
    pub model: ModelSection,
    pub fit: FitOptions,
    pub synth: SynthSection,
    pub output: OutputSection,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_f64(line: usize, key: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| parse_error(line, format!("{key}: '{raw}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("{key}: value must be finite")));
    }
    Ok(v)
}

fn parse_positive(line: usize, key: &str, raw: &str) -> Result<f64> {
    let v = parse_f64(line, key, raw)?;
    if v <= 0.0 {
        return Err(parse_error(line, format!("{key}: must be positive, got {v}")));
    }
    Ok(v)
}

fn parse_u64(line: usize, key: &str, raw: &str) -> Result<u64> {
    raw.trim().parse().map_err(|_| parse_error(line, format!("{key}: '{raw}' is not a non-negative integer")))
}

fn parse_bool(line: usize, key: &str, raw: &str) -> Result<bool> {
    match raw.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(parse_error(line, format!("{key}: expected true or false, got '{other}'"))),
    }
}

fn parse_pair(line: usize, key: &str, raw: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(parse_error(line, format!("{key}: expected two comma-separated numbers")));
    }
    Ok((parse_positive(line, key, parts[0])?, parse_positive(line, key, parts[1])?))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut section: Option<String> = None;
        let mut seen: HashSet<(String, String)> = HashSet::new();
        let mut trap_lines = (0usize, 0usize);

        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| parse_error(line, "unterminated section header"))?
                    .trim();
                if !matches!(name, "trap" | "sweep" | "model" | "fit" | "synth" | "output") {
                    return Err(parse_error(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_error(line, format!("expected 'key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(section) = section.as_deref() else {
                return Err(parse_error(line, format!("key '{key}' appears before any [section]")));
            };
            let repeatable = section == "sweep" && (key == "point" || key == "point_d0");
            if !repeatable && !seen.insert((section.to_string(), key.to_string())) {
                return Err(parse_error(line, format!("duplicate key '{key}' in [{section}]")));
            }

            match (section, key) {
                ("trap", "mass_kg") => config.trap.mass_kg = parse_positive(line, key, value)?,
                ("trap", "omega_y_hz") => {
                    config.trap.omega_y_hz = parse_positive(line, key, value)?;
                    trap_lines.0 = line;
                }
                ("trap", "omega_z_hz") => {
                    config.trap.omega_z_hz = parse_positive(line, key, value)?;
                    trap_lines.1 = line;
                }
                ("trap", "axial_temperature_k") => {
                    let t = parse_f64(line, key, value)?;
                    if t < 0.0 {
                        return Err(parse_error(line, format!("{key}: must be non-negative, got {t}")));
                    }
                    config.trap.axial_temperature_k = Some(t);
                }
                ("trap", "cooling_linewidth_hz") => config.trap.cooling_linewidth_hz = parse_positive(line, key, value)?,
                ("trap", "wavelength_m") => config.trap.wavelength_m = parse_positive(line, key, value)?,
                ("trap", "projection_cosine") => {
                    let c = parse_f64(line, key, value)?;
                    if c.abs() > 1.0 {
                        return Err(parse_error(line, format!("{key}: must lie in [-1, 1], got {c}")));
                    }
                    config.trap.projection_cosine = c;
                }
                ("sweep", "point") => {
                    let (omega_y_hz, omega_z_hz) = parse_pair(line, key, value)?;
                    config.sweep.points.push(SweepPoint { omega_y_hz, axial: AxialSetting::OmegaZHz(omega_z_hz), line });
                }
                ("sweep", "point_d0") => {
                    let (omega_y_hz, d0) = parse_pair(line, key, value)?;
                    config.sweep.points.push(SweepPoint { omega_y_hz, axial: AxialSetting::DistanceM(d0), line });
                }
                ("sweep", "fit_pipeline") => config.sweep.fit_pipeline = parse_bool(line, key, value)?,
                ("model", "tail_tol") => {
                    let tol = parse_f64(line, key, value)?;
                    if !(tol > 0.0 && tol < 1.0) {
                        return Err(parse_error(line, format!("{key}: must lie in (0, 1), got {tol}")));
                    }
                    config.model.tail_tol = tol;
                }
                ("model", "distance_convention") => {
                    config.model.distance_convention = DistanceConvention::from_name(value).ok_or_else(|| {
                        parse_error(line, format!("{key}: expected exact, length_scale or james_fit, got '{value}'"))
                    })?;
                }
                ("fit", "max_iter") => {
                    let n = parse_u64(line, key, value)?;
                    if n == 0 {
                        return Err(parse_error(line, format!("{key}: must be at least 1")));
                    }
                    config.fit.max_iter = n as usize;
                }
                ("fit", "tol") => config.fit.tol = parse_positive(line, key, value)?,
                ("fit", "baseline") => config.fit.baseline = parse_f64(line, key, value)?,
                ("synth", "noise_sigma") => {
                    let s = parse_f64(line, key, value)?;
                    if s < 0.0 {
                        return Err(parse_error(line, format!("{key}: must be non-negative, got {s}")));
                    }
                    config.synth.noise_sigma = s;
                }
                ("synth", "shots") => config.synth.shots = parse_u64(line, key, value)?,
                ("synth", "seed") => config.synth.seed = parse_u64(line, key, value)?,
                ("output", "format") => {
                    config.output.format = match value {
                        "csv" => OutputFormat::Csv,
                        "json" => OutputFormat::Json,
                        other => return Err(parse_error(line, format!("{key}: expected csv or json, got '{other}'"))),
                    }
                }
                ("output", "path") => config.output.path = Some(value.to_string()),
                _ => return Err(parse_error(line, format!("unknown key '{key}' in [{section}]"))),
            }
        }

        if config.trap.omega_y_hz <= config.trap.omega_z_hz {
            let line = trap_lines.0.max(trap_lines.1);
            return Err(parse_error(
                line,
                format!(
                    "omega_y_hz ({}) must exceed omega_z_hz ({}) for a linear chain",
                    config.trap.omega_y_hz, config.trap.omega_z_hz
                ),
            ));
        }
        for point in &config.sweep.points {
            config.point_config(point)?;
        }
        Ok(config)
    }

    pub fn axial_temperature(&self) -> Result<f64> {
        match self.trap.axial_temperature_k {
            Some(t) => Ok(t),
            None => doppler_temperature(angular(self.trap.cooling_linewidth_hz)),
        }
    }

    fn build_trap(&self, omega_y_hz: f64, omega_z_hz: f64) -> Result<TrapConfig> {
        TrapConfig::new(self.trap.mass_kg, angular(omega_y_hz), angular(omega_z_hz), self.axial_temperature()?)
    }

    pub fn trap_config(&self) -> Result<TrapConfig> {
        self.build_trap(self.trap.omega_y_hz, self.trap.omega_z_hz)
    }

    pub fn point_omega_z_hz(&self, point: &SweepPoint) -> Result<f64> {
        match point.axial {
            AxialSetting::OmegaZHz(f) => Ok(f),
            AxialSetting::DistanceM(d0) => {
                let w = distance_to_axial_freq(d0, self.trap.mass_kg, self.model.distance_convention)?;
                Ok(w / angular(1.0))
            }
        }
    }

    pub fn point_config(&self, point: &SweepPoint) -> Result<TrapConfig> {
        let omega_z_hz = self.point_omega_z_hz(point)?;
        if point.omega_y_hz <= omega_z_hz {
            let key = match point.axial {
                AxialSetting::OmegaZHz(_) => "point",
                AxialSetting::DistanceM(_) => "point_d0",
            };
            return Err(parse_error(
                point.line,
                format!("{key}: omega_y_hz ({}) must exceed omega_z_hz ({omega_z_hz})", point.omega_y_hz),
            ));
        }
        self.build_trap(point.omega_y_hz, omega_z_hz)
    }

    /// The effective configuration in the same text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let t = &self.trap;
        let _ = writeln!(s, "[trap]");
        let _ = writeln!(s, "mass_kg = {}", t.mass_kg);
        let _ = writeln!(s, "omega_y_hz = {}", t.omega_y_hz);
        let _ = writeln!(s, "omega_z_hz = {}", t.omega_z_hz);
        if let Some(temp) = t.axial_temperature_k {
            let _ = writeln!(s, "axial_temperature_k = {temp}");
        }
        let _ = writeln!(s, "cooling_linewidth_hz = {}", t.cooling_linewidth_hz);
        let _ = writeln!(s, "wavelength_m = {}", t.wavelength_m);
        let _ = writeln!(s, "projection_cosine = {}", t.projection_cosine);
        let _ = writeln!(s, "\n[sweep]");
        for p in &self.sweep.points {
            match p.axial {
                AxialSetting::OmegaZHz(f) => writeln!(s, "point = {}, {f}", p.omega_y_hz),
                AxialSetting::DistanceM(d) => writeln!(s, "point_d0 = {}, {d}", p.omega_y_hz),
            }
            .ok();
        }
        let _ = writeln!(s, "fit_pipeline = {}", self.sweep.fit_pipeline);
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "tail_tol = {}", self.model.tail_tol);
        let _ = writeln!(s, "distance_convention = {}", self.model.distance_convention.name());
        let _ = writeln!(s, "\n[fit]");
        let _ = writeln!(s, "max_iter = {}", self.fit.max_iter);
        let _ = writeln!(s, "tol = {}", self.fit.tol);
        let _ = writeln!(s, "baseline = {}", self.fit.baseline);
        let _ = writeln!(s, "\n[synth]");
        let _ = writeln!(s, "noise_sigma = {}", self.synth.noise_sigma);
        let _ = writeln!(s, "shots = {}", self.synth.shots);
        let _ = writeln!(s, "seed = {}", self.synth.seed);
        let _ = writeln!(s, "\n[output]");
        let format = match self.output.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let _ = writeln!(s, "format = {format}");
        if let Some(path) = &self.output.path {
            let _ = writeln!(s, "path = {path}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
# reference trap
[trap]
omega_y_hz = 2.87e6   # radial
omega_z_hz = 213e3

[sweep]
point = 2.87e6, 213e3
point_d0 = 2.87e6, 16.4e-6
fit_pipeline = false

[model]
distance_convention = length_scale

[output]
format = json
";

    #[test]
    fn parses_sample() {
        let c = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.trap.omega_y_hz, 2.87e6);
        assert_eq!(c.sweep.points.len(), 2);
        assert_eq!(c.sweep.points[1].line, 8);
        assert!(!c.sweep.fit_pipeline);
        assert_eq!(c.model.distance_convention, DistanceConvention::LengthScale);
        assert_eq!(c.output.format, OutputFormat::Json);
        let wz = c.point_omega_z_hz(&c.sweep.points[1]).unwrap();
        assert!((wz / 140e3 - 1.0).abs() < 0.015, "{wz}");
        let t = c.axial_temperature().unwrap();
        assert!((t / 490e-6 - 1.0).abs() < 0.01);
    }

    #[test]
    fn unknown_key_is_hard_error() {
        let err = RunConfig::parse("[trap]\nomega_y_hz = 1e6\nbogus = 3\n").unwrap_err();
        assert_eq!(err.to_string(), "line 3: unknown key 'bogus' in [trap]");
        assert!(RunConfig::parse("[nope]\n").is_err());
        assert!(RunConfig::parse("omega_y_hz = 1\n").is_err());
        assert!(RunConfig::parse("[trap]\nomega_y_hz = 1e6\nomega_y_hz = 2e6\n").is_err());
        assert!(RunConfig::parse("[trap]\nomega_y_hz == x\n").is_err());
    }

    #[test]
    fn inverted_trap_names_key() {
        let err = RunConfig::parse("[trap]\nomega_y_hz = 100e3\nomega_z_hz = 213e3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 3:"), "{msg}");
        assert!(msg.contains("omega_y_hz"));
        let err = RunConfig::parse("[sweep]\npoint = 1e5, 2e5\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2: point:"), "{err}");
    }

    #[test]
    fn text_round_trip() {
        let c = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap().to_text(), c.to_text());
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse(&d.to_text()).unwrap(), d);
    }

    proptest! {
        #[test]
        fn round_trip_preserves_values(
            wy in 1e6f64..5e6, wz in 1e4f64..5e5, tol in 1e-14f64..1e-3,
            seed in any::<u64>(), sigma in 0.0f64..0.1, baseline in -1.0f64..1.0,
        ) {
            let mut c = RunConfig::default();
            c.trap.omega_y_hz = wy;
            c.trap.omega_z_hz = wz;
            c.model.tail_tol = tol;
            c.synth.seed = seed;
            c.synth.noise_sigma = sigma;
            c.fit.baseline = baseline;
            c.sweep.points.push(SweepPoint { omega_y_hz: wy, axial: AxialSetting::OmegaZHz(wz), line: 0 });
            let back = RunConfig::parse(&c.to_text()).unwrap();
            prop_assert_eq!(back.trap, c.trap);
            prop_assert_eq!(back.model, c.model);
            prop_assert_eq!(back.synth, c.synth);
            prop_assert_eq!(back.fit, c.fit);
            prop_assert_eq!(back.sweep.points[0].axial, c.sweep.points[0].axial);
        }
    }
}
