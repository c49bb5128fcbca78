//! Cross-checks of the analytic model against independent numerical routes.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::kerr_model::{closed_form_signal, hopping_signal, thermal_distribution, ModelPoint};
use crate::quantum_oracle::{classical_normal_modes, evolve_single_phonon, monte_carlo_signal, IonCrystal};
use crate::trap_physics::{
    hertz, hopping_rate, hopping_rate_from_frequencies, mode_spectrum, TrapConfig, CONSTANTS, SCAN_SETTINGS_HZ,
};

use super::commands::uniform_grid;
use super::config::{OutputFormat, RunConfig};

pub type KappaFn = fn(&TrapConfig) -> Result<f64>;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// The hopping-rate implementation under test.
    pub kappa: KappaFn,
    pub mc_samples: u64,
    pub mc_seed: u64,
    pub grid_points: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { kappa: hopping_rate, mc_samples: 20_000, mc_seed: 7, grid_points: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyCheck {
    pub omega_y_hz: f64,
    pub omega_z_hz: f64,
    pub check: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
    pub all_passed: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_setting(trap: &TrapConfig, tail_tol: f64, options: &VerifyOptions) -> Result<Vec<VerifyCheck>> {
    let kappa = (options.kappa)(trap)?;
    let spectrum = mode_spectrum(trap)?;
    let model = ModelPoint::from_config(trap)?;
    let (chi, mean_n) = (model.chi, model.mean_n);
    let mut out = Vec::new();
    let mut push = |check, max_error: f64, tolerance| {
        out.push(VerifyCheck {
            omega_y_hz: hertz(trap.omega_y),
            omega_z_hz: hertz(trap.omega_z),
            check,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        })
    };

    let crystal = IonCrystal::equilibrium(trap)?;
    let coulomb = CONSTANTS.coulomb_constant() / (trap.mass * trap.omega_y * crystal.separation().powi(3));
    let algebraic = hopping_rate_from_frequencies(trap.omega_y, trap.omega_z)?;
    push("kappa-consistency", rel(kappa, coulomb).max(rel(kappa, algebraic)), 1e-12);

    // ω_y − ω_rock = κ(1 + x/4 + …) with x = (ω_z/ω_y)²
    let x = (trap.omega_z / trap.omega_y).powi(2);
    push("kappa-vs-mode-splitting", rel(kappa, spectrum.omega_com_y - spectrum.omega_rock), x);

    let modes = classical_normal_modes(&crystal)?;
    let mut analytic = [spectrum.omega_com_z, spectrum.omega_stretch, spectrum.omega_rock, spectrum.omega_com_y];
    analytic.sort_by(f64::total_cmp);
    let hessian_err = modes.iter().zip(&analytic).map(|(m, a)| rel(*m, *a)).fold(0.0, f64::max);
    push("hessian-vs-analytic", hessian_err, 1e-6);

    let dist = thermal_distribution(mean_n, tail_tol)?;
    let period = 2.0 * std::f64::consts::PI / (kappa - chi * mean_n).abs();
    let short = uniform_grid(20.0 * period, options.grid_points)?;
    let mut unitary_err: f64 = 0.0;
    for n in [0i64, 1, 7, mean_n.round() as i64, dist.n_max as i64] {
        for &t in &short {
            let numeric = evolve_single_phonon(kappa, chi, n, t)?;
            let exact = ((model.kappa() - chi * n as f64) * t / 2.0).sin().powi(2);
            unitary_err = unitary_err.max((numeric - exact).abs());
        }
    }
    push("unitary-vs-closed-form", unitary_err, 1e-9);

    let revival = 2.0 * std::f64::consts::PI / chi.abs();
    let long = uniform_grid(revival, options.grid_points)?;
    let summed = hopping_signal(kappa, chi, &dist, &long)?;
    let closed = closed_form_signal(kappa, chi, mean_n, &long)?;
    push("envelope-vs-truncated-sum", max_abs_diff(&summed.values, &closed.values), 1e-9);

    let mc = monte_carlo_signal(kappa, chi, mean_n, &short, options.mc_samples, options.mc_seed)?;
    let thermal = hopping_signal(kappa, chi, &dist, &short)?;
    let mc_tol = 5.0 / (2.0 * (options.mc_samples as f64).sqrt());
    push("monte-carlo-vs-thermal-sum", max_abs_diff(&mc.values, &thermal.values), mc_tol);

    Ok(out)
}

/// Runs every check at the configured sweep points, or at the built-in scan
/// settings when the sweep is empty.
pub fn verify(config: &RunConfig, options: &VerifyOptions) -> Result<VerifyReport> {
    let traps: Vec<TrapConfig> = if config.sweep.points.is_empty() {
        let mut base = config.clone();
        SCAN_SETTINGS_HZ
            .iter()
            .map(|&(fy, fz)| {
                base.trap.omega_y_hz = fy;
                base.trap.omega_z_hz = fz;
                base.trap_config()
            })
            .collect::<Result<_>>()?
    } else {
        config.sweep.points.iter().map(|p| config.point_config(p)).collect::<Result<_>>()?
    };
    let mut checks = Vec::new();
    for trap in &traps {
        checks.extend(check_setting(trap, config.model.tail_tol, options)?);
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, all_passed })
}

pub fn render_verify(config: &RunConfig, report: &VerifyReport) -> String {
    match config.output.format {
        OutputFormat::Csv => {
            let mut s = String::from("omega_y_hz,omega_z_hz,check,max_error,tolerance,passed\n");
            for c in &report.checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    c.omega_y_hz, c.omega_z_hz, c.check, c.max_error, c.tolerance, c.passed
                );
            }
            s
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serialises");
            s.push('\n');
            s
        }
    }
}
