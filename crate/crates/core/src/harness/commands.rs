use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::kerr_model::{closed_form_signal, hopping_signal, thermal_distribution, ModelPoint, TraceSource};
use crate::signal_analysis::{
    fit_series, metrics_from_fit, DampedSineParams, FitMetrics, FitOptions, GuessWarning, TimeSeries,
};
use crate::trap_physics::{
    angular, axial_freq_to_distance, doppler_temperature, hertz, modified_lamb_dicke, rms_velocity,
    thermal_occupation, DistanceConvention, TrapConfig,
};

use super::config::{OutputFormat, RunConfig};
use super::csv_io;

/// Environment variable capping the sweep worker count.
pub const THREADS_ENV: &str = "PHONON_HOP_THREADS";

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>, missing: &str) -> String {
    x.map(num).unwrap_or_else(|| missing.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- derive

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeriveRecord {
    pub omega_y_hz: f64,
    pub omega_z_hz: f64,
    pub d0_exact_m: f64,
    pub d0_length_scale_m: f64,
    pub d0_james_fit_m: f64,
    pub omega_com_z: f64,
    pub omega_stretch: f64,
    pub omega_com_y: f64,
    pub omega_rock: f64,
    pub kappa: f64,
    pub chi: f64,
    pub mean_n: f64,
    pub axial_temperature_k: f64,
    pub doppler_temperature_k: f64,
    pub v_rms: f64,
    /// η√n̄ of the axial COM mode.
    pub eta_sqrt_nbar: f64,
}

const DERIVE_HEADER: &str = "omega_y_hz,omega_z_hz,d0_exact_m,d0_length_scale_m,d0_james_fit_m,omega_com_z,omega_stretch,omega_com_y,omega_rock,kappa,chi,mean_n,axial_temperature_k,doppler_temperature_k,v_rms,eta_sqrt_nbar";

impl DeriveRecord {
    pub fn compute(config: &RunConfig, trap: &TrapConfig) -> Result<Self> {
        let model = ModelPoint::from_config(trap)?;
        let d0 = |c| axial_freq_to_distance(trap.omega_z, trap.mass, c);
        let wavenumber = 2.0 * PI / config.trap.wavelength_m;
        let n_com = thermal_occupation(trap.axial_temperature, trap.omega_z)?;
        Ok(Self {
            omega_y_hz: hertz(trap.omega_y),
            omega_z_hz: hertz(trap.omega_z),
            d0_exact_m: d0(DistanceConvention::Exact)?,
            d0_length_scale_m: d0(DistanceConvention::LengthScale)?,
            d0_james_fit_m: d0(DistanceConvention::JamesFit)?,
            omega_com_z: model.spectrum.omega_com_z,
            omega_stretch: model.spectrum.omega_stretch,
            omega_com_y: model.spectrum.omega_com_y,
            omega_rock: model.spectrum.omega_rock,
            kappa: model.spectrum.kappa,
            chi: model.chi,
            mean_n: model.mean_n,
            axial_temperature_k: trap.axial_temperature,
            doppler_temperature_k: doppler_temperature(angular(config.trap.cooling_linewidth_hz))?,
            v_rms: rms_velocity(trap.axial_temperature, trap.mass)?,
            eta_sqrt_nbar: modified_lamb_dicke(wavenumber, config.trap.projection_cosine, trap.omega_z, trap.mass, n_com)?,
        })
    }

    fn csv_row(&self) -> String {
        [
            self.omega_y_hz,
            self.omega_z_hz,
            self.d0_exact_m,
            self.d0_length_scale_m,
            self.d0_james_fit_m,
            self.omega_com_z,
            self.omega_stretch,
            self.omega_com_y,
            self.omega_rock,
            self.kappa,
            self.chi,
            self.mean_n,
            self.axial_temperature_k,
            self.doppler_temperature_k,
            self.v_rms,
            self.eta_sqrt_nbar,
        ]
        .map(num)
        .join(",")
    }
}

/// Derived quantities for every sweep point.
pub fn derive(config: &RunConfig) -> Result<Vec<DeriveRecord>> {
    config
        .sweep
        .points
        .iter()
        .map(|p| DeriveRecord::compute(config, &config.point_config(p)?))
        .collect()
}

pub fn render_derive(config: &RunConfig, records: &[DeriveRecord]) -> String {
    match config.output.format {
        OutputFormat::Csv => {
            let mut s = String::from(DERIVE_HEADER);
            s.push('\n');
            for r in records {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                config: &'a RunConfig,
                records: &'a [DeriveRecord],
            }
            to_json(&Report { config, records })
        }
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateArgs {
    pub t_max: f64,
    pub points: usize,
    pub chi_zero: bool,
}

impl Default for SimulateArgs {
    fn default() -> Self {
        Self { t_max: 5e-3, points: 1001, chi_zero: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedTrace {
    pub source: TraceSource,
    pub times: Vec<f64>,
    pub p_excited: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

/// Uniform grid of `points` samples on [0, t_max].
pub fn uniform_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(domain(format!("t_max must be positive, got {t_max}")));
    }
    if points < 2 {
        return Err(domain(format!("need at least 2 points, got {points}")));
    }
    let step = t_max / (points - 1) as f64;
    Ok((0..points).map(|i| if i == points - 1 { t_max } else { i as f64 * step }).collect())
}

/// The model trace for the `[trap]` setting, optionally with seeded noise.
pub fn simulate(config: &RunConfig, args: &SimulateArgs) -> Result<SimulatedTrace> {
    let times = uniform_grid(args.t_max, args.points)?;
    let model = ModelPoint::from_config(&config.trap_config()?)?;
    let chi = if args.chi_zero { 0.0 } else { model.chi };
    let dist = thermal_distribution(model.mean_n, config.model.tail_tol)?;
    let trace = hopping_signal(model.kappa(), chi, &dist, &times)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.synth.seed);
    let (values, sigma) = if config.synth.shots > 0 {
        let shots = config.synth.shots;
        let mut values = Vec::with_capacity(times.len());
        let mut sigma = Vec::with_capacity(times.len());
        for &p in &trace.values {
            let p = p.clamp(0.0, 1.0);
            let count = Binomial::new(shots, p).map_err(|e| domain(e.to_string()))?.sample(&mut rng);
            values.push(count as f64 / shots as f64);
            // add-one smoothing keeps all-or-nothing bins from getting zero weight
            let smoothed = (count as f64 + 1.0) / (shots as f64 + 2.0);
            sigma.push((smoothed * (1.0 - smoothed) / shots as f64).sqrt());
        }
        (values, Some(sigma))
    } else if config.synth.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, config.synth.noise_sigma).map_err(|e| domain(e.to_string()))?;
        let values = trace.values.iter().map(|v| v + normal.sample(&mut rng)).collect();
        (values, Some(vec![config.synth.noise_sigma; times.len()]))
    } else {
        (trace.values, None)
    };
    Ok(SimulatedTrace { source: trace.source, times, p_excited: values, sigma })
}

pub fn render_simulate(config: &RunConfig, trace: &SimulatedTrace) -> String {
    match config.output.format {
        OutputFormat::Csv => csv_io::write_series(&trace.times, &trace.p_excited, trace.sigma.as_deref()),
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                config: &'a RunConfig,
                trace: &'a SimulatedTrace,
            }
            to_json(&Report { config, trace })
        }
    }
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitBlock {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
    /// Row-major 5×5 over (a, b, c, d, f).
    pub covariance: Vec<f64>,
    pub standard_errors: [f64; 5],
    pub residual_rms: f64,
    pub iterations: usize,
    pub degenerate: bool,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReportConfig {
    pub input: String,
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub config: FitReportConfig,
    pub fit: FitBlock,
    pub initial_guess: DampedSineParams,
    pub warnings: Vec<GuessWarning>,
    pub metrics: Option<FitMetrics>,
    pub converged: bool,
}

pub fn fit_csv(config: &RunConfig, input_name: &str, csv_text: &str) -> Result<FitReport> {
    let series = csv_io::read_series(csv_text)?;
    fit_report(config, input_name, &series)
}

pub fn fit_report(config: &RunConfig, input_name: &str, series: &TimeSeries) -> Result<FitReport> {
    let (guess, fit) = fit_series(series, &config.fit)?;
    let metrics = if fit.converged { Some(metrics_from_fit(&fit)?) } else { None };
    Ok(FitReport {
        config: FitReportConfig { input: input_name.to_string(), options: config.fit },
        fit: FitBlock {
            a: fit.a,
            b: fit.b,
            c: fit.c,
            d: fit.d,
            f: fit.f,
            covariance: fit.covariance.iter().flatten().copied().collect(),
            standard_errors: fit.standard_errors(),
            residual_rms: fit.residual_rms,
            iterations: fit.iterations,
            degenerate: fit.degenerate,
            baseline: fit.baseline,
        },
        initial_guess: guess.params,
        warnings: guess.warnings,
        metrics,
        converged: fit.converged,
    })
}

pub fn render_fit(report: &FitReport) -> String {
    to_json(report)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub omega_y_hz: f64,
    pub omega_z_hz: f64,
    pub d0_exact_m: f64,
    pub d0_length_scale_m: f64,
    pub kappa: f64,
    pub chi: f64,
    pub mean_n: f64,
    /// `None`: the contrast never reaches 1/e.
    pub decay_time_model: Option<f64>,
    pub n_osc_model: Option<f64>,
    pub hopping_frequency_model: f64,
    /// `None`: fit pipeline disabled, skipped or not converged.
    pub decay_time_fit: Option<f64>,
    pub n_osc_fit: Option<f64>,
    pub hopping_frequency_fit_hz: Option<f64>,
}

const SWEEP_HEADER: &str = "omega_y_hz,omega_z_hz,d0_exact_m,d0_length_scale_m,kappa,chi,mean_n,decay_time_model,n_osc_model,hopping_frequency_model,decay_time_fit,n_osc_fit,hopping_frequency_fit_hz";

impl SweepRecord {
    fn csv_row(&self) -> String {
        [
            num(self.omega_y_hz),
            num(self.omega_z_hz),
            num(self.d0_exact_m),
            num(self.d0_length_scale_m),
            num(self.kappa),
            num(self.chi),
            num(self.mean_n),
            opt(self.decay_time_model, "inf"),
            opt(self.n_osc_model, "inf"),
            num(self.hopping_frequency_model),
            opt(self.decay_time_fit, ""),
            opt(self.n_osc_fit, ""),
            opt(self.hopping_frequency_fit_hz, ""),
        ]
        .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendCheck {
    pub name: String,
    pub group: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub trends: Vec<TrendCheck>,
}

/// Hopping periods per sample and decay times spanned by the synthetic trace
/// used for the fit pipeline.
const FIT_SAMPLES_PER_PERIOD: f64 = 16.0;
const FIT_WINDOW_DECAY_TIMES: f64 = 2.0;
const FIT_MAX_POINTS: usize = 400_000;

fn fit_pipeline(config: &RunConfig, model: &ModelPoint, decay_time: f64) -> Result<Option<FitMetrics>> {
    let t_max = FIT_WINDOW_DECAY_TIMES * decay_time;
    let frequency = model.kappa() - model.chi * model.mean_n;
    let periods = frequency * t_max / (2.0 * PI);
    let points = (FIT_SAMPLES_PER_PERIOD * periods).ceil() as usize + 1;
    if points > FIT_MAX_POINTS {
        return Ok(None);
    }
    let times = uniform_grid(t_max, points.max(crate::signal_analysis::MIN_POINTS))?;
    // closed form equals the truncated thermal sum to within tail_tol
    let trace = closed_form_signal(model.kappa(), model.chi, model.mean_n, &times)?;
    let series = TimeSeries::from_trace(&trace)?;
    // the trace oscillates about 1/2
    let options = FitOptions { baseline: 0.5, ..config.fit };
    let (_, fit) = fit_series(&series, &options)?;
    if !fit.converged {
        return Ok(None);
    }
    metrics_from_fit(&fit).map(Some)
}

fn sweep_point(config: &RunConfig, trap: &TrapConfig) -> Result<SweepRecord> {
    let model = ModelPoint::from_config(trap)?;
    let metrics = model.metrics()?;
    let fit = match (config.sweep.fit_pipeline, metrics.decay_time) {
        (true, Some(tau)) => fit_pipeline(config, &model, tau)?,
        _ => None,
    };
    Ok(SweepRecord {
        omega_y_hz: hertz(trap.omega_y),
        omega_z_hz: hertz(trap.omega_z),
        d0_exact_m: axial_freq_to_distance(trap.omega_z, trap.mass, DistanceConvention::Exact)?,
        d0_length_scale_m: axial_freq_to_distance(trap.omega_z, trap.mass, DistanceConvention::LengthScale)?,
        kappa: model.kappa(),
        chi: model.chi,
        mean_n: model.mean_n,
        decay_time_model: metrics.decay_time,
        n_osc_model: metrics.num_oscillations,
        hopping_frequency_model: metrics.hopping_frequency,
        decay_time_fit: fit.and_then(|m| m.decay_time),
        n_osc_fit: fit.and_then(|m| m.num_oscillations),
        hopping_frequency_fit_hz: fit.map(|m| m.hopping_frequency_hz),
    })
}

fn worker_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0)
}

fn strictly(values: &[Option<f64>], increasing: bool) -> bool {
    values.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => if increasing { b > a } else { b < a },
        _ => false,
    })
}

fn group_trends(records: &[SweepRecord], fixed: fn(&SweepRecord) -> f64, label: &str, axis: fn(&SweepRecord) -> f64, axis_name: &str, n_osc_increases: bool) -> Vec<TrendCheck> {
    let mut keys: Vec<f64> = records.iter().map(fixed).collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    let mut checks = Vec::new();
    for key in keys {
        let mut group: Vec<&SweepRecord> = records.iter().filter(|r| fixed(r) == key).collect();
        if group.len() < 2 {
            continue;
        }
        group.sort_by(|a, b| axis(a).total_cmp(&axis(b)));
        let tau: Vec<_> = group.iter().map(|r| r.decay_time_model).collect();
        let n: Vec<_> = group.iter().map(|r| r.n_osc_model).collect();
        let group_name = format!("{label}={key}");
        checks.push(TrendCheck {
            name: format!("decay_time_model increases with {axis_name}"),
            group: group_name.clone(),
            passed: strictly(&tau, true),
        });
        let direction = if n_osc_increases { "increases" } else { "decreases" };
        checks.push(TrendCheck {
            name: format!("n_osc_model {direction} with {axis_name}"),
            group: group_name,
            passed: strictly(&n, n_osc_increases),
        });
    }
    checks
}

fn trend_checks(records: &[SweepRecord]) -> Vec<TrendCheck> {
    let mut checks = group_trends(records, |r| r.omega_y_hz, "omega_y_hz", |r| r.d0_exact_m, "d0", false);
    checks.extend(group_trends(records, |r| r.omega_z_hz, "omega_z_hz", |r| r.omega_y_hz, "omega_y", true));
    checks
}

/// Model (and optionally fit-pipeline) metrics at every sweep point.
///
/// Points may be evaluated on a worker pool capped by `PHONON_HOP_THREADS`;
/// the table is assembled in input order and then sorted, so the result does
/// not depend on the worker count.
pub fn sweep(config: &RunConfig) -> Result<SweepResult> {
    if config.sweep.points.is_empty() {
        return Err(domain("sweep list is empty"));
    }
    let traps = config.sweep.points.iter().map(|p| config.point_config(p)).collect::<Result<Vec<_>>>()?;
    let evaluate = || traps.par_iter().map(|trap| sweep_point(config, trap)).collect::<Result<Vec<_>>>();
    let mut records = match worker_count() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| domain(format!("cannot start worker pool: {e}")))?
            .install(evaluate)?,
        None => evaluate()?,
    };

    let same = |f: fn(&SweepRecord) -> f64| records.windows(2).all(|w| f(&w[0]) == f(&w[1]));
    if same(|r| r.omega_y_hz) {
        records.sort_by(|a, b| a.d0_exact_m.total_cmp(&b.d0_exact_m));
    } else if same(|r| r.omega_z_hz) {
        records.sort_by(|a, b| a.omega_y_hz.total_cmp(&b.omega_y_hz));
    } else {
        records.sort_by(|a, b| a.omega_y_hz.total_cmp(&b.omega_y_hz).then(a.d0_exact_m.total_cmp(&b.d0_exact_m)));
    }
    let trends = trend_checks(&records);
    Ok(SweepResult { records, trends })
}

pub fn render_sweep(config: &RunConfig, result: &SweepResult) -> String {
    match config.output.format {
        OutputFormat::Csv => {
            let mut s = String::from(SWEEP_HEADER);
            s.push('\n');
            for r in &result.records {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            for t in &result.trends {
                let verdict = if t.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "# trend {verdict}: {} [{}]", t.name, t.group);
            }
            s
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                config: &'a RunConfig,
                records: &'a [SweepRecord],
                trends: &'a [TrendCheck],
            }
            to_json(&Report { config, records: &result.records, trends: &result.trends })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{AxialSetting, SweepPoint};

    fn with_points(points: &[(f64, f64)]) -> RunConfig {
        let mut c = RunConfig::default();
        c.sweep.points = points
            .iter()
            .map(|&(wy, wz)| SweepPoint { omega_y_hz: wy, axial: AxialSetting::OmegaZHz(wz), line: 0 })
            .collect();
        c
    }

    #[test]
    fn derive_reference_values() {
        let c = with_points(&[(2.87e6, 213e3)]);
        let r = &derive(&c).unwrap()[0];
        assert!((hertz(r.kappa) / 7.9e3 - 1.0).abs() < 0.01);
        assert!((hertz(r.chi) / -0.13 - 1.0).abs() < 0.03);
        assert!((r.mean_n / 27.7 - 1.0).abs() < 0.01);
    }

    #[test]
    fn empty_derive_has_no_rows() {
        let c = RunConfig::default();
        let text = render_derive(&c, &derive(&c).unwrap());
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn grid_validation() {
        assert!(uniform_grid(0.0, 10).is_err());
        assert!(uniform_grid(1.0, 1).is_err());
        let g = uniform_grid(1.0, 3).unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn chi_zero_gives_pure_sine() {
        let c = RunConfig::default();
        let trace = simulate(&c, &SimulateArgs { chi_zero: true, ..Default::default() }).unwrap();
        let kappa = crate::trap_physics::hopping_rate(&c.trap_config().unwrap()).unwrap();
        for (t, v) in trace.times.iter().zip(&trace.p_excited) {
            assert!((v - (kappa * t / 2.0).sin().powi(2)).abs() < 1e-11);
        }
    }

    #[test]
    fn empty_sweep_is_an_error() {
        assert!(sweep(&RunConfig::default()).is_err());
    }

    #[test]
    fn single_point_sweep_matches_derive() {
        let mut c = with_points(&[(2.87e6, 213e3)]);
        c.sweep.fit_pipeline = false;
        let s = sweep(&c).unwrap();
        let d = &derive(&c).unwrap()[0];
        let r = &s.records[0];
        assert_eq!((r.kappa, r.chi, r.mean_n), (d.kappa, d.chi, d.mean_n));
        let m = ModelPoint::from_config(&c.trap_config().unwrap()).unwrap().metrics().unwrap();
        assert_eq!(r.decay_time_model, m.decay_time);
        assert_eq!(r.n_osc_model, m.num_oscillations);
        assert!(s.trends.is_empty());
    }
}
