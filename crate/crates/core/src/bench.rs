//! Convergence and timing experiments with CSV output.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::integrate::{
    integrate, plan, step, ForceError, ForceField, IntegrateError, IntegrateOptions, PhaseState,
    Projection, Scalar, StepPlan, ZeroForce,
};
use crate::methods::SplittingMethod;
use crate::problems::{
    kepler_exact, kepler_init, plummer_sample, GravityField, KeplerSetup, PLUMMER_SOFTENING,
};
use crate::reference::{gbs_integrate, GbsConfig, GbsError};

pub const CSV_HEADER: &str = "method,problem,stepsize,steps,err_q_iqr,err_v_iqr,wall_ns_per_step";

/// Default window of IQR values used for slope fits.
pub const SLOPE_WINDOW: (f64, f64) = (1e-12, 1e-3);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("only {0} records inside the fit window, need 3")]
    InsufficientWindow(usize),
    #[error("reference integration failed: {0}")]
    Reference(#[from] GbsError),
    #[error("{0}")]
    Invalid(String),
}

/// Linear-interpolation quantile at index `(n - 1) p` of the sorted samples.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn iqr(samples: &[f64]) -> Result<f64, BenchError> {
    if samples.len() < 2 {
        return Err(BenchError::TooFewSamples(samples.len()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(quantile(&s, 0.75) - quantile(&s, 0.25))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "lowercase")]
pub enum Problem {
    Kepler { setup: KeplerSetup },
    Plummer { n: usize, seed: u64, softening: f64 },
    /// Kepler initial state without forces.
    Free,
}

impl Problem {
    pub fn kepler() -> Self {
        Problem::Kepler {
            setup: KeplerSetup::default(),
        }
    }

    pub fn plummer(n: usize, seed: u64) -> Self {
        Problem::Plummer {
            n,
            seed,
            softening: PLUMMER_SOFTENING,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Problem::Kepler { .. } => "kepler",
            Problem::Plummer { .. } => "plummer",
            Problem::Free => "free",
        }
    }

    pub fn initial_state(&self) -> PhaseState<f64> {
        match self {
            Problem::Kepler { setup } => kepler_init(setup),
            Problem::Plummer { n, seed, .. } => plummer_sample(*n, *seed),
            Problem::Free => kepler_init(&KeplerSetup::default()),
        }
    }

    pub fn field(&self) -> Field {
        match self {
            Problem::Kepler { setup } => Field::Gravity(setup.field()),
            Problem::Plummer { n, softening, .. } => {
                Field::Gravity(GravityField::new(vec![1.0 / *n as f64; *n], *softening))
            }
            Problem::Free => Field::Zero,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Force field of a benchmark problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Gravity(GravityField),
    Zero,
}

impl<S: Scalar> ForceField<S> for Field {
    fn accel(&self, q: &[S], out: &mut [S]) -> Result<(), ForceError> {
        match self {
            Field::Gravity(g) => g.accel(q, out),
            Field::Zero => ZeroForce.accel(q, out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    /// Deviation of the numerical trajectory from the reference trajectory.
    Global,
    /// One step from the reference state, compared with the reference.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    /// Closed form where available, GBS otherwise.
    Auto,
    Gbs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSettings {
    pub duration: f64,
    pub projection: Projection,
    pub error: ErrorMode,
    pub reference: ReferenceKind,
    pub gbs: GbsConfig,
    pub fsal: bool,
    /// When false the wall-time column is written as 0 so output is byte-stable.
    pub timing: bool,
}

impl ConvergenceSettings {
    pub fn new(duration: f64) -> Self {
        ConvergenceSettings {
            duration,
            projection: Projection::DiscardImaginary,
            error: ErrorMode::Global,
            reference: ReferenceKind::Auto,
            gbs: GbsConfig::default(),
            fsal: true,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub method: String,
    pub problem: String,
    pub stepsize: f64,
    pub steps: usize,
    pub err_q_iqr: f64,
    pub err_v_iqr: f64,
    pub wall_ns_per_step: f64,
    /// Set when the run aborted, e.g. on a branch-cut crossing.
    pub failure: Option<String>,
}

impl ConvergenceRecord {
    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{},{:e},{:e},{}",
            self.method,
            self.problem,
            self.stepsize,
            self.steps,
            self.err_q_iqr,
            self.err_v_iqr,
            self.wall_ns_per_step.round()
        )
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[ConvergenceRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// `points` log-spaced step sizes from `hmax` down to `hmin`.
pub fn log_grid(hmin: f64, hmax: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![hmax],
        _ => {
            let r = (hmin / hmax).ln() / (points - 1) as f64;
            (0..points).map(|k| hmax * (r * k as f64).exp()).collect()
        }
    }
}

fn reference_states(
    problem: &Problem,
    field: &Field,
    s0: &PhaseState<f64>,
    times: &[f64],
    settings: &ConvergenceSettings,
) -> Result<Vec<PhaseState<f64>>, BenchError> {
    match (problem, settings.reference) {
        (Problem::Kepler { setup }, ReferenceKind::Auto) => {
            Ok(times.iter().map(|&t| kepler_exact(setup, t)).collect())
        }
        (Problem::Free, ReferenceKind::Auto) => Ok(times
            .iter()
            .map(|&t| PhaseState {
                t,
                q: s0.q.iter().zip(&s0.v).map(|(q, v)| q + t * v).collect(),
                v: s0.v.clone(),
                masses: s0.masses.clone(),
            })
            .collect()),
        _ => {
            let t_end = times.last().copied().unwrap_or(s0.t);
            Ok(gbs_integrate(field, s0, t_end, &settings.gbs, times)?.0)
        }
    }
}

fn distance<S: Scalar>(a: &[S], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.re() - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

struct Samples {
    q: Vec<f64>,
    v: Vec<f64>,
    nanos: f64,
}

fn run_global<S: Scalar>(
    plan: &StepPlan,
    field: &Field,
    s0: &PhaseState<f64>,
    h: f64,
    refs: &[PhaseState<f64>],
    settings: &ConvergenceSettings,
) -> Result<Samples, IntegrateError> {
    let mut eq = Vec::with_capacity(refs.len());
    let mut ev = Vec::with_capacity(refs.len());
    let opts = IntegrateOptions {
        projection: settings.projection,
        fsal: settings.fsal,
    };
    let start = Instant::now();
    integrate::<S, _, _>(plan, field, &s0.lift(), h, refs.len(), opts, |n, s| {
        eq.push(distance(&s.q, &refs[n].q));
        ev.push(distance(&s.v, &refs[n].v));
    })?;
    let nanos = start.elapsed().as_nanos() as f64;
    Ok(Samples { q: eq, v: ev, nanos })
}

fn run_local<S: Scalar>(
    plan: &StepPlan,
    field: &Field,
    s0: &PhaseState<f64>,
    h: f64,
    refs: &[PhaseState<f64>],
) -> Result<Samples, IntegrateError> {
    let mut eq = Vec::with_capacity(refs.len());
    let mut ev = Vec::with_capacity(refs.len());
    let mut nanos = 0.0;
    let mut prev = s0;
    for (n, r) in refs.iter().enumerate() {
        let start = Instant::now();
        let out = step::<S, _>(plan, field, &prev.lift(), h).map_err(|e| match e {
            IntegrateError::Force { source, .. } => IntegrateError::Force { step: n, source },
            e => e,
        })?;
        nanos += start.elapsed().as_nanos() as f64;
        eq.push(distance(&out.q, &r.q));
        ev.push(distance(&out.v, &r.v));
        prev = r;
    }
    Ok(Samples { q: eq, v: ev, nanos })
}

fn run_cell(
    method: &SplittingMethod,
    problem: &Problem,
    h: f64,
    settings: &ConvergenceSettings,
) -> Result<ConvergenceRecord, BenchError> {
    if !(h > 0.0) || !(settings.duration > 0.0) {
        return Err(BenchError::Invalid(format!("step size {h} and duration must be positive")));
    }
    let steps = ((settings.duration / h).round() as usize).max(2);
    let h = settings.duration / steps as f64;
    let s0 = problem.initial_state();
    let field = problem.field();
    let times: Vec<f64> = (1..=steps).map(|k| s0.t + k as f64 * h).collect();
    let refs = reference_states(problem, &field, &s0, &times, settings)?;
    let p = plan(method);
    let complex = !method.is_real();
    let run = match (settings.error, complex) {
        (ErrorMode::Global, false) => run_global::<f64>(&p, &field, &s0, h, &refs, settings),
        (ErrorMode::Global, true) => run_global::<Complex64>(&p, &field, &s0, h, &refs, settings),
        (ErrorMode::Local, false) => run_local::<f64>(&p, &field, &s0, h, &refs),
        (ErrorMode::Local, true) => run_local::<Complex64>(&p, &field, &s0, h, &refs),
    };
    let mut record = ConvergenceRecord {
        method: method.name().to_string(),
        problem: problem.id().to_string(),
        stepsize: h,
        steps,
        err_q_iqr: f64::NAN,
        err_v_iqr: f64::NAN,
        wall_ns_per_step: 0.0,
        failure: None,
    };
    match run {
        Ok(samples) => {
            record.err_q_iqr = iqr(&samples.q)?;
            record.err_v_iqr = iqr(&samples.v)?;
            if settings.timing {
                record.wall_ns_per_step = samples.nanos / steps as f64;
            }
        }
        Err(e) => record.failure = Some(e.to_string()),
    }
    Ok(record)
}

/// Runs `method` on `problem` for every step size in `hs`. Cells run in
/// parallel on the current rayon pool; the output order follows `hs`.
pub fn convergence_run(
    method: &SplittingMethod,
    problem: &Problem,
    hs: &[f64],
    settings: &ConvergenceSettings,
) -> Result<Vec<ConvergenceRecord>, BenchError> {
    hs.par_iter()
        .map(|&h| run_cell(method, problem, h, settings))
        .collect()
}

/// Least-squares slope of `log10(err_q_iqr)` against `log10(h)` over the
/// records whose IQR lies inside `window`.
pub fn slope_fit(records: &[ConvergenceRecord], window: (f64, f64)) -> Result<f64, BenchError> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| !r.is_failed() && r.err_q_iqr >= window.0 && r.err_q_iqr <= window.1)
        .map(|r| (r.stepsize.log10(), r.err_q_iqr.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(BenchError::InsufficientWindow(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpuBenchResult {
    pub method: String,
    pub particles: usize,
    pub steps: usize,
    pub complex_arithmetic: bool,
    pub force_evaluations_per_step: f64,
    pub ns_per_step: f64,
}

fn time_steps<S: Scalar>(
    plan: &StepPlan,
    field: &GravityField,
    s0: &PhaseState<f64>,
    n_steps: usize,
) -> Result<(f64, usize), IntegrateError> {
    let opts = IntegrateOptions {
        projection: Projection::DiscardImaginary,
        fsal: true,
    };
    let h = 1e-3;
    let (warm, _) = integrate::<S, _, _>(plan, field, &s0.lift(), h, 1, opts, |_, _| {})?;
    let start = Instant::now();
    let (_, stats) = integrate(plan, field, &warm, h, n_steps, opts, |_, _| {})?;
    Ok((start.elapsed().as_nanos() as f64, stats.force_evaluations))
}

/// Wall time per step on a Plummer sphere of `n_particles`, single-threaded,
/// with a warm-up step excluded and boundary substeps fused.
pub fn cpu_bench(
    method: &SplittingMethod,
    n_particles: usize,
    n_steps: usize,
    seed: u64,
) -> Result<CpuBenchResult, IntegrateError> {
    assert!(n_particles >= 2 && n_steps >= 1);
    let s0 = plummer_sample(n_particles, seed);
    let field = GravityField::for_state(&s0, PLUMMER_SOFTENING);
    let p = plan(method);
    let complex = !method.is_real();
    let (nanos, evals) = if complex {
        time_steps::<Complex64>(&p, &field, &s0, n_steps)?
    } else {
        time_steps::<f64>(&p, &field, &s0, n_steps)?
    };
    Ok(CpuBenchResult {
        method: method.name().to_string(),
        particles: n_particles,
        steps: n_steps,
        complex_arithmetic: complex,
        force_evaluations_per_step: evals as f64 / n_steps as f64,
        ns_per_step: nanos / n_steps as f64,
    })
}

/// Per-step costs divided by the cost of `baseline`.
pub fn normalize(results: &[CpuBenchResult], baseline: &str) -> Option<Vec<(String, f64)>> {
    let base = results
        .iter()
        .find(|r| r.method.eq_ignore_ascii_case(baseline))?
        .ns_per_step;
    Some(
        results
            .iter()
            .map(|r| (r.method.clone(), r.ns_per_step / base))
            .collect(),
    )
}
