//! Gragg-Bulirsch-Stoer extrapolation for high-accuracy reference
//! trajectories of `q'' = f(q)` in real arithmetic.

use thiserror::Error;

use crate::integrate::{ForceError, ForceField, PhaseState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbsConfig {
    pub atol: f64,
    pub rtol: f64,
    /// Maximum number of extrapolation columns (substep counts 2, 4, ..., 2k).
    pub max_columns: usize,
    /// First outer step; `None` picks a tenth of the span.
    pub initial_step: Option<f64>,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
}

impl Default for GbsConfig {
    fn default() -> Self {
        GbsConfig {
            atol: 1e-13,
            rtol: 1e-13,
            max_columns: 8,
            initial_step: None,
            safety: 0.9,
            min_factor: 0.2,
            max_factor: 4.0,
        }
    }
}

impl GbsConfig {
    pub fn with_tol(tol: f64) -> Self {
        GbsConfig {
            atol: tol,
            rtol: tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GbsError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("requested times must be sorted and lie in [t0, t_end]")]
    Times,
    #[error(transparent)]
    Force(#[from] ForceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GbsStats {
    pub accepted: usize,
    pub rejected: usize,
    pub force_evaluations: usize,
}

struct Gbs<'a, F: ForceField<f64> + ?Sized> {
    field: &'a F,
    cfg: GbsConfig,
    n: usize,
    accel: Vec<f64>,
    stats: GbsStats,
}

impl<F: ForceField<f64> + ?Sized> Gbs<'_, F> {
    fn eval(&mut self, q: &[f64]) -> Result<(), ForceError> {
        self.stats.force_evaluations += 1;
        self.field.accel(q, &mut self.accel)
    }

    /// Modified midpoint over `h` with `m` substeps on `y = (q, v)`.
    fn midpoint(&mut self, y0: &[f64], h: f64, m: usize) -> Result<Vec<f64>, ForceError> {
        let n = self.n;
        let dt = h / m as f64;
        let mut prev = y0.to_vec();
        let mut cur = vec![0.0; 2 * n];
        self.eval(&y0[..n])?;
        for k in 0..n {
            cur[k] = y0[k] + dt * y0[n + k];
            cur[n + k] = y0[n + k] + dt * self.accel[k];
        }
        for _ in 1..m {
            self.eval(&cur[..n])?;
            for k in 0..n {
                let q = prev[k] + 2.0 * dt * cur[n + k];
                let v = prev[n + k] + 2.0 * dt * self.accel[k];
                prev[k] = cur[k];
                prev[n + k] = cur[n + k];
                cur[k] = q;
                cur[n + k] = v;
            }
        }
        self.eval(&cur[..n])?;
        let mut out = vec![0.0; 2 * n];
        for k in 0..n {
            out[k] = 0.5 * (cur[k] + prev[k] + dt * cur[n + k]);
            out[n + k] = 0.5 * (cur[n + k] + prev[n + k] + dt * self.accel[k]);
        }
        Ok(out)
    }

    fn scaled_error(&self, a: &[f64], b: &[f64], y0: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(y0)
            .map(|((x, y), z)| {
                let scale = self.cfg.atol + self.cfg.rtol * x.abs().max(z.abs());
                ((x - y) / scale).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Attempts one outer step; returns the new state if accepted and the
    /// suggested next step size.
    fn attempt(&mut self, y0: &[f64], h: f64) -> Result<(Option<Vec<f64>>, f64), ForceError> {
        let kmax = self.cfg.max_columns;
        let mut table: Vec<Vec<f64>> = Vec::with_capacity(kmax);
        let mut diag_prev: Option<Vec<f64>> = None;
        let mut err = f64::INFINITY;
        let mut k_used = kmax;
        for k in 0..kmax {
            let mk = 2 * (k + 1);
            // Aitken-Neville in h^2 along the new row
            let mut col = self.midpoint(y0, h, mk)?;
            let mut new_table = Vec::with_capacity(k + 1);
            new_table.push(col.clone());
            for j in 1..=k {
                let mj = 2 * (k + 1 - j);
                let ratio = (mk as f64 / mj as f64).powi(2) - 1.0;
                for (c, a) in col.iter_mut().zip(&table[j - 1]) {
                    *c += (*c - a) / ratio;
                }
                new_table.push(col.clone());
            }
            table = new_table;
            let converged = diag_prev.as_ref().is_some_and(|prev| {
                err = self.scaled_error(&col, prev, y0);
                err <= 1.0
            });
            diag_prev = Some(col);
            if converged {
                k_used = k;
                break;
            }
        }
        let expo = 1.0 / (2 * k_used.min(kmax - 1) + 1) as f64;
        let factor = if err == 0.0 {
            self.cfg.max_factor
        } else {
            (self.cfg.safety * err.powf(-expo)).clamp(self.cfg.min_factor, self.cfg.max_factor)
        };
        if err <= 1.0 {
            Ok((diag_prev, h * factor))
        } else {
            Ok((None, h * factor.min(0.5)))
        }
    }
}

/// Integrates from `s0` and returns the states at the requested `times`,
/// which are hit exactly by shortening outer steps.
pub fn gbs_integrate<F: ForceField<f64> + ?Sized>(
    field: &F,
    s0: &PhaseState<f64>,
    t_end: f64,
    cfg: &GbsConfig,
    times: &[f64],
) -> Result<(Vec<PhaseState<f64>>, GbsStats), GbsError> {
    if !(cfg.atol > 0.0 && cfg.rtol > 0.0) || cfg.max_columns < 2 {
        return Err(GbsError::Config("tolerances must be positive and columns >= 2".into()));
    }
    if t_end < s0.t
        || times.windows(2).any(|w| w[0] > w[1])
        || times.iter().any(|&t| t < s0.t || t > t_end)
    {
        return Err(GbsError::Times);
    }
    let n = s0.q.len();
    let mut gbs = Gbs {
        field,
        cfg: *cfg,
        n,
        accel: vec![0.0; n],
        stats: GbsStats::default(),
    };
    let span = t_end - s0.t;
    let mut y: Vec<f64> = s0.q.iter().chain(&s0.v).copied().collect();
    let mut t = s0.t;
    let mut h = cfg.initial_step.unwrap_or(span / 10.0);
    let mut out = Vec::with_capacity(times.len());
    let state = |y: &[f64], t: f64| PhaseState {
        t,
        q: y[..n].to_vec(),
        v: y[n..].to_vec(),
        masses: s0.masses.clone(),
    };
    let mut next = 0;
    let targets = times.iter().copied().chain(std::iter::once(t_end));
    for target in targets {
        while t < target {
            let remaining = target - t;
            let (dt, hits) = if h >= remaining { (remaining, true) } else { (h, false) };
            if dt < 1e-14 * span && !hits {
                return Err(GbsError::StepUnderflow { t });
            }
            let (accepted, h_next) = gbs.attempt(&y, dt)?;
            match accepted {
                Some(y_new) => {
                    gbs.stats.accepted += 1;
                    y = y_new;
                    t = if hits { target } else { t + dt };
                    // a shortened final step should not shrink the proposal
                    h = if hits { h.max(h_next) } else { h_next };
                }
                None => {
                    gbs.stats.rejected += 1;
                    h = h_next;
                    if h < 1e-14 * span {
                        return Err(GbsError::StepUnderflow { t });
                    }
                }
            }
        }
        if next < times.len() {
            out.push(state(&y, target));
            next += 1;
        }
    }
    Ok((out, gbs.stats))
}
