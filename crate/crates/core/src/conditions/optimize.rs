//! Five-stage to six-stage extension with grade-6 error minimization.
//!
//! A drift-first five-stage method `e^{a6 T} e^{b5 V} ... e^{b1 V} e^{a1 T}`
//! is rewritten as the kick-first product
//! `e^{b'7 V} e^{a6 T} e^{b'6 V} ... e^{a1 T} e^{b'1 V}` with
//! `b'1 = b'7 = 0`. The extra kicks leave a low-dimensional family of
//! methods satisfying the order conditions. A Nelder-Mead search moves along
//! the tangent space of that family and every trial point is projected back
//! onto it with minimum-norm Gauss-Newton. The chart is re-centred at the
//! best point after each search until the error stops improving.

use std::sync::atomic::{AtomicUsize, Ordering};

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::{jacobian, residuals_raw};
use crate::lie::{method_error, ErrorReport};
use crate::methods::{MethodError, Scheme, SplittingMethod};

/// Max residual accepted after projecting onto the order conditions.
const PROJECTION_TOL: f64 = 1e-12;

/// Relative singular-value cutoff for rank decisions.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("base method must be a fifth-order drift-first method: {0}")]
    InvalidBase(String),
    #[error("could not project the starting point onto the order conditions")]
    Projection,
    #[error("optimizer stalled; best error norm {:.3e}", .0.error.norm)]
    Stalled(Box<OptimizeOutcome>),
    #[error(transparent)]
    Method(#[from] MethodError),
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    /// Weights of `X11, X16, X17, X19, X20` in the objective.
    pub weights: [f64; 5],
    /// Edge length of the initial simplex in tangent coordinates.
    pub simplex_size: f64,
    /// Nelder-Mead iterations per chart.
    pub max_iters: u64,
    /// Maximum number of re-centred charts.
    pub max_rounds: usize,
    /// Stop when the standard deviation of simplex costs falls below this.
    pub sd_tolerance: f64,
    /// Searches started from seeded tangent perturbations of the embedding,
    /// in addition to the embedding itself.
    pub starts: usize,
    /// Largest perturbation per tangent coordinate.
    pub start_radius: f64,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            weights: [1.0; 5],
            simplex_size: 0.005,
            max_iters: 80,
            max_rounds: 200,
            sd_tolerance: 1e-13,
            starts: 32,
            start_radius: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub method: SplittingMethod,
    pub error: ErrorReport,
    pub base_error: ErrorReport,
    /// Max order-condition residual of the result.
    pub residual: f64,
    /// Nelder-Mead iterations and charts of the winning search.
    pub iterations: u64,
    /// Objective evaluations over all searches.
    pub evaluations: usize,
    pub rounds: usize,
    /// The last search ended on the simplex tolerance, not the iteration cap.
    pub converged: bool,
    /// Dimension of the family of methods explored.
    pub dimension: usize,
}

/// How the real parameter vector maps onto the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Skew-symmetric: `Re/Im a1, Re/Im a2, Im a3, Re/Im b'1, Re/Im b'2, Re/Im b'3`.
    Skew,
    /// Real: `a1..a5, b'1..b'6`.
    Real,
    /// General complex: `Re/Im` of `a1..a5, b'1..b'6`.
    Complex,
}

/// Affine parametrization `coefficients = offset + map * p` of a kick-first
/// method with six drifts and seven kicks.
#[derive(Debug, Clone)]
struct SixStageParams {
    offset: Vec<Complex64>,
    map: DMatrix<Complex64>,
}

const N_ALPHA: usize = 6;
const N_BETA: usize = 7;
const N_COEFF: usize = N_ALPHA + N_BETA;
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

impl SixStageParams {
    fn new(mode: Mode) -> Self {
        let n = match mode {
            Mode::Skew => 11,
            Mode::Real => 11,
            Mode::Complex => 22,
        };
        let mut offset = vec![Complex64::new(0.0, 0.0); N_COEFF];
        let mut map = DMatrix::from_element(N_COEFF, n, Complex64::new(0.0, 0.0));
        let beta = |k: usize| N_ALPHA + k;
        match mode {
            Mode::Skew => {
                // alpha: a1, a2, a3, conj a3, conj a2, conj a1
                let pairs = [(0usize, 0usize, Some(1usize)), (1, 2, Some(3))];
                for (k, re, im) in pairs {
                    map[(k, re)] = C1;
                    map[(N_ALPHA - 1 - k, re)] = C1;
                    if let Some(im) = im {
                        map[(k, im)] = CI;
                        map[(N_ALPHA - 1 - k, im)] = -CI;
                    }
                }
                // Re a3 = 1/2 - Re a1 - Re a2
                for k in [2, 3] {
                    offset[k] = Complex64::new(0.5, 0.0);
                    map[(k, 0)] = -C1;
                    map[(k, 2)] = -C1;
                }
                map[(2, 4)] = CI;
                map[(3, 4)] = -CI;
                // beta': b1, b2, b3, 1 - 2 Re(b1 + b2 + b3), conj b3, conj b2, conj b1
                for k in 0..3 {
                    let (re, im) = (5 + 2 * k, 6 + 2 * k);
                    map[(beta(k), re)] = C1;
                    map[(beta(k), im)] = CI;
                    map[(beta(N_BETA - 1 - k), re)] = C1;
                    map[(beta(N_BETA - 1 - k), im)] = -CI;
                    map[(beta(3), re)] = Complex64::new(-2.0, 0.0);
                }
                offset[beta(3)] = C1;
            }
            Mode::Real | Mode::Complex => {
                let per = if mode == Mode::Real { 1 } else { 2 };
                let mut set = |coeff: usize, slot: usize, last: usize| {
                    map[(coeff, per * slot)] = C1;
                    map[(last, per * slot)] -= C1;
                    if per == 2 {
                        map[(coeff, per * slot + 1)] = CI;
                        map[(last, per * slot + 1)] -= CI;
                    }
                };
                for k in 0..N_ALPHA - 1 {
                    set(k, k, N_ALPHA - 1);
                }
                for k in 0..N_BETA - 1 {
                    set(beta(k), N_ALPHA - 1 + k, beta(N_BETA - 1));
                }
                offset[N_ALPHA - 1] = C1;
                offset[beta(N_BETA - 1)] = C1;
            }
        }
        SixStageParams { offset, map }
    }

    fn len(&self) -> usize {
        self.map.ncols()
    }

    fn coefficients(&self, p: &DVector<f64>) -> Vec<Complex64> {
        let pc = p.map(|x| Complex64::new(x, 0.0));
        let z = &self.map * pc;
        self.offset.iter().zip(z.iter()).map(|(o, v)| o + v).collect()
    }

    /// Kick-first method from a parameter vector.
    fn method(&self, name: &str, p: &DVector<f64>) -> Result<SplittingMethod, MethodError> {
        let z = self.coefficients(p);
        SplittingMethod::new(name, Scheme::Rknb, 5, z[..N_ALPHA].to_vec(), z[N_ALPHA..].to_vec())
    }

    /// `(B, c)` and their derivatives with respect to `p`.
    fn tableau(&self, p: &DVector<f64>) -> (Vec<Complex64>, Vec<Complex64>, DMatrix<Complex64>) {
        let z = self.coefficients(p);
        let n = self.len();
        let b = z[N_ALPHA..].to_vec();
        let mut c = vec![Complex64::new(0.0, 0.0); N_BETA];
        // rows 0..7: dB/dp, rows 7..14: dc/dp
        let mut d = DMatrix::from_element(2 * N_BETA, n, Complex64::new(0.0, 0.0));
        for k in 0..N_BETA {
            for j in 0..n {
                d[(k, j)] = self.map[(N_ALPHA + k, j)];
            }
        }
        for k in 1..N_BETA {
            c[k] = c[k - 1] + z[k - 1];
            for j in 0..n {
                d[(N_BETA + k, j)] = d[(N_BETA + k - 1, j)] + self.map[(k - 1, j)];
            }
        }
        (b, c, d)
    }

    /// Real residual vector of `t2 ..= t10` (real and imaginary parts) and
    /// its Jacobian with respect to `p`.
    fn constraints(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (b, c, d) = self.tableau(p);
        let r = residuals_raw(&b, &c);
        let jc = jacobian(&b, &c).rows(1, 9).into_owned() * d;
        let n = self.len();
        let mut res = DVector::zeros(18);
        let mut jac = DMatrix::zeros(18, n);
        for k in 0..9 {
            res[k] = r.0[k + 1].re;
            res[9 + k] = r.0[k + 1].im;
            for j in 0..n {
                jac[(k, j)] = jc[(k, j)].re;
                jac[(9 + k, j)] = jc[(k, j)].im;
            }
        }
        (res, jac)
    }

    /// Orthonormal basis of the null space of the constraint Jacobian.
    fn tangent_basis(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let (_, jac) = self.constraints(p);
        let n = self.len();
        // pad to square so the SVD exposes the full right singular basis
        let mut sq = DMatrix::zeros(jac.nrows().max(n), n);
        sq.rows_mut(0, jac.nrows()).copy_from(&jac);
        let svd = sq.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let smax = svd.singular_values.max();
        let cols: Vec<_> = (0..n)
            .filter(|&k| svd.singular_values[k] <= RANK_TOL * smax)
            .map(|k| v_t.row(k).transpose())
            .collect();
        DMatrix::from_columns(&cols)
    }

    /// Minimum-norm Gauss-Newton onto the order conditions.
    fn project(&self, mut p: DVector<f64>) -> Option<(DVector<f64>, f64)> {
        for _ in 0..60 {
            let (r, jac) = self.constraints(&p);
            let rmax = r.amax();
            if !rmax.is_finite() {
                return None;
            }
            if rmax < PROJECTION_TOL {
                return Some((p, rmax));
            }
            let step = jac.svd(true, true).solve(&(-&r), RANK_TOL).ok()?;
            let f0 = r.norm_squared();
            let mut lambda = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let trial = &p + lambda * &step;
                if self.constraints(&trial).0.norm_squared() < f0 {
                    p = trial;
                    moved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let (r, _) = self.constraints(&p);
        (r.amax() < PROJECTION_TOL * 10.0).then(|| (p, r.amax()))
    }
}

/// Rewrites a drift-first method as a kick-first one with zero outer kicks.
pub fn embed_six_stage(base: &SplittingMethod) -> Result<SplittingMethod, MethodError> {
    let zero = Complex64::new(0.0, 0.0);
    let mut beta = Vec::with_capacity(base.beta().len() + 2);
    beta.push(zero);
    beta.extend_from_slice(base.beta());
    beta.push(zero);
    SplittingMethod::new(
        format!("{}-embedded", base.name()),
        Scheme::Rknb,
        base.order(),
        base.alpha().to_vec(),
        beta,
    )
}

fn initial_params(mode: Mode, embedded: &SplittingMethod) -> DVector<f64> {
    let a = embedded.alpha();
    let b = embedded.beta();
    let v: Vec<f64> = match mode {
        Mode::Skew => vec![
            a[0].re, a[0].im, a[1].re, a[1].im, a[2].im, b[0].re, b[0].im, b[1].re, b[1].im,
            b[2].re, b[2].im,
        ],
        Mode::Real => a[..5].iter().chain(&b[..6]).map(|z| z.re).collect(),
        Mode::Complex => a[..5]
            .iter()
            .chain(&b[..6])
            .flat_map(|z| [z.re, z.im])
            .collect(),
    };
    DVector::from_vec(v)
}

/// Error norm as a function of tangent coordinates around `center`.
struct Objective<'a> {
    params: &'a SixStageParams,
    center: DVector<f64>,
    basis: DMatrix<f64>,
    weights: [f64; 5],
    evaluations: &'a AtomicUsize,
}

/// Largest projection correction accepted, relative to the tangent step.
const BRANCH_RATIO: f64 = 0.5;

/// Objective value for points that cannot be projected.
const INFEASIBLE: f64 = 1.0;

impl Objective<'_> {
    /// Projected point, or `None` when the projection fails or lands on
    /// another branch of the solution set.
    fn point(&self, u: &[f64]) -> Option<(DVector<f64>, f64)> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let step = &self.basis * DVector::from_column_slice(u);
        let p = &self.center + &step;
        let (q, r) = self.params.project(p.clone())?;
        ((&q - &p).norm() <= BRANCH_RATIO * step.norm() + 1e-12).then_some((q, r))
    }
}

fn weighted_norm(e: &ErrorReport, weights: &[f64; 5]) -> f64 {
    e.coefficients
        .iter()
        .zip(weights)
        .map(|(c, w)| w * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Self::Param) -> Result<f64, argmin::core::Error> {
        let Some((p, _)) = self.point(u) else {
            return Ok(INFEASIBLE);
        };
        let Ok(m) = self.params.method("trial", &p) else {
            return Ok(INFEASIBLE);
        };
        Ok(weighted_norm(&method_error(&m), &self.weights))
    }
}

struct ChartSearch {
    center: DVector<f64>,
    value: f64,
    iterations: u64,
    rounds: usize,
    converged: bool,
    dimension: usize,
}

/// Repeated Nelder-Mead searches in tangent charts, re-centred at the best
/// point until a chart brings no relative improvement.
fn chart_search(
    params: &SixStageParams,
    start: DVector<f64>,
    opts: &OptimizeOptions,
    evaluations: &AtomicUsize,
) -> Result<ChartSearch, OptimizeError> {
    let cost_at = |p: &DVector<f64>| -> Result<f64, OptimizeError> {
        Ok(weighted_norm(&method_error(&params.method("trial", p)?), &opts.weights))
    };
    let mut out = ChartSearch {
        value: cost_at(&start)?,
        center: start,
        iterations: 0,
        rounds: 0,
        converged: false,
        dimension: 0,
    };
    while out.rounds < opts.max_rounds {
        out.rounds += 1;
        let basis = params.tangent_basis(&out.center);
        out.dimension = basis.ncols();
        if out.dimension == 0 {
            break;
        }
        let origin = vec![0.0; out.dimension];
        let mut simplex = vec![origin.clone()];
        for k in 0..out.dimension {
            let mut v = origin.clone();
            v[k] = opts.simplex_size;
            simplex.push(v);
        }
        let objective = Objective {
            params,
            center: out.center.clone(),
            basis,
            weights: opts.weights,
            evaluations,
        };
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(opts.sd_tolerance)
            .map_err(|_| OptimizeError::Projection)?;
        let res = Executor::new(objective, solver)
            .configure(|state| state.max_iters(opts.max_iters))
            .run()
            .map_err(|_| OptimizeError::Projection)?;
        let state = res.state();
        out.iterations += state.get_iter();
        out.converged = matches!(
            state.get_termination_status(),
            TerminationStatus::Terminated(TerminationReason::SolverConverged)
        );
        let u = state.get_best_param().cloned().unwrap_or(origin);
        let objective = res.problem.problem.as_ref().expect("problem returned");
        let Some((p, _)) = objective.point(&u) else {
            break;
        };
        let value = cost_at(&p)?;
        let improved = value < out.value * (1.0 - 1e-5);
        if value < out.value {
            out.center = p;
            out.value = value;
        }
        if !improved {
            break;
        }
    }
    Ok(out)
}

/// Extends a fifth-order drift-first method by one stage and minimizes the
/// (weighted) norm of its grade-6 error while keeping all ten conditions.
pub fn optimize_six_stage(
    base: &SplittingMethod,
    opts: &OptimizeOptions,
) -> Result<OptimizeOutcome, OptimizeError> {
    if base.scheme() != Scheme::Rkna || base.stages() != 5 || base.order() != 5 {
        return Err(OptimizeError::InvalidBase(base.name().to_string()));
    }
    let embedded = embed_six_stage(base)?;
    let mode = if base.is_skew_symmetric(1e-12) {
        Mode::Skew
    } else if base.is_real() {
        Mode::Real
    } else {
        Mode::Complex
    };
    let params = SixStageParams::new(mode);
    let (p0, _) = params
        .project(initial_params(mode, &embedded))
        .ok_or(OptimizeError::Projection)?;
    let base_error = method_error(base);
    let evaluations = AtomicUsize::new(0);

    let basis = params.tangent_basis(&p0);
    let mut starts = vec![p0.clone()];
    for k in 1..=opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        // cycle through three radii so both nearby and distant basins are tried
        let r = opts.start_radius * [0.1, 0.33, 1.0][k % 3];
        let u = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-r..=r));
        if let Some((p, _)) = params.project(&p0 + &basis * u) {
            starts.push(p);
        }
    }
    let searches: Vec<ChartSearch> = starts
        .into_par_iter()
        .map(|p| chart_search(&params, p, opts, &evaluations))
        .collect::<Result<_, _>>()?;
    let found = searches
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("the embedding is always searched");
    let center = found.center;
    let (iterations, rounds, converged, dimension) =
        (found.iterations, found.rounds, found.converged, found.dimension);

    let (p, residual) = params.project(center).ok_or(OptimizeError::Projection)?;
    let name = format!("{}-6stage", base.name());
    let method = params.method(&name, &p)?;
    let error = method_error(&method);
    let outcome = OptimizeOutcome {
        method,
        error,
        base_error,
        residual,
        iterations,
        evaluations: evaluations.into_inner(),
        rounds,
        converged,
        dimension,
    };
    if error.norm > base_error.norm {
        return Err(OptimizeError::Stalled(Box::new(outcome)));
    }
    Ok(outcome)
}
