//! The ten fifth-order conditions on `(B, c)`, their Jacobian, and a damped
//! Newton solver for them.
//!
//! Conditions in order, value minus target:
//!
//! | k  | condition                                                   | target |
//! |----|-------------------------------------------------------------|--------|
//! | 1  | `sum B_i`                                                   | 1      |
//! | 2  | `sum B_i c_i`                                               | 1/2    |
//! | 3  | `sum B_i c_i^2`                                             | 1/3    |
//! | 4  | `sum B_i c_i^3`                                             | 1/4    |
//! | 5  | `sum B_i c_i^4`                                             | 1/5    |
//! | 6  | `sum_{j<i} B_i B_j (c_i - c_j)`                             | 1/6    |
//! | 7  | `sum_{j<i} B_i B_j c_i (c_i - c_j)`                         | 1/8    |
//! | 8  | `sum_{j<i} B_i B_j c_i^2 (c_i - c_j)`                       | 1/10   |
//! | 9  | `sum_{j<i} B_i B_j c_i c_j (c_i - c_j)`                     | 1/30   |
//! | 10 | `sum_{j<i, l<i} B_i B_j B_l (c_i - c_j)(c_i - c_l)`         | 1/20   |

mod optimize;
mod search;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::methods::{RknTableau, Scheme};

pub use optimize::{
    embed_six_stage, optimize_six_stage, OptimizeError, OptimizeOutcome, OptimizeOptions,
};
pub use search::{
    dedup_key, export_solutions, random_search, solve_starts, FoundSolution, SearchConfig,
    SolutionFlags,
};

pub const CONDITION_COUNT: usize = 10;

/// Targets of `t1 ..= t10`.
pub const TARGETS: [f64; CONDITION_COUNT] = [
    1.0,
    1.0 / 2.0,
    1.0 / 3.0,
    1.0 / 4.0,
    1.0 / 5.0,
    1.0 / 6.0,
    1.0 / 8.0,
    1.0 / 10.0,
    1.0 / 30.0,
    1.0 / 20.0,
];

/// Zero-based indices of the conditions needed for a given order
/// (grouped by the grade of the corresponding Lie monomials).
pub fn conditions_for_order(order: u32) -> Option<&'static [usize]> {
    const ALL: [usize; 10] = [0, 1, 2, 5, 3, 6, 4, 7, 8, 9];
    let n = match order {
        1 => 1,
        2 => 2,
        3 => 4,
        4 => 6,
        5 => 10,
        _ => return None,
    };
    Some(&ALL[..n])
}

/// Residuals `t_k - target_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualVector(pub [Complex64; CONDITION_COUNT]);

impl ResidualVector {
    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Max norm restricted to the conditions of `order`.
    pub fn max_norm_for_order(&self, order: u32) -> f64 {
        conditions_for_order(order)
            .unwrap_or(&[])
            .iter()
            .map(|&k| self.0[k].norm())
            .fold(0.0, f64::max)
    }
}

pub fn residuals(t: &RknTableau) -> ResidualVector {
    residuals_raw(&t.vel_weights, &t.nodes)
}

/// Residuals from velocity weights `B` and nodes `c`.
pub fn residuals_raw(b: &[Complex64], c: &[Complex64]) -> ResidualVector {
    let s = b.len();
    let mut t = [Complex64::new(0.0, 0.0); CONDITION_COUNT];
    for i in 0..s {
        let ci = c[i];
        let mut p = b[i];
        for tk in t.iter_mut().take(5) {
            *tk += p;
            p *= ci;
        }
        // row sums over j < i
        let mut s1 = Complex64::new(0.0, 0.0);
        let mut s9 = Complex64::new(0.0, 0.0);
        for j in 0..i {
            let d = b[j] * (ci - c[j]);
            s1 += d;
            s9 += d * c[j];
        }
        t[5] += b[i] * s1;
        t[6] += b[i] * ci * s1;
        t[7] += b[i] * ci * ci * s1;
        t[8] += b[i] * ci * s9;
        t[9] += b[i] * s1 * s1;
    }
    for (tk, target) in t.iter_mut().zip(TARGETS) {
        *tk -= target;
    }
    ResidualVector(t)
}

/// Jacobian of the residuals: rows `t1 ..= t10`, columns `B_1 ..= B_s`
/// followed by `c_1 ..= c_s`.
pub fn jacobian(b: &[Complex64], c: &[Complex64]) -> DMatrix<Complex64> {
    let s = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut jac = DMatrix::from_element(CONDITION_COUNT, 2 * s, zero);

    // single sums
    for k in 0..s {
        let mut p = Complex64::new(1.0, 0.0);
        let mut dp = zero; // d(c^m)/dc
        for m in 0..5 {
            jac[(m, k)] = p;
            jac[(m, s + k)] = b[k] * dp;
            dp = dp * c[k] + p;
            p *= c[k];
        }
    }

    // double sums sum_{j<i} B_i B_j g(c_i, c_j) with partials g_x, g_y
    type G = fn(Complex64, Complex64) -> [Complex64; 3];
    let kernels: [(usize, G); 4] = [
        (5, |x, y| [x - y, Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]),
        (6, |x, y| [x * (x - y), 2.0 * x - y, -x]),
        (7, |x, y| [x * x * (x - y), 3.0 * x * x - 2.0 * x * y, -x * x]),
        (8, |x, y| [x * y * (x - y), 2.0 * x * y - y * y, x * x - 2.0 * x * y]),
    ];
    for (row, g) in kernels {
        for i in 0..s {
            for j in 0..i {
                let [v, gx, gy] = g(c[i], c[j]);
                jac[(row, i)] += b[j] * v;
                jac[(row, j)] += b[i] * v;
                jac[(row, s + i)] += b[i] * b[j] * gx;
                jac[(row, s + j)] += b[i] * b[j] * gy;
            }
        }
    }

    // triple sum sum_i B_i S_i^2, S_i = sum_{j<i} B_j (c_i - c_j)
    let row_sum: Vec<Complex64> = (0..s)
        .map(|i| (0..i).map(|j| b[j] * (c[i] - c[j])).sum())
        .collect();
    for i in 0..s {
        let si = row_sum[i];
        jac[(9, i)] += si * si;
        let w: Complex64 = b[..i].iter().sum();
        jac[(9, s + i)] += 2.0 * b[i] * si * w;
        for j in 0..i {
            jac[(9, j)] += 2.0 * b[i] * si * (c[i] - c[j]);
            jac[(9, s + j)] -= 2.0 * b[i] * si * b[j];
        }
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged when the max residual falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Backtracking halvings per iteration.
    pub max_halvings: u32,
    /// Iterates larger than this in any component count as divergence.
    pub divergence_bound: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-13,
            max_iter: 100,
            max_halvings: 30,
            divergence_bound: 1e6,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("iteration limit reached, residual {residual:e}")]
    IterationLimit { residual: f64 },
    #[error("line search stagnated at residual {residual:e}")]
    Stagnation { residual: f64 },
    #[error("iterates diverged")]
    Diverged,
    #[error("no condition set for order {0}")]
    UnsupportedOrder(u32),
    #[error("{unknowns} unknowns for {conditions} conditions")]
    Shape { unknowns: usize, conditions: usize },
    #[error("non-finite start value")]
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub tableau: RknTableau,
    pub iterations: usize,
    /// Max residual over the solved conditions.
    pub residual: f64,
}

/// Maps the unknown vector to `(B, c)`. Kick-first layouts pin
/// `c_1 = 0` and `c_s = 1`.
struct Layout {
    scheme: Scheme,
    stages: usize,
}

impl Layout {
    fn unknowns(&self) -> usize {
        match self.scheme {
            Scheme::Rkna => 2 * self.stages,
            Scheme::Rknb => 2 * self.stages - 2,
        }
    }

    fn pack(&self, b: &[Complex64], c: &[Complex64]) -> DVector<Complex64> {
        let s = self.stages;
        let free_c = match self.scheme {
            Scheme::Rkna => &c[..],
            Scheme::Rknb => &c[1..s - 1],
        };
        DVector::from_iterator(self.unknowns(), b.iter().chain(free_c).copied())
    }

    fn unpack(&self, x: &DVector<Complex64>) -> (Vec<Complex64>, Vec<Complex64>) {
        let s = self.stages;
        let b = x.as_slice()[..s].to_vec();
        let c = match self.scheme {
            Scheme::Rkna => x.as_slice()[s..].to_vec(),
            Scheme::Rknb => {
                let mut c = Vec::with_capacity(s);
                c.push(Complex64::new(0.0, 0.0));
                c.extend_from_slice(&x.as_slice()[s..]);
                c.push(Complex64::new(1.0, 0.0));
                c
            }
        };
        (b, c)
    }

    /// Columns of the full Jacobian that correspond to unknowns.
    fn columns(&self) -> Vec<usize> {
        let s = self.stages;
        match self.scheme {
            Scheme::Rkna => (0..2 * s).collect(),
            Scheme::Rknb => (0..s).chain(s + 1..2 * s - 1).collect(),
        }
    }
}

fn residual_subset(b: &[Complex64], c: &[Complex64], rows: &[usize]) -> DVector<Complex64> {
    let r = residuals_raw(b, c);
    DVector::from_iterator(rows.len(), rows.iter().map(|&k| r.0[k]))
}

fn sq_norm(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn max_norm(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Damped Newton on the order conditions of `order` for the given layout.
///
/// `b0` and `c0` give the starting point; for [`Scheme::Rknb`] the first and
/// last node are overwritten with 0 and 1. The number of stages is `b0.len()`
/// and must make the system square.
pub fn newton_solve(
    b0: &[Complex64],
    c0: &[Complex64],
    scheme: Scheme,
    order: u32,
    opts: &NewtonOptions,
) -> Result<NewtonSolution, SolveError> {
    let rows = conditions_for_order(order).ok_or(SolveError::UnsupportedOrder(order))?;
    let layout = Layout {
        scheme,
        stages: b0.len(),
    };
    if b0.len() != c0.len() || layout.stages < 1 || (scheme == Scheme::Rknb && layout.stages < 2)
    {
        return Err(SolveError::Shape {
            unknowns: b0.len() + c0.len(),
            conditions: rows.len(),
        });
    }
    if layout.unknowns() != rows.len() {
        return Err(SolveError::Shape {
            unknowns: layout.unknowns(),
            conditions: rows.len(),
        });
    }
    if b0.iter().chain(c0).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SolveError::NonFinite);
    }

    let cols = layout.columns();
    let mut x = layout.pack(b0, c0);
    let (mut b, mut c) = layout.unpack(&x);
    let mut r = residual_subset(&b, &c, rows);
    let mut iterations = 0;

    loop {
        let rmax = max_norm(&r);
        if rmax < opts.tol {
            return Ok(NewtonSolution {
                tableau: RknTableau::canonical(b, c),
                iterations,
                residual: rmax,
            });
        }
        if iterations >= opts.max_iter {
            return Err(SolveError::IterationLimit { residual: rmax });
        }

        let full = jacobian(&b, &c);
        let jac = DMatrix::from_fn(rows.len(), cols.len(), |i, j| full[(rows[i], cols[j])]);
        let step = jac
            .lu()
            .solve(&(-&r))
            .ok_or(SolveError::SingularJacobian { iteration: iterations })?;
        if step.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SolveError::SingularJacobian { iteration: iterations });
        }

        let f0 = sq_norm(&r);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &x + &step * Complex64::new(lambda, 0.0);
            let (tb, tc) = layout.unpack(&trial);
            let tr = residual_subset(&tb, &tc, rows);
            if sq_norm(&tr) < f0 {
                accepted = Some((trial, tb, tc, tr));
                break;
            }
            lambda *= 0.5;
        }
        let Some((nx, nb, nc, nr)) = accepted else {
            return Err(SolveError::Stagnation { residual: rmax });
        };
        if nx.iter().any(|z| z.norm() > opts.divergence_bound) {
            return Err(SolveError::Diverged);
        }
        x = nx;
        b = nb;
        c = nc;
        r = nr;
        iterations += 1;
    }
}
