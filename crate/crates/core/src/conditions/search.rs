//! Multistart Newton search over random complex starting points.

use std::cmp::Ordering;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::{newton_solve, residuals, NewtonOptions};
use crate::lie::{method_error, ErrorReport};
use crate::methods::{
    builtin_catalog, save_method, tableau_to_splitting, MethodError, RknTableau, Scheme,
    SplittingMethod,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub scheme: Scheme,
    pub starts: usize,
    /// Starting values have real and imaginary parts in `[-w, w]`.
    pub half_width: f64,
    pub seed: u64,
    pub newton: NewtonOptions,
    pub dedup_tol: f64,
}

impl SearchConfig {
    pub fn new(scheme: Scheme, starts: usize, seed: u64) -> Self {
        SearchConfig {
            scheme,
            starts,
            half_width: 2.0,
            seed,
            newton: NewtonOptions::default(),
            dedup_tol: 1e-8,
        }
    }

    /// Stage count that makes the fifth-order system square.
    pub fn stages(&self) -> usize {
        match self.scheme {
            Scheme::Rkna => 5,
            Scheme::Rknb => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolutionFlags {
    /// All coefficients real within 1e-10.
    pub real: bool,
    /// Every drift and kick coefficient has positive real part.
    pub positive_real_parts: bool,
    /// All five leading error coefficients have real part below 1e-10.
    pub imaginary_leading_error: bool,
}

#[derive(Debug, Clone)]
pub struct FoundSolution {
    pub method: SplittingMethod,
    pub tableau: RknTableau,
    pub residual: f64,
    pub error: ErrorReport,
    pub flags: SolutionFlags,
    /// Number of starts that converged onto this solution.
    pub hits: usize,
    /// Catalog method (or adjoint) this solution coincides with.
    pub matches: Option<String>,
}

const FLAG_TOL: f64 = 1e-10;

/// Key used for deduplication: stages sorted by `(Re c, Im c)`, then the
/// `(B, c)` pairs flattened to reals.
pub fn dedup_key(t: &RknTableau) -> Vec<f64> {
    let mut stages: Vec<(Complex64, Complex64)> = t
        .nodes
        .iter()
        .copied()
        .zip(t.vel_weights.iter().copied())
        .collect();
    stages.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    stages
        .into_iter()
        .flat_map(|(c, b)| [c.re, c.im, b.re, b.im])
        .collect()
}

fn cmp_keys(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn key_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_start(cfg: &SearchConfig, index: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let w = cfg.half_width;
    let mut draw = || Complex64::new(rng.gen_range(-w..=w), rng.gen_range(-w..=w));
    let s = cfg.stages();
    let b: Vec<_> = (0..s).map(|_| draw()).collect();
    let c: Vec<_> = (0..s).map(|_| draw()).collect();
    (b, c)
}

/// Catalog fifth-order methods of a scheme together with their adjoints.
fn references(scheme: Scheme) -> Vec<(String, Vec<f64>)> {
    builtin_catalog()
        .into_iter()
        .filter(|r| r.method.scheme() == scheme && r.method.order() == 5)
        .flat_map(|r| [r.method.clone(), r.method.adjoint()])
        .filter_map(|m| {
            let t = crate::methods::splitting_to_tableau(&m).ok()?;
            Some((m.name().to_string(), dedup_key(&t)))
        })
        .collect()
}

fn classify(method: &SplittingMethod, error: &ErrorReport) -> SolutionFlags {
    let coeffs = || method.alpha().iter().chain(method.beta());
    SolutionFlags {
        real: coeffs().all(|c| c.im.abs() < FLAG_TOL),
        positive_real_parts: coeffs().all(|c| c.re > 0.0),
        imaginary_leading_error: error.max_real_part() < FLAG_TOL,
    }
}

/// Runs Newton from the given starts and returns the distinct solutions,
/// deterministically ordered by their dedup key.
pub fn solve_starts(
    starts: &[(Vec<Complex64>, Vec<Complex64>)],
    cfg: &SearchConfig,
) -> Vec<FoundSolution> {
    let mut converged: Vec<(Vec<f64>, RknTableau)> = starts
        .par_iter()
        .filter_map(|(b, c)| newton_solve(b, c, cfg.scheme, 5, &cfg.newton).ok())
        .map(|sol| (dedup_key(&sol.tableau), sol.tableau))
        .collect();
    converged.sort_by(|a, b| cmp_keys(&a.0, &b.0));

    let mut unique: Vec<(Vec<f64>, RknTableau, usize)> = Vec::new();
    for (key, t) in converged {
        match unique
            .iter_mut()
            .find(|(k, _, _)| key_distance(k, &key) < cfg.dedup_tol)
        {
            Some(entry) => entry.2 += 1,
            None => unique.push((key, t, 1)),
        }
    }

    let refs = references(cfg.scheme);
    unique
        .into_iter()
        .enumerate()
        .filter_map(|(n, (key, tableau, hits))| {
            let name = format!("{}-{:04}", cfg.scheme, n + 1);
            let method = tableau_to_splitting(&tableau, cfg.scheme, name, 5).ok()?;
            let error = method_error(&method);
            let flags = classify(&method, &error);
            let matches = refs
                .iter()
                .find(|(_, k)| key_distance(k, &key) < cfg.dedup_tol)
                .map(|(name, _)| name.clone());
            Some(FoundSolution {
                residual: residuals(&tableau).max_norm(),
                method,
                tableau,
                error,
                flags,
                hits,
                matches,
            })
        })
        .collect()
}

/// Seeded multistart search in the square `[-w, w]^2` for every unknown.
pub fn random_search(cfg: &SearchConfig) -> Vec<FoundSolution> {
    let starts: Vec<_> = (0..cfg.starts).map(|i| random_start(cfg, i)).collect();
    solve_starts(&starts, cfg)
}

/// Writes one method file per solution plus `index.json` with the flags.
pub fn export_solutions(
    dir: impl AsRef<Path>,
    solutions: &[FoundSolution],
    cfg: &SearchConfig,
) -> Result<(), MethodError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(solutions.len());
    for sol in solutions {
        let file = format!("{}.json", sol.method.name());
        save_method(&sol.method, dir.join(&file))?;
        entries.push(json!({
            "file": file,
            "name": sol.method.name(),
            "real": sol.flags.real,
            "positive_real_parts": sol.flags.positive_real_parts,
            "imaginary_leading_error": sol.flags.imaginary_leading_error,
            "error_norm": sol.error.norm,
            "residual": sol.residual,
            "hits": sol.hits,
            "matches": sol.matches,
        }));
    }
    let index = json!({
        "scheme": cfg.scheme.to_string(),
        "starts": cfg.starts,
        "seed": cfg.seed,
        "rect": cfg.half_width,
        "newton_tol": cfg.newton.tol,
        "dedup_tol": cfg.dedup_tol,
        "rng": "ChaCha8 (stream = start index)",
        "solutions": entries,
    });
    let text = serde_json::to_string_pretty(&index).map_err(|e| MethodError::File(e.to_string()))?;
    std::fs::write(dir.join("index.json"), text + "\n")?;
    Ok(())
}
