//! Shared test data and independent oracles.

#![allow(dead_code)]

pub mod free;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rknlab::conditions::residuals;
use rknlab::lie::scheme_log;
use rknlab::methods::{splitting_to_tableau, SplittingMethod};

/// Reference leading error terms `(X11, X16, X17, X19, X20, norm)`; complex
/// rows list the imaginary parts.
pub const ERROR_TABLE: [(&str, [f64; 6]); 9] = [
    ("AR1", [-3.1e-3, 4.5e-4, 5.6e-3, 1.8e-5, -6.3e-5, 6.44e-3]),
    ("AR2", [5.0e-3, -3.1e-4, -5.7e-3, 1.5e-5, 2.5e-4, 7.58e-3]),
    ("BR1", [1.5e-4, 6.2e-5, -4.1e-4, 5.7e-5, 1.6e-4, 4.71e-4]),
    ("BR2", [-7.0e-5, 9.7e-4, 2.7e-4, 5.2e-4, 5.2e-4, 1.25e-3]),
    ("BR3", [3.5e-2, 1.9e-4, -3.5e-2, -3.0e-5, -1.0e-4, 4.90e-2]),
    ("AC1", [-2.5e-6, 7.3e-6, -5.0e-6, 8.3e-7, 4.2e-6, 1.02e-5]),
    ("AC2", [3.0e-6, -7.9e-6, 6.0e-6, -9.4e-7, -4.7e-6, 1.15e-5]),
    ("BC1", [1.2e-5, -1.3e-5, 8.4e-6, 2.2e-7, -4.2e-6, 1.96e-5]),
    ("BC2", [-4.1e-5, 4.9e-5, -1.2e-4, 7.7e-6, 5.0e-5, 1.49e-4]),
];

pub const FIFTH_ORDER: [&str; 10] = ["AR1", "AR2", "BR1", "BR2", "BR3", "AC1", "AC2", "BC1", "BC2", "OPT6"];

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// True when `x` rounds to `printed` at the number of significant figures
/// `printed` carries.
pub fn matches_printed(x: f64, printed: f64, digits: i32) -> bool {
    let r = round_sig(x, digits);
    (r - printed).abs() <= 1e-9 * printed.abs()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Moves weight between two coefficients of the same kind, which keeps both
/// coefficient sums at 1.
pub fn perturb(m: &SplittingMethod, rng: &mut ChaCha8Rng) -> SplittingMethod {
    let mut alpha = m.alpha().to_vec();
    let mut beta = m.beta().to_vec();
    let magnitude = 10f64.powf(rng.gen_range(-7.0..-2.0));
    let delta = Complex64::from_polar(magnitude, rng.gen_range(0.0..std::f64::consts::TAU));
    let target = if rng.gen_bool(0.5) { &mut alpha } else { &mut beta };
    let i = rng.gen_range(0..target.len());
    let j = (i + rng.gen_range(1..target.len())) % target.len();
    target[i] += delta;
    target[j] -= delta;
    SplittingMethod::new(format!("{}-perturbed", m.name()), m.scheme(), m.order(), alpha, beta).unwrap()
}

pub fn both_verdicts(m: &SplittingMethod) -> (bool, bool) {
    let by_conditions = residuals(&splitting_to_tableau(m).unwrap()).max_norm() < 1e-12;
    let by_bch = scheme_log(m).max_abs_in_grades(2, 5) < 1e-10;
    (by_conditions, by_bch)
}
