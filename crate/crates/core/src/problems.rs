//! Benchmark problems: Kepler two-body and Plummer-sphere N-body with the
//! analytically continued gravitational force.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::{ForceError, ForceField, PhaseState, Scalar};

/// Default softening for Plummer runs, in code units.
pub const PLUMMER_SOFTENING: f64 = 0.01;

/// Pairwise Newtonian gravity with Plummer softening, `G = 1` by default.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityField {
    pub g: f64,
    pub softening: f64,
    pub masses: Vec<f64>,
}

impl GravityField {
    pub fn new(masses: Vec<f64>, softening: f64) -> Self {
        GravityField {
            g: 1.0,
            softening,
            masses,
        }
    }

    pub fn for_state<S: Scalar>(s: &PhaseState<S>, softening: f64) -> Self {
        GravityField::new(s.masses.clone(), softening)
    }

    fn dim(&self, len: usize) -> usize {
        len / self.masses.len()
    }

    /// `(q_j - q_i)` and `r.r + eps^2` for a pair, without conjugation.
    fn separation<S: Scalar>(&self, q: &[S], d: usize, i: usize, j: usize, diff: &mut [S]) -> S {
        let mut rr = S::from_real(self.softening * self.softening);
        for k in 0..d {
            diff[k] = q[j * d + k] - q[i * d + k];
            rr += diff[k] * diff[k];
        }
        rr
    }
}

impl<S: Scalar> ForceField<S> for GravityField {
    fn accel(&self, q: &[S], out: &mut [S]) -> Result<(), ForceError> {
        let n = self.masses.len();
        let d = self.dim(q.len());
        out.iter_mut().for_each(|a| *a = S::zero());
        let mut diff = vec![S::zero(); d];
        for i in 0..n {
            for j in i + 1..n {
                let rr = self.separation(q, d, i, j, &mut diff);
                if !(rr.re() > 0.0) {
                    return Err(ForceError::BranchCutCrossing { i, j });
                }
                let s = rr.sqrt();
                let inv3 = S::from_real(self.g) / (s * s * s);
                let wi = S::from_real(self.masses[j]) * inv3;
                let wj = S::from_real(self.masses[i]) * inv3;
                for k in 0..d {
                    out[i * d + k] += wi * diff[k];
                    out[j * d + k] += -(wj * diff[k]);
                }
            }
        }
        Ok(())
    }
}

/// Total energy `T + V`, evaluated without complex conjugation.
pub fn energy<S: Scalar>(field: &GravityField, s: &PhaseState<S>) -> S {
    let n = s.bodies();
    let d = s.dim();
    let mut kin = S::zero();
    for i in 0..n {
        let mut vv = S::zero();
        for k in 0..d {
            vv += s.v[i * d + k] * s.v[i * d + k];
        }
        kin += S::from_real(0.5 * s.masses[i]) * vv;
    }
    let mut pot = S::zero();
    let mut diff = vec![S::zero(); d];
    for i in 0..n {
        for j in i + 1..n {
            let rr = field.separation(&s.q, d, i, j, &mut diff);
            pot += -(S::from_real(field.g * s.masses[i] * s.masses[j]) / rr.sqrt());
        }
    }
    kin + pot
}

/// Total momentum per spatial component.
pub fn momentum<S: Scalar>(s: &PhaseState<S>) -> Vec<S> {
    let d = s.dim();
    let mut p = vec![S::zero(); d];
    for (i, &m) in s.masses.iter().enumerate() {
        for k in 0..d {
            p[k] += S::from_real(m) * s.v[i * d + k];
        }
    }
    p
}

/// Mass-weighted centre of position.
pub fn center_of_mass<S: Scalar>(s: &PhaseState<S>) -> Vec<S> {
    let d = s.dim();
    let total: f64 = s.masses.iter().sum();
    let mut c = vec![S::zero(); d];
    for (i, &m) in s.masses.iter().enumerate() {
        for k in 0..d {
            c[k] += S::from_real(m / total) * s.q[i * d + k];
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerSetup {
    pub eccentricity: f64,
    pub semi_major_axis: f64,
    pub total_mass: f64,
}

impl Default for KeplerSetup {
    fn default() -> Self {
        KeplerSetup {
            eccentricity: 0.2,
            semi_major_axis: 1.0,
            total_mass: 1.0,
        }
    }
}

impl KeplerSetup {
    pub fn new(eccentricity: f64, semi_major_axis: f64, total_mass: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&eccentricity) && semi_major_axis > 0.0 && total_mass > 0.0,
            "invalid Kepler setup"
        );
        KeplerSetup {
            eccentricity,
            semi_major_axis,
            total_mass,
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI * (self.semi_major_axis.powi(3) / self.total_mass).sqrt()
    }

    pub fn mean_motion(&self) -> f64 {
        (self.total_mass / self.semi_major_axis.powi(3)).sqrt()
    }

    pub fn field(&self) -> GravityField {
        let m = self.total_mass / 2.0;
        GravityField::new(vec![m, m], 0.0)
    }
}

/// Solves `E - e sin E = m` by Newton's method.
pub fn eccentric_anomaly(m: f64, e: f64) -> f64 {
    let mut big_e = if e < 0.8 { m } else { PI.copysign(m) };
    for _ in 0..50 {
        let f = big_e - e * big_e.sin() - m;
        let step = f / (1.0 - e * big_e.cos());
        big_e -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    big_e
}

fn two_body_state(setup: &KeplerSetup, t: f64, rel: [f64; 2], vrel: [f64; 2]) -> PhaseState<f64> {
    let q = vec![-rel[0] / 2.0, -rel[1] / 2.0, 0.0, rel[0] / 2.0, rel[1] / 2.0, 0.0];
    let v = vec![-vrel[0] / 2.0, -vrel[1] / 2.0, 0.0, vrel[0] / 2.0, vrel[1] / 2.0, 0.0];
    let m = setup.total_mass / 2.0;
    PhaseState {
        t,
        q,
        v,
        masses: vec![m, m],
    }
}

/// Two equal masses at apocenter in the centre-of-mass frame, orbiting in the
/// xy-plane. The separation vector points along +x.
pub fn kepler_init(setup: &KeplerSetup) -> PhaseState<f64> {
    let KeplerSetup {
        eccentricity: e,
        semi_major_axis: a,
        total_mass: m,
    } = *setup;
    let r = a * (1.0 + e);
    let speed = (m * (1.0 - e) / r).sqrt();
    two_body_state(setup, 0.0, [r, 0.0], [0.0, speed])
}

/// Closed-form solution started from [`kepler_init`].
pub fn kepler_exact(setup: &KeplerSetup, t: f64) -> PhaseState<f64> {
    let KeplerSetup {
        eccentricity: e,
        semi_major_axis: a,
        ..
    } = *setup;
    let n = setup.mean_motion();
    let mean = (2.0 * PI + n * t).rem_euclid(2.0 * PI) - PI;
    let big_e = eccentric_anomaly(mean, e);
    let (s, c) = big_e.sin_cos();
    let b = a * (1.0 - e * e).sqrt();
    let edot = n / (1.0 - e * c);
    // mean anomaly zero is pericenter; the initial state is rotated by pi so
    // that apocenter lies on +x
    let rel = [-a * (c - e), -b * s];
    let vrel = [a * s * edot, -b * c * edot];
    two_body_state(setup, t, rel, vrel)
}

/// Equal-mass Plummer sphere in standard units (`G = M = 1`, `E = -1/4`),
/// recentred to zero centre-of-mass position and momentum.
pub fn plummer_sample(n: usize, seed: u64) -> PhaseState<f64> {
    assert!(n >= 2, "a Plummer sphere needs at least two bodies");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = 3.0 * PI / 16.0;
    let vscale = 1.0 / length.sqrt();
    let m = 1.0 / n as f64;
    let mut q = Vec::with_capacity(3 * n);
    let mut v = Vec::with_capacity(3 * n);
    let direction = |rng: &mut ChaCha8Rng, len: f64| {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let rho = (1.0 - z * z).sqrt();
        [len * rho * phi.cos(), len * rho * phi.sin(), len * z]
    };
    for _ in 0..n {
        let x: f64 = loop {
            let u: f64 = rng.gen();
            if u > 0.0 {
                break u;
            }
        };
        let r = 1.0 / (x.powf(-2.0 / 3.0) - 1.0).sqrt();
        q.extend(direction(&mut rng, r * length));
        let ratio = loop {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen_range(0.0..0.1);
            if y < x * x * (1.0 - x * x).powf(3.5) {
                break x;
            }
        };
        let escape = 2f64.sqrt() * (1.0 + r * r).powf(-0.25);
        v.extend(direction(&mut rng, ratio * escape * vscale));
    }
    let mut s = PhaseState {
        t: 0.0,
        q,
        v,
        masses: vec![m; n],
    };
    let com = center_of_mass(&s);
    let p = momentum(&s);
    for i in 0..n {
        for k in 0..3 {
            s.q[3 * i + k] -= com[k];
            s.v[3 * i + k] -= p[k];
        }
    }
    s
}

#[derive(Debug, Error)]
pub enum StateFileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    masses: Vec<f64>,
    q: Vec<[f64; 2]>,
    v: Vec<[f64; 2]>,
    t: f64,
}

pub fn state_to_json<S: Scalar>(s: &PhaseState<S>) -> String {
    let pairs = |x: &[S]| x.iter().map(|z| [z.re(), z.im()]).collect();
    let file = StateFile {
        masses: s.masses.clone(),
        q: pairs(&s.q),
        v: pairs(&s.v),
        t: s.t,
    };
    serde_json::to_string(&file).expect("state serializes") + "\n"
}

pub fn state_from_json(text: &str) -> Result<PhaseState<Complex64>, StateFileError> {
    let f: StateFile = serde_json::from_str(text)?;
    let conv = |x: Vec<[f64; 2]>| x.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
    PhaseState::new(f.t, conv(f.q), conv(f.v), f.masses)
        .map_err(|e| StateFileError::Invalid(e.to_string()))
}

pub fn save_state<S: Scalar>(s: &PhaseState<S>, path: impl AsRef<Path>) -> Result<(), StateFileError> {
    std::fs::write(path, state_to_json(s))?;
    Ok(())
}

pub fn load_state(path: impl AsRef<Path>) -> Result<PhaseState<Complex64>, StateFileError> {
    state_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(a: &PhaseState<f64>, b: &PhaseState<f64>) -> f64 {
        a.q.iter()
            .chain(&a.v)
            .zip(b.q.iter().chain(&b.v))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn unit_pair_attracts() {
        let f = GravityField::new(vec![1.0, 1.0], 0.0);
        let q = [-0.5, 0.0, 0.0, 0.5, 0.0, 0.0];
        let mut a = [0.0; 6];
        f.accel(&q, &mut a).unwrap();
        assert_eq!(a, [1.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn branch_cut_is_reported() {
        let f = GravityField::new(vec![1.0, 1.0], 0.0);
        let i = Complex64::new(0.0, 1.0);
        let q = [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0) * i];
        let mut a = [Complex64::new(0.0, 0.0); 2];
        assert_eq!(f.accel(&q, &mut a), Err(ForceError::BranchCutCrossing { i: 0, j: 1 }));
    }

    #[test]
    fn kepler_initial_values() {
        let s = kepler_init(&KeplerSetup::new(0.0, 1.0, 1.0));
        assert!((s.v[4] - s.v[1] - 1.0).abs() < 1e-15);
        let setup = KeplerSetup::default();
        let s = kepler_init(&setup);
        assert!((s.q[3] - s.q[0] - 1.2).abs() < 1e-15);
        assert!((s.v[4] - s.v[1] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(momentum(&s).iter().all(|p| p.abs() < 1e-16));
        assert!((setup.period() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn kepler_exact_geometry() {
        let setup = KeplerSetup::default();
        let s0 = kepler_init(&setup);
        assert!(dist(&kepler_exact(&setup, 0.0), &s0) < 1e-15);
        assert!(dist(&kepler_exact(&setup, setup.period()), &s0) < 1e-13);
        let half = kepler_exact(&setup, setup.period() / 2.0);
        let sep = ((half.q[3] - half.q[0]).powi(2) + (half.q[4] - half.q[1]).powi(2)).sqrt();
        assert!((sep - 0.8).abs() < 1e-14);
    }

    #[test]
    fn kepler_energy() {
        let setup = KeplerSetup::default();
        let e = energy(&setup.field(), &kepler_init(&setup));
        assert!((e + 0.125).abs() < 1e-15);
    }

    #[test]
    fn single_body_energy_is_kinetic() {
        let s = PhaseState::new(0.0, vec![1.0, 2.0, 3.0], vec![0.5, 0.0, 1.0], vec![2.0]).unwrap();
        let f = GravityField::for_state(&s, 0.0);
        assert!((energy(&f, &s) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn plummer_is_centred_and_deterministic() {
        let a = plummer_sample(50, 3);
        let b = plummer_sample(50, 3);
        assert_eq!(a, b);
        assert!((a.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(center_of_mass(&a).iter().all(|x| x.abs() < 1e-12));
        assert!(momentum(&a).iter().all(|x| x.abs() < 1e-12));
        assert_ne!(a, plummer_sample(50, 4));
    }

    #[test]
    fn state_json_round_trip() {
        let s = kepler_init(&KeplerSetup::default()).to_complex();
        let back = state_from_json(&state_to_json(&s)).unwrap();
        assert_eq!(back, s);
        assert!(state_from_json(r#"{"masses":[1],"q":[[0,0]],"v":[],"t":0}"#).is_err());
    }
}
