//! Drift/kick execution of splitting methods.
//!
//! States and force fields are generic over [`Scalar`], so real methods can
//! run in plain `f64` and complex ones in `Complex64` with the same code.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::lie::Generator;
use crate::methods::SplittingMethod;

/// Field element used for positions, velocities and step coefficients.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    /// `None` when `c` cannot be represented (a complex value for `f64`).
    fn from_complex(c: Complex64) -> Option<Self>;
    fn to_complex(self) -> Complex64;
    fn re(self) -> f64;
    fn im(self) -> f64;
    /// Principal square root.
    fn sqrt(self) -> Self;
    /// Keeps only the real part.
    fn real_part(self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn from_complex(c: Complex64) -> Option<Self> {
        (c.im == 0.0).then_some(c.re)
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn real_part(self) -> Self {
        self
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_complex(c: Complex64) -> Option<Self> {
        Some(c)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn real_part(self) -> Self {
        Complex64::new(self.re, 0.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForceError {
    /// The analytic continuation would cross the branch cut of the square root.
    #[error("branch cut crossing between bodies {i} and {j}")]
    BranchCutCrossing { i: usize, j: usize },
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("step {step}: {source}")]
    Force {
        step: usize,
        #[source]
        source: ForceError,
    },
    #[error("method `{0}` has complex coefficients and cannot run in real arithmetic")]
    ComplexCoefficients(String),
    #[error("state dimension mismatch: {0}")]
    Dimension(String),
}

/// Time, positions, velocities and masses of a system of bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<S> {
    pub t: f64,
    pub q: Vec<S>,
    pub v: Vec<S>,
    pub masses: Vec<f64>,
}

impl<S: Scalar> PhaseState<S> {
    pub fn new(t: f64, q: Vec<S>, v: Vec<S>, masses: Vec<f64>) -> Result<Self, IntegrateError> {
        if q.len() != v.len() {
            return Err(IntegrateError::Dimension(format!(
                "|q| = {} but |v| = {}",
                q.len(),
                v.len()
            )));
        }
        if masses.is_empty() || q.len() % masses.len() != 0 {
            return Err(IntegrateError::Dimension(format!(
                "{} coordinates for {} bodies",
                q.len(),
                masses.len()
            )));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(IntegrateError::Dimension("masses must be positive".into()));
        }
        Ok(PhaseState { t, q, v, masses })
    }

    pub fn bodies(&self) -> usize {
        self.masses.len()
    }

    /// Spatial dimension per body.
    pub fn dim(&self) -> usize {
        self.q.len() / self.masses.len()
    }

    /// Zeroes the imaginary parts; returns whether anything changed.
    pub fn discard_imaginary(&mut self) -> bool {
        let mut changed = false;
        for x in self.q.iter_mut().chain(self.v.iter_mut()) {
            if x.im() != 0.0 {
                *x = x.real_part();
                changed = true;
            }
        }
        changed
    }

    pub fn max_imag(&self) -> f64 {
        self.q
            .iter()
            .chain(&self.v)
            .map(|x| x.im().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_complex(&self) -> PhaseState<Complex64> {
        PhaseState {
            t: self.t,
            q: self.q.iter().map(|x| x.to_complex()).collect(),
            v: self.v.iter().map(|x| x.to_complex()).collect(),
            masses: self.masses.clone(),
        }
    }

    /// Real parts as an `f64` state.
    pub fn to_real(&self) -> PhaseState<f64> {
        PhaseState {
            t: self.t,
            q: self.q.iter().map(|x| x.re()).collect(),
            v: self.v.iter().map(|x| x.re()).collect(),
            masses: self.masses.clone(),
        }
    }
}

impl PhaseState<f64> {
    pub fn lift<S: Scalar>(&self) -> PhaseState<S> {
        PhaseState {
            t: self.t,
            q: self.q.iter().map(|&x| S::from_real(x)).collect(),
            v: self.v.iter().map(|&x| S::from_real(x)).collect(),
            masses: self.masses.clone(),
        }
    }
}

/// Acceleration `f(q)` of a second-order system `q'' = f(q)`.
pub trait ForceField<S: Scalar>: Sync {
    fn accel(&self, q: &[S], out: &mut [S]) -> Result<(), ForceError>;

    /// True when `f` is complex-analytic (real on real inputs).
    fn is_analytic(&self) -> bool {
        true
    }
}

/// `f(q) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForce;

impl<S: Scalar> ForceField<S> for ZeroForce {
    fn accel(&self, _q: &[S], out: &mut [S]) -> Result<(), ForceError> {
        out.iter_mut().for_each(|a| *a = S::zero());
        Ok(())
    }
}

/// `f(q) = -omega^2 q`, componentwise.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicOscillator {
    pub omega: f64,
}

impl<S: Scalar> ForceField<S> for HarmonicOscillator {
    fn accel(&self, q: &[S], out: &mut [S]) -> Result<(), ForceError> {
        let k = S::from_real(-self.omega * self.omega);
        for (a, &x) in out.iter_mut().zip(q) {
            *a = k * x;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Substep {
    Drift(Complex64),
    Kick(Complex64),
}

impl Substep {
    fn same_kind(&self, other: &Substep) -> bool {
        matches!(
            (self, other),
            (Substep::Drift(_), Substep::Drift(_)) | (Substep::Kick(_), Substep::Kick(_))
        )
    }
}

/// Substeps of one step in application order.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub name: String,
    pub substeps: Vec<Substep>,
    /// Last substep of a step can share work with the first of the next.
    pub fsal_fusable: bool,
}

impl StepPlan {
    pub fn len(&self) -> usize {
        self.substeps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.substeps.is_empty()
    }

    pub fn force_evaluations(&self) -> usize {
        self.substeps
            .iter()
            .filter(|s| matches!(s, Substep::Kick(_)))
            .count()
    }
}

/// Drift-first layouts give `drift a1, kick b1, ..., drift a_n`;
/// kick-first layouts give `kick b1, drift a1, ..., kick b_n`.
pub fn plan(method: &SplittingMethod) -> StepPlan {
    let substeps: Vec<Substep> = method
        .substeps()
        .into_iter()
        .map(|(g, c)| match g {
            Generator::Kinetic => Substep::Drift(c),
            Generator::Potential => Substep::Kick(c),
        })
        .collect();
    let fsal_fusable = match (substeps.first(), substeps.last()) {
        (Some(a), Some(b)) => substeps.len() > 1 && a.same_kind(b),
        _ => false,
    };
    StepPlan {
        name: method.name().to_string(),
        substeps,
        fsal_fusable,
    }
}

#[derive(Debug, Clone, Copy)]
enum TypedSubstep<S> {
    Drift(S),
    Kick(S),
}

fn typed<S: Scalar>(plan: &StepPlan) -> Result<Vec<TypedSubstep<S>>, IntegrateError> {
    plan.substeps
        .iter()
        .map(|s| {
            let (c, drift) = match *s {
                Substep::Drift(c) => (c, true),
                Substep::Kick(c) => (c, false),
            };
            let c = S::from_complex(c)
                .ok_or_else(|| IntegrateError::ComplexCoefficients(plan.name.clone()))?;
            Ok(if drift {
                TypedSubstep::Drift(c)
            } else {
                TypedSubstep::Kick(c)
            })
        })
        .collect()
}

/// Handling of imaginary parts after each full step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    #[default]
    None,
    DiscardImaginary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntegrateOptions {
    pub projection: Projection,
    /// Share the boundary substep between consecutive steps when the plan allows it.
    pub fsal: bool,
}

/// Work counters of an integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntegrationStats {
    pub steps: usize,
    /// Substeps executed, counting a fused boundary pair once.
    pub substeps: usize,
    pub force_evaluations: usize,
}

struct Stepper<'a, S: Scalar, F: ForceField<S> + ?Sized> {
    ops: Vec<TypedSubstep<S>>,
    field: &'a F,
    accel: Vec<S>,
    /// `accel` holds `f(q)` for the current `q`.
    accel_valid: bool,
    stats: IntegrationStats,
}

impl<'a, S: Scalar, F: ForceField<S> + ?Sized> Stepper<'a, S, F> {
    fn new(plan: &StepPlan, field: &'a F, n: usize) -> Result<Self, IntegrateError> {
        Ok(Stepper {
            ops: typed(plan)?,
            field,
            accel: vec![S::zero(); n],
            accel_valid: false,
            stats: IntegrationStats::default(),
        })
    }

    fn apply(
        &mut self,
        op: TypedSubstep<S>,
        s: &mut PhaseState<S>,
        h: S,
        reuse: bool,
    ) -> Result<(), ForceError> {
        match op {
            TypedSubstep::Drift(a) => {
                let ah = a * h;
                for (x, &v) in s.q.iter_mut().zip(&s.v) {
                    *x += ah * v;
                }
                self.accel_valid = false;
            }
            TypedSubstep::Kick(b) => {
                if !(reuse && self.accel_valid) {
                    self.field.accel(&s.q, &mut self.accel)?;
                    self.stats.force_evaluations += 1;
                    self.accel_valid = true;
                }
                let bh = b * h;
                for (v, &a) in s.v.iter_mut().zip(&self.accel) {
                    *v += bh * a;
                }
            }
        }
        Ok(())
    }

    /// One full step. With `fused_entry`, the first substep is the second
    /// half of a fused boundary pair and may reuse the cached force.
    fn step(&mut self, s: &mut PhaseState<S>, h: f64, fused_entry: bool) -> Result<(), ForceError> {
        let hs = S::from_real(h);
        let n = self.ops.len();
        for k in 0..n {
            let op = self.ops[k];
            let reuse = k == 0 && fused_entry;
            self.apply(op, s, hs, reuse)?;
            if !(reuse && k == 0) {
                self.stats.substeps += 1;
            }
        }
        s.t += h;
        self.stats.steps += 1;
        Ok(())
    }
}

/// Applies one step of `plan` to `s` with step size `h` (negative `h` steps
/// backwards).
pub fn step<S: Scalar, F: ForceField<S> + ?Sized>(
    plan: &StepPlan,
    field: &F,
    s: &PhaseState<S>,
    h: f64,
) -> Result<PhaseState<S>, IntegrateError> {
    let mut out = s.clone();
    let mut stepper = Stepper::new(plan, field, s.q.len())?;
    stepper
        .step(&mut out, h, false)
        .map_err(|source| IntegrateError::Force { step: 0, source })?;
    Ok(out)
}

/// Applies `nsteps` steps. The observer sees `(step index, state)` after
/// every full step, after projection.
///
/// With FSAL enabled the boundary substeps of consecutive steps are counted
/// as one, and a boundary kick reuses the force evaluated for the previous
/// kick when the positions have not changed in between. The arithmetic is
/// the same as without fusion, so both paths give bit-identical states.
pub fn integrate<S, F, O>(
    plan: &StepPlan,
    field: &F,
    s0: &PhaseState<S>,
    h: f64,
    nsteps: usize,
    opts: IntegrateOptions,
    mut observer: O,
) -> Result<(PhaseState<S>, IntegrationStats), IntegrateError>
where
    S: Scalar,
    F: ForceField<S> + ?Sized,
    O: FnMut(usize, &PhaseState<S>),
{
    let mut s = s0.clone();
    let mut stepper = Stepper::new(plan, field, s.q.len())?;
    let fuse = opts.fsal && plan.fsal_fusable;
    for n in 0..nsteps {
        stepper
            .step(&mut s, h, fuse && n > 0)
            .map_err(|source| IntegrateError::Force { step: n, source })?;
        if opts.projection == Projection::DiscardImaginary && s.discard_imaginary() {
            stepper.accel_valid = false;
        }
        observer(n, &s);
    }
    Ok((s, stepper.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::{find_method, Scheme};

    fn oscillator_state(q: f64, v: f64) -> PhaseState<f64> {
        PhaseState::new(0.0, vec![q], vec![v], vec![1.0]).unwrap()
    }

    #[test]
    fn plans_have_expected_layout() {
        let lf = plan(&find_method("LEAPFROG").unwrap());
        let r = |x: f64| Complex64::new(x, 0.0);
        assert_eq!(
            lf.substeps,
            vec![Substep::Drift(r(0.5)), Substep::Kick(r(1.0)), Substep::Drift(r(0.5))]
        );
        let ar1 = plan(&find_method("AR1").unwrap());
        assert_eq!(ar1.len(), 11);
        assert!(matches!(ar1.substeps[0], Substep::Drift(_)));
        assert!(matches!(ar1.substeps[10], Substep::Drift(_)));
        assert!(ar1.fsal_fusable);
        let br1 = plan(&find_method("BR1").unwrap());
        assert_eq!(br1.len(), 11);
        assert!(matches!(br1.substeps[0], Substep::Kick(_)));
        assert!(matches!(br1.substeps[10], Substep::Kick(_)));
    }

    #[test]
    fn free_motion_is_exact() {
        let s = PhaseState::new(0.0, vec![1.0, -2.0], vec![0.5, 0.25], vec![1.0]).unwrap();
        for name in ["AR1", "BR2", "TRIPLEJUMP"] {
            let p = plan(&find_method(name).unwrap());
            let out = step(&p, &ZeroForce, &s, 0.5).unwrap();
            assert_eq!(out.v, s.v);
            for k in 0..2 {
                assert!((out.q[k] - (s.q[k] + 0.5 * s.v[k])).abs() < 1e-15);
            }
            assert_eq!(out.t, 0.5);
        }
    }

    #[test]
    fn leapfrog_on_oscillator_by_hand() {
        let (q, v, h) = (0.7, -0.3, 0.1);
        let osc = HarmonicOscillator { omega: 1.0 };
        let r = |x: f64| Complex64::new(x, 0.0);

        // kick-drift-kick
        let kdk = SplittingMethod::new("KDK", Scheme::Rknb, 2, vec![r(1.0)], vec![r(0.5), r(0.5)]).unwrap();
        let out = step(&plan(&kdk), &osc, &oscillator_state(q, v), h).unwrap();
        let q1 = q + h * v - h * h * q / 2.0;
        let v1 = v - h * (q + q1) / 2.0;
        assert!((out.q[0] - q1).abs() < 1e-15);
        assert!((out.v[0] - v1).abs() < 1e-15);

        // drift-kick-drift
        let out = step(&plan(&find_method("LEAPFROG").unwrap()), &osc, &oscillator_state(q, v), h).unwrap();
        let qm = q + h * v / 2.0;
        let v1 = v - h * qm;
        let q1 = qm + h * v1 / 2.0;
        assert!((out.q[0] - q1).abs() < 1e-15);
        assert!((out.v[0] - v1).abs() < 1e-15);
    }

    #[test]
    fn complex_method_rejected_in_real_arithmetic() {
        let p = plan(&find_method("AC1").unwrap());
        let e = step(&p, &ZeroForce, &oscillator_state(1.0, 0.0), 0.1);
        assert!(matches!(e, Err(IntegrateError::ComplexCoefficients(_))));
    }

    #[test]
    fn zero_steps_is_identity() {
        let s = oscillator_state(1.0, 0.0);
        let p = plan(&find_method("AR1").unwrap());
        let (out, stats) = integrate(
            &p,
            &HarmonicOscillator { omega: 1.0 },
            &s,
            0.1,
            0,
            IntegrateOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert_eq!(out, s);
        assert_eq!(stats, IntegrationStats::default());
    }

    #[test]
    fn fsal_is_bit_identical() {
        let field = HarmonicOscillator { omega: 1.3 };
        let s = oscillator_state(1.0, 0.2);
        for name in ["AR1", "BR1"] {
            let p = plan(&find_method(name).unwrap());
            let run = |fsal| {
                integrate(&p, &field, &s, 0.05, 100, IntegrateOptions { fsal, ..Default::default() }, |_, _| {})
                    .unwrap()
            };
            let (a, sa) = run(false);
            let (b, sb) = run(true);
            assert_eq!(a, b, "{name}");
            assert_eq!(sa.substeps, 100 * p.len());
            assert_eq!(sb.substeps, 100 * (p.len() - 1) + 1);
        }
        // kick-first plans also save one force evaluation per step
        let p = plan(&find_method("BR1").unwrap());
        let (_, st) = integrate(
            &p,
            &field,
            &s,
            0.05,
            10,
            IntegrateOptions { fsal: true, ..Default::default() },
            |_, _| {},
        )
        .unwrap();
        assert_eq!(st.force_evaluations, 6 + 9 * 5);
    }

    #[test]
    fn real_input_stays_real_in_complex_arithmetic() {
        let p = plan(&find_method("AR2").unwrap());
        let s = oscillator_state(1.0, 0.0).lift::<Complex64>();
        let (out, _) = integrate(
            &p,
            &HarmonicOscillator { omega: 1.0 },
            &s,
            0.1,
            50,
            IntegrateOptions::default(),
            |_, st| assert_eq!(st.max_imag(), 0.0),
        )
        .unwrap();
        assert_eq!(out.max_imag(), 0.0);
    }
}
