//! Splitting methods, their canonical RKN tableaus, and the transforms
//! between them.
//!
//! Two layouts are supported:
//!
//! * [`Scheme::Rkna`]: drift first and last, `|alpha| = |beta| + 1`.
//! * [`Scheme::Rknb`]: kick first and last, `|beta| = |alpha| + 1`.
//!
//! Coefficients are stored in application order: `alpha[0]` / `beta[0]` is
//! the first substep of its kind that acts on the state. The written
//! exponential product lists the same factors right to left.

mod catalog;
mod file;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::Generator;

pub use catalog::{builtin_catalog, chambers_closed_form, find_method, triple_jump, MethodRecord};
pub use file::{load_method, method_from_json, method_to_json, save_method};

/// Tolerance on `sum(alpha) = sum(beta) = 1` and on canonicity relations.
pub const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MethodError {
    #[error("{method}: sum of {which} coefficients is {sum}, expected 1")]
    SumViolation {
        method: String,
        which: &'static str,
        sum: Complex64,
    },
    #[error("{method}: {scheme} needs {expected}, got |alpha| = {alpha}, |beta| = {beta}")]
    Shape {
        method: String,
        scheme: Scheme,
        expected: &'static str,
        alpha: usize,
        beta: usize,
    },
    #[error("tableau is not canonical: {0}")]
    Canonicity(String),
    #[error("{method}: completed coefficients are inconsistent ({detail})")]
    Inconsistent { method: String, detail: String },
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("method file: {0}")]
    File(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which substep the product begins and ends with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "RKNA")]
    Rkna,
    #[serde(rename = "RKNB")]
    Rknb,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Rkna => "RKNA",
            Scheme::Rknb => "RKNB",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = MethodError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "RKNA" => Ok(Scheme::Rkna),
            "RKNB" => Ok(Scheme::Rknb),
            other => Err(MethodError::File(format!("unknown scheme `{other}`"))),
        }
    }
}

/// A named drift/kick splitting scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingMethod {
    name: String,
    scheme: Scheme,
    order: u32,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
}

fn sum(v: &[Complex64]) -> Complex64 {
    v.iter().sum()
}

impl SplittingMethod {
    /// Builds a method after checking its layout and coefficient sums.
    pub fn new(
        name: impl Into<String>,
        scheme: Scheme,
        order: u32,
        alpha: Vec<Complex64>,
        beta: Vec<Complex64>,
    ) -> Result<Self, MethodError> {
        let name = name.into();
        let shape_ok = match scheme {
            Scheme::Rkna => alpha.len() == beta.len() + 1 && !beta.is_empty(),
            Scheme::Rknb => beta.len() == alpha.len() + 1 && !alpha.is_empty(),
        };
        if !shape_ok {
            return Err(MethodError::Shape {
                method: name,
                scheme,
                expected: match scheme {
                    Scheme::Rkna => "|alpha| = |beta| + 1 >= 2",
                    Scheme::Rknb => "|beta| = |alpha| + 1 >= 2",
                },
                alpha: alpha.len(),
                beta: beta.len(),
            });
        }
        for (which, v) in [("alpha", &alpha), ("beta", &beta)] {
            let s = sum(v);
            if (s - 1.0).norm() > SUM_TOL {
                return Err(MethodError::SumViolation {
                    method: name,
                    which,
                    sum: s,
                });
            }
        }
        Ok(SplittingMethod {
            name,
            scheme,
            order,
            alpha,
            beta,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Drift coefficients in application order.
    pub fn alpha(&self) -> &[Complex64] {
        &self.alpha
    }

    /// Kick coefficients in application order.
    pub fn beta(&self) -> &[Complex64] {
        &self.beta
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of force evaluations per step without first-same-as-last reuse.
    pub fn stages(&self) -> usize {
        self.beta.len()
    }

    pub fn is_real(&self) -> bool {
        self.alpha.iter().chain(&self.beta).all(|c| c.im == 0.0)
    }

    /// True when every drift and kick coefficient has positive real part.
    pub fn has_positive_real_parts(&self) -> bool {
        self.alpha.iter().chain(&self.beta).all(|c| c.re > 0.0)
    }

    /// Substeps in application order: the first entry acts on the state first.
    pub fn substeps(&self) -> Vec<(Generator, Complex64)> {
        let mut out = Vec::with_capacity(self.alpha.len() + self.beta.len());
        let (lead, follow, first, second) = match self.scheme {
            Scheme::Rkna => (&self.alpha, &self.beta, Generator::Kinetic, Generator::Potential),
            Scheme::Rknb => (&self.beta, &self.alpha, Generator::Potential, Generator::Kinetic),
        };
        for (i, &c) in lead.iter().enumerate() {
            out.push((first, c));
            if let Some(&d) = follow.get(i) {
                out.push((second, d));
            }
        }
        out
    }

    /// Exponential factors in the order the product is written
    /// (`e^{a_n T} ... e^{a_1 T}`), i.e. the reverse of [`Self::substeps`].
    pub fn written_factors(&self) -> Vec<(Generator, Complex64)> {
        let mut f = self.substeps();
        f.reverse();
        f
    }

    /// Reverses both coefficient sequences. The layout kind is preserved by
    /// reversal, so the result carries the same scheme label.
    pub fn adjoint(&self) -> SplittingMethod {
        let name = match self.name.strip_suffix("-adjoint") {
            Some(base) => base.to_string(),
            None => format!("{}-adjoint", self.name),
        };
        SplittingMethod {
            name,
            scheme: self.scheme,
            order: self.order,
            alpha: self.alpha.iter().rev().copied().collect(),
            beta: self.beta.iter().rev().copied().collect(),
        }
    }

    /// Complex conjugate of every coefficient.
    pub fn conjugate(&self) -> SplittingMethod {
        let name = match self.name.strip_suffix("-conjugate") {
            Some(base) => base.to_string(),
            None => format!("{}-conjugate", self.name),
        };
        SplittingMethod {
            name,
            scheme: self.scheme,
            order: self.order,
            alpha: self.alpha.iter().map(|c| c.conj()).collect(),
            beta: self.beta.iter().map(|c| c.conj()).collect(),
        }
    }

    /// True iff reversing the coefficient order yields the complex conjugate
    /// entrywise within `tol`.
    pub fn is_skew_symmetric(&self, tol: f64) -> bool {
        let mirrored = |v: &[Complex64]| {
            v.iter()
                .zip(v.iter().rev())
                .all(|(a, b)| (a - b.conj()).norm() <= tol)
        };
        mirrored(&self.alpha) && mirrored(&self.beta)
    }

    /// Largest entrywise distance to another method's coefficients, or
    /// infinity when the layouts differ.
    pub fn distance(&self, other: &SplittingMethod) -> f64 {
        if self.scheme != other.scheme
            || self.alpha.len() != other.alpha.len()
            || self.beta.len() != other.beta.len()
        {
            return f64::INFINITY;
        }
        self.alpha
            .iter()
            .zip(&other.alpha)
            .chain(self.beta.iter().zip(&other.beta))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Canonical explicit RKN tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct RknTableau {
    /// `B_i`, velocity weights.
    pub vel_weights: Vec<Complex64>,
    /// `c_i`, nodes.
    pub nodes: Vec<Complex64>,
    /// `b_i`, position weights.
    pub pos_weights: Vec<Complex64>,
    /// `a_ij` for `j < i`; row `i` has length `i`.
    pub coupling: Vec<Vec<Complex64>>,
}

impl RknTableau {
    /// Fills `b` and `a` from `B` and `c` using the canonicity relations.
    pub fn canonical(vel_weights: Vec<Complex64>, nodes: Vec<Complex64>) -> Self {
        assert_eq!(vel_weights.len(), nodes.len(), "B and c lengths differ");
        let pos_weights = vel_weights
            .iter()
            .zip(&nodes)
            .map(|(&bw, &c)| bw * (1.0 - c))
            .collect();
        let coupling = (0..nodes.len())
            .map(|i| (0..i).map(|j| vel_weights[j] * (nodes[i] - nodes[j])).collect())
            .collect();
        RknTableau {
            vel_weights,
            nodes,
            pos_weights,
            coupling,
        }
    }

    pub fn stages(&self) -> usize {
        self.nodes.len()
    }

    /// Largest deviation from `b_i = B_i (1 - c_i)` and `a_ij = B_j (c_i - c_j)`.
    pub fn canonicity_defect(&self) -> f64 {
        let s = self.stages();
        let mut worst: f64 = 0.0;
        if self.vel_weights.len() != s || self.pos_weights.len() != s || self.coupling.len() != s {
            return f64::INFINITY;
        }
        for i in 0..s {
            let b = self.vel_weights[i] * (1.0 - self.nodes[i]);
            worst = worst.max((self.pos_weights[i] - b).norm());
            if self.coupling[i].len() != i {
                return f64::INFINITY;
            }
            for j in 0..i {
                let a = self.vel_weights[j] * (self.nodes[i] - self.nodes[j]);
                worst = worst.max((self.coupling[i][j] - a).norm());
            }
        }
        worst
    }
}

/// `c_i` are prefix sums of the drifts preceding kick `i`; `B_i = beta_i`.
pub fn splitting_to_tableau(m: &SplittingMethod) -> Result<RknTableau, MethodError> {
    // re-check sums: a method built by hand may bypass `new` via clone + edits
    SplittingMethod::new(m.name.clone(), m.scheme, m.order, m.alpha.clone(), m.beta.clone())?;
    let mut nodes = Vec::with_capacity(m.beta.len());
    let mut c = Complex64::new(0.0, 0.0);
    match m.scheme {
        Scheme::Rkna => {
            for &a in &m.alpha[..m.beta.len()] {
                c += a;
                nodes.push(c);
            }
        }
        Scheme::Rknb => {
            nodes.push(c);
            for &a in &m.alpha {
                c += a;
                nodes.push(c);
            }
        }
    }
    Ok(RknTableau::canonical(m.beta.clone(), nodes))
}

/// Inverse of [`splitting_to_tableau`].
pub fn tableau_to_splitting(
    t: &RknTableau,
    scheme: Scheme,
    name: impl Into<String>,
    order: u32,
) -> Result<SplittingMethod, MethodError> {
    let defect = t.canonicity_defect();
    if defect > SUM_TOL {
        return Err(MethodError::Canonicity(format!("defect {defect:e}")));
    }
    let s = t.stages();
    if s == 0 {
        return Err(MethodError::Canonicity("no stages".into()));
    }
    let alpha = match scheme {
        Scheme::Rkna => {
            let mut alpha = Vec::with_capacity(s + 1);
            let mut prev = Complex64::new(0.0, 0.0);
            for &c in &t.nodes {
                alpha.push(c - prev);
                prev = c;
            }
            alpha.push(1.0 - prev);
            alpha
        }
        Scheme::Rknb => {
            if s < 2 {
                return Err(MethodError::Canonicity("RKNB needs at least 2 stages".into()));
            }
            if t.nodes[0].norm() > SUM_TOL || (t.nodes[s - 1] - 1.0).norm() > SUM_TOL {
                return Err(MethodError::Canonicity(format!(
                    "RKNB requires c_1 = 0 and c_s = 1, got {} and {}",
                    t.nodes[0],
                    t.nodes[s - 1]
                )));
            }
            t.nodes.windows(2).map(|w| w[1] - w[0]).collect()
        }
    };
    SplittingMethod::new(name, scheme, order, alpha, t.vel_weights.clone())
}

/// Rebuilds a skew-symmetric method from the leading half of its
/// coefficients. The mirrored entries are conjugates of the listed ones; a
/// sequence of odd length gets the real middle entry `1 - 2 Re(sum)`.
///
/// The full lengths follow from the prefix lengths and the layout rule of
/// `scheme`.
pub fn complete_coefficients(
    name: impl Into<String>,
    scheme: Scheme,
    order: u32,
    alpha_prefix: &[Complex64],
    beta_prefix: &[Complex64],
) -> Result<SplittingMethod, MethodError> {
    let name = name.into();
    let (pa, pb) = (alpha_prefix.len(), beta_prefix.len());
    // full lengths: n in {2p, 2p + 1}, with the layout fixing which one
    let (na, nb) = match scheme {
        Scheme::Rkna if pa == pb + 1 => (2 * pa, 2 * pb + 1),
        Scheme::Rkna if pa == pb => (2 * pa + 1, 2 * pb),
        Scheme::Rknb if pb == pa + 1 => (2 * pa + 1, 2 * pb),
        Scheme::Rknb if pa == pb => (2 * pa, 2 * pb + 1),
        _ => {
            return Err(MethodError::Shape {
                method: name,
                scheme,
                expected: "prefix lengths compatible with a skew-symmetric layout",
                alpha: pa,
                beta: pb,
            })
        }
    };
    let complete = |prefix: &[Complex64], n: usize| -> Vec<Complex64> {
        let mut v = prefix.to_vec();
        if n % 2 == 1 {
            v.push(Complex64::new(1.0 - 2.0 * sum(prefix).re, 0.0));
        }
        v.extend(prefix.iter().rev().map(|c| c.conj()));
        v
    };
    let alpha = complete(alpha_prefix, na);
    let beta = complete(beta_prefix, nb);
    for (which, v) in [("alpha", &alpha), ("beta", &beta)] {
        let s = sum(v);
        if (s - 1.0).norm() > SUM_TOL {
            return Err(MethodError::Inconsistent {
                method: name,
                detail: format!("sum of {which} is {s}"),
            });
        }
    }
    SplittingMethod::new(name, scheme, order, alpha, beta)
}
