//! Truncated free associative algebra on two letters, used as an oracle
//! for the Lie-algebra code. Letter 0 is `X1` (drift), letter 1 is `X2`
//! (kick). Words longer than six letters are dropped.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub const DEPTH: usize = 6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly(pub BTreeMap<Vec<u8>, Complex64>);

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::word(&[], Complex64::new(1.0, 0.0))
    }

    pub fn word(w: &[u8], c: Complex64) -> Self {
        let mut p = Poly::zero();
        p.add_term(w.to_vec(), c);
        p
    }

    pub fn letter(l: u8) -> Self {
        Poly::word(&[l], Complex64::new(1.0, 0.0))
    }

    fn add_term(&mut self, w: Vec<u8>, c: Complex64) {
        if w.len() <= DEPTH {
            *self.0.entry(w).or_default() += c;
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (w, c) in &other.0 {
            out.add_term(w.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly(self.0.iter().map(|(w, c)| (w.clone(), c * s)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (u, a) in &self.0 {
            for (v, b) in &other.0 {
                if u.len() + v.len() <= DEPTH {
                    out.add_term([u.as_slice(), v.as_slice()].concat(), a * b);
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Poly) -> Poly {
        self.mul(other).add(&other.mul(self).scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn exp(&self) -> Poly {
        let mut out = Poly::one();
        let mut term = Poly::one();
        for n in 1..=DEPTH {
            term = term.mul(self).scale(Complex64::new(1.0 / n as f64, 0.0));
            out = out.add(&term);
        }
        out
    }

    /// Logarithm of a series with constant term 1.
    pub fn log(&self) -> Poly {
        let x = self.add(&Poly::one().scale(Complex64::new(-1.0, 0.0)));
        let mut out = Poly::zero();
        let mut power = Poly::one();
        for n in 1..=DEPTH {
            power = power.mul(&x);
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            out = out.add(&power.scale(Complex64::new(sign / n as f64, 0.0)));
        }
        out
    }

    pub fn coeff(&self, w: &[u8]) -> Complex64 {
        self.0.get(w).copied().unwrap_or_default()
    }
}

/// All words of length 1 ..= DEPTH.
pub fn words() -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..DEPTH {
        layer = layer
            .iter()
            .flat_map(|w| [0u8, 1].map(|l| [w.as_slice(), &[l]].concat()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Lifts of the fifteen reachable basis elements, defined as brackets of
/// lower ones independently of the crate's structure table.
pub fn hall_lifts() -> BTreeMap<usize, Poly> {
    let mut x: BTreeMap<usize, Poly> = BTreeMap::new();
    x.insert(1, Poly::letter(0));
    x.insert(2, Poly::letter(1));
    let defs = [
        (3, 1, 2),
        (4, 1, 3),
        (5, 2, 3),
        (6, 1, 4),
        (7, 1, 5),
        (9, 3, 4),
        (10, 3, 5),
        (12, 1, 6),
        (13, 2, 6),
        (11, 4, 5),
        (16, 1, 9),
        (17, 3, 7),
        (19, 1, 12),
        (20, 2, 12),
    ];
    for (k, i, j) in defs {
        let p = x[&i].commutator(&x[&j]);
        x.insert(k, p);
    }
    x
}

/// Basis of the ideal generated by `[X2, [X2, [X1, X2]]]` (which vanishes
/// for separable Hamiltonians), through word length six. The remaining
/// grade-6 element `[[X1, X2], R]` follows from these by the Jacobi identity.
pub fn relation_ideal() -> Vec<Poly> {
    let t = Poly::letter(0);
    let v = Poly::letter(1);
    let r = v.commutator(&v.commutator(&t.commutator(&v)));
    let mut out = vec![r.clone()];
    let mut layer = vec![r];
    for _ in 0..2 {
        let next: Vec<Poly> = layer
            .iter()
            .flat_map(|p| [t.commutator(p), v.commutator(p)])
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Expresses a Lie polynomial as `sum z_k lift(X_k) + ideal element` and
/// returns the `z_k` with the least-squares residual.
pub fn project(p: &Poly) -> (BTreeMap<usize, Complex64>, f64) {
    let lifts = hall_lifts();
    let ideal = relation_ideal();
    let ws = words();
    let cols: Vec<&Poly> = lifts.values().chain(ideal.iter()).collect();
    let a = DMatrix::from_fn(ws.len(), cols.len(), |r, c| cols[c].coeff(&ws[r]));
    let b = DVector::from_iterator(ws.len(), ws.iter().map(|w| p.coeff(w)));
    let ah = a.adjoint();
    let z = (&ah * &a).lu().solve(&(&ah * &b)).expect("independent columns");
    let resid = (&a * &z - &b).iter().map(|c| c.norm()).fold(0.0, f64::max);
    let out = lifts.keys().zip(z.iter()).map(|(k, c)| (*k, *c)).collect();
    (out, resid)
}

/// `log(exp(c1 X_{g1}) exp(c2 X_{g2}) ...)` in the free algebra.
pub fn product_log(factors: &[(u8, Complex64)]) -> Poly {
    factors
        .iter()
        .fold(Poly::one(), |acc, &(g, c)| acc.mul(&Poly::letter(g).scale(c).exp()))
        .log()
}
