//! Two-generator nilpotent Lie algebra in a Philip Hall basis.
//!
//! The basis holds `X1 ..= X23` with `X1 = T` (kinetic / drift) and
//! `X2 = V` (potential / kick). Brackets are given by a fixed structure table
//! which already encodes the relation `[V, [V, [T, V]]] = 0` that holds for
//! separable Hamiltonians with quadratic kinetic energy. Everything of grade
//! seven and above is truncated.
//!
//! The Baker-Campbell-Hausdorff product is evaluated with Dynkin's formula
//! (right-nested brackets, exact rational weights), so it works for arbitrary
//! Lie series arguments, not only for multiples of the generators.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::methods::SplittingMethod;

/// Number of basis slots, `X1 ..= X23`.
pub const BASIS_LEN: usize = 23;
/// Highest grade kept by the truncation.
pub const MAX_GRADE: u8 = 6;

/// Basis indices of the five grade-6 elements, in the order used by error reports.
pub const GRADE_SIX: [usize; 5] = [11, 16, 17, 19, 20];

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Grade of each index. `None` marks indices that never arise from the
/// generators (they appear only in the numbering).
const GRADES: [Option<u8>; BASIS_LEN + 1] = {
    let mut g = [None; BASIS_LEN + 1];
    g[1] = Some(1);
    g[2] = Some(1);
    g[3] = Some(2);
    g[4] = Some(3);
    g[5] = Some(3);
    g[6] = Some(4);
    g[7] = Some(4);
    g[9] = Some(5);
    g[10] = Some(5);
    g[12] = Some(5);
    g[13] = Some(5);
    g[11] = Some(6);
    g[16] = Some(6);
    g[17] = Some(6);
    g[19] = Some(6);
    g[20] = Some(6);
    g
};

/// `[X_i, X_j] = sum(coef * X_k)` with `i < j`.
const TABLE: &[(usize, usize, &[(usize, i32)])] = &[
    (1, 2, &[(3, 1)]),
    (1, 3, &[(4, 1)]),
    (1, 4, &[(6, 1)]),
    (1, 5, &[(7, 1)]),
    (1, 6, &[(12, 1)]),
    (1, 7, &[(9, 1), (13, 1)]),
    (1, 9, &[(16, 1)]),
    (1, 10, &[(11, 1), (17, 1)]),
    (1, 12, &[(19, 1)]),
    (1, 13, &[(16, 1), (20, 1)]),
    (1, 14, &[(11, -1), (17, -1)]),
    (2, 3, &[(5, 1)]),
    (2, 4, &[(7, 1)]),
    (2, 6, &[(13, 1)]),
    (2, 7, &[(10, -1)]),
    (2, 9, &[(11, -1), (17, 1)]),
    (2, 12, &[(20, 1)]),
    (2, 13, &[(17, -3)]),
    (3, 4, &[(9, 1)]),
    (3, 5, &[(10, 1)]),
    (3, 6, &[(16, 1)]),
    (3, 7, &[(17, 1)]),
    (4, 5, &[(11, 1)]),
];

/// One structure constant entry `[X_left, X_right] = sum(coef * X_target)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketRule {
    pub left: usize,
    pub right: usize,
    pub terms: Vec<(usize, i32)>,
}

/// The Hall basis with its structure constants.
#[derive(Debug, Clone)]
pub struct HallBasis {
    grades: [Option<u8>; BASIS_LEN + 1],
    rules: Vec<BracketRule>,
    lookup: BTreeMap<(usize, usize), usize>,
}

impl HallBasis {
    fn build() -> Self {
        let rules: Vec<BracketRule> = TABLE
            .iter()
            .map(|&(left, right, terms)| BracketRule {
                left,
                right,
                terms: terms.to_vec(),
            })
            .collect();
        let lookup = rules
            .iter()
            .enumerate()
            .map(|(n, r)| ((r.left, r.right), n))
            .collect();
        HallBasis {
            grades: GRADES,
            rules,
            lookup,
        }
    }

    /// The basis used throughout the crate.
    pub fn standard() -> &'static HallBasis {
        static BASIS: OnceLock<HallBasis> = OnceLock::new();
        BASIS.get_or_init(HallBasis::build)
    }

    pub fn grade(&self, index: usize) -> Option<u8> {
        self.grades.get(index).copied().flatten()
    }

    /// Indices that carry a grade, in increasing order.
    pub fn graded_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=BASIS_LEN).filter(|&i| self.grades[i].is_some())
    }

    pub fn rules(&self) -> &[BracketRule] {
        &self.rules
    }

    /// Bracket of two basis elements as a series.
    pub fn bracket_basis(&self, i: usize, j: usize) -> LieSeries {
        let mut out = LieSeries::zero();
        let (key, sign) = if i < j { ((i, j), 1.0) } else { ((j, i), -1.0) };
        if let Some(&n) = self.lookup.get(&key) {
            for &(k, c) in &self.rules[n].terms {
                out.coeffs[k] += Complex64::new(sign * c as f64, 0.0);
            }
        }
        out
    }

    /// Bilinear extension of the structure constants.
    pub fn bracket(&self, a: &LieSeries, b: &LieSeries) -> LieSeries {
        let mut out = LieSeries::zero();
        for rule in &self.rules {
            let (i, j) = (rule.left, rule.right);
            let w = a.coeffs[i] * b.coeffs[j] - a.coeffs[j] * b.coeffs[i];
            if w == C0 {
                continue;
            }
            for &(k, c) in &rule.terms {
                out.coeffs[k] += w * c as f64;
            }
        }
        out
    }

    /// Checks grade conservation of every entry and the Jacobi identity for
    /// every triple of graded basis elements with total grade at most six.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for rule in &self.rules {
            let (gl, gr) = (self.grade(rule.left), self.grade(rule.right));
            let (Some(gl), Some(gr)) = (gl, gr) else {
                report.ungraded_rules.push((rule.left, rule.right));
                continue;
            };
            for &(k, _) in &rule.terms {
                if self.grade(k) != Some(gl + gr) {
                    report.grade_violations.push(GradeViolation {
                        left: rule.left,
                        right: rule.right,
                        target: k,
                    });
                }
            }
        }

        let graded: Vec<usize> = self.graded_indices().collect();
        for &a in &graded {
            for &b in &graded {
                for &c in &graded {
                    let total: u8 = [a, b, c].iter().filter_map(|&i| self.grade(i)).sum();
                    if total > MAX_GRADE {
                        continue;
                    }
                    let (xa, xb, xc) = (
                        LieSeries::basis(a),
                        LieSeries::basis(b),
                        LieSeries::basis(c),
                    );
                    let residual = self.bracket(&xa, &self.bracket(&xb, &xc))
                        + self.bracket(&xb, &self.bracket(&xc, &xa))
                        + self.bracket(&xc, &self.bracket(&xa, &xb));
                    if residual.max_abs() > 0.0 {
                        report.jacobi_violations.push(JacobiViolation {
                            triple: (a, b, c),
                            residual,
                        });
                    }
                }
            }
        }
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradeViolation {
    pub left: usize,
    pub right: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiViolation {
    pub triple: (usize, usize, usize),
    pub residual: LieSeries,
}

/// Outcome of [`validate_table`].
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub grade_violations: Vec<GradeViolation>,
    pub jacobi_violations: Vec<JacobiViolation>,
    /// Entries whose operands have no grade (stored, but unreachable).
    pub ungraded_rules: Vec<(usize, usize)>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.grade_violations.is_empty() && self.jacobi_violations.is_empty()
    }
}

/// Validates the standard structure table.
pub fn validate_table() -> ValidationReport {
    HallBasis::standard().validate()
}

/// Truncated Lie series over the Hall basis with complex coefficients.
#[derive(Clone, Copy, PartialEq)]
pub struct LieSeries {
    coeffs: [Complex64; BASIS_LEN + 1],
}

impl LieSeries {
    pub fn zero() -> Self {
        LieSeries {
            coeffs: [C0; BASIS_LEN + 1],
        }
    }

    /// The basis element `X_index` with unit coefficient.
    pub fn basis(index: usize) -> Self {
        Self::term(index, Complex64::new(1.0, 0.0))
    }

    pub fn term(index: usize, coeff: Complex64) -> Self {
        assert!(
            (1..=BASIS_LEN).contains(&index),
            "basis index {index} out of range"
        );
        let mut s = Self::zero();
        s.coeffs[index] = coeff;
        s
    }

    /// `X1 + X2`, the generator of the exact flow with unit time step.
    pub fn hamiltonian() -> Self {
        Self::basis(1) + Self::basis(2)
    }

    pub fn coeff(&self, index: usize) -> Complex64 {
        self.coeffs[index]
    }

    pub fn set(&mut self, index: usize, value: Complex64) {
        self.coeffs[index] = value;
    }

    /// Iterator over `(index, coeff)` for `X1 ..= X23`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (1..=BASIS_LEN).map(move |i| (i, self.coeffs[i]))
    }

    /// Projection onto a single grade.
    pub fn grade_part(&self, grade: u8) -> LieSeries {
        let basis = HallBasis::standard();
        let mut out = Self::zero();
        for i in 1..=BASIS_LEN {
            if basis.grade(i) == Some(grade) {
                out.coeffs[i] = self.coeffs[i];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude among grades `lo ..= hi`.
    pub fn max_abs_in_grades(&self, lo: u8, hi: u8) -> f64 {
        let basis = HallBasis::standard();
        self.iter()
            .filter(|&(i, _)| basis.grade(i).is_some_and(|g| g >= lo && g <= hi))
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> LieSeries {
        let mut out = *self;
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }
}

impl fmt::Debug for LieSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (i, c) in self.iter().filter(|(_, c)| *c != C0) {
            m.entry(&format_args!("X{i}"), &c);
        }
        m.finish()
    }
}

impl Add for LieSeries {
    type Output = LieSeries;
    fn add(mut self, rhs: LieSeries) -> LieSeries {
        self += rhs;
        self
    }
}

impl AddAssign for LieSeries {
    fn add_assign(&mut self, rhs: LieSeries) {
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
    }
}

impl Sub for LieSeries {
    type Output = LieSeries;
    fn sub(self, rhs: LieSeries) -> LieSeries {
        self + (-rhs)
    }
}

impl Neg for LieSeries {
    type Output = LieSeries;
    fn neg(self) -> LieSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<LieSeries> for Complex64 {
    type Output = LieSeries;
    fn mul(self, rhs: LieSeries) -> LieSeries {
        rhs.scale(self)
    }
}

pub fn bracket(a: &LieSeries, b: &LieSeries) -> LieSeries {
    HallBasis::standard().bracket(a, b)
}

/// A word in the two formal letters of Dynkin's formula with its weight.
/// `false` stands for the first argument, `true` for the second.
#[derive(Debug, Clone)]
struct DynkinTerm {
    word: Vec<bool>,
    weight: f64,
}

fn factorial(n: i64) -> i64 {
    (1..=n).product()
}

/// Dynkin weights for `log(exp(x) exp(y))` on right-nested brackets of all
/// words up to length six. Returned exactly, before conversion to floats.
pub fn dynkin_weights() -> BTreeMap<Vec<bool>, Ratio<i64>> {
    let max_len = MAX_GRADE as usize;
    let mut acc: BTreeMap<Vec<bool>, Ratio<i64>> = BTreeMap::new();

    // Each block is x^r y^s with r + s >= 1.
    fn walk(
        blocks: &mut Vec<(usize, usize)>,
        len: usize,
        max_len: usize,
        acc: &mut BTreeMap<Vec<bool>, Ratio<i64>>,
    ) {
        if !blocks.is_empty() {
            let n = blocks.len() as i64;
            let mut denom = n * len as i64;
            let mut word = Vec::with_capacity(len);
            for &(r, s) in blocks.iter() {
                denom *= factorial(r as i64) * factorial(s as i64);
                word.extend(std::iter::repeat(false).take(r));
                word.extend(std::iter::repeat(true).take(s));
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            *acc.entry(word).or_insert_with(Ratio::zero) += Ratio::new(sign, denom);
        }
        for r in 0..=(max_len - len) {
            for s in 0..=(max_len - len - r) {
                if r + s == 0 {
                    continue;
                }
                blocks.push((r, s));
                walk(blocks, len + r + s, max_len, acc);
                blocks.pop();
            }
        }
    }

    walk(&mut Vec::new(), 0, max_len, &mut acc);
    acc.retain(|w, c| {
        let trivially_zero = w.len() >= 2 && w[w.len() - 1] == w[w.len() - 2];
        !c.is_zero() && !trivially_zero
    });
    acc
}

fn dynkin_terms() -> &'static [DynkinTerm] {
    static TERMS: OnceLock<Vec<DynkinTerm>> = OnceLock::new();
    TERMS.get_or_init(|| {
        dynkin_weights()
            .into_iter()
            .map(|(word, w)| DynkinTerm {
                word,
                weight: w.to_f64().expect("finite rational"),
            })
            .collect()
    })
}

/// `log(exp(a) exp(b))` truncated at grade six.
pub fn bch(a: &LieSeries, b: &LieSeries) -> LieSeries {
    let basis = HallBasis::standard();
    let mut out = LieSeries::zero();
    for term in dynkin_terms() {
        let pick = |second: bool| if second { b } else { a };
        let (last, rest) = term.word.split_last().expect("non-empty word");
        let mut nested = *pick(*last);
        for &letter in rest.iter().rev() {
            nested = basis.bracket(pick(letter), &nested);
            if nested.max_abs() == 0.0 {
                break;
            }
        }
        out += nested.scale(Complex64::new(term.weight, 0.0));
    }
    out
}

/// Generator of a single exponential factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// `X1`, the kinetic part (drift).
    Kinetic,
    /// `X2`, the potential part (kick).
    Potential,
}

impl Generator {
    pub fn index(self) -> usize {
        match self {
            Generator::Kinetic => 1,
            Generator::Potential => 2,
        }
    }
}

/// Logarithm of the scheme's exponential product (unit step), folding the
/// BCH product over the factors in their written order.
pub fn scheme_log(method: &SplittingMethod) -> LieSeries {
    let mut factors = method
        .written_factors()
        .into_iter()
        .map(|(g, c)| LieSeries::term(g.index(), c));
    let first = factors.next().unwrap_or_else(LieSeries::zero);
    factors.fold(first, |z, f| bch(&z, &f))
}

/// Leading grade-6 part of `H - Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// Coefficients of `X11, X16, X17, X19, X20`.
    pub coefficients: [Complex64; 5],
    pub norm: f64,
}

impl ErrorReport {
    pub fn max_real_part(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|c| c.re.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_imag_part(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
    }
}

pub fn error_report(z: &LieSeries) -> ErrorReport {
    let diff = LieSeries::hamiltonian() - *z;
    let coefficients = GRADE_SIX.map(|k| diff.coeff(k));
    let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    ErrorReport { coefficients, norm }
}

/// Largest deviation of `z` from `X1 + X2` over grades `1 ..= max_grade`.
pub fn order_defect(z: &LieSeries, max_grade: u8) -> f64 {
    (LieSeries::hamiltonian() - *z).max_abs_in_grades(1, max_grade)
}

/// Highest `p` such that `z` agrees with `X1 + X2` through grade `p` within `tol`.
pub fn observed_order(z: &LieSeries, tol: f64) -> u8 {
    (1..=MAX_GRADE)
        .take_while(|&g| order_defect(z, g) < tol)
        .last()
        .unwrap_or(0)
}

/// Convenience: BCH error report of a method.
pub fn method_error(method: &SplittingMethod) -> ErrorReport {
    error_report(&scheme_log(method))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn table_is_consistent() {
        let report = validate_table();
        assert!(report.grade_violations.is_empty(), "{report:?}");
        assert!(report.jacobi_violations.is_empty(), "{report:?}");
        assert_eq!(report.ungraded_rules, vec![(1, 14)]);
    }

    #[test]
    fn jacobi_on_first_triple_is_zero() {
        let b = HallBasis::standard();
        let (x1, x2, x3) = (LieSeries::basis(1), LieSeries::basis(2), LieSeries::basis(3));
        let r = b.bracket(&x1, &b.bracket(&x2, &x3))
            + b.bracket(&x2, &b.bracket(&x3, &x1))
            + b.bracket(&x3, &b.bracket(&x1, &x2));
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn table_entries() {
        let b = HallBasis::standard();
        assert_eq!(b.bracket_basis(2, 13), LieSeries::term(17, c(-3.0)));
        assert_eq!(b.grade(2).unwrap() + b.grade(13).unwrap(), b.grade(17).unwrap());
        assert_eq!(b.bracket_basis(13, 2), LieSeries::term(17, c(3.0)));
        assert_eq!(bracket(&LieSeries::basis(1), &LieSeries::basis(2)), LieSeries::basis(3));
        assert_eq!(
            bracket(&LieSeries::basis(1), &LieSeries::basis(7)),
            LieSeries::basis(9) + LieSeries::basis(13)
        );
        for i in 1..=BASIS_LEN {
            assert_eq!(b.bracket_basis(i, i).max_abs(), 0.0);
        }
        // the vanishing relation
        assert_eq!(b.bracket_basis(2, 5).max_abs(), 0.0);
        assert_eq!(b.grade(14), None);
    }

    #[test]
    fn bch_trivial_cases() {
        let x1 = LieSeries::basis(1);
        let z = bch(&x1.scale(c(0.3)), &LieSeries::zero());
        assert!((z - x1.scale(c(0.3))).max_abs() < 1e-16);
        let z = bch(&x1.scale(c(0.3)), &x1.scale(c(0.45)));
        assert!((z - x1.scale(c(0.75))).max_abs() < 1e-15);
        let z = bch(&LieSeries::basis(1), &LieSeries::basis(2));
        assert!((z.coeff(3) - c(0.5)).norm() < 1e-15);
        assert!((z.coeff(4) - c(1.0 / 12.0)).norm() < 1e-15);
        assert!((z.coeff(5) + c(1.0 / 12.0)).norm() < 1e-15);
    }

    #[test]
    fn dynkin_low_order_weights() {
        let w = dynkin_weights();
        assert_eq!(w[&vec![false]], Ratio::new(1, 1));
        assert_eq!(w[&vec![true]], Ratio::new(1, 1));
        // xy and yx both expand onto [x,y], together giving [x,y]/2
        assert_eq!(w[&vec![false, true]], Ratio::new(1, 4));
        assert_eq!(w[&vec![true, false]], Ratio::new(-1, 4));
    }

    #[test]
    fn error_report_of_exact_flow_is_zero() {
        let r = error_report(&LieSeries::hamiltonian());
        assert_eq!(r.norm, 0.0);
        assert!(r.coefficients.iter().all(|c| *c == C0));
    }
}
