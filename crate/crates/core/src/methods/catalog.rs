use std::sync::OnceLock;

use num_complex::Complex64;

use super::{complete_coefficients, splitting_to_tableau, tableau_to_splitting};
use super::{MethodError, RknTableau, Scheme, SplittingMethod};
use crate::conditions::{newton_solve, NewtonOptions};
use crate::lie::{method_error, ErrorReport};

/// A catalog entry: the method, its tableau, and a lazily computed error report.
#[derive(Debug, Clone)]
pub struct MethodRecord {
    pub method: SplittingMethod,
    pub tableau: RknTableau,
    error: OnceLock<ErrorReport>,
}

impl MethodRecord {
    pub fn new(method: SplittingMethod) -> Result<Self, MethodError> {
        let tableau = splitting_to_tableau(&method)?;
        Ok(MethodRecord {
            method,
            tableau,
            error: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        self.method.name()
    }

    pub fn error(&self) -> ErrorReport {
        *self.error.get_or_init(|| method_error(&self.method))
    }
}

type Pair = (&'static str, &'static str);

fn real(values: &[&str]) -> Vec<Complex64> {
    values
        .iter()
        .map(|s| Complex64::new(s.parse().expect("literal"), 0.0))
        .collect()
}

fn cplx(values: &[Pair]) -> Vec<Complex64> {
    values
        .iter()
        .map(|(re, im)| Complex64::new(re.parse().expect("literal"), im.parse().expect("literal")))
        .collect()
}

const AR1_ALPHA: [&str; 6] = [
    "0.96172990014645096",
    "-0.09525408032034999",
    "-0.73942683539212613",
    "0.62730935078241887",
    "-0.52506178465602220",
    "0.77070344943962849",
];
const AR1_BETA: [&str; 5] = [
    "0.39682804502722538",
    "-0.824377563589592",
    "0.2042028689314904",
    "1.0021847152077973",
    "0.22116193442307898",
];
const AR2_ALPHA: [&str; 6] = [
    "0.69883375727545265",
    "-0.49469565362085154",
    "0.81641946634957295",
    "-0.65762956677338285",
    "-0.057841894299102682",
    "0.69491389106831146",
];
const AR2_BETA: [&str; 5] = [
    "0.40090379269659899",
    "0.95997088013405985",
    "0.0884951581272243",
    "1.2214390923487315",
    "-1.6708089233066146",
];
const BR1_ALPHA: [&str; 5] = [
    "0.54200976680171613",
    "-0.04060817665564392",
    "-0.87779698530109766",
    "0.86474236062251646",
    "0.51165303453250898",
];
const BR1_BETA: [&str; 6] = [
    "0.24566294009066009",
    "1.1433587581365421",
    "-1.3796706973507000",
    "-0.019611260781217307",
    "0.87087215441178844",
    "0.13938810549292669",
];
const BR2_ALPHA: [&str; 5] = [
    "0.42637413177222316",
    "-0.82438794434938248",
    "-0.63140077574154094",
    "0.38590710518893978",
    "1.6435074831297605",
];
const BR2_BETA: [&str; 6] = [
    "0.15102308452230116",
    "0.72768821316253478",
    "-0.26217627934521390",
    "-0.044211509719803855",
    "0.23596222045571453",
    "0.19171427092446728",
];
const BR3_ALPHA: [&str; 5] = [
    "1.0413749845202060",
    "-0.61784769849171965",
    "0.62570540985789957",
    "-0.63446409452971410",
    "0.58523139864332822",
];
const BR3_BETA: [&str; 6] = [
    "0.12696076271851077",
    "-1.4166626058695677",
    "-0.62172666654176438",
    "0.69301448863793809",
    "1.2079876026916669",
    "1.0104264183632164",
];

// Leading halves of the skew-symmetric complex methods.
const AC1_ALPHA: [Pair; 3] = [
    ("0.087808410045663212", "0.028523844251341822"),
    ("0.17916539354193987", "-0.067857083007249973"),
    ("0.23302619641239692", "-0.097952003128893425"),
];
const AC1_BETA: [Pair; 2] = [
    ("0.17526734338348050", "0.057642040076250593"),
    ("0.18488007701471166", "-0.19410647329733509"),
];
const AC2_ALPHA: [Pair; 3] = [
    ("0.087634204536037057", "0.028807372065269351"),
    ("0.18007104463252914", "-0.068253589313355443"),
    ("0.23229475083143381", "-0.097060961378624794"),
];
const AC2_BETA: [Pair; 2] = [
    ("0.17526840907207411", "0.057614744130538702"),
    ("0.18487368019298416", "-0.19412192275724959"),
];
const BC1_BETA: [Pair; 3] = [
    ("0.093106790861751605", "-0.026812950639104607"),
    ("0.14578332225686154", "0.076033669531385746"),
    ("0.26110988688138685", "0.10851236434561279"),
];
const BC1_ALPHA: [Pair; 2] = [
    ("0.15950063058390336", "-0.060127448366782494"),
    ("0.19085044206705213", "0.20369642527600502"),
];
const BC2_BETA: [Pair; 3] = [
    ("0.10625796854753310", "-0.037213537431233983"),
    ("0.35767992721948460", "-0.022169204268009056"),
    ("0.036062104232982296", "0.057072185585748646"),
];
const BC2_ALPHA: [Pair; 2] = [
    ("0.26934942679787788", "-0.093675141997563700"),
    ("0.14580813747862993", "0.49930185549019606"),
];

// Six-stage skew-symmetric method obtained by embedding AC1 and minimizing
// the grade-6 error. Kick-first layout with seven kicks.
const OPT6_ALPHA: [Pair; 3] = [
    ("0.101907705405177865", "0.130701756906677735"),
    ("0.218628781976265590", "0.0126440811480678494"),
    ("0.179463512618556560", "-0.148112326926992222"),
];
const OPT6_BETA: [Pair; 4] = [
    ("0.0489489561074426954", "0.0669384556781967844"),
    ("0.166479171860817010", "0.0764027877516731402"),
    ("0.192297943665939275", "-0.0835834606213808479"),
    ("0.184547856731601789", "0"),
];

/// Yoshida's fourth-order triple jump: kick-drift-kick leapfrog composed
/// with weights `w1, w0, w1`, adjacent half kicks merged.
pub fn triple_jump() -> SplittingMethod {
    let w1 = 1.0 / (2.0 - 2f64.cbrt());
    let w0 = 1.0 - 2.0 * w1;
    let r = |x: f64| Complex64::new(x, 0.0);
    SplittingMethod::new(
        "TRIPLEJUMP",
        Scheme::Rknb,
        4,
        vec![r(w1), r(w0), r(w1)],
        vec![r(w1 / 2.0), r((w1 + w0) / 2.0), r((w0 + w1) / 2.0), r(w1 / 2.0)],
    )
    .expect("triple jump coefficients sum to one")
}

/// Third-order two-stage complex method in closed form:
/// `B = 1/2 +- i sqrt(3)/6`, `c = (1/4 + i sqrt(3)/12, 3/4 + i sqrt(3)/12)`.
pub fn chambers_closed_form() -> SplittingMethod {
    let s3 = 3f64.sqrt();
    let a1 = Complex64::new(0.25, s3 / 12.0);
    SplittingMethod::new(
        "CHAMBERS3",
        Scheme::Rkna,
        3,
        vec![a1, Complex64::new(0.5, 0.0), a1.conj()],
        vec![Complex64::new(0.5, s3 / 6.0), Complex64::new(0.5, -s3 / 6.0)],
    )
    .expect("closed form sums to one")
}

/// Derives the two-stage third-order complex method with the Newton solver.
fn chambers_derived() -> SplittingMethod {
    let b0 = [Complex64::new(0.5, 0.3), Complex64::new(0.5, -0.3)];
    let c0 = [Complex64::new(0.25, 0.1), Complex64::new(0.75, 0.1)];
    let sol = newton_solve(&b0, &c0, Scheme::Rkna, 3, &NewtonOptions::default())
        .expect("third-order two-stage system converges from the built-in start");
    tableau_to_splitting(&sol.tableau, Scheme::Rkna, "CHAMBERS3", 3)
        .expect("solver output is canonical")
}

fn leapfrog() -> SplittingMethod {
    let h = Complex64::new(0.5, 0.0);
    SplittingMethod::new("LEAPFROG", Scheme::Rkna, 2, vec![h, h], vec![Complex64::new(1.0, 0.0)])
        .expect("leapfrog sums to one")
}

fn build() -> Vec<MethodRecord> {
    let mk = |name: &str, scheme, a: &[&str], b: &[&str]| {
        SplittingMethod::new(name, scheme, 5, real(a), real(b)).expect("table coefficients")
    };
    let skew = |name: &str, scheme, a: &[Pair], b: &[Pair]| {
        complete_coefficients(name, scheme, 5, &cplx(a), &cplx(b)).expect("table coefficients")
    };
    let methods = vec![
        mk("AR1", Scheme::Rkna, &AR1_ALPHA, &AR1_BETA),
        mk("AR2", Scheme::Rkna, &AR2_ALPHA, &AR2_BETA),
        mk("BR1", Scheme::Rknb, &BR1_ALPHA, &BR1_BETA),
        mk("BR2", Scheme::Rknb, &BR2_ALPHA, &BR2_BETA),
        mk("BR3", Scheme::Rknb, &BR3_ALPHA, &BR3_BETA),
        skew("AC1", Scheme::Rkna, &AC1_ALPHA, &AC1_BETA),
        skew("AC2", Scheme::Rkna, &AC2_ALPHA, &AC2_BETA),
        skew("BC1", Scheme::Rknb, &BC1_ALPHA, &BC1_BETA),
        skew("BC2", Scheme::Rknb, &BC2_ALPHA, &BC2_BETA),
        skew("OPT6", Scheme::Rknb, &OPT6_ALPHA, &OPT6_BETA[..3]),
        leapfrog(),
        triple_jump(),
        chambers_derived(),
    ];
    methods
        .into_iter()
        .map(|m| MethodRecord::new(m).expect("catalog methods are well formed"))
        .collect()
}

fn catalog() -> &'static [MethodRecord] {
    static CATALOG: OnceLock<Vec<MethodRecord>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

/// All built-in methods: the nine fifth-order table methods, the optimized
/// six-stage method, leapfrog, the triple jump and the two-stage complex
/// third-order method.
pub fn builtin_catalog() -> Vec<MethodRecord> {
    catalog().to_vec()
}

/// Looks a catalog method up by name (case-insensitive). A trailing
/// `-adjoint` or `-conjugate` applies that transform.
pub fn find_method(name: &str) -> Result<SplittingMethod, MethodError> {
    let upper = name.to_ascii_uppercase();
    if let Some(base) = upper.strip_suffix("-ADJOINT") {
        return find_method(base).map(|m| m.adjoint());
    }
    if let Some(base) = upper.strip_suffix("-CONJUGATE") {
        return find_method(base).map(|m| m.conjugate());
    }
    catalog()
        .iter()
        .find(|r| r.name() == upper)
        .map(|r| r.method.clone())
        .ok_or_else(|| MethodError::UnknownMethod(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_thirteen_entries() {
        let cat = builtin_catalog();
        assert_eq!(cat.len(), 13);
        let names: Vec<_> = cat.iter().map(|r| r.name().to_string()).collect();
        assert_eq!(
            names,
            [
                "AR1", "AR2", "BR1", "BR2", "BR3", "AC1", "AC2", "BC1", "BC2", "OPT6",
                "LEAPFROG", "TRIPLEJUMP", "CHAMBERS3"
            ]
        );
    }

    #[test]
    fn opt6_leading_coefficient() {
        let m = find_method("OPT6").unwrap();
        assert_eq!(
            m.alpha()[0],
            Complex64::new(0.101907705405177865, 0.130701756906677735)
        );
        assert_eq!(m.alpha().len(), 6);
        assert_eq!(m.beta().len(), 7);
        assert!(m.is_skew_symmetric(1e-15));
        // the completed middle kick agrees with the printed one
        let printed: f64 = OPT6_BETA[3].0.parse().unwrap();
        assert!((m.beta()[3].re - printed).abs() < 1e-12);
    }

    #[test]
    fn chambers_matches_closed_form() {
        let derived = find_method("CHAMBERS3").unwrap();
        assert!(derived.distance(&chambers_closed_form()) < 1e-13);
        assert!(derived.has_positive_real_parts());
    }

    #[test]
    fn lookup_with_transforms() {
        let adj = find_method("ar1-adjoint").unwrap();
        assert_eq!(adj.name(), "AR1-adjoint");
        assert_eq!(adj.alpha()[0], find_method("AR1").unwrap().alpha()[5]);
        assert!(matches!(find_method("nope"), Err(MethodError::UnknownMethod(_))));
    }
}
