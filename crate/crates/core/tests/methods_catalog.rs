mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use common::c;
use rknlab::conditions::residuals;
use rknlab::methods::{
    builtin_catalog, complete_coefficients, find_method, load_method, method_from_json,
    method_to_json, save_method, splitting_to_tableau, tableau_to_splitting, Scheme,
    SplittingMethod,
};

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn catalog_round_trips_through_tableau() {
    for rec in builtin_catalog() {
        let m = &rec.method;
        let back = tableau_to_splitting(&rec.tableau, m.scheme(), m.name(), m.order()).unwrap();
        assert!(max_diff(back.alpha(), m.alpha()) <= 1e-14, "{}", m.name());
        assert!(max_diff(back.beta(), m.beta()) <= 1e-14, "{}", m.name());
        assert!(rec.tableau.canonicity_defect() < 1e-12);
    }
}

#[test]
fn tableau_values() {
    let t = splitting_to_tableau(&find_method("AR1").unwrap()).unwrap();
    assert_eq!(t.nodes[0], c(0.96172990014645096, 0.0));
    assert!((t.nodes[1] - c(0.96172990014645096 - 0.09525408032034999, 0.0)).norm() < 1e-16);
    let t = splitting_to_tableau(&find_method("BR1").unwrap()).unwrap();
    assert_eq!(t.stages(), 6);
    assert!(t.nodes[0].norm() < 1e-12);
    assert!((t.nodes[5] - 1.0).norm() < 1e-12);
    let t = splitting_to_tableau(&find_method("LEAPFROG").unwrap()).unwrap();
    assert_eq!(t.nodes, vec![c(0.5, 0.0)]);
    assert_eq!(t.vel_weights, vec![c(1.0, 0.0)]);
    assert_eq!(t.pos_weights, vec![c(0.5, 0.0)]);
}

#[test]
fn adjoint_and_conjugate() {
    let ar1 = find_method("AR1").unwrap();
    assert_eq!(ar1.adjoint().adjoint(), ar1);
    assert!(!ar1.is_skew_symmetric(1e-12));
    for name in ["AC1", "AC2", "BC1", "BC2", "OPT6"] {
        let m = find_method(name).unwrap();
        assert!(m.is_skew_symmetric(1e-12), "{name}");
        assert!(max_diff(m.conjugate().alpha(), m.adjoint().alpha()) < 1e-12);
        assert!(max_diff(m.conjugate().beta(), m.adjoint().beta()) < 1e-12);
    }
    assert!(find_method("LEAPFROG").unwrap().is_skew_symmetric(1e-12));
    assert!(find_method("TRIPLEJUMP").unwrap().is_skew_symmetric(1e-12));
}

#[test]
fn completion_values() {
    let ac1 = find_method("AC1").unwrap();
    let beta3 = ac1.beta()[2];
    assert_eq!(beta3.im, 0.0);
    assert!((beta3.re - (1.0 - 2.0 * (0.17526734338348050 + 0.18488007701471166))).abs() < 1e-16);
    assert!((beta3.re - 0.2797051592).abs() < 1e-10);
    assert!((ac1.alpha()[3] - c(0.23302619641239692, 0.097952003128893425)).norm() < 1e-17);
    let bc1 = find_method("BC1").unwrap();
    assert_eq!(bc1.alpha()[2].im, 0.0);
    assert!((bc1.alpha()[2].re - 0.29929785).abs() < 1e-8);
    let opt6 = find_method("OPT6").unwrap();
    assert_eq!(opt6.alpha()[0], c(0.101907705405177865, 0.130701756906677735));
}

#[test]
fn catalog_contents() {
    let names: Vec<String> = builtin_catalog().iter().map(|r| r.name().to_string()).collect();
    assert_eq!(names.len(), 13);
    let chambers = find_method("CHAMBERS3").unwrap();
    assert_eq!(chambers.stages(), 2);
    assert!(!chambers.is_real());
    assert!(chambers.has_positive_real_parts());
    let tj = find_method("TRIPLEJUMP").unwrap();
    let w1 = 1.0 / (2.0 - 2f64.powf(1.0 / 3.0));
    assert!((tj.beta()[0].re - w1 / 2.0).abs() < 1e-15);
}

#[test]
fn method_files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for rec in builtin_catalog() {
        let path = dir.path().join(format!("{}.json", rec.name()));
        save_method(&rec.method, &path).unwrap();
        assert_eq!(load_method(&path).unwrap(), rec.method);
    }
}

#[test]
fn method_file_has_exactly_the_documented_keys() {
    let text = method_to_json(&find_method("AC1").unwrap());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["alpha", "beta", "name", "order", "scheme"]);
    assert_eq!(v["scheme"], "RKNA");
    assert_eq!(v["alpha"].as_array().unwrap().len(), 6);
    let bad = text.replacen("\"order\"", "\"extra\": 1, \"order\"", 1);
    assert!(method_from_json(&bad).is_err());
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(r, i)| c(r, i))
}

fn balanced(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec(coeff(), n - 1).prop_map(|mut v| {
        let rest: Complex64 = v.iter().sum();
        v.push(c(1.0, 0.0) - rest);
        v
    })
}

fn any_method() -> impl Strategy<Value = SplittingMethod> {
    (1usize..7, any::<bool>()).prop_flat_map(|(s, kick_first)| {
        let (na, nb) = if kick_first { (s, s + 1) } else { (s + 1, s) };
        (balanced(na), balanced(nb)).prop_map(move |(a, b)| {
            let scheme = if kick_first { Scheme::Rknb } else { Scheme::Rkna };
            SplittingMethod::new("RANDOM", scheme, 1, a, b).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip_is_exact(m in any_method()) {
        prop_assert_eq!(method_from_json(&method_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn completion_sums_to_one(
        alpha in proptest::collection::vec(coeff(), 1..4),
        beta_full in proptest::collection::vec(coeff(), 1..4),
        shorter in any::<bool>()
    ) {
        // drift-first prefixes have lengths (p, p) or (p, p - 1)
        let p = alpha.len();
        let nb = if shorter && p > 1 { p - 1 } else { p };
        let mut alpha = alpha;
        let mut beta: Vec<Complex64> = beta_full.iter().cycle().take(nb).copied().collect();
        // the sequence of even full length has no middle entry, so its
        // prefix must already carry real part 1/2
        let even = if nb == p { &mut beta } else { &mut alpha };
        let re: f64 = even.iter().map(|z| z.re).sum();
        even[0].re += 0.5 - re;
        let m = complete_coefficients("X", Scheme::Rkna, 1, &alpha, &beta).unwrap();
        let scale = |v: &[Complex64]| 1.0 + v.iter().map(|z| z.norm()).sum::<f64>();
        let sa: Complex64 = m.alpha().iter().sum();
        let sb: Complex64 = m.beta().iter().sum();
        prop_assert!((sa - 1.0).norm() <= 1e-15 * scale(m.alpha()));
        prop_assert!((sb - 1.0).norm() <= 1e-15 * scale(m.beta()));
        prop_assert!(m.is_skew_symmetric(0.0));
    }

    #[test]
    fn tableau_round_trip(m in any_method()) {
        let t = splitting_to_tableau(&m).unwrap();
        let back = tableau_to_splitting(&t, m.scheme(), m.name(), m.order());
        // kick-first layouts need c_1 = 0 and c_s = 1, which a random
        // method only has when its end drifts vanish
        if let Ok(back) = back {
            let scale = 1.0 + m.alpha().iter().chain(m.beta()).map(|z| z.norm()).sum::<f64>();
            prop_assert!(max_diff(back.alpha(), m.alpha()) <= 1e-14 * scale);
            prop_assert!(max_diff(back.beta(), m.beta()) <= 1e-14 * scale);
        }
    }

    #[test]
    fn adjoint_is_an_involution(m in any_method()) {
        prop_assert_eq!(m.adjoint().adjoint(), m.clone());
        prop_assert_eq!(m.conjugate().conjugate(), m);
    }
}

#[test]
fn transforms_preserve_residuals() {
    for rec in builtin_catalog() {
        let order = rec.method.order();
        for t in [rec.method.adjoint(), rec.method.conjugate()] {
            let r = residuals(&splitting_to_tableau(&t).unwrap()).max_norm_for_order(order);
            assert!(r < 1e-10, "{}: {r:e}", t.name());
        }
    }
}
