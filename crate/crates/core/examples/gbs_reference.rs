//! Gragg-Bulirsch-Stoer reference on the Kepler orbit against the closed
//! form, over a range of tolerances.

use rknlab::problems::{kepler_exact, kepler_init, KeplerSetup};
use rknlab::reference::{gbs_integrate, GbsConfig};

fn main() {
    let setup = KeplerSetup::default();
    let t = setup.period();
    let times: Vec<f64> = (1..=4).map(|k| k as f64 * t / 4.0).collect();
    for tol in [1e-6, 1e-8, 1e-10, 1e-12, 1e-13] {
        let (states, stats) =
            gbs_integrate(&setup.field(), &kepler_init(&setup), t, &GbsConfig::with_tol(tol), &times)
                .expect("integration failed");
        let err = states
            .iter()
            .map(|s| {
                let e = kepler_exact(&setup, s.t);
                s.q.iter().chain(&s.v).zip(e.q.iter().chain(&e.v)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        println!(
            "tol {tol:.0e}: max deviation {err:.2e}, {} steps ({} rejected), {} force evaluations",
            stats.accepted, stats.rejected, stats.force_evaluations
        );
    }
}
