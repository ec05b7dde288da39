//! One Kepler period with a complex method, with and without discarding the
//! imaginary parts after each step.
//!
//! Usage: complex_integration [METHOD] [STEPS]

use num_complex::Complex64;
use rknlab::integrate::{integrate, plan, IntegrateOptions, Projection};
use rknlab::methods::find_method;
use rknlab::problems::{kepler_exact, kepler_init, KeplerSetup};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "AC1".into());
    let steps: usize = args.next().map(|s| s.parse().expect("STEPS")).unwrap_or(50);
    let method = find_method(&name).expect("unknown method");
    let setup = KeplerSetup::default();
    let t = setup.period();
    let exact = kepler_exact(&setup, t);
    let s0 = kepler_init(&setup).lift::<Complex64>();
    for projection in [Projection::None, Projection::DiscardImaginary] {
        let mut max_imag: f64 = 0.0;
        let opts = IntegrateOptions { projection, fsal: true };
        let (s, stats) = integrate(&plan(&method), &setup.field(), &s0, t / steps as f64, steps, opts, |_, s| {
            max_imag = max_imag.max(s.max_imag());
        })
        .expect("integration failed");
        let err = s.q.iter().zip(&exact.q).map(|(a, b)| (a.re - b).powi(2)).sum::<f64>().sqrt();
        println!(
            "{projection:?}: position error {err:.3e}, largest imaginary part {max_imag:.1e}, {} force evaluations",
            stats.force_evaluations
        );
    }
}
