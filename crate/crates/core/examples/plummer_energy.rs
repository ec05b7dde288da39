//! Energy error of a Plummer sphere integrated with a chosen method.
//!
//! Usage: plummer_energy [METHOD] [N] [H] [DURATION] [SEED]

use num_complex::Complex64;
use rknlab::integrate::{integrate, plan, IntegrateOptions, Projection};
use rknlab::methods::find_method;
use rknlab::problems::{energy, plummer_sample, GravityField, PLUMMER_SOFTENING};

fn arg<T: std::str::FromStr>(v: Option<String>, default: T) -> T {
    v.map(|s| s.parse().ok().expect("bad argument")).unwrap_or(default)
}

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "LEAPFROG".into());
    let n: usize = arg(args.next(), 100);
    let h: f64 = arg(args.next(), 0.01);
    let duration: f64 = arg(args.next(), 2.0);
    let seed: u64 = arg(args.next(), 0);
    let method = find_method(&name).expect("unknown method");
    let s0 = plummer_sample(n, seed);
    let field = GravityField::for_state(&s0, PLUMMER_SOFTENING);
    let e0 = energy(&field, &s0);
    let steps = (duration / h).round() as usize;
    let every = (steps / 10).max(1);
    let opts = IntegrateOptions { projection: Projection::DiscardImaginary, fsal: true };
    let mut worst: f64 = 0.0;
    println!("N = {n}, softening {PLUMMER_SOFTENING}, E0 = {e0:.6}");
    integrate(&plan(&method), &field, &s0.lift::<Complex64>(), h, steps, opts, |k, s| {
        let rel = ((energy(&field, s).re - e0) / e0).abs();
        worst = worst.max(rel);
        if (k + 1) % every == 0 {
            println!("  t = {:6.3}  |dE/E| = {rel:.3e}", s.t);
        }
    })
    .expect("integration failed");
    println!("max |dE/E| = {worst:.3e}");
}
