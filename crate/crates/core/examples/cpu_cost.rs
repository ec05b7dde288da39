//! Per-step cost on a Plummer sphere, relative to leapfrog.
//!
//! Usage: cpu_cost [N] [STEPS]

use rknlab::bench::{cpu_bench, normalize};
use rknlab::methods::find_method;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse().expect("N")).unwrap_or(1000);
    let steps: usize = args.next().map(|s| s.parse().expect("STEPS")).unwrap_or(4);
    let results: Vec<_> = ["LEAPFROG", "TRIPLEJUMP", "BR1", "AC1", "OPT6"]
        .iter()
        .map(|name| cpu_bench(&find_method(name).unwrap(), n, steps, 0).expect("benchmark failed"))
        .collect();
    let relative = normalize(&results, "LEAPFROG").unwrap();
    for (r, (_, rel)) in results.iter().zip(relative) {
        println!(
            "{:<11} {:>7} {:>5.2} evals/step {:>12.0} ns/step {:>6.2}x",
            r.method,
            if r.complex_arithmetic { "complex" } else { "real" },
            r.force_evaluations_per_step,
            r.ns_per_step,
            rel
        );
    }
}
