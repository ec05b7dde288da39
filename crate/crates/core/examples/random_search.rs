//! Seeded multistart Newton search for fifth-order methods.
//!
//! Usage: random_search [RKNA|RKNB] [STARTS] [SEED] [OUT_DIR]

use std::time::Instant;

use rknlab::conditions::{export_solutions, random_search, SearchConfig};
use rknlab::methods::Scheme;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scheme: Scheme = args.first().map_or("RKNA", String::as_str).parse().expect("scheme");
    let starts = args.get(1).map_or(Ok(2000), |s| s.parse()).expect("starts");
    let seed = args.get(2).map_or(Ok(7), |s| s.parse()).expect("seed");
    let cfg = SearchConfig::new(scheme, starts, seed);

    let t0 = Instant::now();
    let found = random_search(&cfg);
    println!(
        "{} distinct solutions from {} starts in {:.1} s",
        found.len(),
        starts,
        t0.elapsed().as_secs_f64()
    );
    for sol in &found {
        let f = &sol.flags;
        println!(
            "{:<10} hits {:>4}  real {:<5} pos-real {:<5} imag-error {:<5} |err| {:.2e}  {}",
            sol.method.name(),
            sol.hits,
            f.real,
            f.positive_real_parts,
            f.imaginary_leading_error,
            sol.error.norm,
            sol.matches.as_deref().unwrap_or("")
        );
    }
    if let Some(dir) = args.get(3) {
        export_solutions(dir, &found, &cfg).expect("export failed");
        println!("wrote {dir}/index.json");
    }
}
