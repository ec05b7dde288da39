//! Extend AC1 by one stage and minimize its sixth-order error.

use std::time::Instant;

use rknlab::conditions::{optimize_six_stage, OptimizeOptions};
use rknlab::lie::method_error;
use rknlab::methods::{find_method, method_to_json};

fn main() {
    let base_name = std::env::args().nth(1).unwrap_or_else(|| "AC1".into());
    let base = find_method(&base_name).expect("unknown method");
    let start = Instant::now();
    let out = match optimize_six_stage(&base, &OptimizeOptions::default()) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    println!("base error norm      {:.3e}", out.base_error.norm);
    println!("optimized error norm {:.3e}", out.error.norm);
    println!("order residual       {:.1e}", out.residual);
    println!(
        "{} charts, {} iterations, {} evaluations, {:.1} s",
        out.rounds,
        out.iterations,
        out.evaluations,
        start.elapsed().as_secs_f64()
    );
    println!("printed OPT6 norm    {:.3e}", method_error(&find_method("OPT6").unwrap()).norm);
    print!("{}", method_to_json(&out.method));
}
