use rknlab::lie::{method_error, observed_order, scheme_log};
use rknlab::methods::builtin_catalog;

fn main() {
    for rec in builtin_catalog() {
        let z = scheme_log(&rec.method);
        let e = method_error(&rec.method);
        print!("{:<11} order {} |", rec.name(), observed_order(&z, 1e-12));
        for c in e.coefficients {
            print!(" {:>22}", format!("{:.1e}{:+.1e}i", c.re, c.im));
        }
        println!(" | {:.3e}", e.norm);
    }
}
