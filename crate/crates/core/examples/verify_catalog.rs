//! Order-condition residuals and tableau canonicity for every catalog method.

use rknlab::conditions::residuals;
use rknlab::methods::{builtin_catalog, splitting_to_tableau};

fn main() {
    println!("{:<11} {:>5} {:>6} {:>10} {:>10}", "method", "order", "stages", "residual", "canonic");
    for rec in builtin_catalog() {
        let m = &rec.method;
        let t = splitting_to_tableau(m).expect("catalog methods convert");
        let r = residuals(&t).max_norm_for_order(m.order());
        println!(
            "{:<11} {:>5} {:>6} {:>10.1e} {:>10.1e}",
            m.name(),
            m.order(),
            m.stages(),
            r,
            t.canonicity_defect()
        );
    }
}
