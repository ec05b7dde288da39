//! Global-error convergence on the e = 0.2 Kepler orbit over fifty periods.
//!
//! Usage: kepler_convergence [METHOD ...]

use rknlab::bench::{convergence_run, log_grid, slope_fit, ConvergenceSettings, Problem, SLOPE_WINDOW};
use rknlab::methods::find_method;
use rknlab::problems::KeplerSetup;

fn main() {
    let mut names: Vec<String> = std::env::args().skip(1).collect();
    if names.is_empty() {
        names = ["LEAPFROG", "TRIPLEJUMP", "CHAMBERS3", "BR1", "AC1"].map(String::from).to_vec();
    }
    let setup = KeplerSetup::default();
    let period = setup.period();
    let problem = Problem::Kepler { setup };
    let settings = ConvergenceSettings::new(50.0 * period);
    for name in names {
        let method = find_method(&name).expect("unknown method");
        let hs = log_grid(period / 2000.0, period / 20.0, 13);
        let records = convergence_run(&method, &problem, &hs, &settings).expect("run failed");
        println!("{name}");
        for r in &records {
            println!(
                "  h = {:.3e}  err_q IQR = {:.3e}  err_v IQR = {:.3e}{}",
                r.stepsize,
                r.err_q_iqr,
                r.err_v_iqr,
                r.failure.as_deref().map(|f| format!("  FAILED: {f}")).unwrap_or_default()
            );
        }
        match slope_fit(&records, SLOPE_WINDOW) {
            Ok(s) => println!("  slope {s:.2}"),
            Err(e) => println!("  slope: {e}"),
        }
    }
}
