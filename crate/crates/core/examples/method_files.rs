//! Writes a method file, reads it back and derives its adjoint and conjugate.
//!
//! Usage: method_files [METHOD] [OUT_DIR]

use rknlab::lie::method_error;
use rknlab::methods::{find_method, load_method, save_method};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "AC1".into());
    let dir = args.next().unwrap_or_else(|| std::env::temp_dir().display().to_string());
    let m = find_method(&name).expect("unknown method");
    for variant in [m.clone(), m.adjoint(), m.conjugate()] {
        let path = std::path::Path::new(&dir).join(format!("{}.json", variant.name()));
        save_method(&variant, &path).expect("write failed");
        let back = load_method(&path).expect("read failed");
        assert_eq!(back, variant);
        let e = method_error(&back);
        println!(
            "{:<16} skew-symmetric {:<5} error norm {:.3e}  {}",
            back.name(),
            back.is_skew_symmetric(1e-12),
            e.norm,
            path.display()
        );
    }
}
