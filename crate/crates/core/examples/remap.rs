//! κ = 0.8 lies beyond 1/√2, where the factorial series needs the
//! `w = (2u/κ)^p` remapping. The three methods should still agree.

use rabi_spectrum::factorial::method_for;
use rabi_spectrum::params::{ModelParams, Sector};
use rabi_spectrum::scan::{self, Method, ScanConfig};

fn main() -> rabi_spectrum::error::Result<()> {
    println!("series evaluation: {:?}", method_for(&ModelParams::new(1.3, 0.8, 1.0 / 3.0, Sector::Even)?));
    let report = scan::compare_methods(&ScanConfig::new(0.8, 1.0 / 3.0, Sector::Even, (0.5, 3.5), 300).with_methods(&[Method::Holonomy, Method::Factorial, Method::Oracle]))?;
    for r in &report.roots {
        println!("{:>9} χ = {:.12}", r.method, r.chi);
    }
    for pair in [(Method::Holonomy, Method::Factorial), (Method::Holonomy, Method::Oracle)] {
        println!("{} vs {}: {:.2e}", pair.0, pair.1, report.max_discrepancy(pair.0, pair.1).unwrap_or(f64::NAN));
    }
    Ok(())
}
