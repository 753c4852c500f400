use rabi_spectrum::params::Sector;
use rabi_spectrum::scan::{self, Method, ScanConfig};

const ALL: [Method; 3] = [Method::Holonomy, Method::Factorial, Method::Oracle];

/// Odd-parity spectrum at κ = 1/2, μ = 1/3 from all three methods.
fn main() -> rabi_spectrum::error::Result<()> {
    let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Odd, (0.5, 4.5), 500).with_methods(&ALL);
    let report = scan::compare_methods(&cfg)?;
    for method in ALL {
        let chis: Vec<String> = report.roots_of(method).iter().map(|c| format!("{c:.10}")).collect();
        println!("{method:>9}: {}", chis.join(" "));
    }
    for d in report.method_discrepancies.iter().filter(|d| d.method_a == Method::Holonomy) {
        match d.delta {
            Some(delta) => println!("χ = {:.6}: |Δχ| vs {} = {delta:.1e}", d.chi_a, d.method_b),
            None => println!("χ = {:.6}: no partner from {}", d.chi_a, d.method_b),
        }
    }
    Ok(())
}
