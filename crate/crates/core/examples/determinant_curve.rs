//! Scans W(χ) for κ = 1/2, μ = 1/3 in the even sector and writes the two
//! files the plotting scripts read.
//!
//! Usage: `cargo run --release --example determinant_curve [OUT_DIR]`

use std::fs::File;
use std::path::PathBuf;

use rabi_spectrum::params::Sector;
use rabi_spectrum::scan::{self, Method, ScanConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Even, (0.5, 4.5), 500)
        .with_methods(&[Method::Holonomy, Method::Oracle]);
    let report = scan::scan(&cfg)?;

    let csv_path = out_dir.join("w_curve_even.csv");
    let json_path = out_dir.join("w_roots_even.json");
    scan::write_samples_csv(&report.samples, File::create(&csv_path)?)?;
    scan::write_roots_json(&report, File::create(&json_path)?)?;

    println!("{} samples -> {}", report.samples.len(), csv_path.display());
    for chi in report.roots_of(Method::Holonomy) {
        println!("root χ = {chi:.12}");
    }
    if let Some(d) = report.max_discrepancy(Method::Holonomy, Method::Oracle) {
        println!("max |χ_holonomy − χ_oracle| = {d:.2e}");
    }
    Ok(())
}
