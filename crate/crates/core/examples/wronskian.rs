//! Cross-check of W against a Wronskian evaluated at interior points of the
//! segment between the singular points `±κ/2`.

use rabi_spectrum::determinant::{determinant_w, wronskian_crosscheck};
use rabi_spectrum::holonomy::DEFAULT_TOL;
use rabi_spectrum::params::{ModelParams, Sector};

fn main() -> rabi_spectrum::error::Result<()> {
    let params = ModelParams::new(1.3, 0.4, 0.7, Sector::Even)?;
    let sample = determinant_w(&params, DEFAULT_TOL)?;
    println!("W = {:+.12e}", sample.w.re);
    for u in [-0.15, 0.0, 0.05, 0.17] {
        println!("u = {u:+.2}  |W − W_wronskian| = {:.2e}", wronskian_crosscheck(&params, &sample, u, DEFAULT_TOL)?);
    }
    Ok(())
}
