//! At μ = 1 the point χ = 2 carries a closed-form (Emary–Bishop) eigenstate
//! and the monodromy collapses to the identity. W is sampled on both sides
//! and at the point itself.

use rabi_spectrum::determinant::determinant_w;
use rabi_spectrum::holonomy::DEFAULT_TOL;
use rabi_spectrum::params::{ModelParams, Sector};

fn main() -> rabi_spectrum::error::Result<()> {
    for chi in [1.99, 1.9999, 2.0, 2.0001, 2.01] {
        let s = determinant_w(&ModelParams::new(chi, 0.5, 1.0, Sector::Even)?, DEFAULT_TOL)?;
        println!("χ = {chi:<7} W = {:+.6e}  branch = {}", s.w.re, s.branch.as_str());
    }
    Ok(())
}
