//! Growth of the Taylor coefficients at the origin.
//!
//! Off an eigenvalue the coefficients follow the dominant type `1/(4κ²)`;
//! at an eigenvalue (refined in double-double by the rank method) they
//! follow the subdominant type `κ²`.

use rabi_spectrum::factorial::refine_rank_root;
use rabi_spectrum::params::{ModelParams, Sector};
use rabi_spectrum::recurrence::{generate, generate_at, growth_estimate, Parity};
use twofloat::TwoFloat;

fn main() -> rabi_spectrum::error::Result<()> {
    let base = ModelParams::new(1.5, 0.5, 1.0 / 3.0, Sector::Even)?;
    println!("admissible types: {:?}", base.coupling().growth_types());

    let generic = generate(&base, Parity::Minus, 60)?;
    println!("χ = 1.5        {:?}", growth_estimate(&generic, 10..40)?);

    let root = refine_rank_root(&base, Parity::Minus, 0.9107, 0.9112, 20, 40, 1e-15)?;
    let at_root = generate_at(&base, TwoFloat::new_add(root.chi, root.chi_low), Parity::Minus, 60)?;
    println!("χ = {:.10} {:?}", root.chi, growth_estimate(&at_root, 10..40)?);
    Ok(())
}
