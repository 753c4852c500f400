//! Factorial-series method: eigenvalues as the zeros of the 2×2 minors that
//! couple the Taylor coefficients at the origin to the factorial coefficients
//! at `κ/2`.

use rabi_spectrum::factorial::{method_for, rank_roots, DEFAULT_EPS_RANK, DEFAULT_N0, SECOND_N0};
use rabi_spectrum::params::{ModelParams, Sector};

fn main() -> rabi_spectrum::error::Result<()> {
    let base = ModelParams::new(1.0, 0.5, 1.0 / 3.0, Sector::Even)?;
    println!("series evaluation: {:?}", method_for(&base));
    for root in rank_roots(&base, 0.5, 4.5, 200, DEFAULT_N0, SECOND_N0, DEFAULT_EPS_RANK)? {
        println!(
            "χ = {:.12}  parity {:?}  minors(n0={}) ≤ {:.1e}  minors(n0={}) ≤ {:.1e}",
            root.chi,
            root.parity,
            root.at_n0.n0,
            root.at_n0.max_minor(),
            root.at_second.n0,
            root.at_second.max_minor()
        );
    }
    Ok(())
}
