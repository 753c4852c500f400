//! Lowest levels of both parity sectors from the truncated Fock basis.

use rabi_spectrum::fock::eigen_chis;
use rabi_spectrum::params::{Coupling, Sector};

fn main() -> rabi_spectrum::error::Result<()> {
    let coupling = Coupling::new(0.5, 1.0 / 3.0)?;
    for sector in [Sector::Even, Sector::Odd] {
        let spectrum = eigen_chis(&coupling, sector, 8)?;
        println!("{sector} sector, converged at N = {}", spectrum.truncation_n);
        for (chi, e) in spectrum.chis.iter().zip(&spectrum.energies) {
            println!("  χ = {chi:.12}  E = {e:+.12}");
        }
    }
    Ok(())
}
