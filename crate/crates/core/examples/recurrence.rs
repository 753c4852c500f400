//! Taylor coefficients of the even-sector solution at the origin for both
//! parities, written as CSV to standard output.

use rabi_spectrum::params::{ModelParams, Sector};
use rabi_spectrum::recurrence::{generate, write_csv, Parity};

fn main() -> rabi_spectrum::error::Result<()> {
    let params = ModelParams::new(1.2, 0.5, 1.0 / 3.0, Sector::Even)?;
    for parity in [Parity::Plus, Parity::Minus] {
        let seq = generate(&params, parity, 12)?;
        let worst = (1..seq.len()).map(|n| seq.residual(&params, n)).fold(0.0, f64::max);
        eprintln!("{parity:?}: max recurrence residual {worst:.1e}");
        write_csv(&seq, std::io::stdout().lock())?;
    }
    Ok(())
}
