//! Monodromy of the Mellin system around `+κ/2`.
//!
//! Prints F₊, its eigenvalues and the classification, then checks that the
//! determinant equals `exp(2πiν)` and that shrinking the loop leaves F₊ unchanged.

use std::f64::consts::PI;

use num_complex::Complex64;
use rabi_spectrum::holonomy::{holonomy, integrate_fundamental, ContourPath, DEFAULT_TOL};
use rabi_spectrum::linalg;
use rabi_spectrum::mellin::MellinSystem;
use rabi_spectrum::params::{ModelParams, Sector};

fn main() -> rabi_spectrum::error::Result<()> {
    let params = ModelParams::new(1.7, 0.5, 1.0 / 3.0, Sector::Even)?;
    let sys = MellinSystem::new(params);
    let data = holonomy(&sys, DEFAULT_TOL)?;

    println!("F+ = {}", data.f_plus);
    for pair in &data.eigenpairs {
        println!("eigenvalue {:.12}  |λ| = {:.3e}", pair.value, pair.value.norm());
    }
    println!("classification: {:?}", data.classification);

    let expected = (Complex64::i() * 2.0 * PI * sys.resonant_exponent()).exp();
    println!("|det F+ − exp(2πiν)| = {:.2e}", (data.f_plus.determinant() - expected).norm());

    let small = ContourPath::loop_with_radius(&sys, 0.2)?;
    let f_small = integrate_fundamental(&sys, &small, DEFAULT_TOL)?;
    println!("radius change moves F+ by {:.2e}", linalg::norm(&(f_small - data.f_plus)));
    Ok(())
}
