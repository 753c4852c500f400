//! Truncated photon-number diagonalization of the rescaled Hamiltonian
//! `K = 2x a†a + μσₓ + (a†² + a²)σ_z`, used as ground truth for the
//! analytic methods.
//!
//! `K` preserves photon-number parity and commutes with `τ = σₓ·exp(iπa†a/2)`.
//! In a τ-eigenbasis each parity block splits into two symmetric tridiagonal
//! matrices, whose low eigenvalues are found by Sturm-sequence bisection.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Coupling, Sector};

pub const MIN_TRUNCATION: usize = 16;
pub const MAX_TRUNCATION: usize = 1 << 14;
pub const STABILITY_TOL: f64 = 1e-9;

/// Parity-projected `K` over Fock states `|n⟩`, `n ≡ sector (mod 2)`, with
/// the two spin components interleaved (`row = 2j + spin`).
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub dimension: usize,
    pub sector: Sector,
    pub matrix: DMatrix<f64>,
}

fn fock_index(sector: Sector, j: usize) -> f64 {
    match sector {
        Sector::Even => 2.0 * j as f64,
        Sector::Odd => 2.0 * j as f64 + 1.0,
    }
}

/// Builds the interleaved operator with `n` Fock states per spin component.
pub fn build(coupling: &Coupling, n: usize, sector: Sector) -> TruncatedOperator {
    let x = coupling.x();
    let mu = coupling.mu;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        let f = fock_index(sector, j);
        for spin in 0..2 {
            m[(2 * j + spin, 2 * j + spin)] = 2.0 * x * f;
        }
        m[(2 * j, 2 * j + 1)] = mu;
        m[(2 * j + 1, 2 * j)] = mu;
        if j + 1 < n {
            let t = ((f + 1.0) * (f + 2.0)).sqrt();
            for (spin, sign) in [(0, 1.0), (1, -1.0)] {
                m[(2 * j + spin, 2 * j + 2 + spin)] = sign * t;
                m[(2 * j + 2 + spin, 2 * j + spin)] = sign * t;
            }
        }
    }
    TruncatedOperator { dimension: n, sector, matrix: m }
}

/// Symmetric tridiagonal matrix by its diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// τ-block with `s = ±1` of the given parity sector (for the odd sector
    /// the sign selects `s = ±i`).
    pub fn tau_block(coupling: &Coupling, n: usize, sector: Sector, sign: f64) -> Self {
        let x = coupling.x();
        let diag = (0..n)
            .map(|j| {
                let alt = if j % 2 == 0 { 1.0 } else { -1.0 };
                2.0 * x * fock_index(sector, j) + sign * coupling.mu * alt
            })
            .collect();
        let off = (0..n.saturating_sub(1))
            .map(|j| {
                let f = fock_index(sector, j);
                ((f + 1.0) * (f + 2.0)).sqrt()
            })
            .collect();
        Self { diag, off }
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diag[i] - lambda - if i == 0 { 0.0 } else { b2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        while hi - lo > 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn lowest(&self, count: usize) -> Vec<f64> {
        (0..count.min(self.diag.len())).map(|k| self.eigenvalue(k)).collect()
    }
}

/// Lowest `count` eigenvalues of `K` in a parity sector at truncation `n`.
pub fn sector_energies(coupling: &Coupling, n: usize, sector: Sector, count: usize) -> Vec<f64> {
    let mut all: Vec<f64> = [1.0, -1.0]
        .into_iter()
        .flat_map(|s| Tridiagonal::tau_block(coupling, n, sector, s).lowest(count))
        .collect();
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    all
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSpectrum {
    pub sector: Sector,
    pub chis: Vec<f64>,
    pub energies: Vec<f64>,
    pub truncation_n: usize,
    pub converged_count: usize,
}

/// Doubles the truncation from 64 until the lowest `target_count` values of
/// χ agree with the previous truncation to `1e-9`.
pub fn eigen_chis(coupling: &Coupling, sector: Sector, target_count: usize) -> Result<OracleSpectrum> {
    let mut n = 64.max(4 * target_count).next_power_of_two();
    let mut prev = sector_energies(coupling, n, sector, target_count);
    loop {
        let next_n = 2 * n;
        if next_n > MAX_TRUNCATION {
            return Err(Error::NoConvergence(next_n));
        }
        let next = sector_energies(coupling, next_n, sector, target_count);
        let stable = prev.iter().zip(&next).all(|(a, b)| {
            (coupling.chi_from_energy(*a) - coupling.chi_from_energy(*b)).abs() < STABILITY_TOL
        });
        if stable {
            return Ok(OracleSpectrum {
                sector,
                chis: next.iter().map(|e| coupling.chi_from_energy(*e)).collect(),
                converged_count: next.len(),
                energies: next,
                truncation_n: next_n,
            });
        }
        prev = next;
        n = next_n;
    }
}

/// CSV rows `sector,index,chi,E,truncation_N`.
pub fn write_csv<W: Write>(spectra: &[OracleSpectrum], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
    w.write_record(["sector", "index", "chi", "E", "truncation_N"]).map_err(io)?;
    for s in spectra {
        for (i, (chi, e)) in s.chis.iter().zip(&s.energies).enumerate() {
            w.write_record([
                s.sector.to_string(),
                i.to_string(),
                format!("{chi:.12e}"),
                format!("{e:.12e}"),
                s.truncation_n.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::InvalidConfig(format!("csv write failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coupling(kappa: f64, mu: f64) -> Coupling {
        Coupling::new(kappa, mu).unwrap()
    }

    #[test]
    fn small_block_entries() {
        let k = coupling(0.5, 0.0);
        let op = build(&k, 2, Sector::Even);
        let up = op.matrix.select_rows(&[0, 2]).select_columns(&[0, 2]);
        assert_eq!(up[(0, 0)], 0.0);
        assert!((up[(0, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert!((up[(1, 1)] - 4.0 * k.x()).abs() < 1e-15);
        let k = coupling(0.5, 0.7);
        let op = build(&k, 3, Sector::Odd);
        assert_eq!(op.matrix[(2, 3)], 0.7);
        assert_eq!(op.matrix, op.matrix.transpose());
    }

    #[test]
    fn sturm_matches_dense() {
        for sector in [Sector::Even, Sector::Odd] {
            let k = coupling(0.6, 0.45);
            let n = 40;
            let dense = build(&k, n, sector).matrix.symmetric_eigen();
            let mut ev: Vec<f64> = dense.eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let sturm = sector_energies(&k, n, sector, 10);
            for (a, b) in sturm.iter().zip(&ev) {
                assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} {b}");
            }
        }
    }

    #[test]
    fn decoupled_closed_form() {
        let k = coupling(0.5, 0.0);
        let even = eigen_chis(&k, Sector::Even, 6).unwrap();
        for (i, chi) in even.chis.iter().enumerate() {
            assert!((chi - (1 + i / 2) as f64).abs() < 1e-9, "{i} {chi}");
        }
        let odd = eigen_chis(&k, Sector::Odd, 6).unwrap();
        for (i, chi) in odd.chis.iter().enumerate() {
            assert!((chi - (1.5 + (i / 2) as f64)).abs() < 1e-9, "{i} {chi}");
        }
    }

    #[test]
    fn respects_energy_bound_and_mu_sign() {
        for (kappa, mu) in [(0.5, 1.0 / 3.0), (0.5, 1.0), (0.8, 0.7), (0.3, 2.0)] {
            let k = coupling(kappa, mu);
            let b = k.energy_lower_bound();
            for sector in [Sector::Even, Sector::Odd] {
                let s = eigen_chis(&k, sector, 5).unwrap();
                assert!(s.chis[0] >= b.chi_min - 1e-12);
            }
            let plus = sector_energies(&k, 256, Sector::Even, 5);
            let m = Coupling { mu: -mu, ..k };
            let minus = sector_energies(&m, 256, Sector::Even, 5);
            for (a, b) in plus.iter().zip(&minus) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sectors_disjoint_and_variational() {
        let k = coupling(0.5, 1.0 / 3.0);
        let e = eigen_chis(&k, Sector::Even, 8).unwrap();
        let o = eigen_chis(&k, Sector::Odd, 8).unwrap();
        let gap = e.chis.iter().flat_map(|a| o.chis.iter().map(move |b| (a - b).abs())).fold(f64::INFINITY, f64::min);
        assert!(gap > 1e-3);
        let mut prev = sector_energies(&k, 16, Sector::Even, 4);
        for n in [32, 64, 128] {
            let next = sector_energies(&k, n, Sector::Even, 4);
            for (a, b) in prev.iter().zip(&next) {
                assert!(*b <= *a + 1e-12);
            }
            prev = next;
        }
    }

    #[test]
    fn csv_layout() {
        let k = coupling(0.5, 1.0 / 3.0);
        let s = eigen_chis(&k, Sector::Even, 3).unwrap();
        let mut buf = Vec::new();
        write_csv(&[s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sector,index,chi,E,truncation_N\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
