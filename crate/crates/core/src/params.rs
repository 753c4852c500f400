//! Physical and spectral parametrizations of the two-photon Rabi model.
//!
//! The Hamiltonian `ω a†a + (ω₀/2)σ_z + 2g[(a†)² + a²]σ_x` is rescaled by
//! `2g` after a unitary rotation, leaving the dimensionless operator
//! `K = 2x a†a + μσ_x + [(a†)² + a²]σ_z` with `ω = 4xg` and `ω₀ = 4μg`.
//! Internally everything is expressed through `κ ∈ (0, 1)` with
//! `x = (κ + 1/κ)/2` and the spectral parameter
//! `χ = κ(E + κ) / (2(1 − κ²)) + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible distance of κ from 0 and from 1.
pub const KAPPA_MARGIN: f64 = 1e-6;

/// Which reduced system is being solved: `ψ(z) = f(z²)` (parities ±1) or
/// `ψ(z) = z f(z²)` (parities ±i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Even,
    Odd,
}

impl Sector {
    /// Offset of the spectral parameter at which the exponent at `±κ/2`
    /// becomes an integer: integers for even, half-odd integers for odd.
    pub fn resonance_offset(self) -> f64 {
        match self {
            Sector::Even => 0.0,
            Sector::Odd => 0.5,
        }
    }
}

impl std::str::FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" => Ok(Sector::Even),
            "odd" => Ok(Sector::Odd),
            other => Err(Error::InvalidConfig(format!("unknown sector '{other}'"))),
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sector::Even => "even",
            Sector::Odd => "odd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub omega: f64,
    pub omega0: f64,
    pub g: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) || !(self.omega > 0.0) || !(self.omega0 >= 0.0) {
            return Err(Error::RejectedParameters(format!(
                "need g > 0, omega > 0, omega0 >= 0 (got g={}, omega={}, omega0={})",
                self.g, self.omega, self.omega0
            )));
        }
        Ok(())
    }

    /// `x = ω/(4g)`.
    pub fn x(&self) -> f64 {
        self.omega / (4.0 * self.g)
    }

    /// Converts a dimensionless eigenvalue of `K` to an energy of `H`.
    pub fn energy(&self, e_dimensionless: f64) -> f64 {
        2.0 * self.g * e_dimensionless
    }
}

/// The pair (κ, μ) that fixes the model; χ is the free spectral variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub kappa: f64,
    pub mu: f64,
}

impl Coupling {
    /// Validates κ and folds μ onto μ ≥ 0 (only μ² enters the spectrum).
    pub fn new(kappa: f64, mu: f64) -> Result<Self> {
        if !kappa.is_finite() || !mu.is_finite() {
            return Err(Error::RejectedParameters("non-finite kappa or mu".into()));
        }
        if kappa >= 1.0 {
            return Err(Error::RejectedParameters(format!(
                "kappa = {kappa} >= 1 corresponds to x <= 1, where no normalizable eigenstates exist"
            )));
        }
        if kappa <= KAPPA_MARGIN || kappa >= 1.0 - KAPPA_MARGIN {
            return Err(Error::RejectedParameters(format!(
                "kappa = {kappa} outside ({KAPPA_MARGIN}, {})",
                1.0 - KAPPA_MARGIN
            )));
        }
        Ok(Self { kappa, mu: mu.abs() })
    }

    pub fn from_physical(p: &PhysicalParams) -> Result<Self> {
        p.validate()?;
        let x = p.x();
        if x <= 1.0 {
            return Err(Error::RejectedParameters(format!(
                "x = omega/(4g) = {x} <= 1: growth type |sigma| = 1/2, no normalizable eigenstates"
            )));
        }
        Self::new(kappa_from_x(x), p.omega0 / (4.0 * p.g))
    }

    pub fn x(&self) -> f64 {
        x_from_kappa(self.kappa)
    }

    pub fn at(self, chi: f64, sector: Sector) -> ModelParams {
        ModelParams { chi, kappa: self.kappa, mu: self.mu, sector }
    }

    pub fn chi_from_energy(&self, e: f64) -> f64 {
        chi_from_energy(e, self.kappa)
    }

    pub fn energy_from_chi(&self, chi: f64) -> f64 {
        energy_from_chi(chi, self.kappa)
    }

    pub fn energy_lower_bound(&self) -> EnergyBound {
        energy_lower_bound(self.kappa, self.mu)
    }

    /// The four admissible growth types `±(x ± √(x²−1))/2`.
    pub fn growth_types(&self) -> [f64; 4] {
        let x = self.x();
        let r = (x * x - 1.0).sqrt();
        [0.5 * (x - r), -0.5 * (x - r), 0.5 * (x + r), -0.5 * (x + r)]
    }
}

/// A point (χ, κ, μ) in a definite parity sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub chi: f64,
    pub kappa: f64,
    pub mu: f64,
    pub sector: Sector,
}

impl ModelParams {
    pub fn new(chi: f64, kappa: f64, mu: f64, sector: Sector) -> Result<Self> {
        if !chi.is_finite() {
            return Err(Error::RejectedParameters("non-finite chi".into()));
        }
        Ok(Coupling::new(kappa, mu)?.at(chi, sector))
    }

    pub fn coupling(&self) -> Coupling {
        Coupling { kappa: self.kappa, mu: self.mu }
    }

    pub fn with_chi(self, chi: f64) -> Self {
        Self { chi, ..self }
    }

    pub fn x(&self) -> f64 {
        x_from_kappa(self.kappa)
    }

    /// Dimensionless energy (eigenvalue of K).
    pub fn energy(&self) -> f64 {
        energy_from_chi(self.chi, self.kappa)
    }

    /// Whether χ respects the variational lower bound.
    pub fn respects_bound(&self) -> bool {
        self.chi >= energy_lower_bound(self.kappa, self.mu).chi_min
    }
}

pub fn x_from_kappa(kappa: f64) -> f64 {
    0.5 * (kappa + 1.0 / kappa)
}

/// Root of `x = κ/2 + 1/(2κ)` inside (0, 1), written as `1/(x + √(x²−1))`
/// to avoid cancellation for large x.
pub fn kappa_from_x(x: f64) -> f64 {
    1.0 / (x + ((x - 1.0) * (x + 1.0)).sqrt())
}

pub fn chi_from_energy(e: f64, kappa: f64) -> f64 {
    kappa * (e + kappa) / (2.0 * (1.0 - kappa * kappa)) + 1.0
}

pub fn energy_from_chi(chi: f64, kappa: f64) -> f64 {
    (chi - 1.0) * 2.0 * (1.0 - kappa * kappa) / kappa - kappa
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBound {
    pub e_min: f64,
    pub chi_min: f64,
}

/// `E ≥ −μ − tan η` with `tan η = κ`, and its image in χ.
pub fn energy_lower_bound(kappa: f64, mu: f64) -> EnergyBound {
    EnergyBound {
        e_min: -mu - kappa,
        chi_min: 1.0 - mu * kappa / (2.0 * (1.0 - kappa * kappa)),
    }
}

/// Growth order and type of an entire function, `ln M(r) ~ σ r^ϱ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    /// Order ϱ of ψ(z).
    pub order: f64,
    /// Modulus of the type σ (shared by f(ξ) and ψ(z) = f(z²)).
    pub type_modulus: f64,
}

impl GrowthEstimate {
    /// Bargmann-space admissibility: order below 2, or order 2 with |σ| < 1/2.
    /// `order_tol` absorbs finite-n bias in the order estimate.
    pub fn is_admissible(&self, order_tol: f64) -> bool {
        if self.order < 2.0 - order_tol {
            true
        } else {
            self.type_modulus < 0.5
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn physical_to_spectral() {
        let c = Coupling::from_physical(&PhysicalParams { omega: 5.0, omega0: 4.0 / 3.0, g: 1.0 })
            .unwrap();
        assert_relative_eq!(c.x(), 1.25, epsilon = 1e-15);
        assert_relative_eq!(c.mu, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.kappa, 0.5, epsilon = 1e-15);

        let c = Coupling::from_physical(&PhysicalParams { omega: 8.0, omega0: 0.0, g: 1.0 })
            .unwrap();
        assert_relative_eq!(c.kappa, 2.0 - 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn x_equal_one_is_rejected() {
        let err = Coupling::from_physical(&PhysicalParams { omega: 4.0, omega0: 1.0, g: 1.0 })
            .unwrap_err();
        assert!(matches!(err, Error::RejectedParameters(_)));
        assert_eq!(err.exit_code(), 2);
        assert!(Coupling::new(1.2, 0.3).is_err());
        assert!(Coupling::new(1.0 - 1e-8, 0.3).is_err());
    }

    #[test]
    fn negative_mu_is_folded() {
        assert_eq!(Coupling::new(0.5, -0.25).unwrap().mu, 0.25);
    }

    #[test]
    fn chi_energy_examples() {
        for k in [0.1, 0.5, 0.9] {
            assert_relative_eq!(chi_from_energy(-k, k), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(chi_from_energy(1.0, 0.5), 1.5, epsilon = 1e-15);
        assert_relative_eq!(energy_from_chi(2.0, 0.5), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn bound_examples() {
        let b = energy_lower_bound(0.5, 0.0);
        assert_relative_eq!(b.e_min, -0.5);
        assert_relative_eq!(b.chi_min, 1.0);
        assert_relative_eq!(energy_lower_bound(0.5, 1.0 / 3.0).chi_min, 8.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(energy_lower_bound(0.5, 1.0).e_min, -1.5);
    }

    #[test]
    fn growth_types_are_singular_points() {
        for k in [0.1, 0.3, 0.5, 0.8, 0.95] {
            let c = Coupling::new(k, 0.2).unwrap();
            let mut got = c.growth_types().to_vec();
            let mut want = vec![k / 2.0, -k / 2.0, 1.0 / (2.0 * k), -1.0 / (2.0 * k)];
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert_relative_eq!(g, w, max_relative = 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn chi_round_trip(chi in -10.0f64..10.0, k in 1usize..10) {
            let kappa = k as f64 / 10.0;
            let back = chi_from_energy(energy_from_chi(chi, kappa), kappa);
            prop_assert!((back - chi).abs() <= 1e-14 * chi.abs().max(1.0));
        }

        #[test]
        fn kappa_round_trip(kappa in 1e-3f64..0.9) {
            // dκ/dx diverges at κ = 1, so the exact round trip is checked
            // away from that end.
            let back = kappa_from_x(x_from_kappa(kappa));
            prop_assert!((back - kappa).abs() <= 1e-14 * kappa);
        }
    }
}
