//! The spectral determinant `W(χ) = det[e, σₓe]`.
//!
//! `e` is the initial vector at `u = 0` of the solution with the non-trivial
//! local behaviour at `+κ/2`. Reflection symmetry then places `σₓe` in the
//! same role at `−κ/2`, and `W` vanishes exactly when one solution does both.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holonomy::{self, cauchy_eval, Classification, ContourPath, HolonomyData};
use crate::linalg::{self, c, sigma_x, C2Vector, ZERO};
use crate::mellin::{MellinSystem, SingularPoint};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Generic,
    Jordan,
    /// Identity holonomy with a negative exponent at `κ/2`: both parity
    /// vectors are admissible (Emary-Bishop state) and `W` is set to zero.
    IdentityPositive,
    /// Identity holonomy with a non-negative exponent at `κ/2`: `e` is the
    /// null vector of the Cauchy value `V(κ/2)`.
    IdentityNegative,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Generic => "generic",
            Branch::Jordan => "jordan",
            Branch::IdentityPositive => "identity_positive",
            Branch::IdentityNegative => "identity_negative",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeterminantSample {
    pub chi: f64,
    pub w: Complex64,
    pub branch: Branch,
    pub e: [Complex64; 2],
}

impl DeterminantSample {
    pub fn e_vector(&self) -> C2Vector {
        C2Vector::new(self.e[0], self.e[1])
    }
}

/// `det[e, σₓe] = e₁² − e₂²`.
pub fn det_with_reflection(e: &C2Vector) -> Complex64 {
    e[0] * e[0] - e[1] * e[1]
}

fn identity_branch(sys: &MellinSystem) -> Branch {
    if sys.resonant_exponent() < -0.5 {
        Branch::IdentityPositive
    } else {
        Branch::IdentityNegative
    }
}

/// Extracts the normalized vector `e` and the branch it came from.
pub fn eigenvector_e(h: &HolonomyData, sys: &MellinSystem) -> Result<(C2Vector, Branch)> {
    match h.classification {
        Classification::Generic | Classification::Jordan => {
            // (F − 𝟙) maps everything into the eigenspace of the other
            // eigenvalue, and onto the single eigenvector for a Jordan block.
            let m = h.f_plus - linalg::identity();
            let v = linalg::dominant_column(&m);
            let branch = if h.classification == Classification::Generic { Branch::Generic } else { Branch::Jordan };
            Ok((linalg::normalize(&v), branch))
        }
        Classification::Identity => match identity_branch(sys) {
            Branch::IdentityPositive => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Ok((C2Vector::new(c(s, 0.0), c(s, 0.0)), Branch::IdentityPositive))
            }
            _ => {
                let v = cauchy_eval(sys, h)?;
                let (e, _) = linalg::null_vector(&v);
                Ok((e, Branch::IdentityNegative))
            }
        },
    }
}

/// One loop integration, classification and eigenvector extraction. An
/// ambiguous classification is retried with a tenfold tighter tolerance
/// while that stays within the admissible range.
pub fn determinant_w(params: &ModelParams, tol: f64) -> Result<DeterminantSample> {
    let sys = MellinSystem::new(*params);
    let mut tol = tol;
    let h = loop {
        match holonomy::holonomy(&sys, tol) {
            Err(Error::AmbiguousClassification { .. }) if tol >= 1e-12 => tol /= 10.0,
            other => break other?,
        }
    };
    let (e, branch) = eigenvector_e(&h, &sys)?;
    let w = if branch == Branch::IdentityPositive { ZERO } else { det_with_reflection(&e) };
    Ok(DeterminantSample { chi: params.chi, w, branch, e: [e[0], e[1]] })
}

/// `det Y(u)` for `Y(0) = 𝟙` from the local exponents at `κ/2` and `1/(2κ)`,
/// valid on the real segment `|u| < κ/2`.
pub fn wronskian_prefactor(sys: &MellinSystem, u: f64) -> f64 {
    let k = sys.kappa();
    let at_half = sys.exponents(SingularPoint::HalfKappa)[1];
    let at_inverse = sys.exponents(SingularPoint::InverseKappa)[1];
    (1.0 - 4.0 * k * k * u * u).powf(at_inverse) * (1.0 - 4.0 * u * u / (k * k)).powf(at_half)
}

/// Integrates the solutions with initial vectors `e` and `σₓe` to `u_sample`
/// and compares their Wronskian, stripped of the closed-form prefactor, with
/// `W`. Returns `|Wr/prefactor − W| / (|W| + 1e-300)`.
pub fn wronskian_crosscheck(params: &ModelParams, sample: &DeterminantSample, u_sample: f64, tol: f64) -> Result<f64> {
    let sys = MellinSystem::new(*params);
    if u_sample.abs() >= 0.5 * sys.kappa() {
        return Err(Error::InvalidConfig(format!("u_sample {u_sample} must satisfy |u| < kappa/2")));
    }
    let y = holonomy::integrate_fundamental(&sys, &ContourPath::segment(c(u_sample, 0.0)), tol)?;
    let e = sample.e_vector();
    let v1 = y * e;
    let v2 = y * (sigma_x() * e);
    let wr = v1[0] * v2[1] - v1[1] * v2[0];
    let w = det_with_reflection(&e);
    Ok((wr / wronskian_prefactor(&sys, u_sample) - w).norm() / (w.norm() + 1e-300))
}

/// Wronskian of the solutions with initial vectors `e` and `σₓe` at `u_sample`.
pub fn wronskian_at(params: &ModelParams, e: &C2Vector, u_sample: f64, tol: f64) -> Result<Complex64> {
    let sys = MellinSystem::new(*params);
    let y = holonomy::integrate_fundamental(&sys, &ContourPath::segment(c(u_sample, 0.0)), tol)?;
    let v1 = y * e;
    let v2 = y * (sigma_x() * e);
    Ok(v1[0] * v2[1] - v1[1] * v2[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::Eigenpair;
    use crate::linalg::{C2Matrix, ONE};
    use crate::params::Sector;
    use std::f64::consts::PI;

    fn data(f: C2Matrix, classification: Classification) -> HolonomyData {
        HolonomyData { f_plus: f, classification, eigenpairs: Vec::<Eigenpair>::new(), integrator_tolerance: 1e-12 }
    }

    fn params(chi: f64) -> ModelParams {
        ModelParams::new(chi, 0.5, 1.0 / 3.0, Sector::Even).unwrap()
    }

    #[test]
    fn diagonal_holonomy_gives_first_axis() {
        let f = C2Matrix::new(c(0.0, -2.0 * PI * 1.3).exp(), ZERO, ZERO, ONE);
        let sys = MellinSystem::new(params(1.3));
        let (e, branch) = eigenvector_e(&data(f, Classification::Generic), &sys).unwrap();
        assert_eq!(branch, Branch::Generic);
        assert!((e - C2Vector::new(ONE, ZERO)).norm() < 1e-15);
        assert!((det_with_reflection(&e) - ONE).norm() < 1e-15);
    }

    #[test]
    fn symmetric_eigenvector_gives_zero() {
        // F = 𝟙 + (λ−1) P with P the projector on [1, 1]/√2.
        let lam = c(0.0, -2.0 * PI * 1.3).exp();
        let p = C2Matrix::new(c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0));
        let f = linalg::identity() + p * (lam - ONE);
        let sys = MellinSystem::new(params(1.3));
        let (e, _) = eigenvector_e(&data(f, Classification::Generic), &sys).unwrap();
        assert!(det_with_reflection(&e).norm() < 1e-15);
    }

    #[test]
    fn e_is_an_eigenvector_of_the_integrated_holonomy() {
        let p = params(1.2);
        let sys = MellinSystem::new(p);
        let h = holonomy::holonomy(&sys, 1e-12).unwrap();
        let (e, _) = eigenvector_e(&h, &sys).unwrap();
        let lam = c(0.0, -2.0 * PI * 1.2).exp();
        assert!((h.f_plus * e - e * lam).norm() < 1e-8);
        assert!((linalg::vnorm(&e) - 1.0).abs() < 1e-14);
        let pivot = if e[0].norm() >= e[1].norm() { e[0] } else { e[1] };
        assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
    }

    #[test]
    fn w_is_real_for_real_parameters() {
        for chi in [1.2, 2.5, 3.7] {
            let s = determinant_w(&params(chi), 1e-12).unwrap();
            assert!(s.w.im.abs() < 1e-8, "{chi}: {}", s.w);
        }
    }

    #[test]
    fn wronskian_matches_w() {
        let p = params(1.2);
        let s = determinant_w(&p, 1e-12).unwrap();
        assert!(wronskian_crosscheck(&p, &s, 0.0, 1e-12).unwrap() < 1e-15);
        assert!(wronskian_crosscheck(&p, &s, 0.1, 1e-12).unwrap() < 1e-7);
        assert!(wronskian_crosscheck(&p, &s, -0.2, 1e-12).unwrap() < 1e-7);
        assert!(wronskian_crosscheck(&p, &s, 0.3, 1e-12).is_err());
    }

    #[test]
    fn wronskian_vanishes_at_a_root() {
        // Lowest even eigenvalue for κ = 1/2, μ = 1/3.
        let p = params(0.910_967_606_193_101);
        let s = determinant_w(&p, 1e-12).unwrap();
        assert!(s.w.norm() < 1e-7, "{}", s.w);
        for u in [0.05, 0.12, 0.2] {
            assert!(wronskian_at(&p, &s.e_vector(), u, 1e-12).unwrap().norm() < 1e-8);
        }
    }

    #[test]
    fn emary_bishop_branch() {
        let p = ModelParams::new(2.0, 0.5, 1.0, Sector::Even).unwrap();
        let s = determinant_w(&p, 1e-12).unwrap();
        assert_eq!(s.branch, Branch::IdentityPositive);
        assert_eq!(s.w, ZERO);
    }

    #[test]
    fn identity_with_non_negative_exponent_uses_cauchy_vector() {
        let p = ModelParams::new(-0.5, 0.5, 1.0, Sector::Odd).unwrap();
        let s = determinant_w(&p, 1e-12).unwrap();
        assert_eq!(s.branch, Branch::IdentityNegative);
        assert!((linalg::vnorm(&s.e_vector()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn continuous_across_integers() {
        for k in [2.0, 3.0] {
            let w = |chi: f64| determinant_w(&params(chi), 1e-12).unwrap().w;
            let (a, m, b) = (w(k - 1e-7), w(k), w(k + 1e-7));
            assert!((a - m).norm() < 1e-4 && (b - m).norm() < 1e-4, "{k}: {a} {m} {b}");
        }
    }
}
