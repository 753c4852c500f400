//! The linear systems `v′ = M(u) v` satisfied by the Mellin weight functions
//! of the even- and odd-sector coefficient recurrences.
//!
//! Every entry of `M` has the form `(αu + β)/D±(u)` with
//! `D±(u) = 4u² ± 4xu + 1 = 4(u ± κ/2)(u ± 1/(2κ))`, so the finite singular
//! points are `±κ/2` and `±1/(2κ)`; infinity is the fifth regular singular
//! point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, C2Matrix, C2Vector, ZERO};
use crate::params::{ModelParams, Sector};
use crate::series;

/// Default exclusion radius around finite singular points.
pub const DELTA_SING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Denominator {
    /// `4u² + 4xu + 1`, roots `−κ/2`, `−1/(2κ)`.
    Plus,
    /// `4u² − 4xu + 1`, roots `κ/2`, `1/(2κ)`.
    Minus,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    alpha: f64,
    beta: f64,
    denom: Denominator,
}

/// Named finite singular points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SingularPoint {
    /// `+κ/2`, normalizable growth type.
    HalfKappa,
    /// `−κ/2`.
    MinusHalfKappa,
    /// `+1/(2κ)`, non-normalizable growth type.
    InverseKappa,
    /// `−1/(2κ)`.
    MinusInverseKappa,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPointInfo {
    pub point: SingularPoint,
    /// `None` for the point at infinity.
    pub location: Option<f64>,
    pub exponents: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MellinSystem {
    pub params: ModelParams,
}

impl MellinSystem {
    pub fn new(params: ModelParams) -> Self {
        Self { params }
    }

    pub fn sector(&self) -> Sector {
        self.params.sector
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa
    }

    fn entries(&self) -> [[Entry; 2]; 2] {
        let x = self.params.x();
        let e = self.params.energy();
        let mu = self.params.mu;
        let (slope, shift) = match self.params.sector {
            Sector::Even => (6.0, 4.0 * x + e),
            Sector::Odd => (2.0, 2.0 * x + e),
        };
        use Denominator::*;
        [
            [
                Entry { alpha: -slope, beta: -shift, denom: Plus },
                Entry { alpha: 0.0, beta: mu, denom: Plus },
            ],
            [
                Entry { alpha: 0.0, beta: -mu, denom: Minus },
                Entry { alpha: -slope, beta: shift, denom: Minus },
            ],
        ]
    }

    fn roots(&self, d: Denominator) -> [f64; 2] {
        let k = self.kappa();
        match d {
            Denominator::Plus => [-0.5 * k, -0.5 / k],
            Denominator::Minus => [0.5 * k, 0.5 / k],
        }
    }

    pub fn location(&self, p: SingularPoint) -> Option<f64> {
        let k = self.kappa();
        match p {
            SingularPoint::HalfKappa => Some(0.5 * k),
            SingularPoint::MinusHalfKappa => Some(-0.5 * k),
            SingularPoint::InverseKappa => Some(0.5 / k),
            SingularPoint::MinusInverseKappa => Some(-0.5 / k),
            SingularPoint::Infinity => None,
        }
    }

    pub fn finite_singular_points(&self) -> [f64; 4] {
        let k = self.kappa();
        [0.5 * k, -0.5 * k, 0.5 / k, -0.5 / k]
    }

    /// Distance from `u` to the nearest finite singular point.
    pub fn singular_distance(&self, u: Complex64) -> f64 {
        self.finite_singular_points()
            .iter()
            .map(|&p| (u - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Coefficient matrix without the proximity check.
    pub fn matrix_unchecked(&self, u: Complex64) -> C2Matrix {
        let x = self.params.x();
        let d_plus = 4.0 * u * u + 4.0 * x * u + 1.0;
        let d_minus = 4.0 * u * u - 4.0 * x * u + 1.0;
        let ent = self.entries();
        let mut m = C2Matrix::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let en = ent[i][j];
                let d = match en.denom {
                    Denominator::Plus => d_plus,
                    Denominator::Minus => d_minus,
                };
                m[(i, j)] = (en.alpha * u + en.beta) / d;
            }
        }
        m
    }

    pub fn matrix(&self, u: Complex64) -> Result<C2Matrix> {
        let dist = self.singular_distance(u);
        if dist < DELTA_SING {
            return Err(Error::NearSingularity { u: format!("{u}"), distance: dist });
        }
        Ok(self.matrix_unchecked(u))
    }

    pub fn rhs(&self, u: Complex64, v: &C2Vector) -> Result<C2Vector> {
        Ok(self.matrix(u)? * v)
    }

    /// Characteristic exponents, read off the local exponent table.
    pub fn exponents(&self, p: SingularPoint) -> [f64; 2] {
        let chi = self.params.chi;
        match (self.params.sector, p) {
            (Sector::Even, SingularPoint::HalfKappa | SingularPoint::MinusHalfKappa) => [0.0, -chi],
            (Sector::Even, SingularPoint::InverseKappa | SingularPoint::MinusInverseKappa) => {
                [0.0, chi - 1.5]
            }
            (Sector::Even, SingularPoint::Infinity) => [-1.5, -1.5],
            (Sector::Odd, SingularPoint::HalfKappa | SingularPoint::MinusHalfKappa) => {
                [0.0, 0.5 - chi]
            }
            (Sector::Odd, SingularPoint::InverseKappa | SingularPoint::MinusInverseKappa) => {
                [0.0, chi - 1.0]
            }
            (Sector::Odd, SingularPoint::Infinity) => [-0.5, -0.5],
        }
    }

    /// The non-trivial exponent at `±κ/2`: `−χ` (even) or `1/2 − χ` (odd).
    pub fn resonant_exponent(&self) -> f64 {
        self.exponents(SingularPoint::HalfKappa)[1]
    }

    pub fn singular_points(&self) -> Vec<SingularPointInfo> {
        use SingularPoint::*;
        [HalfKappa, MinusHalfKappa, InverseKappa, MinusInverseKappa, Infinity]
            .into_iter()
            .map(|p| SingularPointInfo { point: p, location: self.location(p), exponents: self.exponents(p) })
            .collect()
    }

    /// Laurent coefficients of `u′(s)·M(u(s))` about `s = 0`, where `u(s)` is
    /// given as a power series with `u(0) = u₀`. Index `i` of the result is
    /// the coefficient of `s^(i−1)`; the pole is at most simple, and only
    /// appears when `u₀` is a finite singular point. `n` coefficients are
    /// returned.
    pub fn laurent_pullback(&self, u_series: &[Complex64], n: usize) -> Vec<C2Matrix> {
        let u0 = u_series[0];
        let scale = 1.0 / self.kappa();
        let deriv: Vec<Complex64> =
            (1..u_series.len()).map(|k| u_series[k] * k as f64).collect();

        // 1/(u(s) − r) as Laurent series for every root.
        let inv_factor = |r: f64| -> Vec<Complex64> {
            let mut out = vec![ZERO; n];
            if (u0 - r).norm() < 1e-12 * scale {
                let q = &u_series[1..];
                let rq = series::recip(q, n);
                out.copy_from_slice(&rq);
            } else {
                let mut shifted = u_series.to_vec();
                shifted[0] -= r;
                let rs = series::recip(&shifted, n.saturating_sub(1).max(1));
                for (k, v) in rs.into_iter().enumerate().take(n - 1) {
                    out[k + 1] = v;
                }
            }
            out
        };
        let mut inv_cache: Vec<(f64, Vec<Complex64>)> = Vec::new();
        let mut inv_for = |r: f64| -> Vec<Complex64> {
            if let Some((_, s)) = inv_cache.iter().find(|(rr, _)| *rr == r) {
                return s.clone();
            }
            let s = inv_factor(r);
            inv_cache.push((r, s.clone()));
            s
        };

        let ent = self.entries();
        let mut out = vec![C2Matrix::zeros(); n];
        for i in 0..2 {
            for j in 0..2 {
                let en = ent[i][j];
                if en.alpha == 0.0 && en.beta == 0.0 {
                    continue;
                }
                let [r1, r2] = self.roots(en.denom);
                let a = inv_for(r1);
                let b = inv_for(r2);
                let pref = 1.0 / (4.0 * (r1 - r2));
                let partial: Vec<Complex64> =
                    a.iter().zip(&b).map(|(x, y)| (x - y) * pref).collect();
                let mut numer: Vec<Complex64> = u_series.iter().map(|z| z * en.alpha).collect();
                numer[0] += en.beta;
                let term = series::mul(&partial, &numer, n);
                let term = series::mul(&term, &deriv, n);
                for (k, z) in term.into_iter().enumerate() {
                    out[k][(i, j)] = z;
                }
            }
        }
        out
    }

    /// Laurent coefficients of `M` itself about `u₀`.
    pub fn laurent_at(&self, u0: Complex64, n: usize) -> Vec<C2Matrix> {
        self.laurent_pullback(&[u0, c(1.0, 0.0)], n)
    }

    /// Residue matrix of `M` at a finite singular point.
    pub fn residue(&self, p: SingularPoint) -> Result<C2Matrix> {
        let loc = self
            .location(p)
            .ok_or_else(|| Error::NotApplicable("residue at infinity".into()))?;
        Ok(self.laurent_at(c(loc, 0.0), 2)[0])
    }

    /// `|tr Res(M, p) − (ν₁ + ν₂)|`, a consistency check between the
    /// computed residue and the exponent table.
    pub fn local_exponent_sum_check(&self, p: SingularPoint) -> Result<f64> {
        let res = self.residue(p)?;
        let [a, b] = self.exponents(p);
        Ok((res.trace() - c(a + b, 0.0)).norm())
    }
}
