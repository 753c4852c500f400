//! Power-series coefficients of candidate entire solutions.
//!
//! The even sector uses `f(ξ) = Σ aₙ ξⁿ` with
//! `2n(2n−1)aₙ = [[E−4x(n−1), −μ],[μ, −E+4x(n−1)]]aₙ₋₁ − aₙ₋₂`. The odd
//! sector expands `ψ(z) = z f(z²)`, so `cₙ` multiplies `z^{2n+1}`: the
//! left side becomes `2n(2n+1)cₙ` and `4x(n−1)` is replaced by `2x(2n−1)`.
//! All quantities are real, so the recurrence runs in double-double
//! arithmetic with a shared power-of-two scale.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::linalg::{c, C2Vector};
use crate::params::{GrowthEstimate, ModelParams, Sector};

/// Mantissas are kept in `[2^-512, 2^512]` by power-of-two rescaling.
const SCALE_LIMIT: i32 = 512;

/// Parity of a solution under `τψ(z) = σₓψ(iz)`: `±1` for the even sector,
/// `±i` for the odd sector. `Plus` selects `a₀ = [1, 1]`, `Minus` `[1, −1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    /// The eigenvalue `s` of τ.
    pub fn label(self, sector: Sector) -> Complex64 {
        match sector {
            Sector::Even => c(self.sign(), 0.0),
            Sector::Odd => c(0.0, self.sign()),
        }
    }

    pub const BOTH: [Parity; 2] = [Parity::Plus, Parity::Minus];
}

/// One coefficient `mantissa · 2^scale_exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledTerm {
    pub mantissa: [Complex64; 2],
    pub scale_exponent: i32,
}

impl ScaledTerm {
    pub fn value(&self) -> C2Vector {
        let f = 2f64.powi(self.scale_exponent);
        C2Vector::new(self.mantissa[0] * f, self.mantissa[1] * f)
    }

    /// `ln ‖aₙ‖` without forming the possibly underflowing value.
    pub fn ln_norm(&self) -> f64 {
        let m = (self.mantissa[0].norm_sqr() + self.mantissa[1].norm_sqr()).sqrt();
        m.ln() + self.scale_exponent as f64 * std::f64::consts::LN_2
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientSequence {
    pub sector: Sector,
    pub parity: Parity,
    pub terms: Vec<ScaledTerm>,
}

impl CoefficientSequence {
    pub fn parity_sign(&self) -> Complex64 {
        self.parity.label(self.sector)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, n: usize) -> C2Vector {
        self.terms[n].value()
    }

    /// `‖kₙaₙ − Mₙaₙ₋₁ + aₙ₋₂‖ / ‖kₙaₙ‖` with `kₙ` from [`step_denominator`],
    /// evaluated on a common scale in double precision.
    pub fn residual(&self, params: &ModelParams, n: usize) -> f64 {
        let shift = self.terms[n].scale_exponent;
        let at = |k: usize| -> C2Vector {
            let t = &self.terms[k];
            let f = 2f64.powi(t.scale_exponent - shift);
            C2Vector::new(t.mantissa[0] * f, t.mantissa[1] * f)
        };
        let prev2 = if n >= 2 { at(n - 2) } else { C2Vector::zeros() };
        let (d, off) = step_coefficients(params, n);
        let p = at(n - 1);
        let lhs = at(n) * c(step_denominator(params.sector, n), 0.0);
        let rhs = C2Vector::new(p[0] * d - p[1] * off, p[0] * off - p[1] * d) - prev2;
        (lhs - rhs).norm() / lhs.norm()
    }
}

/// `2n(2n−1)` (even) or `2n(2n+1)` (odd).
pub fn step_denominator(sector: Sector, n: usize) -> f64 {
    match sector {
        Sector::Even => (2 * n * (2 * n - 1)) as f64,
        Sector::Odd => (2 * n * (2 * n + 1)) as f64,
    }
}

/// Diagonal entry `E − 4x(n−1)` (even) or `E − 2x(2n−1)` (odd) and the
/// coupling `μ` of the step matrix `Mₙ = [[d, −μ], [μ, −d]]`.
pub fn step_coefficients(params: &ModelParams, n: usize) -> (f64, f64) {
    let x = params.x();
    let e = params.energy();
    let nf = n as f64;
    let d = match params.sector {
        Sector::Even => e - 4.0 * x * (nf - 1.0),
        Sector::Odd => e - 2.0 * x * (2.0 * nf - 1.0),
    };
    (d, params.mu)
}

fn step_coefficients_dd(params: &ModelParams, chi: TwoFloat, n: usize) -> (TwoFloat, TwoFloat) {
    let x = TwoFloat::from(params.kappa) + TwoFloat::from(params.kappa).recip();
    let x = x / 2.0;
    let kappa = TwoFloat::from(params.kappa);
    let one = TwoFloat::from(1.0);
    let e = (chi - one) * 2.0 * (one - kappa * kappa) / kappa - kappa;
    let nf = TwoFloat::from(n as f64);
    let d = match params.sector {
        Sector::Even => e - x * 4.0 * (nf - one),
        Sector::Odd => e - x * 2.0 * (nf * 2.0 - one),
    };
    (d, TwoFloat::from(params.mu))
}

fn to_term(v: &[TwoFloat; 2], exp: i32) -> ScaledTerm {
    ScaledTerm { mantissa: [c(f64::from(v[0]), 0.0), c(f64::from(v[1]), 0.0)], scale_exponent: exp }
}

fn magnitude(v: &[TwoFloat; 2]) -> f64 {
    f64::from(v[0]).abs().max(f64::from(v[1]).abs())
}

/// Runs the recurrence from a real initial vector `a₀` up to `n_max`.
pub fn generate_from(params: &ModelParams, a0: [f64; 2], parity: Parity, n_max: usize) -> CoefficientSequence {
    run(params, TwoFloat::from(params.chi), a0, parity, n_max)
}

/// As [`generate`], with χ given in double-double; `params.chi` is ignored.
/// Near an eigenvalue the dominant solution enters with a weight
/// proportional to the error in χ, so resolving the recessive solution at
/// large `n` needs χ beyond double precision.
pub fn generate_at(params: &ModelParams, chi: TwoFloat, parity: Parity, n_max: usize) -> Result<CoefficientSequence> {
    check_n_max(n_max)?;
    Ok(run(params, chi, initial(parity), parity, n_max))
}

fn run(params: &ModelParams, chi: TwoFloat, a0: [f64; 2], parity: Parity, n_max: usize) -> CoefficientSequence {
    let mut terms = Vec::with_capacity(n_max + 1);
    let mut prev2 = [TwoFloat::from(0.0); 2];
    let mut prev1 = [TwoFloat::from(a0[0]), TwoFloat::from(a0[1])];
    let mut exp = 0i32;
    terms.push(to_term(&prev1, exp));
    for n in 1..=n_max {
        let (d, mu) = step_coefficients_dd(params, chi, n);
        let denom = TwoFloat::from(step_denominator(params.sector, n));
        let mut next = [
            (d * prev1[0] - mu * prev1[1] - prev2[0]) / denom,
            (mu * prev1[0] - d * prev1[1] - prev2[1]) / denom,
        ];
        let mag = magnitude(&next);
        if mag != 0.0 && !(2f64.powi(-SCALE_LIMIT)..=2f64.powi(SCALE_LIMIT)).contains(&mag) {
            let k = mag.log2().round() as i32;
            let f = 2f64.powi(-k);
            for v in [&mut prev1, &mut next] {
                v[0] *= f;
                v[1] *= f;
            }
            exp += k;
        }
        terms.push(to_term(&next, exp));
        prev2 = prev1;
        prev1 = next;
    }
    CoefficientSequence { sector: params.sector, parity, terms }
}

fn initial(parity: Parity) -> [f64; 2] {
    [1.0, parity.sign()]
}

/// Even-sector coefficients `aₙ`, `a₀ = [1, s]`.
pub fn generate_even(params: &ModelParams, parity: Parity, n_max: usize) -> Result<CoefficientSequence> {
    if params.sector != Sector::Even {
        return Err(Error::InvalidConfig("generate_even needs even-sector parameters".into()));
    }
    check_n_max(n_max)?;
    Ok(generate_from(params, initial(parity), parity, n_max))
}

/// Odd-sector coefficients `cₙ`, `c₀ = [1, 1]` for `s = +i`, `[1, −1]` for `s = −i`.
pub fn generate_odd(params: &ModelParams, parity: Parity, n_max: usize) -> Result<CoefficientSequence> {
    if params.sector != Sector::Odd {
        return Err(Error::InvalidConfig("generate_odd needs odd-sector parameters".into()));
    }
    check_n_max(n_max)?;
    Ok(generate_from(params, initial(parity), parity, n_max))
}

/// Dispatches on the sector.
pub fn generate(params: &ModelParams, parity: Parity, n_max: usize) -> Result<CoefficientSequence> {
    match params.sector {
        Sector::Even => generate_even(params, parity, n_max),
        Sector::Odd => generate_odd(params, parity, n_max),
    }
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max < 2 {
        return Err(Error::InvalidConfig(format!("n_max = {n_max} must be at least 2")));
    }
    Ok(())
}

fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Order and type from a least-squares fit over `window` (inclusive start,
/// exclusive end). With `yₙ = ln‖aₙ‖`, the type comes from
/// `yₙ + ln n! ≈ n ln|σ| + β ln n + c`, and the order of `f(ξ)` from
/// `yₙ ≈ −ln n!/ϱ + n b + β ln n + c`. The order reported is that of `ψ(z)`,
/// twice the order of `f`.
pub fn growth_estimate(seq: &CoefficientSequence, window: std::ops::Range<usize>) -> Result<GrowthEstimate> {
    if window.len() < 20 || window.end > seq.len() || window.start == 0 {
        return Err(Error::InvalidConfig(format!(
            "window {window:?} must have length >= 20, start at n >= 1 and lie within 0..{}",
            seq.len()
        )));
    }
    let mut ns = Vec::new();
    let mut ys = Vec::new();
    for n in window {
        let y = seq.terms[n].ln_norm();
        if !y.is_finite() {
            return Err(Error::DegenerateWindow);
        }
        ns.push(n as f64);
        ys.push(y);
    }
    let rows = ns.len();
    let y_type = DVector::from_iterator(rows, ns.iter().zip(&ys).map(|(n, y)| y + ln_factorial(*n as usize)));
    let a_type = DMatrix::from_fn(rows, 3, |i, j| match j {
        0 => ns[i],
        1 => ns[i].ln(),
        _ => 1.0,
    });
    let sol = lstsq(&a_type, &y_type)?;
    let type_modulus = sol[0].exp();

    let y_order = DVector::from_vec(ys);
    let a_order = DMatrix::from_fn(rows, 4, |i, j| match j {
        0 => -ln_factorial(ns[i] as usize),
        1 => ns[i],
        2 => ns[i].ln(),
        _ => 1.0,
    });
    let sol = lstsq(&a_order, &y_order)?;
    let order = 2.0 / sol[0];
    Ok(GrowthEstimate { order, type_modulus })
}

fn lstsq(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    // Column scaling keeps the normal system well conditioned.
    let scales: Vec<f64> = a.column_iter().map(|c| c.norm().max(1e-300)).collect();
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.svd(true, true);
    let mut x = svd.solve(y, 1e-13).map_err(|_| Error::DegenerateWindow)?;
    for (j, s) in scales.iter().enumerate() {
        x[j] /= s;
    }
    Ok(x)
}

/// CSV dump: `n, re_1, im_1, re_2, im_2, scale_exponent`.
pub fn write_csv<W: Write>(seq: &CoefficientSequence, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
    w.write_record(["n", "re_1", "im_1", "re_2", "im_2", "scale_exponent"]).map_err(io)?;
    for (n, t) in seq.terms.iter().enumerate() {
        w.write_record([
            n.to_string(),
            format!("{:.12e}", t.mantissa[0].re),
            format!("{:.12e}", t.mantissa[0].im),
            format!("{:.12e}", t.mantissa[1].re),
            format!("{:.12e}", t.mantissa[1].im),
            t.scale_exponent.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidConfig(format!("csv write failed: {e}")))
}
