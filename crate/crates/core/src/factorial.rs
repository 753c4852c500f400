//! Factorial-series solutions of the coefficient recurrence and the rank
//! condition that decides whether the entire solution `aₙ` is normalizable.
//!
//! A solution `v` of the Mellin system near `u₀ = κ/2` with exponent `ν`
//! yields the recurrence solution `bₙ = (1/n!) ∫_C uⁿ v(u) du`, whose type is
//! `u₀`. Expanding `v` about `u₀` and integrating term by term gives a
//! factorial series. When `κ > 1/√2` the expansion does not reach the
//! origin, and the integral is rewritten in `w = (u/u₀)^p` first.
//!
//! With `s = w − 1` and `ṽ(s) = v(u₀(1+s)^{1/p}) = s^ν Σ Hⱼ sʲ` the result
//! is, for `α = (n+1)/p`,
//!
//! ```text
//! bₙ = C · u₀ⁿ⁺¹ Γ(α) / (p n!) · Σⱼ Hⱼ Kⱼ
//! ```
//!
//! where the loop contour has `C = 2πi e^{2πiν}`, `Kⱼ = 1/(Γ(−j−ν) Γ(α+ν+j+1))`
//! and the segment `[0, u₀]` (usable for `ν > −1`) has `C = e^{iπν}`,
//! `Kⱼ = (−1)ʲ Γ(ν+j+1)/Γ(α+ν+j+1)`. The loop kernel is entire in `ν`, so
//! the series stays finite as `χ` approaches an integer; exactly at a
//! resonance the logarithmic solution is used instead.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::holonomy::INTEGER_TOL;
use crate::linalg::{self, c, C2Matrix, C2Vector, I, ONE, ZERO};
use crate::mellin::{MellinSystem, SingularPoint};
use crate::params::ModelParams;
use crate::recurrence::{self, Parity};
use crate::series;

pub const DEFAULT_REL_TOL: f64 = 1e-14;
pub const MAX_TERMS: usize = 10_000;
pub const DEFAULT_N0: usize = 20;
pub const SECOND_N0: usize = 40;
pub const DEFAULT_EPS_RANK: f64 = 1e-6;
const INITIAL_TERMS: usize = 64;

/// The `c·log(u−u₀)·w₀(u)` part of a logarithmic Frobenius solution, with
/// `w₀ = Σ gⱼ (u−u₀)ʲ` the analytic solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogPart {
    pub coefficient: Complex64,
    pub analytic: Vec<C2Vector>,
}

/// `v(u) = (u−u₀)^ν Σ hⱼ (u−u₀)ʲ [+ c log(u−u₀) w₀(u)]`, principal branches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrobeniusSeries {
    pub base_point: Complex64,
    pub exponent: f64,
    pub coeffs: Vec<C2Vector>,
    pub radius: f64,
    pub log: Option<LogPart>,
}

impl FrobeniusSeries {
    pub fn eval(&self, u: Complex64) -> C2Vector {
        let t = u - self.base_point;
        let mut v = horner(&self.coeffs, t) * (self.exponent * t.ln()).exp();
        if let Some(l) = &self.log {
            v += horner(&l.analytic, t) * (l.coefficient * t.ln());
        }
        v
    }

    pub fn derivative(&self, u: Complex64) -> C2Vector {
        let t = u - self.base_point;
        let shifted: Vec<C2Vector> =
            self.coeffs.iter().enumerate().map(|(j, h)| h * c(self.exponent + j as f64, 0.0)).collect();
        let mut d = horner(&shifted, t) * ((self.exponent - 1.0) * t.ln()).exp();
        if let Some(l) = &self.log {
            let dg: Vec<C2Vector> = l.analytic.iter().enumerate().skip(1).map(|(j, g)| g * c(j as f64, 0.0)).collect();
            d += horner(&l.analytic, t) * (l.coefficient / t) + horner(&dg, t) * (l.coefficient * t.ln());
        }
        d
    }

    /// `‖v′ − Mv‖ / ‖v′‖` at `u`.
    pub fn residual(&self, sys: &MellinSystem, u: Complex64) -> Result<f64> {
        let d = self.derivative(u);
        let mv = sys.matrix(u)? * self.eval(u);
        Ok((d - mv).norm() / d.norm().max(1e-300))
    }
}

fn horner(coeffs: &[C2Vector], t: Complex64) -> C2Vector {
    coeffs.iter().rev().fold(C2Vector::zeros(), |acc, h| acc * t + h)
}

fn solve2(m: &C2Matrix, rhs: &C2Vector) -> C2Vector {
    let d = linalg::det(m);
    C2Vector::new((m[(1, 1)] * rhs[0] - m[(0, 1)] * rhs[1]) / d, (m[(0, 0)] * rhs[1] - m[(1, 0)] * rhs[0]) / d)
}

/// Frobenius coefficients for `dv/dt = L(t) v` where `L(t) = Σ Lₖ t^(k−1)`
/// (`laurent[k] = Lₖ`), for a characteristic exponent `nu` of `L₀`.
fn frobenius_coeffs(laurent: &[C2Matrix], nu: f64, n_terms: usize, allow_log: bool) -> Result<(Vec<C2Vector>, Option<LogPart>)> {
    let m0 = laurent[0];
    let other = m0.trace().re - nu;
    let shifted = m0 - linalg::identity() * c(nu, 0.0);
    if linalg::det(&shifted).norm() > 1e-8 * (1.0 + linalg::norm(&m0).powi(2)) {
        return Err(Error::InvalidConfig(format!("{nu} is not a characteristic exponent here")));
    }
    let (h0, _) = linalg::null_vector(&shifted);
    let gap = other - nu;
    let resonant_at = if gap > 0.5 && (gap - gap.round()).abs() < INTEGER_TOL { Some(gap.round() as usize) } else { None };

    let mut log: Option<LogPart> = None;
    let mut h = Vec::with_capacity(n_terms);
    h.push(h0);
    for j in 1..n_terms {
        let mut rhs = C2Vector::zeros();
        for k in 1..=j.min(laurent.len() - 1) {
            rhs -= laurent[k] * h[j - k];
        }
        if let (Some(m), Some(l)) = (resonant_at, &log) {
            if j > m {
                rhs += l.analytic[j - m] * l.coefficient;
            }
        }
        if Some(j) == resonant_at {
            if !allow_log {
                return Err(Error::ResonantExponent(j));
            }
            let (g, _) = frobenius_coeffs(laurent, other, n_terms, false)?;
            let sing = m0 - linalg::identity() * c(other, 0.0);
            let (ell, _) = linalg::null_vector(&sing.transpose());
            let denom = ell.dot(&g[0]);
            if denom.norm() < 1e-12 {
                return Err(Error::ResonantExponent(j));
            }
            // Solvability of sing·hⱼ = c g₀ + rhs fixes c.
            let coefficient = -ell.dot(&rhs) / denom;
            let target = rhs + g[0] * coefficient;
            let row = if sing.row(0).norm() >= sing.row(1).norm() { 0 } else { 1 };
            let r = sing.row(row).transpose();
            let hj = r.map(|z| z.conj()) * (target[row] / r.norm_squared());
            h.push(hj);
            log = Some(LogPart { coefficient, analytic: g });
            continue;
        }
        let mat = m0 - linalg::identity() * c(nu + j as f64, 0.0);
        h.push(solve2(&mat, &rhs));
    }
    Ok((h, log))
}

fn exponent_check(sys: &MellinSystem, point: SingularPoint, exponent: f64) -> Result<f64> {
    let loc = sys
        .location(point)
        .ok_or_else(|| Error::NotApplicable("Frobenius series at infinity".into()))?;
    let ex = sys.exponents(point);
    if !ex.iter().any(|e| (e - exponent).abs() < 1e-12) {
        return Err(Error::InvalidConfig(format!("{exponent} is not an exponent at {point:?} (exponents {ex:?})")));
    }
    Ok(loc)
}

fn radius_from(sys: &MellinSystem, loc: f64) -> f64 {
    sys.finite_singular_points().iter().filter(|p| (*p - loc).abs() > 1e-15).map(|p| (p - loc).abs()).fold(f64::INFINITY, f64::min)
}

/// Frobenius series at a finite singular point for one of its exponents.
/// Fails with `ResonantExponent` if the recursion meets an integer
/// exponent gap.
pub fn frobenius_at(sys: &MellinSystem, point: SingularPoint, exponent: f64, n_terms: usize) -> Result<FrobeniusSeries> {
    let loc = exponent_check(sys, point, exponent)?;
    let laurent = sys.laurent_at(c(loc, 0.0), n_terms.max(2));
    let (coeffs, _) = frobenius_coeffs(&laurent, exponent, n_terms.max(1), false)?;
    Ok(FrobeniusSeries { base_point: c(loc, 0.0), exponent, coeffs, radius: radius_from(sys, loc), log: None })
}

/// Frobenius series for the smaller exponent, with a logarithmic term if
/// the exponents differ by a positive integer.
pub fn frobenius_log_at(sys: &MellinSystem, point: SingularPoint, n_terms: usize) -> Result<FrobeniusSeries> {
    let ex = sys.exponents(point);
    let exponent = ex[0].min(ex[1]);
    let loc = exponent_check(sys, point, exponent)?;
    let laurent = sys.laurent_at(c(loc, 0.0), n_terms.max(2));
    let (coeffs, log) = frobenius_coeffs(&laurent, exponent, n_terms.max(1), true)?;
    Ok(FrobeniusSeries { base_point: c(loc, 0.0), exponent, coeffs, radius: radius_from(sys, loc), log })
}

/// A vector `v · exp(ln_scale)`, for values far outside the double range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledVector {
    pub v: C2Vector,
    pub ln_scale: f64,
}

impl ScaledVector {
    pub fn value(&self) -> C2Vector {
        self.v * c(self.ln_scale.exp(), 0.0)
    }

    /// The mantissa expressed at another scale.
    pub fn at_scale(&self, ln_scale: f64) -> C2Vector {
        self.v * c((self.ln_scale - ln_scale).exp(), 0.0)
    }
}

/// `(ln |1/Γ(x)|, sign)`, with sign 0 at the poles of Γ.
fn rgamma_parts(x: f64) -> (f64, f64) {
    if x <= 0.0 && x == x.round() {
        return (f64::NEG_INFINITY, 0.0);
    }
    let (lg, sign) = libm::lgamma_r(x);
    (-lg, sign as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contour {
    Loop,
    Line,
}

/// Loop for `ν ≤ −1`, segment otherwise.
pub fn default_contour(nu: f64) -> Contour {
    if nu > -1.0 {
        Contour::Line
    } else {
        Contour::Loop
    }
}

/// `Σⱼ Hⱼ Kⱼ` with the kernel's largest magnitude factored into `ln_scale`.
/// Returns `None` if the available coefficients do not reach `rel_tol`.
fn kernel_sum(h: &[C2Vector], nu: f64, alpha: f64, contour: Contour, rel_tol: f64) -> Option<ScaledVector> {
    let kernel: Vec<(f64, f64)> = (0..h.len())
        .map(|j| {
            let jf = j as f64;
            match contour {
                Contour::Loop => {
                    let (a, sa) = rgamma_parts(-jf - nu);
                    let (b, sb) = rgamma_parts(alpha + nu + jf + 1.0);
                    (a + b, sa * sb)
                }
                Contour::Line => {
                    let (a, sa) = rgamma_parts(nu + jf + 1.0);
                    let (b, sb) = rgamma_parts(alpha + nu + jf + 1.0);
                    let parity = if j % 2 == 0 { 1.0 } else { -1.0 };
                    (b - a, parity * sb / sa)
                }
            }
        })
        .collect();
    let reference = kernel.iter().filter(|k| k.1 != 0.0).map(|k| k.0).fold(f64::NEG_INFINITY, f64::max);
    if !reference.is_finite() {
        return Some(ScaledVector { v: C2Vector::zeros(), ln_scale: 0.0 });
    }
    let mut sum = C2Vector::zeros();
    let mut quiet = 0;
    for (j, (hj, (lk, sk))) in h.iter().zip(&kernel).enumerate() {
        if *sk == 0.0 {
            continue;
        }
        let term = hj * c(sk * (lk - reference).exp(), 0.0);
        sum += term;
        // Polynomially decaying tails are bounded by about j/α times the last term.
        let tail = term.norm() * (j as f64 / alpha).max(1.0);
        if j >= 8 && tail <= rel_tol * sum.norm() {
            quiet += 1;
            if quiet >= 4 {
                return Some(ScaledVector { v: sum, ln_scale: reference });
            }
        } else {
            quiet = 0;
        }
    }
    None
}

/// Coefficients `Hⱼ` of `ṽ(s) = s^ν Σ Hⱼ sʲ` for `u = u₀(1+s)^{1/p}`,
/// produced on demand.
trait CoefficientSource {
    fn coefficients(&self, n_terms: usize) -> Result<Vec<C2Vector>>;
}

/// Evaluates `bₙ` (without the constant `C`) by growing the number of
/// coefficients until the kernel sum converges.
fn evaluate<S: CoefficientSource>(src: &S, nu: f64, u0: f64, p: f64, n: usize, contour: Contour, rel_tol: f64) -> Result<ScaledVector> {
    let alpha = (n as f64 + 1.0) / p;
    let mut terms = INITIAL_TERMS;
    loop {
        let h = src.coefficients(terms)?;
        if let Some(s) = kernel_sum(&h, nu, alpha, contour, rel_tol) {
            let ln_pref = (n as f64 + 1.0) * u0.ln() + libm::lgamma(alpha) - p.ln() - libm::lgamma(n as f64 + 1.0);
            return Ok(ScaledVector { v: s.v, ln_scale: s.ln_scale + ln_pref });
        }
        if terms >= MAX_TERMS {
            return Err(Error::SlowConvergence(MAX_TERMS));
        }
        terms = (terms * 4).min(MAX_TERMS);
    }
}

fn contour_constant(nu: f64, contour: Contour) -> Complex64 {
    match contour {
        Contour::Loop => 2.0 * std::f64::consts::PI * I * (2.0 * std::f64::consts::PI * I * nu).exp(),
        Contour::Line => (std::f64::consts::PI * I * nu).exp(),
    }
}

struct DirectSource<'a> {
    series: &'a FrobeniusSeries,
    sys: &'a MellinSystem,
}

impl CoefficientSource for DirectSource<'_> {
    fn coefficients(&self, n_terms: usize) -> Result<Vec<C2Vector>> {
        let u0 = self.series.base_point;
        let coeffs = if n_terms <= self.series.coeffs.len() {
            self.series.coeffs[..n_terms].to_vec()
        } else {
            let laurent = self.sys.laurent_at(u0, n_terms);
            frobenius_coeffs(&laurent, self.series.exponent, n_terms, false)?.0
        };
        // Hⱼ = u₀^{ν+j} hⱼ; the real factor u₀^ν is applied by the caller.
        let mut pow = ONE;
        Ok(coeffs
            .into_iter()
            .map(|h| {
                let out = h * pow;
                pow *= u0;
                out
            })
            .collect())
    }
}

fn positive_base(series: &FrobeniusSeries) -> Result<f64> {
    let u0 = series.base_point;
    if u0.im != 0.0 || u0.re <= 0.0 {
        return Err(Error::NotApplicable("factorial series are evaluated at +kappa/2; use the reflection for -kappa/2".into()));
    }
    Ok(u0.re)
}

/// `bₙ = (1/n!) ∫_C uⁿ v(u) du` for the series' solution, on the loop from
/// the origin around `u₀` (segment `[0, u₀]` when `ν > −1`). Logarithmic
/// series are handled by the residue formula.
pub fn factorial_b(sys: &MellinSystem, series: &FrobeniusSeries, n: usize, rel_tol: f64) -> Result<ScaledVector> {
    factorial_b_with(sys, series, n, default_contour(series.exponent), rel_tol)
}

pub fn factorial_b_with(sys: &MellinSystem, series: &FrobeniusSeries, n: usize, contour: Contour, rel_tol: f64) -> Result<ScaledVector> {
    let (v, c_const) = factorial_b_reduced(sys, series, n, contour, rel_tol)?;
    Ok(ScaledVector { v: v.v * c_const, ln_scale: v.ln_scale })
}

/// `bₙ` up to an `n`-independent constant (returned separately), which is
/// real for real parameters.
fn factorial_b_reduced(sys: &MellinSystem, series: &FrobeniusSeries, n: usize, contour: Contour, rel_tol: f64) -> Result<(ScaledVector, Complex64)> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("n = {n}: factorial series need n >= 2")));
    }
    let u0 = positive_base(series)?;
    if let Some(l) = &series.log {
        return Ok((log_b(series, l, u0, n, rel_tol)?, 2.0 * std::f64::consts::PI * I));
    }
    if sys.kappa() > std::f64::consts::FRAC_1_SQRT_2 + 1e-12 {
        return Err(Error::NotApplicable("direct factorial series need kappa <= 1/sqrt(2); use remap_and_b".into()));
    }
    let nu = series.exponent;
    let src = DirectSource { series, sys };
    let mut b = evaluate(&src, nu, u0, 1.0, n, contour, rel_tol)?;
    b.ln_scale += nu * u0.ln();
    Ok((b, contour_constant(nu, contour)))
}

/// Loop integral of a logarithmic solution with exponent `−m`:
/// `2πi [Σ_{j<m} Res_{u₀}(uⁿ hⱼ (u−u₀)^{j−m}) − c ∫₀^{u₀} uⁿ w₀ du] / n!`.
fn log_b(series: &FrobeniusSeries, l: &LogPart, u0: f64, n: usize, rel_tol: f64) -> Result<ScaledVector> {
    let m = (-series.exponent).round() as usize;
    let nf = n as f64;
    let ln_scale = (nf + 1.0) * u0.ln() - libm::lgamma(nf + 1.0);
    let mut sum = C2Vector::zeros();
    for (j, hj) in series.coeffs.iter().enumerate().take(m) {
        let k = m - 1 - j;
        if k > n {
            continue;
        }
        // C(n,k)·u₀^{n−k} relative to u₀^{n+1}.
        let ln_c = libm::lgamma(nf + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0);
        let w = (ln_c - (k as f64 + 1.0) * u0.ln()).exp();
        sum += hj * c(w, 0.0);
    }
    // ∫₀^{u₀} uⁿ (u−u₀)ⁱ du = u₀^{n+1} (−u₀)ⁱ i! n!/(n+i+1)!.
    let mut integral = C2Vector::zeros();
    let mut quiet = 0;
    let mut converged = false;
    for (i, g) in l.analytic.iter().enumerate() {
        let fi = i as f64;
        let w = (fi * u0.ln() + libm::lgamma(fi + 1.0) + libm::lgamma(nf + 1.0) - libm::lgamma(nf + fi + 2.0)).exp();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let term = g * c(sign * w, 0.0);
        integral += term;
        if i >= 8 && term.norm() <= rel_tol * integral.norm().max(1e-300) {
            quiet += 1;
            if quiet >= 4 {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    if !converged {
        return Err(Error::SlowConvergence(l.analytic.len()));
    }
    Ok(ScaledVector { v: sum - integral * l.coefficient, ln_scale })
}

/// Remap parameter `p = max{1, 1/(2(1−κ))}`.
pub fn remap_power(kappa: f64) -> f64 {
    (0.5 / (1.0 - kappa)).max(1.0)
}

/// Coefficients of `((1+s)^{1/p} − 1)^m = Σⱼ A_{m,j} sʲ`, `m, j ≤ size`.
pub fn a_table(p: f64, size: usize) -> Vec<Vec<f64>> {
    let binom = series::binomial_series(1.0 / p, size + 1);
    let mut table = vec![vec![0.0; size + 1]; size + 1];
    table[0][0] = 1.0;
    for m in 1..=size {
        for j in m..=size {
            table[m][j] = (1..=j - m + 1).map(|l| binom[l] * table[m - 1][j - l]).sum();
        }
    }
    table
}

/// Coefficients of `((1+s)^{1/p} − 1)^ν / s^ν = Σⱼ Bⱼ sʲ`.
pub fn b_coeffs(p: f64, nu: f64, size: usize) -> Vec<f64> {
    let binom = series::binomial_series(1.0 / p, size + 2);
    let base: Vec<Complex64> = binom[1..].iter().map(|b| c(*b, 0.0)).collect();
    series::pow_real(&base, nu, size + 1).into_iter().map(|z| z.re).collect()
}

/// Frobenius data of the Mellin solution in the variable `s = (u/u₀)^p − 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemappedSeries {
    pub p: f64,
    pub base_point: f64,
    pub exponent: f64,
    /// `Hⱼ`, from the Frobenius method applied to the system in `s`,
    /// normalized so that `H₀ = (u₀/p)^ν h₀`.
    pub h_coeffs: Vec<C2Vector>,
    pub a_table: Vec<Vec<f64>>,
    pub b_coeffs: Vec<f64>,
}

/// Size of the A/B tables kept for cross-checks.
pub const TABLE_SIZE: usize = 24;

struct RemapSource<'a> {
    sys: &'a MellinSystem,
    p: f64,
    u0: f64,
    nu: f64,
}

impl CoefficientSource for RemapSource<'_> {
    fn coefficients(&self, n_terms: usize) -> Result<Vec<C2Vector>> {
        let u_series: Vec<Complex64> = series::binomial_series(1.0 / self.p, n_terms + 1).into_iter().map(|b| c(b * self.u0, 0.0)).collect();
        let laurent = self.sys.laurent_pullback(&u_series, n_terms);
        let (h, _) = frobenius_coeffs(&laurent, self.nu, n_terms, false)?;
        let norm = c((self.u0 / self.p).powf(self.nu), 0.0);
        Ok(h.into_iter().map(|v| v * norm).collect())
    }
}

/// Builds the remapped series at `+κ/2` for the non-trivial exponent.
pub fn remap(sys: &MellinSystem, n_terms: usize) -> Result<RemappedSeries> {
    let u0 = 0.5 * sys.kappa();
    let nu = sys.resonant_exponent();
    let p = remap_power(sys.kappa());
    let src = RemapSource { sys, p, u0, nu };
    Ok(RemappedSeries {
        p,
        base_point: u0,
        exponent: nu,
        h_coeffs: src.coefficients(n_terms)?,
        a_table: a_table(p, TABLE_SIZE),
        b_coeffs: b_coeffs(p, nu, TABLE_SIZE),
    })
}

impl RemappedSeries {
    /// `Hⱼ = u₀^ν Σₖ B_{j−k} Σₘ A_{m,k} hₘ u₀^m` from the series in `u − u₀`,
    /// for `j` up to the table size.
    pub fn h_from_tables(&self, h: &[C2Vector]) -> Vec<C2Vector> {
        let size = self.a_table.len().min(h.len());
        let scaled: Vec<C2Vector> = (0..size).map(|k| {
            (0..=k).fold(C2Vector::zeros(), |acc, m| acc + h[m] * c(self.a_table[m][k] * self.base_point.powi(m as i32), 0.0))
        }).collect();
        let pref = self.base_point.powf(self.exponent);
        (0..size)
            .map(|j| (0..=j).fold(C2Vector::zeros(), |acc, k| acc + scaled[k] * c(self.b_coeffs[j - k] * pref, 0.0)))
            .collect()
    }
}

/// `bₙ` through the change of variable `w = (u/u₀)^p`, at `+κ/2`.
pub fn remap_and_b(sys: &MellinSystem, n: usize, rel_tol: f64) -> Result<ScaledVector> {
    let (b, k) = remap_b_reduced(sys, n, default_contour(sys.resonant_exponent()), rel_tol)?;
    Ok(ScaledVector { v: b.v * k, ln_scale: b.ln_scale })
}

fn remap_b_reduced(sys: &MellinSystem, n: usize, contour: Contour, rel_tol: f64) -> Result<(ScaledVector, Complex64)> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("n = {n}: factorial series need n >= 2")));
    }
    let nu = sys.resonant_exponent();
    if contour == Contour::Loop && (nu - nu.round()).abs() < INTEGER_TOL {
        return Err(Error::ResonantExponent((-nu).round() as usize));
    }
    let u0 = 0.5 * sys.kappa();
    let p = remap_power(sys.kappa());
    let src = RemapSource { sys, p, u0, nu };
    Ok((evaluate(&src, nu, u0, p, n, contour, rel_tol)?, contour_constant(nu, contour)))
}

/// Which factorial construction a parameter point uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorialMethod {
    Direct,
    Logarithmic,
    Remapped,
}

pub fn method_for(params: &ModelParams) -> FactorialMethod {
    let sys = MellinSystem::new(*params);
    let nu = sys.resonant_exponent();
    if params.kappa > std::f64::consts::FRAC_1_SQRT_2 {
        FactorialMethod::Remapped
    } else if nu < -0.5 && (nu - nu.round()).abs() < INTEGER_TOL {
        FactorialMethod::Logarithmic
    } else {
        FactorialMethod::Direct
    }
}

/// Terms requested up front for direct series; more are added on demand.
const DIRECT_TERMS: usize = 96;

/// `b⁺ₙ` at `+κ/2` for `n ∈ ns`, up to a common `n`-independent constant,
/// picking the direct, logarithmic or remapped construction.
pub fn b_plus(params: &ModelParams, ns: &[usize], rel_tol: f64) -> Result<Vec<ScaledVector>> {
    let sys = MellinSystem::new(*params);
    let nu = sys.resonant_exponent();
    let contour = default_contour(nu);
    match method_for(params) {
        FactorialMethod::Remapped => ns.iter().map(|&n| Ok(remap_b_reduced(&sys, n, contour, rel_tol)?.0)).collect(),
        FactorialMethod::Logarithmic => {
            let s = frobenius_log_at(&sys, SingularPoint::HalfKappa, DIRECT_TERMS.max(4 * (-nu).round() as usize))?;
            ns.iter().map(|&n| Ok(factorial_b_reduced(&sys, &s, n, contour, rel_tol)?.0)).collect()
        }
        FactorialMethod::Direct => {
            let s = frobenius_at(&sys, SingularPoint::HalfKappa, nu, DIRECT_TERMS)?;
            ns.iter().map(|&n| Ok(factorial_b_reduced(&sys, &s, n, contour, rel_tol)?.0)).collect()
        }
    }
}

/// `b⁻ₙ = (−1)ⁿ⁺¹ σₓ b⁺ₙ`, the image of `b⁺` under `u → −u`.
pub fn reflect_b(b_plus: &ScaledVector, n: usize) -> ScaledVector {
    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    ScaledVector { v: C2Vector::new(b_plus.v[1], b_plus.v[0]) * c(sign, 0.0), ln_scale: b_plus.ln_scale }
}

fn stacked(top: &C2Vector, bottom: &C2Vector, balance: f64) -> [Complex64; 4] {
    [top[0], top[1], bottom[0] * balance, bottom[1] * balance]
}

fn unit4(v: [Complex64; 4]) -> [Complex64; 4] {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 {
        return v;
    }
    v.map(|z| z / n)
}

fn det3(m: [[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The four 3×3 minors of `[[a_{n0}, b⁺_{n0}, b⁻_{n0}], [a_{n0+1}, b⁺_{n0+1}, b⁻_{n0+1}]]`
/// after normalizing each column to unit norm. The rows of index `n0+1`
/// are multiplied by `(n0+1)/|u₀|` first, which balances the two blocks for
/// sequences of type `u₀`; this does not change which minors vanish.
pub fn rank_condition(a: [C2Vector; 2], b_plus: [C2Vector; 2], b_minus: [C2Vector; 2], n0: usize, u0: f64) -> [f64; 4] {
    let balance = (n0 as f64 + 1.0) / u0.abs();
    let cols = [
        unit4(stacked(&a[0], &a[1], balance)),
        unit4(stacked(&b_plus[0], &b_plus[1], balance)),
        unit4(stacked(&b_minus[0], &b_minus[1], balance)),
    ];
    let mut out = [0.0; 4];
    for (skip, o) in out.iter_mut().enumerate() {
        let rows: Vec<usize> = (0..4).filter(|r| *r != skip).collect();
        let mut m = [[ZERO; 3]; 3];
        for (i, r) in rows.iter().enumerate() {
            for (j, col) in cols.iter().enumerate() {
                m[i][j] = col[*r];
            }
        }
        *o = det3(m).norm();
    }
    out
}

/// Rank-condition data for one parity at one χ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankSample {
    pub chi: f64,
    pub parity: Parity,
    pub n0: usize,
    /// Signed 2×2 determinant of the parity-reduced problem; its zeros in χ
    /// are the eigenvalues of this parity. It can also change sign without
    /// vanishing where the leading entry of `β` crosses zero.
    pub reduced: f64,
    pub minors: [f64; 4],
}

impl RankSample {
    pub fn max_minor(&self) -> f64 {
        self.minors.iter().copied().fold(0.0, f64::max)
    }
}

/// The `b±` columns at `n0, n0+1` for one parameter point, reused while χ
/// is varied within a few ulps of `params.chi`.
#[derive(Debug, Clone)]
pub struct RankEvaluator {
    params: ModelParams,
    parity: Parity,
    n0: usize,
    b_plus: [C2Vector; 2],
    b_minus: [C2Vector; 2],
    beta: [f64; 2],
}

fn sign_of(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn unit2(v: [f64; 2], sg: f64) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if n == 0.0 {
        return v;
    }
    [sg * v[0] / n, sg * v[1] / n]
}

impl RankEvaluator {
    pub fn new(params: &ModelParams, parity: Parity, n0: usize, rel_tol: f64) -> Result<Self> {
        if n0 < 2 {
            return Err(Error::InvalidConfig(format!("n0 = {n0} must be at least 2")));
        }
        let b = b_plus(params, &[n0, n0 + 1], rel_tol)?;
        let bp = [b[0].v, b[1].at_scale(b[0].ln_scale)];
        let bm = [reflect_b(&b[0], n0).v, reflect_b(&b[1], n0 + 1).at_scale(b[0].ln_scale)];
        // With P = (−1)ⁿσₓ, aₙ satisfies Paₙ = s aₙ and b⁻ = −Pb⁺, so
        // aₙ ∈ span(b⁺, b⁻) reduces to aₙ ∥ βₙ = b⁺ₙ + sPb⁺ₙ.
        let s = parity.sign();
        let balance = (n0 as f64 + 1.0) / (0.5 * params.kappa);
        let beta = [bp[0][0] + bp[0][1] * (s * sign_of(n0)), (bp[1][0] + bp[1][1] * (s * sign_of(n0 + 1))) * balance];
        // β carries one constant phase; rotate it onto the real axis.
        let pivot = if beta[0].norm() >= beta[1].norm() { beta[0] } else { beta[1] };
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { ONE };
        let beta = [(beta[0] * phase).re, (beta[1] * phase).re];
        let beta = unit2(beta, if beta[0] < 0.0 { -1.0 } else { 1.0 });
        Ok(Self { params: *params, parity, n0, b_plus: bp, b_minus: bm, beta })
    }

    /// Evaluates at χ given in double-double.
    pub fn sample_at(&self, chi: TwoFloat) -> Result<RankSample> {
        let n0 = self.n0;
        let seq = recurrence::generate_at(&self.params, chi, self.parity, n0 + 1)?;
        let (t0, t1) = (seq.terms[n0], seq.terms[n0 + 1]);
        let shift = 2f64.powi(t1.scale_exponent - t0.scale_exponent);
        let a = [
            C2Vector::new(t0.mantissa[0], t0.mantissa[1]),
            C2Vector::new(t1.mantissa[0], t1.mantissa[1]) * c(shift, 0.0),
        ];
        let u0 = 0.5 * self.params.kappa;
        let minors = rank_condition(a, self.b_plus, self.b_minus, n0, u0);
        let balance = (n0 as f64 + 1.0) / u0;
        // `a₀` is fixed, so α varies continuously with χ and keeps its sign.
        let al = unit2([a[0][0].re, a[1][0].re * balance], 1.0);
        let be = self.beta;
        Ok(RankSample { chi: f64::from(chi), parity: self.parity, n0, reduced: al[0] * be[1] - al[1] * be[0], minors })
    }

    pub fn sample(&self) -> Result<RankSample> {
        self.sample_at(TwoFloat::from(self.params.chi))
    }
}

/// Evaluates the rank condition and the parity-reduced determinant.
pub fn rank_sample(params: &ModelParams, parity: Parity, n0: usize, rel_tol: f64) -> Result<RankSample> {
    RankEvaluator::new(params, parity, n0, rel_tol)?.sample()
}

/// A zero of the reduced determinant, located in double-double χ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankRoot {
    /// χ rounded to double precision.
    pub chi: f64,
    /// `χ − chi`, the low part of the double-double root.
    pub chi_low: f64,
    pub parity: Parity,
    pub at_n0: RankSample,
    pub at_second: RankSample,
}

impl RankRoot {
    pub fn max_minor(&self) -> f64 {
        self.at_n0.max_minor().max(self.at_second.max_minor())
    }

    pub fn accepted(&self, eps_rank: f64) -> bool {
        self.max_minor() < eps_rank
    }
}

/// Bisects a sign change of the reduced determinant in `[lo, hi]` down to
/// double-double resolution, using the larger of `n0` and `second` (where
/// the root is sharpest), then reports the minors at both.
pub fn refine_rank_root(
    base: &ModelParams,
    parity: Parity,
    lo: f64,
    hi: f64,
    n0: usize,
    second: usize,
    rel_tol: f64,
) -> Result<RankRoot> {
    if !(lo < hi) {
        return Err(Error::InvalidConfig(format!("empty bracket [{lo}, {hi}]")));
    }
    let n_fine = n0.max(second);
    let at = |chi: f64| ModelParams { chi, ..*base };
    let f = |chi: f64| -> Result<f64> { Ok(rank_sample(&at(chi), parity, n_fine, rel_tol)?.reduced) };
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    if fa.signum() == f(b)?.signum() {
        return Err(Error::InvalidConfig(format!("no sign change in [{lo}, {hi}]")));
    }
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m)?.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    let eval = RankEvaluator::new(&at(a), parity, n_fine, rel_tol)?;
    let (mut x, mut y) = (TwoFloat::from(a), TwoFloat::from(b));
    for _ in 0..64 {
        let m = (x + y) / 2.0;
        if m <= x || m >= y {
            break;
        }
        if eval.sample_at(m)?.reduced.signum() == fa.signum() {
            x = m;
        } else {
            y = m;
        }
    }
    let root = (x + y) / 2.0;
    let coarse = if n_fine == n0 { second } else { n0 };
    let fine_sample = eval.sample_at(root)?;
    let coarse_sample = RankEvaluator::new(&at(root.hi()), parity, coarse, rel_tol)?.sample_at(root)?;
    let (at_n0, at_second) = if n_fine == n0 { (fine_sample, coarse_sample) } else { (coarse_sample, fine_sample) };
    Ok(RankRoot { chi: root.hi(), chi_low: root.lo(), parity, at_n0, at_second })
}

/// All accepted rank-condition roots of both parities in `[lo, hi]`: sign
/// changes of the reduced determinant on a grid of `grid_points` nodes,
/// refined with [`refine_rank_root`] and kept when every minor at `n0` and
/// `second` is below `eps_rank`. Grid nodes sit half a step away from
/// integers and half-integers.
pub fn rank_roots(
    base: &ModelParams,
    lo: f64,
    hi: f64,
    grid_points: usize,
    n0: usize,
    second: usize,
    eps_rank: f64,
) -> Result<Vec<RankRoot>> {
    if !(lo < hi) || grid_points < 2 {
        return Ok(Vec::new());
    }
    let step = (hi - lo) / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points).map(|i| (lo + (i as f64 + 0.5) * step).min(hi)).collect();
    let mut roots = Vec::new();
    for parity in Parity::BOTH {
        let values: Vec<Option<f64>> = grid
            .iter()
            .map(|&chi| rank_sample(&ModelParams { chi, ..*base }, parity, n0, DEFAULT_REL_TOL).ok().map(|r| r.reduced))
            .collect();
        for (k, w) in values.windows(2).enumerate() {
            let (Some(a), Some(b)) = (w[0], w[1]) else { continue };
            if a.signum() == b.signum() {
                continue;
            }
            if let Ok(r) = refine_rank_root(base, parity, grid[k], grid[k + 1], n0, second, DEFAULT_REL_TOL) {
                if r.accepted(eps_rank) {
                    roots.push(r);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.chi.total_cmp(&b.chi));
    Ok(roots)
}
