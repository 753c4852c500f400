//! Truncated power and Laurent series with complex coefficients.
//!
//! A power series is a slice of coefficients starting at `t⁰`. Laurent
//! series used here have at most a simple pole and are stored the same way
//! with an implied shift: index `i` holds the coefficient of `t^(i−1)`.

use num_complex::Complex64;

use crate::linalg::{ONE, ZERO};

/// Cauchy product truncated to `n` terms.
pub fn mul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; n];
    for (i, ai) in a.iter().enumerate().take(n) {
        if *ai == ZERO {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Reciprocal of a series with nonzero constant term.
pub fn recip(a: &[Complex64], n: usize) -> Vec<Complex64> {
    assert!(a[0] != ZERO, "reciprocal of a series vanishing at the origin");
    let mut out = vec![ZERO; n];
    out[0] = ONE / a[0];
    for k in 1..n {
        let mut acc = ZERO;
        for j in 1..=k.min(a.len() - 1) {
            acc += a[j] * out[k - j];
        }
        out[k] = -acc * out[0];
    }
    out
}

/// `a(t)^ν` for real ν with `a(0) > 0` real, via the J.C.P. Miller recursion.
pub fn pow_real(a: &[Complex64], nu: f64, n: usize) -> Vec<Complex64> {
    let a0 = a[0];
    let mut out = vec![ZERO; n];
    out[0] = a0.powf(nu);
    for k in 1..n {
        let mut acc = ZERO;
        for j in 1..=k.min(a.len() - 1) {
            acc += a[j] * out[k - j] * ((nu + 1.0) * j as f64 - k as f64);
        }
        out[k] = acc / (a0 * k as f64);
    }
    out
}

/// Generalized binomial coefficients `C(a, k)`, k = 0..n, i.e. the series of `(1+s)^a`.
pub fn binomial_series(a: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 1.0;
    for k in 0..n {
        out.push(c);
        c *= (a - k as f64) / (k as f64 + 1.0);
    }
    out
}

/// Series of `1/(t − d)` about `t = 0` for `d ≠ 0`.
pub fn inv_shifted(d: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    let inv = ONE / d;
    let mut p = -inv;
    for _ in 0..n {
        out.push(p);
        p *= inv;
    }
    out
}

/// Evaluates a power series at `t` by Horner's rule.
pub fn eval(a: &[Complex64], t: Complex64) -> Complex64 {
    a.iter().rev().fold(ZERO, |acc, c| acc * t + c)
}
