//! Complex 2-vectors and 2×2 matrices.
//!
//! Everything in the Mellin picture is two-dimensional, so these are thin
//! aliases over `nalgebra` static types plus the handful of closed-form
//! operations (eigenvalues, null vectors) needed by the holonomy analysis.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

pub type C2Vector = Vector2<Complex64>;
pub type C2Matrix = Matrix2<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn sigma_x() -> C2Matrix {
    C2Matrix::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> C2Matrix {
    C2Matrix::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> C2Matrix {
    C2Matrix::new(ONE, ZERO, ZERO, -ONE)
}

pub fn identity() -> C2Matrix {
    C2Matrix::identity()
}

/// Frobenius norm.
pub fn norm(m: &C2Matrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm(v: &C2Vector) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn det(m: &C2Matrix) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Both eigenvalues from the characteristic quadratic, using the
/// cancellation-free form for the smaller root.
pub fn eigenvalues(m: &C2Matrix) -> [Complex64; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let d = det(m);
    let disc = (tr * tr - 4.0 * d).sqrt();
    let s = if (tr.conj() * disc).re >= 0.0 { tr + disc } else { tr - disc };
    let l1 = s / 2.0;
    let l2 = if l1.norm() > 0.0 { d / l1 } else { (tr - s) / 2.0 };
    [l1, l2]
}

/// Column of largest norm. For a rank-one matrix this spans its range.
pub fn dominant_column(m: &C2Matrix) -> C2Vector {
    let c0 = m.column(0).into_owned();
    let c1 = m.column(1).into_owned();
    if vnorm(&c0) >= vnorm(&c1) {
        c0
    } else {
        c1
    }
}

/// Right null vector of a (numerically) rank-deficient matrix, taken as the
/// right singular vector of the smallest singular value. Also returns that
/// singular value relative to the largest one.
pub fn null_vector(m: &C2Matrix) -> (C2Vector, f64) {
    let h = m.adjoint() * m;
    // h is Hermitian positive semidefinite; smallest eigenvalue and vector.
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let lo = (mean - rad).max(0.0);
    let hi = mean + rad;
    // (h - lo) has rank one; its dominant column spans the complement, so
    // the null vector is orthogonal to it.
    let shifted = h - C2Matrix::identity() * Complex64::new(lo, 0.0);
    let col = dominant_column(&shifted);
    let v = if vnorm(&col) == 0.0 {
        C2Vector::new(ONE, ZERO)
    } else {
        C2Vector::new(-col[1].conj(), col[0].conj())
    };
    let ratio = if hi > 0.0 { (lo / hi).sqrt() } else { 0.0 };
    (normalize(&v), ratio)
}

/// Unit 2-norm with the largest-magnitude component made real positive
/// (ties go to the first component).
pub fn normalize(v: &C2Vector) -> C2Vector {
    let n = vnorm(v);
    if n == 0.0 {
        return *v;
    }
    let pivot = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let phase = pivot.conj() / pivot.norm();
    v.map(|z| z * phase / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (sigma_x(), sigma_y(), sigma_z());
        assert!(norm(&(x * y - z * I)) < 1e-15);
        assert!(norm(&(x * x - identity())) < 1e-15);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let m = C2Matrix::new(c(2.0, 1.0), c(5.0, 0.0), ZERO, c(-1.0, 0.5));
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((ev[0] - c(-1.0, 0.5)).norm() < 1e-14);
        assert!((ev[1] - c(2.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn null_vector_of_rank_one() {
        let u = C2Vector::new(c(1.0, 2.0), c(-0.5, 0.1));
        let w = C2Vector::new(c(0.3, 0.0), c(0.7, -1.0));
        let m = u * w.transpose();
        let (n, ratio) = null_vector(&m);
        assert!(vnorm(&(m * n)) < 1e-14);
        assert!(ratio < 1e-7);
    }

    #[test]
    fn normalize_fixes_phase() {
        let v = C2Vector::new(c(0.0, 0.2), c(0.0, -3.0));
        let n = normalize(&v);
        assert!((vnorm(&n) - 1.0).abs() < 1e-15);
        assert!(n[1].im.abs() < 1e-15 && n[1].re > 0.0);
    }
}
