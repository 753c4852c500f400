//! Analytic continuation of the fundamental matrix of a Mellin system along
//! closed loops, holonomy matrices `F±` and their classification, and the
//! Cauchy-integral evaluation of single-valued solutions at `κ/2`.
//!
//! A loop `γ: [0,1] → ℂ` turns continuation into the real-parameter initial
//! value problem `dY/dt = γ′(t) M(γ(t)) Y`, `Y(0) = 𝟙`; the holonomy is
//! `F = Y(1)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, sigma_x, C2Matrix, C2Vector, I, ONE, ZERO};
use crate::mellin::{MellinSystem, DELTA_SING};
use crate::ode::Dopri5;
use crate::params::Sector;

/// Default integrator tolerance for holonomy loops.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Distance from an integer below which the exponent at `κ/2` counts as resonant.
pub const INTEGER_TOL: f64 = 1e-9;
/// Trapezoid nodes for Cauchy integrals on a loop.
pub const CAUCHY_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Loop,
    Segment,
}

/// A circle through the origin (traversed counterclockwise from `u = 0`) or
/// a straight segment starting at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPath {
    pub kind: PathKind,
    /// Loop: circle center (the radius is `|center|`). Segment: end point.
    anchor: Complex64,
    pub enclosed_point: Option<Complex64>,
}

impl ContourPath {
    /// Loop around `+κ/2` crossing the real axis at 0 and at `x/2`, the
    /// midpoint between `κ/2` and `1/(2κ)`.
    pub fn default_loop(sys: &MellinSystem) -> Self {
        let d = 0.5 * (0.5 * sys.kappa() + 0.5 / sys.kappa());
        Self::circle_through_origin(c(0.5 * d, 0.0), Some(c(0.5 * sys.kappa(), 0.0)))
    }

    /// Loop of diameter `2·radius` along the positive real axis.
    pub fn loop_with_radius(sys: &MellinSystem, radius: f64) -> Result<Self> {
        let k = sys.kappa();
        if !(2.0 * radius > 0.5 * k && 2.0 * radius < 0.5 / k) {
            return Err(Error::InvalidConfig(format!(
                "loop radius {radius} must separate kappa/2 from 1/(2 kappa)"
            )));
        }
        Ok(Self::circle_through_origin(c(radius, 0.0), Some(c(0.5 * k, 0.0))))
    }

    pub fn circle_through_origin(center: Complex64, enclosed_point: Option<Complex64>) -> Self {
        Self { kind: PathKind::Loop, anchor: center, enclosed_point }
    }

    pub fn segment(end: Complex64) -> Self {
        Self { kind: PathKind::Segment, anchor: end, enclosed_point: None }
    }

    /// Point reflection `γ ↦ −γ`; orientation is preserved.
    pub fn reflected(&self) -> Self {
        Self { anchor: -self.anchor, enclosed_point: self.enclosed_point.map(|p| -p), ..*self }
    }

    pub fn point(&self, t: f64) -> Complex64 {
        match self.kind {
            PathKind::Loop => self.anchor - self.anchor * (2.0 * PI * I * t).exp(),
            PathKind::Segment => self.anchor * t,
        }
    }

    pub fn tangent(&self, t: f64) -> Complex64 {
        match self.kind {
            PathKind::Loop => -self.anchor * 2.0 * PI * I * (2.0 * PI * I * t).exp(),
            PathKind::Segment => self.anchor,
        }
    }

    /// Winding number about `p`, accumulated from sampled argument increments.
    pub fn winding_number(&self, p: Complex64, samples: usize) -> f64 {
        let mut total = 0.0;
        let mut prev = (self.point(0.0) - p).arg();
        for k in 1..=samples {
            let a = (self.point(k as f64 / samples as f64) - p).arg();
            let mut d = a - prev;
            if d > PI {
                d -= 2.0 * PI;
            } else if d < -PI {
                d += 2.0 * PI;
            }
            total += d;
            prev = a;
        }
        total / (2.0 * PI)
    }

    /// Smallest distance between the path and `p` (sampled).
    pub fn distance_to(&self, p: Complex64) -> f64 {
        match self.kind {
            PathKind::Loop => ((p - self.anchor).norm() - self.anchor.norm()).abs(),
            PathKind::Segment => {
                let a = self.anchor;
                if a.norm() == 0.0 {
                    return p.norm();
                }
                let t = ((p * a.conj()).re / a.norm_sqr()).clamp(0.0, 1.0);
                (p - a * t).norm()
            }
        }
    }

    /// Trapezoid approximation of `(1/2πi) ∮ f(u)/(u − a) du` on a loop.
    pub fn cauchy_quadrature<F: Fn(Complex64) -> Complex64>(&self, nodes: usize, a: Complex64, f: F) -> Complex64 {
        let mut acc = ZERO;
        for k in 0..nodes {
            let t = k as f64 / nodes as f64;
            let u = self.point(t);
            acc += f(u) / (u - a) * self.tangent(t);
        }
        acc / (nodes as f64) / (2.0 * PI * I)
    }
}

fn mat_to_state(m: &C2Matrix) -> [Complex64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

fn state_to_mat(s: &[Complex64; 4]) -> C2Matrix {
    C2Matrix::new(s[0], s[1], s[2], s[3])
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::InvalidConfig(format!("integrator tolerance {tol:.1e} outside [1e-13, 1e-6]")));
    }
    Ok(())
}

fn check_clearance(sys: &MellinSystem, path: &ContourPath) -> Result<()> {
    for p in sys.finite_singular_points() {
        let d = path.distance_to(c(p, 0.0));
        if d < DELTA_SING {
            return Err(Error::NearSingularity { u: format!("{p}"), distance: d });
        }
    }
    Ok(())
}

/// Integrates `dY/dt = γ′ M(γ) Y` from `t0` to `t1` starting at `y0`.
fn propagate(
    sys: &MellinSystem,
    path: &ContourPath,
    tol: f64,
    t0: f64,
    t1: f64,
    y0: C2Matrix,
    h_init: Option<f64>,
    observer: Option<&mut dyn FnMut(f64, &[Complex64; 4])>,
) -> Result<(C2Matrix, f64)> {
    let rhs = |t: f64, y: &[Complex64; 4]| -> Result<[Complex64; 4]> {
        let m = sys.matrix(path.point(t))? * path.tangent(t);
        Ok(mat_to_state(&(m * state_to_mat(y))))
    };
    let sol = Dopri5::new(tol).integrate(rhs, t0, t1, mat_to_state(&y0), h_init, observer)?;
    Ok((state_to_mat(&sol.y), sol.last_h))
}

/// `Y(1)` for `Y(0) = 𝟙`; for a loop this is the holonomy matrix.
pub fn integrate_fundamental(sys: &MellinSystem, path: &ContourPath, tol: f64) -> Result<C2Matrix> {
    check_tol(tol)?;
    check_clearance(sys, path)?;
    Ok(propagate(sys, path, tol, 0.0, 1.0, linalg::identity(), None, None)?.0)
}

/// Same as [`integrate_fundamental`] while writing `t, Re γ, Im γ` and the
/// four entries of `Y` (real and imaginary parts) as CSV rows.
pub fn trace_fundamental<W: Write>(
    sys: &MellinSystem,
    path: &ContourPath,
    tol: f64,
    out: W,
) -> Result<C2Matrix> {
    check_tol(tol)?;
    check_clearance(sys, path)?;
    let mut w = csv::Writer::from_writer(out);
    let mut failed = false;
    let _ = w.write_record([
        "t", "re_u", "im_u", "re_y11", "im_y11", "re_y12", "im_y12", "re_y21", "im_y21", "re_y22", "im_y22",
    ]);
    let mut obs = |t: f64, y: &[Complex64; 4]| {
        let u = path.point(t);
        let mut rec = vec![format!("{t:.12e}"), format!("{:.12e}", u.re), format!("{:.12e}", u.im)];
        for z in y {
            rec.push(format!("{:.12e}", z.re));
            rec.push(format!("{:.12e}", z.im));
        }
        failed |= w.write_record(&rec).is_err();
    };
    let (y, _) = propagate(sys, path, tol, 0.0, 1.0, linalg::identity(), None, Some(&mut obs))?;
    if failed || w.flush().is_err() {
        return Err(Error::InvalidConfig("failed to write trace".into()));
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    /// Non-resonant exponent: eigenvalues `1` and `exp(2πiν)` are distinct.
    Generic,
    /// Resonant exponent with a logarithmic solution.
    Jordan,
    /// Resonant exponent without logarithms: `F = 𝟙`.
    Identity,
}

/// Whether the exponent at `κ/2` is an integer for this χ and sector.
pub fn is_resonant(sector: Sector, chi: f64) -> bool {
    let shifted = chi - sector.resonance_offset();
    (shifted - shifted.round()).abs() < INTEGER_TOL
}

pub fn classify(f_plus: &C2Matrix, sector: Sector, chi: f64, eps_j: f64) -> Result<Classification> {
    if !is_resonant(sector, chi) {
        return Ok(Classification::Generic);
    }
    let dev = linalg::norm(&(f_plus - linalg::identity()));
    if dev <= eps_j {
        Ok(Classification::Identity)
    } else if dev >= 10.0 * eps_j {
        Ok(Classification::Jordan)
    } else {
        Err(Error::AmbiguousClassification { deviation: dev, eps_j })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: Complex64,
    pub vector: [Complex64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolonomyData {
    #[serde(serialize_with = "ser_matrix", deserialize_with = "de_matrix")]
    pub f_plus: C2Matrix,
    pub classification: Classification,
    pub eigenpairs: Vec<Eigenpair>,
    pub integrator_tolerance: f64,
}

fn ser_matrix<S: serde::Serializer>(m: &C2Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
}

fn de_matrix<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<C2Matrix, D::Error> {
    let a: [[Complex64; 2]; 2] = Deserialize::deserialize(d)?;
    Ok(C2Matrix::new(a[0][0], a[0][1], a[1][0], a[1][1]))
}

/// Jordan/identity threshold tied to the integration tolerance.
pub fn eps_j_for(tol: f64) -> f64 {
    1e3 * tol
}

fn eigenpairs(f: &C2Matrix) -> Vec<Eigenpair> {
    linalg::eigenvalues(f)
        .into_iter()
        .map(|lam| {
            // Columns of (F − λ'𝟙) span the eigenspace of λ when λ' is the other eigenvalue.
            let [a, b] = linalg::eigenvalues(f);
            let other = if (a - lam).norm() <= (b - lam).norm() { b } else { a };
            let mut v = linalg::dominant_column(&(f - linalg::identity() * other));
            if linalg::vnorm(&v) < 1e-300 {
                v = C2Vector::new(ONE, ZERO);
            }
            let v = linalg::normalize(&v);
            Eigenpair { value: lam, vector: [v[0], v[1]] }
        })
        .collect()
}

/// Integrates the default loop around `+κ/2` and classifies the result.
pub fn holonomy(sys: &MellinSystem, tol: f64) -> Result<HolonomyData> {
    let path = ContourPath::default_loop(sys);
    let f = integrate_fundamental(sys, &path, tol)?;
    let class = classify(&f, sys.sector(), sys.params.chi, eps_j_for(tol))?;
    Ok(HolonomyData { f_plus: f, classification: class, eigenpairs: eigenpairs(&f), integrator_tolerance: tol })
}

/// `(F₊, F₋)` with `F₋ = σₓ F₊ σₓ`.
pub fn holonomy_pair(sys: &MellinSystem, tol: f64) -> Result<(C2Matrix, C2Matrix)> {
    let f = integrate_fundamental(sys, &ContourPath::default_loop(sys), tol)?;
    Ok((f, reflect(&f)))
}

/// `σₓ F σₓ`.
pub fn reflect(f: &C2Matrix) -> C2Matrix {
    sigma_x() * f * sigma_x()
}

/// Holonomy around `−κ/2` by direct integration of the reflected loop.
pub fn integrate_minus_loop(sys: &MellinSystem, tol: f64) -> Result<C2Matrix> {
    integrate_fundamental(sys, &ContourPath::default_loop(sys).reflected(), tol)
}

/// `V(κ/2) = (1/2πi) ∮ V(u)/(u − κ/2) du` on the default loop. Only
/// meaningful when the fundamental matrix is single-valued there.
pub fn cauchy_eval_unchecked(sys: &MellinSystem, tol: f64, nodes: usize) -> Result<C2Matrix> {
    check_tol(tol)?;
    let path = ContourPath::default_loop(sys);
    check_clearance(sys, &path)?;
    let a = c(0.5 * sys.kappa(), 0.0);
    let mut v = linalg::identity();
    let mut h = None;
    let mut acc = C2Matrix::zeros();
    for k in 0..nodes {
        let t0 = k as f64 / nodes as f64;
        let u = path.point(t0);
        acc += v * (path.tangent(t0) / (u - a));
        let (next, last_h) = propagate(sys, &path, tol, t0, (k + 1) as f64 / nodes as f64, v, h, None)?;
        v = next;
        h = Some(last_h);
    }
    Ok(acc / (2.0 * PI * I * nodes as f64))
}

/// Cauchy evaluation guarded by the holonomy classification.
pub fn cauchy_eval(sys: &MellinSystem, data: &HolonomyData) -> Result<C2Matrix> {
    if data.classification != Classification::Identity {
        return Err(Error::NotApplicable(format!(
            "Cauchy evaluation needs identity holonomy, got {:?}",
            data.classification
        )));
    }
    cauchy_eval_unchecked(sys, data.integrator_tolerance, CAUCHY_NODES)
}
